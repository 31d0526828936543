use alloc::vec::Vec;

use crate::corpus::{Catalog, TypeInventory};

/// Frequency bounds for head (`freq > head_above`) and tail
/// (`freq < tail_below`) slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionThresholds {
    pub head_above: u64,
    pub tail_below: u64,
}

impl PartitionThresholds {
    pub const ENTITIES: PartitionThresholds = PartitionThresholds { head_above: 100, tail_below: 5 };
    pub const TYPES: PartitionThresholds = PartitionThresholds { head_above: 3000, tail_below: 200 };
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition<T> {
    pub all: Vec<T>,
    pub head: Vec<T>,
    pub tail: Vec<T>,
}

fn split<T: Clone>(items: impl Iterator<Item = (T, u64)>, th: PartitionThresholds) -> Partition<T> {
    let mut p = Partition { all: Vec::new(), head: Vec::new(), tail: Vec::new() };
    for (item, freq) in items {
        if freq > th.head_above {
            p.head.push(item.clone());
        }
        if freq < th.tail_below {
            p.tail.push(item.clone());
        }
        p.all.push(item);
    }
    p
}

/// Entity ids by corpus frequency.
pub fn partition_entities(catalog: &Catalog, th: PartitionThresholds) -> Partition<alloc::string::String> {
    split(catalog.records().iter().map(|r| (r.id.clone(), r.freq)), th)
}

/// Type indices by their train-entity frequency.
pub fn partition_types(inventory: &TypeInventory, th: PartitionThresholds) -> Partition<usize> {
    split((0..inventory.len()).map(|t| (t, inventory.train_freq()[t])), th)
}
