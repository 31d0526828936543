use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::{Bag, Catalog, Context};
use crate::error::{Error, Result};

/// Per-type budget for training contexts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSampling {
    /// Types with at most this many contexts keep all of them.
    pub min_per_type: usize,
    /// Hard ceiling on contexts per type.
    pub cap_per_type: usize,
    /// Target contexts per train entity of the type, before clamping to
    /// `[min_per_type, cap_per_type]`.
    pub per_entity: f64,
}

impl Default for TrainSampling {
    fn default() -> Self {
        TrainSampling { min_per_type: 10_000, cap_per_type: 20_000, per_entity: 50.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalSampling {
    pub test: usize,
    pub dev: usize,
}

impl Default for EvalSampling {
    fn default() -> Self {
        EvalSampling { test: 300, dev: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeSampling {
    pub type_index: usize,
    pub train_entities: usize,
    pub available: usize,
    pub kept: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SamplingReport {
    pub per_type: Vec<TypeSampling>,
    /// Types without a single candidate context; kept in the inventory.
    pub empty_types: Vec<usize>,
}

/// Weighted sampling of `k` distinct indices without replacement
/// (exponential keys, one uniform draw per item in index order).
pub fn weighted_sample<R: Rng + ?Sized>(weights: &[f64], k: usize, rng: &mut R) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            let key = if w > 0.0 { libm::log(u) / w } else { f64::NEG_INFINITY };
            (key, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut chosen: Vec<usize> = keyed.into_iter().take(k).map(|(_, i)| i).collect();
    chosen.sort_unstable();
    chosen
}

/// Picks training contexts type by type, where a context belongs to the
/// notable type of its entity. Returns indices into `contexts`, ascending.
pub fn sample_train_contexts<R: Rng + ?Sized>(
    contexts: &[Context],
    catalog: &Catalog,
    num_types: usize,
    train: &BTreeSet<String>,
    cfg: &TrainSampling,
    rng: &mut R,
) -> Result<(Vec<usize>, SamplingReport)> {
    if cfg.cap_per_type == 0 || cfg.min_per_type > cfg.cap_per_type {
        return Err(Error::Config(alloc::format!(
            "sampling bounds invalid: min {} cap {}",
            cfg.min_per_type, cfg.cap_per_type
        )));
    }
    let mut entities_of_type = alloc::vec![0usize; num_types];
    for r in catalog.records().iter().filter(|r| train.contains(&r.id)) {
        entities_of_type[r.notable_type] += 1;
    }
    let mut by_type: Vec<Vec<(usize, f64)>> = alloc::vec![Vec::new(); num_types];
    for (i, c) in contexts.iter().enumerate() {
        let rec = catalog.require(&c.entity)?;
        by_type[rec.notable_type].push((i, 1.0 / rec.gold_types.len() as f64));
    }

    let mut report = SamplingReport::default();
    let mut chosen = Vec::new();
    for (t, pool) in by_type.iter().enumerate() {
        let available = pool.len();
        if available == 0 {
            report.empty_types.push(t);
        }
        let kept = if available <= cfg.min_per_type {
            chosen.extend(pool.iter().map(|&(i, _)| i));
            available
        } else {
            let wanted = libm::round(entities_of_type[t] as f64 * cfg.per_entity) as usize;
            let target = wanted.clamp(cfg.min_per_type, cfg.cap_per_type).min(available);
            let weights: Vec<f64> = pool.iter().map(|&(_, w)| w).collect();
            chosen.extend(weighted_sample(&weights, target, rng).into_iter().map(|j| pool[j].0));
            target
        };
        report.per_type.push(TypeSampling {
            type_index: t,
            train_entities: entities_of_type[t],
            available,
            kept,
        });
    }
    chosen.sort_unstable();
    Ok((chosen, report))
}

/// Uniform sample of at most `n` contexts per bag, without replacement and
/// in original order. Empty bags are dropped and their entities returned.
pub fn sample_eval_contexts<R: Rng + ?Sized>(
    bags: Vec<Bag>,
    n: usize,
    rng: &mut R,
) -> (Vec<Bag>, Vec<String>) {
    let mut kept = Vec::with_capacity(bags.len());
    let mut flagged = Vec::new();
    for mut bag in bags {
        if bag.is_empty() {
            flagged.push(bag.entity);
            continue;
        }
        if bag.len() > n {
            let mut idx = rand::seq::index::sample(rng, bag.len(), n).into_vec();
            idx.sort_unstable();
            let mut slots: Vec<Option<Context>> = bag.contexts.into_iter().map(Some).collect();
            bag.contexts = idx.into_iter().map(|i| slots[i].take().expect("distinct indices")).collect();
        }
        kept.push(bag);
    }
    (kept, flagged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EntityRecord;
    use crate::rng::stream;
    use alloc::vec;

    fn s(x: &str) -> String {
        String::from(x)
    }

    fn ctx(entity: &str, n: usize) -> Vec<Context> {
        (0..n)
            .map(|i| Context { entity: s(entity), labels: vec![0], tokens: vec![alloc::format!("w{i}")] })
            .collect()
    }

    #[test]
    fn weighting_prefers_fewer_types() {
        // entity a has 1 gold type (weight 1), b has 4 (weight 1/4)
        let weights: Vec<f64> = [1.0; 10].into_iter().chain([0.25; 10]).collect();
        let mut rng = stream(17, "mc");
        let (mut a, mut b) = (0usize, 0usize);
        for _ in 0..10_000 {
            let pick = weighted_sample(&weights, 1, &mut rng)[0];
            if pick < 10 { a += 1 } else { b += 1 }
        }
        let ratio = a as f64 / b as f64;
        assert!((ratio - 4.0).abs() / 4.0 < 0.05, "ratio {ratio}");
    }

    fn catalog() -> Catalog {
        Catalog::new(vec![
            EntityRecord::new(s("a"), vec![s("A")], 0, [0], 1).unwrap(),
            EntityRecord::new(s("b"), vec![s("B")], 0, [0, 1, 2, 3], 1).unwrap(),
            EntityRecord::new(s("c"), vec![s("C")], 1, [1], 1).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn small_types_keep_everything_large_types_are_capped() {
        let cat = catalog();
        let train: BTreeSet<String> = cat.ids().map(String::from).collect();
        let mut contexts = ctx("a", 5_000);
        contexts.extend(ctx("c", 100_000));
        let cfg = TrainSampling { min_per_type: 10_000, cap_per_type: 20_000, per_entity: 50_000.0 };
        let (kept, report) = sample_train_contexts(&contexts, &cat, 4, &train, &cfg, &mut stream(1, "s")).unwrap();
        assert_eq!(report.per_type[0].kept, 5_000);
        assert!(report.per_type[1].kept <= 20_000);
        assert_eq!(kept.len(), 5_000 + report.per_type[1].kept);
        assert_eq!(report.empty_types, vec![2, 3]);
    }

    #[test]
    fn sampling_is_deterministic_and_weighted() {
        let cat = catalog();
        let train: BTreeSet<String> = cat.ids().map(String::from).collect();
        let mut contexts = ctx("a", 300);
        contexts.extend(ctx("b", 300));
        let cfg = TrainSampling { min_per_type: 10, cap_per_type: 100, per_entity: 50.0 };
        let run = || sample_train_contexts(&contexts, &cat, 4, &train, &cfg, &mut stream(5, "s")).unwrap().0;
        let first = run();
        assert_eq!(first, run());
        assert_eq!(first.len(), 100);
        let from_a = first.iter().filter(|&&i| i < 300).count();
        assert!(from_a > 60, "{from_a}");
    }

    #[test]
    fn eval_sampling_bounds() {
        let bags = vec![
            Bag { entity: s("small"), contexts: ctx("small", 50) },
            Bag { entity: s("large"), contexts: ctx("large", 1_000) },
            Bag { entity: s("empty"), contexts: vec![] },
        ];
        let (out, flagged) = sample_eval_contexts(bags.clone(), 300, &mut stream(3, "e"));
        assert_eq!(out[0].len(), 50);
        assert_eq!(out[1].len(), 300);
        assert_eq!(flagged, vec![s("empty")]);
        let (again, _) = sample_eval_contexts(bags, 300, &mut stream(3, "e"));
        assert_eq!(out, again);
    }
}
