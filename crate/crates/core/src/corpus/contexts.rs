use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Bag, Catalog, Context, Sentence, TypeInventory, PAD, SLOT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractReport {
    pub contexts: usize,
    /// Mentions of entities absent from the catalog.
    pub unknown_mentions: usize,
}

/// Labels of a context: the gold types of the entity it mentions.
pub fn distant_labels(entity: &str, catalog: &Catalog) -> Result<Vec<usize>> {
    Ok(catalog.require(entity)?.gold_types.clone())
}

/// One context per catalog mention. Other mentions of train entities inside
/// the window collapse to their notable-type token; other mentions stay as
/// surface tokens.
pub fn extract_contexts(
    sentences: &[Sentence],
    catalog: &Catalog,
    inventory: &TypeInventory,
    train: &BTreeSet<String>,
    width: usize,
) -> Result<(Vec<Context>, ExtractReport)> {
    if width < 2 || !width.is_multiple_of(2) {
        return Err(Error::Config(format!("context width must be even and >= 2, got {width}")));
    }
    let half = width / 2;
    let mut out = Vec::new();
    let mut report = ExtractReport::default();

    for sentence in sentences {
        sentence.validate()?;
        let mut mentions: Vec<_> = sentence.mentions.iter().collect();
        mentions.sort_by_key(|m| m.start);

        for target in &mentions {
            let Some(record) = catalog.get(&target.entity) else {
                report.unknown_mentions += 1;
                continue;
            };
            // the sentence with every mention collapsed to a single token
            let mut collapsed: Vec<String> = Vec::with_capacity(sentence.tokens.len());
            let mut slot = 0;
            let mut cursor = 0;
            for m in &mentions {
                collapsed.extend(sentence.tokens[cursor..m.start].iter().cloned());
                if core::ptr::eq(*m, *target) {
                    slot = collapsed.len();
                    collapsed.push(String::from(SLOT));
                } else {
                    match catalog.get(&m.entity) {
                        Some(other) if train.contains(&m.entity) => {
                            collapsed.push(inventory.type_token(other.notable_type));
                        }
                        _ => collapsed.extend(sentence.tokens[m.start..m.end].iter().cloned()),
                    }
                }
                cursor = m.end;
            }
            collapsed.extend(sentence.tokens[cursor..].iter().cloned());

            let mut tokens = Vec::with_capacity(width);
            for offset in 0..width {
                let pos = slot as isize - half as isize + offset as isize;
                let tok = if pos >= 0 && (pos as usize) < collapsed.len() {
                    collapsed[pos as usize].clone()
                } else {
                    String::from(PAD)
                };
                tokens.push(tok);
            }
            out.push(Context { entity: record.id.clone(), labels: record.gold_types.clone(), tokens });
        }
    }
    report.contexts = out.len();
    Ok((out, report))
}

/// Groups contexts by entity, bags ordered by entity id.
pub fn group_bags(contexts: impl IntoIterator<Item = Context>) -> Vec<Bag> {
    let mut by_entity: BTreeMap<String, Vec<Context>> = BTreeMap::new();
    for c in contexts {
        by_entity.entry(c.entity.clone()).or_default().push(c);
    }
    by_entity.into_iter().map(|(entity, contexts)| Bag { entity, contexts }).collect()
}
