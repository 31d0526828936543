use alloc::string::String;
use alloc::vec::Vec;

use super::{Mention, Sentence};

/// Sentences shorter than this (in characters, after number and link
/// replacement) are dropped.
pub const MIN_SENTENCE_CHARS: usize = 40;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PreprocessReport {
    pub kept: usize,
    pub dropped_short: usize,
    pub skipped_mentions: usize,
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace())
}

fn is_link(core: &str) -> bool {
    let lower = core.to_lowercase();
    if ["http://", "https://", "ftp://", "www."].iter().any(|p| lower.starts_with(p)) {
        return true;
    }
    match core.split_once('@') {
        Some((user, host)) => !user.is_empty() && host.contains('.') && !host.starts_with('.'),
        None => false,
    }
}

struct Pieces {
    lead: Vec<String>,
    core: Option<String>,
    trail: Vec<String>,
    display_len: usize,
}

fn split_token(tok: &str) -> Pieces {
    let chars: Vec<char> = tok.chars().collect();
    let lead_end = chars.iter().position(|&c| !is_punct(c)).unwrap_or(chars.len());
    let trail_start = chars.iter().rposition(|&c| !is_punct(c)).map_or(lead_end, |p| p + 1);
    let lead: Vec<String> = chars[..lead_end].iter().map(|c| String::from(*c)).collect();
    let trail: Vec<String> = chars[trail_start..].iter().map(|c| String::from(*c)).collect();
    let core: Option<String> = if lead_end < trail_start {
        let raw: String = chars[lead_end..trail_start].iter().collect();
        Some(if is_link(&raw) {
            String::from("HTTP")
        } else {
            raw.chars().map(|c| if c.is_numeric() { '7' } else { c }).collect()
        })
    } else {
        None
    };
    let display_len = lead.len() + trail.len() + core.as_ref().map_or(0, |c| c.chars().count());
    Pieces { lead, core, trail, display_len }
}

/// Cleans one sentence; `None` when it is too short. The second element
/// counts mentions whose span could not be carried over.
pub fn preprocess_sentence(raw: &Sentence) -> (Option<Sentence>, usize) {
    let pieces: Vec<Pieces> = raw.tokens.iter().map(|t| split_token(t)).collect();
    let chars: usize = pieces.iter().map(|p| p.display_len).sum::<usize>()
        + raw.tokens.len().saturating_sub(1);
    if chars < MIN_SENTENCE_CHARS {
        return (None, 0);
    }

    let mut tokens = Vec::new();
    // index of the core piece of each raw token, if it has one
    let mut core_at = Vec::with_capacity(pieces.len());
    for p in pieces {
        tokens.extend(p.lead);
        core_at.push(p.core.as_ref().map(|_| tokens.len()));
        if let Some(c) = p.core {
            tokens.push(c);
        }
        tokens.extend(p.trail);
    }

    let mut skipped = 0;
    let mut mentions = Vec::with_capacity(raw.mentions.len());
    let mut spans: Vec<&Mention> = raw.mentions.iter().collect();
    spans.sort_by_key(|m| (m.start, m.end));
    let mut last_end = 0;
    for m in spans {
        let valid_raw = m.start < m.end && m.end <= raw.tokens.len() && m.start >= last_end;
        let mapped = if valid_raw {
            match (core_at[m.start], core_at[m.end - 1]) {
                (Some(s), Some(e)) => Some((s, e + 1)),
                _ => None,
            }
        } else {
            None
        };
        match mapped {
            Some((start, end)) => {
                last_end = m.end;
                mentions.push(Mention { entity: m.entity.clone(), start, end });
            }
            None => skipped += 1,
        }
    }
    (Some(Sentence { tokens, mentions }), skipped)
}

/// Digits become `7`, links and e-mail addresses become `HTTP`, short
/// sentences are dropped and leading/trailing punctuation is split off
/// every token with mention spans realigned.
pub fn preprocess(raw: &[Sentence]) -> (Vec<Sentence>, PreprocessReport) {
    let mut report = PreprocessReport::default();
    let mut out = Vec::with_capacity(raw.len());
    for s in raw {
        let (cleaned, skipped) = preprocess_sentence(s);
        report.skipped_mentions += skipped;
        match cleaned {
            Some(c) => {
                report.kept += 1;
                out.push(c);
            }
            None => report.dropped_short += 1,
        }
    }
    (out, report)
}
