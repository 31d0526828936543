//! Synthetic linked corpora with controllable type signal.
//!
//! Types form a two-level hierarchy (coarse parents with fine children).
//! Every type owns a few indicative context words and a name suffix, and
//! entity embeddings are noisy mixtures of type centroids. A noise fraction
//! of contexts has its indicative slots filled with words drawn uniformly
//! from the whole vocabulary instead.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{EntityRecord, Mention, Sentence};
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextCount {
    Fixed(usize),
    /// Inclusive range.
    Uniform { min: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Background (type-neutral) context words.
    pub vocab_size: usize,
    pub num_types: usize,
    pub entities: usize,
    pub contexts: ContextCount,
    pub indicative_per_type: usize,
    /// Chance that an informative context carries a given gold type's word.
    pub indicative_strength: f64,
    /// Share of contexts whose indicative slots hold uniform noise.
    pub noise: f64,
    /// Chance that an entity name carries its type suffix.
    pub name_strength: f64,
    /// Share of entities whose notable type is a fine type.
    pub fine_fraction: f64,
    pub embedding_dim: usize,
    /// Standard deviation of the entity-embedding noise.
    pub embedding_noise: f64,
    /// First half of the types signaled only by names, second half only by
    /// contexts; each entity then has one type from each half.
    pub split_channels: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            vocab_size: 2000,
            num_types: 20,
            entities: 2000,
            contexts: ContextCount::Fixed(30),
            indicative_per_type: 5,
            indicative_strength: 1.0,
            noise: 0.2,
            name_strength: 0.8,
            fine_fraction: 0.8,
            embedding_dim: 32,
            embedding_noise: 0.5,
            split_channels: false,
            seed: 13,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("noise", self.noise),
            ("indicative_strength", self.indicative_strength),
            ("name_strength", self.name_strength),
            ("fine_fraction", self.fine_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        let min_types = if self.split_channels { 2 } else { 1 };
        if self.num_types < min_types || self.entities == 0 || self.vocab_size == 0 || self.embedding_dim == 0 {
            return Err(Error::Config(String::from("synthetic spec needs types, entities, vocabulary and dimension")));
        }
        if self.indicative_per_type == 0 {
            return Err(Error::Config(String::from("each type needs at least one indicative word")));
        }
        match self.contexts {
            ContextCount::Fixed(0) => Err(Error::Config(String::from("entities need at least one context"))),
            ContextCount::Uniform { min, max } if min == 0 || min > max => {
                Err(Error::Config(format!("bad context range {min}..={max}")))
            }
            _ => Ok(()),
        }
    }
}

/// Signal channel of a type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Both,
    Name,
    Context,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub types: Vec<String>,
    /// Parent of each type (coarse types have none).
    pub parents: Vec<Option<usize>>,
    pub channels: Vec<Channel>,
    pub records: Vec<EntityRecord>,
    pub sentences: Vec<Sentence>,
    pub entity_vectors: Vec<(String, Vec<f64>)>,
    /// Name words and context words.
    pub word_vectors: Vec<(String, Vec<f64>)>,
    pub type_vectors: Vec<(String, Vec<f64>)>,
    pub descriptions: BTreeMap<String, Vec<String>>,
    pub indicative: Vec<Vec<String>>,
    pub suffixes: Vec<String>,
    pub background: Vec<String>,
}

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvwz";
const VOWELS: &[u8] = b"aeiou";
const SIDE_WORDS: usize = 6;
/// Indicative words land within this many tokens of the mention.
const SIGNAL_REACH: usize = 3;

fn syllable<R: Rng + ?Sized>(rng: &mut R) -> [u8; 2] {
    [*CONSONANTS.choose(rng).expect("non-empty"), *VOWELS.choose(rng).expect("non-empty")]
}

fn word<R: Rng + ?Sized>(rng: &mut R, syllables: usize) -> String {
    let mut w = String::with_capacity(2 * syllables + 1);
    for _ in 0..syllables {
        let s = syllable(rng);
        w.push(s[0] as char);
        w.push(s[1] as char);
    }
    w
}

/// `n` distinct letter-only words, none already in `taken`.
fn fresh_words<R: Rng + ?Sized>(n: usize, syllables: usize, taken: &mut BTreeSet<String>, rng: &mut R) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    let mut len = syllables;
    let mut misses = 0;
    while out.len() < n {
        let w = word(rng, len);
        if taken.insert(w.clone()) {
            out.push(w);
            misses = 0;
        } else {
            misses += 1;
            if misses > 50 {
                len += 1;
                misses = 0;
            }
        }
    }
    out
}

/// Distinct three-letter suffixes, consonant-vowel-consonant shaped.
fn suffixes<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let s = syllable(rng);
        let c = *CONSONANTS.choose(rng).expect("non-empty");
        let suffix: String = [s[0] as char, s[1] as char, c as char].iter().collect();
        if seen.insert(suffix.clone()) {
            out.push(suffix);
        }
    }
    out
}

/// Spread of context-word vectors; indicative words sit this far towards
/// their type centroid.
const CONTEXT_WORD_SCALE: f64 = 0.3;

fn gaussian<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| { let z: f64 = StandardNormal.sample(rng); scale * z }).collect()
}

struct Hierarchy {
    names: Vec<String>,
    parents: Vec<Option<usize>>,
    coarse: Vec<usize>,
    fine: Vec<usize>,
}

fn hierarchy(n: usize, tag: &str) -> Hierarchy {
    let coarse_count = (n / 4).max(1);
    let mut names = Vec::with_capacity(n);
    let mut parents = Vec::with_capacity(n);
    for c in 0..coarse_count {
        names.push(format!("/{tag}{c:02}"));
        parents.push(None);
    }
    for f in 0..n - coarse_count {
        let p = f % coarse_count;
        names.push(format!("/{tag}{p:02}/fine{f:02}"));
        parents.push(Some(p));
    }
    Hierarchy { names, parents, coarse: (0..coarse_count).collect(), fine: (coarse_count..n).collect() }
}

fn draw_gold<R: Rng + ?Sized>(h: &Hierarchy, offset: usize, fine_fraction: f64, rng: &mut R) -> (usize, Vec<usize>) {
    if !h.fine.is_empty() && rng.random_bool(fine_fraction) {
        let f = *h.fine.choose(rng).expect("non-empty");
        let p = h.parents[f].expect("fine types have parents");
        (offset + f, vec![offset + p, offset + f])
    } else {
        let c = *h.coarse.choose(rng).expect("non-empty");
        (offset + c, vec![offset + c])
    }
}

/// Builds a world from `spec`. Identical specs give identical worlds.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticWorld> {
    spec.validate()?;
    let mut rng = stream(spec.seed, "synth");

    // type inventory
    let (types, parents, channels, name_h, ctx_h) = if spec.split_channels {
        let half = spec.num_types / 2;
        let a = hierarchy(half, "name");
        let b = hierarchy(spec.num_types - half, "ctx");
        let mut types = a.names.clone();
        types.extend(b.names.iter().cloned());
        let mut parents = a.parents.clone();
        parents.extend(b.parents.iter().map(|p| p.map(|x| x + half)));
        let mut channels = vec![Channel::Name; half];
        channels.extend(vec![Channel::Context; spec.num_types - half]);
        (types, parents, channels, Some(a), b)
    } else {
        let h = hierarchy(spec.num_types, "type");
        (h.names.clone(), h.parents.clone(), vec![Channel::Both; spec.num_types], None, h)
    };
    let t = types.len();

    // lexicon
    let mut taken = BTreeSet::new();
    let background = fresh_words(spec.vocab_size, 3, &mut taken, &mut rng);
    let indicative: Vec<Vec<String>> =
        (0..t).map(|_| fresh_words(spec.indicative_per_type, 3, &mut taken, &mut rng)).collect();
    let type_suffix = suffixes(t, &mut rng);
    let mut all_context_words = background.clone();
    for words in &indicative {
        all_context_words.extend(words.iter().cloned());
    }

    let centroids: Vec<Vec<f64>> = (0..t).map(|_| gaussian(spec.embedding_dim, 1.0, &mut rng)).collect();
    let carries_name = |ty: usize| channels[ty] != Channel::Context;
    let carries_context = |ty: usize| channels[ty] != Channel::Name;

    let mut records = Vec::with_capacity(spec.entities);
    let mut sentences = Vec::new();
    let mut entity_vectors = Vec::with_capacity(spec.entities);
    let mut name_words: BTreeMap<String, Option<usize>> = BTreeMap::new();
    let mut descriptions = BTreeMap::new();

    for e in 0..spec.entities {
        let id = format!("/m/e{e:05}");
        let (notable, gold, name_type) = match &name_h {
            Some(nh) => {
                let (name_notable, mut g) = draw_gold(nh, 0, spec.fine_fraction, &mut rng);
                let (ctx_notable, g2) = draw_gold(&ctx_h, nh.names.len(), spec.fine_fraction, &mut rng);
                g.extend(g2);
                (ctx_notable, g, name_notable)
            }
            None => {
                let (n, g) = draw_gold(&ctx_h, 0, spec.fine_fraction, &mut rng);
                (n, g, n)
            }
        };

        // name: one or two words, the last possibly carrying the type suffix
        let words = rng.random_range(1..=2);
        let mut name: Vec<String> = (0..words)
            .map(|_| {
                let syllables = rng.random_range(2..=3);
                word(&mut rng, syllables)
            })
            .collect();
        let suffixed = carries_name(name_type) && rng.random_bool(spec.name_strength);
        if suffixed {
            let last = name.last_mut().expect("names have a word");
            last.push_str(&type_suffix[name_type]);
        }
        for (k, w) in name.iter().enumerate() {
            let owner = if suffixed && k + 1 == name.len() { Some(name_type) } else { None };
            name_words.entry(w.clone()).or_insert(owner);
        }

        let count = match spec.contexts {
            ContextCount::Fixed(n) => n,
            ContextCount::Uniform { min, max } => rng.random_range(min..=max),
        };
        let signal_types: Vec<usize> = gold.iter().copied().filter(|&g| carries_context(g)).collect();
        for _ in 0..count {
            let mut left: Vec<String> =
                (0..SIDE_WORDS).map(|_| background.choose(&mut rng).expect("vocabulary").clone()).collect();
            let mut right: Vec<String> =
                (0..SIDE_WORDS).map(|_| background.choose(&mut rng).expect("vocabulary").clone()).collect();
            let noisy = rng.random_bool(spec.noise);
            // distinct slots near the mention: left counts back from the mention
            let mut slots: Vec<(bool, usize)> =
                (0..SIGNAL_REACH).flat_map(|d| [(true, SIDE_WORDS - 1 - d), (false, d)]).collect();
            for k in (1..slots.len()).rev() {
                slots.swap(k, rng.random_range(0..=k));
            }
            for (k, &ty) in signal_types.iter().enumerate() {
                if !noisy && !rng.random_bool(spec.indicative_strength) {
                    continue;
                }
                let w = if noisy {
                    all_context_words.choose(&mut rng).expect("vocabulary").clone()
                } else {
                    indicative[ty].choose(&mut rng).expect("indicative words").clone()
                };
                let (is_left, pos) = slots[k % slots.len()];
                if is_left {
                    left[pos] = w;
                } else {
                    right[pos] = w;
                }
            }
            let mut tokens = left;
            let start = tokens.len();
            tokens.extend(name.iter().cloned());
            let end = tokens.len();
            tokens.extend(right);
            sentences.push(Sentence { tokens, mentions: vec![Mention { entity: id.clone(), start, end }] });
        }

        let mut vector = vec![0.0; spec.embedding_dim];
        let elr_types: Vec<usize> = gold.iter().copied().filter(|&g| carries_context(g) || name_h.is_none()).collect();
        for &g in &elr_types {
            for (v, c) in vector.iter_mut().zip(&centroids[g]) {
                *v += c / elr_types.len() as f64;
            }
        }
        for (v, n) in vector.iter_mut().zip(gaussian(spec.embedding_dim, spec.embedding_noise, &mut rng)) {
            *v += n;
        }
        entity_vectors.push((id.clone(), vector));

        let mut desc: Vec<String> = (0..8).map(|_| background.choose(&mut rng).expect("vocabulary").clone()).collect();
        for &g in &signal_types {
            desc.push(indicative[g].choose(&mut rng).expect("indicative words").clone());
        }
        descriptions.insert(id.clone(), desc);

        records.push(EntityRecord::new(id, name, notable, gold, count as u64)?);
    }

    let mut word_vectors = Vec::with_capacity(name_words.len() + all_context_words.len());
    let mut seen = BTreeSet::new();
    for (w, owner) in &name_words {
        let mut v = gaussian(spec.embedding_dim, 0.5, &mut rng);
        if let Some(ty) = owner {
            for (x, c) in v.iter_mut().zip(&centroids[*ty]) {
                *x += c;
            }
        }
        seen.insert(w.clone());
        word_vectors.push((w.clone(), v));
    }
    let owner_of: BTreeMap<&str, usize> =
        indicative.iter().enumerate().flat_map(|(t, ws)| ws.iter().map(move |w| (w.as_str(), t))).collect();
    for w in &all_context_words {
        if seen.insert(w.clone()) {
            let mut v = gaussian(spec.embedding_dim, CONTEXT_WORD_SCALE, &mut rng);
            if let Some(&ty) = owner_of.get(w.as_str()) {
                for (x, c) in v.iter_mut().zip(&centroids[ty]) {
                    *x += CONTEXT_WORD_SCALE * c;
                }
            }
            word_vectors.push((w.clone(), v));
        }
    }

    let type_vectors = types.iter().cloned().zip(centroids).collect();
    Ok(SyntheticWorld {
        types,
        parents,
        channels,
        records,
        sentences,
        entity_vectors,
        word_vectors,
        type_vectors,
        descriptions,
        indicative,
        suffixes: type_suffix,
        background,
    })
}
