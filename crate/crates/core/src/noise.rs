//! Distracting noise: irrelevant branches, disconnected chains, and
//! supporting shortcut edges. Every noise triple agrees with the true
//! coordinates, so no noise can change an answer.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::{oriented, random_direction, Lexicon};
use crate::sample::{Chain, NoiseAnnotation, NoiseKind, NoiseRecord};
use crate::spatial::{label_displacement, Coord, Entity, RelationTriple};

/// Supporting noise needs chains with at least this many edges by default.
pub const DEFAULT_SUPPORTING_MIN_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NoiseError {
    #[error("lexicon exhausted: need {needed} unused entities, {available} left")]
    LexiconExhausted { needed: usize, available: usize },
    #[error("supporting noise needs k >= {min_k}, chain has k={k}")]
    ChainTooShort { k: usize, min_k: usize },
}

/// Number of sentences of each noise type to add to one chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub irrelevant: usize,
    pub disconnected: usize,
    pub supporting: usize,
}

/// Inclusive `min..max` sentence-count range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

impl CountRange {
    pub const fn new(min: usize, max: usize) -> Self {
        CountRange { min, max }
    }

    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> usize {
        rng.gen_range(self.min..=self.max)
    }
}

impl fmt::Display for CountRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.min, self.max)
    }
}

impl FromStr for CountRange {
    type Err = String;

    /// Accepts `MIN..MAX` or a single count.
    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad count `{t}`: {e}"));
        let (min, max) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let n = parse(s)?;
                (n, n)
            }
        };
        if min > max {
            return Err(format!("empty range {min}..{max}"));
        }
        Ok(CountRange { min, max })
    }
}

/// How noise amounts are drawn per sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoisePolicy {
    pub irrelevant: CountRange,
    pub disconnected: CountRange,
    pub supporting: CountRange,
    pub supporting_min_k: usize,
}

impl Default for NoisePolicy {
    fn default() -> Self {
        NoisePolicy {
            irrelevant: CountRange::new(0, 3),
            disconnected: CountRange::new(0, 3),
            supporting: CountRange::new(0, 2),
            supporting_min_k: DEFAULT_SUPPORTING_MIN_K,
        }
    }
}

impl NoisePolicy {
    /// A policy that never adds noise.
    pub fn none() -> Self {
        NoisePolicy {
            irrelevant: CountRange::new(0, 0),
            disconnected: CountRange::new(0, 0),
            supporting: CountRange::new(0, 0),
            supporting_min_k: DEFAULT_SUPPORTING_MIN_K,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> NoiseSpec {
        let irrelevant = self.irrelevant.draw(rng);
        let disconnected = self.disconnected.draw(rng);
        let supporting = if k >= self.supporting_min_k { self.supporting.draw(rng) } else { 0 };
        NoiseSpec { irrelevant, disconnected, supporting }
    }
}

/// Entities that noise may still introduce.
fn unused_entities(lexicon: &Lexicon, used: &BTreeSet<Entity>) -> Vec<Entity> {
    lexicon.entities().iter().filter(|e| !used.contains(*e)).cloned().collect()
}

fn take_fresh<R: Rng + ?Sized>(
    lexicon: &Lexicon,
    used: &mut BTreeSet<Entity>,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Entity>, NoiseError> {
    let pool = unused_entities(lexicon, used);
    if pool.len() < n {
        return Err(NoiseError::LexiconExhausted { needed: n, available: pool.len() });
    }
    let fresh: Vec<Entity> = index::sample(rng, pool.len(), n).into_iter().map(|i| pool[i].clone()).collect();
    used.extend(fresh.iter().cloned());
    Ok(fresh)
}

/// Grows `n` new entities off the chain. The first attaches to a random
/// chain entity; each later one either extends the current branch or starts
/// a new branch from a random chain entity.
pub fn add_irrelevant<R: Rng + ?Sized>(
    chain: &Chain,
    used: &mut BTreeSet<Entity>,
    lexicon: &Lexicon,
    n: usize,
    rng: &mut R,
) -> Result<Vec<NoiseAnnotation>, NoiseError> {
    let fresh = take_fresh(lexicon, used, n, rng)?;
    let mut out = Vec::with_capacity(n);
    let mut tip: Option<&Entity> = None;
    for e in &fresh {
        let anchor = match tip {
            Some(t) if rng.gen::<bool>() => t,
            _ => chain.entities.choose(rng).expect("chain has entities"),
        };
        let triple = oriented(e, random_direction(rng), anchor, rng);
        out.push(NoiseAnnotation { kind: NoiseKind::Irrelevant, triple, new_entities: vec![e.clone()] });
        tip = Some(e);
    }
    Ok(out)
}

/// Adds one independent chain of `n` relations over `n + 1` new entities.
pub fn add_disconnected<R: Rng + ?Sized>(
    used: &mut BTreeSet<Entity>,
    lexicon: &Lexicon,
    n: usize,
    rng: &mut R,
) -> Result<Vec<NoiseAnnotation>, NoiseError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let fresh = take_fresh(lexicon, used, n + 1, rng)?;
    Ok(fresh
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            let triple = oriented(&pair[1], random_direction(rng), &pair[0], rng);
            let new_entities = if i == 0 { pair.to_vec() } else { vec![pair[1].clone()] };
            NoiseAnnotation { kind: NoiseKind::Disconnected, triple, new_entities }
        })
        .collect())
}

/// Chain entity pairs that are not linked by an edge but sit within one grid
/// step of each other. Each unordered pair appears once, with `.0` earlier
/// in the chain.
pub fn supporting_candidates(chain: &Chain) -> Vec<(usize, usize, Coord)> {
    let n = chain.entities.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 2..n {
            let d = chain.coords[&chain.entities[j]] - chain.coords[&chain.entities[i]];
            if d != Coord::ORIGIN && d.chebyshev() <= 1 {
                out.push((i, j, d));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportingOutcome {
    pub annotations: Vec<NoiseAnnotation>,
    pub shortfall: usize,
}

/// Adds up to `n` shortcut edges between non-adjacent chain entities whose
/// true displacement is a single grid step.
pub fn add_supporting<R: Rng + ?Sized>(
    chain: &Chain,
    n: usize,
    min_k: usize,
    rng: &mut R,
) -> Result<SupportingOutcome, NoiseError> {
    if chain.k() < min_k {
        return Err(NoiseError::ChainTooShort { k: chain.k(), min_k });
    }
    let candidates = supporting_candidates(chain);
    let take = n.min(candidates.len());
    let annotations = index::sample(rng, candidates.len(), take)
        .into_iter()
        .map(|c| {
            let (i, j, d) = candidates[c];
            let rel = label_displacement(d).direction().expect("candidate displacement is non-zero");
            let triple = oriented(&chain.entities[j], rel, &chain.entities[i], rng);
            NoiseAnnotation { kind: NoiseKind::Supporting, triple, new_entities: Vec::new() }
        })
        .collect();
    Ok(SupportingOutcome { annotations, shortfall: n - take })
}

/// Applies a full [`NoiseSpec`] to a chain.
pub fn inject<R: Rng + ?Sized>(
    chain: &Chain,
    spec: &NoiseSpec,
    lexicon: &Lexicon,
    supporting_min_k: usize,
    rng: &mut R,
) -> Result<NoiseRecord, NoiseError> {
    let mut used: BTreeSet<Entity> = chain.entities.iter().cloned().collect();
    let mut record = NoiseRecord::default();
    record.annotations.extend(add_irrelevant(chain, &mut used, lexicon, spec.irrelevant, rng)?);
    let disconnected = add_disconnected(&mut used, lexicon, spec.disconnected, rng)?;
    if !disconnected.is_empty() {
        record.disconnected_segments = 1;
    }
    record.annotations.extend(disconnected);
    if spec.supporting > 0 {
        let s = add_supporting(chain, spec.supporting, supporting_min_k, rng)?;
        record.annotations.extend(s.annotations);
        record.supporting_shortfall = s.shortfall;
    }
    Ok(record)
}

/// Node-accounting violations of a noise record against its chain. Empty
/// when every rule holds.
pub fn accounting_violations(chain: &Chain, noise: &NoiseRecord, supporting_min_k: usize) -> Vec<String> {
    let mut v = Vec::new();
    let chain_entities: BTreeSet<&Entity> = chain.entities.iter().collect();
    let irr = noise.count(NoiseKind::Irrelevant);
    if noise.entities_added(NoiseKind::Irrelevant) != irr {
        v.push(format!("irrelevant: {irr} sentences but {} new entities", noise.entities_added(NoiseKind::Irrelevant)));
    }
    let dis = noise.count(NoiseKind::Disconnected);
    let expected = dis + noise.disconnected_segments;
    if noise.entities_added(NoiseKind::Disconnected) != expected || (dis == 0) != (noise.disconnected_segments == 0) {
        v.push(format!(
            "disconnected: {dis} sentences in {} segments but {} new entities",
            noise.disconnected_segments,
            noise.entities_added(NoiseKind::Disconnected)
        ));
    }
    let sup = noise.count(NoiseKind::Supporting);
    if sup > 0 && chain.k() < supporting_min_k {
        v.push(format!("supporting noise on a k={} chain", chain.k()));
    }
    let mut introduced = BTreeSet::new();
    for a in &noise.annotations {
        match a.kind {
            NoiseKind::Supporting => {
                if !a.new_entities.is_empty()
                    || !chain_entities.contains(&a.triple.head)
                    || !chain_entities.contains(&a.triple.tail)
                {
                    v.push(format!("supporting {} leaves the chain", a.triple));
                }
                if chain.edges.iter().any(|e| same_pair(e, &a.triple)) {
                    v.push(format!("supporting {} duplicates a chain edge", a.triple));
                }
            }
            _ => {
                for e in &a.new_entities {
                    if chain_entities.contains(e) || !introduced.insert(e.clone()) {
                        v.push(format!("{} noise reuses entity {e}", a.kind.as_str()));
                    }
                }
            }
        }
    }
    v
}

fn same_pair(a: &RelationTriple, b: &RelationTriple) -> bool {
    (a.head == b.head && a.tail == b.tail) || (a.head == b.tail && a.tail == b.head)
}
