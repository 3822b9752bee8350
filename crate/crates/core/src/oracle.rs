//! Symbolic answer oracle.
//!
//! The solver places the component containing the question's reference
//! entity on the grid and reads off the sign of the asked entity's
//! displacement. [`certify`] re-parses a rendered sample from its text and
//! checks it against its own metadata and against the solver.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::sample::Sample;
use crate::spatial::{label_displacement, place_component, AnswerLabel, Entity, PlacementError, RelationTriple};
use crate::templates::TemplateBank;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("question asks about {0} relative to itself")]
    SameEntity(Entity),
    #[error("entity {0} does not appear in the story")]
    UnknownEntity(Entity),
    #[error("{x} and {y} are not connected")]
    Unreachable { x: Entity, y: Entity },
    #[error("inconsistent story: {0}")]
    InconsistentStory(PlacementError),
}

/// Entities and relations of a story, with connected components.
#[derive(Debug, Clone)]
pub struct StoryGraph {
    pub nodes: BTreeSet<Entity>,
    pub edges: Vec<RelationTriple>,
    pub components: Vec<BTreeSet<Entity>>,
}

impl StoryGraph {
    pub fn new(edges: &[RelationTriple]) -> StoryGraph {
        let nodes: BTreeSet<Entity> = edges.iter().flat_map(|t| [t.head.clone(), t.tail.clone()]).collect();
        let index: BTreeMap<&Entity, usize> = nodes.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let mut parent: Vec<usize> = (0..nodes.len()).collect();
        fn root(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for t in edges {
            let (a, b) = (root(&mut parent, index[&t.head]), root(&mut parent, index[&t.tail]));
            parent[a] = b;
        }
        let mut groups: BTreeMap<usize, BTreeSet<Entity>> = BTreeMap::new();
        for (i, e) in nodes.iter().enumerate() {
            groups.entry(root(&mut parent, i)).or_default().insert(e.clone());
        }
        StoryGraph { nodes, edges: edges.to_vec(), components: groups.into_values().collect() }
    }

    pub fn component_of(&self, e: &Entity) -> Option<&BTreeSet<Entity>> {
        self.components.iter().find(|c| c.contains(e))
    }
}

/// Position of `x` relative to `y` implied by `triples`.
pub fn solve(triples: &[RelationTriple], x: &Entity, y: &Entity) -> Result<AnswerLabel, SolveError> {
    if x == y {
        return Err(SolveError::SameEntity(x.clone()));
    }
    for e in [x, y] {
        if !triples.iter().any(|t| t.touches(e)) {
            return Err(SolveError::UnknownEntity(e.clone()));
        }
    }
    let coords = place_component(triples, y).map_err(SolveError::InconsistentStory)?;
    match coords.get(x) {
        Some(&px) => Ok(label_displacement(px - coords[y])),
        None => Err(SolveError::Unreachable { x: x.clone(), y: y.clone() }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// Every story sentence and the question parse back through the bank.
    Parse,
    /// Parsed triples equal the chain and noise triples as a multiset.
    TripleSet,
    /// Solving the full parsed story gives the stored answer.
    NoisyAnswer,
    /// Solving the chain alone gives the stored answer.
    ChainAnswer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub check: Check,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertReport {
    pub id: u64,
    pub k: usize,
    pub passed: bool,
    pub failures: Vec<Failure>,
}

pub fn certify(sample: &Sample, bank: &TemplateBank) -> CertReport {
    let mut failures = Vec::new();
    let mut fail = |check, detail: String| failures.push(Failure { check, detail });

    let mut parsed = Vec::with_capacity(sample.story.len());
    for line in &sample.story {
        match bank.parse(line) {
            Ok(t) => parsed.push(t),
            Err(e) => fail(Check::Parse, e.to_string()),
        }
    }
    let question = match bank.parse_question(&sample.question) {
        Ok(q) => Some(q),
        Err(e) => {
            fail(Check::Parse, e.to_string());
            None
        }
    };

    let Some(meta) = sample.meta.as_ref() else {
        fail(Check::TripleSet, "sample carries no metadata".to_string());
        return CertReport { id: sample.id, k: sample.k, passed: false, failures };
    };
    if let Some((x, y)) = &question {
        if (x, y) != (&meta.question.x, &meta.question.y) {
            fail(Check::Parse, format!("question text asks ({x}, {y}), metadata says ({}, {})", meta.question.x, meta.question.y));
        }
    }
    if meta.chain.k() != sample.k {
        fail(Check::TripleSet, format!("k={} but chain has {} edges", sample.k, meta.chain.k()));
    }

    let mut expected: Vec<RelationTriple> = meta.chain.edges.iter().chain(meta.noise.triples()).cloned().collect();
    expected.sort();
    let mut got = parsed.clone();
    got.sort();
    if got != expected {
        fail(
            Check::TripleSet,
            format!("story states {} relations, metadata lists {} (or they differ)", got.len(), expected.len()),
        );
    }

    let (x, y) = (&meta.question.x, &meta.question.y);
    match solve(&parsed, x, y) {
        Ok(a) if a == sample.answer => {}
        Ok(a) => fail(Check::NoisyAnswer, format!("story implies {a}, sample says {}", sample.answer)),
        Err(e) => fail(Check::NoisyAnswer, e.to_string()),
    }
    match solve(&meta.chain.edges, x, y) {
        Ok(a) if a == sample.answer => {}
        Ok(a) => fail(Check::ChainAnswer, format!("chain implies {a}, sample says {}", sample.answer)),
        Err(e) => fail(Check::ChainAnswer, e.to_string()),
    }

    CertReport { id: sample.id, k: sample.k, passed: failures.is_empty(), failures }
}
