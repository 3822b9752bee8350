//! Data model shared by the generator, the oracle and the dataset writers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spatial::{AnswerLabel, Coord, Entity, RelationTriple};

/// Ground-truth chain: `entities[i]` and `entities[i + 1]` are linked by
/// `edges[i]`, whose head/tail orientation is arbitrary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub entities: Vec<Entity>,
    pub edges: Vec<RelationTriple>,
    pub coords: BTreeMap<Entity, Coord>,
}

impl Chain {
    pub fn k(&self) -> usize {
        self.edges.len()
    }

    pub fn index_of(&self, e: &Entity) -> Option<usize> {
        self.entities.iter().position(|x| x == e)
    }
}

/// Asks for the position of `x` relative to `y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Question {
    pub x: Entity,
    pub y: Entity,
    pub hops: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Irrelevant,
    Disconnected,
    Supporting,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::Irrelevant, NoiseKind::Disconnected, NoiseKind::Supporting];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Irrelevant => "irrelevant",
            NoiseKind::Disconnected => "disconnected",
            NoiseKind::Supporting => "supporting",
        }
    }
}

/// One noise sentence and the entities it introduced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseAnnotation {
    pub kind: NoiseKind,
    pub triple: RelationTriple,
    pub new_entities: Vec<Entity>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub annotations: Vec<NoiseAnnotation>,
    /// Number of independent chains added as disconnected noise.
    pub disconnected_segments: usize,
    /// Supporting sentences requested but not emitted for lack of eligible pairs.
    pub supporting_shortfall: usize,
}

impl NoiseRecord {
    pub fn triples(&self) -> impl Iterator<Item = &RelationTriple> {
        self.annotations.iter().map(|a| &a.triple)
    }

    pub fn count(&self, kind: NoiseKind) -> usize {
        self.annotations.iter().filter(|a| a.kind == kind).count()
    }

    pub fn entities_added(&self, kind: NoiseKind) -> usize {
        self.annotations.iter().filter(|a| a.kind == kind).map(|a| a.new_entities.len()).sum()
    }
}

/// Where a story sentence came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentenceOrigin {
    /// Index into `Chain::edges`.
    Chain(usize),
    /// Index into `NoiseRecord::annotations`.
    Noise(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed {
    pub master: u64,
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub chain: Chain,
    pub question: Question,
    pub noise: NoiseRecord,
    /// Template id of each story sentence, aligned with `Sample::story`.
    pub template_ids: Vec<u32>,
    pub question_template_id: u32,
    /// Origin of each story sentence, aligned with `Sample::story`.
    pub origins: Vec<SentenceOrigin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<RngSeed>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: u64,
    pub k: usize,
    pub story: Vec<String>,
    pub question: String,
    pub answer: AnswerLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<SampleMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("sample {0} carries no chain metadata")]
pub struct MissingMeta(pub u64);

impl Sample {
    pub fn meta(&self) -> Result<&SampleMeta, MissingMeta> {
        self.meta.as_ref().ok_or(MissingMeta(self.id))
    }

    /// 0-based story positions of the chain sentences.
    pub fn chain_positions(&self) -> Vec<usize> {
        self.meta
            .iter()
            .flat_map(|m| m.origins.iter().enumerate())
            .filter(|(_, o)| matches!(o, SentenceOrigin::Chain(_)))
            .map(|(i, _)| i)
            .collect()
    }
}
