//! StepGame: a generator and verifier for multi-hop spatial reasoning QA.
//!
//! Stories describe a chain of entities linked by unit spatial relations,
//! rendered through sentence templates and optionally padded with
//! distracting noise. Every sample is certified by an independent symbolic
//! solver. The [`tpr`] module holds a numeric reference of the TP-MANN
//! memory network's forward pass.

pub mod dataset;
pub mod generator;
pub mod noise;
pub mod oracle;
pub mod sample;
pub mod spatial;
pub mod templates;
pub mod tpr;

pub use generator::{count_samples, pick_question, realize, sample_chain, GenError, Lexicon, SampleGenerator};
pub use oracle::{certify, solve, CertReport};
pub use sample::{Chain, NoiseKind, Question, Sample};
pub use spatial::{label_displacement, place_chain, AnswerLabel, Coord, Direction, Entity, RelationTriple};
pub use templates::TemplateBank;
