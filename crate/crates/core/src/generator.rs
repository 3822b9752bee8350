//! Story generation: chain sampling, question selection, rendering, and the
//! closed-form count of distinct samples.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::{self, NoiseError, NoisePolicy};
use crate::sample::{Chain, NoiseRecord, Question, RngSeed, Sample, SampleMeta, SentenceOrigin};
use crate::spatial::{is_entity_token, label_displacement, Coord, Direction, Entity, RelationTriple};
use crate::templates::TemplateBank;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid k={k}: need 1 <= k and k + 1 <= {entities} entities")]
    InvalidK { k: usize, entities: usize },
    #[error("invalid lexicon size {e} for k={k}: need at least k + 1")]
    InvalidE { k: usize, e: usize },
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// The pool of entity names a story draws from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Entity>", into = "Vec<Entity>")]
pub struct Lexicon(Vec<Entity>);

impl Lexicon {
    pub fn new(entities: Vec<Entity>) -> Result<Lexicon, GenError> {
        for (i, e) in entities.iter().enumerate() {
            if !is_entity_token(e.as_str()) {
                return Err(GenError::InvalidLexicon(format!("`{e}` is not an entity token")));
            }
            if entities[..i].contains(e) {
                return Err(GenError::InvalidLexicon(format!("`{e}` listed twice")));
            }
        }
        Ok(Lexicon(entities))
    }

    /// Names made of a prefix and a running index, e.g. `E0`, `E1`, ...
    pub fn numbered(prefix: &str, n: usize) -> Result<Lexicon, GenError> {
        Lexicon::new((0..n).map(|i| Entity::new(format!("{prefix}{i}"))).collect())
    }

    pub fn entities(&self) -> &[Entity] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The 26 uppercase letters.
impl Default for Lexicon {
    fn default() -> Self {
        Lexicon(('A'..='Z').map(|c| Entity::new(c.to_string())).collect())
    }
}

impl TryFrom<Vec<Entity>> for Lexicon {
    type Error = GenError;
    fn try_from(v: Vec<Entity>) -> Result<Self, GenError> {
        Lexicon::new(v)
    }
}

impl From<Lexicon> for Vec<Entity> {
    fn from(l: Lexicon) -> Self {
        l.0
    }
}

/// Independent, reproducible RNG stream for one sample.
pub fn sample_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    Direction::ALL[rng.gen_range(0..Direction::ALL.len())]
}

/// States `head = tail + offset(rel)`, flipped to the inverse phrasing on a
/// fair coin.
pub fn oriented<R: Rng + ?Sized>(head: &Entity, rel: Direction, tail: &Entity, rng: &mut R) -> RelationTriple {
    let t = RelationTriple::new(head.clone(), rel, tail.clone());
    if rng.gen::<bool>() {
        t.invert()
    } else {
        t
    }
}

pub fn sample_chain<R: Rng + ?Sized>(k: usize, lexicon: &Lexicon, rng: &mut R) -> Result<Chain, GenError> {
    if k < 1 || k + 1 > lexicon.len() {
        return Err(GenError::InvalidK { k, entities: lexicon.len() });
    }
    let entities: Vec<Entity> =
        index::sample(rng, lexicon.len(), k + 1).into_iter().map(|i| lexicon.entities()[i].clone()).collect();

    let mut coords = BTreeMap::new();
    let mut here = Coord::ORIGIN;
    coords.insert(entities[0].clone(), here);
    let mut edges = Vec::with_capacity(k);
    for pair in entities.windows(2) {
        let rel = random_direction(rng);
        here = here + rel.offset();
        coords.insert(pair[1].clone(), here);
        edges.push(oriented(&pair[1], rel, &pair[0], rng));
    }
    Ok(Chain { entities, edges, coords })
}

/// Draws an unordered entity pair uniformly, then which of the two is asked
/// about.
pub fn pick_question<R: Rng + ?Sized>(chain: &Chain, rng: &mut R) -> Question {
    let n = chain.entities.len();
    assert!(n >= 2, "a question needs at least two entities");
    let a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    let (i, j) = (a.min(b), a.max(b));
    let (x, y) = if rng.gen::<bool>() { (i, j) } else { (j, i) };
    Question { x: chain.entities[x].clone(), y: chain.entities[y].clone(), hops: j - i }
}

pub fn answer_for(chain: &Chain, q: &Question) -> crate::spatial::AnswerLabel {
    label_displacement(chain.coords[&q.x] - chain.coords[&q.y])
}

/// Renders a noise-free sample.
pub fn realize<R: Rng + ?Sized>(chain: &Chain, q: &Question, bank: &TemplateBank, rng: &mut R) -> Sample {
    realize_with_noise(chain, q, NoiseRecord::default(), bank, rng)
}

/// Renders chain and noise sentences, shuffles them together, and renders
/// the question. The answer comes from the chain coordinates alone.
pub fn realize_with_noise<R: Rng + ?Sized>(
    chain: &Chain,
    q: &Question,
    noise: NoiseRecord,
    bank: &TemplateBank,
    rng: &mut R,
) -> Sample {
    let mut lines: Vec<(String, u32, SentenceOrigin)> = chain
        .edges
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let r = bank.render(t, rng);
            (r.text, r.template_id, SentenceOrigin::Chain(i))
        })
        .collect();
    lines.extend(noise.annotations.iter().enumerate().map(|(i, a)| {
        let r = bank.render(&a.triple, rng);
        (r.text, r.template_id, SentenceOrigin::Noise(i))
    }));
    lines.shuffle(rng);
    let question = bank.render_question(&q.x, &q.y, rng);

    let mut story = Vec::with_capacity(lines.len());
    let mut template_ids = Vec::with_capacity(lines.len());
    let mut origins = Vec::with_capacity(lines.len());
    for (text, id, origin) in lines {
        story.push(text);
        template_ids.push(id);
        origins.push(origin);
    }
    Sample {
        id: 0,
        k: chain.k(),
        story,
        question: question.text,
        answer: answer_for(chain, q),
        meta: Some(SampleMeta {
            chain: chain.clone(),
            question: q.clone(),
            noise,
            template_ids,
            question_template_id: question.template_id,
            origins,
            seed: None,
        }),
    }
}

/// Everything needed to turn a `(seed, stream)` pair into a sample.
#[derive(Debug, Clone)]
pub struct SampleGenerator {
    pub bank: TemplateBank,
    pub lexicon: Lexicon,
    /// `None` generates noise-free samples.
    pub noise: Option<NoisePolicy>,
}

impl SampleGenerator {
    pub fn new(bank: TemplateBank) -> Self {
        SampleGenerator { bank, lexicon: Lexicon::default(), noise: None }
    }

    pub fn with_noise(mut self, policy: NoisePolicy) -> Self {
        self.noise = Some(policy);
        self
    }

    pub fn with_lexicon(mut self, lexicon: Lexicon) -> Self {
        self.lexicon = lexicon;
        self
    }

    pub fn generate(&self, k: usize, seed: RngSeed) -> Result<Sample, GenError> {
        let mut rng = sample_rng(seed.master, seed.stream);
        let chain = sample_chain(k, &self.lexicon, &mut rng)?;
        let q = pick_question(&chain, &mut rng);
        let noise = match &self.noise {
            Some(policy) => {
                let spec = policy.draw(k, &mut rng);
                noise::inject(&chain, &spec, &self.lexicon, policy.supporting_min_k, &mut rng)?
            }
            None => NoiseRecord::default(),
        };
        let mut sample = realize_with_noise(&chain, &q, noise, &self.bank, &mut rng);
        if let Some(meta) = sample.meta.as_mut() {
            meta.seed = Some(seed);
        }
        Ok(sample)
    }
}

fn factorial(n: usize) -> BigUint {
    (1..=n as u64).fold(BigUint::one(), |acc, i| acc * i)
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    // each partial product is itself a binomial coefficient, so the division is exact
    (0..k as u64).fold(BigUint::one(), |acc, i| acc * (n as u64 - i) / (i + 1))
}

/// Number of distinct template-free samples with `k` relations over a lexicon
/// of `e` entities:
/// `(k+1)! C(e, k+1) * 16^k * k!/2 * 2 C(k+1, 2)`.
pub fn count_samples(k: usize, e: usize) -> Result<BigUint, GenError> {
    if k < 1 {
        return Err(GenError::InvalidK { k, entities: e });
    }
    if e < k + 1 {
        return Err(GenError::InvalidE { k, e });
    }
    let entity_orders = factorial(k + 1) * binomial(e, k + 1);
    let relations = BigUint::from(16u32).pow(k as u32);
    let questions = BigUint::from(2u32) * binomial(k + 1, 2);
    let numerator = entity_orders * relations * factorial(k) * questions;
    let (count, rem) = numerator.div_rem(&BigUint::from(2u32));
    assert!(rem.is_zero(), "sample count must be an integer");
    Ok(count)
}
