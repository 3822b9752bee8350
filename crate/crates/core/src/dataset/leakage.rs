use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::sample::Sample;
use crate::spatial::Entity;

/// Template- and order-free identity of a sample: its chain relations as
/// sorted `head rel tail` strings plus the oriented question pair. Noise
/// is excluded.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey {
    pub triples: Vec<String>,
    pub question: (Entity, Entity),
}

pub fn canonical_key(sample: &Sample) -> Result<CanonicalKey, DatasetError> {
    let meta = sample.meta()?;
    let mut triples: Vec<String> =
        meta.chain.edges.iter().map(|t| format!("{} {} {}", t.head, t.rel, t.tail)).collect();
    triples.sort();
    Ok(CanonicalKey { triples, question: (meta.question.x.clone(), meta.question.y.clone()) })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KLeakage {
    pub test: usize,
    pub overlapping: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub test_total: usize,
    pub overlapping: usize,
    pub fraction: f64,
    pub per_k: BTreeMap<usize, KLeakage>,
    /// Ids of test samples whose key occurs in the training set.
    pub offending_ids: Vec<u64>,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Fraction of `test` samples whose canonical key also occurs in `train`.
pub fn leakage(train: &[Sample], test: &[Sample]) -> Result<LeakageReport, DatasetError> {
    let seen: HashSet<CanonicalKey> = train.iter().map(canonical_key).collect::<Result<_, _>>()?;
    let mut report = LeakageReport::default();
    for s in test {
        let hit = seen.contains(&canonical_key(s)?);
        let row = report.per_k.entry(s.k).or_default();
        row.test += 1;
        report.test_total += 1;
        if hit {
            row.overlapping += 1;
            report.overlapping += 1;
            report.offending_ids.push(s.id);
        }
    }
    for row in report.per_k.values_mut() {
        row.fraction = ratio(row.overlapping, row.test);
    }
    report.fraction = ratio(report.overlapping, report.test_total);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{Lexicon, SampleGenerator};
    use crate::noise::NoisePolicy;
    use crate::sample::RngSeed;
    use crate::templates::TemplateBank;
    use proptest::prelude::*;

    fn samples(g: &SampleGenerator, master: u64, n: u64) -> Vec<Sample> {
        (0..n)
            .map(|i| {
                let mut s = g.generate(1 + (i as usize % 5), RngSeed { master, stream: i }).unwrap();
                s.id = i;
                s
            })
            .collect()
    }

    #[test]
    fn copy_leaks_completely() {
        let g = SampleGenerator::new(TemplateBank::builtin());
        let train = samples(&g, 1, 200);
        let r = leakage(&train, &train).unwrap();
        assert_eq!(r.fraction, 1.0);
        assert_eq!(r.offending_ids.len(), 200);
    }

    #[test]
    fn disjoint_lexicons_never_leak() {
        let bank = TemplateBank::builtin();
        let a = SampleGenerator::new(bank.clone());
        let b = SampleGenerator::new(bank).with_lexicon(Lexicon::numbered("e", 26).unwrap());
        let r = leakage(&samples(&a, 1, 500), &samples(&b, 1, 500)).unwrap();
        assert_eq!(r.fraction, 0.0);
        assert!(r.offending_ids.is_empty());
    }

    #[test]
    fn missing_meta_is_an_error() {
        let g = SampleGenerator::new(TemplateBank::builtin());
        let mut s = samples(&g, 1, 1);
        s[0].meta = None;
        assert!(matches!(leakage(&s, &s), Err(DatasetError::MissingMeta(_))));
    }

    #[test]
    fn noise_does_not_change_the_key() {
        let bank = TemplateBank::builtin();
        let clean = SampleGenerator::new(bank.clone());
        let noisy = SampleGenerator::new(bank).with_noise(NoisePolicy::default());
        for i in 0..200 {
            let seed = RngSeed { master: 2, stream: i };
            let a = clean.generate(4, seed).unwrap();
            let b = noisy.generate(4, seed).unwrap();
            // same chain and question (drawn before noise), different story
            assert_eq!(a.meta.as_ref().unwrap().chain, b.meta.as_ref().unwrap().chain);
            assert_eq!(canonical_key(&a).unwrap(), canonical_key(&b).unwrap());
        }
    }

    proptest! {
        #[test]
        fn key_ignores_sentence_order_and_templates(stream in 0u64..10_000, reseed in 0u64..10_000) {
            let bank = TemplateBank::builtin();
            let g = SampleGenerator::new(bank.clone());
            let s = g.generate(5, RngSeed { master: 17, stream }).unwrap();
            let key = canonical_key(&s).unwrap();
            let meta = s.meta.as_ref().unwrap();
            let mut rng = crate::generator::sample_rng(reseed, 0);
            let again = crate::generator::realize(&meta.chain, &meta.question, &bank, &mut rng);
            prop_assert_eq!(canonical_key(&again).unwrap(), key);
        }
    }
}
