use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::sample::{NoiseKind, Sample};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeStats {
    pub sentences: usize,
    pub entities: usize,
    pub segments: usize,
    pub mean_sentences: f64,
    pub mean_entities: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub samples: usize,
    pub irrelevant: TypeStats,
    pub disconnected: TypeStats,
    pub supporting: TypeStats,
}

impl NoiseRow {
    pub fn get(&self, kind: NoiseKind) -> &TypeStats {
        match kind {
            NoiseKind::Irrelevant => &self.irrelevant,
            NoiseKind::Disconnected => &self.disconnected,
            NoiseKind::Supporting => &self.supporting,
        }
    }

    fn get_mut(&mut self, kind: NoiseKind) -> &mut TypeStats {
        match kind {
            NoiseKind::Irrelevant => &mut self.irrelevant,
            NoiseKind::Disconnected => &mut self.disconnected,
            NoiseKind::Supporting => &mut self.supporting,
        }
    }
}

/// Per-k noise totals and per-sample means.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseStats {
    pub per_k: BTreeMap<usize, NoiseRow>,
}

pub fn noise_stats(samples: &[Sample]) -> Result<NoiseStats, DatasetError> {
    let mut stats = NoiseStats::default();
    for s in samples {
        let noise = &s.meta()?.noise;
        let row = stats.per_k.entry(s.k).or_default();
        row.samples += 1;
        for kind in NoiseKind::ALL {
            let t = row.get_mut(kind);
            t.sentences += noise.count(kind);
            t.entities += noise.entities_added(kind);
        }
        row.disconnected.segments += noise.disconnected_segments;
    }
    for row in stats.per_k.values_mut() {
        let n = row.samples as f64;
        for kind in NoiseKind::ALL {
            let t = row.get_mut(kind);
            t.mean_sentences = t.sentences as f64 / n;
            t.mean_entities = t.entities as f64 / n;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::SampleGenerator;
    use crate::noise::NoisePolicy;
    use crate::sample::RngSeed;
    use crate::templates::TemplateBank;

    fn dataset(policy: NoisePolicy, n: u64) -> Vec<Sample> {
        let g = SampleGenerator::new(TemplateBank::builtin()).with_noise(policy);
        (0..n).map(|i| g.generate(1 + (i as usize % 10), RngSeed { master: 4, stream: i }).unwrap()).collect()
    }

    #[test]
    fn zero_noise_gives_zero_table() {
        let stats = noise_stats(&dataset(NoisePolicy::none(), 100)).unwrap();
        assert_eq!(stats.per_k.len(), 10);
        for row in stats.per_k.values() {
            assert_eq!(row.samples, 10);
            for kind in NoiseKind::ALL {
                assert_eq!(row.get(kind), &TypeStats::default());
            }
        }
    }

    #[test]
    fn rows_satisfy_node_accounting() {
        let stats = noise_stats(&dataset(NoisePolicy::default(), 3000)).unwrap();
        for (&k, row) in &stats.per_k {
            assert_eq!(row.irrelevant.entities, row.irrelevant.sentences);
            assert_eq!(row.disconnected.entities, row.disconnected.sentences + row.disconnected.segments);
            assert_eq!(row.supporting.entities, 0);
            if k <= 2 {
                assert_eq!(row.supporting.sentences, 0);
            } else {
                assert!(row.supporting.sentences > 0);
            }
            assert!(row.disconnected.mean_entities > row.irrelevant.mean_entities);
        }
    }
}
