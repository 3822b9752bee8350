use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{canonical_key, leakage, noise_stats, write_dataset, DatasetError, Format, LeakageReport, NoiseStats};
use crate::generator::SampleGenerator;
use crate::noise::NoisePolicy;
use crate::oracle::certify;
use crate::sample::{RngSeed, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Valid,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Valid, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Valid => "valid",
            SplitName::Test => "test",
        }
    }

    fn code(self) -> u64 {
        match self {
            SplitName::Train => 0,
            SplitName::Valid => 1,
            SplitName::Test => 2,
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// RNG stream of the `index`-th candidate drawn for `(split, k)`.
pub fn stream_id(split: SplitName, k: usize, index: u64) -> u64 {
    debug_assert!(k < 1 << 16 && index < 1 << 40);
    (split.code() << 56) | ((k as u64) << 40) | index
}

/// Inclusive range of chain lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KRange {
    pub min: usize,
    pub max: usize,
}

impl KRange {
    pub fn iter(self) -> impl Iterator<Item = usize> {
        self.min..=self.max
    }
}

impl std::str::FromStr for KRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let r: crate::noise::CountRange = s.parse()?;
        if r.min == 0 {
            return Err("k must be at least 1".to_string());
        }
        Ok(KRange { min: r.min, max: r.max })
    }
}

/// Sizes per k for each split. Train and valid share `train_k`; test uses
/// `test_k` and is the only split that carries noise unless `train_noise`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_k: KRange,
    pub test_k: KRange,
    pub train_n: usize,
    pub valid_n: usize,
    pub test_n: usize,
    pub train_noise: bool,
    pub noise: NoisePolicy,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            train_k: KRange { min: 1, max: 5 },
            test_k: KRange { min: 1, max: 10 },
            train_n: 10_000,
            valid_n: 1_000,
            test_n: 10_000,
            train_noise: false,
            noise: NoisePolicy::default(),
        }
    }
}

impl SplitPlan {
    pub fn ks(&self, split: SplitName) -> KRange {
        match split {
            SplitName::Train | SplitName::Valid => self.train_k,
            SplitName::Test => self.test_k,
        }
    }

    pub fn per_k(&self, split: SplitName) -> usize {
        match split {
            SplitName::Train => self.train_n,
            SplitName::Valid => self.valid_n,
            SplitName::Test => self.test_n,
        }
    }

    pub fn noisy(&self, split: SplitName) -> bool {
        split == SplitName::Test || self.train_noise
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        for (name, r) in [("train", self.train_k), ("test", self.test_k)] {
            if r.min < 1 || r.min > r.max {
                return Err(DatasetError::InvalidPlan(format!("{name} k range {}..{}", r.min, r.max)));
            }
        }
        let n = &self.noise;
        for r in [n.irrelevant, n.disconnected, n.supporting] {
            if r.min > r.max {
                return Err(DatasetError::InvalidPlan(format!("noise range {r}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<Sample>,
    pub valid: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl Splits {
    pub fn get(&self, split: SplitName) -> &[Sample] {
        match split {
            SplitName::Train => &self.train,
            SplitName::Valid => &self.valid,
            SplitName::Test => &self.test,
        }
    }

    fn get_mut(&mut self, split: SplitName) -> &mut Vec<Sample> {
        match split {
            SplitName::Train => &mut self.train,
            SplitName::Valid => &mut self.valid,
            SplitName::Test => &mut self.test,
        }
    }
}

/// Draws candidates in index order until `n` distinct canonical keys are
/// collected. Candidates are generated in parallel batches but accepted
/// sequentially, so the result does not depend on scheduling.
fn draw_distinct(
    gen: &SampleGenerator,
    split: SplitName,
    k: usize,
    n: usize,
    master: u64,
) -> Result<Vec<Sample>, DatasetError> {
    let max_attempts = 50 * n as u64 + 1_000;
    let mut keys = HashSet::with_capacity(n);
    let mut accepted = Vec::with_capacity(n);
    let mut next = 0u64;
    while accepted.len() < n {
        if next >= max_attempts {
            return Err(DatasetError::Exhausted { split, k, requested: n, found: accepted.len(), attempts: next });
        }
        let batch = ((n - accepted.len()) as u64 * 5 / 4 + 64).min(max_attempts - next);
        let candidates: Vec<Sample> = (next..next + batch)
            .into_par_iter()
            .map(|i| gen.generate(k, RngSeed { master, stream: stream_id(split, k, i) }))
            .collect::<Result<_, _>>()?;
        next += batch;
        for c in candidates {
            if accepted.len() == n {
                break;
            }
            if keys.insert(canonical_key(&c)?) {
                accepted.push(c);
            }
        }
    }
    Ok(accepted)
}

/// Generates, deduplicates and certifies all three splits. Sample ids run
/// from 0 within each split, ordered by k.
pub fn build_splits(plan: &SplitPlan, gen: &SampleGenerator, master: u64) -> Result<Splits, DatasetError> {
    plan.validate()?;
    let mut splits = Splits::default();
    for split in SplitName::ALL {
        let g = SampleGenerator {
            noise: plan.noisy(split).then_some(plan.noise),
            ..gen.clone()
        };
        let out = splits.get_mut(split);
        for k in plan.ks(split).iter() {
            out.extend(draw_distinct(&g, split, k, plan.per_k(split), master)?);
        }
        for (i, s) in out.iter_mut().enumerate() {
            s.id = i as u64;
        }
        let failures: Vec<_> =
            out.par_iter().map(|s| certify(s, &gen.bank)).filter(|r| !r.passed).collect();
        if !failures.is_empty() {
            return Err(DatasetError::Certification { split, failures });
        }
    }
    Ok(splits)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Summary written next to the dataset files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub plan: SplitPlan,
    pub bank_version: String,
    pub lexicon_size: usize,
    pub format: Format,
    pub counts: BTreeMap<SplitName, BTreeMap<usize, usize>>,
    /// Train-to-test and valid-to-test overlap of canonical keys.
    pub leakage: BTreeMap<String, LeakageReport>,
    pub noise_stats: BTreeMap<SplitName, NoiseStats>,
    pub files: BTreeMap<SplitName, FileEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes one file per split plus `manifest.json` into `dir`.
pub fn write_splits(
    splits: &Splits,
    plan: &SplitPlan,
    gen: &SampleGenerator,
    master: u64,
    format: Format,
    dir: &Path,
) -> Result<Manifest, DatasetError> {
    let io = |source| DatasetError::Io { path: dir.to_path_buf(), source };
    fs::create_dir_all(dir).map_err(io)?;

    let mut counts = BTreeMap::new();
    let mut stats = BTreeMap::new();
    let mut files = BTreeMap::new();
    for split in SplitName::ALL {
        let samples = splits.get(split);
        let mut per_k = BTreeMap::new();
        for s in samples {
            *per_k.entry(s.k).or_insert(0) += 1;
        }
        counts.insert(split, per_k);
        stats.insert(split, noise_stats(samples)?);

        let name = format!("{}.{}", split.as_str(), format.extension());
        let path = dir.join(&name);
        write_dataset(samples, format, &path)?;
        let bytes = fs::read(&path).map_err(|source| DatasetError::Io { path: path.clone(), source })?;
        files.insert(split, FileEntry { name, bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
    }

    let mut leaks = BTreeMap::new();
    leaks.insert("train_test".to_string(), leakage(&splits.train, &splits.test)?);
    leaks.insert("valid_test".to_string(), leakage(&splits.valid, &splits.test)?);

    let manifest = Manifest {
        seed: master,
        plan: plan.clone(),
        bank_version: gen.bank.version().to_string(),
        lexicon_size: gen.lexicon.len(),
        format,
        counts,
        leakage: leaks,
        noise_stats: stats,
        files,
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|source| DatasetError::Io { path, source })?;
    Ok(manifest)
}

pub fn build_and_write(
    plan: &SplitPlan,
    gen: &SampleGenerator,
    master: u64,
    format: Format,
    dir: &Path,
) -> Result<(Splits, Manifest), DatasetError> {
    let splits = build_splits(plan, gen, master)?;
    let manifest = write_splits(&splits, plan, gen, master, format, dir)?;
    Ok((splits, manifest))
}
