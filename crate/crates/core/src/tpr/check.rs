//! Structural and algebraic checks behind the `tpmann-check` report.

use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::model::{self, MemoryInit, ModelDims, ModelParams, TpMann, DEFAULT_LAYERS};
use super::{bind, layer_norm, unbind};

pub const PARAM_BAND: (u64, u64) = (3_400_000, 4_600_000);

#[derive(Debug, Clone, Serialize)]
pub struct CheckConfig {
    pub dims: ModelDims,
    pub layers: usize,
    /// Random bind/unbind instances at `(d_e, d_r)`.
    pub recovery_instances: usize,
    /// Seeds for the finiteness sweep, run at small dims.
    pub finite_seeds: usize,
    /// Sentences in the full-size forward pass.
    pub forward_m: usize,
    /// Inclusive bounds on the total parameter count, if any.
    pub param_band: Option<(u64, u64)>,
    pub seed: u64,
}

impl CheckConfig {
    pub fn paper(vocab: usize, nmax: usize) -> CheckConfig {
        CheckConfig {
            dims: ModelDims::paper(vocab, nmax),
            layers: DEFAULT_LAYERS,
            recovery_instances: 1000,
            finite_seeds: 1000,
            forward_m: 10,
            param_band: Some(PARAM_BAND),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub dims: ModelDims,
    pub vocab_size: usize,
    pub layers: usize,
    pub param_count: u64,
    pub param_count_without_memory: u64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl CheckReport {
    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn within(name: &'static str, err: f64, tol: f64, detail: String) -> CheckResult {
    CheckResult { name, passed: err.is_finite() && err <= tol, max_error: Some(err), tolerance: Some(tol), detail }
}

/// `n` orthonormal vectors of length `dim` (rows), by Gram-Schmidt applied
/// twice for stability.
pub fn orthonormal_rows<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Array2<f64> {
    assert!(n <= dim);
    let u = Uniform::new_inclusive(-1.0, 1.0);
    let mut q = Array2::<f64>::zeros((n, dim));
    let mut i = 0;
    while i < n {
        let mut v = Array1::from_shape_simple_fn(dim, || u.sample(rng));
        for _ in 0..2 {
            for j in 0..i {
                let proj = q.row(j).dot(&v);
                v.scaled_add(-proj, &q.row(j));
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm < 1e-8 {
            continue;
        }
        q.row_mut(i).assign(&(v / norm));
        i += 1;
    }
    q
}

/// Largest `|unbind(bind(pairs), r_i) - f_i|` over one random instance.
pub fn recovery_error(d_e: usize, d_r: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=d_r);
    let roles = orthonormal_rows(n, d_r, &mut rng);
    let u = Uniform::new_inclusive(-10.0, 10.0);
    let fillers = Array2::from_shape_simple_fn((n, d_e), || u.sample(&mut rng));
    let pairs: Vec<_> = fillers.rows().into_iter().zip(roles.rows()).collect();
    let m = bind(&pairs, d_e, d_r).expect("consistent dims");
    (0..n)
        .map(|i| {
            let got = unbind(&m, roles.row(i)).expect("consistent dims");
            (&got - &fillers.row(i)).iter().fold(0.0f64, |a, v| a.max(v.abs()))
        })
        .fold(0.0, f64::max)
}

fn random_story<R: Rng>(m: usize, dims: &ModelDims, rng: &mut R) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut sent = || (0..rng.gen_range(1..=dims.nmax)).map(|_| rng.gen_range(0..dims.vocab)).collect::<Vec<_>>();
    let story = (0..m).map(|_| sent()).collect();
    (story, sent())
}

fn max_abs_diff<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>, b: &ndarray::Array<f64, D>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn small_dims() -> ModelDims {
    ModelDims { d: 16, d_e: 8, d_r: 4, hidden: 16, vocab: 30, nmax: 8, trainable_memory: true }
}

fn check_recovery(cfg: &CheckConfig) -> CheckResult {
    let (d_e, d_r) = (cfg.dims.d_e, cfg.dims.d_r);
    let err = (0..cfg.recovery_instances as u64)
        .into_par_iter()
        .map(|i| recovery_error(d_e, d_r, cfg.seed ^ (i << 16)))
        .reduce(|| 0.0, f64::max);
    within("tpr-recovery", err, 1e-10, format!("{} instances at d_e={d_e}, d_r={d_r}", cfg.recovery_instances))
}

fn check_param_invariance(cfg: &CheckConfig, params: &ModelParams) -> CheckResult {
    let counts: Vec<(usize, u64)> =
        [1, 2, 4, 8].into_iter().map(|t| (t, TpMann::new(params.clone(), t).param_count())).collect();
    let formula = model::param_count(&cfg.dims);
    let passed = counts.iter().all(|&(_, c)| c == formula);
    let detail = counts.iter().map(|(t, c)| format!("T={t}: {c}")).collect::<Vec<_>>().join(", ");
    CheckResult { name: "param-invariance", passed, max_error: None, tolerance: None, detail }
}

fn check_param_band(count: u64, band: (u64, u64)) -> CheckResult {
    CheckResult {
        name: "param-band",
        passed: (band.0..=band.1).contains(&count),
        max_error: None,
        tolerance: None,
        detail: format!("{count} parameters, expected within [{}, {}]", band.0, band.1),
    }
}

fn check_forward(cfg: &CheckConfig, params: &ModelParams) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let (story, q) = random_story(cfg.forward_m, &cfg.dims, &mut rng);
    let net = TpMann::new(params.clone(), cfg.layers);
    let start = Instant::now();
    let out = net.forward(&story, &q);
    let secs = start.elapsed().as_secs_f64();
    match out {
        Ok(f) => {
            let finite = f.memory.iter().chain(f.decoded.probs.iter()).all(|v| v.is_finite());
            let err = (f.decoded.probs.sum() - 1.0).abs();
            let mut r = within("forward", err, 1e-9, format!("m={}, T={}, {secs:.3} s", cfg.forward_m, cfg.layers));
            r.passed &= finite && secs < 1.0;
            if !finite {
                r.detail.push_str(", non-finite output");
            }
            r
        }
        Err(e) => CheckResult { name: "forward", passed: false, max_error: None, tolerance: None, detail: e.to_string() },
    }
}

fn check_finite(cfg: &CheckConfig) -> CheckResult {
    let dims = small_dims();
    let bad: Vec<u64> = (0..cfg.finite_seeds as u64)
        .into_par_iter()
        .filter(|&i| {
            let seed = cfg.seed.wrapping_add(i);
            let mut p = ModelParams::init(dims, seed, MemoryInit::Zero);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = Uniform::new_inclusive(-10.0, 10.0);
            p.embeddings.mapv_inplace(|_| u.sample(&mut rng));
            p.positions.mapv_inplace(|_| u.sample(&mut rng));
            let m = rng.gen_range(1..=10);
            let (story, q) = random_story(m, &dims, &mut rng);
            match TpMann::new(p, cfg.layers).forward(&story, &q) {
                Ok(f) => !f.memory.iter().chain(f.decoded.probs.iter()).all(|v| v.is_finite()),
                Err(_) => true,
            }
        })
        .collect();
    CheckResult {
        name: "finite-outputs",
        passed: bad.is_empty(),
        max_error: None,
        tolerance: None,
        detail: format!("{} of {} seeds produced non-finite output", bad.len(), cfg.finite_seeds),
    }
}

fn check_layer_norm(cfg: &CheckConfig) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let u = Uniform::new_inclusive(-10.0, 10.0);
    let mut err = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..5000);
        let x = Array1::from_shape_simple_fn(n, || u.sample(&mut rng));
        let y = layer_norm(&x);
        let mean = y.sum() / n as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        err = err.max(mean.abs()).max((var - 1.0).abs());
    }
    within("layer-norm", err, 1e-6, "100 random vectors".into())
}

fn check_first_layer(cfg: &CheckConfig) -> CheckResult {
    let dims = small_dims();
    let p = ModelParams::init(dims, cfg.seed, MemoryInit::Zero);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(3));
    let (story, q) = random_story(6, &dims, &mut rng);
    let enc = model::encode(&story, &q, &p).expect("valid tokens");
    let ks = model::keys(&enc, &p);
    let m1 = model::memory_forward(&enc, &p, 1).expect("one layer");
    let want = layer_norm(&(model::episode_sum(&ks.tensor(1), &ks.e2) + model::episode_sum(&ks.tensor(3), &ks.e1)));
    within("first-layer", max_abs_diff(&m1, &want), 1e-10, "M_1 against LN(N_1 + N_3) with M_0 = 0".into())
}

fn check_order_invariance(cfg: &CheckConfig) -> CheckResult {
    let dims = small_dims();
    let p = ModelParams::init(dims, cfg.seed, MemoryInit::Zero);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(4));
    let (story, q) = random_story(8, &dims, &mut rng);
    let mut shuffled = story.clone();
    rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
    let run = |s: &[Vec<usize>]| model::memory_forward(&model::encode(s, &q, &p).expect("valid tokens"), &p, cfg.layers).expect("layers");
    within("order-invariance", max_abs_diff(&run(&story), &run(&shuffled)), 1e-9, "shuffled sentences".into())
}

pub fn run_checks(cfg: &CheckConfig) -> CheckReport {
    let params = ModelParams::init(cfg.dims, cfg.seed, MemoryInit::Zero);
    let param_count = params.param_count();
    let mut checks = vec![check_recovery(cfg), check_param_invariance(cfg, &params)];
    if let Some(band) = cfg.param_band {
        checks.push(check_param_band(param_count, band));
    }
    checks.push(check_forward(cfg, &params));
    checks.push(check_finite(cfg));
    checks.push(check_layer_norm(cfg));
    checks.push(check_first_layer(cfg));
    checks.push(check_order_invariance(cfg));
    let passed = checks.iter().all(|c| c.passed);
    CheckReport {
        dims: cfg.dims,
        vocab_size: cfg.dims.vocab,
        layers: cfg.layers,
        param_count,
        param_count_without_memory: model::param_count(&ModelDims { trainable_memory: false, ..cfg.dims }),
        checks,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_rows_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q = orthonormal_rows(20, 20, &mut rng);
        let g = q.dot(&q.t());
        let eye = Array2::<f64>::eye(20);
        assert!(max_abs_diff(&g, &eye) < 1e-13);
    }

    #[test]
    fn small_report_passes() {
        let cfg = CheckConfig {
            dims: ModelDims { d: 16, d_e: 10, d_r: 6, hidden: 12, vocab: 40, nmax: 9, trainable_memory: true },
            layers: 4,
            recovery_instances: 50,
            finite_seeds: 50,
            forward_m: 5,
            param_band: None,
            seed: 11,
        };
        let r = run_checks(&cfg);
        assert!(r.passed, "{r:#?}");
        assert!(r.get("param-band").is_none());
        assert_eq!(r.param_count, model::param_count(&cfg.dims));
    }
}
