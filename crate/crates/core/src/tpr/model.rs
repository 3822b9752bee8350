//! TP-MANN forward pass: positional encoder, recurrent TPR memory, and the
//! multi-hop unbinding decoder.
//!
//! The memory tensor is indexed (head entity, relation, tail entity).

use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{expect_dim, layer_norm, layer_norm_inplace, softmax, TprError};

pub const DEFAULT_LAYERS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelDims {
    pub d: usize,
    pub d_e: usize,
    pub d_r: usize,
    pub hidden: usize,
    pub vocab: usize,
    pub nmax: usize,
    /// Count the initial memory as a trainable tensor.
    pub trainable_memory: bool,
}

impl ModelDims {
    /// d=256, d_e=200, d_r=80, hidden width 200.
    pub fn paper(vocab: usize, nmax: usize) -> ModelDims {
        ModelDims { d: 256, d_e: 200, d_r: 80, hidden: 200, vocab, nmax, trainable_memory: true }
    }
}

fn mlp_size(input: usize, hidden: usize, output: usize) -> u64 {
    (input * hidden + hidden + hidden * output + output) as u64
}

/// Exact number of trainable scalars for `dims`. There is no layer count
/// argument: recurrent layers share all weights.
pub fn param_count(dims: &ModelDims) -> u64 {
    let ModelDims { d, d_e, d_r, hidden, vocab, nmax, trainable_memory } = *dims;
    let mut n = (vocab * d + nmax * d + vocab * d_e) as u64;
    n += 3 * mlp_size(d, hidden, d_e); // f_e1, f_e2, f_u1
    n += 6 * mlp_size(d, hidden, d_r); // f_r1..3, f_u2..4
    if trainable_memory {
        n += (d_e * d_r * d_e) as u64;
    }
    n
}

/// One hidden ReLU layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

fn uniform<R: Rng>(shape: (usize, usize), bound: f64, rng: &mut R) -> Array2<f64> {
    let u = Uniform::new_inclusive(-bound, bound);
    Array2::from_shape_simple_fn(shape, || u.sample(rng))
}

fn uniform1<R: Rng>(n: usize, bound: f64, rng: &mut R) -> Array1<f64> {
    let u = Uniform::new_inclusive(-bound, bound);
    Array1::from_shape_simple_fn(n, || u.sample(rng))
}

impl Mlp {
    /// Weights and biases uniform in `±1/sqrt(fan_in)`.
    pub fn init<R: Rng>(input: usize, hidden: usize, output: usize, rng: &mut R) -> Mlp {
        let b_in = (input as f64).sqrt().recip();
        let b_h = (hidden as f64).sqrt().recip();
        Mlp {
            w1: uniform((hidden, input), b_in, rng),
            b1: uniform1(hidden, b_in, rng),
            w2: uniform((output, hidden), b_h, rng),
            b2: uniform1(output, b_h, rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.nrows()
    }

    /// Applies the network to every row of `x`.
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let h = (x.dot(&self.w1.t()) + &self.b1).mapv(|v| v.max(0.0));
        h.dot(&self.w2.t()) + &self.b2
    }

    pub fn forward_vec(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let h = (self.w1.dot(&x) + &self.b1).mapv(|v| v.max(0.0));
        self.w2.dot(&h) + &self.b2
    }

    pub fn len(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MemoryInit {
    Zero,
    /// Entries uniform in `±bound`.
    Uniform(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    /// `|V| x d`
    pub embeddings: Array2<f64>,
    /// `nmax x d`, row `j` is the position vector of word `j`.
    pub positions: Array2<f64>,
    pub f_e: [Mlp; 2],
    pub f_r: [Mlp; 3],
    /// `f_u[0]` outputs `d_e`, the others `d_r`.
    pub f_u: [Mlp; 4],
    /// `|V| x d_e`
    pub w_o: Array2<f64>,
    /// `M_0`, shape `(d_e, d_r, d_e)`.
    pub initial_memory: Array3<f64>,
}

impl ModelParams {
    pub fn init(dims: ModelDims, seed: u64, memory: MemoryInit) -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ModelDims { d, d_e, d_r, hidden, vocab, nmax, .. } = dims;
        let embeddings = uniform((vocab, d), 1.0, &mut rng);
        let positions = uniform((nmax, d), 1.0, &mut rng);
        let f_e = [(); 2].map(|_| Mlp::init(d, hidden, d_e, &mut rng));
        let f_r = [(); 3].map(|_| Mlp::init(d, hidden, d_r, &mut rng));
        let f_u = [d_e, d_r, d_r, d_r].map(|o| Mlp::init(d, hidden, o, &mut rng));
        let w_o = uniform((vocab, d_e), (d_e as f64).sqrt().recip(), &mut rng);
        let initial_memory = match memory {
            MemoryInit::Zero => Array3::zeros((d_e, d_r, d_e)),
            MemoryInit::Uniform(b) => {
                let u = Uniform::new_inclusive(-b, b);
                Array3::from_shape_simple_fn((d_e, d_r, d_e), || u.sample(&mut rng))
            }
        };
        ModelParams { dims, embeddings, positions, f_e, f_r, f_u, w_o, initial_memory }
    }

    /// Trainable scalars actually held by this parameter set.
    pub fn param_count(&self) -> u64 {
        let mut n = self.embeddings.len() + self.positions.len() + self.w_o.len();
        n += self.f_e.iter().chain(&self.f_r).chain(&self.f_u).map(Mlp::len).sum::<usize>();
        if self.dims.trainable_memory {
            n += self.initial_memory.len();
        }
        n as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedStory {
    /// `m x d`
    pub sentences: Array2<f64>,
    pub question: Array1<f64>,
    pub word_counts: Vec<usize>,
}

impl EncodedStory {
    pub fn m(&self) -> usize {
        self.sentences.nrows()
    }
}

fn encode_one(tokens: &[usize], p: &ModelParams) -> Result<Array1<f64>, TprError> {
    let (vocab, nmax) = (p.dims.vocab, p.dims.nmax);
    if tokens.is_empty() {
        return Err(TprError::EmptySentence);
    }
    if tokens.len() > nmax {
        return Err(TprError::SentenceTooLong { len: tokens.len(), max: nmax });
    }
    let mut acc = Array1::zeros(p.dims.d);
    for (j, &tok) in tokens.iter().enumerate() {
        if tok >= vocab {
            return Err(TprError::TokenOutOfRange { token: tok, vocab });
        }
        acc += &(&p.embeddings.row(tok) * &p.positions.row(j));
    }
    Ok(acc / tokens.len() as f64)
}

/// Position-weighted mean of word embeddings, per sentence and for the question.
pub fn encode(story: &[Vec<usize>], question: &[usize], params: &ModelParams) -> Result<EncodedStory, TprError> {
    if story.is_empty() {
        return Err(TprError::EmptyStory);
    }
    let mut sentences = Array2::zeros((story.len(), params.dims.d));
    for (i, s) in story.iter().enumerate() {
        sentences.row_mut(i).assign(&encode_one(s, params)?);
    }
    Ok(EncodedStory {
        sentences,
        question: encode_one(question, params)?,
        word_counts: story.iter().map(Vec::len).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeySet {
    pub e1: Array2<f64>,
    pub e2: Array2<f64>,
    pub r1: Array2<f64>,
    pub r2: Array2<f64>,
    pub r3: Array2<f64>,
}

fn flat_outer(e: &Array2<f64>, r: &Array2<f64>) -> Array2<f64> {
    let (m, de, dr) = (e.nrows(), e.ncols(), r.ncols());
    let mut k = Array2::zeros((m, de * dr));
    for s in 0..m {
        let r_s = r.row(s);
        let mut row = k.row_mut(s);
        for (a, &ea) in e.row(s).iter().enumerate() {
            row.slice_mut(s![a * dr..(a + 1) * dr]).assign(&(&r_s * ea));
        }
    }
    k
}

impl KeySet {
    pub fn m(&self) -> usize {
        self.e1.nrows()
    }

    /// `K_1 = E_1 (x) R_1`, `K_2 = E_1 (x) R_2`, `K_3 = E_2 (x) R_3`,
    /// flattened to `(m, d_e * d_r)`.
    pub fn flat(&self, j: usize) -> Array2<f64> {
        match j {
            1 => flat_outer(&self.e1, &self.r1),
            2 => flat_outer(&self.e1, &self.r2),
            3 => flat_outer(&self.e2, &self.r3),
            _ => panic!("key index {j} out of 1..=3"),
        }
    }

    /// `K_j` as an `(m, d_e, d_r)` tensor.
    pub fn tensor(&self, j: usize) -> Array3<f64> {
        let (m, de, dr) = (self.m(), self.e1.ncols(), self.r1.ncols());
        self.flat(j).into_shape_with_order((m, de, dr)).expect("contiguous key matrix")
    }
}

pub fn keys(enc: &EncodedStory, params: &ModelParams) -> KeySet {
    let s = enc.sentences.view();
    KeySet {
        e1: params.f_e[0].forward(s),
        e2: params.f_e[1].forward(s),
        r1: params.f_r[0].forward(s),
        r2: params.f_r[1].forward(s),
        r3: params.f_r[2].forward(s),
    }
}

fn check_memory(m: &Array3<f64>, d_e: usize, d_r: usize) -> Result<(), TprError> {
    let (a, b, c) = m.dim();
    expect_dim("memory head axis", d_e, a)?;
    expect_dim("memory relation axis", d_r, b)?;
    expect_dim("memory tail axis", d_e, c)
}

/// Adds `R[s] (x) X[s]`, flattened to `d_r * d_e`, to row `s` of `out`.
fn add_outer_rows(out: &mut ndarray::ArrayViewMut2<f64>, r: &Array2<f64>, x: &Array2<f64>) {
    let de = x.ncols();
    for (s, mut row) in out.rows_mut().into_iter().enumerate() {
        let xs = x.row(s);
        for (b, &rb) in r.row(s).iter().enumerate() {
            row.slice_mut(s![b * de..(b + 1) * de]).scaled_add(rb, &xs);
        }
    }
}

/// Row `s` of the result is `sum_b R[s,b] A[s,b,:]` with `A[s]` viewed as `(d_r, d_e)`.
fn contract_rel(a: ndarray::ArrayView2<f64>, r: &Array2<f64>) -> Array2<f64> {
    let (m, dr) = r.dim();
    let de = a.ncols() / dr;
    let mut out = Array2::zeros((m, de));
    for s in 0..m {
        let rows = a.row(s).into_shape_with_order((dr, de)).expect("contiguous row");
        out.row_mut(s).assign(&r.row(s).dot(&rows));
    }
    out
}

/// One recurrent layer. `P_j = K_j . M` and the episode sums
/// `sum_s K_j[s] (x) X[s]` are evaluated through the entity factors:
/// with `E = [E_1; E_2]` stacked, `E . M` gives every pseudo-entity after
/// a contraction with the relation rows, and the whole update is a single
/// product `E^T Z`.
pub fn memory_step(m: &Array3<f64>, keys: &KeySet) -> Result<Array3<f64>, TprError> {
    check_memory(m, keys.e1.ncols(), keys.r1.ncols())?;
    Ok(step_owned(m.as_standard_layout().into_owned(), keys))
}

fn step_owned(m: Array3<f64>, keys: &KeySet) -> Array3<f64> {
    let (d_e, d_r) = (keys.e1.ncols(), keys.r1.ncols());
    let n = keys.m();
    let dim = m.raw_dim();
    let e = ndarray::concatenate(Axis(0), &[keys.e1.view(), keys.e2.view()]).expect("same width");
    let mut y = m.into_shape_with_order((d_e, d_r * d_e)).expect("standard layout");
    let a = e.dot(&y);
    let (a1, a2) = a.view().split_at(Axis(0), n);
    let p1 = contract_rel(a1, &keys.r1);
    let p2 = contract_rel(a1, &keys.r2);
    let p3 = contract_rel(a2, &keys.r3);
    let mut z = Array2::zeros((2 * n, d_r * d_e));
    {
        let (mut z1, mut z3) = z.view_mut().split_at(Axis(0), n);
        add_outer_rows(&mut z1, &keys.r1, &(&keys.e2 - &p1));
        add_outer_rows(&mut z1, &keys.r2, &(&p1 - &p2));
        add_outer_rows(&mut z3, &keys.r3, &(&keys.e1 - &p3));
    }
    ndarray::linalg::general_mat_mul(1.0, &e.t(), &z, 1.0, &mut y);
    let mut next = y.into_shape_with_order(dim).expect("standard layout");
    layer_norm_inplace(&mut next);
    next
}

pub fn memory_forward(enc: &EncodedStory, params: &ModelParams, layers: usize) -> Result<Array3<f64>, TprError> {
    if layers == 0 {
        return Err(TprError::NoLayers);
    }
    expect_dim("sentence encoding", params.dims.d, enc.sentences.ncols())?;
    let ks = keys(enc, params);
    check_memory(&params.initial_memory, params.dims.d_e, params.dims.d_r)?;
    let mut m = params.initial_memory.as_standard_layout().into_owned();
    for _ in 0..layers {
        m = step_owned(m, &ks);
    }
    Ok(m)
}

/// `LN(M . v) . u`: unbind the head axis with `v`, normalize, then unbind
/// the relation axis with `u`. The result lives in tail-entity space.
pub fn retrieve(m: &Array3<f64>, v: ArrayView1<f64>, u: ArrayView1<f64>) -> Result<Array1<f64>, TprError> {
    let (d_e, d_r, d_t) = m.dim();
    expect_dim("head unbinding vector", d_e, v.len())?;
    expect_dim("relation unbinding vector", d_r, u.len())?;
    let m2 = m.as_standard_layout();
    let m2 = m2.view().into_shape_with_order((d_e, d_r * d_t)).expect("standard layout");
    let x = v.dot(&m2).into_shape_with_order((d_r, d_t)).expect("contiguous");
    Ok(u.dot(&layer_norm(&x)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub retrieved: [Array1<f64>; 3],
    pub probs: Array1<f64>,
}

pub fn decode(m: &Array3<f64>, question: ArrayView1<f64>, params: &ModelParams) -> Result<Decoded, TprError> {
    let ModelDims { d, d_e, d_r, .. } = params.dims;
    expect_dim("question encoding", d, question.len())?;
    check_memory(m, d_e, d_r)?;
    let u: [Array1<f64>; 4] = [0, 1, 2, 3].map(|j| params.f_u[j].forward_vec(question));
    let i1 = retrieve(m, u[0].view(), u[1].view())?;
    let i2 = retrieve(m, i1.view(), u[2].view())?;
    let i3 = retrieve(m, i2.view(), u[3].view())?;
    let sum = &i1 + &i2 + &i3;
    let probs = softmax(&params.w_o.dot(&sum));
    Ok(Decoded { retrieved: [i1, i2, i3], probs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub memory: Array3<f64>,
    pub decoded: Decoded,
}

/// Parameters plus a number of recurrent layers.
#[derive(Debug, Clone)]
pub struct TpMann {
    pub params: ModelParams,
    pub layers: usize,
}

impl TpMann {
    pub fn new(params: ModelParams, layers: usize) -> TpMann {
        TpMann { params, layers }
    }

    pub fn param_count(&self) -> u64 {
        self.params.param_count()
    }

    pub fn forward(&self, story: &[Vec<usize>], question: &[usize]) -> Result<Forward, TprError> {
        let enc = encode(story, question, &self.params)?;
        let memory = memory_forward(&enc, &self.params, self.layers)?;
        let decoded = decode(&memory, enc.question.view(), &self.params)?;
        Ok(Forward { memory, decoded })
    }
}

/// Sums `K_j[s] (x) X[s]` over sentences one outer product at a time.
/// Slow, used to cross-check the matrix form.
pub fn episode_sum(k: &Array3<f64>, x: &Array2<f64>) -> Array3<f64> {
    let (m, de, dr) = k.dim();
    let mut out = Array3::zeros((de, dr, x.ncols()));
    for s in 0..m {
        for a in 0..de {
            for b in 0..dr {
                let kab = k[[s, a, b]];
                out.slice_mut(s![a, b, ..]).scaled_add(kab, &x.row(s));
            }
        }
    }
    out
}

/// `P[s, c] = sum_{a,b} K[s,a,b] M[a,b,c]`, entry by entry.
pub fn pseudo_entities(k: &Array3<f64>, m: &Array3<f64>) -> Array2<f64> {
    let (n, de, dr) = k.dim();
    let mut p = Array2::zeros((n, m.len_of(Axis(2))));
    for s in 0..n {
        for a in 0..de {
            for b in 0..dr {
                p.row_mut(s).scaled_add(k[[s, a, b]], &m.slice(s![a, b, ..]));
            }
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> ModelDims {
        ModelDims { d: 4, d_e: 3, d_r: 2, hidden: 4, vocab: 10, nmax: 5, trainable_memory: true }
    }

    fn small() -> ModelDims {
        ModelDims { d: 12, d_e: 6, d_r: 4, hidden: 8, vocab: 20, nmax: 6, trainable_memory: true }
    }

    fn max_abs(a: &Array3<f64>, b: &Array3<f64>) -> f64 {
        (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn random_story(seed: u64, m: usize, dims: &ModelDims) -> (Vec<Vec<usize>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sent = || (0..rng.gen_range(1..=dims.nmax)).map(|_| rng.gen_range(0..dims.vocab)).collect::<Vec<_>>();
        let story = (0..m).map(|_| sent()).collect();
        (story, sent())
    }

    #[test]
    fn toy_param_count_by_hand() {
        // embeddings 10*4, positions 5*4, W_o 10*3,
        // three MLPs 4->4->3 of 35, six MLPs 4->4->2 of 30, memory 3*2*3
        assert_eq!(param_count(&toy()), 40 + 20 + 30 + 105 + 180 + 18);
        assert_eq!(param_count(&ModelDims { trainable_memory: false, ..toy() }), 375);
        let p = ModelParams::init(toy(), 0, MemoryInit::Zero);
        assert_eq!(p.param_count(), 393);
    }

    #[test]
    fn count_independent_of_layers() {
        let p = ModelParams::init(small(), 1, MemoryInit::Zero);
        let counts: Vec<u64> = [1, 2, 4, 8].iter().map(|&t| TpMann::new(p.clone(), t).param_count()).collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn encode_examples() {
        let mut p = ModelParams::init(small(), 2, MemoryInit::Zero);
        let enc = encode(&[vec![3]], &[4, 5], &p).unwrap();
        assert_eq!(enc.sentences.row(0), &p.embeddings.row(3) * &p.positions.row(0));

        let fwd = encode(&[vec![1, 2, 3]], &[1], &p).unwrap().sentences;
        let rev = encode(&[vec![3, 2, 1]], &[1], &p).unwrap().sentences;
        assert!((&fwd - &rev).iter().any(|v| v.abs() > 1e-6));

        p.positions.fill(1.0);
        let enc = encode(&[vec![1, 2, 3]], &[1], &p).unwrap();
        let mean = (&p.embeddings.row(1) + &p.embeddings.row(2) + p.embeddings.row(3)) / 3.0;
        assert!((&enc.sentences.row(0) - &mean).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn encode_errors() {
        let p = ModelParams::init(small(), 2, MemoryInit::Zero);
        assert_eq!(encode(&[vec![20]], &[1], &p), Err(TprError::TokenOutOfRange { token: 20, vocab: 20 }));
        assert_eq!(encode(&[vec![1; 7]], &[1], &p), Err(TprError::SentenceTooLong { len: 7, max: 6 }));
        assert_eq!(encode(&[], &[1], &p), Err(TprError::EmptyStory));
    }

    #[test]
    fn key_tensors_are_outer_products() {
        let p = ModelParams::init(small(), 3, MemoryInit::Zero);
        let (story, q) = random_story(3, 4, &p.dims);
        let ks = keys(&encode(&story, &q, &p).unwrap(), &p);
        let k2 = ks.tensor(2);
        for s in 0..4 {
            for a in 0..6 {
                for b in 0..4 {
                    assert_eq!(k2[[s, a, b]], ks.e1[[s, a]] * ks.r2[[s, b]]);
                }
            }
        }
    }

    #[test]
    fn first_layer_stores_episodes() {
        let p = ModelParams::init(small(), 4, MemoryInit::Zero);
        let (story, q) = random_story(4, 5, &p.dims);
        let enc = encode(&story, &q, &p).unwrap();
        let ks = keys(&enc, &p);
        let m1 = memory_forward(&enc, &p, 1).unwrap();
        let n1 = episode_sum(&ks.tensor(1), &ks.e2);
        let n3 = episode_sum(&ks.tensor(3), &ks.e1);
        assert!(max_abs(&m1, &layer_norm(&(n1 + n3))) < 1e-12);
    }

    #[test]
    fn matrix_form_matches_episode_sums() {
        let p = ModelParams::init(small(), 5, MemoryInit::Uniform(0.5));
        let (story, q) = random_story(5, 6, &p.dims);
        let ks = keys(&encode(&story, &q, &p).unwrap(), &p);
        let m = &p.initial_memory;
        let k: Vec<Array3<f64>> = (1..=3).map(|j| ks.tensor(j)).collect();
        let pj: Vec<Array2<f64>> = k.iter().map(|kj| pseudo_entities(kj, m)).collect();
        let naive = m + &episode_sum(&k[0], &ks.e2) + episode_sum(&k[1], &pj[0]) + episode_sum(&k[2], &ks.e1)
            - episode_sum(&k[0], &pj[0])
            - episode_sum(&k[1], &pj[1])
            - episode_sum(&k[2], &pj[2]);
        let fast = memory_step(m, &ks).unwrap();
        assert!(max_abs(&fast, &layer_norm(&naive)) < 1e-10);
    }

    #[test]
    fn sentence_order_does_not_change_memory() {
        let p = ModelParams::init(small(), 6, MemoryInit::Zero);
        let (story, q) = random_story(6, 7, &p.dims);
        let mut shuffled = story.clone();
        shuffled.rotate_left(3);
        shuffled.swap(0, 5);
        let a = memory_forward(&encode(&story, &q, &p).unwrap(), &p, 4).unwrap();
        let b = memory_forward(&encode(&shuffled, &q, &p).unwrap(), &p, 4).unwrap();
        assert!(max_abs(&a, &b) < 1e-9);
    }

    #[test]
    fn layers_change_memory_and_shape_is_fixed() {
        let p = ModelParams::init(small(), 7, MemoryInit::Zero);
        let (story, q) = random_story(7, 3, &p.dims);
        let enc = encode(&story, &q, &p).unwrap();
        let m1 = memory_forward(&enc, &p, 1).unwrap();
        let m3 = memory_forward(&enc, &p, 3).unwrap();
        assert_eq!(m3.dim(), (6, 4, 6));
        assert!(max_abs(&m1, &m3) > 1e-6);
        assert_eq!(memory_forward(&enc, &p, 0), Err(TprError::NoLayers));
        assert_eq!(memory_forward(&enc, &p, 3).unwrap(), m3);
    }

    #[test]
    fn decoder_outputs_a_distribution() {
        let p = ModelParams::init(small(), 8, MemoryInit::Zero);
        let (story, q) = random_story(8, 5, &p.dims);
        let out = TpMann::new(p.clone(), 3).forward(&story, &q).unwrap();
        assert!((out.decoded.probs.sum() - 1.0).abs() < 1e-9);
        assert!(out.decoded.probs.iter().all(|&v| v > 0.0));

        let zero = Array3::zeros((6, 4, 6));
        let qv = encode(&story, &q, &p).unwrap().question;
        let d = decode(&zero, qv.view(), &p).unwrap();
        assert!(d.retrieved.iter().all(|i| i.iter().all(|&v| v == 0.0)));
        assert!(d.probs.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn scaling_output_rows_keeps_argmax() {
        let mut p = ModelParams::init(small(), 9, MemoryInit::Zero);
        let (story, q) = random_story(9, 4, &p.dims);
        let argmax = |v: &Array1<f64>| v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let before = TpMann::new(p.clone(), 2).forward(&story, &q).unwrap().decoded.probs;
        p.w_o *= 3.0;
        let after = TpMann::new(p, 2).forward(&story, &q).unwrap().decoded.probs;
        assert_eq!(argmax(&before), argmax(&after));
        assert!((&before - &after).iter().any(|v| v.abs() > 1e-9));
    }

    #[test]
    fn decoder_dimension_checks() {
        let p = ModelParams::init(small(), 10, MemoryInit::Zero);
        let wrong = Array3::zeros((6, 5, 6));
        assert!(matches!(decode(&wrong, Array1::zeros(12).view(), &p), Err(TprError::DimensionMismatch { .. })));
        let m = Array3::zeros((6, 4, 6));
        assert!(matches!(retrieve(&m, array![1.0, 2.0].view(), Array1::zeros(4).view()), Err(TprError::DimensionMismatch { .. })));
    }
}
