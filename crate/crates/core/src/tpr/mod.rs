//! Tensor product representations and the TP-MANN forward pass.
//!
//! [`bind`] stores filler/role pairs as a sum of outer products and
//! [`unbind`] reads a filler back by contracting with an unbinding vector.
//! The [`model`] module builds the full encoder, recurrent memory and
//! decoder on top of the same operations. Everything here is forward-only.

pub mod check;
pub mod model;
pub mod vocab;

use ndarray::{Array, Array1, Array2, ArrayBase, ArrayView1, Data, Dimension};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TprError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("token id {token} out of range for vocabulary of {vocab}")]
    TokenOutOfRange { token: usize, vocab: usize },
    #[error("sentence of {len} tokens exceeds the maximum of {max}")]
    SentenceTooLong { len: usize, max: usize },
    #[error("empty sentence")]
    EmptySentence,
    #[error("story has no sentences")]
    EmptyStory,
    #[error("need at least one recurrent layer")]
    NoLayers,
}

fn expect_dim(what: &'static str, expected: usize, got: usize) -> Result<(), TprError> {
    if expected == got {
        Ok(())
    } else {
        Err(TprError::DimensionMismatch { what, expected, got })
    }
}

/// `M = sum_i f_i r_i^T`, shape `(filler_dim, role_dim)`.
pub fn bind(
    pairs: &[(ArrayView1<f64>, ArrayView1<f64>)],
    filler_dim: usize,
    role_dim: usize,
) -> Result<Array2<f64>, TprError> {
    let mut m = Array2::zeros((filler_dim, role_dim));
    for (f, r) in pairs {
        expect_dim("filler", filler_dim, f.len())?;
        expect_dim("role", role_dim, r.len())?;
        for (i, &fi) in f.iter().enumerate() {
            m.row_mut(i).scaled_add(fi, r);
        }
    }
    Ok(m)
}

/// `M u`: recovers `f_j` exactly when the roles are orthonormal and `u = r_j`.
pub fn unbind(m: &Array2<f64>, u: ArrayView1<f64>) -> Result<Array1<f64>, TprError> {
    expect_dim("unbinding vector", m.ncols(), u.len())?;
    Ok(m.dot(&u))
}

fn moments<'a>(values: impl Iterator<Item = &'a f64> + Clone, n: f64) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Normalizes all entries to zero mean and unit variance, without affine
/// parameters. Constant inputs (including all zeros) map to zeros.
pub fn layer_norm<S, D>(x: &ArrayBase<S, D>) -> Array<f64, D>
where
    S: Data<Elem = f64>,
    D: Dimension,
{
    let mut y = x.to_owned();
    layer_norm_inplace(&mut y);
    y
}

pub fn layer_norm_inplace<D: Dimension>(x: &mut Array<f64, D>) {
    if x.is_empty() {
        return;
    }
    let (mean, var) = moments(x.iter(), x.len() as f64);
    if var <= 0.0 {
        x.fill(0.0);
        return;
    }
    let inv = var.sqrt().recip();
    x.mapv_inplace(|v| (v - mean) * inv);
}

/// Numerically stable softmax.
pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let e = logits.mapv(|v| (v - max).exp());
    let z = e.sum();
    e / z
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array3};
    use proptest::prelude::*;

    #[test]
    fn basis_role_binding() {
        let f = array![1.0, 2.0, 3.0];
        let e1 = array![1.0, 0.0];
        let m = bind(&[(f.view(), e1.view())], 3, 2).unwrap();
        assert_eq!(m.column(0), f);
        assert!(m.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_binding_is_zero() {
        let m = bind(&[], 4, 3).unwrap();
        assert_eq!(m, Array2::<f64>::zeros((4, 3)));
    }

    #[test]
    fn binding_order_does_not_matter() {
        let fs = [array![1.0, -2.0], array![0.5, 4.0], array![3.0, 3.0]];
        let rs = [array![1.0, 0.0, 2.0], array![0.0, 1.0, -1.0], array![2.0, 2.0, 0.0]];
        let pairs: Vec<_> = fs.iter().zip(&rs).map(|(f, r)| (f.view(), r.view())).collect();
        let mut rev = pairs.clone();
        rev.reverse();
        assert_eq!(bind(&pairs, 2, 3).unwrap(), bind(&rev, 2, 3).unwrap());
    }

    #[test]
    fn dimension_checks() {
        let f = array![1.0, 2.0];
        let r = array![1.0];
        assert!(matches!(bind(&[(f.view(), r.view())], 3, 1), Err(TprError::DimensionMismatch { .. })));
        let m = Array2::<f64>::zeros((2, 3));
        assert!(matches!(unbind(&m, r.view()), Err(TprError::DimensionMismatch { .. })));
    }

    #[test]
    fn orthonormal_recovery() {
        let fs = [array![1.0, 2.0, 3.0, 4.0], array![-1.0, 0.5, 0.0, 2.0], array![7.0, -3.0, 1.0, 1.0]];
        let s = 0.5f64.sqrt();
        let rs = [array![s, s, 0.0], array![s, -s, 0.0], array![0.0, 0.0, 1.0]];
        let pairs: Vec<_> = fs.iter().zip(&rs).map(|(f, r)| (f.view(), r.view())).collect();
        let m = bind(&pairs, 4, 3).unwrap();
        let got = unbind(&m, rs[1].view()).unwrap();
        let err = (&got - &fs[1]).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
        assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn non_orthogonal_roles_mix_fillers() {
        let f1 = array![1.0, 0.0, 2.0];
        let f2 = array![0.0, 3.0, -1.0];
        let s = 0.5f64.sqrt();
        let r1 = array![1.0, 0.0];
        let r2 = array![s, s];
        let m = bind(&[(f1.view(), r1.view()), (f2.view(), r2.view())], 3, 2).unwrap();
        let got = unbind(&m, r2.view()).unwrap();
        let want = &f2 + &(&f1 * s);
        assert!((&got - &want).iter().all(|v| v.abs() < 1e-15));
        assert_eq!(unbind(&m, array![0.0, 0.0].view()).unwrap(), Array1::<f64>::zeros(3));
    }

    #[test]
    fn layer_norm_conventions() {
        let z = Array3::<f64>::zeros((2, 3, 4));
        assert_eq!(layer_norm(&z), z);
        let c = Array1::from_elem(5, 3.5);
        assert_eq!(layer_norm(&c), Array1::<f64>::zeros(5));
    }

    #[test]
    fn softmax_is_a_distribution() {
        let p = softmax(&array![1000.0, 0.0, -1000.0, 999.0]);
        assert!((p.sum() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    proptest! {
        #[test]
        fn layer_norm_standardizes(v in proptest::collection::vec(-10.0f64..10.0, 2..200)) {
            let x = Array1::from(v);
            let spread = x.fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - x.fold(f64::INFINITY, |a, &b| a.min(b));
            prop_assume!(spread > 1e-6);
            let y = layer_norm(&x);
            let n = y.len() as f64;
            let mean = y.sum() / n;
            let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() <= 1e-6);
            prop_assert!((var - 1.0).abs() <= 1e-6);
        }
    }
}
