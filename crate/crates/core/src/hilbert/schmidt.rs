use super::{CMatrix, PureVector};
use crate::error::{Error, Result};

/// Schmidt decomposition `v = sum_k s_k |u_k> (x) |w_k>`.
#[derive(Debug, Clone)]
pub struct SchmidtData {
    /// Descending, nonnegative; `min(d_A, d_B)` entries.
    pub coefficients: Vec<f64>,
    /// Column `k` is `u_k`.
    pub left_vectors: CMatrix,
    /// Column `k` is `w_k`.
    pub right_vectors: CMatrix,
    /// Coefficients above `threshold * coefficients[0]`.
    pub rank: usize,
    pub threshold: f64,
}

impl SchmidtData {
    pub fn sum_sq(&self) -> f64 {
        self.coefficients.iter().map(|s| s * s).sum()
    }
}

/// Schmidt decomposition with the default relative rank threshold `1e-12`.
pub fn schmidt(v: &PureVector) -> Result<SchmidtData> {
    schmidt_with_threshold(v, crate::config::Tolerances::default().rank)
}

pub fn schmidt_with_threshold(v: &PureVector, threshold: f64) -> Result<SchmidtData> {
    if v.norm_sq() == 0.0 {
        return Err(Error::ZeroVector);
    }
    let c = v.coefficient_matrix();
    let svd = c.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD returned no U".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD returned no V^T".into()))?;
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let coefficients: Vec<f64> = order.iter().map(|&i| s[i]).collect();
    let left_vectors = CMatrix::from_fn(u.nrows(), order.len(), |r, k| u[(r, order[k])]);
    let right_vectors = CMatrix::from_fn(v_t.ncols(), order.len(), |r, k| v_t[(order[k], r)]);
    let cut = threshold * coefficients[0];
    let rank = coefficients.iter().filter(|&&x| x > cut).count();
    Ok(SchmidtData {
        coefficients,
        left_vectors,
        right_vectors,
        rank,
        threshold,
    })
}
