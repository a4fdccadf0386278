//! Exact decision of whether `Sigma(alpha)` has a product vector in its range.
//!
//! Writing a candidate as `g |Phi> + sum_{i<j} g_ij |Phi_ij> = |psi, phi>`:
//! - `g = 0` forces every `g_ij = 0`, so no nonzero product vector arises;
//! - `g != 0` forces `psi = (x_i)`, `phi = (1/x_i)` and `alpha_j^2 = (x_i/x_j)^2`
//!   for all `i < j`, solvable exactly when `alpha_j^2 = 1` for `j = 2..K-1`,
//!   with `alpha_K` free (`x_K = 1/alpha_K`).

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::search::ProductVector;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::hilbert::{range_projector, CVector, DensityOperator, Dims};
use crate::states::{build_sigma, AlphaFamily};

/// Explicit solution of the range equations when one exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSolution {
    /// `x_1..x_K` (`psi = x`, `phi = 1/x`, unnormalized).
    pub x: Vec<f64>,
    pub g: f64,
    /// `(i, j, g_ij)`, 1-based, `i < j`.
    pub g_ij: Vec<(usize, usize, f64)>,
    /// `<v|(I - P)|v> / <v|v>` for the emitted vector against the range projector of `Sigma`.
    pub range_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaDecision {
    pub k: usize,
    pub entangled_certified: bool,
    /// `j` in `2..=K-1` with `alpha_j^2 != 1`.
    pub violated_indices: BTreeSet<usize>,
    pub witness_product: Option<ProductVector>,
    pub solver_data: Option<AlphaSolution>,
}

/// Residual tolerance for the emitted product vector.
pub const EMITTED_VECTOR_TOL: f64 = 1e-10;

pub fn alpha_decision(f: &AlphaFamily, tol: &Tolerances) -> Result<AlphaDecision> {
    let k = f.k();
    let violated: BTreeSet<usize> = (2..k)
        .filter(|&j| {
            let x = f.alpha(j);
            (x * x - 1.0).abs() > tol.alpha
        })
        .collect();
    if !violated.is_empty() {
        return Ok(AlphaDecision {
            k,
            entangled_certified: true,
            violated_indices: violated,
            witness_product: None,
            solver_data: None,
        });
    }

    let mut x = vec![1.0; k];
    x[k - 1] = 1.0 / f.alpha(k);
    let mut g_ij = Vec::with_capacity(k * (k - 1) / 2);
    for i in 1..=k {
        for j in i + 1..=k {
            g_ij.push((i, j, x[i - 1] / (x[j - 1] * f.alpha(j))));
        }
    }
    let psi = CVector::from_iterator(k, x.iter().map(|&v| Complex64::new(v, 0.0)));
    let phi = CVector::from_iterator(k, x.iter().map(|&v| Complex64::new(1.0 / v, 0.0)));
    let product = ProductVector::new(&psi, &phi)?;

    let sigma = build_sigma(f);
    let p = range_projector(&sigma, tol.rank, tol)?;
    let v = product.to_vector();
    let q = DensityOperator::identity(Dims::square(k));
    let residual = (q.expectation(&v) - p.expectation(&v)) / v.norm_squared();
    if residual > EMITTED_VECTOR_TOL {
        return Err(Error::Numerical(format!(
            "emitted product vector has range residual {residual:e}"
        )));
    }
    Ok(AlphaDecision {
        k,
        entangled_certified: false,
        violated_indices: violated,
        witness_product: Some(product),
        solver_data: Some(AlphaSolution {
            x,
            g: 1.0,
            g_ij,
            range_residual: residual.max(0.0),
        }),
    })
}
