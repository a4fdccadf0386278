//! Entanglement certification: PPT test, exact and numerical range criterion,
//! combined verdicts, and Schmidt-rank growth scans.

mod alpha;
mod certify;
mod search;

pub use alpha::{alpha_decision, AlphaDecision, AlphaSolution, EMITTED_VECTOR_TOL};
pub use certify::{
    certify, local_normal_form, CertificationReport, CertifyConfig, LocalFilterSummary, Measured,
    NormalFormConfig, Verdict, WitnessSummary,
};
pub use search::{minimize_product_expectation, ProductVector, SearchConfig, SearchOutcome};

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::hilbert::{
    eigh, partial_transpose, schmidt_with_threshold, spectral::projector_deviation, CMatrix,
    DensityOperator, PureVector,
};
use crate::states::{build_psi, build_rho, CVParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PptVerdict {
    pub is_ppt: bool,
    pub min_pt_eigenvalue: f64,
    pub tolerance: f64,
}

/// Checks that `op` is a normalized positive operator.
pub(crate) fn ensure_state(op: &DensityOperator, tol: &Tolerances) -> Result<()> {
    if (op.trace() - 1.0).abs() > tol.trace.max(1e-10) {
        return Err(Error::param(format!(
            "operator trace {} is not 1",
            op.trace()
        )));
    }
    let eig = eigh(op.matrix(), tol)?;
    if eig.min() < -tol.ppt * eig.spectral_norm() {
        return Err(Error::NotAState {
            min_eigenvalue: eig.min(),
            tolerance: tol.ppt,
        });
    }
    Ok(())
}

/// Peres test: `is_ppt` iff the smallest eigenvalue of the partial transpose is `>= -tol.ppt`.
pub fn ppt_check(op: &DensityOperator, tol: &Tolerances) -> Result<PptVerdict> {
    ensure_state(op, tol)?;
    let min = eigh(partial_transpose(op).matrix(), tol)?.min();
    Ok(PptVerdict {
        is_ppt: min >= -tol.ppt,
        min_pt_eigenvalue: min,
        tolerance: tol.ppt,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeSearchResult {
    /// `min <phi chi|(I - P)|phi chi>` over all restarts, in `[0, 1]`.
    pub residual: f64,
    pub best_product: ProductVector,
    pub restarts: usize,
    pub best_restart: usize,
    pub iterations_used: usize,
    pub total_iterations: usize,
    pub converged: bool,
    pub restart_residuals: Vec<f64>,
}

fn check_projector(p: &DensityOperator, tol: &Tolerances) -> Result<()> {
    let deviation = projector_deviation(p.matrix());
    if deviation > tol.projector {
        return Err(Error::NotAProjector { deviation });
    }
    Ok(())
}

/// Numerical search for a product vector in the range of the projector `p`.
pub fn product_in_range_search(
    p: &DensityOperator,
    cfg: &SearchConfig,
    tol: &Tolerances,
) -> Result<RangeSearchResult> {
    check_projector(p, tol)?;
    let n = p.dim();
    let q = CMatrix::identity(n, n) - p.matrix();
    let out = minimize_product_expectation(&q, p.dims(), cfg, tol)?;
    Ok(RangeSearchResult {
        residual: out.value.clamp(0.0, 1.0),
        best_product: out.best,
        restarts: out.restarts,
        best_restart: out.best_restart,
        iterations_used: out.iterations_used,
        total_iterations: out.total_iterations,
        converged: out.converged,
        restart_residuals: out.restart_values.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    })
}

/// One row of a Schmidt-rank growth scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchmidtScanRow {
    pub k: usize,
    /// Schmidt rank of `Psi` truncated to `k` levels.
    pub psi_rank: usize,
    /// Schmidt rank of the leading eigenvector of the truncated mixture, when computed.
    pub rho_leading_rank: Option<usize>,
}

/// Schmidt ranks of `Psi` (and optionally of the leading eigenvector of the
/// mixture) at each truncation in `k_list`.
///
/// The mixture eigendecomposition is `k^2`-dimensional; it is skipped for
/// `k > rho_max_levels`.
pub fn schmidt_rank_scan(
    p: &CVParams,
    k_list: &[usize],
    rho_max_levels: usize,
    tol: &Tolerances,
) -> Result<Vec<SchmidtScanRow>> {
    if k_list.is_empty() {
        return Err(Error::param("empty truncation list"));
    }
    if k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("truncation list must be strictly ascending"));
    }
    if let Some(&kmax) = k_list.last() {
        if kmax > p.n {
            return Err(Error::param(format!(
                "truncation {kmax} exceeds N = {}",
                p.n
            )));
        }
    }
    k_list
        .iter()
        .map(|&k| {
            let pk = p.with_n(k)?;
            let psi_rank = schmidt_with_threshold(&build_psi(&pk), tol.rank)?.rank;
            let rho_leading_rank = if k <= rho_max_levels {
                let rho = build_rho(&pk);
                let eig = eigh(rho.matrix(), tol)?;
                let top = eig.vectors.column(eig.values.len() - 1).into_owned();
                let v = PureVector::new(top, rho.dims())?;
                Some(schmidt_with_threshold(&v, tol.rank)?.rank)
            } else {
                None
            };
            Ok(SchmidtScanRow {
                k,
                psi_rank,
                rho_leading_rank,
            })
        })
        .collect()
}
