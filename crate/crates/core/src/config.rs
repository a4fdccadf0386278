//! Tolerances and run configuration shared by every module.
//!
//! Thresholds live here and are passed down explicitly; call sites never
//! hard-code their own.

use serde::{Deserialize, Serialize};

use crate::criteria::SearchConfig;
use crate::states::CVParams;

/// Numerical thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max elementwise anti-Hermitian part accepted (and symmetrized away) at construction,
    /// relative to `max(1, max |entry|)`.
    pub hermitian: f64,
    /// Allowed |trace - 1| for trace-normalized operators.
    pub trace: f64,
    /// Relative threshold for counting Schmidt coefficients and range eigenvalues.
    pub rank: f64,
    /// Eigenvalues above `-ppt * spectral norm` of the partial transpose count as nonnegative.
    pub ppt: f64,
    /// Idempotence tolerance when a matrix is claimed to be a projector.
    pub projector: f64,
    /// `|alpha_j^2 - 1|` at or below this counts as equality.
    pub alpha: f64,
    /// Eigensolver convergence threshold.
    pub eig_eps: f64,
    /// Eigensolver iteration cap (0 = unlimited).
    pub eig_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            trace: 1e-12,
            rank: 1e-12,
            ppt: 1e-10,
            projector: 1e-8,
            alpha: 1e-12,
            eig_eps: f64::EPSILON,
            eig_max_iter: 10_000,
        }
    }
}

/// Fixed seed used when none is supplied.
pub const DEFAULT_SEED: u64 = 0x5EED_B0DE_C0DE_0001;

/// Everything needed to reproduce one construction + certification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub params: CVParams,
    pub tolerances: Tolerances,
    pub search: SearchConfig,
    pub seed: u64,
}

impl TruncationConfig {
    pub fn new(params: CVParams) -> Self {
        Self {
            params,
            tolerances: Tolerances::default(),
            search: SearchConfig::default(),
            seed: DEFAULT_SEED,
        }
    }
}
