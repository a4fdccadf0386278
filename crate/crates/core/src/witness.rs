//! Entanglement witnesses `W = Q - eps I` built from the kernel projector `Q`
//! of a state whose range holds no product vector, and the positive maps they
//! induce through the state-map correspondence.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{Tolerances, DEFAULT_SEED};
use crate::criteria::{minimize_product_expectation, Measured, SearchConfig, WitnessSummary};
use crate::error::{Error, Result};
use crate::hilbert::{
    eigh, kernel_projector, spectral::projector_deviation, CMatrix, CVector, DensityOperator,
    Dims, ExchangeDocument, PureVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessConfig {
    pub search: SearchConfig,
    /// Reported `eps_used = safety_factor * eps_found`.
    pub safety_factor: f64,
    /// Minima below this are flagged as zero.
    pub flag_threshold: f64,
    pub product_samples: usize,
    pub pure_samples: usize,
    pub sample_seed: u64,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            safety_factor: 0.9,
            flag_threshold: 1e-10,
            product_samples: 10_000,
            pure_samples: 1_000,
            sample_seed: DEFAULT_SEED ^ 0x5A5A_5A5A,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerStats {
    pub restarts: usize,
    pub best_restart: usize,
    pub total_iterations: usize,
}

/// `min <phi chi|Q|phi chi>` as found by the multistart search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    /// Zero when `flagged`.
    pub value: f64,
    /// The raw minimum was below the flag threshold.
    pub flagged: bool,
    pub raw_minimum: f64,
    pub stats: OptimizerStats,
}

pub fn epsilon_min(q: &DensityOperator, cfg: &WitnessConfig, tol: &Tolerances) -> Result<EpsilonEstimate> {
    let deviation = projector_deviation(q.matrix());
    if deviation > tol.projector {
        return Err(Error::NotAProjector { deviation });
    }
    let out = minimize_product_expectation(q.matrix(), q.dims(), &cfg.search, tol)?;
    let raw = out.value.clamp(0.0, 1.0);
    let flagged = raw < cfg.flag_threshold;
    Ok(EpsilonEstimate {
        value: if flagged { 0.0 } else { raw },
        flagged,
        raw_minimum: raw,
        stats: OptimizerStats {
            restarts: out.restarts,
            best_restart: out.best_restart,
            total_iterations: out.total_iterations,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    w: DensityOperator,
    pub epsilon_found: f64,
    pub epsilon_used: f64,
    pub kernel_rank: usize,
    pub source_id: String,
    pub stats: OptimizerStats,
}

/// Tolerance for `Tr(W rho) = -eps_used`.
const TRACE_IDENTITY_TOL: f64 = 1e-10;

pub fn build_witness(
    state: &DensityOperator,
    source_id: &str,
    cfg: &WitnessConfig,
    tol: &Tolerances,
) -> Result<Witness> {
    let state = state.normalized()?;
    let q = kernel_projector(&state, tol.rank, tol)?;
    let est = epsilon_min(&q, cfg, tol)?;
    if est.flagged {
        return Err(Error::param(format!(
            "source {source_id} has a product vector in its range (epsilon {:.3e})",
            est.raw_minimum
        )));
    }
    let eps = cfg.safety_factor * est.value;
    let n = state.dim();
    let w = q.matrix() - CMatrix::identity(n, n).scale(eps);
    let w = DensityOperator::new(w, state.dims(), tol)?;
    let tr = w.trace_product(&state);
    if (tr + eps).abs() > TRACE_IDENTITY_TOL {
        return Err(Error::Numerical(format!(
            "Tr(W rho) = {tr:e}, expected {:e}",
            -eps
        )));
    }
    Ok(Witness {
        w,
        epsilon_found: est.value,
        epsilon_used: eps,
        kernel_rank: q.trace().round() as usize,
        source_id: source_id.to_string(),
        stats: est.stats,
    })
}

fn random_unit(d: usize, rng: &mut ChaCha8Rng) -> CVector {
    let v = CVector::from_fn(d, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    v.unscale(v.norm())
}

impl Witness {
    pub fn operator(&self) -> &DensityOperator {
        &self.w
    }

    pub fn dims(&self) -> Dims {
        self.w.dims()
    }

    pub fn expectation(&self, v: &CVector) -> f64 {
        self.w.expectation(v)
    }

    /// `Tr(W rho)`.
    pub fn evaluate(&self, rho: &DensityOperator) -> Result<f64> {
        if rho.dims() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.w.dim(),
                found: rho.dim(),
            });
        }
        Ok(self.w.trace_product(rho))
    }

    /// Smallest `<v|W|v>` over `samples` seeded random unit product vectors.
    pub fn min_sampled_product(&self, samples: usize, seed: u64) -> f64 {
        let d = self.dims();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples)
            .map(|_| {
                let phi = random_unit(d.a, &mut rng);
                let chi = random_unit(d.b, &mut rng);
                self.expectation(PureVector::product(&phi, &chi).amplitudes())
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn summary(&self, state: &DensityOperator, cfg: &WitnessConfig) -> Result<WitnessSummary> {
        let tr = self.evaluate(&state.normalized()?)?;
        let min_sampled = self.min_sampled_product(cfg.product_samples, cfg.sample_seed);
        Ok(WitnessSummary {
            epsilon_found: Measured::new(self.epsilon_found, cfg.flag_threshold, "epsilon_min"),
            epsilon_used: Measured::new(self.epsilon_used, cfg.safety_factor, "build_witness"),
            trace_with_state: Measured::new(tr, TRACE_IDENTITY_TOL, "build_witness"),
            product_samples: cfg.product_samples,
            min_sampled_product_expectation: Measured::new(min_sampled, 1e-9, "witness sampling"),
            positivity: "positivity: sampled evidence".to_string(),
        })
    }

    /// Exchange document with a metadata block.
    pub fn export(&self, cfg: &WitnessConfig) -> ExchangeDocument {
        ExchangeDocument::from_operator(&self.w)
            .with_meta("kind", "witness")
            .with_meta("source", &self.source_id)
            .with_meta("epsilon_found", format!("{:.16e}", self.epsilon_found))
            .with_meta("epsilon_used", format!("{:.16e}", self.epsilon_used))
            .with_meta("safety_factor", cfg.safety_factor)
            .with_meta("kernel_rank", self.kernel_rank)
            .with_meta("restarts", self.stats.restarts)
            .with_meta("product_samples", cfg.product_samples)
    }
}

/// `Lambda(X) = Tr_A[W (X^T (x) I)]`, mapping `d_A x d_A` to `d_B x d_B` operators.
///
/// With this convention the Choi matrix `sum_ij |i><j| (x) Lambda(|i><j|)` is `W` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedMap {
    w: CMatrix,
    dims: Dims,
}

impl InducedMap {
    pub fn from_witness(w: &Witness) -> Result<Self> {
        if !(w.epsilon_used > 0.0 && w.epsilon_used < 1.0) {
            return Err(Error::param("witness epsilon must lie in (0, 1)"));
        }
        Self::from_operator(w.operator(), &Tolerances::default())
    }

    /// Rejects negative semidefinite operators, whose maps send every state to a non-positive output.
    pub fn from_operator(w: &DensityOperator, tol: &Tolerances) -> Result<Self> {
        let eig = eigh(w.matrix(), tol)?;
        if eig.max() <= 0.0 {
            return Err(Error::param("operator is negative semidefinite; induced map is not positive"));
        }
        Ok(Self {
            w: w.matrix().clone(),
            dims: w.dims(),
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        let d = self.dims;
        if x.nrows() != d.a || x.ncols() != d.a {
            return Err(Error::DimensionMismatch {
                expected: d.a,
                found: x.nrows(),
            });
        }
        Ok(CMatrix::from_fn(d.b, d.b, |b, c| {
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..d.a {
                for j in 0..d.a {
                    s += self.w[(d.flat(i, b), d.flat(j, c))] * x[(i, j)];
                }
            }
            s
        }))
    }

    /// `sum_ij |i><j| (x) Lambda(|i><j|)`, assembled from `apply`.
    pub fn choi_matrix(&self) -> CMatrix {
        let d = self.dims;
        let mut out = CMatrix::zeros(d.total(), d.total());
        for i in 0..d.a {
            for j in 0..d.a {
                let mut e = CMatrix::zeros(d.a, d.a);
                e[(i, j)] = Complex64::new(1.0, 0.0);
                let block = self.apply(&e).expect("square input of size d_A");
                for b in 0..d.b {
                    for c in 0..d.b {
                        out[(d.flat(i, b), d.flat(j, c))] = block[(b, c)];
                    }
                }
            }
        }
        out
    }

    /// Smallest output eigenvalue over `samples` seeded random pure inputs.
    pub fn min_output_eigenvalue_sampled(&self, samples: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut min = f64::INFINITY;
        for _ in 0..samples {
            let u = random_unit(self.dims.a, &mut rng);
            let out = self.apply(&(&u * u.adjoint()))?;
            let out = (&out + out.adjoint()).scale(0.5);
            min = min.min(eigh(&out, tol)?.min());
        }
        Ok(min)
    }
}
