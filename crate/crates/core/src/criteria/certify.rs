use serde::{Deserialize, Serialize};

use super::alpha::{alpha_decision, AlphaDecision};
use super::search::SearchConfig;
use super::{ensure_state, ppt_check, product_in_range_search, PptVerdict, RangeSearchResult};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::hilbert::{eigh, max_abs_diff, range_projector, CMatrix, DensityOperator, Dims};
use crate::states::{build_sigma, AlphaFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    BoundEntangledCertified,
    Inconclusive,
    Npt,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::BoundEntangledCertified => "BOUND_ENTANGLED_CERTIFIED",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Npt => "NPT",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Iterated local filtering `rho -> (rho_A^{-1/2} (x) rho_B^{-1/2}) rho (...)`
/// toward maximally mixed marginals.
///
/// Invertible local filters map product vectors to product vectors, so the
/// existence of a product vector in the range is unchanged; the filter only
/// balances the scales the numerical search sees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFormConfig {
    pub enabled: bool,
    pub max_iters: usize,
    /// Stop when `max |d * marginal - I|` is below this on both sides.
    pub tol: f64,
    /// Marginals with condition number above `1 / min_eigenvalue_ratio` are left unfiltered.
    pub min_eigenvalue_ratio: f64,
}

impl Default for NormalFormConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            max_iters: 200,
            tol: 1e-12,
            min_eigenvalue_ratio: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub tolerances: Tolerances,
    pub search: SearchConfig,
    /// Range residual above this counts as "no product vector found".
    pub entangle_margin: f64,
    pub normal_form: NormalFormConfig,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            search: SearchConfig::default(),
            entangle_margin: 1e-6,
            normal_form: NormalFormConfig::default(),
        }
    }
}

/// A reported number with the tolerance it was judged against and the operation that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub tolerance: f64,
    pub produced_by: String,
}

impl Measured {
    pub fn new(value: f64, tolerance: f64, produced_by: &str) -> Self {
        Self {
            value,
            tolerance,
            produced_by: produced_by.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFilterSummary {
    pub applied: bool,
    pub iterations: usize,
    /// Final `max |d * marginal - I|` over both sides.
    pub marginal_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub epsilon_found: Measured,
    pub epsilon_used: Measured,
    pub trace_with_state: Measured,
    pub product_samples: usize,
    pub min_sampled_product_expectation: Measured,
    pub positivity: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub tool_version: String,
    pub input: String,
    pub dims: Dims,
    pub verdict: Verdict,
    pub ppt: PptVerdict,
    pub min_pt_eigenvalue: Measured,
    pub range_residual: Measured,
    pub range_rank: usize,
    pub local_filter: LocalFilterSummary,
    pub range_search: RangeSearchResult,
    pub search_config: SearchConfig,
    pub alpha: Option<AlphaDecision>,
    pub witness: Option<WitnessSummary>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<Vec<(String, f64)>>,
}

fn inv_sqrt(m: &CMatrix, cfg: &NormalFormConfig, tol: &Tolerances) -> Result<Option<CMatrix>> {
    let eig = eigh(&(m + m.adjoint()).scale(0.5), tol)?;
    if eig.min() <= cfg.min_eigenvalue_ratio * eig.max() {
        return Ok(None);
    }
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&x| num_complex::Complex64::new(x.powf(-0.5), 0.0)),
    ));
    Ok(Some(&eig.vectors * d * eig.vectors.adjoint()))
}

fn marginal_deviation(op: &DensityOperator) -> f64 {
    let d = op.dims();
    let ia = CMatrix::identity(d.a, d.a);
    let ib = CMatrix::identity(d.b, d.b);
    max_abs_diff(&op.partial_trace_b().scale(d.a as f64), &ia)
        .max(max_abs_diff(&op.partial_trace_a().scale(d.b as f64), &ib))
}

/// Brings `op` toward the local normal form with maximally mixed marginals.
pub fn local_normal_form(
    op: &DensityOperator,
    cfg: &NormalFormConfig,
    tol: &Tolerances,
) -> Result<(DensityOperator, LocalFilterSummary)> {
    let mut cur = op.normalized()?;
    let mut dev = marginal_deviation(&cur);
    if !cfg.enabled {
        return Ok((cur, LocalFilterSummary { applied: false, iterations: 0, marginal_deviation: dev }));
    }
    let mut iterations = 0;
    while dev > cfg.tol && iterations < cfg.max_iters {
        let (Some(fa), Some(fb)) = (
            inv_sqrt(&cur.partial_trace_b(), cfg, tol)?,
            inv_sqrt(&cur.partial_trace_a(), cfg, tol)?,
        ) else {
            break;
        };
        cur = cur.local_congruence(&fa, &fb)?.normalized()?;
        iterations += 1;
        dev = marginal_deviation(&cur);
    }
    Ok((
        cur,
        LocalFilterSummary {
            applied: iterations > 0,
            iterations,
            marginal_deviation: dev,
        },
    ))
}

/// Runs the PPT test and the range-criterion search and combines them.
///
/// When `family` is given the operator must be `Sigma(family)`, and the exact
/// decision has to agree with the numerical one for a certified verdict.
pub fn certify(
    op: &DensityOperator,
    input: &str,
    family: Option<&AlphaFamily>,
    cfg: &CertifyConfig,
) -> Result<CertificationReport> {
    let tol = &cfg.tolerances;
    ensure_state(op, tol)?;
    let ppt = ppt_check(op, tol)?;

    let (filtered, local_filter) = local_normal_form(op, &cfg.normal_form, tol)?;
    let p = range_projector(&filtered, tol.rank, tol)?;
    let range_rank = p.trace().round() as usize;
    let search = product_in_range_search(&p, &cfg.search, tol)?;

    let alpha = match family {
        Some(f) => {
            let sigma = build_sigma(f);
            if sigma.dims() != op.dims() || sigma.max_abs_diff(op) > 1e-10 {
                return Err(Error::param("alpha metadata does not describe the operator"));
            }
            Some(alpha_decision(f, tol)?)
        }
        None => None,
    };

    let mut notes = vec![
        "range residual is numerical evidence from a nonconvex multistart search".to_string(),
    ];
    let found_none = search.residual > cfg.entangle_margin;
    let verdict = if !ppt.is_ppt {
        Verdict::Npt
    } else if found_none && alpha.as_ref().is_none_or(|a| a.entangled_certified) {
        if alpha.is_some() {
            notes.push("exact alpha decision confirms: no product vector in the range".to_string());
        }
        Verdict::BoundEntangledCertified
    } else {
        if found_none {
            notes.push("numerical search found no product vector but the exact decision exhibits one".to_string());
        } else {
            notes.push(
                "a product vector lies in the range; the range criterion is one-way, so no separability claim is made"
                    .to_string(),
            );
        }
        Verdict::Inconclusive
    };
    if verdict == Verdict::Inconclusive && op.dim() <= 6 {
        notes.push("for dimension <= 6 PPT is known to imply separability".to_string());
    }
    if local_filter.applied {
        notes.push(format!(
            "search ran on the locally filtered state ({} filter iterations)",
            local_filter.iterations
        ));
    }

    Ok(CertificationReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        input: input.to_string(),
        dims: op.dims(),
        verdict,
        min_pt_eigenvalue: Measured::new(ppt.min_pt_eigenvalue, ppt.tolerance, "ppt_check"),
        ppt,
        range_residual: Measured::new(search.residual, cfg.entangle_margin, "product_in_range_search"),
        range_rank,
        local_filter,
        range_search: search,
        search_config: cfg.search,
        alpha,
        witness: None,
        notes,
        timings_ms: None,
    })
}
