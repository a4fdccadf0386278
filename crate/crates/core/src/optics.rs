//! Truncated two-mode Fock space: ladder operators, the squeezed seed, the
//! photon-number-difference projectors, the filtering operator `V` and the
//! Kerr-type phase average standing in for the number-difference delta.
//!
//! Occupations run `0..N`. Amplitudes use the same labels, `a_n = e^{-beta n}`,
//! so the vacuum sector carries the extra `n = 0` terms that the direct
//! construction (levels `1..`) does not have. [`compare_with_direct`] removes
//! that sector before comparing.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    max_abs_diff, project_local, CMatrix, CVector, DensityOperator, Dims, PureVector, ONE, ZERO,
};
use crate::states::{build_psi, build_psi_mn, build_rho, CVParams};

/// Ladder operators of both modes, embedded in the `N^2`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOps {
    pub n: usize,
    pub a_lower: CMatrix,
    pub a_raise: CMatrix,
    pub b_lower: CMatrix,
    pub b_raise: CMatrix,
}

/// Single-mode annihilation operator on `N` levels.
pub fn single_mode_lower(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| {
        if c == r + 1 {
            Complex64::new((c as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    })
}

impl ModeOps {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("Fock cutoff must be >= 1"));
        }
        let low = single_mode_lower(n);
        let id = CMatrix::identity(n, n);
        let a_lower = low.kronecker(&id);
        let b_lower = id.kronecker(&low);
        Ok(Self {
            n,
            a_raise: a_lower.adjoint(),
            b_raise: b_lower.adjoint(),
            a_lower,
            b_lower,
        })
    }

    pub fn dims(&self) -> Dims {
        Dims::square(self.n)
    }

    pub fn number_a(&self) -> CMatrix {
        &self.a_raise * &self.a_lower
    }

    pub fn number_b(&self) -> CMatrix {
        &self.b_raise * &self.b_lower
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub beta: f64,
    pub gamma: f64,
    pub k_max: usize,
    /// Ancilla phases `x_i`; their count is the number of ancilla levels `L`.
    pub phases: Vec<f64>,
}

/// `x_i = 2 pi i / L` for `i = 1..=L`.
pub fn uniform_phases(l: usize) -> Vec<f64> {
    (1..=l).map(|i| 2.0 * PI * i as f64 / l as f64).collect()
}

impl ProtocolParams {
    pub fn new(beta: f64, gamma: f64, k_max: usize, ancilla_levels: usize) -> Result<Self> {
        let p = Self {
            beta,
            gamma,
            k_max,
            phases: uniform_phases(ancilla_levels),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.gamma.is_finite() && self.gamma > 0.0 && self.gamma < self.beta) {
            return Err(Error::param(format!(
                "need 0 < gamma < beta, got beta = {}, gamma = {}",
                self.beta, self.gamma
            )));
        }
        if self.phases.is_empty() {
            return Err(Error::param("at least one ancilla level is required"));
        }
        if self.phases.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("ancilla phases must be finite"));
        }
        Ok(())
    }

    pub fn ancilla_levels(&self) -> usize {
        self.phases.len()
    }

    pub fn a(&self) -> f64 {
        (-self.beta).exp()
    }

    pub fn c(&self) -> f64 {
        (-self.gamma).exp()
    }
}

/// `exp(lambda A^dag B^dag)|0,0>` on `N` levels per mode, summed until the
/// truncated series terminates.
pub fn build_squeezed(lambda: f64, n: usize) -> Result<PureVector> {
    if !(lambda.is_finite() && lambda.abs() < 1.0) {
        return Err(Error::param(format!("need |lambda| < 1, got {lambda}")));
    }
    if n == 0 {
        return Err(Error::param("Fock cutoff must be >= 1"));
    }
    let dims = Dims::square(n);
    let mut term = CVector::zeros(dims.total());
    term[0] = ONE;
    let mut acc = term.clone();
    for k in 1..n {
        term = pair_creation(&term, dims).scale(lambda / k as f64);
        acc += &term;
    }
    PureVector::new(acc, dims)
}

/// `A^dag B^dag` applied to `v` without forming the operator.
fn pair_creation(v: &CVector, dims: Dims) -> CVector {
    let mut out = CVector::zeros(dims.total());
    for i in 0..dims.a - 1 {
        for j in 0..dims.b - 1 {
            let w = (((i + 1) * (j + 1)) as f64).sqrt();
            out[dims.flat(i + 1, j + 1)] = v[dims.flat(i, j)] * w;
        }
    }
    out
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k >= n {
        return Err(Error::param(format!("k = {k} out of range for cutoff {n}")));
    }
    Ok(())
}

/// `delta(B^dag B - A^dag A - k)`, evaluated on the number eigenbasis.
pub fn delta_k(k: usize, n: usize) -> Result<CMatrix> {
    check_k(k, n)?;
    let ops = ModeOps::new(n)?;
    let diff = ops.number_b() - ops.number_a();
    let d = ops.dims().total();
    Ok(CMatrix::from_fn(d, d, |r, c| {
        if r == c && (diff[(r, r)].re - k as f64).abs() < 0.5 {
            ONE
        } else {
            ZERO
        }
    }))
}

/// `U|n,m> = |m,n>`.
pub fn mode_swap(n: usize) -> CMatrix {
    let dims = Dims::square(n);
    let mut u = CMatrix::zeros(dims.total(), dims.total());
    for i in 0..n {
        for j in 0..n {
            u[(dims.flat(j, i), dims.flat(i, j))] = ONE;
        }
    }
    u
}

fn diag_exp(number: &CMatrix, rate: f64) -> CMatrix {
    CMatrix::from_diagonal(&number.diagonal().map(|z| Complex64::new((-rate * z.re).exp(), 0.0)))
}

/// `V = exp(-beta A^dag A - gamma B^dag B) + U exp(-(beta - gamma) B^dag B)`.
pub fn build_v(p: &ProtocolParams, n: usize) -> Result<CMatrix> {
    p.validate()?;
    let ops = ModeOps::new(n)?;
    let na = ops.number_a();
    let nb = ops.number_b();
    let first = diag_exp(&na, p.beta) * diag_exp(&nb, p.gamma);
    Ok(first + mode_swap(n) * diag_exp(&nb, p.beta - p.gamma))
}

/// `V delta_k V^dag`.
pub fn protocol_term(v: &CMatrix, k: usize, n: usize) -> Result<CMatrix> {
    Ok(v * delta_k(k, n)? * v.adjoint())
}

/// `sum_n |Psi_{n+k,n}><Psi_{n+k,n}|` in occupation labels, with
/// `Psi_{m,n} = e^{-beta n - gamma m}|n,m> + e^{-(beta-gamma) m}|m,n>`.
pub fn shifted_pair_projectors(p: &ProtocolParams, k: usize, n: usize) -> Result<CMatrix> {
    check_k(k, n)?;
    let dims = Dims::square(n);
    let mut out = CMatrix::zeros(dims.total(), dims.total());
    for lo in 0..n - k {
        let hi = lo + k;
        let mut v = CVector::zeros(dims.total());
        v[dims.flat(lo, hi)] += Complex64::new((-p.beta * lo as f64 - p.gamma * hi as f64).exp(), 0.0);
        v[dims.flat(hi, lo)] += Complex64::new((-(p.beta - p.gamma) * hi as f64).exp(), 0.0);
        out += &v * v.adjoint();
    }
    Ok(out)
}

/// Elementwise `max |V delta_k V^dag - sum_n |Psi_{n+k,n}><Psi_{n+k,n}||`.
pub fn per_k_identity_residual(p: &ProtocolParams, k: usize, n: usize) -> Result<f64> {
    let v = build_v(p, n)?;
    Ok(max_abs_diff(&protocol_term(&v, k, n)?, &shifted_pair_projectors(p, k, n)?))
}

/// `|Psi><Psi| + sum_{k=1}^{k_max} V delta_k V^dag`, trace-normalized, with
/// `Psi` the squeezed seed at `lambda = e^{-beta}`.
pub fn assemble_protocol_state(p: &ProtocolParams, n: usize) -> Result<DensityOperator> {
    p.validate()?;
    if n < 2 || p.k_max > n - 2 {
        return Err(Error::param(format!(
            "k_max = {} exceeds N - 2 for cutoff N = {n}",
            p.k_max
        )));
    }
    let v = build_v(p, n)?;
    let seed = build_squeezed(p.a(), n)?;
    let terms: Vec<CMatrix> = (1..=p.k_max)
        .into_par_iter()
        .map(|k| protocol_term(&v, k, n))
        .collect::<Result<_>>()?;
    let mut acc = seed.outer();
    for t in &terms {
        acc += t;
    }
    let acc = (&acc + acc.adjoint()).scale(0.5);
    DensityOperator::from_hermitian(acc, Dims::square(n)).normalized()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub cutoff: usize,
    pub k_max: usize,
    /// Levels of the direct construction, `N - 1`.
    pub direct_levels: usize,
    pub frobenius_distance: f64,
    pub max_abs_diff: f64,
    /// `(k, residual)` for `k = 1..=k_max`.
    pub per_k_residuals: Vec<(usize, f64)>,
    /// PT residual of the projected protocol state.
    pub projected_pt_residual: f64,
}

/// `|Psi><Psi| + sum |Psi_mn><Psi_mn|` over levels `1..=levels` restricted to
/// `m - n <= band`, trace-normalized. With `band = levels - 1` this is the full mixture.
pub fn banded_direct_state(params: &CVParams, band: usize) -> Result<DensityOperator> {
    if band + 1 >= params.n {
        return Ok(build_rho(params));
    }
    let mut acc = build_psi(params).outer();
    for lo in 1..params.n {
        for hi in lo + 1..=(lo + band).min(params.n) {
            acc += build_psi_mn(lo, hi, params)?.outer();
        }
    }
    let acc = (&acc + acc.adjoint()).scale(0.5);
    DensityOperator::from_hermitian(acc, Dims::square(params.n)).normalized()
}

/// Projects the protocol state onto occupations `1..N` of both modes and
/// compares it with the direct construction on `N - 1` levels. For
/// `k_max = N - 2` the reference is the full mixture; smaller `k_max` keeps
/// only pairs with `m - n <= k_max`.
pub fn compare_with_direct(p: &ProtocolParams, n: usize) -> Result<EquivalenceReport> {
    if n < 3 {
        return Err(Error::param(format!("comparison needs N >= 3, got {n}")));
    }
    let protocol = assemble_protocol_state(p, n)?;
    let rows: Vec<usize> = (2..=n).collect();
    let projected = project_local(&protocol, &rows, &rows)?;
    let direct = banded_direct_state(&CVParams::from_rates(p.beta, p.gamma, n - 1)?, p.k_max)?;
    let per_k_residuals = (1..=p.k_max)
        .into_par_iter()
        .map(|k| per_k_identity_residual(p, k, n).map(|r| (k, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EquivalenceReport {
        cutoff: n,
        k_max: p.k_max,
        direct_levels: n - 1,
        frobenius_distance: projected.frobenius_distance(&direct),
        max_abs_diff: projected.max_abs_diff(&direct),
        per_k_residuals,
        projected_pt_residual: projected.pt_residual(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KerrApprox {
    pub operator: CMatrix,
    /// `max |entry - delta_k entry|` over the truncated space.
    pub sup_error: f64,
    /// Basis states with `n - m + k != 0` whose entry has modulus above `1e-9`.
    pub aliased_states: usize,
}

/// Diagonal operator with entry `(1/L) sum_i exp(i x_i (n - m + k))` on `|n,m>`.
pub fn kerr_delta_approx(k: usize, phases: &[f64], n: usize) -> Result<KerrApprox> {
    if phases.is_empty() {
        return Err(Error::param("phase list is empty"));
    }
    let target = delta_k(k, n)?;
    let dims = Dims::square(n);
    let l = phases.len() as f64;
    let mut op = CMatrix::zeros(dims.total(), dims.total());
    let mut sup_error = 0.0_f64;
    let mut aliased_states = 0;
    for i in 0..n {
        for j in 0..n {
            let shift = i as f64 - j as f64 + k as f64;
            let z: Complex64 = phases
                .iter()
                .map(|&x| Complex64::from_polar(1.0, (x * shift).rem_euclid(2.0 * PI)))
                .sum::<Complex64>()
                / l;
            let f = dims.flat(i, j);
            op[(f, f)] = z;
            sup_error = sup_error.max((z - target[(f, f)]).norm());
            if shift != 0.0 && z.norm() > 1e-9 {
                aliased_states += 1;
            }
        }
    }
    Ok(KerrApprox {
        operator: op,
        sup_error,
        aliased_states,
    })
}
