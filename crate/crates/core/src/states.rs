//! State constructors: the two-mode vectors `Psi`, `Psi_mn`, the mixture `rho`,
//! the finite family `Sigma(alpha)`, the local filter linking them, and the
//! trivial direct-sum construction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, CVector, DensityOperator, Dims, PureVector};

/// Geometric amplitudes `a_n = a^n`, `c_n = c^n` on levels `1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CVParams {
    pub a: f64,
    pub c: f64,
    /// Fock truncation per mode (levels `1..=n`).
    pub n: usize,
}

impl CVParams {
    pub fn new(a: f64, c: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && c.is_finite() && 0.0 < a && a < c && c < 1.0) {
            return Err(Error::param(format!(
                "need 0 < a < c < 1, got a = {a}, c = {c}"
            )));
        }
        if n < 2 {
            return Err(Error::param(format!("truncation N must be >= 2, got {n}")));
        }
        Ok(Self { a, c, n })
    }

    /// `a = e^{-beta}`, `c = e^{-gamma}` with `0 < gamma < beta`.
    pub fn from_rates(beta: f64, gamma: f64, n: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma < beta) {
            return Err(Error::param(format!(
                "need 0 < gamma < beta, got beta = {beta}, gamma = {gamma}"
            )));
        }
        Self::new((-beta).exp(), (-gamma).exp(), n)
    }

    pub fn sequences(&self) -> AmplitudeSequences {
        let pow = |x: f64| (1..=self.n).map(|k| Complex64::new(x.powi(k as i32), 0.0)).collect();
        AmplitudeSequences {
            a: pow(self.a),
            c: pow(self.c),
        }
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.a, self.c, n)
    }
}

/// General (possibly complex) amplitude sequences `a_1..a_N`, `c_1..c_N`.
///
/// Requires nonzero `a_n` and `0 < |c_{n+1}| < |c_n| < 1`. Partial-transpose
/// invariance of the resulting mixture holds only for real `c_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSequences {
    pub a: Vec<Complex64>,
    pub c: Vec<Complex64>,
}

impl AmplitudeSequences {
    pub fn new(a: Vec<Complex64>, c: Vec<Complex64>) -> Result<Self> {
        if a.is_empty() || a.len() != c.len() {
            return Err(Error::param("a and c sequences must be nonempty and equally long"));
        }
        if a.iter().any(|z| z.norm() == 0.0 || !z.norm().is_finite()) {
            return Err(Error::param("a_n must be finite and nonzero"));
        }
        let mods: Vec<f64> = c.iter().map(|z| z.norm()).collect();
        if mods[0] >= 1.0 || mods.iter().any(|&m| !(m > 0.0)) || mods.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::param("need 0 < |c_(n+1)| < |c_n| < 1"));
        }
        Ok(Self { a, c })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// `sum_n a_n |n, n>` on `N x N`, unnormalized.
pub fn build_psi_general(seq: &AmplitudeSequences) -> PureVector {
    let n = seq.len();
    let dims = Dims::square(n);
    let mut amps = CVector::zeros(dims.total());
    for (k, &a) in seq.a.iter().enumerate() {
        amps[dims.flat(k, k)] = a;
    }
    PureVector::new(amps, dims).expect("finite amplitudes")
}

/// `c_m a_n |n, m> + c_m^{-1} a_m |m, n>` for `1 <= n < m <= N`.
pub fn build_psi_mn_general(n: usize, m: usize, seq: &AmplitudeSequences) -> Result<PureVector> {
    let len = seq.len();
    if !(1 <= n && n < m && m <= len) {
        return Err(Error::param(format!(
            "need 1 <= n < m <= {len}, got n = {n}, m = {m}"
        )));
    }
    let dims = Dims::square(len);
    let mut amps = CVector::zeros(dims.total());
    for (i, j, z) in psi_mn_entries(n, m, seq) {
        amps[dims.flat(i, j)] = z;
    }
    PureVector::new(amps, dims)
}

/// Nonzero entries of `Psi_mn` as 0-based `(i, j, amplitude)`.
fn psi_mn_entries(n: usize, m: usize, seq: &AmplitudeSequences) -> [(usize, usize, Complex64); 2] {
    let (an, am, cm) = (seq.a[n - 1], seq.a[m - 1], seq.c[m - 1]);
    [(n - 1, m - 1, cm * an), (m - 1, n - 1, am / cm)]
}

/// Adds `|v><v|` for a sparse `v`, keeping the result exactly Hermitian.
fn add_outer(acc: &mut CMatrix, entries: &[(usize, Complex64)]) {
    for &(r, x) in entries {
        for &(c, y) in entries {
            acc[(r, c)] += x * y.conj();
        }
    }
}

/// `|Psi><Psi| + sum_{n<m} |Psi_mn><Psi_mn|`, unnormalized.
pub fn rho_matrix_general(seq: &AmplitudeSequences) -> CMatrix {
    let len = seq.len();
    let dims = Dims::square(len);
    let mut acc = CMatrix::zeros(dims.total(), dims.total());
    let psi: Vec<(usize, Complex64)> = seq
        .a
        .iter()
        .enumerate()
        .map(|(k, &a)| (dims.flat(k, k), a))
        .collect();
    add_outer(&mut acc, &psi);
    for n in 1..=len {
        for m in n + 1..=len {
            let e = psi_mn_entries(n, m, seq).map(|(i, j, z)| (dims.flat(i, j), z));
            add_outer(&mut acc, &e);
        }
    }
    acc
}

/// Trace-normalized mixture for general sequences.
pub fn build_rho_general(seq: &AmplitudeSequences) -> DensityOperator {
    let dims = Dims::square(seq.len());
    DensityOperator::from_hermitian(rho_matrix_general(seq), dims)
        .normalized()
        .expect("a_n nonzero gives positive trace")
}

pub fn build_psi(p: &CVParams) -> PureVector {
    build_psi_general(&p.sequences())
}

pub fn build_psi_mn(n: usize, m: usize, p: &CVParams) -> Result<PureVector> {
    build_psi_mn_general(n, m, &p.sequences())
}

/// The truncated mixture, normalized by the truncated `A_N`.
pub fn build_rho(p: &CVParams) -> DensityOperator {
    build_rho_general(&p.sequences())
}

/// Truncated sums behind the normalization `A`, with tail bounds and the
/// reference closed form for the pair sum reported side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBreakdown {
    pub n: usize,
    /// `q_N = sum_{n<=N} a^{2n}`.
    pub psi_norm_sq: f64,
    /// `sum_{1<=n<m<=N} ||Psi_mn||^2`.
    pub pair_sum: f64,
    /// `A_N = psi_norm_sq + pair_sum`.
    pub a_total: f64,
    /// `a^4 c^4 / ((1-c^2)(1-a^2 c^2)) + a^6 / ((c^2-a^2)(c^2-a^4))`, evaluated
    /// verbatim; `None` when a denominator vanishes or changes sign.
    pub reference_closed_form: Option<f64>,
    /// Closed form of the infinite pair sum from direct geometric summation:
    /// `a^2 c^4 / ((1-c^2)(1-a^2 c^2)) + a^4 / (c^2-a^2)^2`.
    pub pair_sum_limit: f64,
    /// `q = a^2 / (1 - a^2)`.
    pub psi_norm_sq_limit: f64,
    /// Upper bound on `A - A_N` from geometric majorants.
    pub tail_bound: f64,
    pub note: String,
}

const DISCREPANCY_NOTE: &str = "reference_closed_form is reported as given and is not used; \
direct summation over 1 <= n < m gives pair_sum_limit = a^2 c^4/((1-c^2)(1-a^2 c^2)) + a^4/(c^2-a^2)^2, \
which differs from the reference expression; the truncated double sum is authoritative";

pub fn normalization(p: &CVParams) -> NormalizationBreakdown {
    let (a2, c2) = (p.a * p.a, p.c * p.c);
    let mut psi = 0.0;
    for n in 1..=p.n {
        psi += a2.powi(n as i32);
    }
    let mut pair = 0.0;
    for m in 2..=p.n {
        let cm = c2.powi(m as i32);
        let am = a2.powi(m as i32);
        for n in 1..m {
            pair += cm * a2.powi(n as i32) + am / cm;
        }
    }

    let d1 = (1.0 - c2) * (1.0 - a2 * c2);
    let d2 = (c2 - a2) * (c2 - a2 * a2);
    let reference_closed_form = (d1 > 0.0 && d2 > 0.0)
        .then(|| a2 * a2 * c2 * c2 / d1 + a2 * a2 * a2 / d2);

    let r = a2 / c2;
    let pair_sum_limit = a2 * c2 * c2 / d1 + a2 * a2 / ((c2 - a2) * (c2 - a2));
    let psi_norm_sq_limit = a2 / (1.0 - a2);

    let nn = p.n as f64;
    let np1 = (p.n + 1) as i32;
    let psi_tail = a2.powi(np1) / (1.0 - a2);
    // pairs with m > N: c^{2m} sum_{n<m} a^{2n} <= c^{2m} a^2/(1-a^2)
    let first_tail = a2 / (1.0 - a2) * c2.powi(np1) / (1.0 - c2);
    // sum_{m>N} (m-1) r^m
    let second_tail = r.powi(np1) * (nn * (1.0 - r) + r) / ((1.0 - r) * (1.0 - r));

    NormalizationBreakdown {
        n: p.n,
        psi_norm_sq: psi,
        pair_sum: pair,
        a_total: psi + pair,
        reference_closed_form,
        pair_sum_limit,
        psi_norm_sq_limit,
        tail_bound: psi_tail + first_tail + second_tail,
        note: DISCREPANCY_NOTE.to_string(),
    }
}

/// Coefficients `alpha_2..alpha_K` of `Sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaFamily {
    k: usize,
    alphas: Vec<f64>,
}

impl AlphaFamily {
    pub fn new(k: usize, alphas: Vec<f64>) -> Result<Self> {
        if k < 2 {
            return Err(Error::param(format!("K must be >= 2, got {k}")));
        }
        if alphas.len() != k - 1 {
            return Err(Error::param(format!(
                "K = {k} needs {} alphas, got {}",
                k - 1,
                alphas.len()
            )));
        }
        if let Some(x) = alphas.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::param(format!("alphas must be finite and > 0, got {x}")));
        }
        Ok(Self { k, alphas })
    }

    pub fn from_alphas(alphas: Vec<f64>) -> Result<Self> {
        Self::new(alphas.len() + 1, alphas)
    }

    /// All `alpha_m = 2`, `K = 3`.
    pub fn choi() -> Self {
        Self {
            k: 3,
            alphas: vec![2.0, 2.0],
        }
    }

    /// `alpha_m = c^{n_m}` for ascending rows `n_1 < ... < n_K`.
    pub fn from_rows(p: &CVParams, rows: &[usize]) -> Result<Self> {
        check_ascending(rows, p.n)?;
        Self::from_alphas(rows[1..].iter().map(|&r| p.c.powi(r as i32)).collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// `alpha_m` for `m` in `2..=K`.
    pub fn alpha(&self, m: usize) -> f64 {
        self.alphas[m - 2]
    }

    /// `K + sum_m (m-1)(alpha_m^2 + alpha_m^{-2})`.
    pub fn trace_formula(&self) -> f64 {
        self.k as f64
            + (2..=self.k)
                .map(|m| {
                    let x = self.alpha(m);
                    (m - 1) as f64 * (x * x + 1.0 / (x * x))
                })
                .sum::<f64>()
    }
}

fn check_ascending(rows: &[usize], n: usize) -> Result<()> {
    if rows.is_empty() || rows[0] == 0 || rows.windows(2).any(|w| w[1] <= w[0]) || rows[rows.len() - 1] > n {
        return Err(Error::param(format!(
            "rows must be strictly ascending levels within 1..={n}, got {rows:?}"
        )));
    }
    Ok(())
}

/// Unnormalized `Sigma = |Phi><Phi| + sum_{n<m} |Phi_mn><Phi_mn|`.
pub fn sigma_matrix(f: &AlphaFamily) -> CMatrix {
    let k = f.k;
    let dims = Dims::square(k);
    let mut acc = CMatrix::zeros(dims.total(), dims.total());
    let one = Complex64::new(1.0, 0.0);
    let phi: Vec<(usize, Complex64)> = (0..k).map(|i| (dims.flat(i, i), one)).collect();
    add_outer(&mut acc, &phi);
    for n in 1..=k {
        for m in n + 1..=k {
            let x = f.alpha(m);
            add_outer(
                &mut acc,
                &[
                    (dims.flat(n - 1, m - 1), Complex64::new(x, 0.0)),
                    (dims.flat(m - 1, n - 1), Complex64::new(1.0 / x, 0.0)),
                ],
            );
        }
    }
    acc
}

/// Trace-normalized `Sigma(alpha)`.
pub fn build_sigma(f: &AlphaFamily) -> DensityOperator {
    DensityOperator::from_hermitian(sigma_matrix(f), Dims::square(f.k))
        .normalized()
        .expect("Sigma has positive trace")
}

/// `Sigma(K = 3, alpha = (2, 2))`, normalized.
pub fn build_choi() -> DensityOperator {
    build_sigma(&AlphaFamily::choi())
}

/// `(D (x) I) op (D (x) I)` for a real diagonal `D` on side A, renormalized.
pub fn apply_diagonal_filter(op: &DensityOperator, weights_a: &[f64]) -> Result<DensityOperator> {
    let d = op.dims();
    if weights_a.len() != d.a {
        return Err(Error::DimensionMismatch {
            expected: d.a,
            found: weights_a.len(),
        });
    }
    let m = CMatrix::from_fn(d.total(), d.total(), |r, c| {
        op.matrix()[(r, c)] * (weights_a[r / d.b] * weights_a[c / d.b])
    });
    DensityOperator::from_hermitian(m, d).normalized()
}

/// Maps the locally projected mixture onto `Sigma(alpha_m = c^{n_m})` by the
/// filter `diag(a_{n_1}^{-1}, ..., a_{n_K}^{-1})` on side A.
///
/// `rows` are the ascending levels used for both sides of the projection.
pub fn filter_to_sigma(
    rho_projected: &DensityOperator,
    p: &CVParams,
    rows: &[usize],
) -> Result<DensityOperator> {
    check_ascending(rows, p.n)?;
    let k = rows.len();
    if rho_projected.dims() != Dims::square(k) {
        return Err(Error::DimensionMismatch {
            expected: k * k,
            found: rho_projected.dim(),
        });
    }
    let weights: Vec<f64> = rows.iter().map(|&r| p.a.powi(-(r as i32))).collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::param("filter weight a_n^{-1} overflows"));
    }
    apply_diagonal_filter(rho_projected, &weights)
}

fn check_probs(probs: &[f64], tol: &Tolerances) -> Result<()> {
    if probs.is_empty() || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::param("probabilities must be nonempty and nonnegative"));
    }
    let s: f64 = probs.iter().sum();
    if (s - 1.0).abs() > tol.trace {
        return Err(Error::param(format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

/// `sum_n p_n sigma_n` with copies of `block` on consecutive disjoint windows.
///
/// Copy `n` (0-based) occupies levels `n*d_A .. (n+1)*d_A` on side A and likewise on B.
pub fn build_direct_sum(block: &DensityOperator, probs: &[f64], tol: &Tolerances) -> Result<DensityOperator> {
    let d = block.dims();
    let offsets: Vec<(usize, usize)> = (0..probs.len()).map(|n| (n * d.a, n * d.b)).collect();
    let outer = Dims::new(d.a * probs.len(), d.b * probs.len());
    build_direct_sum_at(block, probs, &offsets, outer, tol)
}

/// Direct sum with explicit 0-based window offsets `(offset_A, offset_B)` per copy.
pub fn build_direct_sum_at(
    block: &DensityOperator,
    probs: &[f64],
    offsets: &[(usize, usize)],
    outer: Dims,
    tol: &Tolerances,
) -> Result<DensityOperator> {
    check_probs(probs, tol)?;
    if offsets.len() != probs.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.len(),
            found: offsets.len(),
        });
    }
    let d = block.dims();
    for (side, pick, width) in [('A', 0usize, d.a), ('B', 1, d.b)] {
        let mut starts: Vec<usize> = offsets.iter().map(|o| if pick == 0 { o.0 } else { o.1 }).collect();
        starts.sort_unstable();
        if starts.windows(2).any(|w| w[1] < w[0] + width) {
            return Err(Error::OverlappingWindows { side });
        }
    }
    let block = block.normalized()?;
    let mut acc = CMatrix::zeros(outer.total(), outer.total());
    for (&p, &(oa, ob)) in probs.iter().zip(offsets) {
        acc += block.embed(oa, ob, outer)?.matrix().scale(p);
    }
    DensityOperator::new(acc, outer, tol)?.normalized()
}

/// True when every pair of components has orthogonal marginal supports on both sides.
pub fn locally_orthogonal(parts: &[DensityOperator], tol: &Tolerances) -> Result<bool> {
    let marginals: Vec<(CMatrix, CMatrix)> = parts
        .iter()
        .map(|p| (p.partial_trace_b(), p.partial_trace_a()))
        .collect();
    let overlap = |x: &CMatrix, y: &CMatrix| (x * y).trace().norm();
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            let scale_a = marginals[i].0.trace().norm() * marginals[j].0.trace().norm();
            let scale_b = marginals[i].1.trace().norm() * marginals[j].1.trace().norm();
            if overlap(&marginals[i].0, &marginals[j].0) > tol.rank * scale_a
                || overlap(&marginals[i].1, &marginals[j].1) > tol.rank * scale_b
            {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
