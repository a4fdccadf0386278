//! Truncated two-mode Hilbert space.
//!
//! Local levels are labelled 1-based at the public surface ([`BasisIndex`])
//! and stored 0-based. Flat indices are row-major with the A index major:
//! `flat = (n - 1) * d_B + (m - 1)`.

mod exchange;
mod schmidt;
pub(crate) mod spectral;

pub use exchange::{read_operator, write_operator, ExchangeDocument};
pub use schmidt::{schmidt, schmidt_with_threshold, SchmidtData};
pub use spectral::{eigh, kernel_projector, min_eigenvalue, range_projector, Spectrum};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Local dimensions `(d_A, d_B)` of a bipartite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub a: usize,
    pub b: usize,
}

impl Dims {
    pub fn new(a: usize, b: usize) -> Self {
        Self { a, b }
    }

    pub fn square(d: usize) -> Self {
        Self { a: d, b: d }
    }

    pub fn total(&self) -> usize {
        self.a * self.b
    }

    #[inline]
    pub(crate) fn flat(&self, i: usize, j: usize) -> usize {
        i * self.b + j
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.a == 0 || self.b == 0 {
            return Err(Error::param("local dimensions must be positive"));
        }
        if self.total() != n {
            return Err(Error::DimensionMismatch {
                expected: self.total(),
                found: n,
            });
        }
        Ok(())
    }
}

/// Product basis label `|n, m>` with 1-based local levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisIndex {
    pub n: usize,
    pub m: usize,
}

impl BasisIndex {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    pub fn flat(&self, dims: Dims) -> Result<usize> {
        if self.n == 0 || self.m == 0 || self.n > dims.a || self.m > dims.b {
            return Err(Error::param(format!(
                "basis label |{}, {}> outside 1..={} x 1..={}",
                self.n, self.m, dims.a, dims.b
            )));
        }
        Ok((self.n - 1) * dims.b + (self.m - 1))
    }

    pub fn from_flat(flat: usize, dims: Dims) -> Result<Self> {
        if flat >= dims.total() {
            return Err(Error::param(format!("flat index {flat} >= {}", dims.total())));
        }
        Ok(Self {
            n: flat / dims.b + 1,
            m: flat % dims.b + 1,
        })
    }
}

/// Amplitudes over the product basis; not necessarily normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PureVector {
    amplitudes: CVector,
    dims: Dims,
}

impl PureVector {
    pub fn new(amplitudes: CVector, dims: Dims) -> Result<Self> {
        dims.check(amplitudes.len())?;
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("amplitudes must be finite"));
        }
        Ok(Self { amplitudes, dims })
    }

    pub fn zeros(dims: Dims) -> Self {
        Self {
            amplitudes: CVector::zeros(dims.total()),
            dims,
        }
    }

    pub fn basis(index: BasisIndex, dims: Dims) -> Result<Self> {
        let mut v = Self::zeros(dims);
        v.amplitudes[index.flat(dims)?] = ONE;
        Ok(v)
    }

    /// `phi (x) chi`.
    pub fn product(phi: &CVector, chi: &CVector) -> Self {
        let dims = Dims::new(phi.len(), chi.len());
        let amplitudes = CVector::from_fn(dims.total(), |k, _| phi[k / dims.b] * chi[k % dims.b]);
        Self { amplitudes, dims }
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn amplitude(&self, index: BasisIndex) -> Result<Complex64> {
        Ok(self.amplitudes[index.flat(self.dims)?])
    }

    #[cfg(test)]
    pub(crate) fn set(&mut self, index: BasisIndex, value: Complex64) -> Result<()> {
        let k = index.flat(self.dims)?;
        self.amplitudes[k] = value;
        Ok(())
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sq().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Self {
            amplitudes: self.amplitudes.unscale(norm),
            dims: self.dims,
        })
    }

    /// `|v><v|` without normalization.
    pub fn outer(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    /// `d_A x d_B` coefficient matrix `C[n][m] = <n, m|v>`.
    pub fn coefficient_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.dims.a, self.dims.b, |i, j| {
            self.amplitudes[self.dims.flat(i, j)]
        })
    }
}

/// Hermitian operator on a bipartite space, optionally trace-normalized.
///
/// Also used for projectors and witnesses, which carry `trace_normalized = false`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
    dims: Dims,
    trace_normalized: bool,
}

impl DensityOperator {
    /// Accepts a Hermitian matrix. Deviations within `tol.hermitian` are symmetrized away.
    pub fn new(matrix: CMatrix, dims: Dims, tol: &Tolerances) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        dims.check(matrix.nrows())?;
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("matrix entries must be finite"));
        }
        let deviation = hermitian_deviation(&matrix);
        let scale = matrix.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
        if deviation > tol.hermitian * scale {
            return Err(Error::NotHermitian { deviation });
        }
        let matrix = if deviation > 0.0 {
            (&matrix + matrix.adjoint()).scale(0.5)
        } else {
            matrix
        };
        Ok(Self {
            matrix,
            dims,
            trace_normalized: false,
        })
    }

    /// Accepts a Hermitian matrix and divides it by its trace.
    pub fn new_state(matrix: CMatrix, dims: Dims, tol: &Tolerances) -> Result<Self> {
        Self::new(matrix, dims, tol)?.normalized()
    }

    /// Constructor for matrices that are Hermitian by construction.
    pub(crate) fn from_hermitian(matrix: CMatrix, dims: Dims) -> Self {
        debug_assert_eq!(matrix.nrows(), dims.total());
        debug_assert!(hermitian_deviation(&matrix) == 0.0);
        Self {
            matrix,
            dims,
            trace_normalized: false,
        }
    }

    /// `|v><v| / <v|v>`.
    pub fn from_pure(v: &PureVector) -> Result<Self> {
        let v = v.normalized()?;
        Self::from_hermitian(v.outer(), v.dims).normalized()
    }

    pub fn identity(dims: Dims) -> Self {
        Self::from_hermitian(CMatrix::identity(dims.total(), dims.total()), dims)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.total()
    }

    pub fn is_trace_normalized(&self) -> bool {
        self.trace_normalized
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::ZeroTrace);
        }
        Ok(Self {
            matrix: self.matrix.unscale(t),
            dims: self.dims,
            trace_normalized: true,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale(factor),
            dims: self.dims,
            trace_normalized: false,
        }
    }

    pub fn entry(&self, row: BasisIndex, col: BasisIndex) -> Result<Complex64> {
        Ok(self.matrix[(row.flat(self.dims)?, col.flat(self.dims)?)])
    }

    /// `<v|op|v>` (real part; exact for Hermitian operators).
    pub fn expectation(&self, v: &CVector) -> f64 {
        (v.adjoint() * &self.matrix * v)[(0, 0)].re
    }

    /// `Tr(self * other)`.
    pub fn trace_product(&self, other: &DensityOperator) -> f64 {
        // Tr(AB) = sum_ij A_ij B_ji
        self.matrix
            .iter()
            .zip(other.matrix.transpose().iter())
            .map(|(x, y)| (x * y).re)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &DensityOperator) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }

    pub fn frobenius_distance(&self, other: &DensityOperator) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    /// Max elementwise `|op - op^{T_B}|`.
    pub fn pt_residual(&self) -> f64 {
        self.max_abs_diff(&partial_transpose(self))
    }

    /// `Tr_B`, a `d_A x d_A` matrix.
    pub fn partial_trace_b(&self) -> CMatrix {
        let d = self.dims;
        CMatrix::from_fn(d.a, d.a, |i, j| {
            (0..d.b).map(|k| self.matrix[(d.flat(i, k), d.flat(j, k))]).sum()
        })
    }

    /// `Tr_A`, a `d_B x d_B` matrix.
    pub fn partial_trace_a(&self) -> CMatrix {
        let d = self.dims;
        CMatrix::from_fn(d.b, d.b, |i, j| {
            (0..d.a).map(|k| self.matrix[(d.flat(k, i), d.flat(k, j))]).sum()
        })
    }

    /// `(F_A (x) F_B) op (F_A (x) F_B)^dagger`, not renormalized.
    pub fn local_congruence(&self, fa: &CMatrix, fb: &CMatrix) -> Result<Self> {
        let d = self.dims;
        if fa.ncols() != d.a || fb.ncols() != d.b {
            return Err(Error::DimensionMismatch {
                expected: d.total(),
                found: fa.ncols() * fb.ncols(),
            });
        }
        let f = fa.kronecker(fb);
        let m = &f * &self.matrix * f.adjoint();
        let m = (&m + m.adjoint()).scale(0.5);
        Ok(Self {
            matrix: m,
            dims: Dims::new(fa.nrows(), fb.nrows()),
            trace_normalized: false,
        })
    }

    /// Places this operator at local offsets inside a larger bipartite space.
    pub fn embed(&self, offset_a: usize, offset_b: usize, outer: Dims) -> Result<Self> {
        let d = self.dims;
        if offset_a + d.a > outer.a || offset_b + d.b > outer.b {
            return Err(Error::param(format!(
                "block {}x{} at ({offset_a}, {offset_b}) does not fit in {}x{}",
                d.a, d.b, outer.a, outer.b
            )));
        }
        let mut m = CMatrix::zeros(outer.total(), outer.total());
        let map = |k: usize| outer.flat(k / d.b + offset_a, k % d.b + offset_b);
        for r in 0..d.total() {
            for c in 0..d.total() {
                m[(map(r), map(c))] = self.matrix[(r, c)];
            }
        }
        Ok(Self {
            matrix: m,
            dims: outer,
            trace_normalized: false,
        })
    }
}

pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub(crate) fn max_abs_diff(x: &CMatrix, y: &CMatrix) -> f64 {
    x.iter()
        .zip(y.iter())
        .fold(0.0_f64, |acc, (p, q)| acc.max((p - q).norm()))
}

/// Raw partial transpose on the B factor: `out[(m,mu),(n,nu)] = in[(m,nu),(n,mu)]`.
pub fn partial_transpose_matrix(matrix: &CMatrix, dims: Dims) -> Result<CMatrix> {
    if !matrix.is_square() {
        return Err(Error::DimensionMismatch {
            expected: matrix.nrows(),
            found: matrix.ncols(),
        });
    }
    dims.check(matrix.nrows())?;
    let (da, db) = (dims.a, dims.b);
    let mut out = CMatrix::zeros(matrix.nrows(), matrix.ncols());
    for m in 0..da {
        for mu in 0..db {
            for n in 0..da {
                for nu in 0..db {
                    out[(m * db + mu, n * db + nu)] = matrix[(m * db + nu, n * db + mu)];
                }
            }
        }
    }
    Ok(out)
}

/// Partial transpose on subsystem B. Preserves trace and Hermiticity.
pub fn partial_transpose(op: &DensityOperator) -> DensityOperator {
    let matrix = partial_transpose_matrix(&op.matrix, op.dims)
        .expect("DensityOperator dims are validated at construction");
    DensityOperator {
        matrix,
        dims: op.dims,
        trace_normalized: op.trace_normalized,
    }
}

fn check_rows(rows: &[usize], d: usize, side: char) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::param(format!("row set on side {side} is empty")));
    }
    let mut seen = vec![false; d];
    for &r in rows {
        if r == 0 || r > d {
            return Err(Error::param(format!(
                "level {r} on side {side} outside 1..={d}"
            )));
        }
        if std::mem::replace(&mut seen[r - 1], true) {
            return Err(Error::param(format!("level {r} repeated on side {side}")));
        }
    }
    Ok(())
}

/// Local projective measurement onto `span{|rows_A>} (x) span{|rows_B>}` followed by
/// renormalization. Levels are 1-based; the output is re-indexed in the given order.
pub fn project_local(
    op: &DensityOperator,
    rows_a: &[usize],
    rows_b: &[usize],
) -> Result<DensityOperator> {
    let d = op.dims;
    check_rows(rows_a, d.a, 'A')?;
    check_rows(rows_b, d.b, 'B')?;
    let out = Dims::new(rows_a.len(), rows_b.len());
    let idx: Vec<usize> = rows_a
        .iter()
        .flat_map(|&i| rows_b.iter().map(move |&j| d.flat(i - 1, j - 1)))
        .collect();
    let m = CMatrix::from_fn(out.total(), out.total(), |r, c| op.matrix[(idx[r], idx[c])]);
    let projected = DensityOperator {
        matrix: m,
        dims: out,
        trace_normalized: false,
    };
    let t = projected.trace();
    if !(t > 0.0) {
        return Err(Error::ZeroTrace);
    }
    projected.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> DensityOperator {
        let d = Dims::square(2);
        let mut v = PureVector::zeros(d);
        v.set(BasisIndex::new(1, 1), c(1.0)).unwrap();
        v.set(BasisIndex::new(2, 2), c(1.0)).unwrap();
        DensityOperator::from_pure(&v).unwrap()
    }

    fn random_hermitian(dims: Dims, entries: &[(f64, f64)]) -> DensityOperator {
        let n = dims.total();
        let mut m = CMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                let (re, im) = entries[k % entries.len()];
                k += 1;
                let z = if i == j { c(re) } else { Complex64::new(re, im) };
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        DensityOperator::new(m, dims, &Tolerances::default()).unwrap()
    }

    #[test]
    fn flat_index_is_row_major_bijection() {
        let d = Dims::new(3, 4);
        let mut seen = [false; 12];
        for n in 1..=3 {
            for m in 1..=4 {
                let k = BasisIndex::new(n, m).flat(d).unwrap();
                assert_eq!(k, (n - 1) * 4 + (m - 1));
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(BasisIndex::from_flat(k, d).unwrap(), BasisIndex::new(n, m));
            }
        }
        assert!(BasisIndex::new(0, 1).flat(d).is_err());
        assert!(BasisIndex::new(4, 1).flat(d).is_err());
    }

    #[test]
    fn product_diagonal_state_is_pt_invariant() {
        let v = PureVector::basis(BasisIndex::new(1, 1), Dims::square(3)).unwrap();
        let op = DensityOperator::from_pure(&v).unwrap();
        assert_eq!(partial_transpose(&op), op);
    }

    #[test]
    fn bell_pt_is_swap_over_two() {
        let pt = partial_transpose(&bell());
        // (1/2) SWAP on 2x2
        let expected = [
            [0.5, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.5, 0.0],
            [0.0, 0.5, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.5],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((pt.matrix()[(i, j)] - c(expected[i][j])).norm() < 1e-15);
            }
        }
        let eig = eigh(pt.matrix(), &Tolerances::default()).unwrap();
        let want = [-0.5, 0.5, 0.5, 0.5];
        for (got, w) in eig.values.iter().zip(want) {
            assert!((got - w).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_mismatched_dims() {
        let m = CMatrix::identity(4, 4);
        assert!(matches!(
            partial_transpose_matrix(&m, Dims::new(2, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(DensityOperator::new(m, Dims::new(3, 3), &Tolerances::default()).is_err());
    }

    #[test]
    fn hermiticity_enforced_at_construction() {
        let tol = Tolerances::default();
        let mut m = CMatrix::identity(4, 4);
        m[(0, 1)] = Complex64::new(0.1, 1e-14);
        m[(1, 0)] = Complex64::new(0.1, 0.0);
        let op = DensityOperator::new(m.clone(), Dims::square(2), &tol).unwrap();
        assert_eq!(hermitian_deviation(op.matrix()), 0.0);
        m[(0, 1)] = Complex64::new(0.1, 1e-6);
        assert!(matches!(
            DensityOperator::new(m, Dims::square(2), &tol),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn full_projection_is_identity_map() {
        let op = bell();
        let p = project_local(&op, &[1, 2], &[1, 2]).unwrap();
        assert!(p.max_abs_diff(&op) < 1e-15);
    }

    #[test]
    fn projection_errors() {
        let op = bell();
        assert!(project_local(&op, &[], &[1]).is_err());
        assert!(project_local(&op, &[3], &[1]).is_err());
        assert!(project_local(&op, &[1, 1], &[1]).is_err());
        // |1,2> carries no weight in the Bell state
        assert!(matches!(
            project_local(&op, &[1], &[2]),
            Err(Error::ZeroTrace)
        ));
    }

    #[test]
    fn diagonal_state_projection_stays_pt_invariant() {
        let d = Dims::square(4);
        let diag: Vec<Complex64> = (0..16).map(|k| c(1.0 + k as f64)).collect();
        let op = DensityOperator::new(
            CMatrix::from_diagonal(&CVector::from_vec(diag)),
            d,
            &Tolerances::default(),
        )
        .unwrap()
        .normalized()
        .unwrap();
        let p = project_local(&op, &[4, 2], &[1, 3, 4]).unwrap();
        assert_eq!(p.pt_residual(), 0.0);
    }

    #[test]
    fn partial_traces_of_bell_are_maximally_mixed() {
        let op = bell();
        let half = CMatrix::identity(2, 2).scale(0.5);
        assert!(max_abs_diff(&op.partial_trace_a(), &half) < 1e-15);
        assert!(max_abs_diff(&op.partial_trace_b(), &half) < 1e-15);
    }

    #[test]
    fn embed_places_block() {
        let op = bell();
        let e = op.embed(2, 2, Dims::square(4)).unwrap();
        assert!((e.entry(BasisIndex::new(3, 3), BasisIndex::new(4, 4)).unwrap() - c(0.5)).norm() < 1e-15);
        assert!((e.trace() - 1.0).abs() < 1e-15);
        assert!(op.embed(3, 0, Dims::square(4)).is_err());
    }

    proptest! {
        #[test]
        fn pt_is_involution_preserving_trace_and_hermiticity(
            da in 1usize..4, db in 1usize..4,
            entries in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..80)
        ) {
            let op = random_hermitian(Dims::new(da, db), &entries);
            let pt = partial_transpose(&op);
            prop_assert_eq!(&partial_transpose(&pt), &op);
            prop_assert!((pt.trace() - op.trace()).abs() < 1e-12);
            prop_assert_eq!(hermitian_deviation(pt.matrix()), 0.0);
        }
    }
}
