use nalgebra::SymmetricEigen;

use super::{hermitian_deviation, CMatrix, DensityOperator};
use crate::config::Tolerances;
use crate::error::{Error, Result};

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn spectral_norm(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }
}

/// Hermitian eigendecomposition. Deterministic for a given input.
pub fn eigh(matrix: &CMatrix, tol: &Tolerances) -> Result<Spectrum> {
    let n = matrix.nrows();
    if n == 0 || !matrix.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: matrix.ncols(),
        });
    }
    let scale = matrix.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
    let deviation = hermitian_deviation(matrix);
    if deviation > tol.hermitian * scale {
        return Err(Error::NotHermitian { deviation });
    }
    let eig = SymmetricEigen::try_new(matrix.clone(), tol.eig_eps, tol.eig_max_iter)
        .ok_or(Error::EigenNonConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Spectrum { values, vectors })
}

/// Smallest eigenvalue of a Hermitian operator.
pub fn min_eigenvalue(op: &DensityOperator, tol: &Tolerances) -> Result<f64> {
    Ok(eigh(op.matrix(), tol)?.min())
}

/// Orthogonal projector onto the eigenvectors with eigenvalue above `tau` times the largest.
///
/// Fails with [`Error::NotAState`] when an eigenvalue lies below `-tau` times the spectral norm.
pub fn range_projector(op: &DensityOperator, tau: f64, tol: &Tolerances) -> Result<DensityOperator> {
    let eig = eigh(op.matrix(), tol)?;
    let norm = eig.spectral_norm();
    if eig.min() < -tau * norm {
        return Err(Error::NotAState {
            min_eigenvalue: eig.min(),
            tolerance: tau,
        });
    }
    let cut = tau * eig.max();
    let keep: Vec<usize> = (0..eig.values.len())
        .filter(|&i| eig.values[i] > cut)
        .collect();
    let u = eig.vectors.select_columns(&keep);
    let p = &u * u.adjoint();
    let p = (&p + p.adjoint()).scale(0.5);
    Ok(DensityOperator::from_hermitian(p, op.dims()))
}

/// `I - range_projector(op)`.
pub fn kernel_projector(op: &DensityOperator, tau: f64, tol: &Tolerances) -> Result<DensityOperator> {
    let p = range_projector(op, tau, tol)?;
    let n = op.dim();
    let q = CMatrix::identity(n, n) - p.matrix();
    Ok(DensityOperator::from_hermitian(q, op.dims()))
}

/// Max elementwise deviation from `P^2 = P` and `P^dagger = P`.
pub(crate) fn projector_deviation(p: &CMatrix) -> f64 {
    let sq = p * p;
    super::max_abs_diff(&sq, p).max(hermitian_deviation(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{partial_transpose, BasisIndex, Dims, PureVector};
    use num_complex::Complex64;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn maximally_mixed_min_eigenvalue() {
        let op = DensityOperator::identity(Dims::square(2)).normalized().unwrap();
        assert!((min_eigenvalue(&op, &tol()).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bell_pt_min_eigenvalue() {
        let mut v = PureVector::zeros(Dims::square(2));
        v.set(BasisIndex::new(1, 1), Complex64::new(1.0, 0.0)).unwrap();
        v.set(BasisIndex::new(2, 2), Complex64::new(1.0, 0.0)).unwrap();
        let op = DensityOperator::from_pure(&v).unwrap();
        let m = min_eigenvalue(&partial_transpose(&op), &tol()).unwrap();
        assert!((m + 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(eigh(&m, &tol()), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn pure_state_range_is_itself() {
        let d = Dims::new(2, 3);
        let amps: Vec<Complex64> = (0..6)
            .map(|k| Complex64::new(0.3 * k as f64 - 0.5, 0.1 * k as f64))
            .collect();
        let v = PureVector::new(nalgebra::DVector::from_vec(amps), d).unwrap();
        let op = DensityOperator::from_pure(&v).unwrap();
        let p = range_projector(&op, 1e-12, &tol()).unwrap();
        assert!(p.max_abs_diff(&op) < 1e-14);
        assert!(projector_deviation(p.matrix()) < 1e-14);
    }

    #[test]
    fn maximally_mixed_range_is_identity() {
        let op = DensityOperator::identity(Dims::square(3)).normalized().unwrap();
        let p = range_projector(&op, 1e-12, &tol()).unwrap();
        assert!(p.max_abs_diff(&DensityOperator::identity(Dims::square(3))) < 1e-14);
        let q = kernel_projector(&op, 1e-12, &tol()).unwrap();
        assert!(q.matrix().norm() < 1e-14);
    }

    #[test]
    fn negative_operator_is_not_a_state() {
        let mut v = PureVector::zeros(Dims::square(2));
        v.set(BasisIndex::new(1, 1), Complex64::new(1.0, 0.0)).unwrap();
        v.set(BasisIndex::new(2, 2), Complex64::new(1.0, 0.0)).unwrap();
        let op = DensityOperator::from_pure(&v).unwrap();
        assert!(matches!(
            range_projector(&partial_transpose(&op), 1e-12, &tol()),
            Err(Error::NotAState { .. })
        ));
    }
}
