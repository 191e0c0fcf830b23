//! Dense pure states and Hermitian operators.
//!
//! Everything is stored densely; the largest Hilbert space in use is the
//! (N+1)-dimensional collective-spin sector. Units take ħ = 1.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Default tolerance on the Euclidean norm of a constructed state.
pub const NORM_TOL: f64 = 1e-9;
/// Default absolute tolerance on `|a_ij - conj(a_ji)|`.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Imaginary residue of `<s|A|s>` that is silently discarded.
const IMAG_DISCARD: f64 = 1e-10;
/// Imaginary residue of `<s|A|s>` that is treated as a non-Hermitian input.
const IMAG_REJECT: f64 = 1e-8;
/// Overlaps may exceed one by this much from rounding before clamping.
const OVERLAP_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub norm: f64,
    pub hermiticity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            norm: NORM_TOL,
            hermiticity: HERMITICITY_TOL,
        }
    }
}

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amps: DVector<C64>,
}

impl QuantumState {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        Self::with_tolerance(amps, &Tolerances::default())
    }

    pub fn with_tolerance(amps: Vec<C64>, tol: &Tolerances) -> Result<Self> {
        let amps = DVector::from_vec(amps);
        check_dim(amps.len())?;
        let norm = amps.norm();
        if !norm.is_finite() {
            return Err(Error::Numerical("non-finite amplitude".into()));
        }
        if (norm - 1.0).abs() > tol.norm {
            return Err(Error::Numerical(format!(
                "state norm {norm} differs from 1 by more than {:e}",
                tol.norm
            )));
        }
        Ok(Self { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let mut amps = DVector::from_vec(amps);
        check_dim(amps.len())?;
        let norm = amps.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numerical(format!("cannot normalize a vector of norm {norm}")));
        }
        amps.unscale_mut(norm);
        Ok(Self { amps })
    }

    /// Computational basis vector `|k>`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        check_dim(dim)?;
        if k >= dim {
            return Err(Error::Dimension { expected: dim, found: k + 1 });
        }
        let mut amps = DVector::zeros(dim);
        amps[k] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    /// Wraps an integrator output whose norm is monitored by the caller.
    pub(crate) fn from_raw(amps: DVector<C64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// Multiplies by the global phase `exp(i phi)`.
    pub fn with_phase(&self, phi: f64) -> Self {
        Self {
            amps: self.amps.map(|a| a * C64::from_polar(1.0, phi)),
        }
    }

    /// `|<k|self>|^2`.
    pub fn population(&self, k: usize) -> f64 {
        self.amps[k].norm_sqr()
    }
}

/// A dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: DMatrix<C64>,
}

impl HermitianOperator {
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        Self::with_tolerance(mat, &Tolerances::default())
    }

    pub fn with_tolerance(mat: DMatrix<C64>, tol: &Tolerances) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Dimension {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        let d = mat.nrows();
        for i in 0..d {
            for j in i..d {
                let dev = (mat[(i, j)] - mat[(j, i)].conj()).norm();
                // NaN deviations fall through here; they are caught by the
                // finiteness checks of whoever consumes the operator.
                if dev > tol.hermiticity {
                    return Err(Error::Numerical(format!(
                        "matrix is not Hermitian at ({i}, {j}): deviation {dev:e}"
                    )));
                }
            }
        }
        Ok(Self { mat })
    }

    /// Builds from a real symmetric matrix given row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let d = rows.len();
        let mat = DMatrix::from_fn(d, d, |i, j| C64::new(rows[i].get(j).copied().unwrap_or(f64::NAN), 0.0));
        Self::new(mat)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut mat = DMatrix::zeros(d, d);
        for (i, &x) in diag.iter().enumerate() {
            mat[(i, i)] = C64::new(x, 0.0);
        }
        Self { mat }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    /// Projects an arbitrary square matrix onto its Hermitian part.
    pub fn hermitian_part(mat: &DMatrix<C64>) -> Self {
        Self {
            mat: (mat + mat.adjoint()).scale(0.5),
        }
    }

    /// `sum_k c_k A_k` for real coefficients. The result is re-symmetrized so
    /// rounding never breaks Hermiticity.
    pub fn linear_combination(terms: &[(f64, &HermitianOperator)]) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::Numerical("empty linear combination".into()));
        };
        let d = first.dim();
        let mut acc = DMatrix::zeros(d, d);
        for (c, op) in terms {
            same_dim(d, op.dim())?;
            acc += op.mat.scale(*c);
        }
        Ok(Self::hermitian_part(&acc))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.mat.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&self, x: f64) -> Self {
        Self {
            mat: self.mat.scale(x),
        }
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<Self> {
        Self::linear_combination(&[(1.0, self), (1.0, other)])
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<Self> {
        Self::linear_combination(&[(1.0, self), (-1.0, other)])
    }

    /// Adds `c * I`.
    pub fn shift(&self, c: f64) -> Self {
        let mut mat = self.mat.clone();
        for i in 0..mat.nrows() {
            mat[(i, i)] += C64::new(c, 0.0);
        }
        Self { mat }
    }

    pub fn square(&self) -> Self {
        Self::hermitian_part(&(&self.mat * &self.mat))
    }

    pub fn apply(&self, s: &QuantumState) -> Result<DVector<C64>> {
        same_dim(self.dim(), s.dim())?;
        Ok(&self.mat * &s.amps)
    }

    /// `[self, other]`; anti-Hermitian, hence returned as a raw matrix.
    pub fn commutator(&self, other: &HermitianOperator) -> Result<DMatrix<C64>> {
        same_dim(self.dim(), other.dim())?;
        Ok(&self.mat * &other.mat - &other.mat * &self.mat)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Ascending eigenvalues with matching normalized eigenvectors.
    pub fn eigh(&self) -> (Vec<f64>, Vec<QuantumState>) {
        let eig = SymmetricEigen::new(self.mat.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = order
            .iter()
            .map(|&k| QuantumState::from_raw(eig.eigenvectors.column(k).into_owned()))
            .collect();
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().0
    }
}

/// `<s|op|s>`.
pub fn expectation(op: &HermitianOperator, s: &QuantumState) -> Result<f64> {
    let v = op.apply(s)?;
    let z = s.amps.dotc(&v);
    let im = z.im.abs();
    // Rounding residue grows with the operator's scale.
    let scale = 1.0_f64.max(op.max_abs() * op.dim() as f64);
    if im > IMAG_REJECT * scale {
        return Err(Error::Numerical(format!(
            "expectation value has imaginary part {:e}; operator is not Hermitian",
            z.im
        )));
    }
    if !z.re.is_finite() {
        return Err(Error::Numerical("non-finite expectation value".into()));
    }
    if im > IMAG_DISCARD * scale {
        log::debug!("discarding imaginary residue {:e} of an expectation value", z.im);
    }
    Ok(z.re)
}

/// Standard deviation `sqrt(<A^2> - <A>^2)` of `op` in the normalized state.
///
/// Evaluated as `||(A - <A>) s||`, whose square is the variance and is never
/// negative, so no cancellation between the two moments occurs.
pub fn variance_sigma(op: &HermitianOperator, s: &QuantumState) -> Result<f64> {
    let v = op.apply(s)?;
    let n2 = s.amps.norm_squared();
    let mean = s.amps.dotc(&v).re / n2;
    let centered = v - s.amps.scale(mean);
    let radicand = centered.norm_squared() / n2;
    if !radicand.is_finite() {
        return Err(Error::Numerical("non-finite variance".into()));
    }
    Ok(radicand.sqrt())
}

/// `|<a|b>|` of the normalized states, clamped into `[0, 1]`.
pub fn overlap_magnitude(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    let z = a.inner(b)?;
    let m = z.norm() / (a.norm() * b.norm());
    if !m.is_finite() {
        return Err(Error::Numerical("non-finite overlap".into()));
    }
    if m > 1.0 + OVERLAP_SLACK {
        return Err(Error::Numerical(format!("overlap {m} exceeds one")));
    }
    Ok(m.min(1.0))
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Dimension { expected: 2, found: d });
    }
    Ok(())
}

pub(crate) fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stirap_phi0(gamma: f64, beta: f64) -> QuantumState {
        QuantumState::new(vec![
            c(gamma.cos() * beta.cos(), 0.0),
            c(0.0, -gamma.sin()),
            c(-gamma.cos() * beta.sin(), 0.0),
        ])
        .unwrap()
    }

    fn proj_middle() -> HermitianOperator {
        HermitianOperator::from_real_diagonal(&[0.0, 1.0, 0.0])
    }

    #[test]
    fn rejects_unnormalized_and_tiny_states() {
        assert!(QuantumState::new(vec![c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(matches!(
            QuantumState::new(vec![c(1.0, 0.0)]),
            Err(Error::Dimension { .. })
        ));
        let s = QuantumState::normalized(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        assert!(HermitianOperator::new(m).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(HermitianOperator::new(m).is_err());
    }

    #[test]
    fn expectation_examples() {
        let s = QuantumState::normalized(vec![c(0.3, 0.1), c(-0.2, 0.7), c(0.5, 0.0)]).unwrap();
        let e = expectation(&HermitianOperator::identity(3), &s).unwrap();
        assert!((e - 1.0).abs() < 1e-14);

        let s = QuantumState::basis(3, 1).unwrap();
        assert_eq!(expectation(&proj_middle(), &s).unwrap(), 1.0);

        // |-i sin 0.3|^2
        let e = expectation(&proj_middle(), &stirap_phi0(0.3, 0.7)).unwrap();
        assert!((e - 0.3f64.sin().powi(2)).abs() < 1e-15);
        assert!((e - 0.087332).abs() < 1e-6);
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let s = QuantumState::basis(2, 0).unwrap();
        assert!(matches!(
            expectation(&HermitianOperator::identity(3), &s),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn sigma_examples() {
        let s = QuantumState::normalized(vec![c(0.4, 0.2), c(0.1, -0.3), c(0.0, 0.9)]).unwrap();
        assert!(variance_sigma(&HermitianOperator::identity(3), &s).unwrap() < 1e-15);

        // |amp_2|^2 = 0.25: two-point variance p - p^2
        let s = QuantumState::new(vec![c(0.75f64.sqrt(), 0.0), c(0.0, 0.5), c(0.0, 0.0)]).unwrap();
        let sig = variance_sigma(&proj_middle(), &s).unwrap();
        assert!((sig - 0.1875f64.sqrt()).abs() < 1e-15);
        assert!((sig - 0.433013).abs() < 1e-6);

        let eps = 0.1f64;
        let sig = variance_sigma(&proj_middle(), &stirap_phi0(eps, 0.4)).unwrap();
        assert!((sig - eps.sin() * eps.cos()).abs() < 1e-15);
        assert!((sig - 0.0993347).abs() < 1e-7);
    }

    #[test]
    fn overlap_examples() {
        let a = stirap_phi0(0.2, 0.9);
        assert!((overlap_magnitude(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let e0 = QuantumState::basis(3, 0).unwrap();
        let e2 = QuantumState::basis(3, 2).unwrap();
        assert_eq!(overlap_magnitude(&e0, &e2).unwrap(), 0.0);
        let eps = 0.1f64;
        let o = overlap_magnitude(&e0, &stirap_phi0(eps, 0.0)).unwrap();
        assert!((o - eps.cos()).abs() < 1e-15);
    }

    #[test]
    fn eigh_sorted_and_consistent() {
        let h = HermitianOperator::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let (vals, vecs) = h.eigh();
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        for (v, s) in vals.iter().zip(&vecs) {
            let r = h.apply(s).unwrap() - s.amplitudes().scale(*v);
            assert!(r.norm() < 1e-12);
        }
    }
}
