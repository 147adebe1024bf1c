//! Thin helpers over nalgebra's symmetric/Hermitian eigensolver.
//!
//! Matrix functions (exp, log, sqrt) are always evaluated through a spectral
//! decomposition of a Hermitian argument, never through power series.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

const MAX_SWEEPS_PER_DIM: usize = 200;

/// Eigenpairs sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct Spectrum<T: nalgebra::Scalar> {
    pub values: Vec<f64>,
    pub vectors: DMatrix<T>,
}

fn condition_report<T>(m: &DMatrix<T>, herm: f64, diag: impl Iterator<Item = f64>) -> Error
where
    T: nalgebra::ComplexField<RealField = f64>,
{
    let (diag_min, diag_max) = diag.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
        (lo.min(d), hi.max(d))
    });
    Error::EigenFailure {
        dim: m.nrows(),
        max_abs: m.iter().map(|z| z.clone().abs()).fold(0.0, f64::max),
        hermiticity: herm,
        diag_min,
        diag_max,
    }
}

fn sort_descending<T: nalgebra::Scalar + Copy>(values: &[f64], vectors: &DMatrix<T>) -> Spectrum<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let n = vectors.nrows();
    let sorted = DMatrix::from_fn(n, order.len(), |r, c| vectors[(r, order[c])]);
    Spectrum {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: sorted,
    }
}

pub fn symmetric_eigen(m: &RMatrix) -> Result<Spectrum<f64>> {
    let n = m.nrows();
    let herm = symmetry_residual(m);
    SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS_PER_DIM * n.max(1))
        .map(|e| sort_descending(e.eigenvalues.as_slice(), &e.eigenvectors))
        .ok_or_else(|| condition_report(m, herm, m.diagonal().iter().copied()))
}

pub fn hermitian_eigen(m: &CMatrix) -> Result<Spectrum<Complex64>> {
    let n = m.nrows();
    let herm = hermiticity_residual(m);
    SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS_PER_DIM * n.max(1))
        .map(|e| sort_descending(e.eigenvalues.as_slice(), &e.eigenvectors))
        .ok_or_else(|| condition_report(m, herm, m.diagonal().iter().map(|z| z.re)))
}

/// `f(A)` for Hermitian `A`.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let spec = hermitian_eigen(m)?;
    Ok(reassemble(&spec.vectors, &spec.values.iter().map(|&x| f(x)).collect::<Vec<_>>()))
}

/// `V diag(d) V†`.
pub fn reassemble(vectors: &CMatrix, diag: &[f64]) -> CMatrix {
    let mut scaled = vectors.clone();
    for (mut col, &d) in scaled.column_iter_mut().zip(diag) {
        col *= Complex64::new(d, 0.0);
    }
    scaled * vectors.adjoint()
}

/// Real and imaginary parts.
pub fn split(m: &CMatrix) -> (RMatrix, RMatrix) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

pub fn join(re: &RMatrix, im: &RMatrix) -> CMatrix {
    re.zip_map(im, Complex64::new)
}

/// `Vᵀ A V` for real `V`; real products are much faster than complex ones.
pub fn real_congruence(v: &RMatrix, a: &CMatrix) -> CMatrix {
    let (re, im) = split(a);
    let vt = v.transpose();
    join(&(&vt * re * v), &(&vt * im * v))
}

/// `V A Vᵀ` for real `V`.
pub fn real_congruence_back(v: &RMatrix, a: &CMatrix) -> CMatrix {
    let (re, im) = split(a);
    let vt = v.transpose();
    join(&(v * re * &vt), &(v * im * &vt))
}

/// `A B` through four real products.
pub fn complex_product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    join(&(&ar * &br - &ai * &bi), &(&ar * &bi + &ai * &br))
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn diag_complex(d: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        d.len(),
        d.iter().map(|&x| Complex64::new(x, 0.0)),
    ))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn symmetry_residual(m: &RMatrix) -> f64 {
    (m - m.transpose()).iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Trace norm (sum of singular values). The iteration cap turns the rare
/// non-converging SVD into an error instead of a hang.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    let n = m.nrows().max(m.ncols());
    nalgebra::SVD::try_new(m.clone(), false, false, f64::EPSILON, MAX_SWEEPS_PER_DIM * n.max(1))
        .map(|svd| svd.singular_values.iter().sum())
        .ok_or_else(|| Error::EigenFailure {
            dim: n,
            max_abs: max_abs(m),
            hermiticity: hermiticity_residual(m),
            diag_min: f64::NAN,
            diag_max: f64::NAN,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending_and_reconstructs() {
        let m = RMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let s = symmetric_eigen(&m).unwrap();
        assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
        let back = &s.vectors * RMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.values.clone()))
            * s.vectors.transpose();
        assert!((back - m).amax() < 1e-12);
    }

    #[test]
    fn exp_log_round_trip() {
        let m = to_complex(&RMatrix::from_row_slice(2, 2, &[0.7, 0.2, 0.2, 0.3]));
        let log = hermitian_function(&m, f64::ln).unwrap();
        let back = hermitian_function(&log, f64::exp).unwrap();
        assert!(max_abs(&(back - m)) < 1e-13);
    }

    #[test]
    fn trace_norm_of_unitary_is_dimension() {
        let u = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
        );
        assert!((trace_norm(&u).unwrap() - 2.0).abs() < 1e-14);
    }
}
