//! Independent reference computations used to cross-check the production
//! paths. Each one takes a deliberately different route: dense rotations
//! instead of closed forms, fidelity finite differences instead of SLDs,
//! direct sums instead of FFTs, quadrature instead of Fourier multipliers.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::{self, CMatrix};
use crate::measurement::{wrapped_gaussian, DistributionKind, PhaseDistribution};
use crate::qfi::{build_density, DephasedDensity, NoiseSetting};
use crate::spin::{ProbeState, SpinDim};

/// `J_y` in the ascending-`m` basis.
pub fn jy_matrix(dim: SpinDim) -> CMatrix {
    let n = dim.dim();
    let j = dim.j();
    let mut jy = CMatrix::zeros(n, n);
    for k in 0..n - 1 {
        let m = dim.m(k);
        let c = (j * (j + 1.0) - m * (m + 1.0)).sqrt() / 2.0;
        // J_+ |m⟩ = c⁺|m+1⟩, J_y = (J_+ − J_−)/2i
        jy[(k + 1, k)] = Complex64::new(0.0, -c);
        jy[(k, k + 1)] = Complex64::new(0.0, c);
    }
    jy
}

/// Column `e^{−iπJ_y/2}|m'⟩`, built from the eigendecomposition of `J_y`.
pub fn rotation_column(dim: SpinDim, column: usize) -> Result<Vec<Complex64>> {
    let spec = linalg::hermitian_eigen(&jy_matrix(dim))?;
    let n = dim.dim();
    let phases: Vec<Complex64> = spec
        .values
        .iter()
        .map(|&l| Complex64::from_polar(1.0, -PI / 2.0 * l))
        .collect();
    let v = &spec.vectors;
    Ok((0..n)
        .map(|r| (0..n).map(|k| v[(r, k)] * phases[k] * v[(column, k)].conj()).sum())
        .collect())
}

/// Real profile of a rotated basis state, sign-canonicalized.
pub fn rotated_probe(dim: SpinDim, column: usize) -> Result<Vec<f64>> {
    let col = rotation_column(dim, column)?;
    let mut re: Vec<f64> = col.iter().map(|z| z.re).collect();
    crate::spin::canonicalize_sign(&mut re);
    Ok(re)
}

/// `√F(ρ, σ)` with `σ = UρU†`, as the trace norm of
/// `diag(√λ) V†UV diag(√λ)`; avoids forming matrix square roots.
fn root_fidelity_with_rotation(rho: &DephasedDensity, u_diag: &[Complex64]) -> Result<f64> {
    let eig = rho.eigensystem()?;
    let v = &eig.vectors;
    let n = v.nrows();
    let mut uv = v.clone();
    for (r, mut row) in uv.row_iter_mut().enumerate() {
        row *= u_diag[r];
    }
    let w = v.adjoint() * uv;
    // null eigenvectors contribute exact zero rows and columns; drop them
    let support: Vec<usize> = (0..n).filter(|&k| eig.values[k] > 0.0).collect();
    let s: Vec<f64> = support.iter().map(|&k| eig.values[k].sqrt()).collect();
    let r = support.len();
    let m = CMatrix::from_fn(r, r, |a, b| w[(support[a], support[b])] * (s[a] * s[b]));
    linalg::trace_norm(&m)
}

/// `F_θ ≈ 8 (1 − √F(ρ_θ, ρ_{θ+h})) / h²`.
pub fn fidelity_fd_phase_qfi(state: &ProbeState, setting: NoiseSetting, h: f64) -> Result<f64> {
    let rho = build_density(state, setting);
    let u: Vec<Complex64> = state
        .dim()
        .m_values()
        .iter()
        .map(|&m| Complex64::from_polar(1.0, -m * h))
        .collect();
    let rf = root_fidelity_with_rotation(&rho, &u)?;
    Ok(8.0 * (1.0 - rf) / (h * h))
}

/// Central finite difference of `ρ` in `Δ`.
pub fn fd_delta_derivative(state: &ProbeState, setting: NoiseSetting, h: f64) -> Result<CMatrix> {
    let up = build_density(state, NoiseSetting::new(setting.delta + h, setting.theta)?);
    let dn = build_density(state, NoiseSetting::new((setting.delta - h).max(0.0), setting.theta)?);
    let width = setting.delta + h - (setting.delta - h).max(0.0);
    Ok((up.entries() - dn.entries()) / Complex64::new(width, 0.0))
}

/// `|Σ_m φ_m e^{im δ}|² / 2π` by direct summation.
pub fn direct_phase_density(state: &ProbeState, delta: f64) -> f64 {
    let dim = state.dim();
    let s: Complex64 = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, &a)| Complex64::from_polar(a, dim.m(k) * delta))
        .sum();
    s.norm_sqr() / (2.0 * PI)
}

/// Circular convolution with a wrapped Gaussian by direct grid quadrature.
pub fn quadrature_convolution(dist: &PhaseDistribution, delta: f64) -> Result<PhaseDistribution> {
    let n = dist.len();
    let step = dist.step();
    let kernel: Vec<f64> = (0..n).map(|o| wrapped_gaussian(o as f64 * step, delta)).collect();
    let p = dist.density();
    let out: Vec<f64> = (0..n)
        .map(|g| (0..n).map(|h| p[h] * kernel[(g + n - h) % n]).sum::<f64>() * step)
        .collect();
    PhaseDistribution::from_density(out, DistributionKind::Convolved, dist.theta())
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    let (na, nb) = (x.len() as f64, y.len() as f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic p-value of the two-sample KS statistic.
pub fn ks_p_value(d: f64, na: usize, nb: usize) -> f64 {
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = f64::from(k);
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}
