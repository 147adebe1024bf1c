//! Operator forms of the dephased state: `H = −ln ρ`, the split into kinetic
//! `T` and potential `U` parts on the grid `x = m/j`, the nested-commutator
//! tanh series for the phase SLD, and the first BCH correction `H₁`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::qfi::{DephasedDensity, NoiseSetting, ZERO_THRESHOLD};
use crate::spin::ProbeState;

/// Highest order accepted by [`sld_tanh_series`].
pub const MAX_SERIES_ORDER: usize = 80;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `H = −ln ρ`; rejects rank-deficient `ρ`.
pub fn log_density(rho: &DephasedDensity) -> Result<CMatrix> {
    let eig = rho.eigensystem()?;
    let n = eig.values.len();
    let eps = ZERO_THRESHOLD * rho.trace();
    let min = eig.min_raw_eigenvalue;
    if min <= eps {
        return Err(Error::Singular {
            rank: eig.rank(),
            dim: n,
            min_eigenvalue: min,
        });
    }
    let h: Vec<f64> = eig.values.iter().map(|l| -l.ln()).collect();
    Ok(linalg::reassemble(&eig.vectors, &h))
}

/// `e^{−H}` evaluated spectrally.
pub fn exp_neg(h: &CMatrix) -> Result<CMatrix> {
    linalg::hermitian_function(h, |x| (-x).exp())
}

/// Largest minus smallest eigenvalue of a Hermitian matrix.
pub fn spectral_spread(h: &CMatrix) -> Result<f64> {
    let s = linalg::hermitian_eigen(h)?;
    Ok(s.values[0] - s.values[s.values.len() - 1])
}

/// Taylor coefficients `c_n` of `tanh(z/2) = Σ_{n≥1} c_n z^{2n−1}`.
///
/// Uses `c_n = (−1)^{n+1} 4 (4^n − 1) ζ(2n) / (2π)^{2n}`.
pub fn tanh_half_coefficients(count: usize) -> Vec<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    (1..=count)
        .map(|n| {
            let s = 2 * n as i32;
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            sign * 4.0 * (4f64.powi(n as i32) - 1.0) * zeta_even(s) / two_pi.powi(s)
        })
        .collect()
}

/// Riemann zeta at an even integer `s ≥ 2` by Euler–Maclaurin.
fn zeta_even(s: i32) -> f64 {
    const K: i32 = 100;
    let sf = f64::from(s);
    let k = f64::from(K);
    let head: f64 = (1..K).map(|i| f64::from(i).powi(-s)).sum();
    head + k.powf(1.0 - sf) / (sf - 1.0) + 0.5 * k.powi(-s) + sf * k.powi(-s - 1) / 12.0
        - sf * (sf + 1.0) * (sf + 2.0) * k.powi(-s - 3) / 720.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiagnostic {
    /// Scaled SLD residual after each retained order `1..=K`.
    pub residual_by_order: Vec<f64>,
    pub spectral_spread: f64,
    pub converged: bool,
    /// Max-norm of each series term.
    pub term_norms: Vec<f64>,
    /// Set when some term outgrew its predecessor.
    pub diverging: bool,
}

#[derive(Debug, Clone)]
pub struct SeriesSld {
    pub sld: CMatrix,
    pub diagnostic: SeriesDiagnostic,
}

/// `‖½{ρ, L} + i[J_z, ρ]‖_max / ‖[J_z, ρ]‖_max`.
pub fn sld_phase_residual(rho: &DephasedDensity, l: &CMatrix) -> f64 {
    let target = rho.theta_derivative();
    let lhs = linalg::anticommutator(rho.entries(), l) * Complex64::new(0.5, 0.0);
    let scale = linalg::max_abs(&target);
    let r = linalg::max_abs(&(lhs - &target));
    if scale > 0.0 {
        r / scale
    } else {
        r
    }
}

/// `L_θ ≈ −2i Σ_{n=1}^{K} c_n ad_H^{2n−1}(J_z)`.
///
/// Convergent only when the spectral spread of `H` is below `π`; growth of
/// successive terms is reported in the diagnostic rather than treated as an
/// error.
pub fn sld_tanh_series(rho: &DephasedDensity, order: usize) -> Result<SeriesSld> {
    if order == 0 || order > MAX_SERIES_ORDER {
        return Err(Error::InvalidArgument(format!(
            "series order must be in 1..={MAX_SERIES_ORDER}, got {order}"
        )));
    }
    let h = log_density(rho)?;
    let spread = spectral_spread(&h)?;
    let jz = linalg::to_complex(&crate::spin::jz_matrix(rho.dim()));
    let coeffs = tanh_half_coefficients(order);

    let mut ad = linalg::commutator(&h, &jz);
    let mut sld = CMatrix::zeros(jz.nrows(), jz.ncols());
    let mut residuals = Vec::with_capacity(order);
    let mut norms = Vec::with_capacity(order);
    let mut diverging = false;
    for (n, c) in coeffs.iter().enumerate() {
        if n > 0 {
            ad = linalg::commutator(&h, &linalg::commutator(&h, &ad));
        }
        let term = &ad * (I * (-2.0 * c));
        let norm = linalg::max_abs(&term);
        if let Some(&prev) = norms.last() {
            if norm > prev {
                diverging = true;
            }
        }
        norms.push(norm);
        sld += term;
        residuals.push(sld_phase_residual(rho, &sld));
    }
    let last = *residuals.last().unwrap_or(&f64::INFINITY);
    Ok(SeriesSld {
        sld,
        diagnostic: SeriesDiagnostic {
            residual_by_order: residuals,
            spectral_spread: spread,
            converged: !diverging && last.is_finite() && last < 1e-8,
            term_norms: norms,
            diverging,
        },
    })
}

/// Grid operators for a probe at effective mass `M = Δj²`.
#[derive(Debug, Clone)]
pub struct OperatorBundle {
    /// `−ln ρ`.
    pub h: CMatrix,
    /// Diagonal potential `U(x) = −ln φ²(x)` with `φ(x)² = j φ_m²`.
    pub u: Vec<f64>,
    /// `U'` on the grid (central differences, one-sided at the ends).
    pub u_prime: Vec<f64>,
    /// `U''` on the grid (second central difference, copied to the ends).
    pub u_second: Vec<f64>,
    /// `½ ln(M/2π) + P²/2M`.
    pub t_kinetic: CMatrix,
    /// Central-difference momentum `−i d/dx` with zero boundary.
    pub p_momentum: CMatrix,
    pub mass: f64,
}

fn check_profile(state: &ProbeState) -> Result<()> {
    let dim = state.dim();
    for (k, a) in state.amplitudes().iter().enumerate() {
        if *a == 0.0 || a.abs() < 1e-150 {
            return Err(Error::ZeroAmplitude { m: dim.m(k) });
        }
    }
    Ok(())
}

/// `P_{k,k+1} = −i j/2`, `P_{k+1,k} = +i j/2`.
pub fn momentum_matrix(n: usize, j: f64) -> CMatrix {
    let mut p = CMatrix::zeros(n, n);
    for k in 0..n.saturating_sub(1) {
        p[(k, k + 1)] = Complex64::new(0.0, -j / 2.0);
        p[(k + 1, k)] = Complex64::new(0.0, j / 2.0);
    }
    p
}

fn potential(state: &ProbeState) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let j = state.dim().j();
    let u: Vec<f64> = state.amplitudes().iter().map(|a| -(j * a * a).ln()).collect();
    let n = u.len();
    let mut up = vec![0.0; n];
    let mut upp = vec![0.0; n];
    if n >= 2 {
        up[0] = (u[1] - u[0]) * j;
        up[n - 1] = (u[n - 1] - u[n - 2]) * j;
    }
    for k in 1..n.saturating_sub(1) {
        up[k] = (u[k + 1] - u[k - 1]) * j / 2.0;
        upp[k] = (u[k + 1] - 2.0 * u[k] + u[k - 1]) * j * j;
    }
    if n >= 3 {
        upp[0] = upp[1];
        upp[n - 1] = upp[n - 2];
    }
    (u, up, upp)
}

pub fn operator_bundle(state: &ProbeState, setting: NoiseSetting) -> Result<OperatorBundle> {
    check_profile(state)?;
    if setting.delta <= 0.0 {
        return Err(Error::InvalidArgument("operator forms need delta > 0".into()));
    }
    let dim = state.dim();
    let j = dim.j();
    let mass = setting.delta * j * j;
    let rho = crate::qfi::build_density(state, NoiseSetting::new(setting.delta, 0.0)?);
    let h = log_density(&rho)?;
    let (u, u_prime, u_second) = potential(state);
    let p = momentum_matrix(dim.dim(), j);
    let n = dim.dim();
    let shift = 0.5 * (mass / (2.0 * std::f64::consts::PI)).ln();
    let t = CMatrix::identity(n, n) * Complex64::new(shift, 0.0) + &p * &p * Complex64::new(0.5 / mass, 0.0);
    Ok(OperatorBundle {
        h,
        u,
        u_prime,
        u_second,
        t_kinetic: t,
        p_momentum: p,
        mass,
    })
}

impl OperatorBundle {
    /// `H₀ = T + U`.
    pub fn h0(&self) -> CMatrix {
        &self.t_kinetic + linalg::diag_complex(&self.u)
    }

    /// `H₁ = −{P,{P,U''}}/48M² + U'²/24M`.
    pub fn h1(&self) -> CMatrix {
        let upp = linalg::diag_complex(&self.u_second);
        let inner = linalg::anticommutator(&self.p_momentum, &upp);
        let outer = linalg::anticommutator(&self.p_momentum, &inner);
        let m = self.mass;
        let up2: Vec<f64> = self.u_prime.iter().map(|x| x * x / (24.0 * m)).collect();
        outer * Complex64::new(-1.0 / (48.0 * m * m), 0.0) + linalg::diag_complex(&up2)
    }
}

pub fn bch_h0_h1(state: &ProbeState, setting: NoiseSetting) -> Result<(CMatrix, CMatrix)> {
    let b = operator_bundle(state, setting)?;
    Ok((b.h0(), b.h1()))
}

/// `|⟨φ| H − A |φ⟩|`, the probe-weighted distance of an approximation `A`.
pub fn probe_weighted_error(state: &ProbeState, h: &CMatrix, approx: &CMatrix) -> f64 {
    let phi = nalgebra::DVector::from_iterator(
        state.amplitudes().len(),
        state.amplitudes().iter().map(|&a| Complex64::new(a, 0.0)),
    );
    let e = h - approx;
    (phi.adjoint() * e * &phi)[(0, 0)].norm()
}

/// `⟨−U''/4M²⟩` with weight `φ²`, summed over interior grid points.
///
/// By parts this equals `−∫φ'²/M²`; the value is returned for `M = Δj²`.
pub fn bohmian_correction(state: &ProbeState, mass: f64) -> Result<f64> {
    check_profile(state)?;
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument("mass must be positive".into()));
    }
    let (_, _, upp) = potential(state);
    let a = state.amplitudes();
    let n = a.len();
    let weighted: f64 = (1..n.saturating_sub(1)).map(|k| a[k] * a[k] * upp[k]).sum();
    Ok(-weighted / (4.0 * mass * mass))
}

/// `j² (1/M + ⟨−U''/4M²⟩) = 1/Δ − ∫φ'²/(MΔ)`.
pub fn series_phase_qfi(state: &ProbeState, setting: NoiseSetting) -> Result<f64> {
    let j = state.dim().j();
    let m = setting.delta * j * j;
    Ok(j * j * (1.0 / m + bohmian_correction(state, m)?))
}
