//! Dephased density matrices and their exact quantum Fisher information for
//! the phase `θ` (generator `J_z`) and the diffusion strength `Δ`.
//!
//! Everything is solved in the eigenbasis of `ρ`: with `ρ = Σ λ_k |k⟩⟨k|`,
//! the SLD equation `½{ρ, L} = ∂ρ` has the solution
//! `L_kl = 2 ⟨k|∂ρ|l⟩ / (λ_k + λ_l)` on pairs with `λ_k + λ_l > ε`.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, AsymptoticPrediction};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, RMatrix};
use crate::spin::{ProbeState, SpinDim};

/// Relative threshold below which eigenvalue pairs are treated as null.
pub const ZERO_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSetting {
    pub delta: f64,
    pub theta: f64,
}

impl NoiseSetting {
    pub fn new(delta: f64, theta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!("delta must be finite and non-negative, got {delta}")));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidArgument("theta must be finite".into()));
        }
        Ok(Self { delta, theta })
    }

    pub fn at_zero_phase(delta: f64) -> Result<Self> {
        Self::new(delta, 0.0)
    }
}

/// `ρ_{mm'} = e^{−Δ(m−m')²/2 − i(m−m')θ} φ_m φ_{m'}`.
#[derive(Debug, Clone)]
pub struct DephasedDensity {
    dim: SpinDim,
    setting: NoiseSetting,
    entries: CMatrix,
}

/// Gaussian coherence kernel `e^{−Δ(m−m')²/2}`.
pub fn coherence_kernel(dim: SpinDim, delta: f64) -> RMatrix {
    let n = dim.dim();
    RMatrix::from_fn(n, n, |a, b| {
        let dm = a as f64 - b as f64;
        (-0.5 * delta * dm * dm).exp()
    })
}

pub fn build_density(state: &ProbeState, setting: NoiseSetting) -> DephasedDensity {
    let dim = state.dim();
    let phi = state.amplitudes();
    let n = dim.dim();
    let entries = CMatrix::from_fn(n, n, |a, b| {
        let dm = a as f64 - b as f64;
        let mag = (-0.5 * setting.delta * dm * dm).exp() * phi[a] * phi[b];
        Complex64::from_polar(mag, -dm * setting.theta)
    });
    DephasedDensity { dim, setting, entries }
}

impl DephasedDensity {
    /// Wraps an explicit matrix, checking it is a valid density operator.
    ///
    /// `∂ρ/∂Δ` is still taken as `−((m−m')²/2) ρ_{mm'}`, so this is only
    /// meaningful for matrices in the dephasing family or its limits.
    pub fn from_matrix(dim: SpinDim, entries: CMatrix, setting: NoiseSetting) -> Result<Self> {
        let n = dim.dim();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::InvalidArgument(format!("expected a {n}x{n} matrix")));
        }
        let herm = linalg::hermiticity_residual(&entries);
        if herm > 1e-12 {
            return Err(Error::InvalidArgument(format!("matrix is not Hermitian (residual {herm:e})")));
        }
        let tr = linalg::trace(&entries).re;
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("trace is {tr}, expected 1")));
        }
        let rho = Self { dim, setting, entries };
        let min = rho.eigensystem()?.min_raw_eigenvalue;
        if min < -1e-12 {
            return Err(Error::InvalidArgument(format!("matrix is not positive semidefinite (λ_min = {min:e})")));
        }
        Ok(rho)
    }

    pub fn dim(&self) -> SpinDim {
        self.dim
    }

    pub fn setting(&self) -> NoiseSetting {
        self.setting
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.entries).re
    }

    /// Elementwise `∂ρ/∂Δ = −((m−m')²/2) ρ_{mm'}`.
    pub fn delta_derivative(&self) -> CMatrix {
        let n = self.dim.dim();
        CMatrix::from_fn(n, n, |a, b| {
            let dm = a as f64 - b as f64;
            self.entries[(a, b)] * (-0.5 * dm * dm)
        })
    }

    /// `∂ρ/∂θ = −i[J_z, ρ]`.
    pub fn theta_derivative(&self) -> CMatrix {
        let n = self.dim.dim();
        CMatrix::from_fn(n, n, |a, b| {
            let dm = a as f64 - b as f64;
            self.entries[(a, b)] * Complex64::new(0.0, -dm)
        })
    }

    /// True when every entry is real (always the case at `θ = 0`).
    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    pub fn eigensystem(&self) -> Result<EigenSystem> {
        eigensystem(self)
    }
}

/// Spectral decomposition of `ρ`, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
    /// Absolute threshold `ε · Tr ρ` used to drop null pairs.
    pub epsilon: f64,
    /// Smallest eigenvalue before clamping.
    pub min_raw_eigenvalue: f64,
    /// Real copy of `vectors` when `ρ` is real symmetric.
    real_vectors: Option<RMatrix>,
}

impl EigenSystem {
    pub fn reconstruct(&self) -> CMatrix {
        linalg::reassemble(&self.vectors, &self.values)
    }

    /// Number of eigenvalues above the threshold.
    pub fn rank(&self) -> usize {
        self.values.iter().filter(|&&l| l > self.epsilon).count()
    }

    /// `V† A V`.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        match &self.real_vectors {
            Some(v) => linalg::real_congruence(v, a),
            None => self.vectors.adjoint() * a * &self.vectors,
        }
    }

    /// `V A V†`.
    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        match &self.real_vectors {
            Some(v) => linalg::real_congruence_back(v, a),
            None => &self.vectors * a * self.vectors.adjoint(),
        }
    }

    /// `V† J_z V` without forming `J_z`.
    pub fn jz_in_eigenbasis(&self, dim: SpinDim) -> CMatrix {
        if let Some(v) = &self.real_vectors {
            let mut scaled = v.clone();
            for (k, mut row) in scaled.row_iter_mut().enumerate() {
                row *= dim.m(k);
            }
            return linalg::to_complex(&(v.transpose() * scaled));
        }
        let mut scaled = self.vectors.clone();
        for (k, mut row) in scaled.row_iter_mut().enumerate() {
            row *= Complex64::new(dim.m(k), 0.0);
        }
        self.vectors.adjoint() * scaled
    }
}

pub fn eigensystem(rho: &DephasedDensity) -> Result<EigenSystem> {
    let (mut values, vectors, real_vectors) = if rho.is_real() {
        let spec = linalg::symmetric_eigen(&rho.entries.map(|z| z.re))?;
        (spec.values, linalg::to_complex(&spec.vectors), Some(spec.vectors))
    } else {
        let spec = linalg::hermitian_eigen(&rho.entries)?;
        (spec.values, spec.vectors, None)
    };
    let epsilon = ZERO_THRESHOLD * rho.trace();
    let min_raw_eigenvalue = values.iter().copied().fold(f64::INFINITY, f64::min);
    for l in values.iter_mut() {
        if l.abs() <= epsilon {
            *l = 0.0;
        }
    }
    Ok(EigenSystem {
        values,
        vectors,
        epsilon,
        min_raw_eigenvalue,
        real_vectors,
    })
}

/// Exact solver for both parameters sharing one eigendecomposition.
#[derive(Debug, Clone)]
pub struct QfiSolver {
    dim: SpinDim,
    eig: EigenSystem,
    /// `⟨k|J_z|l⟩`.
    jz: CMatrix,
    /// `∂_Δ ρ` in the standard basis.
    delta_derivative: CMatrix,
    /// `⟨k|∂_Δ ρ|l⟩`, built on first use.
    d_delta: OnceLock<CMatrix>,
}

impl QfiSolver {
    pub fn new(rho: &DephasedDensity) -> Result<Self> {
        let eig = rho.eigensystem()?;
        let jz = eig.jz_in_eigenbasis(rho.dim);
        Ok(Self {
            dim: rho.dim,
            eig,
            jz,
            delta_derivative: rho.delta_derivative(),
            d_delta: OnceLock::new(),
        })
    }

    pub fn eigensystem(&self) -> &EigenSystem {
        &self.eig
    }

    fn d_delta(&self) -> &CMatrix {
        self.d_delta.get_or_init(|| self.eig.to_eigenbasis(&self.delta_derivative))
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.eig.values.len();
        let eps = self.eig.epsilon;
        (0..n).flat_map(move |k| (0..n).map(move |l| (k, l))).filter_map(move |(k, l)| {
            let s = self.eig.values[k] + self.eig.values[l];
            (s > eps).then_some((k, l, s))
        })
    }

    /// `F_θ = 2 Σ (λ_k−λ_l)²/(λ_k+λ_l) |⟨k|J_z|l⟩|²`.
    pub fn f_theta(&self) -> f64 {
        let lam = &self.eig.values;
        2.0 * self
            .pairs()
            .map(|(k, l, s)| (lam[k] - lam[l]).powi(2) / s * self.jz[(k, l)].norm_sqr())
            .sum::<f64>()
    }

    /// `F_Δ = 2 Σ |⟨k|∂_Δρ|l⟩|²/(λ_k+λ_l)`.
    ///
    /// Fails when `∂_Δρ` has weight on the kernel of `ρ` (the pure state at
    /// `Δ = 0`), where the information is unbounded.
    pub fn f_delta(&self) -> Result<f64> {
        let scale = self.d_delta().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let lam = &self.eig.values;
        let n = lam.len();
        let mut leak = 0.0f64;
        for k in 0..n {
            for l in 0..n {
                if lam[k] + lam[l] <= self.eig.epsilon {
                    leak = leak.max(self.d_delta()[(k, l)].norm());
                }
            }
        }
        if leak > 1e-9 * scale.max(f64::MIN_POSITIVE) && leak > 1e-14 {
            return Err(Error::Divergent(format!(
                "∂ρ/∂Δ has weight {leak:e} outside the support of ρ (rank {} of {n})",
                self.eig.rank()
            )));
        }
        Ok(2.0 * self.pairs().map(|(k, l, s)| self.d_delta()[(k, l)].norm_sqr() / s).sum::<f64>())
    }

    /// Phase SLD in the eigenbasis: `2i(λ_k−λ_l)/(λ_k+λ_l) ⟨k|J_z|l⟩`.
    pub fn sld_phase_eigenbasis(&self) -> CMatrix {
        let lam = &self.eig.values;
        let n = lam.len();
        let mut out = CMatrix::zeros(n, n);
        for (k, l, s) in self.pairs() {
            out[(k, l)] = self.jz[(k, l)] * Complex64::new(0.0, 2.0 * (lam[k] - lam[l]) / s);
        }
        out
    }

    /// Diffusion SLD in the eigenbasis: `2⟨k|∂_Δρ|l⟩/(λ_k+λ_l)`.
    pub fn sld_diffusion_eigenbasis(&self) -> CMatrix {
        let n = self.eig.values.len();
        let mut out = CMatrix::zeros(n, n);
        for (k, l, s) in self.pairs() {
            out[(k, l)] = self.d_delta()[(k, l)] * (2.0 / s);
        }
        out
    }

    pub fn sld_phase(&self) -> CMatrix {
        self.eig.from_eigenbasis(&self.sld_phase_eigenbasis())
    }

    pub fn sld_diffusion(&self) -> CMatrix {
        self.eig.from_eigenbasis(&self.sld_diffusion_eigenbasis())
    }

    /// `Im Tr(ρ L_θ L_Δ)`, evaluated in the eigenbasis.
    pub fn cross_term(&self) -> f64 {
        let lt = self.sld_phase_eigenbasis();
        let ld = self.sld_diffusion_eigenbasis();
        let n = self.eig.values.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let lk = self.eig.values[k];
            if lk == 0.0 {
                continue;
            }
            let row: Complex64 = (0..n).map(|l| lt[(k, l)] * ld[(l, k)]).sum();
            acc += row * lk;
        }
        acc.im
    }

    pub fn dim(&self) -> SpinDim {
        self.dim
    }
}

pub fn qfi_phase(rho: &DephasedDensity) -> Result<f64> {
    Ok(QfiSolver::new(rho)?.f_theta())
}

pub fn qfi_diffusion(rho: &DephasedDensity) -> Result<f64> {
    QfiSolver::new(rho)?.f_delta()
}

pub fn sld_phase(rho: &DephasedDensity) -> Result<CMatrix> {
    Ok(QfiSolver::new(rho)?.sld_phase())
}

pub fn sld_diffusion(rho: &DephasedDensity) -> Result<CMatrix> {
    Ok(QfiSolver::new(rho)?.sld_diffusion())
}

pub fn compatibility_cross_term(rho: &DephasedDensity) -> Result<f64> {
    Ok(QfiSolver::new(rho)?.cross_term())
}

/// Convenience: `F_θ` for a probe at `(Δ, θ = 0)`.
pub fn phase_qfi_of(state: &ProbeState, delta: f64) -> Result<f64> {
    qfi_phase(&build_density(state, NoiseSetting::at_zero_phase(delta)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QfiReport {
    pub twice_j: u32,
    pub delta: f64,
    pub theta: f64,
    pub state: String,
    pub f_theta: f64,
    /// `None` when the diffusion information diverges.
    pub f_delta: Option<f64>,
    pub cross_im: f64,
    pub predictions: AsymptoticPrediction,
}

pub fn qfi_report(state: &ProbeState, setting: NoiseSetting) -> Result<QfiReport> {
    let rho = build_density(state, setting);
    let solver = QfiSolver::new(&rho)?;
    let f_delta = match solver.f_delta() {
        Ok(v) => Some(v),
        Err(Error::Divergent(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(QfiReport {
        twice_j: state.dim().twice_j(),
        delta: setting.delta,
        theta: setting.theta,
        state: state.label().to_string(),
        f_theta: solver.f_theta(),
        f_delta,
        cross_im: solver.cross_term(),
        predictions: asymptotics::predict(state, setting),
    })
}

/// Real symmetric view of `ρ` at `θ = 0`, `K ∘ φφᵀ`.
pub fn real_density(state: &ProbeState, delta: f64) -> RMatrix {
    let phi = state.amplitudes();
    let n = phi.len();
    DMatrix::from_fn(n, n, |a, b| {
        let dm = a as f64 - b as f64;
        (-0.5 * delta * dm * dm).exp() * phi[a] * phi[b]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{cosine_state, flat_phase_state, noon_state};

    fn d(tj: u32) -> SpinDim {
        SpinDim::new(tj).unwrap()
    }

    #[test]
    fn qubit_density_entries() {
        let rho = build_density(&flat_phase_state(d(1)), NoiseSetting::new(0.4, 0.0).unwrap());
        let off = (-0.2f64).exp() / 2.0;
        let e = rho.entries();
        assert!((e[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((e[(0, 1)].re - off).abs() < 1e-15);
        assert!(rho.is_real());
    }

    #[test]
    fn pure_state_is_projector() {
        let s = cosine_state(d(6));
        let rho = build_density(&s, NoiseSetting::new(0.0, 0.0).unwrap());
        let eig = rho.eigensystem().unwrap();
        assert_eq!(eig.rank(), 1);
        assert!((eig.values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_ratio_at_unit_separation() {
        let s = cosine_state(d(80));
        let rho = build_density(&s, NoiseSetting::new(10.0, 0.0).unwrap());
        let e = rho.entries();
        let ratio = e[(40, 41)].re / (e[(40, 40)].re * e[(41, 41)].re).sqrt();
        assert!((ratio - (-5.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn qubit_closed_forms() {
        for delta in [0.01, 0.1, 0.5, 1.0, 3.0] {
            let rho = build_density(&flat_phase_state(d(1)), NoiseSetting::new(delta, 0.0).unwrap());
            let eig = rho.eigensystem().unwrap();
            let c = (-delta / 2.0).exp();
            assert!((eig.values[0] - (1.0 + c) / 2.0).abs() < 1e-14);
            assert!((eig.values[1] - (1.0 - c) / 2.0).abs() < 1e-14);
            let f = qfi_phase(&rho).unwrap();
            assert!((f - (-delta).exp()).abs() < 1e-12);
            let fd = qfi_diffusion(&rho).unwrap();
            let e = (-delta).exp();
            assert!((fd - e / (4.0 * (1.0 - e))).abs() / fd < 1e-10);
        }
    }

    #[test]
    fn noon_closed_form() {
        for (tj, delta) in [(4u32, 0.01), (6, 0.002), (10, 0.0005)] {
            let n = f64::from(tj);
            let f = phase_qfi_of(&noon_state(d(tj)), delta).unwrap();
            let expect = n * n * (-delta * n * n).exp();
            assert!((f - expect).abs() / expect < 1e-10);
        }
    }

    #[test]
    fn pure_state_variance() {
        let s = ProbeState::custom(d(4), vec![0.3, -0.2, 0.5, 0.7, 0.1], "x").unwrap();
        let f = phase_qfi_of(&s, 0.0).unwrap();
        assert!((f - 4.0 * s.variance_m()).abs() < 1e-12);
    }

    #[test]
    fn diffusion_diverges_for_pure_state() {
        let rho = build_density(&cosine_state(d(4)), NoiseSetting::new(0.0, 0.0).unwrap());
        assert!(matches!(qfi_diffusion(&rho), Err(Error::Divergent(_))));
    }

    #[test]
    fn diagonal_density_has_no_diffusion_information() {
        let dim = d(4);
        let diag = linalg::diag_complex(&[0.1, 0.2, 0.4, 0.2, 0.1]);
        let rho = DephasedDensity::from_matrix(dim, diag, NoiseSetting::new(50.0, 0.0).unwrap()).unwrap();
        assert_eq!(qfi_diffusion(&rho).unwrap(), 0.0);
        assert_eq!(qfi_phase(&rho).unwrap(), 0.0);
    }

    #[test]
    fn from_matrix_rejects_invalid() {
        let dim = d(1);
        let s = NoiseSetting::new(0.1, 0.0).unwrap();
        assert!(DephasedDensity::from_matrix(dim, linalg::diag_complex(&[0.7, 0.7]), s).is_err());
        assert!(DephasedDensity::from_matrix(dim, linalg::diag_complex(&[1.5, -0.5]), s).is_err());
    }

    #[test]
    fn sld_zero_mean_and_hermitian() {
        let s = cosine_state(d(8));
        let rho = build_density(&s, NoiseSetting::new(0.3, 0.4).unwrap());
        let solver = QfiSolver::new(&rho).unwrap();
        for l in [solver.sld_phase(), solver.sld_diffusion()] {
            assert!(linalg::hermiticity_residual(&l) < 1e-12);
            assert!(linalg::trace(&(rho.entries() * &l)).norm() < 1e-12);
        }
        let lt = solver.sld_phase();
        let f = linalg::trace(&(rho.entries() * &lt * &lt)).re;
        assert!((f - solver.f_theta()).abs() < 1e-10);
        let ld = solver.sld_diffusion();
        let fd = linalg::trace(&(rho.entries() * &ld * &ld)).re;
        assert!((fd - solver.f_delta().unwrap()).abs() / fd < 1e-10);
    }

    #[test]
    fn sld_solves_lyapunov_equation() {
        let s = ProbeState::custom(d(3), vec![0.2, 0.6, 0.5, 0.3], "x").unwrap();
        let rho = build_density(&s, NoiseSetting::new(0.2, 0.0).unwrap());
        let solver = QfiSolver::new(&rho).unwrap();
        let l = solver.sld_phase();
        let lhs = linalg::anticommutator(rho.entries(), &l) * Complex64::new(0.5, 0.0);
        assert!(linalg::max_abs(&(lhs - rho.theta_derivative())) < 1e-12);
        let l = solver.sld_diffusion();
        let lhs = linalg::anticommutator(rho.entries(), &l) * Complex64::new(0.5, 0.0);
        assert!(linalg::max_abs(&(lhs - rho.delta_derivative())) < 1e-12);
    }

    #[test]
    fn report_serializes_with_predictions() {
        let r = qfi_report(&cosine_state(d(20)), NoiseSetting::new(0.1, 0.0).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["twice_j", "delta", "theta", "state", "f_theta", "f_delta", "cross_im", "predictions"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["predictions"]["inv_f_theta"].is_number());
    }
}
