//! Large-mass closed forms: the `∫φ'²` functional, predicted `1/F` for phase
//! and diffusion, shot-noise clustering bounds and the Fisher-sum bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qfi::NoiseSetting;
use crate::spin::ProbeState;

/// Below this effective mass `M = Δj²` the expansion is not trusted.
pub const MASS_THRESHOLD: f64 = 10.0;

/// `Δ` above which the small-`Δ` clustering bounds are flagged.
pub const CLUSTERING_DELTA_LIMIT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPrediction {
    pub inv_f_theta: f64,
    pub inv_f_delta: f64,
    pub mass: f64,
    pub gradient_integral: f64,
    pub valid: bool,
}

/// `j² Σ_m (φ_{m+1} − φ_m)²` with zero amplitudes at `m = ±(j+1)`.
pub fn gradient_integral(state: &ProbeState) -> f64 {
    let j = state.dim().j();
    let a = state.amplitudes();
    let first = a[0] * a[0];
    let last = a[a.len() - 1] * a[a.len() - 1];
    let interior: f64 = a.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    j * j * (first + interior + last)
}

pub fn mass(state: &ProbeState, setting: NoiseSetting) -> f64 {
    let j = state.dim().j();
    setting.delta * j * j
}

/// `Δ + ∫φ'² / j²`.
pub fn predict_inv_f_theta(state: &ProbeState, setting: NoiseSetting) -> f64 {
    let j = state.dim().j();
    setting.delta + gradient_integral(state) / (j * j)
}

/// `2Δ² + 4Δ ∫φ'² / j²`.
pub fn predict_inv_f_delta(state: &ProbeState, setting: NoiseSetting) -> f64 {
    let j = state.dim().j();
    let d = setting.delta;
    2.0 * d * d + 4.0 * d * gradient_integral(state) / (j * j)
}

pub fn predict(state: &ProbeState, setting: NoiseSetting) -> AsymptoticPrediction {
    let gi = gradient_integral(state);
    let j = state.dim().j();
    let d = setting.delta;
    let m = d * j * j;
    AsymptoticPrediction {
        inv_f_theta: d + gi / (j * j),
        inv_f_delta: 2.0 * d * d + 4.0 * d * gi / (j * j),
        mass: m,
        gradient_integral: gi,
        valid: m >= MASS_THRESHOLD,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringBounds {
    pub lower: f64,
    pub upper: f64,
    /// Cluster count optimizing the lower-bound model, `N√Δ`.
    pub nu_lower: f64,
    /// Cluster count optimizing the upper-bound model, `N√Δ/π`.
    pub nu_upper: f64,
    /// False when `Δ` is too large for the small-`Δ` derivation.
    pub small_delta: bool,
}

/// `2√Δ/N ≲ 1/F ≲ 2π√Δ/N` after optimal clustering of `N` particles.
pub fn clustering_bounds(n: usize, delta: f64) -> Result<ClusteringBounds> {
    if n < 1 {
        return Err(Error::InvalidArgument("particle count must be at least 1".into()));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta must be finite and non-negative, got {delta}")));
    }
    let n = n as f64;
    let s = delta.sqrt();
    Ok(ClusteringBounds {
        lower: 2.0 * s / n,
        upper: 2.0 * std::f64::consts::PI * s / n,
        nu_lower: n * s,
        nu_upper: n * s / std::f64::consts::PI,
        small_delta: delta <= CLUSTERING_DELTA_LIMIT,
    })
}

/// `1/F_{x+y} ≥ 1/F_x + 1/F_y`; infinite informations contribute nothing.
pub fn fisher_sum_bound(f_classical: f64, f_statistical: f64) -> f64 {
    let inv = |f: f64| if f.is_infinite() { 0.0 } else { 1.0 / f };
    inv(f_classical) + inv(f_statistical)
}

/// `Δ + 1/N²`: a random phase of variance `Δ` on top of a Heisenberg-limited
/// readout with `N` particles.
pub fn heisenberg_diffusion_bound(n: usize, delta: f64) -> f64 {
    let n = n as f64;
    fisher_sum_bound(1.0 / delta, n * n)
}
