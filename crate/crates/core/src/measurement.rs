//! Canonical phase measurement statistics: the conditional distribution of a
//! measured phase, its blurring by a Gaussian random phase, Monte Carlo
//! sampling, estimators for `θ` and `Δ`, and the periodicity-corrected error.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qfi::{build_density, NoiseSetting, QfiSolver};
use crate::spin::{ProbeState, SpinDim};

pub const DEFAULT_GRID: usize = 1 << 14;

/// Densities below this are floored before dividing.
pub const DENSITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    Conditional,
    Convolved,
    Other,
}

/// Density on the uniform grid `a_g = −π + 2πg/G`, normalized so that
/// `Σ p_g · 2π/G = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDistribution {
    density: Vec<f64>,
    kind: DistributionKind,
    /// Phase about which the distribution is centred.
    theta: f64,
}

/// `x` wrapped into `[−π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        return x;
    }
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        -PI
    } else {
        y
    }
}

pub fn grid_angle(g: usize, size: usize) -> f64 {
    -PI + 2.0 * PI * g as f64 / size as f64
}

fn minimum_grid(dim: SpinDim) -> usize {
    4 * dim.dim()
}

fn fft(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

/// Signed frequency of FFT bin `k`.
fn frequency(k: usize, len: usize) -> f64 {
    if k <= len / 2 {
        k as f64
    } else {
        k as f64 - len as f64
    }
}

impl PhaseDistribution {
    /// Normalizes arbitrary non-negative samples on the grid.
    pub fn from_density(density: Vec<f64>, kind: DistributionKind, theta: f64) -> Result<Self> {
        if density.len() < 2 {
            return Err(Error::InvalidArgument("grid needs at least two points".into()));
        }
        if density.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument("density must be finite and non-negative".into()));
        }
        let mut d = Self { density, kind, theta };
        d.normalize()?;
        Ok(d)
    }

    /// Tabulates `f(a_g)` and normalizes.
    pub fn from_fn(size: usize, kind: DistributionKind, theta: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_density((0..size).map(|g| f(grid_angle(g, size))).collect(), kind, theta)
    }

    fn normalize(&mut self) -> Result<()> {
        let total = self.integral();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("density integrates to zero".into()));
        }
        self.density.iter_mut().for_each(|p| *p /= total);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    pub fn step(&self) -> f64 {
        2.0 * PI / self.density.len() as f64
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn angle(&self, g: usize) -> f64 {
        grid_angle(g, self.density.len())
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.step()
    }

    /// Density at `±π` (grid point 0).
    pub fn at_pi(&self) -> f64 {
        self.density[0]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("angle,density\n");
        for (g, p) in self.density.iter().enumerate() {
            out.push_str(&format!("{:.16e},{:.16e}\n", self.angle(g), p));
        }
        out
    }

    fn spectrum(&self) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self.density.iter().map(|&p| Complex64::new(p, 0.0)).collect();
        fft(buf.len(), false).process(&mut buf);
        buf
    }

    fn from_spectrum(mut buf: Vec<Complex64>, kind: DistributionKind, theta: f64) -> Result<Self> {
        let n = buf.len();
        fft(n, true).process(&mut buf);
        // roundoff can leave tiny negative values
        let density = buf.iter().map(|z| (z.re / n as f64).max(0.0)).collect();
        Self::from_density(density, kind, theta)
    }

    /// The distribution translated by `shift` radians, via Fourier phases.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        let n = self.len();
        let mut buf = self.spectrum();
        for (k, z) in buf.iter_mut().enumerate() {
            *z *= Complex64::from_polar(1.0, -frequency(k, n) * shift);
        }
        Self::from_spectrum(buf, self.kind, self.theta + shift)
    }
}

/// `p(θ_μ|θ) = |Σ_m φ_m e^{im(θ_μ−θ)}|² / 2π` on a `G`-point grid.
pub fn conditional_distribution(state: &ProbeState, theta: f64, grid: usize) -> Result<PhaseDistribution> {
    let dim = state.dim();
    let min = minimum_grid(dim);
    if grid < min {
        return Err(Error::Undersampled { got: grid, min });
    }
    // Σ_k φ_k e^{ik(a_g − θ)} with a_g = −π + 2πg/G is an inverse DFT of
    // c_k = φ_k e^{−ik(π+θ)}; the e^{−ij(·)} offset only contributes a phase.
    let mut buf = vec![Complex64::new(0.0, 0.0); grid];
    for (k, &a) in state.amplitudes().iter().enumerate() {
        buf[k] = Complex64::from_polar(a, -(k as f64) * (PI + theta));
    }
    fft(grid, true).process(&mut buf);
    let density = buf.iter().map(|z| z.norm_sqr() / (2.0 * PI)).collect();
    PhaseDistribution::from_density(density, DistributionKind::Conditional, theta)
}

/// Circular convolution with a wrapped Gaussian of variance `Δ`
/// (Fourier mode `k` damped by `e^{−k²Δ/2}`).
pub fn convolve_with_diffusion(dist: &PhaseDistribution, delta: f64) -> Result<PhaseDistribution> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta must be finite and non-negative, got {delta}")));
    }
    if delta == 0.0 {
        let mut out = dist.clone();
        out.kind = DistributionKind::Convolved;
        return Ok(out);
    }
    let n = dist.len();
    let mut buf = dist.spectrum();
    for (k, z) in buf.iter_mut().enumerate() {
        let f = frequency(k, n);
        *z *= (-0.5 * f * f * delta).exp();
    }
    PhaseDistribution::from_spectrum(buf, DistributionKind::Convolved, dist.theta)
}

/// `p̃(θ_μ − θ)` for a probe under dephasing `Δ`.
pub fn convolved_distribution(state: &ProbeState, setting: NoiseSetting, grid: usize) -> Result<PhaseDistribution> {
    convolve_with_diffusion(&conditional_distribution(state, setting.theta, grid)?, setting.delta)
}

/// `Σ wrap(a_g − θ)² p_g · 2π/G`.
pub fn wrapped_variance(dist: &PhaseDistribution, theta_true: f64) -> f64 {
    let step = dist.step();
    dist.density
        .iter()
        .enumerate()
        .map(|(g, p)| {
            let d = wrap_angle(dist.angle(g) - theta_true);
            d * d * p
        })
        .sum::<f64>()
        * step
}

/// Wrapped Gaussian density of variance `v`, summed over images.
pub fn wrapped_gaussian(x: f64, v: f64) -> f64 {
    let s = (2.0 * PI * v).sqrt();
    let images = (6.0 * v.sqrt() / (2.0 * PI)).ceil() as i64 + 2;
    (-images..=images)
        .map(|n| {
            let y = x + 2.0 * PI * n as f64;
            (-y * y / (2.0 * v)).exp()
        })
        .sum::<f64>()
        / s
}

/// Classical Fisher information of the shift family `p(· − θ)`, using a
/// central difference of width `h` realized by exact Fourier shifts.
///
/// Grid points where the density is below `1e−13` of its maximum are
/// skipped: there the finite difference is pure roundoff.
pub fn classical_fisher(dist: &PhaseDistribution, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let plus = dist.shifted(h)?;
    let minus = dist.shifted(-h)?;
    let peak = dist.density.iter().copied().fold(0.0, f64::max);
    let cutoff = (1e-13 * peak).max(DENSITY_FLOOR);
    let step = dist.step();
    Ok(dist
        .density
        .iter()
        .zip(plus.density.iter().zip(&minus.density))
        .filter(|(p, _)| **p > cutoff)
        .map(|(p, (a, b))| {
            let dp = (a - b) / (2.0 * h);
            dp * dp / p.max(DENSITY_FLOOR)
        })
        .sum::<f64>()
        * step)
}

pub const DEFAULT_FISHER_STEP: f64 = 1e-4;

/// Which form of the closed-form cosine-probe distribution to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosedForm {
    /// `(sin a · cos((2j+1)δ) / (cos a − cos δ))²` with `a = π/(2j+1)`.
    Printed,
    /// `(sin(a/2) · cos(δ/2) · cos((2j+1)δ/2) / (cos a − cos δ))²`, the
    /// form obtained by summing the cosine profile directly.
    HalfAngle,
}

fn half_angle_value(n1: f64, delta: f64) -> f64 {
    let a = PI / n1;
    let den = a.cos() - delta.cos();
    let ratio = if den.abs() < 1e-9 {
        // cos(n1 δ/2) and den vanish together at δ = ±a
        -(n1 / 2.0) * (n1 * delta / 2.0).sin() / delta.sin()
    } else {
        (n1 * delta / 2.0).cos() / den
    };
    let v = (a / 2.0).sin() * (delta / 2.0).cos() * ratio;
    v * v
}

fn printed_value(n1: f64, delta: f64) -> f64 {
    let a = PI / n1;
    let v = a.sin() * (n1 * delta).cos() / (a.cos() - delta.cos());
    let v2 = v * v;
    if v2.is_finite() {
        v2
    } else {
        0.0
    }
}

/// Closed-form distribution of the cosine probe at `Δ = 0`, rescaled to
/// unit grid integral.
pub fn closed_form_cosine_distribution(dim: SpinDim, grid: usize, form: ClosedForm) -> Result<PhaseDistribution> {
    let n1 = dim.dim() as f64;
    PhaseDistribution::from_fn(grid, DistributionKind::Conditional, 0.0, |d| match form {
        ClosedForm::Printed => printed_value(n1, d),
        ClosedForm::HalfAngle => half_angle_value(n1, d),
    })
}

/// Largest relative deviation between two distributions over grid points
/// where the reference exceeds `floor` times its maximum.
pub fn max_relative_deviation(a: &PhaseDistribution, reference: &PhaseDistribution, floor: f64) -> f64 {
    let peak = reference.density.iter().copied().fold(0.0, f64::max);
    a.density
        .iter()
        .zip(&reference.density)
        .filter(|(_, r)| **r > floor * peak)
        .map(|(x, r)| (x - r).abs() / r)
        .fold(0.0, f64::max)
}

/// Inverse-CDF sampler: density constant on cells centred at grid points,
/// so the CDF is piecewise linear.
#[derive(Debug, Clone)]
pub struct PhaseSampler {
    cdf: Vec<f64>,
    step: f64,
}

impl PhaseSampler {
    pub fn new(dist: &PhaseDistribution) -> Self {
        let step = dist.step();
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(dist.len() + 1);
        cdf.push(0.0);
        for p in &dist.density {
            acc += p * step;
            cdf.push(acc);
        }
        cdf.iter_mut().for_each(|c| *c /= acc);
        Self { cdf, step }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let cell = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1) - 1;
        let lo = self.cdf[cell];
        let width = self.cdf[cell + 1] - lo;
        let frac = if width > 0.0 { (u - lo) / width } else { 0.5 };
        let n = self.cdf.len() - 1;
        wrap_angle(grid_angle(cell, n) - 0.5 * self.step + frac * self.step)
    }
}

fn check_shots(shots: usize) -> Result<()> {
    if shots < 1 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    Ok(())
}

/// `shots` draws from `dist`, deterministic for a given seed.
pub fn sample_measurements(dist: &PhaseDistribution, shots: usize, seed: u64) -> Result<Vec<f64>> {
    check_shots(shots)?;
    let sampler = PhaseSampler::new(dist);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..shots).map(|_| sampler.sample(&mut rng)).collect())
}

/// Two-stage draws: a random phase `ζ ~ N(0, Δ)` added to a draw from the
/// conditional distribution.
pub fn sample_two_stage(conditional: &PhaseDistribution, delta: f64, shots: usize, seed: u64) -> Result<Vec<f64>> {
    check_shots(shots)?;
    let normal = Normal::new(0.0, delta.sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let sampler = PhaseSampler::new(conditional);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..shots)
        .map(|_| {
            let zeta = normal.sample(&mut rng);
            wrap_angle(sampler.sample(&mut rng) + zeta)
        })
        .collect())
}

/// Atan2 of the averaged unit vectors.
pub fn circular_mean(samples: &[f64]) -> f64 {
    let (s, c) = samples
        .iter()
        .fold((0.0, 0.0), |(s, c), x| (s + x.sin(), c + x.cos()));
    s.atan2(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRun {
    pub seed: u64,
    pub shots: usize,
    pub theta_true: f64,
    pub delta_true: f64,
    pub samples: Vec<f64>,
    pub theta_hat: f64,
    pub delta_hat: f64,
    pub theta_sq_error: f64,
    pub delta_sq_error: f64,
}

/// `θ̂` = circular mean; `Δ̂` = unbiased sample variance about `θ̂` minus
/// the single-shot measurement variance `bias`.
pub fn estimate_phase_and_diffusion(samples: &[f64], bias: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("need at least two shots to estimate delta".into()));
    }
    let theta_hat = circular_mean(samples);
    let ss: f64 = samples.iter().map(|x| wrap_angle(x - theta_hat).powi(2)).sum();
    Ok((theta_hat, ss / (samples.len() as f64 - 1.0) - bias))
}

pub fn estimator_run(
    sampler: &PhaseSampler,
    setting: NoiseSetting,
    shots: usize,
    seed: u64,
    bias: f64,
) -> Result<EstimatorRun> {
    check_shots(shots)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..shots).map(|_| sampler.sample(&mut rng)).collect();
    let (theta_hat, delta_hat) = estimate_phase_and_diffusion(&samples, bias)?;
    Ok(EstimatorRun {
        seed,
        shots,
        theta_true: setting.theta,
        delta_true: setting.delta,
        samples,
        theta_hat,
        delta_hat,
        theta_sq_error: wrap_angle(theta_hat - setting.theta).powi(2),
        delta_sq_error: (delta_hat - setting.delta).powi(2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialEstimate {
    pub trial: usize,
    pub theta_hat: f64,
    pub delta_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub mse_theta: f64,
    pub mse_delta: f64,
    /// `1/(ν F_θ)`.
    pub crb_theta: f64,
    /// `1/(ν F_Δ)`.
    pub crb_delta: f64,
    pub trials: usize,
    pub shots: usize,
    /// Single-shot variance of the noiseless conditional distribution.
    pub measurement_variance: f64,
    /// Mean of `Δ̂` over trials.
    pub mean_delta_hat: f64,
    /// `(2Δ² + 4Δ⟨δθ_μ²⟩)/(ν − 1)`.
    pub predicted_mse_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub trials: Vec<TrialEstimate>,
    pub summary: CampaignSummary,
}

impl Campaign {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,theta_hat,delta_hat\n");
        for t in &self.trials {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", t.trial, t.theta_hat, t.delta_hat));
        }
        out
    }
}

/// Repeated estimation from `trials` independent blocks of `shots` draws of
/// the convolved distribution; trial `t` uses seed `seed + t`.
pub fn run_campaign(
    state: &ProbeState,
    setting: NoiseSetting,
    shots: usize,
    trials: usize,
    seed: u64,
    grid: usize,
) -> Result<Campaign> {
    if shots < 2 || trials < 1 {
        return Err(Error::InvalidArgument("campaign needs shots >= 2 and trials >= 1".into()));
    }
    let conditional = conditional_distribution(state, setting.theta, grid)?;
    let measurement_variance = wrapped_variance(&conditional, setting.theta);
    let sampler = PhaseSampler::new(&convolve_with_diffusion(&conditional, setting.delta)?);
    let estimates: Vec<TrialEstimate> = (0..trials)
        .into_par_iter()
        .map(|t| {
            estimator_run(&sampler, setting, shots, seed.wrapping_add(t as u64), measurement_variance).map(|r| {
                TrialEstimate {
                    trial: t,
                    theta_hat: r.theta_hat,
                    delta_hat: r.delta_hat,
                }
            })
        })
        .collect::<Result<_>>()?;

    let solver = QfiSolver::new(&build_density(state, setting))?;
    let f_theta = solver.f_theta();
    let f_delta = solver.f_delta().unwrap_or(f64::INFINITY);
    let nt = trials as f64;
    let nu = shots as f64;
    let d = setting.delta;
    let summary = CampaignSummary {
        mse_theta: estimates.iter().map(|e| wrap_angle(e.theta_hat - setting.theta).powi(2)).sum::<f64>() / nt,
        mse_delta: estimates.iter().map(|e| (e.delta_hat - d).powi(2)).sum::<f64>() / nt,
        crb_theta: 1.0 / (nu * f_theta),
        crb_delta: 1.0 / (nu * f_delta),
        trials,
        shots,
        measurement_variance,
        mean_delta_hat: estimates.iter().map(|e| e.delta_hat).sum::<f64>() / nt,
        predicted_mse_delta: (2.0 * d * d + 4.0 * d * measurement_variance) / (nu - 1.0),
    };
    Ok(Campaign {
        trials: estimates,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedErrorReport {
    pub p_tilde_at_pi: f64,
    pub corrected_error: f64,
    pub uncorrected: f64,
    /// `corrected / uncorrected = [1 − 2π p̃(π)]^{−2}`.
    pub factor: f64,
}

/// `(Δ + π²/N²) / [1 − 2π p̃(π)]²`.
pub fn corrected_error(state: &ProbeState, setting: NoiseSetting, grid: usize) -> Result<CorrectedErrorReport> {
    let dist = convolved_distribution(state, NoiseSetting::new(setting.delta, 0.0)?, grid)?;
    let p_pi = dist.at_pi();
    let n = state.dim().particles() as f64;
    let uncorrected = setting.delta + PI * PI / (n * n);
    let den = 1.0 - 2.0 * PI * p_pi;
    let factor = 1.0 / (den * den);
    Ok(CorrectedErrorReport {
        p_tilde_at_pi: p_pi,
        corrected_error: uncorrected * factor,
        uncorrected,
        factor,
    })
}

/// `⟨δθ²⟩` of the convolved distribution, the phase-variance objective.
pub fn phase_variance(state: &ProbeState, delta: f64, grid: usize) -> Result<f64> {
    let dist = convolved_distribution(state, NoiseSetting::new(delta, 0.0)?, grid)?;
    Ok(wrapped_variance(&dist, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{cosine_state, flat_phase_state, SpinDim};

    fn d(tj: u32) -> SpinDim {
        SpinDim::new(tj).unwrap()
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(0.3) - 0.3).abs() < 1e-16);
    }

    #[test]
    fn flat_peak_and_basis_state_uniform() {
        let g = 1024;
        let flat = conditional_distribution(&flat_phase_state(d(6)), 0.0, g).unwrap();
        let peak = flat.density()[g / 2];
        assert!((peak - 7.0 / (2.0 * PI)).abs() < 1e-12);
        let m0 = ProbeState::custom(d(4), vec![0.0, 0.0, 1.0, 0.0, 0.0], "m0").unwrap();
        let u = conditional_distribution(&m0, 0.4, g).unwrap();
        assert!(u.density().iter().all(|p| (p - 1.0 / (2.0 * PI)).abs() < 1e-12));
    }

    #[test]
    fn undersampled_grid_rejected() {
        assert!(matches!(
            conditional_distribution(&cosine_state(d(20)), 0.0, 50),
            Err(Error::Undersampled { .. })
        ));
    }

    #[test]
    fn convolution_identity_and_uniform_limit() {
        let c = conditional_distribution(&cosine_state(d(18)), 0.0, 2048).unwrap();
        let same = convolve_with_diffusion(&c, 0.0).unwrap();
        assert_eq!(same.density(), c.density());
        let flat = convolve_with_diffusion(&c, 50.0).unwrap();
        assert!(flat.density().iter().all(|p| (p - 1.0 / (2.0 * PI)).abs() < 1e-6));
        assert!((wrapped_variance(&flat, 0.0) - PI * PI / 3.0).abs() < 1e-5);
    }

    #[test]
    fn gaussian_fisher_is_inverse_variance() {
        let v = 0.01;
        let dist =
            PhaseDistribution::from_fn(DEFAULT_GRID, DistributionKind::Other, 0.0, |x| wrapped_gaussian(x, v)).unwrap();
        let f = classical_fisher(&dist, DEFAULT_FISHER_STEP).unwrap();
        assert!((f * v - 1.0).abs() < 1e-3, "{f}");
        let uniform = PhaseDistribution::from_fn(256, DistributionKind::Other, 0.0, |_| 1.0).unwrap();
        assert!(classical_fisher(&uniform, DEFAULT_FISHER_STEP).unwrap().abs() < 1e-20);
    }

    #[test]
    fn sampling_is_reproducible_and_wrapped() {
        let c = conditional_distribution(&cosine_state(d(10)), 0.2, 1024).unwrap();
        let a = sample_measurements(&c, 500, 9).unwrap();
        let b = sample_measurements(&c, 500, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|x| (-PI..PI).contains(x)));
        assert!(sample_measurements(&c, 0, 1).is_err());
    }

    #[test]
    fn estimator_needs_two_shots() {
        assert!(estimate_phase_and_diffusion(&[0.1], 0.0).is_err());
        let (t, dlt) = estimate_phase_and_diffusion(&[0.1, 0.3], 0.0).unwrap();
        assert!((t - 0.2).abs() < 1e-12);
        assert!((dlt - 0.02).abs() < 1e-12);
    }

    #[test]
    fn half_angle_form_matches_direct_overlap() {
        let dim = d(18);
        let exact = conditional_distribution(&cosine_state(dim), 0.0, 4096).unwrap();
        let closed = closed_form_cosine_distribution(dim, 4096, ClosedForm::HalfAngle).unwrap();
        assert!(max_relative_deviation(&closed, &exact, 1e-10) < 1e-6);
    }

    #[test]
    fn printed_form_has_poles() {
        let dim = d(18);
        let exact = conditional_distribution(&cosine_state(dim), 0.0, 4096).unwrap();
        let printed = closed_form_cosine_distribution(dim, 4096, ClosedForm::Printed).unwrap();
        assert!(max_relative_deviation(&printed, &exact, 1e-10) > 0.1);
    }
}
