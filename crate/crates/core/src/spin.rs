//! Spin-j probe states over the `J_z` eigenbasis `m = -j, ..., j`.
//!
//! Amplitudes are real and stored in ascending `m`. Every constructor returns a
//! unit-norm state whose first nonzero amplitude is non-negative.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RMatrix;

/// Total spin `j`, held as the integer `2j` (the particle number `N`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct SpinDim {
    twice_j: u32,
}

impl SpinDim {
    pub fn new(twice_j: u32) -> Result<Self> {
        if twice_j == 0 {
            return Err(Error::InvalidArgument("twice_j must be at least 1".into()));
        }
        Ok(Self { twice_j })
    }

    pub fn twice_j(self) -> u32 {
        self.twice_j
    }

    pub fn j(self) -> f64 {
        f64::from(self.twice_j) / 2.0
    }

    /// Particle number `N = 2j`.
    pub fn particles(self) -> usize {
        self.twice_j as usize
    }

    /// Hilbert-space dimension `N + 1`.
    pub fn dim(self) -> usize {
        self.twice_j as usize + 1
    }

    pub fn is_integer(self) -> bool {
        self.twice_j % 2 == 0
    }

    /// Spin projection at storage index `k`.
    pub fn m(self, k: usize) -> f64 {
        k as f64 - self.j()
    }

    pub fn m_values(self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.m(k)).collect()
    }
}

impl TryFrom<u32> for SpinDim {
    type Error = Error;
    fn try_from(v: u32) -> Result<Self> {
        SpinDim::new(v)
    }
}

impl From<SpinDim> for u32 {
    fn from(d: SpinDim) -> u32 {
        d.twice_j
    }
}

/// Named probe families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StateKind {
    Cosine,
    Noon,
    Flat,
    Gaussian { width: f64 },
    SpinCoherent,
    HollandBurnett,
}

impl StateKind {
    pub fn build(self, dim: SpinDim) -> Result<ProbeState> {
        match self {
            StateKind::Cosine => Ok(cosine_state(dim)),
            StateKind::Noon => Ok(noon_state(dim)),
            StateKind::Flat => Ok(flat_phase_state(dim)),
            StateKind::Gaussian { width } => gaussian_state(dim, width),
            StateKind::SpinCoherent => Ok(spin_coherent_state(dim)),
            StateKind::HollandBurnett => holland_burnett_state(dim),
        }
    }
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateKind::Cosine => write!(f, "cosine"),
            StateKind::Noon => write!(f, "noon"),
            StateKind::Flat => write!(f, "flat"),
            StateKind::Gaussian { width } => write!(f, "gaussian:{width}"),
            StateKind::SpinCoherent => write!(f, "coherent"),
            StateKind::HollandBurnett => write!(f, "holland-burnett"),
        }
    }
}

impl FromStr for StateKind {
    type Err = Error;

    /// Accepts `cosine`, `noon`, `flat`/`phase`, `gaussian:<w>`,
    /// `coherent`/`spin-coherent`, `holland-burnett`/`hb`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(w) = lower.strip_prefix("gaussian:") {
            let width: f64 = w
                .parse()
                .map_err(|_| Error::Parse(format!("bad gaussian width `{w}`")))?;
            return Ok(StateKind::Gaussian { width });
        }
        match lower.as_str() {
            "cosine" | "cos" | "optimal" => Ok(StateKind::Cosine),
            "noon" => Ok(StateKind::Noon),
            "flat" | "phase" => Ok(StateKind::Flat),
            "coherent" | "spin-coherent" | "sc" => Ok(StateKind::SpinCoherent),
            "holland-burnett" | "hb" => Ok(StateKind::HollandBurnett),
            _ => Err(Error::UnknownState(s.to_string())),
        }
    }
}

/// Normalized real probe amplitudes `phi_m`, ascending in `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeState {
    dim: SpinDim,
    amplitudes: Vec<f64>,
    label: String,
}

pub const NORM_TOLERANCE: f64 = 1e-12;

impl ProbeState {
    /// Wraps amplitudes that are already normalized.
    pub fn new(dim: SpinDim, amplitudes: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if amplitudes.len() != dim.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} amplitudes for twice_j = {}, got {}",
                dim.dim(),
                dim.twice_j(),
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        let norm2: f64 = amplitudes.iter().map(|a| a * a).sum();
        if (norm2 - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm2));
        }
        Ok(Self {
            dim,
            amplitudes,
            label: label.into(),
        })
    }

    /// Normalizes arbitrary (nonzero) amplitudes and applies the sign convention.
    pub fn custom(dim: SpinDim, amplitudes: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if amplitudes.len() != dim.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} amplitudes, got {}",
                dim.dim(),
                amplitudes.len()
            )));
        }
        let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument("amplitudes must be finite and not all zero".into()));
        }
        let mut amps: Vec<f64> = amplitudes.iter().map(|a| a / norm).collect();
        canonicalize_sign(&mut amps);
        Self::new(dim, amps, label)
    }

    pub fn dim(&self) -> SpinDim {
        self.dim
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Amplitude at projection `m`; `m` must lie on the lattice `-j..=j`.
    pub fn amplitude_at(&self, m: f64) -> f64 {
        let k = (m + self.dim.j()).round();
        if k < 0.0 || k as usize >= self.amplitudes.len() {
            0.0
        } else {
            self.amplitudes[k as usize]
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }

    pub fn mean_m(&self) -> f64 {
        self.weighted_sum(|m| m)
    }

    pub fn variance_m(&self) -> f64 {
        let mean = self.mean_m();
        self.weighted_sum(|m| (m - mean) * (m - mean))
    }

    fn weighted_sum(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| a * a * f(self.dim.m(k)))
            .sum()
    }

    /// `phi_m == phi_{-m}` to the given absolute tolerance.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.amplitudes.len();
        (0..n / 2).all(|k| (self.amplitudes[k] - self.amplitudes[n - 1 - k]).abs() <= tol)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,amplitude\n");
        for (k, a) in self.amplitudes.iter().enumerate() {
            out.push_str(&format!("{},{:.16e}\n", self.dim.m(k), a));
        }
        out
    }

    pub fn from_csv(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with('m')) {
                continue;
            }
            let mut cols = line.split(',');
            let (Some(m), Some(a)) = (cols.next(), cols.next()) else {
                return Err(Error::Parse(format!("line {}: expected `m,amplitude`", i + 1)));
            };
            let m: f64 = m.trim().parse().map_err(|_| Error::Parse(format!("line {}: bad m", i + 1)))?;
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad amplitude", i + 1)))?;
            rows.push((m, a));
        }
        if rows.is_empty() {
            return Err(Error::Parse("no amplitude rows".into()));
        }
        rows.sort_by(|x, y| x.0.total_cmp(&y.0));
        let twice_j = (2.0 * rows.last().map(|r| r.0).unwrap_or_default()).round();
        let dim = SpinDim::new(twice_j as u32)?;
        let expected = dim.m_values();
        if rows.len() != expected.len() || rows.iter().zip(&expected).any(|(r, m)| (r.0 - m).abs() > 1e-9) {
            return Err(Error::Parse("m column must list -j..=j exactly once".into()));
        }
        Self::custom(dim, rows.into_iter().map(|r| r.1).collect(), label)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ProbeRecord::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: ProbeRecord = serde_json::from_str(text)?;
        rec.try_into()
    }
}

/// JSON wire form: `{"twice_j", "label", "amplitudes"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub twice_j: u32,
    pub label: String,
    pub amplitudes: Vec<f64>,
}

impl From<&ProbeState> for ProbeRecord {
    fn from(s: &ProbeState) -> Self {
        Self {
            twice_j: s.dim.twice_j(),
            label: s.label.clone(),
            amplitudes: s.amplitudes.clone(),
        }
    }
}

impl TryFrom<ProbeRecord> for ProbeState {
    type Error = Error;
    fn try_from(r: ProbeRecord) -> Result<Self> {
        let dim = SpinDim::new(r.twice_j)?;
        let norm2: f64 = r.amplitudes.iter().map(|a| a * a).sum();
        if (norm2 - 1.0).abs() <= NORM_TOLERANCE {
            let mut amps = r.amplitudes;
            canonicalize_sign(&mut amps);
            return ProbeState::new(dim, amps, r.label);
        }
        ProbeState::custom(dim, r.amplitudes, r.label)
    }
}

impl Serialize for ProbeState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProbeRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProbeState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        ProbeRecord::deserialize(d)?.try_into().map_err(serde::de::Error::custom)
    }
}

/// Flips the global sign so the first nonzero amplitude is non-negative.
pub fn canonicalize_sign(amps: &mut [f64]) {
    if let Some(first) = amps.iter().find(|a| a.abs() > 1e-14) {
        if *first < 0.0 {
            amps.iter_mut().for_each(|a| *a = -*a);
        }
    }
}

fn finish(dim: SpinDim, mut amps: Vec<f64>, label: &str) -> ProbeState {
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    canonicalize_sign(&mut amps);
    ProbeState {
        dim,
        amplitudes: amps,
        label: label.to_string(),
    }
}

/// `phi_m = cos(pi m / (2j+1)) / sqrt(j + 1/2)`, the half-period cosine profile.
pub fn cosine_state(dim: SpinDim) -> ProbeState {
    let n1 = dim.twice_j() as f64 + 1.0;
    let amps = dim
        .m_values()
        .into_iter()
        .map(|m| (std::f64::consts::PI * m / n1).cos())
        .collect();
    finish(dim, amps, "cosine")
}

pub fn noon_state(dim: SpinDim) -> ProbeState {
    let mut amps = vec![0.0; dim.dim()];
    amps[0] = 1.0;
    *amps.last_mut().unwrap() = 1.0;
    finish(dim, amps, "noon")
}

/// Equal weights `1/sqrt(2j+1)` (the phase state).
pub fn flat_phase_state(dim: SpinDim) -> ProbeState {
    finish(dim, vec![1.0; dim.dim()], "flat")
}

/// Truncated Gaussian profile `phi_m ∝ exp(-m^2 / (4 w^2))`.
///
/// `w` is the standard deviation of `m` under `phi_m^2` (so the spin-coherent
/// state corresponds to `w = sqrt(N)/2`), and for `w << j` the pure-state QFI is
/// `4 w^2`.
pub fn gaussian_state(dim: SpinDim, width: f64) -> Result<ProbeState> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::InvalidArgument(format!("gaussian width must be positive, got {width}")));
    }
    let amps = dim
        .m_values()
        .into_iter()
        .map(|m| (-m * m / (4.0 * width * width)).exp())
        .collect();
    Ok(finish(dim, amps, &format!("gaussian:{width}")))
}

/// `ln(n!)` by direct accumulation.
pub(crate) fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| f64::from(k).ln()).sum()
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    ln_factorial(n) - (ln_factorial(k) + ln_factorial(n - k))
}

/// `phi_m = d^j_{m,j}(pi/2) = 2^{-j} sqrt(C(2j, j+m))`.
pub fn spin_coherent_state(dim: SpinDim) -> ProbeState {
    let n = dim.twice_j();
    let amps = (0..=n)
        .map(|k| (0.5 * ln_binomial(n, k) - 0.5 * f64::from(n) * std::f64::consts::LN_2).exp())
        .collect();
    finish(dim, amps, "coherent")
}

/// `phi_m = d^j_{m,0}(pi/2)`; nonzero only for even `j + m`, where
/// `|d| = 2^{-j} sqrt(C(j+m, (j+m)/2) C(j-m, (j-m)/2))` with sign `(-1)^{(j-m)/2}`.
pub fn holland_burnett_state(dim: SpinDim) -> Result<ProbeState> {
    if !dim.is_integer() {
        return Err(Error::HalfIntegerSpin {
            twice_j: dim.twice_j(),
            what: "holland_burnett_state",
        });
    }
    let j = dim.twice_j() / 2;
    let amps = (0..=dim.twice_j())
        .map(|k| {
            // k = j + m
            if k % 2 == 1 {
                return 0.0;
            }
            let a = k;
            let b = 2 * j - k;
            let ln_mag = 0.5 * (ln_binomial(a, a / 2) + ln_binomial(b, b / 2))
                - f64::from(j) * std::f64::consts::LN_2;
            let sign = if (b / 2) % 2 == 0 { 1.0 } else { -1.0 };
            sign * ln_mag.exp()
        })
        .collect();
    Ok(finish(dim, amps, "holland-burnett"))
}

/// Diagonal `J_z` with entries `m` ascending.
pub fn jz_matrix(dim: SpinDim) -> RMatrix {
    RMatrix::from_diagonal(&nalgebra::DVector::from_vec(dim.m_values()))
}
