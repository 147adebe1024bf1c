//! Splitting `N` particles into independently probed clusters.
//!
//! Cluster QFIs come from the probe optimizer for small clusters and from the
//! cosine-profile asymptotic predictor above `max_cluster`.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, predict_inv_f_theta};
use crate::error::{Error, Result};
use crate::optimizer::optimal_qfi;
use crate::qfi::NoiseSetting;
use crate::spin::{cosine_state, SpinDim};

/// Largest cluster whose QFI is obtained by optimization.
pub const MAX_EXACT_CLUSTER: usize = 12;

pub const CROSSOVER_BRACKET: (f64, f64) = (1e-6, 2.0);
pub const CROSSOVER_TOLERANCE: f64 = 1e-5;

type CacheKey = (u32, i64);

fn cache() -> &'static RwLock<HashMap<CacheKey, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn rounded_delta(delta: f64) -> (i64, f64) {
    let key = (delta * 1e6).round() as i64;
    (key, key as f64 * 1e-6)
}

/// Optimal `F_θ` of a cluster of `n` particles, memoized on
/// `(n, Δ rounded to 1e−6)` and evaluated at the rounded `Δ`.
pub fn cluster_qfi(n: usize, delta: f64) -> Result<f64> {
    let dim = SpinDim::new(n as u32)?;
    let (k, d) = rounded_delta(delta);
    let key = (dim.twice_j(), k);
    if let Some(v) = cache().read().map_err(|_| poisoned())?.get(&key) {
        return Ok(*v);
    }
    let v = optimal_qfi(dim, d)?;
    cache().write().map_err(|_| poisoned())?.entry(key).or_insert(v);
    Ok(v)
}

fn poisoned() -> Error {
    Error::InvalidArgument("cluster cache lock poisoned".into())
}

/// Per-particle optimal QFI `F_opt(n/2, Δ) / n`.
pub fn per_particle_qfi(n: usize, delta: f64) -> Result<f64> {
    Ok(cluster_qfi(n, delta)? / n as f64)
}

/// `Δ` at which clusters of `n_large` and `n_small` particles give equal
/// per-particle QFI, by bisection.
pub fn crossover_delta(n_small: usize, n_large: usize) -> Result<f64> {
    if !(1 <= n_small && n_small < n_large && n_large <= 8) {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= n_small < n_large <= 8, got ({n_small}, {n_large})"
        )));
    }
    let diff = |d: f64| -> Result<f64> { Ok(per_particle_qfi(n_large, d)? - per_particle_qfi(n_small, d)?) };
    let (mut lo, mut hi) = CROSSOVER_BRACKET;
    let mut f_lo = diff(lo)?;
    let f_hi = diff(hi)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > CROSSOVER_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let f_mid = diff(mid)?;
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanMethod {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPlan {
    #[serde(rename = "N")]
    pub total_n: usize,
    pub delta: f64,
    pub cluster_size: usize,
    /// Number of full clusters.
    pub nu: usize,
    /// Size of the extra cluster holding the remainder (0 if none).
    pub remainder: usize,
    pub per_cluster_f: f64,
    pub total_f: f64,
    pub bounds: Bounds,
    pub method: PlanMethod,
}

fn cluster_f(n: usize, delta: f64, max_exact: usize) -> Result<(f64, PlanMethod)> {
    if n <= max_exact {
        return Ok((cluster_qfi(n, delta)?, PlanMethod::Exact));
    }
    let dim = SpinDim::new(n as u32)?;
    let inv = predict_inv_f_theta(&cosine_state(dim), NoiseSetting::new(delta, 0.0)?);
    Ok((1.0 / inv, PlanMethod::Asymptotic))
}

fn plan_for(total: usize, size: usize, delta: f64, max_exact: usize) -> Result<ClusterPlan> {
    let nu = total / size;
    let remainder = total % size;
    let (f, mut method) = cluster_f(size, delta, max_exact)?;
    let mut total_f = nu as f64 * f;
    if remainder > 0 {
        let (fr, mr) = cluster_f(remainder, delta, max_exact)?;
        total_f += fr;
        if mr == PlanMethod::Asymptotic {
            method = PlanMethod::Asymptotic;
        }
    }
    let b = asymptotics::clustering_bounds(total, delta)?;
    Ok(ClusterPlan {
        total_n: total,
        delta,
        cluster_size: size,
        nu,
        remainder,
        per_cluster_f: f,
        total_f,
        bounds: Bounds {
            lower: b.lower,
            upper: b.upper,
        },
        method,
    })
}

/// Scans cluster sizes `1..=max_cluster` and returns the largest total QFI;
/// ties go to the smaller cluster.
pub fn best_partition(total: usize, delta: f64, max_cluster: usize) -> Result<ClusterPlan> {
    if total < 1 || max_cluster < 1 {
        return Err(Error::InvalidArgument("N and max_cluster must be at least 1".into()));
    }
    NoiseSetting::new(delta, 0.0)?;
    let sizes: Vec<usize> = (1..=max_cluster.min(total)).collect();
    let plans: Vec<ClusterPlan> = sizes
        .par_iter()
        .map(|&n| plan_for(total, n, delta, MAX_EXACT_CLUSTER))
        .collect::<Result<_>>()?;
    let mut best = plans[0].clone();
    for p in plans.into_iter().skip(1) {
        if p.total_f > best.total_f * (1.0 + 1e-9) {
            best = p;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotNoiseReport {
    pub inv_f: f64,
    pub lower: f64,
    pub upper: f64,
    /// `1/F ≥ lower` (to `1e−12`).
    pub above_lower: bool,
    /// `(1/F) / upper`.
    pub ratio_to_upper: f64,
}

pub fn check_shot_noise_bounds(plan: &ClusterPlan) -> Result<ShotNoiseReport> {
    let b = asymptotics::clustering_bounds(plan.total_n, plan.delta)?;
    let inv_f = 1.0 / plan.total_f;
    Ok(ShotNoiseReport {
        inv_f,
        lower: b.lower,
        upper: b.upper,
        above_lower: inv_f >= b.lower - 1e-12,
        ratio_to_upper: if b.upper > 0.0 { inv_f / b.upper } else { f64::INFINITY },
    })
}
