//! Invariant suite behind `dephase validate`. Each check compares a
//! production path against an oracle or a structural identity.

use std::f64::consts::PI;

use serde::Serialize;

use crate::asymptotics::{self, heisenberg_diffusion_bound};
use crate::clustering;
use crate::error::Result;
use crate::linalg;
use crate::measurement::{self, ClosedForm, DEFAULT_FISHER_STEP};
use crate::operator_series;
use crate::optimizer::{self, Objective, OptimizationProblem};
use crate::oracle;
use crate::qfi::{build_density, NoiseSetting, QfiSolver};
use crate::spin::{self, ProbeState, SpinDim, StateKind};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub quick: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn d(tj: u32) -> SpinDim {
    SpinDim::new(tj).expect("twice_j >= 1")
}

fn at(delta: f64) -> NoiseSetting {
    NoiseSetting::new(delta, 0.0).expect("valid setting")
}

fn named_states(dim: SpinDim) -> Vec<ProbeState> {
    let mut out = vec![
        spin::cosine_state(dim),
        spin::noon_state(dim),
        spin::flat_phase_state(dim),
        spin::spin_coherent_state(dim),
    ];
    if let Ok(g) = spin::gaussian_state(dim, (dim.particles() as f64).sqrt() / 2.0) {
        out.push(g);
    }
    if let Ok(h) = spin::holland_burnett_state(dim) {
        out.push(h);
    }
    out
}

/// Worst value of `f` over the inputs, with the input that produced it.
fn worst<T>(items: impl IntoIterator<Item = T>, f: impl Fn(&T) -> Result<f64>) -> Result<(f64, Option<T>)> {
    let mut best = (f64::NEG_INFINITY, None);
    for it in items {
        let v = f(&it)?;
        if v > best.0 || v.is_nan() {
            best = (v, Some(it));
        }
    }
    Ok(best)
}

fn check(name: &str, tol: f64, value: Result<f64>) -> Check {
    match value {
        Ok(v) => Check {
            name: name.into(),
            passed: v <= tol,
            detail: format!("worst {v:.3e} (tol {tol:.0e})"),
        },
        Err(e) => Check {
            name: name.into(),
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn flag(name: &str, value: Result<(bool, String)>) -> Check {
    match value {
        Ok((passed, detail)) => Check {
            name: name.into(),
            passed,
            detail,
        },
        Err(e) => Check {
            name: name.into(),
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn spins(quick: bool) -> Vec<u32> {
    if quick {
        (1..=20).collect()
    } else {
        (1..=40).chain([60, 100, 200]).collect()
    }
}

pub fn run_suite(quick: bool) -> ValidationReport {
    let mut checks = Vec::new();
    let small: Vec<u32> = (1..=20).collect();
    let deltas = [0.0, 0.01, 0.1, 0.5, 2.0];

    checks.push(check(
        "normalization",
        spin::NORM_TOLERANCE,
        worst(spins(quick).into_iter().flat_map(|tj| named_states(d(tj))), |s| {
            Ok((s.norm_squared() - 1.0).abs())
        })
        .map(|w| w.0),
    ));

    let rot_max = if quick { 20 } else { 40 };
    checks.push(check(
        "wigner columns vs rotation",
        1e-10,
        worst(1..=rot_max, |&tj| {
            let dim = d(tj);
            let mut err = 0.0f64;
            let sc = oracle::rotated_probe(dim, dim.dim() - 1)?;
            for (a, b) in sc.iter().zip(spin::spin_coherent_state(dim).amplitudes()) {
                err = err.max((a - b).abs());
            }
            if dim.is_integer() {
                let hb = oracle::rotated_probe(dim, dim.dim() / 2)?;
                for (a, b) in hb.iter().zip(spin::holland_burnett_state(dim)?.amplitudes()) {
                    err = err.max((a - b).abs());
                }
            }
            Ok(err)
        })
        .map(|w| w.0),
    ));

    let dens_max = if quick { 10 } else { 40 };
    checks.push(check(
        "density hermitian, unit trace, psd",
        1e-12,
        worst((1..=dens_max).flat_map(|tj| named_states(d(tj))), |s| {
            let mut w = 0.0f64;
            for &delta in &deltas {
                let rho = build_density(s, NoiseSetting::new(delta, 0.7)?);
                w = w.max(linalg::hermiticity_residual(rho.entries()) * 100.0);
                w = w.max((rho.trace() - 1.0).abs());
                w = w.max(-rho.eigensystem()?.min_raw_eigenvalue);
            }
            Ok(w)
        })
        .map(|w| w.0),
    ));

    checks.push(check(
        "eigensystem reconstruction",
        1e-10,
        worst((1..=dens_max).flat_map(|tj| named_states(d(tj))), |s| {
            let mut w = 0.0f64;
            for &delta in &deltas {
                let rho = build_density(s, NoiseSetting::new(delta, 0.3)?);
                let eig = rho.eigensystem()?;
                w = w.max(linalg::max_abs(&(eig.reconstruct() - rho.entries())));
                w = w.max((eig.values.iter().sum::<f64>() - 1.0).abs());
            }
            Ok(w)
        })
        .map(|w| w.0),
    ));

    checks.push(check(
        "theta invariance of F_theta",
        1e-9,
        worst((1..=dens_max).flat_map(|tj| named_states(d(tj))), |s| {
            let mut w = 0.0f64;
            for &delta in &[0.01, 0.3] {
                let f0 = QfiSolver::new(&build_density(s, NoiseSetting::new(delta, 0.0)?))?.f_theta();
                for theta in [0.7, PI / 3.0] {
                    let f = QfiSolver::new(&build_density(s, NoiseSetting::new(delta, theta)?))?.f_theta();
                    w = w.max((f - f0).abs() / f0.max(1.0));
                }
            }
            Ok(w)
        })
        .map(|w| w.0),
    ));

    let mono_max = if quick { 10 } else { 40 };
    checks.push(flag(
        "F_theta non-increasing in delta",
        (|| {
            let grid: Vec<f64> = (0..25).map(|k| 1e-4 * 10f64.powf(k as f64 / 6.0)).collect();
            for tj in 1..=mono_max {
                for s in named_states(d(tj)) {
                    let mut prev = f64::INFINITY;
                    for &delta in &grid {
                        let f = crate::qfi::phase_qfi_of(&s, delta)?;
                        if f > prev * (1.0 + 1e-10) + 1e-12 {
                            return Ok((false, format!("{} j={} rises at Δ={delta}", s.label(), tj as f64 / 2.0)));
                        }
                        prev = f;
                    }
                }
            }
            Ok((true, format!("{} states x 25 deltas", mono_max * 5)))
        })(),
    ));

    checks.push(check(
        "F_theta vs fidelity finite difference (rel)",
        1e-3,
        worst((1..=20u32).flat_map(|tj| named_states(d(tj))), |s| {
            let mut w = 0.0f64;
            for &delta in &[0.0, 0.05, 0.5] {
                let f = crate::qfi::phase_qfi_of(s, delta)?;
                let fd = oracle::fidelity_fd_phase_qfi(s, NoiseSetting::new(delta, 0.4)?, 1e-4)?;
                // the difference quotient carries ~8ε/h² of absolute roundoff,
                // so tiny values are compared on an absolute scale
                w = w.max((f - fd).abs() / f.max(1e-3));
            }
            Ok(w)
        })
        .map(|w| w.0),
    ));

    checks.push(check(
        "d rho / d delta vs finite difference",
        1e-7,
        worst(small.iter().map(|&tj| spin::cosine_state(d(tj))), |s| {
            let setting = NoiseSetting::new(0.2, 0.5)?;
            let rho = build_density(s, setting);
            let fd = oracle::fd_delta_derivative(s, setting, 1e-5)?;
            Ok(linalg::max_abs(&(rho.delta_derivative() - fd)))
        })
        .map(|w| w.0),
    ));

    checks.push(check(
        "SLD identities (zero mean, Tr rho L^2 = F)",
        1e-9,
        worst((1..=10u32).flat_map(|tj| named_states(d(tj))), |s| {
            let rho = build_density(s, NoiseSetting::new(0.2, 0.3)?);
            let solver = QfiSolver::new(&rho)?;
            let lt = solver.sld_phase();
            let ld = solver.sld_diffusion();
            let r = rho.entries();
            let mut w = linalg::trace(&(r * &lt)).norm().max(linalg::trace(&(r * &ld)).norm());
            w = w.max(linalg::hermiticity_residual(&lt)).max(linalg::hermiticity_residual(&ld));
            let f = solver.f_theta();
            w = w.max((linalg::trace(&(r * &lt * &lt)).re - f).abs() / f.max(1.0));
            let fd = solver.f_delta()?;
            w = w.max((linalg::trace(&(r * &ld * &ld)).re - fd).abs() / fd.max(1.0));
            Ok(w)
        })
        .map(|w| w.0),
    ));

    checks.push(check(
        "exp/log round trip",
        1e-8,
        worst((1..=if quick { 10 } else { 40 }).map(|tj| spin::cosine_state(d(tj))), |s| {
            let delta = if s.dim().twice_j() > 20 { 0.5 } else { 0.3 };
            let rho = build_density(s, at(delta));
            let h = operator_series::log_density(&rho)?;
            Ok(linalg::max_abs(&(operator_series::exp_neg(&h)? - rho.entries())))
        })
        .map(|w| w.0),
    ));

    checks.push(check(
        "distribution normalization and positivity",
        1e-9,
        worst([(20u32, 0.0), (20, 0.03), (40, 0.3), (200, 0.03)], |&(tj, delta)| {
            let mut w = 0.0f64;
            for s in named_states(d(tj)) {
                let dist = measurement::convolved_distribution(&s, at(delta), 4096)?;
                w = w.max((dist.integral() - 1.0).abs());
                w = w.max(-dist.density().iter().copied().fold(0.0, f64::min));
            }
            Ok(w)
        })
        .map(|w| w.0),
    ));

    let conv_grid = if quick { 1 << 11 } else { 1 << 14 };
    checks.push(check(
        "Fourier vs quadrature convolution",
        1e-8,
        worst([(18u32, 0.003), (18, 0.3), (40, 0.03)], |&(tj, delta)| {
            let c = measurement::conditional_distribution(&spin::cosine_state(d(tj)), 0.0, conv_grid)?;
            let a = measurement::convolve_with_diffusion(&c, delta)?;
            let b = oracle::quadrature_convolution(&c, delta)?;
            Ok(a.density().iter().zip(b.density()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        })
        .map(|w| w.0),
    ));

    checks.push(check(
        "half-angle closed form vs direct sum (rel)",
        1e-6,
        worst([2u32, 9, 18, 41], |&tj| {
            let dim = d(tj);
            let exact = measurement::PhaseDistribution::from_fn(4096, measurement::DistributionKind::Conditional, 0.0, |x| {
                oracle::direct_phase_density(&spin::cosine_state(dim), x)
            })?;
            let closed = measurement::closed_form_cosine_distribution(dim, 4096, ClosedForm::HalfAngle)?;
            Ok(measurement::max_relative_deviation(&closed, &exact, 1e-10))
        })
        .map(|w| w.0),
    ));

    let chain_spins: Vec<u32> = if quick { vec![10, 20, 40] } else { vec![10, 20, 40, 100, 200] };
    checks.push(flag(
        "information chain var >= 1/F >= delta + 1/N^2",
        (|| {
            for &tj in &chain_spins {
                for delta in [0.003, 0.03] {
                    let s = spin::cosine_state(d(tj));
                    let var = measurement::wrapped_variance(&measurement::convolved_distribution(&s, at(delta), 1 << 14)?, 0.0);
                    let inv_f = 1.0 / crate::qfi::phase_qfi_of(&s, delta)?;
                    let lower = heisenberg_diffusion_bound(tj as usize, delta);
                    if !(var >= inv_f - 1e-9 && inv_f >= lower - 1e-9) {
                        return Ok((false, format!("j={} Δ={delta}: {var:e} {inv_f:e} {lower:e}", tj as f64 / 2.0)));
                    }
                }
            }
            Ok((true, format!("{} points", chain_spins.len() * 2)))
        })(),
    ));

    checks.push(check(
        "classical Fisher <= quantum Fisher (excess)",
        1e-6,
        worst(
            chain_spins.iter().flat_map(|&tj| named_states(d(tj))).flat_map(|s| [0.003, 0.03, 0.3].map(|dl| (s.clone(), dl))),
            |(s, delta)| {
                let dist = measurement::convolved_distribution(s, at(*delta), 1 << 14)?;
                let cfi = measurement::classical_fisher(&dist, DEFAULT_FISHER_STEP)?;
                Ok(cfi - crate::qfi::phase_qfi_of(s, *delta)?)
            },
        )
        .map(|w| w.0),
    ));

    checks.push(flag(
        "shot-noise bound containment",
        (|| {
            let cases: &[(usize, f64, usize)] = if quick {
                &[(1, 0.1, 1), (20, 0.01, 6), (20, 0.2, 6)]
            } else {
                &[(1, 0.1, 1), (100, 0.01, 12), (100, 0.04, 12), (60, 0.2, 12)]
            };
            for &(n, delta, maxc) in cases {
                let plan = clustering::best_partition(n, delta, maxc)?;
                let r = clustering::check_shot_noise_bounds(&plan)?;
                let singles = n as f64 * (-delta).exp();
                if !r.above_lower || plan.total_f < singles * (1.0 - 1e-9) {
                    return Ok((false, format!("N={n} Δ={delta}: 1/F={:e} lower={:e}", r.inv_f, r.lower)));
                }
            }
            Ok((true, format!("{} plans", cases.len())))
        })(),
    ));

    checks.push(flag(
        "bounds ordered and 1/N",
        (|| {
            for n in [1usize, 7, 100, 1000] {
                for delta in [0.0, 0.01, 0.2] {
                    let b = asymptotics::clustering_bounds(n, delta)?;
                    let b2 = asymptotics::clustering_bounds(2 * n, delta)?;
                    if b.lower > b.upper || (2.0 * b2.lower - b.lower).abs() > 1e-15 {
                        return Ok((false, format!("N={n} Δ={delta}")));
                    }
                }
            }
            Ok((true, "12 cases".into()))
        })(),
    ));

    if !quick {
        checks.push(flag(
            "sandwich Δ + 1/N² <= 1/F <= prediction + 5% (M >= 10)",
            (|| {
                let mut tested = 0;
                let mut bad = Vec::new();
                for tj in [40u32, 100, 200] {
                    for delta in [0.03, 0.1, 0.4] {
                        let j = tj as f64 / 2.0;
                        if delta * j * j < asymptotics::MASS_THRESHOLD {
                            continue;
                        }
                        for kind in [StateKind::Cosine, StateKind::Flat, StateKind::SpinCoherent, StateKind::HollandBurnett] {
                            let s = kind.build(d(tj))?;
                            let inv = 1.0 / crate::qfi::phase_qfi_of(&s, delta)?;
                            let p = asymptotics::predict_inv_f_theta(&s, at(delta));
                            let lo = heisenberg_diffusion_bound(tj as usize, delta);
                            tested += 1;
                            if inv < lo - 1e-12 || inv > p + 0.05 * (p - delta) {
                                bad.push(format!(
                                    "{kind} j={j} Δ={delta}: excess {:.1}% of (predict − Δ)",
                                    100.0 * (inv - p) / (p - delta)
                                ));
                            }
                        }
                    }
                }
                if bad.is_empty() {
                    Ok((true, format!("{tested} cases: cosine, flat, coherent, HB")))
                } else {
                    Ok((false, format!("{} of {tested} outside: {}", bad.len(), bad.join("; "))))
                }
            })(),
        ));

        checks.push(check(
            "symmetric optimum equals unconstrained (j <= 3)",
            1e-6,
            worst([(2u32, 0.1), (4, 0.05), (6, 0.1)], |&(tj, delta)| {
                let sym = optimizer::optimal_qfi(d(tj), delta)?;
                let mut p = OptimizationProblem::new(d(tj), at(delta), Objective::PhaseQfi);
                p.symmetric = false;
                let p = p.with_random_starts(optimizer::RANDOM_STARTS, optimizer::DEFAULT_SEED);
                let free = optimizer::optimize(&p)?.best_value;
                Ok((free - sym).abs() / sym)
            })
            .map(|w| w.0),
        ));
    }

    ValidationReport { quick, checks }
}
