//! Probe optimization on the unit sphere of real amplitude profiles.
//!
//! Projected gradient ascent: the Euclidean gradient is projected onto the
//! tangent space at `φ`, a Barzilai–Borwein trial step is backtracked until
//! an Armijo condition holds, and the iterate is renormalized. Several starts
//! run in parallel and the best end point wins.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{self, DEFAULT_GRID};
use crate::qfi::{build_density, coherence_kernel, NoiseSetting, QfiSolver};
use crate::spin::{self, canonicalize_sign, ProbeState, SpinDim};

pub const DEFAULT_SEED: u64 = 20240501;
pub const RANDOM_STARTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Maximize `F_θ`.
    PhaseQfi,
    /// Maximize `F_Δ`.
    DiffusionQfi,
    /// Minimize the wrapped variance of the blurred phase distribution.
    PhaseVariance,
}

impl std::str::FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "phase_qfi" | "phase" | "qfi" => Ok(Objective::PhaseQfi),
            "diffusion_qfi" | "diffusion" => Ok(Objective::DiffusionQfi),
            "phase_variance" | "variance" => Ok(Objective::PhaseVariance),
            other => Err(Error::Parse(format!("unknown objective `{other}`"))),
        }
    }
}

impl Objective {
    /// True when larger values are better.
    pub fn maximizes(self) -> bool {
        !matches!(self, Objective::PhaseVariance)
    }

    /// True when the objective depends only on `|φ_m|`.
    pub fn sign_invariant(self) -> bool {
        matches!(self, Objective::PhaseQfi | Objective::DiffusionQfi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub max_iterations: usize,
    /// Stop once the tangent gradient norm falls below this (relative to
    /// `max(1, |f|)`).
    pub gradient: f64,
    /// Central finite-difference step for objectives without an analytic
    /// gradient.
    pub fd_step: f64,
    /// Grid used by the phase-variance objective.
    pub grid: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            gradient: 1e-10,
            fd_step: 1e-6,
            grid: DEFAULT_GRID,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    pub dim: SpinDim,
    pub setting: NoiseSetting,
    pub objective: Objective,
    pub symmetric: bool,
    pub starts: Vec<ProbeState>,
    pub tolerances: Tolerances,
}

impl OptimizationProblem {
    /// Problem with the default start set (cosine, NOON, flat, Gaussian of
    /// width `√N/2`).
    pub fn new(dim: SpinDim, setting: NoiseSetting, objective: Objective) -> Self {
        Self {
            dim,
            setting,
            objective,
            symmetric: true,
            starts: default_starts(dim),
            tolerances: Tolerances::default(),
        }
    }

    pub fn with_random_starts(mut self, count: usize, seed: u64) -> Self {
        self.starts.extend(random_starts(self.dim, count, seed, self.symmetric));
        self
    }

    fn validate(&self) -> Result<()> {
        if self.starts.is_empty() {
            return Err(Error::InvalidArgument("at least one start is required".into()));
        }
        if let Some(s) = self.starts.iter().find(|s| s.dim() != self.dim) {
            return Err(Error::InvalidArgument(format!(
                "start `{}` has twice_j = {}, expected {}",
                s.label(),
                s.dim().twice_j(),
                self.dim.twice_j()
            )));
        }
        let t = &self.tolerances;
        if !(t.gradient > 0.0 && t.fd_step > 0.0) || t.max_iterations == 0 {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }
}

pub fn default_starts(dim: SpinDim) -> Vec<ProbeState> {
    let w = (dim.particles() as f64).sqrt() / 2.0;
    let mut out = vec![spin::cosine_state(dim), spin::noon_state(dim), spin::flat_phase_state(dim)];
    if let Ok(g) = spin::gaussian_state(dim, w) {
        out.push(g);
    }
    out
}

/// Gaussian random profiles, mirrored when `symmetric`.
pub fn random_starts(dim: SpinDim, count: usize, seed: u64, symmetric: bool) -> Vec<ProbeState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dim.dim();
    (0..count)
        .filter_map(|i| {
            let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            if symmetric {
                for k in 0..n / 2 {
                    v[n - 1 - k] = v[k];
                }
            }
            ProbeState::custom(dim, v, format!("random-{i}")).ok()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub label: String,
    pub start_value: f64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub best_state: ProbeState,
    pub best_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Label of the start that produced `best_state`.
    pub start_provenance: String,
    pub outcomes: Vec<StartOutcome>,
    pub objective: Objective,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultMetadata {
    pub objective: Objective,
    pub value: f64,
    pub starts: Vec<StartOutcome>,
    pub iterations: usize,
    pub converged: bool,
    pub winner: String,
}

impl OptimizationResult {
    pub fn metadata(&self) -> ResultMetadata {
        ResultMetadata {
            objective: self.objective,
            value: self.best_value,
            starts: self.outcomes.clone(),
            iterations: self.iterations,
            converged: self.converged,
            winner: self.start_provenance.clone(),
        }
    }
}

/// Evaluates an objective in "larger is better" form.
struct Evaluator {
    dim: SpinDim,
    setting: NoiseSetting,
    objective: Objective,
    tol: Tolerances,
    symmetric: bool,
    kernel: nalgebra::DMatrix<f64>,
}

impl Evaluator {
    fn new(p: &OptimizationProblem) -> Self {
        Self {
            dim: p.dim,
            setting: NoiseSetting {
                delta: p.setting.delta,
                theta: 0.0,
            },
            objective: p.objective,
            tol: p.tolerances,
            symmetric: p.symmetric,
            kernel: coherence_kernel(p.dim, p.setting.delta),
        }
    }

    fn state(&self, phi: &[f64]) -> Result<ProbeState> {
        ProbeState::custom(self.dim, phi.to_vec(), "iterate")
    }

    fn value(&self, phi: &[f64]) -> Result<f64> {
        let s = self.state(phi)?;
        match self.objective {
            Objective::PhaseQfi => Ok(QfiSolver::new(&build_density(&s, self.setting))?.f_theta()),
            Objective::DiffusionQfi => QfiSolver::new(&build_density(&s, self.setting))?.f_delta(),
            Objective::PhaseVariance => Ok(-measurement::phase_variance(&s, self.setting.delta, self.tol.grid)?),
        }
    }

    /// Euclidean gradient at a unit vector.
    fn gradient(&self, phi: &[f64]) -> Result<Vec<f64>> {
        let g = match self.objective {
            Objective::PhaseQfi => self.phase_gradient(phi)?,
            _ => self.fd_gradient(phi)?,
        };
        Ok(if self.symmetric { symmetrize(&g) } else { g })
    }

    /// `∂F_θ/∂φ = 2 (K ∘ Re G) φ` with `G = 2i[J_z, L] − L²`, `L` the phase SLD.
    ///
    /// Pairs skipped by the eigenvalue threshold drop out of `L`, so this
    /// stays the derivative of the thresholded `F_θ` when `ρ` is numerically
    /// rank deficient.
    fn phase_gradient(&self, phi: &[f64]) -> Result<Vec<f64>> {
        let n = phi.len();
        let m: Vec<f64> = self.dim.m_values();
        if self.setting.delta == 0.0 {
            // F = 4 Var(m) for pure states
            let mean: f64 = phi.iter().zip(&m).map(|(a, x)| a * a * x).sum();
            return Ok(phi.iter().zip(&m).map(|(a, x)| 8.0 * a * (x * x - 2.0 * mean * x)).collect());
        }
        let s = self.state(phi)?;
        let solver = QfiSolver::new(&build_density(&s, self.setting))?;
        let l = solver.sld_phase();
        let l2 = crate::linalg::complex_product(&l, &l);
        let mut g = vec![0.0; n];
        for (a, ga) in g.iter_mut().enumerate() {
            let mut acc = 0.0;
            for b in 0..n {
                // (2i[J,L])_{ab} = 2i (m_a − m_b) L_ab
                let comm = l[(a, b)] * num_complex::Complex64::new(0.0, 2.0 * (m[a] - m[b]));
                let gab = (comm - l2[(a, b)]).re;
                acc += self.kernel[(a, b)] * gab * phi[b];
            }
            *ga = 2.0 * acc;
        }
        Ok(g)
    }

    fn fd_gradient(&self, phi: &[f64]) -> Result<Vec<f64>> {
        let n = phi.len();
        let h = self.tol.fd_step;
        let mut g = vec![0.0; n];
        let coords: Vec<usize> = if self.symmetric { (0..n.div_ceil(2)).collect() } else { (0..n).collect() };
        let vals: Vec<Result<(usize, f64)>> = coords
            .iter()
            .map(|&k| {
                let mut plus = phi.to_vec();
                let mut minus = phi.to_vec();
                plus[k] += h;
                minus[k] -= h;
                if self.symmetric && n - 1 - k != k {
                    plus[n - 1 - k] += h;
                    minus[n - 1 - k] -= h;
                }
                let fp = self.value(&normalized(&plus))?;
                let fm = self.value(&normalized(&minus))?;
                let mut d = (fp - fm) / (2.0 * h);
                // the paired perturbation moves two coordinates at once
                if self.symmetric && n - 1 - k != k {
                    d /= 2.0;
                }
                Ok((k, d))
            })
            .collect();
        for v in vals {
            let (k, d) = v?;
            g[k] = d;
            if self.symmetric {
                g[n - 1 - k] = d;
            }
        }
        Ok(g)
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn symmetrize(g: &[f64]) -> Vec<f64> {
    let n = g.len();
    (0..n).map(|k| 0.5 * (g[k] + g[n - 1 - k])).collect()
}

fn tangent(g: &[f64], phi: &[f64]) -> Vec<f64> {
    let dot: f64 = g.iter().zip(phi).map(|(a, b)| a * b).sum();
    g.iter().zip(phi).map(|(a, b)| a - dot * b).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Trajectory {
    phi: Vec<f64>,
    value: f64,
    start_value: f64,
    iterations: usize,
    converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

fn ascend(eval: &Evaluator, start: &ProbeState) -> Result<Trajectory> {
    let mut phi = start.amplitudes().to_vec();
    if eval.symmetric {
        phi = normalized(&symmetrize(&phi));
    }
    let mut f = eval.value(&phi)?;
    let start_value = f;
    let mut g = tangent(&eval.gradient(&phi)?, &phi);
    let mut step = 1.0 / norm(&g).max(1.0);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let tol = eval.tol;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < tol.max_iterations {
        let gn = norm(&g);
        if gn <= tol.gradient * f.abs().max(1.0) {
            converged = true;
            break;
        }
        if let Some((p_old, g_old)) = &prev {
            let s: Vec<f64> = phi.iter().zip(p_old).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g.iter().zip(g_old).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
            let ss: f64 = s.iter().map(|x| x * x).sum();
            if sy.abs() > 0.0 && ss > 0.0 {
                step = (ss / sy.abs()).min(1e6 / gn);
            }
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = phi.iter().zip(&g).map(|(p, d)| p + t * d).collect();
            let trial = normalized(&trial);
            if let Ok(ft) = eval.value(&trial) {
                if ft >= f + ARMIJO * t * gn * gn {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            t *= 0.5;
        }
        iterations += 1;
        let Some((next, fnext)) = accepted else {
            // no ascent possible above roundoff: a numerical stationary point
            converged = gn <= 1e-6 * f.abs().max(1.0);
            break;
        };
        let gnext = tangent(&eval.gradient(&next)?, &next);
        prev = Some((std::mem::replace(&mut phi, next), std::mem::replace(&mut g, gnext)));
        let improved = fnext - f;
        f = fnext;
        if improved <= 1e-15 * f.abs().max(1.0) && norm(&g) <= 1e-6 * f.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(Trajectory {
        phi,
        value: f,
        start_value,
        iterations,
        converged,
    })
}

fn boundary_amplitude(s: &ProbeState) -> f64 {
    let a = s.amplitudes();
    a[0].abs().max(a[a.len() - 1].abs())
}

pub fn optimize(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    problem.validate()?;
    let eval = Evaluator::new(problem);
    let runs: Vec<(String, Result<Trajectory>)> = problem
        .starts
        .par_iter()
        .map(|s| (s.label().to_string(), ascend(&eval, s)))
        .collect();

    let sense = if problem.objective.maximizes() { 1.0 } else { -1.0 };
    let mut outcomes = Vec::with_capacity(runs.len());
    let mut best: Option<(ProbeState, f64, String, usize, bool)> = None;
    let mut iterations = 0;
    for (label, run) in runs {
        let run = match run {
            Ok(r) => r,
            // a start on which the objective is undefined is skipped
            Err(Error::Divergent(_)) => continue,
            Err(e) => return Err(e),
        };
        iterations += run.iterations;
        outcomes.push(StartOutcome {
            label: label.clone(),
            start_value: sense * run.start_value,
            value: sense * run.value,
            iterations: run.iterations,
            converged: run.converged,
        });
        let mut amps = run.phi.clone();
        if problem.objective.sign_invariant() {
            // any diagonal ±1 matrix commutes with J_z and the dephasing, so
            // the QFIs only see |φ_m|; report the nonnegative representative
            amps.iter_mut().for_each(|a| *a = a.abs());
        }
        canonicalize_sign(&mut amps);
        let state = ProbeState::custom(problem.dim, amps, "optimized")?;
        let better = match &best {
            None => true,
            Some((bs, bv, ..)) => {
                let tie = (run.value - bv).abs() <= 1e-12 * bv.abs().max(1.0);
                if tie {
                    boundary_amplitude(&state) < boundary_amplitude(bs)
                } else {
                    run.value > *bv
                }
            }
        };
        if better {
            best = Some((state, run.value, label, run.iterations, run.converged));
        }
    }
    let Some((best_state, value, provenance, _, converged)) = best else {
        return Err(Error::Divergent("objective undefined at every start".into()));
    };
    Ok(OptimizationResult {
        best_state,
        best_value: sense * value,
        iterations,
        converged,
        start_provenance: provenance,
        outcomes,
        objective: problem.objective,
    })
}

/// Largest `F_θ` over symmetric probes of spin `j`, from the default starts
/// plus [`RANDOM_STARTS`] random ones.
pub fn optimal_qfi(dim: SpinDim, delta: f64) -> Result<f64> {
    Ok(optimal_probe(dim, delta)?.best_value)
}

pub fn optimal_probe(dim: SpinDim, delta: f64) -> Result<OptimizationResult> {
    let problem = OptimizationProblem::new(dim, NoiseSetting::new(delta, 0.0)?, Objective::PhaseQfi)
        .with_random_starts(RANDOM_STARTS, DEFAULT_SEED);
    optimize(&problem)
}

/// `⟨δθ²⟩` of the blurred canonical-phase distribution about the true phase.
pub fn phase_variance_objective(state: &ProbeState, setting: NoiseSetting) -> Result<f64> {
    measurement::phase_variance(state, setting.delta, DEFAULT_GRID)
}

/// L2 distance after aligning global sign.
pub fn l2_distance(a: &ProbeState, b: &ProbeState) -> f64 {
    let x = DVector::from_column_slice(a.amplitudes());
    let y = DVector::from_column_slice(b.amplitudes());
    (&x - &y).norm().min((&x + &y).norm())
}
