//! Command-line front end for the `dephase` binary.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics;
use crate::clustering;
use crate::error::{Error, Result};
use crate::measurement::{self, ClosedForm, DEFAULT_GRID};
use crate::optimizer::{self, Objective, OptimizationProblem};
use crate::qfi::{self, NoiseSetting, QfiSolver};
use crate::spin::{ProbeState, SpinDim, StateKind};
use crate::validation;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;

pub const THREADS_ENV: &str = "DEPHASE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "dephase", version, about = "Phase and diffusion estimation with spin probes under collective dephasing")]
pub struct Cli {
    /// Worker threads (default: logical cores). DEPHASE_THREADS takes precedence.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args, Clone)]
pub struct Output {
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = optimizer::DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args, Clone)]
pub struct Point {
    /// Probe family: cosine, noon, flat, gaussian:<w>, coherent, holland-burnett.
    #[arg(long, value_parser = parse_state)]
    pub state: StateKind,
    /// Particle number N = 2j.
    #[arg(long = "j", value_name = "2J")]
    pub twice_j: u32,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
}

fn parse_state(s: &str) -> std::result::Result<StateKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact F_theta, F_delta and the compatibility term at one point.
    Qfi {
        #[command(flatten)]
        point: Point,
        #[command(flatten)]
        output: Output,
    },
    /// Grid of exact and predicted values over states, spins and deltas.
    Sweep(SweepArgs),
    /// Optimize the probe profile.
    Optimize {
        #[arg(long = "j", value_name = "2J")]
        twice_j: u32,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value = "phase_qfi")]
        objective: Objective,
        /// Allow asymmetric profiles.
        #[arg(long)]
        unconstrained: bool,
        #[arg(long, default_value_t = 0)]
        random_starts: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Canonical phase distribution on a grid.
    Distribution {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Use a closed form for the cosine probe instead of the direct sum.
        #[arg(long, value_enum)]
        closed_form: Option<ClosedFormArg>,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo canonical phase measurements.
    Measure {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        shots: usize,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Draw the random phase and the conditional outcome separately.
        #[arg(long)]
        two_stage: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Repeated phase and diffusion estimation.
    Estimate {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 100)]
        shots: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Delta at which two cluster sizes give equal per-particle QFI.
    Crossover {
        /// Cluster sizes, e.g. 1,2.
        #[arg(long, value_parser = parse_pair)]
        pair: (usize, usize),
        #[command(flatten)]
        output: Output,
    },
    /// Best split of N particles into clusters.
    Partition {
        #[arg(long = "n")]
        total: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 8)]
        max_cluster: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Run the invariant suite; exits 4 if any check fails.
    Validate {
        /// Small-spin oracle checks only.
        #[arg(long)]
        quick: bool,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ClosedFormArg {
    Printed,
    HalfAngle,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected `a,b`")?;
    let a = a.trim().parse().map_err(|_| format!("bad cluster size `{a}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad cluster size `{b}`"))?;
    Ok((a, b))
}

#[derive(Debug, Args, Clone)]
pub struct SweepArgs {
    /// Comma-separated state labels.
    #[arg(long, value_delimiter = ',')]
    pub states: Vec<String>,
    /// Comma-separated particle numbers N = 2j.
    #[arg(long = "j", value_delimiter = ',', value_name = "2J")]
    pub twice_j: Vec<u32>,
    #[arg(long, default_value_t = 1e-4)]
    pub delta_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 60)]
    pub points: usize,
    /// Linear instead of logarithmic delta spacing.
    #[arg(long)]
    pub linear: bool,
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    /// JSON file with a sweep configuration; replaces the range flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub states: Vec<String>,
    pub twice_j: Vec<u32>,
    pub delta_min: f64,
    pub delta_max: f64,
    pub points: usize,
    #[serde(default)]
    pub linear: bool,
    #[serde(default)]
    pub theta: f64,
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one state".into()));
        }
        if self.twice_j.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one spin".into()));
        }
        if self.points == 0 {
            return Err(Error::InvalidArgument("sweep needs at least one delta point".into()));
        }
        if !(self.delta_min >= 0.0 && self.delta_max >= self.delta_min) {
            return Err(Error::InvalidArgument("need 0 <= delta_min <= delta_max".into()));
        }
        if !self.linear && self.delta_min <= 0.0 {
            return Err(Error::InvalidArgument("log spacing needs delta_min > 0".into()));
        }
        Ok(())
    }

    pub fn deltas(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.delta_min];
        }
        (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                if k == 0 {
                    self.delta_min
                } else if k == n - 1 {
                    self.delta_max
                } else if self.linear {
                    self.delta_min + t * (self.delta_max - self.delta_min)
                } else {
                    (self.delta_min.ln() + t * (self.delta_max.ln() - self.delta_min.ln())).exp()
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub state: String,
    pub twice_j: u32,
    pub delta: f64,
    pub f_theta: f64,
    pub f_delta: f64,
    pub inv_f_minus_delta: f64,
    pub pred_inv_f_theta: f64,
    pub pred_inv_f_delta: f64,
    pub mass: f64,
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let kinds: Vec<StateKind> = cfg.states.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    let deltas = cfg.deltas();
    let mut jobs = Vec::new();
    for (kind, label) in kinds.iter().zip(&cfg.states) {
        for &tj in &cfg.twice_j {
            for &delta in &deltas {
                jobs.push((*kind, label.clone(), tj, delta));
            }
        }
    }
    jobs.par_iter()
        .map(|(kind, label, tj, delta)| {
            let state = kind.build(SpinDim::new(*tj)?)?;
            let setting = NoiseSetting::new(*delta, cfg.theta)?;
            let solver = QfiSolver::new(&qfi::build_density(&state, setting))?;
            let f_theta = solver.f_theta();
            let f_delta = solver.f_delta().unwrap_or(f64::INFINITY);
            let p = asymptotics::predict(&state, setting);
            Ok(SweepRow {
                state: label.clone(),
                twice_j: *tj,
                delta: *delta,
                f_theta,
                f_delta,
                inv_f_minus_delta: 1.0 / f_theta - delta,
                pred_inv_f_theta: p.inv_f_theta,
                pred_inv_f_delta: p.inv_f_delta,
                mass: p.mass,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("state,twice_j,delta,f_theta,f_delta,inv_f_minus_delta,pred_inv_f_theta,pred_inv_f_delta,mass\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.state, r.twice_j, r.delta, r.f_theta, r.f_delta, r.inv_f_minus_delta, r.pred_inv_f_theta, r.pred_inv_f_delta, r.mass
        ));
    }
    out
}

fn emit(output: &Output, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn build_state(p: &Point) -> Result<(ProbeState, NoiseSetting)> {
    let state = p.state.build(SpinDim::new(p.twice_j)?)?;
    Ok((state, NoiseSetting::new(p.delta, p.theta)?))
}

fn load_sweep_config(args: &SweepArgs) -> Result<SweepConfig> {
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        return serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())));
    }
    Ok(SweepConfig {
        states: args.states.clone(),
        twice_j: args.twice_j.clone(),
        delta_min: args.delta_min,
        delta_max: args.delta_max,
        points: args.points,
        linear: args.linear,
        theta: args.theta,
    })
}

#[derive(Serialize)]
struct CrossoverOut {
    n_small: usize,
    n_large: usize,
    delta: f64,
}

#[derive(Serialize)]
struct OptimizeOut {
    probe: ProbeState,
    #[serde(flatten)]
    meta: optimizer::ResultMetadata,
}

/// Runs one command; returns the process exit code.
pub fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Qfi { point, output } => {
            let (state, setting) = build_state(&point)?;
            let r = qfi::qfi_report(&state, setting)?;
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => json(&r)?,
                Format::Csv => format!(
                    "state,twice_j,delta,theta,f_theta,f_delta,cross_im\n{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    r.state,
                    r.twice_j,
                    r.delta,
                    r.theta,
                    r.f_theta,
                    r.f_delta.unwrap_or(f64::INFINITY),
                    r.cross_im
                ),
            };
            emit(&output, &text)?;
        }
        Command::Sweep(args) => {
            let cfg = load_sweep_config(&args)?;
            let rows = run_sweep(&cfg)?;
            let text = match args.output.format.unwrap_or(Format::Csv) {
                Format::Csv => sweep_csv(&rows),
                Format::Json => json(&rows)?,
            };
            emit(&args.output, &text)?;
        }
        Command::Optimize {
            twice_j,
            delta,
            objective,
            unconstrained,
            random_starts,
            output,
        } => {
            let dim = SpinDim::new(twice_j)?;
            let mut p = OptimizationProblem::new(dim, NoiseSetting::new(delta, 0.0)?, objective);
            p.symmetric = !unconstrained;
            let p = p.with_random_starts(random_starts, output.seed);
            let r = optimizer::optimize(&p)?;
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Csv => r.best_state.to_csv(),
                Format::Json => json(&OptimizeOut {
                    probe: r.best_state.clone(),
                    meta: r.metadata(),
                })?,
            };
            emit(&output, &text)?;
        }
        Command::Distribution {
            point,
            grid,
            closed_form,
            output,
        } => {
            let (state, setting) = build_state(&point)?;
            let dist = match closed_form {
                Some(form) => {
                    let form = match form {
                        ClosedFormArg::Printed => ClosedForm::Printed,
                        ClosedFormArg::HalfAngle => ClosedForm::HalfAngle,
                    };
                    measurement::closed_form_cosine_distribution(state.dim(), grid, form)?
                }
                None => measurement::convolved_distribution(&state, setting, grid)?,
            };
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Csv => dist.to_csv(),
                Format::Json => json(&serde_json::json!({
                    "grid": dist.len(),
                    "density": dist.density(),
                }))?,
            };
            emit(&output, &text)?;
        }
        Command::Measure {
            point,
            shots,
            grid,
            two_stage,
            output,
        } => {
            let (state, setting) = build_state(&point)?;
            let samples = if two_stage {
                let c = measurement::conditional_distribution(&state, setting.theta, grid)?;
                measurement::sample_two_stage(&c, setting.delta, shots, output.seed)?
            } else {
                let d = measurement::convolved_distribution(&state, setting, grid)?;
                measurement::sample_measurements(&d, shots, output.seed)?
            };
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut s = String::from("shot,angle\n");
                    for (i, x) in samples.iter().enumerate() {
                        s.push_str(&format!("{i},{x:.16e}\n"));
                    }
                    s
                }
                Format::Json => json(&samples)?,
            };
            emit(&output, &text)?;
        }
        Command::Estimate {
            point,
            shots,
            trials,
            grid,
            output,
        } => {
            let (state, setting) = build_state(&point)?;
            let c = measurement::run_campaign(&state, setting, shots, trials, output.seed, grid)?;
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => json(&c.summary)?,
                Format::Csv => c.to_csv(),
            };
            emit(&output, &text)?;
        }
        Command::Crossover { pair, output } => {
            let delta = clustering::crossover_delta(pair.0, pair.1)?;
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => json(&CrossoverOut {
                    n_small: pair.0,
                    n_large: pair.1,
                    delta,
                })?,
                Format::Csv => format!("n_small,n_large,delta\n{},{},{delta:.16e}\n", pair.0, pair.1),
            };
            emit(&output, &text)?;
        }
        Command::Partition {
            total,
            delta,
            max_cluster,
            output,
        } => {
            let plan = clustering::best_partition(total, delta, max_cluster)?;
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => json(&plan)?,
                Format::Csv => format!(
                    "N,delta,cluster_size,nu,remainder,total_f,lower,upper\n{},{:.16e},{},{},{},{:.16e},{:.16e},{:.16e}\n",
                    plan.total_n,
                    plan.delta,
                    plan.cluster_size,
                    plan.nu,
                    plan.remainder,
                    plan.total_f,
                    plan.bounds.lower,
                    plan.bounds.upper
                ),
            };
            emit(&output, &text)?;
        }
        Command::Validate { quick, output } => {
            let report = validation::run_suite(quick);
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Json => json(&report)?,
                Format::Csv => {
                    let mut s = String::new();
                    for c in &report.checks {
                        s.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
                    }
                    s
                }
            };
            emit(&output, &text)?;
            if !report.passed() {
                return Ok(EXIT_VALIDATION);
            }
        }
    }
    Ok(EXIT_OK)
}

pub fn exit_code_for(e: &Error) -> u8 {
    match e {
        _ if e.is_numerical() => EXIT_NUMERICAL,
        Error::Io(_) | Error::Json(_) => EXIT_FAILURE,
        _ => EXIT_USAGE,
    }
}

/// Thread count from `DEPHASE_THREADS`, then `--threads`.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        _ => Ok(flag),
    }
}

/// Parses arguments, runs the command in a sized pool, and maps errors to
/// exit codes.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let run = || -> Result<u8> {
        let threads = thread_count(cli.threads)?;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            if n == 0 {
                return Err(Error::InvalidArgument("thread count must be positive".into()));
            }
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| execute(cli.command))
    };
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
