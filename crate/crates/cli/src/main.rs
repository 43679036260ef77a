use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use uqp::bench::{run_bench, BenchConfig, BenchScenario};
use uqp::caf::{caf_synthesize, GridSpec, XSolver};
use uqp::merit::{merit, random_phases, MeritConfig, SolveRecord};
use uqp::oracle::brute_force;
use uqp::scenarios::{
    clutter_case, random_hermitian, snr_matrix, steering, theorem2_random, ClutterCase, ClutterParams, RandomSpec,
};
use uqp::{local_optimize, quadratic_form, read_matrix, write_matrix, LocalConfig};

/// Unimodular quadratic programming: matrix generators, solvers with
/// optimality certificates, benchmarks and ambiguity-function design.
#[derive(Parser)]
#[command(name = "uqp", version)]
struct Cli {
    /// Leave timing fields out (null or 0) so outputs are byte-reproducible.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenScenario {
    Random,
    Rankdef,
    Case1,
    Case2,
    Case3,
    Theorem2,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchKind {
    Random,
    Rankdef,
    Case1,
    Case2,
    Case3,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Merit,
    Local,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum CafSolver {
    Local,
    Merit,
}

#[derive(Subcommand)]
enum Command {
    /// Write a matrix JSON file.
    Gen {
        #[arg(long, value_enum)]
        scenario: GenScenario,
        #[arg(long)]
        n: usize,
        /// Rank of random matrices (default n), or the number of optimal
        /// vectors for theorem2 (default 1).
        #[arg(long)]
        rank: Option<usize>,
        /// Case 1 correlation coefficient.
        #[arg(long)]
        eta: Option<f64>,
        /// With a clutter case: write the SNR matrix for this target Doppler
        /// instead of the disturbance covariance.
        #[arg(long)]
        doppler: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve max s^H R s over unimodular s and write a report JSON.
    Solve {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Alphabet size for the oracle.
        #[arg(long)]
        m: Option<usize>,
        /// Residual threshold of MERIT.
        #[arg(long, default_value_t = 1e-9)]
        eps: f64,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        delta0: Option<f64>,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run MERIT over many trials and write one summary row per n.
    Bench {
        #[arg(long, value_enum)]
        scenario: BenchKind,
        /// Comma-separated sizes, e.g. 8,16.
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Thumbtack cross-ambiguity design from a Björck code.
    Caf {
        #[arg(long, default_value_t = 53)]
        n: usize,
        #[arg(long, default_value_t = 41)]
        tau_grid: usize,
        #[arg(long, default_value_t = 41)]
        f_grid: usize,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        #[arg(long, value_enum, default_value_t = CafSolver::Local)]
        solver: CafSolver,
        /// Seed of the MERIT inner solver.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output prefix: writes PREFIX.csv and PREFIX.json.
        #[arg(long)]
        out: PathBuf,
    },
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)?;
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn gen(scenario: GenScenario, n: usize, rank: Option<usize>, eta: Option<f64>, doppler: Option<f64>, seed: u64, out: &Path) -> Result<()> {
    let mut params = ClutterParams::default();
    if let Some(eta) = eta {
        params.eta = eta;
    }
    let case = |c: ClutterCase| -> Result<_> {
        let m = clutter_case(c, n, &params)?;
        Ok(match doppler {
            Some(nu) => snr_matrix(&m, &steering(n, nu))?,
            None => m,
        })
    };
    let matrix = match scenario {
        GenScenario::Random => random_hermitian(RandomSpec { n, d: rank.unwrap_or(n), seed })?,
        GenScenario::Rankdef => {
            let d = rank.context("rankdef needs --rank")?;
            random_hermitian(RandomSpec { n, d, seed })?
        }
        GenScenario::Case1 => case(ClutterCase::Exponential)?,
        GenScenario::Case2 => case(ClutterCase::SeaLand)?,
        GenScenario::Case3 => case(ClutterCase::Discrete)?,
        GenScenario::Theorem2 => theorem2_random(n, rank.unwrap_or(1), seed)?.0,
    };
    write_matrix(out, &matrix)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn solve(matrix: &Path, method: Method, m: Option<usize>, eps: f64, delta: Option<f64>, delta0: Option<f64>, restarts: usize, seed: u64, out: &Path, timing: bool) -> Result<()> {
    let r = read_matrix(matrix).with_context(|| format!("cannot load {}", matrix.display()))?;
    let start = Instant::now();
    let elapsed = || timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let record = match method {
        Method::Merit => {
            let cfg = MeritConfig {
                eps0: eps,
                delta,
                delta0,
                restarts,
                seed,
                ..MeritConfig::default()
            };
            let report = merit(&r, &cfg)?;
            SolveRecord::from_merit(&report, elapsed())
        }
        Method::Local => {
            let (s, trace) = local_optimize(&r, &random_phases(r.n(), seed), &LocalConfig::default())?;
            let objective = quadratic_form(&r, &s)?;
            SolveRecord::plain("local", &s, objective, Some(trace.iterations), Some(trace.converged), seed, elapsed())
        }
        Method::Oracle => {
            let Some(m) = m else { bail!("--method oracle needs --m") };
            let res = brute_force(&r, m)?;
            SolveRecord::plain("oracle", &res.s, res.value, None, None, seed, elapsed())
        }
    };
    write_json(out, &record)
}

fn bench(kind: BenchKind, n_list: Vec<usize>, rank: Option<usize>, trials: usize, seed: u64, out: &Path, timing: bool) -> Result<()> {
    let scenario = match kind {
        BenchKind::Random => BenchScenario::Random { rank: None },
        BenchKind::Rankdef => BenchScenario::Random {
            rank: Some(rank.context("rankdef needs --rank")?),
        },
        BenchKind::Case1 => BenchScenario::Clutter(ClutterCase::Exponential),
        BenchKind::Case2 => BenchScenario::Clutter(ClutterCase::SeaLand),
        BenchKind::Case3 => BenchScenario::Clutter(ClutterCase::Discrete),
    };
    let cfg = BenchConfig {
        scenario,
        n_list,
        trials,
        seed,
        merit: MeritConfig::default(),
        params: ClutterParams::default(),
        timing,
    };
    let output = run_bench(&cfg)?;
    let mut csv = csv::Writer::from_path(out).with_context(|| format!("cannot create {}", out.display()))?;
    for row in &output.rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    write_json(&with_suffix(out, ".trials.json"), &output.trials)
}

#[derive(Serialize)]
struct CafRow {
    tau: f64,
    f: f64,
    abs_chi: f64,
}

fn caf(n: usize, tau_grid: usize, f_grid: usize, iters: usize, solver: CafSolver, seed: u64, out: &Path) -> Result<()> {
    let spec = GridSpec {
        tau_points: tau_grid,
        f_points: f_grid,
        ..GridSpec::default()
    };
    let (inner, name) = match solver {
        CafSolver::Local => (XSolver::Local(LocalConfig::default()), "local"),
        CafSolver::Merit => (XSolver::Merit(MeritConfig { seed, ..MeritConfig::default() }), "merit"),
    };
    let run = caf_synthesize(n, &spec, iters, &inner)?;
    let path = with_suffix(out, ".csv");
    let mut csv = csv::Writer::from_path(&path).with_context(|| format!("cannot create {}", path.display()))?;
    let big_t = run.grid.basis.duration();
    for (i, &abs_chi) in run.abs_chi.iter().enumerate() {
        let (tau, f) = run.grid.point(i);
        // Delay in sub-pulse units, Doppler in units of 1/T.
        csv.serialize(CafRow {
            tau: tau / run.grid.basis.t_p,
            f: f * big_t,
            abs_chi,
        })?;
    }
    csv.flush()?;
    write_json(&with_suffix(out, ".json"), &run.summary(name))
}

fn run(cli: Cli) -> Result<()> {
    let timing = !cli.no_timing;
    match cli.command {
        Command::Gen { scenario, n, rank, eta, doppler, seed, out } => gen(scenario, n, rank, eta, doppler, seed, &out),
        Command::Solve { matrix, method, m, eps, delta, delta0, restarts, seed, out } => {
            solve(&matrix, method, m, eps, delta, delta0, restarts, seed, &out, timing)
        }
        Command::Bench { scenario, n_list, rank, trials, seed, out } => bench(scenario, n_list, rank, trials, seed, &out, timing),
        Command::Caf { n, tau_grid, f_grid, iters, solver, seed, out } => caf(n, tau_grid, f_grid, iters, solver, seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
