//! Batch MERIT runs in the shape of the random-matrix and clutter tables.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, UqpError};
use crate::linalg::HermitianMatrix;
use crate::merit::{merit, MeritConfig, MeritReport, SolveRecord};
use crate::par;
use crate::scenarios::{clutter_case, random_hermitian, snr_matrix, steering, ClutterCase, ClutterParams, RandomSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BenchScenario {
    /// A fresh random matrix per trial; `rank: None` means full rank.
    Random { rank: Option<usize> },
    /// One fixed SNR matrix; trials differ only in the MERIT initialization.
    Clutter(ClutterCase),
}

impl BenchScenario {
    pub fn name(&self) -> &'static str {
        match self {
            BenchScenario::Random { rank: None } => "random",
            BenchScenario::Random { rank: Some(_) } => "rankdef",
            BenchScenario::Clutter(ClutterCase::Exponential) => "case1",
            BenchScenario::Clutter(ClutterCase::SeaLand) => "case2",
            BenchScenario::Clutter(ClutterCase::Discrete) => "case3",
        }
    }

    fn label(&self, n: usize) -> String {
        match self {
            BenchScenario::Random { rank } => format!("d={}", rank.unwrap_or(n)),
            BenchScenario::Clutter(c) => format!("case{}", c.index()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub scenario: BenchScenario,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Template for every trial; its `seed` is overwritten per trial.
    pub merit: MeritConfig,
    pub params: ClutterParams,
    /// Record wall-clock times; off for byte-reproducible output.
    pub timing: bool,
}

/// One table row: aggregate over the trials of one `(n, scenario)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub scenario: String,
    pub rank_or_case: String,
    pub trials: usize,
    pub count_gamma_one: usize,
    pub avg_gamma: f64,
    pub min_gamma: f64,
    pub avg_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub scenario: String,
    pub trial: usize,
    /// Seed of the random matrix; `None` for the fixed clutter matrices.
    pub matrix_seed: Option<u64>,
    pub record: SolveRecord,
}

/// Everything a trial produced, kept for callers that check more than the
/// summary (residual traces, α steps).
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub n: usize,
    pub trial: usize,
    pub matrix: HermitianMatrix,
    pub report: MeritReport,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub rows: Vec<BenchRow>,
    pub trials: Vec<TrialRecord>,
    pub runs: Vec<TrialRun>,
}

/// Matrix seed of trial `t`: `seed + t`. MERIT is seeded the same way.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add(trial as u64)
}

/// The matrix a scenario solves at size `n` (trial index only matters for
/// random matrices).
pub fn scenario_matrix(scenario: BenchScenario, n: usize, seed: u64, params: &ClutterParams) -> Result<HermitianMatrix> {
    match scenario {
        BenchScenario::Random { rank } => {
            let d = rank.unwrap_or(n);
            if d == 0 || d > n {
                return Err(UqpError::InvalidParameter(format!("rank must be in 1..={n}, got {d}")));
            }
            random_hermitian(RandomSpec { n, d, seed })
        }
        BenchScenario::Clutter(case) => {
            let m = clutter_case(case, n, params)?;
            snr_matrix(&m, &steering(n, params.target_doppler))
        }
    }
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchOutput> {
    if cfg.trials == 0 || cfg.n_list.is_empty() {
        return Err(UqpError::InvalidParameter("need at least one trial and one n".into()));
    }
    cfg.merit.validate()?;
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    let mut runs = Vec::new();
    for &n in &cfg.n_list {
        let fixed = match cfg.scenario {
            BenchScenario::Clutter(_) => Some(scenario_matrix(cfg.scenario, n, cfg.seed, &cfg.params)?),
            BenchScenario::Random { .. } => None,
        };
        let results = par::map_range(0..cfg.trials, |t| -> Result<(TrialRun, Option<u64>)> {
            let seed = trial_seed(cfg.seed, t);
            let (matrix, matrix_seed) = match &fixed {
                Some(m) => (m.clone(), None),
                None => (scenario_matrix(cfg.scenario, n, seed, &cfg.params)?, Some(seed)),
            };
            let merit_cfg = MeritConfig { seed, ..cfg.merit.clone() };
            let start = Instant::now();
            let report = merit(&matrix, &merit_cfg)?;
            let seconds = cfg.timing.then(|| start.elapsed().as_secs_f64());
            Ok((TrialRun { n, trial: t, matrix, report, seconds }, matrix_seed))
        });
        let mut block = Vec::with_capacity(cfg.trials);
        for r in results {
            block.push(r?);
        }
        let gammas: Vec<f64> = block.iter().map(|(r, _)| r.report.gamma).collect();
        let avg_seconds = if cfg.timing {
            block.iter().filter_map(|(r, _)| r.seconds).sum::<f64>() / cfg.trials as f64
        } else {
            0.0
        };
        rows.push(BenchRow {
            n,
            scenario: cfg.scenario.name().to_string(),
            rank_or_case: cfg.scenario.label(n),
            trials: cfg.trials,
            count_gamma_one: gammas.iter().filter(|&&g| g == 1.0).count(),
            avg_gamma: gammas.iter().sum::<f64>() / cfg.trials as f64,
            min_gamma: gammas.iter().cloned().fold(f64::INFINITY, f64::min),
            avg_seconds,
        });
        for (run, matrix_seed) in block {
            trials.push(TrialRecord {
                n,
                scenario: cfg.scenario.name().to_string(),
                trial: run.trial,
                matrix_seed,
                record: SolveRecord::from_merit(&run.report, run.seconds.map(|s| s * 1e3)),
            });
            runs.push(run);
        }
    }
    Ok(BenchOutput { rows, trials, runs })
}
