//! Assignment-matched RMSE and the Monte Carlo comparison harness.

use std::fmt::Write as _;
use std::io::{self, Write};

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::inference::{track, Algorithm, Estimate, SamplerConfig};
use crate::rng::{derive_seed, substream, DOMAIN_LAYOUT, DOMAIN_SAMPLER, DOMAIN_SCENARIO};
use crate::sim::{make_scenario_with, MotionParams, ScenarioOptions};
use crate::{Error, Result, SensorNetwork, TargetState};

/// Largest target count for which the brute-force assignment is used.
pub const MAX_MATCHED_TARGETS: usize = 8;

/// Position RMSE under the best matching of estimated to true targets.
pub fn matched_rmse(estimate: &TargetState, truth: &TargetState) -> Result<f64> {
    let n = truth.n_targets();
    if estimate.n_targets() != n {
        return Err(Error::TargetCountMismatch {
            expected: n,
            found: estimate.n_targets(),
        });
    }
    if n > MAX_MATCHED_TARGETS {
        return Err(Error::Config(format!(
            "assignment-matched RMSE supports at most {MAX_MATCHED_TARGETS} targets"
        )));
    }
    let cost: Vec<Vec<f64>> = estimate
        .positions
        .iter()
        .map(|&e| truth.positions.iter().map(|&x| (e - x).norm_sq()).collect())
        .collect();
    let best = (0..n)
        .permutations(n)
        .map(|perm| perm.iter().enumerate().map(|(j, &i)| cost[i][j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok((best / n as f64).sqrt())
}

/// RMSE at timestep `t` (1-based, matching the tracker's numbering).
pub fn position_rmse(estimates: &[Estimate], truth: &[TargetState], t: usize) -> Result<f64> {
    if t == 0 || t > estimates.len() || t > truth.len() {
        return Err(Error::Config(format!(
            "checkpoint t={t} outside 1..={}",
            estimates.len().min(truth.len())
        )));
    }
    matched_rmse(&estimates[t - 1].state, &truth[t - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// Square grid over `[-half_width, half_width]^2`; needs a square count.
    Grid,
    /// Uniform random placement, fixed per sensor count by the master seed.
    Random,
}

/// Everything except the grid axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentBase {
    pub motion: MotionParams,
    pub steps: usize,
    pub options: ScenarioOptions,
    pub layout: Layout,
    pub half_width: f64,
    pub p_e: f64,
    pub sampler: SamplerConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub n_targets: Vec<usize>,
    pub n_sensors: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub checkpoints: Vec<usize>,
}

impl ExperimentGrid {
    /// Cell order used everywhere: targets, then sensors, then algorithm.
    pub fn cells(&self) -> Vec<(usize, usize, Algorithm)> {
        let mut v = Vec::new();
        for &nt in &self.n_targets {
            for &ns in &self.n_sensors {
                for &a in &self.algorithms {
                    v.push((nt, ns, a));
                }
            }
        }
        v
    }
}

pub fn build_network(layout: Layout, n_sensors: usize, half_width: f64, p_e: f64, seed: u64) -> Result<SensorNetwork> {
    match layout {
        Layout::Grid => {
            let side = (n_sensors as f64).sqrt().round() as usize;
            if side * side != n_sensors {
                return Err(Error::Config(format!(
                    "grid layout needs a square sensor count, got {n_sensors}"
                )));
            }
            SensorNetwork::grid(side, half_width, p_e)
        }
        Layout::Random => {
            let mut rng = substream(seed, &[DOMAIN_LAYOUT, n_sensors as u64]);
            SensorNetwork::uniform_random(n_sensors, half_width, p_e, &mut rng)
        }
    }
}

/// Outcome of one repetition of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub n_targets: usize,
    pub n_sensors: usize,
    pub rep: usize,
    pub scenario_seed: u64,
    /// `Ok(rmse per checkpoint)` or the error message.
    pub outcome: std::result::Result<Vec<f64>, String>,
    pub acceptance_rate: f64,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointStats {
    pub t: usize,
    /// Mean over repetitions of the per-run RMSE.
    pub rmse: f64,
    /// Standard deviation of the per-run RMSE; `None` with one repetition.
    pub std_dev: Option<f64>,
    /// Standard error of the mean RMSE; `None` with one repetition.
    pub std_err: Option<f64>,
    pub mse: f64,
    /// Normal-approximation 95% interval of the mean MSE.
    pub mse_ci95: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseReport {
    pub algorithm: Algorithm,
    pub n_targets: usize,
    pub n_sensors: usize,
    pub n_reps: usize,
    pub n_failed: usize,
    pub mean_acceptance: f64,
    pub checkpoints: Vec<CheckpointStats>,
}

impl RmseReport {
    pub fn at(&self, t: usize) -> Option<&CheckpointStats> {
        self.checkpoints.iter().find(|c| c.t == t)
    }

    pub fn final_rmse(&self) -> Option<f64> {
        self.checkpoints.last().map(|c| c.rmse)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub reports: Vec<RmseReport>,
    pub runs: Vec<RunRecord>,
}

impl ExperimentOutput {
    pub fn report(&self, n_targets: usize, n_sensors: usize, algorithm: Algorithm) -> Option<&RmseReport> {
        self.reports
            .iter()
            .find(|r| r.n_targets == n_targets && r.n_sensors == n_sensors && r.algorithm == algorithm)
    }
}

fn one_run(
    base: &ExperimentBase,
    checkpoints: &[usize],
    net: &SensorNetwork,
    (n_targets, n_sensors, algorithm): (usize, usize, Algorithm),
    rep: usize,
    seed: u64,
) -> RunRecord {
    let path = [n_targets as u64, n_sensors as u64, rep as u64];
    let scenario_seed = derive_seed(seed, &[&[DOMAIN_SCENARIO][..], &path].concat());
    let sampler_seed = derive_seed(seed, &[&[DOMAIN_SAMPLER][..], &path].concat());
    let mut cfg = base.sampler.clone();
    cfg.seed = sampler_seed;
    cfg.parallel = false;
    cfg.record = false;
    let result = make_scenario_with(n_targets, net, &base.motion, base.steps, scenario_seed, base.options)
        .and_then(|sc| {
            let steps = track(&sc, algorithm, &cfg)?;
            let estimates: Vec<Estimate> = steps.iter().map(|s| s.estimate.clone()).collect();
            let rmse = checkpoints
                .iter()
                .map(|&t| position_rmse(&estimates, &sc.truth, t))
                .collect::<Result<Vec<f64>>>()?;
            let proposed: usize = steps.iter().map(|s| s.particles.proposed_count).sum();
            let accepted: usize = steps.iter().map(|s| s.particles.accepted_count).sum();
            let fallbacks = steps.iter().filter(|s| s.fallback).count();
            Ok((rmse, accepted as f64 / proposed.max(1) as f64, fallbacks))
        });
    let (outcome, acceptance_rate, fallbacks) = match result {
        Ok((r, a, f)) => (Ok(r), a, f),
        Err(e) => {
            log::error!("{algorithm} N_t={n_targets} N_s={n_sensors} rep {rep}: {e}");
            (Err(e.to_string()), 0.0, 0)
        }
    };
    RunRecord {
        algorithm,
        n_targets,
        n_sensors,
        rep,
        scenario_seed,
        outcome,
        acceptance_rate,
        fallbacks,
    }
}

fn summarise(runs: &[&RunRecord], checkpoints: &[usize]) -> (Vec<CheckpointStats>, usize, usize, f64) {
    let ok: Vec<&Vec<f64>> = runs.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let n = ok.len();
    let mean_acc = if n == 0 {
        0.0
    } else {
        runs.iter().filter(|r| r.outcome.is_ok()).map(|r| r.acceptance_rate).sum::<f64>() / n as f64
    };
    let stats = checkpoints
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let rmse: Vec<f64> = ok.iter().map(|v| v[k]).collect();
            let mse: Vec<f64> = rmse.iter().map(|r| r * r).collect();
            let (m, sd) = mean_sd(&rmse);
            let (mm, msd) = mean_sd(&mse);
            let se = sd.map(|s| s / (n as f64).sqrt());
            let mse_ci95 = msd.map(|s| {
                let h = 1.96 * s / (n as f64).sqrt();
                (mm - h, mm + h)
            });
            CheckpointStats {
                t,
                rmse: m,
                std_dev: sd,
                std_err: se,
                mse: mm,
                mse_ci95,
            }
        })
        .collect();
    (stats, n, runs.len() - n, mean_acc)
}

fn mean_sd(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, Some(var.sqrt()))
}

/// Runs `n_reps` tracked scenarios for every grid cell.
///
/// Scenarios depend only on `(seed, N_t, N_s, rep)`, so algorithms within
/// a `(N_t, N_s)` pair are compared on identical trajectories. Work is
/// spread over the current rayon pool; results do not depend on its size.
pub fn run_experiment(grid: &ExperimentGrid, n_reps: usize, base: &ExperimentBase, seed: u64) -> Result<ExperimentOutput> {
    if n_reps == 0 {
        return Err(Error::Config("n_reps must be at least 1".into()));
    }
    base.sampler.validate()?;
    let mut checkpoints = grid.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    if checkpoints.first() == Some(&0) || checkpoints.last().is_some_and(|&t| t > base.steps) {
        return Err(Error::Config(format!(
            "checkpoints must lie in 1..={}, got {:?}",
            base.steps, grid.checkpoints
        )));
    }
    let mut nets = Vec::new();
    for &ns in &grid.n_sensors {
        nets.push((ns, build_network(base.layout, ns, base.half_width, base.p_e, seed)?));
    }
    let net_for = |ns: usize| &nets.iter().find(|(n, _)| *n == ns).expect("built above").1;

    let cells = grid.cells();
    let jobs: Vec<((usize, usize, Algorithm), usize)> = cells
        .iter()
        .flat_map(|&c| (0..n_reps).map(move |r| (c, r)))
        .collect();
    let runs: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(cell, rep)| one_run(base, &checkpoints, net_for(cell.1), cell, rep, seed))
        .collect();

    let reports = cells
        .iter()
        .map(|&(nt, ns, alg)| {
            let mine: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.n_targets == nt && r.n_sensors == ns && r.algorithm == alg)
                .collect();
            let (stats, n_ok, n_failed, acc) = summarise(&mine, &checkpoints);
            RmseReport {
                algorithm: alg,
                n_targets: nt,
                n_sensors: ns,
                n_reps: n_ok,
                n_failed,
                mean_acceptance: acc,
                checkpoints: stats,
            }
        })
        .collect();
    Ok(ExperimentOutput { reports, runs })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"))
}

/// Wide table: one row per `(N_t, t)`, one column per `(N_s, algorithm)`,
/// cells `mean (std-dev)`.
pub fn write_table<W: Write>(out: &mut W, header: &str, reports: &[RmseReport]) -> io::Result<()> {
    let nts: Vec<usize> = reports.iter().map(|r| r.n_targets).unique().collect();
    let nss: Vec<usize> = reports.iter().map(|r| r.n_sensors).unique().collect();
    let algs: Vec<Algorithm> = reports.iter().map(|r| r.algorithm).unique().collect();
    let ts: Vec<usize> = reports
        .first()
        .map(|r| r.checkpoints.iter().map(|c| c.t).collect())
        .unwrap_or_default();
    write!(out, "{header}")?;
    let mut line = String::from("n_targets\tt");
    for ns in &nss {
        for a in &algs {
            let _ = write!(line, "\tN_s={ns} {a}");
        }
    }
    writeln!(out, "{line}")?;
    for &nt in &nts {
        for &t in &ts {
            let mut line = format!("{nt}\t{t}");
            for &ns in &nss {
                for &a in &algs {
                    let cell = reports
                        .iter()
                        .find(|r| r.n_targets == nt && r.n_sensors == ns && r.algorithm == a)
                        .and_then(|r| r.at(t));
                    let text = match cell {
                        Some(c) => format!("{:.4} ({})", c.rmse, fmt_opt(c.std_dev)),
                        None => "NA".to_string(),
                    };
                    let _ = write!(line, "\t{text}");
                }
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

/// One row per cell and checkpoint with every aggregate statistic.
pub fn write_summary<W: Write>(out: &mut W, header: &str, reports: &[RmseReport]) -> io::Result<()> {
    write!(out, "{header}")?;
    writeln!(
        out,
        "algorithm,n_targets,n_sensors,t,n_reps,n_failed,rmse,std_dev,std_err,mse,mse_ci95_lo,mse_ci95_hi,acceptance"
    )?;
    for r in reports {
        for c in &r.checkpoints {
            writeln!(
                out,
                "{},{},{},{},{},{},{:.4},{},{},{:.4},{},{},{:.4}",
                r.algorithm,
                r.n_targets,
                r.n_sensors,
                c.t,
                r.n_reps,
                r.n_failed,
                c.rmse,
                fmt_opt(c.std_dev),
                fmt_opt(c.std_err),
                c.mse,
                fmt_opt(c.mse_ci95.map(|x| x.0)),
                fmt_opt(c.mse_ci95.map(|x| x.1)),
                r.mean_acceptance
            )?;
        }
    }
    Ok(())
}

/// Long format: one row per repetition and checkpoint.
pub fn write_long<W: Write>(out: &mut W, header: &str, runs: &[RunRecord], checkpoints: &[usize]) -> io::Result<()> {
    write!(out, "{header}")?;
    writeln!(out, "algorithm,n_targets,n_sensors,rep,scenario_seed,t,rmse,acceptance,fallbacks,error")?;
    for r in runs {
        match &r.outcome {
            Ok(values) => {
                for (&t, v) in checkpoints.iter().zip(values) {
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{:.4},{:.4},{},",
                        r.algorithm, r.n_targets, r.n_sensors, r.rep, r.scenario_seed, t, v, r.acceptance_rate, r.fallbacks
                    )?;
                }
            }
            Err(e) => writeln!(
                out,
                "{},{},{},{},{},NA,NA,NA,NA,\"{}\"",
                r.algorithm,
                r.n_targets,
                r.n_sensors,
                r.rep,
                r.scenario_seed,
                e.replace('"', "'")
            )?,
        }
    }
    Ok(())
}
