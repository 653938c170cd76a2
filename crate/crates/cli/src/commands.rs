use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use abctrack::evaluation::{build_network, run_experiment, write_long, write_summary, write_table};
use abctrack::inference::{track as run_track, write_particle_log, write_swap_log, Algorithm, StepResult};
use abctrack::sim::{make_scenario_with, Scenario};

use crate::config;

type CmdResult = Result<(), String>;

pub fn with_workers(workers: usize, job: impl FnOnce() -> CmdResult + Send) -> CmdResult {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| format!("cannot start worker pool: {e}"))?;
    pool.install(job)
}

fn header(command: &str, sha256: &str, seed: u64, extra: &str) -> String {
    format!("# abctrack {command}{extra} config_sha256={sha256} seed={seed}\n")
}

fn create(path: &Path) -> Result<BufWriter<File>, String> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> String + '_ {
    move |e| format!("cannot write {}: {e}", path.display())
}

pub fn simulate(config_path: &Path, seed: Option<u64>, out: &Path) -> CmdResult {
    let loaded = config::load(config_path)?;
    let cfg = &loaded.config;
    let seed = cfg.seed(seed)?;
    let sc = cfg.scenario()?;
    let net = build_network(sc.layout, sc.n_sensors, sc.half_width, sc.p_e, seed).map_err(|e| format!("scenario: {e}"))?;
    let mut scenario = make_scenario_with(sc.n_targets, &net, &sc.motion()?, sc.steps, seed, sc.options())
        .map_err(|e| format!("scenario: {e}"))?;
    scenario.config_sha256 = Some(loaded.sha256.clone());
    scenario.save(out).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    println!(
        "scenario N_t={} N_s={} T={} seed={} -> {}",
        scenario.n_targets(),
        scenario.net.n_sensors(),
        scenario.steps,
        seed,
        out.display()
    );
    Ok(())
}

pub fn track(
    scenario_path: &Path,
    algorithm: Algorithm,
    config_path: &Path,
    seed: Option<u64>,
    out: &Path,
    particle_log: Option<&Path>,
) -> CmdResult {
    let scenario = Scenario::load(scenario_path).map_err(|e| format!("scenario {}: {e}", scenario_path.display()))?;
    let loaded = config::load(config_path)?;
    let seed = loaded.config.seed(seed)?;
    let mut sampler = loaded.config.sampler(seed)?;
    sampler.record = particle_log.is_some();
    let steps = run_track(&scenario, algorithm, &sampler).map_err(|e| format!("{algorithm}: {e}"))?;

    let head = header(
        "track",
        &loaded.sha256,
        seed,
        &format!(" algorithm={algorithm} scenario_seed={}", scenario.seed),
    );
    let mut w = create(out)?;
    write_estimates(&mut w, &head, &steps).map_err(io_err(out))?;
    w.flush().map_err(io_err(out))?;

    if let Some(path) = particle_log {
        let records: Vec<_> = steps.iter().flat_map(|s| s.proposals.iter().cloned()).collect();
        let mut w = create(path)?;
        w.write_all(head.as_bytes()).map_err(io_err(path))?;
        write_particle_log(&mut w, &records).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))?;
        if algorithm == Algorithm::AbcPt {
            let swap_path = swap_log_path(path);
            let swaps: Vec<_> = steps.iter().flat_map(|s| s.swaps.iter().cloned()).collect();
            let mut w = create(&swap_path)?;
            w.write_all(head.as_bytes()).map_err(io_err(&swap_path))?;
            write_swap_log(&mut w, &swaps).map_err(io_err(&swap_path))?;
            w.flush().map_err(io_err(&swap_path))?;
        }
    }
    let fallbacks = steps.iter().filter(|s| s.fallback).count();
    println!(
        "{algorithm}: {} steps, {fallbacks} fallback steps -> {}",
        steps.len(),
        out.display()
    );
    Ok(())
}

/// `particles.csv` -> `particles.swaps.csv`.
pub fn swap_log_path(particle_log: &Path) -> PathBuf {
    let stem = particle_log.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    particle_log.with_file_name(format!("{stem}.swaps.csv"))
}

fn write_estimates<W: Write>(out: &mut W, head: &str, steps: &[StepResult]) -> std::io::Result<()> {
    out.write_all(head.as_bytes())?;
    writeln!(out, "t,target,x,y,vx,vy,acceptance")?;
    for step in steps {
        let s = &step.estimate.state;
        let acc = step.particles.acceptance_rate();
        for (j, (p, v)) in s.positions.iter().zip(&s.velocities).enumerate() {
            writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                step.particles.timestep, j, p.x, p.y, v.x, v.y, acc
            )?;
        }
    }
    Ok(())
}

pub fn experiment(config_path: &Path, seed: Option<u64>, out: &Path) -> CmdResult {
    let loaded = config::load(config_path)?;
    let cfg = &loaded.config;
    let seed = cfg.seed(seed)?;
    let base = cfg.scenario()?.experiment_base(cfg.sampler(seed)?)?;
    let ex = cfg.experiment()?;
    let grid = ex.grid();
    let output = run_experiment(&grid, ex.n_reps, &base, seed).map_err(|e| format!("experiment: {e}"))?;

    for r in output.reports.iter().filter(|r| r.n_failed > 0) {
        log::warn!(
            "N_t={} N_s={} {}: {} of {} repetitions failed",
            r.n_targets,
            r.n_sensors,
            r.algorithm,
            r.n_failed,
            r.n_failed + r.n_reps
        );
    }
    let head = header("experiment", &loaded.sha256, seed, "");
    let mut checkpoints = grid.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();

    let table = out.join("table.tsv");
    let mut w = create(&table)?;
    write_table(&mut w, &head, &output.reports).map_err(io_err(&table))?;
    w.flush().map_err(io_err(&table))?;

    let summary = out.join("summary.csv");
    let mut w = create(&summary)?;
    write_summary(&mut w, &head, &output.reports).map_err(io_err(&summary))?;
    w.flush().map_err(io_err(&summary))?;

    let long = out.join("long.csv");
    let mut w = create(&long)?;
    write_long(&mut w, &head, &output.runs, &checkpoints).map_err(io_err(&long))?;
    w.flush().map_err(io_err(&long))?;

    for r in &output.reports {
        let last = r.checkpoints.last();
        println!(
            "N_t={} N_s={} {:<8} final RMSE {} over {} reps",
            r.n_targets,
            r.n_sensors,
            r.algorithm.name(),
            last.map_or_else(|| "NA".to_string(), |c| format!("{:.4}", c.rmse)),
            r.n_reps
        );
    }
    println!("reports -> {}", out.display());
    Ok(())
}
