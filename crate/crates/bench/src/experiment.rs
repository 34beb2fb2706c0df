use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smm_core::control::{ClosedLoopResult, ControllerKind};
use smm_core::kernel::{fit_metric, FirMethod};
use smm_core::lti::{LtiSystem, NoiseModel};

use crate::config::{ExperimentConfig, ExperimentId};
use crate::scenario::{estimate, identification_data, ControlTask};
use crate::stats::{aggregate, median, Record, SummaryRow};
use crate::BenchError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub experiment: ExperimentId,
    pub config_hash: String,
    pub base_seed: u64,
    pub runs: usize,
    pub version: String,
    pub failures: Vec<RunFailure>,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub records: Vec<Record>,
    pub summary: Vec<SummaryRow>,
    pub meta: Meta,
}

const FIR_METHODS: [FirMethod; 4] = [FirMethod::Ls, FirMethod::LsTc, FirMethod::Smm, FirMethod::SmmTc];

/// Collects the records of one run under a fixed `(run, seed)`.
struct Sink {
    run: usize,
    seed: u64,
    records: Vec<Record>,
}

impl Sink {
    fn push(&mut self, method: &str, setting: &str, metric: &str, index: usize, value: f64) {
        self.records.push(Record {
            run: self.run,
            seed: self.seed,
            method: method.to_string(),
            setting: setting.to_string(),
            metric: metric.to_string(),
            index,
            value,
        });
    }

    fn series(&mut self, method: &str, setting: &str, metric: &str, values: &[f64]) {
        for (k, v) in values.iter().enumerate() {
            self.push(method, setting, metric, k, *v);
        }
    }
}

fn method_name(m: FirMethod) -> String {
    m.label().to_lowercase()
}

fn noise_setting(noise: &NoiseModel) -> String {
    if noise.sigma2 == noise.sigma_p2 {
        format!("sigma2={}", noise.sigma2)
    } else {
        format!("sigma2={},sigma_p2={}", noise.sigma2, noise.sigma_p2)
    }
}

/// Runs every Monte Carlo repetition of `config` on up to `workers` threads.
///
/// A run that fails is listed in [`Meta::failures`] and contributes no records.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ExperimentReport, BenchError> {
    config.validate()?;
    let system = config.system.model().expect("validated");
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let outcomes: Vec<Result<Vec<Record>, RunFailure>> = pool.install(|| {
        (0..config.runs)
            .into_par_iter()
            .map(|run| {
                let seed = config.seed_for_run(run);
                let mut sink = Sink { run, seed, records: Vec::new() };
                match run_once(config, &system, &mut sink) {
                    Ok(()) => Ok(sink.records),
                    Err(e) => Err(RunFailure { run, seed, message: e.to_string() }),
                }
            })
            .collect()
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.extend(r),
            Err(f) => failures.push(f),
        }
    }
    let summary = if records.is_empty() { Vec::new() } else { aggregate(&records)? };
    let meta = Meta {
        experiment: config.experiment,
        config_hash: config.hash(),
        base_seed: config.base_seed,
        runs: config.runs,
        version: env!("CARGO_PKG_VERSION").to_string(),
        failures,
        config: config.clone(),
    };
    Ok(ExperimentReport { records, summary, meta })
}

fn run_once(config: &ExperimentConfig, system: &LtiSystem, sink: &mut Sink) -> Result<(), BenchError> {
    match config.experiment {
        ExperimentId::Fig1a | ExperimentId::Fig1b | ExperimentId::Fig2 => impulse_estimates(config, system, sink),
        ExperimentId::Fig3 => fit_comparison(config, sink),
        ExperimentId::Fig4 | ExperimentId::Fig5 => {
            let task = control_task(config, system, config.n_data[0], config.noise[0]);
            let detailed = config.experiment == ExperimentId::Fig4;
            control_comparison(&task, "default", detailed, sink)
        }
        ExperimentId::Fig6a => {
            for &n in &config.n_data {
                let task = control_task(config, system, n, config.noise[0]);
                control_comparison(&task, &format!("N={n}"), false, sink)?;
            }
            Ok(())
        }
        ExperimentId::Fig6b => {
            for noise in &config.noise {
                let task = control_task(config, system, config.n_data[0], *noise);
                control_comparison(&task, &noise_setting(noise), false, sink)?;
            }
            Ok(())
        }
        ExperimentId::Fig7 => {
            for noise in &config.noise {
                let task = control_task(config, system, config.n_data[0], *noise);
                let set = task.dataset(sink.seed)?;
                let oracle = task.oracle_deepc(&set, sink.seed)?;
                let setting = noise_setting(noise);
                sink.push("deepc", &setting, "best_lambda_g", 0, oracle.best_lambda_g);
                sink.push("deepc", &setting, "log10_best_lambda_g", 0, oracle.best_lambda_g.log10());
                sink.push("deepc", &setting, "J", 0, oracle.best.cost);
            }
            Ok(())
        }
        ExperimentId::Fig8 => solve_time_scaling(config, system, sink),
    }
}

fn impulse_estimates(config: &ExperimentConfig, system: &LtiSystem, sink: &mut Sink) -> Result<(), BenchError> {
    let (n, sigma2) = (config.lp, config.noise[0].sigma2);
    // The slow system is used with its past inputs known, the fast one without.
    let known_past = config.experiment != ExperimentId::Fig2;
    let data = identification_data(system, config.n_data[0], n, sigma2, sink.seed)?;
    let truth = system.impulse_response_siso(n)?;
    let methods: &[FirMethod] =
        if config.experiment == ExperimentId::Fig1a { &[FirMethod::Ls, FirMethod::Smm] } else { &FIR_METHODS };
    sink.series("true", "", "h", truth.as_slice());
    for &m in methods {
        let est = estimate(&data, m, n, config.l0, sigma2, known_past)?;
        let name = method_name(m);
        sink.series(&name, "", "h", est.h.as_slice());
        let sd: Vec<f64> = est.cov.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect();
        sink.series(&name, "", "sd", &sd);
        sink.push(&name, "", "max_abs_error", 0, (&est.h - &truth).amax());
        sink.push(&name, "", "fit", 0, fit_metric(&truth, &est.h)?);
    }
    Ok(())
}

fn fit_comparison(config: &ExperimentConfig, sink: &mut Sink) -> Result<(), BenchError> {
    let (n, sigma2, n_data) = (config.lp, config.noise[0].sigma2, config.n_data[0]);
    let scenarios = [
        ("example1", smm_core::lti::g1(), true),
        ("example2-unknown-past", smm_core::lti::g2(), false),
        ("example2-known-past", smm_core::lti::g2(), true),
    ];
    for (setting, system, known_past) in scenarios {
        let data = identification_data(&system, n_data, n, sigma2, sink.seed)?;
        let truth = system.impulse_response_siso(n)?;
        for m in FIR_METHODS {
            let est = estimate(&data, m, n, config.l0, sigma2, known_past)?;
            sink.push(&method_name(m), setting, "fit", 0, fit_metric(&truth, &est.h)?);
        }
    }
    Ok(())
}

fn control_task(config: &ExperimentConfig, system: &LtiSystem, n_data: usize, noise: NoiseModel) -> ControlTask {
    ControlTask {
        system: system.clone(),
        n_data,
        l0: config.l0,
        lp: config.lp,
        noise,
        steps: config.steps,
        lambda_g_grid: config.lambda_g_grid.clone(),
        lambda_y: config.lambda_y,
        compress: config.compress,
    }
}

fn record_loop(sink: &mut Sink, method: &str, setting: &str, out: &ClosedLoopResult, detailed: bool) {
    sink.push(method, setting, "J", 0, out.cost);
    sink.push(method, setting, "failed_steps", 0, out.failures() as f64);
    if detailed {
        sink.series(method, setting, "u", &out.u);
        sink.series(method, setting, "y", &out.y);
        sink.series(method, setting, "y0", &out.y0);
    }
}

fn control_comparison(task: &ControlTask, setting: &str, detailed: bool, sink: &mut Sink) -> Result<(), BenchError> {
    let seed = sink.seed;
    let set = task.dataset(seed)?;
    for kind in [ControllerKind::IdealMpc, ControllerKind::SubPc, ControllerKind::SmmPc] {
        let out = task.run(&task.config(kind), &set, seed)?;
        record_loop(sink, kind.label(), setting, &out, detailed);
        if detailed && kind == ControllerKind::IdealMpc {
            sink.series("reference", setting, "r", &out.r);
        }
    }
    let oracle = task.oracle_deepc(&set, seed)?;
    record_loop(sink, "deepc", setting, &oracle.best, detailed);
    sink.push("deepc", setting, "best_lambda_g", 0, oracle.best_lambda_g);
    Ok(())
}

fn solve_time_scaling(config: &ExperimentConfig, system: &LtiSystem, sink: &mut Sink) -> Result<(), BenchError> {
    for &n in &config.n_data {
        let setting = format!("N={n}");
        for compress in [true, false] {
            let task = ControlTask { compress, ..control_task(config, system, n, config.noise[0]) };
            let set = task.dataset(sink.seed)?;
            let out = task.run(&task.config(ControllerKind::SmmPc), &set, sink.seed)?;
            let method = if compress { "smmpc-compressed" } else { "smmpc-raw" };
            sink.push(method, &setting, "decision_dimension", 0, set.m() as f64);
            sink.push(method, &setting, "median_step_time", 0, median(&out.solve_time));
            sink.push(method, &setting, "J", 0, out.cost);
        }
    }
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<dir>/<id>/{runs.csv, summary.csv, meta.json}` and returns the experiment directory.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<PathBuf, BenchError> {
    let out = dir.join(report.meta.experiment.name());
    fs::create_dir_all(&out)?;
    write_csv(&out.join("runs.csv"), &report.records)?;
    write_csv(&out.join("summary.csv"), &report.summary)?;
    let mut meta = serde_json::to_string_pretty(&report.meta)?;
    meta.push('\n');
    fs::write(out.join("meta.json"), meta)?;
    Ok(out)
}
