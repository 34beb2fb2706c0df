use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use smm_bench::config::{ExperimentConfig, ExperimentId, SystemSpec, DEFAULT_SEED};
use smm_bench::scenario::{estimate, identification_data, ControlTask, IdentificationData};
use smm_bench::{run_experiment, write_report};
use smm_core::control::ControllerKind;
use smm_core::kernel::{fit_metric, FirMethod};
use smm_core::lti::{NoiseModel, Trajectory};

#[derive(Parser)]
#[command(name = "smm", version, about = "Signal matrix model identification, control and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate an FIR model and report its fit against the true impulse response.
    Identify(IdentifyArgs),
    /// Run closed-loop receding-horizon control on a simulated plant.
    Control(ControlArgs),
    /// Run one of the benchmark experiments and write its tables.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ls,
    LsTc,
    Smm,
    SmmTc,
}

impl From<MethodArg> for FirMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ls => FirMethod::Ls,
            MethodArg::LsTc => FirMethod::LsTc,
            MethodArg::Smm => FirMethod::Smm,
            MethodArg::SmmTc => FirMethod::SmmTc,
        }
    }
}

#[derive(Args)]
struct IdentifyArgs {
    /// g1, g2, or csv:<path> to a recorded trajectory (columns t,u_1,y_1).
    #[arg(long, default_value = "g1")]
    system: SystemSpec,
    /// FIR length.
    #[arg(long, default_value_t = 11)]
    n: usize,
    #[arg(long, default_value_t = 0.01)]
    sigma2: f64,
    #[arg(long = "N", default_value_t = 50)]
    n_data: usize,
    #[arg(long = "L0", default_value_t = 4)]
    l0: usize,
    #[arg(long, value_enum, default_value = "smm")]
    method: MethodArg,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    known_past: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerArg {
    Subpc,
    Deepc,
    Smmpc,
    Mpc,
}

impl From<ControllerArg> for ControllerKind {
    fn from(c: ControllerArg) -> Self {
        match c {
            ControllerArg::Subpc => ControllerKind::SubPc,
            ControllerArg::Deepc => ControllerKind::Deepc,
            ControllerArg::Smmpc => ControllerKind::SmmPc,
            ControllerArg::Mpc => ControllerKind::IdealMpc,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct ControlArgs {
    #[arg(long, value_enum, default_value = "smmpc")]
    controller: ControllerArg,
    #[arg(long, default_value = "g1")]
    system: SystemSpec,
    #[arg(long = "N", default_value_t = 200)]
    n_data: usize,
    #[arg(long = "L0", default_value_t = 4)]
    l0: usize,
    #[arg(long = "Lp", default_value_t = 11)]
    lp: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 1.0)]
    sigmap2: f64,
    #[arg(long = "lambda-g", default_value_t = 100.0)]
    lambda_g: f64,
    #[arg(long = "lambda-y", default_value_t = 1000.0)]
    lambda_y: f64,
    #[arg(long, default_value_t = 60)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, value_enum, default_value = "on")]
    compress: Switch,
    /// Directory for `run_<r>.csv` trajectories and `summary.csv`.
    #[arg(long, default_value = "control_out")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    experiment: ExperimentId,
    /// JSON file with a full experiment configuration; built-in defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Identify(a) => identify(a),
        Command::Control(a) => control(a),
        Command::Bench(a) => bench(a),
    }
}

fn identify(a: IdentifyArgs) -> Result<()> {
    let method = FirMethod::from(a.method);
    let mut w = csv::Writer::from_writer(match &a.out {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?) as Box<dyn std::io::Write>,
        None => Box::new(std::io::stdout()),
    });
    let mut header = vec!["run".to_string(), "seed".into(), "method".into(), "W".into()];
    header.extend((0..a.n).map(|k| format!("h{k}")));
    w.write_record(&header)?;

    let truth = a.system.model().map(|s| s.impulse_response_siso(a.n)).transpose()?;
    for run in 0..a.runs {
        let seed = a.seed.wrapping_add(run as u64);
        let data = match (&a.system, a.system.model()) {
            (SystemSpec::Csv(path), _) => recorded(path, a.n, a.known_past)?,
            (_, Some(sys)) => identification_data(&sys, a.n_data, a.n, a.sigma2, seed)?,
            _ => unreachable!(),
        };
        let est = estimate(&data, method, a.n, a.l0, a.sigma2, a.known_past)?;
        let fit = match &truth {
            Some(h) => fit_metric(h, &est.h)?.to_string(),
            None => String::new(),
        };
        let mut row = vec![run.to_string(), seed.to_string(), method.label().to_string(), fit];
        row.extend(est.h.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// A recorded SISO trajectory; with known past inputs the first `n - 1` samples supply them.
fn recorded(path: &Path, n: usize, known_past: bool) -> Result<IdentificationData> {
    let traj = Trajectory::load_csv(path)?;
    if traj.u.nrows() != 1 || traj.y.nrows() != 1 {
        bail!("{} is not a single-input single-output trajectory", path.display());
    }
    let u: Vec<f64> = traj.u.iter().copied().collect();
    let y: Vec<f64> = traj.y.iter().copied().collect();
    let pre = if known_past { n.saturating_sub(1) } else { 0 };
    if u.len() <= pre {
        bail!("{} has too few samples", path.display());
    }
    Ok(IdentificationData { u: u[pre..].to_vec(), y: y[pre..].to_vec(), past_u: u[..pre].to_vec() })
}

fn control(a: ControlArgs) -> Result<()> {
    let Some(system) = a.system.model() else { bail!("closed-loop control needs a simulated plant (g1 or g2)") };
    let task = ControlTask {
        system,
        n_data: a.n_data,
        l0: a.l0,
        lp: a.lp,
        noise: NoiseModel::new(a.sigma2, a.sigmap2)?,
        steps: a.steps,
        lambda_g_grid: vec![a.lambda_g],
        lambda_y: a.lambda_y,
        compress: a.compress == Switch::On,
    };
    let mut config = task.config(a.controller.into());
    config.lambda_g = a.lambda_g;
    fs::create_dir_all(&a.out)?;
    let mut summary = csv::Writer::from_path(a.out.join("summary.csv"))?;
    summary.write_record(["run", "J", "solve_time_total"])?;
    for run in 0..a.runs {
        let seed = a.seed.wrapping_add(run as u64);
        let set = task.dataset(seed)?;
        let out = task.run(&config, &set, seed)?;
        let mut w = csv::Writer::from_path(a.out.join(format!("run_{run}.csv")))?;
        w.write_record(["t", "u", "y", "y0", "r"])?;
        for t in 0..out.u.len() {
            w.write_record([t.to_string(), out.u[t].to_string(), out.y[t].to_string(), out.y0[t].to_string(), out.r[t].to_string()])?;
        }
        w.flush()?;
        summary.write_record([run.to_string(), out.cost.to_string(), out.total_solve_time().to_string()])?;
        eprintln!("run {run}: J = {:.4}, failed steps = {}", out.cost, out.failures());
    }
    summary.flush()?;
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let c: ExperimentConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            if c.experiment != a.experiment {
                bail!("config is for {} but --experiment is {}", c.experiment, a.experiment);
            }
            c
        }
        None => ExperimentConfig::defaults(a.experiment),
    };
    if let Some(seed) = a.seed {
        config.base_seed = seed;
    }
    if let Some(out) = a.out {
        config.out_dir = Some(out);
    }
    let dir = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("bench_out"));
    let report = run_experiment(&config, a.workers)?;
    let path = write_report(&report, &dir)?;
    for f in &report.meta.failures {
        eprintln!("run {} (seed {}) failed: {}", f.run, f.seed, f.message);
    }
    eprintln!("{}: {} records written to {}", config.experiment, report.records.len(), path.display());
    Ok(())
}
