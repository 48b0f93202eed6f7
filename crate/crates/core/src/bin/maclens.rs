use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maclens::pipeline::{
    emit_plot_data, scaling_sweep, BatteryRef, ExperimentConfig, ModelRef, Report, Stage,
};
use maclens::Error;

#[derive(Parser)]
#[command(name = "maclens", version, about = "Arbitration crossover analysis on a toy multimodal transformer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crossover detection over the battery.
    Mac(RunArgs),
    /// Crossover pass followed by the representation probes.
    Probes(RunArgs),
    /// Crossover pass followed by activation patching.
    Patch(RunArgs),
    /// Crossover pass followed by linear and SAE steering.
    Steer(RunArgs),
    /// Every stage listed in the configuration, or in --stages.
    All {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated stage list overriding the configuration.
        #[arg(long, value_delimiter = ',', value_parser = parse_stage)]
        stages: Option<Vec<Stage>>,
    },
    /// Crossover metrics of the same battery at several model depths.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Layer counts to compare.
        #[arg(long, value_delimiter = ',', default_values_t = [16usize, 24, 32])]
        layers: Vec<usize>,
        /// Residual widths, one per layer count or a single shared value.
        #[arg(long, value_delimiter = ',')]
        d_model: Vec<usize>,
    },
    /// Prints the effective configuration as JSON.
    PrintConfig(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON). Built-in defaults when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, env = "MACLENS_OUT")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sample-level parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Sample pairs per scenario.
    #[arg(long)]
    samples: Option<usize>,
    /// Named battery replacing the configured one.
    #[arg(long)]
    battery: Option<String>,
    /// Cache hidden-state cubes under the output directory.
    #[arg(long)]
    cache_cubes: bool,
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    Stage::ALL
        .into_iter()
        .find(|st| st.name() == s)
        .ok_or_else(|| {
            let names: Vec<&str> = Stage::ALL.iter().map(|st| st.name()).collect();
            format!("unknown stage `{s}` (known: {})", names.join(", "))
        })
}

impl RunArgs {
    fn load(&self) -> maclens::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        if let Some(n) = self.samples {
            cfg.samples = n;
        }
        if let Some(b) = &self.battery {
            cfg.battery = BatteryRef::Named(b.clone());
        }
        cfg.cache_cubes |= self.cache_cubes;
        Ok(cfg)
    }
}

fn run_stages(args: &RunArgs, stages: Option<Vec<Stage>>) -> maclens::Result<bool> {
    let mut cfg = args.load()?;
    if let Some(s) = stages {
        cfg.stages = s;
    }
    let report = maclens::pipeline::run_experiment(&cfg)?;
    emit_plot_data(&report, &cfg.output_dir)?;
    summarize(&report, &cfg);
    Ok(report.failed_checks().is_empty())
}

fn summarize(report: &Report, cfg: &ExperimentConfig) {
    if let Some(mac) = &report.mac {
        for r in &mac.rows {
            log::info!(
                "{}: mean MAC {:?}, R {:.1}%, D {:?}%",
                r.scenario,
                r.mean_mac,
                r.r_pct,
                r.d_pct_rounded
            );
        }
    }
    let failed = report.failed_checks();
    for c in &failed {
        eprintln!("check failed: {} ({})", c.name, c.detail);
    }
    println!(
        "{} checks, {} failed; report at {}",
        report.checks.len(),
        failed.len(),
        cfg.output_dir.join("report.json").display()
    );
}

fn sweep(args: &RunArgs, layers: &[usize], widths: &[usize]) -> maclens::Result<bool> {
    let base = args.load()?;
    if !widths.is_empty() && widths.len() != 1 && widths.len() != layers.len() {
        return Err(Error::Config(
            "--d-model needs one value or one per layer count".into(),
        ));
    }
    let base_model = match &base.model {
        ModelRef::Inline(m) => m.clone(),
        ModelRef::Path(_) => base.resolve()?.model,
    };
    let cfgs: Vec<ExperimentConfig> = layers
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let mut m = base_model.clone();
            m.layers = l;
            if let Some(&d) = widths.get(i).or(widths.first()) {
                m.d_model = d;
            }
            ExperimentConfig {
                model: ModelRef::Inline(m),
                stages: vec![Stage::Mac],
                ..base.clone()
            }
        })
        .collect();
    let rows = scaling_sweep(&cfgs)?;
    std::fs::create_dir_all(&base.output_dir)?;
    let mut csv = String::from("layers,d_model,n,mean_mac,d_pct,win_rate,mean_final_gap\n");
    let fmt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.layers,
            r.d_model,
            r.n,
            fmt(r.mean_mac),
            fmt(r.d_pct),
            r.win_rate,
            r.mean_final_gap
        ));
    }
    std::fs::write(base.output_dir.join("sweep.csv"), &csv)?;
    std::fs::write(
        base.output_dir.join("sweep.json"),
        serde_json::to_string_pretty(&rows)?,
    )?;
    print!("{csv}");
    Ok(true)
}

fn dispatch(cli: Cli) -> maclens::Result<bool> {
    let only = |stages: &[Stage]| Some(stages.to_vec());
    match cli.command {
        Command::Mac(a) => run_stages(&a, only(&[Stage::Mac])),
        Command::Probes(a) => run_stages(&a, only(&[Stage::Mac, Stage::Probes])),
        Command::Patch(a) => run_stages(&a, only(&[Stage::Mac, Stage::Patching])),
        Command::Steer(a) => run_stages(
            &a,
            only(&[Stage::Mac, Stage::SteeringLinear, Stage::SteeringSae]),
        ),
        Command::All { run, stages } => run_stages(&run, stages),
        Command::Sweep { run, layers, d_model } => sweep(&run, &layers, &d_model),
        Command::PrintConfig(a) => {
            let cfg = a.load()?;
            cfg.resolve()?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "{}", serde_json::to_string_pretty(&cfg)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
