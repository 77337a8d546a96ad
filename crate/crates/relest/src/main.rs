use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relest::error::Error;
use relest::experiment::{self, RmseTable, Window};
use relest::{bench, io, ExperimentConfig, Preset, Result};
use relest_core::observability::steps_since_observable;

#[derive(Parser)]
#[command(name = "relest", version, about = "Resistance, inductance and flux linkage estimation for reluctance actuators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one seed and write trace.csv and snr.csv.
    Simulate(Common),
    /// Replay a recorded t,u,iota CSV through all estimators.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Input CSV with at least the columns t,u,iota.
        #[arg(long)]
        input: PathBuf,
    },
    /// Run all seeds and write the RMSE tables.
    Compare(Common),
    /// Steps since the last observable window, from a recording or a simulation.
    Obs {
        #[command(flatten)]
        common: Common,
        /// Measured t,u,iota CSV; simulates one seed when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Measure per-step latency of both estimators.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1_000_000)]
        iterations: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Config file applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use this single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = PresetArg::Valve)]
    preset: PresetArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Valve,
    Relay,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let preset = match self.preset {
            PresetArg::Valve => Preset::Valve,
            PresetArg::Relay => Preset::Relay,
        };
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(preset, path)?,
            None => ExperimentConfig::preset(preset),
        };
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        fs::create_dir_all(&self.out_dir).map_err(|e| Error::Io { path: self.out_dir.clone(), source: e })?;
        let path = self.out_dir.join(name);
        File::create(&path).map(BufWriter::new).map_err(|e| Error::Io { path, source: e })
    }
}

fn read_input(path: &Path, cfg: &ExperimentConfig) -> Result<Vec<io::InputSample>> {
    let file = File::open(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    io::read_input(BufReader::new(file), &path.display().to_string(), cfg.filter.delta)
}

fn print_table(window: Window, table: &RmseTable) {
    println!("{} ({} seeds)", window.as_str(), table.n_seeds);
    println!("  {:<28} {:>12} {:>12} {:>12}", "", "r [ohm]", "l [H]", "lambda [Wb]");
    for (name, row) in table.rows() {
        match row {
            Some(r) => println!("  {:<28} {:>12.4e} {:>12.4e} {:>12.4e}", name, r.mean[0], r.mean[1], r.mean[2]),
            None => println!("  {:<28} {}", name, io::INSUFFICIENT_DATA),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = common.load()?;
            let trace = experiment::simulate_seed(&cfg, cfg.seeds[0])?;
            io::write_trace(common.create("trace.csv")?, &trace)?;
            io::write_snr(common.create("snr.csv")?, &trace)?;
            println!("{} samples -> {}", trace.samples.len(), common.out_dir.display());
        }
        Command::Estimate { common, input } => {
            let cfg = common.load()?;
            let samples = read_input(&input, &cfg)?;
            let run = experiment::replay(&samples, &cfg)?;
            io::write_estimates(common.create("estimates.csv")?, &run.blocks())?;
            println!("{} samples -> {}", samples.len(), common.out_dir.join("estimates.csv").display());
        }
        Command::Compare(common) => {
            let cfg = common.load()?;
            let report = experiment::run_experiment(&cfg, Some(&common.out_dir))?;
            print_table(Window::First, &report.first);
            print_table(Window::After, &report.after);
        }
        Command::Obs { common, input } => {
            let cfg = common.load()?;
            let (currents, t0, source) = match &input {
                Some(path) => {
                    let samples = read_input(path, &cfg)?;
                    (samples.iter().map(|s| s.iota).collect::<Vec<_>>(), samples[0].t, "measured")
                }
                None => (experiment::simulate_seed(&cfg, cfg.seeds[0])?.true_current(), 0.0, "true"),
            };
            let steps = steps_since_observable(&currents, cfg.filter.delta, cfg.obs_rel_tol, cfg.obs_cap);
            io::write_observability(common.create("observability.csv")?, cfg.filter.delta, t0, source, &steps)?;
            let capped = steps.iter().filter(|&&n| n >= cfg.obs_cap).count();
            println!("{} samples, {} without an observable window within {} steps", steps.len(), capped, cfg.obs_cap);
        }
        Command::Bench { common, iterations } => {
            let cfg = common.load()?;
            let r = bench::bench_step(&cfg, iterations)?;
            println!("iterations: {}", r.iterations);
            println!("semera   median {:>8.1} ns  p99 {:>8.1} ns", r.semera.median_ns, r.semera.p99_ns);
            println!("integral median {:>8.1} ns  p99 {:>8.1} ns", r.integral.median_ns, r.integral.p99_ns);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.category() as u8)
        }
    }
}
