use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use haneat::config::FileConfig;
use haneat::data::FIXTURE_NAMES;
use haneat::error::Error;
use haneat::experiment::{run_compare, run_experiment, ExperimentSpec, Mode};

#[derive(Parser)]
#[command(name = "haneat", version, about = "Evolve networks that mix activation functions, and benchmark them against single-activation baselines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment spec (heterogeneous, homogeneous or sweep).
    Run(CommonArgs),
    /// Run all five arms (HA-NEAT plus the four homogeneous baselines) on
    /// shared splits and write the comparison table and scatter file.
    Compare(CommonArgs),
    /// Sweep the activation-mutation rate over {0, 0.1, 0.2, 0.5, 1.0}.
    AblateMutation(CommonArgs),
    /// Run the four synthetic fixture targets.
    Fixtures(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Flat key/value config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fixture name, named dataset (cancer, engine, cholesterol) or CSV path.
    #[arg(long)]
    dataset: Option<String>,
    /// heterogeneous, homogeneous or sweep.
    #[arg(long)]
    mode: Option<String>,
    /// Hidden-node activation for homogeneous mode.
    #[arg(long)]
    activation: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    generations: Option<u32>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Output directory (HANEAT_OUT_DIR overrides).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for splits: 1 = serial, 0 = all cores.
    #[arg(long)]
    parallel: Option<usize>,
    /// Print engine progress every N generations (0 = quiet).
    #[arg(long)]
    log_every: Option<u32>,
}

impl CommonArgs {
    fn build_spec(&self) -> Result<ExperimentSpec, Error> {
        let mut spec = ExperimentSpec::default();
        if let Some(path) = &self.config {
            FileConfig::load(path)?.apply(&mut spec)?;
        }
        if let Some(dataset) = &self.dataset {
            spec.dataset = dataset.clone();
        }
        if let Some(mode) = &self.mode {
            spec.mode = FileConfig::parse_mode(mode, self.activation.as_deref())?;
        } else if let Some(kind) = &self.activation {
            spec.mode = FileConfig::parse_mode("homogeneous", Some(kind))?;
        }
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if let Some(generations) = self.generations {
            spec.evolution.max_generations = generations;
        }
        if let Some(population) = self.population {
            spec.evolution.population_size = population;
        }
        if let Some(replicates) = self.replicates {
            spec.replicates = replicates;
        }
        if let Some(folds) = self.folds {
            spec.folds = folds;
        }
        if let Some(out) = &self.out {
            spec.out_dir = out.clone();
        }
        if let Ok(dir) = std::env::var("HANEAT_OUT_DIR") {
            spec.out_dir = PathBuf::from(dir);
        }
        if let Some(parallel) = self.parallel {
            spec.parallel = parallel;
        }
        if let Some(log_every) = self.log_every {
            spec.log_every = log_every;
        }
        Ok(spec)
    }
}

fn print_summaries(outcome: &haneat::experiment::ExperimentOutcome) {
    for arm in &outcome.arms {
        let s = &arm.summary;
        println!(
            "{} on {}: {} runs, test mse median {} [{}, {}], median {} nodes / {} enabled connections",
            s.arm,
            s.dataset,
            s.n_runs,
            s.test_mse.median,
            s.test_mse.q25,
            s.test_mse.q75,
            s.median_nodes,
            s.median_enabled_connections
        );
    }
}

fn execute(command: &Command) -> Result<(), Error> {
    match command {
        Command::Run(args) => {
            let spec = args.build_spec()?;
            let outcome = run_experiment(&spec)?;
            print_summaries(&outcome);
        }
        Command::Compare(args) => {
            let spec = args.build_spec()?;
            let outcome = run_compare(&spec)?;
            print_summaries(&outcome);
            println!("table: {}", spec.out_dir.join("table.csv").display());
        }
        Command::AblateMutation(args) => {
            let mut spec = args.build_spec()?;
            spec.mode = Mode::Sweep;
            // the ablation preset uses a small population unless overridden
            if args.population.is_none() {
                spec.evolution.population_size = 50;
            }
            let outcome = run_experiment(&spec)?;
            print_summaries(&outcome);
            println!("series: {}", spec.out_dir.join("ablation.csv").display());
        }
        Command::Fixtures(args) => {
            let base = args.build_spec()?;
            for name in FIXTURE_NAMES {
                let mut spec = base.clone();
                spec.dataset = name.to_string();
                spec.mode = Mode::Heterogeneous;
                if args.generations.is_none() {
                    spec.evolution.max_generations = 1000;
                }
                if args.replicates.is_none() {
                    spec.replicates = 1;
                }
                spec.out_dir = base.out_dir.join("fixtures").join(name);
                let outcome = run_experiment(&spec)?;
                print_summaries(&outcome);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
