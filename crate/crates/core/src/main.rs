use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fuss::config::{parse_config, Config};
use fuss::engine::{run_steady_state, Strategy};
use fuss::experiments::{expected_transform, generational_transform, run_sweep, summarize, Capacity, TspComparison};
use fuss::io as files;
use fuss::pairing::PairDistribution;
use fuss::population::DeletionPolicy;
use fuss::problems::{make_tsp_instance, TspInstance, TspMove, TspSource};
use fuss::{FitnessGrid, FitnessScale, RandomSource, SelectionScheme};

#[derive(Parser)]
#[command(name = "fuss", version, about = "Fitness uniform selection benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one steady-state EA and write its JSON trace.
    Run {
        /// Run configuration file (key=value).
        config: PathBuf,
        /// Trace file; overrides the config's `output`. Defaults to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a first-hit-time sweep and write `sweep.csv` and `slopes.csv`.
    Sweep {
        /// Sweep configuration file (key=value with kind=sweep).
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Apply one selection scheme to a fitness histogram (selection only)
    /// and write `level<TAB>before<TAB>after`.
    Histogram {
        /// Comma-separated level counts for levels f_min, f_min+ε, ...
        #[arg(long, value_delimiter = ',', required = true)]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 0.0)]
        f_min: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        /// Selection scheme, e.g. fuss, truncation:0.5, tournament:2:1.
        #[arg(long)]
        scheme: String,
        /// Number of selections; defaults to the input population size.
        #[arg(long)]
        offspring: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write expected rather than sampled offspring counts.
        #[arg(long)]
        expected: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the correlated pair distribution p(f, f') as a CSV matrix.
    Pairdist {
        #[arg(long)]
        levels: usize,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0)]
        f_min: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare schemes on a TSP instance and write per-seed best fitness.
    Tsp {
        /// Instance file; a random symmetric instance is generated otherwise.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        cities: usize,
        #[arg(long, default_value_t = 1)]
        instance_seed: u64,
        /// Also save the generated instance to this file.
        #[arg(long)]
        save_instance: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "fuss,tournament:2:1")]
        schemes: Vec<String>,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_name = "MOVE", default_value = "two_half_opt")]
        r#move: String,
        /// Population bound for every scheme: a count or `none`.
        #[arg(long)]
        capacity: Option<String>,
        #[arg(long)]
        deletion: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("FUSS_THREADS") else {
        return Ok(());
    };
    let threads: usize = match value.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => {
            return Err(Failure::Config(format!(
                "FUSS_THREADS must be a positive integer, got '{value}'"
            )))
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(runtime_err)
}

fn read_config(path: &Path) -> Result<Config, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|errors| {
        let lines: Vec<String> = errors.iter().map(|e| format!("{}: {e}", path.display())).collect();
        Failure::Config(lines.join("\n"))
    })
}

/// Writes to `path`, or stdout when absent.
fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> fuss::Result<()>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(runtime_err)?;
            }
            let mut out = BufWriter::new(File::create(p).map_err(|e| runtime_err(format!("{}: {e}", p.display())))?);
            write(&mut out).map_err(runtime_err)?;
            out.flush().map_err(runtime_err)
        }
        None => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            write(&mut out).map_err(runtime_err)?;
            out.flush().map_err(runtime_err)
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    configure_threads()?;
    match command {
        Command::Run { config, output } => {
            let mut run = match read_config(&config)? {
                Config::Run(c) => c,
                Config::Sweep(_) => return Err(Failure::Config("expected kind=run, found a sweep".into())),
            };
            if output.is_some() {
                run.output = output;
            }
            let trace = run_steady_state(&run).map_err(runtime_err)?;
            emit(run.output.as_deref(), |w| files::write_trace_json(&trace, w))
        }
        Command::Sweep { config, output } => {
            let spec = match read_config(&config)? {
                Config::Sweep(s) => s,
                Config::Run(_) => return Err(Failure::Config("expected kind=sweep, found a run".into())),
            };
            let dir = output
                .or_else(|| spec.output.clone())
                .ok_or_else(|| Failure::Config("sweep needs an output directory (output= or --output)".into()))?;
            let result = run_sweep(&spec).map_err(runtime_err)?;
            let (rows, slopes) = summarize(&result);
            fs::create_dir_all(&dir).map_err(runtime_err)?;
            emit(Some(&dir.join("sweep.csv")), |w| files::write_sweep_csv(&rows, w))?;
            emit(Some(&dir.join("slopes.csv")), |w| files::write_slopes_csv(&slopes, w))
        }
        Command::Histogram {
            counts,
            f_min,
            epsilon,
            scheme,
            offspring,
            seed,
            expected,
            output,
        } => {
            let scheme: SelectionScheme = scheme.parse().map_err(config_err)?;
            let grid = FitnessGrid::with_levels(f_min, epsilon, counts.len().max(1)).map_err(config_err)?;
            let hist: Vec<(f64, usize)> = counts.iter().enumerate().map(|(i, &n)| (grid.value(i), n)).collect();
            let total = offspring.unwrap_or_else(|| counts.iter().sum());
            let scale = FitnessScale::Discrete(epsilon);
            let after: Vec<String> = if expected {
                expected_transform(&hist, scheme, scale, total)
                    .map_err(config_err)?
                    .iter()
                    .map(|(_, e)| e.to_string())
                    .collect()
            } else {
                let mut rng = RandomSource::new(seed);
                generational_transform(&hist, scheme, scale, total, &mut rng)
                    .map_err(config_err)?
                    .iter()
                    .map(|(_, n)| n.to_string())
                    .collect()
            };
            emit(output.as_deref(), |w| {
                if expected {
                    writeln!(w, "level\tbefore\tafter")?;
                    for ((level, before), after) in hist.iter().zip(&after) {
                        writeln!(w, "{level}\t{before}\t{after}")?;
                    }
                    Ok(())
                } else {
                    let rows: Vec<(f64, usize, usize)> = hist
                        .iter()
                        .zip(&after)
                        .map(|(&(l, b), a)| (l, b, a.parse().expect("count")))
                        .collect();
                    files::write_histogram_tsv(&rows, w)
                }
            })
        }
        Command::Pairdist {
            levels,
            epsilon,
            f_min,
            output,
        } => {
            let grid = FitnessGrid::with_levels(f_min, epsilon, levels).map_err(config_err)?;
            let dist = PairDistribution::build(grid).map_err(config_err)?;
            emit(output.as_deref(), |w| files::write_pair_matrix_csv(&dist, w))
        }
        Command::Tsp {
            instance,
            cities,
            instance_seed,
            save_instance,
            schemes,
            budget,
            seeds,
            seed,
            r#move,
            capacity,
            deletion,
            output,
        } => {
            let strategies: Vec<Strategy> = schemes
                .iter()
                .map(|s| s.parse())
                .collect::<fuss::Result<_>>()
                .map_err(config_err)?;
            let tsp_move: TspMove = r#move.parse().map_err(config_err)?;
            let capacity = capacity
                .map(|c| match c.as_str() {
                    "none" => Ok(Capacity::Unbounded),
                    n => match n.parse::<usize>() {
                        Ok(k) if k > 0 => Ok(Capacity::Bounded(k)),
                        _ => Err(Failure::Config(format!(
                            "capacity must be a positive count or none, got '{n}'"
                        ))),
                    },
                })
                .transpose()?;
            let deletion: Option<DeletionPolicy> = deletion.map(|d| d.parse()).transpose().map_err(config_err)?;
            let source = match instance {
                Some(path) => {
                    TspInstance::load(&path).map_err(config_err)?;
                    TspSource::File(path)
                }
                None => {
                    if cities < 4 {
                        return Err(Failure::Config(format!("TSP needs at least 4 cities, got {cities}")));
                    }
                    if let Some(path) = &save_instance {
                        let inst = make_tsp_instance(cities, true, instance_seed).map_err(config_err)?;
                        emit(Some(path), |w| Ok(w.write_all(inst.to_text().as_bytes())?))?;
                    }
                    TspSource::Random {
                        cities,
                        seed: instance_seed,
                    }
                }
            };
            let mut cmp = TspComparison::new(source, strategies, seed);
            cmp.budget = budget;
            cmp.seeds = seeds;
            cmp.tsp_move = tsp_move;
            cmp.capacity = capacity;
            cmp.deletion = deletion;
            let rows = cmp.run().map_err(runtime_err)?;
            emit(output.as_deref(), |w| files::write_tsp_csv(&rows, w))
        }
    }
}
