//! Fitness uniform selection (FUSS) for steady-state evolutionary
//! algorithms, the standard selection schemes it is compared against,
//! correlated fitness-pair selection for recombination, and a first-hit-time
//! benchmark harness on deceptive, unimodal and TSP test problems.
//!
//! ```
//! use fuss::{run_steady_state, RunConfig, Strategy, SelectionScheme};
//!
//! let problem = "deceptive2d:0.1".parse().unwrap();
//! let config = RunConfig::new(problem, Strategy::Select(SelectionScheme::Fuss), 42);
//! let trace = run_steady_state(&config).unwrap();
//! assert!(trace.first_hit_time.is_some());
//! ```

pub mod config;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod fitness;
pub mod io;
pub mod pairing;
pub mod population;
pub mod problems;
pub mod rng;
pub mod selection;

pub use config::{parse_config, Config, ConfigError};
pub use engine::{run_problem, run_steady_state, RunConfig, RunTrace, Strategy};
pub use error::{Error, Result};
pub use experiments::{fit_loglog_slope, generational_transform, run_sweep, summarize, SweepResult, SweepSpec};
pub use fitness::{Fitness, FitnessGrid, FitnessScale};
pub use pairing::{PairDistribution, PairMode};
pub use population::{DeletionPolicy, Individual, Population, TieRule};
pub use problems::{Problem, ProblemSpec, Target};
pub use rng::RandomSource;
pub use selection::SelectionScheme;
