//! Test objectives and their variation operators.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::FitnessScale;
use crate::rng::RandomSource;

pub mod continuous;
pub mod deceptive;
pub mod line;
pub mod tsp;

pub use continuous::{fitness_cont2d, Continuous2d};
pub use deceptive::{
    chi, crossover_xy, fitness_2d, fitness_nd, mutate_real, Deceptive2d, DeceptiveNd, DeceptiveParams,
};
pub use line::{fitness_line, Line};
pub use tsp::{make_tsp_instance, tsp_fitness, tsp_mutate, TspInstance, TspMove, TspProblem};

/// Success predicate of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Target {
    /// Reached once an individual with fitness at least this level exists.
    Level(f64),
    /// Reached once an individual with `f ≥ threshold` exists.
    Threshold(f64),
    /// Never reached; runs use their full budget.
    None,
}

impl Target {
    pub fn is_hit(&self, fitness: f64) -> bool {
        match *self {
            Target::Level(t) | Target::Threshold(t) => fitness >= t,
            Target::None => false,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Level(v) => write!(f, "level:{v}"),
            Target::Threshold(v) => write!(f, "threshold:{v}"),
            Target::None => f.write_str("none"),
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "none" {
            return Ok(Target::None);
        }
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("target '{s}' must be level:<f>, threshold:<f> or none")))?;
        let v: f64 = parse_number(value, "target value")?;
        match kind {
            "level" => Ok(Target::Level(v)),
            "threshold" => Ok(Target::Threshold(v)),
            other => Err(Error::Parse(format!("unknown target kind '{other}'"))),
        }
    }
}

/// An objective with its genome representation and variation operators.
pub trait Problem {
    type Genome: Clone + fmt::Debug + Send;

    fn evaluate(&self, genome: &Self::Genome) -> Result<f64>;

    fn random_genome(&self, rng: &mut RandomSource) -> Self::Genome;

    /// Genome used to seed the initial population.
    fn initial_genome(&self, rng: &mut RandomSource) -> Self::Genome {
        self.random_genome(rng)
    }

    fn mutate(&self, genome: &Self::Genome, rng: &mut RandomSource) -> Self::Genome;

    fn crossover(
        &self,
        _first: &Self::Genome,
        _second: &Self::Genome,
        _rng: &mut RandomSource,
    ) -> Result<Self::Genome> {
        Err(Error::Unsupported("crossover is not defined for this problem".into()))
    }

    fn supports_crossover(&self) -> bool {
        false
    }

    fn scale(&self) -> FitnessScale;

    fn default_target(&self) -> Target;
}

/// Where a TSP instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TspSource {
    File(PathBuf),
    Random { cities: usize, seed: u64 },
}

/// Canonical problem addresses: `deceptive2d:Δ`, `deceptiveNd:D:Δ`,
/// `cont2d:Δ`, `line:N`, `tsp:<file>` and `tsp:random:n:seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ProblemSpec {
    Deceptive2d { width: f64 },
    DeceptiveNd { dim: usize, width: f64 },
    Cont2d { width: f64 },
    Line { top: i64 },
    Tsp(TspSource),
}

impl ProblemSpec {
    /// Family name used to group sweep cells.
    pub fn family(&self) -> String {
        match self {
            ProblemSpec::Deceptive2d { .. } => "deceptive2d".into(),
            ProblemSpec::DeceptiveNd { dim, .. } => format!("deceptiveNd:{dim}"),
            ProblemSpec::Cont2d { .. } => "cont2d".into(),
            ProblemSpec::Line { .. } => "line".into(),
            ProblemSpec::Tsp(_) => "tsp".into(),
        }
    }

    /// The parameter after the family, as it appears in sweep reports.
    pub fn params(&self) -> String {
        match self {
            ProblemSpec::Deceptive2d { width } | ProblemSpec::Cont2d { width } => width.to_string(),
            ProblemSpec::DeceptiveNd { width, .. } => width.to_string(),
            ProblemSpec::Line { top } => top.to_string(),
            ProblemSpec::Tsp(TspSource::File(path)) => path.display().to_string(),
            ProblemSpec::Tsp(TspSource::Random { cities, seed }) => format!("random:{cities}:{seed}"),
        }
    }

    /// Length scale for Δ-scaling fits: Δ itself, or `1/(N+1)` for the line.
    pub fn scaling_delta(&self) -> Option<f64> {
        match self {
            ProblemSpec::Deceptive2d { width } | ProblemSpec::Cont2d { width } => Some(*width),
            ProblemSpec::DeceptiveNd { width, .. } => Some(*width),
            ProblemSpec::Line { top } => Some(1.0 / (*top as f64 + 1.0)),
            ProblemSpec::Tsp(_) => None,
        }
    }

    /// Same family with a different scale parameter (Δ, or N for the line).
    pub fn with_param(&self, value: f64) -> Result<ProblemSpec> {
        let spec = match self {
            ProblemSpec::Deceptive2d { .. } => ProblemSpec::Deceptive2d { width: value },
            ProblemSpec::DeceptiveNd { dim, .. } => ProblemSpec::DeceptiveNd {
                dim: *dim,
                width: value,
            },
            ProblemSpec::Cont2d { .. } => ProblemSpec::Cont2d { width: value },
            ProblemSpec::Line { .. } => {
                if value.fract() != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "line length must be an integer, got {value}"
                    )));
                }
                ProblemSpec::Line { top: value as i64 }
            }
            ProblemSpec::Tsp(_) => return Err(Error::Unsupported("TSP problems have no scale parameter".into())),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProblemSpec::Deceptive2d { width } | ProblemSpec::Cont2d { width } => {
                DeceptiveParams::with_default_offsets(2, *width).map(drop)
            }
            ProblemSpec::DeceptiveNd { dim, width } => DeceptiveParams::with_default_offsets(*dim, *width).map(drop),
            ProblemSpec::Line { top } => Line::new(*top).map(drop),
            ProblemSpec::Tsp(TspSource::Random { cities, .. }) if *cities < 4 => Err(Error::InvalidParameter(format!(
                "TSP runs need at least 4 cities, got {cities}"
            ))),
            ProblemSpec::Tsp(_) => Ok(()),
        }
    }

    pub fn default_target(&self) -> Target {
        match self {
            ProblemSpec::Deceptive2d { .. } => Target::Level(4.0),
            ProblemSpec::DeceptiveNd { dim, .. } => Target::Level(*dim as f64 + 2.0),
            ProblemSpec::Cont2d { .. } => Target::Threshold(continuous::DEFAULT_THRESHOLD),
            ProblemSpec::Line { top } => Target::Level(*top as f64),
            ProblemSpec::Tsp(_) => Target::None,
        }
    }

    pub fn is_tsp(&self) -> bool {
        matches!(self, ProblemSpec::Tsp(_))
    }
}

fn parse_number<T: FromStr>(text: &str, what: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("malformed {what} '{}'", text.trim())))
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::Deceptive2d { width } => write!(f, "deceptive2d:{width}"),
            ProblemSpec::DeceptiveNd { dim, width } => write!(f, "deceptiveNd:{dim}:{width}"),
            ProblemSpec::Cont2d { width } => write!(f, "cont2d:{width}"),
            ProblemSpec::Line { top } => write!(f, "line:{top}"),
            ProblemSpec::Tsp(TspSource::File(path)) => write!(f, "tsp:{}", path.display()),
            ProblemSpec::Tsp(TspSource::Random { cities, seed }) => write!(f, "tsp:random:{cities}:{seed}"),
        }
    }
}

impl FromStr for ProblemSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("problem '{s}' must look like <family>:<params>")))?;
        let parts: Vec<&str> = rest.split(':').collect();
        let arity = |n: usize, form: &str| -> Result<()> {
            if parts.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!(
                    "problem '{family}' expects {n} parameter(s) ({form}), got {}",
                    parts.len()
                )))
            }
        };
        let spec = match family {
            "deceptive2d" => {
                arity(1, "Δ")?;
                ProblemSpec::Deceptive2d {
                    width: parse_number(parts[0], "feature width")?,
                }
            }
            "deceptiveNd" => {
                arity(2, "D:Δ")?;
                ProblemSpec::DeceptiveNd {
                    dim: parse_number(parts[0], "dimension")?,
                    width: parse_number(parts[1], "feature width")?,
                }
            }
            "cont2d" => {
                arity(1, "Δ")?;
                ProblemSpec::Cont2d {
                    width: parse_number(parts[0], "feature width")?,
                }
            }
            "line" => {
                arity(1, "N")?;
                ProblemSpec::Line {
                    top: parse_number(parts[0], "line length")?,
                }
            }
            "tsp" if parts[0] == "random" => {
                arity(3, "random:n:seed")?;
                ProblemSpec::Tsp(TspSource::Random {
                    cities: parse_number(parts[1], "city count")?,
                    seed: parse_number(parts[2], "instance seed")?,
                })
            }
            "tsp" if !rest.is_empty() => ProblemSpec::Tsp(TspSource::File(PathBuf::from(rest))),
            other => return Err(Error::Parse(format!("unknown problem family '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<ProblemSpec> for String {
    fn from(spec: ProblemSpec) -> String {
        spec.to_string()
    }
}

impl TryFrom<String> for ProblemSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}
