//! Fitness values, equi-spaced fitness grids and the discretization scale
//! used by the fitness-based selection schemes.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::Population;

/// A finite fitness value with a total order, usable as a map key.
///
/// Keys compare exactly. `-0.0` is normalized to `0.0` so both land in the
/// same level.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fitness(f64);

impl Fitness {
    /// Panics on NaN or infinite values; objectives in this crate only
    /// produce finite fitness.
    pub fn new(value: f64) -> Self {
        assert!(value.is_finite(), "fitness must be finite, got {value}");
        Fitness(if value == 0.0 { 0.0 } else { value })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for Fitness {
    fn from(value: f64) -> Self {
        Fitness::new(value)
    }
}

impl PartialEq for Fitness {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for Fitness {}

impl PartialOrd for Fitness {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fitness {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Fitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

const GRID_TOLERANCE: f64 = 1e-9;

/// Equi-spaced fitness values `{f_min, f_min + ε, ..., f_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessGrid {
    f_min: f64,
    f_max: f64,
    epsilon: f64,
    levels: usize,
}

impl FitnessGrid {
    pub fn new(f_min: f64, f_max: f64, epsilon: f64) -> Result<Self> {
        if !(f_min.is_finite() && f_max.is_finite() && epsilon.is_finite()) {
            return Err(Error::InvalidGrid("non-finite bound or spacing".into()));
        }
        if epsilon <= 0.0 {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {epsilon}")));
        }
        if f_max < f_min {
            return Err(Error::InvalidGrid(format!("f_max {f_max} < f_min {f_min}")));
        }
        let steps = (f_max - f_min) / epsilon;
        let rounded = steps.round();
        if (steps - rounded).abs() > GRID_TOLERANCE {
            return Err(Error::InvalidGrid(format!(
                "range {} is not a multiple of spacing {epsilon}",
                f_max - f_min
            )));
        }
        Ok(FitnessGrid {
            f_min,
            f_max,
            epsilon,
            levels: rounded as usize + 1,
        })
    }

    /// Grid `{f_min, f_min + ε, ...}` with exactly `levels` values.
    pub fn with_levels(f_min: f64, epsilon: f64, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidGrid("grid needs at least one level".into()));
        }
        if epsilon <= 0.0 || !epsilon.is_finite() || !f_min.is_finite() {
            return Err(Error::InvalidGrid(format!("bad spacing {epsilon} or origin {f_min}")));
        }
        Ok(FitnessGrid {
            f_min,
            f_max: f_min + epsilon * (levels - 1) as f64,
            epsilon,
            levels,
        })
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of levels `|F|`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn value(&self, index: usize) -> f64 {
        self.f_min + self.epsilon * index as f64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.levels).map(|i| self.value(i))
    }

    /// Index of a grid value; errors for values off the grid.
    pub fn index_of(&self, f: f64) -> Result<usize> {
        let steps = (f - self.f_min) / self.epsilon;
        let rounded = steps.round();
        if (steps - rounded).abs() > GRID_TOLERANCE || rounded < 0.0 || rounded as usize >= self.levels {
            return Err(Error::OffGrid { value: f });
        }
        Ok(rounded as usize)
    }
}

/// How the fitness axis is discretized for a problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitnessScale {
    /// Values lie on a grid with the given spacing ε.
    Discrete(f64),
    /// Continuous values; the spacing is the effective ε̂ of the current
    /// population. With `zero_limit` single FUSS selections use ε̂ → 0.
    Continuous { zero_limit: bool },
}

impl FitnessScale {
    pub fn continuous() -> Self {
        FitnessScale::Continuous { zero_limit: false }
    }

    /// Spacing that widens the FUSS sampling interval.
    pub fn fuss_epsilon<G>(&self, pop: &Population<G>) -> f64 {
        match *self {
            FitnessScale::Discrete(eps) => eps,
            FitnessScale::Continuous { zero_limit: true } => 0.0,
            FitnessScale::Continuous { zero_limit: false } => pop.effective_epsilon().unwrap_or(0.0),
        }
    }

    /// Spacing for pair selection and proportionate offsets. The ε̂ → 0
    /// limit does not apply here.
    pub fn spacing<G>(&self, pop: &Population<G>) -> f64 {
        match *self {
            FitnessScale::Discrete(eps) => eps,
            FitnessScale::Continuous { .. } => pop.effective_epsilon().unwrap_or(0.0),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, FitnessScale::Discrete(_))
    }
}
