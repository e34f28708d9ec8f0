use crate::error::{Error, Result};
use crate::fitness::FitnessScale;
use crate::rng::RandomSource;

use super::{Problem, Target};

/// Unimodal line `f(i) = i` on `{0, ..., N}`.
pub fn fitness_line(i: i64, n: i64) -> Result<i64> {
    if !(0..=n).contains(&i) {
        return Err(Error::OutOfRange { value: i, max: n });
    }
    Ok(i)
}

/// Unimodal worst case for FUSS: local `±1` mutation, runs start at 0.
#[derive(Debug, Clone)]
pub struct Line {
    top: i64,
}

impl Line {
    pub fn new(top: i64) -> Result<Self> {
        if top < 1 {
            return Err(Error::InvalidParameter(format!("line length must be >= 1, got {top}")));
        }
        Ok(Line { top })
    }

    pub fn top(&self) -> i64 {
        self.top
    }

    /// Number of fitness levels `N + 1`.
    pub fn levels(&self) -> usize {
        self.top as usize + 1
    }
}

impl Problem for Line {
    type Genome = i64;

    fn evaluate(&self, genome: &i64) -> Result<f64> {
        Ok(fitness_line(*genome, self.top)? as f64)
    }

    fn random_genome(&self, rng: &mut RandomSource) -> i64 {
        rng.index(self.levels()) as i64
    }

    fn initial_genome(&self, _rng: &mut RandomSource) -> i64 {
        0
    }

    /// `i → i ± 1` with equal probability; steps off the line are clamped.
    fn mutate(&self, genome: &i64, rng: &mut RandomSource) -> i64 {
        let step = if rng.coin() { 1 } else { -1 };
        (genome + step).clamp(0, self.top)
    }

    fn scale(&self) -> FitnessScale {
        FitnessScale::Discrete(1.0)
    }

    fn default_target(&self) -> Target {
        Target::Level(self.top as f64)
    }
}
