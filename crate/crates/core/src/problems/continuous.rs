use crate::error::Result;
use crate::fitness::FitnessScale;
use crate::rng::RandomSource;

use super::deceptive::{crossover_xy, mutate_real, DeceptiveParams};
use super::{Problem, Target};

/// Smooth analogue of the 2D deceptive example. With `u = x − a`,
/// `v = y − b`:
/// `2u²/(u²+Δ²) + v²/(v²+Δ²) + 4·exp(−(u²+v²)/Δ²)`.
pub fn fitness_cont2d(x: f64, y: f64, a: f64, b: f64, width: f64) -> f64 {
    let (u, v) = (x - a, y - b);
    let w2 = width * width;
    let (u2, v2) = (u * u, v * v);
    2.0 * u2 / (u2 + w2) + v2 / (v2 + w2) + 4.0 * (-(u2 + v2) / w2).exp()
}

/// Default success threshold; only a neighbourhood of `(a, b)` of size
/// proportional to Δ exceeds it.
pub const DEFAULT_THRESHOLD: f64 = 3.5;

#[derive(Debug, Clone)]
pub struct Continuous2d {
    params: DeceptiveParams,
}

impl Continuous2d {
    pub fn new(width: f64) -> Result<Self> {
        Ok(Continuous2d {
            params: DeceptiveParams::with_default_offsets(2, width)?,
        })
    }

    pub fn params(&self) -> &DeceptiveParams {
        &self.params
    }
}

impl Problem for Continuous2d {
    type Genome = Vec<f64>;

    fn evaluate(&self, genome: &Vec<f64>) -> Result<f64> {
        let a = self.params.offsets();
        Ok(fitness_cont2d(genome[0], genome[1], a[0], a[1], self.params.width()))
    }

    fn random_genome(&self, rng: &mut RandomSource) -> Vec<f64> {
        vec![rng.uniform(), rng.uniform()]
    }

    fn mutate(&self, genome: &Vec<f64>, rng: &mut RandomSource) -> Vec<f64> {
        mutate_real(genome, rng)
    }

    fn crossover(&self, first: &Vec<f64>, second: &Vec<f64>, rng: &mut RandomSource) -> Result<Vec<f64>> {
        crossover_xy(first, second, rng)
    }

    fn supports_crossover(&self) -> bool {
        true
    }

    fn scale(&self) -> FitnessScale {
        FitnessScale::continuous()
    }

    fn default_target(&self) -> Target {
        Target::Threshold(DEFAULT_THRESHOLD)
    }
}
