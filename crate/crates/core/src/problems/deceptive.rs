//! Deceptive feature problems on the unit cube.
//!
//! An individual has feature `d` when its `d`-th coordinate lies in the
//! closed strip `[a_d, a_d + Δ]`. Single features are penalized, all
//! features together give the global optimum, and the featureless bulk is
//! a broad local optimum.

use crate::error::{Error, Result};
use crate::fitness::FitnessScale;
use crate::rng::RandomSource;

use super::{Problem, Target};

/// Default strip offsets, cycled for higher dimensions.
pub const DEFAULT_OFFSETS: [f64; 3] = [0.4, 0.2, 0.6];

#[derive(Debug, Clone, PartialEq)]
pub struct DeceptiveParams {
    offsets: Vec<f64>,
    width: f64,
}

impl DeceptiveParams {
    pub fn new(offsets: Vec<f64>, width: f64) -> Result<Self> {
        if offsets.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "deceptive problems need dimension >= 2, got {}",
                offsets.len()
            )));
        }
        if !(width > 0.0 && width < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "feature width must be in (0, 0.5), got {width}"
            )));
        }
        for (d, &a) in offsets.iter().enumerate() {
            if !(a >= 0.0 && a + width <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "feature strip {d} [{a}, {}] leaves [0, 1]",
                    a + width
                )));
            }
        }
        Ok(DeceptiveParams { offsets, width })
    }

    /// Default offsets `(0.4, 0.2, 0.6, 0.4, ...)` in `dim` dimensions.
    pub fn with_default_offsets(dim: usize, width: f64) -> Result<Self> {
        let offsets = (0..dim).map(|d| DEFAULT_OFFSETS[d % DEFAULT_OFFSETS.len()]).collect();
        DeceptiveParams::new(offsets, width)
    }

    pub fn dim(&self) -> usize {
        self.offsets.len()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }
}

/// Characteristic function of feature `d` (0-based): 1 iff
/// `a_d ≤ x_d ≤ a_d + Δ`.
pub fn chi(x: &[f64], d: usize, params: &DeceptiveParams) -> u32 {
    let a = params.offsets[d];
    u32::from(a <= x[d] && x[d] <= a + params.width)
}

/// The 2D table: 1 on I₁\I₂, 2 on I₂\I₁, 3 outside both, 4 on I₁∩I₂.
pub fn fitness_2d(x: f64, y: f64, params: &DeceptiveParams) -> u32 {
    let p = [x, y];
    match (chi(&p, 0, params), chi(&p, 1, params)) {
        (1, 0) => 1,
        (0, 1) => 2,
        (0, 0) => 3,
        _ => 4,
    }
}

/// `f(x) = (D+1)·Π_d χ_d − max_d d·χ_d + D + 1` with 1-based `d` and the
/// max over no present features taken as 0.
pub fn fitness_nd(x: &[f64], params: &DeceptiveParams) -> u32 {
    let dim = params.dim() as u32;
    let all = (0..params.dim()).all(|d| chi(x, d, params) == 1);
    let top = (0..params.dim())
        .filter(|&d| chi(x, d, params) == 1)
        .map(|d| d as u32 + 1)
        .max()
        .unwrap_or(0);
    (dim + 1) * u32::from(all) + dim + 1 - top
}

/// Replaces one uniformly chosen coordinate with a fresh uniform draw.
pub fn mutate_real(genome: &[f64], rng: &mut RandomSource) -> Vec<f64> {
    let d = rng.index(genome.len());
    let value = rng.uniform();
    mutate_coordinate(genome, d, value)
}

/// Deterministic core of [`mutate_real`].
pub fn mutate_coordinate(genome: &[f64], d: usize, value: f64) -> Vec<f64> {
    let mut child = genome.to_vec();
    child[d] = value;
    child
}

/// Two parents: x from the first, y from the second. More dimensions:
/// each coordinate from either parent with probability 1/2.
pub fn crossover_xy(first: &[f64], second: &[f64], rng: &mut RandomSource) -> Result<Vec<f64>> {
    if first.len() != second.len() {
        return Err(Error::DimensionMismatch {
            left: first.len(),
            right: second.len(),
        });
    }
    if first.len() == 2 {
        return Ok(vec![first[0], second[1]]);
    }
    Ok(first
        .iter()
        .zip(second)
        .map(|(&a, &b)| if rng.coin() { a } else { b })
        .collect())
}

fn random_point(dim: usize, rng: &mut RandomSource) -> Vec<f64> {
    (0..dim).map(|_| rng.uniform()).collect()
}

/// The 2D example with the fitness table.
#[derive(Debug, Clone)]
pub struct Deceptive2d {
    params: DeceptiveParams,
}

impl Deceptive2d {
    pub fn new(width: f64) -> Result<Self> {
        Ok(Deceptive2d {
            params: DeceptiveParams::with_default_offsets(2, width)?,
        })
    }

    pub fn with_params(params: DeceptiveParams) -> Result<Self> {
        if params.dim() != 2 {
            return Err(Error::InvalidParameter("2D problem needs two offsets".into()));
        }
        Ok(Deceptive2d { params })
    }

    pub fn params(&self) -> &DeceptiveParams {
        &self.params
    }
}

impl Problem for Deceptive2d {
    type Genome = Vec<f64>;

    fn evaluate(&self, genome: &Vec<f64>) -> Result<f64> {
        Ok(fitness_2d(genome[0], genome[1], &self.params) as f64)
    }

    fn random_genome(&self, rng: &mut RandomSource) -> Vec<f64> {
        random_point(2, rng)
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
        FitnessScale::Discrete(1.0)
    }

    fn default_target(&self) -> Target {
        Target::Level(4.0)
    }
}

/// The D-dimensional generalization.
#[derive(Debug, Clone)]
pub struct DeceptiveNd {
    params: DeceptiveParams,
}

impl DeceptiveNd {
    pub fn new(dim: usize, width: f64) -> Result<Self> {
        Ok(DeceptiveNd {
            params: DeceptiveParams::with_default_offsets(dim, width)?,
        })
    }

    pub fn params(&self) -> &DeceptiveParams {
        &self.params
    }
}

impl Problem for DeceptiveNd {
    type Genome = Vec<f64>;

    fn evaluate(&self, genome: &Vec<f64>) -> Result<f64> {
        Ok(fitness_nd(genome, &self.params) as f64)
    }

    fn random_genome(&self, rng: &mut RandomSource) -> Vec<f64> {
        random_point(self.params.dim(), rng)
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
        FitnessScale::Discrete(1.0)
    }

    fn default_target(&self) -> Target {
        Target::Level(self.params.dim() as f64 + 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_params() -> DeceptiveParams {
        DeceptiveParams::new(vec![0.4, 0.2], 0.2).unwrap()
    }

    #[test]
    fn chi_boundaries() {
        let p = default_params();
        assert_eq!(chi(&[0.4, 0.0], 0, &p), 1);
        assert_eq!(chi(&[0.4 + 0.2 + 1e-9, 0.0], 0, &p), 0);
        assert_eq!(chi(&[0.5, 0.0], 0, &p), 1);
        assert_eq!(chi(&[0.0, 0.2], 1, &p), 1);
    }

    #[test]
    fn fitness_2d_table() {
        let p = default_params();
        assert_eq!(fitness_2d(0.5, 0.3, &p), 4);
        assert_eq!(fitness_2d(0.1, 0.9, &p), 3);
        assert_eq!(fitness_2d(0.5, 0.9, &p), 1);
        assert_eq!(fitness_2d(0.1, 0.3, &p), 2);
    }

    #[test]
    fn fitness_nd_levels_3d() {
        let p = DeceptiveParams::with_default_offsets(3, 0.1).unwrap();
        let inside = [0.45, 0.25, 0.65];
        let outside = [0.0, 0.0, 0.0];
        assert_eq!(fitness_nd(&outside, &p), 4);
        assert_eq!(fitness_nd(&inside, &p), 5);
        assert_eq!(fitness_nd(&[inside[0], 0.0, 0.0], &p), 3);
        assert_eq!(fitness_nd(&[0.0, inside[1], 0.0], &p), 2);
        assert_eq!(fitness_nd(&[0.0, 0.0, inside[2]], &p), 1);
        assert_eq!(fitness_nd(&[inside[0], inside[1], 0.0], &p), 2);
        assert_eq!(fitness_nd(&[inside[0], 0.0, inside[2]], &p), 1);
    }

    #[test]
    fn fitness_nd_2d_single_feature_labels() {
        let p = default_params();
        assert_eq!(fitness_nd(&[0.5, 0.9], &p), 2);
        assert_eq!(fitness_nd(&[0.1, 0.3], &p), 1);
        assert_eq!(fitness_nd(&[0.1, 0.9], &p), 3);
        assert_eq!(fitness_nd(&[0.5, 0.3], &p), 4);
    }

    #[test]
    fn mutation_replaces_one_coordinate() {
        assert_eq!(mutate_coordinate(&[0.1, 0.2], 0, 0.7), vec![0.7, 0.2]);
        let mut rng = RandomSource::new(1);
        let parent = vec![0.1, 0.2, 0.3];
        for _ in 0..1000 {
            let child = mutate_real(&parent, &mut rng);
            let changed = parent.iter().zip(&child).filter(|(a, b)| a != b).count();
            assert!(changed <= 1);
            assert!(child.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn crossover_cases() {
        let p = default_params();
        let mut rng = RandomSource::new(2);
        let child = crossover_xy(&[0.5, 0.9], &[0.1, 0.3], &mut rng).unwrap();
        assert_eq!(child, vec![0.5, 0.3]);
        assert_eq!(fitness_2d(child[0], child[1], &p), 4);
        let same = vec![0.3, 0.7];
        assert_eq!(crossover_xy(&same, &same, &mut rng).unwrap(), same);
        assert!(matches!(
            crossover_xy(&[0.1, 0.2], &[0.1, 0.2, 0.3], &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));
        let a = vec![0.1, 0.2, 0.3];
        let b = vec![0.6, 0.7, 0.8];
        for _ in 0..100 {
            let c = crossover_xy(&a, &b, &mut rng).unwrap();
            for d in 0..3 {
                assert!(c[d] == a[d] || c[d] == b[d]);
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(DeceptiveParams::new(vec![0.4], 0.2).is_err());
        assert!(DeceptiveParams::new(vec![0.4, 0.2], 0.6).is_err());
        assert!(DeceptiveParams::new(vec![0.9, 0.2], 0.2).is_err());
        assert!(DeceptiveParams::new(vec![0.4, 0.2], 0.0).is_err());
    }
}
