//! Random-matrix travelling salesman instances with inverse tour length as
//! fitness and single-city relocation / segment reversal mutations.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fitness::FitnessScale;
use crate::rng::RandomSource;

use super::{Problem, Target};

#[derive(Debug, Clone, PartialEq)]
pub struct TspInstance {
    cities: usize,
    distances: Vec<f64>,
    symmetric: bool,
    seed: u64,
}

impl TspInstance {
    /// Validates a row-major `n × n` matrix: zero diagonal, nonnegative
    /// finite entries, symmetric when flagged.
    pub fn from_matrix(cities: usize, distances: Vec<f64>, symmetric: bool, seed: u64) -> Result<Self> {
        if cities < 2 {
            return Err(Error::InvalidParameter(format!(
                "TSP needs at least 2 cities, got {cities}"
            )));
        }
        if distances.len() != cities * cities {
            return Err(Error::InvalidParameter(format!(
                "distance matrix has {} entries, expected {}",
                distances.len(),
                cities * cities
            )));
        }
        for i in 0..cities {
            if distances[i * cities + i] != 0.0 {
                return Err(Error::InvalidParameter(format!("d({i},{i}) must be 0")));
            }
            for j in 0..cities {
                let d = distances[i * cities + j];
                if !(d.is_finite() && d >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "d({i},{j}) = {d} is not a nonnegative number"
                    )));
                }
                if symmetric && d != distances[j * cities + i] {
                    return Err(Error::InvalidParameter(format!(
                        "matrix flagged symmetric but d({i},{j}) != d({j},{i})"
                    )));
                }
            }
        }
        Ok(TspInstance {
            cities,
            distances,
            symmetric,
            seed,
        })
    }

    pub fn cities(&self) -> usize {
        self.cities
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn distance(&self, from: usize, to: usize) -> f64 {
        self.distances[from * self.cities + to]
    }

    /// Plain-text form: `n symmetric seed`, then `n` rows of `n` distances.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.cities, self.symmetric, self.seed);
        for row in self.distances.chunks(self.cities) {
            let cells: Vec<String> = row.iter().map(|d| d.to_string()).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty TSP instance file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "TSP header must be 'n symmetric seed', got '{header}'"
            )));
        }
        let cities: usize = fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad city count '{}'", fields[0])))?;
        let symmetric = match fields[1] {
            "true" | "1" => true,
            "false" | "0" => false,
            other => return Err(Error::Parse(format!("bad symmetric flag '{other}'"))),
        };
        let seed: u64 = fields[2]
            .parse()
            .map_err(|_| Error::Parse(format!("bad seed '{}'", fields[2])))?;
        let mut distances = Vec::with_capacity(cities * cities);
        for (row, line) in lines.enumerate() {
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|v| {
                    v.parse()
                        .map_err(|_| Error::Parse(format!("row {row}: bad distance '{v}'")))
                })
                .collect::<Result<_>>()?;
            if values.len() != cities {
                return Err(Error::Parse(format!(
                    "row {row} has {} entries, expected {cities}",
                    values.len()
                )));
            }
            distances.extend(values);
        }
        if distances.len() != cities * cities {
            return Err(Error::Parse(format!("expected {cities} rows of distances")));
        }
        TspInstance::from_matrix(cities, distances, symmetric, seed)
    }

    pub fn load(path: &Path) -> Result<Self> {
        TspInstance::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Random instance: off-diagonal entries uniform in (0, 1), upper triangle
/// mirrored when `symmetric`.
pub fn make_tsp_instance(cities: usize, symmetric: bool, seed: u64) -> Result<TspInstance> {
    if cities < 2 {
        return Err(Error::InvalidParameter(format!(
            "TSP needs at least 2 cities, got {cities}"
        )));
    }
    let mut rng = RandomSource::new(seed);
    let mut d = vec![0.0; cities * cities];
    for i in 0..cities {
        for j in 0..cities {
            if i == j || (symmetric && j < i) {
                continue;
            }
            d[i * cities + j] = rng.open_uniform();
        }
    }
    if symmetric {
        for i in 0..cities {
            for j in 0..i {
                d[i * cities + j] = d[j * cities + i];
            }
        }
    }
    TspInstance::from_matrix(cities, d, symmetric, seed)
}

pub fn tour_length(tour: &[usize], inst: &TspInstance) -> f64 {
    let n = tour.len();
    (0..n).map(|k| inst.distance(tour[k], tour[(k + 1) % n])).sum()
}

pub fn is_permutation(tour: &[usize], cities: usize) -> bool {
    if tour.len() != cities {
        return false;
    }
    let mut seen = vec![false; cities];
    tour.iter()
        .all(|&c| c < cities && !std::mem::replace(&mut seen[c], true))
}

/// Inverse cycle length.
pub fn tsp_fitness(tour: &[usize], inst: &TspInstance) -> Result<f64> {
    if !is_permutation(tour, inst.cities()) {
        return Err(Error::InvalidParameter(
            "tour is not a permutation of the cities".into(),
        ));
    }
    let length = tour_length(tour, inst);
    if length <= 0.0 {
        return Err(Error::DegenerateInstance);
    }
    Ok(1.0 / length)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TspMove {
    /// Relocate one city.
    OneOpt,
    /// Segment reversal or relocation, each with probability 1/2.
    #[default]
    TwoHalfOpt,
}

impl fmt::Display for TspMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TspMove::OneOpt => "one_opt",
            TspMove::TwoHalfOpt => "two_half_opt",
        })
    }
}

impl FromStr for TspMove {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "one_opt" | "1-opt" => Ok(TspMove::OneOpt),
            "two_half_opt" | "2.5-opt" => Ok(TspMove::TwoHalfOpt),
            other => Err(Error::Parse(format!(
                "unknown TSP move '{other}' (expected one_opt or two_half_opt)"
            ))),
        }
    }
}

/// Removes the city at position `from` and reinserts it so it ends up at
/// position `to`.
pub fn relocate(tour: &[usize], from: usize, to: usize) -> Vec<usize> {
    let mut out = tour.to_vec();
    let city = out.remove(from);
    out.insert(to, city);
    out
}

/// Reverses positions `i..=j`.
pub fn reverse_segment(tour: &[usize], i: usize, j: usize) -> Vec<usize> {
    let mut out = tour.to_vec();
    out[i..=j].reverse();
    out
}

fn random_relocation(tour: &[usize], rng: &mut RandomSource) -> Vec<usize> {
    let n = tour.len();
    let from = rng.index(n);
    let mut to = rng.index(n - 1);
    if to >= from {
        to += 1;
    }
    relocate(tour, from, to)
}

fn random_reversal(tour: &[usize], rng: &mut RandomSource) -> Vec<usize> {
    let n = tour.len();
    let a = rng.index(n);
    let mut b = rng.index(n - 1);
    if b >= a {
        b += 1;
    }
    reverse_segment(tour, a.min(b), a.max(b))
}

pub fn tsp_mutate(tour: &[usize], mv: TspMove, rng: &mut RandomSource) -> Result<Vec<usize>> {
    if tour.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "TSP mutation needs >= 4 cities, got {}",
            tour.len()
        )));
    }
    Ok(match mv {
        TspMove::OneOpt => random_relocation(tour, rng),
        TspMove::TwoHalfOpt => {
            if rng.coin() {
                random_reversal(tour, rng)
            } else {
                random_relocation(tour, rng)
            }
        }
    })
}

pub fn random_tour(cities: usize, rng: &mut RandomSource) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut tour: Vec<usize> = (0..cities).collect();
    tour.shuffle(rng.rng_mut());
    tour
}

#[derive(Debug, Clone)]
pub struct TspProblem {
    instance: Arc<TspInstance>,
    mv: TspMove,
}

impl TspProblem {
    pub fn new(instance: Arc<TspInstance>, mv: TspMove) -> Result<Self> {
        if instance.cities() < 4 {
            return Err(Error::InvalidParameter("TSP runs need at least 4 cities".into()));
        }
        Ok(TspProblem { instance, mv })
    }

    pub fn instance(&self) -> &TspInstance {
        &self.instance
    }
}

impl Problem for TspProblem {
    type Genome = Vec<usize>;

    fn evaluate(&self, genome: &Vec<usize>) -> Result<f64> {
        tsp_fitness(genome, &self.instance)
    }

    fn random_genome(&self, rng: &mut RandomSource) -> Vec<usize> {
        random_tour(self.instance.cities(), rng)
    }

    fn mutate(&self, genome: &Vec<usize>, rng: &mut RandomSource) -> Vec<usize> {
        tsp_mutate(genome, self.mv, rng).expect("instance has at least 4 cities")
    }

    fn scale(&self) -> FitnessScale {
        FitnessScale::continuous()
    }

    fn default_target(&self) -> Target {
        Target::None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> TspInstance {
        let d = vec![0.0, 1.0, 3.0, 1.0, 0.0, 2.0, 3.0, 2.0, 0.0];
        TspInstance::from_matrix(3, d, true, 0).unwrap()
    }

    #[test]
    fn triangle_fitness() {
        let inst = triangle();
        let f = tsp_fitness(&[0, 1, 2], &inst).unwrap();
        assert!((f - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(tsp_fitness(&[1, 2, 0], &inst).unwrap(), f);
        assert_eq!(tsp_fitness(&[2, 1, 0], &inst).unwrap(), f);
    }

    #[test]
    fn zero_cycle_is_degenerate() {
        let inst = TspInstance::from_matrix(2, vec![0.0; 4], true, 0).unwrap();
        assert_eq!(tsp_fitness(&[0, 1], &inst).unwrap_err(), Error::DegenerateInstance);
        assert!(tsp_fitness(&[0, 0], &inst).is_err());
    }

    #[test]
    fn explicit_moves() {
        assert_eq!(relocate(&[0, 1, 2, 3], 3, 1), vec![0, 3, 1, 2]);
        assert_eq!(reverse_segment(&[0, 1, 2, 3], 1, 2), vec![0, 2, 1, 3]);
    }

    #[test]
    fn mutation_needs_four_cities() {
        let mut rng = RandomSource::new(0);
        assert!(tsp_mutate(&[0, 1, 2], TspMove::OneOpt, &mut rng).is_err());
    }

    #[test]
    fn random_instances() {
        let a = make_tsp_instance(12, true, 5).unwrap();
        let b = make_tsp_instance(12, true, 5).unwrap();
        assert_eq!(a, b);
        for i in 0..12 {
            assert_eq!(a.distance(i, i), 0.0);
            for j in 0..12 {
                assert_eq!(a.distance(i, j), a.distance(j, i));
                if i != j {
                    assert!(a.distance(i, j) > 0.0 && a.distance(i, j) < 1.0);
                }
            }
        }
        let asym = make_tsp_instance(6, false, 5).unwrap();
        assert!((0..6).any(|i| (0..6).any(|j| asym.distance(i, j) != asym.distance(j, i))));
        assert_ne!(
            make_tsp_instance(6, true, 6).unwrap(),
            make_tsp_instance(6, true, 5).unwrap()
        );
    }

    #[test]
    fn text_round_trip() {
        let inst = make_tsp_instance(7, true, 11).unwrap();
        let back = TspInstance::from_text(&inst.to_text()).unwrap();
        assert_eq!(inst, back);
        assert!(TspInstance::from_text("3 true 0\n0 1\n").is_err());
        assert!(TspInstance::from_text("2 maybe 0\n0 1\n1 0\n").is_err());
        assert!(TspInstance::from_text("2 true 0\n0 1\n2 0\n").is_err());
    }

    #[test]
    fn move_strings() {
        for m in [TspMove::OneOpt, TspMove::TwoHalfOpt] {
            assert_eq!(m.to_string().parse::<TspMove>().unwrap(), m);
        }
    }
}
