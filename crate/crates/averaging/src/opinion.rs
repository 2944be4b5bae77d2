//! Opinion configurations and the pairwise averaging update.

use crate::error::{Error, Result};
use crate::init::InitialDistribution;
use crate::rng::RngStream;

/// State of the process: one real opinion per vertex plus elapsed time.
///
/// Averaging replaces two opinions by their midpoint, so the opinion range
/// can only contract and the sum is conserved (exactly in exact arithmetic;
/// the midpoint of two doubles never rounds outside their span, so the range
/// contraction holds bitwise as well).
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionConfig {
    pub opinions: Vec<f64>,
    pub time: f64,
}

impl OpinionConfig {
    pub fn new(opinions: Vec<f64>) -> Self {
        Self {
            opinions,
            time: 0.0,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.opinions.len()
    }

    /// Averages the opinions at `x` and `y` in place; `x == y` leaves the
    /// configuration unchanged.
    pub fn apply_average(&mut self, x: usize, y: usize) -> Result<()> {
        let n = self.opinions.len();
        if x >= n {
            return Err(Error::InvalidVertex { index: x, n });
        }
        if y >= n {
            return Err(Error::InvalidVertex { index: y, n });
        }
        if x != y {
            let m = 0.5 * (self.opinions[x] + self.opinions[y]);
            self.opinions[x] = m;
            self.opinions[y] = m;
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.opinions.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.opinions.len() as f64
    }

    /// Population variance (1/N normalization).
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.opinions
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<f64>()
            / self.opinions.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.opinions.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.opinions
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Draws `n` i.i.d. opinions from `dist`; replay-deterministic given the
/// stream.
pub fn sample_initial(
    dist: &InitialDistribution,
    n: usize,
    rng: &mut RngStream,
) -> Result<OpinionConfig> {
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one vertex".into()));
    }
    dist.validate()?;
    let opinions = (0..n).map(|_| dist.sample(rng)).collect();
    Ok(OpinionConfig::new(opinions))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_average() {
        let mut c = OpinionConfig::new(vec![0.0, 1.0]);
        c.apply_average(0, 1).unwrap();
        assert_eq!(c.opinions, vec![0.5, 0.5]);
    }

    #[test]
    fn self_pair_is_identity() {
        let mut c = OpinionConfig::new(vec![3.0, 7.0, 9.0]);
        c.apply_average(1, 1).unwrap();
        assert_eq!(c.opinions, vec![3.0, 7.0, 9.0]);
    }

    #[test]
    fn distinct_pair_arithmetic() {
        let mut c = OpinionConfig::new(vec![1.0, 3.0, 5.0]);
        c.apply_average(0, 2).unwrap();
        assert_eq!(c.opinions, vec![3.0, 3.0, 3.0]);
    }

    #[test]
    fn out_of_range_vertex() {
        let mut c = OpinionConfig::new(vec![0.0, 1.0]);
        assert!(matches!(
            c.apply_average(0, 2),
            Err(Error::InvalidVertex { index: 2, n: 2 })
        ));
    }

    #[test]
    fn point_mass_initial() {
        let mut rng = RngStream::new(0, 0);
        let c = sample_initial(&InitialDistribution::PointMass(2.5), 4, &mut rng).unwrap();
        assert_eq!(c.opinions, vec![2.5; 4]);
        assert_eq!(c.time, 0.0);
    }

    #[test]
    fn bernoulli_initial_repeats() {
        let d = InitialDistribution::Bernoulli(0.5);
        let a = sample_initial(&d, 100_000, &mut RngStream::new(7, 1)).unwrap();
        let b = sample_initial(&d, 100_000, &mut RngStream::new(7, 1)).unwrap();
        assert_eq!(a.opinions, b.opinions);
    }
}
