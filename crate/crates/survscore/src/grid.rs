//! Discretization axes: time thresholds and quantile levels.

use crate::error::{Error, Result};

/// Time thresholds `0 = ζ_0 < ζ_1 < … < ζ_B` bounding `B` right-closed bins
/// `(ζ_i, ζ_{i+1}]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    thresholds: Vec<f64>,
}

impl TimeGrid {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.len() < 2 {
            return Err(Error::InvalidInput(
                "time grid needs at least one bin".into(),
            ));
        }
        if thresholds[0] != 0.0 {
            return Err(Error::InvalidInput(format!(
                "time grid must start at 0, got {}",
                thresholds[0]
            )));
        }
        for pair in thresholds.windows(2) {
            if !pair[1].is_finite() || pair[1] <= pair[0] {
                return Err(Error::InvalidInput(format!(
                    "time grid thresholds must be finite and strictly increasing ({} then {})",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(Self { thresholds })
    }

    /// `bins` equal-length bins covering `[0, z_max + eps)`.
    pub fn uniform(z_max: f64, bins: usize, eps: f64) -> Result<Self> {
        if !z_max.is_finite() || z_max <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "z_max must be positive, got {z_max}"
            )));
        }
        if bins == 0 {
            return Err(Error::InvalidInput("need at least one bin".into()));
        }
        if !eps.is_finite() || eps < 0.0 {
            return Err(Error::InvalidInput(format!(
                "eps must be nonnegative, got {eps}"
            )));
        }
        let top = z_max + eps;
        let thresholds = (0..=bins).map(|i| top * i as f64 / bins as f64).collect();
        Self::new(thresholds)
    }

    pub fn bins(&self) -> usize {
        self.thresholds.len() - 1
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn threshold(&self, i: usize) -> f64 {
        self.thresholds[i]
    }

    /// The top threshold ζ_B.
    pub fn upper(&self) -> f64 {
        *self.thresholds.last().unwrap()
    }

    pub fn bin_width(&self, i: usize) -> f64 {
        self.thresholds[i + 1] - self.thresholds[i]
    }

    /// Index of the bin containing `t` under the right-closed convention,
    /// i.e. the `i` with `ζ_i < t ≤ ζ_{i+1}`. Requires `0 < t ≤ ζ_B`.
    pub fn bin_of(&self, t: f64) -> Result<usize> {
        if !(t > 0.0 && t <= self.upper()) {
            return Err(Error::OutOfRange {
                what: "time",
                value: t,
                lo: 0.0,
                hi: self.upper(),
            });
        }
        let k = self.thresholds.partition_point(|&x| x < t);
        Ok(k - 1)
    }
}

/// Quantile levels `0 = τ_0 < τ_1 < … < τ_B = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileGrid {
    levels: Vec<f64>,
}

impl QuantileGrid {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidInput(
                "quantile grid needs at least two levels".into(),
            ));
        }
        if levels[0] != 0.0 || *levels.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput(
                "quantile grid must run from 0 to 1".into(),
            ));
        }
        for pair in levels.windows(2) {
            if !pair[1].is_finite() || pair[1] <= pair[0] {
                return Err(Error::InvalidInput(
                    "quantile levels must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self { levels })
    }

    /// `bins` equal steps over `[0, 1]`.
    pub fn uniform(bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidInput("need at least one bin".into()));
        }
        Self::new((0..=bins).map(|i| i as f64 / bins as f64).collect())
    }

    pub fn bins(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> f64 {
        self.levels[i]
    }

    /// Index of `tau` on the grid; levels are never interpolated.
    pub fn level_index(&self, tau: f64) -> Result<usize> {
        let k = self.levels.partition_point(|&x| x < tau - 1e-12);
        if k < self.levels.len() && (self.levels[k] - tau).abs() <= 1e-12 {
            Ok(k)
        } else {
            Err(Error::LevelNotOnGrid(tau))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_time_grid_splits_evenly() {
        let g = TimeGrid::uniform(10.0, 2, 0.0).unwrap();
        assert_eq!(g.thresholds(), &[0.0, 5.0, 10.0]);

        let g = TimeGrid::uniform(1.0, 4, 1e-3).unwrap();
        let want = [0.0, 0.25025, 0.5005, 0.75075, 1.001];
        for (got, want) in g.thresholds().iter().zip(want.iter()) {
            assert!((got - want).abs() < 1e-12);
        }

        let g = TimeGrid::uniform(3.0, 1, 0.5).unwrap();
        assert_eq!(g.thresholds(), &[0.0, 3.5]);
    }

    #[test]
    fn uniform_time_grid_rejects_bad_inputs() {
        assert!(TimeGrid::uniform(0.0, 4, 1e-3).is_err());
        assert!(TimeGrid::uniform(-1.0, 4, 1e-3).is_err());
        assert!(TimeGrid::uniform(1.0, 0, 1e-3).is_err());
        assert!(TimeGrid::uniform(1.0, 4, -1e-3).is_err());
    }

    #[test]
    fn bin_of_is_right_closed() {
        let g = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(g.bin_of(0.5).unwrap(), 0);
        assert_eq!(g.bin_of(1.0).unwrap(), 0);
        assert_eq!(g.bin_of(1.5).unwrap(), 1);
        assert_eq!(g.bin_of(2.0).unwrap(), 1);
        assert!(g.bin_of(0.0).is_err());
        assert!(g.bin_of(2.1).is_err());
    }

    #[test]
    fn quantile_grid_level_lookup() {
        let g = QuantileGrid::uniform(4).unwrap();
        assert_eq!(g.level_index(0.5).unwrap(), 2);
        assert_eq!(g.level_index(1.0).unwrap(), 4);
        assert!(g.level_index(0.3).is_err());
    }

    #[test]
    fn grids_reject_non_monotone_input() {
        assert!(TimeGrid::new(vec![0.0, 2.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.5, 1.0]).is_err());
        assert!(QuantileGrid::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(QuantileGrid::new(vec![0.0, 0.9]).is_err());
    }
}
