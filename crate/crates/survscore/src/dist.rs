//! Discretized distributions: positive bin masses read as a piecewise-linear
//! CDF on a time grid, and quantile curves for the quantile-regression side.

use crate::error::{Error, Result};
use crate::grid::{QuantileGrid, TimeGrid};

/// Masses below this floor are clamped up before renormalization so softmax
/// underflow can never produce a flat or decreasing CDF.
pub const MASS_FLOOR: f64 = 1e-12;

/// A distribution given by strictly positive bin masses `f̂_0..f̂_{B-1}` on a
/// time grid, interpreted as the piecewise-linear CDF connecting the
/// cumulative values at the thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct BinMassCdf {
    grid: TimeGrid,
    masses: Vec<f64>,
    /// cum[i] = F̂(ζ_i); cum[0] = 0, cum[B] = 1.
    cum: Vec<f64>,
    /// tail[i] = Σ_{k ≥ i} f̂_k, so tail[i] = 1 − F̂(ζ_i) without cancellation.
    tail: Vec<f64>,
}

impl BinMassCdf {
    pub fn new(grid: TimeGrid, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != grid.bins() {
            return Err(Error::GridMismatch(format!(
                "{} masses for {} bins",
                masses.len(),
                grid.bins()
            )));
        }
        for &m in &masses {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidInput(format!("bad bin mass {m}")));
            }
        }
        let clamped: Vec<f64> = masses.iter().map(|&m| m.max(MASS_FLOOR)).collect();
        let sum: f64 = clamped.iter().sum();
        let masses: Vec<f64> = clamped.iter().map(|&m| m / sum).collect();

        let bins = masses.len();
        let mut cum = vec![0.0; bins + 1];
        for i in 0..bins {
            cum[i + 1] = cum[i] + masses[i];
        }
        cum[bins] = 1.0;
        let mut tail = vec![0.0; bins + 1];
        for i in (0..bins).rev() {
            tail[i] = tail[i + 1] + masses[i];
        }
        Ok(Self {
            grid,
            masses,
            cum,
            tail,
        })
    }

    /// Uniform distribution over the grid's span (equal mass per unit time).
    pub fn uniform(grid: TimeGrid) -> Self {
        let upper = grid.upper();
        let masses: Vec<f64> = (0..grid.bins())
            .map(|i| grid.bin_width(i) / upper)
            .collect();
        Self::new(grid, masses).expect("uniform masses are valid")
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    /// F̂(ζ_i).
    pub fn cdf_at_knot(&self, i: usize) -> f64 {
        self.cum[i]
    }

    /// 1 − F̂(ζ_i) computed as a backward sum.
    pub fn tail_at_knot(&self, i: usize) -> f64 {
        self.tail[i]
    }

    /// Piecewise-linear CDF value at `t ∈ [0, ζ_B]`.
    pub fn cdf_at(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let i = self.grid.bin_of(t)?;
        let frac = (t - self.grid.threshold(i)) / self.grid.bin_width(i);
        Ok(self.cum[i] + self.masses[i] * frac)
    }

    /// 1 − F̂(t), guaranteed nonnegative.
    pub fn survival_at(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(1.0);
        }
        let i = self.grid.bin_of(t)?;
        let frac = (self.grid.threshold(i + 1) - t) / self.grid.bin_width(i);
        Ok(self.tail[i + 1] + self.masses[i] * frac)
    }

    /// Exact piecewise-linear inverse of `cdf_at`.
    pub fn quantile_at(&self, tau: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::OutOfRange {
                what: "quantile level",
                value: tau,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if tau == 0.0 {
            return Ok(0.0);
        }
        if tau == 1.0 {
            return Ok(self.grid.upper());
        }
        // Smallest i with cum[i + 1] >= tau.
        let i = self.cum[1..].partition_point(|&c| c < tau);
        let frac = (tau - self.cum[i]) / self.masses[i];
        Ok(self.grid.threshold(i) + frac * self.grid.bin_width(i))
    }

    /// Density f̂_i / (ζ_{i+1} − ζ_i) of the bin containing `t` (bin 0 at t = 0).
    pub fn density_at(&self, t: f64) -> Result<f64> {
        let i = if t == 0.0 { 0 } else { self.grid.bin_of(t)? };
        Ok(self.masses[i] / self.grid.bin_width(i))
    }
}

/// Estimated quantiles `F̂^{-1}(τ_0)..F̂^{-1}(τ_B)`: strictly increasing times
/// starting at 0 and ending at the model's maximum time.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileCurve {
    grid: QuantileGrid,
    values: Vec<f64>,
}

impl QuantileCurve {
    pub fn new(grid: QuantileGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.levels().len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} quantile levels",
                values.len(),
                grid.levels().len()
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidInput("quantile curve must start at 0".into()));
        }
        for pair in values.windows(2) {
            if !pair[1].is_finite() || pair[1] <= pair[0] {
                return Err(Error::InvalidInput(
                    "quantile curve values must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &QuantileGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, level_idx: usize) -> f64 {
        self.values[level_idx]
    }

    /// The curve's top value F̂^{-1}(1).
    pub fn z_max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Predicted quantile at a grid level; levels are never interpolated.
    pub fn value_at_level(&self, tau: f64) -> Result<f64> {
        Ok(self.values[self.grid.level_index(tau)?])
    }

    /// The CDF implied by linear interpolation between the (value, level)
    /// knots, clamped to [0, 1] outside the curve's range.
    pub fn implied_cdf_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= self.z_max() {
            return 1.0;
        }
        let k = self.values.partition_point(|&v| v < t);
        let (lo, hi) = (self.values[k - 1], self.values[k]);
        let (tlo, thi) = (self.grid.level(k - 1), self.grid.level(k));
        tlo + (thi - tlo) * (t - lo) / (hi - lo)
    }

    /// Rebin the implied CDF onto a time grid.
    pub fn to_bin_mass_cdf(&self, grid: &TimeGrid) -> Result<BinMassCdf> {
        let masses: Vec<f64> = (0..grid.bins())
            .map(|i| {
                self.implied_cdf_at(grid.threshold(i + 1)) - self.implied_cdf_at(grid.threshold(i))
            })
            .collect();
        BinMassCdf::new(grid.clone(), masses)
    }
}
