//! Closed-form weights that make the censored rules proper.
//!
//! Every weight is a conditional probability under a reference CDF: the true
//! distribution in the oracle, or the current model estimate under iterative
//! reweighting. For a censored point at c,
//!
//! * Portnoy: w = (τ − F(c)) / (1 − F(c)) when F(c) ≤ τ, otherwise an
//!   arbitrary constant supplied by [`WeightPolicy`];
//! * Cen-log: w_i = (F(ζ_{i+1}) − F(c)) / (1 − F(c)) for the bin i holding c;
//! * Cen-Brier: zero before c's bin, (F(ζ_{i+1}) − F(c)) / (1 − F(c)) at it,
//!   and the conditional bin masses f_i / (1 − F(c)) after it, summing to 1;
//! * Cen-RPS: w = (F(ζ) − F(c)) / (1 − F(c)) per threshold ζ ≥ c.
//!
//! Degenerate references with F(c) = 1 produce flagged weight vectors rather
//! than errors; callers count and report them.

use crate::data::CensoredObservation;
use crate::dist::{BinMassCdf, QuantileCurve};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scoring::WeightVector;

/// Anything that can serve as the reference CDF for weight computation.
/// Evaluation clamps outside the support: 0 below, 1 above.
pub trait ReferenceCdf {
    fn prob_at(&self, t: f64) -> f64;
}

impl ReferenceCdf for BinMassCdf {
    fn prob_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t >= self.grid().upper() {
            1.0
        } else {
            self.cdf_at(t).expect("t inside grid range")
        }
    }
}

impl ReferenceCdf for QuantileCurve {
    fn prob_at(&self, t: f64) -> f64 {
        self.implied_cdf_at(t)
    }
}

/// Policy for the branches where any constant 0 ≤ w ≤ 1 is admissible
/// (Portnoy with F(c) > τ, or no feasible crossing in grid search).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightPolicy {
    pub fallback_w: f64,
}

impl WeightPolicy {
    pub fn new(fallback_w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fallback_w) {
            return Err(Error::OutOfRange {
                what: "fallback weight",
                value: fallback_w,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(Self { fallback_w })
    }
}

impl Default for WeightPolicy {
    fn default() -> Self {
        Self { fallback_w: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PortnoyWeight {
    pub w: f64,
    pub flagged: bool,
}

/// Weight for Portnoy's estimator at level τ given censoring time c.
pub fn portnoy_weight(
    reference: &dyn ReferenceCdf,
    c: f64,
    tau: f64,
    policy: &WeightPolicy,
) -> Result<PortnoyWeight> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::OutOfRange {
            what: "quantile level",
            value: tau,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "censoring time must be positive, got {c}"
        )));
    }
    let tau_c = reference.prob_at(c);
    if tau_c <= tau {
        if tau_c >= 1.0 {
            // F(c) = 1 forces τ = 1; return the limit and flag it.
            return Ok(PortnoyWeight {
                w: 1.0,
                flagged: true,
            });
        }
        Ok(PortnoyWeight {
            w: ((tau - tau_c) / (1.0 - tau_c)).clamp(0.0, 1.0),
            flagged: false,
        })
    } else {
        Ok(PortnoyWeight {
            w: policy.fallback_w,
            flagged: false,
        })
    }
}

/// Cen-log weights: only the bin holding z is meaningful, the rest stay 0.
pub fn cen_log_weights(
    reference: &dyn ReferenceCdf,
    obs: &CensoredObservation,
    grid: &TimeGrid,
) -> Result<WeightVector> {
    let j = grid.bin_of(obs.time())?;
    let mut weights = vec![0.0; grid.bins()];
    let fc = reference.prob_at(obs.time());
    let mut flagged = false;
    if fc >= 1.0 {
        weights[j] = 1.0;
        flagged = true;
    } else {
        let fz = reference.prob_at(grid.threshold(j + 1));
        weights[j] = ((fz - fc) / (1.0 - fc)).clamp(0.0, 1.0);
    }
    WeightVector::with_flag(weights, flagged)
}

/// Cen-Brier weights. For δ = 1 the vector is one-hot on z's bin; for δ = 0
/// the censored mass is distributed so the entries sum to 1.
pub fn cen_brier_weights(
    reference: &dyn ReferenceCdf,
    obs: &CensoredObservation,
    grid: &TimeGrid,
) -> Result<WeightVector> {
    let j = grid.bin_of(obs.time())?;
    let bins = grid.bins();
    let mut weights = vec![0.0; bins];
    if obs.is_event() {
        weights[j] = 1.0;
        return WeightVector::new(weights);
    }
    let fc = reference.prob_at(obs.time());
    if fc >= 1.0 {
        weights[bins - 1] = 1.0;
        return WeightVector::with_flag(weights, true);
    }
    let denom = 1.0 - fc;
    weights[j] = (reference.prob_at(grid.threshold(j + 1)) - fc) / denom;
    for (i, w) in weights.iter_mut().enumerate().skip(j + 1) {
        *w = (reference.prob_at(grid.threshold(i + 1)) - reference.prob_at(grid.threshold(i)))
            / denom;
    }
    // Guard against float drift and references not reaching 1 at the top.
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for w in &mut weights {
            *w = (*w / total).clamp(0.0, 1.0);
        }
    }
    WeightVector::new(weights)
}

/// Cen-RPS weights per interior threshold (slot 0 unused). Thresholds before
/// z and uncensored rows keep weight 0, which the score never reads.
pub fn cen_rps_weights(
    reference: &dyn ReferenceCdf,
    obs: &CensoredObservation,
    grid: &TimeGrid,
) -> Result<WeightVector> {
    grid.bin_of(obs.time())?;
    let mut weights = vec![0.0; grid.bins()];
    if obs.is_event() {
        return WeightVector::new(weights);
    }
    let fc = reference.prob_at(obs.time());
    let mut flagged = false;
    for (i, w) in weights.iter_mut().enumerate().skip(1) {
        let zeta = grid.threshold(i);
        if obs.time() <= zeta {
            if fc >= 1.0 {
                *w = 1.0;
                flagged = true;
            } else {
                *w = ((reference.prob_at(zeta) - fc) / (1.0 - fc)).clamp(0.0, 1.0);
            }
        }
    }
    WeightVector::with_flag(weights, flagged)
}
