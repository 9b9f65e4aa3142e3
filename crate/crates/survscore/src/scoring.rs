//! Scoring rules for survival analysis.
//!
//! The quantile side has the pinball loss and its censored extension
//! (Portnoy's estimator), which splits a censored point between its censoring
//! time and a pseudo-point z_∞ beyond z_max with weight w. The distribution
//! side has the logarithmic, Brier, and ranked probability scores and their
//! censored extensions, which take per-bin weights. All rules are negatively
//! oriented: smaller is better. The closed forms that make the censored
//! rules proper live in [`crate::weights`].
//!
//! Scores that are mathematically infinite (a log of zero survival mass) are
//! returned as `f64::INFINITY` rather than an error so that empirical means
//! propagate the signal.

use std::fmt;
use std::str::FromStr;

use crate::data::CensoredObservation;
use crate::dist::{BinMassCdf, QuantileCurve};
use crate::error::{Error, Result};

/// Identifier for every implemented rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScoringRule {
    Portnoy,
    Log,
    CenLog,
    CenLogSimple,
    CenContLog,
    Brier,
    CenBrier,
    Rps,
    CenRps,
}

impl ScoringRule {
    pub const ALL: [ScoringRule; 9] = [
        ScoringRule::Portnoy,
        ScoringRule::Log,
        ScoringRule::CenLog,
        ScoringRule::CenLogSimple,
        ScoringRule::CenContLog,
        ScoringRule::Brier,
        ScoringRule::CenBrier,
        ScoringRule::Rps,
        ScoringRule::CenRps,
    ];

    /// The four rules whose properness depends on externally supplied weights.
    pub const WEIGHTED: [ScoringRule; 4] = [
        ScoringRule::Portnoy,
        ScoringRule::CenLog,
        ScoringRule::CenBrier,
        ScoringRule::CenRps,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScoringRule::Portnoy => "portnoy",
            ScoringRule::Log => "log",
            ScoringRule::CenLog => "cen-log",
            ScoringRule::CenLogSimple => "cen-log-simple",
            ScoringRule::CenContLog => "cen-cont-log",
            ScoringRule::Brier => "brier",
            ScoringRule::CenBrier => "cen-brier",
            ScoringRule::Rps => "rps",
            ScoringRule::CenRps => "cen-rps",
        }
    }

    /// Rules estimated on the quantile axis rather than the time axis.
    pub fn is_quantile(&self) -> bool {
        matches!(self, ScoringRule::Portnoy)
    }

    pub fn needs_weights(&self) -> bool {
        Self::WEIGHTED.contains(self)
    }

    /// Rules usable as training losses on censored data.
    pub fn is_trainable(&self) -> bool {
        !matches!(
            self,
            ScoringRule::Log | ScoringRule::Brier | ScoringRule::Rps
        )
    }
}

impl fmt::Display for ScoringRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoringRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        for rule in Self::ALL {
            if rule.as_str() == s {
                return Ok(rule);
            }
        }
        Err(Error::Usage(format!("unknown scoring rule `{s}`")))
    }
}

/// Per-entry weights for the censored rules, each in [0, 1].
///
/// Indexing depends on the rule: by time bin for Cen-log and Cen-Brier, by
/// interior threshold for Cen-RPS (slot 0 unused), and by quantile level for
/// Portnoy training. `flagged` marks weights built from a degenerate
/// reference (F(c) = 1).
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
    flagged: bool,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::with_flag(weights, false)
    }

    pub fn with_flag(weights: Vec<f64>, flagged: bool) -> Result<Self> {
        for &w in &weights {
            if !w.is_finite() || !(0.0..=1.0).contains(&w) {
                return Err(Error::OutOfRange {
                    what: "weight",
                    value: w,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        Ok(Self { weights, flagged })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            weights: vec![0.0; n],
            flagged: false,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn flagged(&self) -> bool {
        self.flagged
    }
}

/// Configuration of Portnoy's estimator for a single quantile level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PortnoyConfig {
    pub tau: f64,
    pub z_infinity: f64,
    pub weight: f64,
}

impl PortnoyConfig {
    pub fn new(tau: f64, z_infinity: f64, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::OutOfRange {
                what: "quantile level",
                value: tau,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::OutOfRange {
                what: "weight",
                value: weight,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if !z_infinity.is_finite() || z_infinity <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "z_infinity must be positive, got {z_infinity}"
            )));
        }
        Ok(Self {
            tau,
            z_infinity,
            weight,
        })
    }
}

/// Pinball (check) loss of a predicted τ-quantile against an outcome y.
pub fn pinball(predicted_quantile: f64, y: f64, tau: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::OutOfRange {
            what: "quantile level",
            value: tau,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(if predicted_quantile >= y {
        (1.0 - tau) * (predicted_quantile - y)
    } else {
        tau * (y - predicted_quantile)
    })
}

/// Portnoy's censored pinball loss. For δ = 1 this is the plain pinball loss
/// at z; for δ = 0 the point is split between z and z_∞ with weight w.
pub fn portnoy(
    pred: &QuantileCurve,
    obs: &CensoredObservation,
    cfg: &PortnoyConfig,
) -> Result<f64> {
    if cfg.z_infinity <= pred.z_max() {
        return Err(Error::InvalidInput(format!(
            "z_infinity {} must exceed z_max {}",
            cfg.z_infinity,
            pred.z_max()
        )));
    }
    let q = pred.value_at_level(cfg.tau)?;
    if obs.is_event() {
        pinball(q, obs.time(), cfg.tau)
    } else {
        Ok(cfg.weight * pinball(q, obs.time(), cfg.tau)?
            + (1.0 - cfg.weight) * pinball(q, cfg.z_infinity, cfg.tau)?)
    }
}

fn check_outcome(pred: &BinMassCdf, y: f64) -> Result<usize> {
    pred.grid().bin_of(y)
}

/// Logarithmic score: −log f̂_i for the bin containing y.
pub fn log_score(pred: &BinMassCdf, y: f64) -> Result<f64> {
    let i = check_outcome(pred, y)?;
    Ok(-pred.mass(i).ln())
}

/// Censored logarithmic score. Only the weight of z's bin is read.
pub fn cen_log(
    pred: &BinMassCdf,
    obs: &CensoredObservation,
    weights: &WeightVector,
) -> Result<f64> {
    if weights.len() != pred.bins() {
        return Err(Error::GridMismatch(format!(
            "{} weights for {} bins",
            weights.len(),
            pred.bins()
        )));
    }
    if obs.is_event() {
        return log_score(pred, obs.time());
    }
    let i = check_outcome(pred, obs.time())?;
    let w = weights.get(i);
    let event_term = if w > 0.0 { w * pred.mass(i).ln() } else { 0.0 };
    let tail_term = if w < 1.0 {
        (1.0 - w) * pred.tail_at_knot(i + 1).ln()
    } else {
        0.0
    };
    Ok(-(event_term + tail_term))
}

/// Censored logarithmic score with all weights fixed at zero.
pub fn cen_log_simple(pred: &BinMassCdf, obs: &CensoredObservation) -> Result<f64> {
    if obs.is_event() {
        return log_score(pred, obs.time());
    }
    let i = check_outcome(pred, obs.time())?;
    Ok(-pred.tail_at_knot(i + 1).ln())
}

/// Continuous-limit censored logarithmic score:
/// −δ log dF̂/dt(z) − (1 − δ) log(1 − F̂(z)).
pub fn cen_cont_log(pred: &BinMassCdf, obs: &CensoredObservation) -> Result<f64> {
    if obs.is_event() {
        Ok(-pred.density_at(obs.time())?.ln())
    } else {
        check_outcome(pred, obs.time())?;
        Ok(-pred.survival_at(obs.time())?.ln())
    }
}

/// Brier score: Σ_i (1(ζ_i < y ≤ ζ_{i+1}) − f̂_i)².
pub fn brier(pred: &BinMassCdf, y: f64) -> Result<f64> {
    let j = check_outcome(pred, y)?;
    let mut total = 0.0;
    for i in 0..pred.bins() {
        let ind = if i == j { 1.0 } else { 0.0 };
        let d = ind - pred.mass(i);
        total += d * d;
    }
    Ok(total)
}

/// Censored Brier score: Σ_i ( w_i (1 − f̂_i)² + (1 − w_i) f̂_i² ).
pub fn cen_brier(
    pred: &BinMassCdf,
    obs: &CensoredObservation,
    weights: &WeightVector,
) -> Result<f64> {
    if weights.len() != pred.bins() {
        return Err(Error::GridMismatch(format!(
            "{} weights for {} bins",
            weights.len(),
            pred.bins()
        )));
    }
    check_outcome(pred, obs.time())?;
    let mut total = 0.0;
    for i in 0..pred.bins() {
        let w = weights.get(i);
        let m = pred.mass(i);
        total += w * (1.0 - m) * (1.0 - m) + (1.0 - w) * m * m;
    }
    Ok(total)
}

/// Binary censored Brier score at a single threshold ζ.
pub fn cen_binary_brier(
    pred: &BinMassCdf,
    obs: &CensoredObservation,
    zeta: f64,
    w: f64,
) -> Result<f64> {
    if !(zeta > 0.0 && zeta < pred.grid().upper()) {
        return Err(Error::OutOfRange {
            what: "threshold",
            value: zeta,
            lo: 0.0,
            hi: pred.grid().upper(),
        });
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::OutOfRange {
            what: "weight",
            value: w,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let fz = pred.cdf_at(zeta)?;
    Ok(if obs.time() > zeta {
        fz * fz
    } else if obs.is_event() {
        (1.0 - fz) * (1.0 - fz)
    } else {
        w * (1.0 - fz) * (1.0 - fz) + (1.0 - w) * fz * fz
    })
}

/// Ranked probability score over the interior thresholds:
/// Σ_{i=1}^{B-1} (1(y ≤ ζ_i) − F̂(ζ_i))².
pub fn rps(pred: &BinMassCdf, y: f64) -> Result<f64> {
    check_outcome(pred, y)?;
    let mut total = 0.0;
    for i in 1..pred.bins() {
        let ind = if y <= pred.grid().threshold(i) {
            1.0
        } else {
            0.0
        };
        let d = ind - pred.cdf_at_knot(i);
        total += d * d;
    }
    Ok(total)
}

/// Censored ranked probability score: the sum of binary censored Brier
/// scores over the interior thresholds. Weight slot i pairs with ζ_i; the
/// degenerate B = 1 grid has no interior thresholds and scores 0.
pub fn cen_rps(
    pred: &BinMassCdf,
    obs: &CensoredObservation,
    weights: &WeightVector,
) -> Result<f64> {
    if weights.len() != pred.bins() {
        return Err(Error::GridMismatch(format!(
            "{} weights for {} bins",
            weights.len(),
            pred.bins()
        )));
    }
    check_outcome(pred, obs.time())?;
    let mut total = 0.0;
    for i in 1..pred.bins() {
        total += cen_binary_brier(pred, obs, pred.grid().threshold(i), weights.get(i))?;
    }
    Ok(total)
}
