//! Kaplan-Meier product-limit estimation.

use crate::data::SurvivalDataset;
use crate::grid::TimeGrid;

/// Right-continuous step estimate of the survival function κ(t), with
/// κ(0) = 1 and a drop recorded at each distinct uncensored time.
#[derive(Clone, Debug, PartialEq)]
pub struct KaplanMeierCurve {
    event_times: Vec<f64>,
    survival: Vec<f64>,
}

/// Product-limit estimate: at each distinct event time t_k with d_k events
/// and n_k at risk (z ≥ t_k), κ multiplies by (1 − d_k / n_k). Censored
/// observations leave the risk set after their time.
pub fn kaplan_meier(data: &SurvivalDataset) -> KaplanMeierCurve {
    let mut obs: Vec<(f64, bool)> = data
        .rows()
        .iter()
        .map(|r| (r.obs.time(), r.obs.is_event()))
        .collect();
    obs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut event_times = Vec::new();
    let mut survival = Vec::new();
    let mut kappa = 1.0;
    let mut at_risk = obs.len();
    let mut i = 0;
    while i < obs.len() {
        let t = obs[i].0;
        let mut ties = 0;
        let mut deaths = 0;
        while i + ties < obs.len() && obs[i + ties].0 == t {
            if obs[i + ties].1 {
                deaths += 1;
            }
            ties += 1;
        }
        if deaths > 0 {
            kappa *= (at_risk - deaths) as f64 / at_risk as f64;
            event_times.push(t);
            survival.push(kappa);
        }
        at_risk -= ties;
        i += ties;
    }
    KaplanMeierCurve {
        event_times,
        survival,
    }
}

impl KaplanMeierCurve {
    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    pub fn survival_values(&self) -> &[f64] {
        &self.survival
    }

    /// κ(t) as a right-continuous step function.
    pub fn survival_at(&self, t: f64) -> f64 {
        let k = self.event_times.partition_point(|&x| x <= t);
        if k == 0 {
            1.0
        } else {
            self.survival[k - 1]
        }
    }

    /// Nonnegative bin masses κ(ζ_i) − κ(ζ_{i+1}) on a grid, forcing
    /// κ(ζ_B) = 0: any residual tail mass joins the last bin.
    pub fn bin_masses(&self, grid: &TimeGrid) -> Vec<f64> {
        let b = grid.bins();
        (0..b)
            .map(|i| {
                let hi = if i + 1 == b {
                    0.0
                } else {
                    self.survival_at(grid.threshold(i + 1))
                };
                self.survival_at(grid.threshold(i)) - hi
            })
            .collect()
    }
}
