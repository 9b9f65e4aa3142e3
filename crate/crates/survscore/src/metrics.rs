//! Evaluation metrics: mean censored log score, D-calibration, and
//! KM-calibration.

use crate::data::CensoredObservation;
use crate::dist::BinMassCdf;
use crate::error::{Error, Result};
use crate::km::KaplanMeierCurve;
use crate::scoring;

/// Floor applied to probabilities before taking logs.
pub const EPS_FLOOR: f64 = 1e-12;

fn floor_and_normalize(v: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = v.iter().map(|&x| x.max(EPS_FLOOR)).collect();
    let sum: f64 = clamped.iter().sum();
    clamped.iter().map(|&x| x / sum).collect()
}

/// KL divergence Σ p_i (log p_i − log q_i) with both sides epsilon-floored
/// and renormalized; nonnegative by Gibbs' inequality.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let p = floor_and_normalize(p);
    let q = floor_and_normalize(q);
    p.iter()
        .zip(q.iter())
        .map(|(&pi, &qi)| pi * (pi.ln() - qi.ln()))
        .sum()
}

/// KM-calibration: KL divergence between the Kaplan-Meier bin masses and the
/// binned average predicted distribution, on the prediction's grid.
pub fn km_calibration(km: &KaplanMeierCurve, avg_pred: &BinMassCdf) -> f64 {
    let p = km.bin_masses(avg_pred.grid());
    kl_divergence(&p, avg_pred.masses())
}

/// Pointwise mean of per-row predicted distributions.
pub fn average_prediction(preds: &[BinMassCdf]) -> Result<BinMassCdf> {
    let first = preds
        .first()
        .ok_or_else(|| Error::InvalidInput("no predictions".into()))?;
    let bins = first.bins();
    let mut masses = vec![0.0; bins];
    for pred in preds {
        if pred.grid() != first.grid() {
            return Err(Error::GridMismatch("predictions on different grids".into()));
        }
        for (acc, &m) in masses.iter_mut().zip(pred.masses()) {
            *acc += m;
        }
    }
    for m in &mut masses {
        *m /= preds.len() as f64;
    }
    BinMassCdf::new(first.grid().clone(), masses)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DCalibration {
    pub statistic: f64,
    pub flagged: usize,
}

/// D-calibration with censoring-aware mass spreading.
///
/// Uncensored rows drop mass 1 into the histogram bin holding F̂_x(z);
/// censored rows spread their mass uniformly (in probability) over
/// [F̂_x(c), 1]. The statistic is Σ_b (p_b − 1/n_bins)² over the normalized
/// bin proportions.
pub fn d_calibration(
    preds: &[BinMassCdf],
    obs: &[CensoredObservation],
    n_bins: usize,
) -> Result<DCalibration> {
    if preds.len() != obs.len() || preds.is_empty() {
        return Err(Error::InvalidInput(format!(
            "predictions and observations must align and be nonempty ({} vs {})",
            preds.len(),
            obs.len()
        )));
    }
    if n_bins == 0 {
        return Err(Error::InvalidInput("n_bins must be positive".into()));
    }
    let nb = n_bins as f64;
    let mut hist = vec![0.0; n_bins];
    let mut flagged = 0;
    for (pred, o) in preds.iter().zip(obs) {
        let v = pred.cdf_at(o.time())?;
        let bin = ((v * nb).floor() as usize).min(n_bins - 1);
        if o.is_event() {
            hist[bin] += 1.0;
        } else if v >= 1.0 - EPS_FLOOR {
            hist[n_bins - 1] += 1.0;
            flagged += 1;
        } else {
            let rest = 1.0 - v;
            let upper = (bin + 1) as f64 / nb;
            hist[bin] += (upper - v) / rest;
            for h in hist.iter_mut().skip(bin + 1) {
                *h += (1.0 / nb) / rest;
            }
        }
    }
    let n = preds.len() as f64;
    let statistic = hist
        .iter()
        .map(|&h| {
            let d = h / n - 1.0 / nb;
            d * d
        })
        .sum();
    Ok(DCalibration { statistic, flagged })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanScore {
    pub mean: f64,
    /// Rows whose score was infinite.
    pub flagged: usize,
}

/// Arithmetic mean of the simple censored log score over aligned rows.
/// Infinite row scores propagate to an infinite mean.
pub fn mean_cen_log_simple(preds: &[BinMassCdf], obs: &[CensoredObservation]) -> Result<MeanScore> {
    if preds.len() != obs.len() || preds.is_empty() {
        return Err(Error::InvalidInput(format!(
            "predictions and observations must align and be nonempty ({} vs {})",
            preds.len(),
            obs.len()
        )));
    }
    let mut total = 0.0;
    let mut flagged = 0;
    for (pred, o) in preds.iter().zip(obs) {
        let s = scoring::cen_log_simple(pred, o)?;
        if s.is_infinite() {
            flagged += 1;
        }
        total += s;
    }
    Ok(MeanScore {
        mean: total / preds.len() as f64,
        flagged,
    })
}

/// The three evaluation metrics over a test set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationReport {
    pub mean_cen_log_simple: f64,
    pub d_calibration: f64,
    pub km_calibration: f64,
    pub flagged_count: usize,
}

pub fn calibration_report(
    preds: &[BinMassCdf],
    obs: &[CensoredObservation],
    km: &KaplanMeierCurve,
    d_cal_bins: usize,
) -> Result<CalibrationReport> {
    let mean = mean_cen_log_simple(preds, obs)?;
    let d = d_calibration(preds, obs, d_cal_bins)?;
    let avg = average_prediction(preds)?;
    Ok(CalibrationReport {
        mean_cen_log_simple: mean.mean,
        d_calibration: d.statistic,
        km_calibration: km_calibration(km, &avg),
        flagged_count: mean.flagged + d.flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DatasetRow, Features, SurvivalDataset};
    use crate::grid::TimeGrid;
    use crate::km::kaplan_meier;

    fn cdf(thresholds: &[f64], masses: &[f64]) -> BinMassCdf {
        BinMassCdf::new(TimeGrid::new(thresholds.to_vec()).unwrap(), masses.to_vec()).unwrap()
    }

    fn obs(t: f64, e: bool) -> CensoredObservation {
        CensoredObservation::new(t, e).unwrap()
    }

    #[test]
    fn kl_hand_values() {
        assert!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]).abs() < 1e-15);
        let kl = kl_divergence(&[0.5, 0.5], &[0.25, 0.75]);
        assert!((kl - 0.143_841_036_225_890_04).abs() < 1e-12);
        let kl = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]);
        assert!((kl - std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn km_calibration_zero_for_km_masses() {
        let data = SurvivalDataset::new(
            [(1.0, true), (2.0, false), (3.0, true), (4.0, true)]
                .iter()
                .map(|&(t, e)| DatasetRow {
                    features: Features::Numeric(vec![]),
                    obs: obs(t, e),
                })
                .collect(),
        )
        .unwrap();
        let km = kaplan_meier(&data);
        let grid = TimeGrid::uniform(4.0, 4, 1e-3).unwrap();
        let pred = BinMassCdf::new(grid.clone(), km.bin_masses(&grid)).unwrap();
        assert!(km_calibration(&km, &pred) < 1e-10);
    }

    #[test]
    fn km_calibration_detects_mismatched_masses() {
        let data = SurvivalDataset::new(
            [(1.0, true), (2.0, false), (3.0, true), (4.0, true)]
                .iter()
                .map(|&(t, e)| DatasetRow {
                    features: Features::Numeric(vec![]),
                    obs: obs(t, e),
                })
                .collect(),
        )
        .unwrap();
        let km = kaplan_meier(&data);
        let grid = TimeGrid::uniform(4.0, 4, 1e-3).unwrap();
        let mut masses = km.bin_masses(&grid);
        masses[0] += 0.2;
        masses[3] = (masses[3] - 0.2).max(0.0);
        let pred = BinMassCdf::new(grid, masses).unwrap();
        assert!(km_calibration(&km, &pred) > 1e-3);
    }

    #[test]
    fn d_calibration_uniform_histogram_is_zero() {
        // Predictions that place each uncensored row exactly in its own bin.
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let preds = vec![
            BinMassCdf::new(grid.clone(), vec![0.5, 0.5]).unwrap(),
            BinMassCdf::new(grid.clone(), vec![0.5, 0.5]).unwrap(),
        ];
        // F̂(0.5) = 0.25 (bin 0 of 2), F̂(1.5) = 0.75 (bin 1 of 2).
        let observations = vec![obs(0.5, true), obs(1.5, true)];
        let d = d_calibration(&preds, &observations, 2).unwrap();
        assert!(d.statistic < 1e-15);
        assert_eq!(d.flagged, 0);
    }

    #[test]
    fn d_calibration_concentrated_histogram() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let preds: Vec<BinMassCdf> = (0..4)
            .map(|_| BinMassCdf::new(grid.clone(), vec![0.5, 0.5]).unwrap())
            .collect();
        // All rows land at F̂ = 0.25, i.e. bin 0 of 2.
        let observations = vec![obs(0.5, true); 4];
        let d = d_calibration(&preds, &observations, 2).unwrap();
        assert!((d.statistic - 0.5).abs() < 1e-12);
    }

    #[test]
    fn d_calibration_spreads_censored_mass() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let preds = vec![BinMassCdf::new(grid.clone(), vec![0.5, 0.5]).unwrap()];
        // F̂(c) = 0.5: everything lands above 0.5, i.e. the top of 2 bins.
        let observations = vec![obs(1.0, false)];
        let d = d_calibration(&preds, &observations, 2).unwrap();
        assert!((d.statistic - 0.5).abs() < 1e-12);
    }

    #[test]
    fn d_calibration_is_permutation_invariant() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let preds = vec![
            cdf(&[0.0, 1.0, 2.0], &[0.3, 0.7]),
            cdf(&[0.0, 1.0, 2.0], &[0.6, 0.4]),
            cdf(&[0.0, 1.0, 2.0], &[0.5, 0.5]),
        ];
        let observations = vec![obs(0.5, true), obs(1.2, false), obs(1.9, true)];
        let fwd = d_calibration(&preds, &observations, 10).unwrap();
        let rev_preds: Vec<_> = preds.iter().rev().cloned().collect();
        let rev_obs: Vec<_> = observations.iter().rev().cloned().collect();
        let rev = d_calibration(&rev_preds, &rev_obs, 10).unwrap();
        assert!((fwd.statistic - rev.statistic).abs() < 1e-15);
        let _ = grid;
    }

    #[test]
    fn mean_score_and_infinity_propagation() {
        let f = cdf(&[0.0, 1.0, 2.0], &[0.25, 0.75]);
        let preds = vec![f.clone(), f.clone()];
        let observations = vec![obs(0.5, true), obs(0.5, true)];
        let m = mean_cen_log_simple(&preds, &observations).unwrap();
        assert!((m.mean - 1.386_294_361_119_890_6).abs() < 1e-12);

        let observations = vec![obs(0.5, true), obs(2.0, false)];
        let m = mean_cen_log_simple(&preds, &observations).unwrap();
        assert!(m.mean.is_infinite());
        assert_eq!(m.flagged, 1);
    }
}
