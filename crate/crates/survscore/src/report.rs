//! Machine-readable run reports. One JSON object per run; field order is
//! fixed by declaration so identical runs serialize identically, with
//! `wall_clock_ms` as the only run-to-run variation.

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ir_max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ir_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_inf_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrupt_weights: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl ConfigEcho {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            input: None,
            predictions: None,
            truth: None,
            rule: None,
            bins: None,
            n: None,
            lr: None,
            epochs: None,
            ir_max_iters: None,
            ir_tol: None,
            fallback_w: None,
            z_inf_factor: None,
            group: None,
            perturbations: None,
            scale: None,
            tolerance: None,
            corrupt_weights: None,
            out: None,
        }
    }
}

/// The three evaluation metrics. `mean_cen_log_simple` is null when the mean
/// is infinite (JSON has no infinity); `flagged` in the fit block counts the
/// rows responsible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsBlock {
    pub mean_cen_log_simple: Option<f64>,
    pub d_calibration: f64,
    pub km_calibration: f64,
}

impl MetricsBlock {
    pub fn from_report(report: &crate::metrics::CalibrationReport) -> Self {
        Self {
            mean_cen_log_simple: if report.mean_cen_log_simple.is_finite() {
                Some(report.mean_cen_log_simple)
            } else {
                None
            },
            d_calibration: report.d_calibration,
            km_calibration: report.km_calibration,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitBlock {
    pub outer_iters: usize,
    pub converged: bool,
    pub final_loss: f64,
    pub flagged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropernessEntry {
    pub rule: String,
    pub bins: usize,
    pub pattern: String,
    pub n_perturbations: usize,
    pub min_gap: Option<f64>,
    pub min_gap_separated: Option<f64>,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmBlock {
    pub event_times: Vec<f64>,
    pub survival: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub seed: u64,
    pub config: ConfigEcho,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub properness: Option<Vec<PropernessEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub km: Option<KmBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flagged: Option<usize>,
    pub wall_clock_ms: f64,
}

impl RunReport {
    pub fn new(seed: u64, config: ConfigEcho) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            metrics: None,
            fit: None,
            properness: None,
            km: None,
            flagged: None,
            wall_clock_ms: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<RunReport> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_round_trip() {
        let mut report = RunReport::new(7, ConfigEcho::new("train"));
        report.config.rule = Some("cen-log".into());
        report.config.bins = Some(8);
        report.metrics = Some(MetricsBlock {
            mean_cen_log_simple: Some(1.25),
            d_calibration: 3e-4,
            km_calibration: 0.02,
        });
        report.fit = Some(FitBlock {
            outer_iters: 3,
            converged: true,
            final_loss: 123.5,
            flagged: 0,
        });
        report.wall_clock_ms = 18.0;
        let parsed = RunReport::parse(&report.to_json()).unwrap();
        assert_eq!(parsed, report);
    }

    #[test]
    fn infinite_means_serialize_as_null() {
        let m = MetricsBlock::from_report(&crate::metrics::CalibrationReport {
            mean_cen_log_simple: f64::INFINITY,
            d_calibration: 0.0,
            km_calibration: 0.0,
            flagged_count: 1,
        });
        assert_eq!(m.mean_cen_log_simple, None);
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("null"));
        let back: MetricsBlock = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
