//! Ground-truth generative models: a piecewise-linear event distribution
//! paired with an independent censoring distribution, supporting both
//! seeded sampling and exact expectation computation.

use crate::data::{CensoredObservation, DatasetRow, Features, SurvivalDataset};
use crate::dist::BinMassCdf;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Censoring distribution: finitely many atoms, or a piecewise-linear CDF on
/// the same grid as the event distribution. Both keep expectations exactly
/// computable.
#[derive(Clone, Debug, PartialEq)]
pub enum CensorModel {
    /// (censoring time, probability) pairs.
    Atoms(Vec<(f64, f64)>),
    Continuous(BinMassCdf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinearTruth {
    pub label: String,
    pub event_cdf: BinMassCdf,
    pub censoring: CensorModel,
}

impl PiecewiseLinearTruth {
    pub fn new(
        label: impl Into<String>,
        event_cdf: BinMassCdf,
        censoring: CensorModel,
    ) -> Result<Self> {
        let upper = event_cdf.grid().upper();
        match &censoring {
            CensorModel::Atoms(atoms) => {
                if atoms.is_empty() {
                    return Err(Error::InvalidInput("no censoring atoms".into()));
                }
                let mut total = 0.0;
                for &(c, p) in atoms {
                    if !(c > 0.0 && c <= upper) {
                        return Err(Error::OutOfRange {
                            what: "censoring atom",
                            value: c,
                            lo: 0.0,
                            hi: upper,
                        });
                    }
                    if !p.is_finite() || p < 0.0 {
                        return Err(Error::InvalidInput(format!("bad atom probability {p}")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "censoring atom probabilities sum to {total}, expected 1"
                    )));
                }
            }
            CensorModel::Continuous(c) => {
                if c.grid() != event_cdf.grid() {
                    return Err(Error::GridMismatch(
                        "censoring CDF must share the event grid".into(),
                    ));
                }
            }
        }
        Ok(Self {
            label: label.into(),
            event_cdf,
            censoring,
        })
    }

    /// Top of the time range (ζ_B of the event grid).
    pub fn upper(&self) -> f64 {
        self.event_cdf.grid().upper()
    }

    fn sample_censor_time(&self, rng: &mut SplitMix64) -> f64 {
        match &self.censoring {
            CensorModel::Atoms(atoms) => {
                let u = rng.next_f64();
                let mut acc = 0.0;
                for &(c, p) in atoms {
                    acc += p;
                    if u <= acc {
                        return c;
                    }
                }
                atoms.last().unwrap().0
            }
            CensorModel::Continuous(c) => c.quantile_at(rng.next_f64()).unwrap(),
        }
    }

    /// One observed pair (z, δ) with t ~ F, c ~ C drawn independently.
    pub fn sample_observation(&self, rng: &mut SplitMix64) -> CensoredObservation {
        let t = self.event_cdf.quantile_at(rng.next_f64()).unwrap();
        let c = self.sample_censor_time(rng);
        CensoredObservation::new(t.min(c), t <= c).unwrap()
    }

    /// Analytic probability that an observation is censored:
    /// Σ_c Pr(C = c)(1 − F(c)).
    pub fn censoring_fraction(&self) -> f64 {
        match &self.censoring {
            CensorModel::Atoms(atoms) => atoms
                .iter()
                .map(|&(c, p)| p * self.event_cdf.survival_at(c).unwrap())
                .sum(),
            CensorModel::Continuous(cen) => {
                // ∫ (1 − F(c)) dC(c): both factors are piecewise linear on
                // the shared grid, so the two-point Gauss rule per bin is
                // exact.
                let grid = self.event_cdf.grid();
                let mut total = 0.0;
                for i in 0..grid.bins() {
                    let (a, b) = (grid.threshold(i), grid.threshold(i + 1));
                    let density = cen.mass(i) / (b - a);
                    let h = b - a;
                    let offset = h / (2.0 * 3.0f64.sqrt());
                    let mid = 0.5 * (a + b);
                    for node in [mid - offset, mid + offset] {
                        total += 0.5 * h * density * self.event_cdf.survival_at(node).unwrap();
                    }
                }
                total
            }
        }
    }
}

/// Seeded sample of n observations from one truth.
pub fn sample_dataset(
    truth: &PiecewiseLinearTruth,
    n: usize,
    seed: u64,
) -> Result<SurvivalDataset> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let rows: Vec<DatasetRow> = (0..n)
        .map(|_| DatasetRow {
            features: Features::Group(truth.label.clone()),
            obs: truth.sample_observation(&mut rng),
        })
        .collect();
    SurvivalDataset::with_z_max(rows, truth.upper())
}

/// A mixture of per-group truths.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationTruth {
    groups: Vec<(f64, PiecewiseLinearTruth)>,
}

impl PopulationTruth {
    pub fn new(groups: Vec<(f64, PiecewiseLinearTruth)>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidInput("no groups".into()));
        }
        let total: f64 = groups.iter().map(|(w, _)| *w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "group weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[(f64, PiecewiseLinearTruth)] {
        &self.groups
    }

    pub fn group(&self, label: &str) -> Option<&PiecewiseLinearTruth> {
        self.groups
            .iter()
            .find(|(_, t)| t.label == label)
            .map(|(_, t)| t)
    }

    pub fn upper(&self) -> f64 {
        self.groups
            .iter()
            .map(|(_, t)| t.upper())
            .fold(0.0, f64::max)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<SurvivalDataset> {
        if n == 0 {
            return Err(Error::InvalidInput("need at least one sample".into()));
        }
        let mut rng = SplitMix64::new(seed);
        let rows: Vec<DatasetRow> = (0..n)
            .map(|_| {
                let u = rng.next_f64();
                let mut acc = 0.0;
                let mut chosen = &self.groups[self.groups.len() - 1].1;
                for (w, truth) in &self.groups {
                    acc += w;
                    if u <= acc {
                        chosen = truth;
                        break;
                    }
                }
                DatasetRow {
                    features: Features::Group(chosen.label.clone()),
                    obs: chosen.sample_observation(&mut rng),
                }
            })
            .collect();
        SurvivalDataset::with_z_max(rows, self.upper())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    fn uniform_truth(atoms: Vec<(f64, f64)>) -> PiecewiseLinearTruth {
        let cdf = BinMassCdf::new(TimeGrid::new(vec![0.0, 2.0]).unwrap(), vec![1.0]).unwrap();
        PiecewiseLinearTruth::new("g", cdf, CensorModel::Atoms(atoms)).unwrap()
    }

    #[test]
    fn atom_probabilities_must_sum_to_one() {
        let cdf = BinMassCdf::new(TimeGrid::new(vec![0.0, 2.0]).unwrap(), vec![1.0]).unwrap();
        assert!(
            PiecewiseLinearTruth::new("g", cdf.clone(), CensorModel::Atoms(vec![(1.0, 0.5)]))
                .is_err()
        );
        assert!(PiecewiseLinearTruth::new("g", cdf, CensorModel::Atoms(vec![(3.0, 1.0)])).is_err());
    }

    #[test]
    fn censoring_at_the_top_means_all_events() {
        let truth = uniform_truth(vec![(2.0, 1.0)]);
        let data = sample_dataset(&truth, 500, 1).unwrap();
        assert!(data.rows().iter().all(|r| r.obs.is_event()));
        assert!(truth.censoring_fraction() < 1e-12);
    }

    #[test]
    fn early_censoring_atom_censors_nearly_everything() {
        let truth = uniform_truth(vec![(1e-6, 1.0)]);
        let data = sample_dataset(&truth, 500, 2).unwrap();
        let censored = data.rows().iter().filter(|r| !r.obs.is_event()).count();
        assert!(censored >= 499);
    }

    #[test]
    fn censoring_fraction_matches_samples() {
        // Uniform F on [0, 2], atom at 1.0: Pr(censored) = 1 − F(1) = 0.5.
        let truth = uniform_truth(vec![(1.0, 1.0)]);
        assert!((truth.censoring_fraction() - 0.5).abs() < 1e-12);
        let n = 10_000;
        let data = sample_dataset(&truth, n, 3).unwrap();
        let censored = data.rows().iter().filter(|r| !r.obs.is_event()).count() as f64;
        let sigma = (0.25f64 / n as f64).sqrt();
        assert!((censored / n as f64 - 0.5).abs() < 3.0 * sigma + 1e-9);
    }

    #[test]
    fn sampling_is_deterministic() {
        let truth = uniform_truth(vec![(1.0, 0.5), (2.0, 0.5)]);
        let a = sample_dataset(&truth, 100, 9).unwrap();
        let b = sample_dataset(&truth, 100, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn continuous_censoring_fraction_is_exact() {
        // Uniform F and uniform C on [0, 2]: Pr(t > c) = 1/2.
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let f = BinMassCdf::new(grid.clone(), vec![0.5, 0.5]).unwrap();
        let c = BinMassCdf::new(grid, vec![0.5, 0.5]).unwrap();
        let truth = PiecewiseLinearTruth::new("g", f, CensorModel::Continuous(c)).unwrap();
        assert!((truth.censoring_fraction() - 0.5).abs() < 1e-12);
    }
}
