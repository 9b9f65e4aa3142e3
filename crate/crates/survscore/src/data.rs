//! Observations and datasets: a row is a feature payload plus the observed
//! pair (z, δ) with z = min(t, c) and δ = 1(t ≤ c).

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// One right-censored observation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CensoredObservation {
    time: f64,
    event: bool,
}

impl CensoredObservation {
    pub fn new(time: f64, event: bool) -> Result<Self> {
        if !time.is_finite() || time <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "observation time must be positive, got {time}"
            )));
        }
        Ok(Self { time, event })
    }

    /// Observed time z.
    pub fn time(&self) -> f64 {
        self.time
    }

    /// True when z is the event time (δ = 1).
    pub fn is_event(&self) -> bool {
        self.event
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Features {
    Group(String),
    Numeric(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRow {
    pub features: Features,
    pub obs: CensoredObservation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalDataset {
    rows: Vec<DatasetRow>,
    z_max: f64,
}

impl SurvivalDataset {
    /// Builds a dataset with z_max taken as the largest observed time.
    pub fn new(rows: Vec<DatasetRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("dataset is empty".into()));
        }
        let z_max = rows
            .iter()
            .map(|r| r.obs.time())
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { rows, z_max })
    }

    /// Builds a dataset with an explicit bound; every z must satisfy z ≤ z_max.
    pub fn with_z_max(rows: Vec<DatasetRow>, z_max: f64) -> Result<Self> {
        let data = Self::new(rows)?;
        if data.z_max > z_max {
            return Err(Error::InvalidInput(format!(
                "observation {} exceeds z_max {}",
                data.z_max, z_max
            )));
        }
        Ok(Self { z_max, ..data })
    }

    pub fn rows(&self) -> &[DatasetRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// Sorted distinct group labels, empty for numeric-feature datasets.
    pub fn group_labels(&self) -> Vec<String> {
        let mut set = BTreeSet::new();
        for row in &self.rows {
            if let Features::Group(g) = &row.features {
                set.insert(g.clone());
            }
        }
        set.into_iter().collect()
    }

    /// Rows selected by index, keeping the parent's z_max.
    pub fn subset(&self, indices: &[usize]) -> Result<SurvivalDataset> {
        let rows: Vec<DatasetRow> = indices.iter().map(|&i| self.rows[i].clone()).collect();
        Self::with_z_max(rows, self.z_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_requires_positive_time() {
        assert!(CensoredObservation::new(0.0, true).is_err());
        assert!(CensoredObservation::new(-1.0, false).is_err());
        assert!(CensoredObservation::new(f64::NAN, true).is_err());
        assert!(CensoredObservation::new(1.5, true).is_ok());
    }

    #[test]
    fn dataset_tracks_z_max_and_groups() {
        let rows = vec![
            DatasetRow {
                features: Features::Group("b".into()),
                obs: CensoredObservation::new(2.0, true).unwrap(),
            },
            DatasetRow {
                features: Features::Group("a".into()),
                obs: CensoredObservation::new(3.5, false).unwrap(),
            },
        ];
        let data = SurvivalDataset::new(rows).unwrap();
        assert_eq!(data.z_max(), 3.5);
        assert_eq!(data.group_labels(), vec!["a".to_string(), "b".to_string()]);
        assert!(SurvivalDataset::new(vec![]).is_err());
        assert!(SurvivalDataset::with_z_max(data.rows().to_vec(), 3.0).is_err());
    }
}
