//! Softmax-parameterized models producing bin masses (distribution
//! regression) or quantile curves (quantile regression).
//!
//! Two variants share one flat parameter vector: a group table holding one
//! logit vector per group label, and an affine map from numeric features to
//! logits. Softmax outputs keep every predicted CDF strictly increasing.

use crate::data::{Features, SurvivalDataset};
use crate::dist::{BinMassCdf, QuantileCurve};
use crate::error::{Error, Result};
use crate::grid::{QuantileGrid, TimeGrid};

#[derive(Clone, Debug, PartialEq)]
enum Layout {
    /// One logit vector of length `bins` per sorted group label.
    GroupTable { groups: Vec<String> },
    /// Row-major weight matrix (bins × dim) followed by a bias vector.
    Linear { dim: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogitModel {
    layout: Layout,
    bins: usize,
    params: Vec<f64>,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

impl LogitModel {
    /// Group-table model with all logits zero (uniform masses).
    pub fn group_table(mut groups: Vec<String>, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidInput("need at least one bin".into()));
        }
        groups.sort();
        groups.dedup();
        if groups.is_empty() {
            return Err(Error::InvalidInput("no group labels".into()));
        }
        let params = vec![0.0; groups.len() * bins];
        Ok(Self {
            layout: Layout::GroupTable { groups },
            bins,
            params,
        })
    }

    /// Linear model with zero weights and bias (uniform masses).
    pub fn linear(dim: usize, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidInput("need at least one bin".into()));
        }
        let params = vec![0.0; bins * dim + bins];
        Ok(Self {
            layout: Layout::Linear { dim },
            bins,
            params,
        })
    }

    /// Group table when the dataset carries group labels, otherwise a linear
    /// model sized to its numeric features.
    pub fn for_dataset(data: &SurvivalDataset, bins: usize) -> Result<Self> {
        let groups = data.group_labels();
        if !groups.is_empty() {
            Self::group_table(groups, bins)
        } else {
            let dim = match &data.rows()[0].features {
                Features::Numeric(v) => v.len(),
                Features::Group(_) => unreachable!(),
            };
            Self::linear(dim, bins)
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn group_labels(&self) -> &[String] {
        match &self.layout {
            Layout::GroupTable { groups } => groups,
            Layout::Linear { .. } => &[],
        }
    }

    fn group_index(&self, label: &str) -> Result<usize> {
        match &self.layout {
            Layout::GroupTable { groups } => groups
                .binary_search_by(|g| g.as_str().cmp(label))
                .map_err(|_| Error::UnknownGroup(label.to_string())),
            Layout::Linear { .. } => Err(Error::UnknownGroup(label.to_string())),
        }
    }

    pub fn logits(&self, features: &Features) -> Result<Vec<f64>> {
        match (&self.layout, features) {
            (Layout::GroupTable { .. }, Features::Group(label)) => {
                let g = self.group_index(label)?;
                Ok(self.params[g * self.bins..(g + 1) * self.bins].to_vec())
            }
            (Layout::Linear { dim }, Features::Numeric(x)) => {
                if x.len() != *dim {
                    return Err(Error::InvalidInput(format!(
                        "expected {dim} features, got {}",
                        x.len()
                    )));
                }
                let mut out = vec![0.0; self.bins];
                for (k, o) in out.iter_mut().enumerate() {
                    let row = &self.params[k * dim..(k + 1) * dim];
                    let bias = self.params[self.bins * dim + k];
                    *o = bias + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
                }
                Ok(out)
            }
            (Layout::GroupTable { .. }, Features::Numeric(_)) => Err(Error::InvalidInput(
                "group-table model needs group features".into(),
            )),
            (Layout::Linear { .. }, Features::Group(label)) => {
                Err(Error::UnknownGroup(label.clone()))
            }
        }
    }

    /// Softmax masses for one row.
    pub fn masses(&self, features: &Features) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(features)?))
    }

    pub fn predict_distribution(&self, features: &Features, grid: &TimeGrid) -> Result<BinMassCdf> {
        if grid.bins() != self.bins {
            return Err(Error::GridMismatch(format!(
                "model has {} bins, grid has {}",
                self.bins,
                grid.bins()
            )));
        }
        BinMassCdf::new(grid.clone(), self.masses(features)?)
    }

    /// Cumulative sums of softmax increments scaled by `z_max`; endpoints are
    /// pinned at 0 and `z_max`.
    pub fn predict_quantiles(
        &self,
        features: &Features,
        grid: &QuantileGrid,
        z_max: f64,
    ) -> Result<QuantileCurve> {
        if grid.bins() != self.bins {
            return Err(Error::GridMismatch(format!(
                "model has {} bins, grid has {}",
                self.bins,
                grid.bins()
            )));
        }
        if !z_max.is_finite() || z_max <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "z_max must be positive, got {z_max}"
            )));
        }
        let p = self.masses(features)?;
        let floor = crate::dist::MASS_FLOOR;
        let clamped: Vec<f64> = p.iter().map(|&m| m.max(floor)).collect();
        let sum: f64 = clamped.iter().sum();
        let mut values = Vec::with_capacity(self.bins + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for &m in &clamped {
            acc += m / sum;
            values.push(acc * z_max);
        }
        values[self.bins] = z_max;
        QuantileCurve::new(grid.clone(), values)
    }

    /// Accumulates the parameter gradient for one row given the gradient of
    /// the loss with respect to this row's logits.
    pub fn scatter_logit_grad(
        &self,
        features: &Features,
        g_logits: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        debug_assert_eq!(out.len(), self.params.len());
        match (&self.layout, features) {
            (Layout::GroupTable { .. }, Features::Group(label)) => {
                let g = self.group_index(label)?;
                for (k, &gl) in g_logits.iter().enumerate() {
                    out[g * self.bins + k] += gl;
                }
                Ok(())
            }
            (Layout::Linear { dim }, Features::Numeric(x)) => {
                for (k, &gl) in g_logits.iter().enumerate() {
                    for (j, &xj) in x.iter().enumerate() {
                        out[k * dim + j] += gl * xj;
                    }
                    out[self.bins * dim + k] += gl;
                }
                Ok(())
            }
            _ => Err(Error::InvalidInput(
                "feature kind does not match model layout".into(),
            )),
        }
    }
}

/// Chain rule through softmax: given dL/dp, returns dL/dlogits.
pub fn softmax_backward(p: &[f64], g_mass: &[f64]) -> Vec<f64> {
    let dot: f64 = p.iter().zip(g_mass).map(|(&pi, &gi)| pi * gi).sum();
    p.iter()
        .zip(g_mass)
        .map(|(&pi, &gi)| pi * (gi - dot))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_hand_values() {
        let p = softmax(&[0.0, 0.0, 0.0, 0.0]);
        for &m in &p {
            assert!((m - 0.25).abs() < 1e-15);
        }
        let p = softmax(&[0.0, 3.0f64.ln()]);
        assert!((p[0] - 0.25).abs() < 1e-15);
        assert!((p[1] - 0.75).abs() < 1e-15);
        // Shift invariance.
        let a = softmax(&[0.3, -0.8, 1.2]);
        let b = softmax(&[5.3, 4.2, 6.2]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn group_table_predicts_per_group() {
        let mut m = LogitModel::group_table(vec!["b".into(), "a".into()], 2).unwrap();
        assert_eq!(m.group_labels(), &["a".to_string(), "b".to_string()]);
        // Give group "a" (slot 0) masses (0.25, 0.75).
        m.params_mut()[1] = 3.0f64.ln();
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let f = m
            .predict_distribution(&Features::Group("a".into()), &grid)
            .unwrap();
        assert!((f.mass(0) - 0.25).abs() < 1e-12);
        let f = m
            .predict_distribution(&Features::Group("b".into()), &grid)
            .unwrap();
        assert!((f.mass(0) - 0.5).abs() < 1e-12);
        assert!(m
            .predict_distribution(&Features::Group("c".into()), &grid)
            .is_err());
    }

    #[test]
    fn quantile_prediction_scales_increments() {
        let mut m = LogitModel::group_table(vec!["g".into()], 2).unwrap();
        m.params_mut()[1] = 3.0f64.ln();
        let qgrid = QuantileGrid::uniform(2).unwrap();
        let q = m
            .predict_quantiles(&Features::Group("g".into()), &qgrid, 4.0)
            .unwrap();
        assert!((q.value(1) - 1.0).abs() < 1e-12);
        assert_eq!(q.value(0), 0.0);
        assert_eq!(q.z_max(), 4.0);

        let m = LogitModel::group_table(vec!["g".into()], 2).unwrap();
        let q = m
            .predict_quantiles(&Features::Group("g".into()), &qgrid, 10.0)
            .unwrap();
        assert!((q.value(1) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn linear_model_applies_affine_map() {
        let mut m = LogitModel::linear(1, 2).unwrap();
        // logit_0 = 1.0 * x, logit_1 = 0.
        m.params_mut()[0] = 1.0;
        let p = m.masses(&Features::Numeric(vec![0.0])).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
        let p = m.masses(&Features::Numeric(vec![3.0f64.ln()])).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-12);
        assert!(m.masses(&Features::Numeric(vec![1.0, 2.0])).is_err());
    }
}
