//! Model fitting: full-batch gradient descent on any trainable rule, the
//! iterative-reweighting loop that alternates weight estimation with
//! refitting, and the sequential grid-search quantile estimator.

use std::collections::BTreeMap;

use crate::data::{Features, SurvivalDataset};
use crate::dist::QuantileCurve;
use crate::error::{Error, Result};
use crate::grid::{QuantileGrid, TimeGrid};
use crate::model::{softmax_backward, LogitModel};
use crate::scoring::{self, ScoringRule, WeightVector};
use crate::weights::{self, WeightPolicy};

/// Settings shared by every Portnoy evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PortnoySettings {
    pub z_infinity: f64,
    pub policy: WeightPolicy,
}

/// Everything a loss evaluation needs besides the model and data.
#[derive(Clone, Debug)]
pub struct TrainSetup {
    pub rule: ScoringRule,
    pub time_grid: TimeGrid,
    pub quantile_grid: QuantileGrid,
    /// Top of the quantile-curve range (the data's largest observation).
    pub z_max: f64,
    pub portnoy: PortnoySettings,
    /// Drop rows with an infinite score from the empirical loss instead of
    /// poisoning the whole objective.
    pub skip_infinite: bool,
}

impl TrainSetup {
    pub fn new(
        rule: ScoringRule,
        bins: usize,
        z_max: f64,
        eps: f64,
        z_inf_factor: f64,
        policy: WeightPolicy,
    ) -> Result<Self> {
        if !rule.is_trainable() {
            return Err(Error::Unsupported(format!(
                "`{rule}` is not usable as a training loss on censored data"
            )));
        }
        if !z_inf_factor.is_finite() || z_inf_factor <= 1.0 {
            return Err(Error::InvalidInput(format!(
                "z_infinity factor must exceed 1, got {z_inf_factor}"
            )));
        }
        Ok(Self {
            rule,
            time_grid: TimeGrid::uniform(z_max, bins, eps)?,
            quantile_grid: QuantileGrid::uniform(bins)?,
            z_max,
            portnoy: PortnoySettings {
                z_infinity: z_inf_factor * z_max,
                policy,
            },
            skip_infinite: true,
        })
    }

    pub fn bins(&self) -> usize {
        self.time_grid.bins()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub ir_max_outer_iters: usize,
    /// Convergence threshold on the largest change of any predicted CDF
    /// value across rows and grid knots.
    pub ir_tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::new()
    }
}

impl TrainConfig {
    pub fn new() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 300,
            seed: 0,
            ir_max_outer_iters: 20,
            ir_tol: 1e-4,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidInput("learning rate must be positive".into()));
        }
        if !self.ir_tol.is_finite() || self.ir_tol <= 0.0 {
            return Err(Error::InvalidInput("ir_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub final_loss: f64,
    pub outer_iters: usize,
    /// Largest per-row CDF change recorded after each outer iteration.
    pub max_cdf_changes: Vec<f64>,
    pub flagged_weights: usize,
    pub converged: bool,
    pub skipped_rows: usize,
}

struct LossEval {
    loss: f64,
    grad: Option<Vec<f64>>,
    skipped: usize,
}

/// Score and mass-space gradient for one row under a distribution rule.
/// `masses`, `cum`, `tail` describe the row's prediction (`cum[i]` = F̂(ζ_i),
/// `tail[i]` = 1 − F̂(ζ_i)).
#[allow(clippy::too_many_arguments)]
fn dist_row_eval(
    rule: ScoringRule,
    grid: &TimeGrid,
    masses: &[f64],
    cum: &[f64],
    tail: &[f64],
    z: f64,
    event: bool,
    w: Option<&WeightVector>,
    g_mass: Option<&mut Vec<f64>>,
) -> Result<f64> {
    let bins = masses.len();
    let j = grid.bin_of(z)?;
    let mut grad = g_mass;
    match rule {
        ScoringRule::CenLog | ScoringRule::CenLogSimple => {
            let wj = match rule {
                ScoringRule::CenLog => {
                    let w = w.expect("cen-log needs weights");
                    if w.len() != bins {
                        return Err(Error::GridMismatch("weight length".into()));
                    }
                    w.get(j)
                }
                _ => 0.0,
            };
            if event {
                if let Some(g) = grad.as_deref_mut() {
                    g[j] -= 1.0 / masses[j];
                }
                Ok(-masses[j].ln())
            } else {
                let t = tail[j + 1];
                let event_term = if wj > 0.0 { wj * masses[j].ln() } else { 0.0 };
                let tail_term = if wj < 1.0 { (1.0 - wj) * t.ln() } else { 0.0 };
                let score = -(event_term + tail_term);
                if let Some(g) = grad.as_deref_mut() {
                    if score.is_finite() {
                        if wj > 0.0 {
                            g[j] -= wj / masses[j];
                        }
                        if wj < 1.0 {
                            for gk in g.iter_mut().take(bins).skip(j + 1) {
                                *gk -= (1.0 - wj) / t;
                            }
                        }
                    }
                }
                Ok(score)
            }
        }
        ScoringRule::CenContLog => {
            if event {
                let width = grid.bin_width(j);
                if let Some(g) = grad.as_deref_mut() {
                    g[j] -= 1.0 / masses[j];
                }
                Ok(-(masses[j] / width).ln())
            } else {
                let frac = (grid.threshold(j + 1) - z) / grid.bin_width(j);
                let surv = tail[j + 1] + masses[j] * frac;
                let score = -surv.ln();
                if let Some(g) = grad.as_deref_mut() {
                    if score.is_finite() {
                        g[j] -= frac / surv;
                        for gk in g.iter_mut().take(bins).skip(j + 1) {
                            *gk -= 1.0 / surv;
                        }
                    }
                }
                Ok(score)
            }
        }
        ScoringRule::CenBrier => {
            let w = w.expect("cen-brier needs weights");
            if w.len() != bins {
                return Err(Error::GridMismatch("weight length".into()));
            }
            let mut score = 0.0;
            for i in 0..bins {
                let wi = if event {
                    if i == j {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    w.get(i)
                };
                let m = masses[i];
                score += wi * (1.0 - m) * (1.0 - m) + (1.0 - wi) * m * m;
                if let Some(g) = grad.as_deref_mut() {
                    g[i] += 2.0 * (m - wi);
                }
            }
            Ok(score)
        }
        ScoringRule::CenRps => {
            let w = w.expect("cen-rps needs weights");
            if w.len() != bins {
                return Err(Error::GridMismatch("weight length".into()));
            }
            let mut score = 0.0;
            // d(score)/dF̂(ζ_k) per interior threshold, then a suffix sum
            // turns it into the mass-space gradient.
            let mut d_cdf = vec![0.0; bins];
            for k in 1..bins {
                let zeta = grid.threshold(k);
                let f = cum[k];
                if z > zeta {
                    score += f * f;
                    d_cdf[k] = 2.0 * f;
                } else if event {
                    score += (1.0 - f) * (1.0 - f);
                    d_cdf[k] = -2.0 * (1.0 - f);
                } else {
                    let wk = w.get(k);
                    score += wk * (1.0 - f) * (1.0 - f) + (1.0 - wk) * f * f;
                    d_cdf[k] = -2.0 * wk * (1.0 - f) + 2.0 * (1.0 - wk) * f;
                }
            }
            if let Some(g) = grad {
                let mut suffix = 0.0;
                for i in (0..bins).rev() {
                    if i + 1 < bins {
                        suffix += d_cdf[i + 1];
                    }
                    g[i] += suffix;
                }
            }
            Ok(score)
        }
        _ => Err(Error::Unsupported(format!("`{rule}` in dist_row_eval"))),
    }
}

/// Score and quantile-space gradient (dL/dv_j over interior levels) for one
/// row under Portnoy's estimator. The endpoint levels are pinned by
/// construction and contribute exactly zero.
fn portnoy_row_eval(
    setup: &TrainSetup,
    curve: &QuantileCurve,
    z: f64,
    event: bool,
    w: Option<&WeightVector>,
    g_values: Option<&mut Vec<f64>>,
) -> Result<f64> {
    let bins = setup.quantile_grid.bins();
    let z_inf = setup.portnoy.z_infinity;
    let mut score = 0.0;
    let mut grad = g_values;
    // Left-branch subgradient at the kink q = y.
    let dpinball = |q: f64, y: f64, tau: f64| if q > y { 1.0 - tau } else { -tau };
    for j in 1..bins {
        let tau = setup.quantile_grid.level(j);
        let q = curve.value(j);
        if event {
            score += scoring::pinball(q, z, tau)?;
            if let Some(g) = grad.as_deref_mut() {
                g[j] += dpinball(q, z, tau);
            }
        } else {
            let w = w.expect("portnoy needs weights");
            if w.len() != bins + 1 {
                return Err(Error::GridMismatch("weight length".into()));
            }
            let wj = w.get(j);
            score +=
                wj * scoring::pinball(q, z, tau)? + (1.0 - wj) * scoring::pinball(q, z_inf, tau)?;
            if let Some(g) = grad.as_deref_mut() {
                g[j] += wj * dpinball(q, z, tau) + (1.0 - wj) * dpinball(q, z_inf, tau);
            }
        }
    }
    Ok(score)
}

/// One distinct prediction shared by one or more rows.
struct PredEntry {
    /// Index of a row whose features produce this prediction.
    row: usize,
    masses: Vec<f64>,
    cum: Vec<f64>,
    tail: Vec<f64>,
    curve: Option<QuantileCurve>,
}

/// Distinct predictions plus a per-row index map. Group-table features are
/// deduplicated by label; numeric rows each get their own entry.
fn row_predictions(
    model: &LogitModel,
    data: &SurvivalDataset,
    setup: &TrainSetup,
) -> Result<(Vec<PredEntry>, Vec<usize>)> {
    let bins = setup.bins();
    let quantile = setup.rule.is_quantile();
    let mut entries: Vec<PredEntry> = Vec::new();
    let mut by_label: BTreeMap<&str, usize> = BTreeMap::new();
    let mut row_entry = Vec::with_capacity(data.len());
    for (r, row) in data.rows().iter().enumerate() {
        let cached = match &row.features {
            Features::Group(label) => by_label.get(label.as_str()).copied(),
            Features::Numeric(_) => None,
        };
        let idx = match cached {
            Some(idx) => idx,
            None => {
                let p = model.masses(&row.features)?;
                let mut cum = vec![0.0; bins + 1];
                for i in 0..bins {
                    cum[i + 1] = cum[i] + p[i];
                }
                cum[bins] = 1.0;
                let mut tail = vec![0.0; bins + 1];
                for i in (0..bins).rev() {
                    tail[i] = tail[i + 1] + p[i];
                }
                let curve = if quantile {
                    Some(model.predict_quantiles(
                        &row.features,
                        &setup.quantile_grid,
                        setup.z_max,
                    )?)
                } else {
                    None
                };
                entries.push(PredEntry {
                    row: r,
                    masses: p,
                    cum,
                    tail,
                    curve,
                });
                if let Features::Group(label) = &data.rows()[r].features {
                    by_label.insert(label.as_str(), entries.len() - 1);
                }
                entries.len() - 1
            }
        };
        row_entry.push(idx);
    }
    Ok((entries, row_entry))
}

fn loss_and_gradient(
    model: &LogitModel,
    data: &SurvivalDataset,
    setup: &TrainSetup,
    weights_per_row: &[WeightVector],
    want_grad: bool,
) -> Result<LossEval> {
    if setup.rule.needs_weights() && weights_per_row.len() != data.len() {
        return Err(Error::InvalidInput(format!(
            "{} weight vectors for {} rows",
            weights_per_row.len(),
            data.len()
        )));
    }
    let bins = setup.bins();
    let quantile = setup.rule.is_quantile();
    let (entries, row_entry) = row_predictions(model, data, setup)?;
    let mut loss = 0.0;
    let mut skipped = 0;
    let mut grad = if want_grad {
        Some(vec![0.0; model.n_params()])
    } else {
        None
    };

    // The chain rule through softmax is linear in the mass-space gradient,
    // so rows sharing a prediction accumulate into one buffer and the
    // backward pass runs once per distinct prediction.
    let acc_len = if quantile { bins + 1 } else { bins };
    let mut g_acc: Vec<Vec<f64>> = if want_grad {
        entries.iter().map(|_| vec![0.0; acc_len]).collect()
    } else {
        Vec::new()
    };
    let mut g_row = vec![0.0; acc_len];

    for (r, row) in data.rows().iter().enumerate() {
        let entry = &entries[row_entry[r]];
        let w = if setup.rule.needs_weights() {
            Some(&weights_per_row[r])
        } else {
            None
        };
        g_row.iter_mut().for_each(|g| *g = 0.0);
        let score = if quantile {
            portnoy_row_eval(
                setup,
                entry.curve.as_ref().unwrap(),
                row.obs.time(),
                row.obs.is_event(),
                w,
                grad.as_ref().map(|_| &mut g_row),
            )?
        } else {
            dist_row_eval(
                setup.rule,
                &setup.time_grid,
                &entry.masses,
                &entry.cum,
                &entry.tail,
                row.obs.time(),
                row.obs.is_event(),
                w,
                grad.as_ref().map(|_| &mut g_row),
            )?
        };
        if !score.is_finite() && setup.skip_infinite {
            skipped += 1;
            continue;
        }
        loss += score;
        if want_grad {
            for (acc, g) in g_acc[row_entry[r]].iter_mut().zip(&g_row) {
                *acc += g;
            }
        }
    }

    if let Some(g) = grad.as_mut() {
        for (entry, acc) in entries.iter().zip(&g_acc) {
            let g_logits = if quantile {
                // dL/dθ_k = z_max p_k (Σ_{j ≥ k+1} a_j − Σ_j a_j P_j).
                let mut dot = 0.0;
                for (a, c) in acc.iter().zip(&entry.cum).take(bins).skip(1) {
                    dot += a * c;
                }
                let mut out = vec![0.0; bins];
                let mut suffix = 0.0;
                for k in (0..bins).rev() {
                    suffix += acc[k + 1];
                    out[k] = setup.z_max * entry.masses[k] * (suffix - dot);
                }
                out
            } else {
                softmax_backward(&entry.masses, acc)
            };
            model.scatter_logit_grad(&data.rows()[entry.row].features, &g_logits, g)?;
        }
    }
    Ok(LossEval {
        loss,
        grad,
        skipped,
    })
}

/// Sum of the rule's score over all rows, with the row weights treated as
/// constants.
pub fn empirical_loss(
    model: &LogitModel,
    data: &SurvivalDataset,
    setup: &TrainSetup,
    weights_per_row: &[WeightVector],
) -> Result<f64> {
    Ok(loss_and_gradient(model, data, setup, weights_per_row, false)?.loss)
}

/// Gradient of [`empirical_loss`] with respect to every model parameter.
pub fn loss_gradient(
    model: &LogitModel,
    data: &SurvivalDataset,
    setup: &TrainSetup,
    weights_per_row: &[WeightVector],
) -> Result<Vec<f64>> {
    Ok(
        loss_and_gradient(model, data, setup, weights_per_row, true)?
            .grad
            .unwrap(),
    )
}

/// Per-row weights computed from the model's current predictions, plus the
/// count of degenerate (flagged) rows.
pub fn compute_weights(
    model: &LogitModel,
    data: &SurvivalDataset,
    setup: &TrainSetup,
) -> Result<(Vec<WeightVector>, usize)> {
    let bins = setup.bins();
    let mut out = Vec::with_capacity(data.len());
    let mut flagged = 0;
    type PredPair = (Option<crate::dist::BinMassCdf>, Option<QuantileCurve>);
    let mut preds: Vec<PredPair> = Vec::new();
    let mut by_label: BTreeMap<&str, usize> = BTreeMap::new();
    for row in data.rows() {
        let cached = match &row.features {
            Features::Group(label) => by_label.get(label.as_str()).copied(),
            Features::Numeric(_) => None,
        };
        let idx = match cached {
            Some(idx) => idx,
            None => {
                let entry = if setup.rule.is_quantile() {
                    (
                        None,
                        Some(model.predict_quantiles(
                            &row.features,
                            &setup.quantile_grid,
                            setup.z_max,
                        )?),
                    )
                } else {
                    (
                        Some(model.predict_distribution(&row.features, &setup.time_grid)?),
                        None,
                    )
                };
                preds.push(entry);
                if let Features::Group(label) = &row.features {
                    by_label.insert(label.as_str(), preds.len() - 1);
                }
                preds.len() - 1
            }
        };
        let (pred_cdf, pred_curve) = &preds[idx];
        let w = match setup.rule {
            ScoringRule::CenLog => {
                weights::cen_log_weights(pred_cdf.as_ref().unwrap(), &row.obs, &setup.time_grid)?
            }
            ScoringRule::CenBrier => {
                weights::cen_brier_weights(pred_cdf.as_ref().unwrap(), &row.obs, &setup.time_grid)?
            }
            ScoringRule::CenRps => {
                weights::cen_rps_weights(pred_cdf.as_ref().unwrap(), &row.obs, &setup.time_grid)?
            }
            ScoringRule::Portnoy => {
                let curve = pred_curve.as_ref().unwrap();
                let mut w = vec![0.0; bins + 1];
                let mut any_flag = false;
                if !row.obs.is_event() {
                    for (j, wj) in w.iter_mut().enumerate().take(bins).skip(1) {
                        let pw = weights::portnoy_weight(
                            curve,
                            row.obs.time(),
                            setup.quantile_grid.level(j),
                            &setup.portnoy.policy,
                        )?;
                        *wj = pw.w;
                        any_flag |= pw.flagged;
                    }
                }
                WeightVector::with_flag(w, any_flag)?
            }
            ScoringRule::CenLogSimple | ScoringRule::CenContLog => WeightVector::zeros(bins),
            _ => {
                return Err(Error::Unsupported(format!(
                    "`{}` has no reweighting step",
                    setup.rule
                )))
            }
        };
        if w.flagged() {
            flagged += 1;
        }
        out.push(w);
    }
    Ok((out, flagged))
}

/// Full-batch gradient descent with the weights frozen.
pub fn sgd_fit(
    model: &mut LogitModel,
    data: &SurvivalDataset,
    setup: &TrainSetup,
    weights_per_row: &[WeightVector],
    cfg: &TrainConfig,
) -> Result<FitReport> {
    cfg.validate()?;
    let mut skipped = 0;
    for epoch in 0..cfg.epochs {
        let eval = loss_and_gradient(model, data, setup, weights_per_row, true)?;
        if !eval.loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let grad = eval.grad.unwrap();
        for (p, g) in model.params_mut().iter_mut().zip(&grad) {
            *p -= cfg.learning_rate * g;
        }
        skipped = eval.skipped;
    }
    let eval = loss_and_gradient(model, data, setup, weights_per_row, false)?;
    if !eval.loss.is_finite() {
        return Err(Error::Diverged { epoch: cfg.epochs });
    }
    let flagged = weights_per_row.iter().filter(|w| w.flagged()).count();
    Ok(FitReport {
        final_loss: eval.loss,
        outer_iters: 0,
        max_cdf_changes: vec![],
        flagged_weights: flagged,
        converged: true,
        skipped_rows: skipped.max(eval.skipped),
    })
}

/// Per-row CDF values at the interior grid knots, used to measure how much
/// the predictions moved between outer iterations.
fn cdf_snapshot(
    model: &LogitModel,
    data: &SurvivalDataset,
    setup: &TrainSetup,
) -> Result<Vec<f64>> {
    let bins = setup.bins();
    let mut out = Vec::with_capacity(data.len() * bins.saturating_sub(1));
    let mut knot_sets: Vec<Vec<f64>> = Vec::new();
    let mut by_label: BTreeMap<&str, usize> = BTreeMap::new();
    for row in data.rows() {
        let cached = match &row.features {
            Features::Group(label) => by_label.get(label.as_str()).copied(),
            Features::Numeric(_) => None,
        };
        let idx = match cached {
            Some(idx) => idx,
            None => {
                let knots: Vec<f64> = if setup.rule.is_quantile() {
                    let curve = model.predict_quantiles(
                        &row.features,
                        &setup.quantile_grid,
                        setup.z_max,
                    )?;
                    (1..bins).map(|i| curve.value(i) / setup.z_max).collect()
                } else {
                    let p = model.masses(&row.features)?;
                    let mut cum = 0.0;
                    (0..bins.saturating_sub(1))
                        .map(|i| {
                            cum += p[i];
                            cum
                        })
                        .collect()
                };
                knot_sets.push(knots);
                if let Features::Group(label) = &row.features {
                    by_label.insert(label.as_str(), knot_sets.len() - 1);
                }
                knot_sets.len() - 1
            }
        };
        out.extend_from_slice(&knot_sets[idx]);
    }
    Ok(out)
}

/// Iterative reweighting: estimate weights from the current predictions,
/// refit with them frozen, and repeat until the predicted CDFs stop moving.
pub fn ir_fit(
    model: &mut LogitModel,
    data: &SurvivalDataset,
    setup: &TrainSetup,
    cfg: &TrainConfig,
) -> Result<FitReport> {
    if !setup.rule.needs_weights() {
        return Err(Error::Unsupported(format!(
            "`{}` has no weights to re-estimate; use sgd_fit",
            setup.rule
        )));
    }
    cfg.validate()?;
    let (mut row_weights, mut flagged) = compute_weights(model, data, setup)?;
    let mut prev = cdf_snapshot(model, data, setup)?;
    let mut changes = Vec::new();
    let mut converged = false;
    let mut outer = 0;
    let mut last = None;
    for _ in 0..cfg.ir_max_outer_iters {
        outer += 1;
        let report = sgd_fit(model, data, setup, &row_weights, cfg)?;
        let snap = cdf_snapshot(model, data, setup)?;
        let change = prev
            .iter()
            .zip(&snap)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        changes.push(change);
        prev = snap;
        let (w, f) = compute_weights(model, data, setup)?;
        row_weights = w;
        flagged = f;
        last = Some(report);
        if change < cfg.ir_tol {
            converged = true;
            break;
        }
    }
    let last = last.ok_or_else(|| Error::InvalidInput("ir_max_outer_iters is zero".into()))?;
    Ok(FitReport {
        final_loss: last.final_loss,
        outer_iters: outer,
        max_cdf_changes: changes,
        flagged_weights: flagged,
        converged,
        skipped_rows: last.skipped_rows,
    })
}

#[derive(Clone, Debug)]
pub struct GridSearchFit {
    pub curves: BTreeMap<String, QuantileCurve>,
    /// Quantile estimates pushed up to restore strict monotonicity.
    pub monotonicity_repairs: usize,
}

fn ternary_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

/// Sequential per-level quantile estimation for group-table data: levels are
/// fitted in increasing order, and each censored row's weight comes from the
/// smallest already-fitted level whose quantile reaches its censoring time.
pub fn grid_search_fit_quantiles(
    data: &SurvivalDataset,
    grid: &QuantileGrid,
    policy: &WeightPolicy,
    z_infinity: f64,
) -> Result<GridSearchFit> {
    let z_max = data.z_max();
    if z_infinity <= z_max {
        return Err(Error::InvalidInput(format!(
            "z_infinity {z_infinity} must exceed z_max {z_max}"
        )));
    }
    let labels = data.group_labels();
    if labels.is_empty() {
        return Err(Error::InvalidInput(
            "grid search needs group-labelled rows".into(),
        ));
    }
    let bins = grid.bins();
    let gap = z_max * 1e-9;
    let mut curves = BTreeMap::new();
    let mut repairs = 0;
    for label in labels {
        let rows: Vec<(f64, bool)> = data
            .rows()
            .iter()
            .filter(|r| matches!(&r.features, Features::Group(g) if *g == label))
            .map(|r| (r.obs.time(), r.obs.is_event()))
            .collect();
        if rows.is_empty() {
            return Err(Error::InvalidInput(format!("empty group `{label}`")));
        }
        let mut values = vec![0.0; bins + 1];
        values[bins] = z_max;
        for j in 1..bins {
            let tau = grid.level(j);
            // Censored-row weights from the already-fitted prefix.
            let row_w: Vec<Option<f64>> = rows
                .iter()
                .map(|&(z, event)| {
                    if event {
                        return None;
                    }
                    let crossing = (0..j).find(|&i| values[i] >= z);
                    Some(match crossing {
                        Some(i) => {
                            let tc = grid.level(i);
                            (tau - tc) / (1.0 - tc)
                        }
                        None => policy.fallback_w,
                    })
                })
                .collect();
            let objective = |q: f64| -> f64 {
                rows.iter()
                    .zip(&row_w)
                    .map(|(&(z, _), w)| match w {
                        None => scoring::pinball(q, z, tau).unwrap(),
                        Some(w) => {
                            w * scoring::pinball(q, z, tau).unwrap()
                                + (1.0 - w) * scoring::pinball(q, z_infinity, tau).unwrap()
                        }
                    })
                    .sum()
            };
            let hi = z_max - gap * (bins - j) as f64;
            let q = ternary_min(0.0, hi, objective);
            let lo_bound = values[j - 1] + gap;
            values[j] = if q < lo_bound {
                repairs += 1;
                lo_bound.min(0.5 * (values[j - 1] + z_max))
            } else {
                q
            };
        }
        curves.insert(label, QuantileCurve::new(grid.clone(), values)?);
    }
    Ok(GridSearchFit {
        curves,
        monotonicity_repairs: repairs,
    })
}
