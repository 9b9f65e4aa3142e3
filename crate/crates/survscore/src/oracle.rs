//! Exact expected scores under a known truth, and the properness check
//! built on them.
//!
//! For a fixed censoring time c the expectation over t decomposes into a
//! finite sum: every distribution rule is piecewise constant in t within a
//! bin, and the pinball loss integrates in closed form against a
//! piecewise-linear CDF. Censoring then enters as an outer sum over atoms,
//! or as an exact low-order Gauss rule for grid-aligned continuous censoring
//! (the integrand is piecewise polynomial of degree ≤ 2 in c). No Monte
//! Carlo is involved anywhere.

use crate::data::CensoredObservation;
use crate::dist::{BinMassCdf, QuantileCurve};
use crate::error::{Error, Result};
use crate::fit::PortnoySettings;
use crate::grid::QuantileGrid;
use crate::rng::SplitMix64;
use crate::scoring::{self, ScoringRule, WeightVector};
use crate::truth::{CensorModel, PiecewiseLinearTruth};
use crate::weights;

/// A candidate estimate to be scored against the truth.
#[derive(Clone, Copy, Debug)]
pub enum Candidate<'a> {
    Distribution(&'a BinMassCdf),
    Quantiles(&'a QuantileCurve),
}

/// Where the censored-rule weights come from. `TrueCdf` is the proper
/// setting; `Corrupted` deliberately treats every censored point as an event
/// at its censoring time, which breaks properness and serves as a negative
/// control.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightSource {
    TrueCdf,
    Corrupted,
}

fn censored_weights(
    rule: ScoringRule,
    truth: &PiecewiseLinearTruth,
    obs: &CensoredObservation,
    source: WeightSource,
) -> Result<WeightVector> {
    let grid = truth.event_cdf.grid();
    match source {
        WeightSource::TrueCdf => match rule {
            ScoringRule::CenLog => weights::cen_log_weights(&truth.event_cdf, obs, grid),
            ScoringRule::CenBrier => weights::cen_brier_weights(&truth.event_cdf, obs, grid),
            ScoringRule::CenRps => weights::cen_rps_weights(&truth.event_cdf, obs, grid),
            _ => Ok(WeightVector::zeros(grid.bins())),
        },
        WeightSource::Corrupted => {
            let j = grid.bin_of(obs.time())?;
            let mut w = vec![0.0; grid.bins()];
            match rule {
                ScoringRule::CenLog => w[j] = 1.0,
                ScoringRule::CenBrier => w[j] = 1.0,
                ScoringRule::CenRps => {
                    for (i, wi) in w.iter_mut().enumerate().skip(1) {
                        if obs.time() <= grid.threshold(i) {
                            *wi = 1.0;
                        }
                    }
                }
                _ => {}
            }
            WeightVector::new(w)
        }
    }
}

/// Score of an uncensored outcome anywhere inside bin `j`; every
/// distribution rule is constant there, so a representative point suffices.
fn uncensored_bin_score(rule: ScoringRule, cand: &BinMassCdf, y: f64) -> Result<f64> {
    match rule {
        ScoringRule::Log | ScoringRule::CenLog | ScoringRule::CenLogSimple => {
            scoring::log_score(cand, y)
        }
        ScoringRule::CenContLog => scoring::cen_cont_log(cand, &CensoredObservation::new(y, true)?),
        ScoringRule::Brier | ScoringRule::CenBrier => scoring::brier(cand, y),
        ScoringRule::Rps | ScoringRule::CenRps => scoring::rps(cand, y),
        ScoringRule::Portnoy => Err(Error::Unsupported("portnoy is a quantile rule".into())),
    }
}

fn censored_point_score(
    rule: ScoringRule,
    truth: &PiecewiseLinearTruth,
    cand: &BinMassCdf,
    c: f64,
    source: WeightSource,
) -> Result<f64> {
    let obs = CensoredObservation::new(c, false)?;
    match rule {
        ScoringRule::CenLog => {
            let w = censored_weights(rule, truth, &obs, source)?;
            scoring::cen_log(cand, &obs, &w)
        }
        ScoringRule::CenLogSimple => scoring::cen_log_simple(cand, &obs),
        ScoringRule::CenContLog => scoring::cen_cont_log(cand, &obs),
        ScoringRule::CenBrier => {
            let w = censored_weights(rule, truth, &obs, source)?;
            scoring::cen_brier(cand, &obs, &w)
        }
        ScoringRule::CenRps => {
            let w = censored_weights(rule, truth, &obs, source)?;
            scoring::cen_rps(cand, &obs, &w)
        }
        _ => Err(Error::Unsupported(format!(
            "`{rule}` has no censored branch"
        ))),
    }
}

/// E[S | C = c] for a distribution rule: the event mass below c scores the
/// uncensored branch bin by bin, and the survival mass at c scores the
/// censored branch with weights from the true CDF.
fn dist_conditional(
    rule: ScoringRule,
    truth: &PiecewiseLinearTruth,
    cand: &BinMassCdf,
    c: f64,
    source: WeightSource,
) -> Result<f64> {
    let f = &truth.event_cdf;
    let grid = f.grid();
    let jc = grid.bin_of(c)?;
    let fc = f.cdf_at(c)?;
    let mut e = 0.0;
    for j in 0..=jc {
        let (p, hi) = if j < jc {
            (f.mass(j), grid.threshold(j + 1))
        } else {
            (fc - f.cdf_at_knot(jc), c)
        };
        if p > 0.0 {
            let y = 0.5 * (grid.threshold(j) + hi);
            e += p * uncensored_bin_score(rule, cand, y)?;
        }
    }
    let s = f.survival_at(c)?;
    if s > 0.0 {
        e += s * censored_point_score(rule, truth, cand, c, source)?;
    }
    Ok(e)
}

/// ∫_0^c ρ_τ(q, t) dF(t): exact trapezoid sums over the segments between
/// grid knots, split additionally at the kink t = q.
fn pinball_mass_below(f: &BinMassCdf, q: f64, tau: f64, c: f64) -> Result<f64> {
    let grid = f.grid();
    let mut pts = vec![0.0];
    for i in 1..=grid.bins() {
        let z = grid.threshold(i);
        if z < c {
            pts.push(z);
        } else {
            break;
        }
    }
    if q > 0.0 && q < c {
        pts.push(q);
    }
    pts.push(c);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mut total = 0.0;
    for seg in pts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b <= a {
            continue;
        }
        let density = f.density_at(0.5 * (a + b))?;
        let avg = 0.5 * (scoring::pinball(q, a, tau)? + scoring::pinball(q, b, tau)?);
        total += density * (b - a) * avg;
    }
    Ok(total)
}

/// E[S_Portnoy(τ) | C = c] for one quantile level.
fn portnoy_conditional(
    truth: &PiecewiseLinearTruth,
    q: f64,
    tau: f64,
    c: f64,
    source: WeightSource,
    settings: &PortnoySettings,
) -> Result<f64> {
    let f = &truth.event_cdf;
    let mut e = pinball_mass_below(f, q, tau, c)?;
    let s = f.survival_at(c)?;
    if s > 0.0 {
        let w = match source {
            WeightSource::TrueCdf => weights::portnoy_weight(f, c, tau, &settings.policy)?.w,
            WeightSource::Corrupted => 1.0,
        };
        e += s
            * (w * scoring::pinball(q, c, tau)?
                + (1.0 - w) * scoring::pinball(q, settings.z_infinity, tau)?);
    }
    Ok(e)
}

/// Integrates a conditional expectation against a grid-aligned continuous
/// censoring density. `extra_breaks` lists the points where the integrand's
/// polynomial pieces change beyond the grid knots; two-point Gauss-Legendre
/// per piece is exact for the degree ≤ 2 integrands that arise here.
fn integrate_over_censoring(
    cen: &BinMassCdf,
    extra_breaks: &[f64],
    mut cond: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    let grid = cen.grid();
    let mut total = 0.0;
    for i in 0..grid.bins() {
        let (lo, hi) = (grid.threshold(i), grid.threshold(i + 1));
        let mut pts = vec![lo, hi];
        for &b in extra_breaks {
            if b > lo && b < hi {
                pts.push(b);
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let density = cen.mass(i) / (hi - lo);
        for seg in pts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let h = b - a;
            if h <= 0.0 {
                continue;
            }
            let mid = 0.5 * (a + b);
            let offset = h / (2.0 * 3.0f64.sqrt());
            total += 0.5 * h * density * cond(mid - offset)?;
            total += 0.5 * h * density * cond(mid + offset)?;
        }
    }
    Ok(total)
}

/// Exact expectation of a rule's score over (t, c) ~ (T, C).
///
/// Distribution rules require the candidate on the truth's grid; Portnoy
/// requires a quantile curve whose top matches the truth's range. The plain
/// (uncensored) rules ignore censoring and integrate over t alone.
pub fn expected_score(
    truth: &PiecewiseLinearTruth,
    candidate: Candidate<'_>,
    rule: ScoringRule,
    source: WeightSource,
    settings: &PortnoySettings,
) -> Result<f64> {
    match (rule, candidate) {
        (ScoringRule::Portnoy, Candidate::Quantiles(curve)) => {
            if (curve.z_max() - truth.upper()).abs() > 1e-9 * truth.upper() {
                return Err(Error::GridMismatch(format!(
                    "curve tops out at {}, truth at {}",
                    curve.z_max(),
                    truth.upper()
                )));
            }
            let mut total = 0.0;
            for j in 1..curve.grid().bins() {
                let tau = curve.grid().level(j);
                let q = curve.value(j);
                total += match &truth.censoring {
                    CensorModel::Atoms(atoms) => {
                        let mut e = 0.0;
                        for &(c, p) in atoms {
                            if p > 0.0 {
                                e += p * portnoy_conditional(truth, q, tau, c, source, settings)?;
                            }
                        }
                        e
                    }
                    CensorModel::Continuous(cen) => {
                        let breaks = [q, truth.event_cdf.quantile_at(tau)?];
                        integrate_over_censoring(cen, &breaks, |c| {
                            portnoy_conditional(truth, q, tau, c, source, settings)
                        })?
                    }
                };
            }
            Ok(total)
        }
        (ScoringRule::Portnoy, Candidate::Distribution(_)) => Err(Error::GridMismatch(
            "portnoy expects a quantile-curve candidate".into(),
        )),
        (
            ScoringRule::Log | ScoringRule::Brier | ScoringRule::Rps,
            Candidate::Distribution(cand),
        ) => {
            check_same_grid(truth, cand)?;
            let f = &truth.event_cdf;
            let mut e = 0.0;
            for j in 0..f.bins() {
                let y = 0.5 * (f.grid().threshold(j) + f.grid().threshold(j + 1));
                e += f.mass(j) * uncensored_bin_score(rule, cand, y)?;
            }
            Ok(e)
        }
        (_, Candidate::Distribution(cand)) => {
            check_same_grid(truth, cand)?;
            match &truth.censoring {
                CensorModel::Atoms(atoms) => {
                    let mut e = 0.0;
                    for &(c, p) in atoms {
                        if p > 0.0 {
                            e += p * dist_conditional(rule, truth, cand, c, source)?;
                        }
                    }
                    Ok(e)
                }
                CensorModel::Continuous(cen) => {
                    if rule == ScoringRule::CenContLog {
                        return Err(Error::Unsupported(
                            "cen-cont-log is not polynomial in the censoring time; use atoms"
                                .into(),
                        ));
                    }
                    integrate_over_censoring(cen, &[], |c| {
                        dist_conditional(rule, truth, cand, c, source)
                    })
                }
            }
        }
        (_, Candidate::Quantiles(_)) => Err(Error::GridMismatch(
            "distribution rules expect a bin-mass candidate".into(),
        )),
    }
}

fn check_same_grid(truth: &PiecewiseLinearTruth, cand: &BinMassCdf) -> Result<()> {
    if cand.grid() != truth.event_cdf.grid() {
        return Err(Error::GridMismatch(
            "candidate must live on the truth's grid".into(),
        ));
    }
    Ok(())
}

/// The quantile curve of the true distribution on a uniform grid with the
/// given number of bins.
pub fn true_quantile_curve(truth: &PiecewiseLinearTruth, bins: usize) -> Result<QuantileCurve> {
    let grid = QuantileGrid::uniform(bins)?;
    let values: Vec<f64> = grid
        .levels()
        .iter()
        .map(|&tau| truth.event_cdf.quantile_at(tau))
        .collect::<Result<_>>()?;
    QuantileCurve::new(grid, values)
}

#[derive(Clone, Copy, Debug)]
pub struct PropernessConfig {
    pub n_perturbations: usize,
    pub perturbation_scale: f64,
    pub seed: u64,
    pub tolerance: f64,
    pub weight_source: WeightSource,
}

impl Default for PropernessConfig {
    fn default() -> Self {
        Self {
            n_perturbations: 500,
            perturbation_scale: 0.3,
            seed: 0,
            tolerance: 1e-10,
            weight_source: WeightSource::TrueCdf,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropernessReport {
    pub rule: ScoringRule,
    pub n_perturbations: usize,
    /// Smallest E[S(F̂)] − E[S(F)] over all perturbations.
    pub min_gap: Option<f64>,
    /// Gaps below −tolerance.
    pub violations: usize,
    /// Smallest gap among candidates with TV(F̂, F) ≥ 0.01.
    pub min_gap_separated: Option<f64>,
}

fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Samples logit-perturbed candidates around the truth and checks the
/// properness inequality by exact expectation for each of them.
pub fn properness_check(
    truth: &PiecewiseLinearTruth,
    rule: ScoringRule,
    cfg: &PropernessConfig,
    settings: &PortnoySettings,
) -> Result<PropernessReport> {
    let mut rng = SplitMix64::new(cfg.seed);
    let bins = truth.event_cdf.bins();
    let quantile = rule == ScoringRule::Portnoy;

    let true_curve = true_quantile_curve(truth, bins)?;
    let base = if quantile {
        expected_score(
            truth,
            Candidate::Quantiles(&true_curve),
            rule,
            cfg.weight_source,
            settings,
        )?
    } else {
        expected_score(
            truth,
            Candidate::Distribution(&truth.event_cdf),
            rule,
            cfg.weight_source,
            settings,
        )?
    };

    // Baseline logits whose softmax reproduces the truth.
    let true_fractions: Vec<f64> = if quantile {
        let upper = truth.upper();
        true_curve
            .values()
            .windows(2)
            .map(|w| (w[1] - w[0]) / upper)
            .collect()
    } else {
        truth.event_cdf.masses().to_vec()
    };
    let base_logits: Vec<f64> = true_fractions.iter().map(|&m| m.ln()).collect();

    let mut min_gap: Option<f64> = None;
    let mut min_gap_separated: Option<f64> = None;
    let mut violations = 0;
    for _ in 0..cfg.n_perturbations {
        let logits: Vec<f64> = base_logits
            .iter()
            .map(|&l| l + cfg.perturbation_scale * rng.next_normal())
            .collect();
        let fractions = crate::model::softmax(&logits);
        let tv = tv_distance(&fractions, &true_fractions);
        let gap = if quantile {
            let upper = truth.upper();
            let mut values = Vec::with_capacity(bins + 1);
            values.push(0.0);
            let mut acc = 0.0;
            for &p in &fractions {
                acc += p;
                values.push(acc * upper);
            }
            values[bins] = upper;
            let curve = QuantileCurve::new(true_curve.grid().clone(), values)?;
            expected_score(
                truth,
                Candidate::Quantiles(&curve),
                rule,
                cfg.weight_source,
                settings,
            )? - base
        } else {
            let cand = BinMassCdf::new(truth.event_cdf.grid().clone(), fractions)?;
            expected_score(
                truth,
                Candidate::Distribution(&cand),
                rule,
                cfg.weight_source,
                settings,
            )? - base
        };
        min_gap = Some(min_gap.map_or(gap, |g: f64| g.min(gap)));
        if tv >= 0.01 {
            min_gap_separated = Some(min_gap_separated.map_or(gap, |g: f64| g.min(gap)));
        }
        if gap < -cfg.tolerance {
            violations += 1;
        }
    }
    Ok(PropernessReport {
        rule,
        n_perturbations: cfg.n_perturbations,
        min_gap,
        violations,
        min_gap_separated,
    })
}

/// Closed-form expectation gap for Cen-log: per censoring atom, the KL
/// divergence between the truth's and candidate's event/tail split at the
/// atom's bin.
pub fn cen_log_gap_closed_form(truth: &PiecewiseLinearTruth, cand: &BinMassCdf) -> Result<f64> {
    check_same_grid(truth, cand)?;
    let atoms = match &truth.censoring {
        CensorModel::Atoms(atoms) => atoms,
        CensorModel::Continuous(_) => {
            return Err(Error::Unsupported(
                "closed form is stated for censoring atoms".into(),
            ))
        }
    };
    let f = &truth.event_cdf;
    let grid = f.grid();
    let mut total = 0.0;
    for &(c, p) in atoms {
        if p <= 0.0 {
            continue;
        }
        let i = grid.bin_of(c)?;
        let mut kl = 0.0;
        for j in 0..=i {
            kl += f.mass(j) * (f.mass(j).ln() - cand.mass(j).ln());
        }
        let tail_t = f.tail_at_knot(i + 1);
        let tail_c = cand.tail_at_knot(i + 1);
        if tail_t > 0.0 {
            kl += tail_t * (tail_t.ln() - tail_c.ln());
        }
        total += p * kl;
    }
    Ok(total)
}

/// Closed-form expectation gap for Cen-Brier: Σ_i (f̂_i − f_i)², independent
/// of the censoring distribution.
pub fn cen_brier_gap_closed_form(truth: &PiecewiseLinearTruth, cand: &BinMassCdf) -> Result<f64> {
    check_same_grid(truth, cand)?;
    Ok(truth
        .event_cdf
        .masses()
        .iter()
        .zip(cand.masses())
        .map(|(f, g)| (f - g) * (f - g))
        .sum())
}

/// |mean S_Cen-log − mean S_Cen-log-simple| per grid size, evaluated with the
/// true distribution rebinned onto each grid and weights from the true CDF.
/// One dataset is sampled and reused for every B.
pub fn cen_log_b_convergence(
    truth: &PiecewiseLinearTruth,
    b_list: &[usize],
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let data = crate::truth::sample_dataset(truth, n, seed)?;
    let mut out = Vec::with_capacity(b_list.len());
    for &bins in b_list {
        let grid = crate::grid::TimeGrid::uniform(truth.upper(), bins, 0.0)?;
        let masses: Vec<f64> = (0..bins)
            .map(|i| {
                truth.event_cdf.cdf_at(grid.threshold(i + 1)).unwrap()
                    - truth.event_cdf.cdf_at(grid.threshold(i)).unwrap()
            })
            .collect();
        let pred = BinMassCdf::new(grid.clone(), masses)?;
        let mut sum_log = 0.0;
        let mut sum_simple = 0.0;
        for row in data.rows() {
            let w = weights::cen_log_weights(&truth.event_cdf, &row.obs, &grid)?;
            sum_log += scoring::cen_log(&pred, &row.obs, &w)?;
            sum_simple += scoring::cen_log_simple(&pred, &row.obs)?;
        }
        out.push((sum_log - sum_simple).abs() / n as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::truth::sample_dataset;
    use crate::weights::WeightPolicy;

    fn settings(z_inf: f64) -> PortnoySettings {
        PortnoySettings {
            z_infinity: z_inf,
            policy: WeightPolicy::default(),
        }
    }

    fn uniform_truth(atoms: Vec<(f64, f64)>) -> PiecewiseLinearTruth {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let cdf = BinMassCdf::new(grid, vec![0.5, 0.5]).unwrap();
        PiecewiseLinearTruth::new("g", cdf, CensorModel::Atoms(atoms)).unwrap()
    }

    #[test]
    fn cen_log_expectation_hand_value() {
        // Uniform truth on [0, 2], atom at c = 1, candidate = truth:
        // E = 0.5(−ln 0.5) + 0.5(−ln 0.5) = ln 2.
        let truth = uniform_truth(vec![(1.0, 1.0)]);
        let e = expected_score(
            &truth,
            Candidate::Distribution(&truth.event_cdf),
            ScoringRule::CenLog,
            WeightSource::TrueCdf,
            &settings(2.1),
        )
        .unwrap();
        assert!((e - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn uncensored_log_expectation_is_cross_entropy() {
        let truth = uniform_truth(vec![(2.0, 1.0)]);
        let grid = truth.event_cdf.grid().clone();
        let cand = BinMassCdf::new(grid, vec![0.25, 0.75]).unwrap();
        let e = expected_score(
            &truth,
            Candidate::Distribution(&cand),
            ScoringRule::Log,
            WeightSource::TrueCdf,
            &settings(2.1),
        )
        .unwrap();
        let want = -(0.5 * 0.25f64.ln() + 0.5 * 0.75f64.ln());
        assert!((e - want).abs() < 1e-12);
    }

    #[test]
    fn portnoy_expectation_hand_value() {
        // Uniform truth on [0, 2] with B = 2 (single interior level τ = 0.5),
        // censoring atom at c = 1.5 (so τ_c = 0.75 > τ: fallback w = 1), and
        // a candidate with F̂^{-1}(0.5) = 1.2:
        //   ∫_0^{1.5} ρ_.5(1.2, t) 0.5 dt = 0.18 + 0.01125
        //   censored: 0.25 · ρ_.5(1.2, 1.5) = 0.25 · 0.15 = 0.0375
        let grid = TimeGrid::new(vec![0.0, 2.0]).unwrap();
        let cdf = BinMassCdf::new(grid, vec![1.0]).unwrap();
        let truth =
            PiecewiseLinearTruth::new("g", cdf, CensorModel::Atoms(vec![(1.5, 1.0)])).unwrap();
        let qgrid = QuantileGrid::uniform(2).unwrap();
        let curve = QuantileCurve::new(qgrid, vec![0.0, 1.2, 2.0]).unwrap();
        let e = expected_score(
            &truth,
            Candidate::Quantiles(&curve),
            ScoringRule::Portnoy,
            WeightSource::TrueCdf,
            &settings(2.1),
        )
        .unwrap();
        assert!((e - 0.228_75).abs() < 1e-12, "e = {e}");
    }

    #[test]
    fn portnoy_case1_tie_has_zero_gap() {
        // c below both quantiles: any candidate ties with the truth.
        let grid = TimeGrid::new(vec![0.0, 2.0]).unwrap();
        let cdf = BinMassCdf::new(grid, vec![1.0]).unwrap();
        let truth =
            PiecewiseLinearTruth::new("g", cdf, CensorModel::Atoms(vec![(0.5, 1.0)])).unwrap();
        let s = settings(2.1);
        let true_curve = true_quantile_curve(&truth, 2).unwrap();
        let base = expected_score(
            &truth,
            Candidate::Quantiles(&true_curve),
            ScoringRule::Portnoy,
            WeightSource::TrueCdf,
            &s,
        )
        .unwrap();
        let qgrid = QuantileGrid::uniform(2).unwrap();
        let cand = QuantileCurve::new(qgrid, vec![0.0, 1.3, 2.0]).unwrap();
        let e = expected_score(
            &truth,
            Candidate::Quantiles(&cand),
            ScoringRule::Portnoy,
            WeightSource::TrueCdf,
            &s,
        )
        .unwrap();
        assert!((e - base).abs() < 1e-12, "gap = {}", e - base);
    }

    #[test]
    fn gaps_match_monte_carlo() {
        // 200k-sample sanity check of the exact expectation machinery.
        let truth = uniform_truth(vec![(0.7, 0.5), (1.6, 0.5)]);
        let cand = BinMassCdf::new(truth.event_cdf.grid().clone(), vec![0.35, 0.65]).unwrap();
        let s = settings(2.1);
        for rule in [
            ScoringRule::CenLog,
            ScoringRule::CenLogSimple,
            ScoringRule::CenBrier,
            ScoringRule::CenRps,
            ScoringRule::CenContLog,
        ] {
            let exact = expected_score(
                &truth,
                Candidate::Distribution(&cand),
                rule,
                WeightSource::TrueCdf,
                &s,
            )
            .unwrap();
            let n = 200_000;
            let data = sample_dataset(&truth, n, 123).unwrap();
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for row in data.rows() {
                let score = censored_point_eval(rule, &truth, &cand, &row.obs).unwrap();
                sum += score;
                sumsq += score * score;
            }
            let mean = sum / n as f64;
            if exact.is_infinite() {
                // The atom at 1.6 sits in the last bin, where the simple
                // rule's tail mass is zero; both sides must diverge.
                assert!(mean.is_infinite() && mean > 0.0, "{rule}: mc {mean}");
                continue;
            }
            let var = (sumsq / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();
            assert!(
                (mean - exact).abs() <= 4.0 * se + 1e-9,
                "{rule}: exact {exact}, mc {mean}, se {se}"
            );
        }
    }

    /// Empirical per-row score with true-CDF weights, for the MC checks.
    fn censored_point_eval(
        rule: ScoringRule,
        truth: &PiecewiseLinearTruth,
        cand: &BinMassCdf,
        obs: &CensoredObservation,
    ) -> Result<f64> {
        let w = censored_weights(rule, truth, obs, WeightSource::TrueCdf)?;
        match rule {
            ScoringRule::CenLog => scoring::cen_log(cand, obs, &w),
            ScoringRule::CenLogSimple => scoring::cen_log_simple(cand, obs),
            ScoringRule::CenContLog => scoring::cen_cont_log(cand, obs),
            ScoringRule::CenBrier => scoring::cen_brier(cand, obs, &w),
            ScoringRule::CenRps => scoring::cen_rps(cand, obs, &w),
            _ => Err(Error::Unsupported("mc eval".into())),
        }
    }

    #[test]
    fn closed_forms_match_direct_expectation() {
        let truth = uniform_truth(vec![(0.7, 0.4), (1.3, 0.3), (2.0, 0.3)]);
        let cand = BinMassCdf::new(truth.event_cdf.grid().clone(), vec![0.4, 0.6]).unwrap();
        let s = settings(2.1);
        let base_log = expected_score(
            &truth,
            Candidate::Distribution(&truth.event_cdf),
            ScoringRule::CenLog,
            WeightSource::TrueCdf,
            &s,
        )
        .unwrap();
        let e_log = expected_score(
            &truth,
            Candidate::Distribution(&cand),
            ScoringRule::CenLog,
            WeightSource::TrueCdf,
            &s,
        )
        .unwrap();
        let kl = cen_log_gap_closed_form(&truth, &cand).unwrap();
        assert!((e_log - base_log - kl).abs() < 1e-12);

        let base_brier = expected_score(
            &truth,
            Candidate::Distribution(&truth.event_cdf),
            ScoringRule::CenBrier,
            WeightSource::TrueCdf,
            &s,
        )
        .unwrap();
        let e_brier = expected_score(
            &truth,
            Candidate::Distribution(&cand),
            ScoringRule::CenBrier,
            WeightSource::TrueCdf,
            &s,
        )
        .unwrap();
        let sq = cen_brier_gap_closed_form(&truth, &cand).unwrap();
        assert!((e_brier - base_brier - sq).abs() < 1e-12);
    }

    #[test]
    fn properness_holds_on_a_small_sweep() {
        let truth = uniform_truth(vec![(0.7, 0.5), (1.9, 0.5)]);
        let s = settings(2.1);
        for rule in ScoringRule::WEIGHTED {
            let cfg = PropernessConfig {
                n_perturbations: 50,
                ..PropernessConfig::default()
            };
            let report = properness_check(&truth, rule, &cfg, &s).unwrap();
            assert_eq!(report.violations, 0, "{rule}");
        }
    }

    #[test]
    fn corrupted_weights_break_properness() {
        let truth = uniform_truth(vec![(0.6, 0.7), (1.9, 0.3)]);
        let s = settings(2.1);
        let cfg = PropernessConfig {
            n_perturbations: 100,
            weight_source: WeightSource::Corrupted,
            ..PropernessConfig::default()
        };
        let report = properness_check(&truth, ScoringRule::CenLog, &cfg, &s).unwrap();
        assert!(report.violations > 0);
    }

    #[test]
    fn continuous_censoring_matches_atom_refinement() {
        // A continuous censoring law can be approximated by many small atoms;
        // the exact integral must agree in the limit. 4000 atoms per bin
        // brings the midpoint approximation within ~1e-8.
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let f = BinMassCdf::new(grid.clone(), vec![0.5, 0.5]).unwrap();
        let cen = BinMassCdf::new(grid.clone(), vec![0.3, 0.7]).unwrap();
        let truth = PiecewiseLinearTruth::new("g", f.clone(), CensorModel::Continuous(cen.clone()))
            .unwrap();
        let cand = BinMassCdf::new(grid.clone(), vec![0.4, 0.6]).unwrap();
        let s = settings(2.1);

        let m = 4000;
        let mut atoms = Vec::new();
        for i in 0..grid.bins() {
            let (lo, hi) = (grid.threshold(i), grid.threshold(i + 1));
            for k in 0..m {
                let c = lo + (hi - lo) * (k as f64 + 0.5) / m as f64;
                atoms.push((c, cen.mass(i) / m as f64));
            }
        }
        let atom_truth = PiecewiseLinearTruth::new("g", f, CensorModel::Atoms(atoms)).unwrap();

        for rule in [
            ScoringRule::CenLog,
            ScoringRule::CenBrier,
            ScoringRule::CenRps,
        ] {
            let exact = expected_score(
                &truth,
                Candidate::Distribution(&cand),
                rule,
                WeightSource::TrueCdf,
                &s,
            )
            .unwrap();
            let approx = expected_score(
                &atom_truth,
                Candidate::Distribution(&cand),
                rule,
                WeightSource::TrueCdf,
                &s,
            )
            .unwrap();
            assert!((exact - approx).abs() < 1e-6, "{rule}: {exact} vs {approx}");
        }
    }

    #[test]
    fn continuous_censoring_rejects_the_nonpolynomial_rule() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let f = BinMassCdf::new(grid.clone(), vec![0.5, 0.5]).unwrap();
        let cen = BinMassCdf::new(grid.clone(), vec![0.3, 0.7]).unwrap();
        let truth = PiecewiseLinearTruth::new("g", f, CensorModel::Continuous(cen)).unwrap();
        let cand = BinMassCdf::new(grid, vec![0.4, 0.6]).unwrap();
        let err = expected_score(
            &truth,
            Candidate::Distribution(&cand),
            ScoringRule::CenContLog,
            WeightSource::TrueCdf,
            &settings(2.1),
        )
        .unwrap_err();
        assert!(matches!(err, crate::error::Error::Unsupported(_)));
    }

    #[test]
    fn b_convergence_differences_shrink() {
        let spec = crate::io::TruthSpec::default_two_group();
        let pop = spec.to_population().unwrap();
        let truth = pop.group("a").unwrap();
        let diffs = cen_log_b_convergence(truth, &[8, 16, 32], 2000, 5).unwrap();
        assert!(diffs[1] <= diffs[0] + 1e-12);
        assert!(diffs[2] <= diffs[1] + 1e-12);
        // Uncensored data makes the two rules identical.
        let all_events = PiecewiseLinearTruth::new(
            "g",
            truth.event_cdf.clone(),
            CensorModel::Atoms(vec![(2.0, 1.0)]),
        )
        .unwrap();
        let diffs = cen_log_b_convergence(&all_events, &[1, 8, 16], 500, 6).unwrap();
        assert!(diffs.iter().all(|d| *d == 0.0));
    }
}
