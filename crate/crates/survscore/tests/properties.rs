//! Property-based invariants: CDF round trips, weight ranges, model output
//! validity, and parser totality on generated valid files.

use proptest::prelude::*;

use survscore::data::{CensoredObservation, DatasetRow, Features, SurvivalDataset};
use survscore::dist::BinMassCdf;
use survscore::grid::TimeGrid;
use survscore::io;
use survscore::metrics::d_calibration;
use survscore::model::LogitModel;
use survscore::weights::{
    cen_brier_weights, cen_log_weights, cen_rps_weights, portnoy_weight, WeightPolicy,
};

fn arb_masses(bins: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6..1.0f64, bins)
}

fn arb_cdf() -> impl Strategy<Value = BinMassCdf> {
    (2usize..9)
        .prop_flat_map(|bins| (Just(bins), arb_masses(bins), 0.5..4.0f64))
        .prop_map(|(bins, masses, upper)| {
            let grid = TimeGrid::uniform(upper, bins, 0.0).unwrap();
            BinMassCdf::new(grid, masses).unwrap()
        })
}

proptest! {
    #[test]
    fn quantile_inverts_cdf_within_1e10(cdf in arb_cdf(), frac in 0.0..1.0f64) {
        let t = frac * cdf.grid().upper();
        let tau = cdf.cdf_at(t).unwrap();
        let back = cdf.quantile_at(tau).unwrap();
        prop_assert!((back - t).abs() < 1e-10, "t {t} -> tau {tau} -> {back}");
    }

    #[test]
    fn cdf_is_strictly_monotone(cdf in arb_cdf(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-9);
        let upper = cdf.grid().upper();
        let (flo, fhi) = (cdf.cdf_at(lo * upper).unwrap(), cdf.cdf_at(hi * upper).unwrap());
        prop_assert!(flo < fhi);
    }

    #[test]
    fn densities_integrate_to_one(cdf in arb_cdf()) {
        let total: f64 = (0..cdf.bins())
            .map(|i| {
                let mid = 0.5 * (cdf.grid().threshold(i) + cdf.grid().threshold(i + 1));
                cdf.density_at(mid).unwrap() * cdf.grid().bin_width(i)
            })
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_stay_in_unit_interval(
        reference in arb_cdf(),
        z_frac in 0.001..1.0f64,
        tau in 0.0..1.0f64,
        fallback in 0.0..1.0f64,
    ) {
        // The weight grid deliberately differs from the reference's grid.
        let grid = TimeGrid::uniform(reference.grid().upper(), 5, 0.0).unwrap();
        let z = z_frac * grid.upper();
        let obs = CensoredObservation::new(z, false).unwrap();
        let policy = WeightPolicy::new(fallback).unwrap();

        let pw = portnoy_weight(&reference, z, tau, &policy).unwrap();
        prop_assert!((0.0..=1.0).contains(&pw.w));

        for w in [
            cen_log_weights(&reference, &obs, &grid).unwrap(),
            cen_brier_weights(&reference, &obs, &grid).unwrap(),
            cen_rps_weights(&reference, &obs, &grid).unwrap(),
        ] {
            for &x in w.as_slice() {
                prop_assert!((0.0..=1.0).contains(&x));
            }
        }

        // Censored Cen-Brier weights sum to one.
        let wb = cen_brier_weights(&reference, &obs, &grid).unwrap();
        prop_assert!((wb.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn model_outputs_are_valid_distributions(
        params in prop::collection::vec(-40.0..40.0f64, 6),
        upper in 0.5..4.0f64,
    ) {
        let mut model = LogitModel::group_table(vec!["g".into()], 6).unwrap();
        model.params_mut().copy_from_slice(&params);
        let grid = TimeGrid::uniform(upper, 6, 1e-3).unwrap();
        let pred = model
            .predict_distribution(&Features::Group("g".into()), &grid)
            .unwrap();
        let sum: f64 = pred.masses().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        for i in 0..pred.bins() {
            prop_assert!(pred.mass(i) > 0.0);
            prop_assert!(pred.cdf_at_knot(i) < pred.cdf_at_knot(i + 1));
        }
        let curve = model
            .predict_quantiles(
                &Features::Group("g".into()),
                &survscore::grid::QuantileGrid::uniform(6).unwrap(),
                upper,
            )
            .unwrap();
        for pair in curve.values().windows(2) {
            prop_assert!(pair[1] > pair[0]);
        }
        prop_assert_eq!(curve.z_max(), upper);
    }

    #[test]
    fn csv_loader_accepts_generated_valid_files(
        rows in prop::collection::vec(
            (0usize..3, 0.001..100.0f64, any::<bool>()),
            1..40,
        ),
    ) {
        let mut text = String::from("group,time,event\n");
        for (g, t, e) in &rows {
            text.push_str(&format!("g{g},{t},{}\n", u8::from(*e)));
        }
        let data = io::parse_dataset_csv(&text, Some("group")).unwrap();
        prop_assert_eq!(data.len(), rows.len());
        // Serialize/parse round trip preserves the dataset.
        let again = io::parse_dataset_csv(&io::dataset_to_csv(&data), Some("group")).unwrap();
        prop_assert_eq!(&again, &data);
    }

    #[test]
    fn d_calibration_is_permutation_invariant(
        seedlings in prop::collection::vec((1e-3..1.0f64, 0.05..0.95f64, any::<bool>()), 2..30),
        flip in any::<u64>(),
    ) {
        let grid = TimeGrid::uniform(1.0, 3, 0.0).unwrap();
        let mut preds = Vec::new();
        let mut obs = Vec::new();
        for (m0, zf, e) in &seedlings {
            preds.push(BinMassCdf::new(grid.clone(), vec![*m0, 0.4, 0.4]).unwrap());
            obs.push(CensoredObservation::new(zf * grid.upper(), *e).unwrap());
        }
        let base = d_calibration(&preds, &obs, 10).unwrap();
        // Deterministic shuffle derived from `flip`.
        let mut idx: Vec<usize> = (0..preds.len()).collect();
        idx.rotate_left((flip as usize) % preds.len());
        let p2: Vec<_> = idx.iter().map(|&i| preds[i].clone()).collect();
        let o2: Vec<_> = idx.iter().map(|&i| obs[i]).collect();
        let shuffled = d_calibration(&p2, &o2, 10).unwrap();
        prop_assert!((base.statistic - shuffled.statistic).abs() < 1e-12);
    }

    #[test]
    fn sampled_datasets_respect_their_truth(seed in any::<u64>(), n in 1usize..200) {
        let spec = io::TruthSpec::default_two_group();
        let pop = spec.to_population().unwrap();
        let data = pop.sample(n, seed).unwrap();
        prop_assert_eq!(data.len(), n);
        for row in data.rows() {
            prop_assert!(row.obs.time() > 0.0 && row.obs.time() <= pop.upper());
        }
    }
}

#[test]
fn subset_preserves_rows_and_bound() {
    let rows: Vec<DatasetRow> = (0..10)
        .map(|i| DatasetRow {
            features: Features::Group("g".into()),
            obs: CensoredObservation::new(1.0 + i as f64, i % 2 == 0).unwrap(),
        })
        .collect();
    let data = SurvivalDataset::new(rows).unwrap();
    let sub = data.subset(&[0, 3, 7]).unwrap();
    assert_eq!(sub.len(), 3);
    assert_eq!(sub.z_max(), data.z_max());
}
