mod common;

use proptest::prelude::*;

use common::*;
use madogram::estimators::{
    empirical_margin_estimate, estimate, known_margin_estimate, lambda_madogram, lambda_slice,
    EstimatorKind, LambdaConvention, PreparedPair,
};
use madogram::m4::{analytic_madogram, simulate_m4};
use madogram::{region_maxima, DependenceQuery, Location, Margin, Panel, Region};

fn q(a: f64, b: f64) -> DependenceQuery {
    DependenceQuery::new(a, b).unwrap()
}

/// Straight from the definition, with an O(T^2) rank count.
fn oracle_empirical(panel: &Panel, x: &Region, y: &Region, a: f64, b: f64) -> f64 {
    let t = panel.n_rows();
    let cols: Vec<Vec<f64>> = (0..panel.n_cols()).map(|c| panel.column(c)).collect();
    let u = |c: usize, r: usize| {
        cols[c].iter().filter(|v| **v <= cols[c][r]).count() as f64 / t as f64
    };
    let idx = |r: &Region| -> Vec<usize> {
        r.locations().iter().map(|l| panel.column_index(l).unwrap()).collect()
    };
    let (ix, iy) = (idx(x), idx(y));
    let mut sum = 0.0;
    for r in 0..t {
        let mx = ix.iter().map(|&c| u(c, r)).fold(0.0, f64::max);
        let my = iy.iter().map(|&c| u(c, r)).fold(0.0, f64::max);
        sum += (mx.powf(a) - my.powf(b)).abs();
    }
    sum / (2.0 * t as f64)
}

#[test]
fn empirical_estimate_matches_definition() {
    let (spec, x, y) = example(2);
    let panel = simulate_m4(&spec, &union_locations(&x, &y), 300, 5).unwrap();
    for (a, b) in [(1.0, 1.0), (0.3, 2.5), (7.0, 0.5)] {
        let got = empirical_margin_estimate(&panel, &x, &y, q(a, b)).unwrap().nu_hat;
        assert!((got - oracle_empirical(&panel, &x, &y, a, b)).abs() < 1e-12);
    }
}

#[test]
fn known_margin_errors_are_unbiased() {
    let (spec, x, y) = example(1);
    let cell = q(1.0, 1.0);
    let truth = analytic_madogram(&spec, &x, &y, cell).unwrap().nu;
    let locs = union_locations(&x, &y);
    let (r, t) = (1000, 100);
    let mut sum = 0.0;
    let mut var = 0.0;
    for seed in 0..r {
        let panel = simulate_m4(&spec, &locs, t, 1_000 + seed).unwrap();
        let est = known_margin_estimate(&panel, &x, &y, cell).unwrap();
        sum += est.nu_hat;
        var += est.sigma2_hat;
    }
    let mean = sum / r as f64;
    let sigma = (var / r as f64).sqrt();
    assert!((mean - truth).abs() < 4.0 * sigma / ((r * t as u64) as f64).sqrt());
}

#[test]
fn empirical_estimator_is_consistent() {
    let (spec, x, y) = example(2);
    let cell = q(0.5, 2.0);
    let truth = analytic_madogram(&spec, &x, &y, cell).unwrap().nu;
    let locs = union_locations(&x, &y);
    let medians: Vec<f64> = [100, 1_000, 10_000]
        .iter()
        .map(|&t| {
            let mut errs: Vec<f64> = (0..20)
                .map(|s| {
                    let panel = simulate_m4(&spec, &locs, t, 70 + s).unwrap();
                    (empirical_margin_estimate(&panel, &x, &y, cell).unwrap().nu_hat - truth).abs()
                })
                .collect();
            median(&mut errs)
        })
        .collect();
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

#[test]
fn swapping_regions_swaps_exponents() {
    let (spec, x, y) = example(3);
    let panel = simulate_m4(&spec, &union_locations(&x, &y), 200, 2).unwrap();
    for kind in [EstimatorKind::KnownMargins, EstimatorKind::EmpiricalMargins] {
        let a = estimate(&panel, &x, &y, q(0.4, 3.0), kind).unwrap().nu_hat;
        let b = estimate(&panel, &y, &x, q(3.0, 0.4), kind).unwrap().nu_hat;
        assert_eq!(a, b);
    }
}

#[test]
fn region_order_and_extra_columns_do_not_matter() {
    let (spec, x, y) = example(3);
    let locs = union_locations(&x, &y);
    let panel = simulate_m4(&spec, &locs, 150, 8).unwrap();
    let base = empirical_margin_estimate(&panel, &x, &y, q(1.3, 0.7)).unwrap().nu_hat;

    let mut rev_x = x.locations().to_vec();
    rev_x.reverse();
    let rx = Region::new(rev_x).unwrap();
    assert_eq!(
        empirical_margin_estimate(&panel, &rx, &y, q(1.3, 0.7)).unwrap().nu_hat,
        base
    );

    let mut perm: Vec<usize> = (0..locs.len()).collect();
    perm.reverse();
    let permuted_locs: Vec<Location> = perm.iter().map(|&c| locs[c]).collect();
    let rows: Vec<Vec<f64>> = panel
        .rows()
        .map(|r| {
            let mut v: Vec<f64> = perm.iter().map(|&c| r[c]).collect();
            v.push(1.0);
            v
        })
        .collect();
    let mut wider = permuted_locs;
    wider.push(Location::new(99, 99));
    let permuted = Panel::new(wider, rows, Margin::UnitFrechet).unwrap();
    let got = empirical_margin_estimate(&permuted, &x, &y, q(1.3, 0.7)).unwrap().nu_hat;
    assert!((got - base).abs() < 1e-15);
}

#[test]
fn lambda_half_on_singletons_matches_closed_form() {
    let (spec, _, _) = example(1);
    let a = Location::new(2, 2);
    let b = Location::new(3, 3);
    let (x, y) = (Region::new(vec![a]).unwrap(), Region::new(vec![b]).unwrap());
    let truth = analytic_madogram(&spec, &x, &y, q(0.5, 0.5)).unwrap().nu;
    let panel = simulate_m4(&spec, &[a, b], 100_000, 12).unwrap();
    let pair = PreparedPair::known_margins(&panel, &x, &y).unwrap();
    let est = pair.estimate(q(0.5, 0.5));
    assert!((est.nu_hat - truth).abs() < 3.0 * est.standard_error());
    let lam = lambda_madogram(&panel, a, b, 0.5, EstimatorKind::KnownMargins).unwrap();
    assert_eq!(lam, est.nu_hat);
}

#[test]
fn per_location_slice_reduces_to_lambda_madogram() {
    let (spec, _, _) = example(2);
    let a = Location::new(1, 1);
    let b = Location::new(3, 2);
    let panel = simulate_m4(&spec, &[a, b], 250, 4).unwrap();
    let x = Region::new(vec![a]).unwrap();
    let y = Region::new(vec![b]).unwrap();
    let lambdas = [0.1, 0.25, 0.5, 0.9];
    let s = lambda_slice(&panel, &x, &y, &lambdas, LambdaConvention::PerLocation).unwrap();
    for (i, l) in lambdas.iter().enumerate() {
        let direct = lambda_madogram(&panel, a, b, *l, EstimatorKind::EmpiricalMargins).unwrap();
        assert_eq!(s.values[i], direct);
    }
}

#[test]
fn figure9_slice_uses_halved_exponents() {
    let (spec, x, y) = example(1);
    let panel = simulate_m4(&spec, &union_locations(&x, &y), 120, 9).unwrap();
    let s = lambda_slice(&panel, &x, &y, &[0.3], LambdaConvention::Figure9).unwrap();
    let direct = empirical_margin_estimate(&panel, &x, &y, q(s.alphas[0], s.betas[0])).unwrap();
    assert_eq!(s.values[0], direct.nu_hat);
}

fn arb_raw_panel() -> impl Strategy<Value = Panel> {
    (2usize..60).prop_flat_map(|t| {
        prop::collection::vec(prop::collection::vec(0.01f64..500.0, 3), t).prop_map(|rows| {
            let locs = vec![Location::new(0, 0), Location::new(0, 1), Location::new(1, 0)];
            Panel::new(locs, rows, Margin::Raw).unwrap()
        })
    })
}

fn region_of(ids: &[usize]) -> Region {
    let all = [Location::new(0, 0), Location::new(0, 1), Location::new(1, 0)];
    Region::new(ids.iter().map(|&i| all[i]).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 96,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn monotone_transform_invariance(panel in arb_raw_panel(), a in 0.1f64..10.0, b in 0.1f64..10.0) {
        let x = region_of(&[0, 1]);
        let y = region_of(&[2]);
        let base = empirical_margin_estimate(&panel, &x, &y, q(a, b)).unwrap().nu_hat;
        let rows: Vec<Vec<f64>> = panel
            .rows()
            .map(|r| vec![r[0].ln(), 3.0 * r[1] + 7.0, r[2].powi(3)])
            .collect();
        let moved = Panel::new(panel.locations().to_vec(), rows, Margin::Raw).unwrap();
        prop_assert_eq!(empirical_margin_estimate(&moved, &x, &y, q(a, b)).unwrap().nu_hat, base);
    }

    #[test]
    fn row_permutation_invariance(panel in arb_raw_panel(), shift in 0usize..60) {
        let x = region_of(&[0]);
        let y = region_of(&[1, 2]);
        let base = empirical_margin_estimate(&panel, &x, &y, q(0.7, 1.9)).unwrap().nu_hat;
        let n = panel.n_rows();
        let rows: Vec<Vec<f64>> = (0..n).map(|t| panel.row((t + shift) % n).to_vec()).collect();
        let rotated = Panel::new(panel.locations().to_vec(), rows, Margin::Raw).unwrap();
        let got = empirical_margin_estimate(&rotated, &x, &y, q(0.7, 1.9)).unwrap().nu_hat;
        prop_assert!((got - base).abs() < 1e-14);
    }

    #[test]
    fn estimates_stay_in_range(panel in arb_raw_panel(), a in 0.01f64..50.0, b in 0.01f64..50.0) {
        let x = region_of(&[0]);
        let y = region_of(&[1, 2]);
        let e = empirical_margin_estimate(&panel, &x, &y, q(a, b)).unwrap();
        prop_assert!(e.nu_hat >= 0.0 && e.nu_hat <= 0.5);
        prop_assert!(e.sigma2_hat >= 0.0);
        let fr = panel.clone().with_margin(Margin::UnitFrechet).unwrap();
        let k = known_margin_estimate(&fr, &x, &y, q(a, b)).unwrap();
        prop_assert!(k.nu_hat >= 0.0 && k.nu_hat <= 0.5);
    }

    #[test]
    fn region_maxima_monotone_and_union(panel in arb_raw_panel()) {
        let small = region_maxima(&panel, &region_of(&[0])).unwrap();
        let big = region_maxima(&panel, &region_of(&[0, 1])).unwrap();
        let other = region_maxima(&panel, &region_of(&[2])).unwrap();
        let all = region_maxima(&panel, &region_of(&[0, 1, 2])).unwrap();
        for t in 0..panel.n_rows() {
            prop_assert!(small[t] <= big[t]);
            prop_assert_eq!(all[t], big[t].max(other[t]));
        }
    }

    #[test]
    fn lambda_reduction_is_exact(panel in arb_raw_panel(), lambda in 0.001f64..0.999) {
        let a = Location::new(0, 1);
        let b = Location::new(1, 0);
        let general = empirical_margin_estimate(
            &panel,
            &Region::new(vec![a]).unwrap(),
            &Region::new(vec![b]).unwrap(),
            q(lambda, 1.0 - lambda),
        )
        .unwrap()
        .nu_hat;
        let direct = lambda_madogram(&panel, a, b, lambda, EstimatorKind::EmpiricalMargins).unwrap();
        prop_assert_eq!(general.to_bits(), direct.to_bits());
    }
}
