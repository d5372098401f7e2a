use proptest::prelude::*;

use netpricing::connectivity::{bundle_demand, bundle_optimal, hybrid_optimal, hybrid_optimal_with, sep_demands, sep_optimal};
use netpricing::content::{
    bundle_demand_content, bundled_optimal_content, bundled_optimal_content_with, bundled_regime, compare_content_with,
    regime_interval, regime_price,
};
use netpricing::fmt::g12;
use netpricing::numerics::{integrate_1d, scan_fixed_points, truncnorm_cdf_mass, RESIDUAL_TOL};
use netpricing::oracle::{best_response_equilibrium, build_population, Start};
use netpricing::regime::{emit_csv, sweep, SweepAxis, SweepSpec};
use netpricing::Strategy;
use netpricing::*;

fn cheap() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

fn costly(n: u32) -> ProptestConfig {
    ProptestConfig::with_cases(n)
}

proptest! {
    #![proptest_config(cheap())]

    #[test]
    fn validate_is_idempotent(c1 in -0.5..1.5f64, c2 in -0.5..1.5f64, g in -0.2..1.2f64) {
        let p = ModelParams::Connectivity(ConnectivityParams::new(c1, c2).with_gamma(g));
        let before = p;
        let (a, b) = (p.validate(), p.validate());
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(p, before);
        prop_assert_eq!(a.is_ok(), (0.0..=1.0).contains(&c1) && (0.0..=1.0).contains(&c2) && g > 0.0 && g <= 1.0);
    }

    #[test]
    fn single_crossing_gives_one_root(root in 0.01..0.99f64, s in 0.0..0.9f64) {
        let r = scan_fixed_points(|x| s * x + root * (1.0 - s), 0.0, 1.0, 1000);
        prop_assert_eq!(r.all_roots.len(), 1);
        prop_assert!((r.value - root).abs() < 1e-9);
        prop_assert!(r.residual <= RESIDUAL_TOL);
    }

    #[test]
    fn every_root_meets_the_residual(k in 1.0..6.0f64, shift in 0.0..0.5f64) {
        let g = |x: f64| 0.5 + 0.45 * (k * (x - shift)).sin();
        let r = scan_fixed_points(g, 0.0, 1.0, 10_000);
        prop_assert!(r.all_roots.windows(2).all(|w| w[0] < w[1]));
        for &x in &r.all_roots {
            prop_assert!((x - g(x)).abs() <= RESIDUAL_TOL);
        }
    }

    #[test]
    fn truncated_mass_is_one(lo in -2.0..0.0f64, w in 0.1..3.0f64, m in 0.01..0.99f64, sd in 0.01..2.0f64) {
        let hi = lo + w;
        let spec = DistributionSpec::truncated_normal(lo, hi, lo + m * w, sd);
        prop_assert!((truncnorm_cdf_mass(&spec, lo, hi) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn quadrature_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, hi in 0.5..4.0f64) {
        let f = |x: f64| (2.0 * x).sin();
        let g = |x: f64| (-x * x).exp();
        let mix = integrate_1d(|x| a * f(x) + b * g(x), 0.0, hi, 1e-10).unwrap();
        let sep = a * integrate_1d(f, 0.0, hi, 1e-10).unwrap() + b * integrate_1d(g, 0.0, hi, 1e-10).unwrap();
        prop_assert!((mix - sep).abs() <= 1e-9);
    }

    #[test]
    fn hybrid_premium_is_quarter_c2_squared(c1 in 0.0..1.0f64, t in 0.0..1.0f64) {
        let c2 = t * (1.0 - c1);
        let p = ConnectivityParams::new(c1, c2);
        let gap = hybrid_optimal(&p).unwrap().profit - bundle_optimal(&p).unwrap().profit;
        prop_assert!((gap - c2 * c2 / 4.0).abs() <= 1e-12, "gap {gap}");
    }

    #[test]
    fn separate_demand_inverts(p1 in 0.0..0.99f64, p2 in 0.0..1.0f64) {
        let d = sep_demands(p1, p2, &ConnectivityParams::new(0.0, 0.0)).unwrap();
        prop_assert!((0.0..=1.0).contains(&d.d1) && (0.0..=1.0).contains(&d.d2));
        if d.d2 > 0.0 && d.d2 < 1.0 {
            prop_assert!((p2 - (1.0 - d.d2) * d.d1).abs() <= 1e-10);
        }
    }

    #[test]
    fn bundle_demand_closed_form(p12 in 0.75..=1.0f64) {
        let d = bundle_demand(p12, &ConnectivityParams::new(0.0, 0.0)).unwrap();
        let want = 0.5 * (1.0 + (4.0 * p12 - 3.0).sqrt());
        prop_assert!((d.d12 - want).abs() <= 1e-12);
        prop_assert!((d.d12 * (1.0 - d.d12) - (1.0 - p12)).abs() <= 1e-10);
    }

    #[test]
    fn separate_price_tracks_device_cost(c1 in 0.0..0.9f64, dc in 0.0..0.1f64, c2 in 0.0..1.0f64) {
        let a = sep_optimal(&ConnectivityParams::new(c1, c2)).unwrap();
        let b = sep_optimal(&ConnectivityParams::new(c1 + dc, c2)).unwrap();
        if let (Some(x), Some(y)) = (a.prices.p1, b.prices.p1) {
            prop_assert!(y >= x - 1e-9, "{x} then {y}");
        }
    }

    #[test]
    fn bundle_profit_falls_with_cost(c1 in 0.0..0.45f64, c2 in 0.0..0.45f64, dc in 0.001..0.1f64) {
        let a = bundle_optimal(&ConnectivityParams::new(c1, c2)).unwrap().profit;
        let b = bundle_optimal(&ConnectivityParams::new(c1 + dc, c2)).unwrap().profit;
        prop_assert!(b < a);
    }

    #[test]
    fn profit_identity(c1 in 0.0..1.0f64, c2 in 0.0..1.0f64) {
        let p = ConnectivityParams::new(c1, c2);
        for s in [sep_optimal(&p).unwrap(), bundle_optimal(&p).unwrap(), hybrid_optimal(&p).unwrap()] {
            prop_assert!((s.profit - profit_of(&s.prices, &s.demands, c1, c2)).abs() <= 1e-10);
            let d = s.demands;
            prop_assert!([d.d1, d.d2, d.d12].iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(d.d1 + d.d12 <= 1.0 + 1e-12);
            if !s.service_offered {
                prop_assert_eq!((d.d2, d.d12), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn content_regime_partition(c in 0.0..2.0f64, lambda in 0.05..2.5f64, tb in 1.0..2.0f64) {
        let p = ContentParams::new(0.5 * c, 0.5 * c, lambda, tb);
        let class = bundled_regime(&p).unwrap();
        let Some(sol) = bundled_optimal_content(&p).ok() else { return Ok(()) };
        prop_assert_eq!(sol.regime, Some(class.regime));
        let (lo, hi) = regime_interval(class.regime, tb);
        let d = sol.demands.d12;
        if d > 0.0 {
            prop_assert!(d >= lo - 1e-9 && d <= hi + 1e-9, "{:?} d {d} not in [{lo}, {hi}]", class.regime);
            let p12 = sol.prices.p12.unwrap();
            prop_assert!((regime_price(class.regime, d, tb, lambda) - p12).abs() <= 1e-8);
        }
        prop_assert!((sol.profit - profit_of(&sol.prices, &sol.demands, p.c1, p.c2)).abs() <= 1e-10);
    }

    #[test]
    fn population_mass_is_one(n in 1usize..5000, mu in 0.1..0.9f64, sd in 0.05..0.5f64) {
        let p = ModelParams::Connectivity(
            ConnectivityParams::new(0.2, 0.3).with_alpha(DistributionSpec::truncated_normal(0.0, 1.0, mu, sd)),
        );
        let pop = build_population(&p, n);
        let total: f64 = pop.users.iter().map(|u| u.weight()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(pop.users.iter().all(|u| u.weight() >= 0.0));
    }

    #[test]
    fn full_start_descends(p12 in 0.75..=1.0f64) {
        let p = ModelParams::Connectivity(ConnectivityParams::new(0.0, 0.0));
        let pop = build_population(&p, 2000);
        let t = best_response_equilibrium(&pop, Strategy::Bundled, &PriceProfile::bundled(p12), &p, Start::FromFull).unwrap();
        prop_assert!(t.converged && t.iterations <= 100_000);
        prop_assert!(t.demand_path.windows(2).all(|w| w[1].d12 <= w[0].d12));
    }

    #[test]
    fn g12_round_trips(x in prop::num::f64::NORMAL) {
        let back: f64 = g12(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs());
    }
}

proptest! {
    #![proptest_config(costly(12))]

    #[test]
    fn oracle_is_deterministic(p1 in 0.3..0.95f64, dp in 0.0..0.3f64) {
        let p = ModelParams::Connectivity(ConnectivityParams::new(0.2, 0.3));
        let pop = build_population(&p, 1000);
        let prices = PriceProfile::hybrid(p1, (p1 + dp).min(1.0));
        let a = best_response_equilibrium(&pop, Strategy::Hybrid, &prices, &p, Start::Seed(0.4)).unwrap();
        let b = best_response_equilibrium(&pop, Strategy::Hybrid, &prices, &p, Start::Seed(0.4)).unwrap();
        prop_assert_eq!(a.demand_path, b.demand_path);
        prop_assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn content_bundle_demand_grows_with_omega(w in 0.6..1.4f64, dw in 0.01..0.3f64, p12 in 0.3..2.0f64) {
        let base = ContentParams::new(0.3, 0.3, 0.95, 1.5);
        let a = bundle_demand_content(p12, &base.with_omega(w)).unwrap().d12;
        let b = bundle_demand_content(p12, &base.with_omega(w + dw)).unwrap().d12;
        prop_assert!(b >= a - 1e-9, "{a} then {b}");
    }

    #[test]
    fn sweep_winner_attains_max(c1 in 0.0..0.5f64, c2 in 0.0..0.5f64) {
        let spec = SweepSpec::new(
            ModelParams::Connectivity(ConnectivityParams::new(0.0, 0.0)),
            SweepAxis::new("c1", c1, c1 + 0.5, 3),
            SweepAxis::new("c2", c2, c2 + 0.5, 3),
        );
        let map = sweep(&spec, &SearchConfig::sweep()).unwrap();
        prop_assert_eq!(map.cells.len(), 9);
        for c in &map.cells {
            let best = [c.profit_separate, c.profit_bundled, c.profit_hybrid].into_iter().flatten().fold(f64::MIN, f64::max);
            let w = match c.winner.as_deref() {
                Some("separate") | Some("device_only") => c.profit_separate,
                Some("bundled") => c.profit_bundled,
                Some("hybrid") => c.profit_hybrid,
                other => panic!("winner {other:?}"),
            };
            prop_assert!(w.unwrap() >= best - 1e-9 * (1.0 + best.abs()));
        }
        let (mut x, mut y) = (Vec::new(), Vec::new());
        emit_csv(&map, &mut x).unwrap();
        emit_csv(&sweep(&spec, &SearchConfig::sweep()).unwrap(), &mut y).unwrap();
        prop_assert_eq!(x, y);
    }
}

proptest! {
    #![proptest_config(costly(4))]

    #[test]
    fn normal_hybrid_beats_bundle(mu in 0.2..0.8f64, sd in 0.1..0.3f64, c1 in 0.0..0.4f64, c2 in 0.05..0.4f64) {
        let p = ConnectivityParams::new(c1, c2).with_alpha(DistributionSpec::truncated_normal(0.0, 1.0, mu, sd));
        let cfg = SearchConfig::sweep();
        let h = hybrid_optimal_with(&p, &cfg).unwrap().profit;
        let b = netpricing::connectivity::bundle_optimal_with(&p, &cfg).unwrap().profit;
        prop_assert!(h > b, "hybrid {h} bundled {b}");
    }

    #[test]
    fn content_hybrid_never_loses(c1 in 0.0..0.6f64, c2 in 0.0..0.6f64, lambda in 0.1..2.0f64) {
        let p = ContentParams::new(c1, c2, lambda, 1.5);
        let cmp = compare_content_with(&p, &SearchConfig::sweep()).unwrap();
        if let Some(b) = &cmp.bundled {
            prop_assert!(cmp.hybrid.profit >= b.profit - 1e-9 * (1.0 + b.profit.abs()));
        }
        let b = bundled_optimal_content_with(&p, &SearchConfig::sweep());
        if let (Ok(x), Some(y)) = (b, &cmp.bundled) {
            prop_assert_eq!(x.profit, y.profit);
        }
    }
}

fn bundled_cells(lambda: f64, omega: f64) -> Vec<(usize, bool)> {
    let spec = SweepSpec::new(
        ModelParams::Content(ContentParams::new(0.0, 0.0, lambda, 1.5).with_omega(omega)),
        SweepAxis::new("c1", 0.0, 1.0, 5),
        SweepAxis::new("c2", 0.0, 1.0, 5),
    );
    let map = sweep(&spec, &SearchConfig::sweep()).unwrap();
    map.cells.iter().enumerate().map(|(i, c)| (i, c.winner.as_deref() == Some("bundled"))).collect()
}

fn never_shrinks(sets: &[Vec<(usize, bool)>]) -> Result<(), String> {
    for pair in sets.windows(2) {
        for ((i, before), (_, after)) in pair[0].iter().zip(&pair[1]) {
            if *before && !*after {
                return Err(format!("cell {i} left the bundled region"));
            }
        }
    }
    Ok(())
}

#[test]
fn bundled_region_grows_with_lambda() {
    let sets: Vec<_> = [0.85, 0.9, 0.95].iter().map(|&l| bundled_cells(l, 1.0)).collect();
    never_shrinks(&sets).unwrap();
}

#[test]
fn bundled_region_grows_with_omega() {
    let sets: Vec<_> = [0.9, 1.0, 1.1].iter().map(|&w| bundled_cells(0.95, w)).collect();
    never_shrinks(&sets).unwrap();
}
