use aerial_market::config::{Scenario, ScenarioConfig};
use aerial_market::cooperation::shapley_split;
use aerial_market::dynamics::{
    logistic_mean_integral, transition_coefficients, MarketModel, MarketState, ServiceQualities, TasteAveraging,
};
use aerial_market::equilibrium::{
    bertrand_stage2_prices, consumer_surplus, consumer_surplus_by_integration, solve, EconParams, Game,
};
use aerial_market::geometry::{beam_area_ratio, q_los, q_nlos, CrowdParams};
use aerial_market::quality::{demands, quality, QualityParams};
use proptest::prelude::*;
use std::sync::OnceLock;

fn scenario() -> &'static Scenario {
    static S: OnceLock<Scenario> = OnceLock::new();
    S.get_or_init(|| Scenario::new(ScenarioConfig::default()).unwrap())
}

fn model(g: Game, coop: bool) -> &'static MarketModel<f64> {
    static M: OnceLock<Vec<MarketModel<f64>>> = OnceLock::new();
    let all = M.get_or_init(|| {
        let s = scenario();
        [
            (Game::Bertrand, false),
            (Game::Bertrand, true),
            (Game::Cournot, false),
            (Game::Cournot, true),
        ]
        .into_iter()
        .map(|(g, c)| s.model(g, c).unwrap())
        .collect()
    });
    &all[usize::from(g == Game::Cournot) * 2 + usize::from(coop)]
}

fn game() -> impl Strategy<Value = Game> {
    prop_oneof![Just(Game::Bertrand), Just(Game::Cournot)]
}

fn crowd() -> CrowdParams<f64> {
    ScenarioConfig::default().crowd()
}

proptest! {
    #[test]
    fn quality_is_increasing(b in 0.0..5.0f64, c in 0.0..0.1f64, t in 0.0..500.0f64, dt in 1e-3..50.0f64) {
        let q = QualityParams::new(b, c, 100.0).unwrap();
        prop_assert!(quality(t + dt, &q).unwrap() > quality(t, &q).unwrap());
    }

    #[test]
    fn demands_are_a_partition(s1 in 0.2..3.0f64, frac in 0.05..0.95f64, p1 in 0.0..200.0f64, p2 in 0.0..200.0f64) {
        let s2 = s1 * frac;
        let (d1, d2) = demands(s1, s2, p1, p2, 150.0);
        prop_assert!(d1 >= 0.0 && d2 >= 0.0);
        prop_assert!(d1 + d2 <= 1.0 + 1e-12);
    }

    #[test]
    fn equilibrium_is_ordered(g in game(), s in 0.3..3.0f64, th in 1.0..300.0f64, r in 0.0..0.95f64) {
        let e = solve(g, &EconParams::new(s, th, th * r).unwrap()).unwrap();
        prop_assert!(e.s1 >= e.s2 && e.d1 >= e.d2 - 1e-12);
        prop_assert!(e.d1 + e.d2 <= 1.0 + 1e-12);
        prop_assert!(e.profit1 >= e.profit2 - 1e-9 * e.profit1.abs().max(1.0));
        prop_assert!(e.points.theta_none_2 <= e.points.theta_1_2 + 1e-9);
    }

    #[test]
    fn surplus_closed_form_matches_integral(s1 in 0.3..3.0f64, frac in 0.1..0.9f64, th in 1.0..300.0f64, r in 0.0..0.9f64) {
        let econ = EconParams::new(s1, th, th * r).unwrap();
        let s2 = s1 * frac;
        let (p1, p2) = bertrand_stage2_prices(s1, s2, &econ).unwrap();
        let closed = consumer_surplus(Game::Bertrand, s1, s2, &econ);
        let direct = consumer_surplus_by_integration(s1, s2, p1, p2, th);
        prop_assert!((closed - direct).abs() <= 1e-8 * closed.abs().max(1.0));
    }

    #[test]
    fn logistic_integral_is_bounded(lo in 0.0..100.0f64, w in 0.0..100.0f64, k in -1.0..1.0f64, o in -50.0..50.0f64) {
        let hi = lo + w;
        let v = logistic_mean_integral(lo, hi, k, o, 200.0);
        prop_assert!(v.abs() <= w / 200.0 + 1e-12);
        // Odd in the joint sign of slope and offset.
        let m = logistic_mean_integral(lo, hi, -k, -o, 200.0);
        prop_assert!((v + m).abs() <= 1e-12);
    }

    #[test]
    fn coefficients_are_probabilities(
        g in game(),
        s0 in 0.0..3.0f64, s1 in 0.0..3.0f64, s2 in 0.0..3.0f64,
        p0 in 0.0..300.0f64, c_u in 0.01..1.0f64,
        population in any::<bool>(),
    ) {
        let econ = scenario().econ;
        let eq = solve(g, &econ).unwrap();
        let averaging = if population { TasteAveraging::Population } else { TasteAveraging::Group };
        let q = transition_coefficients(g, &eq, &ServiceQualities { s0, s1, s2 }, p0, c_u, econ.theta_max, averaging);
        for v in q.as_array() {
            prop_assert!((0.0..=1.0).contains(&v), "{v}");
        }
    }

    #[test]
    fn derivative_keeps_the_box(
        g in game(), coop in any::<bool>(),
        u in proptest::array::uniform6(0.0..1.0f64),
        p_scale in 0.0..3.0f64,
    ) {
        let m = model(g, coop);
        let d = m.demands();
        let z_room = if coop { 1.0 } else { 0.0 };
        let y1 = d[1] * u[1];
        let y2 = d[2] * u[2];
        let s = MarketState {
            y0: d[0] * u[0],
            y1,
            y2,
            z1: (d[1] - y1) * u[3] * z_room,
            z2: (d[2] - y2) * u[4] * z_room,
            p0: m.equilibrium.p2 * p_scale,
        };
        let f = m.derivative(&s);
        let h = 1e-9;
        let n = MarketState::from_array(std::array::from_fn(|i| s.to_array()[i] + h * f[i]));
        for v in [n.y0, n.y1, n.y2, n.z1, n.z2] {
            prop_assert!(v >= -1e-15);
        }
        prop_assert!(n.y0 <= d[0] + 1e-15);
        prop_assert!(n.y1 + n.z1 <= d[1] + 1e-15);
        prop_assert!(n.y2 + n.z2 <= d[2] + 1e-15);
    }

    #[test]
    fn shapley_is_efficient_and_symmetric(v1 in -100.0..100.0f64, v2 in -100.0..100.0f64, v12 in -200.0..200.0f64) {
        let [a, b] = shapley_split(v1, v2, v12);
        prop_assert!((a + b - v12).abs() <= 1e-12 * v12.abs().max(1.0));
        let [c, d] = shapley_split(v2, v1, v12);
        prop_assert!((a - d).abs() <= 1e-12 * v12.abs().max(100.0) && (b - c).abs() <= 1e-12 * v12.abs().max(100.0));
        prop_assert!(((a - v1) - (b - v2)).abs() <= 1e-12 * v12.abs().max(1.0));
    }

    #[test]
    fn link_states_are_probabilities(d in 0.0..25.0f64, h in 5.0..40.0f64, phi in 0.05..0.6f64) {
        let c = crowd();
        let los = q_los(d, &c, h).unwrap();
        prop_assert!((0.0..=1.0).contains(&los));
        let reach = h * (phi.cos().powi(2).recip() - 1.0).sqrt();
        prop_assume!(d < 0.99 * reach);
        let nlos = q_nlos(d, &c, h, phi).unwrap();
        prop_assert!((0.0..=1.0).contains(&nlos));
        prop_assert!(los + nlos <= 1.0 + 1e-12);
        let r = beam_area_ratio(d, h, phi).unwrap();
        prop_assert!(r >= 1.0);
        prop_assert!(beam_area_ratio(d * 0.5, h, phi).unwrap() <= r);
    }
}
