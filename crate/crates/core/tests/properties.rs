//! Invariants across modules: metric properties of W_q, distortion coefficients,
//! gradient scaling and parser robustness.

use biplab::curvature::{sigma, tau};
use biplab::generators;
use biplab::io::{
    measure_to_json, parse_measure_str, parse_pairs_str, parse_plan_str, parse_pmgh_str, parse_profile_str,
    parse_report_str, parse_space_str, space_to_json,
};
use biplab::sobolev::{build_geod_family, minimal_weak_upper_gradient};
use biplab::transport::{wasserstein, ProbMeasure};
use biplab::{FiniteMetricMeasureSpace, RealFunction};
use proptest::prelude::*;

fn space_strategy() -> impl Strategy<Value = FiniteMetricMeasureSpace> {
    (3usize..7).prop_flat_map(|n| {
        (
            prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), n),
            prop::collection::vec(0.1f64..2.0, n),
        )
            .prop_map(|(pts, w)| {
                let dist = pts
                    .iter()
                    .map(|a| {
                        pts.iter()
                            .map(|b| (a.0 - b.0).hypot(a.1 - b.1) + 0.01 * f64::from(a != b))
                            .collect()
                    })
                    .collect();
                FiniteMetricMeasureSpace::from_matrix(dist, w).unwrap()
            })
    })
}

fn measure(n: usize, raw: &[f64]) -> ProbMeasure {
    ProbMeasure::normalize(raw[..n].to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wasserstein_is_a_metric(
        s in space_strategy(),
        a in prop::collection::vec(0.01f64..1.0, 7),
        b in prop::collection::vec(0.01f64..1.0, 7),
        c in prop::collection::vec(0.01f64..1.0, 7),
        q in 1.0f64..4.0,
    ) {
        let n = s.n();
        let (a, b, c) = (measure(n, &a), measure(n, &b), measure(n, &c));
        let ab = wasserstein(&s, q, &a, &b).unwrap().cost;
        let ba = wasserstein(&s, q, &b, &a).unwrap().cost;
        let bc = wasserstein(&s, q, &b, &c).unwrap().cost;
        let ac = wasserstein(&s, q, &a, &c).unwrap().cost;
        prop_assert!((ab - ba).abs() <= 1e-9 * ab.max(1.0));
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!(wasserstein(&s, q, &a, &a).unwrap().cost <= 1e-12);
    }

    #[test]
    fn sigma_is_monotone_in_k(n in 1.5f64..8.0, t in 0.01f64..0.99, theta in 0.05f64..1.5, k in 0.01f64..1.0) {
        let lo = sigma(-k, n, t, theta).unwrap().finite().unwrap();
        let mid = sigma(0.0, n, t, theta).unwrap().finite().unwrap();
        let hi = sigma(k, n, t, theta).unwrap().finite().unwrap();
        prop_assert!(lo <= mid + 1e-12 && mid <= hi + 1e-12);
        prop_assert!((mid - t).abs() < 1e-15);
    }

    #[test]
    fn sigma_is_continuous_at_zero(n in 1.5f64..8.0, t in 0.01f64..0.99, theta in 0.05f64..2.0) {
        for k in [1e-7, -1e-7] {
            let v = sigma(k, n, t, theta).unwrap().finite().unwrap();
            prop_assert!((v - t).abs() < 1e-6);
        }
    }

    #[test]
    fn tau_interpolates_between_t_and_sigma(n in 1.5f64..8.0, t in 0.01f64..0.99, theta in 0.05f64..1.5, k in -1.0f64..1.0) {
        let v = tau(k, n, t, theta).unwrap().finite().unwrap();
        let s = sigma(k, n - 1.0, t, theta).unwrap().finite().unwrap();
        let expected = t.powf(1.0 / n) * s.powf(1.0 - 1.0 / n);
        prop_assert!((v - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn parsers_never_panic(text in ".{0,200}") {
        let _ = parse_space_str(&text);
        let _ = parse_measure_str(&text);
        let _ = parse_pairs_str(&text);
        let _ = parse_plan_str(&text);
        let _ = parse_profile_str(&text);
        let _ = parse_pmgh_str(&text);
        let _ = parse_report_str(&text);
    }

    #[test]
    fn parsers_survive_numeric_json(vals in prop::collection::vec(prop_oneof![Just(f64::NAN), Just(-1.0), Just(0.0), -1e300f64..1e300], 0..6)) {
        let list = format!("[{}]", vals.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(","));
        let _ = parse_measure_str(&list);
        let _ = parse_space_str(&format!(r#"{{"n":{},"weights":{list},"edges":[[0,1,{}]]}}"#, vals.len(), vals.first().copied().unwrap_or(1.0)));
        let _ = parse_space_str(&format!(r#"{{"weights":{list},"distances":[{list}]}}"#));
        let _ = parse_profile_str(&format!(r#"{{"kind":"sampled","samples":[[0,1]],"values":{list}}}"#));
    }

    #[test]
    fn space_json_round_trips(s in space_strategy(), raw in prop::collection::vec(0.0f64..1.0, 7)) {
        let back = parse_space_str(&space_to_json(&s)).unwrap();
        prop_assert_eq!(back.n(), s.n());
        for x in 0..s.n() {
            prop_assert_eq!(back.weight(x), s.weight(x));
            for y in 0..s.n() {
                prop_assert_eq!(back.d(x, y), s.d(x, y));
            }
        }
        let mut raw = raw;
        raw[0] += 0.5;
        let mu = measure(s.n(), &raw);
        let mu_back = parse_measure_str(&measure_to_json(&mu)).unwrap();
        prop_assert!(mu_back.sup_distance(&mu) <= 1e-15);
    }
}

#[test]
fn minimal_gradient_scales_and_ignores_constants() {
    let s = generators::line(7, 1.0, 1.0);
    let base: Vec<f64> = vec![0.0, 1.0, 3.0, 2.0, 2.5, 4.0, 1.0];
    let family = build_geod_family(&s, 2.0, 1, 21).unwrap();
    let grad = |vals: Vec<f64>| {
        let f = RealFunction::from_fn(7, |i| vals[i]);
        minimal_weak_upper_gradient(&s, &f, 2.0, &family).unwrap().gradient
    };
    let g = grad(base.clone());
    let scaled = grad(base.iter().map(|v| -3.0 * v).collect());
    let shifted = grad(base.iter().map(|v| v + 10.0).collect());
    for x in 0..7 {
        let (a, b, c) = (g.values()[x], scaled.values()[x], shifted.values()[x]);
        assert!((b - 3.0 * a).abs() <= 1e-6 * (1.0 + a), "point {x}: {b} vs 3 * {a}");
        assert!((c - a).abs() <= 1e-6 * (1.0 + a), "point {x}: {c} vs {a}");
    }
    // on a line the minimal gradient of f is its slope on each edge pair
    let linear = grad((0..7).map(|i| 2.0 * i as f64).collect());
    assert!(linear.values().iter().all(|v| (v - 2.0).abs() < 1e-3));
}

type Accepts = fn(&str) -> bool;

#[test]
fn fuzz_seeds_parse() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let parsers: [(&str, Accepts); 8] = [
        ("parse_space", |t| parse_space_str(t).is_ok()),
        ("parse_measure", |t| parse_measure_str(t).is_ok()),
        ("parse_pairs", |t| parse_pairs_str(t).is_ok()),
        ("parse_plan", |t| parse_plan_str(t).is_ok()),
        ("parse_profile", |t| parse_profile_str(t).is_ok()),
        ("parse_pmgh", |t| parse_pmgh_str(t).is_ok()),
        ("parse_report", |t| parse_report_str(t).is_ok()),
        ("parse_function", |t| biplab::io::parse_function_str(t).is_ok()),
    ];
    for (dir, parse) in parsers {
        let entries: Vec<_> = std::fs::read_dir(root.join(dir))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        assert!(!entries.is_empty(), "{dir} has no seeds");
        for path in entries {
            let text = std::fs::read_to_string(&path).unwrap();
            assert!(parse(&text), "{} does not parse", path.display());
        }
    }
}
