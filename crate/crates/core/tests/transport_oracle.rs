use biplab::generators;
use biplab::transport::{brute_force_wasserstein, wasserstein, ProbMeasure};
use biplab::FiniteMetricMeasureSpace;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_space(rng: &mut ChaCha8Rng, n: usize) -> FiniteMetricMeasureSpace {
    // points in the plane give a genuine metric with many distinct distances
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    let dist = pts
        .iter()
        .map(|a| {
            pts.iter()
                .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                .collect()
        })
        .collect();
    FiniteMetricMeasureSpace::from_matrix(dist, vec![1.0; n]).unwrap()
}

fn random_measure(rng: &mut ChaCha8Rng, n: usize, support: usize) -> ProbMeasure {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..support {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let mut mass = vec![0.0; n];
    for &i in &idx[..support] {
        // coarse masses make degenerate ties common
        mass[i] = if rng.random::<bool>() {
            1.0
        } else {
            rng.random::<f64>() + 0.01
        };
    }
    ProbMeasure::normalize(mass).unwrap()
}

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..500 {
        let n = rng.random_range(2..=8);
        let s = random_space(&mut rng, n);
        let k0 = rng.random_range(1..=n.min(4));
        let k1 = rng.random_range(1..=n.min(4));
        let a = random_measure(&mut rng, n, k0);
        let b = random_measure(&mut rng, n, k1);
        let q = 1.0 + 3.0 * rng.random::<f64>() + 1e-3;
        let lp = wasserstein(&s, q, &a, &b).unwrap();
        let bf = brute_force_wasserstein(&s, q, &a, &b).unwrap();
        assert!(
            (lp.cost - bf.cost).abs() < 1e-9,
            "case {case}: {} vs {}",
            lp.cost,
            bf.cost
        );
        assert!(lp.coupling.marginal_error(&a, &b) < 1e-10);
        assert!(bf.coupling.marginal_error(&a, &b) < 1e-10);
    }
}

#[test]
fn full_supports() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in [5, 5, 5, 5, 6] {
        let s = random_space(&mut rng, k);
        let a = random_measure(&mut rng, k, k);
        let b = random_measure(&mut rng, k, k);
        let lp = wasserstein(&s, 2.0, &a, &b).unwrap();
        let bf = brute_force_wasserstein(&s, 2.0, &a, &b).unwrap();
        assert!((lp.cost - bf.cost).abs() < 1e-9);
    }
}

#[test]
fn large_uniform_line_is_monotone_shift() {
    let n = 300;
    let s = generators::line(n, 1.0, 1.0);
    let a = ProbMeasure::uniform_on(n, &(0..100).collect::<Vec<_>>()).unwrap();
    let b = ProbMeasure::uniform_on(n, &(150..250).collect::<Vec<_>>()).unwrap();
    let r = wasserstein(&s, 2.0, &a, &b).unwrap();
    assert!((r.cost - 150.0).abs() < 1e-9);
}

fn measure_strategy(n: usize) -> impl Strategy<Value = ProbMeasure> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter_map("positive mass", |v| ProbMeasure::normalize(v).ok())
}

fn space_strategy() -> impl Strategy<Value = FiniteMetricMeasureSpace> {
    (3usize..7).prop_flat_map(|n| {
        prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), n).prop_map(move |pts| {
            let dist = pts
                .iter()
                .map(|a| {
                    pts.iter()
                        .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                        .collect()
                })
                .collect();
            FiniteMetricMeasureSpace::from_matrix(dist, vec![1.0; n]).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(
        (s, a, b, c) in space_strategy().prop_flat_map(|s| {
            let n = s.n();
            (Just(s), measure_strategy(n), measure_strategy(n), measure_strategy(n))
        }),
        q in 1.05f64..4.0,
    ) {
        let ab = wasserstein(&s, q, &a, &b).unwrap().cost;
        let ba = wasserstein(&s, q, &b, &a).unwrap().cost;
        let bc = wasserstein(&s, q, &b, &c).unwrap().cost;
        let ac = wasserstein(&s, q, &a, &c).unwrap().cost;
        prop_assert!((ab - ba).abs() < 1e-10);
        prop_assert!(wasserstein(&s, q, &a, &a).unwrap().cost < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn monotone_in_q_on_small_diameter(
        (s, a, b) in space_strategy().prop_flat_map(|s| {
            let n = s.n();
            (Just(s), measure_strategy(n), measure_strategy(n))
        }),
        q1 in 1.05f64..3.0,
        dq in 0.0f64..3.0,
    ) {
        // planar points in the unit square have diameter up to sqrt 2; rescale to 1
        let n = s.n();
        let dist: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| s.d(i, j) / 2f64.sqrt()).collect()).collect();
        let s = FiniteMetricMeasureSpace::from_matrix(dist, vec![1.0; n]).unwrap();
        let w1 = wasserstein(&s, q1, &a, &b).unwrap().cost;
        let w2 = wasserstein(&s, q1 + dq, &a, &b).unwrap().cost;
        prop_assert!(w1 <= w2 + 1e-9);
    }

    #[test]
    fn coupling_marginals(
        (s, a, b) in space_strategy().prop_flat_map(|s| {
            let n = s.n();
            (Just(s), measure_strategy(n), measure_strategy(n))
        }),
    ) {
        let r = wasserstein(&s, 2.0, &a, &b).unwrap();
        prop_assert!(r.coupling.marginal_error(&a, &b) < 1e-10);
        prop_assert!((r.coupling.cost_pow(&s, 2.0) - r.cost_pow).abs() < 1e-10);
    }
}
