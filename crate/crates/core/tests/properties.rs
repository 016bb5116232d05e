use crosspoint::device::ConductanceLevelSet;
use crosspoint::learn::{fit_linear, fit_logistic, Backend, CircuitBackend, ClassLabels, RegressionProblem};
use crosspoint::numerics::{integrate_linear_ode, pseudoinverse_solve, residual_and_lse, DenseMatrix, DenseVector};
use proptest::prelude::*;

/// Tall full-column-rank problems with positive entries.
fn problem() -> impl Strategy<Value = (DenseMatrix, DenseVector)> {
    (1usize..=5)
        .prop_flat_map(|m| (Just(m), m + 1..=20))
        .prop_flat_map(|(m, n)| {
            (
                prop::collection::vec(0.05f64..1.0, n * m),
                prop::collection::vec(-1.0f64..1.0, n),
                Just((n, m)),
            )
        })
        .prop_filter_map("well conditioned", |(xs, ys, (n, m))| {
            let x = DenseMatrix::new(n, m, xs).ok()?;
            let s = nalgebra::DMatrix::from_row_slice(n, m, x.as_slice()).singular_values();
            let cond = s.max() / s.min();
            (cond < 100.0).then(|| (x, DenseVector::from(ys)))
        })
}

fn rel_err(a: &DenseVector, b: &DenseVector) -> f64 {
    a.sub(b).unwrap().norm() / b.norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ideal_circuit_matches_pseudoinverse((x, y) in problem()) {
        let p = RegressionProblem::new(x.clone(), y.clone()).unwrap();
        let fit = fit_linear(&p, &Backend::Circuit(CircuitBackend::ideal())).unwrap();
        let w = pseudoinverse_solve(&x, &y).unwrap();
        prop_assert!(rel_err(&fit.w, &w) < 1e-8);
    }

    #[test]
    fn quantize_is_idempotent(g in 0.0f64..2e-4, g_max in 1e-5f64..1e-3) {
        let levels = ConductanceLevelSet::new(g_max, 31, 1e3).unwrap();
        let q = levels.quantize(g).unwrap();
        prop_assert_eq!(levels.quantize(q).unwrap(), q);
        prop_assert!(levels.levels().contains(&q));
    }

    #[test]
    fn column_scale_moves_into_weight((x, y) in problem(), c in 0.1f64..10.0) {
        let mut xs = x.clone();
        for i in 0..x.rows() {
            xs[(i, 0)] *= c;
        }
        let w = pseudoinverse_solve(&x, &y).unwrap();
        let p = RegressionProblem::new(xs, y).unwrap();
        let ws = fit_linear(&p, &Backend::Circuit(CircuitBackend::ideal())).unwrap().w;
        prop_assert!((ws[0] * c - w[0]).abs() <= 1e-8 * w.norm().max(1.0));
        for j in 1..w.len() {
            prop_assert!((ws[j] - w[j]).abs() <= 1e-8 * w.norm().max(1.0));
        }
    }

    #[test]
    fn least_squares_is_minimal((x, y) in problem(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let w = pseudoinverse_solve(&x, &y).unwrap();
        let (_, best) = residual_and_lse(&x, &y, &w).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let d = DenseVector::from_fn(w.len(), |_| rng.random_range(-1e-3..1e-3));
            let (_, lse) = residual_and_lse(&x, &y, &w.add(&d).unwrap()).unwrap();
            prop_assert!(lse >= best * (1.0 - 1e-12));
        }
    }

    #[test]
    fn logistic_weights_scale_with_a(seed in any::<u64>(), a in 0.01f64..0.45) {
        let set = crosspoint::data::synth_separable(30, 0.05, seed).unwrap();
        let base = fit_logistic(&set.x, &ClassLabels::new(set.labels.clone(), 0.2).unwrap(), &Backend::Oracle).unwrap();
        let other = fit_logistic(&set.x, &ClassLabels::new(set.labels.clone(), a).unwrap(), &Backend::Oracle).unwrap();
        let scaled = base.w.scaled(a / 0.2);
        prop_assert!(rel_err(&other.w, &scaled) < 1e-10);
        for i in 0..set.x.rows() {
            let pt: DenseVector = vec![set.x[(i, 1)], set.x[(i, 2)]].into();
            prop_assert_eq!(base.classify(&pt).unwrap(), other.classify(&pt).unwrap());
        }
    }
}

#[test]
fn rk4_converges_faster_than_second_order() {
    // dx/dt = -x + 1 from 0 has x(1) = 1 - e^-1.
    let a = DenseMatrix::from_rows(&[[-1.0]]).unwrap();
    let b: DenseVector = vec![1.0].into();
    let x0: DenseVector = vec![0.0].into();
    let exact = 1.0 - (-1.0f64).exp();
    let err = |dt: f64| (integrate_linear_ode(&a, &b, &x0, dt, 1.0).unwrap().last()[0] - exact).abs();
    let (coarse, fine) = (err(0.1), err(0.05));
    let order = (coarse / fine).log2();
    assert!(order >= 2.0, "observed order {order}");
}
