use proptest::prelude::*;
use upwind_sbp::*;

fn order() -> impl Strategy<Value = Order> {
    prop_oneof![Just(Order::Third), Just(Order::Fourth)]
}

/// Random samples, with an optional jump and spike so that the nonlinear
/// weights leave their linear values.
fn state() -> impl Strategy<Value = (Order, Vec<f64>)> {
    (order(), 12usize..64).prop_flat_map(|(order, n)| {
        (
            Just(order),
            prop::collection::vec(-10.0f64..10.0, n),
            0..n,
            prop_oneof![Just(0.0), -50.0f64..50.0],
        )
            .prop_map(|(order, mut u, jump, size)| {
                for v in &mut u[jump..] {
                    *v += size;
                }
                (order, u)
            })
    })
}

fn setup(order: Order, n: usize) -> (Grid, UpwindPair, WenoOperator) {
    let grid = Grid::unit(n).unwrap();
    let pair = UpwindPair::new(order, &grid).unwrap();
    let weno = WenoOperator::new(order, &grid).unwrap();
    (grid, pair, weno)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn weights_are_a_convex_combination((order, u) in state()) {
        let (_, _, weno) = setup(order, u.len());
        for s in weno.smoothness(&u).unwrap() {
            let sum: f64 = s.weights.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-14, "label {}: sum {sum}", s.label);
            prop_assert!(s.weights.iter().all(|&w| w >= 0.0), "label {}: {:?}", s.label, s.weights);
        }
    }

    #[test]
    fn linear_mode_is_the_upwind_operator((order, u) in state()) {
        let (_, pair, weno) = setup(order, u.len());
        let mut dm = vec![0.0; u.len()];
        pair.apply_dm(&u, &mut dm);
        let lin = weno.apply(&u, WeightMode::Linear).unwrap();
        let scale = dm.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in dm.iter().zip(&lin) {
            prop_assert!((a - b).abs() <= 1e-13 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn nonlinear_operator_is_conservative((order, u) in state()) {
        let (_, pair, weno) = setup(order, u.len());
        let du = weno.apply(&u, WeightMode::Nonlinear).unwrap();
        let mut flux = vec![0.0; u.len() + 1];
        weno.fluxes_into(&u, WeightMode::Nonlinear, &mut flux);
        let total: f64 = du.iter().zip(&pair.h_diag).map(|(d, h)| d * h).sum();
        let ends = flux[u.len()] - flux[0];
        prop_assert!((total - ends).abs() <= 1e-12 * (1.0 + ends.abs()), "{total} vs {ends}");
    }

    #[test]
    fn frozen_matrix_reproduces_the_action((order, u) in state()) {
        let (_, _, weno) = setup(order, u.len());
        let m = weno.dmw_matrix(&u, WeightMode::Nonlinear).unwrap();
        let direct = weno.apply(&u, WeightMode::Nonlinear).unwrap();
        let via = &m * nalgebra::DVector::from_column_slice(&u);
        let scale = direct.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in direct.iter().zip(via.iter()) {
            prop_assert!((a - b).abs() <= 1e-11 * scale);
        }
    }

    #[test]
    fn stabilized_operator_is_certified((order, u) in state()) {
        let grid = Grid::unit(u.len()).unwrap();
        let op = StabilizedOperator::new(order, &grid).unwrap();
        let (_, report) = op.apply(&u, true).unwrap();
        prop_assert!(!report.fallback);
        prop_assert!(report.decomposition_residual <= 1e-10 * report.r_norm.max(1.0));
        let min = report.min_eig.unwrap();
        prop_assert!(min >= -1e-10 * report.r_norm, "min eig {min}, ‖R‖ {}", report.r_norm);
    }

    #[test]
    fn upwind_dissipation_is_nonnegative((order, u) in state()) {
        let (_, pair, _) = setup(order, u.len());
        let q = pair.qm();
        let v = nalgebra::DVector::from_column_slice(&u);
        let form = v.dot(&((&q + q.transpose()) * &v));
        prop_assert!(form >= -1e-12 * v.norm_squared() * q.abs().max());
    }

    #[test]
    fn modified_factors_are_nonnegative(value in -1e3f64..1e3, delta in prop_oneof![Just(0.0), 1e-12f64..1.0]) {
        let m = modify_lambda(value, delta);
        prop_assert!(m >= 0.0);
        prop_assert!(value + m >= -1e-12 * value.abs().max(1.0));
    }
}
