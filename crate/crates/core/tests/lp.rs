use mmot::lp::{LpProblem, LpSolution, LpStatus, RowKind, Sense};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A feasible, bounded minimization problem built around a known point.
struct Instance {
    cost: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<(Vec<(usize, f64)>, RowKind, f64)>,
}

fn random_instance(seed: u64, rows: usize, cols: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upper: Vec<f64> = (0..cols).map(|_| rng.random_range(0.5..5.0)).collect();
    let x0: Vec<f64> = upper.iter().map(|u| rng.random_range(0.0..*u)).collect();
    let cost = (0..cols).map(|_| rng.random_range(-3.0..3.0)).collect();
    let rows = (0..rows)
        .map(|_| {
            let mut coeffs = Vec::new();
            for j in 0..cols {
                if rng.random_bool(0.4) {
                    coeffs.push((j, rng.random_range(-2.0..2.0)));
                }
            }
            let ax: f64 = coeffs.iter().map(|&(j, a)| a * x0[j]).sum();
            match rng.random_range(0..3) {
                0 => (coeffs, RowKind::Eq, ax),
                1 => (coeffs, RowKind::Le, ax + rng.random_range(0.0..1.0)),
                _ => (coeffs, RowKind::Ge, ax - rng.random_range(0.0..1.0)),
            }
        })
        .collect();
    Instance { cost, upper, rows }
}

fn build(inst: &Instance, order: &[usize]) -> LpProblem {
    let mut lp = LpProblem::new(Sense::Minimize);
    for (c, u) in inst.cost.iter().zip(&inst.upper) {
        lp.add_var(*c, 0.0, *u);
    }
    for &r in order {
        let (coeffs, kind, rhs) = &inst.rows[r];
        lp.add_row(coeffs, *kind, *rhs).unwrap();
    }
    lp
}

/// Checks primal feasibility, dual feasibility and equal objectives,
/// which together certify optimality without trusting the solver.
fn certify(inst: &Instance, order: &[usize], sol: &LpSolution) {
    assert_eq!(sol.status, LpStatus::Optimal);
    let x = &sol.primal;
    let tol = 1e-7;
    for (j, u) in inst.upper.iter().enumerate() {
        assert!(x[j] >= -tol && x[j] <= u + tol, "bound violated at {j}");
    }
    let mut reduced = inst.cost.clone();
    let mut dual_obj = 0.0;
    for (pos, &r) in order.iter().enumerate() {
        let (coeffs, kind, rhs) = &inst.rows[r];
        let ax: f64 = coeffs.iter().map(|&(j, a)| a * x[j]).sum();
        let y = sol.duals[pos];
        match kind {
            RowKind::Eq => assert!((ax - rhs).abs() <= tol),
            RowKind::Le => {
                assert!(ax <= rhs + tol);
                assert!(y <= tol, "Le row multiplier {y} must be nonpositive");
            }
            RowKind::Ge => {
                assert!(ax >= rhs - tol);
                assert!(y >= -tol, "Ge row multiplier {y} must be nonnegative");
            }
        }
        for &(j, a) in coeffs {
            reduced[j] -= a * y;
        }
        dual_obj += rhs * y;
    }
    // box multipliers take whatever sign the reduced cost needs
    for (d, u) in reduced.iter().zip(&inst.upper) {
        if *d < 0.0 {
            dual_obj += d * u;
        }
    }
    let primal_obj: f64 = inst.cost.iter().zip(x).map(|(c, v)| c * v).sum();
    assert!((primal_obj - sol.objective).abs() <= 1e-7 * (1.0 + primal_obj.abs()));
    assert!(
        (primal_obj - dual_obj).abs() <= 1e-6 * (1.0 + primal_obj.abs()),
        "duality gap: primal {primal_obj}, dual {dual_obj}"
    );
}

#[test]
fn fuzz_strong_duality() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..500 {
        let rows = rng.random_range(1..=40);
        let cols = rng.random_range(1..=80);
        let inst = random_instance(trial, rows, cols);
        let order: Vec<usize> = (0..rows).collect();
        let sol = build(&inst, &order).solve().unwrap();
        certify(&inst, &order, &sol);

        // a basic solution has at most `rows` variables strictly inside
        // their bounds
        let interior = sol
            .primal
            .iter()
            .zip(&inst.upper)
            .filter(|(v, u)| **v > 1e-9 && **v < **u - 1e-9)
            .count();
        assert!(interior <= rows, "trial {trial}: {interior} interior values with {rows} rows");
    }
}

#[test]
fn maximize_is_negated_minimize() {
    for seed in 0..50 {
        let inst = random_instance(seed, 8, 12);
        let order: Vec<usize> = (0..8).collect();
        let min = build(&inst, &order).solve().unwrap();
        let mut lp = LpProblem::new(Sense::Maximize);
        for (c, u) in inst.cost.iter().zip(&inst.upper) {
            lp.add_var(-c, 0.0, *u);
        }
        for (coeffs, kind, rhs) in &inst.rows {
            lp.add_row(coeffs, *kind, *rhs).unwrap();
        }
        let max = lp.solve().unwrap();
        assert!((min.objective + max.objective).abs() <= 1e-8 * (1.0 + min.objective.abs()));
    }
}

#[test]
fn infeasible_and_unbounded_are_reported() {
    let mut lp = LpProblem::new(Sense::Minimize);
    let a = lp.add_var(1.0, 0.0, f64::INFINITY);
    lp.add_row(&[(a, 1.0)], RowKind::Le, -1.0).unwrap();
    assert_eq!(lp.solve().unwrap().status, LpStatus::Infeasible);

    let mut lp = LpProblem::new(Sense::Minimize);
    let a = lp.add_var(-1.0, 0.0, f64::INFINITY);
    let b = lp.add_var(0.0, 0.0, 1.0);
    lp.add_row(&[(a, 1.0), (b, -1.0)], RowKind::Ge, 0.0).unwrap();
    assert_eq!(lp.solve().unwrap().status, LpStatus::Unbounded);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn row_order_does_not_change_the_optimum(
        seed in 0u64..10_000,
        rows in 1usize..20,
        cols in 1usize..30,
        shuffle in any::<u64>(),
    ) {
        let inst = random_instance(seed, rows, cols);
        let order: Vec<usize> = (0..rows).collect();
        let mut permuted = order.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle);
        for i in (1..rows).rev() {
            permuted.swap(i, rng.random_range(0..=i));
        }
        let a = build(&inst, &order).solve().unwrap();
        let b = build(&inst, &permuted).solve().unwrap();
        certify(&inst, &permuted, &b);
        prop_assert!((a.objective - b.objective).abs() <= 1e-7 * (1.0 + a.objective.abs()));
    }

    #[test]
    fn warm_start_matches_cold_start(seed in 0u64..10_000, rows in 1usize..15, cols in 2usize..25) {
        let inst = random_instance(seed, rows, cols);
        let order: Vec<usize> = (0..rows).collect();
        let lp = build(&inst, &order);
        let cold = lp.solve().unwrap();
        let warm = lp.solve_warm(&cold.basis).unwrap();
        prop_assert!((cold.objective - warm.objective).abs() <= 1e-9 * (1.0 + cold.objective.abs()));
    }
}
