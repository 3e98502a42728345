use mmot::cost::{random_instance, CpwaCost, RandomCost};
use mmot::cover::{Cover1D, TestBasis};
use mmot::oracle::{
    build_milp, dual_slack, fill_chain, grid_oracle, root_relaxation_bound, solve_bb, DualVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_setup(rng: &mut ChaCha8Rng, dim: usize) -> (CpwaCost, Vec<TestBasis>, DualVector) {
    let spec = RandomCost { k_pos: 2, k_neg: 2, seed: rng.random(), t_range: [-0.5, 0.5] };
    let cost = spec.generate(vec![(-1.0, 1.0); dim]).unwrap();
    let bases: Vec<TestBasis> = (0..dim)
        .map(|_| {
            let cells = rng.random_range(2..6);
            TestBasis::new(Cover1D::uniform(-1.0, 1.0, cells).unwrap())
        })
        .collect();
    let y = DualVector {
        y0: rng.random_range(-1.0..1.0),
        y: bases
            .iter()
            .map(|b| (0..b.len()).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect(),
    };
    (cost, bases, y)
}

#[test]
fn branch_and_bound_agrees_with_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let dim = if trial % 2 == 0 { 2 } else { 3 };
        let (cost, bases, y) = random_setup(&mut rng, dim);
        let bb = solve_bb(&build_milp(&cost, &bases, &y).unwrap(), 1e-8).unwrap();
        let h = if dim == 2 { 0.01 } else { 0.05 };
        let grid = grid_oracle(&cost, &bases, &y, h, 10_000_000).unwrap();
        assert!(bb.value <= grid.value + 1e-9, "trial {trial}: {} > {}", bb.value, grid.value);
        assert!(
            bb.value >= grid.value - grid.gap - 1e-8,
            "trial {trial}: {} below grid bound {}",
            bb.value,
            grid.value - grid.gap
        );
        assert!(bb.gap <= 1e-8);
        worst = worst.max((bb.value - grid.value).abs());
    }
    println!("largest branch-and-bound vs grid difference: {worst:.3e}");
}

#[test]
fn reported_value_matches_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let (cost, bases, y) = random_setup(&mut rng, 3);
        let r = solve_bb(&build_milp(&cost, &bases, &y).unwrap(), 1e-8).unwrap();
        assert!((r.value - dual_slack(&cost, &bases, &y, &r.x)).abs() <= 1e-9);
        assert!(cost.contains(&r.x));
        for (x, v) in &r.pool {
            assert!((v - dual_slack(&cost, &bases, &y, x)).abs() <= 1e-9);
            assert!(*v <= r.value + 1e-6);
        }
    }
}

#[test]
fn chain_term_reproduces_hat_payoff() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let cells = rng.random_range(1..12);
        let mut knots: Vec<f64> = (0..=cells).map(|_| rng.random_range(-5.0..5.0)).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        if knots.len() < 2 {
            continue;
        }
        let basis = TestBasis::new(Cover1D::new(knots.clone()).unwrap());
        let y: Vec<f64> = (0..basis.len()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x = rng.random_range(knots[0]..=knots[knots.len() - 1]);
        let (z, iota) = fill_chain(&knots, x);
        let chain: f64 = (0..y.len())
            .map(|j| (y[j] - if j == 0 { 0.0 } else { y[j - 1] }) * z[j])
            .sum();
        let direct: f64 = basis.eval(x).unwrap().iter().zip(&y).map(|(g, y)| g * y).sum();
        assert!((chain - direct).abs() <= 1e-10);
        let rebuilt = knots[0]
            + z.iter().enumerate().map(|(j, z)| (knots[j + 1] - knots[j]) * z).sum::<f64>();
        assert!((rebuilt - x).abs() <= 1e-10);
        for j in 0..iota.len() {
            assert!(z[j + 1] <= iota[j] && iota[j] <= z[j]);
        }
    }
}

#[test]
fn encoded_points_are_feasible_with_matching_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..30 {
        let (cost, bases, y) = random_setup(&mut rng, 3);
        let model = build_milp(&cost, &bases, &y).unwrap();
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let values = model.encode_point(&x).unwrap();
        assert!(model.violation(&values) <= 1e-9);
        assert!((model.objective(&values) - dual_slack(&cost, &bases, &y, &x)).abs() <= 1e-9);
    }
}

#[test]
fn big_m_covers_every_piece_difference() {
    let cost = random_instance(4, 1, 3, 21).unwrap();
    let bases: Vec<TestBasis> =
        (0..4).map(|_| TestBasis::new(Cover1D::uniform(-10.0, 10.0, 3).unwrap())).collect();
    let model = build_milp(&cost, &bases, &DualVector::zeros(&bases)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-10.0..10.0)).collect();
        for (k, block) in cost.neg_blocks().iter().enumerate() {
            for (i, pi) in block.iter().enumerate() {
                for pj in block {
                    assert!(pj.eval(&x) - pi.eval(&x) <= model.big_m()[k][i] + 1e-9);
                }
            }
        }
    }
}

#[test]
fn both_relaxation_forms_agree_at_the_root() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..40 {
        let dim = rng.random_range(1..4);
        let (cost, bases, y) = random_setup(&mut rng, dim);
        let model = build_milp(&cost, &bases, &y).unwrap();
        let full = model.relaxation().solve().unwrap();
        let full_value = full.objective + model.objective_constant();
        let reduced = root_relaxation_bound(&model).unwrap();
        assert!((full_value - reduced).abs() <= 1e-7, "{full_value} vs {reduced}");
    }
}
