use mmot::cost::{AffinePiece, CpwaCost};
use mmot::cover::{Cover1D, TestBasis};
use mmot::cutting_plane::{
    greedy_vertex_coupling, init_algorithm0, run_algorithm1, verify_moment_feasibility,
    CuttingPlaneOptions, CuttingPlaneStatus, DiscreteMeasure,
};
use mmot::driver::{solve_mmot, sweep_knots, CoverSpec, KnotCounts, ProblemConfig};
use mmot::marginals::{Marginal1D, MarginalDescriptor};
use mmot::oracle::{GridOracle, MilpOracle};
use mmot::reassembly::{build_sampler, reassemble_discrete_exact, replication_rng, w1_discrete_vs_marginal};
use proptest::prelude::*;

fn relax(
    cost: &CpwaCost,
    marginals: &[Marginal1D],
    covers: Vec<Cover1D>,
) -> mmot::cutting_plane::CuttingPlaneResult {
    let bases: Vec<TestBasis> = covers.into_iter().map(TestBasis::new).collect();
    let masses: Vec<Vec<f64>> =
        marginals.iter().zip(&bases).map(|(m, b)| m.hat_masses(b.knots()).unwrap()).collect();
    let moments: Vec<Vec<f64>> = masses.iter().map(|v| v[1..].to_vec()).collect();
    let init = init_algorithm0(&masses, &bases).unwrap();
    run_algorithm1(cost, &bases, &moments, &init.active, &MilpOracle::default(), &CuttingPlaneOptions::default())
        .unwrap()
}

#[test]
fn single_marginal_with_linear_cost_is_exact() {
    // f(x) = 2x + 1 under U[0, 1]: the hat basis reproduces linear
    // functions, so the relaxation recovers E f = 2 exactly
    let m = vec![Marginal1D::uniform(0.0, 1.0).unwrap()];
    let cost = CpwaCost::new(
        vec![vec![AffinePiece { a: vec![2.0], b: 1.0 }]],
        vec![],
        vec![(0.0, 1.0)],
    )
    .unwrap();
    let r = relax(&cost, &m, vec![Cover1D::uniform(0.0, 1.0, 4).unwrap()]);
    assert_eq!(r.status, CuttingPlaneStatus::Converged);
    assert!((r.lower - 2.0).abs() <= 1e-9);
    assert!((r.upper - 2.0).abs() <= 1e-9);
}

#[test]
fn separable_cost_with_breaks_on_knots_is_exact() {
    // f(x) = |x1| + |x2 - 0.5| under U[-1, 1] x U[0, 1]; both kinks are
    // knots, so every moment-matching measure has the same expected cost
    let m = vec![Marginal1D::uniform(-1.0, 1.0).unwrap(), Marginal1D::uniform(0.0, 1.0).unwrap()];
    let cost = CpwaCost::from_abs_terms(
        &[(vec![1.0, 0.0], 0.0), (vec![0.0, 1.0], 0.5)],
        &[],
        vec![(-1.0, 1.0), (0.0, 1.0)],
    )
    .unwrap();
    // E|U| on [-1, 1] is 1/2, E|V - 1/2| on [0, 1] is 1/4
    let exact = 0.75;
    let r = relax(
        &cost,
        &m,
        vec![Cover1D::uniform(-1.0, 1.0, 4).unwrap(), Cover1D::uniform(0.0, 1.0, 2).unwrap()],
    );
    assert!((r.lower - exact).abs() <= 1e-4 + 1e-9, "lower {}", r.lower);
    assert!(r.upper >= exact - 1e-9);
    assert!((r.upper - exact).abs() <= 1e-4 + 1e-9);
}

/// OPT of a two-marginal discrete transport problem by enumerating basic
/// solutions of the transportation polytope.
fn transport_by_vertices(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let k = n + m - 1;
    let mut best = f64::INFINITY;
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        // rows: all of a and the first m-1 of b
        let mut mat = vec![vec![0.0; k + 1]; k];
        for (c, &cell) in pick.iter().enumerate() {
            let (i, j) = cells[cell];
            mat[i][c] = 1.0;
            if j + 1 < m {
                mat[n + j][c] = 1.0;
            }
        }
        for i in 0..n {
            mat[i][k] = a[i];
        }
        for j in 0..m - 1 {
            mat[n + j][k] = b[j];
        }
        if let Some(x) = solve_square(mat) {
            if x.iter().all(|v| *v >= -1e-12) {
                let col_last: f64 =
                    pick.iter().zip(&x).filter(|(c, _)| cells[**c].1 == m - 1).map(|(_, v)| v).sum();
                if (col_last - b[m - 1]).abs() <= 1e-9 {
                    let v: f64 =
                        pick.iter().zip(&x).map(|(c, v)| v * cost[cells[*c].0][cells[*c].1]).sum();
                    best = best.min(v);
                }
            }
        }
        // next combination
        let mut i = k;
        while i > 0 && pick[i - 1] == cells.len() - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        pick[i - 1] += 1;
        for t in i..k {
            pick[t] = pick[t - 1] + 1;
        }
    }
}

fn solve_square(mut mat: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let k = mat.len();
    for c in 0..k {
        let p = (c..k).max_by(|&x, &y| mat[x][c].abs().total_cmp(&mat[y][c].abs()))?;
        if mat[p][c].abs() < 1e-12 {
            return None;
        }
        mat.swap(c, p);
        for r in 0..k {
            if r != c {
                let f = mat[r][c] / mat[c][c];
                for t in c..=k {
                    mat[r][t] -= f * mat[c][t];
                }
            }
        }
    }
    Some((0..k).map(|r| mat[r][k] / mat[r][r]).collect())
}

fn nine_point_case(cost: &CpwaCost) -> (f64, f64, f64) {
    let atoms = vec![-1.0, 0.0, 1.0];
    let wa = vec![0.2, 0.5, 0.3];
    let wb = vec![0.4, 0.1, 0.5];
    let m = vec![
        Marginal1D::discrete(atoms.clone(), wa.clone()).unwrap(),
        Marginal1D::discrete(atoms.clone(), wb.clone()).unwrap(),
    ];
    let table: Vec<Vec<f64>> =
        atoms.iter().map(|&x| atoms.iter().map(|&y| cost.eval(&[x, y]).unwrap()).collect()).collect();
    let opt = transport_by_vertices(&wa, &wb, &table);
    let r = relax(cost, &m, vec![Cover1D::new(atoms.clone()).unwrap(), Cover1D::new(atoms).unwrap()]);
    // the exact reassembly is a coupling of the marginals, so it costs at
    // least OPT
    let glued = reassemble_discrete_exact(&r.measure, &m).unwrap();
    let ub = glued.integrate(|x| cost.eval(x).unwrap());
    (r.lower, opt, ub)
}

#[test]
fn nine_point_grid_sandwich() {
    let mixed = CpwaCost::from_abs_terms(
        &[(vec![1.0, -1.0], 0.3)],
        &[(vec![1.0, 1.0], 0.0)],
        vec![(-1.0, 1.0); 2],
    )
    .unwrap();
    let (lb, opt, ub) = nine_point_case(&mixed);
    assert!(lb <= opt + 1e-9 && opt <= ub + 1e-9, "{lb} {opt} {ub}");

    // for a concave cost, spreading any point onto its surrounding knots
    // does not increase the cost, so the relaxation is tight
    let concave = CpwaCost::from_abs_terms(
        &[],
        &[(vec![1.0, -1.0], 0.3), (vec![1.0, 1.0], 0.0)],
        vec![(-1.0, 1.0); 2],
    )
    .unwrap();
    let (lb, opt, ub) = nine_point_case(&concave);
    assert!(lb <= opt + 1e-9 && opt <= ub + 1e-9, "{lb} {opt} {ub}");
    assert!(opt - lb <= 1e-4 + 1e-8, "{lb} {opt}");
}

#[test]
fn relaxation_is_loose_for_convex_cost_on_discrete_marginal() {
    // |x| under ½δ₋₁ + ½δ₁: the moment set contains δ₀, whose cost is 0,
    // while the only coupling costs 1
    let m = vec![Marginal1D::discrete(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap()];
    let cost = CpwaCost::from_abs_terms(&[(vec![1.0], 0.0)], &[], vec![(-1.0, 1.0)]).unwrap();
    let r = relax(&cost, &m, vec![Cover1D::new(vec![-1.0, 1.0]).unwrap()]);
    assert!(r.lower.abs() <= 1e-9);
    let glued = reassemble_discrete_exact(&r.measure, &m).unwrap();
    assert!((glued.integrate(|x| cost.eval(x).unwrap()) - 1.0).abs() <= 1e-12);
}

#[test]
fn grid_oracle_drives_the_same_relaxation() {
    let m = vec![Marginal1D::uniform(-1.0, 1.0).unwrap(), Marginal1D::uniform(-1.0, 1.0).unwrap()];
    let cost = CpwaCost::from_abs_terms(
        &[(vec![1.0, 1.0], 0.2)],
        &[(vec![1.0, -0.5], 0.0)],
        vec![(-1.0, 1.0); 2],
    )
    .unwrap();
    let bases: Vec<TestBasis> =
        (0..2).map(|_| TestBasis::new(Cover1D::uniform(-1.0, 1.0, 4).unwrap())).collect();
    let masses: Vec<Vec<f64>> =
        m.iter().zip(&bases).map(|(mm, b)| mm.hat_masses(b.knots()).unwrap()).collect();
    let moments: Vec<Vec<f64>> = masses.iter().map(|v| v[1..].to_vec()).collect();
    let init = init_algorithm0(&masses, &bases).unwrap();
    let opts = CuttingPlaneOptions { eps_lsip: 1e-2, ..Default::default() };
    let milp = run_algorithm1(&cost, &bases, &moments, &init.active, &MilpOracle::default(), &opts).unwrap();
    let grid_oracle = GridOracle { resolution: 1e-3, max_points: 10_000_000 };
    let grid = run_algorithm1(&cost, &bases, &moments, &init.active, &grid_oracle, &opts).unwrap();
    // both lower bounds are valid, so each sits below the other's upper bound
    assert!(milp.lower <= grid.upper + 1e-9);
    assert!(grid.lower <= milp.upper + 1e-9);
    assert!((milp.upper - grid.upper).abs() <= 2e-2);
}

#[test]
fn discrete_reassembly_has_the_target_marginals() {
    let m = vec![
        Marginal1D::discrete(vec![0.0, 0.3, 1.0], vec![0.5, 0.25, 0.25]).unwrap(),
        Marginal1D::discrete(vec![0.0, 0.6, 1.0], vec![0.1, 0.6, 0.3]).unwrap(),
    ];
    let measure = DiscreteMeasure::new(
        vec![vec![0.0, 0.0], vec![0.5, 0.5], vec![1.0, 1.0]],
        vec![0.4, 0.35, 0.25],
    )
    .unwrap();
    let glued = reassemble_discrete_exact(&measure, &m).unwrap();
    for (i, marginal) in m.iter().enumerate() {
        let (atoms, weights) = marginal.atoms().unwrap();
        for (a, w) in atoms.iter().zip(weights) {
            let got: f64 = glued
                .points
                .iter()
                .zip(&glued.weights)
                .filter(|(p, _)| p[i] == *a)
                .map(|(_, w)| w)
                .sum();
            assert!((got - w).abs() <= 1e-12);
        }
    }
}

#[test]
fn w1_matches_quantile_integral() {
    // W1 = ∫_0^1 |F̂^{-1}(u) - F^{-1}(u)| du, checked by midpoint rule on
    // the quantile functions
    let m = Marginal1D::truncated_gaussian_mixture(
        vec![0.4, 0.6],
        vec![-1.0, 2.0],
        vec![0.7, 1.2],
        [-4.0, 5.0],
    )
    .unwrap();
    let atoms = vec![-2.0, 0.5, 1.5, 3.0];
    let weights = vec![0.2, 0.3, 0.3, 0.2];
    let exact = w1_discrete_vs_marginal(&atoms, &weights, &m).unwrap();
    let n = 200_000;
    let mut cum = vec![0.0];
    for w in &weights {
        cum.push(cum.last().unwrap() + w);
    }
    let quad: f64 = (0..n)
        .map(|k| {
            let u = (k as f64 + 0.5) / n as f64;
            let idx = cum.partition_point(|&c| c < u).saturating_sub(1).min(atoms.len() - 1);
            (atoms[idx] - m.quantile(u).unwrap()).abs()
        })
        .sum::<f64>()
        / n as f64;
    assert!((exact - quad).abs() <= 1e-4, "{exact} vs {quad}");
}

#[test]
fn sampler_respects_conditional_intervals() {
    let m = vec![Marginal1D::uniform(0.0, 1.0).unwrap(), Marginal1D::uniform(-1.0, 1.0).unwrap()];
    let measure = DiscreteMeasure::new(vec![vec![0.2, 0.5], vec![0.8, -0.5]], vec![0.3, 0.7]).unwrap();
    let sampler = build_sampler(&measure, &m).unwrap();
    let mut rng = replication_rng(3, 0);
    for _ in 0..1000 {
        let (atom, y) = sampler.sample(&mut rng);
        for (i, v) in y.iter().enumerate() {
            let (lo, hi) = sampler.conditional_interval(i, atom);
            let u = m[i].cdf(*v);
            assert!(u >= lo - 1e-12 && u <= hi + 1e-12);
        }
    }
}

fn small_config(seed: u64) -> ProblemConfig {
    ProblemConfig::from_json(&format!(
        r#"{{
            "marginals": {{"random_mixture": {{"count": 3, "seed": {seed}}}}},
            "cover": {{"greedy": {{"knots": 6}}}},
            "cost": {{"random": {{"k_pos": 2, "k_neg": 2, "seed": {seed}}}}},
            "mc": {{"samples": 2000, "reps": 8, "seed": 1}}
        }}"#
    ))
    .unwrap()
}

#[test]
fn solve_is_deterministic() {
    let cfg = small_config(5);
    let mut a = solve_mmot(&cfg).unwrap();
    let mut b = solve_mmot(&cfg).unwrap();
    a.seconds = b.seconds.clone();
    b.seconds = a.seconds.clone();
    assert_eq!(a, b);
}

#[test]
fn explicit_configs_round_trip_and_solve() {
    let cfg = ProblemConfig {
        marginals: mmot::driver::MarginalsSpec::Explicit(vec![
            MarginalDescriptor::Uniform { a: 0.0, b: 1.0 },
            MarginalDescriptor::Discrete { atoms: vec![0.0, 0.5, 1.0], weights: vec![0.3, 0.3, 0.4], support: None },
        ]),
        cover: CoverSpec::Uniform { knots: KnotCounts::PerMarginal(vec![5, 3]) },
        ..small_config(1)
    };
    let back = ProblemConfig::from_json(&cfg.to_json().unwrap()).unwrap();
    assert_eq!(back, cfg);
    let r = solve_mmot(&cfg).unwrap();
    assert_eq!(r.knots, vec![5, 3]);
    assert!(r.converged());
    assert!(r.alpha_lb <= r.alpha_ub.upper_999);
}

#[test]
fn nested_sweep_lower_bounds_increase() {
    let reports = sweep_knots(&small_config(2), &[3, 5, 9]).unwrap();
    for w in reports.windows(2) {
        assert!(w[1].alpha_lb >= w[0].alpha_lb - 2e-4);
    }
}

#[test]
fn greedy_coupling_is_degenerate_only_on_ties() {
    let (atoms, flag) = greedy_vertex_coupling(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    assert!(flag);
    assert_eq!(atoms.len(), 2);
    let (atoms, flag) = greedy_vertex_coupling(&[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
    assert!(!flag);
    assert_eq!(atoms.len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn relaxation_invariants(seed in 0u64..1000, dim in 1usize..4, knots in 2usize..6) {
        let marginals = mmot::marginals::MixtureGenerator::default().generate(dim, seed).unwrap();
        let cost = mmot::cost::RandomCost::new(2, 1, seed).generate(vec![(-10.0, 10.0); dim]).unwrap();
        let covers: Vec<Cover1D> =
            marginals.iter().map(|m| Cover1D::trivial(m).refine_greedy(m, knots - 1)).collect();
        let bases: Vec<TestBasis> = covers.iter().cloned().map(TestBasis::new).collect();
        let masses: Vec<Vec<f64>> =
            marginals.iter().zip(&bases).map(|(m, b)| m.hat_masses(b.knots()).unwrap()).collect();
        let moments: Vec<Vec<f64>> = masses.iter().map(|v| v[1..].to_vec()).collect();
        let r = relax(&cost, &marginals, covers.clone());
        let m: usize = bases.iter().map(|b| b.len()).sum();
        prop_assert!(r.upper - r.lower <= 1e-4);
        prop_assert!(r.measure.len() <= m + 1);
        prop_assert!(verify_moment_feasibility(&r.measure, &bases, &moments).unwrap().max_residual <= 1e-8);
        for (i, c) in covers.iter().enumerate() {
            let atoms: Vec<f64> = r.measure.points.iter().map(|p| p[i]).collect();
            let w1 = w1_discrete_vs_marginal(&atoms, &r.measure.weights, &marginals[i]).unwrap();
            prop_assert!(w1 <= c.radius_bound_w1() + 1e-12);
        }
    }
}
