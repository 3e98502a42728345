//! The global minimization oracle: minimize f(x) - Σ_i y_i · g_i(x_i) over
//! the box by branch-and-bound, and compare with exhaustive grid search.

use mmot::cost::RandomCost;
use mmot::cover::{Cover1D, TestBasis};
use mmot::oracle::{build_milp, grid_oracle, root_relaxation_bound, solve_bb, DualVector};

fn main() -> mmot::error::Result<()> {
    let cost = RandomCost { k_pos: 3, k_neg: 2, seed: 5, t_range: [-0.5, 0.5] }
        .generate(vec![(-1.0, 1.0); 2])?;
    let bases = vec![
        TestBasis::new(Cover1D::uniform(-1.0, 1.0, 4)?),
        TestBasis::new(Cover1D::uniform(-1.0, 1.0, 3)?),
    ];
    let y = DualVector { y0: 0.0, y: vec![vec![0.4, -1.0, 0.3, 0.8], vec![-0.5, 0.9, 0.2]] };

    let model = build_milp(&cost, &bases, &y)?;
    println!(
        "mixed-integer model: {} variables, {} binaries, {} rows",
        model.num_vars(),
        model.binaries().len(),
        model.relaxation().num_rows()
    );
    println!("root relaxation bound {:.6}", root_relaxation_bound(&model)?);

    let bb = solve_bb(&model, 1e-8)?;
    println!("branch-and-bound: value {:.8} at {:.5?}, {} nodes, gap {:.1e}", bb.value, bb.x, bb.work, bb.gap);
    println!("{} near-optimal points in the pool", bb.pool.len());

    let grid = grid_oracle(&cost, &bases, &y, 1e-3, 10_000_000)?;
    println!("grid: value {:.8} at {:.5?}, certificate {:.2e}", grid.value, grid.x, grid.gap);
    println!("difference {:.2e}", (bb.value - grid.value).abs());
    Ok(())
}
