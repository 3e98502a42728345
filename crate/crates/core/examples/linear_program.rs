//! The dense revised simplex on a small LP, then reused with an extra
//! column and re-solved from the previous basis.

use mmot::lp::{LpProblem, RowKind, Sense, Simplex};

fn main() -> mmot::error::Result<()> {
    // min -3a - 2b  s.t.  a + b <= 4,  a + 3b <= 6,  a <= 3
    let mut lp = LpProblem::new(Sense::Minimize);
    let a = lp.add_var(-3.0, 0.0, f64::INFINITY);
    let b = lp.add_var(-2.0, 0.0, f64::INFINITY);
    lp.add_row(&[(a, 1.0), (b, 1.0)], RowKind::Le, 4.0)?;
    lp.add_row(&[(a, 1.0), (b, 3.0)], RowKind::Le, 6.0)?;
    lp.add_row(&[(a, 1.0)], RowKind::Le, 3.0)?;
    let sol = lp.solve()?;
    println!("{:?}: x = {:?}, objective {}, duals {:?}", sol.status, sol.primal, sol.objective, sol.duals);

    let mut simplex = Simplex::new(lp)?;
    simplex.solve()?;
    // a new activity using one unit of each resource
    simplex.add_column(-4.0, 0.0, f64::INFINITY, &[(0, 1.0), (1, 1.0), (2, 0.0)])?;
    let again = simplex.solve()?;
    println!(
        "with the new column: x = {:?}, objective {}, {} pivots in total",
        again.primal, again.objective, again.iterations
    );
    Ok(())
}
