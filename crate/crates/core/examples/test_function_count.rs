//! How many hyperrectangle test functions are needed to control the W_p
//! radius of the moment set, and the explicit best-of-call family on a
//! small grid.

use mmot::cover::{best_of_call_basis, best_of_call_count, hyperrect_basis_count};

fn main() -> mmot::error::Result<()> {
    for eps in [1.0, 0.5, 0.1] {
        let n = hyperrect_basis_count(&[2.0, 2.0, 2.0], 1.0, 1.0, eps)?;
        println!("box [-1,1]^3, p = 1, eps = {eps}: {n} functions");
    }
    let grids = vec![vec![0.0, 0.5, 1.0], vec![0.0, 1.0]];
    for p in [1.0, 2.0] {
        let basis = best_of_call_basis(&grids, p)?;
        println!(
            "best-of-call family on a 3x2 grid, p = {p}: {} functions (count formula {})",
            basis.len(),
            best_of_call_count(&[3, 2], p)
        );
        let x = [0.7, 0.4];
        let values: Vec<f64> = basis.iter().take(5).map(|f| f.eval(&x)).collect();
        println!("  first values at {x:?}: {values:.3?}");
    }
    Ok(())
}
