//! Uniform and greedy covers of a marginal's support, their certified W1
//! radius, and the hat basis they induce.

use mmot::cover::{Cover1D, TestBasis};
use mmot::marginals::Marginal1D;

fn main() -> mmot::error::Result<()> {
    let marginal = Marginal1D::truncated_gaussian_mixture(
        vec![0.5, 0.5],
        vec![-6.0, 4.0],
        vec![0.5, 2.0],
        [-10.0, 10.0],
    )?;

    let uniform = Cover1D::uniform(-10.0, 10.0, 8)?;
    let greedy = Cover1D::trivial(&marginal).refine_greedy(&marginal, 8);
    for (name, c) in [("uniform", &uniform), ("greedy", &greedy)] {
        println!("{name}: knots {:.3?}", c.knots());
        println!(
            "  2*mesh = {:.4}, mass-weighted estimate = {:.4}",
            c.radius_bound_w1(),
            c.radius_estimate_mass_weighted(&marginal)
        );
    }

    let basis = TestBasis::new(greedy);
    let x = 1.3;
    let values = basis.eval_full(x)?;
    println!("basis at {x}: {values:.4?}");
    println!("partition of unity: {:.15}", values.iter().sum::<f64>());
    println!("two nonzero entries: {:?}", basis.nonzero(x)?);
    Ok(())
}
