//! Builds the three kinds of one-dimensional marginals and evaluates their
//! cdf, quantile and the masses they assign to a hat basis.

use mmot::marginals::{Marginal1D, MixtureGenerator};

fn main() -> mmot::error::Result<()> {
    let mixture = Marginal1D::truncated_gaussian_mixture(
        vec![0.3, 0.7],
        vec![-2.0, 3.0],
        vec![1.0, 0.5],
        [-5.0, 5.0],
    )?;
    let uniform = Marginal1D::uniform(0.0, 2.0)?;
    let discrete = Marginal1D::discrete(vec![-1.0, 0.0, 1.0], vec![0.25, 0.5, 0.25])?;

    for (name, m) in [("mixture", &mixture), ("uniform", &uniform), ("discrete", &discrete)] {
        let (lo, hi) = m.support();
        println!("{name}: support [{lo}, {hi}]");
        for u in [0.1, 0.5, 0.9] {
            let x = m.quantile(u)?;
            println!("  quantile({u}) = {x:.6}, cdf back = {:.6}", m.cdf(x));
        }
        let knots: Vec<f64> = (0..=4).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect();
        let masses = m.hat_masses(&knots)?;
        println!("  hat masses on 5 knots: {masses:.4?} (sum {:.12})", masses.iter().sum::<f64>());
    }

    // random mixtures as used for the benchmark instances
    let generated = MixtureGenerator::default().generate(3, 42)?;
    for (i, m) in generated.iter().enumerate() {
        println!("random marginal {i}: median {:.4}", m.quantile(0.5)?);
    }
    Ok(())
}
