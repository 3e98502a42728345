//! The relaxed transport problem on fixed covers: greedy initial coupling,
//! then cutting planes until the upper and lower bounds meet.

use mmot::cost::RandomCost;
use mmot::cover::{Cover1D, TestBasis};
use mmot::cutting_plane::{init_algorithm0, run_algorithm1, verify_moment_feasibility, CuttingPlaneOptions};
use mmot::marginals::MixtureGenerator;
use mmot::oracle::MilpOracle;

fn main() -> mmot::error::Result<()> {
    let marginals = MixtureGenerator::default().generate(3, 1)?;
    let cost = RandomCost::new(2, 2, 3).generate(vec![(-10.0, 10.0); 3])?;
    let bases: Vec<TestBasis> = marginals
        .iter()
        .map(|m| TestBasis::new(Cover1D::trivial(m).refine_greedy(m, 8)))
        .collect();
    let masses: Vec<Vec<f64>> = marginals
        .iter()
        .zip(&bases)
        .map(|(m, b)| m.hat_masses(b.knots()))
        .collect::<Result<_, _>>()?;
    let moments: Vec<Vec<f64>> = masses.iter().map(|v| v[1..].to_vec()).collect();

    let init = init_algorithm0(&masses, &bases)?;
    println!("initial coupling: {} atoms, degenerate = {}", init.atoms.len(), init.degenerate);

    let result = run_algorithm1(
        &cost,
        &bases,
        &moments,
        &init.active,
        &MilpOracle::default(),
        &CuttingPlaneOptions::default(),
    )?;
    for rec in result.log.iter().step_by(10) {
        println!("iter {:4}: master {:.6}, gap {:.2e}, active {}", rec.iteration, rec.master, rec.gap, rec.active);
    }
    println!(
        "{:?} after {} iterations: upper {:.8}, lower {:.8}",
        result.status,
        result.log.len(),
        result.upper,
        result.lower
    );
    let m: usize = bases.iter().map(|b| b.len()).sum();
    println!("support {} atoms (at most {} expected)", result.measure.len(), m + 1);
    let check = verify_moment_feasibility(&result.measure, &bases, &moments)?;
    println!("moment residual {:.2e}", check.max_residual);
    Ok(())
}
