//! Continuous piecewise-affine costs: construction, evaluation, Lipschitz
//! bounds, and a random instance.

use mmot::cost::{box_max_linear, random_instance, CpwaCost};

fn main() -> mmot::error::Result<()> {
    let bounds = vec![(-1.0, 1.0); 3];
    // |x1 + x2 - x3| - |x1 - 0.5|
    let cost = CpwaCost::from_abs_terms(
        &[(vec![1.0, 1.0, -1.0], 0.0)],
        &[(vec![1.0, 0.0, 0.0], 0.5)],
        bounds.clone(),
    )?;
    for x in [[0.0, 0.0, 0.0], [1.0, 1.0, -1.0], [0.5, -0.2, 0.3]] {
        println!("f({x:?}) = {:.4}", cost.eval(&x)?);
    }
    let lip = cost.lipschitz_l1();
    println!("l1 Lipschitz bound {:.4} (positive part {:?}, negative part {:?})", lip.total, lip.pos_blocks, lip.neg_blocks);
    println!("max of x1 + 2 x2 - x3 on the box: {}", box_max_linear(&[1.0, 2.0, -1.0], 0.0, &bounds));

    let random = random_instance(4, 2, 2, 7)?;
    println!(
        "random cost: {} positive blocks, {} negative blocks, f(0) = {:.4}",
        random.pos_blocks().len(),
        random.neg_blocks().len(),
        random.eval(&[0.0; 4])?
    );
    println!("{}", serde_json::to_string(&random.descriptor())?);
    Ok(())
}
