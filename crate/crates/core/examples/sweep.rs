//! Bounds as the covers are refined, written as CSV to stdout.

use mmot::driver::{sweep_knots, write_sweep_csv, ProblemConfig};

const CONFIG: &str = r#"{
    "marginals": {"random_mixture": {"count": 3, "seed": 2}},
    "cover": {"greedy": {"knots": 5}},
    "cost": {"random": {"k_pos": 2, "k_neg": 2, "seed": 8}},
    "mc": {"samples": 10000, "reps": 10, "seed": 1}
}"#;

fn main() -> mmot::error::Result<()> {
    let cfg = ProblemConfig::from_json(CONFIG)?;
    let reports = sweep_knots(&cfg, &[5, 10, 20, 40])?;
    write_sweep_csv(&reports, std::io::stdout())?;
    Ok(())
}
