//! End-to-end pipeline: marginals and covers, the relaxed problem, the
//! reassembled coupling, and the resulting pair of bounds on the transport
//! value with the theoretical sub-optimality budget.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cost::{CostDescriptor, CpwaCost, RandomCost};
use crate::cover::{Cover1D, TestBasis};
use crate::cutting_plane::{
    init_algorithm0, run_algorithm1, verify_moment_feasibility, CuttingPlaneOptions,
    CuttingPlaneResult, CuttingPlaneStatus,
};
use crate::error::{domain, Result};
use crate::marginals::{Marginal1D, MarginalDescriptor, MixtureGenerator};
use crate::oracle::{solve_bb, BbOptions, DualVector, MilpOracle};
use crate::reassembly::{build_sampler, estimate_upper_bound, projection_distances, McEstimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalsSpec {
    Explicit(Vec<MarginalDescriptor>),
    /// `count` random truncated Gaussian mixtures.
    RandomMixture {
        count: usize,
        seed: u64,
        #[serde(default)]
        generator: MixtureGenerator,
    },
}

impl MarginalsSpec {
    pub fn build(&self) -> Result<Vec<Marginal1D>> {
        match self {
            MarginalsSpec::Explicit(ds) => {
                if ds.is_empty() {
                    return domain("need at least one marginal");
                }
                ds.iter().cloned().map(Marginal1D::from_descriptor).collect()
            }
            MarginalsSpec::RandomMixture { count, seed, generator } => {
                if *count == 0 {
                    return domain("need at least one marginal");
                }
                generator.generate(*count, *seed)
            }
        }
    }
}

/// Knot counts, shared or one per marginal. A count includes both ends of
/// the support, so `k` knots give `k - 1` cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KnotCounts {
    Shared(usize),
    PerMarginal(Vec<usize>),
}

impl KnotCounts {
    fn get(&self, i: usize, n: usize) -> Result<usize> {
        let k = match self {
            KnotCounts::Shared(k) => *k,
            KnotCounts::PerMarginal(ks) => {
                if ks.len() != n {
                    return domain(format!("{} knot counts for {n} marginals", ks.len()));
                }
                ks[i]
            }
        };
        if k < 2 {
            return domain(format!("a cover needs at least two knots, got {k}"));
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverSpec {
    /// Evenly spaced knots over each support.
    Uniform { knots: KnotCounts },
    /// Repeated bisection of the cell with the most width times mass.
    Greedy { knots: KnotCounts },
    Explicit { knots: Vec<Vec<f64>> },
}

impl CoverSpec {
    pub fn build(&self, marginals: &[Marginal1D]) -> Result<Vec<Cover1D>> {
        let n = marginals.len();
        match self {
            CoverSpec::Uniform { knots } => marginals
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let (lo, hi) = m.support();
                    Cover1D::uniform(lo, hi, knots.get(i, n)? - 1)
                })
                .collect(),
            CoverSpec::Greedy { knots } => marginals
                .iter()
                .enumerate()
                .map(|(i, m)| Ok(Cover1D::trivial(m).refine_greedy(m, knots.get(i, n)? - 1)))
                .collect(),
            CoverSpec::Explicit { knots } => {
                if knots.len() != n {
                    return domain(format!("{} explicit covers for {n} marginals", knots.len()));
                }
                knots
                    .iter()
                    .zip(marginals)
                    .enumerate()
                    .map(|(i, (k, m))| {
                        let c = Cover1D::new(k.clone())?;
                        let (lo, hi) = m.support();
                        if c.lo() != lo || c.hi() != hi {
                            return domain(format!("cover {i} must span [{lo}, {hi}]"));
                        }
                        Ok(c)
                    })
                    .collect()
            }
        }
    }

    /// The same kind of cover with `knots` knots per marginal.
    pub fn with_knots(&self, knots: usize) -> Result<CoverSpec> {
        match self {
            CoverSpec::Uniform { .. } => Ok(CoverSpec::Uniform { knots: KnotCounts::Shared(knots) }),
            CoverSpec::Greedy { .. } => Ok(CoverSpec::Greedy { knots: KnotCounts::Shared(knots) }),
            CoverSpec::Explicit { .. } => domain("explicit covers have no knot count to vary"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostSpec {
    Explicit(CostDescriptor),
    Random(RandomCost),
}

impl CostSpec {
    pub fn build(&self, bounds: Vec<(f64, f64)>) -> Result<CpwaCost> {
        match self {
            CostSpec::Explicit(d) => CpwaCost::from_descriptor(d.clone(), bounds),
            CostSpec::Random(r) => r.generate(bounds),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub samples: usize,
    pub reps: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { samples: 100_000, reps: 50, seed: 0 }
    }
}

fn default_eps_lsip() -> f64 {
    1e-4
}

fn default_eps_milp() -> f64 {
    1e-8
}

fn default_max_iterations() -> usize {
    100_000
}

/// Everything needed for one solve; the box is the product of the
/// marginal supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub marginals: MarginalsSpec,
    pub cover: CoverSpec,
    pub cost: CostSpec,
    #[serde(default = "default_eps_lsip")]
    pub eps_lsip: f64,
    #[serde(default = "default_eps_milp")]
    pub eps_milp: f64,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Shift the cost so that its maximum over the box is zero.
    #[serde(default)]
    pub normalize_cost: bool,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// The concrete objects a configuration describes.
#[derive(Debug, Clone)]
pub struct Instance {
    pub marginals: Vec<Marginal1D>,
    pub cost: CpwaCost,
    /// Constant added to the configured cost.
    pub cost_shift: f64,
}

impl Instance {
    pub fn from_config(cfg: &ProblemConfig) -> Result<Self> {
        let marginals = cfg.marginals.build()?;
        let bounds: Vec<(f64, f64)> = marginals.iter().map(|m| m.support()).collect();
        let mut cost = cfg.cost.build(bounds)?;
        let mut cost_shift = 0.0;
        if cfg.normalize_cost {
            cost_shift = -max_over_box(&cost, cfg.eps_milp)?;
            cost = cost.shifted(cost_shift);
        }
        Ok(Self { marginals, cost, cost_shift })
    }
}

/// `max_x f(x)` over the cost's box, by minimizing `-f`.
pub fn max_over_box(cost: &CpwaCost, eps: f64) -> Result<f64> {
    let neg = cost.negated();
    let bases: Vec<TestBasis> = neg
        .bounds()
        .iter()
        .map(|&(lo, hi)| Ok(TestBasis::new(Cover1D::new(vec![lo, hi])?)))
        .collect::<Result<_>>()?;
    let model = crate::oracle::build_milp(&neg, &bases, &DualVector::zeros(&bases))?;
    Ok(-solve_bb(&model, eps)?.value)
}

/// `ε_LSIP + L_f Σ_i 2η(C_i)`.
pub fn theo_budget(lipschitz: f64, covers: &[Cover1D], eps_lsip: f64) -> f64 {
    eps_lsip + lipschitz * covers.iter().map(|c| c.radius_bound_w1()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub relaxation: f64,
    pub reassembly: f64,
    pub total: f64,
}

/// Outcome of one solve. Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub dim: usize,
    pub knots: Vec<usize>,
    pub eps_lsip: f64,
    pub alpha_lb: f64,
    pub alpha_ub: McEstimate,
    /// `alpha_ub.mean - alpha_lb`.
    pub eps_sub: f64,
    /// `alpha_ub.upper_999 - alpha_lb`.
    pub eps_sub_upper: f64,
    pub eps_theo: f64,
    pub lipschitz: f64,
    /// Certified W1 radius `2η` of each moment set.
    pub radii: Vec<f64>,
    /// Exact W1 distance between each projection of the relaxed optimizer
    /// and its marginal.
    pub projection_w1: Vec<f64>,
    pub relaxed_upper: f64,
    pub relaxed_lower: f64,
    pub relaxed_gap: f64,
    pub status: CuttingPlaneStatus,
    pub iterations: usize,
    pub support_size: usize,
    pub basis_size: usize,
    pub moment_residual: f64,
    pub cost_shift: f64,
    pub seconds: Timings,
}

impl BoundsReport {
    pub fn converged(&self) -> bool {
        self.status == CuttingPlaneStatus::Converged
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// Everything a solve produces, for callers that need more than the report.
#[derive(Debug, Clone)]
pub struct Solution {
    pub report: BoundsReport,
    pub covers: Vec<Cover1D>,
    pub relaxation: CuttingPlaneResult,
}

pub fn solve_mmot(cfg: &ProblemConfig) -> Result<BoundsReport> {
    let instance = Instance::from_config(cfg)?;
    let covers = cfg.cover.build(&instance.marginals)?;
    Ok(solve_with_covers(cfg, &instance, covers)?.report)
}

/// Runs the pipeline on prepared covers.
pub fn solve_with_covers(cfg: &ProblemConfig, instance: &Instance, covers: Vec<Cover1D>) -> Result<Solution> {
    let started = Instant::now();
    let marginals = &instance.marginals;
    let cost = &instance.cost;
    if covers.len() != marginals.len() {
        return domain("need one cover per marginal");
    }
    let bases: Vec<TestBasis> = covers.iter().cloned().map(TestBasis::new).collect();
    let masses: Vec<Vec<f64>> = marginals
        .iter()
        .zip(&bases)
        .map(|(m, b)| m.hat_masses(b.knots()))
        .collect::<Result<_>>()?;
    let moments: Vec<Vec<f64>> = masses.iter().map(|v| v[1..].to_vec()).collect();
    let init = init_algorithm0(&masses, &bases)?;
    let oracle = MilpOracle {
        options: BbOptions { eps: cfg.eps_milp, ..MilpOracle::default().options },
    };
    let opts = CuttingPlaneOptions { eps_lsip: cfg.eps_lsip, max_iterations: cfg.max_iterations };
    let relaxation = run_algorithm1(cost, &bases, &moments, &init.active, &oracle, &opts)?;
    let relaxation_secs = started.elapsed().as_secs_f64();

    let reassembly_started = Instant::now();
    let moment = verify_moment_feasibility(&relaxation.measure, &bases, &moments)?;
    let sampler = build_sampler(&relaxation.measure, marginals)?;
    let alpha_ub = estimate_upper_bound(cost, &sampler, cfg.mc.samples, cfg.mc.reps, cfg.mc.seed)?;
    let projection_w1 = projection_distances(&relaxation.measure, marginals)?;
    let reassembly_secs = reassembly_started.elapsed().as_secs_f64();

    let lipschitz = cost.lipschitz_l1().total;
    let alpha_lb = relaxation.lower;
    let report = BoundsReport {
        dim: marginals.len(),
        knots: covers.iter().map(|c| c.knots().len()).collect(),
        eps_lsip: cfg.eps_lsip,
        alpha_lb,
        eps_sub: alpha_ub.mean - alpha_lb,
        eps_sub_upper: alpha_ub.upper_999 - alpha_lb,
        alpha_ub,
        eps_theo: theo_budget(lipschitz, &covers, cfg.eps_lsip),
        lipschitz,
        radii: covers.iter().map(|c| c.radius_bound_w1()).collect(),
        projection_w1,
        relaxed_upper: relaxation.upper,
        relaxed_lower: relaxation.lower,
        relaxed_gap: relaxation.gap(),
        status: relaxation.status,
        iterations: relaxation.log.len(),
        support_size: relaxation.measure.len(),
        basis_size: bases.iter().map(|b| b.len()).sum(),
        moment_residual: moment.max_residual,
        cost_shift: instance.cost_shift,
        seconds: Timings {
            relaxation: relaxation_secs,
            reassembly: reassembly_secs,
            total: started.elapsed().as_secs_f64(),
        },
    };
    Ok(Solution { report, covers, relaxation })
}

/// One line of a knot sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub knots: usize,
    pub alpha_lb: f64,
    pub alpha_ub: f64,
    pub ub_ci95: f64,
    pub eps_sub: f64,
    pub eps_theo: f64,
    pub iters: usize,
    pub seconds: f64,
}

impl From<&BoundsReport> for SweepRow {
    fn from(r: &BoundsReport) -> Self {
        Self {
            knots: r.knots.iter().copied().max().unwrap_or(0),
            alpha_lb: r.alpha_lb,
            alpha_ub: r.alpha_ub.mean,
            ub_ci95: r.alpha_ub.ci95_half_width(),
            eps_sub: r.eps_sub,
            eps_theo: r.eps_theo,
            iters: r.iterations,
            seconds: r.seconds.total,
        }
    }
}

/// Solves once per knot count. Greedy covers are refined from the
/// previous count's covers, so consecutive covers are nested.
pub fn sweep_knots(cfg: &ProblemConfig, counts: &[usize]) -> Result<Vec<BoundsReport>> {
    if counts.is_empty() || counts.windows(2).any(|w| w[0] >= w[1]) {
        return domain("knot counts must be nonempty and strictly increasing");
    }
    let instance = Instance::from_config(cfg)?;
    let mut previous: Option<Vec<Cover1D>> = None;
    let mut out = Vec::with_capacity(counts.len());
    for &k in counts {
        let covers = match (&cfg.cover, &previous) {
            (CoverSpec::Greedy { .. }, Some(prev)) => prev
                .iter()
                .zip(&instance.marginals)
                .map(|(c, m)| c.refine_greedy(m, k - 1))
                .collect(),
            _ => cfg.cover.with_knots(k)?.build(&instance.marginals)?,
        };
        let sol = solve_with_covers(cfg, &instance, covers)?;
        log::info!("{k} knots: lower {:.6} upper {:.6}", sol.report.alpha_lb, sol.report.alpha_ub.mean);
        previous = Some(sol.covers);
        out.push(sol.report);
    }
    Ok(out)
}

pub fn write_sweep_csv<W: Write>(reports: &[BoundsReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(SweepRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Branch-and-bound against exhaustive grid search on one random
/// instance over `[-1, 1]^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub dim: usize,
    pub seed: u64,
    pub resolution: f64,
    pub bb_value: f64,
    pub bb_x: Vec<f64>,
    pub grid_value: f64,
    pub grid_certificate: f64,
    pub difference: f64,
    pub agrees: bool,
}

/// Random cost, covers and dual vector used by [`oracle_check`].
pub fn oracle_check_instance(dim: usize, seed: u64) -> Result<(CpwaCost, Vec<TestBasis>, DualVector)> {
    use rand::{Rng, SeedableRng};
    if dim == 0 {
        return domain("dimension must be positive");
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let spec = RandomCost { k_pos: 2, k_neg: 2, seed: rng.random(), t_range: [-0.5, 0.5] };
    let cost = spec.generate(vec![(-1.0, 1.0); dim])?;
    let bases: Vec<TestBasis> = (0..dim)
        .map(|_| Ok(TestBasis::new(Cover1D::uniform(-1.0, 1.0, rng.random_range(2..6))?)))
        .collect::<Result<_>>()?;
    let y = DualVector {
        y0: 0.0,
        y: bases
            .iter()
            .map(|b| (0..b.len()).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect(),
    };
    Ok((cost, bases, y))
}

/// Grid spacing `1e-3`, coarsened so the grid stays within `max_points`.
pub fn oracle_check(dim: usize, seed: u64, max_points: u64) -> Result<OracleCheck> {
    let (cost, bases, y) = oracle_check_instance(dim, seed)?;
    let per_axis = (max_points as f64).powf(1.0 / dim as f64).floor() - 1.0;
    let resolution = if per_axis >= 1.0 { (2.0 / per_axis).max(1e-3) } else { 2.0 };
    let bb = solve_bb(&crate::oracle::build_milp(&cost, &bases, &y)?, 1e-8)?;
    let grid = crate::oracle::grid_oracle(&cost, &bases, &y, resolution, max_points)?;
    let difference = (bb.value - grid.value).abs();
    Ok(OracleCheck {
        dim,
        seed,
        resolution,
        bb_value: bb.value,
        bb_x: bb.x,
        grid_value: grid.value,
        grid_certificate: grid.gap,
        difference,
        agrees: difference <= grid.gap + 1e-8,
    })
}

/// Per-marginal radii and the theoretical budget of a configuration,
/// without solving.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusReport {
    pub knots: Vec<usize>,
    pub radii: Vec<f64>,
    pub lipschitz: f64,
    pub eps_theo: f64,
}

pub fn radius_report(cfg: &ProblemConfig) -> Result<RadiusReport> {
    let marginals = cfg.marginals.build()?;
    let bounds: Vec<(f64, f64)> = marginals.iter().map(|m| m.support()).collect();
    let cost = cfg.cost.build(bounds)?;
    let covers = cfg.cover.build(&marginals)?;
    let lipschitz = cost.lipschitz_l1().total;
    Ok(RadiusReport {
        knots: covers.iter().map(|c| c.knots().len()).collect(),
        radii: covers.iter().map(|c| c.radius_bound_w1()).collect(),
        lipschitz,
        eps_theo: theo_budget(lipschitz, &covers, cfg.eps_lsip),
    })
}
