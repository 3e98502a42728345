//! Global minimization of `f(x) - y₀ - Σ_i Σ_j y_{i,j} g_{i,j}(x_i)` over the
//! box, the separation step of the cutting-plane method.
//!
//! [`build_milp`] writes the problem as a mixed-integer linear program:
//! positive blocks through epigraph variables, negative blocks through
//! big-M selection binaries, and each coordinate's piecewise-linear payoff
//! through an incremental chain of fill variables `z` with ordering binaries
//! `ι`. [`solve_bb`] runs best-first branch-and-bound on that model. Node
//! relaxations are solved in the convex-combination form of the payoff
//! chain, which has the same relaxed value as the incremental form once the
//! branching decisions are translated into knot ranges, but far fewer rows.
//!
//! [`grid_oracle`] is a brute-force check with a Lipschitz certificate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::cost::{box_max_linear, CpwaCost};
use crate::cover::TestBasis;
use crate::error::{domain, Error, Result};
use crate::lp::{LpProblem, LpStatus, RowKind, Sense};

const INTEGRALITY_TOL: f64 = 1e-9;

/// Dual variables of the relaxed transport problem: the constant `y₀` and
/// one coefficient per basis function of each marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVector {
    pub y0: f64,
    pub y: Vec<Vec<f64>>,
}

impl DualVector {
    pub fn zeros(bases: &[TestBasis]) -> Self {
        Self { y0: 0.0, y: bases.iter().map(|b| vec![0.0; b.len()]).collect() }
    }

    /// `⟨ḡ, y⟩` for moment vectors laid out like `y`.
    pub fn dot_moments(&self, moments: &[Vec<f64>]) -> f64 {
        self.y
            .iter()
            .zip(moments)
            .map(|(y, g)| y.iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }
}

/// `f(x) - y₀ - Σ_i Σ_j y_{i,j} g_{i,j}(x_i)`, without bounds checks.
pub fn dual_slack(cost: &CpwaCost, bases: &[TestBasis], y: &DualVector, x: &[f64]) -> f64 {
    let payoff: f64 = bases.iter().zip(&y.y).zip(x).map(|((b, yi), xi)| b.combine(yi, *xi)).sum();
    cost.eval_unchecked(x) - y.y0 - payoff
}

fn check_dims(cost: &CpwaCost, bases: &[TestBasis], y: &DualVector) -> Result<()> {
    if bases.len() != cost.dim() || y.y.len() != cost.dim() {
        return domain(format!(
            "cost has dimension {}, got {} bases and {} dual blocks",
            cost.dim(),
            bases.len(),
            y.y.len()
        ));
    }
    for (i, (b, yi)) in bases.iter().zip(&y.y).enumerate() {
        if b.len() != yi.len() {
            return domain(format!("dual block {i} has {} entries, basis has {}", yi.len(), b.len()));
        }
        let (lo, hi) = cost.bounds()[i];
        if (b.cover().lo() - lo).abs() > 1e-12 || (b.cover().hi() - hi).abs() > 1e-12 {
            return domain(format!("cover {i} does not span the box side [{lo}, {hi}]"));
        }
    }
    Ok(())
}

/// Outcome of a global minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub x: Vec<f64>,
    /// Objective value at `x`.
    pub value: f64,
    /// Near-optimal points with their values, best first; contains `x`.
    pub pool: Vec<(Vec<f64>, f64)>,
    /// Certified bound on `value - true minimum`.
    pub gap: f64,
    /// Branch-and-bound nodes solved (grid points for the grid oracle).
    pub work: usize,
}

impl OracleResult {
    /// A certified lower bound on the true minimum.
    pub fn lower_bound(&self) -> f64 {
        self.value - self.gap
    }
}

/// Indices of the model variables, grouped by role.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpVars {
    pub x: Vec<usize>,
    pub lambda: Vec<usize>,
    pub zeta: Vec<usize>,
    pub s: Vec<Vec<usize>>,
    pub delta: Vec<Vec<usize>>,
    pub z: Vec<Vec<usize>>,
    pub iota: Vec<Vec<usize>>,
}

/// The mixed-integer program for one dual vector. The LP part holds every
/// constraint with binaries relaxed to `[0, 1]`; the objective constant
/// `-y₀` is kept apart.
#[derive(Debug, Clone)]
pub struct MilpModel {
    relaxation: LpProblem,
    constant: f64,
    vars: MilpVars,
    binaries: Vec<usize>,
    big_m: Vec<Vec<f64>>,
    cost: CpwaCost,
    bases: Vec<TestBasis>,
    y: DualVector,
}

/// Big-M constants of every negative block over the given box.
fn big_m_constants(cost: &CpwaCost, bounds: &[(f64, f64)]) -> Vec<Vec<f64>> {
    cost.neg_blocks()
        .iter()
        .map(|block| {
            block
                .iter()
                .map(|pi| {
                    block
                        .iter()
                        .map(|pj| {
                            let a: Vec<f64> = pj.a.iter().zip(&pi.a).map(|(u, v)| u - v).collect();
                            box_max_linear(&a, pj.b - pi.b, bounds)
                        })
                        .fold(0.0, f64::max)
                })
                .collect()
        })
        .collect()
}

pub fn build_milp(cost: &CpwaCost, bases: &[TestBasis], y: &DualVector) -> Result<MilpModel> {
    check_dims(cost, bases, y)?;
    let n = cost.dim();
    let inf = f64::INFINITY;
    let mut lp = LpProblem::new(Sense::Minimize);
    let mut binaries = Vec::new();

    let x: Vec<usize> = cost.bounds().iter().map(|&(lo, hi)| lp.add_var(0.0, lo, hi)).collect();
    let lambda: Vec<usize> = cost.pos_blocks().iter().map(|_| lp.add_var(1.0, -inf, inf)).collect();
    let zeta: Vec<usize> = cost.neg_blocks().iter().map(|_| lp.add_var(-1.0, -inf, inf)).collect();
    let s: Vec<Vec<usize>> = cost
        .neg_blocks()
        .iter()
        .map(|b| b.iter().map(|_| lp.add_var(0.0, 0.0, inf)).collect())
        .collect();
    let delta: Vec<Vec<usize>> = cost
        .neg_blocks()
        .iter()
        .map(|b| {
            b.iter()
                .map(|_| {
                    let v = lp.add_var(0.0, 0.0, 1.0);
                    binaries.push(v);
                    v
                })
                .collect()
        })
        .collect();
    let mut z = Vec::with_capacity(n);
    for (basis, yi) in bases.iter().zip(&y.y) {
        let vars: Vec<usize> = (0..basis.len())
            .map(|j| {
                let prev = if j == 0 { 0.0 } else { yi[j - 1] };
                lp.add_var(-(yi[j] - prev), -inf, inf)
            })
            .collect();
        z.push(vars);
    }
    let mut iota = Vec::with_capacity(n);
    for basis in bases {
        let vars: Vec<usize> = (0..basis.len() - 1)
            .map(|_| {
                let v = lp.add_var(0.0, 0.0, 1.0);
                binaries.push(v);
                v
            })
            .collect();
        iota.push(vars);
    }

    let linear = |a: &[f64], extra: &[(usize, f64)]| -> Vec<(usize, f64)> {
        a.iter().enumerate().map(|(i, v)| (x[i], *v)).chain(extra.iter().copied()).collect()
    };
    for (k, block) in cost.pos_blocks().iter().enumerate() {
        for piece in block {
            lp.add_row(&linear(&piece.a, &[(lambda[k], -1.0)]), RowKind::Le, -piece.b)?;
        }
    }
    let big_m = big_m_constants(cost, cost.bounds());
    for (k, block) in cost.neg_blocks().iter().enumerate() {
        for (i, piece) in block.iter().enumerate() {
            lp.add_row(
                &linear(&piece.a, &[(s[k][i], 1.0), (zeta[k], -1.0)]),
                RowKind::Eq,
                -piece.b,
            )?;
            lp.add_row(&[(s[k][i], 1.0), (delta[k][i], big_m[k][i])], RowKind::Le, big_m[k][i])?;
        }
        let sum: Vec<(usize, f64)> = delta[k].iter().map(|&d| (d, 1.0)).collect();
        lp.add_row(&sum, RowKind::Eq, 1.0)?;
    }
    for (i, basis) in bases.iter().enumerate() {
        let m = basis.len();
        let knots = basis.knots();
        lp.add_row(&[(z[i][0], 1.0)], RowKind::Le, 1.0)?;
        lp.add_row(&[(z[i][m - 1], 1.0)], RowKind::Ge, 0.0)?;
        for j in 0..m - 1 {
            lp.add_row(&[(z[i][j + 1], 1.0), (iota[i][j], -1.0)], RowKind::Le, 0.0)?;
            lp.add_row(&[(iota[i][j], 1.0), (z[i][j], -1.0)], RowKind::Le, 0.0)?;
        }
        let mut row: Vec<(usize, f64)> =
            (0..m).map(|j| (z[i][j], knots[j + 1] - knots[j])).collect();
        row.push((x[i], -1.0));
        lp.add_row(&row, RowKind::Eq, -knots[0])?;
    }

    Ok(MilpModel {
        relaxation: lp,
        constant: -y.y0,
        vars: MilpVars { x, lambda, zeta, s, delta, z, iota },
        binaries,
        big_m,
        cost: cost.clone(),
        bases: bases.to_vec(),
        y: y.clone(),
    })
}

impl MilpModel {
    /// The model with binaries relaxed to `[0, 1]`.
    pub fn relaxation(&self) -> &LpProblem {
        &self.relaxation
    }

    pub fn objective_constant(&self) -> f64 {
        self.constant
    }

    pub fn vars(&self) -> &MilpVars {
        &self.vars
    }

    pub fn binaries(&self) -> &[usize] {
        &self.binaries
    }

    pub fn big_m(&self) -> &[Vec<f64>] {
        &self.big_m
    }

    pub fn num_vars(&self) -> usize {
        self.relaxation.num_vars()
    }

    /// Objective value of a full assignment, constant included.
    pub fn objective(&self, values: &[f64]) -> f64 {
        self.relaxation.cost().iter().zip(values).map(|(c, v)| c * v).sum::<f64>() + self.constant
    }

    /// Largest violation of any row, bound or integrality requirement.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lp = &self.relaxation;
        let mut activity = vec![0.0; lp.num_rows()];
        let mut worst = 0.0f64;
        for (j, &v) in values.iter().enumerate() {
            for &(r, a) in lp.column(j) {
                activity[r] += a * v;
            }
            let (lo, hi) = lp.bounds(j);
            worst = worst.max(lo - v).max(v - hi);
        }
        for (r, (&kind, &b)) in lp.row_kinds().iter().zip(lp.rhs()).enumerate() {
            let gap = activity[r] - b;
            worst = worst.max(match kind {
                RowKind::Eq => gap.abs(),
                RowKind::Le => gap,
                RowKind::Ge => -gap,
            });
        }
        for &j in &self.binaries {
            worst = worst.max(values[j].min(1.0 - values[j]).abs());
        }
        worst
    }

    /// The feasible assignment that places the model at box point `x`.
    pub fn encode_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.cost.contains(x) {
            return domain(format!("point {x:?} is outside the box"));
        }
        let v = &self.vars;
        let mut out = vec![0.0; self.num_vars()];
        for (i, &xi) in x.iter().enumerate() {
            out[v.x[i]] = xi;
        }
        for (k, block) in self.cost.pos_blocks().iter().enumerate() {
            out[v.lambda[k]] = block.iter().map(|p| p.eval(x)).fold(f64::NEG_INFINITY, f64::max);
        }
        for (k, block) in self.cost.neg_blocks().iter().enumerate() {
            let vals: Vec<f64> = block.iter().map(|p| p.eval(x)).collect();
            let (arg, top) = vals
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &val)| if val > acc.1 { (i, val) } else { acc });
            out[v.zeta[k]] = top;
            for (i, val) in vals.iter().enumerate() {
                out[v.s[k][i]] = top - val;
                out[v.delta[k][i]] = if i == arg { 1.0 } else { 0.0 };
            }
        }
        for (i, basis) in self.bases.iter().enumerate() {
            let (z, iota) = fill_chain(basis.knots(), x[i]);
            for (j, val) in z.into_iter().enumerate() {
                out[v.z[i][j]] = val;
            }
            for (j, val) in iota.into_iter().enumerate() {
                out[v.iota[i][j]] = val;
            }
        }
        Ok(out)
    }
}

/// Fill fractions `z_j` of the cells `[κ_{j-1}, κ_j]` and ordering binaries
/// that place a point at `x`.
pub fn fill_chain(knots: &[f64], x: f64) -> (Vec<f64>, Vec<f64>) {
    let m = knots.len() - 1;
    let cell = knots.partition_point(|&k| k < x).clamp(1, m);
    let t = ((x - knots[cell - 1]) / (knots[cell] - knots[cell - 1])).clamp(0.0, 1.0);
    let z = (1..=m)
        .map(|j| match j.cmp(&cell) {
            Ordering::Less => 1.0,
            Ordering::Equal => t,
            Ordering::Greater => 0.0,
        })
        .collect();
    let iota = (1..m).map(|j| if j < cell { 1.0 } else { 0.0 }).collect();
    (z, iota)
}

/// Branch-and-bound settings.
#[derive(Debug, Clone, PartialEq)]
pub struct BbOptions {
    /// Absolute optimality gap at which the search stops.
    pub eps: f64,
    /// Points within this distance of the best value join the pool.
    pub pool_slack: f64,
    pub pool_cap: usize,
    pub node_limit: usize,
}

impl Default for BbOptions {
    fn default() -> Self {
        Self { eps: 1e-8, pool_slack: 1e-6, pool_cap: 32, node_limit: 2_000_000 }
    }
}

/// Branching state: an allowed knot range per coordinate and the fixed
/// selection binaries.
#[derive(Debug, Clone)]
struct Node {
    ranges: Vec<(usize, usize)>,
    delta_fix: Vec<Vec<Option<bool>>>,
}

struct Queued {
    bound: f64,
    seq: usize,
    node: Node,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // reversed so the max-heap pops the smallest bound, then the oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.seq.cmp(&self.seq))
    }
}

struct Relaxed {
    bound: f64,
    x: Vec<f64>,
    /// convex weights per coordinate over the node's knot range
    weights: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

/// Knot values `ŷ_{i,l}` of each coordinate's payoff, with `ŷ_{i,0} = 0`.
fn knot_payoffs(y: &DualVector) -> Vec<Vec<f64>> {
    y.y.iter().map(|yi| std::iter::once(0.0).chain(yi.iter().copied()).collect()).collect()
}

fn solve_node(model: &MilpModel, payoffs: &[Vec<f64>], node: &Node) -> Result<Option<Relaxed>> {
    let cost = &model.cost;
    let inf = f64::INFINITY;
    let mut lp = LpProblem::new(Sense::Minimize);
    let bounds: Vec<(f64, f64)> = node
        .ranges
        .iter()
        .zip(&model.bases)
        .map(|(&(a, b), basis)| (basis.knots()[a], basis.knots()[b]))
        .collect();
    let x: Vec<usize> = bounds.iter().map(|&(lo, hi)| lp.add_var(0.0, lo, hi)).collect();
    let mut w = Vec::with_capacity(x.len());
    for (i, &(a, b)) in node.ranges.iter().enumerate() {
        let vars: Vec<usize> = (a..=b).map(|l| lp.add_var(-payoffs[i][l], 0.0, inf)).collect();
        let knots = model.bases[i].knots();
        let ones: Vec<(usize, f64)> = vars.iter().map(|&v| (v, 1.0)).collect();
        lp.add_row(&ones, RowKind::Eq, 1.0)?;
        let mut link: Vec<(usize, f64)> =
            vars.iter().zip(a..=b).map(|(&v, l)| (v, knots[l])).collect();
        link.push((x[i], -1.0));
        lp.add_row(&link, RowKind::Eq, 0.0)?;
        w.push(vars);
    }
    let linear = |a: &[f64], extra: &[(usize, f64)]| -> Vec<(usize, f64)> {
        a.iter().enumerate().map(|(i, v)| (x[i], *v)).chain(extra.iter().copied()).collect()
    };
    for block in cost.pos_blocks() {
        let lambda = lp.add_var(1.0, -inf, inf);
        for piece in block {
            lp.add_row(&linear(&piece.a, &[(lambda, -1.0)]), RowKind::Le, -piece.b)?;
        }
    }
    let big_m = big_m_constants(cost, &bounds);
    let mut delta = Vec::with_capacity(cost.neg_blocks().len());
    for (k, block) in cost.neg_blocks().iter().enumerate() {
        let zeta = lp.add_var(-1.0, -inf, inf);
        let mut dvars = Vec::with_capacity(block.len());
        for (i, piece) in block.iter().enumerate() {
            let s = lp.add_var(0.0, 0.0, inf);
            let (lo, hi) = match node.delta_fix[k][i] {
                Some(true) => (1.0, 1.0),
                Some(false) => (0.0, 0.0),
                None => (0.0, 1.0),
            };
            let d = lp.add_var(0.0, lo, hi);
            lp.add_row(&linear(&piece.a, &[(s, 1.0), (zeta, -1.0)]), RowKind::Eq, -piece.b)?;
            lp.add_row(&[(s, 1.0), (d, big_m[k][i])], RowKind::Le, big_m[k][i])?;
            dvars.push(d);
        }
        let ones: Vec<(usize, f64)> = dvars.iter().map(|&d| (d, 1.0)).collect();
        lp.add_row(&ones, RowKind::Eq, 1.0)?;
        delta.push(dvars);
    }

    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Ok(None),
        LpStatus::Unbounded => {
            return Err(Error::Numerical("node relaxation reported unbounded".into()))
        }
    }
    let p = &sol.primal;
    Ok(Some(Relaxed {
        bound: sol.objective + model.constant,
        x: x.iter().zip(cost.bounds()).map(|(&v, &(lo, hi))| p[v].clamp(lo, hi)).collect(),
        weights: w.iter().map(|vars| vars.iter().map(|&v| p[v].max(0.0)).collect()).collect(),
        delta: delta.iter().map(|ds| ds.iter().map(|&d| p[d]).collect()).collect(),
    }))
}

enum Branch {
    Delta(usize, usize),
    /// split coordinate `i` at knot `j`
    Iota(usize, usize),
}

/// Most fractional binary, selection binaries before ordering binaries and
/// lower indices first on ties.
fn pick_branch(node: &Node, r: &Relaxed) -> Option<Branch> {
    let mut best: Option<(f64, Branch)> = None;
    let mut consider = |score: f64, b: Branch| {
        if score > INTEGRALITY_TOL && best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, b));
        }
    };
    for (k, ds) in r.delta.iter().enumerate() {
        for (i, &d) in ds.iter().enumerate() {
            consider(d.min(1.0 - d), Branch::Delta(k, i));
        }
    }
    for (i, (&(a, b), w)) in node.ranges.iter().zip(&r.weights).enumerate() {
        // z_j is the weight on knots j..=b; the ordering binary between
        // cells j and j+1 is fractional by min(z_{j+1}, 1 - z_j)
        let mut tail = vec![0.0; b - a + 2];
        for l in (0..=b - a).rev() {
            tail[l] = tail[l + 1] + w[l];
        }
        for j in a + 1..b {
            let z_j = tail[j - a];
            let z_next = tail[j + 1 - a];
            consider(z_next.min(1.0 - z_j), Branch::Iota(i, j));
        }
    }
    best.map(|(_, b)| b)
}

/// Candidate points a relaxation suggests: its own `x`, and `x` with every
/// coordinate moved to its heaviest knot.
fn candidates(model: &MilpModel, node: &Node, r: &Relaxed) -> [Vec<f64>; 2] {
    let snapped = node
        .ranges
        .iter()
        .zip(&r.weights)
        .zip(&model.bases)
        .map(|((&(a, _), w), basis)| {
            let l = w.iter().enumerate().fold(0, |best, (l, v)| if *v > w[best] { l } else { best });
            basis.knots()[a + l]
        })
        .collect();
    [r.x.clone(), snapped]
}

fn root_node(model: &MilpModel) -> Node {
    Node {
        ranges: model.bases.iter().map(|b| (0, b.len())).collect(),
        delta_fix: model.cost.neg_blocks().iter().map(|b| vec![None; b.len()]).collect(),
    }
}

/// Value of the root relaxation as solved inside [`solve_bb`].
pub fn root_relaxation_bound(model: &MilpModel) -> Result<f64> {
    let r = solve_node(model, &knot_payoffs(&model.y), &root_node(model))?;
    r.map(|r| r.bound).ok_or_else(|| Error::Numerical("root relaxation infeasible".into()))
}

/// Best-first branch-and-bound with default settings apart from `eps`.
pub fn solve_bb(model: &MilpModel, eps: f64) -> Result<OracleResult> {
    solve_bb_with(model, &BbOptions { eps, ..BbOptions::default() })
}

pub fn solve_bb_with(model: &MilpModel, opts: &BbOptions) -> Result<OracleResult> {
    if !(opts.eps > 0.0) {
        return domain(format!("branch-and-bound tolerance must be positive, got {}", opts.eps));
    }
    let payoffs = knot_payoffs(&model.y);
    let root = root_node(model);
    let mut seen: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let offer = |x: Vec<f64>, seen: &mut Vec<(Vec<f64>, f64)>, inc: &mut Option<(Vec<f64>, f64)>| {
        let v = dual_slack(&model.cost, &model.bases, &model.y, &x);
        if inc.as_ref().is_none_or(|(_, best)| v < *best) {
            *inc = Some((x.clone(), v));
        }
        seen.push((x, v));
    };

    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    let mut nodes = 0;
    // smallest bound among nodes discarded without being fully explored
    let mut pruned_bound = f64::INFINITY;

    let process = |node: Node,
                       heap: &mut BinaryHeap<Queued>,
                       seen: &mut Vec<(Vec<f64>, f64)>,
                       inc: &mut Option<(Vec<f64>, f64)>,
                       seq: &mut usize,
                       nodes: &mut usize|
     -> Result<()> {
        *nodes += 1;
        let Some(r) = solve_node(model, &payoffs, &node)? else {
            return Ok(());
        };
        for c in candidates(model, &node, &r) {
            offer(c, seen, inc);
        }
        let Some(branch) = pick_branch(&node, &r) else {
            // integral relaxation: its value is attained, nothing to split
            return Ok(());
        };
        let children = match branch {
            Branch::Delta(k, i) => [false, true].map(|v| {
                let mut c = node.clone();
                c.delta_fix[k][i] = Some(v);
                c
            }),
            Branch::Iota(i, j) => [false, true].map(|v| {
                let mut c = node.clone();
                if v {
                    c.ranges[i].0 = j;
                } else {
                    c.ranges[i].1 = j;
                }
                c
            }),
        };
        for child in children {
            heap.push(Queued { bound: r.bound, seq: *seq, node: child });
            *seq += 1;
        }
        Ok(())
    };

    process(root, &mut heap, &mut seen, &mut incumbent, &mut seq, &mut nodes)?;
    while let Some(q) = heap.pop() {
        let best = incumbent.as_ref().map_or(f64::INFINITY, |(_, v)| *v);
        if q.bound >= best - opts.eps {
            pruned_bound = pruned_bound.min(q.bound);
            break;
        }
        if nodes >= opts.node_limit {
            return Err(Error::Budget(format!(
                "branch-and-bound exceeded {} nodes (gap {:.3e})",
                opts.node_limit,
                best - q.bound
            )));
        }
        process(q.node, &mut heap, &mut seen, &mut incumbent, &mut seq, &mut nodes)?;
    }

    let (x, value) = incumbent.ok_or_else(|| Error::Numerical("root relaxation infeasible".into()))?;
    let gap = (value - pruned_bound).max(0.0);
    Ok(OracleResult { pool: build_pool(seen, value, opts), x, value, gap, work: nodes })
}

fn build_pool(mut seen: Vec<(Vec<f64>, f64)>, best: f64, opts: &BbOptions) -> Vec<(Vec<f64>, f64)> {
    seen.retain(|(_, v)| *v <= best + opts.pool_slack);
    seen.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut pool: Vec<(Vec<f64>, f64)> = Vec::new();
    for (x, v) in seen {
        if pool.len() >= opts.pool_cap {
            break;
        }
        let dup = pool
            .iter()
            .any(|(p, _)| p.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-12));
        if !dup {
            pool.push((x, v));
        }
    }
    pool
}

/// Exhaustive minimization over a grid with spacing at most `h`, with a
/// certificate `L·h·N/2` bounding how far the grid minimum can sit above
/// the true minimum. `L` is the cost's ℓ1 Lipschitz bound plus the largest
/// slope of any coordinate payoff.
pub fn grid_oracle(
    cost: &CpwaCost,
    bases: &[TestBasis],
    y: &DualVector,
    h: f64,
    max_points: u64,
) -> Result<OracleResult> {
    check_dims(cost, bases, y)?;
    if !(h > 0.0) {
        return domain(format!("grid resolution must be positive, got {h}"));
    }
    let axes: Vec<Vec<f64>> = cost
        .bounds()
        .iter()
        .map(|&(lo, hi)| {
            let n = ((hi - lo) / h - 1e-9).ceil().max(1.0) as usize;
            (0..=n).map(|k| if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 }).collect()
        })
        .collect();
    let total = axes.iter().try_fold(1u64, |acc, a| acc.checked_mul(a.len() as u64));
    match total {
        Some(t) if t <= max_points => {}
        _ => {
            return Err(Error::Budget(format!(
                "grid with resolution {h} exceeds {max_points} points"
            )))
        }
    }
    let dim = axes.len();
    let mut idx = vec![0usize; dim];
    let mut x: Vec<f64> = axes.iter().map(|a| a[0]).collect();
    let mut best = (x.clone(), f64::INFINITY);
    let mut count = 0usize;
    loop {
        count += 1;
        let v = dual_slack(cost, bases, y, &x);
        if v < best.1 {
            best = (x.clone(), v);
        }
        let mut pos = 0;
        while pos < dim {
            idx[pos] += 1;
            if idx[pos] < axes[pos].len() {
                x[pos] = axes[pos][idx[pos]];
                break;
            }
            idx[pos] = 0;
            x[pos] = axes[pos][0];
            pos += 1;
        }
        if pos == dim {
            break;
        }
    }
    let slope = bases
        .iter()
        .zip(&y.y)
        .map(|(b, yi)| b.combination_lipschitz(yi))
        .fold(0.0, f64::max);
    let lipschitz = cost.lipschitz_l1().total + slope;
    let gap = lipschitz * h * dim as f64 / 2.0;
    Ok(OracleResult { pool: vec![best.clone()], x: best.0, value: best.1, gap, work: count })
}

/// Anything that can solve the separation problem for a dual vector.
pub trait GlobalOracle: Sync {
    fn minimize(&self, cost: &CpwaCost, bases: &[TestBasis], y: &DualVector) -> Result<OracleResult>;
}

/// The mixed-integer oracle. By default every distinct candidate met
/// during the search joins the pool, up to the cap, so one call can supply
/// many cuts.
#[derive(Debug, Clone)]
pub struct MilpOracle {
    pub options: BbOptions,
}

impl Default for MilpOracle {
    fn default() -> Self {
        Self { options: BbOptions { pool_slack: f64::INFINITY, ..BbOptions::default() } }
    }
}

impl GlobalOracle for MilpOracle {
    fn minimize(&self, cost: &CpwaCost, bases: &[TestBasis], y: &DualVector) -> Result<OracleResult> {
        solve_bb_with(&build_milp(cost, bases, y)?, &self.options)
    }
}

/// The grid oracle; its certificate is reported as the gap.
#[derive(Debug, Clone)]
pub struct GridOracle {
    pub resolution: f64,
    pub max_points: u64,
}

impl GlobalOracle for GridOracle {
    fn minimize(&self, cost: &CpwaCost, bases: &[TestBasis], y: &DualVector) -> Result<OracleResult> {
        grid_oracle(cost, bases, y, self.resolution, self.max_points)
    }
}
