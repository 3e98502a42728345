//! Cutting-plane solution of the moment-relaxed transport problem.
//!
//! The master problem is the moment LP over measures supported on a finite
//! active set: minimize `Σ f(x) μ_x` subject to `Σ μ_x = 1` and
//! `Σ g(x) μ_x = ḡ`. Its duals `(y₀, y)` are handed to a global oracle,
//! which either certifies that no point of the box violates the dual
//! constraint by more than the tolerance or returns violating points that
//! join the active set.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::cost::CpwaCost;
use crate::cover::TestBasis;
use crate::error::{domain, Error, Result};
use crate::lp::{LpProblem, LpStatus, RowKind, Sense, Simplex};
use crate::oracle::GlobalOracle;

pub use crate::oracle::DualVector;

/// Masses below this count as exhausted in the greedy initializer.
const EXHAUSTED: f64 = 1e-14;
const POINT_TOL: f64 = 1e-12;

/// Finitely supported probability measure on the box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return domain("a measure needs one weight per point and at least one point");
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return domain("all points must have the same dimension");
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return domain("weights must be positive");
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return domain("weights must sum to one");
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    /// `∫ g_{i,j}(x_i) dμ` for every coordinate and basis function.
    pub fn moments(&self, bases: &[TestBasis]) -> Result<Vec<Vec<f64>>> {
        let mut out: Vec<Vec<f64>> = bases.iter().map(|b| vec![0.0; b.len()]).collect();
        for (p, w) in self.points.iter().zip(&self.weights) {
            for (i, b) in bases.iter().enumerate() {
                for (idx, v) in b.nonzero(p[i])? {
                    if idx > 0 {
                        out[i][idx - 1] += w * v;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Points of the master problem, without duplicates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActiveSet {
    points: Vec<Vec<f64>>,
}

impl ActiveSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.points
            .iter()
            .any(|p| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= POINT_TOL))
    }

    /// Adds `x` unless a point within `1e-12` per coordinate is present.
    pub fn insert(&mut self, x: Vec<f64>) -> bool {
        if self.contains(&x) {
            return false;
        }
        self.points.push(x);
        true
    }
}

/// Coupling of the per-marginal knot masses built by exhausting the
/// knots left to right, together with its active set.
#[derive(Debug, Clone)]
pub struct InitialCoupling {
    pub measure: DiscreteMeasure,
    pub active: ActiveSet,
    /// Atoms as knot indices, in construction order.
    pub atoms: Vec<(Vec<usize>, f64)>,
    /// Set when several marginals ran out at once before the last knot,
    /// in which case the active set was widened with neighbouring knots.
    pub degenerate: bool,
}

/// The greedy simultaneous-exhaustion coupling of knot mass vectors
/// (`masses[i][j]` is the mass of knot `j` of marginal `i`, including
/// `j = 0`). Returns the atoms and whether a degenerate tie occurred.
pub fn greedy_vertex_coupling(masses: &[Vec<f64>]) -> Result<(Vec<(Vec<usize>, f64)>, bool)> {
    if masses.is_empty() {
        return domain("need at least one marginal");
    }
    for (i, m) in masses.iter().enumerate() {
        if m.len() < 2 {
            return domain(format!("marginal {i} needs at least two knots"));
        }
        if let Some(j) = m.iter().position(|v| !(*v > 0.0)) {
            return domain(format!("knot {j} of marginal {i} has no mass"));
        }
    }
    let mut left: Vec<Vec<f64>> = masses.to_vec();
    let mut r = vec![0usize; masses.len()];
    let mut atoms = Vec::new();
    let mut degenerate = false;
    while r.iter().zip(masses).all(|(&ri, m)| ri < m.len()) {
        let eta = r.iter().zip(&left).map(|(&ri, l)| l[ri]).fold(f64::INFINITY, f64::min);
        if eta > 0.0 {
            atoms.push((r.clone(), eta));
        }
        let mut exhausted = Vec::new();
        for (i, l) in left.iter_mut().enumerate() {
            l[r[i]] -= eta;
            if l[r[i]] <= EXHAUSTED {
                exhausted.push(i);
            }
        }
        let room = r.iter().zip(masses).map(|(&ri, m)| m.len() - 1 - ri).max().unwrap_or(0);
        if exhausted.len() > 1 && room > 0 {
            degenerate = true;
        }
        for i in exhausted {
            r[i] += 1;
        }
    }
    Ok((atoms, degenerate))
}

/// Runs [`greedy_vertex_coupling`] on the knot masses of each basis and
/// places the atoms on the knots. When the trace was degenerate, every
/// atom's neighbours along one coordinate (one knot left or right) join the
/// active set.
pub fn init_algorithm0(masses: &[Vec<f64>], bases: &[TestBasis]) -> Result<InitialCoupling> {
    if masses.len() != bases.len() {
        return domain("need one mass vector per basis");
    }
    for (i, (m, b)) in masses.iter().zip(bases).enumerate() {
        if m.len() != b.len() + 1 {
            return domain(format!("marginal {i}: {} masses for {} knots", m.len(), b.len() + 1));
        }
    }
    let (atoms, degenerate) = greedy_vertex_coupling(masses)?;
    let place = |idx: &[usize]| -> Vec<f64> {
        idx.iter().zip(bases).map(|(&j, b)| b.knots()[j]).collect()
    };
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    let points: Vec<Vec<f64>> = atoms.iter().map(|(idx, _)| place(idx)).collect();
    let weights: Vec<f64> = atoms.iter().map(|(_, w)| w / total).collect();
    let mut active = ActiveSet::new();
    for p in &points {
        active.insert(p.clone());
    }
    if degenerate {
        for (idx, _) in &atoms {
            for (i, b) in bases.iter().enumerate() {
                for step in [-1isize, 1] {
                    let j = idx[i] as isize + step;
                    if j < 0 || j as usize > b.len() {
                        continue;
                    }
                    let mut moved = idx.clone();
                    moved[i] = j as usize;
                    active.insert(place(&moved));
                }
            }
        }
    }
    Ok(InitialCoupling { measure: DiscreteMeasure::new(points, weights)?, active, atoms, degenerate })
}

/// Largest deviation of the measure's moments from the targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentReport {
    pub max_residual: f64,
    pub passes: bool,
}

pub fn verify_moment_feasibility(
    measure: &DiscreteMeasure,
    bases: &[TestBasis],
    targets: &[Vec<f64>],
) -> Result<MomentReport> {
    let got = measure.moments(bases)?;
    let max_residual = got
        .iter()
        .zip(targets)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max);
    Ok(MomentReport { max_residual, passes: max_residual <= 1e-8 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CuttingPlaneOptions {
    pub eps_lsip: f64,
    pub max_iterations: usize,
}

impl Default for CuttingPlaneOptions {
    fn default() -> Self {
        Self { eps_lsip: 1e-4, max_iterations: 100_000 }
    }
}

/// One row of the iteration log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Master LP value.
    pub master: f64,
    pub y0: f64,
    /// Certified lower bound on `min_x f(x) - ⟨g(x), y⟩`.
    pub separation: f64,
    pub gap: f64,
    pub active: usize,
    pub oracle_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CuttingPlaneStatus {
    Converged,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct CuttingPlaneResult {
    pub status: CuttingPlaneStatus,
    /// `∫ f dμ̂`; an upper bound on the relaxed optimum.
    pub upper: f64,
    /// Dual objective of the shifted dual; a lower bound on the relaxed
    /// optimum.
    pub lower: f64,
    /// Dual vector with `y₀` replaced by the separation bound, so that the
    /// dual constraint holds on the whole box.
    pub dual: DualVector,
    pub measure: DiscreteMeasure,
    pub active: ActiveSet,
    pub log: Vec<IterationRecord>,
}

impl CuttingPlaneResult {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    /// Turns an unconverged run into [`Error::IterationLimit`].
    pub fn into_converged(self) -> Result<Self> {
        match self.status {
            CuttingPlaneStatus::Converged => Ok(self),
            CuttingPlaneStatus::IterationLimit => {
                Err(Error::IterationLimit { iterations: self.log.len(), gap: self.gap() })
            }
        }
    }

    pub fn write_log_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for rec in &self.log {
            w.serialize(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn point_column(cost: &CpwaCost, bases: &[TestBasis], x: &[f64]) -> Result<(f64, Vec<(usize, f64)>)> {
    let mut entries = vec![(0, 1.0)];
    let mut offset = 1;
    for (b, &xi) in bases.iter().zip(x) {
        for (idx, v) in b.nonzero(xi)? {
            if idx > 0 && v != 0.0 {
                entries.push((offset + idx - 1, v));
            }
        }
        offset += b.len();
    }
    Ok((cost.eval(x)?, entries))
}

/// Cutting-plane loop started from `initial`. `moments[i][j]` is the target
/// of basis function `j + 1` of marginal `i`.
pub fn run_algorithm1(
    cost: &CpwaCost,
    bases: &[TestBasis],
    moments: &[Vec<f64>],
    initial: &ActiveSet,
    oracle: &dyn GlobalOracle,
    opts: &CuttingPlaneOptions,
) -> Result<CuttingPlaneResult> {
    if !(opts.eps_lsip > 0.0) {
        return domain(format!("tolerance must be positive, got {}", opts.eps_lsip));
    }
    if bases.len() != cost.dim() || moments.len() != bases.len() {
        return domain("cost, bases and moment targets disagree on the dimension");
    }
    if moments.iter().zip(bases).any(|(g, b)| g.len() != b.len()) {
        return domain("moment targets must match the basis sizes");
    }
    if initial.is_empty() {
        return domain("the initial active set is empty");
    }

    let mut lp = LpProblem::new(Sense::Minimize);
    lp.add_row(&[], RowKind::Eq, 1.0)?;
    for g in moments {
        for &v in g {
            lp.add_row(&[], RowKind::Eq, v)?;
        }
    }
    let mut active = ActiveSet::new();
    for p in initial.points() {
        if active.insert(p.clone()) {
            let (c, col) = point_column(cost, bases, p)?;
            lp.add_column(c, 0.0, f64::INFINITY, &col)?;
        }
    }
    // the solver keeps its basis, so each new round starts from the last optimum
    let mut master = Simplex::new(lp)?;

    let mut log = Vec::new();
    let mut iteration = 0;
    loop {
        let sol = master.solve()?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Numerical(format!("master problem is {:?}", sol.status)));
        }
        let y0 = sol.duals[0];
        let mut y = Vec::with_capacity(bases.len());
        let mut offset = 1;
        for b in bases {
            y.push(sol.duals[offset..offset + b.len()].to_vec());
            offset += b.len();
        }
        let probe = DualVector { y0: 0.0, y };
        let started = Instant::now();
        let found = oracle.minimize(cost, bases, &probe)?;
        let oracle_seconds = started.elapsed().as_secs_f64();
        let separation = found.lower_bound();
        let gap = y0 - separation;
        log.push(IterationRecord {
            iteration,
            master: sol.objective,
            y0,
            separation,
            gap,
            active: active.len(),
            oracle_seconds,
        });
        log::debug!("iteration {iteration}: master {:.8} gap {gap:.3e}", sol.objective);

        let converged = gap <= opts.eps_lsip;
        if converged || iteration + 1 >= opts.max_iterations {
            let measure = extract_measure(master.problem(), &active, &sol.primal)?;
            let dual = DualVector { y0: separation, y: probe.y };
            let lower = separation + dual.dot_moments(moments);
            return Ok(CuttingPlaneResult {
                status: if converged {
                    CuttingPlaneStatus::Converged
                } else {
                    CuttingPlaneStatus::IterationLimit
                },
                upper: measure.integrate(|x| cost.eval_unchecked(x)),
                lower,
                dual,
                measure,
                active,
                log,
            });
        }

        let mut added = 0;
        for (x, v) in &found.pool {
            // only points whose constraint the master currently violates
            if *v >= y0 && x != &found.x {
                continue;
            }
            if active.insert(x.clone()) {
                let (c, col) = point_column(cost, bases, x)?;
                master.add_column(c, 0.0, f64::INFINITY, &col)?;
                added += 1;
            }
        }
        if added == 0 {
            return Err(Error::Numerical(format!(
                "oracle returned no new point while the gap is {gap:.3e}"
            )));
        }
        iteration += 1;
    }
}

fn extract_measure(lp: &LpProblem, active: &ActiveSet, primal: &[f64]) -> Result<DiscreteMeasure> {
    debug_assert_eq!(lp.num_vars(), active.len());
    let kept: Vec<(Vec<f64>, f64)> = active
        .points()
        .iter()
        .zip(primal)
        .filter(|(_, w)| **w > 0.0)
        .map(|(p, w)| (p.clone(), *w))
        .collect();
    let total: f64 = kept.iter().map(|(_, w)| w).sum();
    let (points, weights) = kept.into_iter().map(|(p, w)| (p, w / total)).unzip();
    DiscreteMeasure::new(points, weights)
}
