//! Dense revised simplex for small and medium linear programs.
//!
//! Variables carry individual bounds (infinite bounds allowed) and rows are
//! equalities or one-sided inequalities. The basis inverse is kept explicitly
//! and updated by elementary row operations, with a fresh Gauss-Jordan
//! inversion every [`REFACTOR_EVERY`] pivots. Pricing is Dantzig's rule until
//! too many degenerate pivots accumulate, after which Bland's rule takes over
//! for the rest of the solve.

use crate::error::{domain, Error, Result};

const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const REFACTOR_EVERY: usize = 64;
const PRICE_SEGMENT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// `a·x = b`
    Eq,
    /// `a·x <= b`
    Le,
    /// `a·x >= b`
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// A variable of the working problem, used to describe bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarRef {
    /// A user variable.
    Var(usize),
    /// The slack of an inequality row.
    Slack(usize),
    /// The artificial of a row; only basic at zero in degenerate bases.
    Artificial(usize),
}

/// One basic variable per row, in row order of the basis matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Basis {
    pub basic: Vec<VarRef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the user variables (empty unless optimal).
    pub primal: Vec<f64>,
    /// One multiplier per row, in the order rows were added, such that the
    /// reduced costs `c - Aᵀ y` certify optimality (empty unless optimal).
    pub duals: Vec<f64>,
    pub objective: f64,
    pub basis: Basis,
    pub iterations: usize,
}

/// A linear program assembled row by row or column by column.
#[derive(Debug, Clone)]
pub struct LpProblem {
    sense: Sense,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    columns: Vec<Vec<(usize, f64)>>,
    kinds: Vec<RowKind>,
    rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            cost: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            columns: Vec::new(),
            kinds: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.columns.push(Vec::new());
        self.cost.len() - 1
    }

    /// Adds a variable with its coefficients in already existing rows.
    pub fn add_column(
        &mut self,
        cost: f64,
        lower: f64,
        upper: f64,
        entries: &[(usize, f64)],
    ) -> Result<usize> {
        if let Some((r, _)) = entries.iter().find(|(r, _)| *r >= self.num_rows()) {
            return domain(format!("column refers to missing row {r}"));
        }
        let j = self.add_var(cost, lower, upper);
        self.columns[j] = entries.iter().copied().filter(|(_, v)| *v != 0.0).collect();
        Ok(j)
    }

    pub fn add_row(&mut self, coeffs: &[(usize, f64)], kind: RowKind, rhs: f64) -> Result<usize> {
        if let Some((j, _)) = coeffs.iter().find(|(j, _)| *j >= self.num_vars()) {
            return domain(format!("row refers to missing variable {j}"));
        }
        let r = self.rhs.len();
        for &(j, v) in coeffs {
            if v != 0.0 {
                self.columns[j].push((r, v));
            }
        }
        self.kinds.push(kind);
        self.rhs.push(rhs);
        Ok(r)
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn row_kinds(&self) -> &[RowKind] {
        &self.kinds
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    fn validate(&self) -> Result<()> {
        for j in 0..self.num_vars() {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return domain(format!("variable {j} has invalid bounds [{l}, {u}]"));
            }
            if !self.cost[j].is_finite() || self.columns[j].iter().any(|(_, v)| !v.is_finite()) {
                return domain(format!("variable {j} has non-finite data"));
            }
        }
        if self.rhs.iter().any(|b| !b.is_finite()) {
            return domain("right-hand sides must be finite");
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Simplex::new(self.clone())?.solve()
    }

    /// Starts from `basis` when it is primal feasible; otherwise falls back
    /// to a cold start.
    pub fn solve_warm(&self, basis: &Basis) -> Result<LpSolution> {
        let mut s = Simplex::new(self.clone())?;
        s.ready = s.try_warm_start(basis);
        s.solve()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic(usize),
    Lower,
    Upper,
    Zero,
}

/// A simplex solver that keeps its basis between solves, so that columns
/// can be appended and the problem reoptimized from the previous optimum.
///
/// Working variables are indexed with the slack of row `r` at `r`, its
/// artificial at `rows + r` and user variable `j` at `2 * rows + j`.
#[derive(Debug, Clone)]
pub struct Simplex {
    problem: LpProblem,
    rows: usize,
    columns: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    phase_cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basic: Vec<usize>,
    binv: Vec<f64>,
    /// simplex multipliers of the current basis, kept in step with `binv`
    y: Vec<f64>,
    /// where the next partial pricing pass starts
    price_start: usize,
    /// the basis is primal feasible with artificials pinned at zero
    ready: bool,
    since_refactor: usize,
    iterations: usize,
    degenerate: usize,
    bland: bool,
    scale: f64,
}

impl Simplex {
    pub fn new(problem: LpProblem) -> Result<Self> {
        problem.validate()?;
        let rows = problem.num_rows();
        let mut columns = Vec::with_capacity(2 * rows + problem.num_vars());
        let mut lower = Vec::with_capacity(columns.capacity());
        let mut upper = Vec::with_capacity(columns.capacity());
        for r in 0..rows {
            columns.push(vec![(r, 1.0)]);
            let (l, u) = match problem.kinds[r] {
                RowKind::Eq => (0.0, 0.0),
                RowKind::Le => (0.0, f64::INFINITY),
                RowKind::Ge => (f64::NEG_INFINITY, 0.0),
            };
            lower.push(l);
            upper.push(u);
        }
        for r in 0..rows {
            columns.push(vec![(r, 1.0)]);
            lower.push(0.0);
            upper.push(0.0);
        }
        columns.extend(problem.columns.iter().cloned());
        lower.extend(&problem.lower);
        upper.extend(&problem.upper);
        let total = columns.len();
        let scale = problem.rhs.iter().fold(1.0f64, |m, b| m.max(b.abs()));
        Ok(Self {
            problem,
            rows,
            columns,
            lower,
            upper,
            phase_cost: vec![0.0; total],
            x: vec![0.0; total],
            state: vec![State::Zero; total],
            basic: Vec::new(),
            binv: Vec::new(),
            y: Vec::new(),
            price_start: 0,
            ready: false,
            since_refactor: 0,
            iterations: 0,
            degenerate: 0,
            bland: false,
            scale,
        })
    }

    pub fn problem(&self) -> &LpProblem {
        &self.problem
    }

    /// Appends a variable. A basis kept from an earlier solve stays valid
    /// when the new variable starts at zero.
    pub fn add_column(
        &mut self,
        cost: f64,
        lower: f64,
        upper: f64,
        entries: &[(usize, f64)],
    ) -> Result<usize> {
        if !cost.is_finite() || entries.iter().any(|(_, v)| !v.is_finite()) {
            return domain("column has non-finite data");
        }
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return domain(format!("invalid bounds [{lower}, {upper}]"));
        }
        let j = self.problem.add_column(cost, lower, upper, entries)?;
        self.columns.push(self.problem.columns[j].clone());
        self.lower.push(lower);
        self.upper.push(upper);
        self.phase_cost.push(self.user_cost(j));
        self.x.push(0.0);
        self.state.push(State::Zero);
        let k = self.columns.len() - 1;
        self.place_at_bound(k);
        if self.x[k] != 0.0 {
            self.ready = false;
        }
        Ok(j)
    }

    pub fn solve(&mut self) -> Result<LpSolution> {
        if !self.ready {
            self.cold_start();
            if self.has_artificials() {
                self.set_phase_costs(true);
                self.run()?;
                if self.infeasibility() > FEAS_TOL * self.scale {
                    return Ok(self.finish_status(LpStatus::Infeasible));
                }
            }
            self.ready = true;
        }
        self.set_phase_costs(false);
        if self.run()? == LpStatus::Unbounded {
            self.ready = false;
            return Ok(self.finish_status(LpStatus::Unbounded));
        }
        if self.primal_residual() > FEAS_TOL * self.scale {
            self.refactor()?;
            if self.run()? == LpStatus::Unbounded {
                self.ready = false;
                return Ok(self.finish_status(LpStatus::Unbounded));
            }
        }
        self.finish_optimal()
    }

    fn user(&self, j: usize) -> usize {
        2 * self.rows + j
    }

    fn artificial(&self, r: usize) -> usize {
        self.rows + r
    }

    fn user_cost(&self, j: usize) -> f64 {
        match self.problem.sense {
            Sense::Minimize => self.problem.cost[j],
            Sense::Maximize => -self.problem.cost[j],
        }
    }

    fn var_index(&self, v: VarRef) -> Option<usize> {
        match v {
            VarRef::Var(j) if j < self.problem.num_vars() => Some(self.user(j)),
            VarRef::Slack(r) if r < self.rows => Some(r),
            VarRef::Artificial(r) if r < self.rows => Some(self.artificial(r)),
            _ => None,
        }
    }

    fn var_ref(&self, k: usize) -> VarRef {
        if k < self.rows {
            VarRef::Slack(k)
        } else if k < 2 * self.rows {
            VarRef::Artificial(k - self.rows)
        } else {
            VarRef::Var(k - 2 * self.rows)
        }
    }

    fn place_at_bound(&mut self, k: usize) {
        let (l, u) = (self.lower[k], self.upper[k]);
        if l.is_finite() {
            self.state[k] = State::Lower;
            self.x[k] = l;
        } else if u.is_finite() {
            self.state[k] = State::Upper;
            self.x[k] = u;
        } else {
            self.state[k] = State::Zero;
            self.x[k] = 0.0;
        }
    }

    /// `b - Σ_{nonbasic} a_k x_k`
    fn residual_rhs(&self) -> Vec<f64> {
        let mut r = self.problem.rhs.clone();
        for (k, col) in self.columns.iter().enumerate() {
            if matches!(self.state[k], State::Basic(_)) || self.x[k] == 0.0 {
                continue;
            }
            for &(row, v) in col {
                r[row] -= v * self.x[k];
            }
        }
        r
    }

    /// `max_r |Σ_k a_{r,k} x_k - b_r|` over all working variables.
    fn primal_residual(&self) -> f64 {
        let mut act = vec![0.0; self.rows];
        for (k, col) in self.columns.iter().enumerate() {
            if self.x[k] != 0.0 {
                for &(r, v) in col {
                    act[r] += v * self.x[k];
                }
            }
        }
        act.iter().zip(&self.problem.rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    fn cold_start(&mut self) {
        for r in 0..self.rows {
            let a = self.artificial(r);
            self.columns[a] = vec![(r, 1.0)];
            self.upper[a] = 0.0;
        }
        for k in 0..self.columns.len() {
            self.place_at_bound(k);
        }
        let res = self.residual_rhs();
        self.basic = vec![0; self.rows];
        for r in 0..self.rows {
            let a = self.artificial(r);
            let slack_fits = match self.problem.kinds[r] {
                RowKind::Eq => false,
                RowKind::Le => res[r] >= 0.0,
                RowKind::Ge => res[r] <= 0.0,
            };
            let k = if slack_fits {
                self.x[r] = res[r];
                r
            } else {
                // the artificial's sign makes its starting value nonnegative
                let sign = if res[r] >= 0.0 { 1.0 } else { -1.0 };
                self.columns[a] = vec![(r, sign)];
                self.upper[a] = f64::INFINITY;
                self.x[a] = res[r].abs();
                a
            };
            self.state[k] = State::Basic(r);
            self.basic[r] = k;
        }
        self.refactor().expect("slack/artificial basis is diagonal");
    }

    fn try_warm_start(&mut self, basis: &Basis) -> bool {
        if basis.basic.len() != self.rows {
            return false;
        }
        let mut basic = Vec::with_capacity(self.rows);
        for v in &basis.basic {
            match self.var_index(*v) {
                Some(k) if !basic.contains(&k) => basic.push(k),
                _ => return false,
            }
        }
        for k in 0..self.columns.len() {
            self.place_at_bound(k);
        }
        for (r, &k) in basic.iter().enumerate() {
            self.state[k] = State::Basic(r);
        }
        self.basic = basic;
        if self.refactor().is_err() {
            return false;
        }
        let tol = FEAS_TOL * self.scale;
        self.basic
            .iter()
            .all(|&k| self.x[k] >= self.lower[k] - tol && self.x[k] <= self.upper[k] + tol)
    }

    fn has_artificials(&self) -> bool {
        self.basic.iter().any(|&k| k >= self.rows && k < 2 * self.rows && self.upper[k] > 0.0)
    }

    fn infeasibility(&self) -> f64 {
        (0..self.rows).map(|r| self.x[self.artificial(r)].abs()).sum()
    }

    fn set_phase_costs(&mut self, phase_one: bool) {
        for k in 0..self.columns.len() {
            self.phase_cost[k] = if k >= 2 * self.rows {
                if phase_one {
                    0.0
                } else {
                    self.user_cost(k - 2 * self.rows)
                }
            } else if phase_one && k >= self.rows {
                1.0
            } else {
                0.0
            };
        }
        if !phase_one {
            // artificials are pinned to zero from here on
            for r in 0..self.rows {
                let a = self.artificial(r);
                self.upper[a] = 0.0;
                if !matches!(self.state[a], State::Basic(_)) {
                    self.state[a] = State::Lower;
                    self.x[a] = 0.0;
                }
            }
        }
        self.degenerate = 0;
        self.bland = false;
    }

    /// Inverts the basis from scratch and recomputes the basic values.
    fn refactor(&mut self) -> Result<()> {
        let m = self.rows;
        let mut a = vec![0.0; m * m];
        for (pos, &k) in self.basic.iter().enumerate() {
            for &(r, v) in &self.columns[k] {
                a[r * m + pos] = v;
            }
        }
        self.binv = invert(&mut a, m)
            .ok_or_else(|| Error::Numerical("basis matrix is singular".into()))?;
        self.since_refactor = 0;
        let rhs = self.residual_rhs();
        for pos in 0..m {
            let row = &self.binv[pos * m..(pos + 1) * m];
            self.x[self.basic[pos]] = row.iter().zip(&rhs).map(|(b, r)| b * r).sum();
        }
        self.y = self.duals();
        Ok(())
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.rows;
        let mut y = vec![0.0; m];
        for pos in 0..m {
            let c = self.phase_cost[self.basic[pos]];
            if c != 0.0 {
                let row = &self.binv[pos * m..(pos + 1) * m];
                for (yr, b) in y.iter_mut().zip(row) {
                    *yr += c * b;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, k: usize, y: &[f64]) -> f64 {
        self.phase_cost[k] - self.columns[k].iter().map(|&(r, v)| y[r] * v).sum::<f64>()
    }

    /// Direction (+1 increase, -1 decrease) and attractiveness of moving
    /// nonbasic `k`, if it improves the objective.
    fn candidate(&self, k: usize) -> Option<(f64, f64, f64)> {
        let state = self.state[k];
        if matches!(state, State::Basic(_)) || self.lower[k] == self.upper[k] {
            return None;
        }
        let d = self.reduced_cost(k, &self.y);
        match state {
            State::Lower if d < -OPT_TOL => Some((1.0, -d, d)),
            State::Upper if d > OPT_TOL => Some((-1.0, d, d)),
            State::Zero if d.abs() > OPT_TOL => Some((-d.signum(), d.abs(), d)),
            _ => None,
        }
    }

    /// Entering variable, its direction and its reduced cost. Dantzig's
    /// rule over segments of the columns, moving on only when a segment has
    /// no candidate; Bland's rule over all columns once cycling is suspected.
    fn price(&mut self) -> Option<(usize, f64, f64)> {
        let n = self.columns.len();
        if self.bland {
            return (0..n).find_map(|k| self.candidate(k).map(|(dir, _, d)| (k, dir, d)));
        }
        let segment = (n / 8).max(PRICE_SEGMENT).min(n);
        let start = self.price_start % n;
        let mut best: Option<(usize, f64, f64, f64)> = None;
        let mut scanned = 0;
        while scanned < n {
            let end = (scanned + segment).min(n);
            for idx in scanned..end {
                let k = (start + idx) % n;
                if let Some((dir, score, d)) = self.candidate(k) {
                    if best.is_none_or(|b| score > b.2) {
                        best = Some((k, dir, score, d));
                    }
                }
            }
            scanned = end;
            if best.is_some() {
                break;
            }
        }
        self.price_start = (start + scanned) % n;
        best.map(|(k, dir, _, d)| (k, dir, d))
    }

    fn ftran(&self, k: usize) -> Vec<f64> {
        let m = self.rows;
        let mut alpha = vec![0.0; m];
        for &(r, v) in &self.columns[k] {
            for (pos, a) in alpha.iter_mut().enumerate() {
                *a += self.binv[pos * m + r] * v;
            }
        }
        alpha
    }

    fn run(&mut self) -> Result<LpStatus> {
        let limit = 50 * (self.rows + self.columns.len()) + 10_000;
        let degenerate_limit = 5 * (self.rows + self.columns.len());
        let start = self.iterations;
        self.y = self.duals();
        loop {
            if self.iterations - start > limit {
                return Err(Error::Numerical(format!(
                    "simplex did not converge within {limit} iterations"
                )));
            }
            let Some((enter, dir, d_enter)) = self.price() else {
                return Ok(LpStatus::Optimal);
            };
            let alpha = self.ftran(enter);

            // ratio test: basic values move by -dir * t * alpha
            let mut step = self.upper[enter] - self.lower[enter];
            let mut leave: Option<(usize, f64)> = None;
            for (pos, &a) in alpha.iter().enumerate() {
                let rate = dir * a;
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let k = self.basic[pos];
                let room = if rate > 0.0 {
                    self.x[k] - self.lower[k]
                } else {
                    self.upper[k] - self.x[k]
                };
                if !room.is_finite() {
                    continue;
                }
                let ratio = room.max(0.0) / rate.abs();
                let better = match leave {
                    None => ratio < step,
                    Some((lpos, _)) => {
                        if ratio < step - 1e-12 {
                            true
                        } else if ratio <= step + 1e-12 {
                            if self.bland {
                                k < self.basic[lpos]
                            } else {
                                a.abs() > alpha[lpos].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = ratio.min(step);
                    leave = Some((pos, ratio));
                }
            }
            if !step.is_finite() {
                return Ok(LpStatus::Unbounded);
            }
            self.iterations += 1;
            if step <= 1e-12 {
                self.degenerate += 1;
                if self.degenerate > degenerate_limit {
                    self.bland = true;
                }
            }
            for (pos, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    self.x[self.basic[pos]] -= dir * step * a;
                }
            }
            self.x[enter] += dir * step;
            match leave {
                None => {
                    // the entering variable reaches its opposite bound
                    self.state[enter] = if dir > 0.0 { State::Upper } else { State::Lower };
                    self.x[enter] = if dir > 0.0 { self.upper[enter] } else { self.lower[enter] };
                }
                Some((pos, _)) => {
                    let out = self.basic[pos];
                    let rate = dir * alpha[pos];
                    if rate > 0.0 {
                        self.state[out] = State::Lower;
                        self.x[out] = self.lower[out];
                    } else {
                        self.state[out] = State::Upper;
                        self.x[out] = self.upper[out];
                    }
                    self.basic[pos] = enter;
                    self.state[enter] = State::Basic(pos);
                    self.pivot(pos, &alpha);
                    let m = self.rows;
                    for (yr, b) in self.y.iter_mut().zip(&self.binv[pos * m..(pos + 1) * m]) {
                        *yr += d_enter * b;
                    }
                    self.since_refactor += 1;
                    if self.since_refactor >= REFACTOR_EVERY.max(2 * self.rows) {
                        self.refactor()?;
                    }
                }
            }
        }
    }

    fn pivot(&mut self, pos: usize, alpha: &[f64]) {
        let m = self.rows;
        let p = alpha[pos];
        let (before, rest) = self.binv.split_at_mut(pos * m);
        let (prow, after) = rest.split_at_mut(m);
        for v in prow.iter_mut() {
            *v /= p;
        }
        for (i, row) in before.chunks_mut(m).chain(after.chunks_mut(m)).enumerate() {
            let a = alpha[if i < pos { i } else { i + 1 }];
            if a != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= a * pv;
                }
            }
        }
    }

    fn finish_status(&self, status: LpStatus) -> LpSolution {
        LpSolution {
            status,
            primal: Vec::new(),
            duals: Vec::new(),
            objective: match status {
                LpStatus::Unbounded => match self.problem.sense {
                    Sense::Minimize => f64::NEG_INFINITY,
                    Sense::Maximize => f64::INFINITY,
                },
                _ => f64::NAN,
            },
            basis: Basis::default(),
            iterations: self.iterations,
        }
    }

    fn finish_optimal(&mut self) -> Result<LpSolution> {
        let p = &self.problem;
        let primal: Vec<f64> = self.x[2 * self.rows..].to_vec();

        let mut activity = vec![0.0; self.rows];
        for (j, col) in p.columns.iter().enumerate() {
            for &(r, v) in col {
                activity[r] += v * primal[j];
            }
        }
        let tol = FEAS_TOL * self.scale;
        for r in 0..self.rows {
            let gap = activity[r] - p.rhs[r];
            let bad = match p.kinds[r] {
                RowKind::Eq => gap.abs() > tol,
                RowKind::Le => gap > tol,
                RowKind::Ge => gap < -tol,
            };
            if bad {
                return Err(Error::Numerical(format!("row {r} violated by {gap:.3e}")));
            }
        }
        for (j, &v) in primal.iter().enumerate() {
            if v < p.lower[j] - tol || v > p.upper[j] + tol {
                return Err(Error::Numerical(format!("variable {j} leaves its bounds")));
            }
        }

        let mut duals = self.duals();
        let mut objective: f64 = primal.iter().zip(&p.cost).map(|(x, c)| x * c).sum();
        if p.sense == Sense::Maximize {
            for y in &mut duals {
                *y = -*y;
            }
        }
        if objective == 0.0 {
            objective = 0.0;
        }
        Ok(LpSolution {
            status: LpStatus::Optimal,
            primal,
            duals,
            objective,
            basis: Basis { basic: self.basic.iter().map(|&k| self.var_ref(k)).collect() },
            iterations: self.iterations,
        })
    }
}

/// Gauss-Jordan inversion with partial pivoting of a row-major `m × m`
/// matrix; `None` when singular.
fn invert(a: &mut [f64], m: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    for col in 0..m {
        let (piv, best) = (col..m)
            .map(|r| (r, a[r * m + col].abs()))
            .fold((col, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best < 1e-12 {
            return None;
        }
        if piv != col {
            for c in 0..m {
                a.swap(piv * m + c, col * m + c);
                inv.swap(piv * m + c, col * m + c);
            }
        }
        // columns left of `col` are already reduced to the identity
        let p = a[col * m + col];
        for c in col..m {
            a[col * m + c] /= p;
        }
        for c in 0..m {
            inv[col * m + c] /= p;
        }
        for r in 0..m {
            if r == col {
                continue;
            }
            let f = a[r * m + col];
            if f == 0.0 {
                continue;
            }
            for c in col..m {
                a[r * m + c] -= f * a[col * m + c];
            }
            for c in 0..m {
                inv[r * m + c] -= f * inv[col * m + c];
            }
        }
    }
    Some(inv)
}
