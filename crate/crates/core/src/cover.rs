//! Knot grids on an interval, their hat-function bases, and the
//! hyperrectangle test-function toolkit.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::marginals::Marginal1D;

/// Sorted knots `κ_0 < κ_1 < … < κ_m` splitting an interval into `m` cells.
///
/// Serialized as a plain JSON array of knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Cover1D {
    knots: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Cover1D {
    type Error = Error;

    fn try_from(knots: Vec<f64>) -> Result<Self> {
        Cover1D::new(knots)
    }
}

impl From<Cover1D> for Vec<f64> {
    fn from(c: Cover1D) -> Self {
        c.knots
    }
}

impl Cover1D {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return domain("a cover needs at least two knots");
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| !(w[0] < w[1])) {
            return domain("cover knots must be finite and strictly increasing");
        }
        Ok(Self { knots })
    }

    /// `cells` equal cells on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return domain("a cover needs at least one cell");
        }
        let knots = (0..=cells)
            .map(|j| {
                if j == cells {
                    hi
                } else {
                    lo + (hi - lo) * j as f64 / cells as f64
                }
            })
            .collect();
        Self::new(knots)
    }

    /// The single cell spanning the support of `marginal`.
    pub fn trivial(marginal: &Marginal1D) -> Self {
        let (lo, hi) = marginal.support();
        Self { knots: vec![lo, hi] }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of cells `m`, which is also the size of the test basis.
    pub fn cells(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn lo(&self) -> f64 {
        self.knots[0]
    }

    pub fn hi(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Mesh size η: the widest cell.
    pub fn mesh(&self) -> f64 {
        self.knots.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Certified bound `2η` on the W1 radius of the moment set induced by
    /// the hat basis of this cover.
    pub fn radius_bound_w1(&self) -> f64 {
        2.0 * self.mesh()
    }

    /// `2 Σ_j width_j · μ(cell_j)`; a diagnostic only, it carries no guarantee.
    pub fn radius_estimate_mass_weighted(&self, marginal: &Marginal1D) -> f64 {
        2.0 * self
            .knots
            .windows(2)
            .map(|w| (w[1] - w[0]) * marginal.interval_mass(w[0], w[1]))
            .sum::<f64>()
    }

    /// Index `j` of the cell `[κ_j, κ_{j+1}]` containing `x` (the left one at
    /// interior knots, except that `x = κ_j` maps to cell `j` for `j < m`).
    pub fn cell_of(&self, x: f64) -> usize {
        let m = self.cells();
        self.knots.partition_point(|&k| k <= x).saturating_sub(1).min(m - 1)
    }

    /// Repeatedly bisects the cell with the largest `width × mass` until the
    /// cover has `target_cells` cells. Ties go to the leftmost cell.
    pub fn refine_greedy(&self, marginal: &Marginal1D, target_cells: usize) -> Cover1D {
        let mut knots = self.knots.clone();
        let mut scores: Vec<f64> = knots
            .windows(2)
            .map(|w| (w[1] - w[0]) * marginal.interval_mass(w[0], w[1]))
            .collect();
        while knots.len() - 1 < target_cells {
            let mut best = 0;
            for (j, s) in scores.iter().enumerate() {
                if *s > scores[best] {
                    best = j;
                }
            }
            let (a, b) = (knots[best], knots[best + 1]);
            let mid = 0.5 * (a + b);
            knots.insert(best + 1, mid);
            let left = (mid - a) * marginal.interval_mass(a, mid);
            let right = (b - mid) * marginal.interval_mass(mid, b);
            scores.splice(best..=best, [left, right]);
        }
        Cover1D { knots }
    }
}

/// The hat basis `g_1, …, g_m` of a cover; the hat `g_0` at the first knot
/// is left out of the basis but can still be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct TestBasis {
    cover: Cover1D,
}

impl TestBasis {
    pub fn new(cover: Cover1D) -> Self {
        Self { cover }
    }

    pub fn cover(&self) -> &Cover1D {
        &self.cover
    }

    pub fn knots(&self) -> &[f64] {
        self.cover.knots()
    }

    /// Basis size `m`.
    pub fn len(&self) -> usize {
        self.cover.cells()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check(&self, x: f64) -> Result<()> {
        if x < self.cover.lo() || x > self.cover.hi() || x.is_nan() {
            return domain(format!(
                "point {x} outside [{}, {}]",
                self.cover.lo(),
                self.cover.hi()
            ));
        }
        Ok(())
    }

    /// The (at most two) nonzero hats at `x`, as `(knot index, value)` pairs
    /// over the full index range `0..=m`.
    pub fn nonzero(&self, x: f64) -> Result<[(usize, f64); 2]> {
        self.check(x)?;
        Ok(self.nonzero_unchecked(x))
    }

    pub(crate) fn nonzero_unchecked(&self, x: f64) -> [(usize, f64); 2] {
        let k = self.knots();
        let j = self.cover.cell_of(x);
        let t = ((x - k[j]) / (k[j + 1] - k[j])).clamp(0.0, 1.0);
        [(j, 1.0 - t), (j + 1, t)]
    }

    /// `(g_1(x), …, g_m(x))`.
    pub fn eval(&self, x: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        for (idx, v) in self.nonzero(x)? {
            if idx > 0 {
                out[idx - 1] += v;
            }
        }
        Ok(out)
    }

    /// `(g_0(x), g_1(x), …, g_m(x))`.
    pub fn eval_full(&self, x: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len() + 1];
        for (idx, v) in self.nonzero(x)? {
            out[idx] += v;
        }
        Ok(out)
    }

    /// `Σ_j y_j g_j(x)` for coefficients `y` of length `m`.
    pub fn combine(&self, y: &[f64], x: f64) -> f64 {
        self.nonzero_unchecked(x)
            .iter()
            .filter(|(idx, _)| *idx > 0)
            .map(|(idx, v)| y[idx - 1] * v)
            .sum()
    }

    /// Largest slope of `x ↦ Σ_j y_j g_j(x)`.
    pub fn combination_lipschitz(&self, y: &[f64]) -> f64 {
        let k = self.knots();
        (0..self.len())
            .map(|j| {
                let left = if j == 0 { 0.0 } else { y[j - 1] };
                (y[j] - left).abs() / (k[j + 1] - k[j])
            })
            .fold(0.0, f64::max)
    }
}

/// Number of hyperrectangle test functions that guarantees `W_p(μ, ν) <= ε`
/// on the moment set:
/// `∏_i (1 + ⌈2 · width_i · C · m^{1/p} / ε⌉)` with `m` the dimension.
pub fn hyperrect_basis_count(widths: &[f64], p: f64, c_norm: f64, eps: f64) -> Result<u128> {
    if !(eps > 0.0) {
        return domain(format!("tolerance must be positive, got {eps}"));
    }
    if widths.is_empty() || widths.iter().any(|w| !(*w > 0.0)) {
        return domain("box widths must be positive");
    }
    if !(p >= 1.0) || !(c_norm >= 1.0) {
        return domain("need p >= 1 and norm constant >= 1");
    }
    let dim = widths.len() as f64;
    let root = dim.powf(1.0 / p);
    widths.iter().try_fold(1u128, |acc, w| {
        let n = (2.0 * w * c_norm * root / eps).ceil();
        if n > 1e30 {
            return Err(Error::Budget("test-function count overflows".into()));
        }
        acc.checked_mul(1 + n as u128)
            .ok_or_else(|| Error::Budget("test-function count overflows".into()))
    })
}

/// One function of the hyperrectangle interpolation set.
#[derive(Debug, Clone, PartialEq)]
pub enum HyperrectFunction {
    /// `max_{i ∈ L} β_i^{-1} (x_i - κ_{i, j_i})^+`, stored as `(i, κ, 1/β)`.
    BestOfCall(Vec<(usize, f64, f64)>),
    /// `x ↦ x_i`.
    Coordinate(usize),
    /// `((κ_{i,0} - x_i)^+)^p`.
    PowerPut { dim: usize, strike: f64, p: f64 },
    /// `((x_i - κ_{i,n_i})^+)^p`.
    PowerCall { dim: usize, strike: f64, p: f64 },
}

impl HyperrectFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            HyperrectFunction::BestOfCall(terms) => terms
                .iter()
                .map(|&(i, strike, scale)| scale * (x[i] - strike).max(0.0))
                .fold(0.0, f64::max),
            HyperrectFunction::Coordinate(i) => x[*i],
            HyperrectFunction::PowerPut { dim, strike, p } => (strike - x[*dim]).max(0.0).powf(*p),
            HyperrectFunction::PowerCall { dim, strike, p } => (x[*dim] - strike).max(0.0).powf(*p),
        }
    }
}

/// Expected size of [`best_of_call_basis`] for per-dimension knot counts.
pub fn best_of_call_count(knot_counts: &[usize], p: f64) -> u128 {
    let product: u128 = knot_counts.iter().map(|&k| k as u128 + 1).product();
    let extra = if p == 1.0 { 1 } else { 2 } * knot_counts.len() as u128;
    product - 1 + extra
}

/// Enumerates the best-of-call functions over every nonempty subset of
/// coordinates and every strike combination, plus the coordinate maps
/// (`p = 1`) or the power put/call tails (`p > 1`). Each grid must be evenly
/// spaced.
pub fn best_of_call_basis(grids: &[Vec<f64>], p: f64) -> Result<Vec<HyperrectFunction>> {
    if !(p >= 1.0) {
        return domain(format!("order p must be at least 1, got {p}"));
    }
    if grids.is_empty() {
        return domain("need at least one dimension");
    }
    let mut scales = Vec::with_capacity(grids.len());
    for (i, g) in grids.iter().enumerate() {
        if g.len() < 2 || g.windows(2).any(|w| !(w[0] < w[1])) {
            return domain(format!("grid {i} must have two or more increasing knots"));
        }
        let beta = g[1] - g[0];
        let tol = 1e-9 * beta.max(1.0);
        if g.windows(2).any(|w| ((w[1] - w[0]) - beta).abs() > tol) {
            return domain(format!("grid {i} is not evenly spaced"));
        }
        scales.push(1.0 / beta);
    }
    let dims = grids.len();
    if dims >= 32 {
        return Err(Error::Budget("too many dimensions to enumerate subsets".into()));
    }
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << dims) {
        let members: Vec<usize> = (0..dims).filter(|i| mask & (1 << i) != 0).collect();
        let mut idx = vec![0usize; members.len()];
        loop {
            out.push(HyperrectFunction::BestOfCall(
                members
                    .iter()
                    .zip(&idx)
                    .map(|(&i, &j)| (i, grids[i][j], scales[i]))
                    .collect(),
            ));
            // odometer over strike indices
            let mut pos = 0;
            while pos < members.len() {
                idx[pos] += 1;
                if idx[pos] < grids[members[pos]].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == members.len() {
                break;
            }
        }
    }
    for (i, g) in grids.iter().enumerate() {
        if p == 1.0 {
            out.push(HyperrectFunction::Coordinate(i));
        } else {
            out.push(HyperrectFunction::PowerPut { dim: i, strike: g[0], p });
            out.push(HyperrectFunction::PowerCall { dim: i, strike: g[g.len() - 1], p });
        }
    }
    Ok(out)
}
