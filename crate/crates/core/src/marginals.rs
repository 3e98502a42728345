//! One-dimensional marginal laws on a compact interval.
//!
//! Three families are supported: finite mixtures of truncated Gaussians, the
//! uniform law and finitely supported laws. Every family provides an exact
//! distribution function, a generalized inverse, and exact integrals of
//! continuous piecewise-linear functions, which is what the moment
//! constraints of the relaxed transport problem are built from.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{domain, Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const QUANTILE_TOL: f64 = 1e-12;
const QUANTILE_TABLE_SIZE: usize = 512;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub(crate) fn norm_pdf(t: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * t * t).exp()
}

/// Standard normal distribution function.
pub(crate) fn norm_cdf(t: f64) -> f64 {
    0.5 * erfc(-t / std::f64::consts::SQRT_2)
}

/// `Φ(tb) - Φ(ta)` for `ta <= tb`, evaluated on the tail side that avoids
/// cancellation.
fn norm_mass(ta: f64, tb: f64) -> f64 {
    if ta >= 0.0 {
        norm_cdf(-ta) - norm_cdf(-tb)
    } else {
        norm_cdf(tb) - norm_cdf(ta)
    }
}

/// Antiderivative of Φ: `∫ Φ(t) dt = t Φ(t) + φ(t)`.
fn norm_cdf_antiderivative(t: f64) -> f64 {
    t * norm_cdf(t) + norm_pdf(t)
}

/// A Gaussian component restricted to `[lo, hi]` and renormalized.
#[derive(Debug, Clone, PartialEq)]
struct TruncatedGaussian {
    mean: f64,
    std: f64,
    alpha: f64,
    beta: f64,
    z: f64,
}

impl TruncatedGaussian {
    fn new(mean: f64, std: f64, lo: f64, hi: f64) -> Result<Self> {
        let alpha = (lo - mean) / std;
        let beta = (hi - mean) / std;
        let z = norm_mass(alpha, beta);
        if !(z > 0.0) {
            return domain(format!(
                "Gaussian component N({mean}, {std}^2) has no mass on [{lo}, {hi}]"
            ));
        }
        Ok(Self { mean, std, alpha, beta, z })
    }

    fn t(&self, x: f64) -> f64 {
        ((x - self.mean) / self.std).clamp(self.alpha, self.beta)
    }

    fn cdf(&self, x: f64) -> f64 {
        (norm_mass(self.alpha, self.t(x)) / self.z).clamp(0.0, 1.0)
    }

    fn pdf(&self, x: f64) -> f64 {
        let t = (x - self.mean) / self.std;
        if t < self.alpha || t > self.beta {
            0.0
        } else {
            norm_pdf(t) / (self.std * self.z)
        }
    }

    /// `(P, R)` with `P = μ([a, b])` and `R = ∫_[a,b] (x - a) dμ`.
    fn cell_moments(&self, a: f64, b: f64) -> (f64, f64) {
        let (ta, tb) = (self.t(a), self.t(b));
        if tb <= ta {
            return (0.0, 0.0);
        }
        let mass = norm_mass(ta, tb);
        let first = self.std * (norm_pdf(ta) - norm_pdf(tb)) + (self.mean - a) * mass;
        (mass / self.z, (first / self.z).max(0.0))
    }

    /// `∫_a^b F(x) dx` for `lo <= a <= b <= hi`.
    fn cdf_integral(&self, a: f64, b: f64) -> f64 {
        let (ta, tb) = (self.t(a), self.t(b));
        let lower = norm_cdf(self.alpha);
        let span = self.std * (norm_cdf_antiderivative(tb) - norm_cdf_antiderivative(ta));
        ((span - (b - a) * lower) / self.z).max(0.0)
    }
}

/// Serializable description of a marginal law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MarginalDescriptor {
    /// Mixture of Gaussians, each truncated to `support` and renormalized.
    Tgm {
        weights: Vec<f64>,
        means: Vec<f64>,
        stds: Vec<f64>,
        support: [f64; 2],
    },
    Uniform { a: f64, b: f64 },
    /// Finitely supported law; `support` defaults to `[first atom, last atom]`.
    Discrete {
        atoms: Vec<f64>,
        weights: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Law {
    Mixture {
        weights: Vec<f64>,
        components: Vec<TruncatedGaussian>,
        /// Distribution function tabulated on a regular grid; brackets the
        /// quantile search.
        table: Vec<f64>,
    },
    Uniform,
    Discrete {
        atoms: Vec<f64>,
        weights: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

/// A validated one-dimensional probability law on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal1D {
    lo: f64,
    hi: f64,
    law: Law,
    descriptor: MarginalDescriptor,
}

fn check_probability_vector(weights: &[f64], what: &str) -> Result<()> {
    if weights.is_empty() {
        return domain(format!("{what}: empty weight vector"));
    }
    if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return domain(format!("{what}: weights must be positive and finite"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return domain(format!("{what}: weights sum to {total}, expected 1"));
    }
    Ok(())
}

impl Marginal1D {
    pub fn truncated_gaussian_mixture(
        weights: Vec<f64>,
        means: Vec<f64>,
        stds: Vec<f64>,
        support: [f64; 2],
    ) -> Result<Self> {
        Self::from_descriptor(MarginalDescriptor::Tgm { weights, means, stds, support })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::from_descriptor(MarginalDescriptor::Uniform { a, b })
    }

    /// Discrete law whose support interval is the hull of its atoms.
    pub fn discrete(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::from_descriptor(MarginalDescriptor::Discrete { atoms, weights, support: None })
    }

    /// Discrete law living on an explicit support interval.
    pub fn discrete_on(atoms: Vec<f64>, weights: Vec<f64>, support: [f64; 2]) -> Result<Self> {
        Self::from_descriptor(MarginalDescriptor::Discrete {
            atoms,
            weights,
            support: Some(support),
        })
    }

    pub fn from_descriptor(descriptor: MarginalDescriptor) -> Result<Self> {
        match &descriptor {
            MarginalDescriptor::Tgm { weights, means, stds, support } => {
                let [lo, hi] = *support;
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return domain(format!("invalid support [{lo}, {hi}]"));
                }
                if weights.len() != means.len() || weights.len() != stds.len() {
                    return domain("mixture: weights, means and stds differ in length");
                }
                check_probability_vector(weights, "mixture")?;
                if stds.iter().any(|s| !(*s > 0.0)) {
                    return domain("mixture: standard deviations must be positive");
                }
                let components = means
                    .iter()
                    .zip(stds)
                    .map(|(&m, &s)| TruncatedGaussian::new(m, s, lo, hi))
                    .collect::<Result<Vec<_>>>()?;
                let mut marginal = Self {
                    lo,
                    hi,
                    law: Law::Mixture {
                        weights: weights.clone(),
                        components,
                        table: Vec::new(),
                    },
                    descriptor: descriptor.clone(),
                };
                let table = (0..=QUANTILE_TABLE_SIZE)
                    .map(|k| marginal.cdf(marginal.grid_point(k)))
                    .collect();
                if let Law::Mixture { table: t, .. } = &mut marginal.law {
                    *t = table;
                }
                Ok(marginal)
            }
            MarginalDescriptor::Uniform { a, b } => {
                if !(a < b) || !a.is_finite() || !b.is_finite() {
                    return domain(format!("invalid uniform interval [{a}, {b}]"));
                }
                Ok(Self { lo: *a, hi: *b, law: Law::Uniform, descriptor })
            }
            MarginalDescriptor::Discrete { atoms, weights, support } => {
                if atoms.len() != weights.len() {
                    return domain("discrete: atoms and weights differ in length");
                }
                check_probability_vector(weights, "discrete")?;
                if atoms.windows(2).any(|w| !(w[0] < w[1])) {
                    return domain("discrete: atoms must be strictly increasing");
                }
                let [lo, hi] = support.unwrap_or([atoms[0], atoms[atoms.len() - 1]]);
                if !(lo <= atoms[0] && atoms[atoms.len() - 1] <= hi) {
                    return domain(format!("discrete: atoms outside support [{lo}, {hi}]"));
                }
                let mut acc = 0.0;
                let mut cumulative: Vec<f64> = weights
                    .iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect();
                *cumulative.last_mut().expect("nonempty") = 1.0;
                Ok(Self {
                    lo,
                    hi,
                    law: Law::Discrete {
                        atoms: atoms.clone(),
                        weights: weights.clone(),
                        cumulative,
                    },
                    descriptor,
                })
            }
        }
    }

    pub fn descriptor(&self) -> &MarginalDescriptor {
        &self.descriptor
    }

    /// Support interval `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.law, Law::Discrete { .. })
    }

    /// Atoms and weights of a discrete law.
    pub fn atoms(&self) -> Option<(&[f64], &[f64])> {
        match &self.law {
            Law::Discrete { atoms, weights, .. } => Some((atoms, weights)),
            _ => None,
        }
    }

    fn grid_point(&self, k: usize) -> f64 {
        if k == QUANTILE_TABLE_SIZE {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * k as f64 / QUANTILE_TABLE_SIZE as f64
        }
    }

    /// Right-continuous distribution function; 0 below and 1 above the support.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        match &self.law {
            Law::Mixture { weights, components, .. } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.cdf(x))
                .sum::<f64>()
                .clamp(0.0, 1.0),
            Law::Uniform => (x - self.lo) / (self.hi - self.lo),
            Law::Discrete { atoms, cumulative, .. } => {
                let count = atoms.partition_point(|&a| a <= x);
                if count == 0 {
                    0.0
                } else {
                    cumulative[count - 1]
                }
            }
        }
    }

    /// Density of the absolutely continuous families; `None` for discrete laws.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        match &self.law {
            Law::Mixture { weights, components, .. } => {
                Some(weights.iter().zip(components).map(|(w, c)| w * c.pdf(x)).sum())
            }
            Law::Uniform => Some(if x < self.lo || x > self.hi {
                0.0
            } else {
                1.0 / (self.hi - self.lo)
            }),
            Law::Discrete { .. } => None,
        }
    }

    /// Generalized inverse `inf { x : F(x) >= u }`, restricted to the support.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return domain(format!("quantile level {u} outside [0, 1]"));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        match &self.law {
            Law::Uniform => self.lo + u * (self.hi - self.lo),
            Law::Discrete { atoms, cumulative, .. } => {
                let idx = cumulative.partition_point(|&c| c < u).min(atoms.len() - 1);
                atoms[idx]
            }
            Law::Mixture { table, .. } => {
                if u <= 0.0 {
                    return self.lo;
                }
                if u >= 1.0 {
                    return self.hi;
                }
                // table[k] is the cdf at grid point k; bracket u, then refine
                // with Newton steps safeguarded by bisection.
                let k = table.partition_point(|&c| c < u).clamp(1, QUANTILE_TABLE_SIZE);
                let (mut a, mut b) = (self.grid_point(k - 1), self.grid_point(k));
                let (fa, fb) = (table[k - 1], table[k]);
                let mut x = if fb > fa { a + (b - a) * (u - fa) / (fb - fa) } else { 0.5 * (a + b) };
                for _ in 0..200 {
                    let fx = self.cdf(x) - u;
                    if fx == 0.0 {
                        return x;
                    }
                    if fx < 0.0 {
                        a = x;
                    } else {
                        b = x;
                    }
                    if b - a <= QUANTILE_TOL {
                        break;
                    }
                    let density = self.pdf(x).unwrap_or(0.0);
                    let newton = if density > 0.0 { x - fx / density } else { f64::NAN };
                    let next = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
                    if (next - x).abs() <= 0.25 * QUANTILE_TOL {
                        return next;
                    }
                    x = next;
                }
                0.5 * (a + b)
            }
        }
    }

    /// One draw by inversion of a uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile_unchecked(rng.random::<f64>())
    }

    /// `(P, R)` with `P = μ(cell)` and `R = ∫_cell (x - a) dμ` for the cell
    /// `(a, b]`, or `[a, b]` when `closed_left`.
    fn cell_moments(&self, a: f64, b: f64, closed_left: bool) -> (f64, f64) {
        let (ca, cb) = (a.max(self.lo), b.min(self.hi));
        match &self.law {
            Law::Mixture { weights, components, .. } => {
                if cb <= ca {
                    return (0.0, 0.0);
                }
                weights.iter().zip(components).fold((0.0, 0.0), |(p, r), (w, c)| {
                    let (cp, cr) = c.cell_moments(ca, cb);
                    // shift R from the clipped left end back to `a`
                    (p + w * cp, r + w * (cr + (ca - a) * cp))
                })
            }
            Law::Uniform => {
                if cb <= ca {
                    return (0.0, 0.0);
                }
                let density = 1.0 / (self.hi - self.lo);
                let mass = (cb - ca) * density;
                let first = 0.5 * ((cb - a) * (cb - a) - (ca - a) * (ca - a)) * density;
                (mass, first)
            }
            Law::Discrete { atoms, weights, .. } => {
                let start = if closed_left {
                    atoms.partition_point(|&x| x < a)
                } else {
                    atoms.partition_point(|&x| x <= a)
                };
                let end = atoms.partition_point(|&x| x <= b);
                (start..end).fold((0.0, 0.0), |(p, r), k| {
                    (p + weights[k], r + weights[k] * (atoms[k] - a))
                })
            }
        }
    }

    fn check_knots(&self, knots: &[f64]) -> Result<()> {
        if knots.len() < 2 {
            return domain("at least two knots are required");
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return domain("knots must be strictly increasing");
        }
        let tol = 1e-12 * (1.0 + self.lo.abs().max(self.hi.abs()));
        if knots[0] > self.lo + tol || knots[knots.len() - 1] < self.hi - tol {
            return domain(format!(
                "knots [{}, {}] do not cover the support [{}, {}]",
                knots[0],
                knots[knots.len() - 1],
                self.lo,
                self.hi
            ));
        }
        Ok(())
    }

    /// Exact `∫ l dμ` for the continuous piecewise-linear `l` interpolating
    /// `values` at `knots`.
    pub fn integrate_piecewise_linear(&self, knots: &[f64], values: &[f64]) -> Result<f64> {
        self.check_knots(knots)?;
        if values.len() != knots.len() {
            return domain("values and knots differ in length");
        }
        let mut total = 0.0;
        for j in 0..knots.len() - 1 {
            let (a, b) = (knots[j], knots[j + 1]);
            let (p, r) = self.cell_moments(a, b, j == 0);
            total += values[j] * p + (values[j + 1] - values[j]) * r / (b - a);
        }
        Ok(total)
    }

    /// Integrals of every hat function of the knot grid, including the hat at
    /// the first knot. The result sums to one.
    pub fn hat_masses(&self, knots: &[f64]) -> Result<Vec<f64>> {
        self.check_knots(knots)?;
        let mut masses = vec![0.0; knots.len()];
        for j in 0..knots.len() - 1 {
            let (a, b) = (knots[j], knots[j + 1]);
            let (p, r) = self.cell_moments(a, b, j == 0);
            let rising = r / (b - a);
            masses[j + 1] += rising;
            masses[j] += (p - rising).max(0.0);
        }
        Ok(masses)
    }

    /// `μ([a, b])` (closed on both ends).
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        self.cell_moments(a, b, true).0
    }

    /// `∫_a^b F(x) dx` in closed form, for any `a <= b`.
    pub fn cdf_integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        // above the support F = 1
        if b > self.hi {
            total += b - a.max(self.hi);
        }
        let (ca, cb) = (a.max(self.lo), b.min(self.hi));
        if cb <= ca {
            return total;
        }
        total
            + match &self.law {
                Law::Mixture { weights, components, .. } => weights
                    .iter()
                    .zip(components)
                    .map(|(w, c)| w * c.cdf_integral(ca, cb))
                    .sum::<f64>(),
                Law::Uniform => {
                    let width = self.hi - self.lo;
                    0.5 * ((cb - self.lo).powi(2) - (ca - self.lo).powi(2)) / width
                }
                Law::Discrete { atoms, cumulative, .. } => {
                    // F is a step function; walk over the atoms inside (ca, cb)
                    let mut acc = 0.0;
                    let mut x = ca;
                    let mut level = self.cdf(ca);
                    let start = atoms.partition_point(|&t| t <= ca);
                    for k in start..atoms.len() {
                        if atoms[k] >= cb {
                            break;
                        }
                        acc += level * (atoms[k] - x);
                        x = atoms[k];
                        level = cumulative[k];
                    }
                    acc + level * (cb - x)
                }
            }
    }
}

/// Random generator for mixtures of truncated Gaussians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixtureGenerator {
    pub components: usize,
    pub means: [f64; 2],
    pub stds: [f64; 2],
    pub support: [f64; 2],
}

impl Default for MixtureGenerator {
    fn default() -> Self {
        Self {
            components: 3,
            means: [-8.0, 8.0],
            stds: [0.5, 3.0],
            support: [-10.0, 10.0],
        }
    }
}

impl MixtureGenerator {
    /// `count` equally weighted mixtures, deterministic in `seed`.
    pub fn generate(&self, count: usize, seed: u64) -> Result<Vec<Marginal1D>> {
        if self.components == 0 {
            return Err(Error::Domain("mixture generator needs at least one component".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weight = 1.0 / self.components as f64;
        (0..count)
            .map(|_| {
                let means = (0..self.components)
                    .map(|_| rng.random_range(self.means[0]..=self.means[1]))
                    .collect();
                let stds = (0..self.components)
                    .map(|_| rng.random_range(self.stds[0]..=self.stds[1]))
                    .collect();
                let mut weights = vec![weight; self.components];
                let rest: f64 = weights[1..].iter().sum();
                weights[0] = 1.0 - rest;
                Marginal1D::truncated_gaussian_mixture(weights, means, stds, self.support)
            })
            .collect()
    }
}
