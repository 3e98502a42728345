//! From a relaxed discrete optimizer to a coupling with the exact marginals.
//!
//! Each coordinate of the discrete measure is matched to its target marginal
//! by the monotone (quantile) coupling: the atoms of the projection, sorted,
//! split `[0, 1]` into consecutive intervals of their weights, and an atom's
//! coordinate is replaced by a draw of the target quantile function on the
//! atom's interval. Coordinates are resampled independently given the atom.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::cost::CpwaCost;
use crate::cutting_plane::DiscreteMeasure;
use crate::error::{domain, Result};
use crate::marginals::Marginal1D;

const MERGE_TOL: f64 = 1e-12;

/// Distinct values of one coordinate with their total weights, sorted.
fn project(values: impl Iterator<Item = (f64, f64)>) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let pairs: Vec<(f64, f64)> = values.collect();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| pairs[a].0.total_cmp(&pairs[b].0));
    let mut atoms: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut group = vec![0; pairs.len()];
    for idx in order {
        let (x, w) = pairs[idx];
        match atoms.last() {
            Some(&last) if (x - last).abs() <= MERGE_TOL => {
                *weights.last_mut().unwrap() += w;
            }
            _ => {
                atoms.push(x);
                weights.push(w);
            }
        }
        group[idx] = atoms.len() - 1;
    }
    (atoms, weights, group)
}

/// Sampler of the reassembled coupling.
#[derive(Debug, Clone)]
pub struct CouplingSampler {
    points: Vec<Vec<f64>>,
    cumulative: Vec<f64>,
    marginals: Vec<Marginal1D>,
    /// `intervals[i][a]`: quantile levels assigned to atom `a` in coordinate `i`
    intervals: Vec<Vec<(f64, f64)>>,
}

pub fn build_sampler(measure: &DiscreteMeasure, marginals: &[Marginal1D]) -> Result<CouplingSampler> {
    if measure.dim() != marginals.len() {
        return domain(format!(
            "measure has dimension {}, got {} marginals",
            measure.dim(),
            marginals.len()
        ));
    }
    let total: f64 = measure.weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return domain(format!("weights sum to {total}, not one"));
    }
    let mut cumulative = Vec::with_capacity(measure.len());
    let mut acc = 0.0;
    for w in &measure.weights {
        acc += w;
        cumulative.push(acc);
    }
    let intervals = (0..marginals.len())
        .map(|i| {
            let (_, weights, group) =
                project(measure.points.iter().zip(&measure.weights).map(|(p, w)| (p[i], *w)));
            let mut edges = Vec::with_capacity(weights.len() + 1);
            edges.push(0.0);
            let mut c = 0.0;
            for w in &weights {
                c += w;
                edges.push(c.min(1.0));
            }
            *edges.last_mut().unwrap() = 1.0;
            group.iter().map(|&g| (edges[g], edges[g + 1])).collect()
        })
        .collect();
    Ok(CouplingSampler {
        points: measure.points.clone(),
        cumulative,
        marginals: marginals.to_vec(),
        intervals,
    })
}

impl CouplingSampler {
    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Quantile levels of coordinate `i` reserved for atom `atom`.
    pub fn conditional_interval(&self, i: usize, atom: usize) -> (f64, f64) {
        self.intervals[i][atom]
    }

    /// Draws an atom index and writes the matching sample into `y`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, y: &mut [f64]) -> usize {
        let u: f64 = rng.random();
        let atom = self.cumulative.partition_point(|&c| c <= u).min(self.points.len() - 1);
        for (i, (yi, m)) in y.iter_mut().zip(&self.marginals).enumerate() {
            let (lo, hi) = self.intervals[i][atom];
            let v: f64 = rng.random();
            *yi = m.quantile_unchecked(lo + (hi - lo) * v);
        }
        atom
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, Vec<f64>) {
        let mut y = vec![0.0; self.dim()];
        let atom = self.sample_into(rng, &mut y);
        (atom, y)
    }
}

/// `∫ |F̂ - F| dx`, the W1 distance between a finitely supported law given
/// by atoms and weights and a marginal.
pub fn w1_discrete_vs_marginal(atoms: &[f64], weights: &[f64], marginal: &Marginal1D) -> Result<f64> {
    if atoms.is_empty() || atoms.len() != weights.len() {
        return domain("need one weight per atom and at least one atom");
    }
    let (atoms, weights, _) = project(atoms.iter().copied().zip(weights.iter().copied()));
    let total: f64 = weights.iter().sum();
    let (lo, hi) = marginal.support();
    let start = lo.min(atoms[0]);
    let end = hi.max(atoms[atoms.len() - 1]);

    // F̂ is constant on each piece between breakpoints; split each piece at
    // the point where F crosses that level
    let mut breaks = vec![start];
    breaks.extend(atoms.iter().copied().filter(|&a| a > start && a < end));
    breaks.push(end);
    let mut level = 0.0;
    let mut next_atom = 0;
    let mut dist = 0.0;
    for piece in breaks.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        while next_atom < atoms.len() && atoms[next_atom] <= a {
            level += weights[next_atom] / total;
            next_atom += 1;
        }
        let level = level.min(1.0);
        if b <= a {
            continue;
        }
        let cross = marginal.quantile_unchecked(level).clamp(a, b);
        let below = level * (cross - a) - marginal.cdf_integral(a, cross);
        let above = marginal.cdf_integral(cross, b) - level * (b - cross);
        dist += below.max(0.0) + above.max(0.0);
    }
    Ok(dist)
}

/// Per-coordinate W1 distances between the projections of `measure` and the
/// marginals.
pub fn projection_distances(measure: &DiscreteMeasure, marginals: &[Marginal1D]) -> Result<Vec<f64>> {
    (0..marginals.len())
        .map(|i| {
            let xs: Vec<f64> = measure.points.iter().map(|p| p[i]).collect();
            w1_discrete_vs_marginal(&xs, &measure.weights, &marginals[i])
        })
        .collect()
}

/// Monte Carlo estimate from independent replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
    pub samples: usize,
    /// Two-sided 95% interval, `mean ± 1.96 stderr`.
    pub ci95: [f64; 2],
    /// One-sided 99.9% upper confidence bound from Student's t.
    pub upper_999: f64,
}

impl McEstimate {
    pub fn ci95_half_width(&self) -> f64 {
        1.96 * self.stderr
    }

    fn from_stats(mean: f64, stderr: f64, dof: usize, reps: usize, samples: usize) -> Self {
        let t = if dof == 0 || stderr == 0.0 {
            0.0
        } else {
            StudentsT::new(0.0, 1.0, dof as f64)
                .map(|d| d.inverse_cdf(0.999))
                .unwrap_or(f64::INFINITY)
        };
        let half = 1.96 * stderr;
        Self {
            mean,
            stderr,
            reps,
            samples,
            ci95: [mean - half, mean + half],
            upper_999: mean + t * stderr,
        }
    }
}

/// Mean and sample standard deviation.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Random stream of replication `rep` under `seed`.
pub fn replication_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// Estimates `E f(Y)` under the reassembled coupling with `reps`
/// replications of `samples` draws each. Replications run in parallel,
/// each on its own stream, so the result does not depend on scheduling.
/// With a single replication the standard error comes from the spread of
/// the individual draws instead.
pub fn estimate_upper_bound(
    cost: &CpwaCost,
    sampler: &CouplingSampler,
    samples: usize,
    reps: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 || reps == 0 {
        return domain("need at least one sample and one replication");
    }
    if cost.dim() != sampler.dim() {
        return domain("cost and sampler dimensions differ");
    }
    let run = |rep: usize| -> (f64, f64) {
        let mut rng = replication_rng(seed, rep);
        let mut y = vec![0.0; sampler.dim()];
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..samples {
            sampler.sample_into(&mut rng, &mut y);
            let v = cost.eval_unchecked(&y);
            sum += v;
            sq += v * v;
        }
        (sum / samples as f64, sq / samples as f64)
    };
    let results: Vec<(f64, f64)> = (0..reps).into_par_iter().map(run).collect();
    if reps == 1 {
        let (mean, second) = results[0];
        let n = samples as f64;
        let var = if samples > 1 { ((second - mean * mean) * n / (n - 1.0)).max(0.0) } else { 0.0 };
        return Ok(McEstimate::from_stats(mean, (var / n).sqrt(), samples - 1, 1, samples));
    }
    let means: Vec<f64> = results.iter().map(|r| r.0).collect();
    let (mean, std) = mean_std(&means);
    Ok(McEstimate::from_stats(mean, std / (reps as f64).sqrt(), reps - 1, reps, samples))
}

/// The reassembled coupling in closed form when every marginal is finitely
/// supported.
pub fn reassemble_discrete_exact(
    measure: &DiscreteMeasure,
    marginals: &[Marginal1D],
) -> Result<DiscreteMeasure> {
    let sampler = build_sampler(measure, marginals)?;
    let targets: Vec<(&[f64], Vec<f64>)> = marginals
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let (atoms, weights) = m
                .atoms()
                .ok_or_else(|| crate::error::Error::Domain(format!("marginal {i} is not discrete")))?;
            let mut edges = vec![0.0];
            let mut c = 0.0;
            for w in weights {
                c += w;
                edges.push(c);
            }
            Ok((atoms, edges))
        })
        .collect::<Result<_>>()?;

    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (a, &w) in measure.weights.iter().enumerate() {
        // conditional law of each coordinate given atom `a`
        let conditionals: Vec<Vec<(f64, f64)>> = targets
            .iter()
            .enumerate()
            .map(|(i, (atoms, edges))| {
                let (lo, hi) = sampler.conditional_interval(i, a);
                atoms
                    .iter()
                    .enumerate()
                    .filter_map(|(t, &x)| {
                        let overlap = hi.min(edges[t + 1]) - lo.max(edges[t]);
                        (overlap > 0.0).then(|| (x, overlap / (hi - lo)))
                    })
                    .collect()
            })
            .collect();
        let mut idx = vec![0usize; conditionals.len()];
        loop {
            let p: Vec<f64> = idx.iter().zip(&conditionals).map(|(&k, c)| c[k].0).collect();
            let q: f64 = idx.iter().zip(&conditionals).map(|(&k, c)| c[k].1).product();
            match points.iter().position(|x| x == &p) {
                Some(pos) => weights[pos] += w * q,
                None => {
                    points.push(p);
                    weights.push(w * q);
                }
            }
            let mut pos = 0;
            while pos < idx.len() {
                idx[pos] += 1;
                if idx[pos] < conditionals[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    DiscreteMeasure::new(points, weights)
}
