//! Continuous piecewise-affine costs written as a difference of sums of
//! max-affine blocks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// `x ↦ ⟨a, x⟩ + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub a: Vec<f64>,
    pub b: f64,
}

impl AffinePiece {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + self.b
    }
}

/// A block is the pointwise maximum of its pieces.
pub type Block = Vec<AffinePiece>;

/// Box-free JSON form of a cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostDescriptor {
    pub pos_blocks: Vec<Block>,
    #[serde(default)]
    pub neg_blocks: Vec<Block>,
}

/// `f(x) = Σ_k max_i (⟨a⁺_{k,i}, x⟩ + b⁺_{k,i}) − Σ_k max_i (⟨a⁻_{k,i}, x⟩ + b⁻_{k,i})`
/// on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct CpwaCost {
    pos: Vec<Block>,
    neg: Vec<Block>,
    bounds: Vec<(f64, f64)>,
}

/// Lipschitz constant of a cost for the ℓ1 metric, with the share of each
/// block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzInfo {
    pub total: f64,
    pub pos_blocks: Vec<f64>,
    pub neg_blocks: Vec<f64>,
}

fn block_max(block: &Block, x: &[f64]) -> f64 {
    block.iter().map(|p| p.eval(x)).fold(f64::NEG_INFINITY, f64::max)
}

fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

impl CpwaCost {
    pub fn new(pos: Vec<Block>, neg: Vec<Block>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if pos.len() + neg.len() == 0 {
            return domain("a cost needs at least one block");
        }
        if bounds.is_empty() {
            return domain("the box must have at least one dimension");
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return domain(format!("box side {i} is not a proper interval: [{lo}, {hi}]"));
            }
        }
        let dim = bounds.len();
        for block in pos.iter().chain(&neg) {
            if block.is_empty() {
                return domain("every block needs at least one affine piece");
            }
            for piece in block {
                if piece.a.len() != dim {
                    return domain(format!(
                        "affine piece has {} coefficients, box has dimension {dim}",
                        piece.a.len()
                    ));
                }
                if piece.a.iter().any(|v| !v.is_finite()) || !piece.b.is_finite() {
                    return domain("affine coefficients must be finite");
                }
            }
        }
        Ok(Self { pos, neg, bounds })
    }

    pub fn from_descriptor(d: CostDescriptor, bounds: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(d.pos_blocks, d.neg_blocks, bounds)
    }

    pub fn descriptor(&self) -> CostDescriptor {
        CostDescriptor { pos_blocks: self.pos.clone(), neg_blocks: self.neg.clone() }
    }

    /// Sum of `|⟨a, x⟩ − t|` terms minus another such sum; each term
    /// becomes a two-piece block.
    pub fn from_abs_terms(
        pos: &[(Vec<f64>, f64)],
        neg: &[(Vec<f64>, f64)],
        bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let to_blocks = |terms: &[(Vec<f64>, f64)]| -> Vec<Block> {
            terms.iter().map(|(s, t)| abs_block(s, *t)).collect()
        };
        Self::new(to_blocks(pos), to_blocks(neg), bounds)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn pos_blocks(&self) -> &[Block] {
        &self.pos
    }

    pub fn neg_blocks(&self) -> &[Block] {
        &self.neg
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.bounds).all(|(v, &(lo, hi))| lo <= *v && *v <= hi)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if !self.contains(x) {
            return domain(format!("point {x:?} is outside the cost's box"));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let plus: f64 = self.pos.iter().map(|b| block_max(b, x)).sum();
        let minus: f64 = self.neg.iter().map(|b| block_max(b, x)).sum();
        plus - minus
    }

    /// Block-sum Lipschitz bound `Σ_k max_i ‖a_{k,i}‖_∞` over both signs.
    pub fn lipschitz_l1(&self) -> LipschitzInfo {
        let per_block = |blocks: &[Block]| -> Vec<f64> {
            blocks
                .iter()
                .map(|b| b.iter().map(|p| sup_norm(&p.a)).fold(0.0, f64::max))
                .collect()
        };
        let pos_blocks = per_block(&self.pos);
        let neg_blocks = per_block(&self.neg);
        let total = pos_blocks.iter().chain(&neg_blocks).sum();
        LipschitzInfo { total, pos_blocks, neg_blocks }
    }

    /// `-f`, obtained by swapping the two block lists.
    pub fn negated(&self) -> Self {
        Self { pos: self.neg.clone(), neg: self.pos.clone(), bounds: self.bounds.clone() }
    }

    /// `f + c`, with `c` folded into an extra constant block.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.pos.push(vec![AffinePiece { a: vec![0.0; self.dim()], b: c }]);
        out
    }
}

fn abs_block(s: &[f64], t: f64) -> Block {
    vec![
        AffinePiece { a: s.to_vec(), b: -t },
        AffinePiece { a: s.iter().map(|v| -v).collect(), b: t },
    ]
}

/// Maximum of `⟨a, x⟩ + b` over the box, by picking the better endpoint of
/// each side.
pub fn box_max_linear(a: &[f64], b: f64, bounds: &[(f64, f64)]) -> f64 {
    b + a
        .iter()
        .zip(bounds)
        .map(|(a, &(lo, hi))| if *a >= 0.0 { a * hi } else { a * lo })
        .sum::<f64>()
}

/// Generator for costs `Σ_k |⟨s⁺_k, x⟩ − t⁺_k| − Σ_k |⟨s⁻_k, x⟩ − t⁻_k|` with
/// directions uniform on the unit sphere and offsets uniform on `t_range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomCost {
    pub k_pos: usize,
    pub k_neg: usize,
    pub seed: u64,
    #[serde(default = "default_t_range")]
    pub t_range: [f64; 2],
}

fn default_t_range() -> [f64; 2] {
    [-5.0, 5.0]
}

impl RandomCost {
    pub fn new(k_pos: usize, k_neg: usize, seed: u64) -> Self {
        Self { k_pos, k_neg, seed, t_range: default_t_range() }
    }

    pub fn generate(&self, bounds: Vec<(f64, f64)>) -> Result<CpwaCost> {
        let dim = bounds.len();
        if dim == 0 {
            return domain("the box must have at least one dimension");
        }
        if !(self.t_range[0] <= self.t_range[1]) {
            return domain("offset range must be ordered");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let term = |rng: &mut ChaCha8Rng| {
            let s = unit_direction(rng, dim);
            let t = if self.t_range[0] == self.t_range[1] {
                self.t_range[0]
            } else {
                rng.random_range(self.t_range[0]..self.t_range[1])
            };
            (s, t)
        };
        let pos: Vec<_> = (0..self.k_pos).map(|_| term(&mut rng)).collect();
        let neg: Vec<_> = (0..self.k_neg).map(|_| term(&mut rng)).collect();
        CpwaCost::from_abs_terms(&pos, &neg, bounds)
    }
}

fn unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Random cost on `[-10, 10]^dim` with offsets in `[-5, 5]`.
pub fn random_instance(dim: usize, k_pos: usize, k_neg: usize, seed: u64) -> Result<CpwaCost> {
    RandomCost::new(k_pos, k_neg, seed).generate(vec![(-10.0, 10.0); dim])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0); 2]
    }

    fn abs_diff() -> CpwaCost {
        CpwaCost::from_abs_terms(&[(vec![1.0, -1.0], 0.0)], &[], square()).unwrap()
    }

    fn sum_minus_diff() -> CpwaCost {
        CpwaCost::from_abs_terms(&[(vec![1.0, 1.0], 0.0)], &[(vec![1.0, -1.0], 0.0)], square())
            .unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(abs_diff().eval(&[0.3, 0.3]).unwrap(), 0.0);
        assert_eq!(abs_diff().eval(&[1.0, -1.0]).unwrap(), 2.0);
        assert_eq!(sum_minus_diff().eval(&[1.0, 1.0]).unwrap(), 2.0);
        assert!(abs_diff().eval(&[1.5, 0.0]).is_err());
        assert!(abs_diff().eval(&[0.0]).is_err());
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(abs_diff().lipschitz_l1().total, 1.0);
        assert_eq!(sum_minus_diff().lipschitz_l1().total, 2.0);
        let lin = CpwaCost::new(
            vec![vec![AffinePiece { a: vec![0.5, -3.0], b: 1.0 }]],
            vec![],
            square(),
        )
        .unwrap();
        assert_eq!(lin.lipschitz_l1().total, 3.0);
    }

    #[test]
    fn box_max_examples() {
        assert_eq!(box_max_linear(&[1.0, -1.0], 0.0, &square()), 2.0);
        assert_eq!(box_max_linear(&[0.0, 0.0], 3.0, &square()), 3.0);
        assert_eq!(box_max_linear(&[2.0, 1.0], -1.0, &[(0.0, 1.0), (-1.0, 1.0)]), 2.0);
    }

    #[test]
    fn random_directions_are_unit() {
        let f = random_instance(50, 2, 2, 17).unwrap();
        for block in f.pos_blocks().iter().chain(f.neg_blocks()) {
            let norm = block[0].a.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn random_instance_is_deterministic() {
        assert_eq!(random_instance(5, 2, 2, 3).unwrap(), random_instance(5, 2, 2, 3).unwrap());
        assert_ne!(random_instance(5, 2, 2, 3).unwrap(), random_instance(5, 2, 2, 4).unwrap());
    }

    #[test]
    fn rejects_malformed_costs() {
        assert!(CpwaCost::new(vec![], vec![], square()).is_err());
        assert!(CpwaCost::new(vec![vec![]], vec![], square()).is_err());
        let short = vec![vec![AffinePiece { a: vec![1.0], b: 0.0 }]];
        assert!(CpwaCost::new(short, vec![], square()).is_err());
    }

    #[test]
    fn descriptor_json_shape() {
        let json = r#"{"pos_blocks":[[{"a":[1.0,-1.0],"b":0.0},{"a":[-1.0,1.0],"b":0.0}]],"neg_blocks":[]}"#;
        let d: CostDescriptor = serde_json::from_str(json).unwrap();
        let f = CpwaCost::from_descriptor(d, square()).unwrap();
        assert_eq!(f, abs_diff());
        assert_eq!(serde_json::to_string(&f.descriptor()).unwrap(), json);
    }

    #[test]
    fn negated_and_shifted() {
        let f = sum_minus_diff();
        let x = [0.2, -0.7];
        assert_eq!(f.negated().eval(&x).unwrap(), -f.eval(&x).unwrap());
        assert_eq!(f.shifted(2.5).eval(&x).unwrap(), f.eval(&x).unwrap() + 2.5);
    }
}
