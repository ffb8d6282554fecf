//! The topic network: cosine similarities between topic-word distributions,
//! organic (similarity-proportional) transitions, and transitions reinforced
//! by topic size.
//!
//! Matrices always keep the starting dimension. An inactive topic keeps an
//! identity row and a zero column, so indices stay stable for the whole run.

use log::debug;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{normalize, Matrix};

/// Soft-mass activity threshold used for EM-based models.
pub const SOFT_ACTIVITY_THRESHOLD: f64 = 0.5;
/// Integer counts: a topic is active while it holds at least one token.
pub const HARD_ACTIVITY_THRESHOLD: f64 = 1.0;

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    assert_eq!(a.len(), b.len());
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na <= 0.0 || nb <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0))
}

/// Pairwise cosine similarities of the active rows of `phi`. Inactive rows
/// and columns are zero; the diagonal of active topics is 1.
pub fn similarity_matrix(phi: &Matrix, active: &[bool]) -> Result<Matrix> {
    let k = phi.rows();
    let mut w = Matrix::zeros(k, k);
    let norms: Vec<f64> = phi.iter_rows().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    for i in 0..k {
        if !active[i] {
            continue;
        }
        if norms[i] <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        w[(i, i)] = 1.0;
        for j in i + 1..k {
            if !active[j] {
                continue;
            }
            if norms[j] <= 0.0 {
                return Err(Error::ZeroNorm);
            }
            let dot: f64 = phi.row(i).iter().zip(phi.row(j)).map(|(x, y)| x * y).sum();
            let s = (dot / (norms[i] * norms[j])).clamp(0.0, 1.0);
            w[(i, j)] = s;
            w[(j, i)] = s;
        }
    }
    Ok(w)
}

/// How the organic row divides the leaving probability among neighbours.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum OrganicNorm {
    /// `p0(i,j) = alpha * w(i,j) / sum_{j' != i} w(i,j')`: the full `alpha`
    /// always leaves, however weak the neighbours are.
    #[default]
    Neighbors,
    /// The normalizer also counts the self-similarity `w(i,i) = 1`, and the
    /// row is rescaled to sum to one. Leaving mass shrinks with total
    /// neighbour similarity, so a topic with no similar neighbour keeps its
    /// tokens.
    WithSelf,
}

impl std::str::FromStr for OrganicNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neighbors" => Ok(OrganicNorm::Neighbors),
            "with-self" => Ok(OrganicNorm::WithSelf),
            _ => Err(Error::InvalidArgument(format!(
                "unknown organic normalization {s:?} (expected neighbors or with-self)"
            ))),
        }
    }
}

impl std::fmt::Display for OrganicNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OrganicNorm::Neighbors => "neighbors",
            OrganicNorm::WithSelf => "with-self",
        })
    }
}

/// Organic transitions: a walker leaves its topic with probability
/// `walk_alpha`, choosing an active neighbour in proportion to similarity.
/// A topic with no similar active neighbour stays put.
pub fn build_organic(similarity: &Matrix, walk_alpha: f64, active: &[bool]) -> Matrix {
    build_organic_with(similarity, walk_alpha, active, OrganicNorm::Neighbors)
}

pub fn build_organic_with(similarity: &Matrix, walk_alpha: f64, active: &[bool], norm: OrganicNorm) -> Matrix {
    let k = similarity.rows();
    let mut p0 = Matrix::identity(k);
    for i in 0..k {
        if !active[i] {
            continue;
        }
        let neighbours: f64 = (0..k)
            .filter(|&j| j != i && active[j])
            .map(|j| similarity[(i, j)])
            .sum();
        if neighbours <= 0.0 {
            continue;
        }
        let denom = match norm {
            OrganicNorm::Neighbors => neighbours,
            OrganicNorm::WithSelf => neighbours + 1.0,
        };
        let row = p0.row_mut(i);
        row[i] = 1.0 - walk_alpha;
        for j in 0..k {
            if j != i && active[j] {
                row[j] = walk_alpha * similarity[(i, j)] / denom;
            }
        }
        if norm == OrganicNorm::WithSelf {
            normalize(row);
        }
    }
    p0
}

/// Reinforces each organic transition by the target's size raised to
/// `gamma` and renormalizes per row (`0^0 = 1`). Rows whose normalizer
/// vanishes become identity rows; their indices are returned.
pub fn reinforce(organic: &Matrix, sizes: &[f64], gamma: f64) -> (Matrix, Vec<usize>) {
    let k = organic.rows();
    if gamma == 0.0 {
        return (organic.clone(), Vec::new());
    }
    let weights: Vec<f64> = sizes.iter().map(|&n| n.max(0.0).powf(gamma)).collect();
    let mut p = Matrix::zeros(k, k);
    let mut flagged = Vec::new();
    for i in 0..k {
        let src = organic.row(i);
        let row = p.row_mut(i);
        let mut d = 0.0;
        for j in 0..k {
            row[j] = src[j] * weights[j];
            d += row[j];
        }
        if d > 0.0 && d.is_finite() {
            row.iter_mut().for_each(|x| *x /= d);
        } else {
            row.iter_mut().for_each(|x| *x = 0.0);
            row[i] = 1.0;
            flagged.push(i);
        }
    }
    (p, flagged)
}

/// One expected walk step: `out[j] = sum_i assignment[i] * p(i, j)`.
pub fn walk_step_into(assignment: &[f64], transition: &Matrix, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (i, &a) in assignment.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (o, &p) in out.iter_mut().zip(transition.row(i)) {
            *o += a * p;
        }
    }
}

pub fn walk_step(assignment: &[f64], transition: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; assignment.len()];
    walk_step_into(assignment, transition, &mut out);
    out
}

/// Samples the next topic from row `current` of `transition`.
pub fn walk_sample<R: Rng + ?Sized>(current: usize, transition: &Matrix, rng: &mut R) -> usize {
    let row = transition.row(current);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = current;
    for (j, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = j;
        if u < acc {
            return j;
        }
    }
    last
}

#[derive(Debug, Clone)]
pub struct TopicNetwork {
    similarity: Matrix,
    organic: Matrix,
    transition: Matrix,
    sizes: Vec<f64>,
    active: Vec<bool>,
    walk_alpha: f64,
    gamma: f64,
    threshold: f64,
    norm: OrganicNorm,
    refreshes: usize,
}

impl TopicNetwork {
    /// A fresh network over `k` active topics with identity transitions.
    pub fn new(k: usize, walk_alpha: f64, gamma: f64, threshold: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&walk_alpha) {
            return Err(Error::InvalidArgument(format!("walk_alpha {walk_alpha} not in [0,1)")));
        }
        if !(gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!("gamma {gamma} must be >= 0")));
        }
        Ok(TopicNetwork {
            similarity: Matrix::identity(k),
            organic: Matrix::identity(k),
            transition: Matrix::identity(k),
            sizes: vec![0.0; k],
            active: vec![true; k],
            walk_alpha,
            gamma,
            threshold,
            norm: OrganicNorm::Neighbors,
            refreshes: 0,
        })
    }

    pub fn with_organic_norm(mut self, norm: OrganicNorm) -> Self {
        self.norm = norm;
        self
    }

    /// Recomputes the active mask, similarities, organic and reinforced
    /// transitions from the current topic-word rows and sizes. Deactivation
    /// is permanent.
    pub fn refresh(&mut self, phi: &Matrix, sizes: &[f64]) -> Result<()> {
        let k = self.num_topics();
        assert_eq!(phi.rows(), k);
        assert_eq!(sizes.len(), k);
        for (a, &n) in self.active.iter_mut().zip(sizes) {
            if *a && n < self.threshold {
                *a = false;
            }
        }
        self.sizes = sizes
            .iter()
            .zip(&self.active)
            .map(|(&n, &a)| if a { n.max(0.0) } else { 0.0 })
            .collect();
        self.similarity = similarity_matrix(phi, &self.active)?;
        self.organic = build_organic_with(&self.similarity, self.walk_alpha, &self.active, self.norm);
        let (p, flagged) = reinforce(&self.organic, &self.sizes, self.gamma);
        for &i in flagged.iter().filter(|&&i| self.active[i]) {
            debug!("topic {i}: all reachable topics have zero size, identity row");
        }
        self.transition = p;
        self.refreshes += 1;
        Ok(())
    }

    pub fn num_topics(&self) -> usize {
        self.active.len()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn is_active(&self, topic: usize) -> bool {
        self.active[topic]
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn similarity(&self) -> &Matrix {
        &self.similarity
    }

    pub fn organic(&self) -> &Matrix {
        &self.organic
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn walk_alpha(&self) -> f64 {
        self.walk_alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn organic_norm(&self) -> OrganicNorm {
        self.norm
    }

    pub fn refreshes(&self) -> usize {
        self.refreshes
    }

    pub fn walk_step(&self, assignment: &[f64]) -> Vec<f64> {
        walk_step(assignment, &self.transition)
    }

    pub fn walk_sample<R: Rng + ?Sized>(&self, current: usize, rng: &mut R) -> usize {
        walk_sample(current, &self.transition, rng)
    }
}
