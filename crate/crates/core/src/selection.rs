//! Choosing K topics from a trained model: by size, by maximal marginal
//! relevance, or by DivRank over the topic-similarity graph.

use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::TopicModel;
use crate::network::{build_organic, cosine_similarity};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedTopic {
    /// Topic label as stored in the model.
    pub topic_id: usize,
    pub score: f64,
    /// Size over the corpus token total.
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopicRanking {
    pub topics: Vec<RankedTopic>,
    /// Fewer topics than requested were available.
    pub truncated: bool,
    /// The iterative selector stopped at its iteration cap.
    pub unconverged: bool,
}

impl TopicRanking {
    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.topics.iter().map(|t| t.topic_id).collect()
    }
}

fn clamp_k(model: &TopicModel, k: usize) -> (usize, bool) {
    let n = model.num_topics();
    if k > n {
        warn!("asked for {k} topics but only {n} are active; returning all");
        (n, true)
    } else {
        (k, false)
    }
}

fn ranked(model: &TopicModel, row: usize, score: f64, proportions: &[f64]) -> RankedTopic {
    RankedTopic {
        topic_id: model.topic_ids[row],
        score,
        proportion: proportions[row],
    }
}

/// Indices sorted by descending score, ties to the lower topic label.
fn order_by(model: &TopicModel, scores: &[f64]) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..scores.len()).collect();
    rows.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(model.topic_ids[a].cmp(&model.topic_ids[b]))
    });
    rows
}

/// The `k` largest topics.
pub fn top_k_by_size(model: &TopicModel, k: usize) -> TopicRanking {
    let (k, truncated) = clamp_k(model, k);
    let proportions = model.proportions();
    let topics = order_by(model, &model.sizes)
        .into_iter()
        .take(k)
        .map(|r| ranked(model, r, model.sizes[r], &proportions))
        .collect();
    TopicRanking {
        topics,
        truncated,
        unconverged: false,
    }
}

/// Cosine similarities between all topic rows; rows with no mass are
/// treated as dissimilar to everything.
pub fn topic_similarities(phi: &Matrix) -> Matrix {
    let k = phi.rows();
    let mut w = Matrix::identity(k);
    for i in 0..k {
        for j in i + 1..k {
            let s = cosine_similarity(phi.row(i), phi.row(j)).unwrap_or(0.0);
            w[(i, j)] = s;
            w[(j, i)] = s;
        }
    }
    w
}

/// Greedy maximal marginal relevance. The first pick is the most relevant
/// topic; each further pick maximizes
/// `lambda * rel(t) - (1 - lambda) * max_s sim(t, s)` over the selected `s`.
/// Relevance is the topic's proportion of the corpus.
pub fn mmr_select(model: &TopicModel, k: usize, lambda: f64) -> Result<TopicRanking> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} not in [0,1]")));
    }
    let (k, truncated) = clamp_k(model, k);
    let rel = model.proportions();
    let sim = topic_similarities(&model.phi);
    let n = model.num_topics();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut topics = Vec::with_capacity(k);
    let mut max_sim = vec![0.0f64; n];
    while chosen.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for t in (0..n).filter(|t| !chosen.contains(t)) {
            let score = if chosen.is_empty() {
                rel[t]
            } else {
                lambda * rel[t] - (1.0 - lambda) * max_sim[t]
            };
            let better = match best {
                None => true,
                Some((b, bs)) => score > bs || (score == bs && model.topic_ids[t] < model.topic_ids[b]),
            };
            if better {
                best = Some((t, score));
            }
        }
        let (t, score) = best.expect("candidates remain while chosen < k <= n");
        let score = if chosen.is_empty() { lambda * score } else { score };
        chosen.push(t);
        topics.push(ranked(model, t, score, &rel));
        for (u, m) in max_sim.iter_mut().enumerate() {
            *m = m.max(sim[(u, t)]);
        }
    }
    Ok(TopicRanking {
        topics,
        truncated,
        unconverged: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DivRankVariant {
    /// Visit mass accumulates every iterate of the ranking vector.
    #[default]
    Cumulative,
    /// Visit mass is the current ranking vector.
    Pointwise,
}

impl fmt::Display for DivRankVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DivRankVariant::Cumulative => "cumulative",
            DivRankVariant::Pointwise => "pointwise",
        })
    }
}

impl FromStr for DivRankVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cumulative" => Ok(DivRankVariant::Cumulative),
            "pointwise" => Ok(DivRankVariant::Pointwise),
            _ => Err(Error::InvalidArgument(format!(
                "unknown DivRank variant '{s}' (expected cumulative or pointwise)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivRankConfig {
    /// Probability of leaving a node in the organic walk.
    pub alpha: f64,
    /// Weight of the walk against the preference vector.
    pub lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub variant: DivRankVariant,
}

impl Default for DivRankConfig {
    fn default() -> Self {
        DivRankConfig {
            alpha: 0.25,
            lambda: 0.9,
            max_iters: 1000,
            tol: 1e-10,
            variant: DivRankVariant::Cumulative,
        }
    }
}

/// Stationary DivRank scores for a graph with organic transitions `p0`
/// and preference `pref` (normalized internally). Returns the scores and
/// whether the iteration converged.
pub fn divrank_scores(p0: &Matrix, pref: &[f64], config: &DivRankConfig) -> Result<(Vec<f64>, bool)> {
    if !(config.lambda > 0.0 && config.lambda < 1.0) {
        return Err(Error::InvalidArgument(format!("DivRank lambda {} not in (0,1)", config.lambda)));
    }
    if config.max_iters == 0 {
        return Err(Error::InvalidArgument("DivRank needs at least one iteration".into()));
    }
    let n = pref.len();
    let total: f64 = pref.iter().sum();
    if !(total > 0.0) || pref.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidArgument("preference vector must be non-negative with positive sum".into()));
    }
    let pref: Vec<f64> = pref.iter().map(|x| x / total).collect();
    let mut pi = pref.clone();
    let mut visits = vec![1.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..config.max_iters {
        if config.variant == DivRankVariant::Pointwise {
            visits.copy_from_slice(&pi);
        }
        next.iter_mut().zip(&pref).for_each(|(x, p)| *x = (1.0 - config.lambda) * p);
        for i in 0..n {
            let row = p0.row(i);
            let denom: f64 = row.iter().zip(&visits).map(|(p, v)| p * v).sum();
            if denom <= 0.0 {
                continue;
            }
            let scale = config.lambda * pi[i] / denom;
            for j in 0..n {
                next[j] += scale * row[j] * visits[j];
            }
        }
        // Mass lost through rows without reachable visits goes back to the
        // preference vector.
        let s: f64 = next.iter().sum();
        if s > 0.0 {
            next.iter_mut().for_each(|x| *x /= s);
        }
        let change = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut pi, &mut next);
        if config.variant == DivRankVariant::Cumulative {
            visits.iter_mut().zip(&pi).for_each(|(v, p)| *v += p);
        }
        if change < config.tol {
            return Ok((pi, true));
        }
    }
    Ok((pi, false))
}

/// DivRank on the topic-similarity graph with topic proportions as the
/// preference vector; the `k` highest-scoring topics are returned.
pub fn divrank_select(model: &TopicModel, k: usize, config: &DivRankConfig) -> Result<TopicRanking> {
    if !(0.0..1.0).contains(&config.alpha) {
        return Err(Error::InvalidArgument(format!("DivRank alpha {} not in [0,1)", config.alpha)));
    }
    let (k, truncated) = clamp_k(model, k);
    let proportions = model.proportions();
    let sim = topic_similarities(&model.phi);
    let active = vec![true; model.num_topics()];
    let p0 = build_organic(&sim, config.alpha, &active);
    let (pi, converged) = divrank_scores(&p0, &model.sizes, config)?;
    if !converged {
        warn!("DivRank did not converge in {} iterations", config.max_iters);
    }
    let topics = order_by(model, &pi)
        .into_iter()
        .take(k)
        .map(|r| ranked(model, r, pi[r], &proportions))
        .collect();
    Ok(TopicRanking {
        topics,
        truncated,
        unconverged: !converged,
    })
}

/// Copy of `model` with only the ranked topics, in ranking order. Theta is
/// dropped: it is re-estimated over the kept topics when needed.
pub fn restrict_model(model: &TopicModel, ranking: &TopicRanking) -> Result<TopicModel> {
    if ranking.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut rows = Vec::with_capacity(ranking.len());
    for t in &ranking.topics {
        let r = model.position(t.topic_id).ok_or(Error::InactiveTopic(t.topic_id))?;
        if rows.contains(&r) {
            return Err(Error::InvalidArgument(format!("topic {} selected twice", t.topic_id)));
        }
        rows.push(r);
    }
    Ok(TopicModel {
        kind: model.kind,
        topic_ids: rows.iter().map(|&r| model.topic_ids[r]).collect(),
        sizes: rows.iter().map(|&r| model.sizes[r]).collect(),
        phi: Matrix::from_rows(rows.iter().map(|&r| model.phi.row(r).to_vec()).collect()),
        theta: None,
        num_docs: model.num_docs,
        token_total: model.token_total,
        iteration: model.iteration,
        likelihood: model.likelihood,
    })
}
