//! PLSA with a size-reinforced topic walk in the E-step.
//!
//! After a warmup of plain EM iterations, every token's topic posterior is
//! pushed through one expected step of the topic network's transition
//! matrix. The network (similarities, organic and reinforced transitions,
//! active mask) is rebuilt every `refresh_every` iterations from the current
//! topic-word rows and sizes. A topic whose expected size falls below the
//! activity threshold at a refresh is pruned for good: its theta column and
//! phi row are zeroed and it receives no transition mass afterwards.

use log::{debug, info};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matrix::{normalize, Matrix};
use crate::network::{self, OrganicNorm, TopicNetwork, SOFT_ACTIVITY_THRESHOLD};
use crate::plsa::{self, em_pass, init_random, initial_sizes, MStep, PlsaState, Posteriors};
use crate::trace::{Trace, TraceRow};

#[derive(Debug, Clone, PartialEq)]
pub struct DivPlsaConfig {
    pub start_topics: usize,
    pub walk_alpha: f64,
    pub gamma: f64,
    /// Plain EM iterations before the walk starts.
    pub warmup_iters: usize,
    pub refresh_every: usize,
    /// Consecutive refreshes with an unchanged active count needed to stop.
    pub active_patience: usize,
    pub max_iters: usize,
    /// Relative likelihood change over `likelihood_window` iterations needed
    /// to stop.
    pub tol: f64,
    pub likelihood_window: usize,
    pub activity_threshold: f64,
    pub organic_norm: OrganicNorm,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for DivPlsaConfig {
    fn default() -> Self {
        DivPlsaConfig {
            start_topics: 20,
            walk_alpha: 0.1,
            gamma: 1.9,
            warmup_iters: 50,
            refresh_every: 1,
            active_patience: 3,
            max_iters: 500,
            tol: 1e-6,
            likelihood_window: 10,
            activity_threshold: SOFT_ACTIVITY_THRESHOLD,
            organic_norm: OrganicNorm::WithSelf,
            seed: 0,
            execution: Execution::Sequential,
        }
    }
}

impl DivPlsaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.start_topics == 0 {
            return bad("start_topics must be at least 1".into());
        }
        if self.warmup_iters < 1 {
            return bad("warmup_iters must be at least 1".into());
        }
        if self.refresh_every < 1 {
            return bad("refresh_every must be at least 1".into());
        }
        if !(self.gamma >= 0.0) {
            return bad(format!("gamma {} must be >= 0", self.gamma));
        }
        if !(0.0..1.0).contains(&self.walk_alpha) {
            return bad(format!("walk_alpha {} not in [0,1)", self.walk_alpha));
        }
        if self.max_iters < self.warmup_iters {
            return bad("max_iters must cover the warmup".into());
        }
        Ok(())
    }
}

/// Posterior of `(d, w)` after one expected walk step.
pub fn e_step_with_walk(state: &PlsaState, network: &TopicNetwork, d: usize, w: usize) -> Vec<f64> {
    network.walk_step(&plsa::e_step_posterior(state, d, w))
}

/// Re-estimation from walked posteriors; `sizes` holds the expected token
/// count of each topic.
pub fn m_step_with_sizes(corpus: &Corpus, walked: &Posteriors) -> MStep {
    plsa::m_step(corpus, walked)
}

#[derive(Debug, Clone)]
pub struct DivPlsaFit {
    /// Parameters restricted to the surviving topics.
    pub state: PlsaState,
    /// Original indices of the surviving topics.
    pub topic_ids: Vec<usize>,
    /// Expected sizes of the surviving topics.
    pub sizes: Vec<f64>,
    pub trace: Trace,
    pub network: TopicNetwork,
    pub iterations: usize,
    pub converged: bool,
}

impl DivPlsaFit {
    pub fn active_count(&self) -> usize {
        self.topic_ids.len()
    }
}

fn prune(state: &mut PlsaState, pruned: &[usize], active: &[bool]) {
    for &t in pruned {
        state.phi.row_mut(t).iter_mut().for_each(|x| *x = 0.0);
    }
    let n_active = active.iter().filter(|&&a| a).count() as f64;
    for d in 0..state.theta.rows() {
        let row = state.theta.row_mut(d);
        for &t in pruned {
            row[t] = 0.0;
        }
        if normalize(row) <= 0.0 {
            for (x, &a) in row.iter_mut().zip(active) {
                *x = if a { 1.0 / n_active } else { 0.0 };
            }
        }
    }
}

/// Drops inactive topics and renormalizes theta rows over the survivors.
pub(crate) fn compact(state: &PlsaState, sizes: &[f64], active: &[bool]) -> (PlsaState, Vec<usize>, Vec<f64>) {
    let ids: Vec<usize> = (0..active.len()).filter(|&t| active[t]).collect();
    let phi = Matrix::from_rows(ids.iter().map(|&t| state.phi.row(t).to_vec()).collect());
    let theta = Matrix::from_rows(
        state
            .theta
            .iter_rows()
            .map(|r| {
                let mut row: Vec<f64> = ids.iter().map(|&t| r[t]).collect();
                if normalize(&mut row) <= 0.0 {
                    row.iter_mut().for_each(|x| *x = 1.0 / ids.len() as f64);
                }
                row
            })
            .collect(),
    );
    let sizes = ids.iter().map(|&t| sizes[t]).collect();
    (PlsaState { theta, phi }, ids, sizes)
}

pub fn train(corpus: &Corpus, config: &DivPlsaConfig) -> Result<DivPlsaFit> {
    config.validate()?;
    let k = config.start_topics;
    let mut state = init_random(corpus, k, config.seed);
    let mut net = TopicNetwork::new(k, config.walk_alpha, config.gamma, config.activity_threshold)?
        .with_organic_norm(config.organic_norm);
    let mut sizes = initial_sizes(corpus, &state);
    let mut rows = vec![TraceRow {
        iteration: 0,
        likelihood: f64::NAN,
        active_count: k,
        sizes: sizes.clone(),
    }];
    let mut last_active = k;
    let mut stable = 0usize;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=config.max_iters {
        let walk = (it > config.warmup_iters).then(|| net.transition());
        let out = em_pass(corpus, &state, walk, config.execution);
        rows.last_mut().unwrap().likelihood = out.log_likelihood;
        state = out.step.state;
        sizes = out.step.sizes;
        iterations = it;

        if it >= config.warmup_iters && (it - config.warmup_iters).is_multiple_of(config.refresh_every) {
            let before: Vec<bool> = net.active().to_vec();
            net.refresh(&state.phi, &sizes)?;
            let pruned: Vec<usize> = (0..k).filter(|&t| before[t] && !net.is_active(t)).collect();
            if !pruned.is_empty() {
                debug!("iteration {it}: pruned topics {pruned:?}");
                prune(&mut state, &pruned, net.active());
                for &t in &pruned {
                    sizes[t] = 0.0;
                }
            }
            let now = net.active_count();
            if it > config.warmup_iters && now == last_active {
                stable += 1;
            } else {
                stable = 0;
            }
            last_active = now;
        }
        rows.push(TraceRow {
            iteration: it,
            likelihood: f64::NAN,
            active_count: net.active_count(),
            sizes: sizes.clone(),
        });

        if it > config.warmup_iters && stable >= config.active_patience {
            let n = rows.len();
            if n > config.likelihood_window {
                let now = plsa::log_likelihood(corpus, &state);
                let then = rows[n - 1 - config.likelihood_window].likelihood;
                if ((now - then) / now).abs() < config.tol {
                    converged = true;
                    break;
                }
            }
        }
    }
    rows.last_mut().unwrap().likelihood = plsa::log_likelihood(corpus, &state);
    info!(
        "divplsa: {} active topics after {iterations} iterations (converged: {converged})",
        net.active_count()
    );
    let (state, topic_ids, sizes) = compact(&state, &sizes, net.active());
    Ok(DivPlsaFit {
        state,
        topic_ids,
        sizes,
        trace: Trace { rows },
        network: net,
        iterations,
        converged,
    })
}

/// Identity-transition helper for tests and callers that need the walk to
/// be a no-op.
pub fn identity_network(k: usize) -> Result<TopicNetwork> {
    TopicNetwork::new(k, 0.0, 0.0, SOFT_ACTIVITY_THRESHOLD)
}

#[doc(hidden)]
pub fn walked_posteriors(corpus: &Corpus, state: &PlsaState, transition: &Matrix) -> Posteriors {
    let mut p = Posteriors::compute(corpus, state);
    for (d, doc) in corpus.documents().iter().enumerate() {
        for e in 0..doc.entries().len() {
            let walked = network::walk_step(p.get(d, e), transition);
            p.get_mut(d, e).copy_from_slice(&walked);
        }
    }
    p
}
