//! Collapsed Gibbs LDA with a sampled step on the topic network after every
//! token draw.
//!
//! Each token is removed from the counts, a topic is drawn from the usual
//! collapsed conditional, and then the walker takes one step from that topic
//! along the reinforced transition matrix before the counts are restored.
//! Topics whose count reaches zero at a network refresh are pruned: they are
//! removed from the candidate set and never receive tokens again.

use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::lda::{self, initial_alpha, optimize_alpha_masked, sweep_inner, LdaState};
use crate::network::{OrganicNorm, TopicNetwork, HARD_ACTIVITY_THRESHOLD};
use crate::trace::{Trace, TraceRow};

#[derive(Debug, Clone, PartialEq)]
pub struct DivLdaConfig {
    pub start_topics: usize,
    pub walk_alpha: f64,
    pub gamma: f64,
    /// Plain Gibbs sweeps before the walk starts.
    pub warmup_sweeps: usize,
    pub refresh_every: usize,
    /// Consecutive refreshes with an unchanged active count needed to stop.
    pub active_patience: usize,
    pub total_sweeps: usize,
    pub seed: u64,
    pub beta: f64,
    /// Initial symmetric concentration; `50 / K` when `None`.
    pub alpha0: Option<f64>,
    pub optimize_alpha: bool,
    pub organic_norm: OrganicNorm,
    /// Likelihood is recorded every this many sweeps.
    pub trace_every: usize,
}

impl Default for DivLdaConfig {
    fn default() -> Self {
        DivLdaConfig {
            start_topics: 20,
            walk_alpha: 0.1,
            gamma: 1.0,
            warmup_sweeps: 500,
            refresh_every: 50,
            active_patience: 10,
            total_sweeps: 2000,
            seed: 0,
            beta: 0.01,
            alpha0: None,
            optimize_alpha: true,
            organic_norm: OrganicNorm::WithSelf,
            trace_every: 10,
        }
    }
}

impl DivLdaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.start_topics == 0 {
            return bad("start_topics must be at least 1".into());
        }
        if self.warmup_sweeps < 1 {
            return bad("warmup_sweeps must be at least 1".into());
        }
        if self.refresh_every < 1 {
            return bad("refresh_every must be at least 1".into());
        }
        if self.trace_every < 1 {
            return bad("trace_every must be at least 1".into());
        }
        if !(self.gamma >= 0.0) {
            return bad(format!("gamma {} must be >= 0", self.gamma));
        }
        if !(0.0..1.0).contains(&self.walk_alpha) {
            return bad(format!("walk_alpha {} not in [0,1)", self.walk_alpha));
        }
        if !(self.beta > 0.0) {
            return bad(format!("beta {} must be positive", self.beta));
        }
        if self.total_sweeps < self.warmup_sweeps {
            return bad("total_sweeps must cover the warmup".into());
        }
        Ok(())
    }
}

/// One Gibbs sweep in which every drawn topic takes one sampled step on
/// `network` before its counts are incremented. Only the network's active
/// topics are candidates.
pub fn sweep_with_walk<R: rand::Rng + ?Sized>(state: &mut LdaState, network: &TopicNetwork, rng: &mut R) {
    let allowed: Vec<usize> = (0..network.num_topics()).filter(|&t| network.is_active(t)).collect();
    sweep_inner(state, Some(&allowed), Some(network.transition()), rng);
}

#[derive(Debug, Clone)]
pub struct DivLdaFit {
    /// Chain state restricted to the surviving topics.
    pub state: LdaState,
    /// Original indices of the surviving topics.
    pub topic_ids: Vec<usize>,
    pub trace: Trace,
    pub network: TopicNetwork,
    pub sweeps: usize,
    pub converged: bool,
}

impl DivLdaFit {
    pub fn active_count(&self) -> usize {
        self.topic_ids.len()
    }
}

/// Drops topics without tokens and renumbers assignments.
pub(crate) fn compact(corpus: &Corpus, state: &LdaState, active: &[bool]) -> (LdaState, Vec<usize>) {
    let ids: Vec<usize> = (0..active.len()).filter(|&t| active[t]).collect();
    let mut remap = vec![u32::MAX; active.len()];
    for (new, &old) in ids.iter().enumerate() {
        remap[old] = new as u32;
    }
    let z: Vec<u32> = state
        .assignments()
        .iter()
        .map(|&t| {
            let r = remap[t as usize];
            assert!(r != u32::MAX, "token assigned to pruned topic {t}");
            r
        })
        .collect();
    let alpha = ids.iter().map(|&t| state.alpha[t]).collect();
    (LdaState::with_assignments(corpus, ids.len(), z, alpha, state.beta), ids)
}

pub fn train(corpus: &Corpus, config: &DivLdaConfig) -> Result<DivLdaFit> {
    config.validate()?;
    let k = config.start_topics;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let alpha = initial_alpha(k, config.alpha0)?;
    let mut state = LdaState::init_random(corpus, k, alpha, config.beta, &mut rng);
    // Without reinforcement an empty topic still draws organic transition
    // mass, so it is not dead and must stay a candidate.
    let threshold = if config.gamma > 0.0 { HARD_ACTIVITY_THRESHOLD } else { 0.0 };
    let mut net = TopicNetwork::new(k, config.walk_alpha, config.gamma, threshold)?
        .with_organic_norm(config.organic_norm);
    let mut rows = Vec::new();
    let mut last_active = k;
    let mut stable = 0usize;
    let mut converged = false;
    let mut sweeps = 0;

    for s in 1..=config.total_sweeps {
        if s <= config.warmup_sweeps {
            let allowed: Vec<usize> = (0..k).filter(|&t| net.is_active(t)).collect();
            sweep_inner(&mut state, Some(&allowed), None, &mut rng);
        } else {
            sweep_with_walk(&mut state, &net, &mut rng);
        }
        sweeps = s;
        if config.optimize_alpha {
            optimize_alpha_masked(&mut state, Some(net.active()));
        }

        let mut refreshed = false;
        if s >= config.warmup_sweeps && (s - config.warmup_sweeps).is_multiple_of(config.refresh_every) {
            let before = net.active_count();
            net.refresh(&lda::estimate_phi(&state), &state.topic_sizes())?;
            if net.active_count() < before {
                debug!("sweep {s}: {} active topics", net.active_count());
            }
            let now = net.active_count();
            if s > config.warmup_sweeps && now == last_active {
                stable += 1;
            } else {
                stable = 0;
            }
            last_active = now;
            refreshed = true;
        }
        let done = s > config.warmup_sweeps && refreshed && stable >= config.active_patience;
        if s % config.trace_every == 0 || done || s == config.total_sweeps {
            rows.push(TraceRow {
                iteration: s,
                likelihood: lda::log_likelihood(corpus, &state),
                active_count: net.active_count(),
                sizes: state.topic_sizes(),
            });
        }
        if done {
            converged = true;
            break;
        }
    }
    info!(
        "divlda: {} active topics after {sweeps} sweeps (converged: {converged})",
        net.active_count()
    );
    let (state, topic_ids) = compact(corpus, &state, net.active());
    Ok(DivLdaFit {
        state,
        topic_ids,
        trace: Trace { rows },
        network: net,
        sweeps,
        converged,
    })
}
