//! PLSA fitted by EM.
//!
//! The E and M steps run as one fused pass over the documents: posteriors
//! are formed per `(d, w)` entry and immediately folded into document-topic
//! and word-topic accumulators, so nothing of size `nnz * K` is stored. The
//! optional topic walk is linear in the posteriors, so it is applied once to
//! the accumulated mass instead of per token.

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::corpus::Corpus;
use crate::exec::Execution;
use crate::matrix::{normalize, Matrix};
use crate::trace::{Trace, TraceRow};

#[derive(Debug, Clone, PartialEq)]
pub struct PlsaState {
    /// `D x K`, row `d` is p(topic | doc d).
    pub theta: Matrix,
    /// `K x V`, row `k` is p(word | topic k).
    pub phi: Matrix,
}

impl PlsaState {
    pub fn num_topics(&self) -> usize {
        self.phi.rows()
    }

    pub fn num_docs(&self) -> usize {
        self.theta.rows()
    }
}

/// Draws every theta and phi row from a symmetric Dirichlet(1).
pub fn init_random(corpus: &Corpus, k: usize, seed: u64) -> PlsaState {
    assert!(k >= 1, "need at least one topic");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |m: &mut Matrix| {
        for i in 0..m.rows() {
            let row = m.row_mut(i);
            row.iter_mut().for_each(|x| *x = Exp1.sample(&mut rng));
            normalize(row);
        }
    };
    let mut phi = Matrix::zeros(k, corpus.vocab_size());
    let mut theta = Matrix::zeros(corpus.num_docs(), k);
    draw(&mut phi);
    draw(&mut theta);
    PlsaState { theta, phi }
}

/// Writes the topic posterior for word `w` in a document with mixture
/// `theta_row` into `out`. Falls back to the mixture itself when no topic
/// gives the word any mass. Returns the unnormalized total p(w | d).
pub(crate) fn posterior_into(theta_row: &[f64], phi_col: impl Fn(usize) -> f64, out: &mut [f64]) -> f64 {
    let mut s = 0.0;
    for (k, o) in out.iter_mut().enumerate() {
        *o = theta_row[k] * phi_col(k);
        s += *o;
    }
    if s > 0.0 {
        out.iter_mut().for_each(|x| *x /= s);
    } else {
        out.copy_from_slice(theta_row);
    }
    s
}

/// p(z = k | d, w) for every topic `k`.
pub fn e_step_posterior(state: &PlsaState, d: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; state.num_topics()];
    posterior_into(state.theta.row(d), |k| state.phi[(k, w)], &mut out);
    out
}

/// Topic posteriors for every `(d, w)` entry of a corpus, aligned with each
/// document's sorted entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Posteriors {
    k: usize,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl Posteriors {
    pub fn zeros(corpus: &Corpus, k: usize) -> Self {
        let mut offsets = Vec::with_capacity(corpus.num_docs() + 1);
        let mut n = 0;
        offsets.push(0);
        for doc in corpus.documents() {
            n += doc.entries().len();
            offsets.push(n);
        }
        Posteriors {
            k,
            offsets,
            values: vec![0.0; n * k],
        }
    }

    /// Posteriors of `state` for all entries.
    pub fn compute(corpus: &Corpus, state: &PlsaState) -> Self {
        let mut p = Posteriors::zeros(corpus, state.num_topics());
        for (d, doc) in corpus.documents().iter().enumerate() {
            for (e, &(w, _)) in doc.entries().iter().enumerate() {
                posterior_into(state.theta.row(d), |k| state.phi[(k, w)], p.get_mut(d, e));
            }
        }
        p
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn get(&self, d: usize, entry: usize) -> &[f64] {
        let i = (self.offsets[d] + entry) * self.k;
        &self.values[i..i + self.k]
    }

    pub fn get_mut(&mut self, d: usize, entry: usize) -> &mut [f64] {
        let i = (self.offsets[d] + entry) * self.k;
        &mut self.values[i..i + self.k]
    }
}

/// Result of an M-step: the new parameters, topic sizes (expected token
/// counts) and the topics that received no mass.
#[derive(Debug, Clone, PartialEq)]
pub struct MStep {
    pub state: PlsaState,
    pub sizes: Vec<f64>,
    pub empty_topics: Vec<usize>,
}

/// Re-estimates theta and phi from explicit per-entry posteriors.
pub fn m_step(corpus: &Corpus, posteriors: &Posteriors) -> MStep {
    let k = posteriors.num_topics();
    let mut theta = Matrix::zeros(corpus.num_docs(), k);
    let mut phi = Matrix::zeros(k, corpus.vocab_size());
    for (d, doc) in corpus.documents().iter().enumerate() {
        for (e, &(w, n)) in doc.entries().iter().enumerate() {
            let n = n as f64;
            for (t, &p) in posteriors.get(d, e).iter().enumerate() {
                theta[(d, t)] += n * p;
                phi[(t, w)] += n * p;
            }
        }
    }
    finish_m_step(theta, phi)
}

fn finish_m_step(mut theta: Matrix, mut phi: Matrix) -> MStep {
    let k = phi.rows();
    let mut empty_topics = Vec::new();
    let mut sizes = vec![0.0; k];
    for t in 0..k {
        sizes[t] = normalize(phi.row_mut(t));
        if sizes[t] <= 0.0 {
            empty_topics.push(t);
        }
    }
    for d in 0..theta.rows() {
        normalize(theta.row_mut(d));
    }
    if !empty_topics.is_empty() {
        debug!("topics with no mass: {empty_topics:?}");
    }
    MStep {
        state: PlsaState { theta, phi },
        sizes,
        empty_topics,
    }
}

/// `sum_d sum_w n(d,w) log sum_k theta_dk phi_kw`; `-inf` when some observed
/// word has zero probability.
pub fn log_likelihood(corpus: &Corpus, state: &PlsaState) -> f64 {
    let k = state.num_topics();
    let mut ll = 0.0;
    for (d, doc) in corpus.documents().iter().enumerate() {
        let th = state.theta.row(d);
        for &(w, n) in doc.entries() {
            let p: f64 = (0..k).map(|t| th[t] * state.phi[(t, w)]).sum();
            if p <= 0.0 {
                return f64::NEG_INFINITY;
            }
            ll += n as f64 * p.ln();
        }
    }
    ll
}

pub(crate) struct PassOutput {
    pub step: MStep,
    /// Log-likelihood of the parameters the pass started from.
    pub log_likelihood: f64,
}

/// One fused E+M pass. With `walk`, posteriors are pushed through one
/// expected step of the transition matrix before re-estimation.
pub(crate) fn em_pass(corpus: &Corpus, state: &PlsaState, walk: Option<&Matrix>, exec: Execution) -> PassOutput {
    let k = state.num_topics();
    let v = corpus.vocab_size();
    let n_docs = corpus.num_docs();
    // V x K so that a word's topic column is contiguous.
    let mut phi_t = Matrix::zeros(v, k);
    for t in 0..k {
        for (w, &p) in state.phi.row(t).iter().enumerate() {
            phi_t[(w, t)] = p;
        }
    }
    let docs = corpus.documents();

    struct Chunk {
        theta: Vec<f64>,
        word_topic: Matrix,
        ll: f64,
    }
    let chunks = exec.map_ranges(n_docs, |range| {
        let mut theta = vec![0.0; range.len() * k];
        let mut word_topic = Matrix::zeros(v, k);
        let mut post = vec![0.0; k];
        let mut ll = 0.0;
        for (local, d) in range.enumerate() {
            let th = state.theta.row(d);
            let acc = &mut theta[local * k..(local + 1) * k];
            for &(w, n) in docs[d].entries() {
                let col = phi_t.row(w);
                let s = posterior_into(th, |t| col[t], &mut post);
                let n = n as f64;
                ll += if s > 0.0 { n * s.ln() } else { f64::NEG_INFINITY };
                let wt = word_topic.row_mut(w);
                for t in 0..k {
                    let m = n * post[t];
                    acc[t] += m;
                    wt[t] += m;
                }
            }
        }
        Chunk { theta, word_topic, ll }
    });

    let mut theta = Matrix::zeros(n_docs, k);
    let mut word_topic = Matrix::zeros(v, k);
    let mut ll = 0.0;
    let mut row0 = 0;
    for c in chunks {
        let rows = c.theta.len() / k.max(1);
        theta.as_mut_slice()[row0 * k..(row0 + rows) * k].copy_from_slice(&c.theta);
        row0 += rows;
        for (a, b) in word_topic.as_mut_slice().iter_mut().zip(c.word_topic.as_slice()) {
            *a += b;
        }
        ll += c.ll;
    }

    let mut tmp = vec![0.0; k];
    if let Some(p) = walk {
        for d in 0..n_docs {
            crate::network::walk_step_into(theta.row(d), p, &mut tmp);
            theta.row_mut(d).copy_from_slice(&tmp);
        }
        for w in 0..v {
            crate::network::walk_step_into(word_topic.row(w), p, &mut tmp);
            word_topic.row_mut(w).copy_from_slice(&tmp);
        }
    }
    let mut phi = Matrix::zeros(k, v);
    for w in 0..v {
        for t in 0..k {
            phi[(t, w)] = word_topic[(w, t)];
        }
    }
    PassOutput {
        step: finish_m_step(theta, phi),
        log_likelihood: ll,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlsaConfig {
    pub topics: usize,
    pub max_iters: usize,
    /// Stop once the per-iteration relative likelihood gain drops below this.
    pub tol: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for PlsaConfig {
    fn default() -> Self {
        PlsaConfig {
            topics: 20,
            max_iters: 500,
            tol: 1e-8,
            seed: 0,
            execution: Execution::Sequential,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlsaFit {
    pub state: PlsaState,
    /// Expected token counts per topic from the final M-step.
    pub sizes: Vec<f64>,
    pub trace: Trace,
    pub iterations: usize,
    pub converged: bool,
}

impl PlsaFit {
    pub fn log_likelihood(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.likelihood)
    }
}

pub(crate) fn initial_sizes(corpus: &Corpus, state: &PlsaState) -> Vec<f64> {
    let mut sizes = vec![0.0; state.num_topics()];
    for (d, doc) in corpus.documents().iter().enumerate() {
        let len = doc.total_tokens() as f64;
        for (s, &t) in sizes.iter_mut().zip(state.theta.row(d)) {
            *s += len * t;
        }
    }
    sizes
}

pub fn train(corpus: &Corpus, config: &PlsaConfig) -> PlsaFit {
    assert!(config.max_iters >= 1, "max_iters must be at least 1");
    let k = config.topics;
    let mut state = init_random(corpus, k, config.seed);
    let mut rows = vec![TraceRow {
        iteration: 0,
        likelihood: f64::NAN,
        active_count: k,
        sizes: initial_sizes(corpus, &state),
    }];
    let mut sizes = rows[0].sizes.clone();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=config.max_iters {
        let out = em_pass(corpus, &state, None, config.execution);
        rows.last_mut().unwrap().likelihood = out.log_likelihood;
        state = out.step.state;
        sizes = out.step.sizes;
        iterations = it;
        rows.push(TraceRow {
            iteration: it,
            likelihood: f64::NAN,
            active_count: k,
            sizes: sizes.clone(),
        });
        let n = rows.len();
        if n >= 3 {
            let (prev, cur) = (rows[n - 3].likelihood, rows[n - 2].likelihood);
            if ((cur - prev) / prev.abs()) < config.tol {
                converged = true;
                break;
            }
        }
    }
    rows.last_mut().unwrap().likelihood = log_likelihood(corpus, &state);
    PlsaFit {
        state,
        sizes,
        trace: Trace { rows },
        iterations,
        converged,
    }
}
