//! LDA fitted by collapsed Gibbs sampling, with fixed-point optimization of
//! an asymmetric document-topic Dirichlet and a symmetric topic-word prior.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::trace::{Trace, TraceRow};

/// Smallest value an optimized Dirichlet concentration may take.
pub const ALPHA_FLOOR: f64 = 1e-8;

/// Assignments and count tables of a collapsed Gibbs chain.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaState {
    k: usize,
    v: usize,
    /// Token stream in corpus order: each document's entries expanded by count.
    words: Vec<u32>,
    doc_offsets: Vec<usize>,
    z: Vec<u32>,
    n_dk: Vec<u32>,
    /// Word-major (`V x K`) so that one word's topic counts are contiguous.
    n_wk: Vec<u32>,
    n_k: Vec<u64>,
    pub alpha: Vec<f64>,
    pub beta: f64,
}

impl LdaState {
    /// Uniformly random initial assignments.
    pub fn init_random<R: Rng + ?Sized>(corpus: &Corpus, k: usize, alpha: Vec<f64>, beta: f64, rng: &mut R) -> Self {
        assert!(k >= 1 && alpha.len() == k);
        assert!(beta > 0.0 && alpha.iter().all(|&a| a > 0.0));
        let mut words = Vec::with_capacity(corpus.token_total() as usize);
        let mut doc_offsets = vec![0];
        for doc in corpus.documents() {
            words.extend(doc.tokens().map(|w| w as u32));
            doc_offsets.push(words.len());
        }
        let z = (0..words.len()).map(|_| rng.random_range(0..k) as u32).collect();
        LdaState::from_assignments(corpus, k, z, alpha, beta, words, doc_offsets)
    }

    /// State with the given per-token assignments (corpus token order).
    pub fn with_assignments(corpus: &Corpus, k: usize, z: Vec<u32>, alpha: Vec<f64>, beta: f64) -> Self {
        let mut words = Vec::with_capacity(corpus.token_total() as usize);
        let mut doc_offsets = vec![0];
        for doc in corpus.documents() {
            words.extend(doc.tokens().map(|w| w as u32));
            doc_offsets.push(words.len());
        }
        assert_eq!(z.len(), words.len());
        LdaState::from_assignments(corpus, k, z, alpha, beta, words, doc_offsets)
    }

    fn from_assignments(
        corpus: &Corpus,
        k: usize,
        z: Vec<u32>,
        alpha: Vec<f64>,
        beta: f64,
        words: Vec<u32>,
        doc_offsets: Vec<usize>,
    ) -> Self {
        let v = corpus.vocab_size();
        let d = corpus.num_docs();
        let mut s = LdaState {
            k,
            v,
            words,
            doc_offsets,
            z,
            n_dk: vec![0; d * k],
            n_wk: vec![0; v * k],
            n_k: vec![0; k],
            alpha,
            beta,
        };
        for doc in 0..d {
            for i in s.doc_offsets[doc]..s.doc_offsets[doc + 1] {
                let (w, t) = (s.words[i] as usize, s.z[i] as usize);
                s.n_dk[doc * k + t] += 1;
                s.n_wk[w * k + t] += 1;
                s.n_k[t] += 1;
            }
        }
        s
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.v
    }

    pub fn num_docs(&self) -> usize {
        self.doc_offsets.len() - 1
    }

    pub fn num_tokens(&self) -> usize {
        self.z.len()
    }

    pub fn assignments(&self) -> &[u32] {
        &self.z
    }

    pub fn doc_len(&self, d: usize) -> usize {
        self.doc_offsets[d + 1] - self.doc_offsets[d]
    }

    pub fn n_dk(&self, d: usize, k: usize) -> u32 {
        self.n_dk[d * self.k + k]
    }

    pub fn n_kw(&self, k: usize, w: usize) -> u32 {
        self.n_wk[w * self.k + k]
    }

    pub fn n_k(&self, k: usize) -> u64 {
        self.n_k[k]
    }

    pub fn topic_sizes(&self) -> Vec<f64> {
        self.n_k.iter().map(|&n| n as f64).collect()
    }

    /// Recounts every table from the assignments and compares.
    pub fn counts_consistent(&self) -> bool {
        let mut n_dk = vec![0u32; self.n_dk.len()];
        let mut n_wk = vec![0u32; self.n_wk.len()];
        let mut n_k = vec![0u64; self.k];
        for d in 0..self.num_docs() {
            for i in self.doc_offsets[d]..self.doc_offsets[d + 1] {
                let (w, t) = (self.words[i] as usize, self.z[i] as usize);
                n_dk[d * self.k + t] += 1;
                n_wk[w * self.k + t] += 1;
                n_k[t] += 1;
            }
        }
        let rows_ok = (0..self.num_docs()).all(|d| {
            n_dk[d * self.k..(d + 1) * self.k].iter().map(|&c| c as usize).sum::<usize>() == self.doc_len(d)
        });
        rows_ok && n_dk == self.n_dk && n_wk == self.n_wk && n_k == self.n_k
    }

    fn remove(&mut self, d: usize, w: usize, t: usize) {
        self.n_dk[d * self.k + t] -= 1;
        self.n_wk[w * self.k + t] -= 1;
        self.n_k[t] -= 1;
    }

    fn add(&mut self, d: usize, w: usize, t: usize) {
        self.n_dk[d * self.k + t] += 1;
        self.n_wk[w * self.k + t] += 1;
        self.n_k[t] += 1;
    }
}

/// Unnormalized full conditional of one (already removed) token of word `w`
/// in document `d`: `(n_dk + alpha_k) (n_kw + beta) / (n_k + V beta)`.
pub fn gibbs_conditional(state: &LdaState, d: usize, w: usize) -> Vec<f64> {
    (0..state.k).map(|t| conditional_term(state, d, w, t)).collect()
}

#[inline]
fn conditional_term(state: &LdaState, d: usize, w: usize, t: usize) -> f64 {
    let k = state.k;
    (state.n_dk[d * k + t] as f64 + state.alpha[t]) * (state.n_wk[w * k + t] as f64 + state.beta)
        / (state.n_k[t] as f64 + state.v as f64 * state.beta)
}

/// One pass over all tokens. Each token is removed, resampled among
/// `allowed` topics (all when `None`), optionally moved by one sampled step
/// of `walk`, and added back. Walk rows that keep the walker in place with
/// certainty consume no random numbers.
pub(crate) fn sweep_inner<R: Rng + ?Sized>(
    state: &mut LdaState,
    allowed: Option<&[usize]>,
    walk: Option<&Matrix>,
    rng: &mut R,
) {
    let k = state.k;
    let topics: Vec<usize> = match allowed {
        Some(list) => list.to_vec(),
        None => (0..k).collect(),
    };
    assert!(!topics.is_empty(), "no candidate topics");
    let vb = state.v as f64 * state.beta;
    let mut inv_denom: Vec<f64> = state.n_k.iter().map(|&n| 1.0 / (n as f64 + vb)).collect();
    let mut cum = vec![0.0; topics.len()];
    for d in 0..state.num_docs() {
        for i in state.doc_offsets[d]..state.doc_offsets[d + 1] {
            let w = state.words[i] as usize;
            let old = state.z[i] as usize;
            state.remove(d, w, old);
            inv_denom[old] = 1.0 / (state.n_k[old] as f64 + vb);

            let ndk = &state.n_dk[d * k..(d + 1) * k];
            let nwk = &state.n_wk[w * k..(w + 1) * k];
            let mut total = 0.0;
            for (c, &t) in cum.iter_mut().zip(&topics) {
                total += (ndk[t] as f64 + state.alpha[t]) * (nwk[t] as f64 + state.beta) * inv_denom[t];
                *c = total;
            }
            let u = rng.random::<f64>() * total;
            let pos = cum.iter().position(|&c| u < c).unwrap_or(topics.len() - 1);
            let mut t = topics[pos];
            if let Some(p) = walk {
                if p[(t, t)] < 1.0 {
                    t = crate::network::walk_sample(t, p, rng);
                }
            }
            state.z[i] = t as u32;
            state.add(d, w, t);
            inv_denom[t] = 1.0 / (state.n_k[t] as f64 + vb);
        }
    }
}

/// One Gibbs sweep over every token.
pub fn sweep<R: Rng + ?Sized>(state: &mut LdaState, rng: &mut R) {
    sweep_inner(state, None, None, rng);
}

/// `theta_dk = (n_dk + alpha_k) / sum_k' (n_dk' + alpha_k')`.
pub fn estimate_theta(state: &LdaState) -> Matrix {
    let k = state.k;
    let mut theta = Matrix::zeros(state.num_docs(), k);
    let alpha_sum: f64 = state.alpha.iter().sum();
    for d in 0..state.num_docs() {
        let denom = state.doc_len(d) as f64 + alpha_sum;
        for t in 0..k {
            theta[(d, t)] = (state.n_dk(d, t) as f64 + state.alpha[t]) / denom;
        }
    }
    theta
}

/// `phi_kw = (n_kw + beta) / (n_k + V beta)`.
pub fn estimate_phi(state: &LdaState) -> Matrix {
    let mut phi = Matrix::zeros(state.k, state.v);
    let vb = state.v as f64 * state.beta;
    for t in 0..state.k {
        let denom = state.n_k[t] as f64 + vb;
        for w in 0..state.v {
            phi[(t, w)] = (state.n_kw(t, w) as f64 + state.beta) / denom;
        }
    }
    phi
}

/// Sum over documents of `Psi(n + a) - Psi(a)` given a histogram of counts
/// `hist[n]` = number of documents with count `n`, via
/// `Psi(n + a) - Psi(a) = sum_{i<n} 1/(a+i)`.
fn digamma_diff_sum(hist: &[u64], a: f64) -> f64 {
    let mut total = 0.0;
    let mut running = 0.0;
    for (n, &h) in hist.iter().enumerate().skip(1) {
        running += 1.0 / (a + (n - 1) as f64);
        total += h as f64 * running;
    }
    total
}

/// Fixed-point maximization of the Dirichlet-multinomial evidence in the
/// document-topic concentrations,
/// `alpha_k <- alpha_k * sum_d [Psi(n_dk + alpha_k) - Psi(alpha_k)] /
///                      sum_d [Psi(n_d + A) - Psi(A)]`,
/// iterated until the largest relative change is below `1e-6`. Returns
/// false, leaving alpha unchanged, if the update went non-finite.
pub fn optimize_alpha(state: &mut LdaState) -> bool {
    optimize_alpha_masked(state, None)
}

/// As [`optimize_alpha`], but only topics with `active[k]` are updated.
pub fn optimize_alpha_masked(state: &mut LdaState, active: Option<&[bool]>) -> bool {
    let k = state.k;
    let d = state.num_docs();
    let mut topic_hist: Vec<Vec<u64>> = vec![Vec::new(); k];
    let mut len_hist: Vec<u64> = Vec::new();
    for doc in 0..d {
        let len = state.doc_len(doc);
        if len_hist.len() <= len {
            len_hist.resize(len + 1, 0);
        }
        len_hist[len] += 1;
        for (t, hist) in topic_hist.iter_mut().enumerate() {
            let c = state.n_dk(doc, t) as usize;
            if hist.len() <= c {
                hist.resize(c + 1, 0);
            }
            hist[c] += 1;
        }
    }
    let mut alpha = state.alpha.clone();
    for _ in 0..1000 {
        let sum: f64 = alpha.iter().sum();
        let denom = digamma_diff_sum(&len_hist, sum);
        let mut max_rel: f64 = 0.0;
        let mut next = alpha.clone();
        for t in 0..k {
            if active.is_some_and(|m| !m[t]) {
                continue;
            }
            let num = digamma_diff_sum(&topic_hist[t], alpha[t]);
            let updated = (alpha[t] * num / denom).max(ALPHA_FLOOR);
            if !updated.is_finite() {
                warn!("alpha update went non-finite; keeping previous values");
                return false;
            }
            max_rel = max_rel.max(((updated - alpha[t]) / alpha[t]).abs());
            next[t] = updated;
        }
        alpha = next;
        if max_rel < 1e-6 {
            break;
        }
    }
    state.alpha = alpha;
    true
}

/// Plug-in training log-likelihood `sum n(d,w) log sum_k theta_dk phi_kw`
/// of the current point estimates.
pub fn log_likelihood(corpus: &Corpus, state: &LdaState) -> f64 {
    let theta = estimate_theta(state);
    let phi = estimate_phi(state);
    let mut ll = 0.0;
    for (d, doc) in corpus.documents().iter().enumerate() {
        let th = theta.row(d);
        for &(w, n) in doc.entries() {
            let p: f64 = (0..state.k).map(|t| th[t] * phi[(t, w)]).sum();
            ll += n as f64 * p.ln();
        }
    }
    ll
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaConfig {
    pub topics: usize,
    pub sweeps: usize,
    /// Sweeps before alpha optimization starts.
    pub burn_in: usize,
    pub seed: u64,
    /// Initial symmetric concentration; `50 / K` when `None`.
    pub alpha0: Option<f64>,
    pub beta: f64,
    pub optimize_alpha: bool,
    /// Record the likelihood every this many sweeps (0 disables the trace).
    pub trace_every: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            topics: 20,
            sweeps: 1000,
            burn_in: 100,
            seed: 0,
            alpha0: None,
            beta: 0.01,
            optimize_alpha: true,
            trace_every: 10,
        }
    }
}

pub(crate) fn initial_alpha(k: usize, alpha0: Option<f64>) -> Result<Vec<f64>> {
    let a = alpha0.unwrap_or(50.0 / k as f64);
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha0 {a} must be positive")));
    }
    Ok(vec![a; k])
}

#[derive(Debug, Clone)]
pub struct LdaFit {
    pub state: LdaState,
    pub trace: Trace,
}

pub fn train(corpus: &Corpus, config: &LdaConfig) -> Result<LdaFit> {
    if config.topics == 0 {
        return Err(Error::InvalidArgument("topics must be at least 1".into()));
    }
    if !(config.beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta {} must be positive", config.beta)));
    }
    let k = config.topics;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let alpha = initial_alpha(k, config.alpha0)?;
    let mut state = LdaState::init_random(corpus, k, alpha, config.beta, &mut rng);
    let mut rows = Vec::new();
    for s in 1..=config.sweeps {
        sweep(&mut state, &mut rng);
        if config.optimize_alpha && s > config.burn_in {
            optimize_alpha(&mut state);
        }
        if config.trace_every > 0 && (s % config.trace_every == 0 || s == config.sweeps) {
            rows.push(TraceRow {
                iteration: s,
                likelihood: log_likelihood(corpus, &state),
                active_count: state.n_k.iter().filter(|&&n| n > 0).count(),
                sizes: state.topic_sizes(),
            });
        }
    }
    Ok(LdaFit {
        state,
        trace: Trace { rows },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{block_topics, generate_synthetic, Document, Vocabulary};
    use approx::assert_abs_diff_eq;
    use statrs::function::gamma::ln_gamma;

    fn toy() -> Corpus {
        Corpus::new(
            Vocabulary::anonymous(4),
            vec![
                Document::from_counts([(0, 2), (1, 1)]),
                Document::from_counts([(1, 1), (2, 3), (3, 1)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn conditional_hand_values() {
        // Build counts n_d. = (2,1), n_.w = (3,0), n_. = (10,5) directly.
        let c = Corpus::new(
            Vocabulary::anonymous(4),
            vec![
                Document::from_counts([(0, 2), (1, 1)]),
                Document::from_counts([(0, 1), (1, 4), (2, 3), (3, 4)]),
            ],
        )
        .unwrap();
        // doc0 tokens: 0 0 1 ; doc1 tokens: 0 1 1 1 1 2 2 2 3 3 3 3
        let z = vec![0, 0, 1, /* doc1 */ 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1];
        let s = LdaState::with_assignments(&c, 2, z, vec![0.5, 0.5], 0.1);
        assert_eq!((s.n_dk(0, 0), s.n_dk(0, 1)), (2, 1));
        assert_eq!((s.n_kw(0, 0), s.n_kw(1, 0)), (3, 0));
        assert_eq!((s.n_k(0), s.n_k(1)), (10, 5));
        let v = gibbs_conditional(&s, 0, 0);
        assert_abs_diff_eq!(v[0], 2.5 * 3.1 / 10.4, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 1.5 * 0.1 / 5.4, epsilon = 1e-15);
        assert_abs_diff_eq!(v[0], 0.7452, epsilon = 1e-4);
        assert_abs_diff_eq!(v[1], 0.0278, epsilon = 1e-4);
    }

    #[test]
    fn conditional_with_empty_counts_is_uniform() {
        let c = Corpus::new(Vocabulary::anonymous(3), vec![Document::from_counts([(1, 1)])]).unwrap();
        let mut s = LdaState::with_assignments(&c, 3, vec![2], vec![0.7; 3], 0.2);
        s.remove(0, 1, 2);
        let v = gibbs_conditional(&s, 0, 1);
        for x in &v {
            assert_abs_diff_eq!(*x, 0.7 * 0.2 / (3.0 * 0.2), epsilon = 1e-15);
        }
        let one = LdaState::with_assignments(&c, 1, vec![0], vec![1.0], 0.1);
        assert_eq!(gibbs_conditional(&one, 0, 1).len(), 1);
    }

    #[test]
    fn sweep_conserves_counts_and_is_seeded() {
        let c = toy();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = LdaState::init_random(&c, 3, vec![0.5; 3], 0.1, &mut rng);
        let mut t = s.clone();
        let mut rng2 = ChaCha8Rng::seed_from_u64(2);
        let mut rng3 = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            sweep(&mut s, &mut rng2);
            sweep(&mut t, &mut rng3);
            assert!(s.counts_consistent());
            assert_eq!(s.n_k.iter().sum::<u64>(), c.token_total());
        }
        assert_eq!(s, t);
    }

    #[test]
    fn estimates_cases() {
        let c = toy();
        let z = vec![0, 0, 0, 1, 1, 1, 1, 1];
        let s = LdaState::with_assignments(&c, 2, z, vec![0.5, 0.5], 0.1);
        let theta = estimate_theta(&s);
        // doc0: n = (3, 0), alpha 0.5 each -> (3.5, 0.5) / 4
        assert_abs_diff_eq!(theta.row(0), &[3.5 / 4.0, 0.5 / 4.0][..], epsilon = 1e-15);
        assert!(theta.max_row_sum_error(|_| false) < 1e-12);
        let phi = estimate_phi(&s);
        assert!(phi.max_row_sum_error(|_| false) < 1e-12);
        // topic 0 holds words 0,0,1: (2.1, 1.1, 0.1, 0.1) / 3.4
        assert_abs_diff_eq!(phi.row(0), &[2.1 / 3.4, 1.1 / 3.4, 0.1 / 3.4, 0.1 / 3.4][..], epsilon = 1e-15);

        // n_d = (3, 1) with alpha (0.5, 0.5) -> (0.7, 0.3)
        let four = Corpus::new(Vocabulary::anonymous(2), vec![Document::from_counts([(0, 4)])]).unwrap();
        let s = LdaState::with_assignments(&four, 2, vec![0, 0, 0, 1], vec![0.5, 0.5], 0.1);
        assert_abs_diff_eq!(estimate_theta(&s).row(0), &[0.7, 0.3][..], epsilon = 1e-15);

        // all tokens in topic 0 with a vanishing prior
        let s = LdaState::with_assignments(&c, 2, vec![0; 8], vec![1e-12, 1e-12], 0.1);
        assert_abs_diff_eq!(estimate_theta(&s).row(0), &[1.0, 0.0][..], epsilon = 1e-9);
        // an empty topic has a uniform phi row
        let phi = estimate_phi(&s);
        assert_abs_diff_eq!(phi.row(1), &[0.25; 4][..], epsilon = 1e-15);
    }

    /// Dirichlet-multinomial log evidence of the document-topic counts.
    fn dm_loglik(state: &LdaState, alpha: &[f64]) -> f64 {
        let sum: f64 = alpha.iter().sum();
        (0..state.num_docs())
            .map(|d| {
                ln_gamma(sum) - ln_gamma(state.doc_len(d) as f64 + sum)
                    + (0..state.num_topics())
                        .map(|t| ln_gamma(state.n_dk(d, t) as f64 + alpha[t]) - ln_gamma(alpha[t]))
                        .sum::<f64>()
            })
            .sum()
    }

    fn state_from_doc_counts(counts: &[Vec<u32>], alpha: Vec<f64>) -> LdaState {
        let k = counts[0].len();
        let docs: Vec<Document> = counts
            .iter()
            .map(|c| Document::from_counts([(0, c.iter().sum())]))
            .collect();
        let corpus = Corpus::new(Vocabulary::anonymous(1), docs).unwrap();
        let z: Vec<u32> = counts
            .iter()
            .flat_map(|c| (0..k).flat_map(move |t| std::iter::repeat_n(t as u32, c[t] as usize)))
            .collect();
        LdaState::with_assignments(&corpus, k, z, alpha, 0.1)
    }

    fn overdispersed() -> Vec<Vec<u32>> {
        vec![
            vec![9, 1],
            vec![2, 8],
            vec![5, 5],
            vec![10, 0],
            vec![0, 7],
            vec![3, 4],
            vec![6, 2],
        ]
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let mut s = state_from_doc_counts(&overdispersed(), vec![1.0, 1.0]);
        assert!(optimize_alpha(&mut s));
        let first = s.alpha.clone();
        assert!(optimize_alpha(&mut s));
        for (a, b) in first.iter().zip(&s.alpha) {
            assert!(((a - b) / a).abs() < 1e-5, "{a} {b}");
        }
        // Mirrored data keeps a symmetric prior symmetric.
        let mirrored: Vec<Vec<u32>> = overdispersed()
            .into_iter()
            .flat_map(|c| [c.clone(), vec![c[1], c[0]]])
            .collect();
        let mut m = state_from_doc_counts(&mirrored, vec![0.3, 0.3]);
        optimize_alpha(&mut m);
        assert_abs_diff_eq!(m.alpha[0], m.alpha[1], epsilon = 1e-9);
    }

    #[test]
    fn unused_topic_alpha_shrinks() {
        let counts: Vec<Vec<u32>> = (0..20).map(|d| vec![5 + d % 4, 7 - d % 3, 0]).collect();
        let mut s = state_from_doc_counts(&counts, vec![1.0; 3]);
        let mut prev = s.alpha[2];
        for i in 0..5 {
            optimize_alpha(&mut s);
            if i == 0 {
                assert!(s.alpha[2] < prev);
            }
            assert!(s.alpha[2] <= prev);
            assert!(s.alpha[2] >= ALPHA_FLOOR);
            prev = s.alpha[2];
        }
        assert!(s.alpha[2] < 1e-6);
    }

    #[test]
    fn alpha_optimum_beats_grid() {
        let mut s = state_from_doc_counts(&overdispersed(), vec![1.0, 1.0]);
        let start = dm_loglik(&s, &s.alpha.clone());
        optimize_alpha(&mut s);
        let opt = dm_loglik(&s, &s.alpha.clone());
        assert!(opt >= start);
        let mut best = f64::NEG_INFINITY;
        for i in 1..=200 {
            for j in 1..=200 {
                let a = [i as f64 * 0.02, j as f64 * 0.02];
                best = best.max(dm_loglik(&s, &a));
            }
        }
        assert!(opt >= best - 1e-9, "{opt} < {best}");

        // A single topic: every count equals the document length.
        let mut one = state_from_doc_counts(&[vec![4], vec![9]], vec![2.5]);
        let before = dm_loglik(&one, &[2.5]);
        optimize_alpha(&mut one);
        assert_abs_diff_eq!(one.alpha[0], 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(dm_loglik(&one, &one.alpha.clone()), before, epsilon = 1e-12);
    }

    fn tv(a: &[f64], b: &[f64]) -> f64 {
        0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    }

    #[test]
    fn recovers_planted_disjoint_topics() {
        let topics = block_topics(2, 40, 0.8);
        let syn = generate_synthetic(&topics, 0.2, 300, 50, 12).unwrap();
        let fit = train(
            &syn.corpus,
            &LdaConfig {
                topics: 2,
                sweeps: 200,
                burn_in: 50,
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(fit.state.counts_consistent());
        let phi = estimate_phi(&fit.state);
        let direct = tv(phi.row(0), &topics[0]).max(tv(phi.row(1), &topics[1]));
        let swapped = tv(phi.row(0), &topics[1]).max(tv(phi.row(1), &topics[0]));
        assert!(direct.min(swapped) < 0.05, "{direct} {swapped}");
    }

    #[test]
    fn train_is_deterministic() {
        let c = toy();
        let cfg = LdaConfig {
            topics: 3,
            sweeps: 30,
            burn_in: 5,
            seed: 9,
            ..Default::default()
        };
        let a = train(&c, &cfg).unwrap();
        let b = train(&c, &cfg).unwrap();
        assert_eq!(a.state, b.state);
        assert!(train(&c, &LdaConfig { beta: 0.0, ..cfg }).is_err());
    }
}
