//! Summary quality metrics: PMI coherence of each topic's top words against
//! a reference corpus, and held-out perplexity of a topic set with document
//! mixtures estimated by fold-in.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::warn;

use crate::corpus::{cooccurrence, Corpus, Document, HoldoutSplit, WordId};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matrix::{normalize, Matrix};

/// Probability used for predicted tokens no selected topic can generate.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// How document counts are smoothed before taking PMI logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PmiSmoothing {
    /// Zero joint or marginal document counts are replaced by `eps`;
    /// nonzero counts are used as they are.
    ZeroCounts(f64),
    /// `eps` is added to every joint document count.
    AddEpsilon(f64),
}

impl Default for PmiSmoothing {
    fn default() -> Self {
        PmiSmoothing::ZeroCounts(1.0)
    }
}

impl fmt::Display for PmiSmoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PmiSmoothing::ZeroCounts(e) => write!(f, "zero:{e}"),
            PmiSmoothing::AddEpsilon(e) => write!(f, "add:{e}"),
        }
    }
}

impl FromStr for PmiSmoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad smoothing '{s}' (expected zero:EPS or add:EPS)"));
        let (mode, eps) = s.split_once(':').ok_or_else(bad)?;
        let eps: f64 = eps.parse().map_err(|_| bad())?;
        if !(eps > 0.0) {
            return Err(bad());
        }
        match mode {
            "zero" => Ok(PmiSmoothing::ZeroCounts(eps)),
            "add" => Ok(PmiSmoothing::AddEpsilon(eps)),
            _ => Err(bad()),
        }
    }
}

/// The `n` most probable words of `row`, ties to the lower word id.
pub fn top_words(row: &[f64], n: usize) -> Vec<WordId> {
    let mut ids: Vec<WordId> = (0..row.len()).collect();
    ids.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    ids.truncate(n);
    ids
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmiReport {
    pub per_topic: Vec<f64>,
    pub mean: f64,
    /// Word pairs whose counts needed smoothing.
    pub smoothed_pairs: usize,
}

/// Mean pairwise PMI of each topic's `top_n` words, with document-frequency
/// probabilities from `reference`.
pub fn pmi_coherence(phi: &Matrix, reference: &Corpus, top_n: usize, smoothing: PmiSmoothing) -> Result<PmiReport> {
    if top_n < 2 {
        return Err(Error::InvalidArgument(format!("top_n {top_n} must be at least 2")));
    }
    if reference.num_docs() == 0 {
        return Err(Error::InvalidArgument("reference corpus is empty".into()));
    }
    if phi.rows() == 0 {
        return Err(Error::EmptySelection);
    }
    if phi.cols() != reference.vocab_size() {
        return Err(Error::Vocabulary(format!(
            "topics cover {} words but the reference vocabulary has {}",
            phi.cols(),
            reference.vocab_size()
        )));
    }
    let tops: Vec<Vec<WordId>> = phi.iter_rows().map(|r| top_words(r, top_n)).collect();
    let mut words: Vec<WordId> = tops.iter().flatten().copied().collect();
    words.sort_unstable();
    words.dedup();
    let stats = cooccurrence(reference, &words)?;
    let d = stats.doc_count as f64;
    let mut smoothed_pairs = 0;
    let per_topic: Vec<f64> = tops
        .iter()
        .map(|top| {
            let mut sum = 0.0;
            let mut pairs = 0usize;
            for (i, &a) in top.iter().enumerate() {
                for &b in &top[i + 1..] {
                    let (fa, fb, fab) = (
                        stats.doc_freq(a) as f64,
                        stats.doc_freq(b) as f64,
                        stats.pair_doc_freq(a, b) as f64,
                    );
                    let (fa, fb, fab) = match smoothing {
                        PmiSmoothing::ZeroCounts(eps) => {
                            if fa == 0.0 || fb == 0.0 || fab == 0.0 {
                                smoothed_pairs += 1;
                            }
                            let z = |x: f64| if x == 0.0 { eps } else { x };
                            (z(fa), z(fb), z(fab))
                        }
                        PmiSmoothing::AddEpsilon(eps) => {
                            smoothed_pairs += 1;
                            let z = |x: f64| if x == 0.0 { eps } else { x };
                            (z(fa), z(fb), fab + eps)
                        }
                    };
                    sum += (fab * d / (fa * fb)).ln();
                    pairs += 1;
                }
            }
            sum / pairs as f64
        })
        .collect();
    let mean = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(PmiReport {
        per_topic,
        mean,
        smoothed_pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldInConfig {
    pub iters: usize,
    /// Stop early once no mixture weight moves by more than this.
    pub tol: f64,
}

impl Default for FoldInConfig {
    fn default() -> Self {
        FoldInConfig { iters: 50, tol: 0.0 }
    }
}

/// Topic mixture of `doc` by EM with `phi` held fixed, starting uniform.
/// Tokens no topic can generate are ignored.
pub fn fold_in(phi: &Matrix, doc: &Document, config: FoldInConfig) -> Vec<f64> {
    let k = phi.rows();
    let mut theta = vec![1.0 / k as f64; k];
    let mut acc = vec![0.0; k];
    let mut post = vec![0.0; k];
    for _ in 0..config.iters {
        acc.iter_mut().for_each(|x| *x = 0.0);
        for &(w, c) in doc.entries() {
            for t in 0..k {
                post[t] = theta[t] * phi[(t, w)];
            }
            let s = normalize(&mut post);
            if s <= 0.0 {
                continue;
            }
            for t in 0..k {
                acc[t] += c as f64 * post[t];
            }
        }
        if normalize(&mut acc) <= 0.0 {
            break;
        }
        let change = theta.iter().zip(&acc).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        theta.copy_from_slice(&acc);
        if change <= config.tol {
            break;
        }
    }
    theta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerplexityReport {
    pub perplexity: f64,
    pub predicted_tokens: u64,
    /// Predicted tokens that fell back to the probability floor.
    pub floored_tokens: u64,
}

/// `exp(-sum log p(w) / N)` over the predict parts, with each document's
/// mixture folded in on its observed part.
pub fn perplexity(
    phi: &Matrix,
    holdout: &[HoldoutSplit],
    config: FoldInConfig,
    exec: Execution,
) -> Result<PerplexityReport> {
    if phi.rows() == 0 {
        return Err(Error::EmptySelection);
    }
    if holdout.is_empty() {
        return Err(Error::InvalidArgument("no held-out documents".into()));
    }
    for (i, s) in holdout.iter().enumerate() {
        if s.predict.is_empty() {
            return Err(Error::InvalidArgument(format!("held-out document {i} has an empty predict part")));
        }
        if let Some(&(w, _)) = s.predict.entries().iter().chain(s.observed.entries()).find(|e| e.0 >= phi.cols()) {
            return Err(Error::WordOutOfRange { id: w, size: phi.cols() });
        }
    }
    let parts = exec.map_ranges(holdout.len(), |range| {
        let (mut ll, mut n, mut floored) = (0.0, 0u64, 0u64);
        for split in &holdout[range] {
            let theta = fold_in(phi, &split.observed, config);
            for &(w, c) in split.predict.entries() {
                let mut p: f64 = (0..phi.rows()).map(|t| theta[t] * phi[(t, w)]).sum();
                if !(p >= PROBABILITY_FLOOR) {
                    p = PROBABILITY_FLOOR;
                    floored += c as u64;
                }
                ll += c as f64 * p.ln();
                n += c as u64;
            }
        }
        (ll, n, floored)
    });
    let (ll, n, floored) = parts
        .into_iter()
        .fold((0.0, 0, 0), |(a, b, c), (x, y, z)| (a + x, b + y, c + z));
    if floored > 0 {
        warn!("{floored} predicted tokens had zero probability under the selected topics");
    }
    Ok(PerplexityReport {
        perplexity: (-ll / n as f64).exp(),
        predicted_tokens: n,
        floored_tokens: floored,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub k_used: usize,
    pub per_topic_pmi: Vec<f64>,
    pub mean_pmi: Option<f64>,
    pub perplexity: Option<f64>,
    pub floored_tokens: u64,
    pub top_n: usize,
    pub smoothing: PmiSmoothing,
    pub fold_in_iters: usize,
}

impl EvalReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        writeln!(out, "metric,value")?;
        writeln!(out, "k_used,{}", self.k_used)?;
        writeln!(out, "mean_pmi,{}", opt(self.mean_pmi))?;
        writeln!(out, "perplexity,{}", opt(self.perplexity))?;
        writeln!(out, "floored_tokens,{}", self.floored_tokens)?;
        writeln!(out, "top_n,{}", self.top_n)?;
        writeln!(out, "smoothing,{}", self.smoothing)?;
        writeln!(out, "fold_in_iters,{}", self.fold_in_iters)?;
        for (i, p) in self.per_topic_pmi.iter().enumerate() {
            writeln!(out, "pmi_topic_{i},{p}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn corpus(docs: Vec<Vec<WordId>>, v: usize) -> Corpus {
        Corpus::new(
            Vocabulary::anonymous(v),
            docs.into_iter().map(Document::from_tokens).collect(),
        )
        .unwrap()
    }

    fn pair_topic(v: usize, a: WordId, b: WordId) -> Matrix {
        let mut row = vec![0.0; v];
        row[a] = 0.5;
        row[b] = 0.5;
        Matrix::from_rows(vec![row])
    }

    #[test]
    fn pmi_examples() {
        // a and b each appear in half the docs, independently.
        let c = corpus(vec![vec![0, 1], vec![0, 2], vec![1, 2], vec![2]], 3);
        let r = pmi_coherence(&pair_topic(3, 0, 1), &c, 2, PmiSmoothing::default()).unwrap();
        assert_abs_diff_eq!(r.mean, 0.0, epsilon = 1e-12);

        // Always together, in one of five documents.
        let c = corpus(vec![vec![0, 1], vec![2], vec![2], vec![2], vec![2]], 3);
        let r = pmi_coherence(&pair_topic(3, 0, 1), &c, 2, PmiSmoothing::default()).unwrap();
        assert_abs_diff_eq!(r.mean, 5f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.mean, 1.609, epsilon = 1e-3);
        assert_eq!(r.smoothed_pairs, 0);

        // Never together: finite thanks to smoothing.
        let c = corpus(vec![vec![0], vec![1], vec![2], vec![2]], 3);
        let r = pmi_coherence(&pair_topic(3, 0, 1), &c, 2, PmiSmoothing::default()).unwrap();
        assert!(r.mean.is_finite());
        assert_eq!(r.smoothed_pairs, 1);

        assert!(pmi_coherence(&pair_topic(3, 0, 1), &c, 1, PmiSmoothing::default()).is_err());
    }

    #[test]
    fn smoothing_parses() {
        assert_eq!("zero:1".parse::<PmiSmoothing>().unwrap(), PmiSmoothing::ZeroCounts(1.0));
        assert_eq!("add:0.5".parse::<PmiSmoothing>().unwrap(), PmiSmoothing::AddEpsilon(0.5));
        assert!("add:0".parse::<PmiSmoothing>().is_err());
        assert!("laplace".parse::<PmiSmoothing>().is_err());
    }

    fn split(observed: Vec<WordId>, predict: Vec<WordId>) -> HoldoutSplit {
        HoldoutSplit {
            source_doc: 0,
            observed: Document::from_tokens(observed),
            predict: Document::from_tokens(predict),
        }
    }

    #[test]
    fn uniform_topic_perplexity_is_vocab_size() {
        let phi = Matrix::from_rows(vec![vec![0.25; 4]]);
        let h = vec![split(vec![0, 1], vec![2, 3, 3]), split(vec![1], vec![0])];
        let r = perplexity(&phi, &h, FoldInConfig::default(), Execution::Sequential).unwrap();
        assert_abs_diff_eq!(r.perplexity, 4.0, epsilon = 1e-12);
        assert_eq!(r.predicted_tokens, 4);
    }

    #[test]
    fn empirical_topic_perplexity_by_hand() {
        // Predict part "0 0 1" under phi = (2/3, 1/3, 0).
        let phi = Matrix::from_rows(vec![vec![2.0 / 3.0, 1.0 / 3.0, 0.0]]);
        let h = vec![split(vec![0], vec![0, 0, 1])];
        let r = perplexity(&phi, &h, FoldInConfig::default(), Execution::Sequential).unwrap();
        let ce = -(2.0 * (2.0f64 / 3.0).ln() + (1.0f64 / 3.0).ln()) / 3.0;
        assert_abs_diff_eq!(r.perplexity, ce.exp(), epsilon = 1e-12);
        assert_eq!(r.floored_tokens, 0);

        let h = vec![split(vec![0], vec![2])];
        let r = perplexity(&phi, &h, FoldInConfig::default(), Execution::Sequential).unwrap();
        assert_eq!(r.floored_tokens, 1);
        assert!((r.perplexity / 1e12 - 1.0).abs() < 1e-9);
        assert!(perplexity(&phi, &[split(vec![0], vec![])], FoldInConfig::default(), Execution::Sequential).is_err());
    }

    #[test]
    fn fold_in_single_topic_is_one() {
        let phi = Matrix::from_rows(vec![vec![0.5, 0.5]]);
        assert_eq!(fold_in(&phi, &Document::from_tokens([0, 1]), FoldInConfig::default()), vec![1.0]);
    }

    #[test]
    fn fold_in_finds_mixture() {
        let phi = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let doc = Document::from_counts([(0, 3), (1, 1)]);
        let theta = fold_in(&phi, &doc, FoldInConfig::default());
        assert_abs_diff_eq!(&theta[..], &[0.75, 0.25][..], epsilon = 1e-12);
    }

    fn arb_phi() -> impl Strategy<Value = Matrix> {
        (2usize..5, 3usize..7).prop_flat_map(|(k, v)| {
            prop::collection::vec(prop::collection::vec(0.05f64..1.0, v), k).prop_map(|rows| {
                Matrix::from_rows(
                    rows.into_iter()
                        .map(|mut r| {
                            normalize(&mut r);
                            r
                        })
                        .collect(),
                )
            })
        })
    }

    fn arb_holdout(v: usize) -> impl Strategy<Value = Vec<HoldoutSplit>> {
        prop::collection::vec(
            (prop::collection::vec(0..v, 1..8), prop::collection::vec(0..v, 1..5)),
            1..5,
        )
        .prop_map(|docs| docs.into_iter().map(|(o, p)| split(o, p)).collect())
    }

    fn converged() -> FoldInConfig {
        FoldInConfig { iters: 100_000, tol: 1e-13 }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn perplexity_ignores_topic_order_and_duplicates(
            (phi, h) in arb_phi().prop_flat_map(|phi| { let v = phi.cols(); (Just(phi), arb_holdout(v)) })
        ) {
            let base = perplexity(&phi, &h, converged(), Execution::Sequential).unwrap().perplexity;
            let mut rows = phi.to_rows();
            rows.reverse();
            let permuted = perplexity(&Matrix::from_rows(rows.clone()), &h, converged(), Execution::Sequential).unwrap();
            prop_assert!((permuted.perplexity - base).abs() <= 1e-6 * base);
            rows.push(rows[0].clone());
            let dup = perplexity(&Matrix::from_rows(rows), &h, converged(), Execution::Sequential).unwrap();
            prop_assert!((dup.perplexity - base).abs() <= 1e-6 * base, "{} vs {}", dup.perplexity, base);
        }

        #[test]
        fn pmi_depends_only_on_top_words(
            (phi, docs) in arb_phi().prop_flat_map(|phi| {
                let v = phi.cols();
                (Just(phi), prop::collection::vec(prop::collection::vec(0..v, 1..6), 1..12))
            }),
            n in 2usize..4,
        ) {
            let c = corpus(docs, phi.cols());
            let base = pmi_coherence(&phi, &c, n, PmiSmoothing::default()).unwrap();
            // Rescale probabilities without changing the ranking.
            let squashed = Matrix::from_rows(phi.iter_rows().map(|r| {
                let mut r: Vec<f64> = r.iter().map(|x| x.powi(3)).collect();
                normalize(&mut r);
                r
            }).collect());
            let other = pmi_coherence(&squashed, &c, n, PmiSmoothing::default()).unwrap();
            for (a, b) in base.per_topic.iter().zip(&other.per_topic) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let mut rows = phi.to_rows();
            rows.reverse();
            let permuted = pmi_coherence(&Matrix::from_rows(rows), &c, n, PmiSmoothing::default()).unwrap();
            prop_assert!((permuted.mean - base.mean).abs() < 1e-12);
            let mean = base.per_topic.iter().sum::<f64>() / base.per_topic.len() as f64;
            prop_assert!((base.mean - mean).abs() < 1e-15);
        }

        #[test]
        fn parallel_matches_sequential(
            (phi, h) in arb_phi().prop_flat_map(|phi| { let v = phi.cols(); (Just(phi), arb_holdout(v)) })
        ) {
            let a = perplexity(&phi, &h, FoldInConfig::default(), Execution::Sequential).unwrap();
            let b = perplexity(&phi, &h, FoldInConfig::default(), Execution::Parallel).unwrap();
            prop_assert!((a.perplexity - b.perplexity).abs() <= 1e-12 * a.perplexity);
        }
    }
}
