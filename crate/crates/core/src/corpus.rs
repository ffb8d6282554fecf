//! Sparse bag-of-words corpora.
//!
//! The canonical on-disk format is the UCI bag-of-words layout: a docs file
//! with three header lines (`D`, `W`, `NNZ`) followed by `NNZ` lines of
//! `docID wordID count` (1-based ids), and a vocab file with one term per
//! line. Held-out document-completion splits and document co-occurrence
//! statistics for coherence scoring live here as well, along with a seeded
//! generator for planted-topic corpora.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;

use crate::error::{Error, Result};

pub type WordId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
}

impl Vocabulary {
    pub fn new(terms: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if t.is_empty() {
                return Err(Error::Vocabulary(format!("term {} is empty", i + 1)));
            }
            if !seen.insert(t.as_str()) {
                return Err(Error::Vocabulary(format!("duplicate term {t:?} at line {}", i + 1)));
            }
        }
        Ok(Vocabulary { terms })
    }

    /// Placeholder terms `w0`, `w1`, ... for synthetic corpora.
    pub fn anonymous(size: usize) -> Self {
        Vocabulary {
            terms: (0..size).map(|i| format!("w{i}")).collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut terms = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            terms.push(line.trim_end_matches('\r').to_string());
        }
        // A trailing blank line is an artifact of the writer, not a term.
        while terms.last().is_some_and(|t| t.is_empty()) {
            terms.pop();
        }
        Vocabulary::new(terms)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, id: WordId) -> &str {
        &self.terms[id]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// Sparse word counts of one document, sorted by word id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    entries: Vec<(WordId, u32)>,
    total_tokens: u64,
}

impl Document {
    /// Builds a document from arbitrary `(word, count)` pairs. Duplicate word
    /// ids are summed and zero counts are dropped.
    pub fn from_counts(counts: impl IntoIterator<Item = (WordId, u32)>) -> Self {
        let mut entries: Vec<(WordId, u32)> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        entries.sort_unstable_by_key(|&(w, _)| w);
        let mut merged: Vec<(WordId, u32)> = Vec::with_capacity(entries.len());
        for (w, c) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == w => last.1 += c,
                _ => merged.push((w, c)),
            }
        }
        let total_tokens = merged.iter().map(|&(_, c)| c as u64).sum();
        Document {
            entries: merged,
            total_tokens,
        }
    }

    pub fn from_tokens(tokens: impl IntoIterator<Item = WordId>) -> Self {
        Document::from_counts(tokens.into_iter().map(|w| (w, 1)))
    }

    pub fn entries(&self) -> &[(WordId, u32)] {
        &self.entries
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, word: WordId) -> u32 {
        match self.entries.binary_search_by_key(&word, |&(w, _)| w) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    /// Token stream with each word repeated `count` times, in word-id order.
    pub fn tokens(&self) -> impl Iterator<Item = WordId> + '_ {
        self.entries
            .iter()
            .flat_map(|&(w, c)| std::iter::repeat_n(w, c as usize))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    vocabulary: Vocabulary,
    documents: Vec<Document>,
    token_total: u64,
    dropped_empty: usize,
}

impl Corpus {
    /// Validates word ids against the vocabulary. Empty documents are dropped
    /// and counted.
    pub fn new(vocabulary: Vocabulary, documents: Vec<Document>) -> Result<Self> {
        let size = vocabulary.len();
        for doc in &documents {
            if let Some(&(w, _)) = doc.entries.last() {
                if w >= size {
                    return Err(Error::WordOutOfRange { id: w, size });
                }
            }
        }
        let before = documents.len();
        let documents: Vec<Document> = documents.into_iter().filter(|d| !d.is_empty()).collect();
        let dropped_empty = before - documents.len();
        if dropped_empty > 0 {
            warn!("dropped {dropped_empty} empty documents");
        }
        let token_total = documents.iter().map(Document::total_tokens).sum();
        Ok(Corpus {
            vocabulary,
            documents,
            token_total,
            dropped_empty,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn num_docs(&self) -> usize {
        self.documents.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn token_total(&self) -> u64 {
        self.token_total
    }

    pub fn dropped_empty(&self) -> usize {
        self.dropped_empty
    }

    pub fn nnz(&self) -> usize {
        self.documents.iter().map(|d| d.entries.len()).sum()
    }

    /// Corpus-wide word frequencies normalized to a distribution.
    pub fn unigram(&self) -> Vec<f64> {
        let mut counts = vec![0.0; self.vocab_size()];
        for doc in &self.documents {
            for &(w, c) in doc.entries() {
                counts[w] += c as f64;
            }
        }
        let total = self.token_total as f64;
        counts.iter_mut().for_each(|c| *c /= total);
        counts
    }

    /// Writes the docs file in the bag-of-words triple format.
    pub fn write_docs<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.num_docs())?;
        writeln!(out, "{}", self.vocab_size())?;
        writeln!(out, "{}", self.nnz())?;
        for (d, doc) in self.documents.iter().enumerate() {
            for &(w, c) in doc.entries() {
                writeln!(out, "{} {} {}", d + 1, w + 1, c)?;
            }
        }
        Ok(())
    }

    pub fn write_vocab<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for t in self.vocabulary.terms() {
            writeln!(out, "{t}")?;
        }
        Ok(())
    }

    pub fn save_bow(&self, docs_path: impl AsRef<Path>, vocab_path: impl AsRef<Path>) -> Result<()> {
        let docs_path = docs_path.as_ref();
        let vocab_path = vocab_path.as_ref();
        let f = File::create(docs_path).map_err(|e| Error::io(docs_path, e))?;
        let mut w = BufWriter::new(f);
        self.write_docs(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(docs_path, e))?;
        let f = File::create(vocab_path).map_err(|e| Error::io(vocab_path, e))?;
        let mut w = BufWriter::new(f);
        self.write_vocab(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(vocab_path, e))?;
        Ok(())
    }
}

/// Loads a corpus from a bag-of-words docs file and a vocab file.
pub fn load_bow(docs_path: impl AsRef<Path>, vocab_path: impl AsRef<Path>) -> Result<Corpus> {
    let vocabulary = Vocabulary::load(vocab_path)?;
    let docs_path = docs_path.as_ref();
    let file = File::open(docs_path).map_err(|e| Error::io(docs_path, e))?;
    read_bow(BufReader::new(file), vocabulary, docs_path)
}

/// Parses the docs file from any reader; `label` names the source in errors.
pub fn read_bow<R: BufRead>(reader: R, vocabulary: Vocabulary, label: impl AsRef<Path>) -> Result<Corpus> {
    let label = label.as_ref();
    let mut header = [0usize; 3];
    let mut header_seen = 0;
    let mut docs: Vec<Vec<(WordId, u32)>> = Vec::new();
    let mut triples = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(label, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if header_seen < 3 {
            header[header_seen] = line
                .parse()
                .map_err(|_| Error::parse(label, lineno, format!("expected a header count, found {line:?}")))?;
            header_seen += 1;
            if header_seen == 3 {
                let [d, w, _] = header;
                if w != vocabulary.len() {
                    return Err(Error::parse(
                        label,
                        lineno - 1,
                        format!("header declares {w} words but the vocabulary has {}", vocabulary.len()),
                    ));
                }
                docs = vec![Vec::new(); d];
            }
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut next = |name: &str| -> Result<i64> {
            let tok = fields
                .next()
                .ok_or_else(|| Error::parse(label, lineno, format!("missing {name}")))?;
            tok.parse::<i64>()
                .map_err(|_| Error::parse(label, lineno, format!("{name} {tok:?} is not an integer")))
        };
        let doc = next("docID")?;
        let word = next("wordID")?;
        let count = next("count")?;
        if fields.next().is_some() {
            return Err(Error::parse(label, lineno, "expected exactly three fields"));
        }
        if doc < 1 || doc as usize > docs.len() {
            return Err(Error::parse(
                label,
                lineno,
                Error::DocOutOfRange {
                    id: doc.max(0) as usize,
                    count: docs.len(),
                }
                .to_string(),
            ));
        }
        if word < 1 || word as usize > vocabulary.len() {
            return Err(Error::WordOutOfRange {
                id: word.max(0) as usize,
                size: vocabulary.len(),
            });
        }
        if count < 1 || count > u32::MAX as i64 {
            return Err(Error::parse(label, lineno, format!("non-positive count {count}")));
        }
        docs[doc as usize - 1].push((word as usize - 1, count as u32));
        triples += 1;
    }
    if header_seen < 3 {
        return Err(Error::parse(label, header_seen + 1, "truncated header"));
    }
    if triples != header[2] {
        return Err(Error::parse(
            label,
            header_seen + triples,
            format!("header declares {} triples but found {triples}", header[2]),
        ));
    }
    let documents = docs.into_iter().map(Document::from_counts).collect();
    Corpus::new(vocabulary, documents)
}

/// One held-out document split into an observed prefix and a part to predict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoldoutSplit {
    /// Index of the document in the corpus it was taken from.
    pub source_doc: usize,
    pub observed: Document,
    pub predict: Document,
}

/// Holds out `doc_fraction` of the documents (rounded, at least one).
pub fn split_holdout(
    corpus: &Corpus,
    doc_fraction: f64,
    word_fraction: f64,
    seed: u64,
) -> Result<(Corpus, Vec<HoldoutSplit>)> {
    if !(doc_fraction > 0.0 && doc_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("doc_fraction {doc_fraction} not in (0,1)")));
    }
    let n = ((corpus.num_docs() as f64) * doc_fraction).round().max(1.0) as usize;
    split_holdout_count(corpus, n, word_fraction, seed)
}

/// Holds out exactly `n_holdout` seeded-random documents. Each held-out
/// document's token stream is shuffled and split at `word_fraction`;
/// documents whose predict part would be empty are skipped.
pub fn split_holdout_count(
    corpus: &Corpus,
    n_holdout: usize,
    word_fraction: f64,
    seed: u64,
) -> Result<(Corpus, Vec<HoldoutSplit>)> {
    if !(word_fraction > 0.0 && word_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("word_fraction {word_fraction} not in (0,1)")));
    }
    if n_holdout == 0 || n_holdout >= corpus.num_docs() {
        return Err(Error::InvalidArgument(format!(
            "cannot hold out {n_holdout} of {} documents",
            corpus.num_docs()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..corpus.num_docs()).collect();
    order.shuffle(&mut rng);
    let mut held: Vec<usize> = order[..n_holdout].to_vec();
    held.sort_unstable();
    let mut is_held = vec![false; corpus.num_docs()];
    held.iter().for_each(|&d| is_held[d] = true);

    let mut splits = Vec::with_capacity(n_holdout);
    for &d in &held {
        let mut stream: Vec<WordId> = corpus.documents[d].tokens().collect();
        stream.shuffle(&mut rng);
        let cut = ((stream.len() as f64) * word_fraction).round() as usize;
        let cut = cut.min(stream.len());
        if cut == stream.len() {
            continue;
        }
        splits.push(HoldoutSplit {
            source_doc: d,
            observed: Document::from_tokens(stream[..cut].iter().copied()),
            predict: Document::from_tokens(stream[cut..].iter().copied()),
        });
    }
    let train_docs = corpus
        .documents
        .iter()
        .enumerate()
        .filter(|(d, _)| !is_held[*d])
        .map(|(_, doc)| doc.clone())
        .collect();
    let train = Corpus::new(corpus.vocabulary.clone(), train_docs)?;
    Ok((train, splits))
}

/// Writes held-out splits: a `holdout N` header, then per split a
/// `doc <source>` line, an `o` line and a `p` line of `word:count` pairs
/// (0-based word ids).
pub fn write_holdout<W: Write>(splits: &[HoldoutSplit], mut out: W) -> std::io::Result<()> {
    writeln!(out, "holdout {}", splits.len())?;
    for s in splits {
        writeln!(out, "doc {}", s.source_doc)?;
        for (tag, doc) in [("o", &s.observed), ("p", &s.predict)] {
            write!(out, "{tag}")?;
            for &(w, c) in doc.entries() {
                write!(out, " {w}:{c}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn read_holdout<R: BufRead>(reader: R, vocab_size: usize, label: impl AsRef<Path>) -> Result<Vec<HoldoutSplit>> {
    let label = label.as_ref();
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(label, e))?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }
    let mut it = lines.into_iter();
    let (lineno, header) = it.next().ok_or_else(|| Error::parse(label, 1, "empty holdout file"))?;
    let expected: usize = header
        .strip_prefix("holdout ")
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| Error::parse(label, lineno, "expected `holdout N` header"))?;

    let parse_doc = |lineno: usize, line: &str, tag: &str| -> Result<Document> {
        let mut fields = line.split_whitespace();
        if fields.next() != Some(tag) {
            return Err(Error::parse(label, lineno, format!("expected `{tag}` line")));
        }
        let mut counts = Vec::new();
        for f in fields {
            let (w, c) = f
                .split_once(':')
                .and_then(|(w, c)| Some((w.parse::<usize>().ok()?, c.parse::<u32>().ok()?)))
                .ok_or_else(|| Error::parse(label, lineno, format!("bad entry {f:?}")))?;
            if w >= vocab_size {
                return Err(Error::WordOutOfRange { id: w, size: vocab_size });
            }
            if c == 0 {
                return Err(Error::parse(label, lineno, "non-positive count 0"));
            }
            counts.push((w, c));
        }
        Ok(Document::from_counts(counts))
    };

    let mut splits = Vec::with_capacity(expected);
    while let Some((lineno, line)) = it.next() {
        let source_doc = line
            .strip_prefix("doc ")
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| Error::parse(label, lineno, "expected `doc <index>` line"))?;
        let (ol, o) = it.next().ok_or_else(|| Error::parse(label, lineno + 1, "missing observed line"))?;
        let (pl, p) = it.next().ok_or_else(|| Error::parse(label, ol + 1, "missing predict line"))?;
        let observed = parse_doc(ol, &o, "o")?;
        let predict = parse_doc(pl, &p, "p")?;
        if predict.is_empty() {
            return Err(Error::parse(label, pl, "empty predict part"));
        }
        splits.push(HoldoutSplit {
            source_doc,
            observed,
            predict,
        });
    }
    if splits.len() != expected {
        return Err(Error::parse(
            label,
            lineno,
            format!("header declares {expected} splits but found {}", splits.len()),
        ));
    }
    Ok(splits)
}

/// Document frequencies for a word set and their pairwise joint document
/// frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceStats {
    pub doc_count: u64,
    doc_freq: HashMap<WordId, u64>,
    pair_doc_freq: HashMap<(WordId, WordId), u64>,
}

impl CooccurrenceStats {
    pub fn doc_freq(&self, w: WordId) -> u64 {
        self.doc_freq.get(&w).copied().unwrap_or(0)
    }

    pub fn pair_doc_freq(&self, a: WordId, b: WordId) -> u64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        if a == b {
            return self.doc_freq(a);
        }
        self.pair_doc_freq.get(&key).copied().unwrap_or(0)
    }
}

pub fn cooccurrence(corpus: &Corpus, word_set: &[WordId]) -> Result<CooccurrenceStats> {
    if word_set.is_empty() {
        return Err(Error::InvalidArgument("empty word set".into()));
    }
    let v = corpus.vocab_size();
    let mut member = vec![false; v];
    for &w in word_set {
        if w >= v {
            return Err(Error::WordOutOfRange { id: w, size: v });
        }
        member[w] = true;
    }
    let mut doc_freq: HashMap<WordId, u64> = word_set.iter().map(|&w| (w, 0)).collect();
    let mut pair_doc_freq = HashMap::new();
    let mut present = Vec::new();
    for doc in corpus.documents() {
        present.clear();
        present.extend(doc.entries().iter().map(|&(w, _)| w).filter(|&w| member[w]));
        for (i, &a) in present.iter().enumerate() {
            *doc_freq.get_mut(&a).unwrap() += 1;
            for &b in &present[i + 1..] {
                *pair_doc_freq.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    Ok(CooccurrenceStats {
        doc_count: corpus.num_docs() as u64,
        doc_freq,
        pair_doc_freq,
    })
}

/// A generated corpus plus the parameters that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub topics: Vec<Vec<f64>>,
    pub doc_topics: Vec<Vec<f64>>,
    pub doc_topic_prior: f64,
    pub seed: u64,
}

/// Draws documents from the standard topic-model generative story: a
/// symmetric Dirichlet topic mixture per document, then a topic and a word
/// per token.
pub fn generate_synthetic(
    true_topics: &[Vec<f64>],
    doc_topic_prior: f64,
    n_docs: usize,
    doc_len: usize,
    seed: u64,
) -> Result<SyntheticCorpus> {
    let k = true_topics.len();
    if k == 0 {
        return Err(Error::InvalidArgument("no topics".into()));
    }
    let v = true_topics[0].len();
    if !(doc_topic_prior > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "doc_topic_prior must be positive, got {doc_topic_prior}"
        )));
    }
    let mut samplers = Vec::with_capacity(k);
    for (t, row) in true_topics.iter().enumerate() {
        if row.len() != v {
            return Err(Error::InvalidArgument(format!("topic {t} has length {} != {v}", row.len())));
        }
        if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) || row.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidArgument(format!("topic {t} is a degenerate distribution")));
        }
        samplers.push(WeightedIndex::new(row).map_err(|e| Error::InvalidArgument(e.to_string()))?);
    }
    let gamma = Gamma::new(doc_topic_prior, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut documents = Vec::with_capacity(n_docs);
    let mut doc_topics = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        let mut mix: Vec<f64> = (0..k).map(|_| gamma.sample(&mut rng)).collect();
        let total: f64 = mix.iter().sum();
        if total > 0.0 && total.is_finite() {
            mix.iter_mut().for_each(|x| *x /= total);
        } else {
            // All draws underflowed: the limit of a vanishing concentration.
            mix.iter_mut().for_each(|x| *x = 0.0);
            mix[rng.random_range(0..k)] = 1.0;
        }
        let topic_of = WeightedIndex::new(&mix).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let tokens = (0..doc_len).map(|_| samplers[topic_of.sample(&mut rng)].sample(&mut rng));
        documents.push(Document::from_tokens(tokens.collect::<Vec<_>>()));
        doc_topics.push(mix);
    }
    let corpus = Corpus::new(Vocabulary::anonymous(v), documents)?;
    Ok(SyntheticCorpus {
        corpus,
        topics: true_topics.to_vec(),
        doc_topics,
        doc_topic_prior,
        seed,
    })
}

/// `n_topics` topics over `vocab_size` words with disjoint contiguous
/// supports and Zipf-like weights `1/(rank+1)^skew` inside each block.
pub fn block_topics(n_topics: usize, vocab_size: usize, skew: f64) -> Vec<Vec<f64>> {
    assert!(n_topics >= 1 && vocab_size >= n_topics);
    let block = vocab_size / n_topics;
    (0..n_topics)
        .map(|t| {
            let mut row = vec![0.0; vocab_size];
            let start = t * block;
            let end = if t + 1 == n_topics { vocab_size } else { start + block };
            for (r, w) in (start..end).enumerate() {
                row[w] = 1.0 / ((r + 1) as f64).powf(skew);
            }
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn vocab3() -> Vocabulary {
        Vocabulary::new(vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    #[test]
    fn loads_triples() {
        let src = "2\n3\n3\n1 1 2\n1 3 1\n2 2 4\n";
        let c = read_bow(Cursor::new(src), vocab3(), "mem").unwrap();
        assert_eq!(c.num_docs(), 2);
        assert_eq!(c.token_total(), 7);
        assert_eq!(c.documents()[0].entries(), &[(0, 2), (2, 1)]);
    }

    #[test]
    fn word_out_of_range() {
        let src = "1\n3\n1\n1 4 1\n";
        let err = read_bow(Cursor::new(src), vocab3(), "mem").unwrap_err();
        assert!(matches!(err, Error::WordOutOfRange { id: 4, size: 3 }));
    }

    #[test]
    fn duplicate_triples_merge() {
        let src = "1\n3\n2\n1 1 2\n1 1 3\n";
        let c = read_bow(Cursor::new(src), vocab3(), "mem").unwrap();
        assert_eq!(c.documents()[0].entries(), &[(0, 5)]);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let err = read_bow(Cursor::new("1\n3\n1\n1 x 1\n"), vocab3(), "mem").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = read_bow(Cursor::new("1\n3\n1\n1 1 0\n"), vocab3(), "mem").unwrap_err();
        assert!(err.to_string().contains("non-positive"), "{err}");
        let err = read_bow(Cursor::new("1\n3\n1\n1 1 -2\n"), vocab3(), "mem").unwrap_err();
        assert!(err.to_string().contains("non-positive"), "{err}");
    }

    #[test]
    fn empty_documents_dropped() {
        let src = "3\n3\n1\n2 1 1\n";
        let c = read_bow(Cursor::new(src), vocab3(), "mem").unwrap();
        assert_eq!(c.num_docs(), 1);
        assert_eq!(c.dropped_empty(), 2);
    }

    #[test]
    fn vocabulary_rejects_duplicates() {
        assert!(Vocabulary::new(vec!["a".into(), "a".into()]).is_err());
        assert!(Vocabulary::new(vec!["".into()]).is_err());
    }

    #[test]
    fn holdout_split_80_20() {
        let docs = vec![Document::from_counts([(0, 4), (1, 6)]), Document::from_counts([(2, 3)])];
        let c = Corpus::new(vocab3(), docs).unwrap();
        // With two documents, try seeds until the 10-token doc is held out.
        let (train, splits) = (0..100)
            .map(|s| split_holdout_count(&c, 1, 0.8, s).unwrap())
            .find(|(_, s)| s[0].source_doc == 0)
            .unwrap();
        assert_eq!(train.num_docs(), 1);
        assert_eq!(splits[0].observed.total_tokens(), 8);
        assert_eq!(splits[0].predict.total_tokens(), 2);
        for w in 0..2 {
            assert_eq!(
                splits[0].observed.count(w) + splits[0].predict.count(w),
                c.documents()[0].count(w)
            );
        }
    }

    #[test]
    fn holdout_20ng_protocol_count() {
        let topics = block_topics(2, 10, 1.0);
        let syn = generate_synthetic(&topics, 0.5, 11_267, 5, 3).unwrap();
        let (train, splits) = split_holdout_count(&syn.corpus, 1000, 0.8, 9).unwrap();
        assert_eq!(splits.len(), 1000);
        assert_eq!(train.num_docs(), 10_267);
    }

    #[test]
    fn holdout_is_deterministic_and_rejects_tiny_corpora() {
        let topics = block_topics(2, 10, 1.0);
        let syn = generate_synthetic(&topics, 0.5, 50, 20, 3).unwrap();
        let a = split_holdout(&syn.corpus, 0.2, 0.8, 11).unwrap();
        let b = split_holdout(&syn.corpus, 0.2, 0.8, 11).unwrap();
        assert_eq!(a.1, b.1);
        assert_eq!(a.0, b.0);
        let one = Corpus::new(vocab3(), vec![Document::from_counts([(0, 3)])]).unwrap();
        assert!(split_holdout(&one, 0.5, 0.8, 0).is_err());
    }

    #[test]
    fn holdout_file_roundtrip() {
        let topics = block_topics(2, 10, 1.0);
        let syn = generate_synthetic(&topics, 0.5, 30, 12, 3).unwrap();
        let (_, splits) = split_holdout(&syn.corpus, 0.3, 0.8, 1).unwrap();
        let mut buf = Vec::new();
        write_holdout(&splits, &mut buf).unwrap();
        let back = read_holdout(Cursor::new(buf), 10, "mem").unwrap();
        assert_eq!(back, splits);
    }

    #[test]
    fn cooccurrence_counts() {
        // 10 docs; word 0 in docs 0..3, word 1 in docs 5..8.
        let docs: Vec<Document> = (0..10)
            .map(|d| {
                let mut c = vec![(2, 1)];
                if d < 3 {
                    c.push((0, 1));
                }
                if (5..8).contains(&d) {
                    c.push((1, 2));
                }
                Document::from_counts(c)
            })
            .collect();
        let c = Corpus::new(vocab3(), docs).unwrap();
        let s = cooccurrence(&c, &[0, 1, 2]).unwrap();
        assert_eq!(s.doc_freq(0), 3);
        assert!((s.doc_freq(0) as f64 / s.doc_count as f64 - 0.3).abs() < 1e-15);
        assert_eq!(s.pair_doc_freq(0, 1), 0);
        assert_eq!(s.pair_doc_freq(1, 2), 3);
        assert_eq!(s.pair_doc_freq(2, 1), 3);
    }

    #[test]
    fn cooccurrence_matches_document_scan() {
        let docs = vec![
            Document::from_counts([(0, 1), (1, 1)]),
            Document::from_counts([(0, 2), (1, 1), (2, 1)]),
            Document::from_counts([(1, 1)]),
            Document::from_counts([(2, 1), (0, 1)]),
        ];
        let c = Corpus::new(vocab3(), docs).unwrap();
        let s = cooccurrence(&c, &[0, 1]).unwrap();
        let scan = c
            .documents()
            .iter()
            .filter(|d| d.count(0) > 0 && d.count(1) > 0)
            .count() as u64;
        assert_eq!(scan, 2);
        assert_eq!(s.pair_doc_freq(0, 1), scan);
    }

    #[test]
    fn synthetic_uniform_frequencies() {
        let topic = vec![vec![0.25; 4]];
        let syn = generate_synthetic(&topic, 1.0, 100, 100, 5).unwrap();
        for p in syn.corpus.unigram() {
            assert!((p - 0.25).abs() < 0.05, "{p}");
        }
    }

    #[test]
    fn synthetic_vanishing_prior_uses_single_support() {
        let topics = block_topics(2, 10, 0.0);
        let syn = generate_synthetic(&topics, 1e-4, 200, 30, 7).unwrap();
        for doc in syn.corpus.documents() {
            let lo = doc.entries().iter().all(|&(w, _)| w < 5);
            let hi = doc.entries().iter().all(|&(w, _)| w >= 5);
            assert!(lo || hi);
        }
    }

    #[test]
    fn synthetic_is_deterministic_and_validates() {
        let topics = block_topics(3, 30, 1.0);
        let a = generate_synthetic(&topics, 0.3, 20, 40, 1).unwrap();
        let b = generate_synthetic(&topics, 0.3, 20, 40, 1).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.corpus.write_docs(&mut x).unwrap();
        b.corpus.write_docs(&mut y).unwrap();
        assert_eq!(x, y);
        assert!(generate_synthetic(&[vec![0.0; 3]], 1.0, 1, 1, 0).is_err());
    }
}
