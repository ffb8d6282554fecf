use std::path::Path;

use anyhow::Context;
use divtopic::corpus::Vocabulary;
use divtopic::evaluation::top_words;
use divtopic::model::TopicModel;
use divtopic::selection::{RankedTopic, TopicRanking};
use serde::{Deserialize, Serialize};

use crate::manifest::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub rank: usize,
    pub topic_id: usize,
    pub score: f64,
    pub proportion: f64,
    /// Space-joined top words.
    pub words: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRow {
    pub rank: usize,
    pub topic_id: usize,
    pub proportion: f64,
    pub words: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRow {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub topic_id: usize,
    pub size: f64,
    pub words: String,
}

/// Top `n` words of a model row as text; bare word ids without a vocabulary.
pub fn words_of(model: &TopicModel, row: usize, n: usize, vocab: Option<&Vocabulary>) -> String {
    top_words(model.phi.row(row), n)
        .into_iter()
        .map(|w| match vocab {
            Some(v) => v.term(w).to_string(),
            None => w.to_string(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        for r in rows {
            out.serialize(r).map_err(std::io::Error::other)?;
        }
        out.flush()
    })
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("{}: bad row {}", path.display(), i + 2)))
        .collect()
}

pub fn ranking_rows(
    model: &TopicModel,
    ranking: &TopicRanking,
    vocab: Option<&Vocabulary>,
) -> anyhow::Result<Vec<RankingRow>> {
    ranking
        .topics
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let row = model
                .position(t.topic_id)
                .with_context(|| format!("topic {} is not in the model", t.topic_id))?;
            Ok(RankingRow {
                rank: i + 1,
                topic_id: t.topic_id,
                score: t.score,
                proportion: t.proportion,
                words: words_of(model, row, 20, vocab),
            })
        })
        .collect()
}

pub fn read_ranking(path: &Path) -> anyhow::Result<TopicRanking> {
    let rows: Vec<RankingRow> = read_rows(path)?;
    Ok(TopicRanking {
        topics: rows
            .into_iter()
            .map(|r| RankedTopic {
                topic_id: r.topic_id,
                score: r.score,
                proportion: r.proportion,
            })
            .collect(),
        truncated: false,
        unconverged: false,
    })
}
