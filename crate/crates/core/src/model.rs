//! Trained-model snapshot shared by all four models, with a plain-text file
//! format.
//!
//! ```text
//! divtopic-model 1
//! kind divplsa
//! topics 5
//! vocab 500
//! docs 2000
//! tokens 200000
//! iteration 187
//! likelihood -1043223.5
//! topic 3 41812.2 0.0012 0.0003 ...
//! theta 0 0.91 0.02 ...
//! ```
//!
//! One `topic` line per surviving topic: its label (index in the starting
//! topic set), size, and `V` probabilities. `theta` lines are optional.
//! Numbers are written in shortest round-trip form, so reading a written
//! model gives back the same values.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use crate::divlda::DivLdaFit;
use crate::divplsa::DivPlsaFit;
use crate::error::{Error, Result};
use crate::lda::{self, LdaFit};
use crate::matrix::Matrix;
use crate::plsa::PlsaFit;

const MAGIC: &str = "divtopic-model 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Plsa,
    DivPlsa,
    Lda,
    DivLda,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Plsa => "plsa",
            ModelKind::DivPlsa => "divplsa",
            ModelKind::Lda => "lda",
            ModelKind::DivLda => "divlda",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plsa" => Ok(ModelKind::Plsa),
            "divplsa" => Ok(ModelKind::DivPlsa),
            "lda" => Ok(ModelKind::Lda),
            "divlda" => Ok(ModelKind::DivLda),
            _ => Err(Error::InvalidArgument(format!(
                "unknown model kind '{s}' (expected plsa, divplsa, lda or divlda)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub kind: ModelKind,
    /// Stable label of each row, its index among the starting topics.
    pub topic_ids: Vec<usize>,
    pub sizes: Vec<f64>,
    /// `K x V` topic-word distributions.
    pub phi: Matrix,
    /// `D x K` document-topic distributions, when kept.
    pub theta: Option<Matrix>,
    pub num_docs: usize,
    pub token_total: u64,
    pub iteration: usize,
    pub likelihood: f64,
}

impl TopicModel {
    pub fn num_topics(&self) -> usize {
        self.phi.rows()
    }

    pub fn vocab_size(&self) -> usize {
        self.phi.cols()
    }

    /// Row of the topic labelled `id`.
    pub fn position(&self, id: usize) -> Option<usize> {
        self.topic_ids.iter().position(|&t| t == id)
    }

    /// Share of the corpus tokens held by each topic.
    pub fn proportions(&self) -> Vec<f64> {
        let total = self.token_total.max(1) as f64;
        self.sizes.iter().map(|s| s / total).collect()
    }

    pub fn without_theta(mut self) -> Self {
        self.theta = None;
        self
    }

    pub fn from_plsa(fit: &PlsaFit, token_total: u64) -> Self {
        TopicModel {
            kind: ModelKind::Plsa,
            topic_ids: (0..fit.state.num_topics()).collect(),
            sizes: fit.sizes.clone(),
            phi: fit.state.phi.clone(),
            theta: Some(fit.state.theta.clone()),
            num_docs: fit.state.num_docs(),
            token_total,
            iteration: fit.iterations,
            likelihood: fit.log_likelihood(),
        }
    }

    pub fn from_divplsa(fit: &DivPlsaFit, token_total: u64) -> Self {
        TopicModel {
            kind: ModelKind::DivPlsa,
            topic_ids: fit.topic_ids.clone(),
            sizes: fit.sizes.clone(),
            phi: fit.state.phi.clone(),
            theta: Some(fit.state.theta.clone()),
            num_docs: fit.state.num_docs(),
            token_total,
            iteration: fit.iterations,
            likelihood: fit.trace.last().map_or(f64::NAN, |r| r.likelihood),
        }
    }

    pub fn from_lda(fit: &LdaFit, sweeps: usize) -> Self {
        let s = &fit.state;
        TopicModel {
            kind: ModelKind::Lda,
            topic_ids: (0..s.num_topics()).collect(),
            sizes: s.topic_sizes(),
            phi: lda::estimate_phi(s),
            theta: Some(lda::estimate_theta(s)),
            num_docs: s.num_docs(),
            token_total: s.num_tokens() as u64,
            iteration: sweeps,
            likelihood: fit.trace.last().map_or(f64::NAN, |r| r.likelihood),
        }
    }

    pub fn from_divlda(fit: &DivLdaFit) -> Self {
        let s = &fit.state;
        TopicModel {
            kind: ModelKind::DivLda,
            topic_ids: fit.topic_ids.clone(),
            sizes: s.topic_sizes(),
            phi: lda::estimate_phi(s),
            theta: Some(lda::estimate_theta(s)),
            num_docs: s.num_docs(),
            token_total: s.num_tokens() as u64,
            iteration: fit.sweeps,
            likelihood: fit.trace.last().map_or(f64::NAN, |r| r.likelihood),
        }
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "kind {}", self.kind)?;
        writeln!(out, "topics {}", self.num_topics())?;
        writeln!(out, "vocab {}", self.vocab_size())?;
        writeln!(out, "docs {}", self.num_docs)?;
        writeln!(out, "tokens {}", self.token_total)?;
        writeln!(out, "iteration {}", self.iteration)?;
        writeln!(out, "likelihood {}", self.likelihood)?;
        for (r, (&id, &size)) in self.topic_ids.iter().zip(&self.sizes).enumerate() {
            write!(out, "topic {id} {size}")?;
            for p in self.phi.row(r) {
                write!(out, " {p}")?;
            }
            writeln!(out)?;
        }
        if let Some(theta) = &self.theta {
            for (d, row) in theta.iter_rows().enumerate() {
                write!(out, "theta {d}")?;
                for p in row {
                    write!(out, " {p}")?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        TopicModel::read(std::io::BufReader::new(file), path)
    }

    pub fn read<R: BufRead>(reader: R, label: impl AsRef<Path>) -> Result<Self> {
        let label = label.as_ref();
        let mut lines = reader.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(l))) => Ok((i + 1, l)),
                Some((_, Err(e))) => Err(Error::io(label, e)),
                None => Err(Error::parse(label, 0, format!("unexpected end of file, expected {what}"))),
            }
        };
        let (n, magic) = next("header")?;
        if magic.trim() != MAGIC {
            return Err(Error::parse(label, n, format!("not a model file (expected '{MAGIC}')")));
        }
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (n, line) = next(key)?;
            match line.split_once(' ') {
                Some((k, v)) if k == key => Ok((n, v.trim().to_string())),
                _ => Err(Error::parse(label, n, format!("expected '{key} <value>'"))),
            }
        };
        fn num<T: FromStr>(label: &Path, (n, v): (usize, String), key: &str) -> Result<T> {
            v.parse().map_err(|_| Error::parse(label, n, format!("bad {key} value '{v}'")))
        }
        let (n, kind) = field("kind")?;
        let kind: ModelKind = kind.parse().map_err(|e: Error| Error::parse(label, n, e.to_string()))?;
        let k: usize = num(label, field("topics")?, "topics")?;
        let v: usize = num(label, field("vocab")?, "vocab")?;
        let num_docs: usize = num(label, field("docs")?, "docs")?;
        let token_total: u64 = num(label, field("tokens")?, "tokens")?;
        let iteration: usize = num(label, field("iteration")?, "iteration")?;
        let likelihood: f64 = num(label, field("likelihood")?, "likelihood")?;

        let mut topic_ids = Vec::with_capacity(k);
        let mut sizes = Vec::with_capacity(k);
        let mut phi_rows = Vec::with_capacity(k);
        let mut theta_rows = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            let line = line.map_err(|e| Error::io(label, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let tag = parts.next().unwrap();
            let values: Vec<&str> = parts.collect();
            let parse_f = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| Error::parse(label, n, format!("bad number '{s}'")))
            };
            match tag {
                "topic" => {
                    if !theta_rows.is_empty() {
                        return Err(Error::parse(label, n, "topic line after theta lines"));
                    }
                    if values.len() != v + 2 {
                        return Err(Error::parse(
                            label,
                            n,
                            format!("topic line has {} probabilities, expected {v}", values.len().saturating_sub(2)),
                        ));
                    }
                    let id: usize =
                        values[0].parse().map_err(|_| Error::parse(label, n, format!("bad topic id '{}'", values[0])))?;
                    if topic_ids.contains(&id) {
                        return Err(Error::parse(label, n, format!("duplicate topic id {id}")));
                    }
                    topic_ids.push(id);
                    sizes.push(parse_f(values[1])?);
                    phi_rows.push(values[2..].iter().map(|s| parse_f(s)).collect::<Result<Vec<f64>>>()?);
                }
                "theta" => {
                    if values.len() != k + 1 {
                        return Err(Error::parse(label, n, format!("theta line needs {k} values")));
                    }
                    let d: usize = values[0].parse().map_err(|_| Error::parse(label, n, "bad document index"))?;
                    if d != theta_rows.len() {
                        return Err(Error::parse(label, n, format!("theta rows out of order at {d}")));
                    }
                    theta_rows.push(values[1..].iter().map(|s| parse_f(s)).collect::<Result<Vec<f64>>>()?);
                }
                other => return Err(Error::parse(label, n, format!("unknown line tag '{other}'"))),
            }
        }
        if phi_rows.len() != k {
            return Err(Error::parse(label, 0, format!("found {} topic lines, header says {k}", phi_rows.len())));
        }
        if !theta_rows.is_empty() && theta_rows.len() != num_docs {
            return Err(Error::parse(
                label,
                0,
                format!("found {} theta lines, header says {num_docs} docs", theta_rows.len()),
            ));
        }
        let phi = if k == 0 { Matrix::zeros(0, v) } else { Matrix::from_rows(phi_rows) };
        Ok(TopicModel {
            kind,
            topic_ids,
            sizes,
            phi,
            theta: (!theta_rows.is_empty()).then(|| Matrix::from_rows(theta_rows)),
            num_docs,
            token_total,
            iteration,
            likelihood,
        })
    }
}
