use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use divtopic::corpus::{load_bow, read_bow, read_holdout, split_holdout_count, write_holdout, Corpus, Vocabulary};
use divtopic::divlda::{self, DivLdaConfig};
use divtopic::divplsa::{self, DivPlsaConfig};
use divtopic::evaluation::{self, EvalReport, FoldInConfig, PmiSmoothing};
use divtopic::lda::{self, LdaConfig};
use divtopic::model::TopicModel;
use divtopic::network::{similarity_matrix, OrganicNorm};
use divtopic::plsa::{self, PlsaConfig};
use divtopic::selection::{self, DivRankConfig, DivRankVariant, TopicRanking};
use divtopic::trace::Trace;
use divtopic::Execution;
use log::{info, warn};

use crate::args::*;
use crate::manifest::write_atomic;
use crate::tables::{self, EdgeRow, NodeRow, TopicRow};
use crate::UsageError;

/// Bookkeeping shared by all subcommands, turned into the run manifest.
pub struct Run {
    pub exec: Execution,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Manifest location when `--manifest` is not given.
    pub default_manifest: Option<PathBuf>,
}

impl Run {
    pub fn new(exec: Execution) -> Self {
        Run {
            exec,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            default_manifest: None,
        }
    }

    fn seed(&mut self, given: Option<u64>) -> u64 {
        let seed = given.unwrap_or_else(|| {
            let s = rand::random::<u64>();
            warn!("no --seed given, using {s} (recorded in the manifest)");
            s
        });
        self.seed = Some(seed);
        seed
    }

    fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    fn output(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create directory {}", dir.display()))
}

fn load_corpus(run: &mut Run, docs: &Path, vocab: &Path) -> anyhow::Result<Corpus> {
    run.input(docs);
    run.input(vocab);
    let corpus = load_bow(docs, vocab)?;
    if corpus.dropped_empty() > 0 {
        info!("dropped {} empty documents", corpus.dropped_empty());
    }
    Ok(corpus)
}

fn load_model(run: &mut Run, path: &Path) -> anyhow::Result<TopicModel> {
    run.input(path);
    Ok(TopicModel::load(path)?)
}

fn load_vocab(run: &mut Run, path: Option<&Path>, model: &TopicModel) -> anyhow::Result<Option<Vocabulary>> {
    let Some(path) = path else { return Ok(None) };
    run.input(path);
    let vocab = Vocabulary::load(path)?;
    if vocab.len() != model.vocab_size() {
        anyhow::bail!(
            "{} has {} terms but the model covers {} words",
            path.display(),
            vocab.len(),
            model.vocab_size()
        );
    }
    Ok(Some(vocab))
}

pub fn ingest(a: &IngestArgs, run: &mut Run) -> anyhow::Result<()> {
    let corpus = load_corpus(run, &a.docs, &a.vocab)?;
    create_dir(&a.out)?;
    let (train, splits) = if a.holdout_docs > 0 {
        let seed = run.seed(a.seed);
        split_holdout_count(&corpus, a.holdout_docs, a.word_fraction, seed)?
    } else {
        if a.seed.is_some() {
            run.seed = a.seed;
        }
        (corpus, Vec::new())
    };
    let docs = a.out.join("corpus.docs");
    let vocab = a.out.join("vocab.txt");
    write_atomic(&docs, |w| train.write_docs(w))?;
    write_atomic(&vocab, |w| train.write_vocab(w))?;
    run.output(docs);
    run.output(vocab);
    if !splits.is_empty() {
        let holdout = a.out.join("holdout.txt");
        write_atomic(&holdout, |w| write_holdout(&splits, w))?;
        run.output(holdout);
    }
    println!(
        "{} training documents, {} held out, {} words, {} tokens",
        train.num_docs(),
        splits.len(),
        train.vocab_size(),
        train.token_total()
    );
    run.default_manifest = Some(a.out.join("manifest.json"));
    Ok(())
}

fn check_flags(model: &str, given: &[(&str, bool)], allowed: &[&str]) -> anyhow::Result<()> {
    for (name, present) in given {
        if *present && !allowed.contains(name) {
            return Err(usage(format!("--{name} does not apply to --model {model}")));
        }
    }
    Ok(())
}

pub fn train(a: &TrainArgs, run: &mut Run) -> anyhow::Result<()> {
    let given = [
        ("topics", a.topics.is_some()),
        ("start-topics", a.start_topics.is_some()),
        ("gamma", a.gamma.is_some()),
        ("walk-alpha", a.walk_alpha.is_some()),
        ("warmup", a.warmup.is_some()),
        ("refresh-every", a.refresh_every.is_some()),
        ("patience", a.patience.is_some()),
        ("iters", a.iters.is_some()),
        ("tol", a.tol.is_some()),
        ("sweeps", a.sweeps.is_some()),
        ("burn-in", a.burn_in.is_some()),
        ("beta", a.beta.is_some()),
        ("alpha0", a.alpha0.is_some()),
        ("fixed-alpha", a.fixed_alpha),
        ("activity-threshold", a.activity_threshold.is_some()),
        ("organic-norm", a.organic_norm.is_some()),
    ];
    let organic_norm = a
        .organic_norm
        .as_deref()
        .map(str::parse::<OrganicNorm>)
        .transpose()?;
    let corpus = load_corpus(run, &a.docs, &a.vocab)?;
    let seed = run.seed(a.seed);
    let (model, trace) = match a.model {
        ModelArg::Plsa => {
            check_flags("plsa", &given, &["topics", "iters", "tol"])?;
            let d = PlsaConfig::default();
            let cfg = PlsaConfig {
                topics: a.topics.unwrap_or(d.topics),
                max_iters: a.iters.unwrap_or(d.max_iters),
                tol: a.tol.unwrap_or(d.tol),
                seed,
                execution: run.exec,
            };
            if cfg.topics == 0 {
                return Err(usage("--topics must be at least 1"));
            }
            let fit = plsa::train(&corpus, &cfg);
            (TopicModel::from_plsa(&fit, corpus.token_total()), fit.trace)
        }
        ModelArg::Divplsa => {
            check_flags(
                "divplsa",
                &given,
                &[
                    "start-topics",
                    "gamma",
                    "walk-alpha",
                    "warmup",
                    "refresh-every",
                    "patience",
                    "iters",
                    "tol",
                    "activity-threshold",
                    "organic-norm",
                ],
            )?;
            let d = DivPlsaConfig::default();
            let cfg = DivPlsaConfig {
                start_topics: a.start_topics.unwrap_or(d.start_topics),
                walk_alpha: a.walk_alpha.unwrap_or(d.walk_alpha),
                gamma: a.gamma.unwrap_or(d.gamma),
                warmup_iters: a.warmup.unwrap_or(d.warmup_iters),
                refresh_every: a.refresh_every.unwrap_or(d.refresh_every),
                active_patience: a.patience.unwrap_or(d.active_patience),
                max_iters: a.iters.unwrap_or(d.max_iters),
                tol: a.tol.unwrap_or(d.tol),
                activity_threshold: a.activity_threshold.unwrap_or(d.activity_threshold),
                organic_norm: organic_norm.unwrap_or(d.organic_norm),
                seed,
                execution: run.exec,
                ..d
            };
            let fit = divplsa::train(&corpus, &cfg)?;
            if !fit.converged {
                warn!("stopped at the iteration cap before converging");
            }
            (TopicModel::from_divplsa(&fit, corpus.token_total()), fit.trace)
        }
        ModelArg::Lda => {
            check_flags(
                "lda",
                &given,
                &["topics", "sweeps", "burn-in", "beta", "alpha0", "fixed-alpha"],
            )?;
            let d = LdaConfig::default();
            let cfg = LdaConfig {
                topics: a.topics.unwrap_or(d.topics),
                sweeps: a.sweeps.unwrap_or(d.sweeps),
                burn_in: a.burn_in.unwrap_or(d.burn_in),
                seed,
                alpha0: a.alpha0.or(d.alpha0),
                beta: a.beta.unwrap_or(d.beta),
                optimize_alpha: !a.fixed_alpha,
                ..d
            };
            let fit = lda::train(&corpus, &cfg)?;
            let model = TopicModel::from_lda(&fit, cfg.sweeps);
            (model, fit.trace)
        }
        ModelArg::Divlda => {
            check_flags(
                "divlda",
                &given,
                &[
                    "start-topics",
                    "gamma",
                    "walk-alpha",
                    "warmup",
                    "refresh-every",
                    "patience",
                    "sweeps",
                    "beta",
                    "alpha0",
                    "fixed-alpha",
                    "organic-norm",
                ],
            )?;
            let d = DivLdaConfig::default();
            let cfg = DivLdaConfig {
                start_topics: a.start_topics.unwrap_or(d.start_topics),
                walk_alpha: a.walk_alpha.unwrap_or(d.walk_alpha),
                gamma: a.gamma.unwrap_or(d.gamma),
                warmup_sweeps: a.warmup.unwrap_or(d.warmup_sweeps),
                refresh_every: a.refresh_every.unwrap_or(d.refresh_every),
                active_patience: a.patience.unwrap_or(d.active_patience),
                total_sweeps: a.sweeps.unwrap_or(d.total_sweeps),
                seed,
                beta: a.beta.unwrap_or(d.beta),
                alpha0: a.alpha0.or(d.alpha0),
                optimize_alpha: !a.fixed_alpha,
                organic_norm: organic_norm.unwrap_or(d.organic_norm),
                ..d
            };
            let fit = divlda::train(&corpus, &cfg)?;
            if !fit.converged {
                warn!("stopped at the sweep cap before converging");
            }
            (TopicModel::from_divlda(&fit), fit.trace)
        }
    };
    create_dir(&a.out)?;
    let model_path = a.out.join("model.txt");
    let trace_path = a.out.join("trace.csv");
    write_atomic(&model_path, |w| model.write(w))?;
    write_atomic(&trace_path, |w| trace.write_csv(w))?;
    run.output(model_path);
    run.output(trace_path);
    println!(
        "{}: {} topics after {} iterations, log-likelihood {}",
        model.kind,
        model.num_topics(),
        model.iteration,
        model.likelihood
    );
    run.default_manifest = Some(a.out.join("manifest.json"));
    Ok(())
}

fn parse_list(flag: &str, raw: Option<&str>, default: f64) -> anyhow::Result<Vec<f64>> {
    let Some(raw) = raw else { return Ok(vec![default]) };
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("--{flag}: '{s}' is not a number")))
        })
        .collect()
}

pub fn select(a: &SelectArgs, run: &mut Run) -> anyhow::Result<()> {
    let model = load_model(run, &a.model)?;
    let vocab = load_vocab(run, a.vocab.as_deref(), &model)?;
    if a.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let variant: DivRankVariant = a.variant.as_deref().map(str::parse).transpose()?.unwrap_or_default();
    let defaults = DivRankConfig::default();
    let (lambdas, alphas) = match a.method {
        Method::Topk => {
            if a.lambda.is_some() || a.alpha_dr.is_some() || a.variant.is_some() {
                return Err(usage("--lambda, --alpha-dr and --variant do not apply to --method topk"));
            }
            (vec![f64::NAN], vec![f64::NAN])
        }
        Method::Mmr => {
            if a.alpha_dr.is_some() || a.variant.is_some() {
                return Err(usage("--alpha-dr and --variant do not apply to --method mmr"));
            }
            (parse_list("lambda", a.lambda.as_deref(), 0.5)?, vec![f64::NAN])
        }
        Method::Divrank => (
            parse_list("lambda", a.lambda.as_deref(), defaults.lambda)?,
            parse_list("alpha-dr", a.alpha_dr.as_deref(), defaults.alpha)?,
        ),
    };
    if !a.grid && (lambdas.len() > 1 || alphas.len() > 1) {
        return Err(usage("several --lambda/--alpha-dr values need --grid"));
    }
    if a.grid {
        create_dir(&a.out)?;
    }
    for &lambda in &lambdas {
        for &alpha in &alphas {
            let ranking: TopicRanking = match a.method {
                Method::Topk => selection::top_k_by_size(&model, a.k),
                Method::Mmr => selection::mmr_select(&model, a.k, lambda)?,
                Method::Divrank => {
                    let cfg = DivRankConfig {
                        alpha,
                        lambda,
                        variant,
                        ..defaults
                    };
                    selection::divrank_select(&model, a.k, &cfg)?
                }
            };
            if ranking.truncated {
                warn!("the model has only {} topics, fewer than --k {}", model.num_topics(), a.k);
            }
            let rows = tables::ranking_rows(&model, &ranking, vocab.as_ref())?;
            let path = if a.grid {
                let mut name = String::from("ranking");
                if !lambda.is_nan() {
                    name.push_str(&format!("_lambda-{lambda}"));
                }
                if !alpha.is_nan() {
                    name.push_str(&format!("_alpha-dr-{alpha}"));
                }
                a.out.join(name + ".csv")
            } else {
                a.out.clone()
            };
            tables::write_rows(&path, &rows)?;
            run.output(path);
        }
    }
    run.default_manifest = Some(if a.grid {
        a.out.join("manifest.json")
    } else {
        sidecar(&a.out)
    });
    Ok(())
}

pub fn eval(a: &EvalArgs, run: &mut Run) -> anyhow::Result<()> {
    let smoothing: PmiSmoothing = a.smoothing.parse()?;
    match a.metric {
        Metric::Pmi if a.holdout.is_some() => return Err(usage("--holdout applies to --metric perplexity")),
        Metric::Pmi if a.reference.is_none() => return Err(usage("--metric pmi needs --reference <docs file>")),
        Metric::Perplexity if a.reference.is_some() || a.reference_vocab.is_some() => {
            return Err(usage("--reference applies to --metric pmi"))
        }
        Metric::Perplexity if a.holdout.is_none() => {
            return Err(usage("--metric perplexity needs --holdout <split file>"))
        }
        _ => {}
    }
    let model = load_model(run, &a.model)?;
    let model = match &a.selection {
        Some(path) => {
            run.input(path);
            let ranking = tables::read_ranking(path)?;
            selection::restrict_model(&model, &ranking)?
        }
        None => model,
    };
    let fold = FoldInConfig {
        iters: a.fold_in_iters,
        ..FoldInConfig::default()
    };
    let mut report = EvalReport {
        k_used: model.num_topics(),
        per_topic_pmi: Vec::new(),
        mean_pmi: None,
        perplexity: None,
        floored_tokens: 0,
        top_n: a.top_n,
        smoothing,
        fold_in_iters: a.fold_in_iters,
    };
    match a.metric {
        Metric::Pmi => {
            let docs = a.reference.as_ref().expect("checked above");
            run.input(docs);
            let vocab = match &a.reference_vocab {
                Some(p) => {
                    run.input(p);
                    Vocabulary::load(p)?
                }
                None => Vocabulary::anonymous(model.vocab_size()),
            };
            let file = File::open(docs).with_context(|| format!("cannot open {}", docs.display()))?;
            let reference = read_bow(BufReader::new(file), vocab, docs)?;
            let pmi = evaluation::pmi_coherence(&model.phi, &reference, a.top_n, smoothing)?;
            if pmi.smoothed_pairs > 0 {
                info!("{} word pairs needed smoothing", pmi.smoothed_pairs);
            }
            report.per_topic_pmi = pmi.per_topic;
            report.mean_pmi = Some(pmi.mean);
        }
        Metric::Perplexity => {
            let path = a.holdout.as_ref().expect("checked above");
            run.input(path);
            let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            let splits = read_holdout(BufReader::new(file), model.vocab_size(), path)?;
            let p = evaluation::perplexity(&model.phi, &splits, fold, run.exec)?;
            report.perplexity = Some(p.perplexity);
            report.floored_tokens = p.floored_tokens;
        }
    }
    write_atomic(&a.out, |w| report.write_csv(w))?;
    run.output(a.out.clone());
    print_report(&model, &report, &mut io::stdout().lock())?;
    run.default_manifest = Some(sidecar(&a.out));
    Ok(())
}

fn print_report(model: &TopicModel, r: &EvalReport, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "topics used      {}", r.k_used)?;
    if let Some(p) = r.perplexity {
        writeln!(out, "perplexity       {p:.4}")?;
        writeln!(out, "floored tokens   {}", r.floored_tokens)?;
    }
    if let Some(m) = r.mean_pmi {
        writeln!(out, "mean PMI         {m:.4}  (top {}, {})", r.top_n, r.smoothing)?;
        writeln!(out, "{:>8}  {:>10}  {:>10}", "topic", "proportion", "pmi")?;
        let props = model.proportions();
        for (i, p) in r.per_topic_pmi.iter().enumerate() {
            writeln!(out, "{:>8}  {:>10.4}  {:>10.4}", model.topic_ids[i], props[i], p)?;
        }
    }
    Ok(())
}

pub fn export_topics(a: &ExportTopicsArgs, run: &mut Run) -> anyhow::Result<()> {
    if a.top_words == 0 {
        return Err(usage("--top-words must be at least 1"));
    }
    let model = load_model(run, &a.model)?;
    let vocab = load_vocab(run, a.vocab.as_deref(), &model)?;
    let ranking = match &a.ranking {
        Some(path) => {
            run.input(path);
            tables::read_ranking(path)?
        }
        None => selection::top_k_by_size(&model, model.num_topics()),
    };
    let proportions = model.proportions();
    let rows = ranking
        .topics
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let row = model
                .position(t.topic_id)
                .ok_or(divtopic::Error::InactiveTopic(t.topic_id))?;
            Ok(TopicRow {
                rank: i + 1,
                topic_id: t.topic_id,
                proportion: proportions[row],
                words: tables::words_of(&model, row, a.top_words, vocab.as_ref()),
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    tables::write_rows(&a.out, &rows)?;
    run.output(a.out.clone());
    run.default_manifest = Some(sidecar(&a.out));
    Ok(())
}

pub fn export_network(a: &ExportNetworkArgs, run: &mut Run) -> anyhow::Result<()> {
    let model = load_model(run, &a.model)?;
    let vocab = load_vocab(run, a.vocab.as_deref(), &model)?;
    let k = model.num_topics();
    let sim = similarity_matrix(&model.phi, &vec![true; k])?;
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if sim[(i, j)] > a.min_weight {
                edges.push(EdgeRow {
                    src: model.topic_ids[i],
                    dst: model.topic_ids[j],
                    weight: sim[(i, j)],
                });
            }
        }
    }
    let nodes: Vec<NodeRow> = (0..k)
        .map(|i| NodeRow {
            topic_id: model.topic_ids[i],
            size: model.sizes[i],
            words: tables::words_of(&model, i, 10, vocab.as_ref()),
        })
        .collect();
    create_dir(&a.out)?;
    let edge_path = a.out.join("edges.csv");
    let node_path = a.out.join("nodes.csv");
    tables::write_rows(&edge_path, &edges)?;
    tables::write_rows(&node_path, &nodes)?;
    run.output(edge_path);
    run.output(node_path);
    run.default_manifest = Some(a.out.join("manifest.json"));
    Ok(())
}

pub fn report(a: &ReportArgs, run: &mut Run) -> anyhow::Result<()> {
    run.input(&a.trace);
    let file = File::open(&a.trace).with_context(|| format!("cannot open {}", a.trace.display()))?;
    let trace = Trace::read_csv(BufReader::new(file), &a.trace)?;
    if trace.rows.is_empty() {
        anyhow::bail!("{}: trace has no rows", a.trace.display());
    }
    match &a.out {
        Some(path) => {
            write_atomic(path, |w| trace.write_csv(w))?;
            run.output(path.clone());
            run.default_manifest = Some(sidecar(path));
        }
        None => trace.write_csv(io::stdout().lock())?,
    }
    let last = trace.last().expect("non-empty");
    info!(
        "{} rows, final iteration {}, active topics {}",
        trace.rows.len(),
        last.iteration,
        last.active_count
    );
    Ok(())
}
