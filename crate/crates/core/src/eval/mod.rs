//! Ranking metrics, unigram F1, dataset statistics and action/emote
//! co-occurrence.
//!
//! Every example draws from its own rng stream (`seed`, stream = example
//! index), so scoring in parallel never changes a report.

mod cooccur;
mod stats;

pub use cooccur::{action_root, cooccurrence, CooccurrenceMatrix, Cooccurrences};
pub use stats::{dataset_stats, dataset_stats_dir, SplitStats, StatsReport};

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::Emote;
use crate::agents::{AgentError, CandidateSet, Ranker};
use crate::episode::{CandidatePool, Example, Split, TaskKind};
use crate::exec::Exec;
use crate::text::{candidate_key, tokenize};

/// Distractors per speech example; the gold makes 20.
pub const DISTRACTORS: usize = 19;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("candidate pool has {distinct} distinct utterances; need at least {}", DISTRACTORS + 1)]
    PoolTooSmall { distinct: usize },
    #[error("example {index}: gold `{gold}` is not in its candidate pool")]
    GoldNotInPool { index: usize, gold: String },
    #[error("no examples to score")]
    NoExamples,
    #[error("split `{0}` is not in the manifest")]
    MissingSplit(Split),
    #[error("example {index}: {source}")]
    Agent { index: usize, source: AgentError },
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error("{path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    RAt1Of20,
    Accuracy,
    UnigramF1,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::RAt1Of20 => "r_at_1_of_20",
            MetricKind::Accuracy => "accuracy",
            MetricKind::UnigramF1 => "unigram_f1",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: TaskKind,
    pub metric: MetricKind,
    /// Fraction in [0, 1].
    pub value: f64,
    pub n: usize,
    pub seed: u64,
    /// `None` when the examples mix splits.
    pub split: Option<Split>,
}

fn example_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn common_split(examples: &[Example]) -> Option<Split> {
    let first = examples.first()?.split;
    examples.iter().all(|e| e.split == first).then_some(first)
}

fn report(task: TaskKind, metric: MetricKind, hits: &[bool], seed: u64, examples: &[Example]) -> MetricReport {
    let correct = hits.iter().filter(|h| **h).count();
    MetricReport { task, metric, value: correct as f64 / hits.len() as f64, n: hits.len(), seed, split: common_split(examples) }
}

fn collect_hits(results: Vec<Result<bool, EvalError>>) -> Result<Vec<bool>, EvalError> {
    results.into_iter().collect()
}

/// Distinct gold utterances of `examples`, first occurrence order.
pub fn speech_pool(examples: &[Example]) -> Vec<String> {
    let mut seen = HashSet::new();
    examples.iter().filter(|e| seen.insert(candidate_key(&e.label))).map(|e| e.label.clone()).collect()
}

/// The 20 candidates shown for one speech example: the gold plus 19
/// distractors drawn from `pool` without replacement, gold at a uniform
/// position. `pool` must be deduplicated and contain `pool[gold]`.
pub fn speech_candidates(pool: &[String], gold: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    // sample over the pool with the gold's slot removed
    let mut out: Vec<String> = sample(rng, pool.len() - 1, DISTRACTORS)
        .into_iter()
        .map(|i| pool[if i >= gold { i + 1 } else { i }].clone())
        .collect();
    out.insert(rng.gen_range(0..=DISTRACTORS), pool[gold].clone());
    out
}

/// R@1/20 against distractors sampled from `pool`.
pub fn eval_speech(ranker: &dyn Ranker, examples: &[Example], pool: &[String], seed: u64, exec: Exec) -> Result<MetricReport, EvalError> {
    if examples.is_empty() {
        return Err(EvalError::NoExamples);
    }
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut unique = Vec::new();
    for p in pool {
        if let Entry::Vacant(v) = index.entry(candidate_key(p)) {
            v.insert(unique.len());
            unique.push(p.clone());
        }
    }
    if unique.len() <= DISTRACTORS {
        return Err(EvalError::PoolTooSmall { distinct: unique.len() });
    }
    let golds = examples
        .iter()
        .enumerate()
        .map(|(i, e)| index.get(&candidate_key(&e.label)).copied().ok_or_else(|| EvalError::GoldNotInPool { index: i, gold: e.label.clone() }))
        .collect::<Result<Vec<usize>, _>>()?;
    let results = exec.map(examples, |i, e| {
        let mut rng = example_rng(seed, i);
        let items = speech_candidates(&unique, golds[i], &mut rng);
        score_one(ranker, i, &e.context.flat_text, items, e, TaskKind::Speech, &mut rng)
    });
    Ok(report(TaskKind::Speech, MetricKind::RAt1Of20, &collect_hits(results)?, seed, examples))
}

fn score_one(
    ranker: &dyn Ranker,
    index: usize,
    context: &str,
    items: Vec<String>,
    e: &Example,
    kind: TaskKind,
    rng: &mut ChaCha8Rng,
) -> Result<bool, EvalError> {
    let set = CandidateSet::new(items, kind).map_err(|source| EvalError::Agent { index, source })?;
    let scored = ranker.rank(context, &set, rng).map_err(|source| EvalError::Agent { index, source })?;
    Ok(candidate_key(&set.items()[scored.argmax_index]) == candidate_key(&e.label))
}

/// Accuracy over each example's valid-action pool.
pub fn eval_action(ranker: &dyn Ranker, examples: &[Example], seed: u64, exec: Exec) -> Result<MetricReport, EvalError> {
    if examples.is_empty() {
        return Err(EvalError::NoExamples);
    }
    let pools = action_pools(examples)?;
    let results = exec.map(examples, |i, e| {
        score_one(ranker, i, &e.context.flat_text, pools[i].clone(), e, TaskKind::Action, &mut example_rng(seed, i))
    });
    Ok(report(TaskKind::Action, MetricKind::Accuracy, &collect_hits(results)?, seed, examples))
}

fn action_pools(examples: &[Example]) -> Result<Vec<Vec<String>>, EvalError> {
    examples
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let actions = match &e.pool {
                CandidatePool::ValidActions { actions } => actions.clone(),
                _ => Vec::new(),
            };
            let key = candidate_key(&e.label);
            if actions.iter().any(|a| candidate_key(a) == key) {
                Ok(actions)
            } else {
                Err(EvalError::GoldNotInPool { index, gold: e.label.clone() })
            }
        })
        .collect()
}

/// Accuracy of a uniform guess over each example's pool, `mean(1/|pool|)`.
pub fn expected_random_action_accuracy(examples: &[Example]) -> Result<f64, EvalError> {
    if examples.is_empty() {
        return Err(EvalError::NoExamples);
    }
    let pools = action_pools(examples)?;
    Ok(pools.iter().map(|p| 1.0 / p.len() as f64).sum::<f64>() / pools.len() as f64)
}

/// Accuracy over the fixed 22 emotes.
pub fn eval_emote(ranker: &dyn Ranker, examples: &[Example], seed: u64, exec: Exec) -> Result<MetricReport, EvalError> {
    if examples.is_empty() {
        return Err(EvalError::NoExamples);
    }
    let emotes: Vec<String> = Emote::ALL.iter().map(|e| e.as_str().to_owned()).collect();
    let results = exec.map(examples, |i, e| {
        score_one(ranker, i, &e.context.flat_text, emotes.clone(), e, TaskKind::Emote, &mut example_rng(seed, i))
    });
    Ok(report(TaskKind::Emote, MetricKind::Accuracy, &collect_hits(results)?, seed, examples))
}

/// Harmonic mean of token-multiset precision and recall; 0 when either
/// side has no tokens.
pub fn unigram_f1(prediction: &str, gold: &str) -> f64 {
    let count = |t: &str| {
        let mut m: BTreeMap<String, usize> = BTreeMap::new();
        for tok in tokenize(t) {
            *m.entry(tok).or_default() += 1;
        }
        m
    };
    let (p, g) = (count(prediction), count(gold));
    let (np, ng): (usize, usize) = (p.values().sum(), g.values().sum());
    if np == 0 || ng == 0 {
        return 0.0;
    }
    let overlap: usize = p.iter().map(|(t, c)| (*c).min(*g.get(t).unwrap_or(&0))).sum();
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / np as f64;
    let recall = overlap as f64 / ng as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Mean unigram F1 of free-text predictions against example labels.
pub fn eval_unigram_f1(predictions: &[String], examples: &[Example], seed: u64) -> Result<MetricReport, EvalError> {
    if examples.is_empty() {
        return Err(EvalError::NoExamples);
    }
    assert_eq!(predictions.len(), examples.len(), "one prediction per example");
    let total: f64 = predictions.iter().zip(examples).map(|(p, e)| unigram_f1(p, &e.label)).sum();
    Ok(MetricReport {
        task: TaskKind::Speech,
        metric: MetricKind::UnigramF1,
        value: total / examples.len() as f64,
        n: examples.len(),
        seed,
        split: common_split(examples),
    })
}

pub const METRICS_TSV_HEADER: &str = "split\ttask\tmetric\tvalue\tn\tseed";

pub fn metrics_tsv(reports: &[MetricReport]) -> String {
    let mut out = format!("{METRICS_TSV_HEADER}\n");
    for r in reports {
        let split = r.split.map(|s| s.as_str()).unwrap_or("mixed");
        out.push_str(&format!("{split}\t{}\t{}\t{:.6}\t{}\t{}\n", r.task.as_str(), r.metric, r.value, r.n, r.seed));
    }
    out
}

/// Write `metrics.tsv` and `metrics.json` into `dir`.
pub fn write_reports(dir: &Path, reports: &[MetricReport]) -> Result<(), EvalError> {
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| EvalError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let tsv = dir.join("metrics.tsv");
    std::fs::write(&tsv, metrics_tsv(reports)).map_err(io(&tsv))?;
    let json = dir.join("metrics.json");
    let body = serde_json::to_string_pretty(reports).expect("reports serialize") + "\n";
    std::fs::write(&json, body).map_err(io(&json))
}
