use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AgentError, CandidateSet, Ranker, ScoredCandidates};
use crate::text::{candidate_key, tokenize};
use crate::world::{EntityKind, WorldGraph};

/// Finite-difference step used by [`gradient_check`].
pub const GRADIENT_CHECK_STEP: f64 = 1e-5;

/// Margin terms closer to zero than this make the hinge non-differentiable
/// within a finite-difference step.
const KINK_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct Hyperparams {
    pub dim: usize,
    pub learning_rate: f64,
    pub margin: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Initial entries are uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams { dim: 16, learning_rate: 0.5, margin: 0.2, epochs: 10, batch_size: 32, seed: 0, init_scale: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhraseKind {
    Object,
    Character,
    Location,
    Action,
    Vocabulary,
}

impl PhraseKind {
    pub const ALL: [PhraseKind; 5] =
        [PhraseKind::Object, PhraseKind::Character, PhraseKind::Location, PhraseKind::Action, PhraseKind::Vocabulary];

    pub fn as_str(self) -> &'static str {
        match self {
            PhraseKind::Object => "object",
            PhraseKind::Character => "character",
            PhraseKind::Location => "location",
            PhraseKind::Action => "action",
            PhraseKind::Vocabulary => "vocabulary",
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        PhraseKind::ALL.get(c as usize).copied()
    }
}

impl fmt::Display for PhraseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhraseKind {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PhraseKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| AgentError::UnknownKind(s.to_owned()))
    }
}

/// Bag-of-words bi-encoder: a text is the mean of its token rows, and a
/// candidate's score is the dot product with the context.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    pub(crate) vocab: Vec<String>,
    pub(crate) index: HashMap<String, usize>,
    pub(crate) dim: usize,
    /// Row-major, `vocab.len() * dim`.
    pub(crate) matrix: Vec<f32>,
    pub(crate) hyperparams: Hyperparams,
    pub(crate) registry: Vec<(PhraseKind, String)>,
}

/// Token indices of a text plus its full token count, which includes
/// out-of-vocabulary tokens (they contribute zero vectors to the mean).
struct Bag {
    ids: Vec<usize>,
    len: usize,
}

impl EmbeddingModel {
    /// Seeded initialization over `vocab`.
    pub fn init(vocab: Vec<String>, hyperparams: Hyperparams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(hyperparams.seed);
        let s = hyperparams.init_scale;
        let matrix = (0..vocab.len() * hyperparams.dim).map(|_| rng.gen_range(-s..=s) as f32).collect();
        Self::from_parts(vocab, hyperparams.dim, matrix, hyperparams, Vec::new())
    }

    pub(crate) fn from_parts(
        vocab: Vec<String>,
        dim: usize,
        matrix: Vec<f32>,
        hyperparams: Hyperparams,
        registry: Vec<(PhraseKind, String)>,
    ) -> Self {
        let index = vocab.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        EmbeddingModel { vocab, index, dim, matrix, hyperparams, registry }
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    pub fn matrix(&self) -> &[f32] {
        &self.matrix
    }

    pub fn row(&self, token: &str) -> Option<&[f32]> {
        self.index.get(token).map(|&i| &self.matrix[i * self.dim..(i + 1) * self.dim])
    }

    pub fn registry(&self) -> &[(PhraseKind, String)] {
        &self.registry
    }

    /// Add a phrase for nearest-neighbour queries; duplicates are ignored.
    pub fn register(&mut self, kind: PhraseKind, phrase: &str) {
        let entry = (kind, phrase.to_owned());
        if !self.registry.contains(&entry) {
            self.registry.push(entry);
        }
    }

    /// Register entity names from `worlds`, the given action texts and every
    /// vocabulary token.
    pub fn register_defaults(&mut self, worlds: &[WorldGraph], actions: &[String]) {
        for w in worlds {
            for node in w.nodes() {
                let kind = match node.kind() {
                    EntityKind::Object => PhraseKind::Object,
                    EntityKind::Character => PhraseKind::Character,
                    EntityKind::Location => PhraseKind::Location,
                };
                self.register(kind, &crate::text::normalize_name(node.name()));
            }
        }
        for a in actions {
            self.register(PhraseKind::Action, a);
        }
        for t in self.vocab.clone() {
            self.register(PhraseKind::Vocabulary, &t);
        }
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f32) -> Self {
        let mut m = self.clone();
        m.matrix.iter_mut().for_each(|x| *x *= factor);
        m
    }

    fn bag(&self, text: &str) -> Bag {
        let tokens = tokenize(text);
        let ids = tokens.iter().filter_map(|t| self.index.get(t).copied()).collect();
        Bag { ids, len: tokens.len() }
    }

    /// Mean token embedding; the zero vector for a text with no tokens.
    pub fn embed(&self, text: &str) -> Vec<f64> {
        let bag = self.bag(text);
        let mut v = vec![0.0; self.dim];
        if bag.len == 0 {
            return v;
        }
        for &i in &bag.ids {
            for (acc, x) in v.iter_mut().zip(&self.matrix[i * self.dim..(i + 1) * self.dim]) {
                *acc += *x as f64;
            }
        }
        let n = bag.len as f64;
        v.iter_mut().for_each(|x| *x /= n);
        v
    }

    pub fn score(&self, context: &str, candidate: &str) -> f64 {
        dot(&self.embed(context), &self.embed(candidate))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Precomputed candidate embeddings keyed by text. Populate it up front; a
/// miss falls back to computing the embedding.
#[derive(Clone, Debug, Default)]
pub struct CandidateCache {
    vectors: HashMap<String, Vec<f64>>,
}

impl CandidateCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn build<'a>(model: &EmbeddingModel, texts: impl IntoIterator<Item = &'a String>) -> Self {
        let mut c = Self::new();
        for t in texts {
            c.vectors.entry(t.clone()).or_insert_with(|| model.embed(t));
        }
        c
    }

    pub fn get(&self, text: &str) -> Option<&[f64]> {
        self.vectors.get(text).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl EmbeddingModel {
    pub fn rank(&self, context: &str, candidates: &CandidateSet, cache: Option<&CandidateCache>) -> ScoredCandidates {
        let ctx = self.embed(context);
        let scores = candidates
            .items()
            .iter()
            .map(|c| match cache.and_then(|cache| cache.get(c)) {
                Some(v) => dot(&ctx, v),
                None => dot(&ctx, &self.embed(c)),
            })
            .collect();
        ScoredCandidates::new(scores, candidates)
    }
}

/// Dot-product ranking; with a cache the scores are bit-identical.
pub fn embed_rank(
    model: &EmbeddingModel,
    context: &str,
    candidates: &CandidateSet,
    cache: Option<&CandidateCache>,
) -> ScoredCandidates {
    model.rank(context, candidates, cache)
}

/// [`Ranker`] over an embedding model with an optional candidate cache.
#[derive(Clone, Debug)]
pub struct EmbedRanker {
    pub model: EmbeddingModel,
    pub cache: Option<CandidateCache>,
}

impl EmbedRanker {
    pub fn new(model: EmbeddingModel) -> Self {
        EmbedRanker { model, cache: None }
    }

    pub fn with_cache<'a>(mut self, texts: impl IntoIterator<Item = &'a String>) -> Self {
        self.cache = Some(CandidateCache::build(&self.model, texts));
        self
    }
}

impl Ranker for EmbedRanker {
    fn name(&self) -> &str {
        "embed"
    }

    fn rank(&self, context: &str, candidates: &CandidateSet, _rng: &mut ChaCha8Rng) -> Result<ScoredCandidates, AgentError> {
        Ok(self.model.rank(context, candidates, self.cache.as_ref()))
    }
}

/// Top `k` registered phrases of `kind` by dot product with `query`,
/// descending, ties broken by text.
pub fn nearest_neighbors(model: &EmbeddingModel, query: &str, k: usize, kind: PhraseKind) -> Vec<(String, f64)> {
    if k == 0 {
        return Vec::new();
    }
    let q = model.embed(query);
    let mut scored: Vec<(String, f64)> = model
        .registry
        .iter()
        .filter(|(kd, _)| *kd == kind)
        .map(|(_, p)| (p.clone(), dot(&q, &model.embed(p))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

/// Round-robin merge of several training sets, one pair from each in turn.
pub fn interleave_uniform(sets: &[Vec<(String, String)>]) -> Vec<(String, String)> {
    let longest = sets.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = Vec::with_capacity(sets.iter().map(Vec::len).sum());
    for i in 0..longest {
        for s in sets {
            if let Some(p) = s.get(i) {
                out.push(p.clone());
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub model: EmbeddingModel,
    /// Loss over the whole training set before the first update.
    pub initial_loss: f64,
    /// Mean minibatch loss seen during each epoch.
    pub epoch_losses: Vec<f64>,
    /// Loss over the whole training set after training.
    pub final_loss: f64,
}

struct Pair {
    ctx: Bag,
    gold: Bag,
    key: String,
}

/// Ranking loss of one batch and, optionally, its gradient per row.
///
/// `loss = (1/B) sum_i sum_{j != i} max(0, margin - s(i,i) + s(i,j))` where
/// `s(i,j)` scores context `i` against gold `j`; golds with the same text as
/// gold `i` are not negatives. Returns the smallest |margin term| as well.
fn batch_loss(
    w: &[f64],
    dim: usize,
    margin: f64,
    batch: &[&Pair],
    grads: Option<&mut BTreeMap<usize, Vec<f64>>>,
) -> (f64, f64) {
    let mean = |bag: &Bag| {
        let mut v = vec![0.0; dim];
        if bag.len > 0 {
            for &i in &bag.ids {
                for (acc, x) in v.iter_mut().zip(&w[i * dim..(i + 1) * dim]) {
                    *acc += x;
                }
            }
            v.iter_mut().for_each(|x| *x /= bag.len as f64);
        }
        v
    };
    let us: Vec<Vec<f64>> = batch.iter().map(|p| mean(&p.ctx)).collect();
    let vs: Vec<Vec<f64>> = batch.iter().map(|p| mean(&p.gold)).collect();
    let b = batch.len() as f64;
    let mut loss = 0.0;
    let mut closest = f64::INFINITY;
    let mut gu = vec![vec![0.0; dim]; batch.len()];
    let mut gv = vec![vec![0.0; dim]; batch.len()];
    for i in 0..batch.len() {
        let pos = dot(&us[i], &vs[i]);
        for j in 0..batch.len() {
            if j == i || batch[j].key == batch[i].key {
                continue;
            }
            let z = margin - pos + dot(&us[i], &vs[j]);
            closest = closest.min(z.abs());
            if z <= 0.0 {
                continue;
            }
            loss += z;
            for d in 0..dim {
                gu[i][d] += vs[j][d] - vs[i][d];
                gv[j][d] += us[i][d];
                gv[i][d] -= us[i][d];
            }
        }
    }
    if let Some(grads) = grads {
        let mut spread = |bag: &Bag, g: &[f64]| {
            if bag.len == 0 {
                return;
            }
            let scale = 1.0 / (bag.len as f64 * b);
            for &t in &bag.ids {
                let row = grads.entry(t).or_insert_with(|| vec![0.0; dim]);
                for d in 0..dim {
                    row[d] += g[d] * scale;
                }
            }
        };
        for (i, p) in batch.iter().enumerate() {
            spread(&p.ctx, &gu[i]);
            spread(&p.gold, &gv[i]);
        }
    }
    (loss / b, closest)
}

fn make_pairs(model: &EmbeddingModel, pairs: &[(String, String)]) -> Vec<Pair> {
    pairs
        .iter()
        .map(|(c, g)| Pair { ctx: model.bag(c), gold: model.bag(g), key: candidate_key(g) })
        .collect()
}

fn dataset_loss(w: &[f64], hp: &Hyperparams, pairs: &[Pair]) -> f64 {
    let chunks: Vec<Vec<&Pair>> = pairs.chunks(hp.batch_size.max(1)).map(|c| c.iter().collect()).collect();
    chunks.iter().map(|c| batch_loss(w, hp.dim, hp.margin, c, None).0).sum::<f64>() / chunks.len() as f64
}

/// Train by plain SGD with in-batch negatives. Fully determined by the data
/// and `hp.seed`.
pub fn train_embedding(pairs: &[(String, String)], hp: &Hyperparams) -> Result<TrainReport, AgentError> {
    if pairs.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let vocab: BTreeSet<String> = pairs.iter().flat_map(|(c, g)| tokenize(c).into_iter().chain(tokenize(g))).collect();
    if vocab.is_empty() {
        return Err(AgentError::EmptyVocabulary);
    }
    let mut model = EmbeddingModel::init(vocab.into_iter().collect(), hp.clone());
    let data = make_pairs(&model, pairs);
    let mut w: Vec<f64> = model.matrix.iter().map(|&x| x as f64).collect();
    // shuffling draws from its own stream of the same seed
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    rng.set_stream(1);

    let initial_loss = dataset_loss(&w, hp, &data);
    if !initial_loss.is_finite() {
        return Err(AgentError::NonFiniteLoss { epoch: 0 });
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(hp.epochs);
    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(hp.batch_size.max(1)) {
            let batch: Vec<&Pair> = chunk.iter().map(|&i| &data[i]).collect();
            let mut grads = BTreeMap::new();
            let (loss, _) = batch_loss(&w, hp.dim, hp.margin, &batch, Some(&mut grads));
            if !loss.is_finite() {
                return Err(AgentError::NonFiniteLoss { epoch });
            }
            total += loss;
            batches += 1;
            for (row, g) in grads {
                for d in 0..hp.dim {
                    w[row * hp.dim + d] -= hp.learning_rate * g[d];
                }
            }
        }
        let mean = total / batches as f64;
        if !mean.is_finite() || w.iter().any(|x| !x.is_finite()) {
            return Err(AgentError::NonFiniteLoss { epoch });
        }
        epoch_losses.push(mean);
    }
    model.matrix = w.iter().map(|&x| x as f32).collect();
    let final_w: Vec<f64> = model.matrix.iter().map(|&x| x as f64).collect();
    let final_loss = dataset_loss(&final_w, hp, &data);
    Ok(TrainReport { model, initial_loss, epoch_losses, final_loss })
}

/// Largest relative error between the analytic ranking-loss gradient and
/// central differences with step `step`, over every entry of every row the
/// batch touches. Relative error is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn gradient_check(model: &EmbeddingModel, batch: &[(String, String)], step: f64) -> Result<f64, AgentError> {
    if batch.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let hp = &model.hyperparams;
    let data = make_pairs(model, batch);
    let refs: Vec<&Pair> = data.iter().collect();
    let mut w: Vec<f64> = model.matrix.iter().map(|&x| x as f64).collect();
    let mut grads = BTreeMap::new();
    let (_, closest) = batch_loss(&w, model.dim, hp.margin, &refs, Some(&mut grads));
    if closest < KINK_TOLERANCE {
        return Err(AgentError::KinkDetected { distance: closest });
    }
    let rows: BTreeSet<usize> = data.iter().flat_map(|p| p.ctx.ids.iter().chain(&p.gold.ids).copied()).collect();
    let mut worst: f64 = 0.0;
    for row in rows {
        for d in 0..model.dim {
            let k = row * model.dim + d;
            let orig = w[k];
            w[k] = orig + step;
            let up = batch_loss(&w, model.dim, hp.margin, &refs, None).0;
            w[k] = orig - step;
            let down = batch_loss(&w, model.dim, hp.margin, &refs, None).0;
            w[k] = orig;
            let numeric = (up - down) / (2.0 * step);
            let analytic = grads.get(&row).map(|g| g[d]).unwrap_or(0.0);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
