use std::collections::{BTreeMap, HashMap, HashSet};

use rand_chacha::ChaCha8Rng;

use super::{AgentError, CandidateSet, Ranker, ScoredCandidates};
use crate::text::tokenize;

/// Document frequencies over a training corpus.
///
/// Weight of token `t` in a text is `count(t) * ln(N / df(t))`; tokens never
/// seen in the corpus weigh 0.
#[derive(Clone, Debug)]
pub struct TfIdf {
    n_docs: usize,
    idf: HashMap<String, f64>,
}

impl TfIdf {
    pub fn fit<'a>(docs: impl IntoIterator<Item = &'a str>) -> Result<Self, AgentError> {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut n_docs = 0;
        for doc in docs {
            n_docs += 1;
            let unique: HashSet<String> = tokenize(doc).into_iter().collect();
            for t in unique {
                *df.entry(t).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(AgentError::EmptyVocabulary);
        }
        let n = n_docs as f64;
        let idf = df.into_iter().map(|(t, d)| (t, (n / d.max(1) as f64).ln())).collect();
        Ok(TfIdf { n_docs, idf })
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn vocab_size(&self) -> usize {
        self.idf.len()
    }

    pub fn idf(&self, token: &str) -> Option<f64> {
        self.idf.get(token).copied()
    }

    /// Sparse weighted vector, keyed in token order so sums are reproducible.
    pub fn vector(&self, text: &str) -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for t in tokenize(text) {
            if self.idf.contains_key(&t) {
                *tf.entry(t).or_default() += 1.0;
            }
        }
        tf.into_iter().map(|(t, c)| {
            let w = c * self.idf[&t];
            (t, w)
        })
        .filter(|(_, w)| *w != 0.0)
        .collect()
    }

    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        cosine(&self.vector(a), &self.vector(b))
    }
}

/// Cosine of two sparse vectors; 0 when either is empty. Summation walks
/// both maps in key order, so the result is symmetric bit for bit.
pub(crate) fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let norm = |v: &BTreeMap<String, f64>| v.values().map(|x| x * x).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let mut dot = 0.0;
    let (mut ia, mut ib) = (a.iter().peekable(), b.iter().peekable());
    while let (Some((ka, va)), Some((kb, vb))) = (ia.peek(), ib.peek()) {
        match ka.cmp(kb) {
            std::cmp::Ordering::Less => {
                ia.next();
            }
            std::cmp::Ordering::Greater => {
                ib.next();
            }
            std::cmp::Ordering::Equal => {
                dot += *va * *vb;
                ia.next();
                ib.next();
            }
        }
    }
    dot / (na * nb)
}

/// Information-retrieval baseline: TF-IDF cosine between context and
/// candidate.
#[derive(Clone, Debug)]
pub struct IrRanker {
    stats: TfIdf,
}

impl IrRanker {
    pub fn new(stats: TfIdf) -> Self {
        IrRanker { stats }
    }

    pub fn stats(&self) -> &TfIdf {
        &self.stats
    }
}

impl Ranker for IrRanker {
    fn name(&self) -> &str {
        "ir"
    }

    fn rank(&self, context: &str, candidates: &CandidateSet, _rng: &mut ChaCha8Rng) -> Result<ScoredCandidates, AgentError> {
        let ctx = self.stats.vector(context);
        let scores = candidates.items().iter().map(|c| cosine(&ctx, &self.stats.vector(c))).collect();
        Ok(ScoredCandidates::new(scores, candidates))
    }
}
