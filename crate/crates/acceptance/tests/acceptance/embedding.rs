//! Embedding ranker: training on the task where the gold reply repeats the
//! context, a finite-difference gradient check, and the candidate cache.

use light_acceptance::Outcome;
use light_core::agents::{
    embed_rank, gradient_check, train_embedding, AgentError, CandidateCache, CandidateSet, EmbeddingModel, Hyperparams,
    ScoredCandidates, GRADIENT_CHECK_STEP,
};
use light_core::episode::TaskKind;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VOCAB: usize = 200;
const DIM: usize = 16;
const PAIRS: usize = 2_000;
const HELD_OUT: usize = 500;
const EPOCHS: usize = 20;

fn words() -> Vec<String> {
    (0..VOCAB).map(|i| format!("w{i:03}")).collect()
}

fn text(rng: &mut ChaCha8Rng, words: &[String]) -> String {
    let n = rng.gen_range(3..=6);
    (0..n).map(|_| words[rng.gen_range(0..words.len())].as_str()).collect::<Vec<_>>().join(" ")
}

/// Distinct texts, each its own gold.
fn echo_texts(seed: u64, n: usize) -> Vec<String> {
    let words = words();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let t = text(&mut rng, &words);
        if seen.insert(t.clone()) {
            out.push(t);
        }
    }
    out
}

/// Gold plus 19 other held-out texts, shuffled.
fn candidate_sets(texts: &[String], seed: u64) -> Vec<(usize, CandidateSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..texts.len())
        .map(|i| {
            let mut others: Vec<&String> = texts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, t)| t).collect();
            others.shuffle(&mut rng);
            let mut items: Vec<String> = others[..19].iter().map(|t| (*t).clone()).collect();
            items.push(texts[i].clone());
            items.shuffle(&mut rng);
            (i, CandidateSet::new(items, TaskKind::Speech).expect("distinct texts"))
        })
        .collect()
}

fn recall(model: &EmbeddingModel, texts: &[String], sets: &[(usize, CandidateSet)]) -> f64 {
    let hits = sets
        .iter()
        .filter(|(i, c)| c.items()[embed_rank(model, &texts[*i], c, None).argmax_index] == texts[*i])
        .count();
    hits as f64 / sets.len() as f64
}

fn gradient_error(model: &EmbeddingModel, texts: &[String]) -> Result<f64, String> {
    let words = words();
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch: Vec<(String, String)> = (0..8)
            .map(|i| (texts[(seed as usize * 8 + i) % texts.len()].clone(), text(&mut rng, &words)))
            .collect();
        match gradient_check(model, &batch, GRADIENT_CHECK_STEP) {
            Ok(e) => return Ok(e),
            // a margin term sits on the hinge; draw another batch
            Err(AgentError::KinkDetected { .. }) => continue,
            Err(e) => return Err(e.to_string()),
        }
    }
    Err("every sampled batch sat on a hinge".into())
}

pub fn training() -> Outcome {
    let texts = echo_texts(1, PAIRS + HELD_OUT);
    let (train, held) = texts.split_at(PAIRS);
    let pairs: Vec<(String, String)> = train.iter().map(|t| (t.clone(), t.clone())).collect();
    let hp = Hyperparams { dim: DIM, epochs: EPOCHS, ..Hyperparams::default() };
    let report = train_embedding(&pairs, &hp).map_err(|e| e.to_string())?;
    let model = &report.model;
    if model.vocab().len() != VOCAB || model.dim() != DIM {
        return Err(format!("vocab {} dim {}", model.vocab().len(), model.dim()));
    }
    let sets = candidate_sets(held, 2);
    let before = recall(&EmbeddingModel::init(model.vocab().to_vec(), hp.clone()), held, &sets);
    let after = recall(model, held, &sets);
    let grad = gradient_error(model, train)?;
    let summary = format!(
        "held-out R@1/20 {:.1}% after {EPOCHS} epochs ({:.1}% at init), loss {:.4} -> {:.4}, gradient error {grad:.1e}",
        100.0 * after,
        100.0 * before,
        report.initial_loss,
        report.final_loss
    );
    if after < 0.95 || report.final_loss >= report.initial_loss || grad >= 1e-4 {
        return Err(summary);
    }
    Ok(summary)
}

pub fn cache() -> Outcome {
    let texts = echo_texts(5, 600);
    let pairs: Vec<(String, String)> = texts.iter().map(|t| (t.clone(), t.clone())).collect();
    let hp = Hyperparams { dim: DIM, epochs: 3, ..Hyperparams::default() };
    let model = train_embedding(&pairs, &hp).map_err(|e| e.to_string())?.model;
    let cache = CandidateCache::build(&model, &texts);
    let bits = |s: &ScoredCandidates| s.scores.iter().map(|x| x.to_bits()).collect::<Vec<u64>>();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let queries = 1_000;
    for q in 0..queries {
        let items: Vec<String> = texts.choose_multiple(&mut rng, 20).cloned().collect();
        let c = CandidateSet::new(items, TaskKind::Speech).map_err(|e| e.to_string())?;
        // contexts are fresh text, so only the candidate side is cached
        let context = text(&mut rng, &words());
        let with = embed_rank(&model, &context, &c, Some(&cache));
        let without = embed_rank(&model, &context, &c, None);
        if with.argmax_index != without.argmax_index || bits(&with) != bits(&without) {
            return Err(format!("query {q}: cached scores differ"));
        }
    }
    Ok(format!("{queries} queries x 20 candidates bit-identical"))
}
