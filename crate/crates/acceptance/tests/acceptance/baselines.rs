//! Chance-level baselines: R@1/20 of the random ranker and random emote
//! accuracy, each over at least 20,000 examples.

use light_acceptance::Outcome;
use light_core::agents::RandomRanker;
use light_core::episode::{make_examples, ExampleOptions, TaskKind};
use light_core::eval::{eval_emote, eval_speech, speech_pool};
use light_core::exec::Exec;
use light_core::synth::synthetic_corpus;

const MIN_EXAMPLES: usize = 20_000;
const EPISODES: usize = 10_000;
const SEED: u64 = 17;

/// Reported value ± 0.6 points.
const SPEECH_BAND: (f64, f64) = (0.044, 0.056);
const EMOTE_BAND: (f64, f64) = (0.039, 0.051);

pub fn check() -> Outcome {
    let corpus = synthetic_corpus(SEED, EPISODES);
    let speech = make_examples(&corpus, TaskKind::Speech, ExampleOptions::default());
    let emote = make_examples(&corpus, TaskKind::Emote, ExampleOptions::default());
    if speech.len() < MIN_EXAMPLES || emote.len() < MIN_EXAMPLES {
        return Err(format!("only {} speech and {} emote examples", speech.len(), emote.len()));
    }
    let pool = speech_pool(&speech);
    let r = eval_speech(&RandomRanker, &speech, &pool, SEED, Exec::Parallel).map_err(|e| e.to_string())?;
    let e = eval_emote(&RandomRanker, &emote, SEED, Exec::Parallel).map_err(|e| e.to_string())?;
    let inside = |v: f64, (lo, hi): (f64, f64)| (lo..=hi).contains(&v);
    let summary = format!(
        "R@1/20 {:.2}% over {}, emote accuracy {:.2}% over {}",
        100.0 * r.value,
        r.n,
        100.0 * e.value,
        e.n
    );
    if !inside(r.value, SPEECH_BAND) || !inside(e.value, EMOTE_BAND) {
        return Err(format!("{summary}; bands 5.0 ± 0.6 and 4.5 ± 0.6"));
    }
    Ok(summary)
}
