//! Dataset statistics. With the external release installed (its directory
//! in `LIGHT_RELEASE_DIR`), the train column must match the published
//! counts. The bundled fixtures are always tallied against a direct count of
//! the episode files.

use std::path::{Path, PathBuf};

use light_acceptance::Outcome;
use light_core::agents::{train_embedding, EmbedRanker, Hyperparams};
use light_core::data::{import_light, load_dataset, Dataset};
use light_core::episode::{make_examples, ExampleOptions, Split, TaskKind};
use light_core::eval::{dataset_stats, eval_speech, speech_pool};
use light_core::exec::Exec;
use light_core::fixtures::dataset_dir;
use serde_json::Value;

pub const RELEASE_ENV: &str = "LIGHT_RELEASE_DIR";

/// Train column: dialogues, utterances, emotes, actions.
const RELEASE_TRAIN: [usize; 4] = [8538, 110_877, 17_609, 20_256];

/// Published embedding-ranker R@1/20 on the seen test set, with the allowed
/// band for a reimplementation.
const RELEASE_EMBED: f64 = 0.538;
const RELEASE_EMBED_BAND: f64 = 0.05;

/// Counts read straight from the files the manifest lists.
fn tally(root: &Path, split: &str) -> Result<[usize; 4], String> {
    let read = |p: PathBuf| std::fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()));
    let manifest: Value = serde_json::from_str(&read(root.join("manifest.json"))?).map_err(|e| e.to_string())?;
    let files = manifest["splits"][split].as_array().cloned().unwrap_or_default();
    let mut counts = [files.len(), 0, 0, 0];
    for f in files {
        let text = read(root.join(f.as_str().ok_or("non-string path")?))?;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
            if v["type"] != "turn" {
                continue;
            }
            for (slot, key) in [(1, "utterance"), (2, "emote"), (3, "act")] {
                counts[slot] += usize::from(v.get(key).is_some_and(|x| !x.is_null()));
            }
        }
    }
    Ok(counts)
}

fn columns(ds: &Dataset, split: Split) -> Result<[usize; 4], String> {
    let r = dataset_stats(ds, &[split]).map_err(|e| e.to_string())?;
    let s = &r.splits[&split];
    Ok([s.dialogues, s.utterances, s.emotes, s.actions])
}

/// The release as a dataset: used as is when it has a manifest, imported
/// into `scratch` when it is the raw download.
fn release_dataset(dir: &Path, scratch: &Path) -> Result<Dataset, String> {
    let manifest = if dir.join("manifest.json").is_file() {
        dir.join("manifest.json")
    } else {
        import_light(dir, scratch).map_err(|e| e.to_string())?;
        scratch.join("manifest.json")
    };
    load_dataset(&manifest, Exec::Parallel).map_err(|e| e.to_string())
}

pub fn release_dir() -> Option<PathBuf> {
    std::env::var_os(RELEASE_ENV).map(PathBuf::from)
}

pub fn check() -> Outcome {
    let root = dataset_dir();
    let ds = load_dataset(&root.join("manifest.json"), Exec::Parallel).map_err(|e| e.to_string())?;
    if !ds.quarantined.is_empty() || !ds.report.errors.is_empty() {
        return Err(format!("bundled data has {} errors", ds.report.errors.len()));
    }
    let mut checked = Vec::new();
    for split in Split::ALL {
        let want = tally(&root, split.as_str())?;
        let got = columns(&ds, split)?;
        if got != want {
            return Err(format!("{split}: stats {got:?}, file tally {want:?}"));
        }
        checked.push(format!("{split} {want:?}"));
    }
    let fixture = format!("fixture tally matches ({})", checked.join(", "));
    let Some(dir) = release_dir() else {
        return Ok(format!("{fixture}; release not installed"));
    };
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let release = release_dataset(&dir, scratch.path())?;
    let got = columns(&release, Split::Train)?;
    if got != RELEASE_TRAIN {
        return Err(format!("release train column {got:?}, published {RELEASE_TRAIN:?}"));
    }
    Ok(format!("{fixture}; release train column {got:?} exact"))
}

/// Paper-scale embedding ranker, only with the release installed.
pub fn release_embedding(dir: &Path) -> Outcome {
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ds = release_dataset(dir, scratch.path())?;
    let opts = ExampleOptions::default();
    let train = make_examples(&ds.split(Split::Train), TaskKind::Speech, opts);
    let test = make_examples(&ds.split(Split::TestSeen), TaskKind::Speech, opts);
    let pairs: Vec<(String, String)> = train.iter().map(|e| (e.context.flat_text.clone(), e.label.clone())).collect();
    let hp = Hyperparams { epochs: 20, ..Hyperparams::default() };
    let model = train_embedding(&pairs, &hp).map_err(|e| e.to_string())?.model;
    let pool = speech_pool(&test);
    let ranker = EmbedRanker::new(model).with_cache(&pool);
    let r = eval_speech(&ranker, &test, &pool, 0, Exec::Parallel).map_err(|e| e.to_string())?;
    let summary = format!("test_seen R@1/20 {:.1}% over {} (published 53.8 ± 5)", 100.0 * r.value, r.n);
    if (r.value - RELEASE_EMBED).abs() > RELEASE_EMBED_BAND {
        return Err(summary);
    }
    Ok(summary)
}
