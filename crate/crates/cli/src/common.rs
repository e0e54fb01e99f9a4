use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use light_core::agents::{EmbedRanker, EmbeddingModel, IrRanker, RandomRanker, Ranker, TfIdf};
use light_core::data::{load_dataset, Dataset};
use light_core::episode::{make_examples, ExampleOptions, Split, TaskKind};
use light_core::eval::speech_pool;
use light_core::exec::Exec;
use light_core::world::{EntityId, EntityKind, WorldGraph};

use crate::DEFAULT_SEED;

/// A bad combination of arguments that clap cannot express. Exits with 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

/// The seed to use, announcing the default on stderr so runs stay
/// reproducible from their output.
pub fn seed_or_default(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        eprintln!("seed: {DEFAULT_SEED} (default)");
        DEFAULT_SEED
    })
}

/// Accept either a dataset root or the manifest file itself.
pub fn manifest_path(data: &Path) -> PathBuf {
    if data.is_dir() {
        data.join("manifest.json")
    } else {
        data.to_owned()
    }
}

pub fn load(data: &Path, exec: Exec) -> Result<Dataset> {
    let manifest = manifest_path(data);
    let ds = load_dataset(&manifest, exec).with_context(|| format!("loading dataset {}", manifest.display()))?;
    if !ds.quarantined.is_empty() {
        eprintln!("warning: {} episode(s) quarantined (failed replay)", ds.quarantined.len());
    }
    Ok(ds)
}

pub fn read_world(path: &Path) -> Result<WorldGraph> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading world {}", path.display()))?;
    WorldGraph::from_json(&text).with_context(|| format!("parsing world {}", path.display()))
}

/// A character by id or by (case-insensitive) name.
pub fn find_character(world: &WorldGraph, wanted: &str) -> Result<EntityId> {
    let id = EntityId::new(wanted);
    if world.kind(&id).ok() == Some(EntityKind::Character) {
        return Ok(id);
    }
    let matches: Vec<&EntityId> = world
        .ids()
        .filter(|i| world.kind(i).ok() == Some(EntityKind::Character))
        .filter(|i| world.name(i).is_ok_and(|n| n.eq_ignore_ascii_case(wanted.trim())))
        .collect();
    match matches.as_slice() {
        [one] => Ok((*one).clone()),
        [] => bail!("no character `{wanted}` in this world"),
        many => {
            let ids: Vec<&str> = many.iter().map(|i| i.as_str()).collect();
            bail!("`{wanted}` names several characters ({}); use an id", ids.join(", "))
        }
    }
}

/// `"none"` or a whole number of seconds.
pub fn parse_timeout(flag: &str, value: &str) -> Result<Option<Duration>> {
    if value.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    match value.parse::<f64>() {
        Ok(s) if s > 0.0 && s.is_finite() => Ok(Some(Duration::from_secs_f64(s))),
        _ => usage(format!("invalid value '{value}' for '--{flag}': expected seconds or \"none\"")),
    }
}

/// Gold utterances of the training split, the pool agents pick from.
pub fn train_utterances(ds: &Dataset) -> Vec<String> {
    let examples = make_examples(&ds.split(Split::Train), TaskKind::Speech, ExampleOptions::default());
    speech_pool(&examples)
}

/// `random`, `ir` (fit on the dataset's train speech examples) or the path
/// of a saved embedding model.
pub fn build_ranker(spec: &str, data: Option<&Dataset>) -> Result<Arc<dyn Ranker>> {
    match spec {
        "random" => Ok(Arc::new(RandomRanker)),
        "ir" => {
            let Some(ds) = data else {
                return usage("the ir ranker needs --data (or LIGHT_DATA_DIR)");
            };
            let examples = make_examples(&ds.split(Split::Train), TaskKind::Speech, ExampleOptions::default());
            let docs: Vec<&str> =
                examples.iter().flat_map(|e| [e.context.flat_text.as_str(), e.label.as_str()]).collect();
            let stats = TfIdf::fit(docs).context("fitting tf-idf on the train split")?;
            Ok(Arc::new(IrRanker::new(stats)))
        }
        path => {
            let path = Path::new(path);
            if !path.exists() {
                return usage(format!("unknown model `{}`: expected random, ir or a model file", path.display()));
            }
            let model = EmbeddingModel::load(path).with_context(|| format!("loading model {}", path.display()))?;
            Ok(Arc::new(EmbedRanker::new(model)))
        }
    }
}
