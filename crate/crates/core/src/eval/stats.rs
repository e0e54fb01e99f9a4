use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::data::{load_dataset, Dataset};
use crate::episode::{EpisodeLog, Split};
use crate::exec::Exec;
use crate::text::{normalize_name, tokenize};
use crate::world::Node;

/// One column of the dataset statistics table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    /// Distinct normalized names over the episodes' initial worlds.
    pub locations: usize,
    pub objects: usize,
    pub characters: usize,
    pub dialogues: usize,
    pub utterances: usize,
    pub emotes: usize,
    pub actions: usize,
    /// Distinct utterance tokens.
    pub vocabulary: usize,
    /// Tokens per utterance.
    pub mean_utterance_length: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub splits: BTreeMap<Split, SplitStats>,
    pub warnings: Vec<String>,
}

pub fn split_stats(logs: &[&EpisodeLog]) -> SplitStats {
    let mut names: [BTreeSet<String>; 3] = Default::default();
    let mut vocab = BTreeSet::new();
    let mut s = SplitStats { dialogues: logs.len(), ..SplitStats::default() };
    let mut tokens = 0;
    for log in logs {
        for node in log.world.nodes() {
            let slot = match node {
                Node::Location(_) => 0,
                Node::Object(_) => 1,
                Node::Character(_) => 2,
            };
            names[slot].insert(normalize_name(node.name()));
        }
        for t in &log.turns {
            if let Some(u) = &t.utterance {
                s.utterances += 1;
                let toks = tokenize(u);
                tokens += toks.len();
                vocab.extend(toks);
            }
            s.emotes += usize::from(t.emote.is_some());
            s.actions += usize::from(t.act.is_some());
        }
    }
    let [locations, objects, characters] = names;
    s.locations = locations.len();
    s.objects = objects.len();
    s.characters = characters.len();
    s.vocabulary = vocab.len();
    s.mean_utterance_length = if s.utterances == 0 { 0.0 } else { tokens as f64 / s.utterances as f64 };
    s
}

/// Per-split counts over the episodes that loaded; quarantined files are
/// excluded and noted as a warning.
pub fn dataset_stats(dataset: &Dataset, splits: &[Split]) -> Result<StatsReport, EvalError> {
    let mut report = StatsReport::default();
    for &split in splits {
        if !dataset.manifest.splits.contains_key(&split) {
            return Err(EvalError::MissingSplit(split));
        }
        let logs: Vec<&EpisodeLog> = dataset.episodes.iter().map(|e| &e.log).filter(|l| l.split == split).collect();
        report.splits.insert(split, split_stats(&logs));
    }
    if !dataset.report.errors.is_empty() {
        report.warnings.push(format!("{} validation errors; affected files are not counted", dataset.report.errors.len()));
    }
    Ok(report)
}

/// [`dataset_stats`] on the dataset rooted at `dir`. An empty or absent
/// directory yields zero counts and a warning.
pub fn dataset_stats_dir(dir: &Path, splits: &[Split], exec: Exec) -> Result<StatsReport, EvalError> {
    let manifest = dir.join("manifest.json");
    let empty = match std::fs::read_dir(dir) {
        Ok(mut entries) => entries.next().is_none(),
        Err(_) => true,
    };
    if empty && !manifest.exists() {
        return Ok(StatsReport {
            splits: splits.iter().map(|s| (*s, SplitStats::default())).collect(),
            warnings: vec![format!("{} has no data", dir.display())],
        });
    }
    let dataset = load_dataset(&manifest, exec)?;
    dataset_stats(&dataset, splits)
}
