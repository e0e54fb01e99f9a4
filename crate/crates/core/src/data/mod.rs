//! Dataset manifests, loading with replay validation, split assignment and
//! the external release importer.

mod import;

pub use import::{import_light, ImportSummary};

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::{EpisodeFile, EpisodeLog, Split};
use crate::exec::Exec;
use crate::synth::{SEEN_CATEGORIES, UNSEEN_CATEGORIES};
use crate::world::{WorldError, WorldGraph};

pub const MANIFEST_VERSION: &str = "1.0";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("no manifest at {0}")]
    ManifestMissing(PathBuf),
    #[error("manifest version {found} is not supported (expected {MANIFEST_VERSION})")]
    VersionMismatch { found: String },
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error("location category `{0}` is neither seen nor unseen")]
    UnknownCategory(String),
    #[error("unrecognized release layout: {0}")]
    UnrecognizedLayout(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    World(#[from] WorldError),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io { path: path.to_owned(), source }
}

fn default_unseen() -> Vec<String> {
    UNSEEN_CATEGORIES.iter().map(|s| s.to_string()).collect()
}

fn default_seen() -> Vec<String> {
    SEEN_CATEGORIES.iter().map(|s| s.to_string()).collect()
}

/// `manifest.json`. All paths are relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: String,
    pub worlds: Vec<String>,
    pub splits: BTreeMap<Split, Vec<String>>,
    #[serde(default = "default_unseen")]
    pub unseen_categories: Vec<String>,
    #[serde(default = "default_seen")]
    pub seen_categories: Vec<String>,
}

impl DatasetManifest {
    pub fn new() -> Self {
        DatasetManifest {
            version: MANIFEST_VERSION.to_owned(),
            worlds: Vec::new(),
            splits: Split::ALL.iter().map(|s| (*s, Vec::new())).collect(),
            unseen_categories: default_unseen(),
            seen_categories: default_seen(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, DataError> {
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| DataError::Manifest(e.to_string()))?;
        let found = raw.get("version").and_then(|v| v.as_str()).unwrap_or("").to_owned();
        if found.split('.').next() != MANIFEST_VERSION.split('.').next() {
            return Err(DataError::VersionMismatch { found });
        }
        serde_json::from_value(raw).map_err(|e| DataError::Manifest(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }
}

impl Default for DatasetManifest {
    fn default() -> Self {
        Self::new()
    }
}

/// Split for an episode whose location has `category`: unseen categories
/// always go to `test_unseen`, other known categories keep `tag`.
pub fn assign_split(category: &str, tag: Split, manifest: &DatasetManifest) -> Result<Split, DataError> {
    if manifest.unseen_categories.iter().any(|c| c == category) {
        Ok(Split::TestUnseen)
    } else if manifest.seen_categories.iter().any(|c| c == category) {
        Ok(tag)
    } else {
        Err(DataError::UnknownCategory(category.to_owned()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub file: String,
    /// 1-based line within `file` (the header is line 1).
    pub record: Option<usize>,
    pub rule: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, file: &str, record: Option<usize>, rule: &str, message: impl Into<String>) {
        self.errors.push(Issue { file: file.to_owned(), record, rule: rule.to_owned(), message: message.into() });
    }

    fn warn(&mut self, file: &str, record: Option<usize>, rule: &str, message: impl Into<String>) {
        self.warnings.push(Issue { file: file.to_owned(), record, rule: rule.to_owned(), message: message.into() });
    }
}

#[derive(Clone, Debug)]
pub struct LoadedEpisode {
    /// Path relative to the dataset root.
    pub file: String,
    pub log: EpisodeLog,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
    /// Keyed by path relative to the root.
    pub worlds: BTreeMap<String, WorldGraph>,
    pub episodes: Vec<LoadedEpisode>,
    /// Files whose episode failed replay.
    pub quarantined: Vec<String>,
    pub report: ValidationReport,
}

impl Dataset {
    pub fn split(&self, split: Split) -> Vec<EpisodeLog> {
        self.episodes.iter().filter(|e| e.log.split == split).map(|e| e.log.clone()).collect()
    }

    pub fn logs(&self) -> Vec<EpisodeLog> {
        self.episodes.iter().map(|e| e.log.clone()).collect()
    }
}

/// Lexically normalized `base/rel` (no filesystem access).
fn join_normalized(base: &Path, rel: &str) -> PathBuf {
    let mut out = PathBuf::new();
    for c in base.join(rel).components() {
        match c {
            Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            Component::CurDir => {}
            other => out.push(other),
        }
    }
    out
}

fn rel_key(path: &Path) -> String {
    path.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

enum WorldOutcome {
    Loaded(WorldGraph),
    Missing(String),
    Invalid(String),
}

fn read_world(path: &Path) -> WorldOutcome {
    match std::fs::read_to_string(path) {
        Err(e) => WorldOutcome::Missing(e.to_string()),
        Ok(text) => match WorldGraph::from_json(&text) {
            Ok(g) => WorldOutcome::Loaded(g),
            Err(e) => WorldOutcome::Invalid(e.to_string()),
        },
    }
}

enum EpisodeOutcome {
    Loaded(Box<LoadedEpisode>, Vec<Issue>),
    Failed(Vec<Issue>, bool),
}

/// Load the dataset described by `manifest_path`.
///
/// Missing or invalid files are reported and skipped. Episodes that fail
/// replay are quarantined with rule `constraint-replay`. Per-file work runs
/// under `exec`; the report is merged in manifest order either way.
pub fn load_dataset(manifest_path: &Path, exec: Exec) -> Result<Dataset, DataError> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DataError::ManifestMissing(manifest_path.to_owned()),
        _ => DataError::Io { path: manifest_path.to_owned(), source: e },
    })?;
    let manifest = DatasetManifest::parse(&text)?;
    let root = manifest_path.parent().map(Path::to_owned).unwrap_or_default();
    let mut report = ValidationReport::default();

    let world_results = exec.map(&manifest.worlds, |_, rel| read_world(&root.join(rel)));
    let mut worlds = BTreeMap::new();
    for (rel, outcome) in manifest.worlds.iter().zip(world_results) {
        match outcome {
            WorldOutcome::Loaded(g) => {
                worlds.insert(rel_key(&join_normalized(Path::new(""), rel)), g);
            }
            WorldOutcome::Missing(m) => report.error(rel, None, "missing-file", m),
            WorldOutcome::Invalid(m) => report.error(rel, None, "world-invariant", m),
        }
    }

    let jobs: Vec<(Split, String)> =
        manifest.splits.iter().flat_map(|(s, files)| files.iter().map(move |f| (*s, f.clone()))).collect();
    let results = exec.map(&jobs, |_, (split, rel)| load_episode(&root, &manifest, &worlds, *split, rel));

    let mut episodes = Vec::new();
    let mut quarantined = Vec::new();
    for ((_, rel), outcome) in jobs.iter().zip(results) {
        match outcome {
            EpisodeOutcome::Loaded(ep, warnings) => {
                report.warnings.extend(warnings);
                episodes.push(*ep);
            }
            EpisodeOutcome::Failed(errors, replay) => {
                report.errors.extend(errors);
                if replay {
                    quarantined.push(rel.clone());
                }
            }
        }
    }

    let mut seen: BTreeMap<String, (Split, String)> = BTreeMap::new();
    for ep in &episodes {
        if let Some((split, file)) = seen.get(&ep.log.id) {
            let msg = format!("episode id `{}` also appears in {file} ({split})", ep.log.id);
            report.error(&ep.file, None, "split-overlap", msg);
        } else {
            seen.insert(ep.log.id.clone(), (ep.log.split, ep.file.clone()));
        }
    }
    if episodes.is_empty() && manifest.worlds.is_empty() {
        report.warn("manifest.json", None, "empty-dataset", "manifest lists no files");
    }
    Ok(Dataset { root, manifest, worlds, episodes, quarantined, report })
}

fn load_episode(
    root: &Path,
    manifest: &DatasetManifest,
    worlds: &BTreeMap<String, WorldGraph>,
    split: Split,
    rel: &str,
) -> EpisodeOutcome {
    let issue = |record, rule: &str, message: String| Issue { file: rel.to_owned(), record, rule: rule.to_owned(), message };
    let text = match std::fs::read_to_string(root.join(rel)) {
        Ok(t) => t,
        Err(e) => return EpisodeOutcome::Failed(vec![issue(None, "missing-file", e.to_string())], false),
    };
    let file = match EpisodeFile::parse(&text) {
        Ok(f) => f,
        Err(e) => return EpisodeOutcome::Failed(vec![issue(None, "episode-format", e.to_string())], false),
    };
    let episode_dir = Path::new(rel).parent().unwrap_or(Path::new(""));
    let world_key = rel_key(&join_normalized(episode_dir, &file.header.world));
    let world = match worlds.get(&world_key) {
        Some(w) => w.clone(),
        None => match read_world(&root.join(&world_key)) {
            WorldOutcome::Loaded(w) => w,
            WorldOutcome::Missing(m) => return EpisodeOutcome::Failed(vec![issue(None, "missing-file", format!("{world_key}: {m}"))], false),
            WorldOutcome::Invalid(m) => return EpisodeOutcome::Failed(vec![issue(None, "world-invariant", format!("{world_key}: {m}"))], false),
        },
    };
    let mut warnings = Vec::new();
    if file.header.split != split {
        warnings.push(issue(None, "split-mismatch", format!("header says {}, manifest says {split}", file.header.split)));
    }
    let mut log = match file.into_log(world) {
        Ok(l) => l,
        Err(e) => return EpisodeOutcome::Failed(vec![issue(Some(e.turn + 2), "constraint-replay", e.to_string())], true),
    };
    log.split = split;
    let category = log
        .room()
        .and_then(|r| log.world.location(r))
        .map(|l| l.category.clone())
        .unwrap_or_default();
    match assign_split(&category, split, manifest) {
        Ok(s) if s == split => {}
        Ok(s) => {
            let msg = format!("category `{category}` belongs in {s}, listed under {split}");
            return EpisodeOutcome::Failed(vec![issue(None, "split-category", msg)], false);
        }
        Err(e) => return EpisodeOutcome::Failed(vec![issue(None, "split-category", e.to_string())], false),
    }
    EpisodeOutcome::Loaded(Box::new(LoadedEpisode { file: rel.to_owned(), log }), warnings)
}

/// Write worlds and episodes in canonical form under `root` and return the
/// manifest (also written). One world file per distinct initial world.
pub fn write_dataset(root: &Path, episodes: &[(String, EpisodeLog)], extra_worlds: &[(String, WorldGraph)]) -> Result<DatasetManifest, DataError> {
    let mut manifest = DatasetManifest::new();
    let mut written: BTreeSet<String> = BTreeSet::new();
    let write = |rel: &str, body: &str| -> Result<(), DataError> {
        let path = root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        std::fs::write(&path, body).map_err(io_err(&path))
    };
    for (rel, w) in extra_worlds {
        if written.insert(rel.clone()) {
            write(rel, &w.to_canonical_json())?;
            manifest.worlds.push(rel.clone());
        }
    }
    for (name, log) in episodes {
        let world_rel = format!("worlds/{name}.json");
        if written.insert(world_rel.clone()) {
            write(&world_rel, &log.world.to_canonical_json())?;
            manifest.worlds.push(world_rel.clone());
        }
        let ep_rel = format!("episodes/{name}.jsonl");
        write(&ep_rel, &EpisodeFile::from_log(log, &format!("../{world_rel}")).to_jsonl())?;
        manifest.splits.entry(log.split).or_default().push(ep_rel);
    }
    write("manifest.json", &manifest.to_json())?;
    Ok(manifest)
}
