use serde::{Deserialize, Serialize};

use super::{build_world, CharacterSheet, Edge, LocationSpec, Node, ObjectSpec, WorldError, WorldGraph};

pub const WORLD_FORMAT_VERSION: &str = "1.0";

/// On-disk world document. See `docs/world-format.md`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldFile {
    pub version: String,
    pub locations: Vec<LocationSpec>,
    #[serde(default)]
    pub characters: Vec<CharacterSheet>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub placements: Vec<Edge>,
}

impl WorldFile {
    pub fn from_graph(graph: &WorldGraph) -> Self {
        let mut file = WorldFile {
            version: WORLD_FORMAT_VERSION.to_owned(),
            locations: Vec::new(),
            characters: Vec::new(),
            objects: Vec::new(),
            placements: graph.edges(),
        };
        for node in graph.nodes() {
            match node {
                Node::Location(l) => file.locations.push(l.clone()),
                Node::Character(c) => file.characters.push(c.clone()),
                Node::Object(o) => file.objects.push(o.clone()),
            }
        }
        file
    }

    pub fn into_graph(self) -> Result<WorldGraph, WorldError> {
        check_version(&self.version)?;
        build_world(self.locations, self.characters, self.objects, &self.placements)
    }

    /// Pretty JSON with lexicographically sorted keys and a trailing newline.
    pub fn to_canonical_json(&self) -> String {
        // Value maps are BTreeMaps, which sorts keys
        let value = serde_json::to_value(self).expect("world file serializes");
        let mut out = serde_json::to_string_pretty(&value).expect("value serializes");
        out.push('\n');
        out
    }

    pub fn parse(text: &str) -> Result<Self, WorldError> {
        serde_json::from_str(text).map_err(|e| WorldError::Format(e.to_string()))
    }
}

fn check_version(version: &str) -> Result<(), WorldError> {
    let major = version.split('.').next().unwrap_or_default();
    let ours = WORLD_FORMAT_VERSION.split('.').next().unwrap_or_default();
    if major != ours {
        return Err(WorldError::Format(format!("unsupported world format version {version}")));
    }
    Ok(())
}

impl WorldGraph {
    pub fn to_canonical_json(&self) -> String {
        WorldFile::from_graph(self).to_canonical_json()
    }

    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        WorldFile::parse(text)?.into_graph()
    }
}
