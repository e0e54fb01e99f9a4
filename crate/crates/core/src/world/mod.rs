//! Typed entity graph: locations, characters and objects joined by
//! position edges.
//!
//! Every non-location entity has exactly one position parent. The parent map
//! is the edge set: an entry `child -> (kind, parent)` is the edge
//! `(parent, kind, child)`. Chains of parents always end at a location.

mod file;

pub use file::{WorldFile, WORLD_FORMAT_VERSION};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::text::{normalize_name, slugify};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct Affordances {
    pub gettable: bool,
    pub container: bool,
    pub surface: bool,
    pub food: bool,
    pub drink: bool,
    pub wearable: bool,
    pub weapon: bool,
}

impl Affordances {
    pub fn gettable() -> Self {
        Self { gettable: true, ..Self::default() }
    }

    pub fn holds_things(&self) -> bool {
        self.container || self.surface
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: EntityId,
    pub name: String,
    pub description: String,
    pub affordances: Affordances,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterSheet {
    pub id: EntityId,
    pub name: String,
    #[serde(default)]
    pub persona: Vec<String>,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighbor {
    pub name: String,
    pub direction: String,
    pub path: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationSpec {
    pub id: EntityId,
    pub name: String,
    pub category: String,
    pub description: String,
    #[serde(default)]
    pub backstory: String,
    /// Metadata only; there is no traversal between locations.
    #[serde(default)]
    pub neighbors: Vec<Neighbor>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Location(LocationSpec),
    Character(CharacterSheet),
    Object(ObjectSpec),
}

impl Node {
    pub fn id(&self) -> &EntityId {
        match self {
            Node::Location(l) => &l.id,
            Node::Character(c) => &c.id,
            Node::Object(o) => &o.id,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Node::Location(l) => &l.name,
            Node::Character(c) => &c.name,
            Node::Object(o) => &o.name,
        }
    }

    pub fn kind(&self) -> EntityKind {
        match self {
            Node::Location(_) => EntityKind::Location,
            Node::Character(_) => EntityKind::Character,
            Node::Object(_) => EntityKind::Object,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityKind {
    Location,
    Character,
    Object,
}

/// What kind of entity a free-text reference should resolve to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpectedKind {
    Character,
    Object,
    Any,
}

impl ExpectedKind {
    fn admits(self, kind: EntityKind) -> bool {
        match self {
            ExpectedKind::Character => kind == EntityKind::Character,
            ExpectedKind::Object => kind == EntityKind::Object,
            ExpectedKind::Any => kind != EntityKind::Location,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Contains,
    Carries,
    Wears,
    Wields,
}

impl EdgeKind {
    /// Carries, wears and wields: the object is a member of the character.
    pub fn is_holding(self) -> bool {
        !matches!(self, EdgeKind::Contains)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Contains => "contains",
            EdgeKind::Carries => "carries",
            EdgeKind::Wears => "wears",
            EdgeKind::Wields => "wields",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub subject: EntityId,
    pub kind: EdgeKind,
    pub object: EntityId,
}

impl Edge {
    pub fn new(subject: impl Into<EntityId>, kind: EdgeKind, object: impl Into<EntityId>) -> Self {
        Self { subject: subject.into(), kind, object: object.into() }
    }
}

impl From<String> for EntityId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Position {
    pub kind: EdgeKind,
    pub parent: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorldError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(EntityId),
    #[error("dangling reference to `{0}`")]
    DanglingReference(EntityId),
    #[error("duplicate entity id `{0}`")]
    DuplicateId(EntityId),
    #[error("illegal edge {subject} {kind} {object}: {reason}")]
    IllegalEdge { subject: EntityId, kind: &'static str, object: EntityId, reason: String },
    #[error("placing `{0}` would create a cycle")]
    CycleDetected(EntityId),
    #[error("`{0}` has no position in the world")]
    Unplaced(EntityId),
    #[error("`{0}` has more than one position parent")]
    MultipleParents(EntityId),
    #[error("`{0}` is a location")]
    IsLocation(EntityId),
    #[error("invalid entity `{id}`: {reason}")]
    InvalidEntity { id: EntityId, reason: &'static str },
    #[error("no entity named `{0}`")]
    NoMatch(String),
    #[error("`{text}` is ambiguous between {candidates:?}")]
    Ambiguous { text: String, candidates: Vec<EntityId> },
    #[error("world file: {0}")]
    Format(String),
}

/// The single source of game truth.
///
/// Node order is declaration order (locations, then characters, then
/// objects as given to [`build_world`]) and is preserved by every mutation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorldGraph {
    nodes: IndexMap<EntityId, Node>,
    positions: BTreeMap<usize, Position>,
    retired: BTreeSet<EntityId>,
}

/// Assemble a graph from declared entities and placement edges.
pub fn build_world(
    locations: Vec<LocationSpec>,
    characters: Vec<CharacterSheet>,
    objects: Vec<ObjectSpec>,
    placements: &[Edge],
) -> Result<WorldGraph, WorldError> {
    let mut nodes = IndexMap::new();
    let all = locations
        .into_iter()
        .map(Node::Location)
        .chain(characters.into_iter().map(Node::Character))
        .chain(objects.into_iter().map(Node::Object));
    for node in all {
        validate_node(&node)?;
        let id = node.id().clone();
        if nodes.insert(id.clone(), node).is_some() {
            return Err(WorldError::DuplicateId(id));
        }
    }
    let mut graph = WorldGraph { nodes, positions: BTreeMap::new(), retired: BTreeSet::new() };
    for edge in placements {
        let parent = graph
            .nodes
            .get_index_of(&edge.subject)
            .ok_or_else(|| WorldError::DanglingReference(edge.subject.clone()))?;
        let child = graph
            .nodes
            .get_index_of(&edge.object)
            .ok_or_else(|| WorldError::DanglingReference(edge.object.clone()))?;
        graph.check_edge(parent, edge.kind, child)?;
        if graph.positions.contains_key(&child) {
            return Err(WorldError::MultipleParents(edge.object.clone()));
        }
        graph.positions.insert(child, Position { kind: edge.kind, parent });
    }
    // with a single parent per node, a cycle shows up as a chain that never
    // reaches a location
    for idx in 0..graph.nodes.len() {
        if graph.kind_at(idx) == EntityKind::Location {
            continue;
        }
        if !graph.positions.contains_key(&idx) {
            return Err(WorldError::Unplaced(graph.id_at(idx).clone()));
        }
        let mut cur = idx;
        let mut steps = 0;
        while let Some(pos) = graph.positions.get(&cur) {
            cur = pos.parent;
            steps += 1;
            if steps > graph.nodes.len() {
                return Err(WorldError::CycleDetected(graph.id_at(idx).clone()));
            }
        }
    }
    Ok(graph)
}

fn validate_node(node: &Node) -> Result<(), WorldError> {
    let id = node.id().clone();
    if id.as_str().is_empty() {
        return Err(WorldError::InvalidEntity { id, reason: "empty id" });
    }
    if node.name().trim().is_empty() {
        return Err(WorldError::InvalidEntity { id, reason: "empty name" });
    }
    let description = match node {
        Node::Location(l) => &l.description,
        Node::Character(c) => &c.description,
        Node::Object(o) => &o.description,
    };
    if description.trim().is_empty() {
        return Err(WorldError::InvalidEntity { id, reason: "empty description" });
    }
    Ok(())
}

impl WorldGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn node(&self, id: &EntityId) -> Result<&Node, WorldError> {
        self.nodes.get(id).ok_or_else(|| WorldError::UnknownEntity(id.clone()))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &EntityId> {
        self.nodes.keys()
    }

    pub fn kind(&self, id: &EntityId) -> Result<EntityKind, WorldError> {
        self.node(id).map(Node::kind)
    }

    pub fn name(&self, id: &EntityId) -> Result<&str, WorldError> {
        self.node(id).map(Node::name)
    }

    /// Name with case folded and any leading article removed.
    pub fn display_name(&self, id: &EntityId) -> Result<String, WorldError> {
        self.name(id).map(normalize_name)
    }

    pub fn object(&self, id: &EntityId) -> Result<&ObjectSpec, WorldError> {
        match self.node(id)? {
            Node::Object(o) => Ok(o),
            _ => Err(WorldError::UnknownEntity(id.clone())),
        }
    }

    pub fn character(&self, id: &EntityId) -> Result<&CharacterSheet, WorldError> {
        match self.node(id)? {
            Node::Character(c) => Ok(c),
            _ => Err(WorldError::UnknownEntity(id.clone())),
        }
    }

    pub fn location(&self, id: &EntityId) -> Result<&LocationSpec, WorldError> {
        match self.node(id)? {
            Node::Location(l) => Ok(l),
            _ => Err(WorldError::UnknownEntity(id.clone())),
        }
    }

    pub fn is_retired(&self, id: &EntityId) -> bool {
        self.retired.contains(id)
    }

    fn id_at(&self, idx: usize) -> &EntityId {
        self.nodes.get_index(idx).map(|(k, _)| k).expect("node index in range")
    }

    fn node_at(&self, idx: usize) -> &Node {
        self.nodes.get_index(idx).map(|(_, v)| v).expect("node index in range")
    }

    fn kind_at(&self, idx: usize) -> EntityKind {
        self.node_at(idx).kind()
    }

    fn index(&self, id: &EntityId) -> Result<usize, WorldError> {
        self.nodes.get_index_of(id).ok_or_else(|| WorldError::UnknownEntity(id.clone()))
    }

    /// The position edge of `id` as `(kind, parent)`; `None` for locations.
    pub fn parent(&self, id: &EntityId) -> Result<Option<(EdgeKind, &EntityId)>, WorldError> {
        let idx = self.index(id)?;
        Ok(self.positions.get(&idx).map(|p| (p.kind, self.id_at(p.parent))))
    }

    /// All edges, ordered by the child's declaration order.
    pub fn edges(&self) -> Vec<Edge> {
        self.positions
            .iter()
            .map(|(&child, pos)| Edge {
                subject: self.id_at(pos.parent).clone(),
                kind: pos.kind,
                object: self.id_at(child).clone(),
            })
            .collect()
    }

    /// Direct children of `id` through any edge kind, in declaration order.
    pub fn children(&self, id: &EntityId) -> Result<Vec<(EdgeKind, &EntityId)>, WorldError> {
        let idx = self.index(id)?;
        Ok(self
            .positions
            .iter()
            .filter(|(_, p)| p.parent == idx)
            .map(|(&c, p)| (p.kind, self.id_at(c)))
            .collect())
    }

    pub fn has_edge(&self, subject: &EntityId, kind: EdgeKind, object: &EntityId) -> bool {
        matches!(self.parent(object), Ok(Some((k, p))) if k == kind && p == subject)
    }

    /// The location terminating `entity`'s position chain.
    pub fn room_of(&self, entity: &EntityId) -> Result<&EntityId, WorldError> {
        let mut idx = self.index(entity)?;
        if self.kind_at(idx) == EntityKind::Location {
            return Err(WorldError::IsLocation(entity.clone()));
        }
        while let Some(pos) = self.positions.get(&idx) {
            idx = pos.parent;
        }
        Ok(self.id_at(idx))
    }

    /// Characters whose position parent is `room`, in declaration order.
    pub fn characters_in(&self, room: &EntityId) -> Result<Vec<&EntityId>, WorldError> {
        Ok(self
            .children(room)?
            .into_iter()
            .filter(|(_, c)| self.kind(c) == Ok(EntityKind::Character))
            .map(|(_, c)| c)
            .collect())
    }

    /// Every object whose chain ends at `room`, in declaration order.
    pub fn objects_in(&self, room: &EntityId) -> Result<Vec<&EntityId>, WorldError> {
        let room_idx = self.index(room)?;
        Ok(self
            .nodes
            .iter()
            .filter(|(_, n)| n.kind() == EntityKind::Object)
            .filter(|(id, _)| self.room_of(id).ok().map(|r| self.index(r).ok()) == Some(Some(room_idx)))
            .map(|(id, _)| id)
            .collect())
    }

    /// Whether `ancestor` appears on `id`'s position chain (excluding `id`).
    pub fn is_inside(&self, id: &EntityId, ancestor: &EntityId) -> Result<bool, WorldError> {
        let mut idx = self.index(id)?;
        let target = self.index(ancestor)?;
        while let Some(pos) = self.positions.get(&idx) {
            if pos.parent == target {
                return Ok(true);
            }
            idx = pos.parent;
        }
        Ok(false)
    }

    fn illegal(&self, parent: usize, kind: EdgeKind, child: usize, reason: impl Into<String>) -> WorldError {
        WorldError::IllegalEdge {
            subject: self.id_at(parent).clone(),
            kind: kind.as_str(),
            object: self.id_at(child).clone(),
            reason: reason.into(),
        }
    }

    fn check_edge(&self, parent: usize, kind: EdgeKind, child: usize) -> Result<(), WorldError> {
        let (p, c) = (self.node_at(parent), self.node_at(child));
        if parent == child {
            return Err(WorldError::CycleDetected(self.id_at(child).clone()));
        }
        match c {
            Node::Location(_) => return Err(self.illegal(parent, kind, child, "locations have no parent")),
            Node::Character(_) => {
                if kind != EdgeKind::Contains || p.kind() != EntityKind::Location {
                    return Err(self.illegal(parent, kind, child, "characters stand directly in a location"));
                }
                return Ok(());
            }
            Node::Object(_) => {}
        }
        let obj = match c {
            Node::Object(o) => o,
            _ => unreachable!(),
        };
        match (kind, p) {
            (EdgeKind::Contains, Node::Location(_)) => Ok(()),
            (EdgeKind::Contains, Node::Object(holder)) if holder.affordances.holds_things() => Ok(()),
            (EdgeKind::Contains, _) => {
                Err(self.illegal(parent, kind, child, "contains needs a location, container or surface"))
            }
            (_, Node::Character(_)) => match kind {
                EdgeKind::Wears if !obj.affordances.wearable => {
                    Err(self.illegal(parent, kind, child, "object is not wearable"))
                }
                EdgeKind::Wields if !obj.affordances.weapon => {
                    Err(self.illegal(parent, kind, child, "object is not a weapon"))
                }
                _ => Ok(()),
            },
            _ => Err(self.illegal(parent, kind, child, "only characters carry, wear or wield")),
        }
    }

    /// Replace `child`'s position edge with `(parent, kind, child)`.
    pub fn relocate(&mut self, child: &EntityId, kind: EdgeKind, parent: &EntityId) -> Result<(), WorldError> {
        let c = self.index(child)?;
        let p = self.index(parent)?;
        self.check_edge(p, kind, c)?;
        if self.is_inside(parent, child)? {
            return Err(WorldError::CycleDetected(child.clone()));
        }
        self.positions.insert(c, Position { kind, parent: p });
        Ok(())
    }

    /// Delete an object. Anything it held drops into its room.
    pub fn remove_object(&mut self, id: &EntityId) -> Result<ObjectSpec, WorldError> {
        self.object(id)?;
        let room = self.room_of(id)?.clone();
        let held: Vec<EntityId> = self.children(id)?.into_iter().map(|(_, c)| c.clone()).collect();
        for c in &held {
            self.relocate(c, EdgeKind::Contains, &room)?;
        }
        let idx = self.index(id)?;
        // positions are keyed by index; rebuild them around the removed slot
        let old: Vec<(EntityId, Position)> = self
            .positions
            .iter()
            .filter(|(&c, _)| c != idx)
            .map(|(&c, p)| (self.id_at(c).clone(), *p))
            .collect();
        let old: Vec<(EntityId, EdgeKind, EntityId)> =
            old.into_iter().map(|(c, p)| (c, p.kind, self.id_at(p.parent).clone())).collect();
        let node = self.nodes.shift_remove(id).expect("checked above");
        self.positions.clear();
        for (c, kind, p) in old {
            let ci = self.index(&c)?;
            let pi = self.index(&p)?;
            self.positions.insert(ci, Position { kind, parent: pi });
        }
        self.retired.insert(id.clone());
        match node {
            Node::Object(o) => Ok(o),
            _ => unreachable!(),
        }
    }

    /// Resolve free text to an entity, preferring the actor's own inventory,
    /// then the actor's room, then anywhere else.
    pub fn resolve_name(
        &self,
        actor: &EntityId,
        surface_text: &str,
        expected: ExpectedKind,
    ) -> Result<EntityId, WorldError> {
        let actor_room = self.room_of(actor)?.clone();
        let wanted = normalize_name(surface_text);
        let mut best: Option<(u8, Vec<&EntityId>)> = None;
        for (id, node) in &self.nodes {
            if !expected.admits(node.kind()) || normalize_name(node.name()) != wanted {
                continue;
            }
            let rank = if self.is_inside(id, actor)? {
                0
            } else if self.room_of(id)? == &actor_room {
                1
            } else {
                2
            };
            match &mut best {
                Some((r, ids)) if *r == rank => ids.push(id),
                Some((r, _)) if *r < rank => {}
                _ => best = Some((rank, vec![id])),
            }
        }
        match best {
            None => Err(WorldError::NoMatch(surface_text.to_owned())),
            Some((_, ids)) if ids.len() == 1 => Ok(ids[0].clone()),
            Some((_, mut ids)) => {
                ids.sort();
                Err(WorldError::Ambiguous {
                    text: surface_text.to_owned(),
                    candidates: ids.into_iter().cloned().collect(),
                })
            }
        }
    }

    /// SHA-256 of the canonical world file bytes, hex encoded.
    pub fn state_hash(&self) -> String {
        let bytes = WorldFile::from_graph(self).to_canonical_json();
        format!("{:x}", Sha256::digest(bytes.as_bytes()))
    }
}

/// Allocates slug ids, appending `-2`, `-3`, ... on collision.
#[derive(Debug, Default, Clone)]
pub struct IdAllocator {
    taken: BTreeSet<String>,
}

impl IdAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn allocate(&mut self, name: &str) -> EntityId {
        let base = slugify(name);
        let mut candidate = base.clone();
        let mut n = 2;
        while self.taken.contains(&candidate) {
            candidate = format!("{base}-{n}");
            n += 1;
        }
        self.taken.insert(candidate.clone());
        EntityId(candidate)
    }
}
