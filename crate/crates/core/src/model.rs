//! Shared scene graph data model.
//!
//! Both the image scene graph (loaded from a document) and the language
//! scene graph (produced by the parser) are built from the same node and
//! edge types. Image nodes carry bounding boxes, language nodes never do.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed scene document: {0}")]
    MalformedDocument(String),
    #[error("edge {index} references missing node {id}")]
    DanglingEdge { index: usize, id: NodeId },
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
    #[error("node {0} has no bounding box")]
    MissingBBox(NodeId),
    #[error("node {0} must not carry a bounding box")]
    UnexpectedBBox(NodeId),
    #[error("node {id} has an invalid bounding box ({w}x{h})")]
    InvalidBBox { id: NodeId, w: u32, h: u32 },
    #[error("node {id}: {reason}")]
    InvalidNode { id: NodeId, reason: String },
    #[error("edge {0} is a self loop")]
    SelfLoop(usize),
    #[error("edge {0} duplicates an earlier edge")]
    DuplicateEdge(usize),
    #[error("empty token")]
    EmptyToken,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Axis-aligned box, top-left corner plus extent, in image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x: i64,
    pub y: i64,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub fn new(x: i64, y: i64, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x={} y={} w={} h={}", self.x, self.y, self.w, self.h)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectNode {
    pub id: NodeId,
    pub name: String,
    /// Set semantics, kept in document order for rendering.
    pub attributes: Vec<String>,
    pub bbox: Option<BBox>,
}

impl ObjectNode {
    pub fn new(id: NodeId, name: impl Into<String>) -> Self {
        Self {
            id,
            name: name.into(),
            attributes: Vec::new(),
            bbox: None,
        }
    }

    pub fn with_attributes<I, S>(mut self, attrs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.attributes = attrs.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_bbox(mut self, bbox: BBox) -> Self {
        self.bbox = Some(bbox);
        self
    }

    pub fn has_attribute(&self, attr: &str) -> bool {
        self.attributes.iter().any(|a| a == attr)
    }

    /// "green cup", "cup".
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for a in &self.attributes {
            out.push_str(a);
            out.push(' ');
        }
        out.push_str(&self.name);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationEdge {
    pub subject_id: NodeId,
    pub predicate: String,
    pub object_id: NodeId,
}

impl RelationEdge {
    pub fn new(subject_id: NodeId, predicate: impl Into<String>, object_id: NodeId) -> Self {
        Self {
            subject_id,
            predicate: predicate.into(),
            object_id,
        }
    }

    pub fn touches(&self, id: NodeId) -> bool {
        self.subject_id == id || self.object_id == id
    }
}

impl fmt::Display for RelationEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {})",
            self.subject_id, self.predicate, self.object_id
        )
    }
}

/// Whether nodes of a graph must or must not carry bounding boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Image,
    Language,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneGraph {
    pub scene_id: String,
    pub image_ref: Option<String>,
    nodes: Vec<ObjectNode>,
    index: HashMap<NodeId, usize>,
    edges: Vec<RelationEdge>,
}

impl SceneGraph {
    /// Builds and validates a graph. Names, attributes and predicates are
    /// normalized; node and edge order is kept as given.
    pub fn new(
        kind: GraphKind,
        scene_id: impl Into<String>,
        image_ref: Option<String>,
        nodes: Vec<ObjectNode>,
        edges: Vec<RelationEdge>,
    ) -> Result<Self, ModelError> {
        let mut index = HashMap::with_capacity(nodes.len());
        let mut normalized = Vec::with_capacity(nodes.len());
        for (pos, node) in nodes.into_iter().enumerate() {
            if index.insert(node.id, pos).is_some() {
                return Err(ModelError::DuplicateId(node.id));
            }
            normalized.push(validate_node(kind, node)?);
        }

        let mut seen = HashSet::with_capacity(edges.len());
        let mut checked = Vec::with_capacity(edges.len());
        for (i, edge) in edges.into_iter().enumerate() {
            for id in [edge.subject_id, edge.object_id] {
                if !index.contains_key(&id) {
                    return Err(ModelError::DanglingEdge { index: i, id });
                }
            }
            if edge.subject_id == edge.object_id {
                return Err(ModelError::SelfLoop(i));
            }
            let predicate = normalize_token(&edge.predicate).map_err(|_| {
                ModelError::MalformedDocument(format!("edge {i} has an empty predicate"))
            })?;
            let edge = RelationEdge::new(edge.subject_id, predicate, edge.object_id);
            if !seen.insert(edge.clone()) {
                return Err(ModelError::DuplicateEdge(i));
            }
            checked.push(edge);
        }

        Ok(Self {
            scene_id: scene_id.into(),
            image_ref,
            nodes: normalized,
            index,
            edges: checked,
        })
    }

    pub fn node(&self, id: NodeId) -> Option<&ObjectNode> {
        self.index.get(&id).map(|&pos| &self.nodes[pos])
    }

    /// Panics if `id` does not resolve. Only used for ids taken from this
    /// graph's own edges, which are validated at construction.
    pub(crate) fn node_unchecked(&self, id: NodeId) -> &ObjectNode {
        &self.nodes[self.index[&id]]
    }

    pub fn nodes(&self) -> &[ObjectNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[RelationEdge] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> &RelationEdge {
        &self.edges[index]
    }

    pub fn subject_of(&self, edge: &RelationEdge) -> &ObjectNode {
        self.node_unchecked(edge.subject_id)
    }

    pub fn object_of(&self, edge: &RelationEdge) -> &ObjectNode {
        self.node_unchecked(edge.object_id)
    }

    /// Smallest rectangle covering every bbox, used as the image frame when
    /// the image dimensions are unknown.
    pub fn extent(&self) -> Option<BBox> {
        let boxes: Vec<BBox> = self.nodes.iter().filter_map(|n| n.bbox).collect();
        let x0 = boxes.iter().map(|b| b.x).min()?;
        let y0 = boxes.iter().map(|b| b.y).min()?;
        let x1 = boxes.iter().map(|b| b.x + b.w as i64).max()?;
        let y1 = boxes.iter().map(|b| b.y + b.h as i64).max()?;
        Some(BBox::new(x0, y0, (x1 - x0) as u32, (y1 - y0) as u32))
    }

    pub fn to_document(&self) -> SceneDocument {
        SceneDocument {
            scene_id: self.scene_id.clone(),
            image: self.image_ref.clone(),
            objects: self
                .nodes
                .iter()
                .map(|n| ObjectRecord {
                    id: n.id,
                    name: n.name.clone(),
                    attributes: n.attributes.clone(),
                    bbox: n.bbox,
                })
                .collect(),
            relationships: self.edges.clone(),
        }
    }
}

impl Serialize for SceneGraph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_document().serialize(serializer)
    }
}

fn validate_node(kind: GraphKind, node: ObjectNode) -> Result<ObjectNode, ModelError> {
    let id = node.id;
    let name = normalize_token(&node.name).map_err(|_| ModelError::InvalidNode {
        id,
        reason: "empty name".into(),
    })?;
    let mut attributes: Vec<String> = Vec::with_capacity(node.attributes.len());
    for raw in &node.attributes {
        let attr = normalize_token(raw).map_err(|_| ModelError::InvalidNode {
            id,
            reason: "empty attribute".into(),
        })?;
        if attributes.contains(&attr) {
            return Err(ModelError::InvalidNode {
                id,
                reason: format!("duplicate attribute {attr:?}"),
            });
        }
        attributes.push(attr);
    }
    match (kind, node.bbox) {
        (GraphKind::Image, None) => return Err(ModelError::MissingBBox(id)),
        (GraphKind::Language, Some(_)) => return Err(ModelError::UnexpectedBBox(id)),
        (_, Some(b)) if b.w == 0 || b.h == 0 => {
            return Err(ModelError::InvalidBBox { id, w: b.w, h: b.h })
        }
        _ => {}
    }
    Ok(ObjectNode {
        id,
        name,
        attributes,
        bbox: node.bbox,
    })
}

/// Wire form of a scene graph. Field names are part of the file format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneDocument {
    pub scene_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    pub objects: Vec<ObjectRecord>,
    #[serde(default)]
    pub relationships: Vec<RelationEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub id: NodeId,
    pub name: String,
    #[serde(default)]
    pub attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
}

impl SceneDocument {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::MalformedDocument(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene documents always serialize")
    }

    pub fn into_graph(self, kind: GraphKind) -> Result<SceneGraph, ModelError> {
        let nodes = self
            .objects
            .into_iter()
            .map(|o| ObjectNode {
                id: o.id,
                name: o.name,
                attributes: o.attributes,
                bbox: o.bbox,
            })
            .collect();
        SceneGraph::new(kind, self.scene_id, self.image, nodes, self.relationships)
    }
}

/// Parses and validates an image scene graph document.
pub fn load_scene_graph(text: &str) -> Result<SceneGraph, ModelError> {
    SceneDocument::from_json(text)?.into_graph(GraphKind::Image)
}

pub fn load_scene_graph_file(path: impl AsRef<Path>) -> Result<SceneGraph, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_scene_graph(&text)
}

/// Lowercases, trims, collapses inner whitespace and strips regular plural
/// suffixes from each word. Idempotent.
pub fn normalize_token(raw: &str) -> Result<String, ModelError> {
    let words: Vec<String> = raw
        .split_whitespace()
        .map(|w| singularize(&w.to_lowercase()))
        .collect();
    if words.is_empty() {
        return Err(ModelError::EmptyToken);
    }
    Ok(words.join(" "))
}

fn singularize(word: &str) -> String {
    // Short words ("gas", "bus", "has") are left alone.
    if word.chars().count() <= 3 {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ies") {
        if stem.chars().count() >= 2 {
            return format!("{stem}y");
        }
    }
    if let Some(stem) = word.strip_suffix("es") {
        if ["ss", "x", "z", "ch", "sh"]
            .iter()
            .any(|s| stem.ends_with(s))
        {
            return stem.to_string();
        }
    }
    if word.ends_with('s') && !["ss", "us", "is"].iter().any(|s| word.ends_with(s)) {
        return word[..word.len() - 1].to_string();
    }
    word.to_string()
}
