//! Question generation.
//!
//! A single uncertain candidate becomes a yes/no validation question.
//! Several candidates become a selection question; when their phrases
//! read identically each candidate is described by its least common
//! incident relation instead.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BBox, NodeId, RelationEdge, SceneGraph};
use crate::reasoner::{MatchAction, MatchOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuestionError {
    #[error("no question for a {0:?} outcome")]
    InvalidAction(MatchAction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    SubjectSide,
    ObjectSide,
}

/// How an incident edge reads from the focal node's point of view. Two
/// edges with equal signatures render the same phrase.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhraseSignature {
    pub predicate: String,
    pub counterpart_name: String,
    pub counterpart_attributes: BTreeSet<String>,
    pub direction: Direction,
}

impl PhraseSignature {
    pub fn of(scene: &SceneGraph, edge: &RelationEdge, focal: NodeId) -> Self {
        let (counterpart, direction) = if edge.subject_id == focal {
            (edge.object_id, Direction::SubjectSide)
        } else {
            (edge.subject_id, Direction::ObjectSide)
        };
        let node = scene
            .node(counterpart)
            .expect("edge endpoints resolve in their own graph");
        Self {
            predicate: edge.predicate.clone(),
            counterpart_name: node.name.clone(),
            counterpart_attributes: node.attributes.iter().cloned().collect(),
            direction,
        }
    }
}

/// Picks, for each focal node, the incident edge whose signature occurs
/// least often across all focal nodes' incident edges. Ties go to the
/// lowest edge index. `None` for a node with no incident edges.
pub fn distinctive_relations(scene: &SceneGraph, focal: &[NodeId]) -> Vec<Option<usize>> {
    let incident: Vec<Vec<usize>> = focal
        .iter()
        .map(|&id| {
            scene
                .edges()
                .iter()
                .enumerate()
                .filter(|(_, e)| e.touches(id))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    let mut counts: HashMap<PhraseSignature, usize> = HashMap::new();
    for (edges, &id) in incident.iter().zip(focal) {
        for &i in edges {
            *counts
                .entry(PhraseSignature::of(scene, scene.edge(i), id))
                .or_default() += 1;
        }
    }

    incident
        .iter()
        .zip(focal)
        .map(|(edges, &id)| {
            // min_by_key keeps the first minimum, i.e. the lowest index.
            edges
                .iter()
                .copied()
                .min_by_key(|&i| counts[&PhraseSignature::of(scene, scene.edge(i), id)])
        })
        .collect()
}

/// For each candidate edge, the distinctive relation of its subject node.
pub fn find_relation(scene: &SceneGraph, candidates: &[usize]) -> Vec<(usize, usize)> {
    let subjects: Vec<NodeId> = candidates
        .iter()
        .map(|&i| scene.edge(i).subject_id)
        .collect();
    candidates
        .iter()
        .zip(distinctive_relations(scene, &subjects))
        .map(|(&c, chosen)| {
            (
                c,
                chosen.expect("a candidate's subject touches its own edge"),
            )
        })
        .collect()
}

fn noun_phrase(attrs: &[String], name: &str) -> String {
    let mut out = String::from("the ");
    for a in attrs {
        out.push_str(a);
        out.push(' ');
    }
    out.push_str(name);
    out
}

pub fn render_node(scene: &SceneGraph, id: NodeId) -> String {
    let node = scene.node(id).expect("focal node resolves");
    noun_phrase(&node.attributes, &node.name)
}

/// "the green cup on the table", or for the object side
/// "the red cup that the green cup is next to".
pub fn render_phrase(scene: &SceneGraph, edge: &RelationEdge, focal: NodeId) -> String {
    let subject = scene.subject_of(edge);
    let object = scene.object_of(edge);
    if edge.subject_id == focal {
        format!(
            "{} {} {}",
            noun_phrase(&subject.attributes, &subject.name),
            edge.predicate,
            noun_phrase(&object.attributes, &object.name)
        )
    } else {
        format!(
            "{} that {} is {}",
            noun_phrase(&object.attributes, &object.name),
            noun_phrase(&subject.attributes, &subject.name),
            edge.predicate
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    Validate,
    Select,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionOption {
    /// The edge the phrase describes, absent for a bare node.
    pub edge: Option<RelationEdge>,
    pub focal_id: NodeId,
    pub phrase: String,
    pub bbox: Option<BBox>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub kind: QuestionKind,
    pub text: String,
    pub options: Vec<QuestionOption>,
    pub allows_none: bool,
    /// Phrases were still identical after relation lookup and were
    /// disambiguated by image quadrant.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub positional_fallback: bool,
}

/// Something the user can be asked about: a candidate edge and the node it
/// refers to, or a bare node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AskTarget {
    pub edge_index: Option<usize>,
    pub focal_id: NodeId,
}

impl AskTarget {
    pub fn edge(scene: &SceneGraph, edge_index: usize) -> Self {
        Self {
            edge_index: Some(edge_index),
            focal_id: scene.edge(edge_index).subject_id,
        }
    }

    pub fn node(focal_id: NodeId) -> Self {
        Self {
            edge_index: None,
            focal_id,
        }
    }
}

pub fn generate_question(
    outcome: &MatchOutcome,
    scene: &SceneGraph,
) -> Result<Question, QuestionError> {
    match outcome.action {
        MatchAction::Validate | MatchAction::Select => {}
        other => return Err(QuestionError::InvalidAction(other)),
    }
    let targets: Vec<AskTarget> = outcome
        .candidates
        .iter()
        .map(|c| AskTarget::edge(scene, c.edge_index))
        .collect();
    Ok(question_for(scene, &targets))
}

/// One target yields a validation question, several a selection.
pub fn question_for(scene: &SceneGraph, targets: &[AskTarget]) -> Question {
    assert!(!targets.is_empty(), "a question needs at least one target");
    let phrase_of = |edge: Option<usize>, focal: NodeId| match edge {
        Some(i) => render_phrase(scene, scene.edge(i), focal),
        None => render_node(scene, focal),
    };
    let option = |edge: Option<usize>, focal: NodeId, phrase: String| QuestionOption {
        edge: edge.map(|i| scene.edge(i).clone()),
        focal_id: focal,
        phrase,
        bbox: scene.node(focal).and_then(|n| n.bbox),
    };

    if let [only] = targets {
        let phrase = phrase_of(only.edge_index, only.focal_id);
        return Question {
            kind: QuestionKind::Validate,
            text: format!("Do you mean {phrase}? (yes/no)"),
            options: vec![option(only.edge_index, only.focal_id, phrase)],
            allows_none: true,
            positional_fallback: false,
        };
    }

    let mut options: Vec<QuestionOption> = targets
        .iter()
        .map(|t| {
            option(
                t.edge_index,
                t.focal_id,
                phrase_of(t.edge_index, t.focal_id),
            )
        })
        .collect();
    let mut positional_fallback = false;

    if !pairwise_distinct(&options) {
        let focal: Vec<NodeId> = targets.iter().map(|t| t.focal_id).collect();
        let chosen = distinctive_relations(scene, &focal);
        options = targets
            .iter()
            .zip(chosen)
            .map(|(t, edge)| {
                let edge = edge.or(t.edge_index);
                option(edge, t.focal_id, phrase_of(edge, t.focal_id))
            })
            .collect();
        if !pairwise_distinct(&options) {
            positional_fallback = true;
            let duplicated: Vec<bool> = options
                .iter()
                .map(|o| options.iter().filter(|p| p.phrase == o.phrase).count() > 1)
                .collect();
            for (o, dup) in options.iter_mut().zip(duplicated) {
                if dup {
                    if let Some(q) = quadrant(scene, o.focal_id) {
                        o.phrase = format!("{} ({q})", o.phrase);
                    }
                }
            }
        }
    }

    let mut text = String::from("Which one:");
    for (k, o) in options.iter().enumerate() {
        text.push_str(&format!(" ({}) {},", k + 1, o.phrase));
    }
    text.push_str(&format!(" ({}) none of these?", options.len() + 1));
    Question {
        kind: QuestionKind::Select,
        text,
        options,
        allows_none: true,
        positional_fallback,
    }
}

fn pairwise_distinct(options: &[QuestionOption]) -> bool {
    let mut seen = BTreeSet::new();
    options.iter().all(|o| seen.insert(o.phrase.as_str()))
}

/// Position of a node's bbox centre within the extent of all boxes.
fn quadrant(scene: &SceneGraph, id: NodeId) -> Option<&'static str> {
    let (cx, cy) = scene.node(id)?.bbox?.center();
    let (fx, fy) = scene.extent()?.center();
    Some(match (cy < fy, cx < fx) {
        (true, true) => "upper left",
        (true, false) => "upper right",
        (false, true) => "lower left",
        (false, false) => "lower right",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_scene_graph, GraphKind, ObjectNode};
    use crate::parser::parse_expression;
    use crate::reasoner::Reasoner;
    use crate::similarity::Similarity;

    const FIX_CUPS: &str = include_str!("../fixtures/scenes/fix-cups.json");
    const FIX_PLATES: &str = include_str!("../fixtures/scenes/fix-plates.json");

    fn outcome(scene: &SceneGraph, expr: &str) -> MatchOutcome {
        let sim = Similarity::bundled();
        let lang = parse_expression(expr).unwrap();
        Reasoner::new(scene, &sim).incremental_match(&lang.triplet(0))
    }

    #[test]
    fn renders_both_directions() {
        let scene = load_scene_graph(FIX_CUPS).unwrap();
        assert_eq!(
            render_phrase(&scene, &RelationEdge::new(3, "on", 1), 3),
            "the green cup on the table"
        );
        assert_eq!(
            render_phrase(&scene, &RelationEdge::new(3, "next to", 4), 4),
            "the red cup that the green cup is next to"
        );
        assert_eq!(
            render_phrase(&scene, &RelationEdge::new(6, "on", 1), 6),
            "the remote on the table"
        );
    }

    #[test]
    fn find_relation_on_cups() {
        let scene = load_scene_graph(FIX_CUPS).unwrap();
        // (3,on,1) and (4,on,1): "on the table" occurs twice.
        let picks = find_relation(&scene, &[0, 1]);
        assert_eq!(picks, vec![(0, 5), (1, 4)]);
        assert_eq!(scene.edge(5), &RelationEdge::new(3, "next to", 4));
        assert_eq!(scene.edge(4), &RelationEdge::new(4, "next to", 6));
        assert_eq!(find_relation(&scene, &[2]), vec![(2, 2)]);
    }

    #[test]
    fn find_relation_on_white_plates() {
        let scene = load_scene_graph(FIX_PLATES).unwrap();
        let picks = find_relation(&scene, &[0, 1, 2]);
        let phrases: Vec<String> = picks
            .iter()
            .map(|&(c, e)| render_phrase(&scene, scene.edge(e), scene.edge(c).subject_id))
            .collect();
        assert_eq!(
            phrases,
            vec![
                "the white plate near the black cat",
                "the white plate next to the lamp",
                "the white plate next to the silver fork",
            ]
        );
    }

    #[test]
    fn validation_question() {
        let scene = load_scene_graph(FIX_CUPS).unwrap();
        let q = generate_question(&outcome(&scene, "green cup under table"), &scene).unwrap();
        assert_eq!(q.kind, QuestionKind::Validate);
        assert_eq!(q.text, "Do you mean the green cup on the table? (yes/no)");
        assert_eq!(q.options.len(), 1);
        assert!(q.allows_none);
    }

    #[test]
    fn selection_with_distinct_phrases() {
        let scene = load_scene_graph(FIX_CUPS).unwrap();
        let q = generate_question(&outcome(&scene, "cup on the table"), &scene).unwrap();
        assert_eq!(q.kind, QuestionKind::Select);
        let phrases: Vec<&str> = q.options.iter().map(|o| o.phrase.as_str()).collect();
        assert_eq!(
            phrases,
            vec!["the green cup on the table", "the red cup on the table"]
        );
        assert_eq!(q.options[1].focal_id, 4);
        assert!(q.text.ends_with("(3) none of these?"));
        assert_eq!(q.options[1].bbox, scene.node(4).unwrap().bbox);
    }

    #[test]
    fn selection_with_identical_phrases_uses_relations() {
        let scene = load_scene_graph(FIX_PLATES).unwrap();
        let q = generate_question(&outcome(&scene, "white plate on the table"), &scene).unwrap();
        assert_eq!(
            q.text,
            "Which one: (1) the white plate near the black cat, (2) the white plate next to the lamp, \
             (3) the white plate next to the silver fork, (4) none of these?"
        );
        assert!(!q.positional_fallback);
    }

    #[test]
    fn symmetric_scene_falls_back_to_quadrants() {
        let scene = SceneGraph::new(
            GraphKind::Image,
            "sym",
            None,
            vec![
                ObjectNode::new(1, "cup").with_bbox(BBox::new(0, 0, 10, 10)),
                ObjectNode::new(2, "cup").with_bbox(BBox::new(90, 90, 10, 10)),
                ObjectNode::new(3, "table").with_bbox(BBox::new(0, 0, 100, 100)),
            ],
            vec![RelationEdge::new(1, "on", 3), RelationEdge::new(2, "on", 3)],
        )
        .unwrap();
        let q = generate_question(&outcome(&scene, "cup on table"), &scene).unwrap();
        assert!(q.positional_fallback);
        assert_eq!(q.options[0].phrase, "the cup on the table (upper left)");
        assert_eq!(q.options[1].phrase, "the cup on the table (lower right)");
    }

    #[test]
    fn node_targets_without_edges() {
        let scene = SceneGraph::new(
            GraphKind::Image,
            "lonely",
            None,
            vec![
                ObjectNode::new(1, "plate")
                    .with_attributes(["white"])
                    .with_bbox(BBox::new(0, 0, 5, 5)),
                ObjectNode::new(2, "plate")
                    .with_attributes(["red"])
                    .with_bbox(BBox::new(9, 0, 5, 5)),
            ],
            vec![],
        )
        .unwrap();
        let q = question_for(&scene, &[AskTarget::node(1), AskTarget::node(2)]);
        assert_eq!(q.options[0].phrase, "the white plate");
        assert_eq!(q.options[1].phrase, "the red plate");
        assert!(q.options.iter().all(|o| o.edge.is_none()));
    }

    #[test]
    fn no_question_for_terminal_actions() {
        let scene = load_scene_graph(FIX_CUPS).unwrap();
        let direct = outcome(&scene, "green cup on table");
        assert_eq!(
            generate_question(&direct, &scene),
            Err(QuestionError::InvalidAction(MatchAction::DirectGround))
        );
        let none = outcome(&scene, "banana next to car");
        assert_eq!(
            generate_question(&none, &scene),
            Err(QuestionError::InvalidAction(MatchAction::NoGrounding))
        );
    }
}
