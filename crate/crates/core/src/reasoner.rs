//! Incremental edge matching.
//!
//! A language edge is matched against the image edges in the fixed order
//! object → subject → predicate → attribute. Each stage filters the
//! survivors of the previous one; a stage that empties the set stops the
//! cascade and the previous survivors are used. The only exception is the
//! object stage: when no object matches, matching restarts from the subject
//! over every image edge.

use serde::Serialize;

use crate::model::{NodeId, ObjectNode, RelationEdge, SceneGraph};
use crate::parser::Triplet;
use crate::similarity::Similarity;

/// Ordinal and comparative terms that pairwise relations cannot encode.
/// They are ignored when filtering and left to the question step.
pub const POSITIONAL_ATTRIBUTES: &[&str] = &[
    "top",
    "bottom",
    "left",
    "right",
    "leftmost",
    "rightmost",
    "first",
    "second",
    "third",
    "closest",
    "furthest",
    "nearest",
    "middle",
    "front",
    "back",
];

pub fn is_positional(attr: &str) -> bool {
    POSITIONAL_ATTRIBUTES.contains(&attr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStage {
    Object,
    Subject,
    Predicate,
    Attribute,
    NodeOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchAction {
    DirectGround,
    Validate,
    Select,
    NoGrounding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Candidate {
    pub edge_index: usize,
    pub edge: RelationEdge,
    pub exact: bool,
}

/// Survivors of one stage, as image edge indices in document order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageTrace {
    pub stage: MatchStage,
    pub survivors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchOutcome {
    pub action: MatchAction,
    pub candidates: Vec<Candidate>,
    pub stage_reached: MatchStage,
    /// Every stage that ran, in execution order.
    pub trace: Vec<StageTrace>,
}

impl MatchOutcome {
    pub fn candidate_indices(&self) -> Vec<usize> {
        self.candidates.iter().map(|c| c.edge_index).collect()
    }

    /// Survivors of the latest stage that was strictly wider than the
    /// candidate set, minus the candidates themselves.
    pub fn wider_remainder(&self) -> Vec<usize> {
        let asked = self.candidate_indices();
        self.trace
            .iter()
            .rev()
            .find(|t| t.survivors.len() > asked.len())
            .map(|t| {
                t.survivors
                    .iter()
                    .copied()
                    .filter(|i| !asked.contains(i))
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// Result of matching a bare noun phrase against image nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeMatch {
    pub candidates: Vec<NodeId>,
    /// Whether the single candidate (if any) carries every language
    /// attribute literally.
    pub exact: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Reasoner<'a> {
    scene: &'a SceneGraph,
    sim: &'a Similarity,
}

impl<'a> Reasoner<'a> {
    pub fn new(scene: &'a SceneGraph, sim: &'a Similarity) -> Self {
        Self { scene, sim }
    }

    pub fn scene(&self) -> &'a SceneGraph {
        self.scene
    }

    fn all_edges(&self) -> Vec<usize> {
        (0..self.scene.edges().len()).collect()
    }

    pub fn match_object(&self, lang: &Triplet<'_>, edges: &[usize]) -> Vec<usize> {
        self.filter(edges, |e| {
            self.sim
                .is_match(&lang.object.name, &self.scene.object_of(e).name)
        })
    }

    pub fn match_subject(&self, lang: &Triplet<'_>, edges: &[usize]) -> Vec<usize> {
        self.filter(edges, |e| {
            self.sim
                .is_match(&lang.subject.name, &self.scene.subject_of(e).name)
        })
    }

    pub fn match_predicate(&self, lang: &Triplet<'_>, edges: &[usize]) -> Vec<usize> {
        self.filter(edges, |e| self.sim.is_match(lang.predicate, &e.predicate))
    }

    /// Conjunctive: every non-positional language attribute of the subject
    /// must be matched by some attribute of the image subject.
    pub fn match_attribute(&self, lang: &Triplet<'_>, edges: &[usize]) -> Vec<usize> {
        self.filter(edges, |e| {
            self.attributes_match(lang.subject, self.scene.subject_of(e))
        })
    }

    fn attributes_match(&self, lang: &ObjectNode, image: &ObjectNode) -> bool {
        lang.attributes
            .iter()
            .filter(|a| !is_positional(a))
            .all(|a| image.attributes.iter().any(|b| self.sim.is_match(a, b)))
    }

    fn filter(&self, edges: &[usize], keep: impl Fn(&RelationEdge) -> bool) -> Vec<usize> {
        edges
            .iter()
            .copied()
            .filter(|&i| keep(self.scene.edge(i)))
            .collect()
    }

    /// Literal agreement of names, predicate and every language attribute.
    pub fn is_exact(&self, lang: &Triplet<'_>, edge: &RelationEdge) -> bool {
        let subject = self.scene.subject_of(edge);
        let object = self.scene.object_of(edge);
        subject.name == lang.subject.name
            && edge.predicate == lang.predicate
            && object.name == lang.object.name
            && lang
                .subject
                .attributes
                .iter()
                .all(|a| subject.has_attribute(a))
            && lang
                .object
                .attributes
                .iter()
                .all(|a| object.has_attribute(a))
    }

    pub fn incremental_match(&self, lang: &Triplet<'_>) -> MatchOutcome {
        let mut trace = Vec::new();
        let mut run = |stage: MatchStage, survivors: Vec<usize>| {
            trace.push(StageTrace {
                stage,
                survivors: survivors.clone(),
            });
            survivors
        };

        let all = self.all_edges();
        let obj = run(MatchStage::Object, self.match_object(lang, &all));

        let (stage, chosen) = if obj.is_empty() {
            let sub = run(MatchStage::Subject, self.match_subject(lang, &all));
            if sub.is_empty() {
                (MatchStage::Subject, sub)
            } else {
                // Attributes before predicates on this branch.
                let attr = run(MatchStage::Attribute, self.match_attribute(lang, &sub));
                let (stage, base) = if attr.is_empty() {
                    (MatchStage::Subject, sub)
                } else {
                    (MatchStage::Attribute, attr)
                };
                let pred = run(MatchStage::Predicate, self.match_predicate(lang, &base));
                if pred.is_empty() {
                    (stage, base)
                } else {
                    (MatchStage::Predicate, pred)
                }
            }
        } else {
            let sub = run(MatchStage::Subject, self.match_subject(lang, &obj));
            if sub.is_empty() {
                (MatchStage::Object, obj)
            } else {
                let pred = run(MatchStage::Predicate, self.match_predicate(lang, &sub));
                match pred.len() {
                    0 => {
                        // Predicate mismatch: keep the subject survivors but
                        // still narrow them by attribute before asking.
                        let attr = run(MatchStage::Attribute, self.match_attribute(lang, &sub));
                        if attr.is_empty() {
                            (MatchStage::Subject, sub)
                        } else {
                            (MatchStage::Attribute, attr)
                        }
                    }
                    1 => (MatchStage::Predicate, pred),
                    _ => {
                        let attr = run(MatchStage::Attribute, self.match_attribute(lang, &pred));
                        if attr.is_empty() {
                            (MatchStage::Predicate, pred)
                        } else {
                            (MatchStage::Attribute, attr)
                        }
                    }
                }
            }
        };

        let candidates: Vec<Candidate> = chosen
            .into_iter()
            .map(|i| {
                let edge = self.scene.edge(i).clone();
                Candidate {
                    edge_index: i,
                    exact: self.is_exact(lang, &edge),
                    edge,
                }
            })
            .collect();
        let action = match candidates.as_slice() {
            [] => MatchAction::NoGrounding,
            [only] if only.exact => MatchAction::DirectGround,
            [_] => MatchAction::Validate,
            _ => MatchAction::Select,
        };
        MatchOutcome {
            action,
            candidates,
            stage_reached: stage,
            trace,
        }
    }

    /// Node-level matching for expressions without relations.
    pub fn match_node(&self, head: &ObjectNode) -> NodeMatch {
        let named: Vec<&ObjectNode> = self
            .scene
            .nodes()
            .iter()
            .filter(|n| self.sim.is_match(&head.name, &n.name))
            .collect();
        let filtered: Vec<&ObjectNode> = named
            .iter()
            .copied()
            .filter(|n| self.attributes_match(head, n))
            .collect();
        let chosen = if filtered.is_empty() { named } else { filtered };
        let exact = match chosen.as_slice() {
            [only] => {
                only.name == head.name && head.attributes.iter().all(|a| only.has_attribute(a))
            }
            _ => false,
        };
        NodeMatch {
            candidates: chosen.into_iter().map(|n| n.id).collect(),
            exact,
        }
    }
}
