//! Dialogue state machine for one grounding session.
//!
//! Language edges are resolved one at a time. An edge that matches exactly
//! one image edge literally is resolved silently; otherwise a question is
//! issued and the session waits. A rejected question may be followed by a
//! single widened question; after that the edge is given up. Once every
//! edge is resolved the chosen referents are intersected.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::asker::{question_for, AskTarget, Question, QuestionKind};
use crate::model::{BBox, NodeId, SceneGraph};
use crate::parser::{parse_expression, LanguageGraph};
use crate::reasoner::{MatchAction, Reasoner};
use crate::similarity::Similarity;

pub const REASON_NO_GROUNDING: &str = "no grounding";
pub const REASON_UNPARSEABLE: &str = "unparseable";
pub const REASON_REJECTED: &str = "rejected";
pub const REASON_CONFLICT: &str = "conflicting edges";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("option {option} out of range (question has {count} options)")]
    InvalidOption { option: usize, count: usize },
    #[error("{reply} is not a valid reply to a {kind:?} question")]
    WrongReplyKind { reply: String, kind: QuestionKind },
    #[error("session is not awaiting an answer")]
    NotAwaiting,
}

/// A user reply. Options are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reply {
    Option(usize),
    Yes,
    No,
    None,
}

impl Reply {
    /// Parses terminal input: a number, yes/no (or y/n), or "none".
    pub fn parse(input: &str) -> Option<Reply> {
        let input = input.trim().to_lowercase();
        match input.as_str() {
            "y" | "yes" => Some(Reply::Yes),
            "n" | "no" => Some(Reply::No),
            "none" | "none of these" => Some(Reply::None),
            other => other.parse().ok().map(Reply::Option),
        }
    }
}

impl std::fmt::Display for Reply {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Reply::Option(k) => write!(f, "option {k}"),
            Reply::Yes => f.write_str("yes"),
            Reply::No => f.write_str("no"),
            Reply::None => f.write_str("none"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SessionStatus {
    AwaitingAnswer,
    Grounded { node_id: NodeId, bbox: Option<BBox> },
    Failed { reason: String },
}

impl SessionStatus {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, SessionStatus::AwaitingAnswer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Started,
    Asked,
    Answered,
    Grounded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionEvent {
    pub event: EventKind,
    pub payload: Value,
}

/// What is behind the pending question.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Pending {
    targets: Vec<AskTarget>,
    /// Asked on rejection; empty once used or when nothing wider exists.
    fallback: Vec<AskTarget>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionState {
    pub session_id: String,
    pub scene_id: String,
    pub expression: String,
    pub language: Option<LanguageGraph>,
    pub edge_cursor: usize,
    pub per_edge_selection: BTreeMap<usize, NodeId>,
    pub pending: Option<Question>,
    pub interactions: u32,
    pub status: SessionStatus,
    pub events: Vec<SessionEvent>,
    #[serde(skip)]
    pending_targets: Option<Pending>,
}

impl SessionState {
    pub fn is_terminal(&self) -> bool {
        self.status.is_terminal()
    }

    pub fn edge_count(&self) -> usize {
        self.language.as_ref().map_or(0, |l| l.edge_count())
    }

    pub fn grounded_node(&self) -> Option<NodeId> {
        match self.status {
            SessionStatus::Grounded { node_id, .. } => Some(node_id),
            _ => None,
        }
    }

    fn log(&mut self, event: EventKind, payload: Value) {
        self.events.push(SessionEvent { event, payload });
    }

    fn ask(&mut self, scene: &SceneGraph, targets: Vec<AskTarget>, fallback: Vec<AskTarget>) {
        let question = question_for(scene, &targets);
        self.interactions += 1;
        self.log(
            EventKind::Asked,
            serde_json::to_value(&question).expect("questions serialize"),
        );
        self.pending = Some(question);
        self.pending_targets = Some(Pending { targets, fallback });
        self.status = SessionStatus::AwaitingAnswer;
    }

    fn ground(&mut self, scene: &SceneGraph, node_id: NodeId) {
        let bbox = scene.node(node_id).and_then(|n| n.bbox);
        self.pending = None;
        self.pending_targets = None;
        self.status = SessionStatus::Grounded { node_id, bbox };
        self.log(
            EventKind::Grounded,
            json!({ "node_id": node_id, "bbox": bbox, "interactions": self.interactions }),
        );
    }

    fn fail(&mut self, reason: &str) {
        self.pending = None;
        self.pending_targets = None;
        self.status = SessionStatus::Failed {
            reason: reason.to_string(),
        };
        self.log(
            EventKind::Failed,
            json!({ "reason": reason, "interactions": self.interactions }),
        );
    }
}

/// Runs sessions against scenes with a fixed similarity gate.
#[derive(Debug, Clone, Default)]
pub struct Grounder {
    similarity: Similarity,
}

impl Grounder {
    pub fn new(similarity: Similarity) -> Self {
        Self { similarity }
    }

    pub fn similarity(&self) -> &Similarity {
        &self.similarity
    }

    pub fn start(
        &self,
        scene: &SceneGraph,
        expression: &str,
        session_id: impl Into<String>,
    ) -> SessionState {
        let mut state = SessionState {
            session_id: session_id.into(),
            scene_id: scene.scene_id.clone(),
            expression: expression.to_string(),
            language: None,
            edge_cursor: 0,
            per_edge_selection: BTreeMap::new(),
            pending: None,
            interactions: 0,
            status: SessionStatus::AwaitingAnswer,
            events: Vec::new(),
            pending_targets: None,
        };
        state.log(
            EventKind::Started,
            json!({ "scene_id": scene.scene_id, "expression": expression }),
        );
        let language = match parse_expression(expression) {
            Ok(l) => l,
            Err(e) => {
                state.fail(REASON_UNPARSEABLE);
                if let Some(Value::Object(payload)) =
                    state.events.last_mut().map(|e| &mut e.payload)
                {
                    payload.insert("detail".into(), Value::String(e.to_string()));
                }
                return state;
            }
        };
        let relationless = language.edge_count() == 0;
        let head = language.head().clone();
        state.language = Some(language);

        if relationless {
            let found = Reasoner::new(scene, &self.similarity).match_node(&head);
            match found.candidates.as_slice() {
                [] => state.fail(REASON_NO_GROUNDING),
                [only] if found.exact => state.ground(scene, *only),
                nodes => {
                    let targets = nodes.iter().copied().map(AskTarget::node).collect();
                    state.ask(scene, targets, Vec::new());
                }
            }
        } else {
            self.advance(scene, &mut state);
        }
        state
    }

    /// Applies a reply. The state is left untouched when the reply is
    /// rejected with an error.
    pub fn answer(
        &self,
        scene: &SceneGraph,
        state: &mut SessionState,
        reply: Reply,
    ) -> Result<(), SessionError> {
        let (question, pending) = match (&state.pending, &state.pending_targets) {
            (Some(q), Some(p)) if !state.is_terminal() => (q.clone(), p.clone()),
            _ => return Err(SessionError::NotAwaiting),
        };
        let chosen = match (question.kind, reply) {
            (_, Reply::None) | (QuestionKind::Validate, Reply::No) => None,
            (QuestionKind::Validate, Reply::Yes) => Some(pending.targets[0].focal_id),
            (QuestionKind::Select, Reply::Option(k)) => {
                if k == 0 || k > pending.targets.len() {
                    return Err(SessionError::InvalidOption {
                        option: k,
                        count: pending.targets.len(),
                    });
                }
                Some(pending.targets[k - 1].focal_id)
            }
            (kind, reply) => {
                return Err(SessionError::WrongReplyKind {
                    reply: reply.to_string(),
                    kind,
                })
            }
        };
        state.log(
            EventKind::Answered,
            serde_json::to_value(reply).expect("replies serialize"),
        );
        state.pending = None;
        state.pending_targets = None;

        let Some(node) = chosen else {
            if pending.fallback.is_empty() {
                state.fail(REASON_REJECTED);
            } else {
                state.ask(scene, pending.fallback, Vec::new());
            }
            return Ok(());
        };

        if state.edge_count() == 0 {
            state.ground(scene, node);
            return Ok(());
        }
        state.per_edge_selection.insert(state.edge_cursor, node);
        state.edge_cursor += 1;
        self.advance(scene, state);
        Ok(())
    }

    /// Resolves edges from the cursor on until a question is needed or all
    /// edges are done.
    fn advance(&self, scene: &SceneGraph, state: &mut SessionState) {
        let reasoner = Reasoner::new(scene, &self.similarity);
        let language = state.language.clone().expect("advance runs after parsing");
        while state.edge_cursor < language.edge_count() {
            let outcome = reasoner.incremental_match(&language.triplet(state.edge_cursor));
            match outcome.action {
                // An edge that matches nothing is dropped rather than
                // failing the whole command.
                MatchAction::NoGrounding => state.edge_cursor += 1,
                MatchAction::DirectGround => {
                    let subject = outcome.candidates[0].edge.subject_id;
                    state.per_edge_selection.insert(state.edge_cursor, subject);
                    state.edge_cursor += 1;
                }
                MatchAction::Validate | MatchAction::Select => {
                    let targets = outcome
                        .candidates
                        .iter()
                        .map(|c| AskTarget::edge(scene, c.edge_index))
                        .collect();
                    let fallback = outcome
                        .wider_remainder()
                        .into_iter()
                        .map(|i| AskTarget::edge(scene, i))
                        .collect();
                    state.ask(scene, targets, fallback);
                    return;
                }
            }
        }
        self.resolve(scene, state);
    }

    fn resolve(&self, scene: &SceneGraph, state: &mut SessionState) {
        let mut chosen = state.per_edge_selection.values();
        let Some(&first) = chosen.next() else {
            state.fail(REASON_NO_GROUNDING);
            return;
        };
        if chosen.all(|&n| n == first) {
            state.ground(scene, first);
        } else {
            state.fail(REASON_CONFLICT);
        }
    }
}
