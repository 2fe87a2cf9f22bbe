//! Interactive object grounding over semantic scene graphs.
//!
//! A referring expression is parsed into a small language scene graph, each
//! of its edges is matched incrementally against the image scene graph, and
//! when the match is ambiguous or inexact a question is generated whose
//! answer narrows the referent down to one image node.
//!
//! ```
//! use grounding_core::{load_scene_graph, Grounder, Reply};
//!
//! let scene = load_scene_graph(include_str!("../fixtures/scenes/fix-cups.json")).unwrap();
//! let grounder = Grounder::default();
//! let mut session = grounder.start(&scene, "cup on the table", "demo");
//! assert_eq!(session.interactions, 1);
//! grounder.answer(&scene, &mut session, Reply::Option(2)).unwrap();
//! assert_eq!(session.grounded_node(), Some(4));
//! ```

pub mod asker;
pub mod eval;
pub mod model;
pub mod parser;
pub mod reasoner;
pub mod session;
pub mod similarity;

pub use asker::{generate_question, Question, QuestionKind, QuestionOption};
pub use eval::{oracle_reply, run_eval, Category, EvalCommand, MetricsReport};
pub use model::{
    load_scene_graph, BBox, NodeId, ObjectNode, RelationEdge, SceneDocument, SceneGraph,
};
pub use parser::{parse_expression, LanguageGraph};
pub use reasoner::{MatchAction, MatchOutcome, MatchStage, Reasoner};
pub use session::{Grounder, Reply, SessionError, SessionState, SessionStatus};
pub use similarity::{Similarity, SimilarityConfig};
