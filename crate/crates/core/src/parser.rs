//! Rule-based parser from referring expressions to language scene graphs.
//!
//! Accepted shape:
//!
//! ```text
//! NP  := det? ATTR* NOUN REL*
//! REL := PREP NP | GERUND NP
//! ```
//!
//! Every REL attaches to the head noun, so "black bag in the car next to the
//! red bag" yields two edges rooted at the black bag. Nested attachment is
//! not representable.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::{normalize_token, GraphKind, NodeId, ObjectNode, RelationEdge, SceneGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    EmptyExpression,
    #[error("cannot parse {text:?}: {reason}")]
    Unparseable { text: String, reason: String },
}

const DETERMINERS: &[&str] = &["the", "a", "an", "that", "this"];

/// Longest phrases first so "on top of" wins over "on".
const RELATIONS: &[&str] = &[
    "to the right of",
    "to the left of",
    "in front of",
    "on top of",
    "sitting on",
    "standing on",
    "next to",
    "wearing",
    "holding",
    "carrying",
    "riding",
    "on",
    "in",
    "under",
    "near",
    "beside",
    "behind",
    "above",
    "below",
    "inside",
];

/// Relative-clause glue skipped when directly followed by a relation.
const GLUE: &[&[&str]] = &[
    &["that", "is"],
    &["which", "is"],
    &["who", "is"],
    &["that's"],
];

const ACTION_VERBS: &[&str] = &[
    "pick up", "hand me", "grab", "get", "bring", "fetch", "take",
];

/// Removes a leading action verb ("grab", "pick up", ...) and an optional
/// article after it. Returns the input unchanged when no verb leads.
pub fn strip_action_prefix(text: &str) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    let lower: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    for verb in ACTION_VERBS {
        let verb_words: Vec<&str> = verb.split(' ').collect();
        if lower.len() >= verb_words.len() && lower.iter().zip(&verb_words).all(|(w, v)| w == v) {
            let mut rest = verb_words.len();
            if lower
                .get(rest)
                .is_some_and(|w| matches!(w.as_str(), "the" | "a" | "an"))
            {
                rest += 1;
            }
            return words[rest..].join(" ");
        }
    }
    text.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LanguageGraph {
    pub head_id: NodeId,
    pub graph: SceneGraph,
    pub raw_text: String,
}

/// One language edge with its endpoint nodes resolved.
#[derive(Debug, Clone, Copy)]
pub struct Triplet<'a> {
    pub subject: &'a ObjectNode,
    pub predicate: &'a str,
    pub object: &'a ObjectNode,
}

impl fmt::Display for Triplet<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {})",
            self.subject.describe(),
            self.predicate,
            self.object.describe()
        )
    }
}

impl LanguageGraph {
    pub fn head(&self) -> &ObjectNode {
        self.graph.node_unchecked(self.head_id)
    }

    pub fn edges(&self) -> &[RelationEdge] {
        self.graph.edges()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edges().len()
    }

    pub fn triplet(&self, index: usize) -> Triplet<'_> {
        let edge = &self.graph.edges()[index];
        Triplet {
            subject: self.graph.subject_of(edge),
            predicate: &edge.predicate,
            object: self.graph.object_of(edge),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = Triplet<'_>> {
        (0..self.edge_count()).map(|i| self.triplet(i))
    }
}

/// Parses a referring expression. A leading action verb is stripped first.
pub fn parse_expression(text: &str) -> Result<LanguageGraph, ParseError> {
    let stripped = strip_action_prefix(text.trim());
    let tokens = tokenize(&stripped)?;
    if tokens.is_empty() {
        return Err(ParseError::EmptyExpression);
    }
    let fail = |reason: String| ParseError::Unparseable {
        text: text.to_string(),
        reason,
    };

    // Split into alternating NP / relation segments.
    let mut phrases: Vec<Vec<String>> = vec![Vec::new()];
    let mut relations: Vec<String> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if let Some(len) = glue_at(&tokens, i) {
            i += len;
            continue;
        }
        if let Some((rel, len)) = relation_at(&tokens, i) {
            relations.push(rel.to_string());
            phrases.push(Vec::new());
            i += len;
            continue;
        }
        phrases
            .last_mut()
            .expect("never empty")
            .push(tokens[i].clone());
        i += 1;
    }

    let mut nodes = Vec::with_capacity(phrases.len());
    for (id, words) in phrases.iter().enumerate() {
        let node = noun_phrase(id as NodeId, words).map_err(&fail)?;
        nodes.push(node);
    }
    let edges = relations
        .into_iter()
        .enumerate()
        .map(|(k, rel)| RelationEdge::new(0, rel, k as NodeId + 1))
        .collect();
    let graph = SceneGraph::new(GraphKind::Language, text.trim(), None, nodes, edges)
        .map_err(|e| fail(e.to_string()))?;
    Ok(LanguageGraph {
        head_id: 0,
        graph,
        raw_text: text.to_string(),
    })
}

fn tokenize(text: &str) -> Result<Vec<String>, ParseError> {
    let cleaned: String = text
        .chars()
        .map(|c| if ".,!?;:".contains(c) { ' ' } else { c })
        .collect();
    let mut tokens = Vec::new();
    for word in cleaned.split_whitespace() {
        let word = word.to_lowercase();
        if !word
            .chars()
            .all(|c| c.is_alphanumeric() || c == '-' || c == '\'')
        {
            return Err(ParseError::Unparseable {
                text: text.to_string(),
                reason: format!("unexpected token {word:?}"),
            });
        }
        tokens.push(word);
    }
    Ok(tokens)
}

fn matches_at(tokens: &[String], i: usize, phrase: &[&str]) -> bool {
    tokens.len() >= i + phrase.len()
        && tokens[i..i + phrase.len()]
            .iter()
            .zip(phrase)
            .all(|(t, p)| t == p)
}

fn relation_at(tokens: &[String], i: usize) -> Option<(&'static str, usize)> {
    RELATIONS.iter().find_map(|rel| {
        let words: Vec<&str> = rel.split(' ').collect();
        matches_at(tokens, i, &words).then_some((*rel, words.len()))
    })
}

fn glue_at(tokens: &[String], i: usize) -> Option<usize> {
    GLUE.iter().find_map(|g| {
        (matches_at(tokens, i, g) && relation_at(tokens, i + g.len()).is_some()).then_some(g.len())
    })
}

fn noun_phrase(id: NodeId, words: &[String]) -> Result<ObjectNode, String> {
    let mut rest = words;
    if let Some(first) = rest.first() {
        if DETERMINERS.contains(&first.as_str()) {
            rest = &rest[1..];
        }
    }
    let (noun, attrs) = rest
        .split_last()
        .ok_or_else(|| "noun phrase without a noun".to_string())?;
    if DETERMINERS.contains(&noun.as_str()) {
        return Err(format!("determiner {noun:?} in noun position"));
    }
    if let Some(det) = attrs.iter().find(|a| DETERMINERS.contains(&a.as_str())) {
        return Err(format!("determiner {det:?} inside a noun phrase"));
    }
    let mut attributes: Vec<String> = Vec::new();
    for a in attrs {
        let a = normalize_token(a).map_err(|e| e.to_string())?;
        if !attributes.contains(&a) {
            attributes.push(a);
        }
    }
    let name = normalize_token(noun).map_err(|e| e.to_string())?;
    Ok(ObjectNode::new(id, name).with_attributes(attributes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triplets(g: &LanguageGraph) -> Vec<(String, String, String)> {
        g.triplets()
            .map(|t| {
                (
                    t.subject.describe(),
                    t.predicate.to_string(),
                    t.object.describe(),
                )
            })
            .collect()
    }

    #[test]
    fn action_prefix() {
        assert_eq!(strip_action_prefix("grab the cup"), "cup");
        assert_eq!(strip_action_prefix("cup on the table"), "cup on the table");
        assert_eq!(strip_action_prefix("pick up the green cup"), "green cup");
        assert_eq!(strip_action_prefix("Hand me a fork"), "fork");
        assert_eq!(strip_action_prefix("getter"), "getter");
    }

    #[test]
    fn triplet_form() {
        let g = parse_expression("cup on table").unwrap();
        assert_eq!(g.head().name, "cup");
        assert_eq!(
            triplets(&g),
            vec![("cup".into(), "on".into(), "table".into())]
        );
    }

    #[test]
    fn relationless() {
        let g = parse_expression("the green cup").unwrap();
        assert_eq!(g.head().name, "cup");
        assert_eq!(g.head().attributes, vec!["green"]);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn stacked_relations_attach_to_head() {
        let g = parse_expression("black bag in the car next to the red bag").unwrap();
        assert_eq!(g.head().describe(), "black bag");
        assert_eq!(
            triplets(&g),
            vec![
                ("black bag".into(), "in".into(), "car".into()),
                ("black bag".into(), "next to".into(), "red bag".into()),
            ]
        );
        assert!(g.edges().iter().all(|e| e.subject_id == g.head_id));
    }

    #[test]
    fn gerund_relation() {
        let g = parse_expression("boy wearing black shirt").unwrap();
        assert_eq!(
            triplets(&g),
            vec![("boy".into(), "wearing".into(), "black shirt".into())]
        );
    }

    #[test]
    fn relative_clause_glue() {
        let g = parse_expression("the cup that is on the table").unwrap();
        assert_eq!(
            triplets(&g),
            vec![("cup".into(), "on".into(), "table".into())]
        );
    }

    #[test]
    fn multiword_relations() {
        let g = parse_expression("grab the lamp to the left of the sofa").unwrap();
        assert_eq!(
            triplets(&g),
            vec![("lamp".into(), "to the left of".into(), "sofa".into())]
        );
        let g = parse_expression("plate on top of the box").unwrap();
        assert_eq!(triplets(&g)[0].1, "on top of");
    }

    #[test]
    fn positional_terms_are_recorded() {
        let g = parse_expression("the third left plate").unwrap();
        assert_eq!(g.head().attributes, vec!["third", "left"]);
    }

    #[test]
    fn errors() {
        assert_eq!(parse_expression("   "), Err(ParseError::EmptyExpression));
        assert_eq!(
            parse_expression("grab the"),
            Err(ParseError::EmptyExpression)
        );
        assert!(matches!(
            parse_expression("on the table"),
            Err(ParseError::Unparseable { .. })
        ));
        assert!(matches!(
            parse_expression("cup on"),
            Err(ParseError::Unparseable { .. })
        ));
        assert!(matches!(
            parse_expression("cup the table"),
            Err(ParseError::Unparseable { .. })
        ));
        assert!(matches!(
            parse_expression("cup on under table"),
            Err(ParseError::Unparseable { .. })
        ));
        assert!(matches!(
            parse_expression("cup @ table"),
            Err(ParseError::Unparseable { .. })
        ));
    }

    #[test]
    fn plural_nouns_normalize() {
        let g = parse_expression("Cups on the Tables.").unwrap();
        assert_eq!(
            triplets(&g),
            vec![("cup".into(), "on".into(), "table".into())]
        );
    }
}
