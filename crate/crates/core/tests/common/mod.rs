#![allow(dead_code)]

use std::path::PathBuf;

use grounding_core::model::{load_scene_graph_file, GraphKind};
use grounding_core::{BBox, ObjectNode, RelationEdge, SceneGraph};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub const NAMES: &[&str] = &[
    "cup", "mug", "table", "desk", "sofa", "couch", "plate", "boy", "lamp",
];
pub const ATTRS: &[&str] = &["green", "red", "white", "black", "top", "left"];
pub const PREDICATES: &[&str] = &["on", "next to", "beside", "under", "near", "in", "wearing"];

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_scene(name: &str) -> SceneGraph {
    load_scene_graph_file(fixtures().join("scenes").join(format!("{name}.json"))).unwrap()
}

fn attrs(rng: &mut StdRng, max: usize) -> Vec<&'static str> {
    let n = rng.gen_range(0..=max);
    let mut picked: Vec<&str> = ATTRS.choose_multiple(rng, n).copied().collect();
    picked.shuffle(rng);
    picked
}

/// Random image graph with at most `max_nodes` nodes and `max_edges` edges.
pub fn random_scene(rng: &mut StdRng, max_nodes: u32, max_edges: usize) -> SceneGraph {
    let n = rng.gen_range(2..=max_nodes);
    let nodes: Vec<ObjectNode> = (1..=n)
        .map(|id| {
            let x = rng.gen_range(0..500);
            let y = rng.gen_range(0..500);
            ObjectNode::new(id, *NAMES.choose(rng).unwrap())
                .with_attributes(attrs(rng, 2))
                .with_bbox(BBox::new(x, y, rng.gen_range(1..80), rng.gen_range(1..80)))
        })
        .collect();
    let target = rng.gen_range(0..=max_edges);
    let mut edges: Vec<RelationEdge> = Vec::new();
    for _ in 0..target * 3 {
        if edges.len() == target {
            break;
        }
        let s = rng.gen_range(1..=n);
        let o = rng.gen_range(1..=n);
        if s == o {
            continue;
        }
        let e = RelationEdge::new(s, *PREDICATES.choose(rng).unwrap(), o);
        if !edges.contains(&e) {
            edges.push(e);
        }
    }
    SceneGraph::new(GraphKind::Image, "random", None, nodes, edges).unwrap()
}

fn noun_phrase(rng: &mut StdRng) -> String {
    let mut words: Vec<String> = attrs(rng, 2).into_iter().map(String::from).collect();
    words.push(NAMES.choose(rng).unwrap().to_string());
    words.join(" ")
}

/// Random expression over the generator vocabulary with `relations` REL
/// clauses.
pub fn random_expression(rng: &mut StdRng, relations: usize) -> String {
    let mut parts = vec![noun_phrase(rng)];
    for _ in 0..relations {
        parts.push(PREDICATES.choose(rng).unwrap().to_string());
        if rng.gen_bool(0.5) {
            parts.push("the".into());
        }
        parts.push(noun_phrase(rng));
    }
    parts.join(" ")
}
