mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use grounding_core::asker::{find_relation, question_for, AskTarget, PhraseSignature};
use grounding_core::eval::{evaluate, load_scenes_dir, parse_commands};
use grounding_core::similarity::{SimilarityProvider, WordVectors};
use grounding_core::{oracle_reply, Grounder, QuestionKind, Reply, Similarity};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use common::*;

fn fixture_vectors() -> WordVectors {
    WordVectors::load(&fixtures().join("vectors.txt")).unwrap()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[test]
fn vector_scores_match_reference_cosine() {
    let v = fixture_vectors();
    let cup = [0.9, 0.1, 0.0, 0.2];
    let table = [0.1, 0.9, 0.3, 0.0];
    let banana = [0.0, 0.1, 0.2, 0.95];
    let want = (cosine(&cup, &table) + 1.0) / 2.0;
    assert!((v.score("cup", "table") - want).abs() < 1e-12);
    assert!(v.score("cup", "table") < 0.8);
    let want = (cosine(&banana, &cup) + 1.0) / 2.0;
    assert!((v.score("banana", "cup") - want).abs() < 1e-12);
    assert!(v.score("banana", "cup") < 0.8);
    assert!(v.score("cup", "mug") >= 0.8);
}

#[test]
fn multiword_phrase_is_mean_of_tokens() {
    let v = fixture_vectors();
    let next = v.embed("next").unwrap();
    let to = v.embed("to").unwrap();
    let phrase = v.embed("next to").unwrap();
    for i in 0..v.dim() {
        assert!((phrase[i] - (next[i] + to[i]) / 2.0).abs() < 1e-12);
    }
    assert!(v.embed("next to zebra").is_none());
    assert_eq!(v.score("cup", "zebra"), 0.0);
}

#[test]
fn vector_provider_respects_threshold() {
    let v: Arc<dyn SimilarityProvider> = Arc::new(fixture_vectors());
    let strict = Similarity::with_provider(v.clone(), 0.99);
    let loose = Similarity::with_provider(v, 0.5);
    assert!(!strict.is_match("cup", "table"));
    assert!(loose.is_match("cup", "table"));
    assert!(strict.is_match("cups", "cup"));
}

#[test]
fn unique_signatures_yield_distinct_options() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut checked = 0;
    for _ in 0..400 {
        let scene = random_scene(&mut rng, 8, 12);
        if scene.edges().len() < 2 {
            continue;
        }
        let mut pool: Vec<usize> = (0..scene.edges().len()).collect();
        pool.shuffle(&mut rng);
        pool.truncate(rng.gen_range(2..=pool.len().min(4)));
        // Each candidate needs its own focal node for the property to apply.
        let focals: BTreeSet<_> = pool.iter().map(|&i| scene.edge(i).subject_id).collect();
        if focals.len() != pool.len() {
            continue;
        }
        let chosen = find_relation(&scene, &pool);
        let sigs: Vec<PhraseSignature> = chosen
            .iter()
            .map(|&(c, e)| PhraseSignature::of(&scene, scene.edge(e), scene.edge(c).subject_id))
            .collect();
        let counts_one = sigs
            .iter()
            .all(|s| sigs.iter().filter(|t| *t == s).count() == 1);
        let targets: Vec<AskTarget> = pool.iter().map(|&i| AskTarget::edge(&scene, i)).collect();
        let q = question_for(&scene, &targets);
        assert_eq!(q.kind, QuestionKind::Select);
        assert!(q.allows_none);
        assert!(q.text.contains("none of these"), "{}", q.text);
        let phrases: BTreeSet<&str> = q.options.iter().map(|o| o.phrase.as_str()).collect();
        if counts_one {
            assert_eq!(phrases.len(), q.options.len(), "{:?}", q.options);
            checked += 1;
        }
    }
    assert!(checked > 20, "only {checked} qualifying cases");
}

#[test]
fn replaying_replies_reproduces_state() {
    let mut rng = StdRng::seed_from_u64(99);
    let g = Grounder::default();
    for i in 0..200 {
        let scene = random_scene(&mut rng, 8, 12);
        let relations = rng.gen_range(0..=2);
        let expr = random_expression(&mut rng, relations);
        let mut state = g.start(&scene, &expr, "replay");
        let mut replies = Vec::new();
        while let Some(q) = state.pending.clone() {
            let reply = if rng.gen_bool(0.3) {
                Reply::None
            } else if q.kind == QuestionKind::Validate {
                if rng.gen_bool(0.5) {
                    Reply::Yes
                } else {
                    Reply::No
                }
            } else {
                Reply::Option(rng.gen_range(1..=q.options.len()))
            };
            g.answer(&scene, &mut state, reply).unwrap();
            replies.push(reply);
        }
        let mut again = g.start(&scene, &expr, "replay");
        for r in replies {
            g.answer(&scene, &mut again, r).unwrap();
        }
        assert_eq!(again, state, "case {i}: {expr}");
    }
}

#[test]
fn oracle_answers_are_always_accepted() {
    let mut rng = StdRng::seed_from_u64(3);
    let g = Grounder::default();
    for _ in 0..300 {
        let scene = random_scene(&mut rng, 8, 12);
        let target = rng.gen_range(1..=scene.nodes().len() as u32);
        let relations = rng.gen_range(0..=2);
        let expr = random_expression(&mut rng, relations);
        let mut state = g.start(&scene, &expr, "oracle");
        while let Some(q) = state.pending.clone() {
            g.answer(&scene, &mut state, oracle_reply(&q, target))
                .unwrap();
        }
        if let Some(node) = state.grounded_node() {
            assert!(scene.node(node).is_some());
        }
    }
}

#[test]
fn eval_aggregates_are_order_independent() {
    let scenes = load_scenes_dir(&fixtures().join("scenes")).unwrap();
    let mut commands =
        parse_commands(&std::fs::read_to_string(fixtures().join("commands.jsonl")).unwrap())
            .unwrap();
    let g = Grounder::default();
    let base = evaluate(&scenes, &commands, &g).unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..10 {
        commands.shuffle(&mut rng);
        let r = evaluate(&scenes, &commands, &g).unwrap();
        assert_eq!(
            r.avg_interactions.to_bits(),
            base.avg_interactions.to_bits()
        );
        assert_eq!(r.success_rate.to_bits(), base.success_rate.to_bits());
        assert_eq!(r.histogram, base.histogram);
        assert_eq!(r.per_category, base.per_category);
    }
}

#[test]
fn exact_provider_changes_fixture_outcomes() {
    let scenes = load_scenes_dir(&fixtures().join("scenes")).unwrap();
    let commands =
        parse_commands(&std::fs::read_to_string(fixtures().join("commands.jsonl")).unwrap())
            .unwrap();
    let exact = evaluate(&scenes, &commands, &Grounder::new(Similarity::exact())).unwrap();
    let mug = exact
        .rows
        .iter()
        .find(|r| r.expression == "blue mug on the couch")
        .unwrap();
    assert!(!mug.success);
}
