//! Line-oriented terminal dialogue over one scene.

use std::io::{self, BufRead, Write};

use grounding_core::{Grounder, Reply, SceneGraph, SessionState, SessionStatus};

fn is_quit(line: &str) -> bool {
    matches!(line, "quit" | "exit" | ":q")
}

fn read_line(input: &mut impl BufRead) -> io::Result<Option<String>> {
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim().to_string()))
}

fn outcome_line(scene: &SceneGraph, state: &SessionState) -> String {
    match &state.status {
        SessionStatus::Grounded { node_id, bbox } => {
            let name = scene
                .node(*node_id)
                .map(|n| n.describe())
                .unwrap_or_default();
            let bbox = bbox.map_or("none".to_string(), |b| b.to_string());
            format!(
                "grounded: node {node_id} ({name}) bbox {bbox} interactions={}",
                state.interactions
            )
        }
        SessionStatus::Failed { reason } => {
            let detail = state
                .events
                .last()
                .and_then(|e| e.payload.get("detail"))
                .and_then(|d| d.as_str())
                .map(|d| format!(": {d}"))
                .unwrap_or_default();
            format!(
                "failed: {reason}{detail} interactions={}",
                state.interactions
            )
        }
        SessionStatus::AwaitingAnswer => "awaiting answer".to_string(),
    }
}

/// Runs until end of input or a quit command.
pub fn run(
    scene: &SceneGraph,
    grounder: &Grounder,
    mut input: impl BufRead,
    mut out: impl Write,
) -> io::Result<()> {
    writeln!(
        out,
        "scene {} ({} objects). Type an expression, or quit.",
        scene.scene_id,
        scene.nodes().len()
    )?;
    let mut count = 0;
    loop {
        write!(out, "> ")?;
        out.flush()?;
        let Some(line) = read_line(&mut input)? else {
            return Ok(());
        };
        if line.is_empty() {
            continue;
        }
        if is_quit(&line) {
            return Ok(());
        }
        count += 1;
        let mut state = grounder.start(scene, &line, format!("repl-{count}"));
        while let Some(question) = state.pending.clone() {
            writeln!(out, "{}", question.text)?;
            write!(out, "? ")?;
            out.flush()?;
            let Some(answer) = read_line(&mut input)? else {
                return Ok(());
            };
            if is_quit(&answer) {
                return Ok(());
            }
            let Some(reply) = Reply::parse(&answer) else {
                writeln!(out, "error: expected a number, yes, no or none")?;
                continue;
            };
            if let Err(e) = grounder.answer(scene, &mut state, reply) {
                writeln!(out, "error: {e}")?;
            }
        }
        writeln!(out, "{}", outcome_line(scene, &state))?;
    }
}
