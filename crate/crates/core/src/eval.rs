//! Batch evaluation with a scripted oracle standing in for the user.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asker::{Question, QuestionKind};
use crate::model::{load_scene_graph_file, ModelError, NodeId, SceneGraph};
use crate::session::{Grounder, Reply, SessionError, SessionStatus};
use crate::similarity::{Similarity, SimilarityConfig, SimilarityError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unknown scene {0:?}")]
    MissingScene(String),
    #[error("malformed commands: {0}")]
    MalformedCommands(String),
    #[error("target {target} does not exist in scene {scene:?}")]
    UnknownTarget { scene: String, target: NodeId },
    #[error("scene {path}: {source}")]
    Scene {
        path: String,
        #[source]
        source: ModelError,
    },
    #[error("oracle produced an invalid reply: {0}")]
    OracleReply(#[from] SessionError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Clear,
    Vague,
    Unsolvable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCommand {
    pub scene: String,
    pub expression: String,
    pub target: NodeId,
    pub category: Category,
}

/// Answers as a user who knows the target would.
pub fn oracle_reply(question: &Question, target: NodeId) -> Reply {
    match question.kind {
        QuestionKind::Validate => {
            if question
                .options
                .first()
                .is_some_and(|o| o.focal_id == target)
            {
                Reply::Yes
            } else {
                Reply::No
            }
        }
        QuestionKind::Select => question
            .options
            .iter()
            .position(|o| o.focal_id == target)
            .map_or(Reply::None, |k| Reply::Option(k + 1)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandResult {
    pub scene: String,
    pub expression: String,
    pub target: NodeId,
    pub category: Category,
    pub interactions: u32,
    pub grounded: Option<NodeId>,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryMetrics {
    pub count: usize,
    pub avg_interactions: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub total: usize,
    pub successes: usize,
    pub avg_interactions: f64,
    pub success_rate: f64,
    pub per_category: BTreeMap<Category, CategoryMetrics>,
    /// interaction count → number of commands
    pub histogram: BTreeMap<u32, usize>,
    pub rows: Vec<CommandResult>,
}

impl MetricsReport {
    /// Rows are kept in input order; every aggregate is order independent.
    pub fn from_rows(rows: Vec<CommandResult>) -> Self {
        let (total, successes, interactions) = tally(rows.iter());
        let mut per_category = BTreeMap::new();
        for cat in [Category::Clear, Category::Vague, Category::Unsolvable] {
            let (count, ok, asked) = tally(rows.iter().filter(|r| r.category == cat));
            if count > 0 {
                per_category.insert(
                    cat,
                    CategoryMetrics {
                        count,
                        avg_interactions: ratio(asked, count),
                        success_rate: ratio(ok as u64, count),
                    },
                );
            }
        }
        let mut histogram = BTreeMap::new();
        for r in &rows {
            *histogram.entry(r.interactions).or_insert(0) += 1;
        }
        Self {
            total,
            successes,
            avg_interactions: ratio(interactions, total),
            success_rate: ratio(successes as u64, total),
            per_category,
            histogram,
            rows,
        }
    }

    pub fn to_table(&self) -> String {
        let mut out =
            String::from("scene\tcategory\ttarget\tgrounded\tinteractions\tsuccess\texpression\n");
        for r in &self.rows {
            let grounded = r.grounded.map_or("-".to_string(), |g| g.to_string());
            let _ = writeln!(
                out,
                "{}\t{:?}\t{}\t{}\t{}\t{}\t{}",
                r.scene, r.category, r.target, grounded, r.interactions, r.success, r.expression
            );
        }
        out
    }
}

fn tally<'a>(rows: impl Iterator<Item = &'a CommandResult>) -> (usize, usize, u64) {
    rows.fold((0, 0, 0), |(n, ok, asked), r| {
        (
            n + 1,
            ok + r.success as usize,
            asked + r.interactions as u64,
        )
    })
}

fn ratio(num: u64, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// One JSON record per line; blank lines are skipped.
pub fn parse_commands(text: &str) -> Result<Vec<EvalCommand>, EvalError> {
    let mut commands = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cmd: EvalCommand = serde_json::from_str(line)
            .map_err(|e| EvalError::MalformedCommands(format!("line {}: {e}", n + 1)))?;
        commands.push(cmd);
    }
    if commands.is_empty() {
        return Err(EvalError::MalformedCommands("no commands".into()));
    }
    Ok(commands)
}

/// Loads every `*.json` scene in a directory, keyed by scene id.
pub fn load_scenes_dir(dir: &Path) -> Result<BTreeMap<String, SceneGraph>, EvalError> {
    let io = |e| EvalError::Io {
        path: dir.display().to_string(),
        source: e,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut scenes = BTreeMap::new();
    for path in paths {
        let scene = load_scene_graph_file(&path).map_err(|source| EvalError::Scene {
            path: path.display().to_string(),
            source,
        })?;
        scenes.insert(scene.scene_id.clone(), scene);
    }
    Ok(scenes)
}

/// Runs one command to completion with the oracle.
pub fn run_command(
    grounder: &Grounder,
    scene: &SceneGraph,
    cmd: &EvalCommand,
) -> Result<CommandResult, EvalError> {
    let mut state = grounder.start(scene, &cmd.expression, "eval");
    while let Some(question) = state.pending.clone() {
        grounder.answer(scene, &mut state, oracle_reply(&question, cmd.target))?;
    }
    let grounded = state.grounded_node();
    let failure = match &state.status {
        SessionStatus::Failed { reason } => Some(reason.clone()),
        _ => None,
    };
    Ok(CommandResult {
        scene: cmd.scene.clone(),
        expression: cmd.expression.clone(),
        target: cmd.target,
        category: cmd.category,
        interactions: state.interactions,
        grounded,
        success: grounded == Some(cmd.target),
        failure,
    })
}

pub fn evaluate(
    scenes: &BTreeMap<String, SceneGraph>,
    commands: &[EvalCommand],
    grounder: &Grounder,
) -> Result<MetricsReport, EvalError> {
    if commands.is_empty() {
        return Err(EvalError::MalformedCommands("no commands".into()));
    }
    let mut rows = Vec::with_capacity(commands.len());
    for cmd in commands {
        let scene = scenes
            .get(&cmd.scene)
            .ok_or_else(|| EvalError::MissingScene(cmd.scene.clone()))?;
        if scene.node(cmd.target).is_none() {
            return Err(EvalError::UnknownTarget {
                scene: cmd.scene.clone(),
                target: cmd.target,
            });
        }
        rows.push(run_command(grounder, scene, cmd)?);
    }
    Ok(MetricsReport::from_rows(rows))
}

pub fn run_eval(
    scenes_dir: &Path,
    commands_path: &Path,
    config: &SimilarityConfig,
) -> Result<MetricsReport, EvalError> {
    let scenes = load_scenes_dir(scenes_dir)?;
    let text = std::fs::read_to_string(commands_path).map_err(|e| EvalError::Io {
        path: commands_path.display().to_string(),
        source: e,
    })?;
    let commands = parse_commands(&text)?;
    let grounder = Grounder::new(Similarity::from_config(config)?);
    evaluate(&scenes, &commands, &grounder)
}
