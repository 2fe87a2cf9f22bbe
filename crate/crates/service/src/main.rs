use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use grounding_core::model::load_scene_graph_file;
use grounding_core::{
    parse_expression, run_eval, Grounder, Reasoner, SceneGraph, Similarity, SimilarityConfig,
};
use grounding_service::{router, AppState, SceneCatalog, SessionStore};
use tower_http::services::ServeDir;

#[derive(Parser)]
#[command(
    name = "sgground",
    version,
    about = "Interactive object grounding over scene graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SimArgs {
    /// exact, lexicon[:<path>] or vectors:<path>
    #[arg(long, default_value = "lexicon")]
    sim: SimilarityConfig,
    #[arg(long)]
    threshold: Option<f64>,
}

impl SimArgs {
    fn config(&self) -> Result<SimilarityConfig> {
        let mut cfg = self.sim.clone();
        if let Some(t) = self.threshold {
            cfg.threshold = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn grounder(&self) -> Result<Grounder> {
        Ok(Grounder::new(Similarity::from_config(&self.config()?)?))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the language scene graph for an expression.
    Parse { expression: String },
    /// Match an expression against a scene without asking anything.
    Match {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        expr: String,
        /// Show survivors after each matching stage.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Interactive grounding in the terminal.
    Repl {
        #[arg(long)]
        scene: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Run a command suite with the scripted oracle.
    Eval {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        commands: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "IGSG_SCENES")]
        scenes: PathBuf,
        /// Directory of static UI assets served at /.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        /// Idle minutes before a session is dropped.
        #[arg(long, default_value_t = 30)]
        idle_minutes: u64,
        #[command(flatten)]
        sim: SimArgs,
    },
}

fn load_scene(path: &PathBuf) -> Result<SceneGraph> {
    load_scene_graph_file(path).with_context(|| format!("loading {}", path.display()))
}

fn print_match(scene: &SceneGraph, grounder: &Grounder, expr: &str, trace: bool) -> Result<()> {
    let lang = parse_expression(expr)?;
    let reasoner = Reasoner::new(scene, grounder.similarity());
    if lang.edge_count() == 0 {
        let found = reasoner.match_node(lang.head());
        println!(
            "node {}: candidates {:?} exact={}",
            lang.head().describe(),
            found.candidates,
            found.exact
        );
        return Ok(());
    }
    for (i, t) in lang.triplets().enumerate() {
        let outcome = reasoner.incremental_match(&t);
        println!("language edge {i}: {t}");
        println!(
            "  action: {:?} (stage {:?})",
            outcome.action, outcome.stage_reached
        );
        if trace {
            for step in &outcome.trace {
                println!("  {:?}: {:?}", step.stage, step.survivors);
            }
        }
        for c in &outcome.candidates {
            println!(
                "  candidate #{} {}{}",
                c.edge_index,
                c.edge,
                if c.exact { " exact" } else { "" }
            );
        }
    }
    Ok(())
}

async fn serve(
    addr: SocketAddr,
    app: AppState,
    static_dir: Option<PathBuf>,
    idle: Duration,
) -> Result<()> {
    let store = app.store.clone();
    tokio::spawn(async move {
        let mut tick =
            tokio::time::interval(Duration::from_secs(60).min(idle.max(Duration::from_secs(1))));
        loop {
            tick.tick().await;
            store.evict_idle();
        }
    });
    let mut routes = router(app);
    if let Some(dir) = static_dir {
        if !dir.is_dir() {
            bail!("static directory {} does not exist", dir.display());
        }
        routes = routes.fallback_service(ServeDir::new(dir));
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, routes).await?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Parse { expression } => {
            let lang = parse_expression(&expression)?;
            println!("{}", lang.graph.to_document().to_json_pretty());
        }
        Command::Match {
            scene,
            expr,
            trace,
            sim,
        } => {
            let scene = load_scene(&scene)?;
            print_match(&scene, &sim.grounder()?, &expr, trace)?;
        }
        Command::Repl { scene, sim } => {
            let scene = load_scene(&scene)?;
            let grounder = sim.grounder()?;
            grounding_service::repl::run(
                &scene,
                &grounder,
                io::stdin().lock(),
                io::stdout().lock(),
            )?;
        }
        Command::Eval {
            scenes,
            commands,
            out,
            sim,
        } => {
            let report = run_eval(&scenes, &commands, &sim.config()?)?;
            std::fs::write(&out, serde_json::to_string_pretty(&report)?)
                .with_context(|| format!("writing {}", out.display()))?;
            print!("{}", report.to_table());
            println!(
                "commands={} avg_interactions={:.4} success_rate={:.4}",
                report.total, report.avg_interactions, report.success_rate
            );
        }
        Command::Serve {
            port,
            host,
            scenes,
            static_dir,
            idle_minutes,
            sim,
        } => {
            let catalog = SceneCatalog::load(&scenes)?;
            let idle = Duration::from_secs(idle_minutes * 60);
            let app = AppState::new(catalog, sim.grounder()?, SessionStore::new(idle));
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .context("invalid host/port")?;
            tokio::runtime::Runtime::new()?.block_on(serve(addr, app, static_dir, idle))?;
        }
    }
    Ok(())
}
