//! Interfaces to the grounding engine: the HTTP session API, the terminal
//! REPL and the session store behind them.

pub mod api;
pub mod repl;
pub mod store;

pub use api::{router, ApiSession, AppState, SceneCatalog};
pub use store::SessionStore;
