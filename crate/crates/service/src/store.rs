//! In-memory session store with per-session locking and idle eviction.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use grounding_core::session::{EventKind, SessionState};
use rand::Rng;
use serde::Serialize;
use serde_json::Value;

pub const DEFAULT_IDLE: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptLine {
    /// Milliseconds since the Unix epoch.
    pub ts: u64,
    pub session_id: String,
    pub event: EventKind,
    pub payload: Value,
}

#[derive(Debug)]
pub struct Entry {
    pub state: SessionState,
    pub transcript: Vec<TranscriptLine>,
    last_used: Instant,
}

impl Entry {
    fn new(state: SessionState) -> Self {
        let mut entry = Self {
            state,
            transcript: Vec::new(),
            last_used: Instant::now(),
        };
        entry.sync_transcript();
        entry
    }

    /// Appends transcript lines for events the state gained since the last
    /// call.
    pub fn sync_transcript(&mut self) {
        let ts = now_millis();
        for ev in &self.state.events[self.transcript.len()..] {
            self.transcript.push(TranscriptLine {
                ts,
                session_id: self.state.session_id.clone(),
                event: ev.event,
                payload: ev.payload.clone(),
            });
        }
    }
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// 16 random bytes, hex encoded.
pub fn new_session_id() -> String {
    hex::encode(rand::thread_rng().gen::<[u8; 16]>())
}

pub struct SessionStore {
    sessions: Mutex<HashMap<String, Arc<Mutex<Entry>>>>,
    idle: Duration,
}

impl Default for SessionStore {
    fn default() -> Self {
        Self::new(DEFAULT_IDLE)
    }
}

impl SessionStore {
    pub fn new(idle: Duration) -> Self {
        Self {
            sessions: Mutex::new(HashMap::new()),
            idle,
        }
    }

    fn map(&self) -> MutexGuard<'_, HashMap<String, Arc<Mutex<Entry>>>> {
        self.sessions.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn insert(&self, state: SessionState) -> Arc<Mutex<Entry>> {
        self.evict_idle();
        let id = state.session_id.clone();
        let entry = Arc::new(Mutex::new(Entry::new(state)));
        self.map().insert(id, entry.clone());
        entry
    }

    pub fn get(&self, id: &str) -> Option<Arc<Mutex<Entry>>> {
        self.evict_idle();
        let entry = self.map().get(id).cloned()?;
        entry.lock().unwrap_or_else(|p| p.into_inner()).last_used = Instant::now();
        Some(entry)
    }

    /// Drops sessions unused for longer than the idle limit.
    pub fn evict_idle(&self) -> usize {
        let mut map = self.map();
        let before = map.len();
        let idle = self.idle;
        map.retain(|_, e| match e.try_lock() {
            Ok(e) => e.last_used.elapsed() <= idle,
            // In use right now, so not idle.
            Err(_) => true,
        });
        before - map.len()
    }

    pub fn len(&self) -> usize {
        self.map().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn lock(entry: &Mutex<Entry>) -> MutexGuard<'_, Entry> {
    entry.lock().unwrap_or_else(|p| p.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;
    use grounding_core::{load_scene_graph, Grounder};

    fn state(id: &str) -> SessionState {
        let scene =
            load_scene_graph(include_str!("../../core/fixtures/scenes/fix-cups.json")).unwrap();
        Grounder::default().start(&scene, "cup on the table", id)
    }

    #[test]
    fn ids_are_long_and_distinct() {
        let a = new_session_id();
        assert_eq!(a.len(), 32);
        assert!(a.chars().all(|c| c.is_ascii_hexdigit()));
        assert_ne!(a, new_session_id());
    }

    #[test]
    fn transcript_tracks_events() {
        let store = SessionStore::default();
        let entry = store.insert(state("s1"));
        let e = lock(&entry);
        assert_eq!(e.transcript.len(), e.state.events.len());
        assert_eq!(e.transcript[0].event, EventKind::Started);
        assert!(e.transcript.iter().all(|l| l.session_id == "s1"));
    }

    #[test]
    fn idle_sessions_are_evicted() {
        let store = SessionStore::new(Duration::ZERO);
        store.insert(state("old"));
        std::thread::sleep(Duration::from_millis(5));
        assert_eq!(store.evict_idle(), 1);
        assert!(store.get("old").is_none());

        let store = SessionStore::default();
        store.insert(state("kept"));
        assert_eq!(store.evict_idle(), 0);
        assert!(store.get("kept").is_some());
    }
}
