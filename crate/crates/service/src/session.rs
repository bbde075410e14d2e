use std::collections::HashMap;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use gudie::{initialize, interest_propagation, InterestState, PropagatedInterest, PropertyGraph, RunConfig};
use parking_lot::{Mutex, RwLock};
use uuid::Uuid;

use crate::ApiError;

/// Initial and propagated scores for one cache key.
#[derive(Debug)]
pub struct Scores {
    pub state: InterestState<f64>,
    pub propagated: PropagatedInterest<f64>,
}

type Slot = Arc<OnceLock<Result<Arc<Scores>, String>>>;

/// One uploaded graph and its score cache.
pub struct Session {
    graph: PropertyGraph,
    cache: Mutex<HashMap<String, Slot>>,
    latest: Mutex<Option<Arc<Scores>>>,
    last_used: Mutex<Instant>,
}

impl Session {
    pub fn new(graph: PropertyGraph) -> Self {
        Session {
            graph,
            cache: Mutex::new(HashMap::new()),
            latest: Mutex::new(None),
            last_used: Mutex::new(Instant::now()),
        }
    }

    pub fn graph(&self) -> &PropertyGraph {
        &self.graph
    }

    /// Settings that determine the propagated scores.
    pub fn cache_key(config: &RunConfig) -> String {
        serde_json::to_string(&(&config.vudie, &config.ludie, config.h, config.gamma)).expect("key serializes")
    }

    /// Scores for `config`, computed at most once per key even under
    /// concurrent requests. The flag reports a cache hit.
    pub fn scores(&self, config: &RunConfig) -> Result<(Arc<Scores>, bool), ApiError> {
        let slot: Slot = self.cache.lock().entry(Self::cache_key(config)).or_default().clone();
        let mut computed = false;
        let result = slot.get_or_init(|| {
            computed = true;
            let state = initialize::<f64>(&self.graph, &config.vudie, &config.ludie).map_err(|e| e.to_string())?;
            let propagated =
                interest_propagation(&self.graph, &state, &config.propagation()).map_err(|e| e.to_string())?;
            Ok(Arc::new(Scores { state, propagated }))
        });
        match result {
            Ok(scores) => {
                *self.latest.lock() = Some(scores.clone());
                Ok((scores.clone(), !computed))
            }
            Err(message) => Err(ApiError::bad_request(format!("initialize: {message}"))),
        }
    }

    pub fn cached_keys(&self) -> usize {
        self.cache.lock().values().filter(|s| s.get().is_some()).count()
    }

    pub fn latest_scores(&self) -> Option<Arc<Scores>> {
        self.latest.lock().clone()
    }

    fn touch(&self) {
        *self.last_used.lock() = Instant::now();
    }

    fn idle(&self) -> Duration {
        self.last_used.lock().elapsed()
    }
}

/// In-memory sessions, evicted after `ttl` without use.
pub struct SessionStore {
    sessions: RwLock<HashMap<Uuid, Arc<Session>>>,
    ttl: Duration,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        SessionStore {
            sessions: RwLock::new(HashMap::new()),
            ttl,
        }
    }

    pub fn insert(&self, graph: PropertyGraph) -> Uuid {
        self.evict_expired();
        let id = Uuid::new_v4();
        self.sessions.write().insert(id, Arc::new(Session::new(graph)));
        id
    }

    pub fn get(&self, id: Uuid) -> Result<Arc<Session>, ApiError> {
        self.evict_expired();
        let session = self
            .sessions
            .read()
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session {id}")))?;
        session.touch();
        Ok(session)
    }

    /// Like [`SessionStore::get`] for an id still in text form.
    pub fn lookup(&self, raw: &str) -> Result<Arc<Session>, ApiError> {
        let id = raw
            .parse()
            .map_err(|_| ApiError::not_found(format!("no session {raw}")))?;
        self.get(id)
    }

    pub fn len(&self) -> usize {
        self.sessions.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn evict_expired(&self) {
        let ttl = self.ttl;
        self.sessions.write().retain(|_, s| s.idle() < ttl);
    }
}
