use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Utc};

use crate::policy::GeneralPolicy;
use crate::reasoner::CompiledPolicy;
use crate::splog::{EntryKind, LogEntry};
use crate::vocab::Taxonomy;

/// A user's consent at some instant.
#[derive(Clone, Debug)]
pub enum ConsentState {
    Active { entry_id: String, policy: Arc<GeneralPolicy>, compiled: Arc<CompiledPolicy> },
    /// The latest assertion does not validate against the taxonomy; checks
    /// against it fail closed.
    Invalid { entry_id: String, error: String },
    Revoked { entry_id: String },
    NoConsent,
}

#[derive(Clone, Debug)]
struct Item {
    at: DateTime<Utc>,
    state: ConsentState,
}

/// Per-user consent history ordered by validity time. Among items with the
/// same validity time the one applied last wins.
#[derive(Debug, Default)]
pub struct ConsentStore {
    users: RwLock<HashMap<String, Vec<Item>>>,
}

impl ConsentStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a consent assertion or revocation. Other entry kinds and
    /// entries without a data subject are ignored; returns whether the entry
    /// was recorded.
    pub fn apply(&self, e: &LogEntry, t: &Taxonomy) -> bool {
        let Some(user) = &e.data_subject else { return false };
        let state = match (e.kind, e.policy()) {
            (EntryKind::ConsentAssertion, Some(p)) => match CompiledPolicy::compile(p, t) {
                Ok(c) => ConsentState::Active {
                    entry_id: e.entry_id.clone(),
                    policy: Arc::new(p.clone()),
                    compiled: Arc::new(c),
                },
                Err(err) => ConsentState::Invalid { entry_id: e.entry_id.clone(), error: err.to_string() },
            },
            (EntryKind::ConsentRevocation, _) => ConsentState::Revoked { entry_id: e.entry_id.clone() },
            _ => return false,
        };
        self.insert(user, e.validity_time, state);
        true
    }

    fn insert(&self, user: &str, at: DateTime<Utc>, state: ConsentState) {
        let mut users = self.users.write().expect("consent lock");
        let history = users.entry(user.to_string()).or_default();
        let pos = history.partition_point(|i| i.at <= at);
        history.insert(pos, Item { at, state });
    }

    /// The latest item with validity time ≤ `at`.
    pub fn resolve(&self, user: &str, at: DateTime<Utc>) -> ConsentState {
        let users = self.users.read().expect("consent lock");
        let Some(history) = users.get(user) else { return ConsentState::NoConsent };
        match history.partition_point(|i| i.at <= at) {
            0 => ConsentState::NoConsent,
            n => history[n - 1].state.clone(),
        }
    }

    pub fn users(&self) -> usize {
        self.users.read().expect("consent lock").len()
    }
}
