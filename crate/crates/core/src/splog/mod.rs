//! Log entries (consent assertions and revocations, processing and sharing
//! events), compliance records, entry groups, and their serialisations.

mod json;
mod ttl;

use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, SubsecRound, Utc};
use serde_json::Value;
use thiserror::Error;

use crate::policy::{GeneralPolicy, LogContent, PolicyError};
use crate::reasoner::Reason;
use crate::vocab::Taxonomy;

pub use json::{from_json, to_json, JsonCodec, SplogJson};
pub use ttl::{to_ttl, TtlWriter};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SplogError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("invalid entry: {0}")]
    Validation(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

fn invalid(msg: impl Into<String>) -> SplogError {
    SplogError::Validation(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntryKind {
    ConsentAssertion,
    ConsentRevocation,
    ProcessingEvent,
    SharingEvent,
}

impl EntryKind {
    pub const ALL: [EntryKind; 4] =
        [EntryKind::ConsentAssertion, EntryKind::ConsentRevocation, EntryKind::ProcessingEvent, EntryKind::SharingEvent];

    pub fn as_str(self) -> &'static str {
        match self {
            EntryKind::ConsentAssertion => "ConsentAssertion",
            EntryKind::ConsentRevocation => "ConsentRevocation",
            EntryKind::ProcessingEvent => "ProcessingEvent",
            EntryKind::SharingEvent => "SharingEvent",
        }
    }

    pub fn parse(s: &str) -> Option<EntryKind> {
        EntryKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_data_event(self) -> bool {
        matches!(self, EntryKind::ProcessingEvent | EntryKind::SharingEvent)
    }

    pub fn is_consent(self) -> bool {
        !self.is_data_event()
    }
}

/// What an entry talks about: the usage a data event performed, or the
/// policy a consent grants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EntryContent {
    Usage(LogContent),
    Consent(GeneralPolicy),
}

/// Truncates to whole milliseconds, the precision carried by every
/// serialised timestamp.
pub fn to_millis(t: DateTime<Utc>) -> DateTime<Utc> {
    t.trunc_subsecs(3)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogEntry {
    pub entry_id: String,
    pub log_id: String,
    pub kind: EntryKind,
    pub data_subject: Option<String>,
    pub validity_time: DateTime<Utc>,
    pub transaction_time: Option<DateTime<Utc>>,
    pub message: Option<String>,
    pub content: Option<EntryContent>,
    /// Entry this one replaces or revokes.
    pub revokes: Option<String>,
    pub recipient_instances: Option<Vec<String>>,
    pub immutable_record: Option<String>,
    pub bpm_activity: Option<String>,
    pub bpm_case: Option<String>,
    /// Unrecognised top-level fields kept by lenient parsing.
    pub extra: BTreeMap<String, Value>,
}

impl LogEntry {
    fn bare(entry_id: impl Into<String>, kind: EntryKind, subject: impl Into<String>, at: DateTime<Utc>) -> Self {
        LogEntry {
            entry_id: entry_id.into(),
            log_id: String::new(),
            kind,
            data_subject: Some(subject.into()),
            validity_time: to_millis(at),
            transaction_time: None,
            message: None,
            content: None,
            revokes: None,
            recipient_instances: None,
            immutable_record: None,
            bpm_activity: None,
            bpm_case: None,
            extra: BTreeMap::new(),
        }
    }

    pub fn event(
        entry_id: impl Into<String>,
        kind: EntryKind,
        subject: impl Into<String>,
        at: DateTime<Utc>,
        content: LogContent,
    ) -> Self {
        assert!(kind.is_data_event(), "{kind:?} is not a data event");
        LogEntry { content: Some(EntryContent::Usage(content)), ..Self::bare(entry_id, kind, subject, at) }
    }

    pub fn consent(entry_id: impl Into<String>, subject: impl Into<String>, at: DateTime<Utc>, policy: GeneralPolicy) -> Self {
        LogEntry {
            content: Some(EntryContent::Consent(policy)),
            ..Self::bare(entry_id, EntryKind::ConsentAssertion, subject, at)
        }
    }

    pub fn revocation(
        entry_id: impl Into<String>,
        subject: impl Into<String>,
        at: DateTime<Utc>,
        revokes: Option<String>,
    ) -> Self {
        LogEntry { revokes, ..Self::bare(entry_id, EntryKind::ConsentRevocation, subject, at) }
    }

    pub fn with_log(mut self, log_id: impl Into<String>) -> Self {
        self.log_id = log_id.into();
        self
    }

    pub fn usage(&self) -> Option<&LogContent> {
        match &self.content {
            Some(EntryContent::Usage(c)) => Some(c),
            _ => None,
        }
    }

    pub fn policy(&self) -> Option<&GeneralPolicy> {
        match &self.content {
            Some(EntryContent::Consent(p)) => Some(p),
            _ => None,
        }
    }

    /// Structural rules that hold regardless of vocabulary.
    pub fn check(&self) -> Result<(), SplogError> {
        if self.entry_id.is_empty() {
            return Err(invalid("id required"));
        }
        match (self.kind, &self.content) {
            (EntryKind::ConsentRevocation, Some(_)) => return Err(invalid("revocation carries no content")),
            (EntryKind::ConsentRevocation, None) => {}
            (_, None) => return Err(invalid("content required")),
            (EntryKind::ConsentAssertion, Some(EntryContent::Usage(_))) => {
                return Err(invalid("consent content must be a list of basic policies"))
            }
            (_, Some(EntryContent::Consent(_))) if self.kind.is_data_event() => {
                return Err(invalid("event content must be a single usage description"))
            }
            _ => {}
        }
        if self.revokes.is_some() && self.kind.is_data_event() {
            return Err(invalid("revokes is only allowed on consent entries"));
        }
        if self.recipient_instances.is_some() && self.kind != EntryKind::SharingEvent {
            return Err(invalid("recipientInstances is only allowed on sharing events"));
        }
        Ok(())
    }

    /// [`check`](Self::check) plus vocabulary validation of the content.
    pub fn validate(&self, t: &Taxonomy) -> Result<(), SplogError> {
        self.check()?;
        match &self.content {
            Some(EntryContent::Usage(c)) => c.validate(t)?,
            Some(EntryContent::Consent(p)) => p.validate(t)?,
            None => {}
        }
        Ok(())
    }

    /// Non-fatal observations, such as a transaction time before the
    /// validity time.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(tx) = self.transaction_time {
            if tx < self.validity_time {
                out.push(format!("{}: transactionTime precedes validityTime", self.entry_id));
            }
        }
        out
    }
}

/// A log entry enriched with the outcome of its compliance check. `entry`
/// is `None` for records that could not be parsed; `error` then says why.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplianceRecord {
    pub entry: Option<LogEntry>,
    pub compliant: bool,
    pub reason: Reason,
    pub consent_entry_id: Option<String>,
    pub checker_id: String,
    pub check_time: DateTime<Utc>,
    pub latency_ns: u64,
    pub error: Option<String>,
}

impl ComplianceRecord {
    pub fn entry_id(&self) -> Option<&str> {
        self.entry.as_ref().map(|e| e.entry_id.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogEntryGroup {
    pub group_id: String,
    pub validity_start: DateTime<Utc>,
    pub validity_end: DateTime<Utc>,
    pub dimension: LogContent,
    /// Distinct data subjects in order of first appearance.
    pub subject_group: Vec<String>,
    pub entry_members: Option<Vec<String>>,
    pub member_count: usize,
}

/// Partitions data events by normalised content. Groups come out in order
/// of first appearance and are numbered from 1; consent entries are
/// skipped.
pub fn group_entries(entries: &[LogEntry], keep_members: bool) -> Vec<LogEntryGroup> {
    let mut groups: Vec<LogEntryGroup> = Vec::new();
    let mut by_key: HashMap<LogContent, usize> = HashMap::new();
    for e in entries {
        let Some(content) = e.usage() else { continue };
        let key = content.normalized();
        let gi = *by_key.entry(key.clone()).or_insert_with(|| {
            groups.push(LogEntryGroup {
                group_id: format!("group-{}", groups.len() + 1),
                validity_start: e.validity_time,
                validity_end: e.validity_time,
                dimension: key,
                subject_group: Vec::new(),
                entry_members: keep_members.then(Vec::new),
                member_count: 0,
            });
            groups.len() - 1
        });
        let g = &mut groups[gi];
        g.validity_start = g.validity_start.min(e.validity_time);
        g.validity_end = g.validity_end.max(e.validity_time);
        if let Some(s) = &e.data_subject {
            if !g.subject_group.contains(s) {
                g.subject_group.push(s.clone());
            }
        }
        if let Some(m) = &mut g.entry_members {
            m.push(e.entry_id.clone());
        }
        g.member_count += 1;
    }
    groups
}
