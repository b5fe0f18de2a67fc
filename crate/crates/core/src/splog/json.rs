//! JSON encoding.
//!
//! Keys are emitted in a fixed order and absent optional fields are left
//! out, so equal values always produce identical bytes. Class names are
//! written in compact form using the codec's prefixes.
//!
//! ```text
//! entry   { id, log, kind, dataSubject, validityTime, transactionTime,
//!           message, content, revokes, recipientInstances,
//!           immutableRecord, bpm{activity, case}, <extra fields, sorted> }
//! usage   { data[], processing, purpose,
//!           storage{ location, durationDays | durationClass | minDays, maxDays },
//!           recipient }
//! consent [ usage, ... ]
//! expr    "name" | [expr, expr, ...] (union) | {"intersectionOf": [expr, ...]}
//! record  { entry, compliant, reason, consentEntryId, checkerId, checkTime,
//!           latencyNs, error }
//! group   { groupId, validityStartTime, validityEndTime, dimension,
//!           subjectGroup, entryMembers, memberCount }
//! ```
//!
//! `data` is always an array (one member means no union). Storage duration
//! is omitted when it is `[0, ∞)`. Unknown top-level entry fields are
//! rejected in strict mode and kept in [`LogEntry::extra`] otherwise;
//! unknown nested fields are always rejected.

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{Map, Value};

use super::{invalid, to_millis, ComplianceRecord, EntryContent, EntryKind, LogEntry, LogEntryGroup, SplogError};
use crate::policy::{Attribute, BasicPolicy, ClassExpr, DurationExpr, GeneralPolicy, LogContent, StorageExpr};
use crate::reasoner::Reason;
use crate::vocab::{Category, PrefixMap};

#[derive(Clone, Debug)]
pub struct JsonCodec {
    prefixes: PrefixMap,
    strict: bool,
}

impl Default for JsonCodec {
    fn default() -> Self {
        JsonCodec::new(PrefixMap::special())
    }
}

/// Types with a JSON form.
pub trait SplogJson: Sized {
    fn to_value(&self, codec: &JsonCodec) -> Value;
    fn from_value(v: &Value, codec: &JsonCodec) -> Result<Self, SplogError>;
}

/// Encodes with the built-in prefixes.
pub fn to_json<T: SplogJson>(x: &T) -> String {
    JsonCodec::default().to_json(x)
}

/// Strict decoding with the built-in prefixes.
pub fn from_json<T: SplogJson>(s: &str) -> Result<T, SplogError> {
    JsonCodec::default().from_json(s)
}

fn ts(t: &DateTime<Utc>) -> Value {
    Value::String(t.to_rfc3339_opts(SecondsFormat::AutoSi, true))
}

/// Byte offset of a 1-based line/column pair.
fn byte_offset(src: &str, line: usize, column: usize) -> usize {
    let start: usize = src.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)).min(src.len())
}

/// Field access that remembers which keys were read.
struct Fields<'a> {
    map: &'a Map<String, Value>,
    seen: Vec<&'static str>,
    ctx: &'static str,
}

impl<'a> Fields<'a> {
    fn new(v: &'a Value, ctx: &'static str) -> Result<Self, SplogError> {
        let map = v.as_object().ok_or_else(|| invalid(format!("{ctx}: expected an object")))?;
        Ok(Fields { map, seen: Vec::new(), ctx })
    }

    fn opt(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.push(key);
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn req(&mut self, key: &'static str) -> Result<&'a Value, SplogError> {
        let ctx = self.ctx;
        self.opt(key).ok_or_else(|| invalid(format!("{ctx}: {key} required")))
    }

    fn opt_str(&mut self, key: &'static str) -> Result<Option<String>, SplogError> {
        let ctx = self.ctx;
        self.opt(key)
            .map(|v| v.as_str().map(str::to_string).ok_or_else(|| invalid(format!("{ctx}: {key} must be a string"))))
            .transpose()
    }

    fn req_str(&mut self, key: &'static str) -> Result<String, SplogError> {
        let ctx = self.ctx;
        self.opt_str(key)?.ok_or_else(|| invalid(format!("{ctx}: {key} required")))
    }

    fn opt_time(&mut self, key: &'static str) -> Result<Option<DateTime<Utc>>, SplogError> {
        let ctx = self.ctx;
        self.opt_str(key)?
            .map(|s| {
                DateTime::parse_from_rfc3339(&s)
                    .map(|t| to_millis(t.with_timezone(&Utc)))
                    .map_err(|e| invalid(format!("{ctx}: {key}: bad timestamp `{s}`: {e}")))
            })
            .transpose()
    }

    fn req_time(&mut self, key: &'static str) -> Result<DateTime<Utc>, SplogError> {
        let ctx = self.ctx;
        self.opt_time(key)?.ok_or_else(|| invalid(format!("{ctx}: {key} required")))
    }

    fn opt_u64(&mut self, key: &'static str) -> Result<Option<u64>, SplogError> {
        let ctx = self.ctx;
        self.opt(key)
            .map(|v| v.as_u64().ok_or_else(|| invalid(format!("{ctx}: {key} must be a non-negative integer"))))
            .transpose()
    }

    fn opt_strings(&mut self, key: &'static str) -> Result<Option<Vec<String>>, SplogError> {
        let ctx = self.ctx;
        self.opt(key)
            .map(|v| {
                v.as_array()
                    .and_then(|xs| xs.iter().map(|x| x.as_str().map(str::to_string)).collect::<Option<Vec<_>>>())
                    .ok_or_else(|| invalid(format!("{ctx}: {key} must be an array of strings")))
            })
            .transpose()
    }

    fn unknown(&self) -> impl Iterator<Item = (&'a String, &'a Value)> + '_ {
        self.map.iter().filter(|(k, _)| !self.seen.contains(&k.as_str()))
    }

    fn finish(self) -> Result<(), SplogError> {
        match self.unknown().next() {
            Some((k, _)) => Err(invalid(format!("{}: unknown field `{k}`", self.ctx))),
            None => Ok(()),
        }
    }
}

fn days(v: Option<u64>, ctx: &str) -> Result<Option<u32>, SplogError> {
    v.map(|d| u32::try_from(d).map_err(|_| invalid(format!("{ctx}: day count {d} out of range")))).transpose()
}

impl JsonCodec {
    pub fn new(prefixes: PrefixMap) -> Self {
        JsonCodec { prefixes, strict: true }
    }

    /// Keeps unknown top-level entry fields instead of rejecting them.
    pub fn lenient(mut self) -> Self {
        self.strict = false;
        self
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn to_json<T: SplogJson>(&self, x: &T) -> String {
        x.to_value(self).to_string()
    }

    pub fn from_json<T: SplogJson>(&self, s: &str) -> Result<T, SplogError> {
        let v: Value = serde_json::from_str(s).map_err(|e| SplogError::Parse {
            offset: byte_offset(s, e.line(), e.column()),
            message: e.to_string(),
        })?;
        T::from_value(&v, self)
    }

    pub fn expr_to_value(&self, e: &ClassExpr) -> Value {
        match e {
            ClassExpr::Atom(id) => Value::String(self.prefixes.compact(id)),
            ClassExpr::Top(c) => Value::String(self.prefixes.compact(&c.root())),
            ClassExpr::Null(_) => Value::String("spl:Null".into()),
            ClassExpr::Union(xs) => Value::Array(xs.iter().map(|x| self.expr_to_value(x)).collect()),
            ClassExpr::Intersection(xs) => {
                let mut m = Map::new();
                m.insert("intersectionOf".into(), Value::Array(xs.iter().map(|x| self.expr_to_value(x)).collect()));
                Value::Object(m)
            }
        }
    }

    /// Decodes an expression for an attribute of category `cat`. Category
    /// roots decode to atoms; `spl:Null` decodes to `Null(cat)`.
    pub fn expr_from_value(&self, v: &Value, cat: Category) -> Result<ClassExpr, SplogError> {
        let members = |xs: &Vec<Value>, what: &str| -> Result<Vec<ClassExpr>, SplogError> {
            if xs.len() < 2 {
                return Err(invalid(format!("{what} needs at least two members")));
            }
            xs.iter().map(|x| self.expr_from_value(x, cat)).collect()
        };
        match v {
            Value::String(s) => {
                let id = self.prefixes.expand(s).map_err(|e| invalid(e.to_string()))?;
                Ok(if id.is_null() { ClassExpr::Null(cat) } else { ClassExpr::Atom(id) })
            }
            Value::Array(xs) => Ok(ClassExpr::Union(members(xs, "union")?)),
            Value::Object(m) if m.len() == 1 => match m.get("intersectionOf") {
                Some(Value::Array(xs)) => Ok(ClassExpr::Intersection(members(xs, "intersectionOf")?)),
                _ => Err(invalid("expected {\"intersectionOf\": [...]}")),
            },
            _ => Err(invalid(format!("expected a class expression, found {v}"))),
        }
    }

    pub fn usage_to_value(&self, c: &LogContent) -> Value {
        let mut m = Map::new();
        let data = match &c.data {
            ClassExpr::Union(xs) => xs.iter().map(|x| self.expr_to_value(x)).collect(),
            other => vec![self.expr_to_value(other)],
        };
        m.insert("data".into(), Value::Array(data));
        m.insert("processing".into(), self.expr_to_value(&c.processing));
        m.insert("purpose".into(), self.expr_to_value(&c.purpose));
        let mut s = Map::new();
        s.insert("location".into(), self.expr_to_value(&c.storage.location));
        match &c.storage.duration {
            DurationExpr::Interval { min_days: 0, max_days: None } => {}
            DurationExpr::Interval { min_days, max_days: Some(max) } if min_days == max => {
                s.insert("durationDays".into(), Value::from(*max));
            }
            DurationExpr::Interval { min_days, max_days } => {
                s.insert("minDays".into(), Value::from(*min_days));
                if let Some(max) = max_days {
                    s.insert("maxDays".into(), Value::from(*max));
                }
            }
            DurationExpr::Class(id) => {
                s.insert("durationClass".into(), Value::String(self.prefixes.compact(id)));
            }
        }
        m.insert("storage".into(), Value::Object(s));
        m.insert("recipient".into(), self.expr_to_value(&c.recipient));
        Value::Object(m)
    }

    pub fn usage_from_value(&self, v: &Value) -> Result<LogContent, SplogError> {
        let mut f = Fields::new(v, "content")?;
        let attr = |a: Attribute, v: &Value| {
            self.expr_from_value(v, a.category()).map_err(|e| match e {
                SplogError::Validation(m) => invalid(format!("content.{a}: {m}")),
                other => other,
            })
        };
        let data = match f.req("data")? {
            Value::Array(xs) if xs.len() == 1 => attr(Attribute::Data, &xs[0])?,
            Value::Array(xs) if xs.is_empty() => return Err(invalid("content.data: empty array")),
            other @ Value::Array(_) => attr(Attribute::Data, other)?,
            _ => return Err(invalid("content.data must be an array")),
        };
        let processing = attr(Attribute::Processing, f.req("processing")?)?;
        let purpose = attr(Attribute::Purpose, f.req("purpose")?)?;
        let recipient = attr(Attribute::Recipient, f.req("recipient")?)?;
        let storage = self.storage_from_value(f.req("storage")?)?;
        f.finish()?;
        Ok(BasicPolicy { data, processing, purpose, recipient, storage })
    }

    fn storage_from_value(&self, v: &Value) -> Result<StorageExpr, SplogError> {
        let mut f = Fields::new(v, "content.storage")?;
        let location = self.expr_from_value(f.req("location")?, Category::Location).map_err(|e| match e {
            SplogError::Validation(m) => invalid(format!("content.storage.location: {m}")),
            other => other,
        })?;
        let exact = days(f.opt_u64("durationDays")?, "durationDays")?;
        let class = f.opt_str("durationClass")?;
        let min = days(f.opt_u64("minDays")?, "minDays")?;
        let max = days(f.opt_u64("maxDays")?, "maxDays")?;
        f.finish()?;
        let duration = match (exact, class, min, max) {
            (None, None, None, None) => DurationExpr::ANY_DAYS,
            (Some(d), None, None, None) => DurationExpr::days(d),
            (None, Some(c), None, None) => {
                DurationExpr::Class(self.prefixes.expand(&c).map_err(|e| invalid(e.to_string()))?)
            }
            (None, None, min, max) => DurationExpr::Interval { min_days: min.unwrap_or(0), max_days: max },
            _ => return Err(invalid("content.storage: durationDays, durationClass and minDays/maxDays are exclusive")),
        };
        Ok(StorageExpr { location, duration })
    }

    pub fn policy_to_value(&self, p: &GeneralPolicy) -> Value {
        Value::Array(p.basics().iter().map(|b| self.usage_to_value(b)).collect())
    }

    /// Accepts an array of basic policies or a single basic-policy object.
    pub fn policy_from_value(&self, v: &Value) -> Result<GeneralPolicy, SplogError> {
        match v {
            Value::Array(xs) => {
                Ok(GeneralPolicy::new(xs.iter().map(|x| self.usage_from_value(x)).collect::<Result<_, _>>()?)?)
            }
            Value::Object(_) => Ok(GeneralPolicy::single(self.usage_from_value(v)?)),
            _ => Err(invalid("consent content must be a list of basic policies")),
        }
    }
}

impl SplogJson for LogEntry {
    fn to_value(&self, c: &JsonCodec) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), Value::String(self.entry_id.clone()));
        if !self.log_id.is_empty() {
            m.insert("log".into(), Value::String(self.log_id.clone()));
        }
        m.insert("kind".into(), Value::String(self.kind.as_str().into()));
        if let Some(s) = &self.data_subject {
            m.insert("dataSubject".into(), Value::String(s.clone()));
        }
        m.insert("validityTime".into(), ts(&self.validity_time));
        if let Some(t) = &self.transaction_time {
            m.insert("transactionTime".into(), ts(t));
        }
        if let Some(s) = &self.message {
            m.insert("message".into(), Value::String(s.clone()));
        }
        match &self.content {
            Some(EntryContent::Usage(u)) => {
                m.insert("content".into(), c.usage_to_value(u));
            }
            Some(EntryContent::Consent(p)) => {
                m.insert("content".into(), c.policy_to_value(p));
            }
            None => {}
        }
        if let Some(s) = &self.revokes {
            m.insert("revokes".into(), Value::String(s.clone()));
        }
        if let Some(xs) = &self.recipient_instances {
            m.insert("recipientInstances".into(), Value::Array(xs.iter().cloned().map(Value::String).collect()));
        }
        if let Some(s) = &self.immutable_record {
            m.insert("immutableRecord".into(), Value::String(s.clone()));
        }
        if self.bpm_activity.is_some() || self.bpm_case.is_some() {
            let mut b = Map::new();
            if let Some(s) = &self.bpm_activity {
                b.insert("activity".into(), Value::String(s.clone()));
            }
            if let Some(s) = &self.bpm_case {
                b.insert("case".into(), Value::String(s.clone()));
            }
            m.insert("bpm".into(), Value::Object(b));
        }
        for (k, v) in &self.extra {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }

    fn from_value(v: &Value, c: &JsonCodec) -> Result<Self, SplogError> {
        let mut f = Fields::new(v, "entry")?;
        let entry_id = f.req_str("id")?;
        let log_id = f.opt_str("log")?.unwrap_or_default();
        let kind_name = f.req_str("kind")?;
        let kind = EntryKind::parse(&kind_name).ok_or_else(|| invalid(format!("unknown kind `{kind_name}`")))?;
        let data_subject = f.opt_str("dataSubject")?;
        let validity_time = f.req_time("validityTime")?;
        let transaction_time = f.opt_time("transactionTime")?;
        let message = f.opt_str("message")?;
        let content = match f.opt("content") {
            None => None,
            Some(v) if kind == EntryKind::ConsentAssertion => Some(EntryContent::Consent(c.policy_from_value(v)?)),
            Some(v) if kind.is_data_event() => Some(EntryContent::Usage(c.usage_from_value(v)?)),
            Some(_) => return Err(invalid("revocation carries no content")),
        };
        let revokes = f.opt_str("revokes")?;
        let recipient_instances = f.opt_strings("recipientInstances")?;
        let immutable_record = f.opt_str("immutableRecord")?;
        let (bpm_activity, bpm_case) = match f.opt("bpm") {
            None => (None, None),
            Some(b) => {
                let mut bf = Fields::new(b, "entry.bpm")?;
                let out = (bf.opt_str("activity")?, bf.opt_str("case")?);
                bf.finish()?;
                out
            }
        };
        let extra = if c.strict {
            f.finish()?;
            Default::default()
        } else {
            f.unknown().map(|(k, v)| (k.clone(), v.clone())).collect()
        };
        let e = LogEntry {
            entry_id,
            log_id,
            kind,
            data_subject,
            validity_time,
            transaction_time,
            message,
            content,
            revokes,
            recipient_instances,
            immutable_record,
            bpm_activity,
            bpm_case,
            extra,
        };
        e.check()?;
        Ok(e)
    }
}

impl SplogJson for ComplianceRecord {
    fn to_value(&self, c: &JsonCodec) -> Value {
        let mut m = Map::new();
        m.insert("entry".into(), self.entry.as_ref().map_or(Value::Null, |e| e.to_value(c)));
        m.insert("compliant".into(), Value::Bool(self.compliant));
        m.insert("reason".into(), Value::String(self.reason.as_str().into()));
        if let Some(s) = &self.consent_entry_id {
            m.insert("consentEntryId".into(), Value::String(s.clone()));
        }
        m.insert("checkerId".into(), Value::String(self.checker_id.clone()));
        m.insert("checkTime".into(), ts(&self.check_time));
        m.insert("latencyNs".into(), Value::from(self.latency_ns));
        if let Some(s) = &self.error {
            m.insert("error".into(), Value::String(s.clone()));
        }
        Value::Object(m)
    }

    fn from_value(v: &Value, c: &JsonCodec) -> Result<Self, SplogError> {
        let mut f = Fields::new(v, "record")?;
        let entry = f.opt("entry").map(|e| LogEntry::from_value(e, c)).transpose()?;
        let compliant =
            f.req("compliant")?.as_bool().ok_or_else(|| invalid("record: compliant must be a boolean"))?;
        let reason_name = f.req_str("reason")?;
        let reason = Reason::parse(&reason_name).ok_or_else(|| invalid(format!("unknown reason `{reason_name}`")))?;
        if compliant != (reason == Reason::Match) {
            return Err(invalid("record: compliant must agree with reason"));
        }
        let consent_entry_id = f.opt_str("consentEntryId")?;
        let checker_id = f.req_str("checkerId")?;
        let check_time = f.req_time("checkTime")?;
        let latency_ns = f.opt_u64("latencyNs")?.ok_or_else(|| invalid("record: latencyNs required"))?;
        let error = f.opt_str("error")?;
        f.finish()?;
        if entry.is_none() && error.is_none() {
            return Err(invalid("record: entry required unless error is set"));
        }
        Ok(ComplianceRecord { entry, compliant, reason, consent_entry_id, checker_id, check_time, latency_ns, error })
    }
}

impl SplogJson for LogEntryGroup {
    fn to_value(&self, c: &JsonCodec) -> Value {
        let mut m = Map::new();
        m.insert("groupId".into(), Value::String(self.group_id.clone()));
        m.insert("validityStartTime".into(), ts(&self.validity_start));
        m.insert("validityEndTime".into(), ts(&self.validity_end));
        m.insert("dimension".into(), c.usage_to_value(&self.dimension));
        m.insert("subjectGroup".into(), Value::Array(self.subject_group.iter().cloned().map(Value::String).collect()));
        if let Some(xs) = &self.entry_members {
            m.insert("entryMembers".into(), Value::Array(xs.iter().cloned().map(Value::String).collect()));
        }
        m.insert("memberCount".into(), Value::from(self.member_count));
        Value::Object(m)
    }

    fn from_value(v: &Value, c: &JsonCodec) -> Result<Self, SplogError> {
        let mut f = Fields::new(v, "group")?;
        let group_id = f.req_str("groupId")?;
        let validity_start = f.req_time("validityStartTime")?;
        let validity_end = f.req_time("validityEndTime")?;
        if validity_end < validity_start {
            return Err(invalid("group: validityEndTime precedes validityStartTime"));
        }
        let dimension = c.usage_from_value(f.req("dimension")?)?;
        let subject_group = f.opt_strings("subjectGroup")?.unwrap_or_default();
        let entry_members = f.opt_strings("entryMembers")?;
        let member_count = f.opt_u64("memberCount")?.ok_or_else(|| invalid("group: memberCount required"))? as usize;
        f.finish()?;
        if entry_members.as_ref().is_some_and(|m| m.len() != member_count) {
            return Err(invalid("group: memberCount disagrees with entryMembers"));
        }
        Ok(LogEntryGroup { group_id, validity_start, validity_end, dimension, subject_group, entry_members, member_count })
    }
}
