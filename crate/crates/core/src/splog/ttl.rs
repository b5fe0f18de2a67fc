//! Emit-only Turtle.

use std::fmt::Write;

use chrono::{DateTime, SecondsFormat, Utc};

use super::{EntryContent, LogEntry};
use crate::policy::{BasicPolicy, ClassExpr, DurationExpr, GeneralPolicy};
use crate::vocab::{ClassId, PrefixMap};

const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
const OWL: &str = "http://www.w3.org/2002/07/owl#";
const DCT: &str = "http://purl.org/dc/terms/";

/// Renders entries with one prefix header. Identifiers that are not IRIs
/// (after prefix expansion) are minted as `urn:polcheck:` IRIs.
pub struct TtlWriter {
    prefixes: PrefixMap,
    out: String,
}

/// One entry as a standalone Turtle document, using the built-in prefixes.
pub fn to_ttl(e: &LogEntry) -> String {
    let mut w = TtlWriter::new(PrefixMap::special());
    w.entry(e);
    w.finish()
}

fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn iri_safe(c: char) -> bool {
    !(c.is_control() || c.is_whitespace() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'))
}

fn pct_encode(s: &str) -> String {
    let mut out = String::new();
    for ch in s.chars() {
        if ch.is_ascii_alphanumeric() || matches!(ch, '-' | '.' | '_' | '~' | ':') {
            out.push(ch);
        } else {
            let mut buf = [0u8; 4];
            for b in ch.encode_utf8(&mut buf).bytes() {
                let _ = write!(out, "%{b:02X}");
            }
        }
    }
    out
}

fn looks_absolute(s: &str) -> bool {
    match s.split_once(':') {
        Some((scheme, rest)) => {
            !rest.is_empty()
                && scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && scheme.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
                && s.chars().all(iri_safe)
        }
        None => false,
    }
}

fn time(t: &DateTime<Utc>) -> String {
    format!("\"{}\"^^xsd:dateTimeStamp", t.to_rfc3339_opts(SecondsFormat::AutoSi, true))
}

impl TtlWriter {
    pub fn new(prefixes: PrefixMap) -> Self {
        let mut out = String::new();
        let mut all: Vec<(String, String)> = prefixes.iter().map(|(p, i)| (p.to_string(), i.to_string())).collect();
        for (p, i) in [("xsd", XSD), ("rdfs", RDFS), ("owl", OWL), ("dct", DCT)] {
            if prefixes.get(p).is_none() {
                all.push((p.to_string(), i.to_string()));
            }
        }
        all.sort();
        for (p, i) in all {
            let _ = writeln!(out, "@prefix {p}: <{i}> .");
        }
        out.push('\n');
        TtlWriter { prefixes, out }
    }

    /// An identifier as an IRI reference.
    fn node(&self, id: &str) -> String {
        let expanded = self.prefixes.expand(id).ok().map(|c| c.as_str().to_string());
        match expanded {
            Some(iri) if looks_absolute(&iri) => self.class(&ClassId::new(iri)),
            _ => format!("<urn:polcheck:{}>", pct_encode(id)),
        }
    }

    fn class(&self, id: &ClassId) -> String {
        let compact = self.prefixes.compact(id);
        let prefixed = compact
            .split_once(':')
            .is_some_and(|(p, local)| self.prefixes.get(p).is_some() && crate::vocab::is_local_name(local));
        if prefixed {
            compact
        } else if looks_absolute(id.as_str()) {
            format!("<{}>", id.as_str())
        } else {
            format!("<urn:polcheck:{}>", pct_encode(id.as_str()))
        }
    }

    fn expr(&self, e: &ClassExpr) -> String {
        match e {
            ClassExpr::Atom(id) => self.class(id),
            ClassExpr::Top(c) => self.class(&c.root()),
            ClassExpr::Null(_) => "spl:Null".into(),
            ClassExpr::Union(xs) => {
                format!("[ owl:unionOf ( {} ) ]", xs.iter().map(|x| self.expr(x)).collect::<Vec<_>>().join(" "))
            }
            ClassExpr::Intersection(xs) => format!(
                "[ owl:intersectionOf ( {} ) ]",
                xs.iter().map(|x| self.expr(x)).collect::<Vec<_>>().join(" ")
            ),
        }
    }

    fn duration(&self, d: &DurationExpr) -> Option<String> {
        match d {
            DurationExpr::Interval { min_days: 0, max_days: None } => None,
            DurationExpr::Interval { min_days, max_days: Some(max) } if min_days == max => {
                Some(format!("spl:durationInDays \"{max}\"^^xsd:integer"))
            }
            DurationExpr::Interval { min_days, max_days } => {
                let mut r = format!("[ xsd:minInclusive \"{min_days}\"^^xsd:integer ]");
                if let Some(max) = max_days {
                    r.push_str(&format!(" [ xsd:maxInclusive \"{max}\"^^xsd:integer ]"));
                }
                Some(format!(
                    "spl:durationInDays [ a rdfs:Datatype ; owl:onDatatype xsd:integer ; owl:withRestrictions ( {r} ) ]"
                ))
            }
            DurationExpr::Class(id) => Some(format!("spl:hasDuration {}", self.class(id))),
        }
    }

    fn basic(&self, b: &BasicPolicy, indent: &str) -> String {
        let mut storage = format!("spl:hasLocation {}", self.expr(&b.storage.location));
        if let Some(d) = self.duration(&b.storage.duration) {
            storage.push_str(" ; ");
            storage.push_str(&d);
        }
        format!(
            "[ a splog:LogEntryContent ;\n{indent}  spl:hasData {} ;\n{indent}  spl:hasProcessing {} ;\n\
             {indent}  spl:hasPurpose {} ;\n{indent}  spl:hasStorage [ {storage} ] ;\n{indent}  spl:hasRecipient {} ]",
            self.expr(&b.data),
            self.expr(&b.processing),
            self.expr(&b.purpose),
            self.expr(&b.recipient),
        )
    }

    fn policy(&self, p: &GeneralPolicy) -> String {
        match p.basics() {
            [one] => self.basic(one, "    "),
            many => format!(
                "[ owl:unionOf (\n{}\n  ) ]",
                many.iter().map(|b| format!("    {}", self.basic(b, "    "))).collect::<Vec<_>>().join("\n")
            ),
        }
    }

    pub fn entry(&mut self, e: &LogEntry) {
        let subject = self.node(&e.entry_id);
        if !e.log_id.is_empty() {
            let log = self.node(&e.log_id);
            let _ = writeln!(self.out, "{log} splog:logEntry {subject} .");
        }
        let mut props: Vec<String> = vec![format!("a splog:{}", e.kind.as_str())];
        if let Some(s) = &e.data_subject {
            props.push(format!("splog:dataSubject {}", self.node(s)));
        }
        if let Some(t) = &e.transaction_time {
            props.push(format!("splog:transactionTime {}", time(t)));
        }
        props.push(format!("splog:validityTime {}", time(&e.validity_time)));
        if let Some(m) = &e.message {
            props.push(format!("splog:message {}", escape_literal(m)));
        }
        match &e.content {
            Some(EntryContent::Usage(c)) => props.push(format!("splog:eventContent {}", self.basic(c, "  "))),
            Some(EntryContent::Consent(p)) => props.push(format!("splog:logEntryContent {}", self.policy(p))),
            None => {}
        }
        if let Some(r) = &e.revokes {
            props.push(format!("splog:revokes {}", self.node(r)));
        }
        for r in e.recipient_instances.iter().flatten() {
            props.push(format!("splog:recipientInstance {}", escape_literal(r)));
        }
        if let Some(r) = &e.immutable_record {
            props.push(format!("splog:immutableRecord {}", self.node(r)));
        }
        if let Some(a) = &e.bpm_activity {
            props.push(format!("splog:activity {}", escape_literal(a)));
        }
        if let Some(c) = &e.bpm_case {
            props.push(format!("splog:case {}", escape_literal(c)));
        }
        let _ = writeln!(self.out, "{subject} {} .\n", props.join(" ;\n  "));
    }

    /// Takes what has been rendered so far, for streaming output. The
    /// prefix header is part of the first chunk.
    pub fn drain(&mut self) -> String {
        std::mem::take(&mut self.out)
    }

    pub fn finish(self) -> String {
        self.out
    }
}
