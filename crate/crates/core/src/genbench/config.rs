use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use super::GenError;

/// Parses concatenated `<integer><unit>` terms with units ns, us (or µs),
/// ms, s, m, h. The total must be positive.
pub fn parse_duration(s: &str) -> Result<Duration, GenError> {
    let bad = || GenError::BadDuration(s.to_string());
    let mut rest = s.trim();
    if rest.is_empty() {
        return Err(bad());
    }
    let mut total: u128 = 0;
    while !rest.is_empty() {
        let digits = rest.find(|c: char| !c.is_ascii_digit()).ok_or_else(bad)?;
        if digits == 0 {
            return Err(bad());
        }
        let n: u128 = rest[..digits].parse().map_err(|_| bad())?;
        rest = &rest[digits..];
        let unit_len = rest.find(|c: char| c.is_ascii_digit()).unwrap_or(rest.len());
        let scale: u128 = match &rest[..unit_len] {
            "ns" => 1,
            "us" | "µs" => 1_000,
            "ms" => 1_000_000,
            "s" => 1_000_000_000,
            "m" => 60_000_000_000,
            "h" => 3_600_000_000_000,
            _ => return Err(bad()),
        };
        rest = &rest[unit_len..];
        total = n.checked_mul(scale).and_then(|x| total.checked_add(x)).ok_or_else(bad)?;
    }
    if total == 0 || total > u64::MAX as u128 {
        return Err(bad());
    }
    Ok(Duration::from_nanos(total as u64))
}

/// Shortest rendering that [`parse_duration`] reads back to the same value.
pub fn format_duration(d: Duration) -> String {
    let ns = d.as_nanos();
    for (unit, scale) in [("h", 3_600_000_000_000u128), ("m", 60_000_000_000), ("s", 1_000_000_000), ("ms", 1_000_000), ("us", 1_000)] {
        if ns.is_multiple_of(scale) && ns > 0 {
            return format!("{}{unit}", ns / scale);
        }
    }
    format!("{ns}ns")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Ttl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenType {
    /// Processing and sharing events.
    Log,
    Consent,
}

impl FromStr for Format {
    type Err = GenError;
    fn from_str(s: &str) -> Result<Self, GenError> {
        match s {
            "json" => Ok(Format::Json),
            "ttl" => Ok(Format::Ttl),
            _ => Err(GenError::Config(format!("unknown format {s:?} (json or ttl)"))),
        }
    }
}

impl FromStr for GenType {
    type Err = GenError;
    fn from_str(s: &str) -> Result<Self, GenError> {
        match s {
            "log" => Ok(GenType::Log),
            "consent" => Ok(GenType::Consent),
            _ => Err(GenError::Config(format!("unknown type {s:?} (log or consent)"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Ttl => "ttl",
        })
    }
}

/// Generator parameters. `events <= 0` means the count comes from
/// `test_time`, or is unbounded when that is absent too.
#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    /// Interval between two events of the same user.
    pub rate: Duration,
    pub events: i64,
    pub format: Format,
    pub kind: GenType,
    /// Upper bound on basics per generated consent.
    pub policies: usize,
    pub users: usize,
    /// Percentage of compliant events; `None` flips a fair coin per event.
    pub pass_ratio: Option<u8>,
    pub seed: u64,
    pub test_time: Option<Duration>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            rate: Duration::from_secs(1),
            events: 0,
            format: Format::Json,
            kind: GenType::Log,
            policies: 5,
            users: 1000,
            pass_ratio: None,
            seed: 42,
            test_time: None,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.users == 0 {
            return Err(GenError::Config("users must be at least 1".into()));
        }
        if self.policies == 0 {
            return Err(GenError::Config("policies must be at least 1".into()));
        }
        if self.rate.is_zero() {
            return Err(GenError::Config("rate must be positive".into()));
        }
        if matches!(self.pass_ratio, Some(p) if p > 100) {
            return Err(GenError::Config("pass ratio must be within 0..=100".into()));
        }
        Ok(())
    }

    /// Number of events the stream yields, `None` when unbounded. Computed
    /// arithmetically so it is cheap for any size.
    pub fn event_count(&self) -> Option<u64> {
        if self.events > 0 {
            return Some(self.events as u64);
        }
        let t = self.test_time?;
        Some(self.users as u64 * (t.as_nanos() / self.rate.as_nanos()) as u64)
    }

    /// Scheduled offset of event `i` from the run start: users take turns,
    /// so the aggregate arrival interval is `rate / users`.
    pub fn schedule_ns(&self, i: u64) -> u64 {
        (i as u128 * self.rate.as_nanos() / self.users as u128) as u64
    }
}
