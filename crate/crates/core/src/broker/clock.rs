use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use chrono::{DateTime, Duration, Utc};

/// Nanosecond time source for enqueue and completion stamps, plus the
/// wall-clock time those stamps correspond to.
pub trait Clock: Send + Sync {
    fn now_ns(&self) -> u64;
    fn wall(&self, ns: u64) -> DateTime<Utc>;
}

/// Real time, measured from construction.
#[derive(Debug)]
pub struct MonotonicClock {
    origin: Instant,
    wall_origin: DateTime<Utc>,
}

impl MonotonicClock {
    pub fn start() -> Self {
        MonotonicClock { origin: Instant::now(), wall_origin: Utc::now() }
    }
}

impl Clock for MonotonicClock {
    fn now_ns(&self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }

    fn wall(&self, ns: u64) -> DateTime<Utc> {
        self.wall_origin + Duration::nanoseconds(ns as i64)
    }
}

/// Simulated time that only moves when told to. Never reads the system
/// clock.
#[derive(Debug)]
pub struct VirtualClock {
    now: AtomicU64,
    epoch: DateTime<Utc>,
}

impl VirtualClock {
    pub fn new(epoch: DateTime<Utc>) -> Self {
        VirtualClock { now: AtomicU64::new(0), epoch }
    }

    pub fn set(&self, ns: u64) {
        self.now.store(ns, Ordering::SeqCst);
    }

    pub fn advance(&self, ns: u64) -> u64 {
        self.now.fetch_add(ns, Ordering::SeqCst) + ns
    }
}

impl Clock for VirtualClock {
    fn now_ns(&self) -> u64 {
        self.now.load(Ordering::SeqCst)
    }

    fn wall(&self, ns: u64) -> DateTime<Utc> {
        self.epoch + Duration::nanoseconds(ns as i64)
    }
}
