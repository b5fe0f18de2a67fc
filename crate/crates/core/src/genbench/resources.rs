//! Best-effort process CPU and memory sampling from `/proc/self`. On other
//! platforms, or when `/proc` is unreadable, the sample list stays empty
//! and the run continues.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceSample {
    pub t_ms: u64,
    /// Share of one core used since the previous sample; may exceed 100
    /// with several busy threads.
    pub cpu_pct: f64,
    pub rss_bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resources {
    /// `false` when the platform offers no process statistics.
    pub available: bool,
    pub interval_ms: u64,
    pub samples: Vec<ResourceSample>,
}

#[cfg(target_os = "linux")]
mod proc_stat {
    /// Process CPU time (user + system) in clock ticks.
    pub fn cpu_ticks() -> Option<u64> {
        let s = std::fs::read_to_string("/proc/self/stat").ok()?;
        // The command name may contain spaces; fields resume after ')'.
        let rest = &s[s.rfind(')')? + 2..];
        let f: Vec<&str> = rest.split_whitespace().collect();
        // utime and stime are fields 14 and 15, i.e. 11 and 12 after state.
        Some(f.get(11)?.parse::<u64>().ok()? + f.get(12)?.parse::<u64>().ok()?)
    }

    pub fn rss_bytes() -> Option<u64> {
        let s = std::fs::read_to_string("/proc/self/statm").ok()?;
        let pages: u64 = s.split_whitespace().nth(1)?.parse().ok()?;
        Some(pages * page_size())
    }

    pub fn ticks_per_second() -> u64 {
        // SAFETY: sysconf has no preconditions.
        let t = unsafe { libc::sysconf(libc::_SC_CLK_TCK) };
        if t > 0 {
            t as u64
        } else {
            100
        }
    }

    fn page_size() -> u64 {
        // SAFETY: sysconf has no preconditions.
        let p = unsafe { libc::sysconf(libc::_SC_PAGESIZE) };
        if p > 0 {
            p as u64
        } else {
            4096
        }
    }
}

#[cfg(not(target_os = "linux"))]
mod proc_stat {
    pub fn cpu_ticks() -> Option<u64> {
        None
    }
    pub fn rss_bytes() -> Option<u64> {
        None
    }
    pub fn ticks_per_second() -> u64 {
        100
    }
}

pub fn supported() -> bool {
    proc_stat::cpu_ticks().is_some() && proc_stat::rss_bytes().is_some()
}

/// Background sampler; [`ResourceSampler::finish`] stops it and returns
/// what was collected.
pub struct ResourceSampler {
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<Vec<ResourceSample>>>,
    interval: Duration,
}

impl ResourceSampler {
    pub fn start(interval: Duration) -> Self {
        let stop = Arc::new(AtomicBool::new(false));
        let handle = supported().then(|| {
            let stop = stop.clone();
            std::thread::spawn(move || sample_loop(interval, &stop))
        });
        ResourceSampler { stop, handle, interval }
    }

    pub fn finish(mut self) -> Resources {
        self.stop.store(true, Ordering::Relaxed);
        let samples = self.handle.take().map(|h| h.join().unwrap_or_default());
        Resources { available: samples.is_some(), interval_ms: self.interval.as_millis() as u64, samples: samples.unwrap_or_default() }
    }
}

impl Drop for ResourceSampler {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
    }
}

fn sample_loop(interval: Duration, stop: &AtomicBool) -> Vec<ResourceSample> {
    let hz = proc_stat::ticks_per_second() as f64;
    let origin = Instant::now();
    let mut prev = (origin, proc_stat::cpu_ticks().unwrap_or(0));
    let mut out = Vec::new();
    let mut next = origin + interval;
    loop {
        // Sleep in short steps so that stopping is prompt.
        while Instant::now() < next {
            if stop.load(Ordering::Relaxed) {
                return out;
            }
            std::thread::sleep((next - Instant::now()).min(Duration::from_millis(20)));
        }
        let now = Instant::now();
        let (Some(ticks), Some(rss)) = (proc_stat::cpu_ticks(), proc_stat::rss_bytes()) else {
            return out;
        };
        let wall = (now - prev.0).as_secs_f64();
        let cpu = if wall > 0.0 { (ticks.saturating_sub(prev.1)) as f64 / hz / wall * 100.0 } else { 0.0 };
        out.push(ResourceSample { t_ms: (now - origin).as_millis() as u64, cpu_pct: cpu, rss_bytes: rss });
        prev = (now, ticks);
        next += interval;
    }
}
