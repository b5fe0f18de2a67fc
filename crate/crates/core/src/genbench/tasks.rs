use std::time::Duration;

use super::{GenConfig, GenError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// Events arrive paced at the task rate while checkers run.
    Streaming,
    /// All events are loaded before the checkers start.
    Batch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskLength {
    Time(Duration),
    Events(u64),
}

/// One benchmark task. `users` and the length are already divided by
/// `scale` for desk-sized variants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskSpec {
    pub task_id: String,
    pub scenario: Scenario,
    pub users: usize,
    /// Interval between two events of one user; batch tasks have none.
    pub rate: Option<Duration>,
    pub policy_union_size: usize,
    pub length: TaskLength,
    /// `None` is a fair per-event coin.
    pub pass_ratio: Option<u8>,
    pub scale: u64,
}

const MINUTE: u64 = 60;
const TWENTY_MIN: Duration = Duration::from_secs(20 * MINUTE);

fn streaming(id: &str, users: usize, rate: Duration, union: usize, pass: Option<u8>) -> TaskSpec {
    TaskSpec {
        task_id: id.into(),
        scenario: Scenario::Streaming,
        users,
        rate: Some(rate),
        policy_union_size: union,
        length: TaskLength::Time(TWENTY_MIN),
        pass_ratio: pass,
        scale: 1,
    }
}

fn batch(id: &str, users: usize, events: u64) -> TaskSpec {
    TaskSpec {
        task_id: id.into(),
        scenario: Scenario::Batch,
        users,
        rate: None,
        policy_union_size: 5,
        length: TaskLength::Events(events),
        pass_ratio: None,
        scale: 1,
    }
}

/// The 25 benchmark tasks at full size. The fifth rate task is ten events
/// per second per user, encoded as one event every 100 ms.
pub fn task_table() -> Vec<TaskSpec> {
    let s = Duration::from_secs;
    let ten_s = s(10);
    let mut rows = Vec::with_capacity(25);
    for (i, union) in [1, 5, 10, 20, 30].into_iter().enumerate() {
        rows.push(streaming(&format!("C-T1-{}", i + 1), 1000, ten_s, union, None));
    }
    for (i, users) in [100, 1_000, 10_000, 100_000, 1_000_000].into_iter().enumerate() {
        rows.push(streaming(&format!("C-T2-{}", i + 1), users, ten_s, 5, None));
    }
    for (i, pass) in [0, 25, 50, 75, 100].into_iter().enumerate() {
        rows.push(streaming(&format!("C-T3-{}", i + 1), 1000, ten_s, 5, Some(pass)));
    }
    for (i, rate) in [s(60), s(30), s(10), s(1), Duration::from_millis(100)].into_iter().enumerate() {
        rows.push(streaming(&format!("C-T4-{}", i + 1), 1000, rate, 5, None));
    }
    for (i, users) in [100usize, 1_000, 10_000, 100_000, 1_000_000].into_iter().enumerate() {
        rows.push(batch(&format!("C-T5-{}", i + 1), users, users as u64 * 1000));
    }
    rows
}

/// Looks up `C-Tx-y` or `C-Tx-y@scaleK`. Scaling divides users and the
/// run length by K, never below one user or one event per user.
pub fn lookup_task(id: &str) -> Result<TaskSpec, GenError> {
    let (base, scale) = match id.split_once('@') {
        Some((b, s)) => {
            let k = s
                .strip_prefix("scale")
                .and_then(|k| k.parse::<u64>().ok())
                .filter(|k| *k >= 1)
                .ok_or_else(|| GenError::UnknownTask(id.to_string()))?;
            (b, k)
        }
        None => (id, 1),
    };
    let spec = task_table().into_iter().find(|t| t.task_id == base).ok_or_else(|| GenError::UnknownTask(id.to_string()))?;
    Ok(spec.scaled(scale))
}

impl TaskSpec {
    pub fn scaled(mut self, k: u64) -> TaskSpec {
        if k == 1 {
            return self;
        }
        self.users = (self.users / k as usize).max(1);
        self.length = match self.length {
            TaskLength::Time(t) => TaskLength::Time((t / k as u32).max(self.rate.unwrap_or(t))),
            TaskLength::Events(n) => TaskLength::Events((n / k).max(self.users as u64)),
        };
        self.task_id = format!("{}@scale{k}", self.task_id);
        self.scale *= k;
        self
    }

    /// Generator settings for this task. Batch tasks have no natural rate;
    /// their events are spread one millisecond apart per user so that
    /// validity times stay distinct.
    pub fn gen_config(&self, seed: u64) -> GenConfig {
        let mut cfg = GenConfig {
            rate: self.rate.unwrap_or(Duration::from_millis(1)),
            users: self.users,
            policies: self.policy_union_size,
            pass_ratio: self.pass_ratio,
            seed,
            ..GenConfig::default()
        };
        match self.length {
            TaskLength::Time(t) => cfg.test_time = Some(t),
            TaskLength::Events(n) => cfg.events = n as i64,
        }
        cfg
    }

    /// Events the task produces, without generating them.
    pub fn event_count(&self) -> u64 {
        self.gen_config(0).event_count().expect("tasks are bounded")
    }
}
