//! Helpers shared by integration targets.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use polcheck_core::broker::{partition_for, BrokerError, ConsumerGroup, Topic};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct InterleavingStats {
    pub produced: u64,
    pub delivered: u64,
    pub redelivered: u64,
    pub rebalances: u64,
}

fn check_assignment(g: &ConsumerGroup, members: &BTreeSet<String>) -> Result<(), String> {
    let a = g.assignment();
    if members.is_empty() {
        return a.iter().all(Option::is_none).then_some(()).ok_or("owner without members".into());
    }
    let mut sizes: Vec<usize> = members.iter().map(|_| 0).collect();
    for (p, owner) in a.iter().enumerate() {
        let owner = owner.as_ref().ok_or(format!("partition {p} unowned"))?;
        let i = members.iter().position(|m| m == owner).ok_or(format!("partition {p} owned by non-member {owner}"))?;
        sizes[i] += 1;
    }
    let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
    if hi - lo > 1 {
        return Err(format!("unbalanced assignment {sizes:?}"));
    }
    Ok(())
}

/// Runs `steps` random produce/poll/commit/join/leave operations against a
/// fresh group and checks every step against a replay model: fetch
/// positions restart at committed + 1 after each rebalance, every polled
/// record is the next one of its partition with the value that was
/// produced there, commits behave as modelled, and a final drain observes
/// every produced record at least once.
pub fn broker_interleaving(seed: u64, steps: usize) -> Result<InterleavingStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let partitions = rng.random_range(1..=8);
    let topic = Arc::new(Topic::new("t", partitions, 2));
    let g = ConsumerGroup::new("g", topic.clone());
    let pool: Vec<String> = (0..6).map(|i| format!("c{i}")).collect();

    let mut produced: Vec<Vec<Vec<u8>>> = vec![Vec::new(); partitions];
    let mut members: BTreeSet<String> = BTreeSet::new();
    let mut committed: Vec<Option<u64>> = vec![None; partitions];
    let mut pos: Vec<u64> = vec![0; partitions];
    // Highest offset each partition's current owner has received.
    let mut received: Vec<Option<u64>> = vec![None; partitions];
    let mut delivered: HashSet<(usize, u64)> = HashSet::new();
    let mut stats = InterleavingStats::default();

    let rebalance = |committed: &[Option<u64>], pos: &mut [u64], received: &mut [Option<u64>]| {
        for p in 0..pos.len() {
            pos[p] = committed[p].map_or(0, |o| o + 1);
            received[p] = None;
        }
    };
    let poll = |g: &ConsumerGroup,
                    c: &str,
                    max: usize,
                    produced: &[Vec<Vec<u8>>],
                    pos: &mut [u64],
                    received: &mut [Option<u64>],
                    delivered: &mut HashSet<(usize, u64)>,
                    stats: &mut InterleavingStats|
     -> Result<usize, String> {
        let owned: HashSet<usize> = g.assigned(c).into_iter().collect();
        let batch = g.poll(c, max).map_err(|e| e.to_string())?;
        if batch.len() > max {
            return Err("poll exceeded max".into());
        }
        for r in &batch {
            let p = r.partition;
            if !owned.contains(&p) {
                return Err(format!("{c} got record of unowned partition {p}"));
            }
            if r.offset != pos[p] {
                return Err(format!("partition {p}: expected offset {}, got {}", pos[p], r.offset));
            }
            if produced[p].get(r.offset as usize).map(Vec::as_slice) != Some(&r.value[..]) {
                return Err(format!("partition {p} offset {}: value differs from what was produced", r.offset));
            }
            pos[p] += 1;
            received[p] = Some(r.offset);
            stats.delivered += 1;
            if !delivered.insert((p, r.offset)) {
                stats.redelivered += 1;
            }
        }
        Ok(batch.len())
    };

    for step in 0..steps {
        let roll = rng.random_range(0..100);
        let ctx = |e: String| format!("seed {seed} step {step}: {e}");
        match roll {
            0..=39 => {
                let key = format!("k{}", rng.random_range(0..20));
                let value = format!("v{step}").into_bytes();
                let (p, o) = topic.produce_at(key.as_bytes(), &value, step as u64);
                if p != partition_for(key.as_bytes(), partitions) || o != produced[p].len() as u64 {
                    return Err(ctx(format!("produce landed at ({p},{o})")));
                }
                produced[p].push(value);
                stats.produced += 1;
            }
            40..=64 => {
                if let Some(c) = members.iter().cloned().collect::<Vec<_>>().choose(&mut rng) {
                    let max = rng.random_range(1..=10);
                    poll(&g, c, max, &produced, &mut pos, &mut received, &mut delivered, &mut stats).map_err(ctx)?;
                }
            }
            65..=79 => {
                let Some(c) = members.iter().cloned().collect::<Vec<_>>().choose(&mut rng).cloned() else { continue };
                let owned = g.assigned(&c);
                let candidates: Vec<usize> = owned.iter().copied().filter(|&p| received[p].is_some()).collect();
                if rng.random_bool(0.1) {
                    // A partition someone else owns must be refused.
                    let foreign: Vec<usize> = (0..partitions).filter(|p| !owned.contains(p) && !produced[*p].is_empty()).collect();
                    if let Some(&p) = foreign.choose(&mut rng) {
                        match g.commit(&c, p, 0) {
                            Err(BrokerError::NotAssigned { .. }) => {}
                            other => return Err(ctx(format!("foreign commit gave {other:?}"))),
                        }
                    }
                    continue;
                }
                let Some(&p) = candidates.choose(&mut rng) else { continue };
                let hi = received[p].unwrap();
                let o = rng.random_range(0..=hi);
                let res = g.commit(&c, p, o);
                match committed[p] {
                    Some(k) if o < k => {
                        if !matches!(res, Err(BrokerError::RewindRejected { .. })) {
                            return Err(ctx(format!("rewind to {o} below {k} gave {res:?}")));
                        }
                    }
                    _ => {
                        res.map_err(|e| ctx(e.to_string()))?;
                        committed[p] = Some(o);
                        pos[p] = pos[p].max(o + 1);
                    }
                }
                if g.committed(p) != committed[p] {
                    return Err(ctx(format!("committed {:?} vs model {:?}", g.committed(p), committed[p])));
                }
            }
            80..=89 => {
                let candidates: Vec<&String> = pool.iter().filter(|m| !members.contains(*m)).collect();
                if let Some(&c) = candidates.choose(&mut rng) {
                    g.join(c).map_err(|e| ctx(e.to_string()))?;
                    members.insert(c.clone());
                    rebalance(&committed, &mut pos, &mut received);
                    stats.rebalances += 1;
                }
            }
            _ => {
                if let Some(c) = members.iter().cloned().collect::<Vec<_>>().choose(&mut rng) {
                    g.leave(c).map_err(|e| ctx(e.to_string()))?;
                    members.remove(c);
                    rebalance(&committed, &mut pos, &mut received);
                    stats.rebalances += 1;
                }
            }
        }
        check_assignment(&g, &members).map_err(|e| format!("seed {seed} step {step}: {e}"))?;
    }

    // Drain: everyone leaves, one fresh consumer reads from the commits.
    for c in members.clone() {
        g.leave(&c).map_err(|e| e.to_string())?;
    }
    members.clear();
    g.join("drain").map_err(|e| e.to_string())?;
    members.insert("drain".into());
    rebalance(&committed, &mut pos, &mut received);
    check_assignment(&g, &members)?;
    while poll(&g, "drain", 64, &produced, &mut pos, &mut received, &mut delivered, &mut stats)? > 0 {}
    for (p, values) in produced.iter().enumerate() {
        for o in 0..values.len() as u64 {
            if !delivered.contains(&(p, o)) {
                return Err(format!("seed {seed}: record ({p},{o}) never delivered"));
            }
        }
    }
    Ok(stats)
}
