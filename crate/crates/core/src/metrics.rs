//! Evaluation quantities computed from event logs.
//!
//! Attacker efficiency (AE) is the fraction of attacker host placements
//! whose host ever shares a node with a live victim host; placement
//! accuracy (PA) is the mirror ratio for victim hosts. Denominators count
//! cold placements only — warm executions of an already co-located host
//! are attributed to the placement that created the overlap, not counted
//! again.

use std::collections::{BTreeMap, BTreeSet};

use crate::log::{EventKind, EventLog};
use crate::{FunctionId, NodeId, UserId};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("metric denominator is empty")]
    EmptyDenominator,
    #[error("cannot aggregate an empty list of outcomes")]
    EmptyList,
}

/// Raw state-machine transition counts behind AE/PA.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ColocationCounts {
    pub attacker_placements: usize,
    pub victim_placements: usize,
    /// Placements that created attacker/victim overlap at arrival time.
    pub colocation_events: usize,
}

/// AE/PA ratios plus the windowed maximum of PA. `None` marks an undefined
/// ratio (empty denominator), never silently 0/0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AePaReport {
    pub ae: Option<f64>,
    pub pa: Option<f64>,
    pub max_pa: Option<f64>,
    pub counts: ColocationCounts,
}

impl AePaReport {
    /// Any-tick co-location happened iff AE > 0 iff PA > 0.
    pub fn colocated(&self) -> bool {
        self.counts.colocation_events > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Attacker,
    Victim,
}

#[derive(Debug)]
struct Placement {
    side: Side,
    tick: u64,
    colocated: bool,
}

/// Scans the log once, maintaining per-node live sets of attacker and
/// victim hosts. A placement landing on a node where the other side is
/// live marks both the arriving host and every resident host of the other
/// side as co-located.
pub fn compute_ae_pa(
    log: &EventLog,
    attackers: &BTreeSet<UserId>,
    victims: &BTreeSet<UserId>,
    pa_windows: usize,
) -> AePaReport {
    assert!(pa_windows >= 1);
    let mut placements: Vec<Placement> = Vec::new();
    // (node, function) -> index of the live placement backing it.
    let mut live_idx: BTreeMap<(NodeId, FunctionId), usize> = BTreeMap::new();
    let mut live_on_node: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    let mut counts = ColocationCounts::default();

    for e in log.entries() {
        let side = if attackers.contains(&e.owner) {
            Side::Attacker
        } else if victims.contains(&e.owner) {
            Side::Victim
        } else {
            continue; // background traffic
        };
        match e.kind {
            EventKind::Place => {
                let idx = placements.len();
                placements.push(Placement { side, tick: e.tick, colocated: false });
                match side {
                    Side::Attacker => counts.attacker_placements += 1,
                    Side::Victim => counts.victim_placements += 1,
                }
                let residents = live_on_node.entry(e.node_id).or_default();
                let mut overlap = false;
                for &r in residents.iter() {
                    if placements[r].side != side {
                        overlap = true;
                        placements[r].colocated = true;
                    }
                }
                if overlap {
                    placements[idx].colocated = true;
                    counts.colocation_events += 1;
                }
                residents.push(idx);
                live_idx.insert((e.node_id, e.function_id), idx);
            }
            EventKind::Evict => {
                if let Some(idx) = live_idx.remove(&(e.node_id, e.function_id)) {
                    if let Some(residents) = live_on_node.get_mut(&e.node_id) {
                        residents.retain(|&r| r != idx);
                    }
                }
            }
            EventKind::WarmExec => {}
        }
    }
    debug_assert!(
        counts.colocation_events <= counts.attacker_placements + counts.victim_placements
    );

    let ratio = |num: usize, den: usize| {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };
    let ae_num = placements.iter().filter(|p| p.side == Side::Attacker && p.colocated).count();
    let pa_num = placements.iter().filter(|p| p.side == Side::Victim && p.colocated).count();

    // Maximum per-window PA: the run is cut into equal tick windows and
    // victim placements are bucketed by their placement tick.
    let horizon = log.last_tick() + 1;
    let mut win_total = vec![0usize; pa_windows];
    let mut win_hit = vec![0usize; pa_windows];
    for p in placements.iter().filter(|p| p.side == Side::Victim) {
        let w = ((p.tick as u128 * pa_windows as u128) / horizon as u128) as usize;
        let w = w.min(pa_windows - 1);
        win_total[w] += 1;
        if p.colocated {
            win_hit[w] += 1;
        }
    }
    let max_pa = win_total
        .iter()
        .zip(&win_hit)
        .filter(|(&t, _)| t > 0)
        .map(|(&t, &h)| h as f64 / t as f64)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));

    AePaReport {
        ae: ratio(ae_num, counts.attacker_placements),
        pa: ratio(pa_num, counts.victim_placements),
        max_pa,
        counts,
    }
}

/// Fraction of experiments that achieved co-location.
pub fn success_rate(colocated: &[bool]) -> Result<f64, MetricError> {
    if colocated.is_empty() {
        return Err(MetricError::EmptyList);
    }
    let hits = colocated.iter().filter(|&&c| c).count();
    Ok(hits as f64 / colocated.len() as f64)
}

/// Warm executions over all executions. A placement onto a node that once
/// hosted the function but evicted it counts cold: keep-alive memory dies
/// with the host, which is already how the engine logs events.
pub fn warm_start_ratio(log: &EventLog) -> Result<f64, MetricError> {
    let mut warm = 0usize;
    let mut cold = 0usize;
    for e in log.entries() {
        match e.kind {
            EventKind::WarmExec => warm += 1,
            EventKind::Place => cold += 1,
            EventKind::Evict => {}
        }
    }
    if warm + cold == 0 {
        return Err(MetricError::EmptyDenominator);
    }
    Ok(warm as f64 / (warm + cold) as f64)
}

/// Warm ratio under per-worker function-type memory: an execution counts
/// warm iff its node holds a live host of the same type when it runs, so a
/// placement next to another tenant's live instance of the type is warm
/// while a placement onto a node whose last instance of the type was
/// evicted stays cold. With every function its own type this reduces to
/// [`warm_start_ratio`].
pub fn warm_start_ratio_typed<F>(log: &EventLog, type_of: F) -> Result<f64, MetricError>
where
    F: Fn(FunctionId) -> u64,
{
    let mut live_types: BTreeMap<NodeId, BTreeMap<u64, u32>> = BTreeMap::new();
    let mut warm = 0usize;
    let mut total = 0usize;
    for e in log.entries() {
        let ty = type_of(e.function_id);
        match e.kind {
            EventKind::WarmExec => {
                // The executing host itself is live on the node.
                warm += 1;
                total += 1;
            }
            EventKind::Place => {
                total += 1;
                let counts = live_types.entry(e.node_id).or_default();
                if counts.get(&ty).copied().unwrap_or(0) > 0 {
                    warm += 1;
                }
                *counts.entry(ty).or_insert(0) += 1;
            }
            EventKind::Evict => {
                if let Some(counts) = live_types.get_mut(&e.node_id) {
                    if let Some(c) = counts.get_mut(&ty) {
                        *c -= 1;
                        if *c == 0 {
                            counts.remove(&ty);
                        }
                    }
                }
            }
        }
    }
    if total == 0 {
        return Err(MetricError::EmptyDenominator);
    }
    Ok(warm as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log::LogEntry;

    fn place(tick: u64, f: FunctionId, owner: UserId, node: NodeId) -> LogEntry {
        LogEntry { tick, kind: EventKind::Place, function_id: f, owner, node_id: node, cold: true }
    }

    fn warm(tick: u64, f: FunctionId, owner: UserId, node: NodeId) -> LogEntry {
        LogEntry {
            tick,
            kind: EventKind::WarmExec,
            function_id: f,
            owner,
            node_id: node,
            cold: false,
        }
    }

    fn evict(tick: u64, f: FunctionId, owner: UserId, node: NodeId) -> LogEntry {
        LogEntry { tick, kind: EventKind::Evict, function_id: f, owner, node_id: node, cold: false }
    }

    fn ids(v: &[UserId]) -> BTreeSet<UserId> {
        v.iter().copied().collect()
    }

    #[test]
    fn direct_hit_gives_full_ae_and_pa() {
        let mut log = EventLog::new();
        log.push(place(0, 1, 100, 3)); // victim
        log.push(place(0, 2, 200, 3)); // attacker lands with it
        let r = compute_ae_pa(&log, &ids(&[200]), &ids(&[100]), 10);
        assert_eq!(r.ae, Some(1.0));
        assert_eq!(r.pa, Some(1.0));
        assert!(r.colocated());
    }

    #[test]
    fn disjoint_nodes_give_zero() {
        let mut log = EventLog::new();
        log.push(place(0, 1, 100, 3));
        log.push(place(0, 2, 200, 4));
        log.push(warm(1, 2, 200, 4));
        let r = compute_ae_pa(&log, &ids(&[200]), &ids(&[100]), 10);
        assert_eq!(r.ae, Some(0.0));
        assert_eq!(r.pa, Some(0.0));
        assert!(!r.colocated());
    }

    #[test]
    fn hand_enumerated_six_line_log() {
        // Victim places twice; attacker places twice, one placement lands on
        // the victim's node and later overlaps the victim's second placement
        // there as well: AE = 1/2, PA = 2/2.
        let mut log = EventLog::new();
        log.push(place(0, 10, 100, 5)); // victim host A on node 5
        log.push(place(1, 20, 200, 5)); // attacker host on node 5 -> overlap
        log.push(place(2, 21, 200, 9)); // attacker host on node 9, never overlaps
        log.push(evict(3, 10, 100, 5)); // victim host A expires
        log.push(place(4, 11, 100, 5)); // victim host B joins live attacker
        log.push(warm(5, 20, 200, 5));
        let r = compute_ae_pa(&log, &ids(&[200]), &ids(&[100]), 10);
        assert_eq!(r.ae, Some(0.5));
        assert_eq!(r.pa, Some(1.0));
        assert_eq!(r.counts.attacker_placements, 2);
        assert_eq!(r.counts.victim_placements, 2);
        assert_eq!(r.counts.colocation_events, 2);
    }

    #[test]
    fn eviction_ends_the_overlap_window() {
        let mut log = EventLog::new();
        log.push(place(0, 1, 100, 3));
        log.push(evict(2, 1, 100, 3));
        log.push(place(3, 2, 200, 3)); // victim already gone
        let r = compute_ae_pa(&log, &ids(&[200]), &ids(&[100]), 10);
        assert_eq!(r.ae, Some(0.0));
        assert_eq!(r.pa, Some(0.0));
    }

    #[test]
    fn undefined_ratios_stay_none() {
        let log = EventLog::new();
        let r = compute_ae_pa(&log, &ids(&[200]), &ids(&[100]), 10);
        assert_eq!(r.ae, None);
        assert_eq!(r.pa, None);
        assert_eq!(r.max_pa, None);
    }

    #[test]
    fn max_pa_peaks_in_the_hot_window() {
        let mut log = EventLog::new();
        // Window 0 (ticks 0..5): victim alone. Window 1 (5..10): overlap.
        log.push(place(0, 1, 100, 0));
        log.push(evict(4, 1, 100, 0));
        log.push(place(5, 2, 100, 7));
        log.push(place(6, 3, 200, 7));
        log.push(warm(9, 3, 200, 7));
        let r = compute_ae_pa(&log, &ids(&[200]), &ids(&[100]), 2);
        assert_eq!(r.pa, Some(0.5));
        assert_eq!(r.max_pa, Some(1.0));
    }

    #[test]
    fn success_rate_examples() {
        assert_eq!(success_rate(&[true, false, false, true]).unwrap(), 0.5);
        assert_eq!(success_rate(&[true, true]).unwrap(), 1.0);
        assert_eq!(success_rate(&[]).unwrap_err(), MetricError::EmptyList);
    }

    #[test]
    fn warm_ratio_examples() {
        let mut log = EventLog::new();
        log.push(place(0, 1, 1, 0));
        assert_eq!(warm_start_ratio(&log).unwrap(), 0.0);
        for t in 1..10 {
            log.push(warm(t, 1, 1, 0));
        }
        assert!((warm_start_ratio(&log).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(warm_start_ratio(&EventLog::new()).unwrap_err(), MetricError::EmptyDenominator);
    }

    #[test]
    fn typed_ratio_counts_live_type_neighbours() {
        let mut log = EventLog::new();
        log.push(place(0, 1, 1, 0)); // type 7, first sight: cold
        log.push(place(1, 2, 2, 0)); // same type, same node, live: warm
        log.push(evict(2, 1, 1, 0));
        log.push(evict(2, 2, 2, 0));
        log.push(place(3, 3, 3, 0)); // type memory died with the hosts: cold
        let ty = |_fid: FunctionId| 7u64;
        assert!((warm_start_ratio_typed(&log, ty).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn typed_ratio_with_identity_types_matches_base_ratio() {
        let mut log = EventLog::new();
        log.push(place(0, 1, 1, 0));
        log.push(warm(1, 1, 1, 0));
        log.push(place(1, 2, 2, 0));
        log.push(evict(3, 1, 1, 0));
        log.push(place(4, 1, 1, 0));
        let base = warm_start_ratio(&log).unwrap();
        let typed = warm_start_ratio_typed(&log, |fid| fid).unwrap();
        assert_eq!(base, typed);
    }
}
