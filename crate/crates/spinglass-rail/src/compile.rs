//! Compilation of a dispatching problem into QUBO: delay variables with
//! one-hot groups, the weighted-delay objective, and the prohibited-pair
//! penalties for every operational conflict.

use std::collections::BTreeSet;

use serde::Serialize;
use spinglass_core::QuboInstance;

use crate::model::{DispatchProblem, Train};
use crate::RailError;

/// Unavoidable (primary) delays per train at each station of its route, in
/// travel order: the entry delay, minus whatever the time reserves along the
/// way can absorb, floored at zero.
pub fn propagate_primary(problem: &DispatchProblem) -> Result<Vec<Vec<i64>>, RailError> {
    problem.validate()?;
    Ok(problem
        .trains
        .iter()
        .map(|train| {
            let stations = train.station_entries(&problem.network);
            let mut delays = Vec::with_capacity(stations.len());
            let mut current = train.entry_delay;
            delays.push(current);
            for pair in stations.windows(2) {
                current = (current - train.reserve_between(pair[0], pair[1])).max(0);
                delays.push(current);
            }
            delays
        })
        .collect())
}

/// One one-hot group of delay variables: train `train` leaving the station
/// at route entry `route_index` with total delay `base_delay + offset`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariableGroup {
    pub train: usize,
    /// Index into the train's route of the decision station.
    pub route_index: usize,
    /// Network block of that station.
    pub block: usize,
    /// Primary delay there — the smallest selectable total delay.
    pub base_delay: i64,
    /// Flat index of the group's first variable.
    pub start: usize,
    /// Group size, `d_max + 1`.
    pub len: usize,
}

impl VariableGroup {
    /// The selectable total delays, smallest first.
    pub fn delays(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.len as i64).map(move |offset| self.base_delay + offset)
    }

    pub fn contains(&self, delay: i64) -> bool {
        delay >= self.base_delay && delay < self.base_delay + self.len as i64
    }

    /// Flat variable index selecting `delay`, if representable.
    pub fn flat_index(&self, delay: i64) -> Option<usize> {
        self.contains(delay)
            .then(|| self.start + (delay - self.base_delay) as usize)
    }
}

/// The bijection between dispatching decisions `(train, station, delay)` and
/// flat bit indices, grouped one-hot per `(train, station)`.
#[derive(Debug, Clone, Serialize)]
pub struct VariableMap {
    groups: Vec<VariableGroup>,
    /// Group indices per train, in travel order.
    by_train: Vec<Vec<usize>>,
    total: usize,
}

impl VariableMap {
    pub fn num_variables(&self) -> usize {
        self.total
    }

    pub fn num_trains(&self) -> usize {
        self.by_train.len()
    }

    pub fn groups(&self) -> &[VariableGroup] {
        &self.groups
    }

    /// Group indices of one train's decision stations, in travel order.
    pub fn train_groups(&self, train: usize) -> &[usize] {
        &self.by_train[train]
    }

    /// The group of a train's `position`-th decision station.
    pub fn group(&self, train: usize, position: usize) -> &VariableGroup {
        &self.groups[self.by_train[train][position]]
    }

    /// The group holding a flat variable index.
    pub fn group_of(&self, flat: usize) -> Option<&VariableGroup> {
        if flat >= self.total {
            return None;
        }
        let after = self.groups.partition_point(|g| g.start <= flat);
        Some(&self.groups[after - 1])
    }

    /// Decode a flat index into `(train, route_index, delay)`.
    pub fn describe(&self, flat: usize) -> Option<(usize, usize, i64)> {
        let group = self.group_of(flat)?;
        Some((
            group.train,
            group.route_index,
            group.base_delay + (flat - group.start) as i64,
        ))
    }
}

/// Lay out the decision variables: every station of every train except the
/// final one, with `d_max + 1` delay choices starting at the propagated
/// primary delay.
pub fn enumerate_variables(problem: &DispatchProblem) -> Result<VariableMap, RailError> {
    let primary = propagate_primary(problem)?;
    let mut groups = Vec::new();
    let mut by_train = Vec::with_capacity(problem.trains.len());
    let mut next = 0usize;
    for (index, train) in problem.trains.iter().enumerate() {
        let stations = train.station_entries(&problem.network);
        let mut mine = Vec::with_capacity(stations.len() - 1);
        for (position, &route_index) in stations[..stations.len() - 1].iter().enumerate() {
            let len = train.d_max as usize + 1;
            mine.push(groups.len());
            groups.push(VariableGroup {
                train: index,
                route_index,
                block: train.route[route_index].block,
                base_delay: primary[index][position],
                start: next,
                len,
            });
            next += len;
        }
        by_train.push(mine);
    }
    Ok(VariableMap {
        groups,
        by_train,
        total: next,
    })
}

/// Linear objective terms: each train's weighted, normalized secondary delay
/// at its last decision station.  Delays at earlier stations carry no cost
/// of their own — they matter through the conflict penalties.
pub fn objective_terms(problem: &DispatchProblem, map: &VariableMap) -> Vec<(usize, f64)> {
    let mut terms = Vec::new();
    for (index, train) in problem.trains.iter().enumerate() {
        let &last = map.train_groups(index).last().expect("validated routes");
        let group = &map.groups()[last];
        for offset in 0..group.len {
            let coeff = if train.d_max == 0 {
                0.0
            } else {
                train.weight * offset as f64 / f64::from(train.d_max)
            };
            terms.push((group.start + offset, coeff));
        }
    }
    terms
}

/// Generic-weight objective: one term per variable with a caller-supplied
/// weight of `(train, route_index, delay)`.
pub fn objective_terms_generic(
    map: &VariableMap,
    weight: impl Fn(usize, usize, i64) -> f64,
) -> Vec<(usize, f64)> {
    let mut terms = Vec::new();
    for group in map.groups() {
        for (offset, delay) in group.delays().enumerate() {
            terms.push((group.start + offset, weight(group.train, group.route_index, delay)));
        }
    }
    terms
}

/// The four families of operational conflicts compiled into pair penalties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    /// Minimum passing time between consecutive stations of one train.
    Passing,
    /// Headway between same-direction trains entering a shared segment.
    SingleBlock,
    /// Meet conflict of opposite trains on a single-track segment.
    Deadlock,
    /// Turnover time of a shared train set.
    RollingStock,
}

/// Delays at the next station that leaving the previous one `m` late makes
/// impossible: `{0, …, m − Σα − 1}`.
pub fn passing_forbidden(m: i64, reserve_sum: i64) -> std::ops::Range<i64> {
    0..(m - reserve_sum)
}

/// Follower delays violating the headway after a leader departing `m` late:
/// `{m + Δ, …, m + Δ + τ₁ − 1}` with `Δ` the timetabled departure offset.
pub fn headway_forbidden(m: i64, delta: i64, tau1: i64) -> std::ops::Range<i64> {
    (m + delta)..(m + delta + tau1)
}

/// Departing-train delays that would outrun a shared set arriving `m` late:
/// `{0, …, m − R}` with `R` the timetabled turnover slack.
pub fn turnover_forbidden(m: i64, slack: i64) -> std::ops::RangeInclusive<i64> {
    0..=(m - slack)
}

/// Largest timetabled passage over the blocks strictly between two stations
/// of `train`, compared entry-wise with `other` over the same blocks.
fn shared_segment_headway(
    train: &Train,
    from: usize,
    to: usize,
    other: &Train,
) -> i64 {
    let mut tau = 0;
    for k in from + 1..to {
        let block = train.route[k].block;
        let own = train.timetabled_passage(k);
        let theirs = other
            .route
            .iter()
            .position(|e| e.block == block)
            .map(|pos| other.timetabled_passage(pos))
            .unwrap_or(0);
        tau = tau.max(own).max(theirs);
    }
    tau
}

/// Unordered pairs of variables whose joint activation violates `kind`,
/// sorted and deduplicated.  The map must come from [`enumerate_variables`]
/// on the same problem.
pub fn condition_terms(
    problem: &DispatchProblem,
    map: &VariableMap,
    kind: ConditionKind,
) -> Vec<(usize, usize)> {
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut forbid = |a: usize, b: usize| {
        pairs.insert((a.min(b), a.max(b)));
    };

    match kind {
        ConditionKind::Passing => {
            for train_index in 0..problem.trains.len() {
                let train = &problem.trains[train_index];
                let groups = map.train_groups(train_index);
                for window in groups.windows(2) {
                    let here = &map.groups()[window[0]];
                    let there = &map.groups()[window[1]];
                    let reserves = train.reserve_between(here.route_index, there.route_index);
                    for m in here.delays() {
                        let forbidden = passing_forbidden(m, reserves);
                        for m2 in there.delays().filter(|d| forbidden.contains(d)) {
                            forbid(
                                here.flat_index(m).unwrap(),
                                there.flat_index(m2).unwrap(),
                            );
                        }
                    }
                }
            }
        }
        ConditionKind::SingleBlock => {
            for (leader_index, leader) in problem.trains.iter().enumerate() {
                for (follower_index, follower) in problem.trains.iter().enumerate() {
                    if leader_index == follower_index || leader.direction != follower.direction {
                        continue;
                    }
                    for (here, next_block) in decision_segments(problem, map, leader_index) {
                        // The follower must decide at the same station and
                        // head into the same segment.
                        let Some((there, follower_next)) =
                            decision_segments(problem, map, follower_index)
                                .find(|(g, _)| g.block == here.block)
                        else {
                            continue;
                        };
                        if follower_next != next_block {
                            continue;
                        }
                        let delta = leader.route[here.route_index].leaves_at
                            - follower.route[there.route_index].leaves_at;
                        let next_index = leader
                            .route
                            .iter()
                            .position(|e| e.block == next_block)
                            .expect("segment endpoint on route");
                        let tau1 =
                            shared_segment_headway(leader, here.route_index, next_index, follower);
                        for m in here.delays() {
                            let forbidden = headway_forbidden(m, delta, tau1);
                            for m2 in there.delays().filter(|d| forbidden.contains(d)) {
                                forbid(
                                    here.flat_index(m).unwrap(),
                                    there.flat_index(m2).unwrap(),
                                );
                            }
                        }
                    }
                }
            }
        }
        ConditionKind::Deadlock => {
            for (a_index, a) in problem.trains.iter().enumerate() {
                for (b_index, b) in problem.trains.iter().enumerate() {
                    if a_index >= b_index || a.direction == b.direction {
                        continue;
                    }
                    for (here, next_block) in decision_segments(problem, map, a_index) {
                        // The opposite train must decide at the segment's far
                        // end and head back across it.
                        let Some((there, b_next)) = decision_segments(problem, map, b_index)
                            .find(|(g, _)| g.block == next_block)
                        else {
                            continue;
                        };
                        if b_next != here.block {
                            continue;
                        }
                        let a_next = a
                            .route
                            .iter()
                            .position(|e| e.block == next_block)
                            .expect("segment endpoint on route");
                        let b_far = b
                            .route
                            .iter()
                            .position(|e| e.block == here.block)
                            .expect("segment endpoint on route");
                        let a_crossing = a.min_passage_between(here.route_index, a_next);
                        let b_crossing = b.min_passage_between(there.route_index, b_far);
                        let a_out = a.route[here.route_index].leaves_at;
                        let b_out = b.route[there.route_index].leaves_at;
                        for m in here.delays() {
                            let a_leaves = a_out + m;
                            for m2 in there.delays() {
                                let b_leaves = b_out + m2;
                                if b_leaves < a_leaves + a_crossing
                                    && a_leaves < b_leaves + b_crossing
                                {
                                    forbid(
                                        here.flat_index(m).unwrap(),
                                        there.flat_index(m2).unwrap(),
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
        ConditionKind::RollingStock => {
            for turnover in &problem.turnovers {
                let arriving = &problem.trains[turnover.arriving];
                let &last = map.train_groups(turnover.arriving).last().unwrap();
                let here = &map.groups()[last];
                let there = &map.groups()[map.train_groups(turnover.departing)[0]];
                let terminus = arriving.route.len() - 1;
                let crossing = arriving.min_passage_between(here.route_index, terminus);
                let departing = &problem.trains[turnover.departing];
                let slack = departing.route[there.route_index].leaves_at
                    - arriving.route[here.route_index].leaves_at
                    - crossing
                    - turnover.minutes;
                for m in here.delays() {
                    let forbidden = turnover_forbidden(m, slack);
                    for m2 in there.delays().filter(|d| forbidden.contains(d)) {
                        forbid(
                            here.flat_index(m).unwrap(),
                            there.flat_index(m2).unwrap(),
                        );
                    }
                }
            }
        }
    }
    pairs.into_iter().collect()
}

/// Iterate a train's decision stations together with the block of the next
/// station in travel order — the segments it is about to enter.
fn decision_segments<'a>(
    problem: &'a DispatchProblem,
    map: &'a VariableMap,
    train: usize,
) -> impl Iterator<Item = (&'a VariableGroup, usize)> + 'a {
    let stations = problem.trains[train].station_entries(&problem.network);
    map.train_groups(train)
        .iter()
        .enumerate()
        .map(move |(position, &group)| {
            let next_entry = stations[position + 1];
            (
                &map.groups()[group],
                problem.trains[train].route[next_entry].block,
            )
        })
}

/// The one-hot penalty of every group, with the constant per-group offset
/// dropped: `+2·p_sum` on each in-group pair and `−p_sum` on each variable.
/// A group contributes at least `−p_sum`, with equality exactly when one
/// variable is set.
pub struct OneHotTerms {
    pub pairs: Vec<((usize, usize), f64)>,
    pub linear: Vec<(usize, f64)>,
}

pub fn onehot_penalty_terms(map: &VariableMap, p_sum: f64) -> OneHotTerms {
    let mut pairs = Vec::new();
    let mut linear = Vec::new();
    for group in map.groups() {
        for a in group.start..group.start + group.len {
            linear.push((a, -p_sum));
            for b in a + 1..group.start + group.len {
                pairs.push(((a, b), 2.0 * p_sum));
            }
        }
    }
    OneHotTerms { pairs, linear }
}

/// Compile the whole problem: objective, one-hot penalties, and `p_pair`
/// on every prohibited pair of every condition family.
///
/// The state word caps at the core model's 64 variables; larger problems
/// can still be enumerated and analyzed through the variable map, but not
/// compiled to a single QUBO instance.
pub fn assemble_qubo(problem: &DispatchProblem) -> Result<(QuboInstance, VariableMap), RailError> {
    let map = enumerate_variables(problem)?;
    let mut qubo = QuboInstance::new(map.num_variables())?;

    for (index, coeff) in objective_terms(problem, &map) {
        if coeff != 0.0 {
            qubo.add_linear(index, coeff)?;
        }
    }
    let onehot = onehot_penalty_terms(&map, problem.p_sum);
    for (index, coeff) in onehot.linear {
        qubo.add_linear(index, coeff)?;
    }
    for ((a, b), coeff) in onehot.pairs {
        qubo.add_quadratic(a, b, coeff)?;
    }

    let mut prohibited: BTreeSet<(usize, usize)> = BTreeSet::new();
    for kind in [
        ConditionKind::Passing,
        ConditionKind::SingleBlock,
        ConditionKind::Deadlock,
        ConditionKind::RollingStock,
    ] {
        prohibited.extend(condition_terms(problem, &map, kind));
    }
    for (a, b) in prohibited {
        qubo.add_quadratic(a, b, problem.p_pair)?;
    }

    Ok((qubo, map))
}
