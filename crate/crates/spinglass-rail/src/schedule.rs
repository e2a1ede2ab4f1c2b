//! Decoding solver states into dispatching schedules and validating those
//! schedules against the full operational rules — including the station
//! capacity constraint the QUBO does not encode.

use serde::{Deserialize, Serialize};
use spinglass_core::PackedState;

use crate::compile::VariableMap;
use crate::model::{DispatchProblem, Train};
use crate::RailError;

/// Chosen total delays per train at each of its decision stations, in
/// travel order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayTable {
    pub delays: Vec<Vec<i64>>,
}

/// A group whose bits do not select exactly one delay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupViolation {
    pub train: usize,
    pub route_index: usize,
    pub set_bits: usize,
}

/// Read the one-hot groups of `state` back into a delay table.
pub fn decode_schedule(state: PackedState, map: &VariableMap) -> Result<DelayTable, RailError> {
    let mut delays = vec![Vec::new(); map.num_trains()];
    let mut broken = Vec::new();
    for group in map.groups() {
        let mut chosen = None;
        let mut set_bits = 0usize;
        for (offset, delay) in group.delays().enumerate() {
            if state.bit(group.start + offset) {
                set_bits += 1;
                chosen = Some(delay);
            }
        }
        match (set_bits, chosen) {
            (1, Some(delay)) => delays[group.train].push(delay),
            _ => broken.push(GroupViolation {
                train: group.train,
                route_index: group.route_index,
                set_bits,
            }),
        }
    }
    if broken.is_empty() {
        Ok(DelayTable { delays })
    } else {
        Err(RailError::BrokenOneHot { groups: broken })
    }
}

/// Encode a delay table as the corresponding one-hot state.
pub fn encode_schedule(table: &DelayTable, map: &VariableMap) -> Result<PackedState, RailError> {
    if table.delays.len() != map.num_trains() {
        return Err(RailError::DelayTableShape {
            train: table.delays.len(),
            got: table.delays.len(),
            want: map.num_trains(),
        });
    }
    let mut word = 0u64;
    for (train, row) in table.delays.iter().enumerate() {
        let groups = map.train_groups(train);
        if row.len() != groups.len() {
            return Err(RailError::DelayTableShape {
                train,
                got: row.len(),
                want: groups.len(),
            });
        }
        for (position, &delay) in row.iter().enumerate() {
            let group = map.group(train, position);
            let flat = group
                .flat_index(delay)
                .ok_or(RailError::DelayOutOfRange {
                    train,
                    position,
                    delay,
                })?;
            word |= 1 << flat;
        }
    }
    Ok(PackedState(word))
}

/// One train arriving too early at its next station for the reserves it had.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PassingViolation {
    pub train: usize,
    /// Route index of the station departed too late, or of the first
    /// station when the entry delay itself is undercut.
    pub route_index: usize,
    pub delay: i64,
    pub minimum: i64,
}

/// A follower entering a shared segment within the leader's headway.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HeadwayViolation {
    pub leader: usize,
    pub follower: usize,
    /// Block of the shared departure station.
    pub station: usize,
    pub gap: i64,
    pub required: i64,
}

/// Opposite trains committed to the same single-track segment at once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MeetViolation {
    pub train_a: usize,
    pub train_b: usize,
    /// Blocks of the stations the two trains depart from.
    pub station_a: usize,
    pub station_b: usize,
}

/// A departing service outrunning the late arrival of its shared set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TurnoverViolation {
    pub arriving: usize,
    pub departing: usize,
    /// How many more minutes of departure delay would be needed.
    pub shortfall: i64,
}

/// More trains dwelling at a station than it has tracks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CapacityViolation {
    pub station: usize,
    pub trains: Vec<usize>,
    /// The minute span during which all of them are present.
    pub from: i64,
    pub until: i64,
}

/// Everything that is wrong with a schedule.  Empty lists mean feasible.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passing: Vec<PassingViolation>,
    pub single_block: Vec<HeadwayViolation>,
    pub deadlock: Vec<MeetViolation>,
    pub rolling_stock: Vec<TurnoverViolation>,
    pub capacity: Vec<CapacityViolation>,
}

impl ValidationReport {
    pub fn is_feasible(&self) -> bool {
        self.passing.is_empty()
            && self.single_block.is_empty()
            && self.deadlock.is_empty()
            && self.rolling_stock.is_empty()
            && self.capacity.is_empty()
    }

    pub fn violation_count(&self) -> usize {
        self.passing.len()
            + self.single_block.len()
            + self.deadlock.len()
            + self.rolling_stock.len()
            + self.capacity.len()
    }
}

/// The delay a train still carries when it reaches its final station, where
/// no decision variable exists: the larger of the propagated primary delay
/// and what remains of the last chosen delay after the final reserves.
fn final_delay(train: &Train, network_stations: &[usize], chosen: &[i64], primary_final: i64) -> i64 {
    let last_decision = network_stations[network_stations.len() - 2];
    let terminus = network_stations[network_stations.len() - 1];
    let remaining = chosen[chosen.len() - 1] - train.reserve_between(last_decision, terminus);
    primary_final.max(remaining).max(0)
}

/// Check a delay table against every operational rule of the problem.
///
/// The table must assign each train a delay at each decision station; the
/// delays themselves may be arbitrary integers — infeasibly small ones
/// simply show up as violations.
pub fn validate_schedule(
    problem: &DispatchProblem,
    table: &DelayTable,
) -> Result<ValidationReport, RailError> {
    problem.validate()?;
    if table.delays.len() != problem.trains.len() {
        return Err(RailError::DelayTableShape {
            train: table.delays.len(),
            got: table.delays.len(),
            want: problem.trains.len(),
        });
    }
    let stations: Vec<Vec<usize>> = problem
        .trains
        .iter()
        .map(|t| t.station_entries(&problem.network))
        .collect();
    for (train, row) in table.delays.iter().enumerate() {
        let want = stations[train].len() - 1;
        if row.len() != want {
            return Err(RailError::DelayTableShape {
                train,
                got: row.len(),
                want,
            });
        }
    }
    let primary = crate::compile::propagate_primary(problem)?;

    let mut report = ValidationReport::default();

    // Passing: each consecutive pair of decision stations, plus the entry
    // bound at the first one.
    for (index, train) in problem.trains.iter().enumerate() {
        let row = &table.delays[index];
        if row[0] < train.entry_delay {
            report.passing.push(PassingViolation {
                train: index,
                route_index: stations[index][0],
                delay: row[0],
                minimum: train.entry_delay,
            });
        }
        for position in 1..row.len() {
            let from = stations[index][position - 1];
            let to = stations[index][position];
            let minimum = row[position - 1] - train.reserve_between(from, to);
            if row[position] < minimum {
                report.passing.push(PassingViolation {
                    train: index,
                    route_index: from,
                    delay: row[position],
                    minimum,
                });
            }
        }
    }

    // Actual departure minute of a train at the `position`-th station of its
    // route (which must be a decision station).
    let departure = |train: usize, position: usize| -> i64 {
        let entry = stations[train][position];
        problem.trains[train].route[entry].leaves_at + table.delays[train][position]
    };

    // Single block: ordered same-direction pairs over shared segments.
    for (leader_index, leader) in problem.trains.iter().enumerate() {
        for (follower_index, follower) in problem.trains.iter().enumerate() {
            if leader_index == follower_index || leader.direction != follower.direction {
                continue;
            }
            for position in 0..stations[leader_index].len() - 1 {
                let here = leader.route[stations[leader_index][position]].block;
                let next = leader.route[stations[leader_index][position + 1]].block;
                let Some(follower_position) = (0..stations[follower_index].len() - 1).find(|&p| {
                    follower.route[stations[follower_index][p]].block == here
                        && follower.route[stations[follower_index][p + 1]].block == next
                }) else {
                    continue;
                };
                let mut tau1 = 0i64;
                let from = stations[leader_index][position];
                let to = stations[leader_index][position + 1];
                for k in from + 1..to {
                    let block = leader.route[k].block;
                    let own = leader.timetabled_passage(k);
                    let theirs = follower
                        .route
                        .iter()
                        .position(|e| e.block == block)
                        .map(|p| follower.timetabled_passage(p))
                        .unwrap_or(0);
                    tau1 = tau1.max(own).max(theirs);
                }
                let gap = departure(follower_index, follower_position)
                    - departure(leader_index, position);
                if (0..tau1).contains(&gap) {
                    report.single_block.push(HeadwayViolation {
                        leader: leader_index,
                        follower: follower_index,
                        station: here,
                        gap,
                        required: tau1,
                    });
                }
            }
        }
    }

    // Deadlock: unordered opposite-direction pairs over shared segments.
    for (a_index, a) in problem.trains.iter().enumerate() {
        for (b_index, b) in problem.trains.iter().enumerate() {
            if a_index >= b_index || a.direction == b.direction {
                continue;
            }
            for position in 0..stations[a_index].len() - 1 {
                let here = a.route[stations[a_index][position]].block;
                let next = a.route[stations[a_index][position + 1]].block;
                let Some(b_position) = (0..stations[b_index].len() - 1).find(|&p| {
                    b.route[stations[b_index][p]].block == next
                        && b.route[stations[b_index][p + 1]].block == here
                }) else {
                    continue;
                };
                let a_crossing =
                    a.min_passage_between(stations[a_index][position], stations[a_index][position + 1]);
                let b_crossing =
                    b.min_passage_between(stations[b_index][b_position], stations[b_index][b_position + 1]);
                let a_leaves = departure(a_index, position);
                let b_leaves = departure(b_index, b_position);
                if b_leaves < a_leaves + a_crossing && a_leaves < b_leaves + b_crossing {
                    report.deadlock.push(MeetViolation {
                        train_a: a_index,
                        train_b: b_index,
                        station_a: here,
                        station_b: next,
                    });
                }
            }
        }
    }

    // Rolling stock: each turnover's slack.
    for turnover in &problem.turnovers {
        let arriving = &problem.trains[turnover.arriving];
        let arr_stations = &stations[turnover.arriving];
        let last_decision = arr_stations.len() - 2;
        let here = arr_stations[last_decision];
        let crossing = arriving.min_passage_between(here, arr_stations[arr_stations.len() - 1]);
        let departing = &problem.trains[turnover.departing];
        let there = stations[turnover.departing][0];
        let slack = departing.route[there].leaves_at - arriving.route[here].leaves_at
            - crossing
            - turnover.minutes;
        let m = table.delays[turnover.arriving][last_decision];
        let m2 = table.delays[turnover.departing][0];
        if m2 <= m - slack {
            report.rolling_stock.push(TurnoverViolation {
                arriving: turnover.arriving,
                departing: turnover.departing,
                shortfall: (m - slack + 1) - m2,
            });
        }
    }

    // Capacity: at every station, every (tracks+1)-subset of the dwelling
    // intervals must not share a common minute.
    for (block, _) in problem
        .network
        .blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| b.is_station())
    {
        let tracks = problem.network.tracks(block) as usize;
        let mut intervals: Vec<(usize, i64, i64)> = Vec::new();
        for (index, train) in problem.trains.iter().enumerate() {
            let mine = &stations[index];
            let Some(position) = mine
                .iter()
                .position(|&entry| train.route[entry].block == block)
            else {
                continue;
            };
            let arrives = if position == 0 {
                train.enters_at + train.entry_delay
            } else {
                departure(index, position - 1)
            };
            let leaves = if position == mine.len() - 1 {
                let delay = final_delay(
                    train,
                    mine,
                    &table.delays[index],
                    primary[index][position],
                );
                train.route[mine[position]].leaves_at + delay
            } else {
                departure(index, position)
            };
            intervals.push((index, arrives, leaves));
        }
        if intervals.len() <= tracks {
            continue;
        }
        for subset in 1u32..(1u32 << intervals.len()) {
            if subset.count_ones() as usize != tracks + 1 {
                continue;
            }
            let members: Vec<&(usize, i64, i64)> = intervals
                .iter()
                .enumerate()
                .filter(|(i, _)| subset >> i & 1 == 1)
                .map(|(_, iv)| iv)
                .collect();
            let from = members.iter().map(|m| m.1).max().unwrap();
            let until = members.iter().map(|m| m.2).min().unwrap();
            if from < until {
                report.capacity.push(CapacityViolation {
                    station: block,
                    trains: members.iter().map(|m| m.0).collect(),
                    from,
                    until,
                });
            }
        }
    }

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::enumerate_variables;
    use crate::fixtures_for_tests::{rolling_toy, three_station_toy, two_train_toy};

    fn primaries(problem: &DispatchProblem) -> DelayTable {
        let map = enumerate_variables(problem).unwrap();
        let mut delays = vec![Vec::new(); map.num_trains()];
        for group in map.groups() {
            delays[group.train].push(group.base_delay);
        }
        DelayTable { delays }
    }

    #[test]
    fn decode_and_encode_are_inverse() {
        let problem = three_station_toy();
        let map = enumerate_variables(&problem).unwrap();
        let table = DelayTable {
            delays: vec![vec![7, 4], vec![0, 3], vec![2, 2]],
        };
        let state = encode_schedule(&table, &map).unwrap();
        assert_eq!(decode_schedule(state, &map).unwrap(), table);
        // And starting from a state word.
        let word = map
            .groups()
            .iter()
            .fold(0u64, |acc, g| acc | 1 << (g.start + g.len - 1));
        let decoded = decode_schedule(PackedState(word), &map).unwrap();
        assert_eq!(encode_schedule(&decoded, &map).unwrap(), PackedState(word));
    }

    #[test]
    fn broken_groups_are_reported_not_guessed() {
        let problem = two_train_toy();
        let map = enumerate_variables(&problem).unwrap();
        // All-zero word: every group empty.
        let err = decode_schedule(PackedState(0), &map).unwrap_err();
        match err {
            RailError::BrokenOneHot { groups } => {
                assert_eq!(groups.len(), map.groups().len());
                assert!(groups.iter().all(|g| g.set_bits == 0));
            }
            other => panic!("unexpected error {other:?}"),
        }
        // Two bits in one group.
        let g = map.group(0, 0);
        let word = (1u64 << g.start) | (1 << (g.start + 1)) | (1 << map.group(1, 0).start);
        let err = decode_schedule(PackedState(word), &map).unwrap_err();
        match err {
            RailError::BrokenOneHot { groups } => {
                assert_eq!(groups.len(), 1);
                assert_eq!(groups[0].set_bits, 2);
                assert_eq!(groups[0].train, 0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn out_of_range_delays_are_refused() {
        let problem = two_train_toy();
        let map = enumerate_variables(&problem).unwrap();
        let table = DelayTable {
            delays: vec![vec![99], vec![0]],
        };
        assert!(matches!(
            encode_schedule(&table, &map),
            Err(RailError::DelayOutOfRange { train: 0, .. })
        ));
        let short = DelayTable {
            delays: vec![vec![5]],
        };
        assert!(matches!(
            encode_schedule(&short, &map),
            Err(RailError::DelayTableShape { .. })
        ));
    }

    #[test]
    fn passing_violations_follow_the_reserve_arithmetic() {
        let problem = three_station_toy();
        // Train A carries entry delay 5 and reserves 3: arriving with delay
        // 1 < 5 − 3 at the middle station is impossible.
        let mut table = primaries(&problem);
        table.delays[0] = vec![5, 1];
        let report = validate_schedule(&problem, &table).unwrap();
        assert_eq!(report.passing.len(), 1);
        assert_eq!(report.passing[0].train, 0);
        assert_eq!(report.passing[0].minimum, 2);
        // Undercutting the entry delay itself is flagged too.
        table.delays[0] = vec![3, 2];
        let report = validate_schedule(&problem, &table).unwrap();
        assert!(report
            .passing
            .iter()
            .any(|v| v.train == 0 && v.minimum == 5));
    }

    #[test]
    fn headway_and_meet_violations_are_detected() {
        let problem = three_station_toy();
        let mut table = primaries(&problem);
        // B right behind A on the first segment: A leaves minute 13, B its
        // timetabled minute 17, gap 4 < τ₁ = 10.
        table.delays[0] = vec![12, 9];
        table.delays[1] = vec![0, 0];
        let report = validate_schedule(&problem, &table).unwrap();
        assert!(report
            .single_block
            .iter()
            .any(|v| v.leader == 0 && v.follower == 1 && v.gap == 4 && v.required == 10));

        // A meet on the far segment: A leaves its middle station minute 14
        // while C left the far end minute 9 needing 7 minutes across.
        let mut meet = primaries(&problem);
        meet.delays[0] = vec![5, 2];
        meet.delays[2] = vec![7, 7];
        let report = validate_schedule(&problem, &meet).unwrap();
        assert!(report
            .deadlock
            .iter()
            .any(|v| v.train_a == 0 && v.train_b == 2 && v.station_a == 2 && v.station_b == 4));
    }

    #[test]
    fn turnover_violations_report_the_shortfall() {
        let problem = rolling_toy(20, 12);
        // Slack is 2: arriving 3 late, departing 1 late → one short.
        let table = DelayTable {
            delays: vec![vec![3], vec![1]],
        };
        let report = validate_schedule(&problem, &table).unwrap();
        assert_eq!(report.rolling_stock.len(), 1);
        assert_eq!(report.rolling_stock[0].shortfall, 1);
        // Departing 2 late clears it.
        let table = DelayTable {
            delays: vec![vec![3], vec![2]],
        };
        assert!(validate_schedule(&problem, &table)
            .unwrap()
            .rolling_stock
            .is_empty());
    }

    #[test]
    fn capacity_counts_simultaneous_dwellers() {
        // The three-station toy's first station has a single track.  With
        // everything punctual, B dwells there over [16, 17) while the
        // opposing C still claims it (its occupation runs from leaving the
        // middle station, minute 13, until its delayed terminus arrival).
        let problem = three_station_toy();
        let mut table = primaries(&problem);
        table.delays[0] = vec![12, 9];
        let report = validate_schedule(&problem, &table).unwrap();
        let crowded: Vec<_> = report.capacity.iter().filter(|v| v.station == 0).collect();
        assert_eq!(crowded.len(), 1);
        assert_eq!(crowded[0].trains, vec![1, 2]);
        assert_eq!(crowded[0].from, 16);
        assert_eq!(crowded[0].until, 17);

        // Holding C seven minutes at the middle station moves its claim on
        // the terminus to [20, 27), clear of both A and B.
        let spaced = DelayTable {
            delays: vec![vec![5, 2], vec![0, 0], vec![7, 7]],
        };
        let clean = validate_schedule(&problem, &spaced).unwrap();
        assert!(clean.capacity.iter().all(|v| v.station != 0));
    }

    #[test]
    fn final_station_delay_uses_the_remaining_reserves() {
        // Train A: last decision delay 9 with reserve 2 into the terminus
        // and primary 0 there → arrives 7 late, occupying [21, 29).
        let problem = three_station_toy();
        let mine = problem.trains[0].station_entries(&problem.network);
        let delay = final_delay(&problem.trains[0], &mine, &[5, 9], 0);
        assert_eq!(delay, 7);
        // The propagated primary floors it.
        assert_eq!(final_delay(&problem.trains[0], &mine, &[5, 1], 0), 0);
    }
}
