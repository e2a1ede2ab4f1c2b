//! Domain model for single-track railway dispatching: a line of blocks,
//! trains with timetables, and the disturbance scenario to be re-solved.

use serde::{Deserialize, Serialize};

use crate::RailError;

/// One block section of the line, in geographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Block {
    /// Plain single-track section between stations.
    Line,
    /// Station block with a number of tracks trains can dwell on.
    Station { tracks: u32 },
}

impl Block {
    pub fn is_station(&self) -> bool {
        matches!(self, Block::Station { .. })
    }
}

/// The line as an ordered list of blocks; the ends must be stations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    pub blocks: Vec<Block>,
}

impl Network {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_station(&self, block: usize) -> bool {
        self.blocks.get(block).is_some_and(Block::is_station)
    }

    pub fn tracks(&self, block: usize) -> u32 {
        match self.blocks.get(block) {
            Some(Block::Station { tracks }) => *tracks,
            _ => 0,
        }
    }

    fn validate(&self) -> Result<(), RailError> {
        let stations = self.blocks.iter().filter(|b| b.is_station()).count();
        if stations < 2 {
            return Err(RailError::TooFewStations(stations));
        }
        if !self.blocks.first().is_some_and(Block::is_station)
            || !self.blocks.last().is_some_and(Block::is_station)
        {
            return Err(RailError::LineEndsAreNotStations);
        }
        for (block, b) in self.blocks.iter().enumerate() {
            if let Block::Station { tracks: 0 } = b {
                return Err(RailError::BadTrackCount { block });
            }
        }
        Ok(())
    }
}

/// Direction of travel along the block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Ascending block indices.
    Even,
    /// Descending block indices.
    Odd,
}

/// Timetable data for one block of a train's route, in travel order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteEntry {
    /// Block index in the network.
    pub block: usize,
    /// Timetabled minute at which the train leaves this block.
    pub leaves_at: i64,
    /// Minimum passing (or dwell) time through this block, minutes.
    pub min_passage: i64,
}

/// One train: its path along the line and the dispatching data attached to
/// it.  Timetabled passage through entry `k` is `leaves_at[k] −
/// leaves_at[k−1]` (with the explicit entry time for the first block); the
/// difference to `min_passage` is the time reserve available to recover
/// delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Train {
    pub name: String,
    pub direction: Direction,
    /// Timetabled minute at which the train enters its first block.
    pub enters_at: i64,
    /// Primary delay at entry, minutes.
    #[serde(default)]
    pub entry_delay: i64,
    /// Largest additional (secondary) delay the dispatcher may assign.
    pub d_max: u32,
    /// Objective weight of this train's delay.
    pub weight: f64,
    pub route: Vec<RouteEntry>,
}

impl Train {
    /// Timetabled passage time through route entry `k`.
    pub fn timetabled_passage(&self, k: usize) -> i64 {
        let entered = if k == 0 {
            self.enters_at
        } else {
            self.route[k - 1].leaves_at
        };
        self.route[k].leaves_at - entered
    }

    /// Time reserve of route entry `k`: timetabled passage minus minimum.
    pub fn reserve(&self, k: usize) -> i64 {
        self.timetabled_passage(k) - self.route[k].min_passage
    }

    /// Route-entry indices that are stations, in travel order.
    pub fn station_entries(&self, network: &Network) -> Vec<usize> {
        (0..self.route.len())
            .filter(|&k| network.is_station(self.route[k].block))
            .collect()
    }

    /// Sum of reserves strictly after route entry `from` up to and
    /// including route entry `to` — the recovery available between two
    /// stations, counting the arrival station's own dwell reserve.
    pub fn reserve_between(&self, from: usize, to: usize) -> i64 {
        (from + 1..=to).map(|k| self.reserve(k)).sum()
    }

    /// Sum of minimum passing times strictly between two route entries —
    /// the fastest possible crossing of the segment.
    pub fn min_passage_between(&self, from: usize, to: usize) -> i64 {
        (from + 1..to).map(|k| self.route[k].min_passage).sum()
    }
}

/// A shared train set: `arriving` reaches its terminus, turns over, and
/// departs as `departing` from the same station.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turnover {
    pub arriving: usize,
    pub departing: usize,
    /// Minimum turnover time between arrival and the next departure.
    pub minutes: i64,
}

/// A disturbance scenario to re-dispatch: the line, the trains with their
/// primary delays, and the penalty weights of the QUBO compilation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchProblem {
    pub network: Network,
    pub trains: Vec<Train>,
    #[serde(default)]
    pub turnovers: Vec<Turnover>,
    /// Penalty per activated prohibited pair.
    pub p_pair: f64,
    /// Penalty weight of the one-hot constraint per group.
    pub p_sum: f64,
}

impl DispatchProblem {
    pub fn from_json(text: &str) -> Result<Self, RailError> {
        let problem: DispatchProblem =
            serde_json::from_str(text).map_err(|e| RailError::Json(e.to_string()))?;
        problem.validate()?;
        Ok(problem)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("the problem types serialize infallibly")
    }

    /// Check every structural invariant; all compilation entry points call
    /// this first.
    pub fn validate(&self) -> Result<(), RailError> {
        self.network.validate()?;
        if self.trains.is_empty() {
            return Err(RailError::NoTrains);
        }
        if !(self.p_pair.is_finite() && self.p_pair > 0.0) {
            return Err(RailError::BadPenalty {
                which: "p_pair",
                value: self.p_pair,
            });
        }
        if !(self.p_sum.is_finite() && self.p_sum > 0.0) {
            return Err(RailError::BadPenalty {
                which: "p_sum",
                value: self.p_sum,
            });
        }
        for (index, train) in self.trains.iter().enumerate() {
            self.validate_train(index, train)?;
        }
        for turnover in &self.turnovers {
            self.validate_turnover(turnover)?;
        }
        Ok(())
    }

    fn validate_train(&self, index: usize, train: &Train) -> Result<(), RailError> {
        if train.route.is_empty() {
            return Err(RailError::EmptyRoute { train: index });
        }
        if !(train.weight.is_finite() && train.weight >= 0.0) {
            return Err(RailError::BadWeight {
                train: index,
                value: train.weight,
            });
        }
        if train.entry_delay < 0 {
            return Err(RailError::NegativeEntryDelay { train: index });
        }
        for (k, entry) in train.route.iter().enumerate() {
            if entry.block >= self.network.num_blocks() {
                return Err(RailError::RouteOffNetwork {
                    train: index,
                    block: entry.block,
                });
            }
            if entry.min_passage < 0 {
                return Err(RailError::BadPassage {
                    train: index,
                    block: entry.block,
                });
            }
            if k > 0 {
                let step = entry.block as i64 - train.route[k - 1].block as i64;
                let expected = match train.direction {
                    Direction::Even => 1,
                    Direction::Odd => -1,
                };
                if step != expected {
                    return Err(RailError::RouteNotContiguous { train: index });
                }
            }
            if train.reserve(k) < 0 {
                return Err(RailError::NegativeReserve {
                    train: index,
                    block: entry.block,
                    reserve: train.reserve(k),
                });
            }
        }
        let first = train.route.first().unwrap().block;
        let last = train.route.last().unwrap().block;
        if !self.network.is_station(first) || !self.network.is_station(last) {
            return Err(RailError::RouteEndsOffStation { train: index });
        }
        if train.station_entries(&self.network).len() < 2 {
            return Err(RailError::TooFewRouteStations { train: index });
        }
        Ok(())
    }

    fn validate_turnover(&self, turnover: &Turnover) -> Result<(), RailError> {
        for &train in &[turnover.arriving, turnover.departing] {
            if train >= self.trains.len() {
                return Err(RailError::UnknownTrain { train });
            }
        }
        if turnover.minutes < 0 {
            return Err(RailError::NegativeTurnover {
                arriving: turnover.arriving,
                departing: turnover.departing,
            });
        }
        let terminus = self.trains[turnover.arriving].route.last().unwrap().block;
        let start = self.trains[turnover.departing].route.first().unwrap().block;
        if terminus != start {
            return Err(RailError::TurnoverStationMismatch {
                arriving: turnover.arriving,
                departing: turnover.departing,
            });
        }
        Ok(())
    }
}
