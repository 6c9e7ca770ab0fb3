//! Action sources: recorded replays and scripted setpoint policies.

use std::collections::BTreeMap;

use chrono::{DateTime, Datelike, Timelike, Utc, Weekday};
use serde::{Deserialize, Serialize};

use crate::episode::Episode;
use crate::error::{Result, SimError};

pub trait Policy {
    /// Action for step `t`, which starts at `time`.
    fn action(&mut self, t: usize, time: DateTime<Utc>) -> Result<Vec<f64>>;
}

/// Emits an episode's recorded actions.
#[derive(Debug, Clone)]
pub struct ReplayPolicy {
    rows: Vec<Vec<f64>>,
}

impl ReplayPolicy {
    pub fn new(episode: &Episode, action_names: &[String]) -> Result<Self> {
        let order = action_names
            .iter()
            .map(|n| {
                episode.actions.column(n).ok_or_else(|| {
                    SimError::Config(format!("episode has no action column {n}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let rows = episode
            .actions
            .rows
            .iter()
            .map(|r| order.iter().map(|&k| r[k]).collect())
            .collect();
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl Policy for ReplayPolicy {
    fn action(&mut self, t: usize, _time: DateTime<Utc>) -> Result<Vec<f64>> {
        self.rows
            .get(t)
            .cloned()
            .ok_or_else(|| SimError::Config(format!("no recorded action for step {t}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPolicy(pub Vec<f64>);

impl Policy for ConstantPolicy {
    fn action(&mut self, _t: usize, _time: DateTime<Utc>) -> Result<Vec<f64>> {
        Ok(self.0.clone())
    }
}

/// Occupied setpoints on workday hours, unoccupied otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulePolicy {
    pub occupied: Vec<f64>,
    pub unoccupied: Vec<f64>,
    pub hours: [f64; 2],
    pub weekends_off: bool,
}

impl Policy for SchedulePolicy {
    fn action(&mut self, _t: usize, time: DateTime<Utc>) -> Result<Vec<f64>> {
        let weekend = matches!(time.weekday(), Weekday::Sat | Weekday::Sun);
        let h = time.num_seconds_from_midnight() as f64 / 3600.0;
        let on = !(self.weekends_off && weekend) && h >= self.hours[0] && h < self.hours[1];
        Ok(if on {
            self.occupied.clone()
        } else {
            self.unoccupied.clone()
        })
    }
}

/// Policy file contents; actions are keyed by `device/field` name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    Constant {
        action: BTreeMap<String, f64>,
    },
    Schedule {
        occupied: BTreeMap<String, f64>,
        unoccupied: BTreeMap<String, f64>,
        hours: [f64; 2],
        #[serde(default = "yes")]
        weekends_off: bool,
    },
}

fn yes() -> bool {
    true
}

fn ordered(values: &BTreeMap<String, f64>, names: &[String]) -> Result<Vec<f64>> {
    if let Some(extra) = values.keys().find(|k| !names.contains(k)) {
        return Err(SimError::Config(format!("policy sets unknown action {extra}")));
    }
    names
        .iter()
        .map(|n| {
            values
                .get(n)
                .copied()
                .ok_or_else(|| SimError::Config(format!("policy does not set action {n}")))
        })
        .collect()
}

impl PolicySpec {
    pub fn build(&self, action_names: &[String]) -> Result<Box<dyn Policy + Send>> {
        Ok(match self {
            PolicySpec::Constant { action } => Box::new(ConstantPolicy(ordered(action, action_names)?)),
            PolicySpec::Schedule {
                occupied,
                unoccupied,
                hours,
                weekends_off,
            } => Box::new(SchedulePolicy {
                occupied: ordered(occupied, action_names)?,
                unoccupied: ordered(unoccupied, action_names)?,
                hours: *hours,
                weekends_off: *weekends_off,
            }),
        })
    }
}
