//! Stochastic occupancy.
//!
//! Every occupant walks NotArrived → Present → Departed once per workday.
//! Inside the arrival window each pending occupant arrives with probability
//! `2 / n` per step (`n` = steps in the window); whoever is still pending
//! at the last window step arrives then. Departure works the same way.

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike, Weekday};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyModel {
    /// Arrival window, hours of day `[start, end)`.
    pub arrival: [f64; 2],
    /// Departure window, hours of day `[start, end)`.
    pub departure: [f64; 2],
    /// Non-working dates.
    #[serde(default)]
    pub holidays: Vec<NaiveDate>,
    /// Treat Saturday and Sunday as non-working days.
    #[serde(default = "yes")]
    pub weekends_off: bool,
}

fn yes() -> bool {
    true
}

impl Default for OccupancyModel {
    fn default() -> Self {
        Self {
            arrival: [8.0, 9.0],
            departure: [17.0, 18.0],
            holidays: Vec::new(),
            weekends_off: true,
        }
    }
}

impl OccupancyModel {
    pub fn validate(&self) -> Result<()> {
        let [a0, a1] = self.arrival;
        let [d0, d1] = self.departure;
        let ok = 0.0 <= a0 && a0 < a1 && a1 <= d0 && d0 < d1 && d1 <= 24.0;
        if !ok {
            return Err(SimError::Config(format!(
                "occupancy windows arrival {:?} / departure {:?} must be ordered and disjoint within a day",
                self.arrival, self.departure
            )));
        }
        Ok(())
    }

    pub fn is_workday(&self, date: NaiveDate) -> bool {
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        !(self.weekends_off && weekend) && !self.holidays.contains(&date)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OccupantState {
    NotArrived,
    Present,
    Departed,
}

/// Occupant states of every zone.
#[derive(Debug, Clone)]
pub struct OccupancySim {
    model: OccupancyModel,
    day: Option<NaiveDate>,
    zones: Vec<Vec<OccupantState>>,
}

fn hours(t: NaiveDateTime) -> f64 {
    t.num_seconds_from_midnight() as f64 / 3600.0
}

impl OccupancySim {
    /// `capacity[z]` is the number of occupants of zone `z`.
    pub fn new(model: OccupancyModel, capacity: &[u32]) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            model,
            day: None,
            zones: capacity
                .iter()
                .map(|&k| vec![OccupantState::NotArrived; k as usize])
                .collect(),
        })
    }

    pub fn model(&self) -> &OccupancyModel {
        &self.model
    }

    pub fn states(&self, zone: usize) -> &[OccupantState] {
        &self.zones[zone]
    }

    fn headcount(&self) -> Vec<usize> {
        self.zones
            .iter()
            .map(|z| z.iter().filter(|&&s| s == OccupantState::Present).count())
            .collect()
    }

    /// Advances over `[start, start + dt)` and returns the mean headcount of
    /// each zone over that interval.
    pub fn step<R: Rng>(&mut self, start: NaiveDateTime, dt: f64, rng: &mut R) -> Vec<f64> {
        let date = start.date();
        if self.day != Some(date) {
            self.day = Some(date);
            for z in &mut self.zones {
                z.fill(OccupantState::NotArrived);
            }
        }
        if !self.model.is_workday(date) {
            return vec![0.0; self.zones.len()];
        }
        let before = self.headcount();
        let t0 = hours(start);
        let t1 = t0 + dt / 3600.0;
        let [a0, a1] = self.model.arrival;
        let [d0, d1] = self.model.departure;
        let p_arrive = window_probability(a1 - a0, dt);
        let p_depart = window_probability(d1 - d0, dt);
        let arriving = t0 >= a0 - 1e-9 && t0 < d1;
        let arrival_forced = t1 >= a1 - 1e-9;
        let departing = t0 >= d0 - 1e-9;
        let departure_forced = t1 >= d1 - 1e-9;
        for zone in &mut self.zones {
            for s in zone.iter_mut() {
                match *s {
                    OccupantState::NotArrived if arriving => {
                        if arrival_forced || rng.gen::<f64>() < p_arrive {
                            *s = OccupantState::Present;
                        }
                    }
                    OccupantState::Present if departing => {
                        if departure_forced || rng.gen::<f64>() < p_depart {
                            *s = OccupantState::Departed;
                        }
                    }
                    _ => {}
                }
            }
        }
        let after = self.headcount();
        before
            .iter()
            .zip(&after)
            .map(|(&b, &a)| (b + a) as f64 / 2.0)
            .collect()
    }
}

/// Per-step transition probability `2 / n` for a window of `hours` length.
fn window_probability(hours: f64, dt: f64) -> f64 {
    let n = (hours * 3600.0 / dt).round().max(1.0);
    (2.0 / n).min(1.0)
}
