//! Reset/step environment over a compiled building.
//!
//! One step runs the plant, injects diffuser energy, advances every floor's
//! thermal state, shuffles zone air, samples occupancy and scores the 3C
//! reward.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::building::{Building, Measurement};
use crate::config::TariffSchedule;
use crate::derive_seed;
use crate::engine::{
    air_shuffle_state, apply_diffuser_energy, fd_step, BoundaryConditions, SolverSettings,
    StepStats, ThermalState,
};
use crate::error::{Result, SimError};
use crate::hvac::{plant_step, DevicePower, PlantOutput, Setpoints};
use crate::occupancy::OccupancySim;
use crate::reward::{RewardInfo, RewardResponse, ZoneRewardInfo};

pub const HISTOGRAM_LOW: f64 = 12.0;
pub const HISTOGRAM_BINS: usize = 18;

/// Share of zones per 1 °C bin over 12..30 °C; values outside the range
/// land in the end bins.
pub fn observation_histogram(zone_temps: &[f64]) -> Vec<f64> {
    let mut bins = vec![0.0; HISTOGRAM_BINS];
    if zone_temps.is_empty() {
        return bins;
    }
    for &t in zone_temps {
        let k = (t - HISTOGRAM_LOW).floor();
        let k = if k.is_nan() { 0.0 } else { k.clamp(0.0, (HISTOGRAM_BINS - 1) as f64) };
        bins[k as usize] += 1.0;
    }
    let n = zone_temps.len() as f64;
    bins.iter_mut().for_each(|b| *b /= n);
    bins
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// Seconds per step.
    pub timestep: f64,
    /// Steps per episode.
    pub horizon: usize,
    pub start: DateTime<Utc>,
    /// Default initial zone temperature, °C.
    pub initial_temp: f64,
    pub epsilon: f64,
    pub max_sweeps: usize,
    /// With the plant off no energy enters the zones and all powers are 0.
    pub plant_enabled: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            timestep: 300.0,
            horizon: 288,
            start: Utc.with_ymd_and_hms(2024, 1, 8, 0, 0, 0).unwrap(),
            initial_temp: 21.0,
            epsilon: 0.01,
            max_sweeps: 10_000,
            plant_enabled: true,
        }
    }
}

impl EnvConfig {
    pub fn solver(&self) -> SolverSettings {
        SolverSettings {
            epsilon: self.epsilon,
            max_sweeps: self.max_sweeps,
        }
    }

    pub fn time_at(&self, step: usize) -> DateTime<Utc> {
        self.start + Duration::milliseconds((self.timestep * 1000.0).round() as i64 * step as i64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub timestamp: DateTime<Utc>,
    pub values: Vec<f64>,
    pub histogram: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub response: RewardResponse,
    pub reward_info: RewardInfo,
    pub outside_temp: f64,
    /// Action fields that were clamped into bounds.
    pub clamped: Vec<String>,
    pub unmet_heating: f64,
    pub unmet_cooling: f64,
    /// Per floor.
    pub solver: Vec<StepStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

pub struct Env<'a> {
    building: &'a Building,
    config: EnvConfig,
    tariff: TariffSchedule,
    states: Vec<ThermalState>,
    occupancy: OccupancySim,
    occupancy_rng: ChaCha8Rng,
    step: usize,
    plant: Option<PlantOutput>,
    last_action: Setpoints,
    last_outside: f64,
    failed: bool,
}

impl<'a> Env<'a> {
    pub fn new(building: &'a Building, config: EnvConfig) -> Result<Self> {
        if !(config.timestep > 0.0) || !(config.epsilon > 0.0) {
            return Err(SimError::Config("timestep and epsilon must be > 0".into()));
        }
        let tariff = TariffSchedule::constant(building.config.tariff);
        let occupancy = OccupancySim::new(building.config.occupancy.clone(), &building.zone_capacity)?;
        let b = building.config.plant.bounds;
        let mut env = Self {
            building,
            states: Vec::new(),
            occupancy,
            occupancy_rng: ChaCha8Rng::seed_from_u64(0),
            step: 0,
            plant: None,
            last_action: Setpoints {
                supply_water_temp: 0.5 * (b.supply_water_temp[0] + b.supply_water_temp[1]),
                supply_air_temp: 0.5 * (b.supply_air_temp[0] + b.supply_air_temp[1]),
            },
            last_outside: f64::NAN,
            failed: false,
            tariff,
            config,
        };
        env.reset(0, None)?;
        Ok(env)
    }

    pub fn with_tariff(mut self, tariff: TariffSchedule) -> Self {
        self.tariff = tariff;
        self
    }

    pub fn building(&self) -> &Building {
        self.building
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn states(&self) -> &[ThermalState] {
        &self.states
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.config.time_at(self.step)
    }

    pub fn zone_temps(&self) -> Vec<f64> {
        let temps: Vec<_> = self.states.iter().map(|s| s.temps.clone()).collect();
        self.building.zone_temps(&temps)
    }

    /// Reinitializes the thermal state; `zone_temps` defaults to the
    /// configured initial temperature in every zone.
    pub fn reset(&mut self, seed: u64, zone_temps: Option<&[f64]>) -> Result<Observation> {
        let n = self.building.zone_count();
        let default = vec![self.config.initial_temp; n];
        let zone_temps = zone_temps.unwrap_or(&default);
        let fallback = if n == 0 {
            self.config.initial_temp
        } else {
            zone_temps.iter().sum::<f64>() / n as f64
        };
        let fields = self.building.initial_fields(zone_temps, fallback)?;
        let outside = self.building.config.weather.outside_temp(self.config.start);
        self.states = fields
            .into_iter()
            .enumerate()
            .map(|(f, field)| {
                let mut s = ThermalState::new(field, derive_seed(seed, &format!("shuffle/floor{f}")));
                s.set_exterior(&self.building.fields[f], outside);
                s.previous = s.temps.clone();
                s
            })
            .collect();
        self.occupancy = OccupancySim::new(
            self.building.config.occupancy.clone(),
            &self.building.zone_capacity,
        )?;
        self.occupancy_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "occupancy"));
        self.step = 0;
        self.failed = false;
        let b = self.building.config.plant.bounds;
        self.last_action = Setpoints {
            supply_water_temp: 0.5 * (b.supply_water_temp[0] + b.supply_water_temp[1]),
            supply_air_temp: 0.5 * (b.supply_air_temp[0] + b.supply_air_temp[1]),
        };
        self.last_outside = outside;
        let temps = self.zone_temps();
        self.plant = Some(self.run_plant(&temps, self.last_action, outside, self.config.start)?);
        Ok(self.observe(&temps))
    }

    fn run_plant(
        &self,
        zone_temps: &[f64],
        sp: Setpoints,
        outside: f64,
        now: DateTime<Utc>,
    ) -> Result<PlantOutput> {
        let b = self.building;
        let workday = b.config.occupancy.is_workday(now.date_naive());
        let setpoints = vec![b.config.setpoints.at(now, workday); zone_temps.len()];
        let served: Vec<bool> = b.zone_vav.iter().map(Option::is_some).collect();
        let mut out = plant_step(zone_temps, &setpoints, &served, sp, outside, &b.config.plant)?;
        if !self.config.plant_enabled {
            out.zone_heat.iter_mut().for_each(|q| *q = 0.0);
            out.airflow.iter_mut().for_each(|q| *q = 0.0);
            out.power = DevicePower::default();
            out.ahu.outside_airflow = 0.0;
            out.unmet_heating = 0.0;
            out.unmet_cooling = 0.0;
        }
        Ok(out)
    }

    fn observe(&self, zone_temps: &[f64]) -> Observation {
        let plant = self.plant.as_ref().expect("plant evaluated on reset");
        let values = self
            .building
            .measurements
            .iter()
            .map(|m| match *m {
                Measurement::ZoneAirTemperature(z) => zone_temps[z],
                Measurement::ZoneAirflow(z) => plant.airflow[z],
                Measurement::DischargeAirTemperature(z) => plant.discharge_temp[z],
                Measurement::SupplyAirTemperature => plant.supply_air_temp,
                Measurement::MixedAirTemperature => plant.ahu.mixed_air_temp,
                Measurement::ReturnAirTemperature => plant.return_temp,
                Measurement::FanPower => plant.power.fan_power,
                Measurement::OutsideAirflow => plant.ahu.outside_airflow,
                Measurement::GasPower => plant.power.gas_power,
                Measurement::PumpPower => plant.power.pump_power,
                Measurement::SupplyWaterSetpoint => self.last_action.supply_water_temp,
                Measurement::ChillerPower => plant.power.chiller_power,
                Measurement::OutsideAirTemperature => self.last_outside,
            })
            .collect();
        Observation {
            timestamp: self.now(),
            values,
            histogram: observation_histogram(zone_temps),
        }
    }

    /// Steps with the building's weather model.
    pub fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let outside = self.building.config.weather.outside_temp(self.now());
        self.step_with_weather(action, outside)
    }

    /// Steps with an explicit outside temperature.
    pub fn step_with_weather(&mut self, action: &[f64], outside: f64) -> Result<StepResult> {
        if self.failed {
            return Err(SimError::Config("environment failed; call reset".into()));
        }
        let result = self.advance(action, outside);
        if result.is_err() {
            self.failed = true;
        }
        result
    }

    fn advance(&mut self, action: &[f64], outside: f64) -> Result<StepResult> {
        let b = self.building;
        if action.len() != b.action_names.len() {
            return Err(SimError::Shape(format!(
                "action has {} values, building expects {}",
                action.len(),
                b.action_names.len()
            )));
        }
        if !outside.is_finite() {
            return Err(SimError::Config(format!("outside temperature {outside} at step {}", self.step)));
        }
        let requested = Setpoints {
            supply_water_temp: action[b.action_slots[0]],
            supply_air_temp: action[b.action_slots[1]],
        };
        let (sp, clamped) = b.config.plant.bounds.clamp(requested);
        let clamped = clamped
            .into_iter()
            .map(|field| {
                let slot = if field == "supply_water_temp" { 0 } else { 1 };
                b.action_names[b.action_slots[slot]].clone()
            })
            .collect();

        let now = self.now();
        let dt = self.config.timestep;
        let zone_temps = self.zone_temps();
        let plant = self.run_plant(&zone_temps, sp, outside, now)?;

        let mut energy = BTreeMap::new();
        for (z, vav) in b.zone_vav.iter().enumerate() {
            if let Some(di) = vav {
                let id = &b.config.devices.devices[*di].id;
                energy.insert(id.clone(), plant.zone_heat[z] * dt);
            }
        }
        let dims: Vec<_> = b.grids.iter().map(|g| (g.width(), g.height())).collect();
        let energy_fields = apply_diffuser_energy(&energy, &b.config.devices, &dims)?;

        let bc = BoundaryConditions::new(outside, dt);
        let settings = self.config.solver();
        let params = &b.config.params;
        let radius = params.swap_radius_cells();
        let mut solver = Vec::with_capacity(self.states.len());
        for (f, state) in self.states.iter_mut().enumerate() {
            solver.push(fd_step(state, &b.fields[f], &bc, &energy_fields[f], &settings)?);
            air_shuffle_state(state, &b.shuffle[f], params.swap_prob, radius);
        }

        let occupancy = self.occupancy.step(now.naive_utc(), dt, &mut self.occupancy_rng);
        let new_temps = self.zone_temps();
        let workday = b.config.occupancy.is_workday(now.date_naive());
        let zone_sp = b.config.setpoints.at(now, workday);
        let tariff = self.tariff.at(now);
        let reward_info = RewardInfo {
            zones: (0..b.zone_count())
                .map(|z| ZoneRewardInfo {
                    temp: new_temps[z],
                    heating_setpoint: zone_sp.heating,
                    cooling_setpoint: zone_sp.cooling,
                    airflow: plant.airflow[z],
                    occupancy: occupancy[z],
                    area: b.zone_area_ft2[z],
                })
                .collect(),
            power: plant.power,
            outside_airflow: plant.ahu.outside_airflow,
            electricity_price: tariff.electricity_price,
            gas_price: tariff.gas_price,
            electricity_emission: tariff.electricity_emission,
            gas_emission: tariff.gas_emission,
        };
        let response = b.reward_model.evaluate(&reward_info)?;

        let info = StepInfo {
            response,
            reward_info,
            outside_temp: outside,
            clamped,
            unmet_heating: plant.unmet_heating,
            unmet_cooling: plant.unmet_cooling,
            solver,
        };
        self.plant = Some(plant);
        self.last_action = sp;
        self.last_outside = outside;
        self.step += 1;
        let observation = self.observe(&new_temps);
        Ok(StepResult {
            observation,
            reward: response.reward,
            done: self.step >= self.config.horizon,
            info,
        })
    }
}
