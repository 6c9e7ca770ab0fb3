//! Comfort, cost and carbon reward.
//!
//! Every component is a regret in `[-1, 0]`: comfort is the negated mean
//! zone discomfort, cost and carbon are the negated ratio of actual spend
//! (or emissions) to spend at full rated power.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::hvac::DevicePower;

/// Square feet per m².
pub const FT2_PER_M2: f64 = 10.763_910_416_709_722;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComfortParams {
    /// Stiffness λ, 1/°C.
    pub stiffness: f64,
    /// Deviation Δ at which the loss is 0.5, °C.
    pub offset: f64,
}

impl Default for ComfortParams {
    fn default() -> Self {
        Self {
            stiffness: 4.0,
            offset: 1.0,
        }
    }
}

impl ComfortParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.stiffness > 0.0 && self.offset > 0.0) {
            return Err(SimError::Config("comfort stiffness and offset must be > 0".into()));
        }
        Ok(())
    }
}

/// Discomfort of one zone in `[0, 1]`.
pub fn comfort_loss(
    zone_temp: f64,
    heating: f64,
    cooling: f64,
    occupancy: f64,
    params: &ComfortParams,
) -> f64 {
    if occupancy <= 0.0 {
        return 0.0;
    }
    let deviation = if zone_temp < heating {
        heating - zone_temp
    } else if zone_temp > cooling {
        zone_temp - cooling
    } else {
        return 0.0;
    };
    sigmoid(params.stiffness * (deviation - params.offset))
}

/// C1: negated mean of zone losses; 0 for no zones.
pub fn building_comfort(losses: &[f64]) -> f64 {
    if losses.is_empty() {
        return 0.0;
    }
    -losses.iter().sum::<f64>() / losses.len() as f64
}

/// Normalized spend: `-(p_e·electric + p_g·gas) / (same at rated power)`.
/// Used for cost (prices) and carbon (emission rates) alike.
pub fn normalized_cost(
    power: &DevicePower,
    ratings: &DevicePower,
    electric_rate: f64,
    gas_rate: f64,
) -> Result<f64> {
    let spend = |p: &DevicePower| {
        electric_rate * (p.chiller_power + p.fan_power + p.pump_power) + gas_rate * p.gas_power
    };
    let max = spend(ratings);
    if !(max > 0.0) {
        return Err(SimError::Config(
            "cost normalization is zero: rated powers or rates are all zero".into(),
        ));
    }
    Ok((-spend(power) / max).clamp(-1.0, 0.0))
}

/// C2.
pub fn energy_cost(
    power: &DevicePower,
    ratings: &DevicePower,
    electricity_price: f64,
    gas_price: f64,
) -> Result<f64> {
    normalized_cost(power, ratings, electricity_price, gas_price)
}

/// C3.
pub fn carbon_cost(
    power: &DevicePower,
    ratings: &DevicePower,
    electricity_emission: f64,
    gas_emission: f64,
) -> Result<f64> {
    normalized_cost(power, ratings, electricity_emission, gas_emission)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub comfort: f64,
    pub energy: f64,
    pub carbon: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            comfort: 0.5,
            energy: 0.25,
            carbon: 0.25,
        }
    }
}

impl RewardWeights {
    /// Scales the weights to sum to one.
    pub fn normalized(&self) -> Result<Self> {
        let ws = [self.comfort, self.energy, self.carbon];
        if ws.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(SimError::Config(format!("reward weights must be >= 0: {ws:?}")));
        }
        let sum: f64 = ws.iter().sum();
        if sum <= 0.0 {
            return Err(SimError::Config("reward weights sum to zero".into()));
        }
        Ok(Self {
            comfort: self.comfort / sum,
            energy: self.energy / sum,
            carbon: self.carbon / sum,
        })
    }
}

pub fn reward_3c(c1: f64, c2: f64, c3: f64, w: &RewardWeights) -> f64 {
    w.comfort * c1 + w.energy * c2 + w.carbon * c3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirQualityParams {
    /// CFM per person.
    pub per_person: f64,
    /// CFM per ft².
    pub per_area: f64,
    /// Stiffness, 1/CFM.
    pub stiffness: f64,
    /// Weight q of the `q·(R_aq − 1)` reward term.
    pub weight: f64,
}

impl Default for AirQualityParams {
    fn default() -> Self {
        Self {
            per_person: 5.0,
            per_area: 0.06,
            stiffness: 0.05,
            weight: 0.0,
        }
    }
}

pub fn min_outside_airflow(persons: f64, area_ft2: f64, params: &AirQualityParams) -> f64 {
    params.per_person * persons + params.per_area * area_ft2
}

pub fn air_quality_reward(outside_airflow: f64, min_airflow: f64, stiffness: f64) -> f64 {
    sigmoid(stiffness * (outside_airflow - min_airflow))
}

/// Per-zone inputs of the reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneRewardInfo {
    pub temp: f64,
    pub heating_setpoint: f64,
    pub cooling_setpoint: f64,
    /// kg/s
    pub airflow: f64,
    /// persons
    pub occupancy: f64,
    /// ft²
    pub area: f64,
}

/// Everything needed to recompute the reward of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardInfo {
    pub zones: Vec<ZoneRewardInfo>,
    pub power: DevicePower,
    /// CFM
    pub outside_airflow: f64,
    pub electricity_price: f64,
    pub gas_price: f64,
    pub electricity_emission: f64,
    pub gas_emission: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardResponse {
    pub reward: f64,
    pub comfort: f64,
    pub energy: f64,
    pub carbon: f64,
    /// `R_aq`; 1 when the term is disabled.
    pub air_quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardModel {
    pub weights: RewardWeights,
    pub comfort: ComfortParams,
    pub air_quality: AirQualityParams,
    pub ratings: DevicePower,
}

impl RewardModel {
    pub fn new(
        weights: RewardWeights,
        comfort: ComfortParams,
        air_quality: AirQualityParams,
        ratings: DevicePower,
    ) -> Result<Self> {
        comfort.validate()?;
        if !(air_quality.weight >= 0.0 && air_quality.per_person >= 0.0 && air_quality.per_area >= 0.0)
        {
            return Err(SimError::Config("air-quality parameters must be >= 0".into()));
        }
        Ok(Self {
            weights: weights.normalized()?,
            comfort,
            air_quality,
            ratings,
        })
    }

    pub fn evaluate(&self, info: &RewardInfo) -> Result<RewardResponse> {
        let losses: Vec<f64> = info
            .zones
            .iter()
            .map(|z| {
                comfort_loss(z.temp, z.heating_setpoint, z.cooling_setpoint, z.occupancy, &self.comfort)
            })
            .collect();
        let c1 = building_comfort(&losses);
        let c2 = energy_cost(&info.power, &self.ratings, info.electricity_price, info.gas_price)?;
        let c3 = carbon_cost(
            &info.power,
            &self.ratings,
            info.electricity_emission,
            info.gas_emission,
        )?;
        // normalized weights can sum to 1 + ulp
        let mut reward = reward_3c(c1, c2, c3, &self.weights).clamp(-1.0, 0.0);
        let mut aq = 1.0;
        if self.air_quality.weight > 0.0 {
            let persons: f64 = info.zones.iter().map(|z| z.occupancy).sum();
            let area: f64 = info.zones.iter().map(|z| z.area).sum();
            let v_min = min_outside_airflow(persons, area, &self.air_quality);
            aq = air_quality_reward(info.outside_airflow, v_min, self.air_quality.stiffness);
            reward += self.air_quality.weight * (aq - 1.0);
        }
        Ok(RewardResponse {
            reward,
            comfort: c1,
            energy: c2,
            carbon: c3,
            air_quality: aq,
        })
    }
}
