//! Simplified HVAC plant: VAV terminal loops, one air handler, one boiler
//! hot-water loop and one chiller.
//!
//! Control laws are deliberately plain: a thermostat deadband with a
//! proportional cooling band, a cube fan law, and constant boiler
//! efficiency and chiller COP. All constants are explicit config fields.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Specific heat of air, J/kg/K.
pub const AIR_HEAT_CAPACITY: f64 = 1006.0;
/// Density of air, kg/m³.
pub const AIR_DENSITY: f64 = 1.2;
/// Cubic feet per minute in one m³/s.
pub const CFM_PER_M3S: f64 = 2118.88;

/// Agent action: the two plant setpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setpoints {
    /// Boiler supply water temperature T̂_b, °C.
    pub supply_water_temp: f64,
    /// AHU supply air temperature T̂_s, °C.
    pub supply_air_temp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetpointBounds {
    pub supply_water_temp: [f64; 2],
    pub supply_air_temp: [f64; 2],
}

impl Default for SetpointBounds {
    fn default() -> Self {
        Self {
            supply_water_temp: [30.0, 90.0],
            supply_air_temp: [10.0, 20.0],
        }
    }
}

impl SetpointBounds {
    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [
            ("supply_water_temp", self.supply_water_temp),
            ("supply_air_temp", self.supply_air_temp),
        ] {
            if !(lo <= hi) {
                return Err(SimError::Config(format!("{name} bounds [{lo}, {hi}] are empty")));
            }
        }
        Ok(())
    }

    /// Clamps into bounds; returns the clamped setpoints and the names of
    /// the fields that were changed.
    pub fn clamp(&self, sp: Setpoints) -> (Setpoints, Vec<&'static str>) {
        let mut events = Vec::new();
        let mut clamp = |v: f64, [lo, hi]: [f64; 2], name| {
            let c = if v.is_nan() { lo } else { v.clamp(lo, hi) };
            if c != v {
                events.push(name);
            }
            c
        };
        let out = Setpoints {
            supply_water_temp: clamp(sp.supply_water_temp, self.supply_water_temp, "supply_water_temp"),
            supply_air_temp: clamp(sp.supply_air_temp, self.supply_air_temp, "supply_air_temp"),
        };
        (out, events)
    }
}

/// Zone thermostat band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneSetpoints {
    pub heating: f64,
    pub cooling: f64,
}

impl ZoneSetpoints {
    pub fn validate(&self) -> Result<()> {
        if !(self.heating < self.cooling) {
            return Err(SimError::Config(format!(
                "heating setpoint {} must be below cooling setpoint {}",
                self.heating, self.cooling
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VavConfig {
    /// kg/s
    pub min_airflow: f64,
    /// kg/s
    pub max_airflow: f64,
    /// Reheat coil capacity, W.
    pub reheat_capacity: f64,
    /// Upper limit on discharge air temperature, °C.
    pub discharge_cap: f64,
    /// Width of the proportional band, °C.
    pub proportional_band: f64,
}

impl Default for VavConfig {
    fn default() -> Self {
        Self {
            min_airflow: 0.05,
            max_airflow: 0.5,
            reheat_capacity: 5_000.0,
            discharge_cap: 35.0,
            proportional_band: 2.0,
        }
    }
}

impl VavConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_airflow >= 0.0 && self.min_airflow <= self.max_airflow) {
            return Err(SimError::Config(format!(
                "VAV airflow range [{}, {}] is invalid",
                self.min_airflow, self.max_airflow
            )));
        }
        if !(self.reheat_capacity >= 0.0) || !(self.proportional_band > 0.0) {
            return Err(SimError::Config(
                "VAV reheat capacity must be >= 0 and proportional band > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VavOutput {
    /// Supply airflow, kg/s.
    pub airflow: f64,
    /// Discharge air temperature, °C.
    pub discharge_temp: f64,
    /// Heat delivered to the zone, W (negative when cooling).
    pub zone_heat: f64,
    /// Hot-water heat drawn by the reheat coil, W.
    pub reheat: f64,
}

/// Deadband thermostat loop of one VAV box.
pub fn vav_update(
    zone_temp: f64,
    sp: &ZoneSetpoints,
    supply_air_temp: f64,
    supply_water_temp: f64,
    cfg: &VavConfig,
) -> VavOutput {
    let band = cfg.proportional_band;
    let mut airflow = cfg.min_airflow;
    let mut discharge = supply_air_temp;
    let mut reheat = 0.0;
    if zone_temp > sp.cooling {
        let frac = ((zone_temp - sp.cooling) / band).clamp(0.0, 1.0);
        airflow = cfg.min_airflow + frac * (cfg.max_airflow - cfg.min_airflow);
    } else if zone_temp < sp.heating {
        let frac = ((sp.heating - zone_temp) / band).clamp(0.0, 1.0);
        let target = supply_water_temp.min(cfg.discharge_cap);
        if target > supply_air_temp {
            let wanted = supply_air_temp + frac * (target - supply_air_temp);
            let flow_c = airflow * AIR_HEAT_CAPACITY;
            let limit = if flow_c > 0.0 {
                supply_air_temp + cfg.reheat_capacity / flow_c
            } else {
                supply_air_temp
            };
            discharge = wanted.min(limit);
            reheat = flow_c * (discharge - supply_air_temp);
        }
    }
    VavOutput {
        airflow,
        discharge_temp: discharge,
        zone_heat: airflow * AIR_HEAT_CAPACITY * (discharge - zone_temp),
        reheat,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AhuConfig {
    /// Airflow at which the fans draw rated power, kg/s.
    pub rated_airflow: f64,
    /// Combined intake and exhaust fan power at rated airflow, W.
    pub rated_fan_power: f64,
    /// Fraction of supply air taken from the return stream.
    pub recirculation: f64,
}

impl Default for AhuConfig {
    fn default() -> Self {
        Self {
            rated_airflow: 5.0,
            rated_fan_power: 7_500.0,
            recirculation: 0.7,
        }
    }
}

impl AhuConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rated_airflow > 0.0) || !(self.rated_fan_power >= 0.0) {
            return Err(SimError::Config("AHU rated airflow must be > 0, fan power >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.recirculation) {
            return Err(SimError::Config(format!(
                "recirculation fraction {} outside [0, 1]",
                self.recirculation
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AhuOutput {
    pub fan_power: f64,
    pub mixed_air_temp: f64,
    /// Heat the supply air needs from the hot-water loop, W (≥ 0).
    pub heating_load: f64,
    /// Heat the chiller must remove, W (≥ 0).
    pub cooling_load: f64,
    /// Outside airflow, CFM.
    pub outside_airflow: f64,
}

pub fn ahu_update(
    total_airflow: f64,
    return_temp: f64,
    supply_air_temp: f64,
    outside_temp: f64,
    cfg: &AhuConfig,
) -> AhuOutput {
    let flow = total_airflow.max(0.0);
    let ratio = flow / cfg.rated_airflow;
    let fan_power = (cfg.rated_fan_power * ratio.powi(3)).min(cfg.rated_fan_power);
    let r = cfg.recirculation;
    let mixed = r * return_temp + (1.0 - r) * outside_temp;
    let load = flow * AIR_HEAT_CAPACITY * (supply_air_temp - mixed);
    AhuOutput {
        fan_power,
        mixed_air_temp: mixed,
        heating_load: load.max(0.0),
        cooling_load: (-load).max(0.0),
        outside_airflow: (1.0 - r) * flow / AIR_DENSITY * CFM_PER_M3S,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoilerConfig {
    pub efficiency: f64,
    /// W of gas.
    pub max_gas_power: f64,
    /// W.
    pub pump_power: f64,
    /// Fraction of pump power drawn with no demand.
    pub pump_standby_fraction: f64,
}

impl Default for BoilerConfig {
    fn default() -> Self {
        Self {
            efficiency: 0.85,
            max_gas_power: 100_000.0,
            pump_power: 1_500.0,
            pump_standby_fraction: 0.1,
        }
    }
}

impl BoilerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(SimError::Config(format!(
                "boiler efficiency {} outside (0, 1]",
                self.efficiency
            )));
        }
        if !(self.max_gas_power >= 0.0 && self.pump_power >= 0.0) {
            return Err(SimError::Config("boiler ratings must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.pump_standby_fraction) {
            return Err(SimError::Config("pump standby fraction outside [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoilerOutput {
    pub gas_power: f64,
    pub pump_power: f64,
    /// Heat delivered to the water loop, W.
    pub delivered: f64,
    pub unmet: f64,
}

pub fn boiler_update(demand: f64, cfg: &BoilerConfig) -> BoilerOutput {
    let demand = demand.max(0.0);
    let gas_power = (demand / cfg.efficiency).clamp(0.0, cfg.max_gas_power);
    let delivered = (gas_power * cfg.efficiency).min(demand);
    let pump_power = if demand > 0.0 {
        cfg.pump_power
    } else {
        cfg.pump_power * cfg.pump_standby_fraction
    };
    BoilerOutput {
        gas_power,
        pump_power,
        delivered,
        unmet: demand - delivered,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChillerConfig {
    pub cop: f64,
    /// Electrical W, coolant pump included.
    pub max_power: f64,
}

impl Default for ChillerConfig {
    fn default() -> Self {
        Self {
            cop: 3.5,
            max_power: 30_000.0,
        }
    }
}

impl ChillerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cop > 0.0) || !(self.max_power >= 0.0) {
            return Err(SimError::Config("chiller COP must be > 0, max power >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChillerOutput {
    pub power: f64,
    pub delivered: f64,
    pub unmet: f64,
}

pub fn chiller_update(load: f64, cfg: &ChillerConfig) -> ChillerOutput {
    let load = load.max(0.0);
    let power = (load / cfg.cop).clamp(0.0, cfg.max_power);
    let delivered = (power * cfg.cop).min(load);
    ChillerOutput {
        power,
        delivered,
        unmet: load - delivered,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    #[serde(default)]
    pub bounds: SetpointBounds,
    pub vav: VavConfig,
    pub ahu: AhuConfig,
    pub boiler: BoilerConfig,
    pub chiller: ChillerConfig,
}

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        self.vav.validate()?;
        self.ahu.validate()?;
        self.boiler.validate()?;
        self.chiller.validate()
    }

    /// Rated maxima for cost normalization.
    pub fn ratings(&self) -> DevicePower {
        DevicePower {
            fan_power: self.ahu.rated_fan_power,
            chiller_power: self.chiller.max_power,
            pump_power: self.boiler.pump_power,
            gas_power: self.boiler.max_gas_power,
        }
    }
}

/// Building-level electrical and gas power, W.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DevicePower {
    /// AHU intake + exhaust fans.
    pub fan_power: f64,
    pub chiller_power: f64,
    pub pump_power: f64,
    pub gas_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantOutput {
    /// Per-zone heat delivered, W.
    pub zone_heat: Vec<f64>,
    /// Per-zone supply airflow, kg/s.
    pub airflow: Vec<f64>,
    pub discharge_temp: Vec<f64>,
    pub power: DevicePower,
    pub ahu: AhuOutput,
    /// Supply air temperature actually achieved, °C.
    pub supply_air_temp: f64,
    pub return_temp: f64,
    pub unmet_heating: f64,
    pub unmet_cooling: f64,
}

/// One plant evaluation: VAVs, then AHU, then boiler and chiller.
///
/// `served[z]` is false for zones without a VAV; they receive no air.
/// When the boiler or chiller saturates, the achieved supply and reheat
/// temperature rises are scaled by the fraction of load actually served.
pub fn plant_step(
    zone_temps: &[f64],
    zone_setpoints: &[ZoneSetpoints],
    served: &[bool],
    sp: Setpoints,
    outside_temp: f64,
    cfg: &PlantConfig,
) -> Result<PlantOutput> {
    let n = zone_temps.len();
    if zone_setpoints.len() != n || served.len() != n {
        return Err(SimError::Shape(format!(
            "{n} zone temperatures, {} setpoints, {} served flags",
            zone_setpoints.len(),
            served.len()
        )));
    }
    let vavs: Vec<Option<VavOutput>> = (0..n)
        .map(|z| {
            served[z].then(|| {
                vav_update(
                    zone_temps[z],
                    &zone_setpoints[z],
                    sp.supply_air_temp,
                    sp.supply_water_temp,
                    &cfg.vav,
                )
            })
        })
        .collect();

    let total_flow: f64 = vavs.iter().flatten().map(|v| v.airflow).sum();
    let return_temp = if total_flow > 0.0 {
        vavs.iter()
            .zip(zone_temps)
            .filter_map(|(v, t)| v.map(|v| v.airflow * t))
            .sum::<f64>()
            / total_flow
    } else {
        outside_temp
    };
    let ahu = ahu_update(total_flow, return_temp, sp.supply_air_temp, outside_temp, &cfg.ahu);
    let reheat: f64 = vavs.iter().flatten().map(|v| v.reheat).sum();
    let boiler = boiler_update(reheat + ahu.heating_load, &cfg.boiler);
    let chiller = chiller_update(ahu.cooling_load, &cfg.chiller);

    let hot_fraction = served_fraction(boiler.delivered, boiler.delivered + boiler.unmet);
    let cold_fraction = served_fraction(chiller.delivered, chiller.delivered + chiller.unmet);
    let mixed = ahu.mixed_air_temp;
    let lift_fraction = if sp.supply_air_temp >= mixed { hot_fraction } else { cold_fraction };
    let supply = if total_flow > 0.0 {
        mixed + lift_fraction * (sp.supply_air_temp - mixed)
    } else {
        sp.supply_air_temp
    };

    let mut zone_heat = vec![0.0; n];
    let mut airflow = vec![0.0; n];
    let mut discharge_temp = vec![f64::NAN; n];
    for (z, v) in vavs.iter().enumerate() {
        if let Some(v) = v {
            let rise = v.discharge_temp - sp.supply_air_temp;
            let t = supply + hot_fraction * rise;
            airflow[z] = v.airflow;
            discharge_temp[z] = t;
            zone_heat[z] = v.airflow * AIR_HEAT_CAPACITY * (t - zone_temps[z]);
        }
    }
    Ok(PlantOutput {
        zone_heat,
        airflow,
        discharge_temp,
        power: DevicePower {
            fan_power: ahu.fan_power,
            chiller_power: chiller.power,
            pump_power: boiler.pump_power,
            gas_power: boiler.gas_power,
        },
        ahu,
        supply_air_temp: supply,
        return_temp,
        unmet_heating: boiler.unmet,
        unmet_cooling: chiller.unmet,
    })
}

fn served_fraction(delivered: f64, demand: f64) -> f64 {
    if demand > 0.0 {
        (delivered / demand).clamp(0.0, 1.0)
    } else {
        1.0
    }
}
