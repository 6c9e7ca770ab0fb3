//! A building configuration compiled into solver-ready form.

use std::collections::VecDeque;

use crate::config::BuildingConfig;
use crate::engine::ShuffleIndex;
use crate::error::{Result, SimError};
use crate::field::{Direction, Field};
use crate::grid::{DeviceType, FloorplanGrid, MaterialParams, OrientedFields};
use crate::reward::{RewardModel, FT2_PER_M2};

pub const SUPPLY_AIR_ACTION: &str = "supply_air_temperature_setpoint";
pub const SUPPLY_WATER_ACTION: &str = "supply_water_temperature_setpoint";

/// One measurement of the observation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measurement {
    ZoneAirTemperature(usize),
    ZoneAirflow(usize),
    DischargeAirTemperature(usize),
    SupplyAirTemperature,
    MixedAirTemperature,
    ReturnAirTemperature,
    FanPower,
    OutsideAirflow,
    GasPower,
    PumpPower,
    SupplyWaterSetpoint,
    ChillerPower,
    OutsideAirTemperature,
}

fn measurement(device: DeviceType, field: &str, zone: Option<usize>) -> Option<Measurement> {
    use Measurement::*;
    Some(match (device, field) {
        (DeviceType::Vav, "zone_air_temperature") => ZoneAirTemperature(zone?),
        (DeviceType::Vav, "supply_air_flowrate") => ZoneAirflow(zone?),
        (DeviceType::Vav, "discharge_air_temperature") => DischargeAirTemperature(zone?),
        (DeviceType::Ahu, "supply_air_temperature") => SupplyAirTemperature,
        (DeviceType::Ahu, "mixed_air_temperature") => MixedAirTemperature,
        (DeviceType::Ahu, "return_air_temperature") => ReturnAirTemperature,
        (DeviceType::Ahu, "fan_power") => FanPower,
        (DeviceType::Ahu, "outside_air_flowrate") => OutsideAirflow,
        (DeviceType::Boiler, "gas_power") => GasPower,
        (DeviceType::Boiler, "pump_power") => PumpPower,
        (DeviceType::Boiler, "supply_water_temperature") => SupplyWaterSetpoint,
        (DeviceType::Chiller, "electrical_power") => ChillerPower,
        (DeviceType::Meter, "outside_air_temperature") => OutsideAirTemperature,
        _ => return None,
    })
}

#[derive(Debug, Clone)]
pub struct Building {
    pub config: BuildingConfig,
    pub grids: Vec<FloorplanGrid>,
    pub fields: Vec<OrientedFields>,
    pub shuffle: Vec<ShuffleIndex>,
    /// Flat cell indices of each zone on its floor.
    pub zone_cells: Vec<Vec<usize>>,
    pub zone_floor: Vec<usize>,
    /// Index into the device layout of the VAV serving each zone.
    pub zone_vav: Vec<Option<usize>>,
    pub zone_capacity: Vec<u32>,
    /// Zone areas, ft².
    pub zone_area_ft2: Vec<f64>,
    pub reward_model: RewardModel,
    pub action_names: Vec<String>,
    /// Positions of (supply water, supply air) in the action vector.
    pub action_slots: [usize; 2],
    pub observation_names: Vec<String>,
    pub measurements: Vec<Measurement>,
}

impl Building {
    pub fn compile(config: BuildingConfig) -> Result<Self> {
        config.validate()?;
        let grids = config.grids()?;
        let fields = grids
            .iter()
            .map(|g| OrientedFields::for_grid(g, &config.params))
            .collect::<Result<Vec<_>>>()?;
        let shuffle = (0..grids.len())
            .map(|f| ShuffleIndex::new(&grids[f], &config.zones, f))
            .collect();

        let zones = &config.zones.zones;
        let devices = &config.devices.devices;
        let zone_cells = zones
            .iter()
            .map(|z| z.cells.iter().map(|&[x, y]| grids[z.floor].index(x, y)).collect())
            .collect();
        let zone_floor = zones.iter().map(|z| z.floor).collect();
        let mut zone_vav = vec![None; zones.len()];
        let mut vav_zone = vec![None; devices.len()];
        for (zi, zone) in zones.iter().enumerate() {
            for id in &zone.devices {
                let di = devices.iter().position(|d| &d.id == id).ok_or_else(|| {
                    SimError::Config(format!("zone {} references unknown device {id}", zone.id))
                })?;
                if devices[di].device_type != DeviceType::Vav {
                    continue;
                }
                if zone_vav[zi].is_some() {
                    return Err(SimError::Config(format!("zone {} has two VAVs", zone.id)));
                }
                if vav_zone[di].is_some() {
                    return Err(SimError::Config(format!("VAV {id} serves two zones")));
                }
                if devices[di].diffusers.is_empty() {
                    return Err(SimError::Config(format!("VAV {id} has no diffuser cells")));
                }
                if devices[di].floor != zone.floor {
                    return Err(SimError::Config(format!("VAV {id} is not on zone {}'s floor", zone.id)));
                }
                zone_vav[zi] = Some(di);
                vav_zone[di] = Some(zi);
            }
        }

        let cv = |z: &crate::grid::Zone| grids[z.floor].cv_size();
        let zone_area_m2: Vec<f64> = zones.iter().map(|z| z.area(cv(z))).collect();
        let zone_capacity = zone_area_m2
            .iter()
            .map(|a| (a * config.occupant_density).round() as u32)
            .collect();
        let zone_area_ft2 = zone_area_m2.iter().map(|a| a * FT2_PER_M2).collect();

        let reward_model = RewardModel::new(
            config.reward.weights,
            config.reward.comfort,
            config.reward.air_quality,
            config.plant.ratings(),
        )?;

        let action_names = config.devices.action_names();
        let slot = |ty: DeviceType, field: &str| -> Result<usize> {
            let mut found = None;
            let mut k = 0;
            for d in devices {
                for f in &d.action_fields {
                    if d.device_type == ty && f == field {
                        if found.is_some() {
                            return Err(SimError::Config(format!("two {ty:?} devices expose {field}")));
                        }
                        found = Some(k);
                    }
                    k += 1;
                }
            }
            found.ok_or_else(|| SimError::Config(format!("no {ty:?} device exposes action {field}")))
        };
        let action_slots = [
            slot(DeviceType::Boiler, SUPPLY_WATER_ACTION)?,
            slot(DeviceType::Ahu, SUPPLY_AIR_ACTION)?,
        ];
        if action_names.len() != 2 {
            return Err(SimError::Config(format!(
                "unsupported action fields: {action_names:?}"
            )));
        }

        let mut measurements = Vec::new();
        for (di, d) in devices.iter().enumerate() {
            for f in &d.observable_fields {
                let m = measurement(d.device_type, f, vav_zone[di]).ok_or_else(|| {
                    SimError::Config(format!("device {} has unsupported observable field {f}", d.id))
                })?;
                measurements.push(m);
            }
        }
        let observation_names = config.devices.observation_names();

        Ok(Self {
            config,
            grids,
            fields,
            shuffle,
            zone_cells,
            zone_floor,
            zone_vav,
            zone_capacity,
            zone_area_ft2,
            reward_model,
            action_names,
            action_slots,
            observation_names,
            measurements,
        })
    }

    /// The same building with different material parameters.
    pub fn with_params(&self, params: MaterialParams) -> Result<Self> {
        let mut config = self.config.clone();
        config.params = params;
        Self::compile(config)
    }

    pub fn zone_count(&self) -> usize {
        self.zone_cells.len()
    }

    pub fn zone_ids(&self) -> Vec<String> {
        self.config.zones.zones.iter().map(|z| z.id.clone()).collect()
    }

    /// Mean temperature of each zone.
    pub fn zone_temps(&self, floors: &[Field]) -> Vec<f64> {
        self.zone_cells
            .iter()
            .zip(&self.zone_floor)
            .map(|(cells, &f)| {
                let t = floors[f].as_slice();
                cells.iter().map(|&i| t[i]).sum::<f64>() / cells.len() as f64
            })
            .collect()
    }

    /// Initial temperature fields: zone cells take their zone's value, every
    /// other non-exterior cell the value of its nearest zone cell (4-connected
    /// distance through non-exterior cells). Unreachable cells and exterior
    /// cells take `fallback`.
    pub fn initial_fields(&self, zone_temps: &[f64], fallback: f64) -> Result<Vec<Field>> {
        if zone_temps.len() != self.zone_count() {
            return Err(SimError::Shape(format!(
                "{} initial zone temperatures for {} zones",
                zone_temps.len(),
                self.zone_count()
            )));
        }
        let mut out = Vec::with_capacity(self.grids.len());
        for (f, grid) in self.grids.iter().enumerate() {
            let mut field = Field::new(grid.width(), grid.height(), fallback);
            let mut seen = vec![false; grid.len()];
            let mut queue = VecDeque::new();
            for (z, cells) in self.zone_cells.iter().enumerate() {
                if self.zone_floor[z] != f {
                    continue;
                }
                for &i in cells {
                    field.as_mut_slice()[i] = zone_temps[z];
                    seen[i] = true;
                    queue.push_back(i);
                }
            }
            while let Some(i) = queue.pop_front() {
                let (x, y) = grid.coords(i);
                for d in Direction::ALL {
                    if let Some((nx, ny)) = grid.neighbor(x, y, d) {
                        let j = grid.index(nx, ny);
                        if !seen[j] && !grid.get(nx, ny).is_exterior() {
                            seen[j] = true;
                            let v = field.as_slice()[i];
                            field.as_mut_slice()[j] = v;
                            queue.push_back(j);
                        }
                    }
                }
            }
            out.push(field);
        }
        Ok(out)
    }
}
