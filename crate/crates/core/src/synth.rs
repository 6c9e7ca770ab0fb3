//! Synthetic rectangular office buildings for tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::RasterImage;
use crate::config::{BuildingConfig, FloorConfig, CONFIG_VERSION};
use crate::grid::{CellClass, Device, DeviceLayout, DeviceType, MaterialParams, Zone, ZoneMap};
use crate::hvac::{AhuConfig, BoilerConfig, ChillerConfig, PlantConfig, VavConfig, AIR_HEAT_CAPACITY};
use crate::building::{SUPPLY_AIR_ACTION, SUPPLY_WATER_ACTION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub floors: usize,
    pub rooms_x: usize,
    pub rooms_y: usize,
    /// Room interior size in cells.
    pub room_width: usize,
    pub room_height: usize,
    pub cv_size: f64,
    pub floor_height: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            floors: 1,
            rooms_x: 3,
            rooms_y: 2,
            room_width: 8,
            room_height: 6,
            cv_size: 0.5,
            floor_height: 3.0,
        }
    }
}

impl SynthSpec {
    /// Lattice size including the 1-cell exterior margin and 2-cell
    /// exterior walls.
    pub fn dims(&self) -> (usize, usize) {
        let w = 6 + self.rooms_x * self.room_width + self.rooms_x.saturating_sub(1);
        let h = 6 + self.rooms_y * self.room_height + self.rooms_y.saturating_sub(1);
        (w, h)
    }
}

/// Grid of equal rooms, one zone and one VAV per room, one AHU, boiler,
/// chiller and weather meter.
pub fn synthetic_building(spec: &SynthSpec) -> BuildingConfig {
    let (w, h) = spec.dims();
    let mut floors = Vec::new();
    let mut zones = Vec::new();
    let mut devices = Vec::new();
    for f in 0..spec.floors {
        let mut cells = vec![vec![CellClass::ExteriorAir.code(); w]; h];
        for (y, row) in cells.iter_mut().enumerate().take(h - 1).skip(1) {
            for (x, c) in row.iter_mut().enumerate().take(w - 1).skip(1) {
                let shell = x < 3 || y < 3 || x >= w - 3 || y >= h - 3;
                *c = if shell {
                    CellClass::ExteriorWall.code()
                } else {
                    CellClass::InteriorWall.code()
                };
            }
        }
        for ry in 0..spec.rooms_y {
            for rx in 0..spec.rooms_x {
                let x0 = 3 + rx * (spec.room_width + 1);
                let y0 = 3 + ry * (spec.room_height + 1);
                let mut room = Vec::new();
                for y in y0..y0 + spec.room_height {
                    for x in x0..x0 + spec.room_width {
                        cells[y][x] = CellClass::InteriorAir.code();
                        room.push([x, y]);
                    }
                }
                let zone_id = format!("f{f}_r{ry}_{rx}");
                let vav_id = format!("vav_{zone_id}");
                devices.push(Device {
                    id: vav_id.clone(),
                    device_type: DeviceType::Vav,
                    floor: f,
                    diffusers: room.clone(),
                    observable_fields: vec![
                        "zone_air_temperature".into(),
                        "supply_air_flowrate".into(),
                    ],
                    action_fields: vec![],
                });
                zones.push(Zone {
                    id: zone_id,
                    floor: f,
                    cells: room,
                    devices: vec![vav_id],
                });
            }
        }
        floors.push(FloorConfig {
            cv_size: spec.cv_size,
            floor_height: spec.floor_height,
            cells,
        });
    }
    devices.extend(plant_devices());
    let room_volume = (spec.room_width * spec.room_height) as f64
        * spec.cv_size
        * spec.cv_size
        * spec.floor_height;
    let plant = sized_plant(room_volume, zones.len());
    BuildingConfig {
        version: CONFIG_VERSION,
        name: format!(
            "synthetic {}x{} rooms, {} floor(s)",
            spec.rooms_x, spec.rooms_y, spec.floors
        ),
        floors,
        zones: ZoneMap { zones },
        devices: DeviceLayout { devices },
        params: MaterialParams::reference_calibrated(),
        plant,
        setpoints: Default::default(),
        occupancy: Default::default(),
        occupant_density: 0.05,
        reward: Default::default(),
        tariff: Default::default(),
        weather: Default::default(),
    }
}

/// Central plant devices: AHU, boiler, chiller and weather meter.
pub fn plant_devices() -> Vec<Device> {
    let plant_device = |id: &str, ty, obs: &[&str], act: &[&str]| Device {
        id: id.into(),
        device_type: ty,
        floor: 0,
        diffusers: vec![],
        observable_fields: obs.iter().map(|s| s.to_string()).collect(),
        action_fields: act.iter().map(|s| s.to_string()).collect(),
    };
    vec![
        plant_device(
            "ahu",
            DeviceType::Ahu,
            &["supply_air_temperature", "mixed_air_temperature", "fan_power", "outside_air_flowrate"],
            &[SUPPLY_AIR_ACTION],
        ),
        plant_device(
            "boiler",
            DeviceType::Boiler,
            &["supply_water_temperature", "gas_power", "pump_power"],
            &[SUPPLY_WATER_ACTION],
        ),
        plant_device("chiller", DeviceType::Chiller, &["electrical_power"], &[]),
        plant_device("meter", DeviceType::Meter, &["outside_air_temperature"], &[]),
    ]
}

/// Plant ratings for `zones` zones of up to `room_volume` m³ each.
pub fn sized_plant(room_volume: f64, zones: usize) -> PlantConfig {
    let n_zones = zones.max(1) as f64;
    // about 4 air changes per hour at full flow
    let max_airflow = (room_volume * 1.2 * 4.0 / 3600.0).max(0.02);
    let vav = VavConfig {
        min_airflow: 0.2 * max_airflow,
        max_airflow,
        reheat_capacity: max_airflow * AIR_HEAT_CAPACITY * 20.0,
        ..VavConfig::default()
    };
    let rated_airflow = n_zones * max_airflow;
    PlantConfig {
        vav,
        ahu: AhuConfig {
            rated_airflow,
            rated_fan_power: 1500.0 * rated_airflow,
            recirculation: 0.7,
        },
        boiler: BoilerConfig {
            max_gas_power: rated_airflow * AIR_HEAT_CAPACITY * 40.0 / 0.85,
            pump_power: 200.0 + 20.0 * n_zones,
            ..BoilerConfig::default()
        },
        chiller: ChillerConfig {
            cop: 3.5,
            max_power: rated_airflow * AIR_HEAT_CAPACITY * 25.0 / 3.5,
        },
        ..PlantConfig::default()
    }
}

/// 200×200 px plan of 3×2 rooms at 0.05 m/px: 25 px exterior walls,
/// 20 px interior walls and salt noise of density `noise` on the
/// background.
pub fn synthetic_plan(seed: u64, noise: f64) -> RasterImage {
    const N: usize = 200;
    let mut px = vec![1.0f32; N * N];
    let mut fill = |x0: usize, y0: usize, x1: usize, y1: usize| {
        for y in y0..y1 {
            for x in x0..x1 {
                px[y * N + x] = 0.0;
            }
        }
    };
    // shell
    fill(5, 5, 195, 30);
    fill(5, 170, 195, 195);
    fill(5, 5, 30, 195);
    fill(170, 5, 195, 195);
    // interior walls
    fill(73, 30, 93, 170);
    fill(117, 30, 137, 170);
    fill(30, 93, 170, 113);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in px.iter_mut() {
        if *p > 0.5 && rng.gen::<f64>() < noise {
            *p = 0.0;
        }
    }
    RasterImage::new(N, N, px).expect("fixed size")
}
