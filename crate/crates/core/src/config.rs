//! Building configuration document.
//!
//! A building is a single JSON file holding per-floor cell matrices (codes
//! 0 exterior air, 1 interior air, 2 interior wall, 3 exterior wall),
//! zones, devices, material parameters, plant ratings, schedules, reward
//! settings, tariff and weather. `version` is mandatory.

use std::path::Path;

use chrono::{DateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::grid::{DeviceLayout, FloorplanGrid, MaterialParams, ZoneMap};
use crate::hvac::{PlantConfig, ZoneSetpoints};
use crate::occupancy::OccupancyModel;
use crate::reward::{AirQualityParams, ComfortParams, RewardWeights};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorConfig {
    /// CV edge length Δx, m.
    pub cv_size: f64,
    /// Floor-to-ceiling height z, m.
    pub floor_height: f64,
    /// Row-major cell codes.
    pub cells: Vec<Vec<u8>>,
}

impl FloorConfig {
    pub fn to_grid(&self) -> Result<FloorplanGrid> {
        FloorplanGrid::from_codes(&self.cells, self.cv_size, self.floor_height)
    }

    pub fn from_grid(grid: &FloorplanGrid) -> Self {
        Self {
            cv_size: grid.cv_size(),
            floor_height: grid.floor_height(),
            cells: grid.to_codes(),
        }
    }
}

/// Zone thermostat bands by time of day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetpointSchedule {
    pub occupied: ZoneSetpoints,
    pub unoccupied: ZoneSetpoints,
    /// Hours of a workday using the occupied band, `[start, end)`.
    pub occupied_hours: [f64; 2],
}

impl Default for SetpointSchedule {
    fn default() -> Self {
        Self {
            occupied: ZoneSetpoints {
                heating: 21.0,
                cooling: 24.0,
            },
            unoccupied: ZoneSetpoints {
                heating: 15.0,
                cooling: 28.0,
            },
            occupied_hours: [6.0, 19.0],
        }
    }
}

impl SetpointSchedule {
    pub fn validate(&self) -> Result<()> {
        self.occupied.validate()?;
        self.unoccupied.validate()
    }

    pub fn at(&self, t: DateTime<Utc>, workday: bool) -> ZoneSetpoints {
        let h = t.num_seconds_from_midnight() as f64 / 3600.0;
        let [h0, h1] = self.occupied_hours;
        if workday && h >= h0 && h < h1 {
            self.occupied
        } else {
            self.unoccupied
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tariff {
    /// $/kWh
    pub electricity_price: f64,
    /// $/kWh of gas
    pub gas_price: f64,
    /// kg/kWh
    pub electricity_emission: f64,
    /// kg/kWh
    pub gas_emission: f64,
}

impl Default for Tariff {
    fn default() -> Self {
        Self {
            electricity_price: 0.12,
            gas_price: 0.04,
            electricity_emission: 0.4,
            gas_emission: 0.18,
        }
    }
}

impl Tariff {
    pub fn validate(&self) -> Result<()> {
        let v = [
            self.electricity_price,
            self.gas_price,
            self.electricity_emission,
            self.gas_emission,
        ];
        if v.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(SimError::Config(format!("tariff values must be >= 0: {v:?}")));
        }
        Ok(())
    }
}

/// Constant tariff, optionally overridden by a time series (held from each
/// timestamp until the next).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TariffSchedule {
    pub base: Tariff,
    pub series: Vec<(DateTime<Utc>, Tariff)>,
}

impl TariffSchedule {
    pub fn constant(base: Tariff) -> Self {
        Self {
            base,
            series: Vec::new(),
        }
    }

    pub fn at(&self, t: DateTime<Utc>) -> Tariff {
        let k = self.series.partition_point(|(ts, _)| *ts <= t);
        if k == 0 {
            self.series.first().map_or(self.base, |p| p.1)
        } else {
            self.series[k - 1].1
        }
    }

    /// Reads `timestamp,p_e,p_g,r_e,r_g` rows (header required).
    pub fn load_csv(base: Tariff, path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => SimError::file(path, io),
            other => SimError::Format(format!("{}: {other:?}", path.display())),
        })?;
        let mut series = Vec::new();
        for (n, record) in reader.records().enumerate() {
            let record = record?;
            let field = |k: usize| -> Result<&str> {
                record.get(k).ok_or_else(|| {
                    SimError::Format(format!("{}: row {} has too few columns", path.display(), n + 2))
                })
            };
            let num = |k: usize| -> Result<f64> {
                field(k)?.trim().parse().map_err(|e| {
                    SimError::Format(format!("{}: row {}: {e}", path.display(), n + 2))
                })
            };
            let ts = DateTime::parse_from_rfc3339(field(0)?.trim())
                .map_err(|e| SimError::Format(format!("{}: row {}: {e}", path.display(), n + 2)))?
                .with_timezone(&Utc);
            let tariff = Tariff {
                electricity_price: num(1)?,
                gas_price: num(2)?,
                electricity_emission: num(3)?,
                gas_emission: num(4)?,
            };
            tariff.validate()?;
            series.push((ts, tariff));
        }
        series.sort_by_key(|p| p.0);
        Ok(Self { base, series })
    }
}

/// Outside air temperature source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weather {
    /// Daily sinusoid peaking at `peak_hour`.
    Sinusoid {
        mean: f64,
        amplitude: f64,
        peak_hour: f64,
    },
    /// Held values from each timestamp on.
    Series { points: Vec<(DateTime<Utc>, f64)> },
}

impl Default for Weather {
    fn default() -> Self {
        Weather::Sinusoid {
            mean: 10.0,
            amplitude: 6.0,
            peak_hour: 15.0,
        }
    }
}

impl Weather {
    pub fn outside_temp(&self, t: DateTime<Utc>) -> f64 {
        match self {
            Weather::Sinusoid {
                mean,
                amplitude,
                peak_hour,
            } => {
                let h = t.num_seconds_from_midnight() as f64 / 3600.0;
                mean + amplitude * (std::f64::consts::TAU * (h - peak_hour) / 24.0).cos()
            }
            Weather::Series { points } => {
                let k = points.partition_point(|(ts, _)| *ts <= t);
                match (k, points.first()) {
                    (_, None) => f64::NAN,
                    (0, Some(p)) => p.1,
                    _ => points[k - 1].1,
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Weather::Sinusoid {
                mean, amplitude, ..
            } if mean.is_finite() && amplitude.is_finite() => Ok(()),
            Weather::Series { points } if !points.is_empty() => Ok(()),
            _ => Err(SimError::Config("weather must be finite and nonempty".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RewardConfig {
    pub weights: RewardWeights,
    pub comfort: ComfortParams,
    pub air_quality: AirQualityParams,
}

fn default_density() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingConfig {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    pub floors: Vec<FloorConfig>,
    pub zones: ZoneMap,
    pub devices: DeviceLayout,
    pub params: MaterialParams,
    pub plant: PlantConfig,
    #[serde(default)]
    pub setpoints: SetpointSchedule,
    #[serde(default)]
    pub occupancy: OccupancyModel,
    /// Occupants per m² of zone floor area.
    #[serde(default = "default_density")]
    pub occupant_density: f64,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub tariff: Tariff,
    #[serde(default)]
    pub weather: Weather,
}

impl BuildingConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == CONFIG_VERSION as u64 => {}
            Some(v) => {
                return Err(SimError::Config(format!(
                    "unsupported building config version {v}, expected {CONFIG_VERSION}"
                )))
            }
            None => return Err(SimError::Config("building config has no version field".into())),
        }
        let config: Self = serde_json::from_value(value)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::file(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            SimError::Config(m) => SimError::Config(format!("{}: {m}", path.display())),
            SimError::Json(j) => SimError::Config(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| SimError::file(path, e))
    }

    pub fn grids(&self) -> Result<Vec<FloorplanGrid>> {
        self.floors.iter().map(FloorConfig::to_grid).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(SimError::Config(format!("unsupported version {}", self.version)));
        }
        if self.floors.is_empty() {
            return Err(SimError::Config("building has no floors".into()));
        }
        let grids = self.grids()?;
        self.zones.validate(&grids)?;
        self.devices.validate(&grids)?;
        self.params.validate()?;
        self.plant.validate()?;
        self.setpoints.validate()?;
        self.occupancy.validate()?;
        self.tariff.validate()?;
        self.weather.validate()?;
        self.reward.comfort.validate()?;
        self.reward.weights.normalized()?;
        if !(self.occupant_density >= 0.0) {
            return Err(SimError::Config("occupant density must be >= 0".into()));
        }
        Ok(())
    }
}
