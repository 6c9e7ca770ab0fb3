//! Episode archives.
//!
//! An archive is a directory holding `metadata.json` and four CSV matrices
//! (`observations.csv`, `actions.csv`, `reward_info.csv`,
//! `reward_response.csv`). Each CSV has a header row of column names; the
//! first column is the RFC-3339 UTC timestamp of the step. Row `t` holds the
//! action taken at step `t` and everything observed after it. Floats are
//! written in shortest round-trip form so reloading is bit-exact.

use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::config::FloorConfig;
use crate::env::EnvConfig;
use crate::error::{Result, SimError};
use crate::grid::{DeviceLayout, ZoneMap};
use crate::hvac::DevicePower;
use crate::reward::{RewardInfo, RewardModel, RewardResponse, ZoneRewardInfo};

pub const EPISODE_VERSION: u32 = 1;
pub const TIMESTAMP_COLUMN: &str = "timestamp";
pub const OUTSIDE_TEMP_COLUMN: &str = "weather/outside_air_temperature";

const MATRICES: [&str; 4] = [
    "observations.csv",
    "actions.csv",
    "reward_info.csv",
    "reward_response.csv",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetadata {
    pub version: u32,
    #[serde(default)]
    pub building: String,
    pub seed: u64,
    pub env: EnvConfig,
    pub zones: ZoneMap,
    pub devices: DeviceLayout,
    pub floorplans: Vec<FloorConfig>,
    /// Zone temperatures the thermal state was initialized from.
    pub initial_zone_temps: Vec<f64>,
    pub initial_observation: Vec<f64>,
    pub reward: RewardModel,
}

/// Named time-indexed matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matrix {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Matrix {
    pub fn new(names: Vec<String>) -> Self {
        Self {
            names,
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn validate(&self, what: &str) -> Result<()> {
        for (t, row) in self.rows.iter().enumerate() {
            if row.len() != self.names.len() {
                return Err(SimError::Format(format!(
                    "{what}: row {t} has {} values for {} names",
                    row.len(),
                    self.names.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub metadata: EpisodeMetadata,
    pub timestamps: Vec<DateTime<Utc>>,
    pub observations: Matrix,
    pub actions: Matrix,
    pub reward_info: Matrix,
    pub reward_response: Matrix,
}

pub fn reward_info_names(zone_ids: &[String]) -> Vec<String> {
    let mut names = Vec::new();
    for id in zone_ids {
        for f in ["temp", "heating_setpoint", "cooling_setpoint", "airflow", "occupancy", "area"] {
            names.push(format!("zone/{id}/{f}"));
        }
    }
    for f in [
        "power/fan",
        "power/chiller",
        "power/pump",
        "power/gas",
        "outside_airflow",
        "tariff/electricity_price",
        "tariff/gas_price",
        "tariff/electricity_emission",
        "tariff/gas_emission",
        OUTSIDE_TEMP_COLUMN,
    ] {
        names.push(f.to_string());
    }
    names
}

pub fn reward_response_names() -> Vec<String> {
    ["reward", "comfort", "energy", "carbon", "air_quality"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

pub fn encode_reward_info(info: &RewardInfo, outside_temp: f64) -> Vec<f64> {
    let mut row = Vec::with_capacity(info.zones.len() * 6 + 10);
    for z in &info.zones {
        row.extend([
            z.temp,
            z.heating_setpoint,
            z.cooling_setpoint,
            z.airflow,
            z.occupancy,
            z.area,
        ]);
    }
    row.extend([
        info.power.fan_power,
        info.power.chiller_power,
        info.power.pump_power,
        info.power.gas_power,
        info.outside_airflow,
        info.electricity_price,
        info.gas_price,
        info.electricity_emission,
        info.gas_emission,
        outside_temp,
    ]);
    row
}

/// Inverse of [`encode_reward_info`]: `(info, outside temperature)`.
pub fn decode_reward_info(row: &[f64], zones: usize) -> Result<(RewardInfo, f64)> {
    if row.len() != zones * 6 + 10 {
        return Err(SimError::Format(format!(
            "reward info row has {} values, expected {}",
            row.len(),
            zones * 6 + 10
        )));
    }
    let zone_info = row[..zones * 6]
        .chunks(6)
        .map(|c| ZoneRewardInfo {
            temp: c[0],
            heating_setpoint: c[1],
            cooling_setpoint: c[2],
            airflow: c[3],
            occupancy: c[4],
            area: c[5],
        })
        .collect();
    let r = &row[zones * 6..];
    Ok((
        RewardInfo {
            zones: zone_info,
            power: DevicePower {
                fan_power: r[0],
                chiller_power: r[1],
                pump_power: r[2],
                gas_power: r[3],
            },
            outside_airflow: r[4],
            electricity_price: r[5],
            gas_price: r[6],
            electricity_emission: r[7],
            gas_emission: r[8],
        },
        r[9],
    ))
}

pub fn encode_reward_response(r: &RewardResponse) -> Vec<f64> {
    vec![r.reward, r.comfort, r.energy, r.carbon, r.air_quality]
}

fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn write_matrix(path: &Path, timestamps: &[DateTime<Utc>], m: &Matrix) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| SimError::file(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let mut header = vec![TIMESTAMP_COLUMN.to_string()];
    header.extend(m.names.iter().cloned());
    w.write_record(&header)?;
    for (t, row) in timestamps.iter().zip(&m.rows) {
        let mut record = Vec::with_capacity(row.len() + 1);
        record.push(format_timestamp(t));
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| SimError::file(path, e))?;
    Ok(())
}

fn read_matrix(path: &Path) -> Result<(Vec<DateTime<Utc>>, Matrix)> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::file(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| SimError::Format(format!("{}: {e}", path.display())))?
        .clone();
    if header.get(0) != Some(TIMESTAMP_COLUMN) {
        return Err(SimError::Format(format!(
            "{}: first column must be {TIMESTAMP_COLUMN}",
            path.display()
        )));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut timestamps = Vec::new();
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let line = n + 2;
        let record = record.map_err(|e| SimError::Format(format!("{}: {e}", path.display())))?;
        if record.len() != names.len() + 1 {
            return Err(SimError::Format(format!(
                "{}:{line}: {} fields, expected {}",
                path.display(),
                record.len(),
                names.len() + 1
            )));
        }
        let ts = DateTime::parse_from_rfc3339(&record[0])
            .map_err(|e| SimError::Format(format!("{}:{line}: timestamp: {e}", path.display())))?
            .with_timezone(&Utc);
        let row = record
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| SimError::Format(format!("{}:{line}: {e}", path.display())))?;
        timestamps.push(ts);
        rows.push(row);
    }
    if !text.is_empty() && !text.ends_with('\n') {
        return Err(SimError::Format(format!(
            "{}: truncated (no terminating newline)",
            path.display()
        )));
    }
    Ok((timestamps, Matrix { names, rows }))
}

impl Episode {
    pub fn new(metadata: EpisodeMetadata, observation_names: Vec<String>, action_names: Vec<String>) -> Self {
        let zone_ids: Vec<String> = metadata.zones.zones.iter().map(|z| z.id.clone()).collect();
        Self {
            timestamps: Vec::new(),
            observations: Matrix::new(observation_names),
            actions: Matrix::new(action_names),
            reward_info: Matrix::new(reward_info_names(&zone_ids)),
            reward_response: Matrix::new(reward_response_names()),
            metadata,
        }
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn zone_count(&self) -> usize {
        self.metadata.zones.zones.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.metadata.version != EPISODE_VERSION {
            return Err(SimError::Format(format!(
                "episode version {} unsupported (expected {EPISODE_VERSION})",
                self.metadata.version
            )));
        }
        let t = self.timestamps.len();
        for (name, m) in [
            ("observations", &self.observations),
            ("actions", &self.actions),
            ("reward_info", &self.reward_info),
            ("reward_response", &self.reward_response),
        ] {
            if m.rows.len() != t {
                return Err(SimError::Format(format!(
                    "{name} has {} rows but the episode has {t} steps",
                    m.rows.len()
                )));
            }
            m.validate(name)?;
        }
        if self.metadata.initial_observation.len() != self.observations.names.len() {
            return Err(SimError::Format(
                "initial observation width differs from observation names".into(),
            ));
        }
        if self.metadata.initial_zone_temps.len() != self.zone_count() {
            return Err(SimError::Format(
                "initial zone temperatures do not match zone count".into(),
            ));
        }
        let zone_ids: Vec<String> = self.metadata.zones.zones.iter().map(|z| z.id.clone()).collect();
        if self.reward_info.names != reward_info_names(&zone_ids) {
            return Err(SimError::Format("reward_info columns do not match zones".into()));
        }
        if self.reward_response.names != reward_response_names() {
            return Err(SimError::Format("reward_response columns are not recognized".into()));
        }
        Ok(())
    }

    /// Decoded reward inputs of step `t` with its outside temperature.
    pub fn reward_info_at(&self, t: usize) -> Result<(RewardInfo, f64)> {
        decode_reward_info(&self.reward_info.rows[t], self.zone_count())
    }

    /// Measured zone temperatures `[T][Z]` from the reward info matrix.
    pub fn zone_temps(&self) -> Vec<Vec<f64>> {
        let z = self.zone_count();
        self.reward_info
            .rows
            .iter()
            .map(|row| (0..z).map(|k| row[k * 6]).collect())
            .collect()
    }

    pub fn outside_temps(&self) -> Vec<f64> {
        let k = self.zone_count() * 6 + 9;
        self.reward_info.rows.iter().map(|row| row[k]).collect()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        self.validate()?;
        std::fs::create_dir_all(dir).map_err(|e| SimError::file(dir, e))?;
        let meta = serde_json::to_string_pretty(&self.metadata)?;
        let meta_path = dir.join("metadata.json");
        std::fs::write(&meta_path, meta + "\n").map_err(|e| SimError::file(&meta_path, e))?;
        for (file, m) in MATRICES.iter().zip([
            &self.observations,
            &self.actions,
            &self.reward_info,
            &self.reward_response,
        ]) {
            write_matrix(&dir.join(file), &self.timestamps, m)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("metadata.json");
        let text = std::fs::read_to_string(&meta_path).map_err(|e| SimError::file(&meta_path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| SimError::Format(format!("{}: {e}", meta_path.display())))?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == EPISODE_VERSION as u64 => {}
            other => {
                return Err(SimError::Format(format!(
                    "{}: episode version {other:?} unsupported (expected {EPISODE_VERSION})",
                    meta_path.display()
                )))
            }
        }
        let metadata: EpisodeMetadata = serde_json::from_value(value)
            .map_err(|e| SimError::Format(format!("{}: {e}", meta_path.display())))?;
        let mut parts = Vec::new();
        for file in MATRICES {
            parts.push(read_matrix(&dir.join(file))?);
        }
        let timestamps = parts[0].0.clone();
        for (file, (ts, _)) in MATRICES.iter().zip(&parts) {
            if *ts != timestamps {
                return Err(SimError::Format(format!(
                    "{file}: timestamps differ from observations.csv ({} vs {} rows)",
                    ts.len(),
                    timestamps.len()
                )));
            }
        }
        let mut it = parts.into_iter().map(|p| p.1);
        let episode = Episode {
            metadata,
            timestamps,
            observations: it.next().expect("four matrices"),
            actions: it.next().expect("four matrices"),
            reward_info: it.next().expect("four matrices"),
            reward_response: it.next().expect("four matrices"),
        };
        episode.validate()?;
        Ok(episode)
    }

    /// Splits at step `at`: the first part keeps the original initial
    /// state; the second starts from the zone temperatures and observation
    /// recorded at step `at - 1`.
    pub fn split(&self, at: usize) -> Result<(Episode, Episode)> {
        if at == 0 || at >= self.len() {
            return Err(SimError::Config(format!(
                "split point {at} must be inside 1..{}",
                self.len()
            )));
        }
        let take = |m: &Matrix, r: std::ops::Range<usize>| Matrix {
            names: m.names.clone(),
            rows: m.rows[r].to_vec(),
        };
        let part = |r: std::ops::Range<usize>, meta: EpisodeMetadata| Episode {
            timestamps: self.timestamps[r.clone()].to_vec(),
            observations: take(&self.observations, r.clone()),
            actions: take(&self.actions, r.clone()),
            reward_info: take(&self.reward_info, r.clone()),
            reward_response: take(&self.reward_response, r),
            metadata: meta,
        };
        let first = part(0..at, self.metadata.clone());
        let mut meta = self.metadata.clone();
        meta.initial_zone_temps = self.zone_temps()[at - 1].clone();
        meta.initial_observation = self.observations.rows[at - 1].clone();
        meta.env.start = self.timestamps[at - 1];
        meta.env.horizon = self.len() - at;
        let second = part(at..self.len(), meta);
        let mut first = first;
        first.metadata.env.horizon = at;
        Ok((first, second))
    }
}
