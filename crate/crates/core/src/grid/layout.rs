use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{CellClass, FloorplanGrid};
use crate::error::{Result, SimError};

/// A thermal zone: a set of interior-air cells on one floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    pub floor: usize,
    /// `[x, y]` lattice coordinates.
    pub cells: Vec<[usize; 2]>,
    /// Devices serving this zone.
    pub devices: Vec<String>,
}

impl Zone {
    /// Floor area in m² for CVs of size `cv_size`.
    pub fn area(&self, cv_size: f64) -> f64 {
        self.cells.len() as f64 * cv_size * cv_size
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneMap {
    pub zones: Vec<Zone>,
}

impl ZoneMap {
    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.id == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.id == id)
    }

    /// Zone ids unique; cells interior air, in bounds and not shared.
    pub fn validate(&self, floors: &[FloorplanGrid]) -> Result<()> {
        let mut ids = BTreeSet::new();
        let mut claimed = BTreeSet::new();
        for zone in &self.zones {
            if !ids.insert(zone.id.as_str()) {
                return Err(SimError::Config(format!("duplicate zone id {}", zone.id)));
            }
            let grid = floors.get(zone.floor).ok_or_else(|| {
                SimError::Config(format!("zone {} on missing floor {}", zone.id, zone.floor))
            })?;
            if zone.cells.is_empty() {
                return Err(SimError::Config(format!("zone {} has no cells", zone.id)));
            }
            for &[x, y] in &zone.cells {
                if x >= grid.width() || y >= grid.height() {
                    return Err(SimError::Config(format!(
                        "zone {} cell ({x}, {y}) out of bounds",
                        zone.id
                    )));
                }
                if grid.get(x, y) != CellClass::InteriorAir {
                    return Err(SimError::Config(format!(
                        "zone {} cell ({x}, {y}) is not interior air",
                        zone.id
                    )));
                }
                if !claimed.insert((zone.floor, x, y)) {
                    return Err(SimError::Config(format!(
                        "cell ({x}, {y}) on floor {} belongs to two zones",
                        zone.floor
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceType {
    Vav,
    Ahu,
    Boiler,
    Chiller,
    Meter,
}

/// An HVAC device with its diffuser cells and exposed field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub id: String,
    #[serde(rename = "type")]
    pub device_type: DeviceType,
    pub floor: usize,
    /// Cells receiving this device's thermal energy (`[x, y]`).
    #[serde(default)]
    pub diffusers: Vec<[usize; 2]>,
    pub observable_fields: Vec<String>,
    pub action_fields: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeviceLayout {
    pub devices: Vec<Device>,
}

impl DeviceLayout {
    pub fn get(&self, id: &str) -> Option<&Device> {
        self.devices.iter().find(|d| d.id == id)
    }

    pub fn of_type(&self, t: DeviceType) -> impl Iterator<Item = &Device> {
        self.devices.iter().filter(move |d| d.device_type == t)
    }

    /// Building-wide action names, `device/field`.
    pub fn action_names(&self) -> Vec<String> {
        self.devices
            .iter()
            .flat_map(|d| d.action_fields.iter().map(move |f| format!("{}/{f}", d.id)))
            .collect()
    }

    pub fn observation_names(&self) -> Vec<String> {
        self.devices
            .iter()
            .flat_map(|d| d.observable_fields.iter().map(move |f| format!("{}/{f}", d.id)))
            .collect()
    }

    pub fn validate(&self, floors: &[FloorplanGrid]) -> Result<()> {
        let mut ids = BTreeSet::new();
        let mut actions = BTreeMap::new();
        for dev in &self.devices {
            if !ids.insert(dev.id.as_str()) {
                return Err(SimError::Config(format!("duplicate device id {}", dev.id)));
            }
            let grid = floors.get(dev.floor).ok_or_else(|| {
                SimError::Config(format!("device {} on missing floor {}", dev.id, dev.floor))
            })?;
            for &[x, y] in &dev.diffusers {
                if x >= grid.width() || y >= grid.height() || grid.get(x, y) != CellClass::InteriorAir
                {
                    return Err(SimError::Config(format!(
                        "device {} diffuser ({x}, {y}) is not an interior air cell",
                        dev.id
                    )));
                }
            }
            for field in &dev.action_fields {
                let name = format!("{}/{field}", dev.id);
                if actions.insert(name.clone(), ()).is_some() {
                    return Err(SimError::Config(format!("duplicate action field {name}")));
                }
            }
        }
        Ok(())
    }
}
