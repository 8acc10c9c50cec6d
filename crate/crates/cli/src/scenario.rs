//! Scenario files: towers, mesh settings, devices and the beacon schedule in
//! one JSON document.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use beaconmesh::dutycycle::{self, DeviceScatter, DeviceSpec, RunParams, ScheduleConfig};
use beaconmesh::linkbudget::DEFAULT_FREQUENCY_HZ;
use beaconmesh::mesh::{self, TowerId, TowerNode};
use beaconmesh::sparams::{self, FrequencySweep};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_K: usize = 2;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MeshSection {
    #[serde(default)]
    pub k: Option<usize>,
    /// Omitted means unlimited.
    #[serde(default)]
    pub max_range_km: Option<f64>,
    #[serde(default)]
    pub frequency_hz: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleSection {
    #[serde(flatten)]
    pub config: ScheduleConfig,
    pub step_s: f64,
    pub duration_s: f64,
    pub tower_phase_offsets_s: BTreeMap<TowerId, f64>,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        let run = RunParams::default();
        ScheduleSection {
            config: ScheduleConfig::default(),
            step_s: run.step_s,
            duration_s: run.duration_s,
            tower_phase_offsets_s: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomDevicesSection {
    pub count: usize,
    pub radius_km: f64,
    pub max_arrival_s: f64,
    pub rx_sensitivity_w: f64,
    /// Defaults to one past the highest explicit device id.
    #[serde(default)]
    pub first_id: Option<u32>,
}

/// The document as written on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(default)]
    pub frequency_hz: Option<f64>,
    pub nodes: Vec<TowerNode>,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub devices: Vec<DeviceSpec>,
    #[serde(default)]
    pub random_devices: Option<RandomDevicesSection>,
    #[serde(default)]
    pub schedule: ScheduleSection,
    /// Touchstone files keyed by tower id, relative to the scenario file.
    #[serde(default)]
    pub sweeps: BTreeMap<TowerId, PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

/// A loaded scenario with sweeps applied and every reference resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub frequency_hz: f64,
    /// Towers with any sweep mismatch folded into antenna efficiency.
    pub nodes: Vec<TowerNode>,
    pub k: usize,
    pub max_range_km: f64,
    pub explicit_devices: Vec<DeviceSpec>,
    pub random_devices: Option<RandomDevicesSection>,
    pub schedule: ScheduleSection,
    pub mismatch: BTreeMap<TowerId, f64>,
    pub seed: u64,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ScenarioFile = serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::resolve(file, base)
    }

    pub fn resolve(file: ScenarioFile, base: &Path) -> Result<Self, CliError> {
        mesh::validate_nodes(&file.nodes)?;
        let frequency_hz = file
            .mesh
            .frequency_hz
            .or(file.frequency_hz)
            .unwrap_or(DEFAULT_FREQUENCY_HZ);
        beaconmesh::linkbudget::wavelength(frequency_hz)?;

        let k = file.mesh.k.unwrap_or(DEFAULT_K);
        let max_range_km = file.mesh.max_range_km.unwrap_or(f64::INFINITY);

        for id in file.schedule.tower_phase_offsets_s.keys() {
            if !file.nodes.iter().any(|n| n.id == *id) {
                return Err(CliError::Scenario(format!(
                    "schedule.tower_phase_offsets_s references unknown tower {id}"
                )));
            }
        }
        file.schedule.config.validate()?;
        for d in &file.devices {
            d.validate()?;
        }

        let mut nodes = file.nodes;
        let mut mismatch = BTreeMap::new();
        for (id, rel) in &file.sweeps {
            let node = nodes
                .iter_mut()
                .find(|n| n.id == *id)
                .ok_or_else(|| CliError::Scenario(format!("sweep given for unknown tower {id}")))?;
            let sweep = load_sweep(&base.join(rel))?;
            let eff = sparams::mismatch_efficiency(&sweep, frequency_hz)?;
            node.antenna.radiation_efficiency *= eff;
            node.antenna.validate()?;
            mismatch.insert(*id, eff);
        }

        Ok(Scenario {
            frequency_hz,
            nodes,
            k,
            max_range_km,
            explicit_devices: file.devices,
            random_devices: file.random_devices,
            schedule: file.schedule,
            mismatch,
            seed: file.seed,
        })
    }

    /// Explicit devices followed by any seeded random ones.
    pub fn devices(&self, seed: u64) -> Result<Vec<DeviceSpec>, CliError> {
        let mut devices = self.explicit_devices.clone();
        if let Some(r) = &self.random_devices {
            let first_id = r
                .first_id
                .unwrap_or_else(|| devices.iter().map(|d| d.id + 1).max().unwrap_or(0));
            let scatter = DeviceScatter {
                count: r.count,
                radius_km: r.radius_km,
                max_arrival_s: r.max_arrival_s,
                rx_sensitivity_w: r.rx_sensitivity_w,
                first_id,
            };
            devices.extend(dutycycle::random_devices(&self.nodes, &scatter, seed)?);
        }
        Ok(devices)
    }

    pub fn run_params(&self, seed: u64) -> RunParams {
        RunParams {
            duration_s: self.schedule.duration_s,
            step_s: self.schedule.step_s,
            seed,
            frequency_hz: self.frequency_hz,
            tower_phase_offsets_s: self.schedule.tower_phase_offsets_s.clone(),
        }
    }
}

pub fn load_sweep(path: &Path) -> Result<FrequencySweep, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    sparams::parse_touchstone(&text).map_err(|source| CliError::Touchstone {
        path: path.to_path_buf(),
        source,
    })
}
