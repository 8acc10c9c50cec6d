//! Duty-cycled beaconing: towers transmit at full power for a short window
//! at the start of every period and idle at a fraction of that power for the
//! rest of it. Devices are only discovered during beacon windows.
//!
//! [`simulate`] advances a fixed time step and integrates energy with a left
//! Riemann sum, so for whole periods on a step grid that resolves the beacon
//! window the result matches [`cycle_energy`] exactly up to rounding.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::linkbudget::{self, AntennaSpec};
use crate::mesh::{self, GeoPoint, MeshGraph, TowerId, EARTH_RADIUS_KM};

/// Schedule boundaries closer than this fraction of a period are snapped.
const PHASE_TOL: f64 = 1e-9;

/// Smallest step accepted by [`simulate`]; sample times are kept on a
/// nanosecond grid.
pub const MIN_STEP_S: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub period_s: f64,
    pub beacon_duration_s: f64,
    #[serde(rename = "p_max_w")]
    pub p_max: f64,
    /// Idle power as a fraction of `p_max`, in [0, 1).
    pub p_idle_fraction: f64,
    pub phase_offset_s: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            period_s: 6.0,
            beacon_duration_s: 1.5,
            p_max: 1.0,
            p_idle_fraction: 0.1,
            phase_offset_s: 0.0,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.period_s.is_finite() && self.period_s > 0.0) {
            return Err(domain("period_s must be > 0"));
        }
        if !(self.beacon_duration_s > 0.0 && self.beacon_duration_s < self.period_s) {
            return Err(domain("beacon_duration_s must lie in (0, period_s)"));
        }
        if !(self.p_max.is_finite() && self.p_max > 0.0) {
            return Err(domain("p_max must be > 0"));
        }
        if !(0.0..1.0).contains(&self.p_idle_fraction) {
            return Err(domain("p_idle_fraction must lie in [0, 1)"));
        }
        if !self.phase_offset_s.is_finite() {
            return Err(domain("phase_offset_s must be finite"));
        }
        Ok(())
    }

    pub fn idle_power(&self) -> f64 {
        self.p_idle_fraction * self.p_max
    }

    pub fn with_phase_offset(mut self, offset_s: f64) -> Self {
        self.phase_offset_s = offset_s;
        self
    }

    /// True inside the closed-open window `[0, d)` of each period.
    pub fn is_beaconing(&self, t: f64) -> bool {
        let tol = PHASE_TOL * self.period_s;
        let mut phase = (t - self.phase_offset_s).rem_euclid(self.period_s);
        if self.period_s - phase < tol {
            phase = 0.0;
        }
        phase < self.beacon_duration_s - tol
    }
}

pub fn instantaneous_power(config: &ScheduleConfig, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(domain(format!("time {t} s must be >= 0")));
    }
    Ok(if config.is_beaconing(t) {
        config.p_max
    } else {
        config.idle_power()
    })
}

/// Energy drawn over one period, J.
pub fn cycle_energy(config: &ScheduleConfig) -> f64 {
    config.p_max * config.beacon_duration_s
        + config.idle_power() * (config.period_s - config.beacon_duration_s)
}

/// Fraction of always-on energy saved by the schedule.
pub fn saving_fraction(config: &ScheduleConfig) -> f64 {
    1.0 - cycle_energy(config) / (config.p_max * config.period_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub id: u32,
    #[serde(flatten)]
    pub position: GeoPoint,
    #[serde(default)]
    pub arrival_time_s: f64,
    pub rx_sensitivity_w: f64,
}

impl DeviceSpec {
    pub fn validate(&self) -> Result<()> {
        self.position
            .validate()
            .map_err(|e| domain(format!("device {}: {e}", self.id)))?;
        if !(self.arrival_time_s.is_finite() && self.arrival_time_s >= 0.0) {
            return Err(domain(format!(
                "device {}: arrival_time_s must be >= 0",
                self.id
            )));
        }
        if !(self.rx_sensitivity_w.is_finite() && self.rx_sensitivity_w > 0.0) {
            return Err(domain(format!(
                "device {}: rx_sensitivity_w must be > 0",
                self.id
            )));
        }
        Ok(())
    }
}

/// Devices hear with an isotropic, lossless antenna whose polarization
/// matches the beaconing tower.
fn device_antenna(tower: &AntennaSpec) -> AntennaSpec {
    AntennaSpec::isotropic().with_polarization(tower.polarization)
}

/// Beacon power received by a device from a tower transmitting at `p_tx`.
pub fn beacon_received_power(
    tower: &mesh::TowerNode,
    device: &DeviceSpec,
    p_tx: f64,
    frequency_hz: f64,
) -> Result<f64> {
    let distance_m = mesh::haversine_km(tower.position, device.position)? * 1e3;
    if distance_m == 0.0 {
        return Err(domain(format!(
            "device {} coincides with tower {}",
            device.id, tower.id
        )));
    }
    let rx = device_antenna(&tower.antenna);
    let geometry = mesh::pointed_geometry(&tower.antenna, &rx, frequency_hz, distance_m);
    Ok(linkbudget::received_power(p_tx, &geometry, &tower.antenna, &rx)?.received_power)
}

/// Run-level parameters that are not part of the beacon schedule itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunParams {
    pub duration_s: f64,
    pub step_s: f64,
    pub seed: u64,
    pub frequency_hz: f64,
    /// Per-tower phase offsets overriding the schedule's own.
    pub tower_phase_offsets_s: BTreeMap<TowerId, f64>,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            duration_s: 60.0,
            step_s: 0.1,
            seed: 0,
            frequency_hz: linkbudget::DEFAULT_FREQUENCY_HZ,
            tower_phase_offsets_s: BTreeMap::new(),
        }
    }
}

impl RunParams {
    /// Number of whole steps in the run.
    pub fn step_count(&self) -> Result<u64> {
        if !(self.step_s.is_finite() && self.step_s >= MIN_STEP_S) {
            return Err(domain(format!("step_s must be >= {MIN_STEP_S}")));
        }
        if !(self.duration_s.is_finite() && self.duration_s >= self.step_s) {
            return Err(domain("duration_s must be >= step_s"));
        }
        let n = self.duration_s / self.step_s;
        let rounded = n.round();
        if (n - rounded).abs() > 1e-9 * rounded {
            return Err(domain(format!(
                "duration {} s is not a multiple of step {} s",
                self.duration_s, self.step_s
            )));
        }
        Ok(rounded as u64)
    }

    fn time_at(&self, n: u64) -> f64 {
        (n as f64 * self.step_s * 1e9).round() / 1e9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    BeaconStart,
    BeaconEnd,
    DeviceArrival,
    Discovery,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::BeaconStart => "beacon_start",
            EventKind::BeaconEnd => "beacon_end",
            EventKind::DeviceArrival => "device_arrival",
            EventKind::Discovery => "discovery",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time_s: f64,
    pub kind: EventKind,
    pub tower_id: Option<TowerId>,
    pub device_id: Option<u32>,
    /// Tower output for beacon edges, received power for discoveries.
    pub power_w: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discovery {
    pub device_id: u32,
    pub tower_id: TowerId,
    pub time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub per_tower_energy_j: BTreeMap<TowerId, f64>,
    /// Counterfactual with every tower at `p_max` throughout.
    pub always_on_energy_j: f64,
    pub saving_fraction: f64,
    /// Sorted by `(time, device, tower)`.
    pub discoveries: Vec<Discovery>,
    pub duration_s: f64,
    pub step_s: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub report: EnergyReport,
    pub events: Vec<Event>,
}

/// Runs the beacon protocol over `mesh` for `run.duration_s`.
pub fn simulate(
    mesh: &MeshGraph,
    devices: &[DeviceSpec],
    schedule: &ScheduleConfig,
    run: &RunParams,
) -> Result<Simulation> {
    schedule.validate()?;
    let steps = run.step_count()?;
    mesh::validate_nodes(&mesh.nodes)?;
    if mesh.nodes.is_empty() {
        return Err(domain("mesh has no towers"));
    }
    let mut seen = HashSet::new();
    for d in devices {
        d.validate()?;
        if !seen.insert(d.id) {
            return Err(domain(format!("duplicate device id {}", d.id)));
        }
    }
    for id in run.tower_phase_offsets_s.keys() {
        if mesh.node(*id).is_none() {
            return Err(domain(format!("phase offset given for unknown tower {id}")));
        }
    }

    let mut towers: Vec<&mesh::TowerNode> = mesh.nodes.iter().collect();
    towers.sort_by_key(|t| t.id);
    let mut devices: Vec<&DeviceSpec> = devices.iter().collect();
    devices.sort_by_key(|d| d.id);

    let schedules: Vec<ScheduleConfig> = towers
        .iter()
        .map(|t| {
            let offset = run
                .tower_phase_offsets_s
                .get(&t.id)
                .copied()
                .unwrap_or(schedule.phase_offset_s);
            schedule.with_phase_offset(offset)
        })
        .collect();

    // Devices do not move, so beacon reception is fixed per pair.
    let mut heard = vec![vec![None; devices.len()]; towers.len()];
    for (ti, t) in towers.iter().enumerate() {
        for (di, d) in devices.iter().enumerate() {
            let p = beacon_received_power(t, d, schedule.p_max, run.frequency_hz)?;
            if p >= d.rx_sensitivity_w {
                heard[ti][di] = Some(p);
            }
        }
    }

    let mut energy = vec![0.0; towers.len()];
    let mut beaconing = vec![false; towers.len()];
    let mut discovered = BTreeSet::new();
    let mut events = Vec::new();
    let mut discoveries = Vec::new();

    for d in &devices {
        if d.arrival_time_s < run.duration_s {
            events.push(Event {
                time_s: d.arrival_time_s,
                kind: EventKind::DeviceArrival,
                tower_id: None,
                device_id: Some(d.id),
                power_w: None,
            });
        }
    }

    for n in 0..steps {
        let t = run.time_at(n);
        for (ti, tower) in towers.iter().enumerate() {
            let cfg = &schedules[ti];
            let on = cfg.is_beaconing(t);
            let power = if on { cfg.p_max } else { cfg.idle_power() };
            energy[ti] += power * run.step_s;

            if on != beaconing[ti] {
                events.push(Event {
                    time_s: t,
                    kind: if on {
                        EventKind::BeaconStart
                    } else {
                        EventKind::BeaconEnd
                    },
                    tower_id: Some(tower.id),
                    device_id: None,
                    power_w: Some(power),
                });
            }
            beaconing[ti] = on;
            if !on {
                continue;
            }
            for (di, d) in devices.iter().enumerate() {
                let Some(p) = heard[ti][di] else { continue };
                if d.arrival_time_s <= t && discovered.insert((tower.id, d.id)) {
                    discoveries.push(Discovery {
                        device_id: d.id,
                        tower_id: tower.id,
                        time_s: t,
                    });
                    events.push(Event {
                        time_s: t,
                        kind: EventKind::Discovery,
                        tower_id: Some(tower.id),
                        device_id: Some(d.id),
                        power_w: Some(p),
                    });
                }
            }
        }
    }

    discoveries.sort_by(|a, b| {
        a.time_s
            .total_cmp(&b.time_s)
            .then(a.device_id.cmp(&b.device_id))
            .then(a.tower_id.cmp(&b.tower_id))
    });
    events.sort_by(|a, b| {
        a.time_s
            .total_cmp(&b.time_s)
            .then(a.kind.cmp(&b.kind))
            .then(a.tower_id.cmp(&b.tower_id))
            .then(a.device_id.cmp(&b.device_id))
    });

    let duration = steps as f64 * run.step_s;
    let always_on_energy_j = schedule.p_max * duration * towers.len() as f64;
    let total: f64 = energy.iter().sum();
    let report = EnergyReport {
        per_tower_energy_j: towers.iter().map(|t| t.id).zip(energy).collect(),
        always_on_energy_j,
        saving_fraction: 1.0 - total / always_on_energy_j,
        discoveries,
        duration_s: run.duration_s,
        step_s: run.step_s,
        seed: run.seed,
    };
    Ok(Simulation { report, events })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_s: Option<f64>,
    pub max_s: Option<f64>,
    /// `(device id, first discovery − arrival)` for discovered devices.
    pub per_device: Vec<(u32, f64)>,
    pub undiscovered: Vec<u32>,
}

/// Discovery latency per device, measured to its earliest discovery by any
/// tower.
pub fn latency_stats(report: &EnergyReport, devices: &[DeviceSpec]) -> LatencyStats {
    let mut first: BTreeMap<u32, f64> = BTreeMap::new();
    for d in &report.discoveries {
        first
            .entry(d.device_id)
            .and_modify(|t| *t = t.min(d.time_s))
            .or_insert(d.time_s);
    }
    let mut ordered: Vec<&DeviceSpec> = devices.iter().collect();
    ordered.sort_by_key(|d| d.id);

    let mut per_device = Vec::new();
    let mut undiscovered = Vec::new();
    for d in ordered {
        match first.get(&d.id) {
            Some(&t) => per_device.push((d.id, t - d.arrival_time_s)),
            None => undiscovered.push(d.id),
        }
    }
    let (mean_s, max_s) = if per_device.is_empty() {
        (None, None)
    } else {
        let sum: f64 = per_device.iter().map(|p| p.1).sum();
        let max = per_device
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max);
        (Some(sum / per_device.len() as f64), Some(max))
    };
    LatencyStats {
        mean_s,
        max_s,
        per_device,
        undiscovered,
    }
}

/// How [`random_devices`] scatters devices around towers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceScatter {
    pub count: usize,
    /// Devices fall uniformly within this disc around a random tower.
    pub radius_km: f64,
    /// Arrivals are uniform in `[0, max_arrival_s)`.
    pub max_arrival_s: f64,
    pub rx_sensitivity_w: f64,
    #[serde(default)]
    pub first_id: u32,
}

fn destination(origin: GeoPoint, bearing: f64, distance_km: f64) -> GeoPoint {
    let delta = distance_km / EARTH_RADIUS_KM;
    let lat1 = origin.lat_deg.to_radians();
    let lon1 = origin.lon_deg.to_radians();
    let lat2 = (lat1.sin() * delta.cos() + lat1.cos() * delta.sin() * bearing.cos()).asin();
    let lon2 = lon1
        + (bearing.sin() * delta.sin() * lat1.cos()).atan2(delta.cos() - lat1.sin() * lat2.sin());
    let lon_deg = (lon2.to_degrees() + 180.0).rem_euclid(360.0) - 180.0;
    GeoPoint {
        lat_deg: lat2.to_degrees().clamp(-90.0, 90.0),
        lon_deg,
    }
}

/// Seeded device population. The same seed always yields the same devices.
pub fn random_devices(
    towers: &[mesh::TowerNode],
    scatter: &DeviceScatter,
    seed: u64,
) -> Result<Vec<DeviceSpec>> {
    if towers.is_empty() {
        return Err(domain("cannot scatter devices without towers"));
    }
    if !(scatter.radius_km > 0.0 && scatter.radius_km.is_finite()) {
        return Err(domain("radius_km must be > 0"));
    }
    if !(scatter.max_arrival_s >= 0.0 && scatter.max_arrival_s.is_finite()) {
        return Err(domain("max_arrival_s must be >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(scatter.count);
    for i in 0..scatter.count {
        let tower = &towers[rng.gen_range(0..towers.len())];
        let bearing = rng.gen::<f64>() * 2.0 * PI;
        // (0, 1] keeps the device off the tower itself
        let u = 1.0 - rng.gen::<f64>();
        let r = scatter.radius_km * u.sqrt();
        let arrival = rng.gen::<f64>() * scatter.max_arrival_s;
        let device = DeviceSpec {
            id: scatter.first_id + i as u32,
            position: destination(tower.position, bearing, r),
            arrival_time_s: arrival,
            rx_sensitivity_w: scatter.rx_sensitivity_w,
        };
        device.validate()?;
        out.push(device);
    }
    Ok(out)
}
