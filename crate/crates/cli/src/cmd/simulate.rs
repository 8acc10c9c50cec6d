use std::io::Write;
use std::path::Path;

use beaconmesh::dutycycle::{self, Event, LatencyStats, ScheduleConfig, Simulation};
use beaconmesh::mesh;
use serde::Serialize;

use super::cell;
use crate::args::SimulateArgs;
use crate::scenario::Scenario;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    pub saving_fraction: f64,
    pub closed_form_saving_fraction: f64,
    pub seed: u64,
    pub devices: usize,
    pub latency: LatencyStats,
    pub report_path: String,
    pub events_path: String,
}

pub fn evaluate(a: &SimulateArgs) -> Result<(Simulation, LatencyStats, ScheduleConfig), CliError> {
    let s = Scenario::load(&a.scenario)?;
    let seed = a.seed.unwrap_or(s.seed);
    let mut run = s.run_params(seed);
    if let Some(d) = a.duration {
        run.duration_s = d;
    }
    if let Some(step) = a.step {
        run.step_s = step;
    }
    let devices = s.devices(seed)?;
    let graph = mesh::knn_connect(&s.nodes, s.k, s.max_range_km)?;
    let sim = dutycycle::simulate(&graph, &devices, &s.schedule.config, &run)?;
    let latency = dutycycle::latency_stats(&sim.report, &devices);
    Ok((sim, latency, s.schedule.config))
}

fn events_csv(events: &[Event]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["time_s", "event_type", "tower_id", "device_id", "power_w"])?;
    for e in events {
        w.write_record([
            e.time_s.to_string(),
            e.kind.as_str().to_string(),
            e.tower_id.map(|v| v.to_string()).unwrap_or_default(),
            e.device_id.map(|v| v.to_string()).unwrap_or_default(),
            cell(e.power_w),
        ])?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.into_error()))
}

pub fn run(
    a: &SimulateArgs,
    json: bool,
    out_dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let dir = out_dir.ok_or_else(|| CliError::Usage("simulate requires --out <DIR>".into()))?;
    let (sim, latency, s) = evaluate(a)?;
    let closed_form = dutycycle::saving_fraction(&s);

    super::create_dir(dir)?;
    let mut report = serde_json::to_vec_pretty(&sim.report).map_err(std::io::Error::from)?;
    report.push(b'\n');
    let report_path = super::write_file(dir.join("report.json"), &report)?;
    let events_path = super::write_file(dir.join("events.csv"), &events_csv(&sim.events)?)?;

    let summary = SimulateSummary {
        saving_fraction: sim.report.saving_fraction,
        closed_form_saving_fraction: closed_form,
        seed: sim.report.seed,
        devices: latency.per_device.len() + latency.undiscovered.len(),
        latency,
        report_path: report_path.display().to_string(),
        events_path: events_path.display().to_string(),
    };
    if json {
        return super::print_json(out, &summary);
    }

    writeln!(out, "saving_fraction {:.6}", summary.saving_fraction)?;
    writeln!(
        out,
        "closed form     1 - (d + f*(T - d))/T = 1 - ({} + {}*({} - {}))/{} = {:.6}",
        s.beacon_duration_s,
        s.p_idle_fraction,
        s.period_s,
        s.beacon_duration_s,
        s.period_s,
        closed_form
    )?;
    let l = &summary.latency;
    let secs = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3} s"));
    writeln!(
        out,
        "latency         mean {}  max {}  discovered {}/{}",
        secs(l.mean_s),
        secs(l.max_s),
        l.per_device.len(),
        summary.devices
    )?;
    if !l.undiscovered.is_empty() {
        writeln!(out, "undiscovered    {:?}", l.undiscovered)?;
    }
    writeln!(out, "seed            {}", summary.seed)?;
    writeln!(
        out,
        "wrote {} and {}",
        summary.report_path, summary.events_path
    )?;
    Ok(())
}
