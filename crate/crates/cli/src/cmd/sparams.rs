use std::io::Write;

use beaconmesh::sparams::{self, PointMetrics};
use serde::Serialize;

use super::cell;
use crate::args::SparamsArgs;
use crate::scenario::load_sweep;
use crate::CliError;

const COLUMNS: [&str; 6] = [
    "frequency_hz",
    "s11_mag",
    "return_loss_db",
    "vswr",
    "accepted_fraction",
    "transmitted_to_reflected",
];

#[derive(Debug, Serialize)]
pub struct Band {
    pub low_hz: f64,
    pub high_hz: f64,
}

#[derive(Debug, Serialize)]
pub struct SparamsReport {
    pub reference_impedance_ohm: f64,
    pub threshold_db: f64,
    pub points: Vec<PointMetrics>,
    pub resonant_frequency_hz: f64,
    pub bands: Vec<Band>,
}

pub fn evaluate(a: &SparamsArgs) -> Result<SparamsReport, CliError> {
    let sweep = load_sweep(&a.file)?;
    let bands = sparams::bandwidth(&sweep, a.threshold_db)?
        .into_iter()
        .map(|(low_hz, high_hz)| Band { low_hz, high_hz })
        .collect();
    Ok(SparamsReport {
        reference_impedance_ohm: sweep.header().reference_impedance,
        threshold_db: a.threshold_db,
        points: sparams::point_metrics(&sweep),
        resonant_frequency_hz: sparams::resonant_frequency(&sweep),
        bands,
    })
}

fn table(points: &[PointMetrics]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS)?;
    for p in points {
        w.write_record([
            p.frequency_hz.to_string(),
            p.s11_mag.to_string(),
            cell(p.return_loss_db),
            cell(p.vswr),
            cell(p.accepted_fraction),
            cell(p.transmitted_to_reflected),
        ])?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.into_error()))
}

pub fn run(
    a: &SparamsArgs,
    json: bool,
    out_dir: Option<&std::path::Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let r = evaluate(a)?;
    if json {
        return super::print_json(out, &r);
    }
    let csv = table(&r.points)?;
    match out_dir {
        Some(dir) => {
            super::create_dir(dir)?;
            let path = super::write_file(dir.join("sparams.csv"), &csv)?;
            writeln!(out, "# wrote {}", path.display())?;
        }
        None => out.write_all(&csv)?,
    }
    writeln!(out, "# resonance {} Hz", r.resonant_frequency_hz)?;
    let bands: Vec<String> = r
        .bands
        .iter()
        .map(|b| format!("{}-{} Hz", b.low_hz, b.high_hz))
        .collect();
    writeln!(
        out,
        "# bands with return loss >= {} dB: {}",
        r.threshold_db,
        if bands.is_empty() {
            "none".to_string()
        } else {
            bands.join(", ")
        }
    )?;
    Ok(())
}
