use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use beaconmesh::mesh::{self, MeshGraph, Tour, TowerId};
use serde::Serialize;

use super::cell;
use crate::args::MeshArgs;
use crate::scenario::Scenario;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct NodeRow {
    pub id: TowerId,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Serialize)]
pub struct EdgeRow {
    pub a: TowerId,
    pub b: TowerId,
    pub distance_km: f64,
    pub feasible: bool,
    pub received_power_w: f64,
}

#[derive(Debug, Serialize)]
pub struct MeshReport {
    pub frequency_hz: f64,
    pub k: usize,
    /// `None` when unlimited.
    pub max_range_km: Option<f64>,
    pub nodes: Vec<NodeRow>,
    pub edges: Vec<EdgeRow>,
    pub components: Vec<BTreeSet<TowerId>>,
    pub feasible_components: Vec<BTreeSet<TowerId>>,
    pub tour: Option<Tour>,
}

pub fn evaluate(a: &MeshArgs) -> Result<(MeshReport, MeshGraph), CliError> {
    let s = Scenario::load(&a.scenario)?;
    let k = a.k.unwrap_or(s.k);
    let max_range_km = a.max_range_km.unwrap_or(s.max_range_km);
    let frequency_hz = a.freq.unwrap_or(s.frequency_hz);

    let mut graph = mesh::knn_connect(&s.nodes, k, max_range_km)?;
    graph.assess_links(frequency_hz)?;
    let tour = if a.tsp {
        let start = match a.start {
            Some(id) => id,
            None => s.nodes.iter().map(|n| n.id).min().unwrap_or_default(),
        };
        Some(mesh::nn_tsp_tour(&s.nodes, start)?)
    } else {
        None
    };

    let nodes = graph
        .nodes
        .iter()
        .map(|n| NodeRow {
            id: n.id,
            name: n.name.clone(),
            lat: n.position.lat_deg,
            lon: n.position.lon_deg,
        })
        .collect();
    let edges = graph
        .edges
        .iter()
        .map(|e| {
            let link = e.link.expect("links assessed above");
            EdgeRow {
                a: e.a,
                b: e.b,
                distance_km: e.distance_km,
                feasible: link.feasible,
                received_power_w: link.received_power_w,
            }
        })
        .collect();
    let report = MeshReport {
        frequency_hz,
        k,
        max_range_km: max_range_km.is_finite().then_some(max_range_km),
        nodes,
        edges,
        components: mesh::connected_components(&graph),
        feasible_components: mesh::connected_components(&graph.feasible_subgraph()),
        tour,
    };
    Ok((report, graph))
}

fn plot_data(report: &MeshReport, graph: &MeshGraph, dir: &Path) -> Result<Vec<String>, CliError> {
    super::create_dir(dir)?;
    let mut nodes = csv::Writer::from_writer(Vec::new());
    for n in &report.nodes {
        nodes.serialize(n)?;
    }
    let mut edges = csv::Writer::from_writer(Vec::new());
    edges.write_record([
        "a",
        "b",
        "lat_a",
        "lon_a",
        "lat_b",
        "lon_b",
        "distance_km",
        "feasible",
        "received_power_w",
    ])?;
    for e in &report.edges {
        let pa = graph.node(e.a).expect("edge endpoints exist").position;
        let pb = graph.node(e.b).expect("edge endpoints exist").position;
        edges.write_record([
            e.a.to_string(),
            e.b.to_string(),
            pa.lat_deg.to_string(),
            pa.lon_deg.to_string(),
            pb.lat_deg.to_string(),
            pb.lon_deg.to_string(),
            e.distance_km.to_string(),
            e.feasible.to_string(),
            cell(Some(e.received_power_w)),
        ])?;
    }
    let into =
        |w: csv::Writer<Vec<u8>>| w.into_inner().map_err(|e| CliError::Output(e.into_error()));
    let a = super::write_file(dir.join("nodes.csv"), &into(nodes)?)?;
    let b = super::write_file(dir.join("edges.csv"), &into(edges)?)?;
    Ok(vec![a.display().to_string(), b.display().to_string()])
}

fn fmt_components(comps: &[BTreeSet<TowerId>]) -> String {
    comps
        .iter()
        .map(|c| {
            let ids: Vec<String> = c.iter().map(|id| id.to_string()).collect();
            format!("{{{}}}", ids.join(", "))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn run(
    a: &MeshArgs,
    json: bool,
    out_dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if a.plot_data && out_dir.is_none() {
        return Err(CliError::Usage("--plot-data requires --out <DIR>".into()));
    }
    let (r, graph) = evaluate(a)?;
    let written = match out_dir.filter(|_| a.plot_data) {
        Some(dir) => plot_data(&r, &graph, dir)?,
        None => Vec::new(),
    };
    if json {
        return super::print_json(out, &r);
    }

    let range = r
        .max_range_km
        .map_or("unlimited".to_string(), |v| format!("{v} km"));
    writeln!(out, "k = {}, max range {range}, {} Hz", r.k, r.frequency_hz)?;
    let name = |id: TowerId| graph.node(id).map_or("", |n| n.name.as_str());
    for e in &r.edges {
        writeln!(
            out,
            "edge {} {} -- {} {}  {:.3} km  {}  P_r {:.3e} W",
            e.a,
            name(e.a),
            e.b,
            name(e.b),
            e.distance_km,
            if e.feasible { "feasible" } else { "infeasible" },
            e.received_power_w
        )?;
    }
    writeln!(
        out,
        "components ({}): {}",
        r.components.len(),
        fmt_components(&r.components)
    )?;
    writeln!(
        out,
        "feasible components ({}): {}",
        r.feasible_components.len(),
        fmt_components(&r.feasible_components)
    )?;
    if let Some(t) = &r.tour {
        let mut stops: Vec<String> = t.order.iter().map(|id| id.to_string()).collect();
        stops.push(t.order[0].to_string());
        writeln!(out, "tour: {}  ({:.3} km)", stops.join(" -> "), t.total_km)?;
    }
    for p in written {
        writeln!(out, "wrote {p}")?;
    }
    Ok(())
}
