//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the PASS/FAIL table is always printed.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use beaconmesh::dutycycle::{self, DeviceScatter, RunParams, ScheduleConfig};
use beaconmesh::linkbudget::*;
use beaconmesh::mesh::{self, GeoPoint, TowerId, TowerNode};
use beaconmesh::sparams::{
    self, DataFormat, FrequencySweep, FrequencyUnit, SweepPoint, TouchstoneHeader,
};
use beaconmesh_cli::scenario::Scenario;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/goa.json")
}

fn under_a_second(start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok(t)
}

fn duty_cycle_band() -> Check {
    let start = Instant::now();
    let cfg = ScheduleConfig::default();
    let sf = dutycycle::saving_fraction(&cfg);
    ensure((sf - 0.675).abs() <= 1e-12, || format!("closed form {sf}"))?;

    let s = Scenario::load(&fixture()).map_err(|e| e.to_string())?;
    let graph = mesh::knn_connect(&s.nodes, s.k, s.max_range_km).map_err(|e| e.to_string())?;
    let run = RunParams {
        duration_s: 60.0,
        ..RunParams::default()
    };
    let sim = dutycycle::simulate(&graph, &[], &cfg, &run).map_err(|e| e.to_string())?;
    let expected = dutycycle::cycle_energy(&cfg) * 10.0;
    for (id, e) in &sim.report.per_tower_energy_j {
        ensure(((e - expected) / expected).abs() <= 1e-9, || {
            format!("tower {id}: {e} J vs {expected} J")
        })?;
    }
    let rel = ((sim.report.saving_fraction - sf) / sf).abs();
    ensure(rel <= 1e-9, || {
        format!("simulated {} vs {sf}", sim.report.saving_fraction)
    })?;
    ensure((0.60..=0.70).contains(&sf), || {
        format!("{sf} outside 60-70%")
    })?;
    let t = under_a_second(start)?;
    Ok(format!("saving {sf}, simulated rel err {rel:.1e}, {t:?}"))
}

fn friis_oracle() -> Check {
    let start = Instant::now();
    // Independent 40-digit evaluation of 20 log10(4πR/λ) and (λ/4πR)²·G².
    const PATH_LOSS_ORACLE: f64 = 132.871_569_203_282_1;
    const RECEIVED_ORACLE: f64 = 5.162_298_101_717_415e-12;
    let pl = path_loss_db(3.5e9, 30e3).map_err(|e| e.to_string())?;
    ensure((pl - 132.87).abs() <= 0.01, || format!("path loss {pl}"))?;
    ensure((pl - PATH_LOSS_ORACLE).abs() <= 1e-9, || {
        format!("path loss {pl} vs oracle")
    })?;
    let beam = AntennaSpec::gaussian_beam(10.0, 60.0);
    let g = LinkGeometry::boresight(3.5e9, 30e3);
    let pr = received_power(1.0, &g, &beam, &beam)
        .map_err(|e| e.to_string())?
        .received_power;
    ensure(((pr - 5.17e-12) / 5.17e-12).abs() <= 5e-3, || {
        format!("P_r {pr}")
    })?;
    ensure(
        ((pr - RECEIVED_ORACLE) / RECEIVED_ORACLE).abs() <= 1e-12,
        || format!("P_r {pr} vs oracle"),
    )?;
    let t = under_a_second(start)?;
    Ok(format!("path loss {pl:.4} dB, P_r {pr:.6e} W, {t:?}"))
}

fn random_antenna(rng: &mut ChaCha8Rng, matched: bool) -> AntennaSpec {
    let pattern = match rng.gen_range(0..3) {
        0 => Pattern::Isotropic,
        1 => Pattern::HalfWaveDipole,
        _ => Pattern::GaussianBeam {
            boresight_directivity: rng.gen_range(1.0..100.0),
            hpbw_deg: rng.gen_range(5.0..120.0),
        },
    };
    let mut ant = AntennaSpec::new(pattern)
        .with_radiation_efficiency(rng.gen_range(0.05..=1.0))
        .with_max_dimension(rng.gen_range(0.0..3.0));
    if !matched {
        let a: f64 = rng.gen_range(0.0..=1.0);
        let b = (1.0 - a * a).max(0.0).sqrt();
        let pol = Polarization::new(
            Complex64::from_polar(a, rng.gen_range(0.0..2.0 * PI)),
            Complex64::from_polar(b, rng.gen_range(0.0..2.0 * PI)),
        )
        .unwrap();
        ant = ant
            .with_polarization(pol)
            .with_feedline_efficiency(rng.gen_range(0.05..=1.0));
    }
    ant
}

fn composition_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let matched = case % 2 == 0;
        let tx = random_antenna(&mut rng, matched);
        let rx = random_antenna(&mut rng, matched);
        let g = LinkGeometry {
            frequency_hz: rng.gen_range(1e6..1e11),
            distance_m: rng.gen_range(1.0..1e6),
            tx_direction: Direction::new(rng.gen_range(0.0..=PI), rng.gen_range(0.0..2.0 * PI))
                .unwrap(),
            rx_direction: Direction::new(rng.gen_range(0.0..=PI), rng.gen_range(0.0..2.0 * PI))
                .unwrap(),
        };
        let p_t = rng.gen_range(1e-3..1e3);
        let pr = received_power(p_t, &g, &tx, &rx)
            .map_err(|e| e.to_string())?
            .received_power;
        let ratio = friis_ratio(&g, &tx, &rx, matched).map_err(|e| e.to_string())?;
        let scale = pr.abs().max((p_t * ratio).abs());
        // relative error is only representable above the subnormal range
        let err = (pr - p_t * ratio).abs() / scale.max(f64::MIN_POSITIVE);
        ensure(err <= 1e-12, || {
            format!("case {case} (matched={matched}): {pr} vs {}", p_t * ratio)
        })?;
        worst = worst.max(err);
    }
    Ok(format!("1000 cases, worst rel err {worst:.1e}"))
}

fn simpson(n: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn sphere_closure() -> Check {
    let mut worst = 0.0f64;
    for &(p_t, e, r) in &[(1.0, 1.0, 1.0), (20.0, 0.7, 1234.5), (3.0, 0.25, 3e4)] {
        let ant = AntennaSpec::isotropic().with_radiation_efficiency(e);
        let total = simpson(2000, 0.0, PI, |theta| {
            simpson(64, 0.0, 2.0 * PI, |phi| {
                power_density(p_t, gain(&ant, Direction { theta, phi }), r).unwrap() * r * r
            }) * theta.sin()
        });
        let rel = ((total - e * p_t) / (e * p_t)).abs();
        ensure(rel <= 1e-6, || format!("P_t={p_t} e={e}: {total}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("worst rel err {worst:.1e}"))
}

fn random_nodes(rng: &mut ChaCha8Rng, n: usize) -> Vec<TowerNode> {
    (0..n)
        .map(|i| {
            let p = GeoPoint::new(rng.gen_range(14.5..16.0), rng.gen_range(73.5..74.5)).unwrap();
            TowerNode::new(i as TowerId * 3 + 1, format!("t{i}"), p)
        })
        .collect()
}

fn knn_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let nodes = random_nodes(&mut rng, 200);
    let dist = |a: &TowerNode, b: &TowerNode| mesh::haversine_km(a.position, b.position).unwrap();
    for k in [1, 2, 3, 5] {
        let mut want = BTreeSet::new();
        for a in &nodes {
            let mut all: Vec<(f64, TowerId)> = nodes
                .iter()
                .filter(|b| b.id != a.id)
                .map(|b| (dist(a, b), b.id))
                .collect();
            all.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            for &(_, id) in all.iter().take(k) {
                want.insert((a.id.min(id), a.id.max(id)));
            }
        }
        let graph = mesh::knn_connect(&nodes, k, f64::INFINITY).map_err(|e| e.to_string())?;
        let got: BTreeSet<_> = graph.edges.iter().map(|e| (e.a, e.b)).collect();
        ensure(got == want, || format!("k={k}: edge sets differ"))?;
    }
    for q in 0..1000 {
        let p = GeoPoint::new(rng.gen_range(14.0..16.5), rng.gen_range(73.0..75.0)).unwrap();
        let mut best = (f64::INFINITY, 0);
        for n in &nodes {
            let d = mesh::haversine_km(p, n.position).unwrap();
            if d < best.0 || (d == best.0 && n.id < best.1) {
                best = (d, n.id);
            }
        }
        let got = mesh::nearest_neighbor(p, &nodes)
            .map_err(|e| e.to_string())?
            .id;
        ensure(got == best.1, || format!("query {q}: {got} vs {}", best.1))?;
    }
    Ok("k in {1,2,3,5} on 200 nodes, 1000 nearest-neighbour queries".into())
}

/// Great-circle distance via the vector cross/dot formulation, independent
/// of the library's haversine.
fn vector_distance_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let v = |p: GeoPoint| {
        let (la, lo) = (p.lat_deg.to_radians(), p.lon_deg.to_radians());
        [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
    };
    let (u, w) = (v(a), v(b));
    let cross = [
        u[1] * w[2] - u[2] * w[1],
        u[2] * w[0] - u[0] * w[2],
        u[0] * w[1] - u[1] * w[0],
    ];
    let sin = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
    let cos = u[0] * w[0] + u[1] * w[1] + u[2] * w[2];
    mesh::EARTH_RADIUS_KM * sin.atan2(cos)
}

fn three_city() -> Check {
    let start = Instant::now();
    let s = Scenario::load(&fixture()).map_err(|e| e.to_string())?;
    // 40-digit haversine on the fixture coordinates.
    let oracle: BTreeMap<(TowerId, TowerId), f64> = [
        ((0, 1), 13.488_171_984_133_33),
        ((1, 2), 21.641_891_240_472_02),
        ((0, 2), 28.666_629_259_574_76),
    ]
    .into();
    for (&(a, b), &want) in &oracle {
        let pa = s.nodes[a as usize].position;
        let pb = s.nodes[b as usize].position;
        let lib = mesh::haversine_km(pa, pb).map_err(|e| e.to_string())?;
        let alt = vector_distance_km(pa, pb);
        ensure(
            (lib - want).abs() <= 1e-9 && (alt - want).abs() <= 1e-9,
            || format!("{a}-{b}: library {lib}, vector {alt}, oracle {want}"),
        )?;
    }
    let wide = mesh::knn_connect(&s.nodes, 2, 25.0).map_err(|e| e.to_string())?;
    let comps = mesh::connected_components(&wide);
    ensure(comps.len() == 1, || {
        format!("25 km: {} components", comps.len())
    })?;
    ensure(!wide.has_edge(0, 2), || {
        "25 km: direct Margao-Panaji edge".into()
    })?;
    let narrow = mesh::knn_connect(&s.nodes, 2, 15.0).map_err(|e| e.to_string())?;
    let n = mesh::connected_components(&narrow).len();
    ensure(n == 2, || format!("15 km: {n} components"))?;
    let t = under_a_second(start)?;
    Ok(format!(
        "25 km: 1 component, {} edges; 15 km: 2 components; {t:?}",
        wide.edges.len()
    ))
}

fn tsp_bound() -> Check {
    fn best(d: &dyn Fn(usize, usize) -> f64, rest: &mut Vec<usize>, k: usize, acc: &mut f64) {
        if k == rest.len() {
            let mut len = d(0, rest[0]) + d(rest[rest.len() - 1], 0);
            for w in rest.windows(2) {
                len += d(w[0], w[1]);
            }
            *acc = acc.min(len);
            return;
        }
        for i in k..rest.len() {
            rest.swap(k, i);
            best(d, rest, k + 1, acc);
            rest.swap(k, i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for inst in 0..50 {
        let n = rng.gen_range(2..=8);
        let nodes = random_nodes(&mut rng, n);
        let start = nodes[rng.gen_range(0..n)].id;
        let tour = mesh::nn_tsp_tour(&nodes, start).map_err(|e| e.to_string())?;
        let visited: BTreeSet<_> = tour.order.iter().collect();
        ensure(tour.order.len() == n && visited.len() == n, || {
            format!("instance {inst}: bad visit order")
        })?;
        let d =
            |i: usize, j: usize| mesh::haversine_km(nodes[i].position, nodes[j].position).unwrap();
        let mut opt = f64::INFINITY;
        best(&d, &mut (1..n).collect(), 0, &mut opt);
        ensure(tour.total_km >= opt - 1e-9, || {
            format!("instance {inst}: {} < optimum {opt}", tour.total_km)
        })?;
    }
    Ok("50 instances, n <= 8".into())
}

fn sparams_metrics() -> Check {
    let v = sparams::vswr(1.0 / 3.0).map_err(|e| e.to_string())?;
    ensure(v == 2.0, || format!("vswr(1/3) = {v:?}"))?;
    let a = sparams::accepted_power_fraction(0.1).map_err(|e| e.to_string())?;
    ensure(a == 0.99, || format!("accepted(0.1) = {a:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let mut f = 1e6;
        let points = (0..rng.gen_range(1..40))
            .map(|_| {
                f += rng.gen_range(1e3..1e8);
                SweepPoint {
                    frequency_hz: f,
                    s11: Complex64::from_polar(rng.gen_range(1e-6..=1.0), rng.gen_range(-PI..PI)),
                }
            })
            .collect();
        let sweep = FrequencySweep::new(TouchstoneHeader::default(), points).unwrap();
        for unit in [
            FrequencyUnit::Hz,
            FrequencyUnit::KHz,
            FrequencyUnit::MHz,
            FrequencyUnit::GHz,
        ] {
            for format in [DataFormat::RI, DataFormat::MA, DataFormat::DB] {
                let back =
                    sparams::parse_touchstone(&sparams::write_touchstone(&sweep, unit, format))
                        .map_err(|e| e.to_string())?;
                for (p, q) in sweep.points().iter().zip(back.points()) {
                    let err = (p.s11 - q.s11).norm() / p.s11.norm();
                    let ferr = (p.frequency_hz - q.frequency_hz).abs() / p.frequency_hz;
                    ensure(err <= 1e-9 && ferr <= 1e-9, || {
                        format!("{format:?}/{unit}: {} vs {}", p.s11, q.s11)
                    })?;
                    worst = worst.max(err);
                }
            }
        }
    }
    Ok(format!(
        "vswr(1/3) = 2, accepted(0.1) = 0.99, round-trip worst {worst:.1e}"
    ))
}

fn determinism() -> Check {
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_beaconmesh"))
            .args(["simulate", "--seed", "42", "--out"])
            .arg(d.path())
            .arg(fixture())
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
    }
    for name in ["report.json", "events.csv"] {
        let a = std::fs::read(dirs[0].path().join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dirs[1].path().join(name)).map_err(|e| e.to_string())?;
        ensure(!a.is_empty() && a == b, || format!("{name} differs"))?;
    }
    Ok("report.json and events.csv byte-identical".into())
}

fn latency_bound() -> Check {
    let s = Scenario::load(&fixture()).map_err(|e| e.to_string())?;
    let graph = mesh::knn_connect(&s.nodes, s.k, s.max_range_km).map_err(|e| e.to_string())?;
    let cfg = s.schedule.config;
    let run = RunParams {
        tower_phase_offsets_s: BTreeMap::new(),
        ..s.run_params(0)
    };
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in 0..20u64 {
        let scatter = DeviceScatter {
            count: 40,
            radius_km: 8.0,
            max_arrival_s: 50.0,
            rx_sensitivity_w: 1e-10,
            first_id: 100,
        };
        let mut devices = s.explicit_devices.clone();
        devices.extend(
            dutycycle::random_devices(&s.nodes, &scatter, seed).map_err(|e| e.to_string())?,
        );
        devices.retain(|d| {
            s.nodes.iter().any(|t| {
                dutycycle::beacon_received_power(t, d, cfg.p_max, run.frequency_hz).unwrap()
                    >= d.rx_sensitivity_w
            })
        });
        let sim = dutycycle::simulate(&graph, &devices, &cfg, &run).map_err(|e| e.to_string())?;
        let stats = dutycycle::latency_stats(&sim.report, &devices);
        ensure(stats.undiscovered.is_empty(), || {
            format!("seed {seed}: undiscovered {:?}", stats.undiscovered)
        })?;
        for &(id, l) in &stats.per_device {
            ensure(l <= 6.0 + 0.1, || {
                format!("seed {seed}: device {id} latency {l}")
            })?;
            worst = worst.max(l);
        }
        count += devices.len();
    }
    Ok(format!(
        "{count} feasible devices, worst latency {worst:.2} s"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("duty-cycle saving band", duty_cycle_band),
        ("Friis oracle", friis_oracle),
        ("composition identity", composition_identity),
        ("sphere closure", sphere_closure),
        ("kNN equivalence", knn_equivalence),
        ("three-city scenario", three_city),
        ("TSP bound", tsp_bound),
        ("S-parameter metrics", sparams_metrics),
        ("determinism", determinism),
        ("latency bound", latency_bound),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
