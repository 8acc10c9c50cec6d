//! Tower connectivity: great-circle geometry, k-nearest-neighbour linking
//! under a range cap, link feasibility and a greedy tour.
//!
//! Every ordering decision breaks ties by the lower node id, so all graph
//! construction is deterministic.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::linkbudget::{self, AntennaSpec, LinkGeometry};

/// IUGG mean Earth radius, km.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

pub type TowerId = u32;

/// Latitude/longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    #[serde(rename = "lat")]
    pub lat_deg: f64,
    #[serde(rename = "lon")]
    pub lon_deg: f64,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self> {
        let p = GeoPoint { lat_deg, lon_deg };
        p.validate()?;
        Ok(p)
    }

    /// Latitude in [−90, 90]; longitude in [−180, 180], where ±180 name the
    /// same meridian.
    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.lat_deg) {
            return Err(domain(format!(
                "latitude {} outside [-90, 90]",
                self.lat_deg
            )));
        }
        if !(-180.0..=180.0).contains(&self.lon_deg) {
            return Err(domain(format!(
                "longitude {} outside [-180, 180]",
                self.lon_deg
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerNode {
    pub id: TowerId,
    pub name: String,
    #[serde(flatten)]
    pub position: GeoPoint,
    pub antenna: AntennaSpec,
    pub tx_power_w: f64,
    /// Minimum detectable received power, W.
    pub rx_sensitivity_w: f64,
}

impl TowerNode {
    /// Isotropic 1 W tower with a 1 pW sensitivity floor.
    pub fn new(id: TowerId, name: impl Into<String>, position: GeoPoint) -> Self {
        TowerNode {
            id,
            name: name.into(),
            position,
            antenna: AntennaSpec::isotropic(),
            tx_power_w: 1.0,
            rx_sensitivity_w: 1e-12,
        }
    }

    pub fn with_antenna(mut self, antenna: AntennaSpec) -> Self {
        self.antenna = antenna;
        self
    }

    pub fn with_tx_power(mut self, watts: f64) -> Self {
        self.tx_power_w = watts;
        self
    }

    pub fn with_rx_sensitivity(mut self, watts: f64) -> Self {
        self.rx_sensitivity_w = watts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.position
            .validate()
            .map_err(|e| domain(format!("tower {}: {e}", self.id)))?;
        self.antenna
            .validate()
            .map_err(|e| domain(format!("tower {}: {e}", self.id)))?;
        if !(self.tx_power_w > 0.0 && self.tx_power_w.is_finite()) {
            return Err(domain(format!("tower {}: tx_power_w must be > 0", self.id)));
        }
        if !(self.rx_sensitivity_w > 0.0 && self.rx_sensitivity_w.is_finite()) {
            return Err(domain(format!(
                "tower {}: rx_sensitivity_w must be > 0",
                self.id
            )));
        }
        Ok(())
    }
}

/// Checks every node and that ids are unique.
pub fn validate_nodes(nodes: &[TowerNode]) -> Result<()> {
    let mut seen = HashSet::new();
    for n in nodes {
        n.validate()?;
        if !seen.insert(n.id) {
            return Err(domain(format!("duplicate tower id {}", n.id)));
        }
    }
    Ok(())
}

/// Outcome of a directed or two-way link evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkStatus {
    pub feasible: bool,
    pub received_power_w: f64,
}

/// Undirected edge with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshEdge {
    pub a: TowerId,
    pub b: TowerId,
    pub distance_km: f64,
    /// Filled in by [`MeshGraph::assess_links`].
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshGraph {
    pub nodes: Vec<TowerNode>,
    /// Sorted by `(a, b)`.
    pub edges: Vec<MeshEdge>,
}

impl MeshGraph {
    pub fn node(&self, id: TowerId) -> Option<&TowerNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn has_edge(&self, x: TowerId, y: TowerId) -> bool {
        let (a, b) = (x.min(y), x.max(y));
        self.edges.iter().any(|e| e.a == a && e.b == b)
    }

    /// Evaluates every edge in both directions at `frequency_hz`.
    ///
    /// An edge is feasible only if each end hears the other; the stored
    /// received power is the weaker of the two directions.
    pub fn assess_links(&mut self, frequency_hz: f64) -> Result<()> {
        let index: BTreeMap<TowerId, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id, i))
            .collect();
        for e in &mut self.edges {
            let (na, nb) = match (index.get(&e.a), index.get(&e.b)) {
                (Some(&i), Some(&j)) => (&self.nodes[i], &self.nodes[j]),
                _ => {
                    return Err(domain(format!(
                        "edge {}-{} references unknown id",
                        e.a, e.b
                    )))
                }
            };
            let ab = link_feasible(na, nb, frequency_hz)?;
            let ba = link_feasible(nb, na, frequency_hz)?;
            e.link = Some(LinkStatus {
                feasible: ab.feasible && ba.feasible,
                received_power_w: ab.received_power_w.min(ba.received_power_w),
            });
        }
        Ok(())
    }

    /// Same nodes, only the edges whose links were assessed feasible.
    pub fn feasible_subgraph(&self) -> MeshGraph {
        MeshGraph {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .filter(|e| e.link.is_some_and(|l| l.feasible))
                .copied()
                .collect(),
        }
    }
}

fn haversine_unchecked(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat_deg.to_radians(), b.lat_deg.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon_deg - a.lon_deg).to_radians();
    let s1 = (dlat / 2.0).sin();
    let s2 = (dlon / 2.0).sin();
    let h = (s1 * s1 + lat1.cos() * lat2.cos() * s2 * s2).clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_KM * h.sqrt().asin()
}

/// Great-circle distance on a spherical Earth, km.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    Ok(haversine_unchecked(a, b))
}

/// Candidate ordered by distance, then id.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    distance_km: f64,
    id: TowerId,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance_km
            .total_cmp(&other.distance_km)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

/// Links each node to its `k` nearest neighbours that lie within
/// `max_range_km` (inclusive). The edge set is undirected and deduplicated.
pub fn knn_connect(nodes: &[TowerNode], k: usize, max_range_km: f64) -> Result<MeshGraph> {
    if nodes.len() < 2 {
        return Err(domain("knn_connect needs at least 2 nodes"));
    }
    if k == 0 {
        return Err(domain("k must be >= 1"));
    }
    if max_range_km.is_nan() || max_range_km < 0.0 {
        return Err(domain("max_range_km must be >= 0"));
    }
    validate_nodes(nodes)?;

    let mut edges: BTreeMap<(TowerId, TowerId), f64> = BTreeMap::new();
    for (i, from) in nodes.iter().enumerate() {
        // max-heap holding the k best candidates seen so far
        let mut best: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        for (j, to) in nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            let c = Candidate {
                distance_km: haversine_unchecked(from.position, to.position),
                id: to.id,
            };
            if best.len() < k {
                best.push(c);
            } else if best.peek().is_some_and(|worst| c < *worst) {
                best.pop();
                best.push(c);
            }
        }
        for c in best {
            if c.distance_km <= max_range_km {
                let key = (from.id.min(c.id), from.id.max(c.id));
                edges.insert(key, c.distance_km);
            }
        }
    }

    Ok(MeshGraph {
        nodes: nodes.to_vec(),
        edges: edges
            .into_iter()
            .map(|((a, b), distance_km)| MeshEdge {
                a,
                b,
                distance_km,
                link: None,
            })
            .collect(),
    })
}

/// Closest node to `query`; the lower id wins a tie.
pub fn nearest_neighbor(query: GeoPoint, nodes: &[TowerNode]) -> Result<&TowerNode> {
    query.validate()?;
    nodes
        .iter()
        .min_by(|x, y| {
            let cx = Candidate {
                distance_km: haversine_unchecked(query, x.position),
                id: x.id,
            };
            let cy = Candidate {
                distance_km: haversine_unchecked(query, y.position),
                id: y.id,
            };
            cx.cmp(&cy)
        })
        .ok_or_else(|| domain("nearest_neighbor on an empty node list"))
}

/// Geometry for a tower-to-tower or tower-to-device path. Antennas are taken
/// as pointed at each other, so each end is evaluated at its pattern's peak.
pub fn pointed_geometry(
    tx: &AntennaSpec,
    rx: &AntennaSpec,
    frequency_hz: f64,
    distance_m: f64,
) -> LinkGeometry {
    LinkGeometry {
        frequency_hz,
        distance_m,
        tx_direction: tx.pattern.peak_direction(),
        rx_direction: rx.pattern.peak_direction(),
    }
}

/// Whether `b` hears `a` transmitting at its full power.
pub fn link_feasible(a: &TowerNode, b: &TowerNode, frequency_hz: f64) -> Result<LinkStatus> {
    let distance_m = haversine_km(a.position, b.position)? * 1e3;
    if distance_m == 0.0 {
        return Err(domain(format!(
            "towers {} and {} are coincident",
            a.id, b.id
        )));
    }
    let geometry = pointed_geometry(&a.antenna, &b.antenna, frequency_hz, distance_m);
    let result = linkbudget::received_power(a.tx_power_w, &geometry, &a.antenna, &b.antenna)?;
    Ok(LinkStatus {
        feasible: result.received_power >= b.rx_sensitivity_w,
        received_power_w: result.received_power,
    })
}

/// Partition of node ids by undirected reachability, ordered by smallest id.
pub fn connected_components(graph: &MeshGraph) -> Vec<BTreeSet<TowerId>> {
    let ids: Vec<TowerId> = graph.nodes.iter().map(|n| n.id).collect();
    let index: BTreeMap<TowerId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    for e in &graph.edges {
        if let (Some(&i), Some(&j)) = (index.get(&e.a), index.get(&e.b)) {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }

    let mut groups: BTreeMap<usize, BTreeSet<TowerId>> = BTreeMap::new();
    for (i, &id) in ids.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().insert(id);
    }
    let mut comps: Vec<BTreeSet<TowerId>> = groups.into_values().collect();
    comps.sort_by_key(|c| *c.first().expect("components are non-empty"));
    comps
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    /// Visiting order, starting at the start node; the closing leg back to
    /// it is implied.
    pub order: Vec<TowerId>,
    /// Length of the closed cycle, km.
    pub total_km: f64,
}

/// Greedy nearest-neighbour tour from `start_id`, returning to the start.
pub fn nn_tsp_tour(nodes: &[TowerNode], start_id: TowerId) -> Result<Tour> {
    if nodes.len() < 2 {
        return Err(domain("a tour needs at least 2 nodes"));
    }
    validate_nodes(nodes)?;
    let start = nodes
        .iter()
        .position(|n| n.id == start_id)
        .ok_or_else(|| domain(format!("start id {start_id} not found")))?;

    let mut visited = vec![false; nodes.len()];
    visited[start] = true;
    let mut order = vec![nodes[start].id];
    let mut current = start;
    let mut total_km = 0.0;

    for _ in 1..nodes.len() {
        let next = (0..nodes.len())
            .filter(|&j| !visited[j])
            .map(|j| {
                (
                    Candidate {
                        distance_km: haversine_unchecked(
                            nodes[current].position,
                            nodes[j].position,
                        ),
                        id: nodes[j].id,
                    },
                    j,
                )
            })
            .min_by(|x, y| x.0.cmp(&y.0))
            .expect("unvisited node remains");
        total_km += next.0.distance_km;
        visited[next.1] = true;
        order.push(next.0.id);
        current = next.1;
    }
    total_km += haversine_unchecked(nodes[current].position, nodes[start].position);
    Ok(Tour { order, total_km })
}
