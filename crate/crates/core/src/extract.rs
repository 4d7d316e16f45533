//! Turning potential extrema into a maximal-circulation 3-partition.
//!
//! Three edge-disjoint dual paths between the faces of minimum and maximum
//! potential are found by unit-capacity augmenting paths. Deleting the primal
//! edges they cross leaves, when the paths are internally vertex-disjoint,
//! exactly three connected pieces; each piece borders the others along one
//! path, so every boundary carries the full potential gap.

use crate::embedding::{DualGraph, EdgeId, FaceId, PlanarEmbedding, TriangulatedGraph, VertexId};
use crate::flowfield::NetFluxField;
use crate::partition::{circulation, support_adjacency, CirculationReport, Part, PartitionError, ThreePartition};
use crate::potential::{max_circulation, CurlPotential};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

/// Default number of alternative path decompositions tried before giving up.
pub const DEFAULT_ATTEMPTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error("source and sink face are both {0}")]
    SameEndpoints(FaceId),
    #[error("only {0} edge-disjoint dual paths exist between the extrema")]
    InsufficientConnectivity(usize),
    #[error("cutting the paths leaves {count} components instead of 3")]
    BadComponentCount { count: usize, components: Vec<Vec<VertexId>> },
    #[error("partition circulation {got} does not match potential gap {expected}")]
    MismatchCirculation { got: f64, expected: f64 },
    #[error("potential is constant; there is no circulation to extract")]
    NoCirculation,
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

impl ExtractError {
    pub fn kind(&self) -> &'static str {
        match self {
            ExtractError::SameEndpoints(_) => "same_endpoints",
            ExtractError::InsufficientConnectivity(_) => "insufficient_connectivity",
            ExtractError::BadComponentCount { .. } => "bad_component_count",
            ExtractError::MismatchCirculation { .. } => "mismatch_circulation",
            ExtractError::NoCirculation => "no_circulation",
            ExtractError::Partition(e) => e.kind(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Disjointness {
    VertexDisjoint,
    EdgeDisjointOnly,
}

/// Walk in the dual: `faces.len() == edges.len() + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualPath {
    pub faces: Vec<FaceId>,
    pub edges: Vec<EdgeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathTriple {
    pub source: FaceId,
    pub sink: FaceId,
    pub paths: [DualPath; 3],
    pub class: Disjointness,
}

impl PathTriple {
    /// All crossed primal edges, ascending.
    pub fn crossed_edges(&self) -> Vec<EdgeId> {
        let mut out: Vec<EdgeId> = self.paths.iter().flat_map(|p| p.edges.iter().copied()).collect();
        out.sort_unstable();
        out
    }

    pub fn is_edge_disjoint(&self) -> bool {
        let all = self.crossed_edges();
        all.windows(2).all(|w| w[0] != w[1])
    }

    pub fn is_internally_vertex_disjoint(&self) -> bool {
        let mut inner: Vec<FaceId> = self
            .paths
            .iter()
            .flat_map(|p| p.faces[1..p.faces.len() - 1].iter().copied())
            .collect();
        let before = inner.len();
        inner.sort_unstable();
        inner.dedup();
        inner.len() == before && !inner.contains(&self.source) && !inner.contains(&self.sink)
    }
}

struct Arc {
    to: usize,
    cap: i32,
    rev: usize,
    dual_edge: Option<(EdgeId, FaceId, FaceId)>,
}

struct Network {
    adj: Vec<Vec<Arc>>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Network { adj: (0..nodes).map(|_| Vec::new()).collect() }
    }

    fn add(&mut self, from: usize, to: usize, cap: i32, dual_edge: Option<(EdgeId, FaceId, FaceId)>) {
        let rf = self.adj[to].len();
        let rt = self.adj[from].len();
        self.adj[from].push(Arc { to, cap, rev: rf, dual_edge });
        self.adj[to].push(Arc { to: from, cap: 0, rev: rt, dual_edge: None });
    }

    /// Augments along shortest paths until `limit` units flow or none remain.
    fn max_flow(&mut self, s: usize, t: usize, limit: i32) -> i32 {
        let mut flow = 0;
        while flow < limit {
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for (k, arc) in self.adj[u].iter().enumerate() {
                    if arc.cap > 0 && !seen[arc.to] {
                        seen[arc.to] = true;
                        prev[arc.to] = Some((u, k));
                        queue.push_back(arc.to);
                    }
                }
            }
            if !seen[t] {
                break;
            }
            let mut v = t;
            while let Some((u, k)) = prev[v] {
                self.adj[u][k].cap -= 1;
                let rev = self.adj[u][k].rev;
                self.adj[v][rev].cap += 1;
                v = u;
            }
            flow += 1;
        }
        flow
    }

    /// Net dual-edge usage: `(edge, from_face, to_face)` for every edge
    /// carrying one unit after opposite flows cancel.
    fn used_dual_edges(&self, edge_count: usize) -> Vec<(EdgeId, FaceId, FaceId)> {
        let mut net = vec![0i32; edge_count];
        let mut ends = vec![(0, 0); edge_count];
        for arcs in &self.adj {
            for arc in arcs {
                if let Some((e, from, to)) = arc.dual_edge {
                    // Forward arcs have capacity 1; a used one has dropped to 0.
                    if arc.cap == 0 {
                        if from <= to {
                            net[e] += 1;
                            ends[e] = (from, to);
                        } else {
                            net[e] -= 1;
                            ends[e] = (to, from);
                        }
                    }
                }
            }
        }
        let mut out = Vec::new();
        for e in 0..edge_count {
            let (lo, hi) = ends[e];
            match net[e] {
                1 => out.push((e, lo, hi)),
                -1 => out.push((e, hi, lo)),
                _ => {}
            }
        }
        out
    }
}

/// Three edge-disjoint dual paths from `s` to `t`, internally vertex-disjoint
/// when possible.
pub fn three_disjoint_paths(dual: &DualGraph, s: FaceId, t: FaceId) -> Result<PathTriple, ExtractError> {
    three_disjoint_paths_rotated(dual, s, t, 0)
}

/// As [`three_disjoint_paths`], with the augmenting-path scan starting at dual
/// edge `offset` instead of 0. Different offsets can yield different triples.
pub fn three_disjoint_paths_rotated(
    dual: &DualGraph,
    s: FaceId,
    t: FaceId,
    offset: usize,
) -> Result<PathTriple, ExtractError> {
    if s == t {
        return Err(ExtractError::SameEndpoints(s));
    }
    if let Some(triple) = route(dual, s, t, offset, true)? {
        return Ok(triple);
    }
    match route(dual, s, t, offset, false)? {
        Some(triple) => Ok(triple),
        None => unreachable!("edge routing reports shortfall as an error"),
    }
}

type NodeMap = fn(FaceId) -> usize;

fn route(
    dual: &DualGraph,
    s: FaceId,
    t: FaceId,
    offset: usize,
    split_vertices: bool,
) -> Result<Option<PathTriple>, ExtractError> {
    let m = dual.vertex_count();
    let edge_count = dual.edge_count();
    let (inn, out): (NodeMap, NodeMap) = if split_vertices {
        (|f| 2 * f, |f| 2 * f + 1)
    } else {
        (|f| f, |f| f)
    };
    let mut net = Network::new(if split_vertices { 2 * m } else { m });
    if split_vertices {
        for f in 0..m {
            let cap = if f == s || f == t { 3 } else { 1 };
            net.add(inn(f), out(f), cap, None);
        }
    }
    let start = if edge_count == 0 { 0 } else { offset % edge_count };
    for e in (start..edge_count).chain(0..start) {
        let edge = &dual.edges()[e];
        let (a, b) = (edge.left, edge.right);
        if a == b {
            continue;
        }
        net.add(out(a), inn(b), 1, Some((e, a, b)));
        net.add(out(b), inn(a), 1, Some((e, b, a)));
    }
    let flow = net.max_flow(out(s), inn(t), 3);
    if flow < 3 {
        if split_vertices {
            return Ok(None);
        }
        return Err(ExtractError::InsufficientConnectivity(flow as usize));
    }
    let used = net.used_dual_edges(edge_count);
    let paths = decompose(&used, s, t, m);
    let triple = PathTriple {
        source: s,
        sink: t,
        paths,
        class: Disjointness::EdgeDisjointOnly,
    };
    let class = if triple.is_internally_vertex_disjoint() {
        Disjointness::VertexDisjoint
    } else {
        Disjointness::EdgeDisjointOnly
    };
    Ok(Some(PathTriple { class, ..triple }))
}

/// Splits a unit s–t flow of value 3 into three simple paths. Cycles met on a
/// walk are cut out, which keeps the paths edge-disjoint.
fn decompose(used: &[(EdgeId, FaceId, FaceId)], s: FaceId, t: FaceId, m: usize) -> [DualPath; 3] {
    let mut outgoing: Vec<VecDeque<(EdgeId, FaceId)>> = vec![VecDeque::new(); m];
    for &(e, from, to) in used {
        outgoing[from].push_back((e, to));
    }
    let mut paths = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut faces = vec![s];
        let mut edges = Vec::new();
        let mut here = s;
        while here != t {
            let (e, next) = outgoing[here].pop_front().expect("flow conservation");
            if let Some(k) = faces.iter().position(|&f| f == next) {
                faces.truncate(k + 1);
                edges.truncate(k);
            } else {
                faces.push(next);
                edges.push(e);
            }
            here = next;
        }
        paths.push(DualPath { faces, edges });
    }
    let mut it = paths.into_iter();
    [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
}

/// Components left after deleting the crossed primal edges.
pub fn components_without(emb: &PlanarEmbedding, removed: &[EdgeId]) -> Vec<Vec<VertexId>> {
    let n = emb.n();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut cut = vec![false; emb.edge_count()];
    for &e in removed {
        cut[e] = true;
    }
    for (e, edge) in emb.edges().iter().enumerate() {
        if !cut[e] {
            let a = find(&mut parent, edge.tail);
            let b = find(&mut parent, edge.head);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<VertexId>> = Vec::new();
    let mut root_index = vec![usize::MAX; n];
    for v in 0..n {
        let r = find(&mut parent, v);
        if root_index[r] == usize::MAX {
            root_index[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_index[r]].push(v);
    }
    groups
}

/// Partition whose parts are the components left after removing every primal
/// edge crossed by the triple.
pub fn cut_partition(t: &TriangulatedGraph, paths: &PathTriple) -> Result<ThreePartition, ExtractError> {
    let groups = components_without(&t.embedding, &paths.crossed_edges());
    if groups.len() != 3 {
        return Err(ExtractError::BadComponentCount { count: groups.len(), components: groups });
    }
    let partition = ThreePartition::from_parts(t.embedding.n(), [&groups[0], &groups[1], &groups[2]])?;
    Ok(partition)
}

/// Per-part connectivity in the undirected support of `f`.
pub fn support_connectivity(f: &NetFluxField, p: &ThreePartition) -> [bool; 3] {
    let adj = support_adjacency(f);
    Part::ALL.map(|part| {
        let members = p.members(part);
        let Some(&start) = members.first() else { return false };
        let mut seen = vec![false; f.n()];
        seen[start] = true;
        let mut stack = vec![start];
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] && p.label(v) == part {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == members.len()
    })
}

/// Circulation of `p` on the original field, checked against the potential
/// gap within `potential_tol · edge_count`.
pub fn verify_partition(
    f: &NetFluxField,
    p: &ThreePartition,
    psi: &CurlPotential,
    potential_tol: f64,
    edge_count: usize,
) -> Result<CirculationReport, ExtractError> {
    let tol = potential_tol * edge_count.max(1) as f64;
    let report = circulation(f, p, tol)?;
    let expected = max_circulation(psi);
    if (report.circulation - expected).abs() > tol {
        return Err(ExtractError::MismatchCirculation { got: report.circulation, expected });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub triple: PathTriple,
    pub partition: ThreePartition,
    pub report: CirculationReport,
    pub connected_in_support: [bool; 3],
    /// Path decompositions tried, including the successful one.
    pub attempts: usize,
}

/// Runs path finding, cutting and verification between faces `s` and `t`,
/// rotating the scan order up to `max_attempts` times when a triple does not
/// cut the graph into exactly three pieces.
pub fn extract_between(
    t: &TriangulatedGraph,
    f: &NetFluxField,
    psi: &CurlPotential,
    s: FaceId,
    sink: FaceId,
    potential_tol: f64,
    max_attempts: usize,
) -> Result<Extraction, ExtractError> {
    if s == sink {
        return Err(ExtractError::NoCirculation);
    }
    let mut last_err = None;
    let mut seen = Vec::new();
    for attempt in 0..max_attempts.max(1) {
        let triple = three_disjoint_paths_rotated(&t.dual, s, sink, attempt)?;
        if seen.contains(&triple) {
            continue;
        }
        seen.push(triple.clone());
        match cut_partition(t, &triple) {
            Ok(partition) => {
                let report = verify_partition(f, &partition, psi, potential_tol, t.embedding.edge_count())?;
                let connected_in_support = support_connectivity(f, &partition);
                return Ok(Extraction {
                    triple,
                    partition,
                    report,
                    connected_in_support,
                    attempts: attempt + 1,
                });
            }
            Err(e @ ExtractError::BadComponentCount { .. }) => {
                log::debug!("attempt {attempt}: {e}");
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(ExtractError::InsufficientConnectivity(0)))
}

/// Extraction between the canonical extrema of `psi`.
pub fn extract(
    t: &TriangulatedGraph,
    f: &NetFluxField,
    psi: &CurlPotential,
    potential_tol: f64,
) -> Result<Extraction, ExtractError> {
    extract_between(t, f, psi, psi.face_min(), psi.face_max(), potential_tol, DEFAULT_ATTEMPTS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{build_flow_graph, embed_from_coords, triangulate};
    use crate::potential::compute_psi;

    fn hexagon() -> (NetFluxField, TriangulatedGraph) {
        let edges: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6, 1.0)).collect();
        let f = NetFluxField::from_edges(6, &edges).unwrap();
        let coords: Vec<[f64; 2]> = (0..6)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 6.0;
                [t.cos(), t.sin()]
            })
            .collect();
        let emb = embed_from_coords(&build_flow_graph(&f).unwrap(), &coords).unwrap();
        let t = triangulate(&emb, false, &[]).unwrap();
        (f, t)
    }

    #[test]
    fn untriangulated_hexagon_dual_has_six_parallel_paths() {
        let edges: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6, 1.0)).collect();
        let f = NetFluxField::from_edges(6, &edges).unwrap();
        let coords: Vec<[f64; 2]> = (0..6)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 6.0;
                [t.cos(), t.sin()]
            })
            .collect();
        let emb = embed_from_coords(&build_flow_graph(&f).unwrap(), &coords).unwrap();
        let d = crate::embedding::dual(&emb);
        let triple = three_disjoint_paths(&d, 1, 0).unwrap();
        assert_eq!(triple.class, Disjointness::VertexDisjoint);
        for p in &triple.paths {
            assert_eq!(p.edges.len(), 1);
            assert_eq!(p.faces, vec![1, 0]);
        }
        assert!(triple.is_edge_disjoint());
    }

    #[test]
    fn same_endpoints_rejected() {
        let (_, t) = hexagon();
        assert_eq!(three_disjoint_paths(&t.dual, 2, 2), Err(ExtractError::SameEndpoints(2)));
    }

    #[test]
    fn hexagon_extraction_yields_unit_circulation() {
        let (f, t) = hexagon();
        let psi = compute_psi(&t.dual, 1e-12).unwrap();
        let ex = extract(&t, &f, &psi, 1e-9).unwrap();
        assert_eq!(ex.triple.class, Disjointness::VertexDisjoint);
        assert_eq!(ex.report.circulation, 1.0);
        assert!(ex.triple.is_edge_disjoint());
        for part in Part::ALL {
            assert!(!ex.partition.members(part).is_empty());
        }
        assert_eq!(ex.connected_in_support, [true; 3]);
    }

    #[test]
    fn mismatched_partition_is_reported() {
        let (f, t) = hexagon();
        let psi = compute_psi(&t.dual, 1e-12).unwrap();
        let split = ThreePartition::new(vec![Part::A, Part::B, Part::C, Part::A, Part::B, Part::C], 6).unwrap();
        assert_eq!(
            verify_partition(&f, &split, &psi, 1e-9, t.embedding.edge_count()),
            Err(ExtractError::MismatchCirculation { got: 2.0, expected: 1.0 })
        );
    }

    #[test]
    fn single_cut_path_leaves_too_few_components() {
        let (_, t) = hexagon();
        let groups = components_without(&t.embedding, &[0]);
        assert_eq!(groups.len(), 1);
    }
}
