//! Combinatorial planar embeddings of flow graphs.
//!
//! An embedding is a rotation system: for every vertex, the counterclockwise
//! cyclic order of its outgoing darts. Edge `e` owns darts `2e` (tail→head,
//! the direction of positive flux) and `2e + 1` (head→tail). Faces are traced
//! with the rule "take the twin, then the next dart clockwise", which walks
//! every face with the face on its left: bounded faces counterclockwise, the
//! outer face clockwise.
//!
//! Face ids are the order in which faces are discovered scanning darts by
//! ascending id, except that the outer face is always moved to id 0.

use crate::flowfield::NetFluxField;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

pub type VertexId = usize;
pub type EdgeId = usize;
pub type FaceId = usize;
pub type Dart = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbeddingError {
    #[error("flow graph has no edges")]
    Empty,
    #[error("vertex {0} carries no flux")]
    IsolatedVertex(VertexId),
    #[error("graph is not connected")]
    Disconnected,
    #[error("bad coordinates: {0}")]
    BadCoords(String),
    #[error("Euler check failed: {vertices} - {edges} + {faces} != 2")]
    EulerViolation { vertices: usize, edges: usize, faces: usize },
    #[error("rotation system has genus {0}, only planar embeddings are supported")]
    NotGenusZero(usize),
    #[error("bad rotation at vertex {vertex}: {reason}")]
    BadRotation { vertex: VertexId, reason: String },
    #[error("an outer face must be designated")]
    MissingOuterFace,
    #[error("outer face designation matches no face")]
    OuterFaceNotFound,
    #[error("outer face designation matches several faces")]
    AmbiguousOuterFace,
    #[error("no face with id {0}")]
    NoSuchFace(FaceId),
    #[error("face {0} admits no valid diagonal")]
    CannotTriangulate(FaceId),
    #[error("chord ({u}, {v}) rejected: {reason}")]
    BadChord { u: VertexId, v: VertexId, reason: &'static str },
}

impl EmbeddingError {
    pub fn kind(&self) -> &'static str {
        match self {
            EmbeddingError::Empty => "empty_graph",
            EmbeddingError::IsolatedVertex(_) => "isolated_vertex",
            EmbeddingError::Disconnected => "disconnected",
            EmbeddingError::BadCoords(_) => "bad_coords",
            EmbeddingError::EulerViolation { .. } => "euler_violation",
            EmbeddingError::NotGenusZero(_) => "not_genus_zero",
            EmbeddingError::BadRotation { .. } => "bad_rotation",
            EmbeddingError::MissingOuterFace => "missing_outer_face",
            EmbeddingError::OuterFaceNotFound => "outer_face_not_found",
            EmbeddingError::AmbiguousOuterFace => "ambiguous_outer_face",
            EmbeddingError::NoSuchFace(_) => "no_such_face",
            EmbeddingError::CannotTriangulate(_) => "cannot_triangulate",
            EmbeddingError::BadChord { .. } => "bad_chord",
        }
    }
}

/// Directed edge of the flow graph, oriented along positive flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowEdge {
    pub tail: VertexId,
    pub head: VertexId,
    pub weight: f64,
}

/// Digraph with one edge per vertex pair of nonzero flux.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGraph {
    n: usize,
    edges: Vec<FlowEdge>,
}

impl FlowGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[FlowEdge] {
        &self.edges
    }

    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        self.edges
            .iter()
            .filter_map(|e| {
                if e.tail == v {
                    Some(e.head)
                } else if e.head == v {
                    Some(e.tail)
                } else {
                    None
                }
            })
            .collect()
    }
}

/// Builds the flow graph of `f`. Edges are listed by ascending vertex pair.
pub fn build_flow_graph(f: &NetFluxField) -> Result<FlowGraph, EmbeddingError> {
    let mut edges = Vec::new();
    let mut degree = vec![0usize; f.n()];
    for (i, j) in f.support() {
        let flux = f.get(i, j);
        let (tail, head) = if flux > 0.0 { (i, j) } else { (j, i) };
        edges.push(FlowEdge { tail, head, weight: flux.abs() });
        degree[i] += 1;
        degree[j] += 1;
    }
    if edges.is_empty() {
        return Err(EmbeddingError::Empty);
    }
    if let Some(v) = degree.iter().position(|&d| d == 0) {
        return Err(EmbeddingError::IsolatedVertex(v));
    }
    Ok(FlowGraph { n: f.n(), edges })
}

/// Edge of an embedding: a flow edge or a zero-flux chord.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedEdge {
    pub tail: VertexId,
    pub head: VertexId,
    pub flux: f64,
    pub chord: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub darts: Vec<Dart>,
}

/// How the outer face of a rotation-system embedding is chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OuterFaceHint {
    /// Index in face discovery order (before the outer face is moved to 0).
    Index(usize),
    /// Boundary vertices in walk order, matched cyclically, then reversed.
    Cycle(Vec<VertexId>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarEmbedding {
    n: usize,
    edges: Vec<EmbeddedEdge>,
    rotation: Vec<Vec<Dart>>,
    position: Vec<usize>,
    faces: Vec<Face>,
    face_of_dart: Vec<FaceId>,
    coords: Option<Vec<[f64; 2]>>,
}

fn twin(d: Dart) -> Dart {
    d ^ 1
}

impl PlanarEmbedding {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[EmbeddedEdge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn outer_face(&self) -> FaceId {
        0
    }

    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coords.as_deref()
    }

    /// Counterclockwise outgoing darts at `v`.
    pub fn rotation(&self, v: VertexId) -> &[Dart] {
        &self.rotation[v]
    }

    /// Counterclockwise neighbour order at `v`.
    pub fn rotation_neighbors(&self, v: VertexId) -> Vec<VertexId> {
        self.rotation[v].iter().map(|&d| self.head(d)).collect()
    }

    pub fn tail(&self, d: Dart) -> VertexId {
        let e = &self.edges[d / 2];
        if d.is_multiple_of(2) {
            e.tail
        } else {
            e.head
        }
    }

    pub fn head(&self, d: Dart) -> VertexId {
        self.tail(twin(d))
    }

    pub fn face_of_dart(&self, d: Dart) -> FaceId {
        self.face_of_dart[d]
    }

    /// Face on the left of the edge's positive direction.
    pub fn left_face(&self, e: EdgeId) -> FaceId {
        self.face_of_dart[2 * e]
    }

    pub fn right_face(&self, e: EdgeId) -> FaceId {
        self.face_of_dart[2 * e + 1]
    }

    /// Walk vertices of a face (tails of its darts).
    pub fn face_vertices(&self, f: FaceId) -> Vec<VertexId> {
        self.faces[f].darts.iter().map(|&d| self.tail(d)).collect()
    }

    pub fn face_len(&self, f: FaceId) -> usize {
        self.faces[f].darts.len()
    }

    /// First face whose vertex set equals `vertices`.
    pub fn find_face(&self, vertices: &[VertexId]) -> Option<FaceId> {
        let mut want = vertices.to_vec();
        want.sort_unstable();
        (0..self.faces.len()).find(|&f| {
            let mut have = self.face_vertices(f);
            have.sort_unstable();
            have == want
        })
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.rotation[u].iter().any(|&d| self.head(d) == v)
    }

    /// Dart following `d` along its face.
    fn next_in_face(&self, d: Dart) -> Dart {
        let t = twin(d);
        let v = self.tail(t);
        let rot = &self.rotation[v];
        rot[(self.position[t] + rot.len() - 1) % rot.len()]
    }

    fn assemble(
        n: usize,
        edges: Vec<EmbeddedEdge>,
        rotation: Vec<Vec<Dart>>,
        coords: Option<Vec<[f64; 2]>>,
    ) -> Result<PlanarEmbedding, EmbeddingError> {
        let mut position = vec![usize::MAX; 2 * edges.len()];
        let mut emb = PlanarEmbedding {
            n,
            edges,
            rotation,
            position: Vec::new(),
            faces: Vec::new(),
            face_of_dart: Vec::new(),
            coords,
        };
        for v in 0..n {
            for (k, &d) in emb.rotation[v].iter().enumerate() {
                if d >= position.len() || emb.tail(d) != v {
                    return Err(EmbeddingError::BadRotation {
                        vertex: v,
                        reason: format!("dart {d} does not leave this vertex"),
                    });
                }
                if position[d] != usize::MAX {
                    return Err(EmbeddingError::BadRotation {
                        vertex: v,
                        reason: "dart listed twice".into(),
                    });
                }
                position[d] = k;
            }
        }
        if let Some(d) = position.iter().position(|&p| p == usize::MAX) {
            return Err(EmbeddingError::BadRotation {
                vertex: emb.tail(d),
                reason: format!("edge to {} missing from rotation", emb.head(d)),
            });
        }
        emb.position = position;
        if !emb.is_connected() {
            return Err(EmbeddingError::Disconnected);
        }
        emb.trace_faces();
        Ok(emb)
    }

    fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(u) = stack.pop() {
            for &d in &self.rotation[u] {
                let v = self.head(d);
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Traces faces in discovery order, without choosing an outer face.
    fn trace_faces(&mut self) {
        let darts = 2 * self.edges.len();
        let mut face_of_dart = vec![usize::MAX; darts];
        let mut faces = Vec::new();
        for start in 0..darts {
            if face_of_dart[start] != usize::MAX {
                continue;
            }
            let id = faces.len();
            let mut walk = Vec::new();
            let mut d = start;
            loop {
                face_of_dart[d] = id;
                walk.push(d);
                d = self.next_in_face(d);
                if d == start {
                    break;
                }
            }
            faces.push(Face { darts: walk });
        }
        self.faces = faces;
        self.face_of_dart = face_of_dart;
    }

    /// Moves face `outer` to id 0, keeping the others in their current order.
    fn promote_outer(&mut self, outer: FaceId) {
        let face = self.faces.remove(outer);
        self.faces.insert(0, face);
        for (id, face) in self.faces.iter().enumerate() {
            for &d in &face.darts {
                self.face_of_dart[d] = id;
            }
        }
    }

    fn genus(&self) -> Option<usize> {
        let chi = self.euler_characteristic();
        if chi > 2 || (2 - chi) % 2 != 0 {
            None
        } else {
            Some(((2 - chi) / 2) as usize)
        }
    }

    fn signed_area(&self, f: FaceId, coords: &[[f64; 2]]) -> f64 {
        let vs = self.face_vertices(f);
        let mut area = 0.0;
        for k in 0..vs.len() {
            let [x0, y0] = coords[vs[k]];
            let [x1, y1] = coords[vs[(k + 1) % vs.len()]];
            area += x0 * y1 - x1 * y0;
        }
        0.5 * area
    }

    /// Same rotation system with `face` designated as the outer face.
    pub fn reroot_outer_face(&self, face: FaceId) -> Result<PlanarEmbedding, EmbeddingError> {
        if face >= self.faces.len() {
            return Err(EmbeddingError::NoSuchFace(face));
        }
        let mut out = self.clone();
        out.promote_outer(face);
        Ok(out)
    }

    /// Inserts a zero-flux chord between walk positions `i` and `j` of `face`
    /// and retraces, keeping the face that contains `outer_dart` at id 0.
    fn insert_chord(&mut self, face: FaceId, i: usize, j: usize, outer_dart: Dart) {
        let di = self.faces[face].darts[i];
        let dj = self.faces[face].darts[j];
        let (a, b) = (self.tail(di), self.tail(dj));
        let e = self.edges.len();
        self.edges.push(EmbeddedEdge { tail: a.min(b), head: a.max(b), flux: 0.0, chord: true });
        let (x, y) = if a < b { (2 * e, 2 * e + 1) } else { (2 * e + 1, 2 * e) };
        let pa = self.position[di];
        self.rotation[a].insert(pa + 1, x);
        let pb = self.position[dj];
        self.rotation[b].insert(pb + 1, y);
        self.position.resize(2 * e + 2, 0);
        for v in [a, b] {
            for (k, &d) in self.rotation[v].iter().enumerate() {
                self.position[d] = k;
            }
        }
        self.trace_faces();
        let outer = self.face_of_dart[outer_dart];
        self.promote_outer(outer);
    }
}

fn check_coords(n: usize, coords: &[[f64; 2]]) -> Result<(), EmbeddingError> {
    if coords.len() != n {
        return Err(EmbeddingError::BadCoords(format!(
            "expected {n} points, got {}",
            coords.len()
        )));
    }
    if coords.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(EmbeddingError::BadCoords("non-finite coordinate".into()));
    }
    let mut seen = HashSet::new();
    for p in coords {
        if !seen.insert((p[0].to_bits(), p[1].to_bits())) {
            return Err(EmbeddingError::BadCoords(format!("duplicate point {p:?}")));
        }
    }
    Ok(())
}

fn embedded_edges(g: &FlowGraph) -> Vec<EmbeddedEdge> {
    g.edges
        .iter()
        .map(|e| EmbeddedEdge { tail: e.tail, head: e.head, flux: e.weight, chord: false })
        .collect()
}

/// Straight-line embedding: each rotation is the neighbours sorted by angle.
///
/// The outer face is the unique face of negative signed area. Crossing
/// drawings are caught by the Euler check.
pub fn embed_from_coords(
    g: &FlowGraph,
    coords: &[[f64; 2]],
) -> Result<PlanarEmbedding, EmbeddingError> {
    check_coords(g.n, coords)?;
    let edges = embedded_edges(g);
    let rotation = rotation_from_coords(g.n, &edges, coords);
    let mut emb = PlanarEmbedding::assemble(g.n, edges, rotation, Some(coords.to_vec()))?;
    if emb.euler_characteristic() != 2 {
        return Err(EmbeddingError::EulerViolation {
            vertices: emb.n,
            edges: emb.edges.len(),
            faces: emb.faces.len(),
        });
    }
    let outer = if emb.faces.len() == 1 {
        0
    } else {
        let negative: Vec<FaceId> =
            (0..emb.faces.len()).filter(|&f| emb.signed_area(f, coords) < 0.0).collect();
        match negative.as_slice() {
            [f] => *f,
            [] => return Err(EmbeddingError::OuterFaceNotFound),
            _ => return Err(EmbeddingError::AmbiguousOuterFace),
        }
    };
    emb.promote_outer(outer);
    Ok(emb)
}

fn rotation_from_coords(n: usize, edges: &[EmbeddedEdge], coords: &[[f64; 2]]) -> Vec<Vec<Dart>> {
    let mut rotation: Vec<Vec<(f64, Dart)>> = vec![Vec::new(); n];
    for (e, edge) in edges.iter().enumerate() {
        for (d, from, to) in [(2 * e, edge.tail, edge.head), (2 * e + 1, edge.head, edge.tail)] {
            let dx = coords[to][0] - coords[from][0];
            let dy = coords[to][1] - coords[from][1];
            rotation[from].push((dy.atan2(dx), d));
        }
    }
    rotation
        .into_iter()
        .map(|mut r| {
            r.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            r.into_iter().map(|(_, d)| d).collect()
        })
        .collect()
}

/// Embedding from explicit counterclockwise neighbour lists.
pub fn embed_from_rotation(
    g: &FlowGraph,
    rotation: &[Vec<VertexId>],
    outer_face_hint: Option<&OuterFaceHint>,
) -> Result<PlanarEmbedding, EmbeddingError> {
    if rotation.len() != g.n {
        return Err(EmbeddingError::BadRotation {
            vertex: rotation.len().min(g.n),
            reason: format!("expected {} neighbour lists, got {}", g.n, rotation.len()),
        });
    }
    let edges = embedded_edges(g);
    let mut dart_of = std::collections::HashMap::new();
    for (e, edge) in edges.iter().enumerate() {
        dart_of.insert((edge.tail, edge.head), 2 * e);
        dart_of.insert((edge.head, edge.tail), 2 * e + 1);
    }
    let mut darts = Vec::with_capacity(g.n);
    for (v, nbrs) in rotation.iter().enumerate() {
        let mut list = Vec::with_capacity(nbrs.len());
        for &w in nbrs {
            match dart_of.get(&(v, w)) {
                Some(&d) => list.push(d),
                None => {
                    return Err(EmbeddingError::BadRotation {
                        vertex: v,
                        reason: format!("no flux edge to {w}"),
                    })
                }
            }
        }
        darts.push(list);
    }
    let mut emb = PlanarEmbedding::assemble(g.n, edges, darts, None)?;
    match emb.genus() {
        Some(0) => {}
        Some(g) => return Err(EmbeddingError::NotGenusZero(g)),
        None => {
            return Err(EmbeddingError::EulerViolation {
                vertices: emb.n,
                edges: emb.edges.len(),
                faces: emb.faces.len(),
            })
        }
    }
    let hint = outer_face_hint.ok_or(EmbeddingError::MissingOuterFace)?;
    let outer = resolve_outer(&emb, hint)?;
    emb.promote_outer(outer);
    Ok(emb)
}

/// Face of `emb` designated by `hint`. Indices refer to the current face ids.
pub fn resolve_outer(emb: &PlanarEmbedding, hint: &OuterFaceHint) -> Result<FaceId, EmbeddingError> {
    match hint {
        OuterFaceHint::Index(i) => {
            if *i < emb.faces.len() {
                Ok(*i)
            } else {
                Err(EmbeddingError::NoSuchFace(*i))
            }
        }
        OuterFaceHint::Cycle(cycle) => {
            let matches = |reversed: bool| -> Vec<FaceId> {
                let mut want = cycle.clone();
                if reversed {
                    want.reverse();
                }
                (0..emb.faces.len())
                    .filter(|&f| is_cyclic_shift(&emb.face_vertices(f), &want))
                    .collect()
            };
            let mut found = matches(false);
            if found.is_empty() {
                found = matches(true);
            }
            match found.as_slice() {
                [f] => Ok(*f),
                [] => Err(EmbeddingError::OuterFaceNotFound),
                _ => Err(EmbeddingError::AmbiguousOuterFace),
            }
        }
    }
}

fn is_cyclic_shift(a: &[VertexId], b: &[VertexId]) -> bool {
    a.len() == b.len() && (a.is_empty() || (0..a.len()).any(|s| (0..a.len()).all(|k| a[(s + k) % a.len()] == b[k])))
}

/// Dual edge crossing primal edge `primal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualEdge {
    pub primal: EdgeId,
    /// Face on the left of the primal edge's positive direction.
    pub left: FaceId,
    pub right: FaceId,
    /// Flux of the crossed primal edge (zero for chords).
    pub flux: f64,
}

/// Dual multigraph: one vertex per face, one edge per primal edge. Dual edge
/// ids equal primal edge ids.
#[derive(Debug, Clone, PartialEq)]
pub struct DualGraph {
    vertex_count: usize,
    edges: Vec<DualEdge>,
    incident: Vec<Vec<EdgeId>>,
}

impl DualGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[DualEdge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Incident dual edge ids, ascending; loops appear once.
    pub fn incident(&self, face: FaceId) -> &[EdgeId] {
        &self.incident[face]
    }

    /// Endpoint of dual edge `e` opposite `face`.
    pub fn opposite(&self, e: EdgeId, face: FaceId) -> FaceId {
        let edge = &self.edges[e];
        if edge.left == face {
            edge.right
        } else {
            edge.left
        }
    }

    /// Copy with every dual edge's flux replaced by `flux(edge)`.
    pub fn with_fluxes(&self, flux: impl Fn(&DualEdge) -> f64) -> DualGraph {
        let mut out = self.clone();
        for edge in &mut out.edges {
            edge.flux = flux(edge);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return false;
        }
        let mut seen = vec![false; self.vertex_count];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(u) = stack.pop() {
            for &e in &self.incident[u] {
                let v = self.opposite(e, u);
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

pub fn dual(e: &PlanarEmbedding) -> DualGraph {
    let mut edges = Vec::with_capacity(e.edges.len());
    let mut incident = vec![Vec::new(); e.faces.len()];
    for (id, edge) in e.edges.iter().enumerate() {
        let left = e.left_face(id);
        let right = e.right_face(id);
        edges.push(DualEdge { primal: id, left, right, flux: edge.flux });
        incident[left].push(id);
        if right != left {
            incident[right].push(id);
        }
    }
    DualGraph { vertex_count: e.faces.len(), edges, incident }
}

/// Flow graph completed with zero-flux chords, plus its dual.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangulatedGraph {
    pub embedding: PlanarEmbedding,
    /// Edge ids of the added chords.
    pub chords: Vec<EdgeId>,
    pub dual: DualGraph,
    pub include_outer: bool,
}

impl TriangulatedGraph {
    pub fn chord_pairs(&self) -> Vec<(VertexId, VertexId)> {
        self.chords
            .iter()
            .map(|&c| {
                let e = self.embedding.edges[c];
                (e.tail, e.head)
            })
            .collect()
    }
}

/// Adds zero-flux chords until every bounded face (and the outer face when
/// `include_outer`) is a triangle.
///
/// `forced` chords are inserted first, each into the first bounded face that
/// holds both endpoints non-adjacently (the outer face is tried last). The
/// remaining faces are fanned from their lowest-index vertex; a diagonal that
/// would duplicate an edge or close a loop moves the apex one step along the
/// walk. The outer face keeps id 0 throughout.
pub fn triangulate(
    e: &PlanarEmbedding,
    include_outer: bool,
    forced: &[(VertexId, VertexId)],
) -> Result<TriangulatedGraph, EmbeddingError> {
    let mut emb = e.clone();
    let outer_dart = emb.faces[0].darts.iter().copied().min().unwrap_or(0);
    let mut chords = Vec::new();

    for &(u, v) in forced {
        if u >= emb.n || v >= emb.n || u == v {
            return Err(EmbeddingError::BadChord { u, v, reason: "invalid endpoints" });
        }
        if emb.has_edge(u, v) {
            return Err(EmbeddingError::BadChord { u, v, reason: "edge already present" });
        }
        let order = (1..emb.faces.len()).chain(std::iter::once(0));
        let mut placed = None;
        'faces: for f in order {
            let vs = emb.face_vertices(f);
            let k = vs.len();
            for i in 0..k {
                for j in 0..k {
                    let gap = (j + k - i) % k;
                    if vs[i] == u && vs[j] == v && gap >= 2 && k - gap >= 2 {
                        placed = Some((f, i, j));
                        break 'faces;
                    }
                }
            }
        }
        let (f, i, j) = placed.ok_or(EmbeddingError::BadChord { u, v, reason: "no face holds both endpoints" })?;
        chords.push(emb.edges.len());
        emb.insert_chord(f, i, j, outer_dart);
    }

    'outer: loop {
        let target = (0..emb.faces.len())
            .find(|&f| (f != 0 || include_outer) && emb.face_len(f) != 3);
        let Some(f) = target else { break };
        let vs = emb.face_vertices(f);
        let k = vs.len();
        if k < 3 {
            return Err(EmbeddingError::CannotTriangulate(f));
        }
        let lowest = (0..k).min_by_key(|&i| (vs[i], i)).unwrap();
        for step in 0..k {
            let p = (lowest + step) % k;
            let q = (p + 2) % k;
            if vs[p] != vs[q] && !emb.has_edge(vs[p], vs[q]) {
                chords.push(emb.edges.len());
                emb.insert_chord(f, p, q, outer_dart);
                continue 'outer;
            }
        }
        return Err(EmbeddingError::CannotTriangulate(f));
    }

    if emb.euler_characteristic() != 2 {
        return Err(EmbeddingError::EulerViolation {
            vertices: emb.n,
            edges: emb.edges.len(),
            faces: emb.faces.len(),
        });
    }
    let dual = dual(&emb);
    Ok(TriangulatedGraph { embedding: emb, chords, dual, include_outer })
}
