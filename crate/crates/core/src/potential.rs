//! Curl potential on the faces of a triangulated flow graph.
//!
//! The outer face is pinned to zero and every other face is reached by a
//! breadth-first sweep of the dual, stepping across one primal edge at a
//! time. For an edge `u→v` carrying flux `w`, the face on its left sits `w`
//! above the face on its right. Every dual edge left out of the BFS tree is
//! then checked for closure, which holds exactly when the field is
//! divergence-free.

use crate::embedding::{DualGraph, EdgeId, FaceId};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("dual edge {edge} fails to close by {residual:e}")]
    InconsistentPotential { edge: EdgeId, residual: f64 },
    #[error("dual graph is disconnected; face {0} is unreachable")]
    Unreachable(FaceId),
}

impl PotentialError {
    pub fn kind(&self) -> &'static str {
        match self {
            PotentialError::InconsistentPotential { .. } => "inconsistent_potential",
            PotentialError::Unreachable(_) => "unreachable_face",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurlPotential {
    values: Vec<f64>,
    tree_edges: Vec<EdgeId>,
    checked_edges: Vec<EdgeId>,
    face_min: FaceId,
    face_max: FaceId,
}

impl CurlPotential {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, face: FaceId) -> f64 {
        self.values[face]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Dual edges used to assign values, in assignment order (`m − 1` of them).
    pub fn tree_edges(&self) -> &[EdgeId] {
        &self.tree_edges
    }

    /// Dual edges verified for closure after the sweep.
    pub fn checked_edges(&self) -> &[EdgeId] {
        &self.checked_edges
    }

    pub fn face_min(&self) -> FaceId {
        self.face_min
    }

    pub fn face_max(&self) -> FaceId {
        self.face_max
    }

    pub fn psi_min(&self) -> f64 {
        self.values[self.face_min]
    }

    pub fn psi_max(&self) -> f64 {
        self.values[self.face_max]
    }
}

/// Signed flux from `from` into the face across dual edge `e`.
///
/// Moving from the right face to the left face raises the potential by the flux.
fn step(dual: &DualGraph, e: EdgeId, from: FaceId) -> f64 {
    let edge = &dual.edges()[e];
    if edge.right == from {
        edge.flux
    } else {
        -edge.flux
    }
}

/// Assigns the curl potential with the outer face (id 0) at zero.
pub fn compute_psi(dual: &DualGraph, tol: f64) -> Result<CurlPotential, PotentialError> {
    let m = dual.vertex_count();
    let mut values = vec![f64::NAN; m];
    let mut in_tree = vec![false; dual.edge_count()];
    let mut tree_edges = Vec::with_capacity(m.saturating_sub(1));
    if m == 0 {
        return Err(PotentialError::Unreachable(0));
    }
    values[0] = 0.0;
    let mut queue = VecDeque::from([0]);
    while let Some(face) = queue.pop_front() {
        for &e in dual.incident(face) {
            let other = dual.opposite(e, face);
            if values[other].is_nan() {
                values[other] = values[face] + step(dual, e, face);
                in_tree[e] = true;
                tree_edges.push(e);
                queue.push_back(other);
            }
        }
    }
    if let Some(face) = values.iter().position(|v| v.is_nan()) {
        return Err(PotentialError::Unreachable(face));
    }
    let mut checked_edges = Vec::new();
    for (e, edge) in dual.edges().iter().enumerate() {
        if in_tree[e] {
            continue;
        }
        checked_edges.push(e);
        let residual = values[edge.left] - values[edge.right] - edge.flux;
        if residual.abs() > tol {
            return Err(PotentialError::InconsistentPotential { edge: e, residual });
        }
    }
    let (face_min, face_max) = extrema_of(&values);
    Ok(CurlPotential { values, tree_edges, checked_edges, face_min, face_max })
}

fn extrema_of(values: &[f64]) -> (FaceId, FaceId) {
    let mut lo = 0;
    let mut hi = 0;
    for (f, &v) in values.iter().enumerate() {
        if v < values[lo] {
            lo = f;
        }
        if v > values[hi] {
            hi = f;
        }
    }
    (lo, hi)
}

/// Faces carrying the smallest and largest potential, lowest id on ties.
pub fn extrema(psi: &CurlPotential) -> (FaceId, FaceId) {
    (psi.face_min, psi.face_max)
}

/// Largest flux across any dual path: `ψ_max − ψ_min`.
pub fn max_circulation(psi: &CurlPotential) -> f64 {
    psi.psi_max() - psi.psi_min()
}

/// All (min face, max face) pairs that attain the extreme values within `tol`.
pub fn extrema_pairs(psi: &CurlPotential, tol: f64) -> Vec<(FaceId, FaceId)> {
    let lows: Vec<FaceId> =
        (0..psi.len()).filter(|&f| psi.values[f] <= psi.psi_min() + tol).collect();
    let highs: Vec<FaceId> =
        (0..psi.len()).filter(|&f| psi.values[f] >= psi.psi_max() - tol).collect();
    let mut pairs = Vec::new();
    for &lo in &lows {
        for &hi in &highs {
            if lo != hi {
                pairs.push((lo, hi));
            }
        }
    }
    pairs
}

/// Signed flux accumulated along a dual walk given as consecutive edge ids.
pub fn path_flux(dual: &DualGraph, start: FaceId, path: &[EdgeId]) -> (FaceId, f64) {
    let mut face = start;
    let mut total = 0.0;
    for &e in path {
        total += step(dual, e, face);
        face = dual.opposite(e, face);
    }
    (face, total)
}
