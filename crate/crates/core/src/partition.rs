//! Three-way vertex partitions and the circulation they carry.
//!
//! For a divergence-free field the cyclic pair fluxes `A→B`, `B→C`, `C→A`
//! coincide; their common magnitude is the circulation of the partition.

use crate::flowfield::NetFluxField;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Default guard on the brute-force search size.
pub const DEFAULT_MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    #[error("expected {expected} labels, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("part {0} is empty")]
    EmptyPart(Part),
    #[error("vertex {vertex} is listed in more than one part or out of range")]
    BadVertex { vertex: usize },
    #[error("cyclic pair fluxes disagree: {fluxes:?}")]
    LemmaViolation { fluxes: [f64; 3] },
    #[error("{n} vertices exceed the brute-force limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("no partition with connected parts exists")]
    NoFeasiblePartition,
}

impl PartitionError {
    pub fn kind(&self) -> &'static str {
        match self {
            PartitionError::BadLength { .. } => "bad_length",
            PartitionError::EmptyPart(_) => "empty_part",
            PartitionError::BadVertex { .. } => "bad_vertex",
            PartitionError::LemmaViolation { .. } => "lemma_violation",
            PartitionError::TooLarge { .. } => "too_large",
            PartitionError::NoFeasiblePartition => "no_feasible_partition",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Part {
    A,
    B,
    C,
}

impl Part {
    pub const ALL: [Part; 3] = [Part::A, Part::B, Part::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Part {
        Part::ALL[i]
    }

    /// A→B, B→C, C→A.
    pub fn next(self) -> Part {
        Part::ALL[(self.index() + 1) % 3]
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Part::A => "A",
            Part::B => "B",
            Part::C => "C",
        };
        f.write_str(s)
    }
}

/// A labelling of every vertex with one of three nonempty parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThreePartition {
    labels: Vec<Part>,
}

impl ThreePartition {
    pub fn new(labels: Vec<Part>, n: usize) -> Result<Self, PartitionError> {
        validate_partition(labels, n)
    }

    /// Builds a partition from three 0-based vertex lists.
    pub fn from_parts(n: usize, parts: [&[usize]; 3]) -> Result<Self, PartitionError> {
        let mut labels: Vec<Option<Part>> = vec![None; n];
        for (k, members) in parts.iter().enumerate() {
            for &v in members.iter() {
                match labels.get_mut(v) {
                    Some(slot @ None) => *slot = Some(Part::from_index(k)),
                    _ => return Err(PartitionError::BadVertex { vertex: v }),
                }
            }
        }
        if let Some(v) = labels.iter().position(Option::is_none) {
            return Err(PartitionError::BadVertex { vertex: v });
        }
        validate_partition(labels.into_iter().map(Option::unwrap).collect(), n)
    }

    pub fn labels(&self) -> &[Part] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, v: usize) -> Part {
        self.labels[v]
    }

    /// Characteristic 0/1 vector of a part.
    pub fn indicator(&self, part: Part) -> Vec<u8> {
        self.labels.iter().map(|&l| u8::from(l == part)).collect()
    }

    pub fn members(&self, part: Part) -> Vec<usize> {
        (0..self.labels.len()).filter(|&v| self.labels[v] == part).collect()
    }

    /// Part vertex lists ordered by their smallest member, relabelled A, B, C.
    pub fn canonical(&self) -> ThreePartition {
        let mut order: Vec<Part> = Vec::with_capacity(3);
        for &l in &self.labels {
            if !order.contains(&l) {
                order.push(l);
            }
        }
        let labels = self
            .labels
            .iter()
            .map(|l| Part::from_index(order.iter().position(|o| o == l).unwrap()))
            .collect();
        ThreePartition { labels }
    }
}

/// Checks the covering and disjointness conditions (implicit in a label
/// vector) and that each part is nonempty.
pub fn validate_partition(labels: Vec<Part>, n: usize) -> Result<ThreePartition, PartitionError> {
    if labels.len() != n {
        return Err(PartitionError::BadLength { expected: n, got: labels.len() });
    }
    for part in Part::ALL {
        if !labels.contains(&part) {
            return Err(PartitionError::EmptyPart(part));
        }
    }
    Ok(ThreePartition { labels })
}

/// Edges carrying nonzero flux between two parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub from_part: Part,
    pub to_part: Part,
    /// Unordered pairs `(u, v)` with `u` in `from_part`.
    pub edges: Vec<(usize, usize)>,
}

impl Boundary {
    pub fn between(f: &NetFluxField, p: &ThreePartition, from: Part, to: Part) -> Self {
        let mut edges = Vec::new();
        for u in 0..f.n() {
            if p.label(u) != from {
                continue;
            }
            for v in 0..f.n() {
                if p.label(v) == to && f.get(u, v) != 0.0 {
                    edges.push((u, v));
                }
            }
        }
        Boundary { from_part: from, to_part: to, edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// `I_fromᵀ F I_to`: signed net flux from one part into another.
pub fn pair_flux(f: &NetFluxField, p: &ThreePartition, from: Part, to: Part) -> f64 {
    if from == to {
        return 0.0;
    }
    let mut total = 0.0;
    for u in 0..f.n() {
        if p.label(u) != from {
            continue;
        }
        for v in 0..f.n() {
            if p.label(v) == to {
                total += f.get(u, v);
            }
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirculationReport {
    pub circulation: f64,
    /// Fluxes A→B, B→C, C→A.
    pub pairwise_fluxes: [f64; 3],
    pub boundaries: [Boundary; 3],
    /// `|flux| / |boundary|` per pair; zero where the boundary is empty.
    pub density_fluxes: [f64; 3],
    /// Set where the boundary is empty and the density flux is undefined.
    pub density_undefined: [bool; 3],
    /// Minimum density flux over the defined boundaries (0 if none are).
    pub f_min: f64,
    /// Maximum density flux over the defined boundaries (0 if none are).
    pub f_max: f64,
}

/// Circulation, boundaries and density fluxes of a partition.
///
/// Errors with [`PartitionError::LemmaViolation`] if the three cyclic fluxes
/// differ by more than `div_tol`, which only happens for fields that are not
/// divergence-free.
pub fn circulation(
    f: &NetFluxField,
    p: &ThreePartition,
    div_tol: f64,
) -> Result<CirculationReport, PartitionError> {
    if p.len() != f.n() {
        return Err(PartitionError::BadLength { expected: f.n(), got: p.len() });
    }
    let pairs = [(Part::A, Part::B), (Part::B, Part::C), (Part::C, Part::A)];
    let fluxes = pairs.map(|(x, y)| pair_flux(f, p, x, y));
    let spread = fluxes.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - fluxes.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if spread > div_tol {
        return Err(PartitionError::LemmaViolation { fluxes });
    }
    let boundaries = pairs.map(|(x, y)| Boundary::between(f, p, x, y));
    let mut density_fluxes = [0.0; 3];
    let mut density_undefined = [false; 3];
    for k in 0..3 {
        if boundaries[k].is_empty() {
            density_undefined[k] = true;
        } else {
            density_fluxes[k] = fluxes[k].abs() / boundaries[k].len() as f64;
        }
    }
    let defined: Vec<f64> =
        (0..3).filter(|&k| !density_undefined[k]).map(|k| density_fluxes[k]).collect();
    let f_min = defined.iter().copied().reduce(f64::min).unwrap_or(0.0);
    let f_max = defined.iter().copied().reduce(f64::max).unwrap_or(0.0);
    Ok(CirculationReport {
        circulation: fluxes[0].abs(),
        pairwise_fluxes: fluxes,
        boundaries,
        density_fluxes,
        density_undefined,
        f_min,
        f_max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub best: ThreePartition,
    pub value: f64,
    /// Unordered 3-partitions visited; always `S(n, 3)`.
    pub examined: u64,
    /// Partitions that satisfied the connectivity filter (all of them when
    /// the filter is off).
    pub feasible: u64,
}

/// Calls `visit` once per unordered 3-partition of `n` vertices, in
/// lexicographic order of restricted-growth label strings (vertex 0 is
/// always `A`, the first non-`A` vertex is `B`).
pub fn for_each_partition(n: usize, mut visit: impl FnMut(&[Part])) {
    if n < 3 {
        return;
    }
    let mut labels = vec![Part::A; n];
    fn recurse(
        labels: &mut Vec<Part>,
        pos: usize,
        used: usize,
        visit: &mut dyn FnMut(&[Part]),
    ) {
        let n = labels.len();
        // Remaining slots must still be able to introduce the missing parts.
        if 3 - used > n - pos {
            return;
        }
        if pos == n {
            if used == 3 {
                visit(labels);
            }
            return;
        }
        let limit = (used + 1).min(3);
        for k in 0..limit {
            labels[pos] = Part::from_index(k);
            recurse(labels, pos + 1, used.max(k + 1), visit);
        }
    }
    recurse(&mut labels, 1, 1, &mut visit);
}

/// Whether every part induces a connected subgraph of `adjacency`.
pub fn parts_connected(labels: &[Part], adjacency: &[Vec<usize>]) -> bool {
    let n = labels.len();
    let mut seen = vec![false; n];
    let mut roots = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        roots += 1;
        if roots > 3 {
            return false;
        }
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &v in &adjacency[u] {
                if !seen[v] && labels[v] == labels[u] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    roots == 3
}

/// Undirected support graph of a field, as adjacency lists.
pub fn support_adjacency(f: &NetFluxField) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); f.n()];
    for (u, v) in f.support() {
        adj[u].push(v);
        adj[v].push(u);
    }
    adj
}

/// Exhaustive maximal circulation over all 3-partitions.
///
/// With `connected_only`, parts must induce connected subgraphs of the
/// undirected support of `f`. Ties keep the lexicographically smallest label
/// vector.
pub fn brute_force_cmax(
    f: &NetFluxField,
    connected_only: bool,
    max_n: usize,
) -> Result<BruteForceResult, PartitionError> {
    let n = f.n();
    if n > max_n {
        return Err(PartitionError::TooLarge { n, max: max_n });
    }
    if n < 3 {
        return Err(PartitionError::BadLength { expected: 3, got: n });
    }
    let adjacency = support_adjacency(f);
    let dense = f.to_dense();
    let mut best: Option<(Vec<Part>, f64)> = None;
    let mut examined = 0u64;
    let mut feasible = 0u64;
    for_each_partition(n, |labels| {
        examined += 1;
        if connected_only && !parts_connected(labels, &adjacency) {
            return;
        }
        feasible += 1;
        let mut flux = 0.0;
        for u in 0..n {
            if labels[u] != Part::A {
                continue;
            }
            for v in 0..n {
                if labels[v] == Part::B {
                    flux += dense[(u, v)];
                }
            }
        }
        let value = flux.abs();
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((labels.to_vec(), value));
        }
    });
    let (labels, value) = best.ok_or(PartitionError::NoFeasiblePartition)?;
    Ok(BruteForceResult { best: ThreePartition { labels }, value, examined, feasible })
}

/// Stirling number of the second kind `S(n, k)` by the standard recurrence.
pub fn stirling2(n: usize, k: usize) -> u64 {
    let mut row = vec![0u64; k + 1];
    row[0] = 1;
    for _ in 0..n {
        for j in (1..=k).rev() {
            row[j] = j as u64 * row[j] + row[j - 1];
        }
        row[0] = 0;
    }
    row[k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use Part::*;

    fn hexagon() -> NetFluxField {
        let edges: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6, 1.0)).collect();
        NetFluxField::from_edges(6, &edges).unwrap()
    }

    #[test]
    fn validation() {
        assert!(validate_partition(vec![A, B, C, A, B, C], 6).is_ok());
        assert!(validate_partition(vec![A, A, B, B, C, C], 6).is_ok());
        assert_eq!(validate_partition(vec![A; 4], 4), Err(PartitionError::EmptyPart(B)));
        assert_eq!(
            validate_partition(vec![A, B, C], 4),
            Err(PartitionError::BadLength { expected: 4, got: 3 })
        );
        assert!(ThreePartition::from_parts(3, [&[0], &[1], &[1, 2]]).is_err());
        assert!(ThreePartition::from_parts(3, [&[0], &[1], &[]]).is_err());
    }

    #[test]
    fn indicator_vectors_cover_disjointly() {
        let p = validate_partition(vec![A, B, C, A, B, C], 6).unwrap();
        let ia = p.indicator(A);
        let ib = p.indicator(B);
        let ic = p.indicator(C);
        for v in 0..6 {
            assert_eq!(ia[v] + ib[v] + ic[v], 1);
        }
    }

    #[test]
    fn hexagon_pair_fluxes() {
        let f = hexagon();
        let split = validate_partition(vec![A, B, C, A, B, C], 6).unwrap();
        assert_eq!(pair_flux(&f, &split, A, B), 2.0);
        assert_eq!(pair_flux(&f, &split, B, A), -2.0);
        assert_eq!(pair_flux(&f, &split, A, A), 0.0);
        let contiguous = validate_partition(vec![A, A, B, B, C, C], 6).unwrap();
        assert_eq!(pair_flux(&f, &contiguous, A, B), 1.0);
    }

    #[test]
    fn hexagon_circulation_and_density() {
        let f = hexagon();
        let split = validate_partition(vec![A, B, C, A, B, C], 6).unwrap();
        let r = circulation(&f, &split, 1e-9).unwrap();
        assert_eq!(r.circulation, 2.0);
        assert_eq!(r.pairwise_fluxes, [2.0, 2.0, 2.0]);
        for b in &r.boundaries {
            assert_eq!(b.len(), 2);
        }
        assert_eq!(r.density_fluxes, [1.0, 1.0, 1.0]);
        assert_eq!(r.f_min, 1.0);

        let contiguous = validate_partition(vec![A, A, B, B, C, C], 6).unwrap();
        let r = circulation(&f, &contiguous, 1e-9).unwrap();
        assert_eq!(r.circulation, 1.0);
        assert_eq!(r.density_fluxes, [1.0, 1.0, 1.0]);
    }

    #[test]
    fn three_state_circulation() {
        let g = 0.07;
        let f = NetFluxField::from_edges(3, &[(0, 1, -g), (0, 2, g), (1, 2, -g)]).unwrap();
        let p = validate_partition(vec![A, B, C], 3).unwrap();
        let r = circulation(&f, &p, 1e-12).unwrap();
        assert!((r.circulation - g).abs() < 1e-15);
        for d in r.density_fluxes {
            assert!((d - g).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_field_has_undefined_densities() {
        let f = NetFluxField::zeros(4);
        let p = validate_partition(vec![A, B, C, C], 4).unwrap();
        let r = circulation(&f, &p, 1e-9).unwrap();
        assert_eq!(r.circulation, 0.0);
        assert_eq!(r.density_undefined, [true; 3]);
        assert_eq!(r.f_min, 0.0);
    }

    #[test]
    fn divergent_field_violates_equal_fluxes() {
        let f = NetFluxField::from_edges(3, &[(0, 1, 1.0)]).unwrap();
        let p = validate_partition(vec![A, B, C], 3).unwrap();
        assert!(matches!(circulation(&f, &p, 1e-9), Err(PartitionError::LemmaViolation { .. })));
    }

    #[test]
    fn enumeration_matches_stirling() {
        for n in 3..=9 {
            let mut count = 0u64;
            let mut last: Option<Vec<Part>> = None;
            for_each_partition(n, |labels| {
                count += 1;
                assert_eq!(labels[0], A);
                if let Some(prev) = &last {
                    assert!(prev.as_slice() < labels);
                }
                last = Some(labels.to_vec());
            });
            assert_eq!(count, stirling2(n, 3), "n = {n}");
        }
        assert_eq!(stirling2(6, 3), 90);
    }

    #[test]
    fn hexagon_brute_force() {
        let f = hexagon();
        let r = brute_force_cmax(&f, false, DEFAULT_MAX_N).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.examined, 90);
        let r = brute_force_cmax(&f, true, DEFAULT_MAX_N).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.examined, 90);
        assert!(parts_connected(r.best.labels(), &support_adjacency(&f)));
    }

    #[test]
    fn brute_force_size_guard() {
        let f = NetFluxField::zeros(13);
        assert_eq!(
            brute_force_cmax(&f, false, DEFAULT_MAX_N),
            Err(PartitionError::TooLarge { n: 13, max: 12 })
        );
    }

    #[test]
    fn canonical_orders_by_smallest_member() {
        let p = validate_partition(vec![C, A, B, C], 4).unwrap();
        assert_eq!(p.canonical().labels(), &[A, B, C, A]);
    }
}
