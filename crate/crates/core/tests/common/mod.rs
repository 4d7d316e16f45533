#![allow(dead_code)]

use circa::embedding::{
    build_flow_graph, embed_from_coords, triangulate, PlanarEmbedding, TriangulatedGraph,
};
use circa::flowfield::NetFluxField;
use circa::partition::{Part, ThreePartition};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Hub at the origin (vertex 0) and `k` rim vertices on the unit circle.
pub fn wheel(k: usize) -> (Vec<[f64; 2]>, Vec<(usize, usize)>) {
    let mut coords = vec![[0.0, 0.0]];
    let mut edges = Vec::new();
    for i in 0..k {
        let t = std::f64::consts::TAU * i as f64 / k as f64;
        coords.push([t.cos(), t.sin()]);
        edges.push((0, i + 1));
        edges.push((i + 1, (i + 1) % k + 1));
    }
    (coords, edges)
}

/// `rows × cols` lattice with one random diagonal per cell.
pub fn grid(rows: usize, cols: usize, rng: &mut StdRng) -> (Vec<[f64; 2]>, Vec<(usize, usize)>) {
    let id = |r: usize, c: usize| r * cols + c;
    let mut coords = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            coords.push([c as f64, r as f64]);
        }
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
            if r + 1 < rows && c + 1 < cols {
                if rng.gen_bool(0.5) {
                    edges.push((id(r, c), id(r + 1, c + 1)));
                } else {
                    edges.push((id(r, c + 1), id(r + 1, c)));
                }
            }
        }
    }
    (coords, edges)
}

#[derive(Debug, Clone)]
pub struct PlanarInstance {
    pub field: NetFluxField,
    pub coords: Vec<[f64; 2]>,
}

impl PlanarInstance {
    pub fn embedding(&self) -> PlanarEmbedding {
        embed_from_coords(&build_flow_graph(&self.field).unwrap(), &self.coords).unwrap()
    }

    pub fn triangulated(&self, include_outer: bool) -> TriangulatedGraph {
        triangulate(&self.embedding(), include_outer, &[]).unwrap()
    }
}

/// Divergence-free planar field: the curl of random face potentials on a
/// wheel or triangulated grid, outer face held at zero. With probability
/// `tie` a face copies an earlier face's potential, which zeroes the edges
/// between them and leaves non-triangular faces behind.
pub fn random_planar(rng: &mut StdRng, max_n: usize, tie: f64) -> PlanarInstance {
    loop {
        let (coords, edges) = match rng.gen_range(0..3) {
            0 | 1 if max_n >= 5 => wheel(rng.gen_range(4..=(max_n - 1).min(12))),
            _ => {
                let mut shapes = vec![(2, 2), (2, 3)];
                for (r, c) in [(2, 4), (3, 3), (2, 5), (3, 4), (4, 4)] {
                    if r * c <= max_n {
                        shapes.push((r, c));
                    }
                }
                let (r, c) = *shapes.choose(rng).unwrap();
                grid(r, c, rng)
            }
        };
        if coords.len() > max_n {
            continue;
        }
        if let Some(inst) = potential_flux(rng, coords, &edges, tie) {
            return inst;
        }
    }
}

fn potential_flux(
    rng: &mut StdRng,
    coords: Vec<[f64; 2]>,
    edges: &[(usize, usize)],
    tie: f64,
) -> Option<PlanarInstance> {
    let n = coords.len();
    let scaffold: Vec<(usize, usize, f64)> = edges.iter().map(|&(u, v)| (u.min(v), u.max(v), 1.0)).collect();
    let base = NetFluxField::from_edges(n, &scaffold).ok()?;
    let emb = embed_from_coords(&build_flow_graph(&base).ok()?, &coords).ok()?;
    let mut phi = vec![0.0; emb.face_count()];
    for f in 1..phi.len() {
        phi[f] = if f > 1 && rng.gen_bool(tie) {
            phi[rng.gen_range(0..f)]
        } else {
            rng.gen_range(-1.0..1.0)
        };
    }
    let flux: Vec<(usize, usize, f64)> = emb
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| (edge.tail, edge.head, phi[emb.left_face(e)] - phi[emb.right_face(e)]))
        .collect();
    let field = NetFluxField::from_edges(n, &flux).ok()?;
    let g = build_flow_graph(&field).ok()?;
    let emb = embed_from_coords(&g, &coords).ok()?;
    triangulate(&emb, false, &[]).ok()?;
    triangulate(&emb, true, &[]).ok()?;
    Some(PlanarInstance { field, coords })
}

/// Sum of random weighted simple cycles on `n` vertices: antisymmetric and
/// divergence-free, not necessarily planar.
pub fn random_cycle_field(rng: &mut StdRng, n: usize) -> NetFluxField {
    let mut f = NetFluxField::zeros(n);
    let cycles = rng.gen_range(1..=4);
    for _ in 0..cycles {
        let len = rng.gen_range(3..=n);
        let mut vs: Vec<usize> = (0..n).collect();
        vs.shuffle(rng);
        vs.truncate(len);
        let w: f64 = rng.gen_range(0.01..1.0);
        for k in 0..len {
            let (a, b) = (vs[k], vs[(k + 1) % len]);
            f.set(a, b, f.get(a, b) + w);
        }
    }
    f
}

/// `f` plus a random-weight cycle through every vertex in index order.
pub fn with_spanning_cycle(f: &NetFluxField, rng: &mut StdRng) -> NetFluxField {
    let mut out = f.clone();
    let n = f.n();
    let w: f64 = rng.gen_range(0.01..1.0);
    for a in 0..n {
        let b = (a + 1) % n;
        out.set(a, b, out.get(a, b) + w);
    }
    out
}

/// Uniform random 3-partition with all parts nonempty.
pub fn random_partition(rng: &mut StdRng, n: usize) -> ThreePartition {
    loop {
        let labels: Vec<Part> = (0..n).map(|_| Part::from_index(rng.gen_range(0..3))).collect();
        if let Ok(p) = ThreePartition::new(labels, n) {
            return p;
        }
    }
}

/// End faces of `edges` if they form one simple dual path along which
/// `side` always lies on the walker's left.
fn dual_path_ends(
    t: &TriangulatedGraph,
    edges: &[usize],
    labels: &[Part],
    side: Part,
) -> Option<(usize, usize)> {
    if edges.is_empty() {
        return None;
    }
    let m = t.dual.vertex_count();
    let mut degree = vec![0usize; m];
    for &e in edges {
        let d = &t.dual.edges()[e];
        if d.left == d.right {
            return None;
        }
        degree[d.left] += 1;
        degree[d.right] += 1;
    }
    let ends: Vec<usize> = (0..m).filter(|&f| degree[f] == 1).collect();
    if ends.len() != 2 || degree.iter().any(|&d| d > 2) {
        return None;
    }
    for start in [ends[0], ends[1]] {
        let mut used = vec![false; edges.len()];
        let mut here = start;
        let mut steps = 0;
        let mut consistent = true;
        while let Some((k, &e)) = edges.iter().enumerate().find(|&(k, &e)| {
            !used[k] && (t.dual.edges()[e].left == here || t.dual.edges()[e].right == here)
        }) {
            used[k] = true;
            steps += 1;
            let d = &t.dual.edges()[e];
            let pe = &t.embedding.edges()[d.primal];
            // Crossing from the right face to the left face keeps the tail on the left.
            let on_left = if d.right == here { pe.tail } else { pe.head };
            consistent &= labels[on_left] == side;
            here = t.dual.opposite(e, here);
        }
        if steps != edges.len() {
            return None;
        }
        if consistent {
            return Some((ends[0], ends[1]));
        }
    }
    None
}

/// Partitions of the triangulated graph whose three pairwise boundaries are
/// single, consistently oriented dual paths between a common pair of faces. Returns the largest
/// circulation among them and how many there were.
pub fn theta_partition_max(t: &TriangulatedGraph, f: &NetFluxField) -> (f64, usize) {
    let n = t.embedding.n();
    let mut best = 0.0f64;
    let mut count = 0;
    circa::partition::for_each_partition(n, |labels| {
        let pairs = [(Part::A, Part::B), (Part::B, Part::C), (Part::C, Part::A)];
        let mut ends = Vec::new();
        for (x, y) in pairs {
            let crossed: Vec<usize> = t
                .embedding
                .edges()
                .iter()
                .enumerate()
                .filter(|(_, e)| {
                    let (a, b) = (labels[e.tail], labels[e.head]);
                    (a == x && b == y) || (a == y && b == x)
                })
                .map(|(k, _)| k)
                .collect();
            match dual_path_ends(t, &crossed, labels, x) {
                Some((s, u)) => ends.push((s.min(u), s.max(u))),
                None => return,
            }
        }
        if ends[0] != ends[1] || ends[1] != ends[2] {
            return;
        }
        count += 1;
        let p = ThreePartition::new(labels.to_vec(), n).unwrap();
        let c = circa::partition::pair_flux(f, &p, Part::A, Part::B).abs();
        best = best.max(c);
    });
    (best, count)
}

/// Smallest number of dual edges whose removal disconnects the dual, by
/// exhaustive search over face subsets containing face 0.
pub fn dual_min_cut(t: &TriangulatedGraph) -> usize {
    let m = t.dual.vertex_count();
    assert!(m <= 20, "exhaustive cut search is limited to 20 faces");
    let mut best = usize::MAX;
    for mask in 0u32..(1u32 << (m - 1)) {
        let side = |f: usize| f == 0 || (mask >> (f - 1)) & 1 == 1;
        if (1..m).all(side) {
            continue;
        }
        let cut = t.dual.edges().iter().filter(|d| side(d.left) != side(d.right)).count();
        best = best.min(cut);
    }
    best
}
