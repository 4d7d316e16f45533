#![no_main]

use circa::embedding::{build_flow_graph, dual, embed_from_rotation, triangulate};
use circa::flowfield::NetFluxField;
use circa::potential::compute_psi;
use libfuzzer_sys::fuzz_target;

// Byte layout: vertex count, edge count, then (u, v, weight) triples, then
// one byte per neighbour list choosing a rotation of the sorted neighbours,
// with pairs of bytes swapping entries.
fuzz_target!(|data: &[u8]| {
    let mut bytes = data.iter().copied();
    let Some(n) = bytes.next().map(|b| 2 + (b % 10) as usize) else { return };
    let m = bytes.next().map_or(0, |b| (b % 30) as usize);
    let mut edges = Vec::new();
    for _ in 0..m {
        let (Some(u), Some(v), Some(w)) = (bytes.next(), bytes.next(), bytes.next()) else { break };
        edges.push((u as usize % n, v as usize % n, w as f64 / 16.0 - 8.0));
    }
    let Ok(field) = NetFluxField::from_edges(n, &edges) else { return };
    let Ok(g) = build_flow_graph(&field) else { return };
    let mut rotation: Vec<Vec<usize>> = (0..n).map(|v| g.neighbors(v)).collect();
    for list in rotation.iter_mut() {
        list.sort_unstable();
        if let Some(r) = bytes.next() {
            if !list.is_empty() {
                let k = r as usize % list.len();
                list.rotate_left(k);
            }
        }
    }
    while let (Some(a), Some(b)) = (bytes.next(), bytes.next()) {
        let list = &mut rotation[a as usize % n];
        if !list.is_empty() {
            let (i, j) = (b as usize % list.len(), (b >> 4) as usize % list.len());
            list.swap(i, j);
        }
    }
    let Ok(emb) = embed_from_rotation(&g, &rotation, None) else { return };
    assert_eq!(dual(&emb).vertex_count(), emb.face_count());
    for include_outer in [false, true] {
        if let Ok(t) = triangulate(&emb, include_outer, &[]) {
            let _ = compute_psi(&t.dual, 1e-9);
        }
    }
});
