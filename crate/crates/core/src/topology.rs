//! Combinatorial scaffolding: Hamiltonian decompositions of `K_N` and genus
//! bookkeeping for surface dual graphs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MeasuredGraph;

/// `D = (N - 1) / 2` edge-disjoint directed Hamiltonian cycles covering
/// `E(K_N)`. Color `c` is the index of its cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ColorRecord", into = "ColorRecord")]
pub struct ColorAssignment {
    n: usize,
    cycles: Vec<Vec<usize>>,
    reversed: Vec<bool>,
    /// `color[u * n + v]`, `usize::MAX` on the diagonal.
    color: Vec<usize>,
    /// `next[c * n + v]` is the successor of `v` along cycle `c`.
    next: Vec<usize>,
    prev: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorRecord {
    pub n: usize,
    pub cycles: Vec<Vec<usize>>,
    /// Whether each cycle was reversed relative to its rotated starter.
    #[serde(default)]
    pub reversed: Vec<bool>,
}

impl TryFrom<ColorRecord> for ColorAssignment {
    type Error = Error;

    fn try_from(r: ColorRecord) -> Result<Self> {
        let reversed = if r.reversed.is_empty() { vec![false; r.cycles.len()] } else { r.reversed };
        Self::from_cycles(r.n, r.cycles, reversed)
    }
}

impl From<ColorAssignment> for ColorRecord {
    fn from(c: ColorAssignment) -> Self {
        ColorRecord { n: c.n, cycles: c.cycles, reversed: c.reversed }
    }
}

impl ColorAssignment {
    /// Validates that `cycles` is a directed Hamiltonian decomposition of `K_n`.
    pub fn from_cycles(n: usize, cycles: Vec<Vec<usize>>, reversed: Vec<bool>) -> Result<Self> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::InvalidVertexCount { n, reason: "a Hamiltonian decomposition needs odd N >= 3" });
        }
        let d = (n - 1) / 2;
        if cycles.len() != d || reversed.len() != d {
            return Err(Error::InconsistentSurface(format!("K_{n} needs {d} cycles, got {}", cycles.len())));
        }
        let mut color = vec![usize::MAX; n * n];
        let mut next = vec![usize::MAX; d * n];
        let mut prev = vec![usize::MAX; d * n];
        for (c, cycle) in cycles.iter().enumerate() {
            if cycle.len() != n {
                return Err(Error::InconsistentSurface(format!("cycle {c} has length {}, expected {n}", cycle.len())));
            }
            for (k, &a) in cycle.iter().enumerate() {
                let b = cycle[(k + 1) % n];
                if a >= n || b >= n || a == b {
                    return Err(Error::InconsistentSurface(format!("cycle {c} has invalid step {a} -> {b}")));
                }
                if next[c * n + a] != usize::MAX {
                    return Err(Error::InconsistentSurface(format!("cycle {c} visits {a} twice")));
                }
                if color[a * n + b] != usize::MAX {
                    return Err(Error::InconsistentSurface(format!("edge {{{a}, {b}}} used by colors {} and {c}", color[a * n + b])));
                }
                color[a * n + b] = c;
                color[b * n + a] = c;
                next[c * n + a] = b;
                prev[c * n + b] = a;
            }
        }
        Ok(Self { n, cycles, reversed, color, next, prev })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn color_count(&self) -> usize {
        self.cycles.len()
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    pub fn reversed(&self) -> &[bool] {
        &self.reversed
    }

    pub fn edge_color(&self, u: usize, v: usize) -> Option<usize> {
        if u >= self.n || v >= self.n || u == v {
            return None;
        }
        Some(self.color[u * self.n + v])
    }

    pub fn successor(&self, v: usize, color: usize) -> usize {
        self.next[color * self.n + v]
    }

    pub fn predecessor(&self, v: usize, color: usize) -> usize {
        self.prev[color * self.n + v]
    }

    /// Every edge of `K_N` once, as `(tail, head, color)` along its cycle.
    pub fn directed_edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.n * self.color_count());
        for (c, cycle) in self.cycles.iter().enumerate() {
            for k in 0..self.n {
                out.push((cycle[k], cycle[(k + 1) % self.n], c));
            }
        }
        out
    }
}

/// Walecki decomposition of `K_N`, `N = 2D + 1`. Vertex `N - 1` plays the
/// role of the point at infinity and the rest are `Z_{2D}`; the starter
/// zigzag `0, 1, 2D-1, 2, 2D-2, ..., D` closed through infinity is rotated
/// `D` times. Each cycle is reversed or not by a seeded coin.
pub fn walecki_decomposition(n: usize, orientation_seed: u64) -> Result<ColorAssignment> {
    if n < 5 || n.is_multiple_of(2) {
        return Err(Error::InvalidVertexCount { n, reason: "Walecki decomposition needs odd N >= 5" });
    }
    let d = (n - 1) / 2;
    let m = 2 * d;
    let mut starter = Vec::with_capacity(m);
    starter.push(0);
    for k in 1..=d {
        starter.push(k);
        if k < d {
            starter.push(m - k);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(orientation_seed);
    let mut cycles = Vec::with_capacity(d);
    let mut reversed = Vec::with_capacity(d);
    for j in 0..d {
        let mut cycle = Vec::with_capacity(n);
        cycle.push(n - 1);
        cycle.extend(starter.iter().map(|&x| (x + j) % m));
        let flip = rng.random_bool(0.5);
        if flip {
            cycle[1..].reverse();
        }
        cycles.push(cycle);
        reversed.push(flip);
    }
    ColorAssignment::from_cycles(n, cycles, reversed)
}

/// `1 + N(N - 3) / 2`, the genus of the surface built over `K_N` from
/// genus-zero pieces.
pub fn genus_complete_construction(n: usize) -> Result<u64> {
    if n < 4 {
        return Err(Error::InvalidVertexCount { n, reason: "genus formula needs N >= 4" });
    }
    let n = n as u64;
    Ok(1 + n * (n - 3) / 2)
}

/// Dual-graph description of a surface cut along simple closed geodesics:
/// vertex measures are the piece areas, edge weights the base collar
/// weights, and each piece carries its own genus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceModel {
    pub dual_graph: MeasuredGraph,
    pub vertex_genera: Vec<u32>,
}

impl SurfaceModel {
    pub fn new(dual_graph: MeasuredGraph, vertex_genera: Vec<u32>) -> Result<Self> {
        if vertex_genera.len() != dual_graph.vertex_count() {
            return Err(Error::DimensionMismatch { expected: dual_graph.vertex_count(), got: vertex_genera.len() });
        }
        Ok(Self { dual_graph, vertex_genera })
    }

    pub fn edge_base_weights(&self) -> Vec<f64> {
        self.dual_graph.edges().iter().map(|e| e.weight).collect()
    }

    /// Genus-zero pieces of area `area` over `K_N` with the given weights
    /// (one per pair, lexicographic order).
    pub fn complete(n: usize, area: f64, weights: &[f64]) -> Result<Self> {
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        if weights.len() != edges.len() {
            return Err(Error::DimensionMismatch { expected: edges.len(), got: weights.len() });
        }
        let g = MeasuredGraph::new(vec![area; n], edges.into_iter().zip(weights).map(|((u, v), &w)| (u, v, w)))?;
        Self::new(g, vec![0; n])
    }

    /// Three-piece chain: one-holed torus, two-holed torus, one-holed torus,
    /// with areas `(2 pi, 4 pi, 2 pi)`.
    pub fn torus_chain(w12: f64, w23: f64) -> Result<Self> {
        Self::new(crate::inverse::p3_graph(w12, w23)?, vec![1, 1, 1])
    }
}

/// `gamma = 1 - (sum_v chi(X_v)) / 2` with `chi(X_v) = 2 - 2 g_v - deg(v)`.
pub fn euler_genus_of_dual(s: &SurfaceModel) -> Result<u64> {
    let g = &s.dual_graph;
    if s.vertex_genera.len() != g.vertex_count() {
        return Err(Error::DimensionMismatch { expected: g.vertex_count(), got: s.vertex_genera.len() });
    }
    g.require_connected()?;
    let chi: i64 = (0..g.vertex_count()).map(|v| 2 - 2 * s.vertex_genera[v] as i64 - g.degree(v) as i64).sum();
    if chi % 2 != 0 {
        return Err(Error::InconsistentSurface(format!("total Euler characteristic {chi} is odd")));
    }
    let genus = 1 - chi / 2;
    if genus < 0 {
        return Err(Error::InconsistentSurface(format!("Euler characteristic {chi} gives negative genus")));
    }
    Ok(genus as u64)
}

/// Total Euler characteristic of the pieces.
pub fn euler_characteristic(s: &SurfaceModel) -> i64 {
    let g = &s.dual_graph;
    (0..g.vertex_count()).map(|v| 2 - 2 * s.vertex_genera[v] as i64 - g.degree(v) as i64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    fn check_decomposition(ca: &ColorAssignment) {
        let n = ca.vertex_count();
        let mut seen = BTreeSet::new();
        for (a, b, c) in ca.directed_edges() {
            assert!(seen.insert((a.min(b), a.max(b))), "edge {a}-{b} repeated");
            assert_eq!(ca.edge_color(a, b), Some(c));
            assert_eq!(ca.successor(a, c), b);
            assert_eq!(ca.predecessor(b, c), a);
        }
        let all: BTreeSet<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        assert_eq!(seen, all);
        for c in 0..ca.color_count() {
            let mut outs = vec![0; n];
            let mut ins = vec![0; n];
            for (a, b, col) in ca.directed_edges() {
                if col == c {
                    outs[a] += 1;
                    ins[b] += 1;
                }
            }
            assert!(outs.iter().chain(&ins).all(|&d| d == 1));
        }
    }

    #[test]
    fn walecki_small() {
        for n in [5, 7, 9, 11] {
            for seed in 0..4 {
                let ca = walecki_decomposition(n, seed).unwrap();
                assert_eq!(ca.color_count(), (n - 1) / 2);
                check_decomposition(&ca);
            }
        }
        assert_eq!(walecki_decomposition(5, 0).unwrap().directed_edges().len(), 10);
    }

    #[test]
    fn walecki_rejects_even_and_small() {
        assert!(walecki_decomposition(4, 0).is_err());
        assert!(walecki_decomposition(3, 0).is_err());
    }

    #[test]
    fn orientation_is_seeded() {
        let a = walecki_decomposition(9, 17).unwrap();
        assert_eq!(a, walecki_decomposition(9, 17).unwrap());
        let flips: BTreeSet<Vec<bool>> = (0..16).map(|s| walecki_decomposition(9, s).unwrap().reversed().to_vec()).collect();
        assert!(flips.len() > 1);
    }

    #[test]
    fn rejects_overlapping_cycles() {
        let cycles = vec![vec![0, 1, 2, 3, 4], vec![0, 1, 3, 2, 4]];
        assert!(ColorAssignment::from_cycles(5, cycles, vec![false, false]).is_err());
    }

    #[test]
    fn genus_formula() {
        assert_eq!(genus_complete_construction(4).unwrap(), 3);
        assert_eq!(genus_complete_construction(5).unwrap(), 6);
        assert_eq!(genus_complete_construction(6).unwrap(), 10);
        assert!(genus_complete_construction(3).is_err());
    }

    #[test]
    fn genus_by_euler_matches_formula() {
        for n in 4..=10 {
            let s = SurfaceModel::complete(n, 1.0, &vec![1.0; n * (n - 1) / 2]).unwrap();
            assert_eq!(euler_genus_of_dual(&s).unwrap(), genus_complete_construction(n).unwrap());
        }
    }

    #[test]
    fn torus_chain_genus_three() {
        let s = SurfaceModel::torus_chain(1.0, 1.0).unwrap();
        assert_eq!(euler_characteristic(&s), -4);
        assert_eq!(euler_genus_of_dual(&s).unwrap(), 3);
    }

    #[test]
    fn closed_piece() {
        let s = SurfaceModel::new(MeasuredGraph::new(vec![1.0], []).unwrap(), vec![2]).unwrap();
        assert_eq!(euler_genus_of_dual(&s).unwrap(), 2);
    }

    #[test]
    fn sphere_trees_have_genus_zero() {
        let tree = MeasuredGraph::new(vec![1.0; 3], [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(euler_genus_of_dual(&SurfaceModel::new(tree, vec![0, 0, 0]).unwrap()).unwrap(), 0);
    }

    #[test]
    fn disconnected_dual_rejected() {
        let g = MeasuredGraph::new(vec![1.0; 2], []).unwrap();
        assert!(euler_genus_of_dual(&SurfaceModel::new(g, vec![1, 1]).unwrap()).is_err());
    }
}
