//! Expander wirings of heavy clusters.
//!
//! A cluster of `size` nodes is wired by `D` permutations, each a single
//! cyclic permutation drawn as a random Hamiltonian cycle avoiding the edges
//! of earlier colors. The union is then a simple connected `2D`-regular graph
//! and every color class is a permutation of the nodes. The adjacency
//! second eigenvalue is checked against `2 sqrt(2D - 1) + slack`; failing
//! samples are redrawn.
//!
//! Exposing ports deletes one edge `s_i -> sigma_i(s_i)` per color, with the
//! `2D` endpoints pairwise distinct.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::fiedler_value;
use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, MeasuredGraph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WiringOptions {
    /// Allowed excess of the adjacency second eigenvalue over `2 sqrt(2D - 1)`.
    pub slack: f64,
    pub resample_budget: usize,
    /// Largest cluster solved densely; bigger clusters use the iterative solver.
    pub dense_threshold: usize,
    pub tol: f64,
}

impl Default for WiringOptions {
    fn default() -> Self {
        Self { slack: 0.5, resample_budget: 100, dense_threshold: 256, tol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    /// Second largest adjacency eigenvalue, `2D - lambda_1(L)`.
    pub adjacency_lambda2: f64,
    /// `2 sqrt(2D - 1)`.
    pub ramanujan_bound: f64,
    pub slack: f64,
    /// Combinatorial Laplacian gap and the implied Cheeger lower bound `lambda_1 / 2`.
    pub laplacian_lambda1: f64,
    pub cheeger_lower: f64,
}

/// Deleted edge of color `color`: `out_node = s_i`, `in_node = sigma_i(s_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub color: usize,
    pub out_node: usize,
    pub in_node: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterWiring {
    pub size: usize,
    pub colors: usize,
    /// `permutations[i][t] = sigma_i(t)`.
    pub permutations: Vec<Vec<usize>>,
    /// Empty until [`expose_ports`].
    pub ports: Vec<Port>,
    pub gap_certificate: GapCertificate,
    /// Spectral data of the cluster after port deletion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_deletion: Option<CheegerCertificate>,
    pub resamples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheegerCertificate {
    pub laplacian_lambda1: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ClusterWiring {
    /// Wiring graph with unit measures and weights; edges carry their color.
    /// Port edges are omitted once exposed.
    pub fn graph(&self) -> Result<MeasuredGraph> {
        let mut b = GraphBuilder::with_uniform_measure(self.size, 1.0);
        for (i, sigma) in self.permutations.iter().enumerate() {
            let port = self.ports.iter().find(|p| p.color == i);
            for (t, &s) in sigma.iter().enumerate() {
                if port.is_some_and(|p| p.out_node == t) {
                    continue;
                }
                b.add_colored_edge(t, s, 1.0, i as u32)?;
            }
        }
        b.build()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let g = self.graph().expect("wiring graph is valid");
        (0..self.size).map(|t| g.degree(t)).collect()
    }
}

fn ramanujan_bound(d: usize) -> f64 {
    2.0 * ((2 * d - 1) as f64).sqrt()
}

fn laplacian_gap(g: &MeasuredGraph, opts: &WiringOptions) -> Result<f64> {
    fiedler_value(g, opts.dense_threshold, opts.tol)
}

/// Samples `d` colors on `size` nodes with the default options and the given
/// gap slack.
pub fn sample_wiring(size: usize, d: usize, seed: u64, gap_threshold: f64) -> Result<ClusterWiring> {
    sample_wiring_with(size, d, seed, &WiringOptions { slack: gap_threshold, ..WiringOptions::default() })
}

pub fn sample_wiring_with(size: usize, d: usize, seed: u64, opts: &WiringOptions) -> Result<ClusterWiring> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("wiring needs at least 2 colors, got {d}")));
    }
    if size <= 4 * d {
        return Err(Error::ClusterTooSmall { size, colors: d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = ramanujan_bound(d);
    let mut resamples = 0;
    let mut deficiencies: Vec<String> = Vec::new();
    while resamples <= opts.resample_budget {
        let perms = match random_cycles(size, d, &mut rng, opts.resample_budget - resamples) {
            Ok((p, dead_ends)) => {
                resamples += dead_ends;
                p
            }
            Err(dead_ends) => {
                deficiencies.push(format!("{dead_ends} dead ends while drawing Hamiltonian cycles"));
                break;
            }
        };
        let wiring = ClusterWiring {
            size,
            colors: d,
            permutations: perms,
            ports: Vec::new(),
            gap_certificate: GapCertificate {
                adjacency_lambda2: f64::NAN,
                ramanujan_bound: bound,
                slack: opts.slack,
                laplacian_lambda1: f64::NAN,
                cheeger_lower: f64::NAN,
            },
            post_deletion: None,
            resamples,
        };
        let g = wiring.graph()?;
        if g.edge_count() != size * d || !g.is_connected() {
            deficiencies.push(String::from("union not simple or not connected"));
            resamples += 1;
            continue;
        }
        let lambda1 = laplacian_gap(&g, opts)?;
        let lambda2 = 2.0 * d as f64 - lambda1;
        if lambda2 <= bound + opts.slack {
            let mut wiring = wiring;
            wiring.gap_certificate.adjacency_lambda2 = lambda2;
            wiring.gap_certificate.laplacian_lambda1 = lambda1;
            wiring.gap_certificate.cheeger_lower = lambda1 / 2.0;
            return Ok(wiring);
        }
        deficiencies.push(format!("adjacency lambda_2 = {lambda2:.6} exceeds {:.6}", bound + opts.slack));
        resamples += 1;
    }
    Err(Error::ResampleBudgetExhausted { budget: opts.resample_budget, deficiencies })
}

/// Draws `d` edge-disjoint Hamiltonian cycles as cyclic permutations.
/// Returns the permutations and the number of dead-end restarts, or the
/// restart count when `budget` is exceeded.
fn random_cycles(size: usize, d: usize, rng: &mut ChaCha8Rng, budget: usize) -> core::result::Result<(Vec<Vec<usize>>, usize), usize> {
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::with_capacity(2 * d); size];
    let mut perms = Vec::with_capacity(d);
    let mut dead_ends = 0;
    let mut color = 0;
    while color < d {
        match random_cycle(size, &adjacency, rng) {
            Some(order) => {
                let mut sigma = vec![0; size];
                for k in 0..size {
                    let (a, b) = (order[k], order[(k + 1) % size]);
                    sigma[a] = b;
                    adjacency[a].push(b);
                    adjacency[b].push(a);
                }
                perms.push(sigma);
                color += 1;
            }
            None => {
                dead_ends += 1;
                if dead_ends > budget {
                    return Err(dead_ends);
                }
            }
        }
    }
    Ok((perms, dead_ends))
}

fn random_cycle(size: usize, used: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..size).collect();
    let start = remaining.swap_remove(rng.random_range(0..size));
    let mut order = Vec::with_capacity(size);
    order.push(start);
    let mut current = start;
    while !remaining.is_empty() {
        let allowed = |v: usize| !used[current].contains(&v);
        let mut pick = None;
        for _ in 0..8 {
            let k = rng.random_range(0..remaining.len());
            if allowed(remaining[k]) {
                pick = Some(k);
                break;
            }
        }
        if pick.is_none() {
            let options: Vec<usize> = (0..remaining.len()).filter(|&k| allowed(remaining[k])).collect();
            if options.is_empty() {
                return None;
            }
            pick = Some(options[rng.random_range(0..options.len())]);
        }
        current = remaining.swap_remove(pick.unwrap());
        order.push(current);
    }
    if used[current].contains(&start) {
        return None;
    }
    Some(order)
}

/// Deletes one edge per color with pairwise distinct endpoints, scanning
/// tails in seeded random order.
pub fn expose_ports(w: &ClusterWiring, seed: u64) -> Result<ClusterWiring> {
    expose_ports_with(w, seed, &WiringOptions::default())
}

pub fn expose_ports_with(w: &ClusterWiring, seed: u64, opts: &WiringOptions) -> Result<ClusterWiring> {
    if !w.ports.is_empty() {
        return Err(Error::PortExposure(String::from("ports already exposed")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = vec![false; w.size];
    let mut ports = Vec::with_capacity(w.colors);
    for (i, sigma) in w.permutations.iter().enumerate() {
        let mut order: Vec<usize> = (0..w.size).collect();
        order.shuffle(&mut rng);
        let s = order
            .into_iter()
            .find(|&s| !taken[s] && !taken[sigma[s]])
            .ok_or_else(|| Error::PortExposure(format!("no free edge of color {i}")))?;
        taken[s] = true;
        taken[sigma[s]] = true;
        ports.push(Port { color: i, out_node: s, in_node: sigma[s] });
    }
    let mut out = ClusterWiring { ports, ..w.clone() };
    let g = out.graph()?;
    if !g.is_connected() {
        return Err(Error::PortExposure(String::from("cluster disconnected after port deletion")));
    }
    let (lower, upper) = cheeger_bounds_with(&g, opts)?;
    out.post_deletion = Some(CheegerCertificate { laplacian_lambda1: 2.0 * lower, lower, upper });
    Ok(out)
}

/// Largest graph accepted by [`cheeger_exact`].
pub const CHEEGER_EXACT_MAX: usize = 20;

/// `min |boundary(S)| / |S|` over nonempty `S` with `|S| <= n / 2`, counting
/// edges without weights. Subsets are visited in Gray-code order.
pub fn cheeger_exact(g: &MeasuredGraph) -> Result<f64> {
    let n = g.vertex_count();
    if n > CHEEGER_EXACT_MAX {
        return Err(Error::CheegerTooLarge { vertices: n, max: CHEEGER_EXACT_MAX });
    }
    if n < 2 {
        return Err(Error::InvalidVertexCount { n, reason: "Cheeger constant needs at least 2 vertices" });
    }
    let mut inside = vec![false; n];
    let mut size = 0usize;
    let mut boundary = 0i64;
    let mut best = f64::INFINITY;
    for step in 1u64..(1u64 << n) {
        let v = step.trailing_zeros() as usize;
        let inner = g.neighbors(v).iter().filter(|&&(u, _)| inside[u]).count() as i64;
        let deg = g.degree(v) as i64;
        if inside[v] {
            boundary -= deg - 2 * inner;
            size -= 1;
        } else {
            boundary += deg - 2 * inner;
            size += 1;
        }
        inside[v] = !inside[v];
        if 2 * size <= n {
            best = best.min(boundary as f64 / size as f64);
        }
    }
    Ok(best)
}

/// `(lambda_1 / 2, sqrt(lambda_1 (2 d_max - lambda_1)))` from the
/// combinatorial Laplacian. On two or three vertices the upper value is the
/// minimum degree.
pub fn cheeger_bounds(g: &MeasuredGraph) -> Result<(f64, f64)> {
    cheeger_bounds_with(g, &WiringOptions::default())
}

fn cheeger_bounds_with(g: &MeasuredGraph, opts: &WiringOptions) -> Result<(f64, f64)> {
    let n = g.vertex_count();
    if n < 2 {
        return Err(Error::InvalidVertexCount { n, reason: "Cheeger constant needs at least 2 vertices" });
    }
    let unit = g.combinatorial();
    unit.require_connected()?;
    let lambda1 = laplacian_gap(&unit, opts)?;
    let upper = if n <= 3 {
        (0..n).map(|v| unit.degree(v)).min().unwrap() as f64
    } else {
        (lambda1 * (2.0 * unit.max_degree() as f64 - lambda1)).max(0.0).sqrt()
    };
    Ok((lambda1 / 2.0, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::spectrum_dense;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn adjacency_lambda2_oracle(g: &MeasuredGraph) -> f64 {
        let n = g.vertex_count();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for e in g.edges() {
            a[(e.u, e.v)] = 1.0;
            a[(e.v, e.u)] = 1.0;
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        ev[1]
    }

    #[test]
    fn wiring_64_d2() {
        for seed in 0..5 {
            let w = sample_wiring(64, 2, seed, 0.5).unwrap();
            let g = w.graph().unwrap();
            assert_eq!(g.edge_count(), 128);
            assert!(g.is_connected());
            assert!(w.degrees().iter().all(|&d| d == 4));
            let l2 = adjacency_lambda2_oracle(&g);
            assert!((l2 - w.gap_certificate.adjacency_lambda2).abs() < 1e-9);
            assert!(l2 <= 2.0 * 3f64.sqrt() + 0.5);
        }
    }

    #[test]
    fn color_classes_are_permutations() {
        let w = sample_wiring(50, 3, 4, 0.5).unwrap();
        for sigma in &w.permutations {
            let mut hits = [0; 50];
            sigma.iter().for_each(|&s| hits[s] += 1);
            assert!(hits.iter().all(|&h| h == 1));
            assert!(sigma.iter().enumerate().all(|(t, &s)| t != s));
        }
    }

    #[test]
    fn wiring_rejects_small_clusters() {
        assert_eq!(sample_wiring(8, 2, 0, 0.5), Err(Error::ClusterTooSmall { size: 8, colors: 2 }));
        assert!(sample_wiring(100, 1, 0, 0.5).is_err());
    }

    #[test]
    fn wiring_is_deterministic() {
        assert_eq!(sample_wiring(64, 2, 9, 0.5).unwrap(), sample_wiring(64, 2, 9, 0.5).unwrap());
    }

    #[test]
    fn ports_are_disjoint_and_keep_connectivity() {
        let w = sample_wiring(64, 2, 1, 0.5).unwrap();
        let p = expose_ports(&w, 5).unwrap();
        let mut ends: Vec<usize> = p.ports.iter().flat_map(|q| [q.out_node, q.in_node]).collect();
        ends.sort();
        ends.dedup();
        assert_eq!(ends.len(), 4);
        for q in &p.ports {
            assert_eq!(w.permutations[q.color][q.out_node], q.in_node);
        }
        let degrees = p.degrees();
        assert_eq!(degrees.iter().filter(|&&d| d == 3).count(), 4);
        assert_eq!(degrees.iter().filter(|&&d| d == 4).count(), 60);
        assert!(p.graph().unwrap().is_connected());
        assert_eq!(p, expose_ports(&w, 5).unwrap());
        assert!(expose_ports(&p, 5).is_err());
    }

    #[test]
    fn cheeger_small_graphs() {
        assert_eq!(cheeger_exact(&MeasuredGraph::cycle(4).unwrap()).unwrap(), 1.0);
        assert_eq!(cheeger_exact(&MeasuredGraph::complete(4, 1.0, 1.0).unwrap()).unwrap(), 2.0);
        let split = MeasuredGraph::new(vec![1.0; 4], [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(cheeger_exact(&split).unwrap(), 0.0);
        assert!(cheeger_exact(&MeasuredGraph::cycle(21).unwrap()).is_err());
    }

    #[test]
    fn cheeger_bounds_known() {
        let (lo, hi) = cheeger_bounds(&MeasuredGraph::complete(4, 1.0, 1.0).unwrap()).unwrap();
        assert!((lo - 2.0).abs() < 1e-12 && (hi - 8f64.sqrt()).abs() < 1e-12);
        let (lo, _) = cheeger_bounds(&MeasuredGraph::cycle(4).unwrap()).unwrap();
        assert!((lo - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cheeger_sandwich_on_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut graphs = vec![
            MeasuredGraph::complete(2, 1.0, 1.0).unwrap(),
            MeasuredGraph::complete(3, 1.0, 1.0).unwrap(),
            MeasuredGraph::new(vec![1.0; 3], [(0, 1, 1.0), (1, 2, 1.0)]).unwrap(),
        ];
        for n in [5, 8, 12, 16, 20] {
            graphs.push(MeasuredGraph::cycle(n).unwrap());
            graphs.push(MeasuredGraph::complete(n, 1.0, 1.0).unwrap());
        }
        for _ in 0..20 {
            let n = rng.random_range(4..=14);
            let mut edges: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
            for _ in 0..n {
                edges.push((rng.random_range(0..n), rng.random_range(0..n), 1.0));
            }
            graphs.push(MeasuredGraph::new(vec![1.0; n], edges).unwrap().combinatorial());
        }
        for g in &graphs {
            let exact = cheeger_exact(g).unwrap();
            let (lo, hi) = cheeger_bounds(g).unwrap();
            assert!(lo <= exact + 1e-12 && exact <= hi + 1e-12, "{lo} <= {exact} <= {hi} fails on n = {}", g.vertex_count());
        }
        let eig = spectrum_dense(&graphs[0], false).unwrap();
        assert!((eig.eigenvalues[1] - 2.0).abs() < 1e-12);
    }
}
