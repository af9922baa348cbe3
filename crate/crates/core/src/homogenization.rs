//! Blocks, corridors and the assembled heavy-vertex network.
//!
//! A [`BlockModel`] is a small port graph: for every color `j` it has an
//! in-node, an out-node and a port conductance `c_j`. Gluing the color-`j`
//! face of one block to the next is the edge `out_j -> in_j'` with weight
//! `c_j`; sealing a face on its own block is the edge `out_j -> in_j`, a
//! dropped self-loop when the two nodes coincide.
//!
//! The cell problem for color `i` seals every other color and links the
//! out-port to the in-port of the next period with a unit potential shift:
//!
//! ```text
//! E(chi) = sum_internal w (chi_a - chi_b)^2 + sum_{j != i} c_j (chi_out_j - chi_in_j)^2
//!        + c_i (chi_out_i - chi_in_i - 1)^2,      chi(in_i) = 0,
//! ```
//!
//! and `C_i = min E`. A chain of `K` periods between clamped ends `a`, `b`
//! (with one extra port edge) has minimal energy `C_i (a - b)^2 / (K + C_i / c_i)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expander::{expose_ports_with, sample_wiring_with, ClusterWiring, WiringOptions};
use crate::graph::{GraphBuilder, MeasuredGraph};
use crate::inverse::WeightSolution;
use crate::linalg::solve_spd;
use crate::topology::ColorAssignment;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockPort {
    pub in_node: usize,
    pub out_node: usize,
    pub conductance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockModel {
    pub measures: Vec<f64>,
    pub edges: Vec<(usize, usize, f64)>,
    /// One port per color.
    pub ports: Vec<BlockPort>,
}

impl BlockModel {
    pub fn new(measures: Vec<f64>, edges: Vec<(usize, usize, f64)>, ports: Vec<BlockPort>) -> Result<Self> {
        let b = Self { measures, edges, ports };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.internal_graph()?;
        g.require_connected()?;
        if self.ports.is_empty() {
            return Err(Error::InvalidParameter(String::from("block has no ports")));
        }
        for (j, p) in self.ports.iter().enumerate() {
            for vertex in [p.in_node, p.out_node] {
                if vertex >= self.node_count() {
                    return Err(Error::VertexOutOfRange { vertex, count: self.node_count() });
                }
            }
            if !(p.conductance > 0.0) || !p.conductance.is_finite() {
                return Err(Error::InvalidParameter(format!("port conductance {} of color {j} must be positive", p.conductance)));
            }
        }
        Ok(())
    }

    /// One node of measure `volume` carrying every port with unit conductance.
    pub fn single_node(colors: usize, volume: f64) -> Result<Self> {
        let port = BlockPort { in_node: 0, out_node: 0, conductance: 1.0 };
        Self::new(vec![volume], Vec::new(), vec![port; colors])
    }

    /// Four nodes `0 - {1, 2} - 3` with unequal rungs. Every color enters at
    /// node 0 and leaves at node 3.
    pub fn diamond(colors: usize, volume: f64) -> Result<Self> {
        let q = volume / 4.0;
        let edges = vec![(0, 1, 1.0), (0, 2, 2.0), (1, 3, 3.0), (2, 3, 1.0), (1, 2, 0.5)];
        let ports = (0..colors).map(|j| BlockPort { in_node: 0, out_node: 3, conductance: 1.0 + 0.5 * j as f64 }).collect();
        Self::new(vec![q; 4], edges, ports)
    }

    pub fn node_count(&self) -> usize {
        self.measures.len()
    }

    pub fn colors(&self) -> usize {
        self.ports.len()
    }

    pub fn volume(&self) -> f64 {
        self.measures.iter().sum()
    }

    pub fn internal_graph(&self) -> Result<MeasuredGraph> {
        MeasuredGraph::new(self.measures.clone(), self.edges.iter().copied())
    }

    fn check_color(&self, color: usize) -> Result<()> {
        if color >= self.colors() {
            return Err(Error::InvalidParameter(format!("color {color} out of range for a block with {} ports", self.colors())));
        }
        Ok(())
    }

    /// Adds one copy at `offset` with every color except `open` sealed.
    fn add_sealed_copy(&self, b: &mut GraphBuilder, offset: usize, open: Option<usize>) -> Result<()> {
        for &(u, v, w) in &self.edges {
            b.add_edge(offset + u, offset + v, w)?;
        }
        for (j, p) in self.ports.iter().enumerate() {
            if Some(j) != open {
                b.add_edge(offset + p.out_node, offset + p.in_node, p.conductance)?;
            }
        }
        Ok(())
    }

    /// Adds one copy at `offset` with internal edges only.
    fn add_open_copy(&self, b: &mut GraphBuilder, offset: usize) -> Result<()> {
        for &(u, v, w) in &self.edges {
            b.add_edge(offset + u, offset + v, w)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSolution {
    pub color: usize,
    /// Potential on one period with `chi(in_node) = 0`.
    pub chi: Vec<f64>,
    /// Minimal energy per period.
    pub conductance: f64,
}

impl CellSolution {
    /// Jump across the shifted port edge, `chi(in) + 1 - chi(out)`.
    pub fn port_drop(&self, b: &BlockModel) -> f64 {
        let p = b.ports[self.color];
        self.chi[p.in_node] + 1.0 - self.chi[p.out_node]
    }
}

/// Minimizes the one-period energy for `color`.
pub fn effective_conductance(b: &BlockModel, color: usize) -> Result<CellSolution> {
    b.check_color(color)?;
    let n = b.node_count();
    let port = b.ports[color];
    let mut builder = GraphBuilder::new(b.measures.clone());
    b.add_sealed_copy(&mut builder, 0, Some(color))?;
    builder.add_edge(port.out_node, port.in_node, port.conductance)?;
    let g = builder.build()?;
    let (_, components) = g.components();
    if components != 1 {
        return Err(Error::SingularSystem(format!("sealed period for color {color} has {components} components")));
    }
    // Expanding the shifted term gives Q chi = rhs with rhs = c (e_out - e_in)
    // and E = c - rhs . chi at the minimizer.
    let mut rhs = vec![0.0; n];
    rhs[port.out_node] += port.conductance;
    rhs[port.in_node] -= port.conductance;
    let chi = solve_grounded(&g, &rhs, port.in_node)?;
    let conductance = port.conductance - rhs.iter().zip(&chi).map(|(r, x)| r * x).sum::<f64>();
    if !(conductance > 0.0) {
        return Err(Error::SingularSystem(format!("non-positive cell conductance {conductance}")));
    }
    Ok(CellSolution { color, chi, conductance })
}

/// Solves `Q x = rhs` on a connected graph with `x(ground) = 0`.
fn solve_grounded(g: &MeasuredGraph, rhs: &[f64], ground: usize) -> Result<Vec<f64>> {
    let n = g.vertex_count();
    let free: Vec<usize> = (0..n).filter(|&v| v != ground).collect();
    let mut local = vec![usize::MAX; n];
    for (k, &v) in free.iter().enumerate() {
        local[v] = k;
    }
    let mut x = vec![0.0; n];
    if free.is_empty() {
        return Ok(x);
    }
    let mut a = DMatrix::<f64>::zeros(free.len(), free.len());
    for (k, &v) in free.iter().enumerate() {
        a[(k, k)] = g.weighted_degree(v);
        for &(u, w) in g.neighbors(v) {
            if local[u] != usize::MAX {
                a[(k, local[u])] -= w;
            }
        }
    }
    let b: Vec<f64> = free.iter().map(|&v| rhs[v]).collect();
    let y = solve_spd(a, &b)?;
    for (k, &v) in free.iter().enumerate() {
        x[v] = y[k];
    }
    Ok(x)
}

/// Layout of a clamped corridor: node 0 is the left end, node 1 the right
/// end, and block `k` occupies `2 + k * nb .. 2 + (k + 1) * nb`.
pub fn corridor_graph(b: &BlockModel, color: usize, k: usize) -> Result<MeasuredGraph> {
    b.check_color(color)?;
    if k == 0 {
        return Err(Error::InvalidParameter(String::from("corridor needs at least one block")));
    }
    let nb = b.node_count();
    let port = b.ports[color];
    let mut measures = vec![b.volume(), b.volume()];
    for _ in 0..k {
        measures.extend_from_slice(&b.measures);
    }
    let mut builder = GraphBuilder::new(measures);
    let at = |blk: usize, node: usize| 2 + blk * nb + node;
    for blk in 0..k {
        b.add_sealed_copy(&mut builder, 2 + blk * nb, Some(color))?;
    }
    builder.add_edge(0, at(0, port.in_node), port.conductance)?;
    for blk in 1..k {
        builder.add_edge(at(blk - 1, port.out_node), at(blk, port.in_node), port.conductance)?;
    }
    builder.add_edge(at(k - 1, port.out_node), 1, port.conductance)?;
    builder.build()
}

/// Exact minimal energy of the `K`-block corridor with ends clamped to `a`
/// and `b_val`, and the potential of every block node (block-major order).
pub fn corridor_min_energy(b: &BlockModel, color: usize, k: usize, a: f64, b_val: f64) -> Result<(f64, Vec<f64>)> {
    let g = corridor_graph(b, color, k)?;
    let n = g.vertex_count();
    // Ground the right end and shift: x = u - b_val, x(left) = a - b_val.
    let gap = a - b_val;
    let mut rhs = vec![0.0; n];
    for &(v, w) in g.neighbors(0) {
        rhs[v] += w * gap;
    }
    let interior: Vec<usize> = (2..n).collect();
    let mut a_mat = DMatrix::<f64>::zeros(n - 2, n - 2);
    for (r, &v) in interior.iter().enumerate() {
        a_mat[(r, r)] = g.weighted_degree(v);
        for &(u, w) in g.neighbors(v) {
            if u >= 2 {
                a_mat[(r, u - 2)] -= w;
            }
        }
    }
    let rhs_int: Vec<f64> = interior.iter().map(|&v| rhs[v]).collect();
    let x = solve_spd(a_mat, &rhs_int)?;
    let mut full = vec![0.0; n];
    full[0] = gap;
    full[2..].copy_from_slice(&x);
    let energy = g.dirichlet_energy(&full)?;
    Ok((energy, x.iter().map(|v| v + b_val).collect()))
}

/// `C_i (a - b)^2 / (K + C_i / c_i)`: `K` periods in series plus one port edge.
pub fn corridor_energy_closed_form(cell: &CellSolution, port_conductance: f64, k: usize, a: f64, b_val: f64) -> f64 {
    let c = cell.conductance;
    c * (a - b_val).powi(2) / (k as f64 + c / port_conductance)
}

/// The `K` blocks of a corridor glued by their `K - 1` internal port edges,
/// without the end attachments (block-major node order).
pub fn chain_graph(b: &BlockModel, color: usize, k: usize) -> Result<MeasuredGraph> {
    b.check_color(color)?;
    let nb = b.node_count();
    let port = b.ports[color];
    let mut measures = Vec::with_capacity(k * nb);
    for _ in 0..k {
        measures.extend_from_slice(&b.measures);
    }
    let mut builder = GraphBuilder::new(measures);
    for blk in 0..k {
        b.add_sealed_copy(&mut builder, blk * nb, Some(color))?;
    }
    for blk in 1..k {
        builder.add_edge((blk - 1) * nb + port.out_node, blk * nb + port.in_node, port.conductance)?;
    }
    builder.build()
}

/// Flux weights of the chain. With `Phi = chi + k` on block `k`,
/// `Q Phi = C_i (exit - entry)` where `entry` and `exit` carry the current of
/// the missing end edges, normalized by `C_i`. They are computed from those
/// edges directly so that a one-node chain keeps both masses.
pub fn corridor_flux_weights(b: &BlockModel, cell: &CellSolution, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    b.check_color(cell.color)?;
    if k == 0 {
        return Err(Error::InvalidParameter(String::from("corridor needs at least one block")));
    }
    let nb = b.node_count();
    let port = b.ports[cell.color];
    let current = port.conductance * cell.port_drop(b) / cell.conductance;
    let mut entry = vec![0.0; k * nb];
    let mut exit = vec![0.0; k * nb];
    entry[port.in_node] = current;
    exit[(k - 1) * nb + port.out_node] = current;
    Ok((entry, exit))
}

/// `Q Phi` on the chain divided by `C_i`, for checking [`corridor_flux_weights`].
pub fn chain_flux(b: &BlockModel, cell: &CellSolution, k: usize) -> Result<Vec<f64>> {
    let g = chain_graph(b, cell.color, k)?;
    let nb = b.node_count();
    let phi: Vec<f64> = (0..k * nb).map(|v| cell.chi[v % nb] + (v / nb) as f64).collect();
    Ok((0..k * nb).map(|v| g.neighbors(v).iter().map(|&(u, w)| w * (phi[v] - phi[u])).sum::<f64>() / cell.conductance).collect())
}

/// Flux-averaged end gap `<exit, u> - <entry, u>`.
pub fn flux_gap(entry: &[f64], exit: &[f64], u: &[f64]) -> f64 {
    let avg = |w: &[f64]| w.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
    avg(exit) - avg(entry)
}

/// `floor(m C / w*)`, required to be at least one.
pub fn corridor_length(m: usize, c_color: f64, w_star: f64) -> Result<usize> {
    let k = (m as f64 * c_color / w_star).floor();
    if !(k >= 1.0) {
        return Err(Error::ScaleTooSmall { m, edge: 0 });
    }
    Ok(k as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodeRole {
    Cluster { vertex: usize, block: usize },
    Corridor { edge: usize, position: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corridor {
    pub tail: usize,
    pub head: usize,
    pub color: usize,
    pub length: usize,
    pub w_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroNetwork {
    pub graph: MeasuredGraph,
    pub m: usize,
    /// Role of each node's block; nodes of one block share it.
    pub roles: Vec<NodeRole>,
    pub corridors: Vec<Corridor>,
    pub color_assignment: ColorAssignment,
    pub wirings: Vec<ClusterWiring>,
    pub block_nodes: usize,
}

impl MacroNetwork {
    pub fn cluster_of(&self, node: usize) -> Option<usize> {
        match self.roles[node] {
            NodeRole::Cluster { vertex, .. } => Some(vertex),
            NodeRole::Corridor { .. } => None,
        }
    }

    pub fn corridor_of(&self, node: usize) -> Option<(usize, usize)> {
        match self.roles[node] {
            NodeRole::Corridor { edge, position } => Some((edge, position)),
            NodeRole::Cluster { .. } => None,
        }
    }

    pub fn corridor_lengths(&self) -> Vec<usize> {
        self.corridors.iter().map(|c| c.length).collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.color_assignment.vertex_count()
    }

    /// Node indices of each cluster.
    pub fn cluster_nodes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertex_count()];
        for (node, role) in self.roles.iter().enumerate() {
            if let NodeRole::Cluster { vertex, .. } = role {
                out[*vertex].push(node);
            }
        }
        out
    }

    pub fn corridor_nodes(&self) -> Vec<usize> {
        (0..self.roles.len()).filter(|&v| matches!(self.roles[v], NodeRole::Corridor { .. })).collect()
    }
}

/// Per-color cell conductances of `b`.
pub fn cell_conductances(b: &BlockModel) -> Result<Vec<f64>> {
    (0..b.colors()).map(|i| effective_conductance(b, i).map(|c| c.conductance)).collect()
}

fn corridor_specs(ws: &WeightSolution, ca: &ColorAssignment, cells: &[f64], m: usize) -> Result<Vec<Corridor>> {
    ca.directed_edges()
        .into_iter()
        .enumerate()
        .map(|(idx, (tail, head, color))| {
            let w_star = ws.weight(tail, head).ok_or_else(|| Error::InvalidParameter(format!("no weight for edge {{{tail}, {head}}}")))?;
            let length = corridor_length(m, cells[color], w_star).map_err(|_| Error::ScaleTooSmall { m, edge: idx })?;
            Ok(Corridor { tail, head, color, length, w_star })
        })
        .collect()
}

/// Builds the full network at scale `m`: `m^3` wired blocks per vertex and a
/// chain of `K_e(m)` blocks per edge of `K_N`.
pub fn assemble_network(
    ws: &WeightSolution,
    b: &BlockModel,
    ca: &ColorAssignment,
    m: usize,
    seed: u64,
    wiring: &WiringOptions,
) -> Result<MacroNetwork> {
    let n = ca.vertex_count();
    let d = ca.color_count();
    if n < 5 || n.is_multiple_of(2) {
        return Err(Error::InvalidVertexCount { n, reason: "assembler needs odd N >= 5" });
    }
    if ws.measures.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: ws.measures.len() });
    }
    if b.colors() != d {
        return Err(Error::InvalidParameter(format!("block has {} ports but the coloring uses {d} colors", b.colors())));
    }
    let cells = cell_conductances(b)?;
    let corridors = corridor_specs(ws, ca, &cells, m)?;
    let size = m * m * m;
    let nb = b.node_count();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wirings = Vec::with_capacity(n);
    for _ in 0..n {
        let wiring_seed = rng.next_u64();
        let port_seed = rng.next_u64();
        let w = sample_wiring_with(size, d, wiring_seed, wiring)?;
        wirings.push(expose_ports_with(&w, port_seed, wiring)?);
    }

    let total_blocks = n * size + corridors.iter().map(|c| c.length).sum::<usize>();
    let mut measures = Vec::with_capacity(total_blocks * nb);
    let mut roles = Vec::with_capacity(total_blocks * nb);
    for v in 0..n {
        for t in 0..size {
            measures.extend_from_slice(&b.measures);
            roles.extend(core::iter::repeat_n(NodeRole::Cluster { vertex: v, block: t }, nb));
        }
    }
    let mut corridor_start = Vec::with_capacity(corridors.len());
    for (e, c) in corridors.iter().enumerate() {
        corridor_start.push(measures.len() / nb);
        for k in 0..c.length {
            measures.extend_from_slice(&b.measures);
            roles.extend(core::iter::repeat_n(NodeRole::Corridor { edge: e, position: k }, nb));
        }
    }
    let cluster_block = |v: usize, t: usize| (v * size + t) * nb;
    let mut builder = GraphBuilder::new(measures);

    for (v, w) in wirings.iter().enumerate() {
        for t in 0..size {
            b.add_open_copy(&mut builder, cluster_block(v, t))?;
        }
        for (j, sigma) in w.permutations.iter().enumerate() {
            let port = w.ports[j];
            let p = b.ports[j];
            for (t, &s) in sigma.iter().enumerate() {
                if t == port.out_node {
                    continue;
                }
                builder.add_colored_edge(cluster_block(v, t) + p.out_node, cluster_block(v, s) + p.in_node, p.conductance, j as u32)?;
            }
        }
    }
    for (e, c) in corridors.iter().enumerate() {
        let p = b.ports[c.color];
        let block = |k: usize| (corridor_start[e] + k) * nb;
        for k in 0..c.length {
            b.add_sealed_copy(&mut builder, block(k), Some(c.color))?;
        }
        let tag = c.color as u32;
        let exit = wirings[c.tail].ports[c.color].out_node;
        let entry = wirings[c.head].ports[c.color].in_node;
        builder.add_colored_edge(cluster_block(c.tail, exit) + p.out_node, block(0) + p.in_node, p.conductance, tag)?;
        for k in 1..c.length {
            builder.add_colored_edge(block(k - 1) + p.out_node, block(k) + p.in_node, p.conductance, tag)?;
        }
        builder.add_colored_edge(block(c.length - 1) + p.out_node, cluster_block(c.head, entry) + p.in_node, p.conductance, tag)?;
    }
    let graph = builder.build()?;
    graph.require_connected()?;
    Ok(MacroNetwork { graph, m, roles, corridors, color_assignment: ca.clone(), wirings, block_nodes: nb })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroModel {
    pub graph: MeasuredGraph,
    pub m: usize,
    pub corridor_lengths: Vec<usize>,
}

/// `N`-vertex model with measures `m^3 V_F` and weights `C_{c(e)} / K_e(m)`.
pub fn macro_laplacian(ws: &WeightSolution, ca: &ColorAssignment, cells: &[f64], m: usize, volume: f64) -> Result<MacroModel> {
    if cells.len() != ca.color_count() {
        return Err(Error::DimensionMismatch { expected: ca.color_count(), got: cells.len() });
    }
    if !(volume > 0.0) {
        return Err(Error::InvalidParameter(format!("block volume {volume} must be positive")));
    }
    let corridors = corridor_specs(ws, ca, cells, m)?;
    let n = ca.vertex_count();
    let mass = (m as f64).powi(3) * volume;
    let graph = MeasuredGraph::new(vec![mass; n], corridors.iter().map(|c| (c.tail, c.head, cells[c.color] / c.length as f64)))?;
    Ok(MacroModel { graph, m, corridor_lengths: corridors.iter().map(|c| c.length).collect() })
}
