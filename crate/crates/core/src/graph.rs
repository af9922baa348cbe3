//! Measured weighted graphs and their Laplacian.
//!
//! A [`MeasuredGraph`] carries a strictly positive measure on every vertex
//! and a strictly positive weight on every undirected edge. Its Laplacian
//!
//! ```text
//! (L f)(i) = (1 / nu_i) * sum_{j ~ i} w_ij (f(i) - f(j))
//! ```
//!
//! is self-adjoint in the measure inner product `<f, g> = sum_i nu_i f(i) g(i)`
//! and its quadratic form is the Dirichlet energy `sum_e w_e (f_u - f_v)^2`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge record. `u < v` for every stored edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<u32>,
}

/// Incremental constructor for [`MeasuredGraph`].
///
/// Self-loops are dropped on insertion and parallel edges merge by adding
/// their weights (the first color tag is kept).
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    measures: Vec<f64>,
    edges: Vec<Edge>,
    index: BTreeMap<(usize, usize), usize>,
}

impl GraphBuilder {
    pub fn new(measures: Vec<f64>) -> Self {
        Self { measures, edges: Vec::new(), index: BTreeMap::new() }
    }

    pub fn with_uniform_measure(count: usize, measure: f64) -> Self {
        Self::new(vec![measure; count])
    }

    pub fn vertex_count(&self) -> usize {
        self.measures.len()
    }

    /// Appends a vertex and returns its index.
    pub fn add_vertex(&mut self, measure: f64) -> usize {
        self.measures.push(measure);
        self.measures.len() - 1
    }

    pub fn add_edge(&mut self, u: usize, v: usize, weight: f64) -> Result<()> {
        self.insert(u, v, weight, None)
    }

    pub fn add_colored_edge(&mut self, u: usize, v: usize, weight: f64, color: u32) -> Result<()> {
        self.insert(u, v, weight, Some(color))
    }

    fn insert(&mut self, u: usize, v: usize, weight: f64, color: Option<u32>) -> Result<()> {
        let count = self.measures.len();
        for vertex in [u, v] {
            if vertex >= count {
                return Err(Error::VertexOutOfRange { vertex, count });
            }
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::NonPositiveWeight { u, v, weight });
        }
        if u == v {
            return Ok(());
        }
        let key = (u.min(v), u.max(v));
        match self.index.get(&key) {
            Some(&slot) => self.edges[slot].weight += weight,
            None => {
                self.index.insert(key, self.edges.len());
                self.edges.push(Edge { u: key.0, v: key.1, weight, color });
            }
        }
        Ok(())
    }

    pub fn build(self) -> Result<MeasuredGraph> {
        MeasuredGraph::from_parts(self.measures, self.edges)
    }
}

/// Immutable measured graph with a compressed adjacency structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRecord", into = "GraphRecord")]
pub struct MeasuredGraph {
    measures: Vec<f64>,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    adjacency: Vec<(usize, f64)>,
}

/// Structured (serde) form of a graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub n: usize,
    pub measures: Vec<f64>,
    pub edges: Vec<Edge>,
}

impl TryFrom<GraphRecord> for MeasuredGraph {
    type Error = Error;

    fn try_from(record: GraphRecord) -> Result<Self> {
        if record.measures.len() != record.n {
            return Err(Error::DimensionMismatch { expected: record.n, got: record.measures.len() });
        }
        let mut builder = GraphBuilder::new(record.measures);
        for e in record.edges {
            builder.insert(e.u, e.v, e.weight, e.color)?;
        }
        builder.build()
    }
}

impl From<MeasuredGraph> for GraphRecord {
    fn from(g: MeasuredGraph) -> Self {
        GraphRecord { n: g.measures.len(), measures: g.measures, edges: g.edges }
    }
}

impl MeasuredGraph {
    /// Builds a graph from measures and edge records, applying the same
    /// validation, self-loop removal and merging rules as [`GraphBuilder`].
    pub fn new(measures: Vec<f64>, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut builder = GraphBuilder::new(measures);
        for (u, v, w) in edges {
            builder.add_edge(u, v, w)?;
        }
        builder.build()
    }

    fn from_parts(measures: Vec<f64>, edges: Vec<Edge>) -> Result<Self> {
        if measures.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for (vertex, &value) in measures.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveMeasure { vertex, value });
            }
        }
        let n = measures.len();
        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut adjacency = vec![(0usize, 0.0f64); offsets[n]];
        for e in &edges {
            adjacency[fill[e.u]] = (e.v, e.weight);
            fill[e.u] += 1;
            adjacency[fill[e.v]] = (e.u, e.weight);
            fill[e.v] += 1;
        }
        Ok(Self { measures, edges, offsets, adjacency })
    }

    pub fn vertex_count(&self) -> usize {
        self.measures.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_measure(&self) -> f64 {
        self.measures.iter().sum()
    }

    /// Neighbors of `u` with the connecting weights.
    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adjacency[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.vertex_count()).map(|u| self.degree(u)).max().unwrap_or(0)
    }

    pub fn weighted_degree(&self, u: usize) -> f64 {
        self.neighbors(u).iter().map(|&(_, w)| w).sum()
    }

    /// Weight of the edge `{u, v}`, symmetric in its arguments.
    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        if u >= self.vertex_count() || v >= self.vertex_count() {
            return None;
        }
        self.neighbors(u).iter().find(|&&(x, _)| x == v).map(|&(_, w)| w)
    }

    /// Component label per vertex and the number of components.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.vertex_count();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &(v, _) in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn component_count(&self) -> usize {
        self.components().1
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    pub(crate) fn require_connected(&self) -> Result<()> {
        match self.component_count() {
            1 => Ok(()),
            components => Err(Error::Disconnected { components }),
        }
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.vertex_count() {
            return Err(Error::DimensionMismatch { expected: self.vertex_count(), got: f.len() });
        }
        Ok(())
    }

    /// `(L f)(i) = (1/nu_i) sum_j w_ij (f(i) - f(j))`.
    pub fn laplacian_apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        Ok((0..self.vertex_count())
            .map(|i| {
                let flux: f64 = self.neighbors(i).iter().map(|&(j, w)| w * (f[i] - f[j])).sum();
                flux / self.measures[i]
            })
            .collect())
    }

    /// `sum_e w_e (f_u - f_v)^2`, the quadratic form of the Laplacian in the
    /// measure inner product.
    pub fn dirichlet_energy(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(self.edges.iter().map(|e| e.weight * (f[e.u] - f[e.v]).powi(2)).sum())
    }

    /// `sum_i nu_i f(i) g(i)`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        self.check_len(g)?;
        Ok(self.measures.iter().zip(f).zip(g).map(|((m, a), b)| m * a * b).sum())
    }

    /// Applies the measure-symmetrized operator `M^{-1/2} Q M^{-1/2}` where
    /// `Q` is the edge quadratic form. Its spectrum is that of `L`.
    pub(crate) fn symmetric_apply(&self, inv_sqrt_measure: &[f64], x: &[f64], out: &mut [f64]) {
        for i in 0..self.vertex_count() {
            let xi = x[i] * inv_sqrt_measure[i];
            let mut acc = 0.0;
            for &(j, w) in self.neighbors(i) {
                acc += w * (xi - x[j] * inv_sqrt_measure[j]);
            }
            out[i] = acc * inv_sqrt_measure[i];
        }
    }

    /// Gershgorin bound on the norm of the symmetrized operator.
    pub(crate) fn operator_norm_bound(&self) -> f64 {
        (0..self.vertex_count())
            .map(|i| {
                let s = self.measures[i].sqrt();
                let off: f64 = self.neighbors(i).iter().map(|&(j, w)| w / (s * self.measures[j].sqrt())).sum();
                self.weighted_degree(i) / self.measures[i] + off
            })
            .fold(0.0, f64::max)
    }

    /// Same graph with every measure multiplied by `c`.
    pub fn scale_measures(&self, c: f64) -> Result<Self> {
        let measures = self.measures.iter().map(|m| m * c).collect();
        Self::from_parts(measures, self.edges.clone())
    }

    /// Same graph with every weight multiplied by `c`.
    pub fn scale_weights(&self, c: f64) -> Result<Self> {
        self.map_weights(|_, w| w * c)
    }

    /// Same topology and measures with weights replaced by `f(edge_index, weight)`.
    pub fn map_weights(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let mut edges = self.edges.clone();
        for (k, e) in edges.iter_mut().enumerate() {
            e.weight = f(k, e.weight);
            if !(e.weight > 0.0) || !e.weight.is_finite() {
                return Err(Error::NonPositiveWeight { u: e.u, v: e.v, weight: e.weight });
            }
        }
        Self::from_parts(self.measures.clone(), edges)
    }

    /// Same graph with unit measures and unit weights (the combinatorial graph).
    pub fn combinatorial(&self) -> Self {
        let edges = self.edges.iter().map(|e| Edge { weight: 1.0, ..e.clone() }).collect();
        Self::from_parts(vec![1.0; self.vertex_count()], edges).expect("unit graph is valid")
    }

    /// Subgraph induced by `vertices`, relabelled in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Result<Self> {
        let mut local = BTreeMap::new();
        for (k, &v) in vertices.iter().enumerate() {
            if v >= self.vertex_count() {
                return Err(Error::VertexOutOfRange { vertex: v, count: self.vertex_count() });
            }
            local.insert(v, k);
        }
        let mut builder = GraphBuilder::new(vertices.iter().map(|&v| self.measures[v]).collect());
        for e in &self.edges {
            if let (Some(&a), Some(&b)) = (local.get(&e.u), local.get(&e.v)) {
                builder.insert(a, b, e.weight, e.color)?;
            }
        }
        builder.build()
    }

    /// Complete graph on `n` vertices with uniform measure and uniform weight.
    pub fn complete(n: usize, measure: f64, weight: f64) -> Result<Self> {
        let mut builder = GraphBuilder::with_uniform_measure(n, measure);
        for u in 0..n {
            for v in u + 1..n {
                builder.add_edge(u, v, weight)?;
            }
        }
        builder.build()
    }

    /// Cycle on `n` vertices with unit measures and weights.
    pub fn cycle(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n], (0..n).map(|i| (i, (i + 1) % n, 1.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn p3(w12: f64, w23: f64) -> MeasuredGraph {
        MeasuredGraph::new(vec![2.0 * PI, 4.0 * PI, 2.0 * PI], [(0, 1, w12), (1, 2, w23)]).unwrap()
    }

    #[test]
    fn two_vertex_apply() {
        let g = MeasuredGraph::new(vec![1.0, 1.0], [(0, 1, 1.0)]).unwrap();
        assert_eq!(g.laplacian_apply(&[1.0, 0.0]).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn constants_in_kernel() {
        let g = p3(3.0, 1.5);
        let out = g.laplacian_apply(&[2.5; 3]).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
        assert_eq!(g.dirichlet_energy(&[2.5; 3]).unwrap(), 0.0);
    }

    #[test]
    fn p3_first_column() {
        let w12 = PI * (8.0 + 10f64.sqrt()) / 3.0;
        let w23 = PI * (8.0 - 10f64.sqrt()) / 3.0;
        let out = p3(w12, w23).laplacian_apply(&[1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(out[0], w12 / (2.0 * PI), max_relative = 1e-15);
        assert_relative_eq!(out[1], -w12 / (4.0 * PI), max_relative = 1e-15);
        assert_eq!(out[2], 0.0);
    }

    #[test]
    fn two_vertex_energy() {
        let g = MeasuredGraph::new(vec![1.0, 3.0], [(0, 1, 2.5)]).unwrap();
        assert_relative_eq!(g.dirichlet_energy(&[1.5, -0.5]).unwrap(), 2.5 * 4.0);
    }

    #[test]
    fn dimension_mismatch() {
        let g = p3(1.0, 1.0);
        assert_eq!(g.laplacian_apply(&[1.0]), Err(Error::DimensionMismatch { expected: 3, got: 1 }));
        assert!(g.dirichlet_energy(&[0.0; 4]).is_err());
    }

    #[test]
    fn builder_merges_and_drops_loops() {
        let mut b = GraphBuilder::with_uniform_measure(3, 1.0);
        b.add_edge(0, 1, 1.0).unwrap();
        b.add_edge(1, 0, 2.0).unwrap();
        b.add_edge(2, 2, 5.0).unwrap();
        b.add_edge(1, 2, 0.5).unwrap();
        let g = b.build().unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.weight(0, 1), Some(3.0));
        assert_eq!(g.weight(1, 0), Some(3.0));
        assert_eq!(g.weight(2, 2), None);
    }

    #[test]
    fn rejects_invalid_input() {
        assert!(matches!(MeasuredGraph::new(vec![1.0, 0.0], []), Err(Error::NonPositiveMeasure { vertex: 1, .. })));
        assert!(matches!(MeasuredGraph::new(vec![1.0, 1.0], [(0, 1, -1.0)]), Err(Error::NonPositiveWeight { .. })));
        assert!(matches!(MeasuredGraph::new(vec![1.0], [(0, 3, 1.0)]), Err(Error::VertexOutOfRange { .. })));
        assert_eq!(MeasuredGraph::new(vec![], []), Err(Error::EmptyGraph));
    }

    #[test]
    fn components_of_two_k2() {
        let g = MeasuredGraph::new(vec![1.0; 4], [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(g.component_count(), 2);
        assert!(!g.is_connected());
    }

    #[test]
    fn induced_subgraph_relabels() {
        let g = MeasuredGraph::complete(4, 2.0, 1.0).unwrap();
        let h = g.induced(&[3, 1]).unwrap();
        assert_eq!(h.vertex_count(), 2);
        assert_eq!(h.weight(0, 1), Some(1.0));
        assert_eq!(h.measures(), &[2.0, 2.0]);
    }
}
