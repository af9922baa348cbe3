//! Spectra of the generalized problem `Q f = lambda M f`, where `Q` is the edge
//! quadratic form and `M` the diagonal of vertex measures.
//!
//! Both solvers work on the symmetrized operator `S = M^{-1/2} Q M^{-1/2}` and
//! map eigenvectors back with `v = M^{-1/2} x`, so returned vectors are
//! orthonormal in the measure inner product.
//!
//! The iterative solver targets the low end of the spectrum of large sparse
//! graphs. It runs a block Krylov iteration on the pseudo-inverse of `S`
//! (applied by preconditioned conjugate gradients on the complement of the
//! constant mode), then finishes with a Rayleigh-Ritz projection on `S`
//! itself so that the reported eigenvalues are Rayleigh quotients of the
//! original operator.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MeasuredGraph;
use crate::linalg::{axpy, dot, norm, scale, symmetric_eigen};

pub const DEFAULT_DENSE_THRESHOLD: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    Dense,
    Iterative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    /// Ascending, with multiplicity.
    pub eigenvalues: Vec<f64>,
    /// Measure-orthonormal eigenvectors, one per eigenvalue.
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    /// `|S x - lambda x|` relative to a Gershgorin bound on `|S|`.
    pub residuals: Vec<f64>,
    pub method: SolverMethod,
}

impl EigenResult {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn inv_sqrt_measures(g: &MeasuredGraph) -> Vec<f64> {
    g.measures().iter().map(|m| 1.0 / m.sqrt()).collect()
}

/// Full spectrum by dense symmetric eigendecomposition, with the default
/// vertex threshold.
pub fn spectrum_dense(g: &MeasuredGraph, with_vectors: bool) -> Result<EigenResult> {
    spectrum_dense_with_threshold(g, with_vectors, DEFAULT_DENSE_THRESHOLD)
}

pub fn spectrum_dense_with_threshold(g: &MeasuredGraph, with_vectors: bool, threshold: usize) -> Result<EigenResult> {
    let n = g.vertex_count();
    if n > threshold {
        return Err(Error::DenseThresholdExceeded { vertices: n, threshold });
    }
    g.require_connected()?;
    let inv_sqrt = inv_sqrt_measures(g);
    let mut s = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        s[(i, i)] = g.weighted_degree(i) * inv_sqrt[i] * inv_sqrt[i];
    }
    for e in g.edges() {
        let off = -e.weight * inv_sqrt[e.u] * inv_sqrt[e.v];
        s[(e.u, e.v)] += off;
        s[(e.v, e.u)] += off;
    }
    let (values, vectors) = symmetric_eigen(s);
    let scale_bound = g.operator_norm_bound().max(f64::MIN_POSITIVE);
    let mut residuals = Vec::with_capacity(n);
    let mut out_vectors = Vec::with_capacity(if with_vectors { n } else { 0 });
    let mut sx = vec![0.0; n];
    for (k, &lambda) in values.iter().enumerate() {
        let x: Vec<f64> = vectors.column(k).iter().copied().collect();
        g.symmetric_apply(&inv_sqrt, &x, &mut sx);
        axpy(-lambda, &x, &mut sx);
        residuals.push(norm(&sx) / scale_bound);
        if with_vectors {
            out_vectors.push(x.iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect());
        }
    }
    Ok(EigenResult { eigenvalues: values, eigenvectors: with_vectors.then_some(out_vectors), residuals, method: SolverMethod::Dense })
}

/// Settings for the iterative smallest-eigenpair solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IterativeOptions {
    /// Required relative residual for every returned pair.
    pub tol: f64,
    pub seed: u64,
    pub block_size: usize,
    /// Extra Ritz pairs that must converge beyond the requested ones.
    pub guard: usize,
    /// Upper bound on the Krylov basis dimension.
    pub max_basis: usize,
    /// Relative residual for the inner conjugate-gradient solves.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for IterativeOptions {
    fn default() -> Self {
        Self { tol: 1e-9, seed: 0x5eed, block_size: 4, guard: 2, max_basis: 600, cg_tol: 1e-13, cg_max_iter: 20_000 }
    }
}

/// The `k` smallest eigenpairs (including the zero mode) by the iterative
/// solver with default options and the given tolerance.
pub fn spectrum_smallest_k(g: &MeasuredGraph, k: usize, tol: f64) -> Result<EigenResult> {
    smallest_k_with(g, k, &IterativeOptions { tol, ..IterativeOptions::default() })
}

/// Pseudo-inverse of the symmetrized Laplacian restricted to the complement
/// of its kernel vector, applied by Jacobi-preconditioned CG.
struct InverseOperator<'a> {
    g: &'a MeasuredGraph,
    inv_sqrt: Vec<f64>,
    kernel: Vec<f64>,
    diag: Vec<f64>,
    tol: f64,
    max_iter: usize,
}

impl<'a> InverseOperator<'a> {
    fn new(g: &'a MeasuredGraph, opts: &IterativeOptions) -> Self {
        let inv_sqrt = inv_sqrt_measures(g);
        let mut kernel: Vec<f64> = g.measures().iter().map(|m| m.sqrt()).collect();
        let nk = norm(&kernel);
        scale(1.0 / nk, &mut kernel);
        let diag = (0..g.vertex_count()).map(|i| g.weighted_degree(i) * inv_sqrt[i] * inv_sqrt[i]).collect();
        Self { g, inv_sqrt, kernel, diag, tol: opts.cg_tol, max_iter: opts.cg_max_iter }
    }

    fn deflate(&self, x: &mut [f64]) {
        let c = dot(&self.kernel, x);
        axpy(-c, &self.kernel, x);
    }

    fn apply_s(&self, x: &[f64], out: &mut [f64]) {
        self.g.symmetric_apply(&self.inv_sqrt, x, out);
    }

    /// Solves `S z = b` for `b` orthogonal to the kernel; `z` is returned
    /// orthogonal to the kernel as well.
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let mut rhs = b.to_vec();
        self.deflate(&mut rhs);
        let bnorm = norm(&rhs);
        let mut z = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok(z);
        }
        let mut r = rhs;
        let mut y: Vec<f64> = r.iter().zip(&self.diag).map(|(a, d)| a / d).collect();
        self.deflate(&mut y);
        let mut p = y.clone();
        let mut ry = dot(&r, &y);
        let mut sp = vec![0.0; n];
        for _ in 0..self.max_iter {
            self.apply_s(&p, &mut sp);
            let alpha = ry / dot(&p, &sp);
            axpy(alpha, &p, &mut z);
            axpy(-alpha, &sp, &mut r);
            if norm(&r) <= self.tol * bnorm {
                self.deflate(&mut z);
                return Ok(z);
            }
            for i in 0..n {
                y[i] = r[i] / self.diag[i];
            }
            self.deflate(&mut y);
            let ry_next = dot(&r, &y);
            let beta = ry_next / ry;
            ry = ry_next;
            for i in 0..n {
                p[i] = y[i] + beta * p[i];
            }
        }
        Err(Error::EigenNonConvergence {
            reason: format!("inner CG exceeded {} iterations", self.max_iter),
            worst_residual: norm(&r) / bnorm,
        })
    }
}

/// Orthogonalizes `v` against `basis` (two passes) and the kernel vector,
/// returning the remaining norm before normalization.
fn orthonormalize(op: &InverseOperator, basis: &[Vec<f64>], v: &mut [f64]) -> f64 {
    let before = norm(v);
    for _ in 0..2 {
        op.deflate(v);
        for q in basis {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
    let after = norm(v);
    if after > 1e-10 * before.max(f64::MIN_POSITIVE) {
        scale(1.0 / after, v);
        after
    } else {
        0.0
    }
}

pub fn smallest_k_with(g: &MeasuredGraph, k: usize, opts: &IterativeOptions) -> Result<EigenResult> {
    let n = g.vertex_count();
    if k == 0 || k > n {
        return Err(Error::TooManyEigenpairs { requested: k, vertices: n });
    }
    g.require_connected()?;
    let op = InverseOperator::new(g, opts);
    let scale_bound = g.operator_norm_bound().max(f64::MIN_POSITIVE);
    let want = k - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut ritz: Vec<Vec<f64>> = Vec::new();
    if want > 0 {
        let target = (want + opts.guard).min(n - 1);
        let block = opts.block_size.max(1).min(n - 1);
        let max_basis = opts.max_basis.max(target + block).min(n - 1);
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut images: Vec<Vec<f64>> = Vec::new();
        let mut pending: Vec<Vec<f64>> = Vec::new();
        let converged;
        let mut worst;
        loop {
            // Fill the next block: candidates from the previous images, topped
            // up with random vectors when the Krylov space degenerates.
            let mut fresh = 0;
            let mut attempts = 0;
            while fresh < block && basis.len() < max_basis && attempts < 4 * block + 8 {
                attempts += 1;
                let mut v = match pending.pop() {
                    Some(v) => v,
                    None => (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
                };
                if orthonormalize(&op, &basis, &mut v) > 0.0 {
                    let image = op.solve(&v)?;
                    basis.push(v);
                    images.push(image);
                    fresh += 1;
                }
            }
            let dim = basis.len();
            let complete = dim == n - 1;
            let exhausted = fresh == 0 || dim >= max_basis;
            if dim >= target || exhausted {
                let h = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i])));
                let (theta, y) = symmetric_eigen(h);
                // Largest Ritz values of the inverse are the smallest eigenvalues.
                let count = target.min(dim);
                let mut vectors = Vec::with_capacity(count);
                let mut worst_here = 0.0f64;
                for r in 0..count {
                    let col = dim - 1 - r;
                    let mut x = vec![0.0; n];
                    let mut ax = vec![0.0; n];
                    for j in 0..dim {
                        axpy(y[(j, col)], &basis[j], &mut x);
                        axpy(y[(j, col)], &images[j], &mut ax);
                    }
                    axpy(-theta[col], &x, &mut ax);
                    let rel = norm(&ax) / theta[col].abs().max(f64::MIN_POSITIVE);
                    if r < want {
                        worst_here = worst_here.max(rel);
                    }
                    vectors.push(x);
                }
                worst = worst_here;
                if complete || worst <= 0.1 * opts.tol || exhausted {
                    converged = complete || worst <= opts.tol;
                    ritz = vectors;
                    break;
                }
            }
            pending = images[dim - fresh..].iter().rev().cloned().collect();
        }
        if !converged {
            return Err(Error::EigenNonConvergence {
                reason: format!("Krylov basis reached {} vectors", basis.len()),
                worst_residual: worst,
            });
        }
    }

    // Rayleigh-Ritz on S with the kernel vector plus the Ritz vectors.
    let mut span: Vec<Vec<f64>> = vec![op.kernel.clone()];
    for mut x in ritz {
        for _ in 0..2 {
            for q in &span {
                let c = dot(q, &x);
                axpy(-c, q, &mut x);
            }
        }
        let nx = norm(&x);
        if nx > 1e-8 {
            scale(1.0 / nx, &mut x);
            span.push(x);
        }
    }
    let dim = span.len();
    let mut s_span = Vec::with_capacity(dim);
    for x in &span {
        let mut sx = vec![0.0; n];
        op.apply_s(x, &mut sx);
        s_span.push(sx);
    }
    let h = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (dot(&span[i], &s_span[j]) + dot(&span[j], &s_span[i])));
    let (values, y) = symmetric_eigen(h);
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for col in 0..k.min(dim) {
        let mut x = vec![0.0; n];
        let mut sx = vec![0.0; n];
        for j in 0..dim {
            axpy(y[(j, col)], &span[j], &mut x);
            axpy(y[(j, col)], &s_span[j], &mut sx);
        }
        axpy(-values[col], &x, &mut sx);
        residuals.push(norm(&sx) / scale_bound);
        eigenvalues.push(values[col]);
        eigenvectors.push(x.iter().zip(&op.inv_sqrt).map(|(a, b)| a * b).collect());
    }
    if eigenvalues.len() < k {
        return Err(Error::EigenNonConvergence {
            reason: format!("only {} of {} eigenpairs resolved", eigenvalues.len(), k),
            worst_residual: f64::INFINITY,
        });
    }
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst > opts.tol {
        return Err(Error::EigenNonConvergence { reason: "final residual check failed".into(), worst_residual: worst });
    }
    Ok(EigenResult { eigenvalues, eigenvectors: Some(eigenvectors), residuals, method: SolverMethod::Iterative })
}

/// Smallest nonzero eigenvalue of a connected graph: dense below the
/// threshold, iterative above it.
pub fn fiedler_value(g: &MeasuredGraph, dense_threshold: usize, tol: f64) -> Result<f64> {
    if g.vertex_count() < 2 {
        return Err(Error::TooManyEigenpairs { requested: 2, vertices: g.vertex_count() });
    }
    let eig = if g.vertex_count() <= dense_threshold {
        spectrum_dense_with_threshold(g, false, dense_threshold)?
    } else {
        spectrum_smallest_k(g, 2, tol)?
    };
    Ok(eig.eigenvalues[1])
}

/// Gram-Schmidt in the measure inner product, in place.
pub fn measure_orthonormalize(measures: &[f64], vectors: &mut [Vec<f64>]) {
    let inner = |a: &[f64], b: &[f64]| -> f64 { measures.iter().zip(a).zip(b).map(|((m, x), y)| m * x * y).sum() };
    for i in 0..vectors.len() {
        for _ in 0..2 {
            for j in 0..i {
                let (head, tail) = vectors.split_at_mut(i);
                let c = inner(&head[j], &tail[0]);
                axpy(-c, &head[j], &mut tail[0]);
            }
        }
        let nrm = inner(&vectors[i], &vectors[i]).sqrt();
        if nrm > 0.0 {
            scale(1.0 / nrm, &mut vectors[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn k3_unit() {
        let g = MeasuredGraph::complete(3, 1.0, 1.0).unwrap();
        let eig = spectrum_dense(&g, true).unwrap();
        for (got, want) in eig.eigenvalues.iter().zip([0.0, 3.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(eig.max_residual() < 1e-10);
    }

    #[test]
    fn three_piece_example_spectrum() {
        let w12 = PI * (8.0 + 10f64.sqrt()) / 3.0;
        let w23 = PI * (8.0 - 10f64.sqrt()) / 3.0;
        let g = MeasuredGraph::new(vec![2.0 * PI, 4.0 * PI, 2.0 * PI], [(0, 1, w12), (1, 2, w23)]).unwrap();
        let eig = spectrum_dense(&g, false).unwrap();
        for (got, want) in eig.eigenvalues.iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn disconnected_is_rejected() {
        let g = MeasuredGraph::new(vec![1.0; 4], [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(spectrum_dense(&g, false), Err(Error::Disconnected { components: 2 }));
        assert!(matches!(spectrum_smallest_k(&g, 2, 1e-8), Err(Error::Disconnected { .. })));
    }

    #[test]
    fn threshold_enforced() {
        let g = MeasuredGraph::cycle(12).unwrap();
        assert!(matches!(spectrum_dense_with_threshold(&g, false, 10), Err(Error::DenseThresholdExceeded { vertices: 12, threshold: 10 })));
    }

    #[test]
    fn measure_constant_kernel_vector() {
        let g = MeasuredGraph::new(vec![1.0, 2.0, 3.0], [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 0.5)]).unwrap();
        let eig = spectrum_dense(&g, true).unwrap();
        let v0 = &eig.eigenvectors.unwrap()[0];
        let expected = 1.0 / 6f64.sqrt();
        assert!(v0.iter().all(|x| (x.abs() - expected).abs() < 1e-12));
        assert!(eig.eigenvalues[0].abs() < 1e-12 && eig.eigenvalues[1] > 0.0);
    }

    #[test]
    fn iterative_k1_is_constant() {
        let g = MeasuredGraph::cycle(9).unwrap();
        let eig = spectrum_smallest_k(&g, 1, 1e-10).unwrap();
        assert_eq!(eig.eigenvalues.len(), 1);
        assert!(eig.eigenvalues[0].abs() < 1e-12);
        let v = &eig.eigenvectors.unwrap()[0];
        assert!(v.iter().all(|x| (x.abs() - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn iterative_finds_multiplicities() {
        // Cycle spectrum is 2 - 2 cos(2 pi j / n), each nonzero value double.
        let g = MeasuredGraph::cycle(40).unwrap();
        let eig = spectrum_smallest_k(&g, 5, 1e-10).unwrap();
        let dense = spectrum_dense(&g, false).unwrap();
        for k in 0..5 {
            assert!((eig.eigenvalues[k] - dense.eigenvalues[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn iterative_matches_dense_on_weighted_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 60;
        let measures: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            edges.push((i, (i + 1) % n, rng.random_range(0.1..3.0)));
            edges.push((i, rng.random_range(0..n), rng.random_range(0.1..3.0)));
        }
        let g = MeasuredGraph::new(measures, edges).unwrap();
        let dense = spectrum_dense(&g, false).unwrap();
        let it = spectrum_smallest_k(&g, 8, 1e-9).unwrap();
        for k in 0..8 {
            assert!((dense.eigenvalues[k] - it.eigenvalues[k]).abs() < 1e-9);
        }
        assert_eq!(it.method, SolverMethod::Iterative);
    }

    #[test]
    fn too_many_pairs() {
        let g = MeasuredGraph::cycle(4).unwrap();
        assert!(matches!(spectrum_smallest_k(&g, 5, 1e-8), Err(Error::TooManyEigenpairs { .. })));
    }
}
