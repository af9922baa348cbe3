//! Prescribing a simple spectrum on a weighted graph.
//!
//! [`prescribe_complete_graph`] searches for strictly positive weights on the
//! complete graph `K_N` whose Laplacian has a requested nonzero spectrum.
//! Existence is classical; the search is a damped Gauss-Newton iteration
//! over log-weights driven by the first-order eigenvalue derivatives of
//! [`spectral_jacobian`], restarted from seeded random points around the
//! equal-weight graph.
//!
//! [`solve_p3_closed_form`] is the exact two-eigenvalue solution on the
//! three-vertex path with measures `(2 pi, 4 pi, 2 pi)`, used as an oracle.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::{spectrum_dense, EigenResult};
use crate::error::{Error, Result};
use crate::graph::MeasuredGraph;
use crate::linalg::solve_spd;

/// A strictly increasing target list `0 < lambda_1 < ... < lambda_n` together
/// with the tolerance, the carrier size `N` and an optional explicit padding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralTarget {
    pub targets: Vec<f64>,
    pub epsilon: f64,
    pub vertices: usize,
    /// Explicit padding eigenvalues `mu_{n+1} .. mu_{N-1}` (already in the
    /// units of the discrete carrier). `None` selects the default ramp.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<Vec<f64>>,
}

impl SpectralTarget {
    /// Validates the list and clamps `epsilon` to at most 1.
    pub fn new(targets: Vec<f64>, epsilon: f64, vertices: usize) -> Result<Self> {
        let t = Self { targets, epsilon: epsilon.min(1.0), vertices, padding: None };
        t.validate()?;
        Ok(t)
    }

    pub fn with_padding(mut self, padding: Vec<f64>) -> Result<Self> {
        self.padding = Some(padding);
        self.validate()?;
        Ok(self)
    }

    /// Smallest admissible carrier for `n` targets, odd and at least 5 when
    /// the carrier feeds the network assembler.
    pub fn minimal_vertices(n: usize, for_assembler: bool) -> usize {
        if for_assembler {
            let base = (n + 1).max(5);
            base + (1 - base % 2)
        } else {
            (n + 1).max(4)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.targets.len();
        if n == 0 {
            return Err(Error::InvalidTarget("empty target list".into()));
        }
        if !(self.targets[0] > 0.0) {
            return Err(Error::InvalidTarget(format!("first target {} is not positive", self.targets[0])));
        }
        if let Some(k) = self.targets.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidTarget(format!("targets not strictly increasing at index {}", k + 1)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidTarget(format!("epsilon {} must be positive", self.epsilon)));
        }
        if self.vertices < (n + 1).max(4) {
            return Err(Error::InvalidTarget(format!("N = {} is below max(n + 1, 4) = {}", self.vertices, (n + 1).max(4))));
        }
        if let Some(p) = &self.padding {
            if p.len() != self.vertices - 1 - n {
                return Err(Error::InvalidTarget(format!("padding has {} values, need {}", p.len(), self.vertices - 1 - n)));
            }
            if p.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidTarget("padding not strictly increasing".into()));
            }
        }
        Ok(())
    }

    pub fn largest_target(&self) -> f64 {
        *self.targets.last().unwrap()
    }
}

/// Full discrete list `mu_1 .. mu_{N-1}`: `mu_k = lambda_k V_F` for the
/// targets, then padding strictly above `(lambda_n + 1) V_F`.
///
/// The default padding is the ramp `mu_{n+j} = (lambda_n + 2 + j) V_F`.
pub fn pad_targets(t: &SpectralTarget, volume: f64) -> Result<Vec<f64>> {
    t.validate()?;
    if !(volume > 0.0) {
        return Err(Error::InvalidParameter(format!("block volume {volume} must be positive")));
    }
    let top = t.largest_target();
    let floor = (top + 1.0) * volume;
    let mut mu: Vec<f64> = t.targets.iter().map(|l| l * volume).collect();
    let extra = t.vertices - 1 - t.targets.len();
    match &t.padding {
        Some(p) => {
            if let Some(bad) = p.iter().find(|&&x| !(x > floor)) {
                return Err(Error::InvalidTarget(format!("padding value {bad} not above (lambda_n + 1) V_F = {floor}")));
            }
            mu.extend_from_slice(p);
        }
        None => mu.extend((1..=extra).map(|j| (top + 2.0 + j as f64) * volume)),
    }
    Ok(mu)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairWeight {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSolution {
    pub measures: Vec<f64>,
    /// One entry per edge of the carrier, `u < v`.
    pub weights: Vec<PairWeight>,
    /// Nonzero eigenvalues of the resulting Laplacian, ascending.
    pub achieved_spectrum: Vec<f64>,
    pub mismatch: f64,
    pub restarts_used: usize,
}

impl WeightSolution {
    pub fn to_graph(&self) -> Result<MeasuredGraph> {
        MeasuredGraph::new(self.measures.clone(), self.weights.iter().map(|p| (p.u, p.v, p.weight)))
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let (a, b) = (u.min(v), u.max(v));
        self.weights.iter().find(|p| p.u == a && p.v == b).map(|p| p.weight)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrescribeOptions {
    /// Max abs deviation of the achieved spectrum.
    pub tol: f64,
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Spread of the random log-weight perturbation at each start.
    pub init_spread: f64,
    /// Relative eigenvalue gap under which the iterate is perturbed.
    pub degeneracy_gap: f64,
    /// Multiplicative perturbation applied at near-degeneracy.
    pub degeneracy_kick: f64,
    pub positivity_floor: f64,
}

impl Default for PrescribeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            seed: 0,
            restarts: 32,
            max_iterations: 500,
            init_spread: 0.5,
            degeneracy_gap: 1e-6,
            degeneracy_kick: 1e-3,
            positivity_floor: 1e-12,
        }
    }
}

/// Weights on `K_N` with constant vertex measure whose nonzero spectrum is
/// `mu` to within `tol`.
pub fn prescribe_complete_graph(n: usize, vertex_measure: f64, mu: &[f64], tol: f64, seed: u64) -> Result<WeightSolution> {
    prescribe_complete_graph_with(n, vertex_measure, mu, &PrescribeOptions { tol, seed, ..PrescribeOptions::default() })
}

pub fn prescribe_complete_graph_with(n: usize, vertex_measure: f64, mu: &[f64], opts: &PrescribeOptions) -> Result<WeightSolution> {
    if n < 2 {
        return Err(Error::InvalidVertexCount { n, reason: "complete graph needs at least 2 vertices" });
    }
    if !(vertex_measure > 0.0) {
        return Err(Error::InvalidParameter(format!("vertex measure {vertex_measure} must be positive")));
    }
    if mu.len() != n - 1 {
        return Err(Error::InvalidTarget(format!("K_{n} needs {} eigenvalues, got {}", n - 1, mu.len())));
    }
    // Constant measure nu divides every eigenvalue by nu: solve the unit
    // measure problem for nu * mu and keep the weights.
    let unit = MeasuredGraph::complete(n, 1.0, 1.0)?;
    let scaled: Vec<f64> = mu.iter().map(|m| m * vertex_measure).collect();
    let mut sol = prescribe_on_graph(&unit, &scaled, opts)?;
    sol.measures = vec![vertex_measure; n];
    let eig = spectrum_dense(&sol.to_graph()?, false)?;
    sol.achieved_spectrum = eig.eigenvalues[1..].to_vec();
    sol.mismatch = max_deviation(&sol.achieved_spectrum, mu);
    Ok(sol)
}

fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Prescription on a fixed topology and fixed measures: adjusts the weights
/// of `template` so that its nonzero spectrum matches `mu`.
pub fn prescribe_on_graph(template: &MeasuredGraph, mu: &[f64], opts: &PrescribeOptions) -> Result<WeightSolution> {
    let n = template.vertex_count();
    if mu.len() != n - 1 {
        return Err(Error::InvalidTarget(format!("graph with {n} vertices needs {} eigenvalues, got {}", n - 1, mu.len())));
    }
    if mu.iter().any(|&m| !(m > 0.0)) || mu.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidTarget("eigenvalue list must be positive and strictly increasing".into()));
    }
    template.require_connected()?;
    // Equal-weight start: trace(L) = sum(mu).
    let unit_trace: f64 = (0..n).map(|i| template.degree(i) as f64 / template.measures()[i]).sum();
    let base = mu.iter().sum::<f64>() / unit_trace;
    let log_floor = opts.positivity_floor.ln();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = f64::INFINITY;
    for restart in 0..opts.restarts.max(1) {
        let start: Vec<f64> = (0..template.edge_count()).map(|_| base.ln() + opts.init_spread * rng.random_range(-1.0..1.0)).collect();
        match levenberg_marquardt(template, mu, start, opts, log_floor, &mut rng)? {
            Ok((x, mismatch)) => {
                let weights: Vec<f64> = x.iter().map(|v| v.exp()).collect();
                if let Some((edge, &weight)) = weights.iter().enumerate().find(|(_, &w)| w <= opts.positivity_floor) {
                    return Err(Error::BoundaryFailure { edge, weight });
                }
                let g = template.map_weights(|k, _| weights[k])?;
                let eig = spectrum_dense(&g, false)?;
                return Ok(WeightSolution {
                    measures: template.measures().to_vec(),
                    weights: g.edges().iter().map(|e| PairWeight { u: e.u, v: e.v, weight: e.weight }).collect(),
                    achieved_spectrum: eig.eigenvalues[1..].to_vec(),
                    mismatch: mismatch.min(max_deviation(&eig.eigenvalues[1..], mu)),
                    restarts_used: restart,
                });
            }
            Err(mismatch) => best = best.min(mismatch),
        }
    }
    Err(Error::PrescriptionNonConvergence { restarts: opts.restarts.max(1), best_mismatch: best })
}

/// Inner result: `Ok((log_weights, mismatch))` on convergence, `Err(best)`
/// when this start fails.
type StartOutcome = core::result::Result<(Vec<f64>, f64), f64>;

fn residual_at(template: &MeasuredGraph, mu: &[f64], x: &[f64]) -> Result<(EigenResult, Vec<f64>)> {
    let g = template.map_weights(|k, _| x[k].exp())?;
    let eig = spectrum_dense(&g, true)?;
    let r = eig.eigenvalues[1..].iter().zip(mu).map(|(l, m)| l - m).collect();
    Ok((eig, r))
}

fn levenberg_marquardt(
    template: &MeasuredGraph,
    mu: &[f64],
    mut x: Vec<f64>,
    opts: &PrescribeOptions,
    log_floor: f64,
    rng: &mut ChaCha8Rng,
) -> Result<StartOutcome> {
    let rows = mu.len();
    let cols = x.len();
    let scale = mu.last().copied().unwrap_or(1.0);
    let (mut eig, mut r) = residual_at(template, mu, &x)?;
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut damping = f64::NAN;
    let mut best = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let mismatch = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        best = best.min(mismatch);
        if mismatch <= 0.5 * opts.tol {
            return Ok(Ok((x, mismatch)));
        }
        let values = &eig.eigenvalues[1..];
        if values.windows(2).any(|w| w[1] - w[0] < opts.degeneracy_gap * scale) {
            for v in x.iter_mut() {
                *v += (1.0 + opts.degeneracy_kick * rng.random_range(-1.0..1.0)).ln();
            }
            (eig, r) = residual_at(template, mu, &x)?;
            cost = r.iter().map(|v| v * v).sum();
            continue;
        }
        // d lambda_k / d log w_e = w_e (v_k(u) - v_k(v))^2.
        let vectors = eig.eigenvectors.as_ref().expect("requested vectors");
        let edges = template.edges();
        let jac = DMatrix::from_fn(rows, cols, |k, e| {
            let v = &vectors[k + 1];
            x[e].exp() * (v[edges[e].u] - v[edges[e].v]).powi(2)
        });
        let jjt = &jac * jac.transpose();
        if damping.is_nan() {
            damping = 1e-3 * (0..rows).map(|i| jjt[(i, i)]).fold(0.0, f64::max);
        }
        let mut accepted = false;
        while damping < 1e16 * scale * scale {
            let mut system = jjt.clone();
            for i in 0..rows {
                system[(i, i)] += damping;
            }
            let y = solve_spd(system, &r)?;
            let mut step: Vec<f64> = (0..cols).map(|e| -(0..rows).map(|k| jac[(k, e)] * y[k]).sum::<f64>()).collect();
            let largest = step.iter().fold(0.0f64, |a, s| a.max(s.abs()));
            if largest > 2.0 {
                step.iter_mut().for_each(|s| *s *= 2.0 / largest);
            }
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| (a + s).max(log_floor)).collect();
            let (trial_eig, trial_r) = residual_at(template, mu, &trial)?;
            let trial_cost: f64 = trial_r.iter().map(|v| v * v).sum();
            if trial_cost < cost {
                x = trial;
                eig = trial_eig;
                r = trial_r;
                cost = trial_cost;
                damping = (damping / 3.0).max(1e-18 * scale * scale);
                accepted = true;
                break;
            }
            damping *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    let mismatch = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if mismatch <= opts.tol {
        return Ok(Ok((x, mismatch)));
    }
    Ok(Err(best.min(mismatch)))
}

/// Derivatives `d lambda_k / d w_e = (v_k(u) - v_k(v))^2` for measure-normalized
/// eigenvectors, rows indexed by eigenvalue and columns by the edge order of `g`.
pub fn spectral_jacobian(g: &MeasuredGraph, eigen: &EigenResult) -> Result<Vec<Vec<f64>>> {
    spectral_jacobian_with_gap(g, eigen, 1e-8)
}

pub fn spectral_jacobian_with_gap(g: &MeasuredGraph, eigen: &EigenResult, gap_threshold: f64) -> Result<Vec<Vec<f64>>> {
    let vectors = eigen.eigenvectors.as_ref().ok_or(Error::MissingEigenvectors)?;
    let values = &eigen.eigenvalues;
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    for k in 1..values.len() {
        let gap = values[k] - values[k - 1];
        if gap < gap_threshold * scale {
            return Err(Error::NearDegenerate { index: k, neighbor: k - 1, gap });
        }
    }
    Ok(vectors.iter().map(|v| g.edges().iter().map(|e| (v[e.u] - v[e.v]).powi(2)).collect()).collect())
}

/// Measures of the three-vertex path example: two one-holed tori and a
/// two-holed torus.
pub const P3_MEASURES: [f64; 3] = [2.0 * PI, 4.0 * PI, 2.0 * PI];

/// Exact weights `(w12, w23)`, `w12 >= w23`, for the path `v1 - v2 - v3` with
/// measures `(2 pi, 4 pi, 2 pi)` and nonzero spectrum `(lambda1, lambda2)`.
///
/// Trace and the sum of principal 2x2 minors give
/// `w12 + w23 = 4 pi (lambda1 + lambda2) / 3` and `w12 w23 = 2 pi^2 lambda1 lambda2`.
pub fn solve_p3_closed_form(lambda1: f64, lambda2: f64) -> Result<(f64, f64)> {
    if !(lambda1 > 0.0) || !(lambda2 > lambda1) {
        return Err(Error::InvalidTarget(format!("need 0 < lambda1 < lambda2, got ({lambda1}, {lambda2})")));
    }
    if lambda2 < 2.0 * lambda1 {
        return Err(Error::InfeasibleP3 { lambda1, lambda2 });
    }
    let sum = 4.0 * PI * (lambda1 + lambda2) / 3.0;
    // Discriminant (8 pi^2 / 9)(2 l1 - l2)(l1 - 2 l2) written in factored form.
    let disc = 8.0 * PI * PI / 9.0 * (lambda2 - 2.0 * lambda1) * (2.0 * lambda2 - lambda1);
    let root = disc.max(0.0).sqrt();
    Ok(((sum + root) / 2.0, (sum - root) / 2.0))
}

pub fn p3_graph(w12: f64, w23: f64) -> Result<MeasuredGraph> {
    MeasuredGraph::new(P3_MEASURES.to_vec(), [(0, 1, w12), (1, 2, w23)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn k2_single_weight() {
        let sol = prescribe_complete_graph(2, 1.0, &[3.0], 1e-10, 1).unwrap();
        assert_eq!(sol.weights.len(), 1);
        assert_relative_eq!(sol.weights[0].weight, 1.5, max_relative = 1e-9);
    }

    #[test]
    fn near_equal_targets_give_near_equal_weights() {
        let c = 2.0;
        let mu = [c, c * (1.0 + 1e-6), c * (1.0 + 2e-6)];
        let sol = prescribe_complete_graph(4, 1.0, &mu, 1e-10, 7).unwrap();
        for p in &sol.weights {
            assert!((p.weight - c / 4.0).abs() < 1e-4, "{}", p.weight);
        }
        let eig = spectrum_dense(&sol.to_graph().unwrap(), false).unwrap();
        assert!(max_deviation(&eig.eigenvalues[1..], &mu) <= 1e-10);
    }

    #[test]
    fn k5_one_to_four() {
        let mu = [1.0, 2.0, 3.0, 4.0];
        let sol = prescribe_complete_graph(5, 1.0, &mu, 1e-8, 11).unwrap();
        let eig = spectrum_dense(&sol.to_graph().unwrap(), false).unwrap();
        assert!(max_deviation(&eig.eigenvalues[1..], &mu) <= 1e-8);
        assert!(sol.weights.iter().all(|p| p.weight > 1e-12));
    }

    #[test]
    fn constant_measure_scaling() {
        let mu = [1.0, 3.0, 6.0];
        let sol = prescribe_complete_graph(4, 2.5, &mu, 1e-9, 5).unwrap();
        assert_eq!(sol.measures, vec![2.5; 4]);
        assert!(sol.mismatch <= 1e-9);
        let trace = 2.0 / 2.5 * sol.weights.iter().map(|p| p.weight).sum::<f64>();
        assert_relative_eq!(trace, 10.0, max_relative = 1e-10);
    }

    #[test]
    fn p3_closed_form_values() {
        let (a, b) = solve_p3_closed_form(1.0, 3.0).unwrap();
        assert_relative_eq!(a, PI * (8.0 + 10f64.sqrt()) / 3.0, max_relative = 1e-14);
        assert_relative_eq!(b, PI * (8.0 - 10f64.sqrt()) / 3.0, max_relative = 1e-14);
        assert!((a - 11.689).abs() < 1e-3 && (b - 5.066).abs() < 1e-3);
    }

    #[test]
    fn p3_double_root() {
        let (a, b) = solve_p3_closed_form(1.0, 2.0).unwrap();
        assert_eq!(a, b);
        assert_relative_eq!(a, 2.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn p3_infeasible() {
        assert_eq!(solve_p3_closed_form(1.0, 1.5), Err(Error::InfeasibleP3 { lambda1: 1.0, lambda2: 1.5 }));
    }

    #[test]
    fn jacobian_k2() {
        let g = MeasuredGraph::new(vec![1.0, 1.0], [(0, 1, 0.7)]).unwrap();
        let eig = spectrum_dense(&g, true).unwrap();
        let jac = spectral_jacobian(&g, &eig).unwrap();
        assert!(jac[0][0].abs() < 1e-15);
        assert_relative_eq!(jac[1][0], 2.0, max_relative = 1e-12);
    }

    #[test]
    fn jacobian_rejects_degenerate() {
        let g = MeasuredGraph::complete(4, 1.0, 1.0).unwrap();
        let eig = spectrum_dense(&g, true).unwrap();
        assert!(matches!(spectral_jacobian(&g, &eig), Err(Error::NearDegenerate { .. })));
    }

    #[test]
    fn jacobian_needs_vectors() {
        let g = MeasuredGraph::new(vec![1.0, 1.0], [(0, 1, 0.7)]).unwrap();
        let eig = spectrum_dense(&g, false).unwrap();
        assert_eq!(spectral_jacobian(&g, &eig), Err(Error::MissingEigenvectors));
    }

    #[test]
    fn padding_ramp() {
        let t = SpectralTarget::new(vec![1.0, 3.0], 0.1, 5).unwrap();
        assert_eq!(pad_targets(&t, 1.0).unwrap(), vec![1.0, 3.0, 6.0, 7.0]);
        assert_eq!(pad_targets(&t, 2.0).unwrap(), vec![2.0, 6.0, 12.0, 14.0]);
        let tight = SpectralTarget::new(vec![1.0, 3.0, 4.0], 0.1, 4).unwrap();
        assert_eq!(pad_targets(&tight, 1.5).unwrap(), vec![1.5, 4.5, 6.0]);
    }

    #[test]
    fn explicit_padding_checked() {
        let t = SpectralTarget::new(vec![1.0, 3.0], 0.1, 5).unwrap().with_padding(vec![3.5, 9.0]).unwrap();
        assert!(pad_targets(&t, 1.0).is_err());
        assert_eq!(pad_targets(&t, 0.5).unwrap(), vec![0.5, 1.5, 3.5, 9.0]);
    }

    #[test]
    fn target_validation() {
        assert!(SpectralTarget::new(vec![1.0, 1.0], 0.1, 5).is_err());
        assert!(SpectralTarget::new(vec![0.0, 1.0], 0.1, 5).is_err());
        assert!(SpectralTarget::new(vec![1.0, 2.0], 0.1, 3).is_err());
        assert_eq!(SpectralTarget::new(vec![1.0], 5.0, 4).unwrap().epsilon, 1.0);
        assert_eq!(SpectralTarget::minimal_vertices(2, true), 5);
        assert_eq!(SpectralTarget::minimal_vertices(5, true), 7);
        assert_eq!(SpectralTarget::minimal_vertices(1, false), 4);
    }

    fn random_k5(seed: u64) -> MeasuredGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = MeasuredGraph::complete(5, 1.0, 1.0).unwrap();
        let measures: Vec<f64> = (0..5).map(|_| rng.random_range(0.5..2.0)).collect();
        let g = base.map_weights(|_, _| rng.random_range(0.2..3.0)).unwrap();
        MeasuredGraph::new(measures, g.edges().iter().map(|e| (e.u, e.v, e.weight))).unwrap()
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let h = 1e-6;
        for seed in 0..20 {
            let g = random_k5(seed);
            let eig = spectrum_dense(&g, true).unwrap();
            let jac = spectral_jacobian(&g, &eig).unwrap();
            assert!(jac[0].iter().all(|&x| x.abs() < 1e-12));
            for e in 0..g.edge_count() {
                let plus = spectrum_dense(&g.map_weights(|k, w| if k == e { w + h } else { w }).unwrap(), false).unwrap();
                let minus = spectrum_dense(&g.map_weights(|k, w| if k == e { w - h } else { w }).unwrap(), false).unwrap();
                for (k, row) in jac.iter().enumerate().skip(1) {
                    let fd = (plus.eigenvalues[k] - minus.eigenvalues[k]) / (2.0 * h);
                    // Difference quotients carry roundoff of order eps * lambda / h, so
                    // deviations are measured against the row scale.
                    let scale = row.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                    assert!((fd - row[e]).abs() / scale <= 1e-5, "seed {seed} k {k} e {e}: {fd} vs {}", row[e]);
                }
            }
        }
    }

    #[test]
    fn solutions_round_trip_and_trace() {
        for (n, nu, seed) in [(4, 1.0, 1), (5, 0.7, 2), (7, 3.0, 3)] {
            let mu: Vec<f64> = (1..n).map(|k| k as f64 + 0.3 * (k * k) as f64).collect();
            let sol = prescribe_complete_graph(n, nu, &mu, 1e-8, seed).unwrap();
            assert!(sol.mismatch <= 1e-8);
            assert!(sol.weights.iter().all(|p| p.weight > 1e-12));
            assert_eq!(sol.weights.len(), n * (n - 1) / 2);
            let eig = spectrum_dense(&sol.to_graph().unwrap(), false).unwrap();
            assert!(max_deviation(&eig.eigenvalues[1..], &sol.achieved_spectrum) <= 1e-10);
            let trace = 2.0 / nu * sol.weights.iter().map(|p| p.weight).sum::<f64>();
            let sum: f64 = sol.achieved_spectrum.iter().sum();
            assert_relative_eq!(trace, sum, max_relative = 1e-10);
        }
    }

    #[test]
    fn p3_numeric_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let template = p3_graph(1.0, 1.0).unwrap();
        let opts = PrescribeOptions { tol: 1e-12, ..PrescribeOptions::default() };
        for _ in 0..50 {
            let l1 = rng.random_range(0.2..5.0);
            let l2 = l1 * rng.random_range(2.2..6.0);
            let (a, b) = solve_p3_closed_form(l1, l2).unwrap();
            let sol = prescribe_on_graph(&template, &[l1, l2], &opts).unwrap();
            let mut w = [sol.weight(0, 1).unwrap(), sol.weight(1, 2).unwrap()];
            w.sort_by(|x, y| y.total_cmp(x));
            assert!((w[0] - a).abs() <= 1e-8 * a && (w[1] - b).abs() <= 1e-8 * a, "({l1}, {l2}): {w:?} vs ({a}, {b})");
        }
    }

    #[test]
    fn p3_trace_and_minor_identities() {
        let (a, b) = solve_p3_closed_form(1.0, 3.0).unwrap();
        assert_relative_eq!(3.0 * (a + b) / (4.0 * PI), 4.0, max_relative = 1e-14);
        assert_relative_eq!(a * b / (2.0 * PI * PI), 3.0, max_relative = 1e-14);
    }
}
