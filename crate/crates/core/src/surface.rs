//! Leading-order collar model of a pinched surface.
//!
//! Pinching the collar of edge `e` to length `pi * delta * w_e` gives it
//! conductance `delta * w_e`, so the discrete model is the dual graph with
//! weights scaled by `delta`. Rescaling the metric by `delta` divides every
//! eigenvalue by `delta` and sets the curvature to `-1 / delta`.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::eigen::{spectrum_dense, EigenResult};
use crate::error::{Error, Result};
use crate::graph::MeasuredGraph;
use crate::topology::SurfaceModel;

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta {delta} must be positive and finite")));
    }
    Ok(())
}

/// Conductance network of the surface pinched at `delta`.
pub fn pinch_model(s: &SurfaceModel, delta: f64) -> Result<MeasuredGraph> {
    check_delta(delta)?;
    s.dual_graph.scale_weights(delta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaledSpectrum {
    pub delta: f64,
    pub eigenvalues: Vec<f64>,
    pub curvature: f64,
}

pub fn rescaled_spectrum(pinched: &EigenResult, delta: f64) -> Result<RescaledSpectrum> {
    check_delta(delta)?;
    Ok(RescaledSpectrum { delta, eigenvalues: pinched.eigenvalues.iter().map(|l| l / delta).collect(), curvature: -1.0 / delta })
}

/// One row of a pinch schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinchRow {
    pub delta: f64,
    pub eigenvalues: Vec<f64>,
    pub rescaled: Vec<f64>,
    pub curvature: f64,
}

/// Dense spectra of the pinched and rescaled models along a schedule.
pub fn pinch_schedule(s: &SurfaceModel, deltas: &[f64]) -> Result<Vec<PinchRow>> {
    deltas
        .iter()
        .map(|&delta| {
            let eig = spectrum_dense(&pinch_model(s, delta)?, false)?;
            let r = rescaled_spectrum(&eig, delta)?;
            Ok(PinchRow { delta, eigenvalues: eig.eigenvalues, rescaled: r.eigenvalues, curvature: r.curvature })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inverse::solve_p3_closed_form;

    fn example() -> SurfaceModel {
        let (a, b) = solve_p3_closed_form(1.0, 3.0).unwrap();
        SurfaceModel::torus_chain(a, b).unwrap()
    }

    #[test]
    fn unit_delta_is_identity() {
        let s = example();
        assert_eq!(pinch_model(&s, 1.0).unwrap(), s.dual_graph);
    }

    #[test]
    fn pinched_spectrum_scales_with_delta() {
        let s = example();
        let eig = spectrum_dense(&pinch_model(&s, 1e-3).unwrap(), false).unwrap();
        for (got, want) in eig.eigenvalues.iter().zip([0.0, 1e-3, 3e-3]) {
            assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn halving_delta_halves_spectrum() {
        let s = example();
        let a = spectrum_dense(&pinch_model(&s, 0.2).unwrap(), false).unwrap();
        let b = spectrum_dense(&pinch_model(&s, 0.1).unwrap(), false).unwrap();
        for k in 1..3 {
            assert!((a.eigenvalues[k] / b.eigenvalues[k] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rescaling_recovers_targets() {
        for row in pinch_schedule(&example(), &[1e-1, 1e-2, 1e-3]).unwrap() {
            for (got, want) in row.rescaled.iter().zip([0.0, 1.0, 3.0]) {
                assert!((got - want).abs() <= 1e-10);
            }
            let ratio = row.eigenvalues[2] / row.eigenvalues[1];
            assert!((ratio - 3.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn curvature_report() {
        let eig = spectrum_dense(&pinch_model(&example(), 1e-2).unwrap(), false).unwrap();
        assert_eq!(rescaled_spectrum(&eig, 1e-2).unwrap().curvature, -100.0);
        assert!(pinch_model(&example(), 0.0).is_err());
    }
}
