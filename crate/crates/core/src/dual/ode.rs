//! Deterministic dual: when every measure is concentrated at zero and there is
//! no coalescence, `X` solves an ODE.

use alloc::vec::Vec;

use thiserror::Error;

use super::DualEngine;
use crate::analytics::ode::{integrate_with_error, OdeSolution};
use crate::analytics::PotentialField;
use crate::model::{presets, GraphSpec, ModelError, ModelSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DualOdeError {
    #[error("the dual is only deterministic without coalescence and with all atoms at zero")]
    NotDeterministic,
    #[error("solution left [0,1] at t = {time}: x[{vertex}] = {value}")]
    LeftUnitCube {
        time: f64,
        vertex: usize,
        value: f64,
    },
    #[error("x0 must lie in [0,1]^V with one entry per vertex")]
    BadInitial,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Tolerance for leaving `[0,1]` through integration error.
const CUBE_TOLERANCE: f64 = 1e-9;

/// RK4 solution of `dx/dt = b(x)` at `times`, with `b` the drift of the dual.
pub fn dual_ode(
    spec: &ModelSpec,
    x0: &[f64],
    times: &[f64],
    dt: f64,
) -> Result<OdeSolution, DualOdeError> {
    if !spec.dual_is_deterministic() {
        return Err(DualOdeError::NotDeterministic);
    }
    if x0.len() != spec.n_vertices() || x0.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(DualOdeError::BadInitial);
    }
    let engine = DualEngine::new(spec);
    let rhs = |_t: f64, x: &[f64], out: &mut [f64]| engine.drift(x, out);
    let sol = integrate_with_error(&rhs, x0, times, dt);
    for (t, x) in sol.times.iter().zip(&sol.values) {
        for (v, &value) in x.iter().enumerate() {
            if !(-CUBE_TOLERANCE..=1.0 + CUBE_TOLERANCE).contains(&value) {
                return Err(DualOdeError::LeftUnitCube {
                    time: *t,
                    vertex: v,
                    value,
                });
            }
        }
    }
    Ok(sol)
}

/// Dual ODE of the independent PAM branching process on `graph`:
/// `dx_v/dt = sum_{u~v} (x_u - x_v) - xi+_v x_v (1 - x_v) + xi-_v (1 - x_v)`.
pub fn pam_dual_ode(
    xi: &PotentialField,
    graph: &GraphSpec,
    x0: &[f64],
    times: &[f64],
    dt: f64,
) -> Result<OdeSolution, DualOdeError> {
    let spec = presets::pam_branching(graph.clone(), xi.plus(), xi.minus(), 0.0)?;
    dual_ode(&spec, x0, times, dt)
}

/// Times `0, step, 2 step, ..., t`.
pub fn grid(t: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .map(|k| t * k as f64 / (points - 1) as f64)
        .collect()
}
