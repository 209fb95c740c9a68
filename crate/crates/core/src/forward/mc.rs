//! Replica-parallel Monte Carlo over forward runs.

use alloc::vec;
use alloc::vec::Vec;

use super::{run, ForwardEngine, ForwardError, Limits, SimOptions};
use crate::exec::Executor;
use crate::math;
use crate::rng;
use crate::stats::{EstimateWithCI, MeanAccumulator};

/// A real-valued functional of `Z_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// `Z_t^(v)`.
    VertexCount(usize),
    /// `|Z_t|`.
    Total,
    /// `1{|Z_t| < m}`.
    TotalBelow(u64),
    /// `1{Z_t^(v) = 0}`.
    VertexEmpty(usize),
    /// `prod_v x_v^{Z_t^(v)}` with `0^0 = 1`.
    Duality(Vec<f64>),
}

impl Observable {
    pub fn eval(&self, z: &[u64]) -> f64 {
        match self {
            Observable::VertexCount(v) => z[*v] as f64,
            Observable::Total => z.iter().sum::<u64>() as f64,
            Observable::TotalBelow(m) => f64::from(u8::from(z.iter().sum::<u64>() < *m)),
            Observable::VertexEmpty(v) => f64::from(u8::from(z[*v] == 0)),
            Observable::Duality(x) => math::duality_h(x, z),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct McOptions {
    pub limits: Limits,
    /// Drop replicas that hit a cap instead of evaluating them at the state
    /// where they stopped.
    pub exclude_capped: bool,
    /// Keep the per-replica values (needed for variances and histograms).
    pub keep_samples: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    /// One estimate per observable, in input order.
    pub estimates: Vec<EstimateWithCI>,
    /// Replicas that hit a cap.
    pub capped: u64,
    /// `samples[k][r]`: observable `k` on replica `r` (empty unless requested;
    /// capped replicas are missing when excluded).
    pub samples: Vec<Vec<f64>>,
}

/// Estimates `E[f(Z_t)]` for every observable from `n_replicas` independent
/// runs. Replica `r` uses stream `(seed, r)`, and results are folded in replica
/// order, so the output depends only on the inputs, not on the executor.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo<E: Executor>(
    engine: &ForwardEngine,
    z0: &[u64],
    t: f64,
    n_replicas: u64,
    observables: &[Observable],
    seed: u64,
    opts: &McOptions,
    exec: &E,
) -> Result<McResult, ForwardError> {
    if z0.len() != engine.n_vertices() {
        return Err(ForwardError::StateLength {
            expected: engine.n_vertices(),
            got: z0.len(),
        });
    }
    let sim = SimOptions {
        limits: opts.limits,
        record_events: false,
        snapshot_times: Vec::new(),
    };
    let per_replica = exec.map(n_replicas, |r| {
        let mut g = rng::stream(seed, r);
        match run(engine, z0, t, &sim, &mut g, |_, _| {}) {
            Ok(traj) => (
                false,
                observables
                    .iter()
                    .map(|o| o.eval(&traj.final_state))
                    .collect::<Vec<_>>(),
            ),
            Err(ForwardError::CapExceeded { state, .. }) => {
                (true, observables.iter().map(|o| o.eval(&state)).collect())
            }
            Err(_) => unreachable!("state length checked above"),
        }
    });
    let mut acc = vec![MeanAccumulator::default(); observables.len()];
    let mut samples = if opts.keep_samples {
        vec![Vec::new(); observables.len()]
    } else {
        Vec::new()
    };
    let mut capped = 0;
    for (was_capped, values) in per_replica {
        if was_capped {
            capped += 1;
            if opts.exclude_capped {
                continue;
            }
        }
        for (k, v) in values.into_iter().enumerate() {
            acc[k].push(v);
            if opts.keep_samples {
                samples[k].push(v);
            }
        }
    }
    Ok(McResult {
        estimates: acc.iter().map(MeanAccumulator::estimate).collect(),
        capped,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::model::{presets, GraphSpec, ModelSpec};

    #[test]
    fn zero_spec_estimate_is_exact() {
        let spec = ModelSpec::zero(GraphSpec::complete(2).unwrap());
        let engine = ForwardEngine::new(&spec);
        let res = monte_carlo(
            &engine,
            &[3, 4],
            1.0,
            10,
            &[Observable::VertexCount(0), Observable::Total],
            1,
            &McOptions::default(),
            &Sequential,
        )
        .unwrap();
        assert_eq!(res.estimates[0].mean, 3.0);
        assert_eq!(res.estimates[0].se, 0.0);
        assert_eq!(res.estimates[1].mean, 7.0);
    }

    #[test]
    fn capped_replicas_counted() {
        let engine = ForwardEngine::new(&presets::yule(3.0, 0.0).unwrap());
        let opts = McOptions {
            limits: Limits {
                max_events: 10_000,
                max_population: 20,
            },
            exclude_capped: true,
            keep_samples: true,
        };
        let res = monte_carlo(
            &engine,
            &[1],
            5.0,
            50,
            &[Observable::Total],
            2,
            &opts,
            &Sequential,
        )
        .unwrap();
        assert!(res.capped > 0);
        assert_eq!(res.samples[0].len() as u64, 50 - res.capped);
    }
}
