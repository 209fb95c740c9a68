//! Exact event-driven simulation of the particle process `Z` on `N_0^V`.

mod engine;
mod mc;

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::model::{truncate, InfiniteModel, ModelError, ModelSpec};

pub use engine::{Advance, Channel, EventRecord, ForwardEngine, Replica};
pub use mc::{monte_carlo, McOptions, McResult, Observable};

/// An element of `N_0^V`.
pub type ParticleState = Vec<u64>;

/// Hard guards against runaway supercritical runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub max_events: u64,
    pub max_population: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_events: 10_000_000,
            max_population: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapKind {
    Events,
    Population,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForwardError {
    #[error("cap exceeded ({kind:?}) at t = {time} after {events} events, |z| = {population}")]
    CapExceeded {
        kind: CapKind,
        time: f64,
        events: u64,
        population: u64,
        state: ParticleState,
    },
    #[error("initial state has {got} entries but the graph has {expected} vertices")]
    StateLength { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub limits: Limits,
    /// Keep every event record (needed for replay and CSV export).
    pub record_events: bool,
    /// Times at which to store the state; values beyond `t_end` are ignored.
    pub snapshot_times: Vec<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            limits: Limits::default(),
            record_events: true,
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub state: ParticleState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: ParticleState,
    pub events: Vec<EventRecord>,
    pub final_state: ParticleState,
    pub t_end: f64,
    /// Number of clock rings, including no-ops (also when not recorded).
    pub n_events: u64,
    /// True when the total rate reached zero before `t_end`.
    pub quiescent: bool,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    /// Final state obtained by re-applying the recorded events.
    pub fn replay(&self) -> ParticleState {
        let mut z = self.initial.clone();
        for e in &self.events {
            if e.is_effective() {
                e.apply(&mut z);
            }
        }
        z
    }
}

/// One event from `state`, or `None` when the total rate is zero.
pub fn step<R: Rng + ?Sized>(
    state: &[u64],
    spec: &ModelSpec,
    rng: &mut R,
) -> Result<Option<(ParticleState, EventRecord)>, ForwardError> {
    check_len(spec.n_vertices(), state)?;
    let engine = ForwardEngine::new(spec);
    let mut r = engine.replica(state);
    Ok(match r.advance(f64::INFINITY, rng) {
        Advance::Event(e) => Some((r.state().to_vec(), e)),
        _ => None,
    })
}

fn check_len(expected: usize, z: &[u64]) -> Result<(), ForwardError> {
    if z.len() == expected {
        Ok(())
    } else {
        Err(ForwardError::StateLength {
            expected,
            got: z.len(),
        })
    }
}

/// Runs `spec` from `z0` up to `t_end`.
pub fn simulate<R: Rng + ?Sized>(
    spec: &ModelSpec,
    z0: &[u64],
    t_end: f64,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<Trajectory, ForwardError> {
    check_len(spec.n_vertices(), z0)?;
    let engine = ForwardEngine::new(spec);
    run(&engine, z0, t_end, opts, rng, |_, _| {})
}

/// Core loop shared by [`simulate`] and [`simulate_truncated`]. `on_event` sees
/// every record together with the post-event state.
pub(crate) fn run<R, F>(
    engine: &ForwardEngine,
    z0: &[u64],
    t_end: f64,
    opts: &SimOptions,
    rng: &mut R,
    mut on_event: F,
) -> Result<Trajectory, ForwardError>
where
    R: Rng + ?Sized,
    F: FnMut(&EventRecord, &[u64]),
{
    let mut replica = engine.replica(z0);
    let mut events = Vec::new();
    let mut snapshots = Vec::new();
    let mut times: Vec<f64> = opts
        .snapshot_times
        .iter()
        .copied()
        .filter(|&s| s <= t_end)
        .collect();
    times.sort_by(f64::total_cmp);
    let mut next_snap = 0;
    let mut quiescent = false;
    loop {
        let before = replica.state().to_vec();
        let outcome = replica.advance(t_end, rng);
        let reached = match outcome {
            Advance::Event(e) => e.time,
            Advance::Horizon => t_end,
            Advance::Quiescent => f64::INFINITY,
        };
        while next_snap < times.len()
            && (times[next_snap] < reached || (reached == t_end && times[next_snap] <= t_end))
        {
            snapshots.push(Snapshot {
                time: times[next_snap],
                state: before.clone(),
            });
            next_snap += 1;
        }
        match outcome {
            Advance::Event(e) => {
                if opts.record_events {
                    events.push(e);
                }
                on_event(&e, replica.state());
                let kind = if replica.events() > opts.limits.max_events {
                    Some(CapKind::Events)
                } else if replica.population() > opts.limits.max_population {
                    Some(CapKind::Population)
                } else {
                    None
                };
                if let Some(kind) = kind {
                    return Err(ForwardError::CapExceeded {
                        kind,
                        time: replica.time(),
                        events: replica.events(),
                        population: replica.population(),
                        state: replica.state().to_vec(),
                    });
                }
            }
            Advance::Horizon => break,
            Advance::Quiescent => {
                quiescent = true;
                break;
            }
        }
    }
    Ok(Trajectory {
        initial: z0.to_vec(),
        events,
        final_state: replica.state().to_vec(),
        t_end,
        n_events: replica.events(),
        quiescent,
        snapshots,
    })
}

/// Run on a finite ball together with its boundary hitting time.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedRun {
    pub trajectory: Trajectory,
    /// First time a boundary vertex is occupied, if before `t_end`.
    pub tau: Option<f64>,
    /// Vertex count of the ball.
    pub n_vertices: usize,
}

/// Simulates the model restricted to radius `radius` around the root.
/// `z0 = None` starts one particle at the root.
pub fn simulate_truncated<R: Rng + ?Sized>(
    model: &InfiniteModel,
    radius: i64,
    z0: Option<&[u64]>,
    t_end: f64,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<TruncatedRun, ForwardError> {
    let trunc = truncate(model, radius)?;
    let n = trunc.spec.n_vertices();
    let start: ParticleState = match z0 {
        Some(z) => {
            check_len(n, z)?;
            z.to_vec()
        }
        None => {
            let mut z = alloc::vec![0; n];
            z[trunc.root] = 1;
            z
        }
    };
    let mut tau = trunc.boundary.iter().any(|&v| start[v] > 0).then_some(0.0);
    let engine = ForwardEngine::new(&trunc.spec);
    let trajectory = run(&engine, &start, t_end, opts, rng, |e, z| {
        if tau.is_none() && trunc.is_boundary(e.target) && z[e.target] > 0 {
            tau = Some(e.time);
        }
    })?;
    Ok(TruncatedRun {
        trajectory,
        tau,
        n_vertices: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::AtomicMeasure;
    use crate::model::{presets, GraphSpec};
    use crate::rng;

    #[test]
    fn zero_spec_has_no_events() {
        let spec = ModelSpec::zero(GraphSpec::complete(3).unwrap());
        let t = simulate(
            &spec,
            &[1, 2, 3],
            5.0,
            &SimOptions::default(),
            &mut rng::stream(0, 0),
        )
        .unwrap();
        assert!(t.events.is_empty());
        assert_eq!(t.final_state, t.initial);
        assert!(t.quiescent);
    }

    #[test]
    fn replay_reproduces_final_state() {
        let spec = presets::hierarchical_moran(
            GraphSpec::complete(3).unwrap(),
            AtomicMeasure::dirac(0.5, 1.0).unwrap(),
            AtomicMeasure::new([(0.0, 0.5), (0.3, 0.4)]).unwrap(),
            0.7,
            1.0,
            0.5,
        )
        .unwrap();
        for seed in 0..20 {
            let t = simulate(
                &spec,
                &[3, 0, 5],
                2.0,
                &SimOptions::default(),
                &mut rng::stream(seed, 0),
            )
            .unwrap();
            assert_eq!(t.replay(), t.final_state);
        }
    }

    #[test]
    fn full_death_kills_at_one_time() {
        let spec = presets::binomial_disasters(1.0, 0.0, 2.0).unwrap();
        let t = simulate(
            &spec,
            &[9],
            100.0,
            &SimOptions::default(),
            &mut rng::stream(5, 0),
        )
        .unwrap();
        assert_eq!(t.final_state, [0]);
        assert_eq!(t.events.len(), 1);
        assert_eq!(t.events[0].participants, 9);
    }

    #[test]
    fn cap_is_reported() {
        let spec = presets::yule(5.0, 0.0).unwrap();
        let opts = SimOptions {
            limits: Limits {
                max_events: 1_000_000,
                max_population: 100,
            },
            ..Default::default()
        };
        let err = simulate(&spec, &[1], 100.0, &opts, &mut rng::stream(1, 0)).unwrap_err();
        assert!(matches!(
            err,
            ForwardError::CapExceeded {
                kind: CapKind::Population,
                population: 101,
                ..
            }
        ));
    }

    #[test]
    fn snapshots_track_state() {
        let spec = presets::yule(1.0, 0.0).unwrap();
        let opts = SimOptions {
            snapshot_times: alloc::vec![0.0, 0.5, 1.0, 2.0],
            ..Default::default()
        };
        let t = simulate(&spec, &[1], 1.0, &opts, &mut rng::stream(9, 0)).unwrap();
        assert_eq!(t.snapshots.len(), 3);
        assert_eq!(t.snapshots[0].state, [1]);
        assert_eq!(t.snapshots[2].state, t.final_state);
        for s in &t.snapshots {
            let births = t.events.iter().filter(|e| e.time <= s.time).count() as u64;
            assert_eq!(s.state[0], 1 + births);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = presets::nested_coalescent(AtomicMeasure::dirac(0.0, 1.0).unwrap(), 3).unwrap();
        let a = simulate(
            &spec,
            &[4, 4, 4],
            1.0,
            &SimOptions::default(),
            &mut rng::stream(42, 7),
        )
        .unwrap();
        let b = simulate(
            &spec,
            &[4, 4, 4],
            1.0,
            &SimOptions::default(),
            &mut rng::stream(42, 7),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_tree_without_migration_never_hits() {
        let m = InfiniteModel::tree_brw(2, 1.0, 0.0, 0.0).unwrap();
        for n in 1..4 {
            let run = simulate_truncated(
                &m,
                n,
                None,
                2.0,
                &SimOptions::default(),
                &mut rng::stream(1, n as u64),
            )
            .unwrap();
            assert_eq!(run.tau, None);
        }
    }

    #[test]
    fn radius_zero_hits_immediately() {
        let m = InfiniteModel::contact_path(1, 1.0, 1.0, 1.0).unwrap();
        let run = simulate_truncated(
            &m,
            0,
            None,
            1.0,
            &SimOptions::default(),
            &mut rng::stream(1, 0),
        )
        .unwrap();
        assert_eq!(run.tau, Some(0.0));
    }

    #[test]
    fn contact_path_first_exit() {
        // From one particle at the origin of Z, the first event is either the
        // death (all die, boundary never reached) or a birth onto a neighbour,
        // which sits on the boundary of the radius-one ball.
        let m = InfiniteModel::contact_path(1, 1.0, 0.7, 1.0).unwrap();
        for seed in 0..200 {
            let run = simulate_truncated(
                &m,
                1,
                None,
                50.0,
                &SimOptions::default(),
                &mut rng::stream(seed, 0),
            )
            .unwrap();
            let first = run.trajectory.events.first().copied();
            match first {
                Some(e) if e.kind == crate::measure::EventKind::Reproduction => {
                    assert_eq!(run.tau, Some(e.time))
                }
                Some(_) => assert_eq!(run.tau, None),
                None => assert_eq!(run.tau, None),
            }
        }
    }
}
