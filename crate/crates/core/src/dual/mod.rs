//! The frequency process `X` on `[0,1]^V`: drift and Wright–Fisher noise from
//! the atoms at zero, Poisson jumps from the positive atoms.

mod ode;

use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::exec::Executor;
use crate::math;
use crate::measure::EventKind;
use crate::model::ModelSpec;
use crate::rng;
use crate::stats::{EstimateWithCI, MeanAccumulator};

pub use ode::{dual_ode, grid, pam_dual_ode, DualOdeError};

/// An element of `[0,1]^V`.
pub type FrequencyState = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Euler–Maruyama for drift and noise.
    Euler,
    /// Euler–Maruyama when some vertex has Wright–Fisher noise; classical RK4
    /// on the drift between jumps otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualConfig {
    pub dt: f64,
    /// `tau` is reached once every coordinate is at least `1 - hit_tolerance`.
    pub hit_tolerance: f64,
    /// Runs whose accumulated clamp exceeds this are flagged.
    pub clamp_flag: f64,
    pub scheme: Scheme,
}

impl Default for DualConfig {
    fn default() -> Self {
        DualConfig {
            dt: 1e-3,
            hit_tolerance: 1e-9,
            clamp_flag: 1e-2,
            scheme: Scheme::Auto,
        }
    }
}

/// One positive-atom jump channel of the dual, acting on coordinate `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualJump {
    pub kind: EventKind,
    pub v: usize,
    pub u: usize,
    pub y: f64,
    pub rate: f64,
}

impl DualJump {
    /// New value of `x_v`; `theta` is only read by coalescence.
    pub fn apply(&self, x: &[f64], theta: f64) -> f64 {
        let (xv, xu, y) = (x[self.v], x[self.u], self.y);
        match self.kind {
            EventKind::Migration => xv + y * (xu - xv),
            EventKind::Reproduction => xv + y * xv * (xu - 1.0),
            EventKind::Death => xv + y * (1.0 - xv),
            EventKind::Coalescence => xv + y * (f64::from(u8::from(theta < xv)) - xv),
        }
    }
}

/// Jump channels, drift coefficients and noise strengths derived from a model.
#[derive(Debug, Clone)]
pub struct DualEngine {
    n: usize,
    jumps: Vec<DualJump>,
    cumulative: Vec<f64>,
    migration0: Vec<(usize, usize, f64)>,
    reproduction0: Vec<(usize, usize, f64)>,
    death0: Vec<f64>,
    noise: Vec<f64>,
}

impl DualEngine {
    pub fn new(spec: &ModelSpec) -> Self {
        let n = spec.n_vertices();
        let mut jumps = Vec::new();
        let mut migration0 = Vec::new();
        let mut reproduction0 = Vec::new();
        let mut death0 = vec![0.0; n];
        let mut noise = vec![0.0; n];
        for (kind, v, u, m) in spec.channels() {
            let at_zero = m.mass_at_zero();
            if at_zero > 0.0 {
                match kind {
                    EventKind::Migration => migration0.push((v, u, at_zero)),
                    EventKind::Reproduction => reproduction0.push((v, u, at_zero)),
                    EventKind::Death => death0[v] += at_zero,
                    EventKind::Coalescence => noise[v] += at_zero,
                }
            }
            for a in m.positive_atoms() {
                let rate = crate::measure::event_rate(*a, kind).expect("positive atom");
                jumps.push(DualJump {
                    kind,
                    v,
                    u,
                    y: a.y,
                    rate,
                });
            }
        }
        let mut cumulative = Vec::with_capacity(jumps.len());
        let mut acc = 0.0;
        for j in &jumps {
            acc += j.rate;
            cumulative.push(acc);
        }
        DualEngine {
            n,
            jumps,
            cumulative,
            migration0,
            reproduction0,
            death0,
            noise,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn jumps(&self) -> &[DualJump] {
        &self.jumps
    }

    pub fn jump_rate(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn has_noise(&self) -> bool {
        self.noise.iter().any(|&c| c > 0.0)
    }

    pub fn has_drift(&self) -> bool {
        !self.migration0.is_empty()
            || !self.reproduction0.is_empty()
            || self.death0.iter().any(|&d| d > 0.0)
    }

    /// `Lambda_v({0})`, the Wright–Fisher noise strength at `v`.
    pub fn noise_strength(&self, v: usize) -> f64 {
        self.noise[v]
    }

    /// Drift `b(x)` from the atoms at zero.
    pub fn drift(&self, x: &[f64], out: &mut [f64]) {
        for v in 0..self.n {
            out[v] = self.death0[v] * (1.0 - x[v]);
        }
        for &(v, u, m) in &self.migration0 {
            out[v] += m * (x[u] - x[v]);
        }
        for &(v, u, r) in &self.reproduction0 {
            out[v] += r * x[v] * (x[u] - 1.0);
        }
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> &DualJump {
        let target = rng.random::<f64>() * self.jump_rate();
        let k = self
            .cumulative
            .partition_point(|&c| c <= target)
            .min(self.jumps.len() - 1);
        &self.jumps[k]
    }
}

/// Diagnostics of one dual run.
#[derive(Debug, Clone, PartialEq)]
pub struct DualOutcome {
    pub final_state: FrequencyState,
    /// Time at which the run stopped (`t_end` unless the observer broke off).
    pub time: f64,
    pub jumps: u64,
    /// Sum of all clamp corrections.
    pub clamp_total: f64,
    pub clamp_events: u64,
    pub flagged: bool,
}

fn clamp(x: &mut [f64], total: &mut f64, events: &mut u64) {
    for xi in x.iter_mut() {
        if *xi < 0.0 {
            *total += -*xi;
            *events += 1;
            *xi = 0.0;
        } else if *xi > 1.0 {
            *total += *xi - 1.0;
            *events += 1;
            *xi = 1.0;
        }
    }
}

/// Core integrator. `stops` are extra times (sorted) at which the continuous
/// part lands exactly; `observe(t, x)` runs after every step and jump and may
/// stop the run.
pub(crate) fn run_dual<R, F>(
    engine: &DualEngine,
    x0: &[f64],
    t_end: f64,
    cfg: &DualConfig,
    stops: &[f64],
    rng: &mut R,
    mut observe: F,
) -> DualOutcome
where
    R: Rng + ?Sized,
    F: FnMut(f64, &[f64]) -> ControlFlow<()>,
{
    assert!(cfg.dt > 0.0, "dt must be positive");
    let mut jump_rng = rng::fork(rng);
    let mut noise_rng = rng::fork(rng);
    let n = engine.n;
    let mut x = x0.to_vec();
    let mut drift = vec![0.0; n];
    let mut next = vec![0.0; n];
    let (mut clamp_total, mut clamp_events, mut jumps) = (0.0, 0u64, 0u64);
    let rate = engine.jump_rate();
    let draw_wait = |g: &mut rng::SimRng| {
        if rate > 0.0 {
            g.sample::<f64, _>(Exp1) / rate
        } else {
            f64::INFINITY
        }
    };
    let mut next_jump = draw_wait(&mut jump_rng);
    let use_rk4 = !engine.has_noise() && cfg.scheme == Scheme::Auto;
    let continuous = engine.has_noise() || engine.has_drift();
    let rk_rhs = |_t: f64, y: &[f64], out: &mut [f64]| engine.drift(y, out);
    let mut t = 0.0;
    let mut stop_idx = 0;
    let finish = |x: Vec<f64>, t, jumps, clamp_total: f64, clamp_events| DualOutcome {
        final_state: x,
        time: t,
        jumps,
        clamp_total,
        clamp_events,
        flagged: clamp_total > cfg.clamp_flag,
    };
    if observe(0.0, &x).is_break() {
        return finish(x, 0.0, 0, 0.0, 0);
    }
    while t < t_end {
        while stop_idx < stops.len() && stops[stop_idx] <= t {
            stop_idx += 1;
        }
        let stop = stops.get(stop_idx).copied().unwrap_or(f64::INFINITY);
        let target = next_jump.min(t_end).min(stop);
        if continuous {
            while t < target {
                let t_next = if target - t <= cfg.dt {
                    target
                } else {
                    t + cfg.dt
                };
                let h = t_next - t;
                if use_rk4 {
                    crate::analytics::ode::rk4_step(&rk_rhs, t, &x, h, &mut next);
                    core::mem::swap(&mut x, &mut next);
                } else {
                    engine.drift(&x, &mut drift);
                    let sq = math::sqrt(h);
                    for v in 0..n {
                        let mut dx = drift[v] * h;
                        let c = engine.noise[v];
                        if c > 0.0 {
                            let var = c * x[v] * (1.0 - x[v]);
                            if var > 0.0 {
                                let z: f64 = noise_rng.sample(StandardNormal);
                                dx += math::sqrt(var) * sq * z;
                            }
                        }
                        next[v] = x[v] + dx;
                    }
                    core::mem::swap(&mut x, &mut next);
                }
                clamp(&mut x, &mut clamp_total, &mut clamp_events);
                t = t_next;
                if observe(t, &x).is_break() {
                    return finish(x, t, jumps, clamp_total, clamp_events);
                }
            }
        } else {
            t = target;
            if (target == stop || target == t_end) && observe(t, &x).is_break() {
                return finish(x, t, jumps, clamp_total, clamp_events);
            }
        }
        if next_jump <= t_end && t >= next_jump {
            let j = *engine.pick(&mut jump_rng);
            let theta = if j.kind == EventKind::Coalescence {
                jump_rng.random::<f64>()
            } else {
                0.0
            };
            x[j.v] = j.apply(&x, theta);
            clamp(&mut x, &mut clamp_total, &mut clamp_events);
            jumps += 1;
            next_jump = t + draw_wait(&mut jump_rng);
            if observe(t, &x).is_break() {
                return finish(x, t, jumps, clamp_total, clamp_events);
            }
        }
    }
    finish(x, t, jumps, clamp_total, clamp_events)
}

/// Sampled path of the dual.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPath {
    pub times: Vec<f64>,
    pub values: Vec<FrequencyState>,
    pub outcome: DualOutcome,
}

/// Simulates `X` from `x0` to `t_end`, recording the state at `sample_times`
/// (sorted, within `[0, t_end]`).
pub fn simulate_dual<R: Rng + ?Sized>(
    spec: &ModelSpec,
    x0: &[f64],
    t_end: f64,
    cfg: &DualConfig,
    sample_times: &[f64],
    rng: &mut R,
) -> DualPath {
    assert_eq!(
        x0.len(),
        spec.n_vertices(),
        "x0 length must match the vertex count"
    );
    let engine = DualEngine::new(spec);
    let mut samples: Vec<f64> = sample_times
        .iter()
        .copied()
        .filter(|&s| (0.0..=t_end).contains(&s))
        .collect();
    samples.sort_by(f64::total_cmp);
    let mut values = Vec::with_capacity(samples.len());
    let mut k = 0;
    let outcome = run_dual(&engine, x0, t_end, cfg, &samples, rng, |t, x| {
        // the integrator lands on every sample time, so the first observation
        // at or after a sample time is exactly at it
        while k < samples.len() && samples[k] <= t {
            values.push(x.to_vec());
            k += 1;
        }
        ControlFlow::Continue(())
    });
    DualPath {
        times: samples,
        values,
        outcome,
    }
}

/// First time all coordinates are within `hit_tolerance` of one, or `None`
/// if that does not happen by `t_max`.
pub fn tau_hit<R: Rng + ?Sized>(
    spec: &ModelSpec,
    x0: &[f64],
    t_max: f64,
    cfg: &DualConfig,
    rng: &mut R,
) -> Option<f64> {
    let engine = DualEngine::new(spec);
    tau_hit_engine(&engine, x0, t_max, cfg, rng)
}

pub(crate) fn tau_hit_engine<R: Rng + ?Sized>(
    engine: &DualEngine,
    x0: &[f64],
    t_max: f64,
    cfg: &DualConfig,
    rng: &mut R,
) -> Option<f64> {
    let level = 1.0 - cfg.hit_tolerance;
    let mut hit = None;
    run_dual(engine, x0, t_max, cfg, &[], rng, |t, x| {
        if x.iter().all(|&v| v >= level) {
            hit = Some(t);
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    hit
}

/// A real-valued functional of `X_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum DualObservable {
    /// `prod_v x_v^{z_v}` with `0^0 = 1`.
    Moment(Vec<u64>),
    Coordinate(usize),
}

impl DualObservable {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            DualObservable::Moment(z) => math::duality_h(x, z),
            DualObservable::Coordinate(v) => x[*v],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualMcResult {
    pub estimates: Vec<EstimateWithCI>,
    /// Replicas whose clamp total exceeded the flag threshold.
    pub flagged: u64,
}

/// Monte Carlo of `E_x[f(X_t)]` over independent replicas; replica `r` uses
/// stream `(seed, r)`.
#[allow(clippy::too_many_arguments)]
pub fn dual_monte_carlo<E: Executor>(
    engine: &DualEngine,
    x0: &[f64],
    t: f64,
    n_replicas: u64,
    observables: &[DualObservable],
    seed: u64,
    cfg: &DualConfig,
    exec: &E,
) -> DualMcResult {
    assert_eq!(
        x0.len(),
        engine.n_vertices(),
        "x0 length must match the vertex count"
    );
    let per_replica = exec.map(n_replicas, |r| {
        let mut g = rng::stream(seed, r);
        let out = run_dual(engine, x0, t, cfg, &[], &mut g, |_, _| {
            ControlFlow::Continue(())
        });
        (
            out.flagged,
            observables
                .iter()
                .map(|o| o.eval(&out.final_state))
                .collect::<Vec<_>>(),
        )
    });
    let mut acc = vec![MeanAccumulator::default(); observables.len()];
    let mut flagged = 0;
    for (f, values) in per_replica {
        flagged += u64::from(f);
        for (k, v) in values.into_iter().enumerate() {
            acc[k].push(v);
        }
    }
    DualMcResult {
        estimates: acc.iter().map(MeanAccumulator::estimate).collect(),
        flagged,
    }
}

/// Estimate of `E_x[prod_v (X_t^(v))^{z_v}]`.
#[allow(clippy::too_many_arguments)]
pub fn moment_estimate<E: Executor>(
    spec: &ModelSpec,
    x0: &[f64],
    z: &[u64],
    t: f64,
    n_replicas: u64,
    cfg: &DualConfig,
    seed: u64,
    exec: &E,
) -> EstimateWithCI {
    if t == 0.0 || z.iter().all(|&k| k == 0) {
        return EstimateWithCI {
            mean: math::duality_h(x0, z),
            se: 0.0,
            n: n_replicas,
        };
    }
    let engine = DualEngine::new(spec);
    dual_monte_carlo(
        &engine,
        x0,
        t,
        n_replicas,
        &[DualObservable::Moment(z.to_vec())],
        seed,
        cfg,
        exec,
    )
    .estimates[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::measure::AtomicMeasure;
    use crate::model::{presets, GraphSpec};

    #[test]
    fn zero_spec_is_constant() {
        let spec = ModelSpec::zero(GraphSpec::complete(2).unwrap());
        let p = simulate_dual(
            &spec,
            &[0.2, 0.9],
            3.0,
            &DualConfig::default(),
            &[0.0, 1.5, 3.0],
            &mut rng::stream(0, 0),
        );
        assert_eq!(p.values, alloc::vec![alloc::vec![0.2, 0.9]; 3]);
        assert_eq!(p.outcome.jumps, 0);
    }

    #[test]
    fn independent_death_is_deterministic() {
        let spec = presets::binomial_disasters(0.0, 0.0, 1.0).unwrap();
        let p = simulate_dual(
            &spec,
            &[0.3],
            2.0,
            &DualConfig::default(),
            &[0.5, 1.0, 2.0],
            &mut rng::stream(0, 0),
        );
        for (t, x) in p.times.iter().zip(&p.values) {
            let exact = 1.0 - 0.7 * math::exp(-t);
            assert!((x[0] - exact).abs() < 1e-12, "t={t}: {} vs {exact}", x[0]);
        }
    }

    #[test]
    fn jump_maps_stay_in_unit_cube() {
        for kind in EventKind::ALL {
            for &y in &[0.1, 0.5, 1.0] {
                let j = DualJump {
                    kind,
                    v: 0,
                    u: 1,
                    y,
                    rate: 1.0,
                };
                for &a in &[0.0, 0.3, 1.0] {
                    for &b in &[0.0, 0.6, 1.0] {
                        for &theta in &[0.0, 0.5, 0.99] {
                            let out = j.apply(&[a, b], theta);
                            assert!((0.0..=1.0).contains(&out), "{kind:?} {y} {a} {b} -> {out}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn disaster_jump_toward_one() {
        let spec = presets::binomial_disasters(0.5, 0.0, 0.5).unwrap();
        let p = simulate_dual(
            &spec,
            &[0.2],
            20.0,
            &DualConfig::default(),
            &[],
            &mut rng::stream(4, 0),
        );
        let jumps = p.outcome.jumps as i32;
        let expected = 1.0 - 0.8 * math::powf(0.5, jumps as f64);
        assert!((p.outcome.final_state[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn jump_times_independent_of_dt() {
        // no noise: the jump stream does not depend on the drift step
        let spec = ModelSpec::builder(GraphSpec::complete(2).unwrap())
            .migration(0, 1, AtomicMeasure::new([(0.0, 1.0), (0.5, 1.0)]).unwrap())
            .death(1, AtomicMeasure::dirac(0.3, 0.6).unwrap())
            .build()
            .unwrap();
        let engine = DualEngine::new(&spec);
        // a jump is observed at the same time as the step that reached it
        let jump_times = |dt: f64| {
            let mut ts: Vec<f64> = Vec::new();
            let cfg = DualConfig {
                dt,
                scheme: Scheme::Euler,
                ..Default::default()
            };
            run_dual(
                &engine,
                &[0.4, 0.1],
                5.0,
                &cfg,
                &[],
                &mut rng::stream(8, 0),
                |t, _| {
                    ts.push(t);
                    ControlFlow::Continue(())
                },
            );
            ts.windows(2)
                .filter(|w| w[1] == w[0])
                .map(|w| w[0])
                .collect::<Vec<_>>()
        };
        let coarse = jump_times(1e-2);
        assert!(!coarse.is_empty());
        assert_eq!(coarse, jump_times(1e-3));
    }

    #[test]
    fn moment_trivial_cases() {
        let spec = presets::yule(1.0, 0.0).unwrap();
        let e = moment_estimate(
            &spec,
            &[0.5],
            &[3],
            0.0,
            10,
            &DualConfig::default(),
            1,
            &Sequential,
        );
        assert_eq!(e.mean, 0.125);
        assert_eq!(e.se, 0.0);
        let e = moment_estimate(
            &spec,
            &[0.5],
            &[0],
            2.0,
            10,
            &DualConfig::default(),
            1,
            &Sequential,
        );
        assert_eq!(e.mean, 1.0);
    }

    #[test]
    fn tau_cases() {
        let spec = ModelSpec::zero(GraphSpec::complete(2).unwrap());
        let cfg = DualConfig::default();
        assert_eq!(
            tau_hit(&spec, &[1.0, 1.0], 1.0, &cfg, &mut rng::stream(0, 0)),
            Some(0.0)
        );
        assert_eq!(
            tau_hit(&spec, &[0.5, 1.0], 1.0, &cfg, &mut rng::stream(0, 0)),
            None
        );
        let full = presets::binomial_disasters(1.0, 0.0, 1.0).unwrap();
        let hit = tau_hit(&full, &[0.2], 100.0, &cfg, &mut rng::stream(0, 0));
        assert!(hit.is_some_and(|t| t > 0.0));
    }
}
