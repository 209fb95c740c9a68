//! Random potentials on finite graphs and Monte Carlo estimators for the
//! first moment of branching random walks in random environment: the
//! Feynman–Kac path functional, the lonely-walker (fully coordinated)
//! process, and the variance bound that dominates every process of the type.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Pareto, Poisson, Uniform};

use crate::analytics::{AnalyticsError, PotentialFamily, PotentialField};
use crate::dual::{dual_ode, DualOdeError};
use crate::exec::Executor;
use crate::forward::{run, ForwardEngine, ForwardError, Limits, SimOptions};
use crate::measure::AtomicMeasure;
use crate::model::{GraphSpec, ModelError, ModelSpec};
use crate::rng;
use crate::stats::{batch_variance, EstimateWithCI, MeanAccumulator, VARIANCE_BATCHES};

/// Weights are accumulated in log space and capped at `exp(LOG_WEIGHT_CAP)`.
pub const LOG_WEIGHT_CAP: f64 = 700.0;

fn draw<R: Rng + ?Sized>(family: &PotentialFamily, rng: &mut R) -> Result<f64, AnalyticsError> {
    let bad = |_| AnalyticsError::UnsupportedFamily(alloc::format!("{family:?}"));
    Ok(match *family {
        PotentialFamily::Zero => 0.0,
        PotentialFamily::Uniform { lo, hi } => {
            if !(0.0 <= lo && lo <= hi && hi.is_finite()) {
                return Err(bad(()));
            }
            if lo == hi {
                lo
            } else {
                Uniform::new_inclusive(lo, hi)
                    .map_err(|_| bad(()))?
                    .sample(rng)
            }
        }
        PotentialFamily::Exponential { rate } => {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(bad(()));
            }
            let e: f64 = Exp1.sample(rng);
            e / rate
        }
        PotentialFamily::Pareto { alpha, scale } => {
            Pareto::new(scale, alpha).map_err(|_| bad(()))?.sample(rng)
        }
    })
}

/// I.i.d. `xi_plus` and `xi_minus` per vertex. All positive parts are drawn
/// first, then all negative parts, from stream `(seed, 0)`.
pub fn sample_potential(
    plus: &PotentialFamily,
    minus: &PotentialFamily,
    n_vertices: usize,
    seed: u64,
) -> Result<PotentialField, AnalyticsError> {
    let mut g = rng::stream(seed, 0);
    let xp = (0..n_vertices)
        .map(|_| draw(plus, &mut g))
        .collect::<Result<Vec<_>, _>>()?;
    let xm = (0..n_vertices)
        .map(|_| draw(minus, &mut g))
        .collect::<Result<Vec<_>, _>>()?;
    PotentialField::new(xp, xm)
}

/// Path of the continuous-time simple random walk that jumps along each
/// incident edge at rate 1, observed on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    /// Jump times, increasing, all in `(0, horizon]`.
    pub jump_times: Vec<f64>,
    /// `positions[0]` is the start; `positions[k + 1]` the site after jump `k`.
    pub positions: Vec<usize>,
    pub horizon: f64,
}

impl WalkPath {
    pub fn sample<R: Rng + ?Sized>(
        graph: &GraphSpec,
        v0: usize,
        horizon: f64,
        rng: &mut R,
    ) -> Self {
        let mut jump_times = Vec::new();
        let mut positions = vec![v0];
        let mut t = 0.0;
        let mut v = v0;
        loop {
            let nbrs = graph.neighbors(v);
            if nbrs.is_empty() {
                break;
            }
            let e: f64 = Exp1.sample(rng);
            t += e / nbrs.len() as f64;
            if t > horizon {
                break;
            }
            v = nbrs[rng.random_range(0..nbrs.len())];
            jump_times.push(t);
            positions.push(v);
        }
        WalkPath {
            jump_times,
            positions,
            horizon,
        }
    }

    pub fn end(&self) -> usize {
        *self.positions.last().expect("walk has a start")
    }

    pub fn position_at(&self, s: f64) -> usize {
        let k = self.jump_times.partition_point(|&j| j <= s);
        self.positions[k]
    }

    /// `int_0^horizon f(Y_s) ds`, exact for piecewise-constant `f`.
    pub fn integral(&self, f: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut last = 0.0;
        for (k, &j) in self.jump_times.iter().enumerate() {
            total += f[self.positions[k]] * (j - last);
            last = j;
        }
        total + f[self.end()] * (self.horizon - last)
    }
}

/// Killing time of the lonely walker, realized through one unit exponential
/// threshold: the walker is alive at `t` iff `int_0^t xi_minus(Y_s) ds < E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KillingClock {
    pub threshold: f64,
}

impl KillingClock {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        KillingClock {
            threshold: Exp1.sample(rng),
        }
    }

    pub fn survives(&self, integrated_minus: f64) -> bool {
        integrated_minus < self.threshold
    }
}

/// Estimate together with the number of replicas whose weight hit the cap.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEstimate {
    pub estimate: EstimateWithCI,
    pub flagged: u64,
}

fn check_inputs(xi: &PotentialField, graph: &GraphSpec, v0: usize) -> Result<(), AnalyticsError> {
    let n = graph.n_vertices();
    if xi.len() != n {
        return Err(AnalyticsError::Dimension {
            got: xi.len(),
            expected: n,
        });
    }
    if v0 >= n {
        return Err(AnalyticsError::Dimension {
            got: v0,
            expected: n,
        });
    }
    Ok(())
}

fn capped_exp(log_w: f64) -> (f64, bool) {
    if log_w > LOG_WEIGHT_CAP {
        (crate::math::exp(LOG_WEIGHT_CAP), true)
    } else {
        (crate::math::exp(log_w), false)
    }
}

/// Shared-ensemble estimator: replica `r` draws a walk (plus whatever else
/// `weight` needs) from stream `(seed, r)` and returns its end vertex, its
/// weight and whether the weight was capped. The indicator `1{Y_t = v}`
/// partitions the ensemble, so one run yields every vertex.
fn per_vertex<E, F>(
    n_vertices: usize,
    n_replicas: u64,
    seed: u64,
    exec: &E,
    sample: F,
) -> Vec<WeightedEstimate>
where
    E: Executor,
    F: Fn(&mut rng::SimRng) -> (usize, f64, bool) + Sync + Send,
{
    let draws = exec.map(n_replicas, |r| sample(&mut rng::stream(seed, r)));
    (0..n_vertices)
        .map(|v| {
            let mut acc = MeanAccumulator::default();
            let mut flagged = 0;
            for &(end, w, capped) in &draws {
                acc.push(if end == v { w } else { 0.0 });
                flagged += u64::from(capped && end == v);
            }
            WeightedEstimate {
                estimate: acc.estimate(),
                flagged,
            }
        })
        .collect()
}

/// `E[exp(int_0^t xi(Y_s) ds) 1{Y_t = v}]` for the walk started at `v0`, for
/// every `v` from one shared ensemble.
pub fn fk_estimator_all<E: Executor>(
    xi: &PotentialField,
    graph: &GraphSpec,
    v0: usize,
    t: f64,
    n_replicas: u64,
    seed: u64,
    exec: &E,
) -> Result<Vec<WeightedEstimate>, AnalyticsError> {
    check_inputs(xi, graph, v0)?;
    let values = xi.values();
    Ok(per_vertex(
        graph.n_vertices(),
        n_replicas,
        seed,
        exec,
        |g| {
            let walk = WalkPath::sample(graph, v0, t, g);
            let (w, capped) = capped_exp(walk.integral(&values));
            (walk.end(), w, capped)
        },
    ))
}

#[allow(clippy::too_many_arguments)]
pub fn fk_estimator<E: Executor>(
    xi: &PotentialField,
    graph: &GraphSpec,
    v0: usize,
    v: usize,
    t: f64,
    n_replicas: u64,
    seed: u64,
    exec: &E,
) -> Result<WeightedEstimate, AnalyticsError> {
    let mut all = fk_estimator_all(xi, graph, v0, t, n_replicas, seed, exec)?;
    if v >= all.len() {
        return Err(AnalyticsError::Dimension {
            got: v,
            expected: all.len(),
        });
    }
    Ok(all.swap_remove(v))
}

/// Path quantities of one lonely-walker replica: the walk, the doubling
/// count `N ~ Poisson(int xi_plus)` and the killing clock.
struct LonelyDraw {
    end: usize,
    plus: f64,
    doublings: f64,
    alive: bool,
}

fn lonely_draw(
    xi: &PotentialField,
    graph: &GraphSpec,
    v0: usize,
    t: f64,
    g: &mut rng::SimRng,
) -> LonelyDraw {
    let walk = WalkPath::sample(graph, v0, t, g);
    let plus = walk.integral(xi.plus());
    let minus = walk.integral(xi.minus());
    let doublings = if plus > 0.0 {
        Poisson::new(plus).expect("positive mean").sample(g)
    } else {
        0.0
    };
    let clock = KillingClock::sample(g);
    LonelyDraw {
        end: walk.end(),
        plus,
        doublings,
        alive: clock.survives(minus),
    }
}

/// `E[2^{N} 1{Y_t = v} 1{t < T}]` for the fully coordinated process: one
/// walker whose population doubles at the jumps of a Poisson process run at
/// speed `xi_plus(Y)` and that is killed at speed `xi_minus(Y)`.
pub fn lonely_walker_all<E: Executor>(
    xi: &PotentialField,
    graph: &GraphSpec,
    v0: usize,
    t: f64,
    n_replicas: u64,
    seed: u64,
    exec: &E,
) -> Result<Vec<WeightedEstimate>, AnalyticsError> {
    check_inputs(xi, graph, v0)?;
    Ok(per_vertex(
        graph.n_vertices(),
        n_replicas,
        seed,
        exec,
        |g| {
            let d = lonely_draw(xi, graph, v0, t, g);
            if !d.alive {
                return (d.end, 0.0, false);
            }
            let (w, capped) = capped_exp(d.doublings * core::f64::consts::LN_2);
            (d.end, w, capped)
        },
    ))
}

#[allow(clippy::too_many_arguments)]
pub fn lonely_walker_estimator<E: Executor>(
    xi: &PotentialField,
    graph: &GraphSpec,
    v0: usize,
    v: usize,
    t: f64,
    n_replicas: u64,
    seed: u64,
    exec: &E,
) -> Result<WeightedEstimate, AnalyticsError> {
    let mut all = lonely_walker_all(xi, graph, v0, t, n_replicas, seed, exec)?;
    if v >= all.len() {
        return Err(AnalyticsError::Dimension {
            got: v,
            expected: all.len(),
        });
    }
    Ok(all.swap_remove(v))
}

/// Monte Carlo of `E[e^{I} (e^{2I} - 1) 1{Y_t = v} 1{t < T}]` with
/// `I = int_0^t xi_plus(Y_s) ds`, an upper bound on `Var[Z_t^(v)]` for every
/// process of the PAM type started from one particle at `v0`.
#[allow(clippy::too_many_arguments)]
pub fn variance_bound_estimator<E: Executor>(
    xi: &PotentialField,
    graph: &GraphSpec,
    v0: usize,
    v: usize,
    t: f64,
    n_replicas: u64,
    seed: u64,
    exec: &E,
) -> Result<WeightedEstimate, AnalyticsError> {
    check_inputs(xi, graph, v0)?;
    let mut all = per_vertex(graph.n_vertices(), n_replicas, seed, exec, |g| {
        let d = lonely_draw(xi, graph, v0, t, g);
        if !d.alive || d.plus == 0.0 {
            return (d.end, 0.0, false);
        }
        // log(e^I (e^{2I} - 1)) = 3I + log(1 - e^{-2I})
        let log_w = 3.0 * d.plus + crate::math::ln1p(-crate::math::exp(-2.0 * d.plus));
        let (w, capped) = capped_exp(log_w);
        (d.end, w, capped)
    });
    if v >= all.len() {
        return Err(AnalyticsError::Dimension {
            got: v,
            expected: all.len(),
        });
    }
    Ok(all.swap_remove(v))
}

/// Variance of `Z_t^(v)` from forward runs of `spec` started at `z0`, with a
/// batch-means standard error. Capped replicas are evaluated where they
/// stopped and counted.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate {
    pub variance: EstimateWithCI,
    pub mean: EstimateWithCI,
    pub capped: u64,
}

#[allow(clippy::too_many_arguments)]
pub fn forward_variance<E: Executor>(
    spec: &ModelSpec,
    z0: &[u64],
    v: usize,
    t: f64,
    n_replicas: u64,
    seed: u64,
    limits: Limits,
    exec: &E,
) -> Result<VarianceEstimate, ForwardError> {
    let engine = ForwardEngine::new(spec);
    let res = crate::forward::monte_carlo(
        &engine,
        z0,
        t,
        n_replicas,
        &[crate::forward::Observable::VertexCount(v)],
        seed,
        &crate::forward::McOptions {
            limits,
            exclude_capped: false,
            keep_samples: true,
        },
        exec,
    )?;
    let samples = &res.samples[0];
    Ok(VarianceEstimate {
        variance: batch_variance(samples, VARIANCE_BATCHES),
        mean: res.estimates[0],
        capped: res.capped,
    })
}

/// Branching random walk on a line of `length` sites with no death:
/// `R_vv = r delta_0` everywhere and `M_{v,v+1} = m delta_0`; the last site
/// only receives.
pub fn directed_line_brw(length: usize, r: f64, m: f64) -> Result<ModelSpec, ModelError> {
    let graph = GraphSpec::line(length)?;
    let mut b = ModelSpec::builder(graph);
    for v in 0..length {
        b = b.reproduction(v, v, AtomicMeasure::dirac(0.0, r)?);
        if v + 1 < length {
            b = b.migration(v, v + 1, AtomicMeasure::dirac(0.0, m)?);
        }
    }
    b.build()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OccupancyError {
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error(transparent)]
    Dual(#[from] DualOdeError),
    #[error("vertex {vertex} out of range for {n_vertices} vertices")]
    Vertex { vertex: usize, n_vertices: usize },
}

/// `P_{e_source}(Z_t^(probe) = 0)` on a time grid, by forward Monte Carlo
/// and by the dual ODE started from `1 - e_probe`, read at `source`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyCurve {
    pub times: Vec<f64>,
    pub monte_carlo: Vec<EstimateWithCI>,
    pub dual: Vec<f64>,
    pub dual_error: f64,
    pub capped: u64,
}

impl OccupancyCurve {
    /// Per grid point `|mc - ode| / se`. The standard error is the larger of
    /// the sample one and the binomial one under the ODE value, so grid
    /// points where every replica agrees (sample SE 0) are still tested.
    pub fn z_scores(&self) -> Vec<f64> {
        self.monte_carlo
            .iter()
            .zip(&self.dual)
            .map(|(mc, &p)| {
                let null = if mc.n > 0 {
                    crate::math::sqrt((p * (1.0 - p)).max(0.0) / mc.n as f64)
                } else {
                    0.0
                };
                crate::stats::z_score(mc.mean, mc.se.max(null), p, 0.0)
            })
            .collect()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn occupancy_curve<E: Executor>(
    spec: &ModelSpec,
    source: usize,
    probe: usize,
    times: &[f64],
    n_replicas: u64,
    seed: u64,
    limits: Limits,
    exec: &E,
) -> Result<OccupancyCurve, OccupancyError> {
    let n = spec.n_vertices();
    for vertex in [source, probe] {
        if vertex >= n {
            return Err(OccupancyError::Vertex {
                vertex,
                n_vertices: n,
            });
        }
    }
    let mut x0 = vec![1.0; n];
    x0[probe] = 0.0;
    let sol = dual_ode(spec, &x0, times, 1e-3)?;
    let dual = sol.values.iter().map(|x| x[source]).collect();

    let mut z0 = vec![0; n];
    z0[source] = 1;
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let engine = ForwardEngine::new(spec);
    let opts = SimOptions {
        limits,
        record_events: false,
        snapshot_times: times.to_vec(),
    };
    let runs = exec.map(n_replicas, |r| {
        let mut g = rng::stream(seed, r);
        match run(&engine, &z0, t_end, &opts, &mut g, |_, _| {}) {
            Ok(traj) => {
                let mut empty = vec![0.0; times.len()];
                for snap in &traj.snapshots {
                    // snapshots come back sorted; map each to every matching grid time
                    for (k, &s) in times.iter().enumerate() {
                        if s == snap.time {
                            empty[k] = f64::from(u8::from(snap.state[probe] == 0));
                        }
                    }
                }
                Ok(empty)
            }
            Err(ForwardError::CapExceeded { .. }) => Err(()),
            Err(e) => panic!("forward run failed: {e}"),
        }
    });
    let mut accs = vec![MeanAccumulator::default(); times.len()];
    let mut capped = 0;
    for r in runs {
        match r {
            Ok(empty) => {
                for (a, x) in accs.iter_mut().zip(empty) {
                    a.push(x);
                }
            }
            Err(()) => capped += 1,
        }
    }
    Ok(OccupancyCurve {
        times: times.to_vec(),
        monte_carlo: accs.iter().map(MeanAccumulator::estimate).collect(),
        dual,
        dual_error: sol.error_estimate,
        capped,
    })
}
