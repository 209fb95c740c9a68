//! Verification built on the simulators: the exact oracle, the forward/dual
//! duality check, coming-down-from-infinity and fixation probes, variance
//! ordering across coordination levels, and the contact-process coupling.

pub mod coupling;
pub mod oracle;

use alloc::string::String;
use alloc::vec::Vec;

pub use coupling::{
    coupled_contact_run, coupling_check_contact, ContactParams, CoupledRun, CouplingSummary,
};
pub use oracle::{oracle_expm, OracleError, OracleOptions, OracleValue};

use crate::dual::{self, DualConfig, DualEngine, DualObservable};
use crate::exec::Executor;
use crate::forward::{self, ForwardEngine, ForwardError, McOptions, Observable};
use crate::model::{presets, GraphSpec, ModelError, ModelSpec, TypeSignature};
use crate::rng::{self, derive_seed};
use crate::stats::{batch_variance, EstimateWithCI, VARIANCE_BATCHES};

/// Default two-sided pass threshold for z-scores.
pub const Z_THRESHOLD: f64 = 4.0;

/// Forward and dual estimates of `E[H(X_t, z)] = E[H(x, Z_t)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub forward: EstimateWithCI,
    pub dual: EstimateWithCI,
    pub z_score: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Forward replicas that hit a cap.
    pub capped: u64,
    /// Dual replicas flagged for excessive clamping.
    pub flagged: u64,
}

impl DualityReport {
    pub fn new(forward: EstimateWithCI, dual: EstimateWithCI, threshold: f64) -> Self {
        let z_score = forward.z_score(&dual);
        DualityReport {
            forward,
            dual,
            z_score,
            threshold,
            pass: z_score < threshold,
            capped: 0,
            flagged: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityOptions {
    pub forward: McOptions,
    pub dual: DualConfig,
    pub threshold: f64,
}

impl Default for DualityOptions {
    fn default() -> Self {
        DualityOptions {
            forward: McOptions::default(),
            dual: DualConfig::default(),
            threshold: Z_THRESHOLD,
        }
    }
}

/// Estimates both sides of the moment duality with `n_replicas` each. The
/// forward side uses streams under `derive_seed(seed, 1)`, the dual side
/// under `derive_seed(seed, 2)`.
#[allow(clippy::too_many_arguments)]
pub fn duality_check<E: Executor>(
    spec: &ModelSpec,
    x: &[f64],
    z: &[u64],
    t: f64,
    n_replicas: u64,
    seed: u64,
    opts: &DualityOptions,
    exec: &E,
) -> Result<DualityReport, ForwardError> {
    let engine = ForwardEngine::new(spec);
    let fwd = forward::monte_carlo(
        &engine,
        z,
        t,
        n_replicas,
        &[Observable::Duality(x.to_vec())],
        derive_seed(seed, 1),
        &opts.forward,
        exec,
    )?;
    let (dual_est, flagged) = if t == 0.0 {
        (EstimateWithCI::exact(crate::math::duality_h(x, z)), 0)
    } else {
        let d = dual::dual_monte_carlo(
            &DualEngine::new(spec),
            x,
            t,
            n_replicas,
            &[DualObservable::Moment(z.to_vec())],
            derive_seed(seed, 2),
            &opts.dual,
            exec,
        );
        (d.estimates[0], d.flagged)
    };
    let mut report = DualityReport::new(fwd.estimates[0], dual_est, opts.threshold);
    report.capped = fwd.capped;
    report.flagged = flagged;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdiPoint {
    /// Starting size per vertex.
    pub n: u64,
    /// `P_{n 1}(|Z_t| < m)`.
    pub estimate: EstimateWithCI,
    pub capped: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauPoint {
    /// Starting value per coordinate.
    pub x: f64,
    /// `P_{x 1}(tau < t)`.
    pub estimate: EstimateWithCI,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdiCurve {
    pub points: Vec<CdiPoint>,
    /// Companion dual curve; empty when no `x` grid was requested.
    pub tau: Vec<TauPoint>,
    /// Largest observed `P_x(tau < t)` over the `x` grid.
    pub tau_sup: Option<f64>,
    /// Change of the estimate between the two largest `n` (the finite-`n`
    /// trend standing in for the limit).
    pub trend: Option<f64>,
}

/// `n -> P_{n 1}(|Z_t| < m)` for each `n` in `n_list`, plus, for each `x` in
/// `x_grid`, the dual hitting probability `P_{x 1}(tau < t)`.
#[allow(clippy::too_many_arguments)]
pub fn cdi_probe<E: Executor>(
    spec: &ModelSpec,
    n_list: &[u64],
    m: u64,
    t: f64,
    n_replicas: u64,
    seed: u64,
    x_grid: &[f64],
    opts: &DualityOptions,
    exec: &E,
) -> Result<CdiCurve, ForwardError> {
    let engine = ForwardEngine::new(spec);
    let nv = spec.n_vertices();
    let mut points = Vec::with_capacity(n_list.len());
    for (k, &n) in n_list.iter().enumerate() {
        let z0 = alloc::vec![n; nv];
        let res = forward::monte_carlo(
            &engine,
            &z0,
            t,
            n_replicas,
            &[Observable::TotalBelow(m)],
            derive_seed(seed, 100 + k as u64),
            &opts.forward,
            exec,
        )?;
        points.push(CdiPoint {
            n,
            estimate: res.estimates[0],
            capped: res.capped,
        });
    }
    let dual_engine = DualEngine::new(spec);
    let tau: Vec<TauPoint> = x_grid
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let s = derive_seed(seed, 10_000 + k as u64);
            let hits = exec.map(n_replicas, |r| {
                let x0 = alloc::vec![x; nv];
                let hit =
                    dual::tau_hit_engine(&dual_engine, &x0, t, &opts.dual, &mut rng::stream(s, r));
                f64::from(u8::from(hit.is_some()))
            });
            TauPoint {
                x,
                estimate: EstimateWithCI::from_samples(&hits),
            }
        })
        .collect();
    let tau_sup = tau.iter().map(|p| p.estimate.mean).reduce(f64::max);
    let trend = match points.as_slice() {
        [.., a, b] => Some(b.estimate.mean - a.estimate.mean),
        _ => None,
    };
    Ok(CdiCurve {
        points,
        tau,
        tau_sup,
        trend,
    })
}

/// Estimate of `P(N_T > 1 - eps)` for the one-dimensional frequency process
/// with drift `-alpha N (1 - N)` and, at rate 1, jumps
/// `1 - N -> (1 - p)(1 - N)`, started from `N_0 = n0`.
#[allow(clippy::too_many_arguments)]
pub fn fixation_probe<E: Executor>(
    alpha: f64,
    p: f64,
    t: f64,
    eps: f64,
    n0: f64,
    n_replicas: u64,
    seed: u64,
    cfg: &DualConfig,
    exec: &E,
) -> Result<EstimateWithCI, ModelError> {
    if !(alpha >= 0.0) || !(0.0..=1.0).contains(&p) {
        return Err(ModelError::InvalidParameter {
            name: "alpha/p".into(),
            reason: alloc::format!("need alpha >= 0 and p in [0,1], got {alpha}, {p}"),
        });
    }
    let spec = fixation_model(alpha, p)?;
    let level = 1.0 - eps;
    let hits = exec.map(n_replicas, |r| {
        let path = dual::simulate_dual(&spec, &[n0], t, cfg, &[], &mut rng::stream(seed, r));
        f64::from(u8::from(path.outcome.final_state[0] > level))
    });
    Ok(EstimateWithCI::from_samples(&hits))
}

/// One-vertex model whose dual is the fixation process `N`: `D = p delta_p`
/// gives jumps `N -> N + p(1 - N)` at rate `p / p = 1`, and `R = alpha delta_0`
/// gives the drift `-alpha N (1 - N)`.
pub fn fixation_model(alpha: f64, p: f64) -> Result<ModelSpec, ModelError> {
    presets::binomial_disasters(p, alpha, p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEntry {
    pub label: String,
    /// Atom location used for every measure of the spec.
    pub y: f64,
    pub mean: EstimateWithCI,
    pub variance: EstimateWithCI,
    pub capped: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceOrderReport {
    /// Independent, intermediate, coordinated; in that order.
    pub entries: Vec<VarianceEntry>,
    /// Variance means strictly in increasing order.
    pub ordered: bool,
    /// No consecutive pair reversed by more than `k` combined batch SEs.
    pub consistent: bool,
}

/// Builds the `delta_0`, `delta_{1/2}` and `delta_1` specs of one
/// coalescence-free type and estimates `Var[Z_t^(v)]` from `z0` for each,
/// with 30-batch standard errors. All three share the seed schedule.
#[allow(clippy::too_many_arguments)]
pub fn variance_order_check<E: Executor>(
    graph: &GraphSpec,
    signature: &TypeSignature,
    z0: &[u64],
    v: usize,
    t: f64,
    n_replicas: u64,
    seed: u64,
    k: f64,
    opts: &McOptions,
    exec: &E,
) -> Result<VarianceOrderReport, ForwardError> {
    if signature.has_coalescence() {
        return Err(ForwardError::Model(ModelError::Unsupported(
            "variance ordering needs a coalescence-free type".into(),
        )));
    }
    let mut entries = Vec::with_capacity(3);
    for (label, y) in [
        ("independent", 0.0),
        ("intermediate", 0.5),
        ("coordinated", 1.0),
    ] {
        let spec = ModelSpec::from_signature(graph.clone(), signature, y)?;
        let engine = ForwardEngine::new(&spec);
        let mc_opts = McOptions {
            keep_samples: true,
            ..*opts
        };
        let res = forward::monte_carlo(
            &engine,
            z0,
            t,
            n_replicas,
            &[Observable::VertexCount(v)],
            seed,
            &mc_opts,
            exec,
        )?;
        entries.push(VarianceEntry {
            label: label.into(),
            y,
            mean: res.estimates[0],
            variance: batch_variance(&res.samples[0], VARIANCE_BATCHES),
            capped: res.capped,
        });
    }
    let ordered = entries
        .windows(2)
        .all(|w| w[0].variance.mean <= w[1].variance.mean);
    let consistent = entries.windows(2).all(|w| {
        let (a, b) = (&w[0].variance, &w[1].variance);
        a.mean <= b.mean + k * libm::sqrt(a.se * a.se + b.se * b.se)
    });
    Ok(VarianceOrderReport {
        entries,
        ordered,
        consistent,
    })
}
