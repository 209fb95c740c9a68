//! Deterministic solvers for the first-moment equations: the linear
//! expectation system, the quadratic Kingman upper bound, the PAM heat
//! equation with potential, and the tree closed form.

pub mod expm;
pub mod ode;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::math;
use crate::model::{GraphSpec, ModelSpec, TypeSignature};
use expm::Matrix;
use ode::{integrate_with_error, OdeSolution};

/// Above this many vertices the linear system is solved by RK4 instead of a
/// dense matrix exponential.
pub const EXPM_MAX_VERTICES: usize = 2000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("model has coalescence; the expectation is not a linear ODE (use kingman_bound for Lambda = c delta_0)")]
    Coalescence,
    #[error("coalescence measure at vertex {0} has positive atoms; the quadratic bound needs Lambda = c delta_0")]
    NonKingman(usize),
    #[error("initial vector has {got} entries, model has {expected} vertices")]
    Dimension { got: usize, expected: usize },
    #[error("time must be finite and nonnegative, got {0}")]
    BadTime(f64),
    #[error("potential entries must be finite and nonnegative ({0})")]
    BadPotential(String),
    #[error("unsupported potential family: {0}")]
    UnsupportedFamily(String),
}

/// Random potential `xi = xi_plus - xi_minus`, both parts nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    xi_plus: Vec<f64>,
    xi_minus: Vec<f64>,
}

impl PotentialField {
    pub fn new(xi_plus: Vec<f64>, xi_minus: Vec<f64>) -> Result<Self, AnalyticsError> {
        if xi_plus.len() != xi_minus.len() {
            return Err(AnalyticsError::BadPotential(format!(
                "{} positive vs {} negative entries",
                xi_plus.len(),
                xi_minus.len()
            )));
        }
        for (v, &x) in xi_plus.iter().chain(&xi_minus).enumerate() {
            if !x.is_finite() || x < 0.0 {
                return Err(AnalyticsError::BadPotential(format!(
                    "entry {} is {x}",
                    v % xi_plus.len().max(1)
                )));
            }
        }
        Ok(PotentialField { xi_plus, xi_minus })
    }

    pub fn zero(n: usize) -> Self {
        PotentialField {
            xi_plus: vec![0.0; n],
            xi_minus: vec![0.0; n],
        }
    }

    /// Constant `xi = gamma` (split into its positive and negative part).
    pub fn constant(n: usize, gamma: f64) -> Result<Self, AnalyticsError> {
        Self::new(vec![gamma.max(0.0); n], vec![(-gamma).max(0.0); n])
    }

    pub fn len(&self) -> usize {
        self.xi_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi_plus.is_empty()
    }

    pub fn plus(&self) -> &[f64] {
        &self.xi_plus
    }

    pub fn minus(&self) -> &[f64] {
        &self.xi_minus
    }

    pub fn xi(&self, v: usize) -> f64 {
        self.xi_plus[v] - self.xi_minus[v]
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|v| self.xi(v)).collect()
    }
}

/// Linear system `f' = Q f`, `f(0) = f0`, where `f(t, v)` is the mean number
/// of particles at `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub q: Matrix,
    pub f0: Vec<f64>,
}

impl LinearSystem {
    pub fn rhs(&self, f: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.q.mul_vec(f));
    }
}

/// Value at one time with its step-halving error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeValue {
    pub values: Vec<f64>,
    pub error_estimate: f64,
}

/// `Q` built from the type: `Q[v][u] = m_uv + r_uv` for `u != v`,
/// `Q[v][v] = -sum_u m_vu - d_v + r_vv`.
pub fn generator_matrix(sig: &TypeSignature) -> Matrix {
    let n = sig.n_vertices();
    let mut q = Matrix::zeros(n);
    for v in 0..n {
        q[(v, v)] -= sig.death[v];
    }
    for (&(from, to), &m) in &sig.migration {
        q[(to, from)] += m;
        q[(from, from)] -= m;
    }
    for (&(from, to), &r) in &sig.reproduction {
        q[(to, from)] += r;
    }
    q
}

pub fn linear_system(spec: &ModelSpec, z0: &[f64]) -> Result<LinearSystem, AnalyticsError> {
    if spec.has_coalescence() {
        return Err(AnalyticsError::Coalescence);
    }
    check_dim(spec.n_vertices(), z0)?;
    Ok(LinearSystem {
        q: generator_matrix(&spec.type_of()),
        f0: z0.to_vec(),
    })
}

fn check_dim(n: usize, z0: &[f64]) -> Result<(), AnalyticsError> {
    if z0.len() != n {
        return Err(AnalyticsError::Dimension {
            got: z0.len(),
            expected: n,
        });
    }
    Ok(())
}

fn check_time(t: f64) -> Result<(), AnalyticsError> {
    if !t.is_finite() || t < 0.0 {
        return Err(AnalyticsError::BadTime(t));
    }
    Ok(())
}

/// RK4 step for a linear or quadratic system with generator norm `norm`.
fn step_for(norm: f64) -> f64 {
    1e-3 / norm.max(1.0)
}

/// `exp(tQ) f0`. Small systems use the matrix exponential; the error
/// estimate is the larger of the RK4 step-halving discrepancy and the gap
/// between RK4 and the exponential.
pub fn solve_linear(system: &LinearSystem, t: f64) -> OdeValue {
    let n = system.f0.len();
    let rhs = |_t: f64, f: &[f64], out: &mut [f64]| system.rhs(f, out);
    let dt = if n <= EXPM_MAX_VERTICES {
        step_for(system.q.norm1())
    } else {
        1e-4 * (1.0f64).max(1.0 / system.q.norm1())
    };
    let rk = integrate_with_error(&rhs, &system.f0, &[t], dt);
    if n > EXPM_MAX_VERTICES {
        return OdeValue {
            values: rk.last().to_vec(),
            error_estimate: rk.error_estimate,
        };
    }
    let values = system.q.scaled(t).expm().mul_vec(&system.f0);
    let gap = values
        .iter()
        .zip(rk.last())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    OdeValue {
        values,
        error_estimate: rk.error_estimate.max(gap),
    }
}

/// Mean particle numbers `E[Z_t^(v)]` of any coalescence-free model from
/// `Z_0 = z0`.
pub fn expectation_ode(spec: &ModelSpec, z0: &[f64], t: f64) -> Result<OdeValue, AnalyticsError> {
    check_time(t)?;
    let system = linear_system(spec, z0)?;
    Ok(solve_linear(&system, t))
}

/// Upper bound on `E[Z_t^(v)]` under Kingman coalescence: RK4 solution of
/// `f' = Q f - c (f^2 - f) / 2` with `Q` from the remaining channels.
pub fn kingman_bound(
    spec: &ModelSpec,
    z0: &[f64],
    times: &[f64],
) -> Result<OdeSolution, AnalyticsError> {
    check_dim(spec.n_vertices(), z0)?;
    for &t in times {
        check_time(t)?;
    }
    for v in 0..spec.n_vertices() {
        if spec.coalescence(v).positive_atoms().next().is_some() {
            return Err(AnalyticsError::NonKingman(v));
        }
    }
    let sig = spec.type_of();
    let q = generator_matrix(&sig);
    let c = sig.coalescence.clone();
    let rhs = |_t: f64, f: &[f64], out: &mut [f64]| {
        out.copy_from_slice(&q.mul_vec(f));
        for v in 0..f.len() {
            out[v] -= (f[v] * f[v] - f[v]) * c[v] / 2.0;
        }
    };
    let fmax = z0.iter().fold(1.0f64, |a, &b| a.max(b));
    let cmax = c.iter().fold(0.0f64, |a, &b| a.max(b));
    let dt = step_for(q.norm1() + cmax * fmax);
    Ok(integrate_with_error(&rhs, z0, times, dt))
}

/// Closed form of [`kingman_bound`] for one vertex with Kingman mass `c` and
/// reproduction mass `r`: the logistic curve of `f' = a f - c f^2 / 2` with
/// `a = r + c/2`, i.e. `a n / (c n / 2 + (a - c n / 2) e^{-a t})`. For
/// `r = 0, c = 1` this is `n / (n + (1 - n) e^{-t/2})`.
pub fn kingman_logistic(n: f64, r: f64, c: f64, t: f64) -> f64 {
    let a = r + c / 2.0;
    let b = c / 2.0;
    if a == 0.0 {
        return n;
    }
    a * n / (b * n + (a - b * n) * math::exp(-a * t))
}

/// Solution of `f' = Laplacian f + xi f`, `f(0) = e_{v0}`, at time `t`.
pub fn pam_ode(
    xi: &PotentialField,
    graph: &GraphSpec,
    v0: usize,
    t: f64,
) -> Result<OdeValue, AnalyticsError> {
    check_time(t)?;
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
    let mut f0 = vec![0.0; n];
    f0[v0] = 1.0;
    let q = Matrix::laplacian(graph).add_diagonal(&xi.values());
    Ok(solve_linear(&LinearSystem { q, f0 }, t))
}

/// Mean number of particles at one generation-`k` vertex of the infinite
/// `d`-ary tree for the branching random walk with birth rate `r` and
/// outward migration rate `mu` split evenly over the `d` children, started
/// from one particle at the root: `e^{t(r-mu)} (t mu / d)^k / k!`.
pub fn tree_brw_expectation(d: usize, r: f64, mu: f64, t: f64, k: u32) -> f64 {
    let a = t * mu / d as f64;
    let log_poly = if k == 0 {
        0.0
    } else if a == 0.0 {
        return 0.0;
    } else {
        k as f64 * math::ln(a) - math::lgamma(k as f64 + 1.0)
    };
    math::exp(t * (r - mu) + log_poly)
}

/// Right-hand side of the tree reaction-diffusion system for a single vertex
/// of generation `k`: `(r - mu) f_k + (mu / d) f_{k-1}`, with `f_{-1} = 0`.
fn tree_rhs(d: usize, r: f64, mu: f64, f: &[f64], out: &mut [f64]) {
    for k in 0..f.len() {
        let inflow = if k == 0 {
            0.0
        } else {
            mu / d as f64 * f[k - 1]
        };
        out[k] = (r - mu) * f[k] + inflow;
    }
}

/// RK4 solution of the tree system for generations `0..=max_generation`,
/// one vertex per generation (all vertices of a generation share the value).
pub fn tree_brw_ode(d: usize, r: f64, mu: f64, max_generation: u32, times: &[f64]) -> OdeSolution {
    let mut f0 = vec![0.0; max_generation as usize + 1];
    f0[0] = 1.0;
    let rhs = |_t: f64, f: &[f64], out: &mut [f64]| tree_rhs(d, r, mu, f, out);
    integrate_with_error(&rhs, &f0, times, step_for((r - mu).abs() + mu / d as f64))
}

/// `|d/dt f_k - rhs_k|` for the closed form at `(t, k)`, with the time
/// derivative from a five-point central stencil of width `h`.
pub fn tree_brw_residual(d: usize, r: f64, mu: f64, t: f64, k: u32, h: f64) -> f64 {
    let f = |s: f64| tree_brw_expectation(d, r, mu, s, k);
    let deriv = (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h);
    let prev = if k == 0 {
        0.0
    } else {
        tree_brw_expectation(d, r, mu, t, k - 1)
    };
    let mut out = [0.0; 2];
    tree_rhs(d, r, mu, &[prev, f(t)], &mut out);
    let rhs = if k == 0 { (r - mu) * f(t) } else { out[1] };
    (deriv - rhs).abs()
}

/// Marginal law of one sign of the potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialFamily {
    Zero,
    /// Uniform on `[lo, hi]`.
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Exponential with the given rate.
    Exponential {
        rate: f64,
    },
    /// Pareto with tail `P(xi > x) = (scale / x)^alpha` for `x >= scale`.
    Pareto {
        alpha: f64,
        scale: f64,
    },
}

impl PotentialFamily {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialFamily::Zero => "zero",
            PotentialFamily::Uniform { .. } => "uniform",
            PotentialFamily::Exponential { .. } => "exponential",
            PotentialFamily::Pareto { .. } => "pareto",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentVerdict {
    pub passes: bool,
    pub diagnostic: String,
}

/// Whether `E[(max(xi, 2) / log max(xi, 2))^d]` is finite for the family.
///
/// For a Pareto tail the integrand behaves like `x^{d - alpha - 1} / (log x)^d`,
/// which is integrable iff `alpha > d`, or `alpha = d` and `d > 1`.
pub fn moment_condition_check(
    family: &PotentialFamily,
    d: usize,
) -> Result<MomentVerdict, AnalyticsError> {
    let df = d as f64;
    let verdict = match *family {
        PotentialFamily::Zero | PotentialFamily::Uniform { .. } => MomentVerdict {
            passes: true,
            diagnostic: format!("{} potential is bounded", family.name()),
        },
        PotentialFamily::Exponential { rate } => {
            if !(rate > 0.0) {
                return Err(AnalyticsError::UnsupportedFamily(format!(
                    "exponential rate {rate}"
                )));
            }
            MomentVerdict {
                passes: true,
                diagnostic: String::from("exponential tail beats every polynomial"),
            }
        }
        PotentialFamily::Pareto { alpha, .. } => {
            if !(alpha > 0.0) {
                return Err(AnalyticsError::UnsupportedFamily(format!(
                    "pareto alpha {alpha}"
                )));
            }
            let passes = alpha > df || (alpha == df && d > 1);
            let diagnostic = if alpha > df {
                format!("pareto tail alpha = {alpha} > d = {d}: integrable")
            } else if passes {
                format!("pareto tail alpha = d = {d} > 1: the log factor makes it integrable")
            } else {
                format!("pareto tail alpha = {alpha} <= d = {d}: tail integral diverges")
            };
            MomentVerdict { passes, diagnostic }
        }
    };
    Ok(verdict)
}
