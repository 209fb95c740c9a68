//! Fixed-step classical Runge–Kutta with a step-halving error estimate.

use alloc::vec;
use alloc::vec::Vec;

/// Values of an ODE solution at requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    /// `values[k]` is the state at `times[k]`.
    pub values: Vec<Vec<f64>>,
    /// Max-norm difference between the runs at `dt` and `dt/2` over all
    /// reported values.
    pub error_estimate: f64,
}

impl OdeSolution {
    pub fn last(&self) -> &[f64] {
        self.values.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// One RK4 step of size `h` from `(t, y)`, written to `out`.
pub fn rk4_step<F>(f: &F, t: f64, y: &[f64], h: f64, out: &mut [f64])
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(t, y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(t + 0.5 * h, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(t + 0.5 * h, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    f(t + h, &tmp, &mut k4);
    for i in 0..n {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Integrates `y' = f(t, y)` from `y(0) = y0` with steps of at most `dt`,
/// landing exactly on each requested time. `times` must be nonnegative and
/// nondecreasing.
pub fn integrate<F>(f: &F, y0: &[f64], times: &[f64], dt: f64) -> Vec<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    assert!(dt > 0.0, "step must be positive");
    let mut y = y0.to_vec();
    let mut next = vec![0.0; y.len()];
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        assert!(target >= t, "times must be nondecreasing and nonnegative");
        let span = target - t;
        let steps = crate::math::ceil(span / dt).max(0.0) as u64;
        if steps > 0 {
            let h = span / steps as f64;
            for s in 0..steps {
                rk4_step(f, t + s as f64 * h, &y, h, &mut next);
                core::mem::swap(&mut y, &mut next);
            }
        }
        t = target;
        out.push(y.clone());
    }
    out
}

/// [`integrate`] at `dt` and at `dt/2`; returns the finer run with the
/// max-norm discrepancy between the two as error estimate.
pub fn integrate_with_error<F>(f: &F, y0: &[f64], times: &[f64], dt: f64) -> OdeSolution
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let coarse = integrate(f, y0, times, dt);
    let fine = integrate(f, y0, times, dt / 2.0);
    let error_estimate = coarse
        .iter()
        .zip(&fine)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    OdeSolution {
        times: times.to_vec(),
        values: fine,
        error_estimate,
    }
}
