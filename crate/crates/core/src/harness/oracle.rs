//! Brute-force oracle: enumerate the reachable part of `N_0^V` up to a state
//! cap, build the exact rate matrix from the per-channel binomial rates, and
//! evaluate `E_z0[prod_v x_v^{Z_t^(v)}]` by uniformization. Transitions out of
//! the enumerated set go to an absorbing overflow state whose duality value
//! is 0; the probability of sitting there at `t` is reported as the leak.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::math;
use crate::measure::{event_rate, EventKind};
use crate::model::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub state_cap: usize,
    /// Results whose leak exceeds this are rejected.
    pub leak_tolerance: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            state_cap: 10_000,
            leak_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    /// Probability of having left the enumerated set by time `t`.
    pub leak: f64,
    pub n_states: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("state cap {cap} too small: leak {leak:e} exceeds tolerance {tolerance:e}")]
    Leak {
        cap: usize,
        leak: f64,
        tolerance: f64,
    },
    #[error("dimension mismatch: model has {expected} vertices, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("time must be finite and nonnegative, got {0}")]
    BadTime(f64),
}

/// Exact outgoing transitions `(target state, rate)` of `z`.
pub fn transitions(spec: &ModelSpec, z: &[u64]) -> Vec<(Vec<u64>, f64)> {
    let mut out: Vec<(Vec<u64>, f64)> = Vec::new();
    let mut push = |kind: EventKind, v: usize, u: usize, i: u64, rate: f64| {
        if rate <= 0.0 {
            return;
        }
        let mut next = z.to_vec();
        match kind {
            EventKind::Migration => {
                next[v] -= i;
                next[u] += i;
            }
            EventKind::Death => next[v] -= i,
            EventKind::Reproduction => next[u] += i,
            EventKind::Coalescence => next[v] -= i - 1,
        }
        out.push((next, rate));
    };
    for (kind, v, u, measure) in spec.channels() {
        let n = z[v];
        for atom in measure.atoms() {
            if atom.y == 0.0 {
                let rate = match kind {
                    EventKind::Coalescence => math::pairs(n) * atom.mass,
                    _ => n as f64 * atom.mass,
                };
                let i = kind.min_participants();
                if n >= i {
                    push(kind, v, u, i, rate);
                }
            } else {
                let clock = event_rate(*atom, kind).expect("positive atom");
                for i in kind.min_participants()..=n {
                    push(kind, v, u, i, clock * math::binomial_pmf(n, i, atom.y));
                }
            }
        }
    }
    out
}

/// Smallest enumeration tried before growing towards `state_cap`.
const INITIAL_CAP: usize = 64;

/// `E_z0[prod_v x_v^{Z_t^(v)}]` on the enumerated chain. The enumeration
/// starts small and grows fourfold until the leak is within tolerance, the
/// reachable set is exhausted, or `state_cap` is reached.
pub fn oracle_expm(
    spec: &ModelSpec,
    z0: &[u64],
    x: &[f64],
    t: f64,
    opts: &OracleOptions,
) -> Result<OracleValue, OracleError> {
    let n = spec.n_vertices();
    for len in [z0.len(), x.len()] {
        if len != n {
            return Err(OracleError::Dimension {
                expected: n,
                got: len,
            });
        }
    }
    if !t.is_finite() || t < 0.0 {
        return Err(OracleError::BadTime(t));
    }
    let mut cap = INITIAL_CAP.min(opts.state_cap).max(1);
    loop {
        let out = evaluate(spec, z0, x, t, cap);
        if out.leak <= opts.leak_tolerance {
            return Ok(out);
        }
        if out.n_states < cap || cap >= opts.state_cap {
            return Err(OracleError::Leak {
                cap: opts.state_cap,
                leak: out.leak,
                tolerance: opts.leak_tolerance,
            });
        }
        cap = cap.saturating_mul(4).min(opts.state_cap);
    }
}

fn evaluate(spec: &ModelSpec, z0: &[u64], x: &[f64], t: f64, state_cap: usize) -> OracleValue {
    // breadth-first enumeration
    let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    let mut states: Vec<Vec<u64>> = Vec::new();
    let mut queue = VecDeque::new();
    index.insert(z0.to_vec(), 0);
    states.push(z0.to_vec());
    queue.push_back(0usize);
    let mut raw: Vec<Vec<(Vec<u64>, f64)>> = Vec::new();
    while let Some(s) = queue.pop_front() {
        let trans = transitions(spec, &states[s]);
        for (next, _) in &trans {
            if !index.contains_key(next) && states.len() < state_cap {
                index.insert(next.clone(), states.len());
                states.push(next.clone());
                queue.push_back(states.len() - 1);
            }
        }
        if raw.len() <= s {
            raw.resize(s + 1, Vec::new());
        }
        raw[s] = trans;
    }
    let n_states = states.len();
    let overflow = n_states;
    // sparse rows: (target index, rate), overflow included
    let rows: Vec<Vec<(usize, f64)>> = raw
        .into_iter()
        .map(|trans| {
            trans
                .into_iter()
                .map(|(next, rate)| (index.get(&next).copied().unwrap_or(overflow), rate))
                .collect()
        })
        .collect();
    let exit: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|(_, q)| q).sum())
        .collect();
    let lambda = exit.iter().copied().fold(0.0, f64::max);

    let mut h: Vec<f64> = states.iter().map(|z| math::duality_h(x, z)).collect();
    h.push(0.0);
    let mut leak = vec![0.0; n_states + 1];
    leak[overflow] = 1.0;

    if lambda > 0.0 && t > 0.0 {
        let apply = |v: &[f64]| -> Vec<f64> {
            let mut out = v.to_vec();
            for (s, row) in rows.iter().enumerate() {
                let mut acc = 0.0;
                for &(j, q) in row {
                    acc += q * (v[j] - v[s]);
                }
                out[s] = v[s] + acc / lambda;
            }
            out
        };
        let chunks = math::ceil(lambda * t / 30.0).max(1.0) as usize;
        let tau = t / chunks as f64;
        let mean = lambda * tau;
        for _ in 0..chunks {
            for v in [&mut h, &mut leak] {
                let mut weight = math::exp(-mean);
                let mut cum = weight;
                let mut term = v.clone();
                let mut sum: Vec<f64> = term.iter().map(|a| a * weight).collect();
                let mut k = 0u64;
                while 1.0 - cum > 1e-16 && k < 10_000 {
                    k += 1;
                    term = apply(&term);
                    weight *= mean / k as f64;
                    cum += weight;
                    for (s, a) in sum.iter_mut().zip(&term) {
                        *s += weight * a;
                    }
                }
                *v = sum;
            }
        }
    }
    OracleValue {
        value: h[0],
        leak: leak[0].max(0.0),
        n_states,
    }
}
