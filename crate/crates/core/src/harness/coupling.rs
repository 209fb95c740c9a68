//! Pathwise coupling of the binary contact path process `Z` with the
//! independent branching random walk `N` on the same graph.
//!
//! Every site with `Z_v > 0` carries one distinguished BRW particle, its
//! tracker. The tracker's death clock (rate `D`) is the site's recovery
//! clock: when it rings, the tracker dies and `Z_v` drops to 0. The tracker's
//! birth clock towards a neighbour `u` (rate `R`) is the site's copying clock:
//! the tracker gets a child at `u` and `Z_u += Z_v`; the child becomes `u`'s
//! tracker if `u` was empty in `Z`. All other BRW particles die and reproduce
//! on their own clocks. Both marginals are correct, and by construction
//! `1{Z_v > 0} <= N_v` at all times; the check re-verifies this after every
//! event.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::exec::Executor;
use crate::model::GraphSpec;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactParams {
    /// Death rate `D` (per particle in the BRW, per site in the contact path).
    pub death: f64,
    /// Birth rate `R` along each directed edge.
    pub reproduction: f64,
    pub max_events: u64,
}

/// Outcome of one coupled run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun {
    /// Domination held after every event.
    pub holds: bool,
    pub events: u64,
    pub contact_extinct: bool,
    pub brw_extinct: bool,
    /// Extinction time of the contact path process, if before `t_end`.
    pub contact_extinction: Option<f64>,
    pub brw_extinction: Option<f64>,
    /// Stopped by `max_events` before `t_end`.
    pub capped: bool,
    pub final_contact: Vec<u64>,
    pub final_brw: Vec<u64>,
}

/// Runs the coupling from `Z_0 = N_0 = z0` up to `t_end`.
pub fn coupled_contact_run<R: Rng + ?Sized>(
    graph: &GraphSpec,
    params: &ContactParams,
    z0: &[u64],
    t_end: f64,
    rng: &mut R,
) -> CoupledRun {
    let n = graph.n_vertices();
    assert_eq!(z0.len(), n, "initial state must have one entry per vertex");
    let (d, r) = (params.death, params.reproduction);
    let mut contact = z0.to_vec();
    let mut brw = z0.to_vec();
    let per_particle = |v: usize| d + r * graph.degree(v) as f64;
    let dominated =
        |c: &[u64], b: &[u64]| c.iter().zip(b).all(|(&cv, &bv)| u64::from(cv > 0) <= bv);

    let mut holds = dominated(&contact, &brw);
    let mut t = 0.0;
    let mut events = 0;
    let mut contact_extinction = None;
    let mut brw_extinction = None;
    let mut capped = false;
    loop {
        if contact_extinction.is_none() && contact.iter().all(|&c| c == 0) {
            contact_extinction = Some(t);
        }
        if brw.iter().all(|&b| b == 0) {
            brw_extinction = Some(t);
            break;
        }
        if events >= params.max_events {
            capped = true;
            break;
        }
        // all BRW particles, trackers included, run the same clocks
        let total: f64 = (0..n).map(|v| brw[v] as f64 * per_particle(v)).sum();
        if total <= 0.0 {
            break;
        }
        let e: f64 = Exp1.sample(rng);
        t += e / total;
        if t > t_end {
            break;
        }
        events += 1;
        let mut pick = rng.random::<f64>() * total;
        let mut v = n - 1;
        for (w, &count) in brw.iter().enumerate() {
            let rate = count as f64 * per_particle(w);
            if pick < rate {
                v = w;
                break;
            }
            pick -= rate;
        }
        // which particle at v: the tracker is one of brw[v] equally likely ones
        let is_tracker = contact[v] > 0 && rng.random_range(0..brw[v]) == 0;
        let which = rng.random::<f64>() * per_particle(v);
        if which < d {
            brw[v] -= 1;
            if is_tracker {
                contact[v] = 0;
            }
        } else {
            let nbrs = graph.neighbors(v);
            let u = nbrs[rng.random_range(0..nbrs.len())];
            brw[u] += 1;
            if is_tracker {
                contact[u] += contact[v];
            }
        }
        holds &= dominated(&contact, &brw);
    }
    CoupledRun {
        holds,
        events,
        contact_extinct: contact.iter().all(|&c| c == 0),
        brw_extinct: brw.iter().all(|&b| b == 0),
        contact_extinction,
        brw_extinction,
        capped,
        final_contact: contact,
        final_brw: brw,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSummary {
    pub replicas: u64,
    /// Replicas in which domination failed at some event.
    pub violations: u64,
    pub contact_extinct: u64,
    pub brw_extinct: u64,
    pub capped: u64,
}

impl CouplingSummary {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// [`coupled_contact_run`] over `n_replicas` independent streams.
pub fn coupling_check_contact<E: Executor>(
    graph: &GraphSpec,
    params: &ContactParams,
    z0: &[u64],
    t_end: f64,
    n_replicas: u64,
    seed: u64,
    exec: &E,
) -> CouplingSummary {
    let runs = exec.map(n_replicas, |i| {
        coupled_contact_run(graph, params, z0, t_end, &mut rng::stream(seed, i))
    });
    let count = |f: &dyn Fn(&CoupledRun) -> bool| runs.iter().filter(|r| f(r)).count() as u64;
    CouplingSummary {
        replicas: n_replicas,
        violations: count(&|r| !r.holds),
        contact_extinct: count(&|r| r.contact_extinct),
        brw_extinct: count(&|r| r.brw_extinct),
        capped: count(&|r| r.capped),
    }
}
