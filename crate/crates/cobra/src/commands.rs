//! One function per subcommand. Each reads its parameters from the resolved
//! [`RunConfig`] and returns an [`Outcome`]: the JSON results, a table for the
//! primary artifact, optional plot curves and, for checks, a verdict.

use anyhow::{bail, ensure, Context};
use serde_json::{json, Value};

use cobra_core::analytics::{self, PotentialFamily};
use cobra_core::dual::{self, DualConfig};
use cobra_core::forward::{self, ForwardEngine, Limits, McOptions, Observable, SimOptions};
use cobra_core::harness::{self, ContactParams, DualityOptions, OracleOptions};
use cobra_core::model::{presets, GraphSpec, ModelSpec};
use cobra_core::pam;
use cobra_core::rng::{self, derive_seed};
use cobra_core::stats::EstimateWithCI;

use crate::config::{build_graph, ParamReader, RunConfig};
use crate::exec::Parallel;
use crate::output::{Series, Table};

/// Subcommands. The first help line of each names the quantity it computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Exact trajectory of the particle process Z from z0 up to t.
    Simulate,
    /// Path of the frequency process X from x0 sampled on a time grid.
    SimulateDual,
    /// First moments E[Z_t(v)] of a coalescence-free model from the linear moment ODE.
    Expectation,
    /// Upper bound on E[|Z_t|] for Kingman coalescence from the quadratic moment ODE.
    KingmanBound,
    /// Moment duality check E_z[prod x^Z_t] = E_x[prod X_t^z] by Monte Carlo on both sides.
    DualityCheck,
    /// Exact E_z[prod x^Z_t] by uniformization on the truncated state space.
    Oracle,
    /// Coming-down-from-infinity probe P_n(|Z_t| < m) for growing n, with dual hitting probabilities.
    CdiProbe,
    /// Fixation probability P(N_T > 1 - eps) of the island frequency under disasters and Kingman drift.
    Fixation,
    /// Variances of Z_t(v) at independent, half and full coordination for one type.
    VarianceOrder,
    /// Parabolic Anderson first moment via the ODE, Feynman-Kac, lonely walker and branching Monte Carlo.
    PamFk,
    /// Occupancy probability of a probe site over time, Monte Carlo against the dual ODE.
    PamOccupancy,
    /// Pathwise domination of the binary contact path process by its branching random walk.
    ContactCoupling,
    /// Per-generation mean occupation of a branching random walk on a regular tree against its closed form.
    TreeBrw,
    /// Validates the config and prints the resolved model.
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::SimulateDual => "simulate-dual",
            Command::Expectation => "expectation",
            Command::KingmanBound => "kingman-bound",
            Command::DualityCheck => "duality-check",
            Command::Oracle => "oracle",
            Command::CdiProbe => "cdi-probe",
            Command::Fixation => "fixation",
            Command::VarianceOrder => "variance-order",
            Command::PamFk => "pam-fk",
            Command::PamOccupancy => "pam-occupancy",
            Command::ContactCoupling => "contact-coupling",
            Command::TreeBrw => "tree-brw",
            Command::Validate => "validate",
        }
    }
}

/// Result of one subcommand.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub results: Value,
    pub table: Table,
    pub plot: Vec<Series>,
    /// `Some(false)` when a statistical check failed.
    pub verdict: Option<bool>,
}

pub fn execute(cmd: Command, cfg: &RunConfig, exec: &Parallel) -> anyhow::Result<Outcome> {
    match cmd {
        Command::Validate => validate(cfg),
        Command::Simulate => simulate(cfg),
        Command::SimulateDual => simulate_dual(cfg),
        Command::Expectation => expectation(cfg),
        Command::KingmanBound => kingman_bound(cfg),
        Command::DualityCheck => duality_check(cfg, exec),
        Command::Oracle => oracle(cfg),
        Command::CdiProbe => cdi_probe(cfg, exec),
        Command::Fixation => fixation(cfg, exec),
        Command::VarianceOrder => variance_order(cfg, exec),
        Command::PamFk => pam_fk(cfg, exec),
        Command::PamOccupancy => pam_occupancy(cfg, exec),
        Command::ContactCoupling => contact_coupling(cfg, exec),
        Command::TreeBrw => tree_brw(cfg, exec),
    }
}

fn est_json(e: &EstimateWithCI) -> Value {
    json!({ "mean": e.mean, "se": e.se, "n": e.n })
}

fn dual_config(cfg: &RunConfig) -> DualConfig {
    DualConfig {
        dt: cfg.tolerances.dual_dt,
        ..DualConfig::default()
    }
}

fn limits(p: &ParamReader) -> anyhow::Result<Limits> {
    let d = Limits::default();
    Ok(Limits {
        max_events: p.u64_or("max_events", d.max_events)?,
        max_population: p.u64_or("max_population", d.max_population)?,
    })
}

/// `z0` from `[params]`, one particle at vertex 0 by default.
fn initial_state(p: &ParamReader, n: usize) -> anyhow::Result<Vec<u64>> {
    let z0 = p.u64_list("z0")?.unwrap_or_else(|| {
        let mut z = vec![0; n];
        z[0] = 1;
        z
    });
    ensure!(
        z0.len() == n,
        "params.z0: need {n} entries, got {}",
        z0.len()
    );
    Ok(z0)
}

/// A per-vertex frequency vector; a single entry is broadcast.
fn frequencies(p: &ParamReader, name: &str, n: usize, default: f64) -> anyhow::Result<Vec<f64>> {
    let x = p.f64_list(name)?.unwrap_or_else(|| vec![default]);
    let x = if x.len() == 1 { vec![x[0]; n] } else { x };
    ensure!(
        x.len() == n,
        "params.{name}: need 1 or {n} entries, got {}",
        x.len()
    );
    ensure!(
        x.iter().all(|v| (0.0..=1.0).contains(v)),
        "params.{name}: entries must lie in [0, 1]"
    );
    Ok(x)
}

fn vertex(p: &ParamReader, name: &str, default: usize, n: usize) -> anyhow::Result<usize> {
    let v = p.usize_or(name, default)?;
    ensure!(
        v < n,
        "params.{name}: vertex {v} out of range for {n} vertices"
    );
    Ok(v)
}

fn state_row(t: f64, z: &[u64]) -> Vec<String> {
    let mut row = vec![t.to_string(), z.iter().sum::<u64>().to_string()];
    row.extend(z.iter().map(u64::to_string));
    row
}

fn state_header(n: usize, first: &str, second: &str) -> Table {
    let mut h = vec![first.to_string(), second.to_string()];
    h.extend((0..n).map(|v| format!("v{v}")));
    Table::new(h)
}

fn validate(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    cfg.seed()?;
    let mut table = Table::new(["key", "value"]);
    let mut results = json!({ "valid": true });
    if cfg.model.is_some() {
        let spec = cfg.model()?;
        table.push(["graph".to_string(), spec.graph().describe()]);
        table.push(["vertices".to_string(), spec.n_vertices().to_string()]);
        table.push([
            "coalescence".to_string(),
            spec.has_coalescence().to_string(),
        ]);
        table.push([
            "reproduction".to_string(),
            spec.has_reproduction().to_string(),
        ]);
        results["graph"] = json!(spec.graph().describe());
        results["vertices"] = json!(spec.n_vertices());
    }
    Ok(Outcome {
        results,
        table,
        ..Outcome::default()
    })
}

fn simulate(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (seed, spec, t) = (cfg.seed()?, cfg.model()?, cfg.t()?);
    let p = cfg.params();
    let z0 = initial_state(&p, spec.n_vertices())?;
    let opts = SimOptions {
        limits: limits(&p)?,
        record_events: true,
        snapshot_times: Vec::new(),
    };
    let traj = forward::simulate(&spec, &z0, t, &opts, &mut rng::stream(seed, 0))?;
    let mut table = state_header(spec.n_vertices(), "t", "total");
    let mut z = traj.initial.clone();
    table.push(state_row(0.0, &z));
    for ev in traj.events.iter().filter(|e| e.is_effective()) {
        ev.apply(&mut z);
        table.push(state_row(ev.time, &z));
    }
    let total: u64 = traj.final_state.iter().sum();
    let results = json!({
        "final_state": traj.final_state,
        "total": total,
        "events": traj.n_events,
        "quiescent": traj.quiescent,
    });
    Ok(Outcome {
        results,
        table,
        ..Outcome::default()
    })
}

fn simulate_dual(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (seed, spec, t) = (cfg.seed()?, cfg.model()?, cfg.t()?);
    let p = cfg.params();
    let n = spec.n_vertices();
    let x0 = frequencies(&p, "x0", n, 0.5)?;
    let times = dual::grid(t, p.usize_or("points", 11)?);
    let path = dual::simulate_dual(
        &spec,
        &x0,
        t,
        &dual_config(cfg),
        &times,
        &mut rng::stream(seed, 0),
    );
    let mut h = vec!["t".to_string()];
    h.extend((0..n).map(|v| format!("x{v}")));
    let mut table = Table::new(h);
    for (s, x) in path.times.iter().zip(&path.values) {
        let mut row = vec![s.to_string()];
        row.extend(x.iter().map(f64::to_string));
        table.push(row);
    }
    let o = &path.outcome;
    let results = json!({
        "final_state": o.final_state,
        "jumps": o.jumps,
        "clamp_total": o.clamp_total,
        "flagged": o.flagged,
    });
    Ok(Outcome {
        results,
        table,
        ..Outcome::default()
    })
}

fn float_state(p: &ParamReader, n: usize) -> anyhow::Result<Vec<f64>> {
    match p.f64_list("z0")? {
        Some(z) => {
            ensure!(z.len() == n, "params.z0: need {n} entries, got {}", z.len());
            Ok(z)
        }
        None => Ok(initial_state(p, n)?.into_iter().map(|k| k as f64).collect()),
    }
}

fn times_param(cfg: &RunConfig) -> anyhow::Result<Vec<f64>> {
    match cfg.params().f64_list("times")? {
        Some(ts) => Ok(ts),
        None => Ok(vec![cfg.t()?]),
    }
}

fn expectation(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let spec = cfg.model()?;
    let p = cfg.params();
    let z0 = float_state(&p, spec.n_vertices())?;
    let mut table = Table::new(["t", "vertex", "value"]);
    let mut rows = Vec::new();
    let mut err: f64 = 0.0;
    for t in times_param(cfg)? {
        let sol = analytics::expectation_ode(&spec, &z0, t)?;
        err = err.max(sol.error_estimate);
        for (v, value) in sol.values.iter().enumerate() {
            table.push([t.to_string(), v.to_string(), value.to_string()]);
        }
        rows.push(json!({ "t": t, "values": sol.values }));
    }
    Ok(Outcome {
        results: json!({ "curves": rows, "error_estimate": err }),
        table,
        ..Outcome::default()
    })
}

fn kingman_bound(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let spec = cfg.model()?;
    let z0 = float_state(&cfg.params(), spec.n_vertices())?;
    let times = times_param(cfg)?;
    let sol = analytics::kingman_bound(&spec, &z0, &times)?;
    let mut table = Table::new(["t", "vertex", "bound"]);
    for (t, values) in sol.times.iter().zip(&sol.values) {
        for (v, value) in values.iter().enumerate() {
            table.push([t.to_string(), v.to_string(), value.to_string()]);
        }
    }
    let results =
        json!({ "times": sol.times, "values": sol.values, "error_estimate": sol.error_estimate });
    Ok(Outcome {
        results,
        table,
        ..Outcome::default()
    })
}

fn duality_options(cfg: &RunConfig) -> anyhow::Result<DualityOptions> {
    let forward = McOptions {
        limits: limits(&cfg.params())?,
        exclude_capped: true,
        keep_samples: false,
    };
    Ok(DualityOptions {
        forward,
        dual: dual_config(cfg),
        threshold: cfg.tolerances.z_threshold,
    })
}

fn duality_check(cfg: &RunConfig, exec: &Parallel) -> anyhow::Result<Outcome> {
    let (seed, spec, t) = (cfg.seed()?, cfg.model()?, cfg.t()?);
    let p = cfg.params();
    let n = spec.n_vertices();
    let x = frequencies(&p, "x", n, 0.5)?;
    let z = match p.u64_list("z")? {
        Some(z) => z,
        None => vec![1; n],
    };
    ensure!(z.len() == n, "params.z: need {n} entries, got {}", z.len());
    let report = harness::duality_check(
        &spec,
        &x,
        &z,
        t,
        cfg.replicas(10_000),
        seed,
        &duality_options(cfg)?,
        exec,
    )?;
    let mut table = Table::new(["side", "mean", "se", "n"]);
    for (side, e) in [("forward", &report.forward), ("dual", &report.dual)] {
        table.push([
            side.to_string(),
            e.mean.to_string(),
            e.se.to_string(),
            e.n.to_string(),
        ]);
    }
    let results = json!({
        "forward": est_json(&report.forward),
        "dual": est_json(&report.dual),
        "z_score": report.z_score,
        "threshold": report.threshold,
        "verdict": if report.pass { "pass" } else { "fail" },
        "capped": report.capped,
        "flagged": report.flagged,
    });
    Ok(Outcome {
        results,
        table,
        verdict: Some(report.pass),
        ..Outcome::default()
    })
}

fn oracle(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (spec, t) = (cfg.model()?, cfg.t()?);
    let p = cfg.params();
    let n = spec.n_vertices();
    let z0 = initial_state(&p, n)?;
    let x = frequencies(&p, "x", n, 0.5)?;
    let opts = OracleOptions {
        state_cap: p.usize_or("state_cap", 10_000)?,
        leak_tolerance: cfg.tolerances.leak,
    };
    let v = harness::oracle_expm(&spec, &z0, &x, t, &opts)?;
    let mut table = Table::new(["t", "value", "leak", "states"]);
    table.push([
        t.to_string(),
        v.value.to_string(),
        v.leak.to_string(),
        v.n_states.to_string(),
    ]);
    let results = json!({ "value": v.value, "leak": v.leak, "states": v.n_states });
    Ok(Outcome {
        results,
        table,
        ..Outcome::default()
    })
}

fn cdi_probe(cfg: &RunConfig, exec: &Parallel) -> anyhow::Result<Outcome> {
    let (seed, spec, t) = (cfg.seed()?, cfg.model()?, cfg.t()?);
    let p = cfg.params();
    let n_list = p.u64_list("n_list")?.unwrap_or_else(|| vec![10, 100, 1000]);
    let m = p.u64_or("m", 1)?;
    let x_grid = p.f64_list("x_grid")?.unwrap_or_default();
    let curve = harness::cdi_probe(
        &spec,
        &n_list,
        m,
        t,
        cfg.replicas(10_000),
        seed,
        &x_grid,
        &duality_options(cfg)?,
        exec,
    )?;
    let mut table = Table::new(["n", "probability", "se", "capped"]);
    for pt in &curve.points {
        table.push([
            pt.n.to_string(),
            pt.estimate.mean.to_string(),
            pt.estimate.se.to_string(),
            pt.capped.to_string(),
        ]);
    }
    let results = json!({
        "points": curve.points.iter().map(|pt| json!({ "n": pt.n, "estimate": est_json(&pt.estimate), "capped": pt.capped })).collect::<Vec<_>>(),
        "tau": curve.tau.iter().map(|tp| json!({ "x": tp.x, "estimate": est_json(&tp.estimate) })).collect::<Vec<_>>(),
        "tau_sup": curve.tau_sup,
        "trend": curve.trend,
    });
    let plot = vec![Series {
        name: "probability".into(),
        points: curve
            .points
            .iter()
            .map(|pt| (pt.n as f64, pt.estimate.mean, pt.estimate.se))
            .collect(),
    }];
    Ok(Outcome {
        results,
        table,
        plot,
        verdict: None,
    })
}

fn fixation(cfg: &RunConfig, exec: &Parallel) -> anyhow::Result<Outcome> {
    let seed = cfg.seed()?;
    let t = cfg.t.unwrap_or(50.0);
    let p = cfg.params();
    let alpha = p.nonneg_or("alpha", 0.3)?;
    let prob = p.nonneg_or("p", 0.5)?;
    let eps = p.nonneg_or("eps", 1e-3)?;
    let n0 = p.nonneg_or("n0", 0.5)?;
    let e = harness::fixation_probe(
        alpha,
        prob,
        t,
        eps,
        n0,
        cfg.replicas(10_000),
        seed,
        &dual_config(cfg),
        exec,
    )?;
    let min = p.f64_opt("min")?;
    let verdict = min.map(|m| e.mean >= m);
    let mut table = Table::new(["alpha", "p", "t", "probability", "se"]);
    table.push([alpha, prob, t, e.mean, e.se].map(|v| v.to_string()));
    let results =
        json!({ "alpha": alpha, "p": prob, "t": t, "estimate": est_json(&e), "min": min });
    Ok(Outcome {
        results,
        table,
        plot: Vec::new(),
        verdict,
    })
}

fn variance_order(cfg: &RunConfig, exec: &Parallel) -> anyhow::Result<Outcome> {
    let (seed, spec, t) = (cfg.seed()?, cfg.model()?, cfg.t()?);
    let p = cfg.params();
    let n = spec.n_vertices();
    let z0 = initial_state(&p, n)?;
    let v = vertex(&p, "v", 0, n)?;
    let k = p.nonneg_or("k", 3.0)?;
    let opts = McOptions {
        limits: limits(&p)?,
        exclude_capped: true,
        keep_samples: true,
    };
    let report = harness::variance_order_check(
        spec.graph(),
        &spec.type_of(),
        &z0,
        v,
        t,
        cfg.replicas(100_000),
        seed,
        k,
        &opts,
        exec,
    )?;
    let mut table = Table::new([
        "coordination",
        "y",
        "mean",
        "mean_se",
        "variance",
        "variance_se",
        "capped",
    ]);
    for e in &report.entries {
        table.push([
            e.label.clone(),
            e.y.to_string(),
            e.mean.mean.to_string(),
            e.mean.se.to_string(),
            e.variance.mean.to_string(),
            e.variance.se.to_string(),
            e.capped.to_string(),
        ]);
    }
    let results = json!({
        "entries": report.entries.iter().map(|e| json!({
            "label": e.label, "y": e.y, "mean": est_json(&e.mean), "variance": est_json(&e.variance), "capped": e.capped,
        })).collect::<Vec<_>>(),
        "ordered": report.ordered,
        "consistent": report.consistent,
    });
    Ok(Outcome {
        results,
        table,
        plot: Vec::new(),
        verdict: Some(report.consistent),
    })
}

fn family(p: &ParamReader, name: &str) -> anyhow::Result<PotentialFamily> {
    let Some(t) = p.table(name)? else {
        return Ok(PotentialFamily::Uniform { lo: 0.0, hi: 1.0 });
    };
    let prefix = format!("params.{name}");
    let r = ParamReader::new(t, &prefix);
    Ok(match r.str_or("family", "uniform")? {
        "zero" => PotentialFamily::Zero,
        "uniform" => PotentialFamily::Uniform {
            lo: r.nonneg_or("lo", 0.0)?,
            hi: r.nonneg_or("hi", 1.0)?,
        },
        "exponential" => PotentialFamily::Exponential {
            rate: r.nonneg_or("rate", 1.0)?,
        },
        "pareto" => PotentialFamily::Pareto {
            alpha: r.nonneg_or("alpha", 3.0)?,
            scale: r.nonneg_or("scale", 1.0)?,
        },
        other => bail!("{prefix}.family: unknown potential family '{other}'"),
    })
}

fn pam_graph(p: &ParamReader) -> anyhow::Result<GraphSpec> {
    match p.table("graph")? {
        Some(t) => Ok(build_graph(t, "params.graph")?),
        None => Ok(GraphSpec::grid(5, 1)?),
    }
}

/// Largest pairwise z-score among estimates of the same quantity.
fn max_pairwise_z(estimates: &[EstimateWithCI]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in estimates.iter().enumerate() {
        for b in &estimates[i + 1..] {
            worst = worst.max(a.z_score(b));
        }
    }
    worst
}

fn pam_fk(cfg: &RunConfig, exec: &Parallel) -> anyhow::Result<Outcome> {
    let seed = cfg.seed()?;
    let t = cfg.t()?;
    let p = cfg.params();
    let graph = pam_graph(&p)?;
    let n = graph.n_vertices();
    let v0 = vertex(&p, "v0", 0, n)?;
    let replicas = cfg.replicas(200_000);
    let (plus, minus) = (family(&p, "xi_plus")?, family(&p, "xi_minus")?);
    let xi = pam::sample_potential(&plus, &minus, n, derive_seed(seed, 0))?;
    let fk = pam::fk_estimator_all(&xi, &graph, v0, t, replicas, derive_seed(seed, 1), exec)?;
    let lonely = pam::lonely_walker_all(&xi, &graph, v0, t, replicas, derive_seed(seed, 2), exec)?;
    let spec = presets::pam_branching(graph.clone(), xi.plus(), xi.minus(), 0.0)?;
    let mut z0 = vec![0; n];
    z0[v0] = 1;
    let observables: Vec<_> = (0..n).map(Observable::VertexCount).collect();
    let opts = McOptions {
        limits: limits(&p)?,
        exclude_capped: true,
        keep_samples: false,
    };
    let branching = forward::monte_carlo(
        &ForwardEngine::new(&spec),
        &z0,
        t,
        replicas,
        &observables,
        derive_seed(seed, 3),
        &opts,
        exec,
    )?;
    let threshold = cfg.tolerances.z_threshold;
    let mut table = Table::new([
        "vertex",
        "xi",
        "ode",
        "fk",
        "fk_se",
        "lonely",
        "lonely_se",
        "branching",
        "branching_se",
        "max_z",
    ]);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for v in 0..n {
        let ode = analytics::pam_ode(&xi, &graph, v0, t)?.values[v];
        let ests = [
            EstimateWithCI::exact(ode),
            fk[v].estimate,
            lonely[v].estimate,
            branching.estimates[v],
        ];
        let z = max_pairwise_z(&ests);
        worst = worst.max(z);
        table.push([
            v.to_string(),
            xi.xi(v).to_string(),
            ode.to_string(),
            ests[1].mean.to_string(),
            ests[1].se.to_string(),
            ests[2].mean.to_string(),
            ests[2].se.to_string(),
            ests[3].mean.to_string(),
            ests[3].se.to_string(),
            z.to_string(),
        ]);
        rows.push(json!({
            "vertex": v, "ode": ode, "fk": est_json(&ests[1]), "lonely": est_json(&ests[2]),
            "branching": est_json(&ests[3]), "max_z": z,
        }));
    }
    let pass = worst < threshold;
    let results = json!({
        "xi_plus": xi.plus(),
        "xi_minus": xi.minus(),
        "vertices": rows,
        "max_z": worst,
        "threshold": threshold,
        "capped": branching.capped,
        "verdict": if pass { "pass" } else { "fail" },
    });
    Ok(Outcome {
        results,
        table,
        plot: Vec::new(),
        verdict: Some(pass),
    })
}

fn occupancy_model(cfg: &RunConfig) -> anyhow::Result<ModelSpec> {
    if cfg.model.is_some() {
        return Ok(cfg.model()?);
    }
    let p = cfg.params();
    Ok(pam::directed_line_brw(
        p.usize_or("length", 6)?,
        p.nonneg_or("r", 1.0)?,
        p.nonneg_or("m", 1.0)?,
    )?)
}

fn pam_occupancy(cfg: &RunConfig, exec: &Parallel) -> anyhow::Result<Outcome> {
    let seed = cfg.seed()?;
    let t = cfg.t.unwrap_or(8.0);
    let spec = occupancy_model(cfg)?;
    let p = cfg.params();
    let n = spec.n_vertices();
    let source = vertex(&p, "source", 0, n)?;
    let probe = vertex(&p, "probe", 4.min(n - 1), n)?;
    let times = dual::grid(t, p.usize_or("points", 17)?);
    let curve = pam::occupancy_curve(
        &spec,
        source,
        probe,
        &times,
        cfg.replicas(10_000),
        seed,
        limits(&p)?,
        exec,
    )?;
    let z = curve.z_scores();
    let worst = z.iter().copied().fold(0.0, f64::max);
    let threshold = cfg.tolerances.z_threshold;
    let mut table = Table::new(["t", "monte_carlo", "se", "dual_ode", "z"]);
    for (k, s) in curve.times.iter().enumerate() {
        let mc = &curve.monte_carlo[k];
        table.push([*s, mc.mean, mc.se, curve.dual[k], z[k]].map(|v| v.to_string()));
    }
    let plot = vec![
        Series {
            name: "monte_carlo".into(),
            points: curve
                .times
                .iter()
                .zip(&curve.monte_carlo)
                .map(|(&s, e)| (s, e.mean, e.se))
                .collect(),
        },
        Series {
            name: "dual_ode".into(),
            points: curve
                .times
                .iter()
                .zip(&curve.dual)
                .map(|(&s, &d)| (s, d, 0.0))
                .collect(),
        },
    ];
    let pass = worst < threshold;
    let results = json!({
        "times": curve.times,
        "monte_carlo": curve.monte_carlo.iter().map(est_json).collect::<Vec<_>>(),
        "dual_ode": curve.dual,
        "dual_error": curve.dual_error,
        "max_z": worst,
        "capped": curve.capped,
        "verdict": if pass { "pass" } else { "fail" },
    });
    Ok(Outcome {
        results,
        table,
        plot,
        verdict: Some(pass),
    })
}

fn contact_coupling(cfg: &RunConfig, exec: &Parallel) -> anyhow::Result<Outcome> {
    let seed = cfg.seed()?;
    let t = cfg.t.unwrap_or(50.0);
    let p = cfg.params();
    let graph = match p.table("graph")? {
        Some(tbl) => build_graph(tbl, "params.graph")?,
        None => GraphSpec::torus(6, 2)?,
    };
    let params = ContactParams {
        death: p.nonneg_or("D", 1.0)?,
        reproduction: p.nonneg_or("R", 0.1)?,
        max_events: p.u64_or("max_events", 10_000_000)?,
    };
    let z0 = vec![p.u64_or("z0", 1)?; graph.n_vertices()];
    let s =
        harness::coupling_check_contact(&graph, &params, &z0, t, cfg.replicas(1000), seed, exec);
    let mut table = Table::new([
        "replicas",
        "violations",
        "contact_extinct",
        "brw_extinct",
        "capped",
    ]);
    table.push(
        [
            s.replicas,
            s.violations,
            s.contact_extinct,
            s.brw_extinct,
            s.capped,
        ]
        .map(|v| v.to_string()),
    );
    let subcritical = params.reproduction * (graph.max_degree() as f64) < params.death;
    let results = json!({
        "replicas": s.replicas,
        "violations": s.violations,
        "contact_extinct": s.contact_extinct,
        "brw_extinct": s.brw_extinct,
        "capped": s.capped,
        "subcritical": subcritical,
        "verdict": if s.holds() { "pass" } else { "fail" },
    });
    Ok(Outcome {
        results,
        table,
        plot: Vec::new(),
        verdict: Some(s.holds()),
    })
}

fn tree_brw(cfg: &RunConfig, exec: &Parallel) -> anyhow::Result<Outcome> {
    let seed = cfg.seed()?;
    let t = cfg.t()?;
    let p = cfg.params();
    let d = p.usize_or("d", 2)?;
    let (r, mu) = (p.nonneg_or("r", 1.0)?, p.nonneg_or("mu", 1.0)?);
    let k_max = p.u64_or("k_max", 3)? as u32;
    ensure!(
        d >= 1 && k_max < 16,
        "params.d must be positive and params.k_max below 16"
    );
    let spec = presets::tree_brw(d, k_max + 1, r, mu, 0.0).context("building the tree model")?;
    let graph = spec.graph();
    let mut z0 = vec![0; graph.n_vertices()];
    z0[graph.tree_vertex(0, 1).context("tree root")?] = 1;
    let observables: Vec<_> = (0..graph.n_vertices())
        .map(Observable::VertexCount)
        .collect();
    let opts = McOptions {
        limits: limits(&p)?,
        exclude_capped: true,
        keep_samples: true,
    };
    let mc = forward::monte_carlo(
        &ForwardEngine::new(&spec),
        &z0,
        t,
        cfg.replicas(100_000),
        &observables,
        seed,
        &opts,
        exec,
    )?;
    let threshold = cfg.tolerances.z_threshold;
    let mut table = Table::new([
        "generation",
        "closed_form",
        "monte_carlo",
        "se",
        "residual",
        "z",
    ]);
    let mut rows = Vec::new();
    let mut pass = true;
    for k in 0..=k_max {
        let width = (d as u64).pow(k);
        let members: Vec<usize> = (1..=width)
            .filter_map(|i| graph.tree_vertex(k, i))
            .collect();
        // per-replica average over the generation, so the SE accounts for correlations
        let per_replica: Vec<f64> = (0..mc.samples[0].len())
            .map(|r| members.iter().map(|&v| mc.samples[v][r]).sum::<f64>() / width as f64)
            .collect();
        let est = EstimateWithCI::from_samples(&per_replica);
        let exact = analytics::tree_brw_expectation(d, r, mu, t, k);
        let residual = analytics::tree_brw_residual(d, r, mu, t, k, 1e-3);
        let z = est.z_score(&EstimateWithCI::exact(exact));
        pass &= z < threshold;
        table.push([k as f64, exact, est.mean, est.se, residual, z].map(|v| v.to_string()));
        rows.push(json!({ "generation": k, "closed_form": exact, "monte_carlo": est_json(&est), "residual": residual, "z": z }));
    }
    let results = json!({ "generations": rows, "capped": mc.capped, "verdict": if pass { "pass" } else { "fail" } });
    Ok(Outcome {
        results,
        table,
        plot: Vec::new(),
        verdict: Some(pass),
    })
}
