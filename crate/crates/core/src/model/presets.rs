//! Named constructions of the worked examples. Each preset reads its scalars
//! and measures from a [`Params`] map, falling back to documented defaults.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{GraphSpec, ModelError, ModelSpec};
use crate::measure::AtomicMeasure;

/// A preset parameter value as it arrives from a config file.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Number(f64),
    List(Vec<f64>),
    Measure(AtomicMeasure),
    Text(String),
}

impl From<f64> for ParamValue {
    fn from(x: f64) -> Self {
        ParamValue::Number(x)
    }
}

impl From<Vec<f64>> for ParamValue {
    fn from(x: Vec<f64>) -> Self {
        ParamValue::List(x)
    }
}

impl From<AtomicMeasure> for ParamValue {
    fn from(m: AtomicMeasure) -> Self {
        ParamValue::Measure(m)
    }
}

impl From<&str> for ParamValue {
    fn from(s: &str) -> Self {
        ParamValue::Text(s.into())
    }
}

/// Named preset parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    values: BTreeMap<String, ParamValue>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: impl Into<ParamValue>) -> Self {
        self.values.insert(name.into(), value.into());
        self
    }

    pub fn insert(&mut self, name: &str, value: impl Into<ParamValue>) {
        self.values.insert(name.into(), value.into());
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ParamValue)> {
        self.values.iter()
    }
}

/// Every name accepted by [`preset`].
pub const PRESET_NAMES: [&str; 13] = [
    "yule",
    "structured_lambda_coalescent",
    "binomial_disasters",
    "seedbank_simultaneous",
    "spatial_seedbank",
    "coordinated_bc",
    "hierarchical_moran",
    "kingman_erosion",
    "pam_branching",
    "nested_coalescent",
    "peripatric",
    "binary_contact_path",
    "tree_brw",
];

struct Reader<'a> {
    preset: &'a str,
    params: &'a Params,
}

impl Reader<'_> {
    fn invalid(&self, name: &str, reason: impl Into<String>) -> ModelError {
        ModelError::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    fn number_opt(&self, name: &str) -> Result<Option<f64>, ModelError> {
        match self.params.get(name) {
            None => Ok(None),
            Some(ParamValue::Number(x)) if x.is_finite() => Ok(Some(*x)),
            Some(ParamValue::Number(_)) => Err(self.invalid(name, "must be finite")),
            Some(_) => Err(self.invalid(name, "expected a number")),
        }
    }

    fn number(&self, name: &str) -> Result<f64, ModelError> {
        self.number_opt(name)?
            .ok_or_else(|| ModelError::MissingParameter {
                preset: self.preset.into(),
                name: name.into(),
            })
    }

    fn number_or(&self, name: &str, default: f64) -> Result<f64, ModelError> {
        Ok(self.number_opt(name)?.unwrap_or(default))
    }

    fn rate_or(&self, name: &str, default: f64) -> Result<f64, ModelError> {
        let x = self.number_or(name, default)?;
        if x < 0.0 {
            return Err(self.invalid(name, "must be nonnegative"));
        }
        Ok(x)
    }

    fn unit(&self, name: &str, x: f64) -> Result<f64, ModelError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(self.invalid(name, "must lie in [0, 1]"));
        }
        Ok(x)
    }

    fn count_or(&self, name: &str, default: usize) -> Result<usize, ModelError> {
        let x = self.number_or(name, default as f64)?;
        if x < 1.0 || x != crate::math::floor(x) || x > 1e6 {
            return Err(self.invalid(name, "must be a positive integer"));
        }
        Ok(x as usize)
    }

    fn list_or(&self, name: &str, len: usize, default: f64) -> Result<Vec<f64>, ModelError> {
        match self.params.get(name) {
            None => Ok(alloc::vec![default; len]),
            Some(ParamValue::Number(x)) => Ok(alloc::vec![*x; len]),
            Some(ParamValue::List(xs)) if xs.len() == len => {
                if xs.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    Err(self.invalid(name, "entries must be finite and nonnegative"))
                } else {
                    Ok(xs.clone())
                }
            }
            Some(ParamValue::List(xs)) => {
                Err(self.invalid(name, format!("expected {len} entries, got {}", xs.len())))
            }
            Some(_) => Err(self.invalid(name, "expected a list of numbers")),
        }
    }

    fn measure_or(&self, name: &str, default: AtomicMeasure) -> Result<AtomicMeasure, ModelError> {
        match self.params.get(name) {
            None => Ok(default),
            Some(ParamValue::Measure(m)) => Ok(m.clone()),
            Some(_) => Err(self.invalid(name, "expected a measure (list of {y, mass} atoms)")),
        }
    }

    fn text_or<'b>(&'b self, name: &str, default: &'b str) -> Result<&'b str, ModelError> {
        match self.params.get(name) {
            None => Ok(default),
            Some(ParamValue::Text(s)) => Ok(s),
            Some(_) => Err(self.invalid(name, "expected a string")),
        }
    }

    /// Graph from `graph` (complete | line | grid | torus), `K` (or `n`) and `d`.
    fn graph(
        &self,
        default_kind: &str,
        default_k: usize,
        default_d: usize,
    ) -> Result<GraphSpec, ModelError> {
        let kind = self.text_or("graph", default_kind)?;
        match kind {
            "complete" => GraphSpec::complete(self.count_or("n", default_k)?),
            "line" => GraphSpec::line(self.count_or("K", default_k)?),
            "grid" => GraphSpec::grid(
                self.count_or("K", default_k)?,
                self.count_or("d", default_d)?,
            ),
            "torus" => GraphSpec::torus(
                self.count_or("K", default_k)?,
                self.count_or("d", default_d)?,
            ),
            other => Err(self.invalid("graph", format!("unknown graph kind '{other}'"))),
        }
    }
}

fn dirac(y: f64, mass: f64) -> Result<AtomicMeasure, ModelError> {
    Ok(AtomicMeasure::dirac(y, mass)?)
}

/// Builds the named preset. See the individual constructors for parameters.
pub fn preset(name: &str, params: &Params) -> Result<ModelSpec, ModelError> {
    let p = Reader {
        preset: name,
        params,
    };
    match name {
        "yule" => yule(p.rate_or("r", 1.0)?, p.unit("w", p.number_or("w", 0.0)?)?),
        "structured_lambda_coalescent" => structured_lambda_coalescent(
            p.measure_or("lambda", dirac(0.0, 1.0)?)?,
            p.count_or("n_islands", 2)?,
            p.rate_or("m", 1.0)?,
        ),
        "binomial_disasters" => binomial_disasters(
            p.unit("p", p.number("p")?)?,
            {
                let r = p.number("r")?;
                if r < 0.0 {
                    return Err(p.invalid("r", "must be nonnegative"));
                }
                r
            },
            p.rate_or("d", 1.0)?,
        ),
        "seedbank_simultaneous" => seedbank_simultaneous(
            p.rate_or("c", 1.0)?,
            p.measure_or("m12", dirac(1.0, 1.0)?)?,
            p.measure_or("m21", dirac(0.5, 1.0)?)?,
        ),
        "spatial_seedbank" => {
            let n = p.count_or("n", 2)?;
            let k = p.rate_or("K", 1.0)?;
            let e = p.list_or("e", n, 1.0)?;
            let d = p.list_or("d", n, 1.0)?;
            let a = p.list_or("a", n * n, 1.0)?;
            spatial_seedbank(k, &e, &d, &a)
        }
        "coordinated_bc" => coordinated_bc(
            p.measure_or("lambda", dirac(0.0, 1.0)?)?,
            p.measure_or("reproduction", dirac(1.0, 1.0)?)?,
        ),
        "hierarchical_moran" => hierarchical_moran(
            p.graph("complete", 3, 1)?,
            p.measure_or("reproduction", AtomicMeasure::zero())?,
            p.measure_or("death", AtomicMeasure::zero())?,
            p.rate_or("c", 1.0)?,
            p.rate_or("c1", 1.0)?,
            p.rate_or("c2", 1.0)?,
        ),
        "kingman_erosion" => kingman_erosion(
            p.graph("complete", 3, 1)?,
            p.rate_or("c", 1.0)?,
            p.rate_or("c1", 1.0)?,
            p.rate_or("c2", 1.0)?,
        ),
        "pam_branching" => {
            let graph = p.graph("grid", 5, 1)?;
            let n = graph.n_vertices();
            let xi_plus = p.list_or("xi_plus", n, 0.0)?;
            let xi_minus = p.list_or("xi_minus", n, 0.0)?;
            let y = p.unit("y", p.number_or("y", 0.0)?)?;
            pam_branching(graph, &xi_plus, &xi_minus, y)
        }
        "nested_coalescent" => nested_coalescent(
            p.measure_or("lambda", dirac(0.0, 1.0)?)?,
            p.count_or("n_islands", 2)?,
        ),
        "peripatric" => peripatric(
            p.rate_or("alpha", 0.3)?,
            p.rate_or("alpha_prime", 0.0)?,
            p.rate_or("c", 1.0)?,
            p.measure_or("m12", dirac(0.5, 1.0)?)?,
            p.measure_or("m21", dirac(0.5, 1.0)?)?,
        ),
        "binary_contact_path" => binary_contact_path(
            p.graph("torus", 6, 2)?,
            p.rate_or("D", 1.0)?,
            p.rate_or("R", 0.1)?,
            p.unit("y", p.number_or("y", 1.0)?)?,
        ),
        "tree_brw" => {
            let d = p.count_or("d", 2)?;
            let depth = p.number_or("depth", 4.0)?;
            if depth < 0.0 || depth != crate::math::floor(depth) || depth > 30.0 {
                return Err(p.invalid("depth", "must be an integer in [0, 30]"));
            }
            tree_brw(
                d,
                depth as u32,
                p.rate_or("r", 1.0)?,
                p.rate_or("mu", 1.0)?,
                p.unit("y", p.number_or("y", 0.0)?)?,
            )
        }
        other => Err(ModelError::UnknownPreset(other.to_string())),
    }
}

/// One vertex, `R = r delta_w`: the Yule process for `w = 0`, its fully
/// coordinated version `2^{N_t}` for `w = 1`.
pub fn yule(r: f64, w: f64) -> Result<ModelSpec, ModelError> {
    ModelSpec::builder(GraphSpec::complete(1)?)
        .reproduction(0, 0, dirac(w, r)?)
        .build()
}

/// Block counting of a structured Lambda-coalescent on `n_islands` islands
/// with independent migration at rate `m` between every pair.
pub fn structured_lambda_coalescent(
    lambda: AtomicMeasure,
    n_islands: usize,
    m: f64,
) -> Result<ModelSpec, ModelError> {
    let mut b = ModelSpec::builder(GraphSpec::complete(n_islands)?);
    for v in 0..n_islands {
        b = b.coalescence(v, lambda.clone());
        for u in 0..n_islands {
            if u != v {
                b = b.migration(v, u, dirac(0.0, m)?);
            }
        }
    }
    b.build()
}

/// One vertex, `D = d delta_p`, `R = r delta_0`. With `p = 0, r = 0` this is
/// pure independent death; with `p = 1` all individuals die together.
pub fn binomial_disasters(p: f64, r: f64, d: f64) -> Result<ModelSpec, ModelError> {
    ModelSpec::builder(GraphSpec::complete(1)?)
        .death(0, dirac(p, d)?)
        .reproduction(0, 0, dirac(0.0, r)?)
        .build()
}

/// Two vertices: active (0) with Kingman coalescence `c delta_0`, dormant (1)
/// without; simultaneous switching through `M_01 = m12`, `M_10 = m21`.
pub fn seedbank_simultaneous(
    c: f64,
    m12: AtomicMeasure,
    m21: AtomicMeasure,
) -> Result<ModelSpec, ModelError> {
    ModelSpec::builder(GraphSpec::complete(2)?)
        .coalescence(0, dirac(0.0, c)?)
        .migration(0, 1, m12)
        .migration(1, 0, m21)
        .build()
}

/// `n` active colonies `v_i` (indices `0..n`) each with a seed bank `w_i`
/// (index `n + i`). `a` is row-major `n x n`; its diagonal is ignored.
pub fn spatial_seedbank(k: f64, e: &[f64], d: &[f64], a: &[f64]) -> Result<ModelSpec, ModelError> {
    let n = e.len();
    if d.len() != n || a.len() != n * n || n == 0 {
        return Err(ModelError::InvalidParameter {
            name: "spatial_seedbank".into(),
            reason: "e, d need n entries and a needs n*n".into(),
        });
    }
    let mut edges = Vec::new();
    for i in 0..n {
        edges.push((i, n + i));
        for j in (i + 1)..n {
            edges.push((i, j));
        }
    }
    let graph = GraphSpec::explicit(2 * n, &edges, false)?;
    let mut b = ModelSpec::builder(graph);
    for i in 0..n {
        b = b
            .coalescence(i, dirac(0.0, d[i])?)
            .migration(i, n + i, dirac(0.0, e[i])?)
            .migration(n + i, i, dirac(0.0, k * e[i])?);
        for j in 0..n {
            if i != j {
                b = b.migration(i, j, dirac(0.0, a[i * n + j])?);
            }
        }
    }
    b.build()
}

/// One vertex with coalescence `lambda` and reproduction `reproduction`.
pub fn coordinated_bc(
    lambda: AtomicMeasure,
    reproduction: AtomicMeasure,
) -> Result<ModelSpec, ModelError> {
    ModelSpec::builder(GraphSpec::complete(1)?)
        .coalescence(0, lambda)
        .reproduction(0, 0, reproduction)
        .build()
}

/// Shared `R`, `D`, `Lambda = c delta_0` at every vertex and
/// `M_uv = c1 delta_0 + c2 delta_1` between distinct vertices.
pub fn hierarchical_moran(
    graph: GraphSpec,
    reproduction: AtomicMeasure,
    death: AtomicMeasure,
    c: f64,
    c1: f64,
    c2: f64,
) -> Result<ModelSpec, ModelError> {
    let n = graph.n_vertices();
    let mig = AtomicMeasure::new([(0.0, c1), (1.0, c2)])?;
    let mut b = ModelSpec::builder(graph);
    for v in 0..n {
        b = b
            .coalescence(v, dirac(0.0, c)?)
            .death(v, death.clone())
            .reproduction(v, v, reproduction.clone());
        for u in 0..n {
            if u != v {
                b = b.migration(v, u, mig.clone());
            }
        }
    }
    b.build()
}

/// [`hierarchical_moran`] with `R = D = 0`.
pub fn kingman_erosion(
    graph: GraphSpec,
    c: f64,
    c1: f64,
    c2: f64,
) -> Result<ModelSpec, ModelError> {
    hierarchical_moran(
        graph,
        AtomicMeasure::zero(),
        AtomicMeasure::zero(),
        c,
        c1,
        c2,
    )
}

/// `D_v = xi_minus_v delta_y`, `R_vv = xi_plus_v delta_y` and unit migration
/// `delta_y` to each graph neighbour. `y = 0` is the independent branching
/// process behind the PAM; `y = 1` the lonely walker.
pub fn pam_branching(
    graph: GraphSpec,
    xi_plus: &[f64],
    xi_minus: &[f64],
    y: f64,
) -> Result<ModelSpec, ModelError> {
    let n = graph.n_vertices();
    if xi_plus.len() != n || xi_minus.len() != n {
        return Err(ModelError::InvalidParameter {
            name: "xi".into(),
            reason: format!("potential needs {n} entries per sign"),
        });
    }
    let mut b = ModelSpec::builder(graph.clone());
    for v in 0..n {
        b = b
            .death(v, dirac(y, xi_minus[v])?)
            .reproduction(v, v, dirac(y, xi_plus[v])?);
        for &u in graph.neighbors(v) {
            b = b.migration(v, u, dirac(y, 1.0)?);
        }
    }
    b.build()
}

/// Islands are species: `Lambda_v = lambda`, `M_vu = delta_1` for `v != u`.
pub fn nested_coalescent(lambda: AtomicMeasure, n_islands: usize) -> Result<ModelSpec, ModelError> {
    let mut b = ModelSpec::builder(GraphSpec::complete(n_islands)?);
    for v in 0..n_islands {
        b = b.coalescence(v, lambda.clone());
        for u in 0..n_islands {
            if u != v {
                b = b.migration(v, u, dirac(1.0, 1.0)?);
            }
        }
    }
    b.build()
}

/// Island (vertex 0) with drift `c delta_0` and selection `alpha'`, continent
/// (vertex 1) with selection `alpha`; migration `M_01 = m12`, `M_10 = m21`.
pub fn peripatric(
    alpha: f64,
    alpha_prime: f64,
    c: f64,
    m12: AtomicMeasure,
    m21: AtomicMeasure,
) -> Result<ModelSpec, ModelError> {
    ModelSpec::builder(GraphSpec::complete(2)?)
        .coalescence(0, dirac(0.0, c)?)
        .reproduction(0, 0, dirac(0.0, alpha_prime)?)
        .reproduction(1, 1, dirac(0.0, alpha)?)
        .migration(0, 1, m12)
        .migration(1, 0, m21)
        .build()
}

/// `D_v = D delta_y` and `R_vu = R delta_y` along every edge. `y = 1` is the
/// binary contact path process, `y = 0` its branching random walk.
pub fn binary_contact_path(
    graph: GraphSpec,
    d: f64,
    r: f64,
    y: f64,
) -> Result<ModelSpec, ModelError> {
    let n = graph.n_vertices();
    let mut b = ModelSpec::builder(graph.clone());
    for v in 0..n {
        b = b.death(v, dirac(y, d)?);
        for &u in graph.neighbors(v) {
            b = b.reproduction(v, u, dirac(y, r)?);
        }
    }
    b.build()
}

/// Branching random walk on the `d`-uniform rooted tree cut at `depth`:
/// `R_vv = r delta_y`, `M_vu = (mu/d) delta_y` from each vertex to each child.
/// Mass reaching the last generation stays there.
pub fn tree_brw(d: usize, depth: u32, r: f64, mu: f64, y: f64) -> Result<ModelSpec, ModelError> {
    let graph = GraphSpec::rooted_tree(d, depth)?;
    let n = graph.n_vertices();
    let mut b = ModelSpec::builder(graph.clone());
    for v in 0..n {
        b = b.reproduction(v, v, dirac(y, r)?);
        let g = graph.tree_generation(v).expect("tree vertex");
        for &u in graph.neighbors(v) {
            if graph.tree_generation(u) == Some(g + 1) {
                b = b.migration(v, u, dirac(y, mu / d as f64)?);
            }
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_builds_with_required_params() {
        let params = Params::new().with("p", 0.5).with("r", 1.0);
        for name in PRESET_NAMES {
            let spec = preset(name, &params).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(spec.n_vertices() >= 1);
        }
    }

    #[test]
    fn unknown_and_missing() {
        assert!(matches!(
            preset("nope", &Params::new()),
            Err(ModelError::UnknownPreset(_))
        ));
        let err = preset("binomial_disasters", &Params::new().with("r", 1.0)).unwrap_err();
        assert_eq!(
            err,
            ModelError::MissingParameter {
                preset: "binomial_disasters".into(),
                name: "p".into()
            }
        );
    }

    #[test]
    fn yule_variants_share_type() {
        let a = yule(1.5, 0.0).unwrap().type_of();
        let b = yule(1.5, 1.0).unwrap().type_of();
        assert_eq!(a, b);
        assert_eq!(a.reproduction.get(&(0, 0)), Some(&1.5));
        assert_eq!(a.death, [0.0]);
    }

    #[test]
    fn binomial_disasters_measures() {
        let s = binomial_disasters(0.3, 2.0, 1.0).unwrap();
        assert_eq!(s.death(0), &AtomicMeasure::dirac(0.3, 1.0).unwrap());
        assert_eq!(
            s.reproduction(0, 0),
            &AtomicMeasure::dirac(0.0, 2.0).unwrap()
        );
        assert!(s.coalescence(0).is_zero());
    }

    #[test]
    fn nested_migration_is_full() {
        let s = nested_coalescent(AtomicMeasure::dirac(0.0, 1.0).unwrap(), 3).unwrap();
        for v in 0..3 {
            for u in 0..3 {
                let m = s.migration(v, u);
                if u == v {
                    assert!(m.is_zero());
                } else {
                    assert_eq!(m, &AtomicMeasure::dirac(1.0, 1.0).unwrap());
                }
            }
            assert!(s.death(v).is_zero());
        }
        assert!(!s.has_reproduction());
    }

    #[test]
    fn peripatric_layout() {
        let s = preset(
            "peripatric",
            &Params::new()
                .with("alpha", 0.3)
                .with("alpha_prime", 0.2)
                .with("c", 2.0),
        )
        .unwrap();
        assert_eq!(s.coalescence(0).total_mass(), 2.0);
        assert!(s.coalescence(1).is_zero());
        assert_eq!(s.reproduction(0, 0).total_mass(), 0.2);
        assert_eq!(s.reproduction(1, 1).total_mass(), 0.3);
    }

    #[test]
    fn spatial_seedbank_rates() {
        let s = spatial_seedbank(2.0, &[1.0, 3.0], &[0.5, 0.7], &[0.0, 4.0, 5.0, 0.0]).unwrap();
        assert_eq!(s.n_vertices(), 4);
        assert_eq!(s.migration(1, 3).total_mass(), 3.0);
        assert_eq!(s.migration(3, 1).total_mass(), 6.0);
        assert_eq!(s.migration(0, 1).total_mass(), 4.0);
        assert_eq!(s.coalescence(1).total_mass(), 0.7);
        assert!(s.coalescence(3).is_zero());
    }

    #[test]
    fn tree_brw_moves_outward_only() {
        let s = tree_brw(2, 2, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(s.n_vertices(), 7);
        assert_eq!(s.migration(0, 1).total_mass(), 0.5);
        assert!(s.migration(1, 0).is_zero());
        assert_eq!(s.migration_entries().count(), 6);
    }

    #[test]
    fn contact_path_on_torus() {
        let s = preset("binary_contact_path", &Params::new()).unwrap();
        assert_eq!(s.n_vertices(), 36);
        assert_eq!(s.reproduction_entries().count(), 36 * 4);
        assert_eq!(s.death(0), &AtomicMeasure::dirac(1.0, 1.0).unwrap());
    }

    #[test]
    fn pam_single_vertex() {
        let g = GraphSpec::grid(1, 1).unwrap();
        let s = pam_branching(g, &[0.5], &[0.0], 0.0).unwrap();
        assert_eq!(s.migration_entries().count(), 0);
        assert_eq!(s.reproduction(0, 0).total_mass(), 0.5);
    }

    #[test]
    fn bad_param_type_reported() {
        let err = preset("yule", &Params::new().with("r", "fast")).unwrap_err();
        assert!(matches!(err, ModelError::InvalidParameter { ref name, .. } if name == "r"));
    }
}
