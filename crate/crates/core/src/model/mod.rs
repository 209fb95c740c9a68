//! Full parameterization of a coordinated branching-coalescing process on a
//! finite graph: one coalescence and one death measure per vertex, one
//! reproduction and one migration measure per ordered pair of vertices.

mod graph;
pub mod presets;
mod truncate;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::measure::{AtomicMeasure, EventKind, MeasureError};

pub use graph::{GraphKind, GraphSpec, VertexLabel};
pub use presets::{preset, ParamValue, Params, PRESET_NAMES};
pub use truncate::{truncate, EdgeRule, InfiniteFamily, InfiniteModel, Truncation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("vertex {vertex} does not exist (graph has {n_vertices} vertices)")]
    UnknownVertex { vertex: usize, n_vertices: usize },
    #[error("self-migration mass must be zero (vertex {0})")]
    SelfMigration(usize),
    #[error("invalid measure: {0}")]
    Measure(#[from] MeasureError),
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("preset '{preset}' requires parameter '{name}'")]
    MissingParameter { preset: String, name: String },
    #[error("parameter '{name}': {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("truncation radius must be nonnegative, got {0}")]
    NegativeRadius(i64),
    #[error("{0}")]
    Unsupported(String),
}

static ZERO: AtomicMeasure = AtomicMeasure::zero();

/// Validated model. Construct through [`ModelSpec::builder`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    graph: GraphSpec,
    coalescence: Vec<AtomicMeasure>,
    death: Vec<AtomicMeasure>,
    reproduction: BTreeMap<(usize, usize), AtomicMeasure>,
    migration: BTreeMap<(usize, usize), AtomicMeasure>,
}

/// Collects measures; [`ModelBuilder::build`] is the validator.
#[derive(Debug, Clone)]
pub struct ModelBuilder {
    graph: GraphSpec,
    coalescence: Vec<(usize, AtomicMeasure)>,
    death: Vec<(usize, AtomicMeasure)>,
    reproduction: Vec<((usize, usize), AtomicMeasure)>,
    migration: Vec<((usize, usize), AtomicMeasure)>,
}

impl ModelBuilder {
    pub fn coalescence(mut self, v: usize, m: AtomicMeasure) -> Self {
        self.coalescence.push((v, m));
        self
    }

    pub fn death(mut self, v: usize, m: AtomicMeasure) -> Self {
        self.death.push((v, m));
        self
    }

    /// Offspring of individuals at `from` are placed at `to`.
    pub fn reproduction(mut self, from: usize, to: usize, m: AtomicMeasure) -> Self {
        self.reproduction.push(((from, to), m));
        self
    }

    pub fn migration(mut self, from: usize, to: usize, m: AtomicMeasure) -> Self {
        self.migration.push(((from, to), m));
        self
    }

    /// Checks vertex keys and `M_vv = 0`. Repeated keys are summed.
    pub fn build(self) -> Result<ModelSpec, ModelError> {
        let n = self.graph.n_vertices();
        let check = |v: usize| {
            if v < n {
                Ok(())
            } else {
                Err(ModelError::UnknownVertex {
                    vertex: v,
                    n_vertices: n,
                })
            }
        };
        let mut coalescence = vec![AtomicMeasure::zero(); n];
        for (v, m) in self.coalescence {
            check(v)?;
            coalescence[v] = coalescence[v].plus(&m);
        }
        let mut death = vec![AtomicMeasure::zero(); n];
        for (v, m) in self.death {
            check(v)?;
            death[v] = death[v].plus(&m);
        }
        let mut reproduction = BTreeMap::new();
        for ((v, u), m) in self.reproduction {
            check(v)?;
            check(u)?;
            let entry = reproduction
                .entry((v, u))
                .or_insert_with(AtomicMeasure::zero);
            *entry = entry.plus(&m);
        }
        let mut migration = BTreeMap::new();
        for ((v, u), m) in self.migration {
            check(v)?;
            check(u)?;
            if v == u && m.total_mass() != 0.0 {
                return Err(ModelError::SelfMigration(v));
            }
            let entry = migration.entry((v, u)).or_insert_with(AtomicMeasure::zero);
            *entry = entry.plus(&m);
        }
        reproduction.retain(|_, m: &mut AtomicMeasure| !m.is_zero());
        migration.retain(|_, m: &mut AtomicMeasure| !m.is_zero());
        Ok(ModelSpec {
            graph: self.graph,
            coalescence,
            death,
            reproduction,
            migration,
        })
    }
}

/// Total masses `(c_v, d_v, r_vu, m_vu)` of a model. Zero pair entries are
/// omitted so equal types compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeSignature {
    pub coalescence: Vec<f64>,
    pub death: Vec<f64>,
    pub reproduction: BTreeMap<(usize, usize), f64>,
    pub migration: BTreeMap<(usize, usize), f64>,
}

impl TypeSignature {
    pub fn zero(n_vertices: usize) -> Self {
        TypeSignature {
            coalescence: vec![0.0; n_vertices],
            death: vec![0.0; n_vertices],
            reproduction: BTreeMap::new(),
            migration: BTreeMap::new(),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.death.len()
    }

    pub fn has_coalescence(&self) -> bool {
        self.coalescence.iter().any(|&c| c != 0.0)
    }

    pub fn is_zero(&self) -> bool {
        !self.has_coalescence()
            && self.death.iter().all(|&d| d == 0.0)
            && self.reproduction.is_empty()
            && self.migration.is_empty()
    }
}

impl ModelSpec {
    pub fn builder(graph: GraphSpec) -> ModelBuilder {
        ModelBuilder {
            graph,
            coalescence: Vec::new(),
            death: Vec::new(),
            reproduction: Vec::new(),
            migration: Vec::new(),
        }
    }

    /// Every measure zero: nothing ever happens.
    pub fn zero(graph: GraphSpec) -> Self {
        Self::builder(graph).build().expect("zero model is valid")
    }

    /// The model of the given type whose every migration, death and
    /// reproduction measure is its total mass placed at `y`; coalescence
    /// masses go to `delta_0`.
    pub fn from_signature(
        graph: GraphSpec,
        sig: &TypeSignature,
        y: f64,
    ) -> Result<Self, ModelError> {
        if sig.n_vertices() != graph.n_vertices() {
            return Err(ModelError::InvalidParameter {
                name: "signature".into(),
                reason: "vertex count does not match the graph".into(),
            });
        }
        let mut b = Self::builder(graph);
        for (v, &c) in sig.coalescence.iter().enumerate() {
            b = b.coalescence(v, AtomicMeasure::dirac(0.0, c)?);
        }
        for (v, &d) in sig.death.iter().enumerate() {
            b = b.death(v, AtomicMeasure::dirac(y, d)?);
        }
        for (&(v, u), &r) in &sig.reproduction {
            b = b.reproduction(v, u, AtomicMeasure::dirac(y, r)?);
        }
        for (&(v, u), &m) in &sig.migration {
            b = b.migration(v, u, AtomicMeasure::dirac(y, m)?);
        }
        b.build()
    }

    /// Same type, with migration, death and reproduction moved to `delta_y`.
    pub fn with_coordination(&self, y: f64) -> Result<Self, ModelError> {
        let mut out = Self::from_signature(self.graph.clone(), &self.type_of(), y)?;
        out.coalescence = self.coalescence.clone();
        Ok(out)
    }

    pub fn graph(&self) -> &GraphSpec {
        &self.graph
    }

    pub fn n_vertices(&self) -> usize {
        self.graph.n_vertices()
    }

    pub fn coalescence(&self, v: usize) -> &AtomicMeasure {
        &self.coalescence[v]
    }

    pub fn death(&self, v: usize) -> &AtomicMeasure {
        &self.death[v]
    }

    pub fn reproduction(&self, from: usize, to: usize) -> &AtomicMeasure {
        self.reproduction.get(&(from, to)).unwrap_or(&ZERO)
    }

    pub fn migration(&self, from: usize, to: usize) -> &AtomicMeasure {
        self.migration.get(&(from, to)).unwrap_or(&ZERO)
    }

    /// Nonzero reproduction measures keyed by `(from, to)`.
    pub fn reproduction_entries(&self) -> impl Iterator<Item = (&(usize, usize), &AtomicMeasure)> {
        self.reproduction.iter()
    }

    /// Nonzero migration measures keyed by `(from, to)`.
    pub fn migration_entries(&self) -> impl Iterator<Item = (&(usize, usize), &AtomicMeasure)> {
        self.migration.iter()
    }

    /// Every nonzero measure as `(kind, source, target, measure)`; death and
    /// coalescence have `target == source`.
    pub fn channels(&self) -> impl Iterator<Item = (EventKind, usize, usize, &AtomicMeasure)> {
        let per_vertex = (0..self.n_vertices()).flat_map(move |v| {
            [
                (EventKind::Death, v, v, &self.death[v]),
                (EventKind::Coalescence, v, v, &self.coalescence[v]),
            ]
        });
        per_vertex
            .chain(
                self.migration
                    .iter()
                    .map(|(&(v, u), m)| (EventKind::Migration, v, u, m)),
            )
            .chain(
                self.reproduction
                    .iter()
                    .map(|(&(v, u), m)| (EventKind::Reproduction, v, u, m)),
            )
            .filter(|(_, _, _, m)| !m.is_zero())
    }

    pub fn type_of(&self) -> TypeSignature {
        TypeSignature {
            coalescence: self
                .coalescence
                .iter()
                .map(AtomicMeasure::total_mass)
                .collect(),
            death: self.death.iter().map(AtomicMeasure::total_mass).collect(),
            reproduction: self
                .reproduction
                .iter()
                .map(|(&k, m)| (k, m.total_mass()))
                .filter(|&(_, r)| r != 0.0)
                .collect(),
            migration: self
                .migration
                .iter()
                .map(|(&k, m)| (k, m.total_mass()))
                .filter(|&(_, r)| r != 0.0)
                .collect(),
        }
    }

    pub fn has_coalescence(&self) -> bool {
        self.coalescence.iter().any(|m| !m.is_zero())
    }

    pub fn has_reproduction(&self) -> bool {
        !self.reproduction.is_empty()
    }

    /// True when coalescence is purely Kingman (`Lambda_v = c_v delta_0`).
    pub fn coalescence_is_kingman(&self) -> bool {
        self.coalescence
            .iter()
            .all(|m| m.positive_atoms().next().is_none())
    }

    /// True when the dual has no jumps and no noise: all atoms sit at 0 and
    /// there is no coalescence.
    pub fn dual_is_deterministic(&self) -> bool {
        !self.has_coalescence()
            && self
                .channels()
                .all(|(_, _, _, m)| m.positive_atoms().next().is_none())
    }

    /// Upper bound on the total jump rate out of `z`:
    /// `sum_v z_v [sum_u (m_vu + r_vu) + d_v + (z_v - 1) c_v]`.
    pub fn rate_bound(&self, z: &[u64]) -> f64 {
        let sig = self.type_of();
        let mut out_mass = vec![0.0; self.n_vertices()];
        for (&(v, _), &m) in sig.migration.iter().chain(sig.reproduction.iter()) {
            out_mass[v] += m;
        }
        z.iter()
            .enumerate()
            .map(|(v, &zv)| {
                let zf = zv as f64;
                zf * (out_mass[v] + sig.death[v] + (zf - 1.0).max(0.0) * sig.coalescence[v])
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn dirac(y: f64, m: f64) -> AtomicMeasure {
        AtomicMeasure::dirac(y, m).unwrap()
    }

    #[test]
    fn self_migration_rejected() {
        let g = GraphSpec::complete(2).unwrap();
        let err = ModelSpec::builder(g)
            .migration(1, 1, dirac(0.0, 1.0))
            .build()
            .unwrap_err();
        assert_eq!(err, ModelError::SelfMigration(1));
        assert!(err.to_string().contains("self-migration mass must be zero"));
    }

    #[test]
    fn unknown_vertex_rejected() {
        let g = GraphSpec::complete(2).unwrap();
        let err = ModelSpec::builder(g)
            .death(5, dirac(0.0, 1.0))
            .build()
            .unwrap_err();
        assert!(matches!(err, ModelError::UnknownVertex { vertex: 5, .. }));
    }

    #[test]
    fn empty_measures_are_valid() {
        let spec = ModelSpec::zero(GraphSpec::complete(2).unwrap());
        assert!(spec.type_of().is_zero());
        assert_eq!(spec.channels().count(), 0);
    }

    #[test]
    fn type_ignores_atom_locations() {
        let g = GraphSpec::complete(2).unwrap();
        let a = ModelSpec::builder(g.clone())
            .migration(0, 1, dirac(0.0, 1.5))
            .reproduction(1, 1, dirac(0.3, 2.0))
            .death(0, AtomicMeasure::new([(0.0, 0.5), (1.0, 0.5)]).unwrap())
            .build()
            .unwrap();
        let b = ModelSpec::builder(g)
            .migration(0, 1, dirac(1.0, 1.5))
            .reproduction(1, 1, dirac(0.0, 2.0))
            .death(0, dirac(0.7, 1.0))
            .build()
            .unwrap();
        assert_eq!(a.type_of(), b.type_of());
        assert_eq!(a.with_coordination(1.0).unwrap().type_of(), a.type_of());
    }

    #[test]
    fn repeated_keys_sum() {
        let g = GraphSpec::complete(1).unwrap();
        let s = ModelSpec::builder(g)
            .death(0, dirac(0.0, 1.0))
            .death(0, dirac(1.0, 2.0))
            .build()
            .unwrap();
        assert_eq!(s.death(0).total_mass(), 3.0);
        assert_eq!(s.death(0).mass_at_zero(), 1.0);
    }
}
