//! Finite balls `V^N = {v : d(v, v0) <= N}` of translation-invariant models on
//! `Z^d` and on `d`-uniform rooted trees.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{GraphKind, GraphSpec, ModelError, ModelSpec, VertexLabel};
use crate::measure::AtomicMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfiniteFamily {
    Lattice {
        dim: usize,
    },
    /// Rooted at its distinguished vertex `o`.
    Tree {
        d: usize,
    },
}

/// Which ordered pairs along an edge carry the edge measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRule {
    /// Both directions.
    Symmetric,
    /// Parent to child only (trees); on a lattice, away from the origin.
    Outward,
}

/// Homogeneous model on an infinite graph: every vertex carries the same
/// coalescence, death and self-reproduction measures; every edge the same
/// reproduction and migration measures.
#[derive(Debug, Clone, PartialEq)]
pub struct InfiniteModel {
    pub family: InfiniteFamily,
    pub coalescence: AtomicMeasure,
    pub death: AtomicMeasure,
    pub self_reproduction: AtomicMeasure,
    pub edge_reproduction: AtomicMeasure,
    pub edge_migration: AtomicMeasure,
    pub edge_rule: EdgeRule,
}

impl InfiniteModel {
    /// Branching random walk on the `d`-uniform tree: births `r delta_y`,
    /// jumps to each child at `(mu/d) delta_y`.
    pub fn tree_brw(d: usize, r: f64, mu: f64, y: f64) -> Result<Self, ModelError> {
        Ok(InfiniteModel {
            family: InfiniteFamily::Tree { d },
            coalescence: AtomicMeasure::zero(),
            death: AtomicMeasure::zero(),
            self_reproduction: AtomicMeasure::dirac(y, r)?,
            edge_reproduction: AtomicMeasure::zero(),
            edge_migration: AtomicMeasure::dirac(y, mu / d.max(1) as f64)?,
            edge_rule: EdgeRule::Outward,
        })
    }

    /// Binary contact path process on `Z^dim` (`y = 1`) or its branching
    /// random walk (`y = 0`).
    pub fn contact_path(
        dim: usize,
        death: f64,
        reproduction: f64,
        y: f64,
    ) -> Result<Self, ModelError> {
        Ok(InfiniteModel {
            family: InfiniteFamily::Lattice { dim },
            coalescence: AtomicMeasure::zero(),
            death: AtomicMeasure::dirac(y, death)?,
            self_reproduction: AtomicMeasure::zero(),
            edge_reproduction: AtomicMeasure::dirac(y, reproduction)?,
            edge_migration: AtomicMeasure::zero(),
            edge_rule: EdgeRule::Symmetric,
        })
    }
}

/// The model restricted to `V^N` together with its outer shell.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub spec: ModelSpec,
    /// `V^N \ V^{N-1}`; `{v0}` when `N = 0`.
    pub boundary: Vec<usize>,
    pub root: usize,
    pub radius: u32,
    /// Graph distance of every vertex from the root.
    pub depth: Vec<u32>,
}

impl Truncation {
    pub fn is_boundary(&self, v: usize) -> bool {
        self.depth[v] == self.radius
    }
}

/// Restricts `model` to the ball of radius `radius` around the origin (lattice)
/// or the root (tree).
pub fn truncate(model: &InfiniteModel, radius: i64) -> Result<Truncation, ModelError> {
    if radius < 0 {
        return Err(ModelError::NegativeRadius(radius));
    }
    let radius = u32::try_from(radius).map_err(|_| ModelError::NegativeRadius(radius))?;
    let (graph, depth) = match model.family {
        InfiniteFamily::Tree { d } => {
            let g = GraphSpec::rooted_tree(d, radius)?;
            let depth = (0..g.n_vertices())
                .map(|v| g.tree_generation(v).expect("tree"))
                .collect();
            (g, depth)
        }
        InfiniteFamily::Lattice { dim } => lattice_ball(dim, radius)?,
    };
    let n = graph.n_vertices();
    let mut b = ModelSpec::builder(graph.clone());
    for v in 0..n {
        b = b
            .coalescence(v, model.coalescence.clone())
            .death(v, model.death.clone())
            .reproduction(v, v, model.self_reproduction.clone());
        for &u in graph.neighbors(v) {
            let allowed = match model.edge_rule {
                EdgeRule::Symmetric => true,
                EdgeRule::Outward => depth[u] > depth[v],
            };
            if allowed {
                b = b
                    .reproduction(v, u, model.edge_reproduction.clone())
                    .migration(v, u, model.edge_migration.clone());
            }
        }
    }
    let spec = b.build()?;
    let boundary = (0..n).filter(|&v| depth[v] == radius).collect();
    Ok(Truncation {
        spec,
        boundary,
        root: 0,
        radius,
        depth,
    })
}

/// `{x in Z^dim : |x|_1 <= radius}` with nearest-neighbour edges; the origin is
/// vertex 0 and vertices are otherwise in lexicographic order.
fn lattice_ball(dim: usize, radius: u32) -> Result<(GraphSpec, Vec<u32>), ModelError> {
    if dim == 0 {
        return Err(ModelError::Graph(
            "lattice dimension must be at least 1".into(),
        ));
    }
    let r = radius as i64;
    let mut coords: Vec<Vec<i64>> = Vec::new();
    let mut current = vec![-r; dim];
    loop {
        let norm: i64 = current.iter().map(|c| c.abs()).sum();
        if norm <= r {
            coords.push(current.clone());
            if coords.len() > 1 << 22 {
                return Err(ModelError::Graph("lattice ball too large".into()));
            }
        }
        let mut k = 0;
        loop {
            if k == dim {
                break;
            }
            current[k] += 1;
            if current[k] <= r {
                break;
            }
            current[k] = -r;
            k += 1;
        }
        if k == dim {
            break;
        }
    }
    let origin = coords
        .iter()
        .position(|c| c.iter().all(|&x| x == 0))
        .expect("origin");
    coords.swap(0, origin);
    let index: BTreeMap<Vec<i64>, usize> = coords
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect();
    let mut edges = Vec::new();
    for (i, c) in coords.iter().enumerate() {
        for k in 0..dim {
            let mut next = c.clone();
            next[k] += 1;
            if let Some(&j) = index.get(&next) {
                edges.push((i, j));
            }
        }
    }
    let depth = coords
        .iter()
        .map(|c| c.iter().map(|x| x.unsigned_abs() as u32).sum())
        .collect();
    let labels = coords.into_iter().map(VertexLabel::Lattice).collect();
    let g = GraphSpec::explicit_labeled(
        labels,
        &edges,
        false,
        GraphKind::LatticeBall { dim, radius },
    )?;
    Ok((g, depth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels_of(t: &Truncation, vs: &[usize]) -> Vec<VertexLabel> {
        let mut out: Vec<_> = vs
            .iter()
            .map(|&v| t.spec.graph().label(v).clone())
            .collect();
        out.sort();
        out
    }

    #[test]
    fn tree_ball_sizes() {
        let m = InfiniteModel::tree_brw(2, 1.0, 1.0, 0.0).unwrap();
        let t = truncate(&m, 2).unwrap();
        assert_eq!(t.spec.n_vertices(), 7);
        assert_eq!(t.boundary.len(), 4);
    }

    #[test]
    fn line_ball() {
        let m = InfiniteModel::contact_path(1, 1.0, 0.5, 1.0).unwrap();
        let t = truncate(&m, 3).unwrap();
        assert_eq!(t.spec.n_vertices(), 7);
        assert_eq!(t.root, 0);
        assert_eq!(t.spec.graph().label(0), &VertexLabel::Lattice(vec![0]));
        assert_eq!(
            labels_of(&t, &t.boundary),
            vec![
                VertexLabel::Lattice(vec![-3]),
                VertexLabel::Lattice(vec![3])
            ]
        );
    }

    #[test]
    fn radius_zero_is_the_root() {
        let m = InfiniteModel::contact_path(2, 1.0, 0.5, 1.0).unwrap();
        let t = truncate(&m, 0).unwrap();
        assert_eq!(t.spec.n_vertices(), 1);
        assert_eq!(t.boundary, vec![0]);
        assert!(matches!(
            truncate(&m, -1),
            Err(ModelError::NegativeRadius(-1))
        ));
    }

    #[test]
    fn exhaustion_is_consistent() {
        for m in [
            InfiniteModel::contact_path(2, 1.0, 0.5, 1.0).unwrap(),
            InfiniteModel::tree_brw(3, 1.0, 2.0, 0.0).unwrap(),
        ] {
            let big = truncate(&m, 3).unwrap();
            let small = truncate(&m, 2).unwrap();
            let g = big.spec.graph();
            for a in 0..small.spec.n_vertices() {
                let la = small.spec.graph().label(a);
                let ba = g.index_of(la).expect("shared vertex");
                assert_eq!(small.spec.death(a), big.spec.death(ba));
                for b in 0..small.spec.n_vertices() {
                    let bb = g.index_of(small.spec.graph().label(b)).unwrap();
                    assert_eq!(small.spec.reproduction(a, b), big.spec.reproduction(ba, bb));
                    assert_eq!(small.spec.migration(a, b), big.spec.migration(ba, bb));
                }
            }
        }
    }

    #[test]
    fn lattice_ball_counts() {
        let m = InfiniteModel::contact_path(2, 1.0, 0.5, 1.0).unwrap();
        let t = truncate(&m, 2).unwrap();
        assert_eq!(t.spec.n_vertices(), 13);
        assert_eq!(t.boundary.len(), 8);
    }
}
