use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::ModelError;

/// Human-readable identity of a vertex.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexLabel {
    Index(usize),
    /// Lattice coordinates (1-based on `[K]^d`, signed on truncated `Z^d`).
    Lattice(Vec<i64>),
    /// Vertex `index` (1-based) of generation `generation` of a rooted tree.
    Tree {
        generation: u32,
        index: u64,
    },
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexLabel::Index(i) => write!(f, "{i}"),
            VertexLabel::Lattice(c) => {
                f.write_str("(")?;
                for (k, x) in c.iter().enumerate() {
                    if k > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
            VertexLabel::Tree { generation, index } => write!(f, "({generation};{index})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphKind {
    Complete {
        n: usize,
    },
    Line {
        n: usize,
    },
    Grid {
        k: usize,
        d: usize,
    },
    Torus {
        k: usize,
        d: usize,
    },
    RootedTree {
        d: usize,
        depth: u32,
    },
    /// Ball of graph radius `radius` around the origin of `Z^dim`.
    LatticeBall {
        dim: usize,
        radius: u32,
    },
    Explicit,
}

/// Finite undirected interaction graph with adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    kind: GraphKind,
    labels: Vec<VertexLabel>,
    adjacency: Vec<Vec<usize>>,
}

impl GraphSpec {
    fn from_parts(
        kind: GraphKind,
        labels: Vec<VertexLabel>,
        mut adjacency: Vec<Vec<usize>>,
    ) -> Self {
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        GraphSpec {
            kind,
            labels,
            adjacency,
        }
    }

    fn indexed(n: usize) -> Vec<VertexLabel> {
        (0..n).map(VertexLabel::Index).collect()
    }

    pub fn complete(n: usize) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::Graph(
                "a graph needs at least one vertex".into(),
            ));
        }
        let adjacency = (0..n)
            .map(|v| (0..n).filter(|&u| u != v).collect())
            .collect();
        Ok(Self::from_parts(
            GraphKind::Complete { n },
            Self::indexed(n),
            adjacency,
        ))
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn line(n: usize) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::Graph(
                "a graph needs at least one vertex".into(),
            ));
        }
        let adjacency = (0..n)
            .map(|v| {
                let mut a = Vec::new();
                if v > 0 {
                    a.push(v - 1);
                }
                if v + 1 < n {
                    a.push(v + 1);
                }
                a
            })
            .collect();
        Ok(Self::from_parts(
            GraphKind::Line { n },
            Self::indexed(n),
            adjacency,
        ))
    }

    /// `[K]^d` with nearest-neighbour edges.
    pub fn grid(k: usize, d: usize) -> Result<Self, ModelError> {
        Self::box_lattice(k, d, false)
    }

    /// `[K]^d` with periodic boundary; needs `K >= 3` so that the two
    /// neighbours along an axis are distinct.
    pub fn torus(k: usize, d: usize) -> Result<Self, ModelError> {
        if k < 3 {
            return Err(ModelError::Graph("a torus needs side length K >= 3".into()));
        }
        Self::box_lattice(k, d, true)
    }

    fn box_lattice(k: usize, d: usize, periodic: bool) -> Result<Self, ModelError> {
        if k == 0 || d == 0 {
            return Err(ModelError::Graph("lattice needs K >= 1 and d >= 1".into()));
        }
        let n = k
            .checked_pow(d as u32)
            .filter(|&n| n <= 1 << 24)
            .ok_or_else(|| ModelError::Graph("lattice too large".into()))?;
        let coords = |mut idx: usize| {
            let mut c = vec![0i64; d];
            for slot in c.iter_mut() {
                *slot = (idx % k) as i64 + 1;
                idx /= k;
            }
            c
        };
        let index = |c: &[i64]| {
            c.iter()
                .rev()
                .fold(0usize, |acc, &x| acc * k + (x - 1) as usize)
        };
        let mut labels = Vec::with_capacity(n);
        let mut adjacency = Vec::with_capacity(n);
        for v in 0..n {
            let c = coords(v);
            let mut nbrs = Vec::new();
            for axis in 0..d {
                for step in [-1i64, 1] {
                    let mut cn = c.clone();
                    let x = cn[axis] + step;
                    if x >= 1 && x <= k as i64 {
                        cn[axis] = x;
                    } else if periodic {
                        cn[axis] = if x < 1 { k as i64 } else { 1 };
                    } else {
                        continue;
                    }
                    let u = index(&cn);
                    if u != v {
                        nbrs.push(u);
                    }
                }
            }
            labels.push(VertexLabel::Lattice(c));
            adjacency.push(nbrs);
        }
        let kind = if periodic {
            GraphKind::Torus { k, d }
        } else {
            GraphKind::Grid { k, d }
        };
        Ok(Self::from_parts(kind, labels, adjacency))
    }

    /// `d`-uniform rooted tree truncated at generation `depth`. Vertices are
    /// numbered generation by generation: `(n, i)` has index
    /// `1 + d + ... + d^(n-1) + (i - 1)`.
    pub fn rooted_tree(d: usize, depth: u32) -> Result<Self, ModelError> {
        if d == 0 {
            return Err(ModelError::Graph("tree needs d >= 1".into()));
        }
        let mut total: usize = 0;
        for g in 0..=depth {
            let width = d
                .checked_pow(g)
                .ok_or_else(|| ModelError::Graph("tree too large".into()))?;
            total = total
                .checked_add(width)
                .filter(|&t| t <= 1 << 22)
                .ok_or_else(|| ModelError::Graph("tree too large".into()))?;
        }
        let mut labels = Vec::with_capacity(total);
        let mut adjacency = vec![Vec::new(); total];
        for g in 0..=depth {
            for i in 1..=(d.pow(g) as u64) {
                let v = labels.len();
                labels.push(VertexLabel::Tree {
                    generation: g,
                    index: i,
                });
                if g > 0 {
                    let parent = tree_index(d, g - 1, (i - 1) / d as u64 + 1);
                    adjacency[v].push(parent);
                    adjacency[parent].push(v);
                }
            }
        }
        Ok(Self::from_parts(
            GraphKind::RootedTree { d, depth },
            labels,
            adjacency,
        ))
    }

    /// Graph from an explicit undirected edge list. Disconnected graphs are
    /// rejected unless `allow_disconnected` is set.
    pub fn explicit(
        n: usize,
        edges: &[(usize, usize)],
        allow_disconnected: bool,
    ) -> Result<Self, ModelError> {
        Self::explicit_labeled(
            Self::indexed(n),
            edges,
            allow_disconnected,
            GraphKind::Explicit,
        )
    }

    pub(crate) fn explicit_labeled(
        labels: Vec<VertexLabel>,
        edges: &[(usize, usize)],
        allow_disconnected: bool,
        kind: GraphKind,
    ) -> Result<Self, ModelError> {
        let n = labels.len();
        if n == 0 {
            return Err(ModelError::Graph(
                "a graph needs at least one vertex".into(),
            ));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(ModelError::UnknownVertex {
                    vertex: a.max(b),
                    n_vertices: n,
                });
            }
            if a == b {
                continue;
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let g = Self::from_parts(kind, labels, adjacency);
        if !allow_disconnected && !g.is_connected() {
            return Err(ModelError::Graph("graph is disconnected".into()));
        }
        Ok(g)
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    pub fn n_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[VertexLabel] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &VertexLabel {
        &self.labels[v]
    }

    pub fn index_of(&self, label: &VertexLabel) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Each undirected edge once, as `(a, b)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, nbrs)| nbrs.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }

    /// Graph distances from `source` (`usize::MAX` when unreachable).
    pub fn distances_from(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n_vertices()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            for &u in &self.adjacency[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.distances_from(0).iter().all(|&d| d != usize::MAX)
    }

    /// Index of tree vertex `(generation, index)` for a [`GraphKind::RootedTree`].
    pub fn tree_vertex(&self, generation: u32, index: u64) -> Option<usize> {
        match self.kind {
            GraphKind::RootedTree { d, depth } if generation <= depth => {
                if index == 0 || index > d.pow(generation) as u64 {
                    return None;
                }
                Some(tree_index(d, generation, index))
            }
            _ => None,
        }
    }

    /// Generation of each vertex of a rooted tree.
    pub fn tree_generation(&self, v: usize) -> Option<u32> {
        match self.labels.get(v) {
            Some(VertexLabel::Tree { generation, .. }) => Some(*generation),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        let _ = match &self.kind {
            GraphKind::Complete { n } => write!(s, "complete({n})"),
            GraphKind::Line { n } => write!(s, "line({n})"),
            GraphKind::Grid { k, d } => write!(s, "grid({k},{d})"),
            GraphKind::Torus { k, d } => write!(s, "torus({k},{d})"),
            GraphKind::RootedTree { d, depth } => write!(s, "rooted_tree({d},{depth})"),
            GraphKind::LatticeBall { dim, radius } => write!(s, "lattice_ball({dim},{radius})"),
            GraphKind::Explicit => write!(s, "explicit({})", self.n_vertices()),
        };
        s
    }
}

fn tree_index(d: usize, generation: u32, index: u64) -> usize {
    let before: usize = (0..generation).map(|g| d.pow(g)).sum();
    before + (index - 1) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_torus_degrees() {
        let g = GraphSpec::grid(3, 2).unwrap();
        assert_eq!(g.n_vertices(), 9);
        let center = g.index_of(&VertexLabel::Lattice(vec![2, 2])).unwrap();
        assert_eq!(g.degree(center), 4);
        let corner = g.index_of(&VertexLabel::Lattice(vec![1, 1])).unwrap();
        assert_eq!(g.degree(corner), 2);

        let t = GraphSpec::torus(6, 2).unwrap();
        assert!((0..t.n_vertices()).all(|v| t.degree(v) == 4));
        assert!(GraphSpec::torus(2, 1).is_err());
    }

    #[test]
    fn tree_layout() {
        let t = GraphSpec::rooted_tree(2, 2).unwrap();
        assert_eq!(t.n_vertices(), 7);
        assert_eq!(t.degree(0), 2);
        let leaf = t.tree_vertex(2, 4).unwrap();
        assert_eq!(leaf, 6);
        assert_eq!(t.neighbors(leaf), &[t.tree_vertex(1, 2).unwrap()]);
        assert_eq!(t.distances_from(0)[leaf], 2);
    }

    #[test]
    fn explicit_connectivity() {
        assert!(GraphSpec::explicit(3, &[(0, 1)], false).is_err());
        assert!(GraphSpec::explicit(3, &[(0, 1)], true).is_ok());
        assert!(GraphSpec::explicit(3, &[(0, 1), (1, 2)], false)
            .unwrap()
            .is_connected());
        assert_eq!(GraphSpec::complete(4).unwrap().edges().count(), 6);
    }
}
