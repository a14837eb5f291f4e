//! Discrete metric measure spaces.
//!
//! A [`WeightedGraphSpace`] is an undirected connected graph whose nodes carry
//! a positive measure and whose edges carry a length and a conductance. For an
//! exponent `p` the p-energy of a field `u` is
//!
//! ```text
//! E_p(u) = sum_e conductance_e * (|u(a) - u(b)| / length_e)^p
//! ```
//!
//! i.e. the conductance is the volume an edge represents and the difference
//! quotient plays the role of the upper gradient. Grid builders set the
//! conductance to `mean density * h^dim` so that `E_p` is a Riemann sum of
//! `∫ |∇u|^p ω dx`.

mod build;
pub(crate) mod geometry;

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::descriptor::AnalyticSet;
use crate::error::{Error, Result};
use crate::math;

pub use build::{build_grid, build_radial, GridSpec, RadialSpec, DEFAULT_NODE_CAP};
pub use geometry::{
    geometry_report, metric_ball, metric_ball_closed, region_from_descriptor, DistanceCache, GeometryReport,
};

/// Who built a space and with which parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub builder: String,
    pub params: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceMeta {
    /// Grid spacing; `None` for abstract graphs.
    pub spacing: Option<f64>,
    /// Exponent of the `|x|^alpha` density, 0 when unweighted.
    pub weight_exponent: f64,
    /// Dilation constant of the Poincaré inequality, at least 1.
    pub poincare_dilation: f64,
    pub provenance: Provenance,
}

impl Default for SpaceMeta {
    fn default() -> Self {
        SpaceMeta { spacing: None, weight_exponent: 0.0, poincare_dilation: 1.0, provenance: Provenance::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    pub conductance: f64,
}

/// Edge given by node ids, as read from a file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSpec {
    pub a: u64,
    pub b: u64,
    pub length: f64,
    pub conductance: f64,
}

/// Axis-aligned lattice layout of a grid-backed space.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    pub lo: Vec<f64>,
    pub h: f64,
    pub counts: Vec<usize>,
}

impl GridLayout {
    fn index_of(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (k, &m) in multi.iter().enumerate() {
            idx += m * stride;
            stride *= self.counts[k];
        }
        idx
    }

    /// Nearest lattice node to `x`, if `x` lies within half a cell of the grid.
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        let mut multi = Vec::with_capacity(self.counts.len());
        for (k, &count) in self.counts.iter().enumerate() {
            let r = math::round((x.get(k).copied()? - self.lo[k]) / self.h);
            if r < 0.0 || r > (count - 1) as f64 {
                return None;
            }
            multi.push(r as usize);
        }
        Some(self.index_of(&multi))
    }
}

/// A finite weighted graph standing in for a metric measure space.
#[derive(Debug, Clone)]
pub struct WeightedGraphSpace {
    ids: Vec<u64>,
    mu: Vec<f64>,
    positions: Option<Vec<f64>>,
    pos_dim: usize,
    edges: Vec<Edge>,
    dim: usize,
    meta: SpaceMeta,
    adj_offsets: Vec<usize>,
    adj: Vec<(usize, usize)>,
    grid: Option<GridLayout>,
}

impl WeightedGraphSpace {
    /// Validates and assembles a space from node and edge lists.
    ///
    /// `positions`, when present, holds `pos_dim` coordinates per node.
    pub fn from_parts(
        ids: Vec<u64>,
        mu: Vec<f64>,
        positions: Option<(usize, Vec<f64>)>,
        edges: &[EdgeSpec],
        dim: usize,
        meta: SpaceMeta,
    ) -> Result<Self> {
        if ids.len() != mu.len() {
            return Err(Error::InvalidParameter { name: "mu", reason: "one measure per node required".into() });
        }
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.sort_by_key(|&i| ids[i]);
        for w in order.windows(2) {
            if ids[w[0]] == ids[w[1]] {
                return Err(Error::DuplicateNode(ids[w[0]]));
            }
        }
        let lookup = |id: u64| -> Result<usize> {
            order.binary_search_by_key(&id, |&i| ids[i]).map(|k| order[k]).map_err(|_| Error::UnknownNode(id))
        };
        let mut internal = Vec::with_capacity(edges.len());
        for e in edges {
            let a = lookup(e.a)?;
            let b = lookup(e.b)?;
            if a == b {
                return Err(Error::SelfLoop(e.a));
            }
            internal.push(Edge { a, b, length: e.length, conductance: e.conductance });
        }
        let (pos_dim, positions) = match positions {
            Some((d, p)) => {
                if p.len() != d * ids.len() {
                    return Err(Error::InvalidParameter {
                        name: "positions",
                        reason: "coordinate count does not match node count".into(),
                    });
                }
                (d, Some(p))
            }
            None => (0, None),
        };
        Self::assemble(ids, mu, positions, pos_dim, internal, dim, meta, None)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        ids: Vec<u64>,
        mu: Vec<f64>,
        positions: Option<Vec<f64>>,
        pos_dim: usize,
        edges: Vec<Edge>,
        dim: usize,
        meta: SpaceMeta,
        grid: Option<GridLayout>,
    ) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::EmptyGrid);
        }
        if mu.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::NonpositiveWeight { what: "node measure" });
        }
        for e in &edges {
            if !(e.length > 0.0) || !e.length.is_finite() {
                return Err(Error::NonpositiveWeight { what: "edge length" });
            }
            if !(e.conductance > 0.0) || !e.conductance.is_finite() {
                return Err(Error::NonpositiveWeight { what: "edge conductance" });
            }
            if e.a == e.b {
                return Err(Error::SelfLoop(ids[e.a]));
            }
        }
        if !(meta.poincare_dilation >= 1.0) {
            return Err(Error::InvalidParameter { name: "poincare_dilation", reason: "must be at least 1".into() });
        }
        let mut degree = vec![0usize; n + 1];
        for e in &edges {
            degree[e.a] += 1;
            degree[e.b] += 1;
        }
        let mut adj_offsets = vec![0usize; n + 1];
        for i in 0..n {
            adj_offsets[i + 1] = adj_offsets[i] + degree[i];
        }
        let mut fill = adj_offsets.clone();
        let mut adj = vec![(0usize, 0usize); adj_offsets[n]];
        for (k, e) in edges.iter().enumerate() {
            adj[fill[e.a]] = (e.b, k);
            fill[e.a] += 1;
            adj[fill[e.b]] = (e.a, k);
            fill[e.b] += 1;
        }
        let space = WeightedGraphSpace { ids, mu, positions, pos_dim, edges, dim, meta, adj_offsets, adj, grid };
        if !space.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(space)
    }

    fn is_connected(&self) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &(j, _) in self.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == n
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// Internal index of a node id.
    pub fn index_of(&self, id: u64) -> Option<usize> {
        // builders assign ids 0..n in order
        if (id as usize) < self.ids.len() && self.ids[id as usize] == id {
            return Some(id as usize);
        }
        self.ids.iter().position(|&x| x == id)
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn meta(&self) -> &SpaceMeta {
        &self.meta
    }

    pub fn grid(&self) -> Option<&GridLayout> {
        self.grid.as_ref()
    }

    pub fn has_positions(&self) -> bool {
        self.positions.is_some()
    }

    pub fn position_dim(&self) -> usize {
        self.pos_dim
    }

    pub fn position(&self, i: usize) -> Option<&[f64]> {
        self.positions.as_ref().map(|p| &p[i * self.pos_dim..(i + 1) * self.pos_dim])
    }

    /// `(neighbor, edge index)` pairs of node `i`.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adj[self.adj_offsets[i]..self.adj_offsets[i + 1]]
    }

    /// Energy weight `conductance / length^p` of every edge.
    pub fn edge_weights(&self, p: f64) -> Vec<f64> {
        self.edges.iter().map(|e| e.conductance / math::powf(e.length, p)).collect()
    }

    /// Sum of node measures over a region, in index order.
    pub fn measure(&self, region: &Region) -> f64 {
        region.nodes().iter().map(|&i| self.mu[i]).sum()
    }

    pub fn total_measure(&self) -> f64 {
        self.mu.iter().sum()
    }

    /// Node nearest to a point (exact lattice lookup on grids).
    pub fn nearest_node(&self, x: &[f64]) -> Result<usize> {
        let pos = self.positions.as_ref().ok_or(Error::NoPositions)?;
        if let Some(g) = &self.grid {
            if let Some(i) = g.nearest(x) {
                return Ok(i);
            }
        }
        let d = self.pos_dim;
        let mut best = (f64::INFINITY, 0usize);
        for i in 0..self.len() {
            let di = math::dist(&pos[i * d..(i + 1) * d], x);
            if di < best.0 {
                best = (di, i);
            }
        }
        Ok(best.1)
    }

    /// Distances from `center` to every node: Euclidean when positions are
    /// available, shortest-path otherwise.
    pub fn distances_from(&self, center: usize) -> Vec<f64> {
        match &self.positions {
            Some(pos) => {
                let d = self.pos_dim;
                let c = &pos[center * d..(center + 1) * d];
                (0..self.len()).map(|i| math::dist(&pos[i * d..(i + 1) * d], c)).collect()
            }
            None => self.shortest_paths(center),
        }
    }

    /// Dijkstra over edge lengths.
    pub fn shortest_paths(&self, source: usize) -> Vec<f64> {
        #[derive(PartialEq)]
        struct Item(f64, usize);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Item {
            fn cmp(&self, other: &Self) -> Ordering {
                other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
            }
        }
        let mut dist = vec![f64::INFINITY; self.len()];
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Item(0.0, source));
        while let Some(Item(d, i)) = heap.pop() {
            if d > dist[i] {
                continue;
            }
            for &(j, e) in self.neighbors(i) {
                let nd = d + self.edges[e].length;
                if nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Item(nd, j));
                }
            }
        }
        dist
    }

    /// Diameter: exact bounding-box diagonal on grids, double-sweep estimate
    /// of the graph metric otherwise.
    pub fn diameter(&self) -> f64 {
        if let Some(g) = &self.grid {
            let s: f64 = g
                .counts
                .iter()
                .map(|&c| {
                    let l = (c - 1) as f64 * g.h;
                    l * l
                })
                .sum();
            return math::sqrt(s);
        }
        let first = self.distances_from(0);
        let (far, _) = first.iter().enumerate().fold((0, 0.0), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        self.distances_from(far).iter().cloned().fold(0.0, f64::max)
    }
}

/// A node set of a space, optionally remembering the analytic set it came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Region {
    nodes: Vec<usize>,
    descriptor: Option<AnalyticSet>,
}

impl Region {
    pub fn empty() -> Self {
        Region::default()
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut nodes: Vec<usize> = indices.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        Region { nodes, descriptor: None }
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        Region { nodes: mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect(), descriptor: None }
    }

    pub fn all(n: usize) -> Self {
        Region { nodes: (0..n).collect(), descriptor: None }
    }

    pub fn with_descriptor(mut self, descriptor: AnalyticSet) -> Self {
        self.descriptor = Some(descriptor);
        self
    }

    pub fn descriptor(&self) -> Option<&AnalyticSet> {
        self.descriptor.as_ref()
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.nodes.binary_search(&i).is_ok()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.nodes {
            if i < n {
                m[i] = true;
            }
        }
        m
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.nodes.iter().all(|&i| other.contains(i))
    }

    pub fn union(&self, other: &Region) -> Region {
        Region::from_indices(self.nodes.iter().chain(other.nodes.iter()).copied())
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region::from_indices(self.nodes.iter().copied().filter(|&i| other.contains(i)))
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region::from_indices(self.nodes.iter().copied().filter(|&i| !other.contains(i)))
    }

    /// Complement within a space of `n` nodes.
    pub fn complement(&self, n: usize) -> Region {
        let m = self.mask(n);
        Region::from_indices((0..n).filter(|&i| !m[i]))
    }
}

/// Metric ball `B(center, radius)`; open unless `closed` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub closed: bool,
}

impl Ball {
    pub fn open(center: usize, radius: f64) -> Self {
        Ball { center, radius, closed: false }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Ball { radius: self.radius * factor, ..*self }
    }
}
