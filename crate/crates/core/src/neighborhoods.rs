//! Point clouds, exact radius neighborhoods, r-packing centers and graphs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use petgraph::unionfind::UnionFind;
use rand::Rng;

use crate::error::{invalid, Error, Result};

/// `n` points in `R^D`, row-major, with optional 1-based ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    labels: Option<Vec<usize>>,
    seed: Option<u64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("ambient dimension must be positive"));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(invalid(format!(
                "{} coordinates do not form a nonempty set of {dim}-dimensional points",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point coordinates must be finite"));
        }
        Ok(PointCloud {
            dim,
            coords,
            labels: None,
            seed: None,
        })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(invalid("points have differing dimensions"));
        }
        Self::new(dim, points.concat())
    }

    /// Attaches ground-truth labels; every label must be at least 1.
    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(invalid(format!(
                "{} labels for {} points",
                labels.len(),
                self.len()
            )));
        }
        if labels.contains(&0) {
            return Err(invalid("labels are 1-based"));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Number of ground-truth clusters, if labels are present.
    pub fn num_clusters(&self) -> Option<usize> {
        self.labels.as_ref().and_then(|l| l.iter().copied().max())
    }

    /// New cloud holding the given points, in the given order, without labels.
    pub fn subset(&self, indices: &[usize]) -> PointCloud {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointCloud {
            dim: self.dim,
            coords,
            labels: None,
            seed: None,
        }
    }

    /// Applies `f` to every point, keeping labels and seed.
    pub fn map_points(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> PointCloud {
        let coords: Vec<f64> = self.points().flat_map(&mut f).collect();
        PointCloud {
            dim: coords.len() / self.len(),
            coords,
            labels: self.labels.clone(),
            seed: self.seed,
        }
    }
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// Closed-ball membership test shared by every radius query.
#[inline]
pub fn within(a: &[f64], b: &[f64], r: f64) -> bool {
    dist_sq(a, b) <= r * r
}

const LEAF_SIZE: usize = 16;

#[derive(Debug)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// k-d tree over a point cloud answering exact closed-ball and k-nearest
/// queries. Immutable once built.
#[derive(Debug)]
pub struct NeighborhoodIndex<'a> {
    cloud: &'a PointCloud,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> NeighborhoodIndex<'a> {
    pub fn build(cloud: &'a PointCloud) -> Self {
        let mut index = NeighborhoodIndex {
            cloud,
            order: (0..cloud.len()).collect(),
            nodes: Vec::new(),
        };
        index.build_node(0, cloud.len());
        index
    }

    pub fn cloud(&self) -> &'a PointCloud {
        self.cloud
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        let cloud = self.cloud;
        let dim = cloud.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &self.order[start..end] {
            for (a, &c) in cloud.point(i).iter().enumerate() {
                lo[a] = lo[a].min(c);
                hi[a] = hi[a].max(c);
            }
        }
        let axis = (0..dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
            .unwrap_or(0);
        let mid = start + (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
            cloud.point(i)[axis].total_cmp(&cloud.point(j)[axis])
        });
        let value = cloud.point(self.order[mid])[axis];
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[slot] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        slot
    }

    /// Indices `j` with `‖x - x_j‖ ≤ r`, ascending.
    pub fn radius_query(&self, x: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.nodes.is_empty() {
            self.radius_rec(0, x, r, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn radius_rec(&self, node: usize, x: &[f64], r: f64, out: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if within(x, self.cloud.point(i), r) {
                        out.push(i);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = x[axis] - value;
                if diff <= r {
                    self.radius_rec(left, x, r, out);
                }
                if diff >= -r {
                    self.radius_rec(right, x, r, out);
                }
            }
        }
    }

    /// The `k` nearest points to `x`, closest first; equal distances are
    /// ordered by index.
    pub fn knn(&self, x: &[f64], k: usize) -> Vec<(usize, f64)> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if k > 0 && !self.nodes.is_empty() {
            self.knn_rec(0, x, k, &mut heap);
        }
        let mut out: Vec<_> = heap.into_iter().map(|c: Candidate| (c.index, c.dist_sq)).collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out.into_iter().map(|(i, d2)| (i, d2.sqrt())).collect()
    }

    /// Closest point to `x` (lowest index on ties).
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        self.knn(x, 1)[0]
    }

    fn knn_rec(&self, node: usize, x: &[f64], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let c = Candidate {
                        dist_sq: dist_sq(x, self.cloud.point(i)),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = x[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.knn_rec(near, x, k, heap);
                if heap.len() < k || diff * diff <= heap.peek().unwrap().dist_sq {
                    self.knn_rec(far, x, k, heap);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist_sq: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy r-packing: pick a random point, cover its closed r-ball, then pick
/// the next center uniformly among points not yet covered, until every point
/// is covered. Returns center indices in selection order.
pub fn subsample_centers(index: &NeighborhoodIndex<'_>, r: f64, rng: &mut impl Rng) -> Vec<usize> {
    let cloud = index.cloud();
    let n = cloud.len();
    let mut uncovered: Vec<usize> = (0..n).collect();
    let mut position: Vec<usize> = (0..n).collect();
    let mut covered = vec![false; n];
    let mut centers = Vec::new();
    while !uncovered.is_empty() {
        let center = uncovered[rng.random_range(0..uncovered.len())];
        centers.push(center);
        for j in index.radius_query(cloud.point(center), r) {
            if covered[j] {
                continue;
            }
            covered[j] = true;
            let pos = position[j];
            let last = *uncovered.last().unwrap();
            uncovered.swap_remove(pos);
            if last != j {
                position[last] = pos;
            }
        }
    }
    centers
}

/// Simple undirected graph without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from an edge list; self-loops and duplicates are dropped.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Graph::new(n);
        for (i, j) in edges {
            if i != j {
                g.adjacency[i].push(j);
                g.adjacency[j].push(i);
            }
        }
        for list in &mut g.adjacency {
            list.sort_unstable();
            list.dedup();
        }
        g
    }

    pub(crate) fn from_adjacency(adjacency: Vec<Vec<usize>>) -> Self {
        let g = Graph { adjacency };
        debug_assert!(g.is_symmetric());
        g
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Edges `(i, j)` with `i < j`, lexicographic.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    fn is_symmetric(&self) -> bool {
        self.adjacency
            .iter()
            .enumerate()
            .all(|(i, list)| list.iter().all(|&j| j != i && self.adjacency[j].binary_search(&i).is_ok()))
    }

    /// Subgraph induced by `keep`, with nodes renumbered in the order given.
    pub fn induced(&self, keep: &[usize]) -> Graph {
        let mut new_id = vec![usize::MAX; self.len()];
        for (k, &i) in keep.iter().enumerate() {
            new_id[i] = k;
        }
        let adjacency = keep
            .iter()
            .map(|&i| {
                let mut list: Vec<usize> = self.adjacency[i]
                    .iter()
                    .filter_map(|&j| (new_id[j] != usize::MAX).then_some(new_id[j]))
                    .collect();
                list.sort_unstable();
                list
            })
            .collect();
        Graph { adjacency }
    }
}

/// Component id per node. Ids start at 0 and are numbered in order of each
/// component's smallest node index.
pub fn connected_components(g: &Graph) -> Vec<usize> {
    let n = g.len();
    let mut uf = UnionFind::<usize>::new(n);
    for (i, j) in g.edges() {
        uf.union(i, j);
    }
    let mut id_of_root = vec![usize::MAX; n];
    let mut next = 0;
    (0..n)
        .map(|i| {
            let root = uf.find(i);
            if id_of_root[root] == usize::MAX {
                id_of_root[root] = next;
                next += 1;
            }
            id_of_root[root]
        })
        .collect()
}

/// Labels each removed point with the label of its nearest survivor; ties go
/// to the survivor with the lowest point index.
pub fn assign_to_closest_survivor(
    cloud: &PointCloud,
    removed: &[usize],
    survivors: &[usize],
    survivor_labels: &[usize],
) -> Result<Vec<usize>> {
    if survivors.is_empty() {
        return Err(Error::NoSurvivors);
    }
    if survivors.len() != survivor_labels.len() {
        return Err(invalid("one label per survivor is required"));
    }
    let mut pairs: Vec<(usize, usize)> = survivors
        .iter()
        .copied()
        .zip(survivor_labels.iter().copied())
        .collect();
    pairs.sort_unstable();
    let ids: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let sub = cloud.subset(&ids);
    let index = NeighborhoodIndex::build(&sub);
    Ok(removed
        .iter()
        .map(|&i| pairs[index.nearest(cloud.point(i)).0].1)
        .collect())
}
