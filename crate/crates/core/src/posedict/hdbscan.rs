//! HDBSCAN over an arbitrary metric.
//!
//! Pipeline: core distances, a dense Prim MST over mutual reachability,
//! the single-linkage dendrogram, the condensed tree at `min_cluster_size`,
//! and excess-of-mass cluster selection. Distances are evaluated on the fly,
//! so memory stays linear in the number of points.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PoseDictError;
use crate::skeleton::{joint_distance, DistanceVariant, SkeletonFrame};

pub trait Metric<P>: Sync {
    fn distance(&self, a: &P, b: &P) -> f64;
}

impl<P, F> Metric<P> for F
where
    F: Fn(&P, &P) -> f64 + Sync,
{
    fn distance(&self, a: &P, b: &P) -> f64 {
        self(a, b)
    }
}

/// Skeletal distance as a clustering metric. Frames must share a joint count.
#[derive(Debug, Clone, Copy, Default)]
pub struct SkeletalMetric(pub DistanceVariant);

impl Metric<SkeletonFrame> for SkeletalMetric {
    fn distance(&self, a: &SkeletonFrame, b: &SkeletonFrame) -> f64 {
        debug_assert_eq!(a.joints.len(), b.joints.len());
        joint_distance(&a.joints, &b.joints, self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MstEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// One agglomeration step. Node ids below `n` are points; merge `i` creates
/// node `n + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub n_points: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn node_size(&self, node: usize) -> usize {
        if node < self.n_points {
            1
        } else {
            self.merges[node - self.n_points].size
        }
    }

    pub fn root(&self) -> usize {
        self.n_points + self.merges.len() - 1
    }

    /// Points under `node`, in depth-first order.
    pub fn leaves(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(cur) = stack.pop() {
            if cur < self.n_points {
                out.push(cur);
            } else {
                let m = &self.merges[cur - self.n_points];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondensedCluster {
    pub parent: Option<usize>,
    pub birth_lambda: f64,
    pub size: usize,
    pub children: Vec<usize>,
    pub stability: f64,
}

/// A point leaving cluster `cluster` at density `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointExit {
    pub cluster: usize,
    pub lambda: f64,
}

/// Condensed cluster tree. Cluster 0 is the root; children always carry
/// larger ids than their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedTree {
    pub clusters: Vec<CondensedCluster>,
    /// Indexed by point.
    pub exits: Vec<PointExit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// Cluster index per point, `None` for noise.
    pub labels: Vec<Option<usize>>,
    /// Membership strength per point in `[0, 1]`; 0 for noise.
    pub strengths: Vec<f64>,
    /// Stability per selected cluster.
    pub stabilities: Vec<f64>,
}

impl ClusterResult {
    pub fn n_clusters(&self) -> usize {
        self.stabilities.len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| (*l == Some(cluster)).then_some(i))
            .collect()
    }
}

pub(crate) fn lambda_of(distance: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        f64::INFINITY
    }
}

// (lambda - birth) with inf - inf taken as 0.
fn lambda_span(lambda: f64, birth: f64) -> f64 {
    if lambda == birth {
        0.0
    } else {
        lambda - birth
    }
}

/// Distance from each point to its `k`-th nearest other point.
pub fn core_distances<P: Sync, M: Metric<P>>(
    points: &[P],
    k: usize,
    metric: &M,
) -> Result<Vec<f64>, PoseDictError> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(PoseDictError::NeighborCountOutOfRange { k, n });
    }
    Ok(points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| metric.distance(p, q))
                .collect();
            let (_, kth, _) = row.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect())
}

pub fn mutual_reachability(core_a: f64, core_b: f64, distance: f64) -> f64 {
    core_a.max(core_b).max(distance)
}

/// Minimum spanning tree of the complete mutual-reachability graph, by Prim's
/// algorithm starting from point 0. Ties pick the lowest point index.
pub fn build_mst<P: Sync, M: Metric<P>>(points: &[P], core: &[f64], metric: &M) -> Vec<MstEdge> {
    let n = points.len();
    assert_eq!(core.len(), n, "one core distance per point");
    if n <= 1 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0usize;
    in_tree[0] = true;

    for _ in 1..n {
        let from = &points[current];
        let core_from = core[current];
        best.par_iter_mut()
            .zip(parent.par_iter_mut())
            .enumerate()
            .filter(|(j, _)| !in_tree[*j])
            .for_each(|(j, (b, p))| {
                let w = mutual_reachability(core_from, core[j], metric.distance(from, &points[j]));
                if w < *b {
                    *b = w;
                    *p = current;
                }
            });
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < next_w) {
                next = j;
                next_w = best[j];
            }
        }
        in_tree[next] = true;
        edges.push(MstEdge {
            u: parent[next],
            v: next,
            weight: next_w,
        });
        current = next;
    }
    edges
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }
}

/// Single-linkage dendrogram from MST edges, merging in ascending weight
/// (stable for ties).
pub fn single_linkage(n_points: usize, mst: &[MstEdge]) -> Dendrogram {
    let mut edges = mst.to_vec();
    edges.sort_by(|a, b| a.weight.total_cmp(&b.weight));
    // Node labels live in a 2n-1 union-find; each point/merge root maps to the
    // dendrogram node that currently represents it.
    let mut uf = UnionFind::new(2 * n_points.max(1) - 1);
    let mut merges = Vec::with_capacity(edges.len());
    for (i, e) in edges.iter().enumerate() {
        let a = uf.find(e.u);
        let b = uf.find(e.v);
        let node = n_points + i;
        let size = uf.size[a] + uf.size[b];
        merges.push(Merge {
            left: a,
            right: b,
            distance: e.weight,
            size,
        });
        uf.parent[a] = node;
        uf.parent[b] = node;
        uf.size[node] = size;
    }
    Dendrogram { n_points, merges }
}

/// Condenses the dendrogram: a split only creates child clusters when both
/// sides hold at least `min_cluster_size` points; otherwise the small side's
/// points fall out of the current cluster.
pub fn condense(dendrogram: &Dendrogram, min_cluster_size: usize) -> CondensedTree {
    let n = dendrogram.n_points;
    let mut clusters = vec![CondensedCluster {
        parent: None,
        birth_lambda: 0.0,
        size: n,
        children: Vec::new(),
        stability: 0.0,
    }];
    let mut exits = vec![
        PointExit {
            cluster: 0,
            lambda: f64::INFINITY,
        };
        n
    ];
    if dendrogram.merges.is_empty() {
        return CondensedTree { clusters, exits };
    }

    let mut queue = VecDeque::from([(dendrogram.root(), 0usize)]);
    while let Some((node, cluster)) = queue.pop_front() {
        if node < n {
            continue;
        }
        let m = dendrogram.merges[node - n];
        let lambda = lambda_of(m.distance);
        let left_big = dendrogram.node_size(m.left) >= min_cluster_size;
        let right_big = dendrogram.node_size(m.right) >= min_cluster_size;
        match (left_big, right_big) {
            (true, true) => {
                for child in [m.left, m.right] {
                    let id = clusters.len();
                    clusters.push(CondensedCluster {
                        parent: Some(cluster),
                        birth_lambda: lambda,
                        size: dendrogram.node_size(child),
                        children: Vec::new(),
                        stability: 0.0,
                    });
                    clusters[cluster].children.push(id);
                    queue.push_back((child, id));
                }
            }
            (false, false) => {
                for side in [m.left, m.right] {
                    for p in dendrogram.leaves(side) {
                        exits[p] = PointExit { cluster, lambda };
                    }
                }
            }
            (true, false) | (false, true) => {
                let (big, small) = if left_big { (m.left, m.right) } else { (m.right, m.left) };
                for p in dendrogram.leaves(small) {
                    exits[p] = PointExit { cluster, lambda };
                }
                queue.push_back((big, cluster));
            }
        }
    }

    for exit in &exits {
        let birth = clusters[exit.cluster].birth_lambda;
        clusters[exit.cluster].stability += lambda_span(exit.lambda, birth);
    }
    for id in 1..clusters.len() {
        let (parent, birth, size) = {
            let c = &clusters[id];
            (c.parent.expect("non-root cluster has a parent"), c.birth_lambda, c.size)
        };
        let parent_birth = clusters[parent].birth_lambda;
        clusters[parent].stability += lambda_span(birth, parent_birth) * size as f64;
    }
    CondensedTree { clusters, exits }
}

/// Excess-of-mass selection. The root is only selected when it never splits.
pub fn select_clusters(tree: &CondensedTree) -> Vec<usize> {
    let count = tree.clusters.len();
    if tree.clusters[0].children.is_empty() {
        return vec![0];
    }
    let mut subtree: Vec<f64> = tree.clusters.iter().map(|c| c.stability).collect();
    let mut selected = vec![false; count];
    for id in (1..count).rev() {
        let child_sum: f64 = tree.clusters[id].children.iter().map(|&c| subtree[c]).sum();
        if child_sum > tree.clusters[id].stability {
            subtree[id] = child_sum;
        } else {
            selected[id] = true;
            let mut stack = tree.clusters[id].children.clone();
            while let Some(c) = stack.pop() {
                selected[c] = false;
                stack.extend_from_slice(&tree.clusters[c].children);
            }
        }
    }
    (0..count).filter(|&i| selected[i]).collect()
}

/// Labels and membership strengths for a selection over a condensed tree.
pub fn label_points(tree: &CondensedTree, selected: &[usize]) -> ClusterResult {
    let mut index_of = vec![None; tree.clusters.len()];
    for (i, &c) in selected.iter().enumerate() {
        index_of[c] = Some(i);
    }
    // Selected ancestor (or self) of every condensed cluster.
    let mut owner: Vec<Option<usize>> = vec![None; tree.clusters.len()];
    for id in 0..tree.clusters.len() {
        owner[id] = match index_of[id] {
            Some(_) => Some(id),
            None => tree.clusters[id].parent.and_then(|p| owner[p]),
        };
    }
    // Largest lambda among rows directly under each cluster.
    let mut death = vec![0.0f64; tree.clusters.len()];
    for exit in &tree.exits {
        death[exit.cluster] = death[exit.cluster].max(exit.lambda);
    }
    for c in &tree.clusters {
        if let Some(p) = c.parent {
            death[p] = death[p].max(c.birth_lambda);
        }
    }

    let mut labels = Vec::with_capacity(tree.exits.len());
    let mut strengths = Vec::with_capacity(tree.exits.len());
    for exit in &tree.exits {
        match owner[exit.cluster] {
            Some(sel) => {
                labels.push(index_of[sel]);
                let max_lambda = death[sel];
                let s = if max_lambda == 0.0 || !exit.lambda.is_finite() {
                    1.0
                } else {
                    exit.lambda.min(max_lambda) / max_lambda
                };
                strengths.push(s);
            }
            None => {
                labels.push(None);
                strengths.push(0.0);
            }
        }
    }
    ClusterResult {
        labels,
        strengths,
        stabilities: selected.iter().map(|&c| tree.clusters[c].stability).collect(),
    }
}

/// Full HDBSCAN run. `min_samples` is clamped to `n - 1`.
pub fn hdbscan<P: Sync, M: Metric<P>>(
    points: &[P],
    min_cluster_size: usize,
    min_samples: usize,
    metric: &M,
) -> Result<ClusterResult, PoseDictError> {
    let n = points.len();
    if min_cluster_size < 2 {
        return Err(PoseDictError::InvalidParams(format!(
            "min_cluster_size must be at least 2, got {min_cluster_size}"
        )));
    }
    if min_samples == 0 {
        return Err(PoseDictError::InvalidParams("min_samples must be positive".into()));
    }
    if n < min_cluster_size {
        return Err(PoseDictError::TooFewPoints {
            n,
            min_cluster_size,
        });
    }
    let core = core_distances(points, min_samples.min(n - 1), metric)?;
    let mst = build_mst(points, &core, metric);
    let dendrogram = single_linkage(n, &mst);
    let tree = condense(&dendrogram, min_cluster_size);
    let selected = select_clusters(&tree);
    Ok(label_points(&tree, &selected))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn abs(a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }

    #[test]
    fn core_distance_examples() {
        let pts = line(&[0.0, 1.0, 3.0]);
        assert_eq!(core_distances(&pts, 1, &abs).unwrap(), vec![1.0, 1.0, 2.0]);
        assert_eq!(core_distances(&pts, 2, &abs).unwrap(), vec![3.0, 2.0, 3.0]);
        let dup = line(&[5.0, 5.0, 0.0, 9.0]);
        let core = core_distances(&dup, 1, &abs).unwrap();
        assert_eq!(core[0], 0.0);
        assert_eq!(core[1], 0.0);
        assert!(core_distances(&pts, 3, &abs).is_err());
        assert!(core_distances(&pts, 0, &abs).is_err());
    }

    #[test]
    fn mst_examples() {
        let single = line(&[1.0]);
        assert!(build_mst(&single, &[0.0], &abs).is_empty());
        // pairwise distances {1, 2, 3}
        let pts = line(&[0.0, 1.0, 3.0]);
        let edges = build_mst(&pts, &[0.0; 3], &abs);
        assert_eq!(edges.len(), 2);
        assert_eq!(edges.iter().map(|e| e.weight).sum::<f64>(), 3.0);
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let pts = vec![2.5; 30];
        let r = hdbscan(&pts, 20, 20, &abs).unwrap();
        assert_eq!(r.n_clusters(), 1);
        assert_eq!(r.noise_count(), 0);
        assert!(r.strengths.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn too_few_points() {
        let pts = vec![0.0; 5];
        assert!(matches!(
            hdbscan(&pts, 20, 20, &abs),
            Err(PoseDictError::TooFewPoints { n: 5, .. })
        ));
        assert!(hdbscan(&pts, 1, 1, &abs).is_err());
    }

    #[test]
    fn condensed_tree_accounts_every_point_once() {
        let pts: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin() * 10.0 + (i / 20) as f64 * 50.0).collect();
        let core = core_distances(&pts, 4, &abs).unwrap();
        let d = single_linkage(pts.len(), &build_mst(&pts, &core, &abs));
        assert_eq!(d.merges.last().unwrap().size, 40);
        let t = condense(&d, 5);
        assert_eq!(t.exits.len(), 40);
        for c in &t.clusters[1..] {
            assert!(c.size >= 5);
            assert!(c.birth_lambda >= t.clusters[c.parent.unwrap()].birth_lambda);
        }
    }
}
