//! Brute-force reference implementations used by integration and acceptance
//! tests. Nothing here calls into the code paths it checks.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use hpm_core::posedict::hdbscan::Dendrogram;
use hpm_core::skeleton::SkeletonFrame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Max over joints of per-joint L1, written out longhand.
pub fn same_joint_oracle(a: &SkeletonFrame, b: &SkeletonFrame) -> f64 {
    let mut best = 0.0;
    for i in 0..a.joints.len() {
        let mut s = 0.0;
        for d in 0..3 {
            s += (a.joints[i][d] - b.joints[i][d]).abs();
        }
        if s > best {
            best = s;
        }
    }
    best
}

pub fn random_frame(rng: &mut ChaCha8Rng, joints: usize, scale: f64) -> SkeletonFrame {
    SkeletonFrame::new(
        0,
        (0..joints)
            .map(|_| {
                [
                    rng.gen_range(-scale..scale),
                    rng.gen_range(-scale..scale),
                    rng.gen_range(-scale..scale),
                ]
            })
            .collect(),
    )
}

/// Points scattered around a few random centres.
pub fn clumpy_frames(rng: &mut ChaCha8Rng, n: usize, joints: usize) -> Vec<SkeletonFrame> {
    let centres: Vec<SkeletonFrame> = (0..rng.gen_range(1..=3)).map(|_| random_frame(rng, joints, 20.0)).collect();
    (0..n)
        .map(|_| {
            let c = &centres[rng.gen_range(0..centres.len())];
            let spread = rng.gen_range(0.5..4.0);
            SkeletonFrame::new(
                0,
                c.joints
                    .iter()
                    .map(|j| {
                        [
                            j[0] + rng.gen_range(-spread..spread),
                            j[1] + rng.gen_range(-spread..spread),
                            j[2] + rng.gen_range(-spread..spread),
                        ]
                    })
                    .collect(),
            )
        })
        .collect()
}

pub fn distance_matrix(points: &[SkeletonFrame]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| same_joint_oracle(a, b)).collect())
        .collect()
}

/// k-th nearest other point by full sort.
pub fn core_oracle(dist: &[Vec<f64>], k: usize) -> Vec<f64> {
    (0..dist.len())
        .map(|i| {
            let mut row: Vec<f64> = (0..dist.len()).filter(|&j| j != i).map(|j| dist[i][j]).collect();
            row.sort_by(f64::total_cmp);
            row[k - 1]
        })
        .collect()
}

pub fn mreach_matrix(dist: &[Vec<f64>], core: &[f64]) -> Vec<Vec<f64>> {
    let n = dist.len();
    (0..n)
        .map(|i| (0..n).map(|j| dist[i][j].max(core[i]).max(core[j])).collect())
        .collect()
}

/// Kruskal over the complete graph.
pub fn kruskal_weight(w: &[Vec<f64>]) -> f64 {
    let n = w.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((w[i][j], i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut comp: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    for (wt, i, j) in edges {
        let (ci, cj) = (comp[i], comp[j]);
        if ci != cj {
            total += wt;
            for c in comp.iter_mut() {
                if *c == cj {
                    *c = ci;
                }
            }
        }
    }
    total
}

/// Merge heights of naive agglomerative single linkage (O(n^3)).
pub fn naive_single_linkage_heights(w: &[Vec<f64>]) -> Vec<f64> {
    let mut groups: Vec<Vec<usize>> = (0..w.len()).map(|i| vec![i]).collect();
    let mut heights = Vec::new();
    while groups.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                for &i in &groups[a] {
                    for &j in &groups[b] {
                        if w[i][j] < best.0 {
                            best = (w[i][j], a, b);
                        }
                    }
                }
            }
        }
        let merged = groups.remove(best.2);
        groups[best.1].extend(merged);
        heights.push(best.0);
    }
    heights
}

#[derive(Debug, Clone)]
pub struct OracleCluster {
    pub points: BTreeSet<usize>,
    pub stability: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

fn lambda(distance: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        f64::INFINITY
    }
}

/// Condensed clusters and their stabilities recomputed directly from the
/// dendrogram: for every cluster, walk each member point down the tree until
/// it either falls into an undersized branch or the cluster splits.
/// Stability = sum over members of (lambda_exit - lambda_birth).
pub fn oracle_condensed(d: &Dendrogram, mcs: usize) -> Vec<OracleCluster> {
    let n = d.n_points;
    let leaf_sets: BTreeMap<usize, BTreeSet<usize>> = (0..n + d.merges.len())
        .map(|node| (node, d.leaves(node).into_iter().collect()))
        .collect();
    let size = |node: usize| leaf_sets[&node].len();
    let mut out: Vec<OracleCluster> = Vec::new();
    // (top dendrogram node, birth lambda, parent oracle id)
    let mut todo = vec![(n + d.merges.len() - 1, 0.0f64, None::<usize>)];
    while let Some((top, birth, parent)) = todo.pop() {
        let id = out.len();
        if let Some(p) = parent {
            out[p].children.push(id);
        }
        let mut stability = 0.0;
        let mut split: Option<(usize, usize, f64)> = None;
        for &p in &leaf_sets[&top] {
            let mut cur = top;
            let exit = loop {
                if cur < n {
                    break f64::INFINITY;
                }
                let m = d.merges[cur - n];
                let l = lambda(m.distance);
                let (mine, _other) = if leaf_sets[&m.left].contains(&p) { (m.left, m.right) } else { (m.right, m.left) };
                if size(m.left) >= mcs && size(m.right) >= mcs {
                    split = Some((m.left, m.right, l));
                    break l;
                }
                if size(mine) < mcs {
                    break l;
                }
                cur = mine;
            };
            stability += if exit == birth { 0.0 } else { exit - birth };
        }
        out.push(OracleCluster {
            points: leaf_sets[&top].clone(),
            stability,
            parent,
            children: Vec::new(),
        });
        if let Some((l, r, lam)) = split {
            todo.push((r, lam, Some(id)));
            todo.push((l, lam, Some(id)));
        }
    }
    out
}

/// Best-total antichain of non-root clusters by exhaustive enumeration.
/// Returns every subset whose total is within `tol` of the optimum.
pub fn oracle_best_selections(clusters: &[OracleCluster], tol: f64) -> (f64, Vec<BTreeSet<usize>>) {
    if clusters[0].children.is_empty() {
        return (clusters[0].stability, vec![BTreeSet::from([0])]);
    }
    let ids: Vec<usize> = (1..clusters.len()).collect();
    let ancestor = |a: usize, b: usize| {
        let mut cur = clusters[b].parent;
        while let Some(c) = cur {
            if c == a {
                return true;
            }
            cur = clusters[c].parent;
        }
        false
    };
    let mut totals = Vec::new();
    for mask in 0u32..(1 << ids.len()) {
        let chosen: Vec<usize> = ids.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &c)| c).collect();
        let ok = chosen
            .iter()
            .all(|&a| chosen.iter().all(|&b| a == b || (!ancestor(a, b) && !ancestor(b, a))));
        if ok {
            let total: f64 = chosen.iter().map(|&c| clusters[c].stability).sum();
            totals.push((total, chosen));
        }
    }
    let best = totals.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let winners = totals
        .into_iter()
        .filter(|t| t.0 >= best - tol * best.abs().max(1.0))
        .map(|t| t.1.into_iter().collect())
        .collect();
    (best, winners)
}

/// Three blobs of 30 single-joint frames, far apart.
pub fn three_blobs(seed: u64) -> (Vec<SkeletonFrame>, Vec<usize>) {
    let mut r = rng(seed);
    let centres = [[0.0, 0.0, 0.0], [100.0, 0.0, 0.0], [0.0, 100.0, 0.0]];
    let mut pts = Vec::new();
    let mut truth = Vec::new();
    for (b, c) in centres.iter().enumerate() {
        for _ in 0..30 {
            pts.push(SkeletonFrame::new(
                0,
                vec![[
                    c[0] + r.gen_range(-1.0..1.0),
                    c[1] + r.gen_range(-1.0..1.0),
                    c[2] + r.gen_range(-1.0..1.0),
                ]],
            ));
            truth.push(b);
        }
    }
    (pts, truth)
}

/// Frame range of pyramid segment `s` (0..7) for a clip of `f` frames,
/// computed by walking the halving path from the root.
pub fn ftp_segment_oracle(f: usize, s: usize) -> (usize, usize) {
    let (level, pos) = match s {
        0 => (0, 0),
        1 | 2 => (1, s - 1),
        _ => (2, s - 3),
    };
    let (mut lo, mut hi) = (0, f);
    for bit in (0..level).rev() {
        let mid = lo + (hi - lo) / 2;
        if (pos >> bit) & 1 == 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// `|X_k| / m` of a series zero-padded to at least 4 samples.
pub fn dft_oracle(series: &[f64], k: usize) -> f64 {
    let m = series.len();
    if m == 0 {
        return 0.0;
    }
    let mut padded = series.to_vec();
    padded.resize(m.max(4), 0.0);
    let n = padded.len() as f64;
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for (t, &v) in padded.iter().enumerate() {
        let w = -2.0 * std::f64::consts::PI * (k * t) as f64 / n;
        re += v * w.cos();
        im += v * w.sin();
    }
    (re * re + im * im).sqrt() / m as f64
}

/// Every descriptor entry computed on its own from the raw matrix.
pub fn ftp_oracle(rows: &[Vec<f32>]) -> Vec<f64> {
    let f = rows.len();
    let d = rows[0].len();
    let mut out = Vec::with_capacity(28 * d);
    for j in 0..d {
        for s in 0..7 {
            let (lo, hi) = ftp_segment_oracle(f, s);
            let series: Vec<f64> = (lo..hi).map(|t| f64::from(rows[t][j])).collect();
            for k in 0..4 {
                out.push(dft_oracle(&series, k));
            }
        }
    }
    out
}

pub fn random_rows(rng: &mut ChaCha8Rng, f: usize, d: usize) -> Vec<Vec<f32>> {
    (0..f).map(|_| (0..d).map(|_| rng.gen_range(-2.0f32..2.0)).collect()).collect()
}

/// Central difference of `g` at `x` along coordinate `i`.
pub fn central_diff(g: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut up = x.to_vec();
    let mut dn = x.to_vec();
    up[i] += h;
    dn[i] -= h;
    (g(&up) - g(&dn)) / (2.0 * h)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Nearest centroid by exhaustive scan; the first of equal distances wins.
pub fn nearest_oracle(centroids: &[Vec<f32>], x: &[f32]) -> usize {
    let d = |c: &Vec<f32>| -> f64 {
        c.iter().zip(x).map(|(a, b)| (f64::from(*a) - f64::from(*b)).powi(2)).sum()
    };
    let dists: Vec<f64> = centroids.iter().map(d).collect();
    let min = dists.iter().cloned().fold(f64::INFINITY, f64::min);
    dists.iter().position(|&v| v == min).unwrap()
}

/// Two Gaussian-ish blobs in `dim` dimensions separated along every axis.
pub fn separable_blobs(rng: &mut ChaCha8Rng, per_class: usize, classes: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|c| (0..dim).map(|j| if j % classes == c { 6.0 } else { -1.0 }).collect())
        .collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (c, ctr) in centers.iter().enumerate() {
        for _ in 0..per_class {
            x.push(ctr.iter().map(|m| m + rng.gen_range(-1.0..1.0)).collect());
            y.push(c);
        }
    }
    (x, y)
}

/// True when some hyperplane through the class means strictly separates each
/// class from the rest: the exhaustive margin check uses the mean-difference
/// direction and verifies every projected gap.
pub fn mean_direction_separable(x: &[Vec<f64>], y: &[usize], class: usize) -> bool {
    let dim = x[0].len();
    let mean = |pick: bool| -> Vec<f64> {
        let rows: Vec<&Vec<f64>> = x.iter().zip(y).filter(|(_, &l)| (l == class) == pick).map(|(r, _)| r).collect();
        (0..dim).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64).collect()
    };
    let (mp, mn) = (mean(true), mean(false));
    let w: Vec<f64> = mp.iter().zip(&mn).map(|(a, b)| a - b).collect();
    let proj = |r: &Vec<f64>| r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    let pos_min = x.iter().zip(y).filter(|(_, &l)| l == class).map(|(r, _)| proj(r)).fold(f64::INFINITY, f64::min);
    let neg_max = x.iter().zip(y).filter(|(_, &l)| l != class).map(|(r, _)| proj(r)).fold(f64::NEG_INFINITY, f64::max);
    pos_min > neg_max
}
