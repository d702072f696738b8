mod common;

use std::collections::BTreeSet;

use common::*;
use hpm_core::posedict::hdbscan::{build_mst, condense, core_distances, select_clusters, single_linkage};
use hpm_core::posedict::{
    cluster_poses, extract_representatives, ClusterParams, SkeletalMetric,
};
use hpm_core::skeleton::{DistanceVariant, SkeletonFrame};
use rand::Rng;

const METRIC: SkeletalMetric = SkeletalMetric(DistanceVariant::SameJoint);

#[test]
fn core_distances_match_sorted_rows() {
    let mut r = rng(1);
    for _ in 0..20 {
        let n = r.gen_range(2..30);
        let pts: Vec<SkeletonFrame> = (0..n).map(|_| random_frame(&mut r, 3, 5.0)).collect();
        let dist = distance_matrix(&pts);
        for k in [1, n / 2, n - 1] {
            if k == 0 {
                continue;
            }
            assert_eq!(core_distances(&pts, k, &METRIC).unwrap(), core_oracle(&dist, k));
        }
        // k = n-1 is the farthest other point
        let far: Vec<f64> = dist.iter().map(|row| row.iter().cloned().fold(0.0, f64::max)).collect();
        assert_eq!(core_distances(&pts, n - 1, &METRIC).unwrap(), far);
    }
}

#[test]
fn mst_weight_matches_kruskal() {
    let mut r = rng(2);
    for trial in 0..30 {
        let pts = clumpy_frames(&mut r, 20, 2);
        let dist = distance_matrix(&pts);
        let k = 1 + trial % 5;
        let core = core_oracle(&dist, k);
        let edges = build_mst(&pts, &core, &METRIC);
        assert_eq!(edges.len(), 19);
        let total: f64 = edges.iter().map(|e| e.weight).sum();
        let expected = kruskal_weight(&mreach_matrix(&dist, &core));
        assert!((total - expected).abs() <= 1e-9 * expected.max(1.0), "{total} vs {expected}");

        // spanning: every vertex reachable
        let mut seen = vec![false; 20];
        seen[0] = true;
        for _ in 0..20 {
            for e in &edges {
                if seen[e.u] || seen[e.v] {
                    seen[e.u] = true;
                    seen[e.v] = true;
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }
}

#[test]
fn mst_of_three_point_example() {
    // pairwise distances {1, 2, 3}, core distances all zero
    let pts: Vec<SkeletonFrame> = [0.0, 1.0, 3.0].iter().map(|&x| SkeletonFrame::new(0, vec![[x, 0.0, 0.0]])).collect();
    let w = build_mst(&pts, &[0.0; 3], &METRIC).iter().map(|e| e.weight).sum::<f64>();
    assert_eq!(w, 3.0);
}

#[test]
fn mst_weight_is_permutation_invariant() {
    let mut r = rng(3);
    let pts = clumpy_frames(&mut r, 25, 3);
    let core = core_distances(&pts, 4, &METRIC).unwrap();
    let base: f64 = build_mst(&pts, &core, &METRIC).iter().map(|e| e.weight).sum();
    let mut order: Vec<usize> = (0..pts.len()).collect();
    for _ in 0..5 {
        for i in (1..order.len()).rev() {
            order.swap(i, r.gen_range(0..=i));
        }
        let p2: Vec<_> = order.iter().map(|&i| pts[i].clone()).collect();
        let c2: Vec<_> = order.iter().map(|&i| core[i]).collect();
        let w: f64 = build_mst(&p2, &c2, &METRIC).iter().map(|e| e.weight).sum();
        assert!((w - base).abs() <= 1e-9 * base);
    }
}

#[test]
fn dendrogram_heights_match_naive_agglomeration() {
    let mut r = rng(4);
    for _ in 0..20 {
        let n = r.gen_range(5..=18);
        let pts = clumpy_frames(&mut r, n, 2);
        let dist = distance_matrix(&pts);
        let core = core_oracle(&dist, 3.min(n - 1));
        let d = single_linkage(n, &build_mst(&pts, &core, &METRIC));
        let mut got: Vec<f64> = d.merges.iter().map(|m| m.distance).collect();
        let mut want = naive_single_linkage_heights(&mreach_matrix(&dist, &core));
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        assert_eq!(got, want);
        assert_eq!(d.merges.last().unwrap().size, n);
    }
}

/// Stabilities and selections against the dendrogram oracle; true when the
/// instance had at least one non-root cluster.
fn check_instance(seed: u64) -> bool {
    let mut r = rng(seed);
    let n = r.gen_range(10..=25);
    let mcs = r.gen_range(3..=6);
    let joints = r.gen_range(1..=3);
    let pts = clumpy_frames(&mut r, n, joints);
    let core = core_distances(&pts, mcs.min(n - 1), &METRIC).unwrap();
    let d = single_linkage(n, &build_mst(&pts, &core, &METRIC));
    let tree = condense(&d, mcs);
    let oracle = oracle_condensed(&d, mcs);

    // Same cluster set (by membership), same stabilities.
    assert_eq!(tree.clusters.len(), oracle.len(), "seed {seed}");
    let members = |c: usize| -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for (p, e) in tree.exits.iter().enumerate() {
            let mut cur = Some(e.cluster);
            while let Some(x) = cur {
                if x == c {
                    out.insert(p);
                    break;
                }
                cur = tree.clusters[x].parent;
            }
        }
        out
    };
    let mut impl_by_set = std::collections::BTreeMap::new();
    for c in 0..tree.clusters.len() {
        impl_by_set.insert(members(c), (c, tree.clusters[c].stability));
    }
    for oc in &oracle {
        let (_, s) = impl_by_set.get(&oc.points).unwrap_or_else(|| panic!("seed {seed}: missing cluster"));
        assert!(
            (s - oc.stability).abs() <= 1e-9 * oc.stability.abs().max(1.0),
            "seed {seed}: stability {s} vs {}",
            oc.stability
        );
    }

    let selected: BTreeSet<BTreeSet<usize>> = select_clusters(&tree).into_iter().map(members).collect();
    let (best, winners) = oracle_best_selections(&oracle, 1e-12);
    let winner_sets: Vec<BTreeSet<BTreeSet<usize>>> = winners
        .iter()
        .map(|w| w.iter().map(|&i| oracle[i].points.clone()).collect())
        .collect();
    assert!(winner_sets.contains(&selected), "seed {seed}: selection not optimal");
    let total: f64 = selected.iter().map(|s| impl_by_set[s].1).sum();
    assert!((total - best).abs() <= 1e-9 * best.abs().max(1.0));
    oracle.len() > 1
}

#[test]
fn condensed_tree_and_selection_match_oracle() {
    let nontrivial = (0..80).filter(|&s| check_instance(1000 + s)).count();
    assert!(nontrivial >= 20, "only {nontrivial} instances split");
}

#[test]
fn three_blobs_give_three_clusters() {
    let (pts, truth) = three_blobs(7);
    let params = ClusterParams {
        min_cluster_size: 20,
        ..ClusterParams::default()
    };
    let result = cluster_poses(&pts, &params).unwrap();
    assert_eq!(result.n_clusters(), 3);
    assert_eq!(result.noise_count(), 0);
    // clusters coincide with blobs
    for c in 0..3 {
        let members = result.members(c);
        let blob = truth[members[0]];
        assert!(members.iter().all(|&m| truth[m] == blob));
        assert_eq!(members.len(), 30);
    }
    assert!(result.strengths.iter().all(|&s| (0.0..=1.0).contains(&s)));

    let dict = extract_representatives(&pts, &result, &params).unwrap();
    assert_eq!(dict.len(), 3);
    for (c, &rep) in dict.source_indices.iter().enumerate() {
        assert_eq!(result.labels[rep], Some(c));
        // inside the blob's bounding box (members span the convex hull)
        let members = result.members(c);
        for axis in 0..3 {
            let lo = members.iter().map(|&m| pts[m].joints[0][axis]).fold(f64::INFINITY, f64::min);
            let hi = members.iter().map(|&m| pts[m].joints[0][axis]).fold(f64::NEG_INFINITY, f64::max);
            let v = pts[rep].joints[0][axis];
            assert!(lo <= v && v <= hi);
        }
    }
}

#[test]
fn clustering_is_deterministic() {
    let mut r = rng(9);
    let pts = clumpy_frames(&mut r, 120, 4);
    let params = ClusterParams {
        min_cluster_size: 8,
        ..ClusterParams::default()
    };
    let a = cluster_poses(&pts, &params).unwrap();
    let b = cluster_poses(&pts, &params).unwrap();
    assert_eq!(a, b);
    for c in 0..a.n_clusters() {
        assert!(a.members(c).len() >= 8);
    }
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.strengths), bits(&b.strengths));
}
