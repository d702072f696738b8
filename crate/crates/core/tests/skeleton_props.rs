mod common;

use common::*;
use hpm_core::skeleton::{center_at_root, parse_skeleton_table, skeletal_distance, DistanceVariant, SkeletonFrame};
use proptest::prelude::*;

fn frame_strategy(joints: usize) -> impl Strategy<Value = SkeletonFrame> {
    prop::collection::vec(prop::array::uniform3(-50.0f64..50.0), joints).prop_map(|j| SkeletonFrame::new(0, j))
}

fn triple() -> impl Strategy<Value = (SkeletonFrame, SkeletonFrame, SkeletonFrame)> {
    (1usize..8).prop_flat_map(|l| (frame_strategy(l), frame_strategy(l), frame_strategy(l)))
}

const SJ: DistanceVariant = DistanceVariant::SameJoint;

fn literal_pairs_oracle(a: &SkeletonFrame, b: &SkeletonFrame) -> f64 {
    let l = a.joints.len();
    let mut best = 0.0f64;
    for i in 0..l {
        for j in i..l {
            let s: f64 = (0..3).map(|d| (a.joints[i][d] - b.joints[j][d]).abs()).sum();
            best = best.max(s);
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn same_joint_is_a_metric((a, b, c) in triple()) {
        let ab = skeletal_distance(&a, &b, SJ).unwrap();
        prop_assert_eq!(ab, skeletal_distance(&b, &a, SJ).unwrap());
        prop_assert_eq!(skeletal_distance(&a, &a, SJ).unwrap(), 0.0);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab == 0.0, a.joints == b.joints);
        let ac = skeletal_distance(&a, &c, SJ).unwrap();
        let cb = skeletal_distance(&c, &b, SJ).unwrap();
        prop_assert!(ab <= ac + cb + 1e-9 * (ac + cb).max(1.0));
        prop_assert_eq!(ab, same_joint_oracle(&a, &b));
    }

    #[test]
    fn same_joint_ignores_joint_order((a, b, _) in triple(), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..a.joints.len()).collect();
        let mut r = rng(seed);
        use rand::seq::SliceRandom;
        order.shuffle(&mut r);
        let pa = SkeletonFrame::new(0, order.iter().map(|&i| a.joints[i]).collect());
        let pb = SkeletonFrame::new(0, order.iter().map(|&i| b.joints[i]).collect());
        prop_assert_eq!(skeletal_distance(&a, &b, SJ).unwrap(), skeletal_distance(&pa, &pb, SJ).unwrap());
    }

    #[test]
    fn literal_matches_pair_enumeration((a, b, _) in (1usize..=3).prop_flat_map(|l| (frame_strategy(l), frame_strategy(l), Just(())))) {
        prop_assert_eq!(skeletal_distance(&a, &b, DistanceVariant::Literal).unwrap(), literal_pairs_oracle(&a, &b));
    }

    #[test]
    fn centering_cancels_common_translation(a in frame_strategy(4), t in prop::array::uniform3(-1e3f64..1e3)) {
        let moved = SkeletonFrame::new(0, a.joints.iter().map(|j| [j[0] + t[0], j[1] + t[1], j[2] + t[2]]).collect());
        let ca = center_at_root(&a).unwrap();
        let cm = center_at_root(&moved).unwrap();
        prop_assert_eq!(ca.joints[0], [0.0; 3]);
        let d = skeletal_distance(&ca, &cm, SJ).unwrap();
        prop_assert!(d <= 1e-9 * 3e3, "{}", d);
        prop_assert_eq!(center_at_root(&ca).unwrap(), ca);
    }
}

#[test]
fn literal_hand_cases() {
    let f = |j: Vec<[f64; 3]>| SkeletonFrame::new(0, j);
    let a = f(vec![[0.0; 3], [1.0, 0.0, 0.0]]);
    let b = f(vec![[0.0; 3], [0.0, 2.0, 0.0]]);
    assert_eq!(skeletal_distance(&a, &b, DistanceVariant::Literal).unwrap(), 3.0);
    assert_eq!(skeletal_distance(&a, &b, SJ).unwrap(), 3.0);
    // identical skeletons can be far apart under the printed pairing
    let c = f(vec![[0.0; 3], [1.0, 1.0, 1.0], [2.0, 0.0, 0.0]]);
    assert_eq!(skeletal_distance(&c, &c, DistanceVariant::Literal).unwrap(), 3.0);
    assert_eq!(skeletal_distance(&c, &c, SJ).unwrap(), 0.0);
}

#[test]
fn exponent_and_decimal_text_agree() {
    let dec = "frame_id,joint_id,x,y,z\n0,0,0.00125,-1500.5,3\n0,1,1,2,0.1\n";
    let exp = "frame_id,joint_id,x,y,z\n0,0,1.25e-3,-1.5005E3,3e0\n0,1,1e0,2,1e-1\n";
    let a = parse_skeleton_table(dec.as_bytes(), "d").unwrap();
    let b = parse_skeleton_table(exp.as_bytes(), "e").unwrap();
    assert_eq!(a.frames, b.frames);
    assert_eq!(a.frames[0].joints[0], ["0.00125".parse::<f64>().unwrap(), -1500.5, 3.0]);
}
