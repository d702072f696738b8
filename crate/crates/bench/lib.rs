//! Input generators shared by the benchmarks.

use hpm_core::featstore::FeatureSequence;
use hpm_core::skeleton::SkeletonFrame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn frames(n: usize, joints: usize, seed: u64) -> Vec<SkeletonFrame> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<[f64; 3]>> = (0..8)
        .map(|_| (0..joints).map(|_| [r.gen_range(-10.0..10.0), r.gen_range(-10.0..10.0), r.gen_range(-10.0..10.0)]).collect())
        .collect();
    (0..n)
        .map(|i| {
            let c = &centers[i % centers.len()];
            let joints = c.iter().map(|j| [j[0] + r.gen_range(-1.0..1.0), j[1] + r.gen_range(-1.0..1.0), j[2] + r.gen_range(-1.0..1.0)]).collect();
            SkeletonFrame::new(i as u64, joints)
        })
        .collect()
}

pub fn sequence(frames: usize, dim: usize, seed: u64) -> FeatureSequence {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..frames * dim).map(|_| r.gen_range(-1.0f32..1.0)).collect();
    FeatureSequence::new("bench", frames, dim, data).expect("finite")
}

pub fn rows(n: usize, dim: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dim).map(|_| r.gen_range(-1.0f32..1.0)).collect()).collect()
}

pub fn labelled(n: usize, dim: usize, classes: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let x = (0..n)
        .map(|i| (0..dim).map(|j| if j % classes == i % classes { 2.0 } else { 0.0 } + r.gen_range(-1.0..1.0)).collect())
        .collect();
    (x, (0..n).map(|i| i % classes).collect())
}
