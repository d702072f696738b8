use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClusterParams, PoseDictError};
use crate::skeleton::{center_at_root, SkeletonFrame, SkeletonSequence};

/// Draws `amount` distinct indices from `0..total` by a partial Fisher–Yates
/// shuffle driven by `ChaCha8Rng::seed_from_u64(seed)`: step `i` swaps slot
/// `i` with slot `rng.gen_range(i..total)` (sampled as `u64`). The swap array
/// is kept sparse so large `total` costs O(amount) memory.
pub fn sample_indices(total: usize, amount: usize, seed: u64) -> Vec<usize> {
    let amount = amount.min(total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut swapped: HashMap<usize, usize> = HashMap::with_capacity(amount * 2);
    let mut out = Vec::with_capacity(amount);
    for i in 0..amount {
        let j = rng.gen_range(i as u64..total as u64) as usize;
        let at_i = *swapped.get(&i).unwrap_or(&i);
        let at_j = *swapped.get(&j).unwrap_or(&j);
        swapped.insert(j, at_i);
        out.push(at_j);
    }
    out
}

/// Samples frames without replacement across all sequences (concatenated in
/// order) and root-centers each one.
pub fn subsample_frames(
    sequences: &[SkeletonSequence],
    params: &ClusterParams,
) -> Result<Vec<SkeletonFrame>, PoseDictError> {
    let all: Vec<&SkeletonFrame> = sequences.iter().flat_map(|s| s.frames.iter()).collect();
    if all.is_empty() {
        return Err(PoseDictError::EmptyInput);
    }
    if params.sample_count > all.len() {
        log::warn!(
            "requested {} samples but only {} frames are available; using all frames",
            params.sample_count,
            all.len()
        );
    }
    sample_indices(all.len(), params.sample_count, params.rng_seed)
        .into_iter()
        .map(|i| center_at_root(all[i]).map_err(PoseDictError::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Dense reference for the sampler contract above.
    fn reference_draw(total: usize, amount: usize, seed: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut slots: Vec<usize> = (0..total).collect();
        for i in 0..amount.min(total) {
            let j = rng.gen_range(i as u64..total as u64) as usize;
            slots.swap(i, j);
        }
        slots.truncate(amount.min(total));
        slots
    }

    fn seqs(frames: usize) -> Vec<SkeletonSequence> {
        vec![SkeletonSequence {
            frames: (0..frames)
                .map(|i| SkeletonFrame::new(i as u64, vec![[i as f64, 1.0, 2.0], [i as f64 + 1.0, 0.0, 0.0]]))
                .collect(),
            source_id: "s".into(),
        }]
    }

    #[test]
    fn matches_dense_reference() {
        assert_eq!(sample_indices(100, 3, 42), reference_draw(100, 3, 42));
        for seed in 0..20 {
            assert_eq!(sample_indices(57, 23, seed), reference_draw(57, 23, seed));
        }
    }

    #[test]
    fn exhaustive_sample_is_a_permutation() {
        let mut idx = sample_indices(10, 10, 5);
        assert_eq!(idx, reference_draw(10, 10, 5));
        idx.sort_unstable();
        assert_eq!(idx, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn subsample_is_deterministic_and_centered() {
        let params = ClusterParams {
            sample_count: 7,
            rng_seed: 11,
            ..ClusterParams::default()
        };
        let a = subsample_frames(&seqs(30), &params).unwrap();
        let b = subsample_frames(&seqs(30), &params).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 7);
        assert!(a.iter().all(|f| f.joints[0] == [0.0, 0.0, 0.0]));
        assert!(a.iter().all(|f| f.joints[1] == [1.0, -1.0, -2.0]));
    }

    #[test]
    fn clamps_and_rejects_empty() {
        let params = ClusterParams {
            sample_count: 50,
            ..ClusterParams::default()
        };
        assert_eq!(subsample_frames(&seqs(10), &params).unwrap().len(), 10);
        assert_eq!(subsample_frames(&[], &params), Err(PoseDictError::EmptyInput));
    }
}
