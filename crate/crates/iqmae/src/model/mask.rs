//! Random patch masking and the restore permutation.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::{Error, Result};

/// Which patches the encoder sees and how the full sequence is
/// reassembled afterwards.
///
/// The encoder consumes `kept` (ascending). The decoder input is built
/// from the concatenation `[kept rows, masked fills]`; `ids_restore[i]`
/// is the row of that concatenation belonging at original position `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskPlan {
    kept: Vec<usize>,
    masked: Vec<usize>,
    ids_restore: Vec<usize>,
}

impl MaskPlan {
    /// Uniformly random plan with `|M| = round(ρ·n)` (half-up).
    pub fn sample<R: Rng>(n: usize, ratio: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..1.0).contains(&ratio) {
            return Err(Error::config(format!("mask ratio {ratio} outside [0, 1)")));
        }
        let num_masked = ((ratio * n as f64 + 0.5).floor() as usize).min(n);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let masked: Vec<usize> = order[..num_masked].to_vec();
        Self::from_masked_set(n, &masked)
    }

    /// Plan with an explicit masked set (any subset of 0..n).
    pub fn from_masked_set(n: usize, masked: &[usize]) -> Result<Self> {
        let mut is_masked = vec![false; n];
        for &i in masked {
            if i >= n {
                return Err(Error::config(format!("masked index {i} out of range 0..{n}")));
            }
            if is_masked[i] {
                return Err(Error::config(format!("masked index {i} repeated")));
            }
            is_masked[i] = true;
        }
        let kept: Vec<usize> = (0..n).filter(|&i| !is_masked[i]).collect();
        let masked: Vec<usize> = (0..n).filter(|&i| is_masked[i]).collect();

        let mut ids_restore = vec![0usize; n];
        for (rank, &i) in kept.iter().enumerate() {
            ids_restore[i] = rank;
        }
        for (rank, &i) in masked.iter().enumerate() {
            ids_restore[i] = kept.len() + rank;
        }
        Ok(Self {
            kept,
            masked,
            ids_restore,
        })
    }

    /// No masking: every patch kept, restore is the identity.
    pub fn identity(n: usize) -> Self {
        Self::from_masked_set(n, &[]).expect("empty mask set is valid")
    }

    pub fn num_patches(&self) -> usize {
        self.ids_restore.len()
    }

    /// Kept indices, ascending.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    /// Masked indices, ascending.
    pub fn masked(&self) -> &[usize] {
        &self.masked
    }

    pub fn ids_restore(&self) -> &[usize] {
        &self.ids_restore
    }

    pub fn is_masked(&self, i: usize) -> bool {
        self.ids_restore[i] >= self.kept.len()
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn default_ratio_masks_96_of_128() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let plan = MaskPlan::sample(128, 0.75, &mut rng).unwrap();
        assert_eq!(plan.masked().len(), 96);
        assert_eq!(plan.kept().len(), 32);
    }

    #[test]
    fn zero_ratio_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let plan = MaskPlan::sample(6, 0.0, &mut rng).unwrap();
        assert!(plan.masked().is_empty());
        assert_eq!(plan.ids_restore(), &[0, 1, 2, 3, 4, 5]);
        assert_eq!(plan, MaskPlan::identity(6));
    }

    #[test]
    fn same_seed_reproduces_plan() {
        let a = MaskPlan::sample(128, 0.75, &mut ChaCha8Rng::seed_from_u64(33)).unwrap();
        let b = MaskPlan::sample(128, 0.75, &mut ChaCha8Rng::seed_from_u64(33)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kept_and_masked_partition_in_ascending_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let plan = MaskPlan::sample(40, 0.6, &mut rng).unwrap();
        assert!(plan.kept().windows(2).all(|w| w[0] < w[1]));
        assert!(plan.masked().windows(2).all(|w| w[0] < w[1]));
        let mut union: Vec<usize> = plan.kept().iter().chain(plan.masked()).copied().collect();
        union.sort_unstable();
        assert_eq!(union, (0..40).collect::<Vec<_>>());
    }

    #[test]
    fn restore_inverts_the_shuffle_for_all_small_subsets() {
        // Exhaustive over every subset of 0..n for n ≤ 5 (unit-scale
        // slice of the acceptance property).
        for n in 1..=5usize {
            for bits in 0..(1u32 << n) {
                let masked: Vec<usize> = (0..n).filter(|i| bits & (1 << i) != 0).collect();
                let plan = MaskPlan::from_masked_set(n, &masked).unwrap();
                // Simulate gather → concat → restore on token ids.
                let concat: Vec<i64> = plan
                    .kept()
                    .iter()
                    .map(|&i| i as i64)
                    .chain(plan.masked().iter().map(|_| -1))
                    .collect();
                for i in 0..n {
                    let got = concat[plan.ids_restore()[i]];
                    if plan.is_masked(i) {
                        assert_eq!(got, -1, "n={n} bits={bits:b} i={i}");
                    } else {
                        assert_eq!(got, i as i64, "n={n} bits={bits:b} i={i}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_invalid_sets() {
        assert!(MaskPlan::from_masked_set(4, &[4]).is_err());
        assert!(MaskPlan::from_masked_set(4, &[1, 1]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(MaskPlan::sample(4, 1.0, &mut rng).is_err());
    }
}
