//! Confusion counting, overall accuracy, and Cohen's kappa.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Square class-confusion table: rows are true classes, columns are
/// predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; num_classes]; num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, truth: usize, pred: usize) -> Result<()> {
        let c = self.num_classes();
        if truth >= c || pred >= c {
            return Err(Error::config(format!(
                "class pair ({truth}, {pred}) out of range for {c} classes"
            )));
        }
        self.counts[truth][pred] += 1;
        Ok(())
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..self.num_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let c = self.num_classes();
        (0..c).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    /// Each row rescaled to sum to 1; all-zero rows stay zero.
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let s: u64 = row.iter().sum();
                row.iter()
                    .map(|&v| if s == 0 { 0.0 } else { v as f64 / s as f64 })
                    .collect()
            })
            .collect()
    }
}

/// Fraction of evaluated frames on the diagonal.
pub fn overall_accuracy(m: &ConfusionMatrix) -> Result<f64> {
    let total = m.total();
    if total == 0 {
        return Err(Error::config("empty confusion matrix"));
    }
    Ok(m.diagonal() as f64 / total as f64)
}

/// Cohen's kappa: agreement beyond what the row/column marginals
/// explain. A matrix whose mass sits in a single cell has chance
/// agreement 1; that degenerate case returns 0 by convention.
pub fn kappa(m: &ConfusionMatrix) -> Result<f64> {
    let total = m.total();
    if total == 0 {
        return Err(Error::config("empty confusion matrix"));
    }
    let t = total as f64;
    let p_o = m.diagonal() as f64 / t;
    let p_e: f64 = m
        .row_sums()
        .iter()
        .zip(m.col_sums())
        .map(|(&r, c)| (r as f64 / t) * (c as f64 / t))
        .sum();
    if p_e >= 1.0 {
        return Ok(0.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn from_counts(counts: Vec<Vec<u64>>) -> ConfusionMatrix {
        let mut m = ConfusionMatrix::new(counts.len());
        for (i, row) in counts.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                for _ in 0..v {
                    m.record(i, j).unwrap();
                }
            }
        }
        m
    }

    #[test]
    fn diagonal_matrix_is_perfect() {
        let m = from_counts(vec![vec![5, 0], vec![0, 7]]);
        assert_eq!(overall_accuracy(&m).unwrap(), 1.0);
        assert_eq!(kappa(&m).unwrap(), 1.0);
    }

    #[test]
    fn three_quarters_correct() {
        let m = from_counts(vec![vec![3, 1], vec![1, 3]]);
        assert_eq!(overall_accuracy(&m).unwrap(), 0.75);
    }

    #[test]
    fn chance_level_agreement_scores_zero_kappa() {
        let m = from_counts(vec![vec![25, 25], vec![25, 25]]);
        assert_eq!(kappa(&m).unwrap(), 0.0);
    }

    #[test]
    fn single_cell_degenerate_kappa_is_zero() {
        let m = from_counts(vec![vec![40, 0], vec![0, 0]]);
        assert_eq!(kappa(&m).unwrap(), 0.0);
    }

    #[test]
    fn random_matrices_match_the_marginal_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let c = rng.gen_range(2..6);
            let counts: Vec<Vec<u64>> = (0..c)
                .map(|_| (0..c).map(|_| rng.gen_range(0..20)).collect())
                .collect();
            let m = from_counts(counts.clone());
            if m.total() == 0 {
                continue;
            }
            // Independent recomputation straight from the definition.
            let t: u64 = counts.iter().flatten().sum();
            let p_o: f64 =
                (0..c).map(|i| counts[i][i]).sum::<u64>() as f64 / t as f64;
            let p_e: f64 = (0..c)
                .map(|i| {
                    let row: u64 = counts[i].iter().sum();
                    let col: u64 = (0..c).map(|k| counts[k][i]).sum();
                    (row as f64 * col as f64) / (t as f64 * t as f64)
                })
                .sum();
            let expect = if p_e >= 1.0 {
                0.0
            } else {
                (p_o - p_e) / (1.0 - p_e)
            };
            assert!((kappa(&m).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn oa_matches_per_sample_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut m = ConfusionMatrix::new(5);
        let mut correct = 0u64;
        let mut total = 0u64;
        for _ in 0..500 {
            let truth = rng.gen_range(0..5);
            let pred = rng.gen_range(0..5);
            m.record(truth, pred).unwrap();
            total += 1;
            if truth == pred {
                correct += 1;
            }
        }
        assert_eq!(overall_accuracy(&m).unwrap(), correct as f64 / total as f64);
    }

    #[test]
    fn kappa_and_excess_accuracy_share_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let counts: Vec<Vec<u64>> = (0..3)
                .map(|_| (0..3).map(|_| rng.gen_range(0..15)).collect())
                .collect();
            let m = from_counts(counts);
            if m.total() == 0 {
                continue;
            }
            let t = m.total() as f64;
            let p_o = m.diagonal() as f64 / t;
            // Same expression as the implementation so the comparison
            // is exact even when p_o - p_e sits at rounding scale.
            let p_e: f64 = m
                .row_sums()
                .iter()
                .zip(m.col_sums())
                .map(|(&r, c)| (r as f64 / t) * (c as f64 / t))
                .sum();
            if p_e >= 1.0 {
                continue;
            }
            let k = kappa(&m).unwrap();
            assert_eq!(k > 0.0, p_o - p_e > 0.0);
            assert_eq!(k < 0.0, p_o - p_e < 0.0);
        }
    }

    #[test]
    fn consistent_class_permutation_preserves_metrics() {
        let counts = vec![vec![8, 2, 1], vec![3, 9, 0], vec![1, 1, 12]];
        let m = from_counts(counts.clone());
        let perm = [2usize, 0, 1];
        let permuted: Vec<Vec<u64>> = (0..3)
            .map(|i| (0..3).map(|j| counts[perm[i]][perm[j]]).collect())
            .collect();
        let mp = from_counts(permuted);
        assert_eq!(overall_accuracy(&m).unwrap(), overall_accuracy(&mp).unwrap());
        assert!((kappa(&m).unwrap() - kappa(&mp).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_class_is_rejected() {
        let mut m = ConfusionMatrix::new(2);
        assert!(m.record(0, 2).is_err());
        assert!(m.record(2, 0).is_err());
    }

    #[test]
    fn empty_matrix_is_an_error() {
        let m = ConfusionMatrix::new(3);
        assert!(overall_accuracy(&m).is_err());
        assert!(kappa(&m).is_err());
    }
}
