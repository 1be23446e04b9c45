//! Labeled-subset selection for fine-tuning.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::siggen::dataset::round_half_up;
use crate::siggen::{Dataset, SplitTag};
use crate::{Error, Result};

/// Picks `round(fraction * |ssl_train|)` frame indices, stratified first
/// by class and then by SNR cell within each class, so every class and
/// every SNR level keeps its share of the budget. Deterministic under
/// `seed`; returned indices are sorted ascending.
pub fn select_finetune_labels(ds: &Dataset, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::config(format!(
            "label fraction {fraction} outside (0, 1]"
        )));
    }
    let pool = ds.select(SplitTag::SslTrain, None);
    if pool.is_empty() {
        return Err(Error::config("dataset has no ssl_train frames"));
    }
    let target = round_half_up(fraction * pool.len() as f64);

    // class -> snr cell -> indices, in canonical ascending order.
    let mut by_class: BTreeMap<u16, BTreeMap<i16, Vec<usize>>> = BTreeMap::new();
    for &i in &pool {
        by_class
            .entry(ds.labels[i])
            .or_default()
            .entry(ds.snrs[i].to_i16())
            .or_default()
            .push(i);
    }

    let class_sizes: Vec<usize> = by_class.values().map(|m| m.values().map(Vec::len).sum()).collect();
    let class_quotas = largest_remainder(&class_sizes, target);
    for ((label, _), &quota) in by_class.iter().zip(&class_quotas) {
        if quota == 0 {
            return Err(Error::config(format!(
                "label fraction {fraction} leaves class {} with no frames",
                ds.manifest.schemes[*label as usize]
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c61_62656c);
    let mut chosen = Vec::with_capacity(target);
    for ((_, cells), quota) in by_class.iter().zip(class_quotas) {
        let cell_sizes: Vec<usize> = cells.values().map(Vec::len).collect();
        let cell_quotas = largest_remainder(&cell_sizes, quota);
        for ((_, cell), take) in cells.iter().zip(cell_quotas) {
            let mut order = cell.clone();
            order.shuffle(&mut rng);
            chosen.extend_from_slice(&order[..take]);
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Proportional allocation of `target` over groups by the largest
/// remainder method; ties go to the earlier group. Assumes
/// `target <= sum(sizes)`, which keeps every quota within its group.
fn largest_remainder(sizes: &[usize], target: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let mut quotas: Vec<usize> = Vec::with_capacity(sizes.len());
    let mut rems: Vec<(usize, usize)> = Vec::with_capacity(sizes.len());
    for (i, &s) in sizes.iter().enumerate() {
        quotas.push(target * s / total);
        rems.push((i, (target * s) % total));
    }
    let assigned: usize = quotas.iter().sum();
    rems.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    for &(i, _) in rems.iter().take(target - assigned) {
        quotas[i] += 1;
    }
    quotas
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::siggen::{generate_dataset, DatasetManifest};

    fn small_dataset(dir: &std::path::Path) -> Dataset {
        let mut m = DatasetManifest::new(50, 99);
        m.frame_length = 128;
        m.schemes = vec!["BPSK".into(), "QPSK".into()];
        m.snr_grid_db = vec![0.0, 6.0, 12.0];
        generate_dataset(&m, dir, 1).unwrap();
        Dataset::load(dir).unwrap()
    }

    #[test]
    fn allocation_is_proportional_with_remainders_up_front() {
        assert_eq!(largest_remainder(&[10, 10, 10], 6), vec![2, 2, 2]);
        assert_eq!(largest_remainder(&[10, 10, 10], 7), vec![3, 2, 2]);
        assert_eq!(largest_remainder(&[30, 10], 8), vec![6, 2]);
        assert_eq!(largest_remainder(&[5, 5], 10), vec![5, 5]);
    }

    #[test]
    fn full_fraction_returns_the_whole_pool() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small_dataset(dir.path());
        let all = ds.select(SplitTag::SslTrain, None);
        let picked = select_finetune_labels(&ds, 1.0, 1).unwrap();
        assert_eq!(picked, all);
    }

    #[test]
    fn classes_and_cells_share_the_budget_evenly() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small_dataset(dir.path());
        // 2 classes x 3 SNRs x 28 ssl_train frames = 168; 10% -> 17.
        let picked = select_finetune_labels(&ds, 0.1, 7).unwrap();
        assert_eq!(picked.len(), 17);

        let mut per_class = [0usize; 2];
        let mut per_cell: BTreeMap<(u16, i16), usize> = BTreeMap::new();
        for &i in &picked {
            assert_eq!(ds.splits[i], SplitTag::SslTrain);
            per_class[ds.labels[i] as usize] += 1;
            *per_cell.entry((ds.labels[i], ds.snrs[i].to_i16())).or_default() += 1;
        }
        assert!(per_class[0].abs_diff(per_class[1]) <= 1, "{per_class:?}");
        for (_, &n) in &per_cell {
            assert!((2..=3).contains(&n), "cell counts uneven: {per_cell:?}");
        }
    }

    #[test]
    fn selection_is_deterministic_per_seed() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small_dataset(dir.path());
        let a = select_finetune_labels(&ds, 0.25, 3).unwrap();
        let b = select_finetune_labels(&ds, 0.25, 3).unwrap();
        let c = select_finetune_labels(&ds, 0.25, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn starved_class_is_named_in_the_error() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small_dataset(dir.path());
        // target = round(168/168) = 1 frame: one class must end up empty.
        let err = select_finetune_labels(&ds, 1.0 / 168.0, 1).unwrap_err();
        assert!(err.to_string().contains("QPSK"), "{err}");
    }

    #[test]
    fn out_of_range_fractions_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small_dataset(dir.path());
        assert!(select_finetune_labels(&ds, 0.0, 1).is_err());
        assert!(select_finetune_labels(&ds, 1.5, 1).is_err());
    }
}
