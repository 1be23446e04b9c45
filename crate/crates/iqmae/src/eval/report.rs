//! Whole-split evaluation and the report artifacts.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::{kappa, overall_accuracy, ConfusionMatrix};
use crate::model::{frame_to_scalar, patchify, ClsModel};
use crate::nn::Scalar;
use crate::siggen::Dataset;
use crate::train::argmax;
use crate::{Error, Result};

pub const REPORT_FILE: &str = "report.json";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const PER_SNR_FILE: &str = "per_snr.csv";

/// Accuracy over one SNR cell. `snr_db` is the stored i16 dB value;
/// 32767 marks noise-free frames.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SnrPoint {
    pub snr_db: i16,
    pub oa: f64,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Micro accuracy: correct / total over the whole split.
    pub oa: f64,
    /// Unweighted mean of the per-SNR accuracies.
    pub oa_macro: f64,
    pub kappa: f64,
    pub per_snr: Vec<SnrPoint>,
    pub matrix: ConfusionMatrix,
    pub matrix_row_normalized: Vec<Vec<f64>>,
    pub classes: Vec<String>,
    /// SHA-256 over the model config JSON, tying the report to the
    /// exact architecture that produced it.
    pub config_digest: String,
}

/// Runs the classifier over the given frames (all patches visible, no
/// masking) and aggregates accuracy, kappa, and the per-SNR curve.
pub fn evaluate<F: Scalar>(
    model: &ClsModel<F>,
    ds: &Dataset,
    indices: &[usize],
) -> Result<MetricsReport> {
    if model.cfg.num_classes != ds.manifest.schemes.len() {
        return Err(Error::config(format!(
            "classifier has {} classes, dataset has {} schemes",
            model.cfg.num_classes,
            ds.manifest.schemes.len()
        )));
    }
    if model.cfg.frame_length != ds.manifest.frame_length {
        return Err(Error::config(format!(
            "model expects {}-sample frames, dataset has {}",
            model.cfg.frame_length, ds.manifest.frame_length
        )));
    }
    if indices.is_empty() {
        return Err(Error::config("nothing to evaluate: empty index set"));
    }

    let mut matrix = ConfusionMatrix::new(model.cfg.num_classes);
    // snr -> (correct, total), ascending; the noise-free sentinel sorts last.
    let mut by_snr: std::collections::BTreeMap<i16, (u64, u64)> = std::collections::BTreeMap::new();
    let mut reader = ds.reader()?;
    for &i in indices {
        let patches = patchify(&frame_to_scalar::<F>(&reader.read(i)?), model.cfg.patch_size)?;
        let (logits, _) = model.forward(&patches);
        let pred = argmax(&logits);
        let truth = ds.labels[i] as usize;
        matrix.record(truth, pred)?;
        let cell = by_snr.entry(ds.snrs[i].to_i16()).or_insert((0, 0));
        cell.1 += 1;
        if pred == truth {
            cell.0 += 1;
        }
    }

    let per_snr: Vec<SnrPoint> = by_snr
        .iter()
        .map(|(&snr_db, &(correct, count))| SnrPoint {
            snr_db,
            oa: correct as f64 / count as f64,
            count,
        })
        .collect();
    let oa_macro = per_snr.iter().map(|p| p.oa).sum::<f64>() / per_snr.len() as f64;

    Ok(MetricsReport {
        oa: overall_accuracy(&matrix)?,
        oa_macro,
        kappa: kappa(&matrix)?,
        matrix_row_normalized: matrix.row_normalized(),
        matrix,
        per_snr,
        classes: ds.manifest.schemes.clone(),
        config_digest: config_digest(&serde_json::to_string(&model.cfg)?),
    })
}

fn config_digest(config_json: &str) -> String {
    let mut h = Sha256::new();
    h.update(config_json.as_bytes());
    format!("{:x}", h.finalize())
}

impl MetricsReport {
    /// Accuracy restricted to SNR cells satisfying `keep(snr_db)`;
    /// None when no cell matches.
    pub fn accuracy_where(&self, keep: impl Fn(i16) -> bool) -> Option<f64> {
        let mut correct = 0.0;
        let mut total = 0u64;
        for p in &self.per_snr {
            if keep(p.snr_db) {
                correct += p.oa * p.count as f64;
                total += p.count;
            }
        }
        (total > 0).then(|| correct / total as f64)
    }

    /// Writes `report.json`, `confusion.csv`, and `per_snr.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        serde_json::to_writer_pretty(fs::File::create(dir.join(REPORT_FILE))?, self)?;

        // confusion.csv: first column is the true class, one column
        // per predicted class, class order as in the manifest.
        let mut f = fs::File::create(dir.join(CONFUSION_FILE))?;
        writeln!(f, "true_class,{}", self.classes.join(","))?;
        for (name, row) in self.classes.iter().zip(self.matrix.counts()) {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(f, "{},{}", name, cells.join(","))?;
        }

        let mut f = fs::File::create(dir.join(PER_SNR_FILE))?;
        writeln!(f, "snr_db,oa,count")?;
        for p in &self.per_snr {
            writeln!(f, "{},{},{}", p.snr_db, p.oa, p.count)?;
        }
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(fs::File::open(
            dir.join(REPORT_FILE),
        )?)?)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::ModelConfig;
    use crate::siggen::{generate_dataset, DatasetManifest, SplitTag};

    fn tiny_dataset(dir: &Path) -> Dataset {
        let mut m = DatasetManifest::new(40, 17);
        m.frame_length = 64;
        m.schemes = vec!["BPSK".into(), "QPSK".into()];
        m.snr_grid_db = vec![0.0, 10.0];
        generate_dataset(&m, dir, 1).unwrap();
        Dataset::load(dir).unwrap()
    }

    fn tiny_model(num_classes: usize) -> ClsModel<f32> {
        let cfg = ModelConfig {
            frame_length: 64,
            patch_size: 8,
            enc_dim: 16,
            enc_layers: 1,
            enc_heads: 2,
            dec_dim: 8,
            dec_layers: 1,
            dec_heads: 2,
            mlp_ratio: 2,
            mask_ratio: 0.75,
            num_classes,
        };
        ClsModel::new(&cfg, &mut ChaCha8Rng::seed_from_u64(3))
    }

    #[test]
    fn report_is_internally_consistent() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(dir.path());
        let model = tiny_model(2);
        let idx = ds.select(SplitTag::FtTest, None);
        let report = evaluate(&model, &ds, &idx).unwrap();

        assert_eq!(report.oa, overall_accuracy(&report.matrix).unwrap());
        assert_eq!(report.matrix.total(), idx.len() as u64);
        let snr_total: u64 = report.per_snr.iter().map(|p| p.count).sum();
        assert_eq!(snr_total, idx.len() as u64);
        // Exactly the SNR cells present in the split.
        let snrs: Vec<i16> = report.per_snr.iter().map(|p| p.snr_db).collect();
        assert_eq!(snrs, vec![0, 10]);
    }

    #[test]
    fn untrained_model_scores_near_chance() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(dir.path());
        let model = tiny_model(2);
        // ssl_train: 2 schemes x 2 snrs x 22 = 88 frames, plenty for a
        // 3-sigma binomial bound around p = 1/2.
        let idx = ds.select(SplitTag::SslTrain, None);
        let n = idx.len() as f64;
        let report = evaluate(&model, &ds, &idx).unwrap();
        let sigma = (0.5 * 0.5 / n).sqrt();
        assert!(
            (report.oa - 0.5).abs() <= 3.0 * sigma + 1e-12,
            "oa {} outside chance bounds",
            report.oa
        );
    }

    #[test]
    fn artifacts_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(dir.path());
        let model = tiny_model(2);
        let idx = ds.select(SplitTag::FtVal, None);
        let report = evaluate(&model, &ds, &idx).unwrap();
        report.write(out.path()).unwrap();

        let back = MetricsReport::read(out.path()).unwrap();
        assert_eq!(back.oa, report.oa);
        assert_eq!(back.matrix, report.matrix);

        let confusion = std::fs::read_to_string(out.path().join(CONFUSION_FILE)).unwrap();
        assert!(confusion.starts_with("true_class,BPSK,QPSK\n"));
        assert_eq!(confusion.lines().count(), 3);
        let per_snr = std::fs::read_to_string(out.path().join(PER_SNR_FILE)).unwrap();
        assert!(per_snr.starts_with("snr_db,oa,count\n"));
    }

    #[test]
    fn accuracy_where_slices_by_snr() {
        let report = MetricsReport {
            oa: 0.0,
            oa_macro: 0.0,
            kappa: 0.0,
            per_snr: vec![
                SnrPoint { snr_db: -10, oa: 0.2, count: 50 },
                SnrPoint { snr_db: 10, oa: 0.9, count: 100 },
                SnrPoint { snr_db: 20, oa: 1.0, count: 100 },
            ],
            matrix: ConfusionMatrix::new(2),
            matrix_row_normalized: vec![],
            classes: vec![],
            config_digest: String::new(),
        };
        let high = report.accuracy_where(|s| s >= 10).unwrap();
        assert!((high - 0.95).abs() < 1e-12);
        assert_eq!(report.accuracy_where(|s| s >= 30), None);
    }

    #[test]
    fn class_count_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(dir.path());
        let model = tiny_model(3);
        let idx = ds.select(SplitTag::FtTest, None);
        assert!(evaluate(&model, &ds, &idx).is_err());
    }
}
