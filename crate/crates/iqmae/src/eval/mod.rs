//! Classification metrics and report artifacts: overall accuracy,
//! Cohen's kappa, confusion matrices, and per-SNR accuracy curves.

pub mod metrics;
pub mod report;

pub use metrics::{kappa, overall_accuracy, ConfusionMatrix};
pub use report::{
    evaluate, MetricsReport, SnrPoint, CONFUSION_FILE, PER_SNR_FILE, REPORT_FILE,
};
