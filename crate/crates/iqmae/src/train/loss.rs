//! Training objectives: masked reconstruction error and cross-entropy.

use crate::model::{softmax_vec, MaskPlan};
use crate::nn::{c, Mat, Scalar, Vect};
use crate::{Error, Result};

/// Mean over masked patches of the squared L2 norm of the residual.
/// The sum ranges over masked rows only and is divided by the mask
/// count, not by the patch dimension.
pub fn masked_mse<F: Scalar>(pred: &Mat<F>, target: &Mat<F>, plan: &MaskPlan) -> Result<F> {
    check_shapes(pred, target, plan)?;
    if plan.masked().is_empty() {
        return Err(Error::config("masked loss over an empty mask set"));
    }
    let mut total = F::zero();
    for &i in plan.masked() {
        let r = &pred.row(i) - &target.row(i);
        total = total + r.iter().fold(F::zero(), |acc, &v| acc + v * v);
    }
    Ok(total / c::<F>(plan.masked().len() as f64))
}

/// `dL/dpred` for [`masked_mse`]: `2(pred - target)/|M|` on masked rows,
/// zero elsewhere.
pub fn masked_mse_backward<F: Scalar>(
    pred: &Mat<F>,
    target: &Mat<F>,
    plan: &MaskPlan,
) -> Result<Mat<F>> {
    check_shapes(pred, target, plan)?;
    if plan.masked().is_empty() {
        return Err(Error::config("masked loss over an empty mask set"));
    }
    let scale = c::<F>(2.0 / plan.masked().len() as f64);
    let mut dpred = Mat::zeros(pred.raw_dim());
    for &i in plan.masked() {
        let r = (&pred.row(i) - &target.row(i)) * scale;
        dpred.row_mut(i).assign(&r);
    }
    Ok(dpred)
}

fn check_shapes<F: Scalar>(pred: &Mat<F>, target: &Mat<F>, plan: &MaskPlan) -> Result<()> {
    if pred.dim() != target.dim() || pred.nrows() != plan.num_patches() {
        return Err(Error::shape(format!(
            "loss shapes disagree: pred {:?}, target {:?}, plan over {} patches",
            pred.dim(),
            target.dim(),
            plan.num_patches()
        )));
    }
    Ok(())
}

const PROB_FLOOR: f64 = 1e-12;

/// One-hot cross-entropy over a probability vector. Probabilities are
/// clamped to 1e-12 before the log so certainty-miss never overflows.
pub fn cross_entropy<F: Scalar>(probs: &Vect<F>, label: usize) -> Result<F> {
    if label >= probs.len() {
        return Err(Error::config(format!(
            "label {label} out of range for {} classes",
            probs.len()
        )));
    }
    let p = probs[label].max(c::<F>(PROB_FLOOR));
    Ok(-p.ln())
}

/// Fused softmax + cross-entropy. Returns the loss and `dL/dlogits`,
/// which the softmax collapses to `probs - onehot(label)`.
pub fn softmax_ce<F: Scalar>(logits: &Vect<F>, label: usize) -> Result<(F, Vect<F>)> {
    let probs = softmax_vec(logits);
    let loss = cross_entropy(&probs, label)?;
    let mut dlogits = probs;
    dlogits[label] = dlogits[label] - F::one();
    Ok((loss, dlogits))
}

/// Batch-mean accuracy helper: index of the largest logit.
pub fn argmax<F: Scalar>(v: &Vect<F>) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}
