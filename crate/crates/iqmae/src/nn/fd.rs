//! Central-difference gradient checking.
//!
//! Every analytic backward pass in this crate is validated against the
//! derivative measured by nudging one scalar at a time. The helpers here
//! are shared by unit tests, the acceptance suite, and the
//! `gradient_check` example; run them in `f64` so truncation and
//! round-off stay far below the comparison tolerance.

use super::{ParamMut, ParamRef, Scalar};

/// Adds `delta` to the `idx`-th scalar of a parameter list, counting
/// across tensors in enumeration order.
pub fn nudge<F: Scalar>(params: &mut [ParamMut<'_, F>], idx: usize, delta: F) {
    let mut k = idx;
    for p in params.iter_mut() {
        if k < p.data.len() {
            p.data[k] = p.data[k] + delta;
            return;
        }
        k -= p.data.len();
    }
    panic!("parameter index {idx} out of range");
}

/// Total scalar count of a parameter list.
pub fn total_len<F: Scalar>(params: &[ParamRef<'_, F>]) -> usize {
    params.iter().map(|p| p.data.len()).sum()
}

/// Concatenates parameter tensors into one flat vector (enumeration order).
pub fn flatten<F: Scalar>(params: &[ParamRef<'_, F>]) -> Vec<F> {
    let mut out = Vec::with_capacity(total_len(params));
    for p in params {
        out.extend_from_slice(p.data);
    }
    out
}

/// Central difference over `n` scalars.
///
/// `eval_at(i, delta)` must evaluate the loss with scalar `i` offset by
/// `delta` and restore the original value before returning.
pub fn central_diff<F: Scalar>(
    n: usize,
    step: F,
    mut eval_at: impl FnMut(usize, F) -> F,
) -> Vec<F> {
    (0..n)
        .map(|i| {
            let up = eval_at(i, step);
            let down = eval_at(i, -step);
            (up - down) / (step + step)
        })
        .collect()
}

/// Largest elementwise relative error between two gradient vectors.
///
/// Differences below `abs_floor` count as zero: tiny true gradients sit
/// at the finite-difference noise floor, where a ratio is meaningless.
pub fn max_rel_err<F: Scalar>(analytic: &[F], numeric: &[F], abs_floor: F) -> F {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    let mut worst = F::zero();
    for (&a, &n) in analytic.iter().zip(numeric) {
        let err = (a - n).abs();
        if err <= abs_floor {
            continue;
        }
        let rel = err / a.abs().max(n.abs());
        if rel > worst {
            worst = rel;
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measures_quadratic_derivative() {
        // f(x) = x^2 at x = 3: derivative 6.
        let mut x = 3.0f64;
        let g = central_diff(1, 1e-5, |_, d| {
            x += d;
            let v = x * x;
            x -= d;
            v
        });
        assert!((g[0] - 6.0).abs() < 1e-8, "got {}", g[0]);
    }

    #[test]
    fn rel_err_ignores_noise_floor() {
        let a = [1.0f64, 1e-12];
        let n = [1.0 + 1e-6, 3e-12];
        let e = max_rel_err(&a, &n, 1e-9);
        assert!(e < 2e-6, "got {e}");
    }
}
