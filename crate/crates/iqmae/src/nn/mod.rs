//! Minimal numerical substrate for the transformer model.
//!
//! Dense row-major matrices (`ndarray`), the specific layer
//! forward/backward rules the model needs, and the AdamW update. Nothing
//! here is a general autodiff engine: each layer hand-derives its
//! backward pass against a cache recorded during the forward pass, and
//! the model composes them in reverse order.
//!
//! All operations are generic over [`Scalar`], so tests can run the exact
//! same code in `f64` (finite-difference headroom) while training runs in
//! `f32`.

pub mod attention;
pub mod export;
pub mod fd;
pub mod init;
pub mod layernorm;
pub mod linear;
pub mod mlp;
pub mod ops;
pub mod optim;

pub use attention::{Attention, AttentionCache};
pub use layernorm::{LayerNorm, LayerNormCache};
pub use linear::Linear;
pub use mlp::Mlp;
pub use optim::{AdamW, AdamWConfig};

use ndarray::{Array1, Array2, NdFloat};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

/// Row-major dense matrix.
pub type Mat<F> = Array2<F>;
/// Dense vector (used for biases, gains, tokens).
pub type Vect<F> = Array1<F>;

/// Floating-point element type usable by every layer.
///
/// `f32` and `f64` implement this; nothing else needs to.
pub trait Scalar: NdFloat {
    /// Gauss error function, used by the exact (CDF-form) GELU.
    fn erf(self) -> Self;
    /// One standard-normal draw.
    fn std_normal<R: Rng>(rng: &mut R) -> Self;
    /// One uniform draw from `[lo, hi)`.
    fn uniform<R: Rng>(rng: &mut R, lo: Self, hi: Self) -> Self;
}

impl Scalar for f64 {
    fn erf(self) -> Self {
        libm::erf(self)
    }
    fn std_normal<R: Rng>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    fn uniform<R: Rng>(rng: &mut R, lo: Self, hi: Self) -> Self {
        Uniform::new(lo, hi).sample(rng)
    }
}

impl Scalar for f32 {
    fn erf(self) -> Self {
        libm::erf(self as f64) as f32
    }
    fn std_normal<R: Rng>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    fn uniform<R: Rng>(rng: &mut R, lo: Self, hi: Self) -> Self {
        Uniform::new(lo, hi).sample(rng)
    }
}

/// Shorthand for lossless-enough constant conversion into `F`.
#[inline]
pub(crate) fn c<F: Scalar>(v: f64) -> F {
    F::from(v).expect("constant representable in scalar type")
}

/// Named view of one parameter tensor, in canonical enumeration order.
///
/// Every parameter-bearing struct exposes its tensors through
/// `param_refs` / `param_muts` pairs; the optimizer, the canonical export
/// format, and the finite-difference checks all walk the same
/// enumeration.
pub struct ParamRef<'a, F> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [F],
}

pub struct ParamMut<'a, F> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a mut [F],
}

pub(crate) fn mat_ref<'a, F: Scalar>(name: impl Into<String>, m: &'a Mat<F>) -> ParamRef<'a, F> {
    ParamRef {
        name: name.into(),
        shape: m.shape().to_vec(),
        data: m.as_slice().expect("standard layout"),
    }
}

pub(crate) fn vec_ref<'a, F: Scalar>(name: impl Into<String>, v: &'a Vect<F>) -> ParamRef<'a, F> {
    ParamRef {
        name: name.into(),
        shape: vec![v.len()],
        data: v.as_slice().expect("standard layout"),
    }
}

pub(crate) fn mat_mut<'a, F: Scalar>(
    name: impl Into<String>,
    m: &'a mut Mat<F>,
) -> ParamMut<'a, F> {
    ParamMut {
        name: name.into(),
        shape: m.shape().to_vec(),
        data: m.as_slice_mut().expect("standard layout"),
    }
}

pub(crate) fn vec_mut<'a, F: Scalar>(
    name: impl Into<String>,
    v: &'a mut Vect<F>,
) -> ParamMut<'a, F> {
    ParamMut {
        name: name.into(),
        shape: vec![v.len()],
        data: v.as_slice_mut().expect("standard layout"),
    }
}

/// Returns an error naming `what` if any element is NaN or infinite.
pub fn check_finite<F: Scalar>(what: &str, m: &Mat<F>) -> crate::Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::Numerical {
            step: 0,
            what: format!("non-finite value in {what}"),
        })
    }
}
