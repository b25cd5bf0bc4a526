//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating point scalar the solvers are generic over: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Converts a count into the scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Default relative tolerance for linear solves at this precision.
    fn linear_tolerance() -> Self {
        Self::lit(1e-10).max(Self::epsilon() * Self::lit(1e3))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// 2D point or vector.
pub type Vec2<T> = [T; 2];

#[inline]
pub(crate) fn dot<T: Real>(a: Vec2<T>, b: Vec2<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn norm<T: Real>(a: Vec2<T>) -> T {
    a[0].hypot(a[1])
}

#[inline]
pub(crate) fn sub<T: Real>(a: Vec2<T>, b: Vec2<T>) -> Vec2<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn dist<T: Real>(a: Vec2<T>, b: Vec2<T>) -> T {
    norm(sub(a, b))
}

/// Distance from `p` to the segment `[a, b]`.
pub(crate) fn point_segment_distance<T: Real>(p: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> T {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 <= T::zero() {
        return dist(p, a);
    }
    let s = (dot(sub(p, a), ab) / len2).max(T::zero()).min(T::one());
    dist(p, [a[0] + s * ab[0], a[1] + s * ab[1]])
}
