use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::sync::Arc;

use num_traits::{Float, FromPrimitive};

/// Floating-point type the numeric core is generic over.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Lossy literal conversion; every constant used by the core is representable.
#[inline]
pub fn lit<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("constant not representable")
}

#[inline]
pub fn from_usize<S: Scalar>(k: usize) -> S {
    S::from_usize(k).expect("index not representable")
}

#[inline]
pub fn to_f64<S: Scalar>(x: S) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Absolute tolerance for equality tests. 1e-12, widened to a few ulps for f32.
pub fn default_tol<S: Scalar>() -> S {
    lit::<S>(1e-12).max(S::epsilon() * lit(4.0))
}

/// Bisection width target on [0,1]-scaled domains.
pub fn bisection_tol<S: Scalar>() -> S {
    lit::<S>(1e-12).max(S::epsilon())
}

pub const MAX_BISECTION_ITERS: usize = 200;

pub type RealFn<S> = Arc<dyn Fn(S) -> S + Send + Sync>;
pub type PointFn<S> = Arc<dyn Fn(&[S]) -> S + Send + Sync>;
pub type MapFn<S> = Arc<dyn Fn(&[S]) -> Vec<S> + Send + Sync>;

/// Nonnegative-or-infinite value. `Infinite` survives scaling and compares above everything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ext<S> {
    Finite(S),
    Infinite,
}

impl<S: Scalar> Ext<S> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Ext::Infinite)
    }

    pub fn finite(&self) -> Option<S> {
        match *self {
            Ext::Finite(v) => Some(v),
            Ext::Infinite => None,
        }
    }

    /// λ·v. A positive factor keeps +∞ infinite.
    pub fn scale(self, lambda: S) -> Self {
        match self {
            Ext::Finite(v) => Ext::Finite(v * lambda),
            Ext::Infinite if lambda > S::zero() => Ext::Infinite,
            Ext::Infinite => Ext::Finite(S::zero()),
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Maps an IEEE infinity onto the marker.
    pub fn from_float(v: S) -> Self {
        if v.is_infinite() && v > S::zero() {
            Ext::Infinite
        } else {
            Ext::Finite(v)
        }
    }

    pub fn to_float(self) -> S {
        match self {
            Ext::Finite(v) => v,
            Ext::Infinite => S::infinity(),
        }
    }
}

impl<S: Scalar> PartialOrd for Ext<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Ext::Infinite, Ext::Infinite) => Some(Ordering::Equal),
            (Ext::Infinite, _) => Some(Ordering::Greater),
            (_, Ext::Infinite) => Some(Ordering::Less),
            (Ext::Finite(a), Ext::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl<S: Scalar> Display for Ext<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ext::Finite(v) => Display::fmt(v, f),
            Ext::Infinite => write!(f, "+inf"),
        }
    }
}

/// Bisection for an increasing `f` on `[lo, hi]` with `f(lo) <= y <= f(hi)`.
/// Stops when the bracket no longer shrinks or after the iteration cap.
pub(crate) fn bisect_increasing<S: Scalar>(f: impl Fn(S) -> S, y: S, mut lo: S, mut hi: S, width: S) -> S {
    let two = lit::<S>(2.0);
    for _ in 0..MAX_BISECTION_ITERS {
        if hi - lo <= width {
            break;
        }
        let mid = lo + (hi - lo) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + (hi - lo) / two
}

/// Deterministic grid of `n >= 2` points on `[a, b]`.
pub fn linspace<S: Scalar>(a: S, b: S, n: usize) -> Vec<S> {
    if n <= 1 {
        return vec![a];
    }
    let last = from_usize::<S>(n - 1);
    (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * from_usize::<S>(i) / last }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ext_ordering_and_scaling() {
        let inf = Ext::<f64>::Infinite;
        assert!(inf > Ext::Finite(1e300));
        assert!(inf.scale(0.5).is_infinite());
        assert_eq!(Ext::Finite(2.0).scale(0.5), Ext::Finite(1.0));
        assert_eq!(Ext::from_float(f64::INFINITY), inf);
    }

    #[test]
    fn bisection_finds_cube_root() {
        let x = bisect_increasing(|x: f64| x * x * x, 0.125, 0.0, 1.0, 1e-14);
        assert!((x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn f32_tolerance_is_widened() {
        assert!(default_tol::<f32>() > 1e-12);
        assert_eq!(default_tol::<f64>(), 1e-12);
    }

    #[test]
    fn linspace_hits_endpoints() {
        let g = linspace(0.0_f64, 1.0, 5);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
