//! Scalar abstractions.
//!
//! Measures, pushforwards and transfer actions only need a signed ordered
//! field, so they are generic over [`Scalar`] and run on `f32`, `f64` or exact
//! rationals. Spectral and KMS computations need `exp`/`ln` and iterative
//! solvers, so they require [`Real`].

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Signed ordered field used for measure weights.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// True when arithmetic is exact and tolerances are ignored.
    const EXACT: bool;

    /// Equality up to `tol` for floats, exact equality otherwise.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;

    fn from_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits scalar")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn approx_eq(&self, other: &Self, tol: f64) -> bool {
                ((*self - *other).abs() as f64) <= tol
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for Ratio<i64> {
    const EXACT: bool = true;

    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

impl Scalar for Ratio<i128> {
    const EXACT: bool = true;

    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

/// Floating point scalar with transcendental functions.
pub trait Real: Scalar + Float + Copy {
    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 literal fits")
    }

    /// Smallest tolerance the type can honour, `tol` clamped from below.
    fn effective_tol(tol: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        Self::lit(tol).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}
