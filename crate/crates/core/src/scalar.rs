use std::cmp::Ordering;
use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the potential machinery is evaluated in: f32 or f64.
pub trait Real: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts a constant, panicking only if the target type cannot hold it.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable")
    }

    fn of_int(x: u64) -> Self {
        Self::from_u64(x).expect("integer representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite value")
    }

    /// Relative tolerance appropriate for comparisons after a few hundred
    /// accumulated operations.
    fn loose_tolerance() -> Self;
}

impl Real for f32 {
    fn loose_tolerance() -> Self {
        1e-4
    }
}

impl Real for f64 {
    fn loose_tolerance() -> Self {
        1e-9
    }
}

/// Total order on non-NaN reals.
pub(crate) fn cmp_real<R: Real>(a: R, b: R) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// `a <= b` up to a relative tolerance scaled by the larger magnitude.
pub fn approx_le<R: Real>(a: R, b: R, rel: R) -> bool {
    let scale = a.abs().max(b.abs()).max(R::one());
    a <= b + rel * scale
}

pub fn approx_eq<R: Real>(a: R, b: R, rel: R) -> bool {
    let scale = a.abs().max(b.abs()).max(R::one());
    (a - b).abs() <= rel * scale
}
