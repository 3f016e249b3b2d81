//! Scalar abstraction shared by every numerical module.
//!
//! All physics is written against [`Real`] so the same code runs in `f32`
//! and `f64`. Complex amplitudes are `num_complex::Complex<T>`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point scalar used throughout the crate.
pub trait Real: Float + FloatConst + FromPrimitive + Default + Debug + Display + LowerExp + Sum + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

/// Convert an `f64` literal into the working scalar.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Purely real complex number.
#[inline]
pub fn cre<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

/// The imaginary unit.
#[inline]
pub fn ci<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// `e^{i phi}`.
#[inline]
pub fn cis<T: Real>(phi: T) -> Complex<T> {
    Complex::new(phi.cos(), phi.sin())
}

/// Wrap an angle into `[0, 2 pi)`.
pub fn wrap_angle<T: Real>(theta: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut t = theta % two_pi;
    if t < T::zero() {
        t = t + two_pi;
    }
    if t >= two_pi {
        t = T::zero();
    }
    t
}

/// Smallest tolerance that still makes sense for `T` when a test or
/// validation asks for `requested`.
pub fn tol<T: Real>(requested: f64) -> T {
    let floor = T::epsilon() * real(64.0);
    let r: T = real(requested);
    if r > floor {
        r
    } else {
        floor
    }
}
