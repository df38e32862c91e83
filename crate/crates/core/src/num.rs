//! Scalar abstraction shared by every numerical module.

use nalgebra as na;
use num_traits as nt;

pub use na::Complex;

/// Floating point type the solvers are generic over.
///
/// Implemented for `f32` and `f64`. The tolerances quoted throughout the crate
/// assume `f64`; `f32` is usable for quick looks at small bases.
pub trait Real:
    Copy + nt::FloatConst + nt::FromPrimitive + nt::ToPrimitive + na::RealField + na::Scalar + Send + Sync
{
    /// Machine epsilon of the type.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Converts an `f64` literal into `T`.
#[inline(always)]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in target scalar")
}

/// Converts `T` into `f64` for reporting and serialization.
#[inline(always)]
pub fn to_f64<T: Real>(x: T) -> f64 {
    nt::ToPrimitive::to_f64(&x).unwrap_or(f64::NAN)
}

#[inline(always)]
pub fn usize_to<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in target scalar")
}

/// The imaginary unit.
#[inline(always)]
pub fn imag<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

#[inline(always)]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline(always)]
pub fn real<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Euler-Mascheroni constant.
pub fn euler_gamma<T: Real>() -> T {
    lit(0.577_215_664_901_532_9)
}

#[inline(always)]
pub fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    na::ComplexField::exp(z)
}

/// Principal branch of the complex logarithm.
#[inline(always)]
pub fn cln<T: Real>(z: Complex<T>) -> Complex<T> {
    na::ComplexField::ln(z)
}

#[inline(always)]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    na::ComplexField::modulus(z)
}

#[inline(always)]
pub fn abs<T: Real>(x: T) -> T {
    na::ComplexField::abs(x)
}

/// `exp(z) - 1` without cancellation for small `|z|`.
pub fn cexpm1<T: Real>(z: Complex<T>) -> Complex<T> {
    let half: T = lit(0.5);
    let s = (z.im * half).sin();
    let em1 = na::ComplexField::exp_m1(z.re);
    // e^x cos y - 1 = expm1(x) cos y - 2 sin²(y/2)
    let re = em1 * z.im.cos() - lit::<T>(2.0) * s * s;
    let im = z.re.exp() * z.im.sin();
    Complex::new(re, im)
}

#[inline(always)]
pub fn expm1<T: Real>(x: T) -> T {
    na::ComplexField::exp_m1(x)
}
