//! Exponential integrals for real and complex arguments.
//!
//! The T = 0 bath coefficients have closed forms in terms of `E1` and `Ei`;
//! these routines supply them without overflow for large arguments by
//! returning the exponentially scaled variants.

use crate::num::{cabs, cexp, cln, euler_gamma, lit, usize_to, Complex, Real};

const MAX_TERMS: usize = 2000;

/// Radius below which the power series is used for complex `E1`.
const SERIES_RADIUS: f64 = 5.0;

/// `exp(x) * E1(x)` for `x > 0`.
pub fn e1_scaled<T: Real>(x: T) -> T {
    assert!(x > T::zero(), "e1_scaled requires a positive argument");
    let one = T::one();
    if x <= one {
        // E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k k!)
        let mut term = one;
        let mut sum = T::zero();
        for k in 1..MAX_TERMS {
            let kf: T = usize_to(k);
            term = term * (-x) / kf;
            let add = -term / kf;
            sum += add;
            if crate::num::abs(add) <= T::eps() * crate::num::abs(sum) {
                break;
            }
        }
        (-euler_gamma::<T>() - x.ln() + sum) * x.exp()
    } else {
        // modified Lentz on the continued fraction 1/(x+1- 1/(x+3- 4/(x+5- ...)))
        let tiny = lentz_tiny::<T>();
        let mut b = x + one;
        let mut c = one / tiny;
        let mut d = one / b;
        let mut h = d;
        for i in 1..MAX_TERMS {
            let fi: T = usize_to(i);
            let an = -fi * fi;
            b += lit(2.0);
            d = one / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if crate::num::abs(del - one) <= T::eps() {
                break;
            }
        }
        h
    }
}

/// `exp(-x) * Ei(x)` for `x > 0`.
pub fn ei_scaled<T: Real>(x: T) -> T {
    assert!(x > T::zero(), "ei_scaled requires a positive argument");
    let one = T::one();
    // the asymptotic series reaches machine precision once x exceeds -ln(eps)
    let switch = -T::eps().ln() + lit(4.0);
    if x < switch {
        let mut term = one;
        let mut sum = T::zero();
        for k in 1..MAX_TERMS {
            let kf: T = usize_to(k);
            term = term * x / kf;
            let add = term / kf;
            sum += add;
            if add <= T::eps() * crate::num::abs(sum) {
                break;
            }
        }
        (euler_gamma::<T>() + x.ln() + sum) * (-x).exp()
    } else {
        let mut term = one;
        let mut sum = one;
        for k in 1..MAX_TERMS {
            let next = term * usize_to::<T>(k) / x;
            if next >= term || next <= T::eps() * sum {
                break;
            }
            term = next;
            sum += term;
        }
        sum / x
    }
}

/// Entire part of the exponential integral, `Ein(z) = sum_{k>=1} (-1)^{k+1} z^k / (k k!)`.
pub fn ein<T: Real>(z: Complex<T>) -> Complex<T> {
    let mut term = Complex::new(T::one(), T::zero());
    let mut sum = Complex::new(T::zero(), T::zero());
    for k in 1..MAX_TERMS {
        let kf: T = usize_to(k);
        term = term * (-z) / kf;
        let add = -term / kf;
        sum += add;
        if cabs(add) <= T::eps() * cabs(sum) {
            break;
        }
    }
    sum
}

/// `E1(z) + Log(z)` on the principal branch.
///
/// Finite at the origin (where it equals `-gamma`), so it can be evaluated for
/// arguments of any magnitude without the logarithmic cancellation of the two
/// terms taken separately.
pub fn e1_plus_log<T: Real>(z: Complex<T>) -> Complex<T> {
    if cabs(z) <= lit(SERIES_RADIUS) {
        ein(z) - Complex::new(euler_gamma::<T>(), T::zero())
    } else {
        e1_continued_fraction(z) + cln(z)
    }
}

/// Principal-branch `E1(z)` for `z != 0`.
pub fn e1<T: Real>(z: Complex<T>) -> Complex<T> {
    assert!(cabs(z) > T::zero(), "E1 is singular at the origin");
    if cabs(z) <= lit(SERIES_RADIUS) {
        ein(z) - Complex::new(euler_gamma::<T>(), T::zero()) - cln(z)
    } else {
        e1_continued_fraction(z)
    }
}

fn e1_continued_fraction<T: Real>(z: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    let tiny = Complex::new(lentz_tiny::<T>(), T::zero());
    let mut b = z + one;
    let mut c = one / tiny;
    let mut d = one / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let fi: T = usize_to(i);
        let an = Complex::new(-fi * fi, T::zero());
        b += Complex::new(lit(2.0), T::zero());
        d = one / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if cabs(del - one) <= T::eps() {
            break;
        }
    }
    h * cexp(-z)
}

/// Guard against division by zero in the Lentz recurrences; representable in
/// both single and double precision.
fn lentz_tiny<T: Real>() -> T {
    let e = T::eps();
    e * e * e * e
}
