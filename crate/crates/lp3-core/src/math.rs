//! Scalar helpers backed by `libm` so the crate builds without `std`.
//!
//! The wrappers keep formula-heavy modules readable (`sqrt(a * b)` instead of
//! `libm::sqrt(a * b)`); all of them are thin and `#[inline]`.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

/// Natural logarithm.
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// `exp(x) - 1` without cancellation near `x = 0`.
#[inline]
pub fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn asin(x: f64) -> f64 {
    libm::asin(x)
}

#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// Sign function with `sgn0(0) = 0` — note that `f64::signum(0.0)` is `1.0`,
/// which is the wrong convention for a sign activation. NaN maps to 0.
#[inline]
pub fn sgn0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Clamps an arcsin/arccos argument to [−1, 1] when the overshoot is
/// roundoff-sized (≤ `tol`); returns `None` when the argument is genuinely
/// out of domain or non-finite.
#[inline]
pub fn clamp_unit(u: f64, tol: f64) -> Option<f64> {
    if !u.is_finite() {
        return None;
    }
    if u > 1.0 {
        if u - 1.0 <= tol {
            Some(1.0)
        } else {
            None
        }
    } else if u < -1.0 {
        if -1.0 - u <= tol {
            Some(-1.0)
        } else {
            None
        }
    } else {
        Some(u)
    }
}
