//! Scalar type used for every numeric computation.
//!
//! 64-bit by default; the `f32` feature switches the whole crate to single
//! precision. Gradient checks assume the 64-bit build.

#[cfg(not(feature = "f32"))]
pub type Real = f64;
#[cfg(feature = "f32")]
pub type Real = f32;

#[cfg(not(feature = "f32"))]
mod imp {
    use super::Real;

    #[inline]
    pub fn sqrt(x: Real) -> Real {
        libm::sqrt(x)
    }
    #[inline]
    pub fn exp(x: Real) -> Real {
        libm::exp(x)
    }
    #[inline]
    pub fn ln(x: Real) -> Real {
        libm::log(x)
    }
    #[inline]
    pub fn powi(x: Real, n: i32) -> Real {
        libm::pow(x, n as Real)
    }
    #[inline]
    pub fn cos(x: Real) -> Real {
        libm::cos(x)
    }
    #[inline]
    pub fn sin(x: Real) -> Real {
        libm::sin(x)
    }
    #[inline]
    pub fn atan2(y: Real, x: Real) -> Real {
        libm::atan2(y, x)
    }
    #[inline]
    pub fn cbrt(x: Real) -> Real {
        libm::cbrt(x)
    }
    #[inline]
    pub fn floor(x: Real) -> Real {
        libm::floor(x)
    }
    #[inline]
    pub fn acos(x: Real) -> Real {
        libm::acos(x)
    }
}

#[cfg(feature = "f32")]
mod imp {
    use super::Real;

    #[inline]
    pub fn sqrt(x: Real) -> Real {
        libm::sqrtf(x)
    }
    #[inline]
    pub fn exp(x: Real) -> Real {
        libm::expf(x)
    }
    #[inline]
    pub fn ln(x: Real) -> Real {
        libm::logf(x)
    }
    #[inline]
    pub fn powi(x: Real, n: i32) -> Real {
        libm::powf(x, n as Real)
    }
    #[inline]
    pub fn cos(x: Real) -> Real {
        libm::cosf(x)
    }
    #[inline]
    pub fn sin(x: Real) -> Real {
        libm::sinf(x)
    }
    #[inline]
    pub fn atan2(y: Real, x: Real) -> Real {
        libm::atan2f(y, x)
    }
    #[inline]
    pub fn cbrt(x: Real) -> Real {
        libm::cbrtf(x)
    }
    #[inline]
    pub fn floor(x: Real) -> Real {
        libm::floorf(x)
    }
    #[inline]
    pub fn acos(x: Real) -> Real {
        libm::acosf(x)
    }
}

pub use imp::*;

pub const PI: Real = core::f64::consts::PI as Real;

/// Euclidean distance between two points.
#[inline]
pub fn dist3(a: &[Real; 3], b: &[Real; 3]) -> Real {
    sqrt(dist3_sq(a, b))
}

#[inline]
pub fn dist3_sq(a: &[Real; 3], b: &[Real; 3]) -> Real {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub fn sub3(a: &[Real; 3], b: &[Real; 3]) -> [Real; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn cross3(a: &[Real; 3], b: &[Real; 3]) -> [Real; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn dot3(a: &[Real; 3], b: &[Real; 3]) -> Real {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm3(a: &[Real; 3]) -> Real {
    sqrt(dot3(a, a))
}
