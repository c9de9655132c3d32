//! Complex numbers with an explicit binary exponent.
//!
//! Iterated derivatives such as `(f^n)'(z)` grow like `exp(d^n g(z))` and leave
//! the `f64` range after a dozen iterations even at moderate distance from the
//! Julia set. [`ScaledComplex`] keeps a mantissa whose max-norm lies in
//! `[0.5, 1)` and a separate `i64` power-of-two exponent, renormalizing after
//! every operation.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

const LN_2: f64 = std::f64::consts::LN_2;

/// Exponent gap beyond which the smaller addend is below half an ulp of the larger.
const ABSORB_GAP: i64 = 60;

/// `mantissa * 2^exponent`, with `0.5 <= max(|re|, |im|) < 1` or the mantissa exactly zero.
#[derive(Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    mantissa: Complex64,
    exponent: i64,
}

/// Multiplies `x` by `2^e` without intermediate overflow.
pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= f64::from_bits(((1023 + 1000) as u64) << 52);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= f64::from_bits(((1023 - 1000) as u64) << 52);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * f64::from_bits(((1023 + e) as u64) << 52)
}

/// Exponent `e` with `x = f * 2^e`, `0.5 <= |f| < 1`. `x` must be finite and nonzero.
#[inline]
fn frexp_exponent(x: f64) -> i64 {
    let bits = x.abs().to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    if biased == 0 {
        // subnormal
        frexp_exponent(x * f64::from_bits(((1023 + 64) as u64) << 52)) - 64
    } else {
        biased - 1022
    }
}

impl ScaledComplex {
    pub const ZERO: ScaledComplex = ScaledComplex {
        mantissa: Complex64::new(0.0, 0.0),
        exponent: 0,
    };

    pub const ONE: ScaledComplex = ScaledComplex {
        mantissa: Complex64::new(0.5, 0.0),
        exponent: 1,
    };

    /// Builds `m * 2^e` and renormalizes.
    #[inline]
    pub fn from_parts(m: Complex64, e: i64) -> Self {
        let big = m.re.abs().max(m.im.abs());
        if big == 0.0 || !big.is_finite() {
            if big == 0.0 {
                return Self::ZERO;
            }
            return ScaledComplex {
                mantissa: m,
                exponent: e,
            };
        }
        let shift = frexp_exponent(big);
        if shift == 0 {
            return ScaledComplex {
                mantissa: m,
                exponent: e,
            };
        }
        let s = if (-1000..=1000).contains(&shift) {
            f64::from_bits(((1023 - shift) as u64) << 52)
        } else {
            return ScaledComplex {
                mantissa: Complex64::new(ldexp(m.re, -shift), ldexp(m.im, -shift)),
                exponent: e + shift,
            };
        };
        ScaledComplex {
            mantissa: Complex64::new(m.re * s, m.im * s),
            exponent: e + shift,
        }
    }

    #[inline]
    pub fn new(z: Complex64) -> Self {
        Self::from_parts(z, 0)
    }

    #[inline]
    pub fn from_real(x: f64) -> Self {
        Self::from_parts(Complex64::new(x, 0.0), 0)
    }

    #[inline]
    pub fn mantissa(&self) -> Complex64 {
        self.mantissa
    }

    #[inline]
    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.mantissa.re == 0.0 && self.mantissa.im == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.mantissa.re.is_finite() && self.mantissa.im.is_finite()
    }

    /// Converts back to `f64`; saturates to infinity or flushes to zero outside the range.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            ldexp(self.mantissa.re, self.exponent),
            ldexp(self.mantissa.im, self.exponent),
        )
    }

    /// `log |self|`; `-inf` for zero.
    #[inline]
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mantissa.norm().ln() + self.exponent as f64 * LN_2
    }

    /// `|self|` as `f64`, possibly infinite.
    pub fn abs(&self) -> f64 {
        ldexp(self.mantissa.norm(), self.exponent)
    }

    #[inline]
    pub fn arg(&self) -> f64 {
        self.mantissa.arg()
    }

    #[inline]
    pub fn scale(&self, x: f64) -> Self {
        Self::from_parts(self.mantissa * x, self.exponent)
    }

    /// Multiplies by `2^e` exactly.
    #[inline]
    pub fn mul_pow2(&self, e: i64) -> Self {
        if self.is_zero() {
            return *self;
        }
        ScaledComplex {
            mantissa: self.mantissa,
            exponent: self.exponent + e,
        }
    }

    #[inline]
    pub fn square(&self) -> Self {
        *self * *self
    }

    pub fn recip(&self) -> Self {
        let m = self.mantissa.inv();
        Self::from_parts(m, -self.exponent)
    }

    /// Relative distance `|a - b| / max(|a|, |b|)`, computed without overflow.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        let diff = *self - *other;
        if diff.is_zero() {
            return 0.0;
        }
        let scale = self.ln_abs().max(other.ln_abs());
        (diff.ln_abs() - scale).exp()
    }

    /// Sum with a flag telling whether the smaller operand was absorbed entirely.
    pub fn add_checked(&self, other: &Self) -> (Self, bool) {
        if other.is_zero() {
            return (*self, false);
        }
        if self.is_zero() {
            return (*other, false);
        }
        let (big, small) = if self.exponent >= other.exponent {
            (self, other)
        } else {
            (other, self)
        };
        let gap = big.exponent - small.exponent;
        if gap > ABSORB_GAP {
            return (*big, true);
        }
        let s = f64::from_bits(((1023 - gap) as u64) << 52);
        (
            Self::from_parts(big.mantissa + small.mantissa * s, big.exponent),
            false,
        )
    }
}

impl Default for ScaledComplex {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<Complex64> for ScaledComplex {
    fn from(z: Complex64) -> Self {
        Self::new(z)
    }
}

impl From<f64> for ScaledComplex {
    fn from(x: f64) -> Self {
        Self::from_real(x)
    }
}

impl Mul for ScaledComplex {
    type Output = ScaledComplex;

    #[inline]
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self::from_parts(self.mantissa * rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl Div for ScaledComplex {
    type Output = ScaledComplex;

    fn div(self, rhs: Self) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        Self::from_parts(self.mantissa / rhs.mantissa, self.exponent - rhs.exponent)
    }
}

impl Add for ScaledComplex {
    type Output = ScaledComplex;

    #[inline]
    fn add(self, rhs: Self) -> Self {
        self.add_checked(&rhs).0
    }
}

impl Neg for ScaledComplex {
    type Output = ScaledComplex;

    #[inline]
    fn neg(self) -> Self {
        ScaledComplex {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl Sub for ScaledComplex {
    type Output = ScaledComplex;

    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl fmt::Debug for ScaledComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({} + {}i)*2^{}",
            self.mantissa.re, self.mantissa.im, self.exponent
        )
    }
}
