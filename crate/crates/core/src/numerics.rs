//! Arbitrary-precision real arithmetic used by the whole pipeline.
//!
//! Every quantity that can grow like `λ₁ⁿ` is carried by [`BigReal`], a
//! correctly rounded binary floating-point scalar whose mantissa width is
//! chosen at run time through a [`PrecisionCtx`]. The backend is MPFR (via
//! the `rug` crate); the contract here is what the rest of the crate relies
//! on, not the backend:
//!
//! * binary operations round to nearest (ties to even) at the larger of the
//!   two operand precisions,
//! * `f64` values embed exactly,
//! * comparison and negation are exact,
//! * decimal conversion is correctly rounded in both directions.
//!
//! The [`Real`] trait abstracts the scalar so the estimation and limit
//! formulas can be written once and instantiated at `f64` (for cheap checks)
//! or [`BigReal`] (for production runs).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_traits::{Num, One, Signed, Zero};
use rug::float::Round;
use rug::ops::CompleteRound;
use rug::Float;
use thiserror::Error;

/// Default mantissa width in bits for high-precision runs.
pub const DEFAULT_MANTISSA_BITS: u32 = 800;

/// Smallest mantissa width the context accepts. Below this the exact-embed
/// guarantee for `f64` would not leave headroom for the dyadic sums.
pub const MIN_MANTISSA_BITS: u32 = 64;

/// Largest mantissa width accepted, to keep allocations sane.
pub const MAX_MANTISSA_BITS: u32 = 1 << 24;

/// Errors produced by the arbitrary-precision layer.
#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("mantissa precision {0} bits is outside [{MIN_MANTISSA_BITS}, {MAX_MANTISSA_BITS}]")]
    BadPrecision(u32),
    #[error("non-finite input {0} cannot be embedded")]
    NonFiniteInput(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value")]
    SqrtOfNegative,
    #[error("significant digits {0} outside [1, 250]")]
    SigDigitsOutOfRange(usize),
    #[error("cannot parse {0:?} as a decimal real")]
    Parse(String),
}

/// Precision configuration: the mantissa width, in bits, at which all
/// arithmetic under this context is rounded to nearest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionCtx {
    mantissa_bits: u32,
}

impl Default for PrecisionCtx {
    fn default() -> Self {
        PrecisionCtx {
            mantissa_bits: DEFAULT_MANTISSA_BITS,
        }
    }
}

impl PrecisionCtx {
    pub fn new(mantissa_bits: u32) -> Result<Self, NumericsError> {
        if !(MIN_MANTISSA_BITS..=MAX_MANTISSA_BITS).contains(&mantissa_bits) {
            return Err(NumericsError::BadPrecision(mantissa_bits));
        }
        Ok(PrecisionCtx { mantissa_bits })
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.mantissa_bits
    }

    /// Embeds a finite `f64` exactly (no rounding: the mantissa is at least
    /// 64 bits wide, an `f64` carries 53).
    pub fn embed(&self, value: f64) -> Result<BigReal, NumericsError> {
        if !value.is_finite() {
            return Err(NumericsError::NonFiniteInput(value));
        }
        Ok(BigReal {
            inner: Float::with_val(self.mantissa_bits, value),
        })
    }

    /// Embeds a machine integer exactly.
    pub fn embed_i64(&self, value: i64) -> BigReal {
        BigReal {
            inner: Float::with_val(self.mantissa_bits, value),
        }
    }

    /// Parses decimal text (optional sign, digits, optional '.', optional
    /// 'e±exp'), correctly rounded to this context's precision.
    pub fn parse(&self, text: &str) -> Result<BigReal, NumericsError> {
        if !is_plain_decimal(text) {
            return Err(NumericsError::Parse(text.to_owned()));
        }
        let incomplete = Float::parse(text).map_err(|_| NumericsError::Parse(text.to_owned()))?;
        let inner = incomplete.complete(self.mantissa_bits);
        if !inner.is_finite() {
            return Err(NumericsError::Parse(text.to_owned()));
        }
        Ok(BigReal { inner })
    }
}

/// Accepts exactly: `[+-]? digits [. digits?]? | [+-]? . digits`, with an
/// optional `[eE][+-]?digits` suffix. No locale separators, no inf/nan.
fn is_plain_decimal(text: &str) -> bool {
    let bytes = text.as_bytes();
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let int_len = i - int_start;
    let mut frac_len = 0;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        frac_len = i - frac_start;
    }
    if int_len + frac_len == 0 {
        return false;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == bytes.len()
}

/// An immutable arbitrary-precision real. Values carry their own mantissa
/// width; binary operations produce results at the wider of the operand
/// precisions, rounded to nearest (ties to even).
#[derive(Debug, Clone, PartialEq)]
pub struct BigReal {
    inner: Float,
}

impl BigReal {
    fn wrap(inner: Float) -> Self {
        BigReal { inner }
    }

    pub fn precision_bits(&self) -> u32 {
        self.inner.prec()
    }

    /// Rounds to the nearest `f64`.
    pub fn to_f64(&self) -> f64 {
        self.inner.to_f64()
    }

    pub fn is_zero_value(&self) -> bool {
        self.inner.is_zero()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.inner.is_sign_negative()
    }

    fn join(a: &BigReal, b: &BigReal) -> u32 {
        a.inner.prec().max(b.inner.prec())
    }

    pub fn try_div(&self, rhs: &BigReal) -> Result<BigReal, NumericsError> {
        if rhs.inner.is_zero() {
            return Err(NumericsError::DivisionByZero);
        }
        Ok(BigReal::wrap(
            (&self.inner / &rhs.inner).complete(Self::join(self, rhs)),
        ))
    }

    pub fn try_sqrt(&self) -> Result<BigReal, NumericsError> {
        if self.inner.is_sign_negative() && !self.inner.is_zero() {
            return Err(NumericsError::SqrtOfNegative);
        }
        Ok(BigReal::wrap(
            self.inner.sqrt_ref().complete(self.inner.prec()),
        ))
    }

    /// Fused multiply-add `self * mul + add` with a single rounding.
    pub fn fma(&self, mul: &BigReal, add: &BigReal) -> BigReal {
        let prec = Self::join(self, mul).max(add.inner.prec());
        BigReal::wrap(
            self.inner
                .mul_add_ref(&mul.inner, &add.inner)
                .complete(prec),
        )
    }

    pub fn abs_value(&self) -> BigReal {
        BigReal::wrap(self.inner.abs_ref().complete(self.inner.prec()))
    }

    /// Correctly rounded decimal text with `sig_digits` significant digits.
    /// Positional notation while the leading digit's power of ten lies in
    /// `[-4, sig_digits)`, scientific `d.ddd…e±x` otherwise.
    pub fn to_decimal(&self, sig_digits: usize) -> Result<String, NumericsError> {
        if !(1..=250).contains(&sig_digits) {
            return Err(NumericsError::SigDigitsOutOfRange(sig_digits));
        }
        let (neg, digits, exp) =
            self.inner
                .to_sign_string_exp_round(10, Some(sig_digits), Round::Nearest);
        let sign = if neg { "-" } else { "" };
        if self.inner.is_zero() {
            return Ok(format!("{sign}{}", zero_body(sig_digits)));
        }
        let exp = exp.expect("nonzero finite value has a decimal exponent");
        let mut digits = digits;
        // MPFR may hand back fewer digits than asked when the tail is zero.
        while digits.len() < sig_digits {
            digits.push('0');
        }
        let leading_pow = exp - 1; // value = 0.digits × 10^exp
        let body = if (-4..sig_digits as i32).contains(&leading_pow) {
            if exp <= 0 {
                let zeros = "0".repeat((-exp) as usize);
                format!("0.{zeros}{digits}")
            } else if (exp as usize) >= digits.len() {
                let zeros = "0".repeat(exp as usize - digits.len());
                format!("{digits}{zeros}")
            } else {
                format!("{}.{}", &digits[..exp as usize], &digits[exp as usize..])
            }
        } else if digits.len() == 1 {
            format!("{digits}e{leading_pow}")
        } else {
            format!("{}.{}e{}", &digits[..1], &digits[1..], leading_pow)
        };
        Ok(format!("{sign}{body}"))
    }
}

fn zero_body(sig_digits: usize) -> String {
    if sig_digits == 1 {
        "0".to_owned()
    } else {
        format!("0.{}", "0".repeat(sig_digits - 1))
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal(25).map_err(|_| fmt::Error)?)
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.inner.partial_cmp(&other.inner)
    }
}

macro_rules! bigreal_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                let prec = BigReal::join(&self, &rhs);
                BigReal::wrap((&self.inner $op &rhs.inner).complete(prec))
            }
        }
        impl<'a> $trait<&'a BigReal> for &'a BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &'a BigReal) -> BigReal {
                let prec = BigReal::join(self, rhs);
                BigReal::wrap((&self.inner $op &rhs.inner).complete(prec))
            }
        }
    };
}

bigreal_binop!(Add, add, +);
bigreal_binop!(Sub, sub, -);
bigreal_binop!(Mul, mul, *);

impl Div for BigReal {
    type Output = BigReal;
    fn div(self, rhs: BigReal) -> BigReal {
        assert!(!rhs.inner.is_zero(), "BigReal division by zero");
        let prec = BigReal::join(&self, &rhs);
        BigReal::wrap((&self.inner / &rhs.inner).complete(prec))
    }
}

impl<'a> Div<&'a BigReal> for &'a BigReal {
    type Output = BigReal;
    fn div(self, rhs: &'a BigReal) -> BigReal {
        assert!(!rhs.inner.is_zero(), "BigReal division by zero");
        let prec = BigReal::join(self, rhs);
        BigReal::wrap((&self.inner / &rhs.inner).complete(prec))
    }
}

impl Rem for BigReal {
    type Output = BigReal;
    fn rem(self, rhs: BigReal) -> BigReal {
        assert!(!rhs.inner.is_zero(), "BigReal remainder by zero");
        let prec = BigReal::join(&self, &rhs);
        BigReal::wrap((&self.inner % &rhs.inner).complete(prec))
    }
}

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        let prec = self.inner.prec();
        BigReal::wrap((-&self.inner).complete(prec))
    }
}

impl Zero for BigReal {
    fn zero() -> Self {
        BigReal::wrap(Float::with_val(MIN_MANTISSA_BITS, 0))
    }
    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
}

impl One for BigReal {
    fn one() -> Self {
        BigReal::wrap(Float::with_val(MIN_MANTISSA_BITS, 1))
    }
}

impl Num for BigReal {
    type FromStrRadixErr = NumericsError;
    fn from_str_radix(str: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        if radix != 10 {
            return Err(NumericsError::Parse(str.to_owned()));
        }
        PrecisionCtx::default().parse(str)
    }
}

impl Signed for BigReal {
    fn abs(&self) -> Self {
        self.abs_value()
    }
    fn abs_sub(&self, other: &Self) -> Self {
        if self <= other {
            BigReal::zero()
        } else {
            self - other
        }
    }
    fn signum(&self) -> Self {
        if self.inner.is_zero() {
            BigReal::zero()
        } else if self.inner.is_sign_negative() {
            -BigReal::one()
        } else {
            BigReal::one()
        }
    }
    fn is_positive(&self) -> bool {
        !self.inner.is_zero() && !self.inner.is_sign_negative()
    }
    fn is_negative(&self) -> bool {
        !self.inner.is_zero() && self.inner.is_sign_negative()
    }
}

/// Scalar abstraction over `f64` and [`BigReal`].
///
/// `embed` must be exact for finite inputs; `bits` fixes the working
/// precision of the embedded value (ignored by `f64`). Binary operations on
/// two values keep the wider precision, so seeding a pipeline with wide
/// embeds keeps every downstream result at that width.
pub trait Real:
    Num + Signed + Clone + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    fn embed(value: f64, bits: u32) -> Self;
    fn to_f64(&self) -> f64;
    fn sqrt(&self) -> Self;
    /// Fused `self * mul + add`, rounded once.
    fn mul_add(&self, mul: &Self, add: &Self) -> Self;
    fn precision_bits(&self) -> u32;
}

impl Real for f64 {
    fn embed(value: f64, _bits: u32) -> Self {
        value
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn mul_add(&self, mul: &Self, add: &Self) -> Self {
        f64::mul_add(*self, *mul, *add)
    }
    fn precision_bits(&self) -> u32 {
        53
    }
}

impl Real for BigReal {
    fn embed(value: f64, bits: u32) -> Self {
        let bits = bits.clamp(MIN_MANTISSA_BITS, MAX_MANTISSA_BITS);
        BigReal::wrap(Float::with_val(bits, value))
    }
    fn to_f64(&self) -> f64 {
        BigReal::to_f64(self)
    }
    fn sqrt(&self) -> Self {
        self.try_sqrt().expect("BigReal sqrt of negative value")
    }
    fn mul_add(&self, mul: &Self, add: &Self) -> Self {
        self.fma(mul, add)
    }
    fn precision_bits(&self) -> u32 {
        BigReal::precision_bits(self)
    }
}

/// `a*b - c*d` with compensated products: each product is split into a
/// rounded head and its exact fma residual, so the cancellation between the
/// heads does not wipe out the low-order bits. Error stays at a couple of
/// ulps of the exact difference even when `a*b` and `c*d` agree to hundreds
/// of bits, which is exactly the situation in the near-collinear Gram
/// determinants.
pub fn diff_of_products<T: Real>(a: &T, b: &T, c: &T, d: &T) -> T {
    let hi_ab = a.clone() * b.clone();
    let lo_ab = a.mul_add(b, &-hi_ab.clone());
    let hi_cd = c.clone() * d.clone();
    let lo_cd = c.mul_add(d, &-hi_cd.clone());
    (hi_ab - hi_cd) + (lo_ab - lo_cd)
}
