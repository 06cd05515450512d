//! Binary floating point with a 128-bit significand and a 64-bit exponent.
//!
//! Class values of a distortion specification grow like `e^{Σε}` and products
//! of domain sizes like `∏ a_i`; at a thousand attributes both leave the range
//! of `f64` by hundreds of orders of magnitude. `Real` keeps 128 significant
//! bits (round-half-even on every operation) and an exponent that does not
//! overflow in practice, so the constructions can be carried out directly
//! rather than in a log domain.
//!
//! Decimal conversion is correctly rounded in both directions and uses 42
//! significant digits, which is enough for `parse(format(x)) == x`.

use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Significant decimal digits emitted by `Display` and serialization.
pub const DECIMAL_DIGITS: usize = 42;

const TOP: u128 = 1 << 127;

/// Extended-precision real number. `mant` is either zero or has bit 127 set.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Real {
    neg: bool,
    exp: i64,
    mant: u128,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParseRealError;

impl fmt::Display for ParseRealError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid extended-precision decimal literal")
    }
}

impl std::error::Error for ParseRealError {}

// 256-bit helpers (hi, lo).

fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    let mask = u64::MAX as u128;
    let (a1, a0) = (a >> 64, a & mask);
    let (b1, b0) = (b >> 64, b & mask);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & mask) + (p10 & mask);
    let lo = (p00 & mask) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

fn shr_sticky(hi: u128, lo: u128, d: u32) -> (u128, u128) {
    match d {
        0 => (hi, lo),
        1..=127 => {
            let lost = lo << (128 - d) != 0;
            (hi >> d, (lo >> d) | (hi << (128 - d)) | lost as u128)
        }
        128 => (0, hi | (lo != 0) as u128),
        129..=255 => {
            let s = d - 128;
            let lost = lo != 0 || (hi << (128 - s)) != 0;
            (0, (hi >> s) | lost as u128)
        }
        _ => (0, ((hi | lo) != 0) as u128),
    }
}

fn leading_zeros_256(hi: u128, lo: u128) -> u32 {
    if hi != 0 {
        hi.leading_zeros()
    } else {
        128 + lo.leading_zeros()
    }
}

fn shl_256(hi: u128, lo: u128, s: u32) -> (u128, u128) {
    match s {
        0 => (hi, lo),
        1..=127 => ((hi << s) | (lo >> (128 - s)), lo << s),
        128..=255 => (lo << (s - 128), 0),
        _ => (0, 0),
    }
}

impl Real {
    pub const ZERO: Real = Real { neg: false, exp: 0, mant: 0 };
    pub const ONE: Real = Real { neg: false, exp: -127, mant: TOP };

    /// Round a 256-bit magnitude `(hi·2^128 + lo)·2^exp` to 128 bits.
    fn round_pack(neg: bool, hi: u128, lo: u128, exp: i64) -> Real {
        if hi == 0 && lo == 0 {
            return Real::ZERO;
        }
        let s = leading_zeros_256(hi, lo);
        let (mut m, rest) = shl_256(hi, lo, s);
        let mut e = exp - s as i64 + 128;
        let half = TOP;
        if rest > half || (rest == half && m & 1 == 1) {
            m = m.wrapping_add(1);
            if m == 0 {
                m = TOP;
                e += 1;
            }
        }
        Real { neg, exp: e, mant: m }
    }

    pub fn from_u64(v: u64) -> Real {
        Real::round_pack(false, 0, v as u128, 0)
    }

    pub fn from_i64(v: i64) -> Real {
        let r = Real::from_u64(v.unsigned_abs());
        if v < 0 {
            -r
        } else {
            r
        }
    }

    /// Exact conversion; panics on NaN or infinity.
    pub fn from_f64(v: f64) -> Real {
        assert!(v.is_finite(), "cannot represent {v} as Real");
        if v == 0.0 {
            return Real::ZERO;
        }
        let bits = v.to_bits();
        let neg = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        Real::round_pack(neg, 0, m as u128, e)
    }

    /// Nearest `f64`; saturates to `±inf` above the `f64` range.
    pub fn to_f64(self) -> f64 {
        if self.mant == 0 {
            return 0.0;
        }
        let top = (self.mant >> 64) as u64 | ((self.mant as u64 != 0) as u64);
        let v = ldexp(top as f64, self.exp + 64);
        if self.neg {
            -v
        } else {
            v
        }
    }

    pub fn is_zero(self) -> bool {
        self.mant == 0
    }

    pub fn is_negative(self) -> bool {
        self.neg && self.mant != 0
    }

    pub fn abs(self) -> Real {
        Real { neg: false, ..self }
    }

    pub fn max(self, other: Real) -> Real {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Real) -> Real {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Exponent `e` such that `2^e <= |self| < 2^(e+1)`; `None` for zero.
    pub fn log2_floor(self) -> Option<i64> {
        (self.mant != 0).then_some(self.exp + 127)
    }

    /// True when the magnitude is beyond the largest finite `f64`.
    pub fn exceeds_f64(self) -> bool {
        self.mant != 0 && self.exp + 127 > 1023
    }

    /// Multiply by `2^n` exactly.
    pub fn scale_pow2(self, n: i64) -> Real {
        if self.mant == 0 {
            self
        } else {
            Real { exp: self.exp + n, ..self }
        }
    }

    /// Natural logarithm, returned as `f64`.
    ///
    /// The argument may be far outside the `f64` range; only the result is
    /// rounded. Panics for non-positive input.
    pub fn ln(self) -> f64 {
        assert!(!self.neg && self.mant != 0, "ln of non-positive value");
        // mant / 2^127 in [1, 2), folded into [sqrt(1/2), sqrt(2)] so the
        // fractional log stays small next to the exponent term.
        let mut e = self.exp + 127;
        let mut frac = self.mant as f64 / 2f64.powi(127);
        if frac > std::f64::consts::SQRT_2 {
            frac *= 0.5;
            e += 1;
        }
        let f = frac - 1.0;
        // ln(2) split so that e * LN2_HI is exact for |e| < 2^20.
        const LN2_HI: f64 = 6.931_471_803_691_238_2e-1;
        const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
        let ef = e as f64;
        ef * LN2_HI + (f.ln_1p() + ef * LN2_LO)
    }

    /// `e^x` evaluated in extended precision.
    pub fn exp(x: f64) -> Real {
        assert!(x.is_finite(), "exp of non-finite value");
        if x == 0.0 {
            return Real::ONE;
        }
        let ln2 = ln2();
        let n = (x / std::f64::consts::LN_2).round() as i64;
        let r = Real::from_f64(x) - ln2 * Real::from_i64(n);
        // Taylor series; |r| <= 0.35 so 40 terms are far past 2^-128.
        let mut term = Real::ONE;
        let mut sum = Real::ONE;
        for k in 1..=40u64 {
            term = term * r / Real::from_u64(k);
            sum += term;
            if term.is_zero() || term.abs().exp + 127 < sum.exp + 127 - 130 {
                break;
            }
        }
        sum.scale_pow2(n)
    }

    /// `self^n` by repeated squaring.
    pub fn powi(self, mut n: u32) -> Real {
        let mut base = self;
        let mut acc = Real::ONE;
        while n > 0 {
            if n & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }

    /// Relative difference `|a - b| / max(|a|, |b|)`, zero when both are zero.
    pub fn rel_diff(a: Real, b: Real) -> f64 {
        let scale = a.abs().max(b.abs());
        if scale.is_zero() {
            return 0.0;
        }
        ((a - b).abs() / scale).to_f64()
    }

    fn cmp_abs(self, other: Real) -> Ordering {
        match (self.mant == 0, other.mant == 0) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => self.exp.cmp(&other.exp).then(self.mant.cmp(&other.mant)),
        }
    }

    fn add_impl(self, other: Real) -> Real {
        if self.mant == 0 {
            return other;
        }
        if other.mant == 0 {
            return self;
        }
        let (big, small) = if self.cmp_abs(other) == Ordering::Less {
            (other, self)
        } else {
            (self, other)
        };
        let d = (big.exp - small.exp).min(300) as u32;
        let (shi, slo) = shr_sticky(small.mant, 0, d);
        let (bhi, blo) = (big.mant, 0u128);
        if big.neg == small.neg {
            let (lo, c) = blo.overflowing_add(slo);
            let (hi, c2) = bhi.overflowing_add(shi + c as u128);
            if c2 {
                // Carry out of bit 255: shift right once, keeping a sticky bit.
                let (h, l) = shr_sticky(hi, lo, 1);
                return Real::round_pack(big.neg, h | TOP, l, big.exp - 128 + 1);
            }
            Real::round_pack(big.neg, hi, lo, big.exp - 128)
        } else {
            let (lo, b) = blo.overflowing_sub(slo);
            let hi = bhi - shi - b as u128;
            Real::round_pack(big.neg, hi, lo, big.exp - 128)
        }
    }

    fn mul_impl(self, other: Real) -> Real {
        if self.mant == 0 || other.mant == 0 {
            return Real::ZERO;
        }
        let (hi, lo) = mul_wide(self.mant, other.mant);
        Real::round_pack(self.neg != other.neg, hi, lo, self.exp + other.exp)
    }

    fn div_impl(self, other: Real) -> Real {
        assert!(other.mant != 0, "division by zero");
        if self.mant == 0 {
            return Real::ZERO;
        }
        let b = other.mant;
        let mut rem = self.mant;
        let (mut qhi, mut qlo) = (0u128, 0u128);
        if rem >= b {
            rem -= b;
            qlo = 1;
        }
        for _ in 0..130 {
            let carry = rem >> 127;
            rem <<= 1;
            qhi = (qhi << 1) | (qlo >> 127);
            qlo <<= 1;
            if carry == 1 || rem >= b {
                rem = rem.wrapping_sub(b);
                qlo |= 1;
            }
        }
        qlo |= (rem != 0) as u128;
        Real::round_pack(self.neg != other.neg, qhi, qlo, self.exp - other.exp - 130)
    }

    /// Correctly rounded conversion of `q · 2^e` where `sticky` marks a
    /// nonzero fraction below `q`'s last bit.
    fn from_biguint_scaled(neg: bool, q: &BigUint, sticky: bool, e: i64) -> Real {
        let bits = q.bits() as i64;
        if bits == 0 {
            return Real::ZERO;
        }
        // Keep at most 255 bits so the sticky bit stays below the round bit.
        let drop = (bits - 255).max(0);
        let kept = q >> (drop as usize);
        let lost = drop > 0 && q.trailing_zeros().map_or(false, |tz| (tz as i64) < drop);
        let digits = kept.to_u64_digits();
        let mut limbs = [0u64; 4];
        for (i, d) in digits.iter().enumerate().take(4) {
            limbs[i] = *d;
        }
        let lo = limbs[0] as u128 | (limbs[1] as u128) << 64;
        let hi = limbs[2] as u128 | (limbs[3] as u128) << 64;
        let lo = lo | (sticky || lost) as u128;
        Real::round_pack(neg, hi, lo, e + drop)
    }

    fn to_scientific(self, digits: usize) -> String {
        if self.mant == 0 {
            return "0".to_string();
        }
        let sign = if self.neg { "-" } else { "" };
        let mag = self.abs();
        let mut n10 = (mag.ln() / std::f64::consts::LN_10).floor() as i64;
        let lower = BigUint::from(10u32).pow(digits as u32 - 1);
        let upper = BigUint::from(10u32).pow(digits as u32);
        loop {
            let p = n10 - (digits as i64 - 1);
            let mut num = BigUint::from(mag.mant);
            let mut den = BigUint::one();
            if mag.exp >= 0 {
                num <<= mag.exp as usize;
            } else {
                den <<= (-mag.exp) as usize;
            }
            if p >= 0 {
                den *= BigUint::from(10u32).pow(p as u32);
            } else {
                num *= BigUint::from(10u32).pow((-p) as u32);
            }
            let (mut q, r) = num.div_rem(&den);
            let twice = r << 1usize;
            if twice > den || (twice == den && q.is_odd()) {
                q += 1u32;
            }
            if q >= upper {
                n10 += 1;
                continue;
            }
            if q < lower {
                n10 -= 1;
                continue;
            }
            let s = q.to_str_radix(10);
            let (head, tail) = s.split_at(1);
            let tail = tail.trim_end_matches('0');
            return if tail.is_empty() {
                format!("{sign}{head}e{n10}")
            } else {
                format!("{sign}{head}.{tail}e{n10}")
            };
        }
    }

    fn parse_decimal(s: &str) -> Result<Real, ParseRealError> {
        let s = s.trim();
        let (neg, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (mantissa, exp10) = match body.find(['e', 'E']) {
            Some(i) => (
                &body[..i],
                body[i + 1..].parse::<i64>().map_err(|_| ParseRealError)?,
            ),
            None => (body, 0),
        };
        let (int_part, frac_part) = match mantissa.find('.') {
            Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(ParseRealError);
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(ParseRealError);
        }
        let all: String = format!("{int_part}{frac_part}");
        let d = BigUint::parse_bytes(all.as_bytes(), 10).ok_or(ParseRealError)?;
        if d.is_zero() {
            return Ok(Real::ZERO);
        }
        let p = exp10 - frac_part.len() as i64;
        if p.abs() > 400_000 {
            return Err(ParseRealError);
        }
        let mut num = d;
        let mut den = BigUint::one();
        if p >= 0 {
            num *= BigUint::from(10u32).pow(p as u32);
        } else {
            den = BigUint::from(10u32).pow((-p) as u32);
        }
        let shift = 132 - (num.bits() as i64 - den.bits() as i64);
        if shift >= 0 {
            num <<= shift as usize;
        } else {
            den <<= (-shift) as usize;
        }
        let (q, r) = num.div_rem(&den);
        Ok(Real::from_biguint_scaled(neg, &q, !r.is_zero(), -shift))
    }
}

fn ldexp(mut v: f64, mut e: i64) -> f64 {
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
        if v.is_infinite() {
            return v;
        }
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
        if v == 0.0 {
            return v;
        }
    }
    v * 2f64.powi(e as i32)
}

fn ln2() -> Real {
    static LN2: OnceLock<Real> = OnceLock::new();
    *LN2.get_or_init(|| {
        // ln 2 = sum_{k>=1} 1 / (k 2^k)
        let mut sum = Real::ZERO;
        for k in 1..=140i64 {
            sum += (Real::ONE / Real::from_i64(k)).scale_pow2(-k);
        }
        sum
    })
}

impl Default for Real {
    fn default() -> Self {
        Real::ZERO
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Real) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Real) -> Ordering {
        let sa = self.is_negative();
        let sb = other.is_negative();
        match (sa, sb) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            (false, false) => self.cmp_abs(*other),
            (true, true) => other.cmp_abs(*self),
        }
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        if self.mant == 0 {
            self
        } else {
            Real { neg: !self.neg, ..self }
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $assign_trait:ident, $assign:ident, $imp:ident) => {
        impl $trait for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                self.$imp(rhs)
            }
        }
        impl $assign_trait for Real {
            fn $assign(&mut self, rhs: Real) {
                *self = self.$imp(rhs);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign, add_impl);
binop!(Mul, mul, MulAssign, mul_assign, mul_impl);
binop!(Div, div, DivAssign, div_assign, div_impl);

impl Sub for Real {
    type Output = Real;
    fn sub(self, rhs: Real) -> Real {
        self.add_impl(-rhs)
    }
}

impl SubAssign for Real {
    fn sub_assign(&mut self, rhs: Real) {
        *self = self.add_impl(-rhs);
    }
}

impl Sum for Real {
    fn sum<I: Iterator<Item = Real>>(iter: I) -> Real {
        iter.fold(Real::ZERO, |a, b| a + b)
    }
}

impl Product for Real {
    fn product<I: Iterator<Item = Real>>(iter: I) -> Real {
        iter.fold(Real::ONE, |a, b| a * b)
    }
}

impl From<u64> for Real {
    fn from(v: u64) -> Real {
        Real::from_u64(v)
    }
}

impl From<u32> for Real {
    fn from(v: u32) -> Real {
        Real::from_u64(v as u64)
    }
}

impl From<f64> for Real {
    fn from(v: f64) -> Real {
        Real::from_f64(v)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_scientific(DECIMAL_DIGITS))
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({})", self.to_scientific(DECIMAL_DIGITS))
    }
}

impl FromStr for Real {
    type Err = ParseRealError;
    fn from_str(s: &str) -> Result<Real, ParseRealError> {
        Real::parse_decimal(s)
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Real, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(f64),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Number(v) if v.is_finite() => Ok(Real::from_f64(v)),
            Repr::Number(_) => Err(serde::de::Error::custom("non-finite number")),
        }
    }
}
