//! Fixed-point interval arithmetic with outward rounding.
//!
//! Values are intervals [lo, hi] / 2^bits with BigInt endpoints. Every
//! operation rounds the lower endpoint down and the upper endpoint up, so any
//! derived comparison (lo > 0, hi < 1, ...) is a certified statement about
//! the exact real quantity.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Working precision in bits, from HMF_PRECISION_BITS (default 200).
pub fn precision_bits() -> u32 {
    std::env::var("HMF_PRECISION_BITS")
        .ok()
        .and_then(|s| s.trim().parse::<u32>().ok())
        .map(|v| v.clamp(64, 4096))
        .unwrap_or(200)
}

fn shift_floor(x: &BigInt, sh: u32) -> BigInt {
    // BigInt shr rounds toward negative infinity
    x >> sh
}

fn shift_ceil(x: &BigInt, sh: u32) -> BigInt {
    -((-x) >> sh)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iv {
    pub lo: BigInt,
    pub hi: BigInt,
    pub bits: u32,
}

impl Iv {
    pub fn from_int(v: i64, bits: u32) -> Iv {
        let m = BigInt::from(v) << bits;
        Iv {
            lo: m.clone(),
            hi: m,
            bits,
        }
    }

    pub fn from_ratio(r: &BigRational, bits: u32) -> Iv {
        let scaled = r.numer() << bits;
        Iv {
            lo: scaled.div_floor(r.denom()),
            hi: scaled.div_ceil(r.denom()),
            bits,
        }
    }

    pub fn zero(bits: u32) -> Iv {
        Iv {
            lo: BigInt::zero(),
            hi: BigInt::zero(),
            bits,
        }
    }

    fn check(&self, other: &Iv) {
        assert_eq!(self.bits, other.bits, "interval precision mismatch");
    }

    pub fn add(&self, other: &Iv) -> Iv {
        self.check(other);
        Iv {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
            bits: self.bits,
        }
    }

    pub fn sub(&self, other: &Iv) -> Iv {
        self.check(other);
        Iv {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
            bits: self.bits,
        }
    }

    pub fn neg(&self) -> Iv {
        Iv {
            lo: -&self.hi,
            hi: -&self.lo,
            bits: self.bits,
        }
    }

    pub fn mul(&self, other: &Iv) -> Iv {
        self.check(other);
        let cands = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = cands.iter().min().unwrap();
        let hi = cands.iter().max().unwrap();
        Iv {
            lo: shift_floor(lo, self.bits),
            hi: shift_ceil(hi, self.bits),
            bits: self.bits,
        }
    }

    /// Multiply by an exact integer.
    pub fn scale_int(&self, v: i64) -> Iv {
        let v = BigInt::from(v);
        let (a, b) = (&self.lo * &v, &self.hi * &v);
        if v.is_negative() {
            Iv {
                lo: b,
                hi: a,
                bits: self.bits,
            }
        } else {
            Iv {
                lo: a,
                hi: b,
                bits: self.bits,
            }
        }
    }

    /// Multiply by an exact power of two.
    pub fn scale_pow2(&self, sh: i32) -> Iv {
        if sh >= 0 {
            Iv {
                lo: &self.lo << sh as u32,
                hi: &self.hi << sh as u32,
                bits: self.bits,
            }
        } else {
            Iv {
                lo: shift_floor(&self.lo, (-sh) as u32),
                hi: shift_ceil(&self.hi, (-sh) as u32),
                bits: self.bits,
            }
        }
    }

    pub fn recip(&self) -> Result<Iv> {
        if self.lo.is_negative() != self.hi.is_negative() || self.lo.is_zero() || self.hi.is_zero()
        {
            return Err(Error::Internal("reciprocal of interval containing zero".into()));
        }
        let unit = BigInt::one() << (2 * self.bits);
        Ok(Iv {
            lo: unit.div_floor(&self.hi),
            hi: unit.div_ceil(&self.lo),
            bits: self.bits,
        })
    }

    pub fn div(&self, other: &Iv) -> Result<Iv> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn powi(&self, n: i64) -> Result<Iv> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut acc = Iv::from_int(1, self.bits);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        Ok(acc)
    }

    pub fn sqrt(&self) -> Result<Iv> {
        if self.lo.is_negative() {
            return Err(Error::Internal("square root of an interval below zero".into()));
        }
        Ok(Iv {
            lo: (&self.lo << self.bits).sqrt(),
            hi: (&self.hi << self.bits).sqrt() + 1,
            bits: self.bits,
        })
    }

    /// x^(num / 2^log2_den) for x >= 0, by repeated square roots.
    pub fn pow_frac(&self, num: i64, log2_den: u32) -> Result<Iv> {
        let mut root = self.clone();
        for _ in 0..log2_den {
            root = root.sqrt()?;
        }
        root.powi(num)
    }

    /// Widen symmetrically by the magnitude of `rad`.
    pub fn widen(&self, rad: &Iv) -> Iv {
        self.check(rad);
        let r = std::cmp::max(rad.lo.abs(), rad.hi.abs());
        Iv {
            lo: &self.lo - &r,
            hi: &self.hi + &r,
            bits: self.bits,
        }
    }

    /// Certified strict comparison: every point of self exceeds every point
    /// of other.
    pub fn certainly_gt(&self, other: &Iv) -> bool {
        self.check(other);
        self.lo > other.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn contains_ratio(&self, r: &BigRational) -> bool {
        let lo = BigRational::new(self.lo.clone(), BigInt::one() << self.bits);
        let hi = BigRational::new(self.hi.clone(), BigInt::one() << self.bits);
        lo <= *r && *r <= hi
    }

    /// Width as an exact rational.
    pub fn width(&self) -> BigRational {
        BigRational::new(&self.hi - &self.lo, BigInt::one() << self.bits)
    }

    fn endpoint_f64(m: &BigInt, bits: u32) -> f64 {
        if bits > 52 {
            let top = m >> (bits - 52);
            top.to_f64().unwrap_or(f64::NAN) * (2f64).powi(-52)
        } else {
            m.to_f64().unwrap_or(f64::NAN) * (2f64).powi(-(bits as i32))
        }
    }

    pub fn lo_f64(&self) -> f64 {
        Self::endpoint_f64(&self.lo, self.bits)
    }

    pub fn hi_f64(&self) -> f64 {
        Self::endpoint_f64(&self.hi, self.bits)
    }

    /// Decimal strings (lo rounded down, hi rounded up) with the given number
    /// of fractional digits.
    pub fn dec_pair(&self, digits: u32) -> (String, String) {
        (
            dec_string(&self.lo, self.bits, digits, false),
            dec_string(&self.hi, self.bits, digits, true),
        )
    }
}

fn dec_string(mant: &BigInt, bits: u32, digits: u32, round_up: bool) -> String {
    let pow10 = BigInt::from(10u32).pow(digits);
    let scaled = mant * &pow10;
    let n = if round_up {
        shift_ceil(&scaled, bits)
    } else {
        shift_floor(&scaled, bits)
    };
    let neg = n.is_negative();
    let n = n.abs();
    let (ip, fp) = n.div_rem(&pow10);
    let frac = format!("{:0>width$}", fp.to_string(), width = digits as usize);
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{ip}")
    } else {
        format!("{sign}{ip}.{frac}")
    }
}

pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= i;
    }
    acc
}

/// Bracketing partial sums of arctan(1/n).
fn atan_inv_bracket(n: i64, bits: u32) -> (BigRational, BigRational) {
    let n2 = BigInt::from(n) * BigInt::from(n);
    let limit = BigRational::new(BigInt::one(), BigInt::one() << (bits + 8));
    let mut power = BigRational::new(BigInt::one(), BigInt::from(n));
    let mut sum = power.clone();
    let mut prev;
    let mut k = 1u32;
    loop {
        power = BigRational::new(power.numer().clone(), power.denom() * &n2);
        let term = BigRational::new(power.numer().clone(), power.denom() * BigInt::from(2 * k + 1));
        prev = sum.clone();
        sum = if k % 2 == 1 { sum - &term } else { sum + &term };
        if term < limit {
            break;
        }
        k += 1;
    }
    if sum < prev {
        (sum, prev)
    } else {
        (prev, sum)
    }
}

/// Certified enclosure of pi, via Machin's formula.
pub fn pi(bits: u32) -> Iv {
    static CACHE: OnceLock<Mutex<HashMap<u32, Iv>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&bits) {
        return v.clone();
    }
    let (a5l, a5h) = atan_inv_bracket(5, bits);
    let (a239l, a239h) = atan_inv_bracket(239, bits);
    let a5 = Iv {
        lo: Iv::from_ratio(&a5l, bits).lo,
        hi: Iv::from_ratio(&a5h, bits).hi,
        bits,
    };
    let a239 = Iv {
        lo: Iv::from_ratio(&a239l, bits).lo,
        hi: Iv::from_ratio(&a239h, bits).hi,
        bits,
    };
    let v = a5.scale_int(16).sub(&a239.scale_int(4));
    cache.lock().unwrap().insert(bits, v.clone());
    v
}

/// Certified enclosure of zeta(k) for even k >= 2, from the Bernoulli closed
/// form |B_k| (2 pi)^k / (2 k!).
pub fn zeta_even_iv(k: i64, bits: u32) -> Result<Iv> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::Internal(format!("zeta enclosure needs even k >= 2, got {k}")));
    }
    let bk = crate::specialvalues::bernoulli(k as usize);
    let coeff = bk.abs() / BigRational::new(BigInt::from(2) * factorial(k as u64), BigInt::one());
    let pik = pi(bits).powi(k)?.scale_pow2(k as i32);
    Ok(pik.mul(&Iv::from_ratio(&coeff, bits)))
}
