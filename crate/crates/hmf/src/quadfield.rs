//! Real quadratic fields, their rings of integers, and ideal arithmetic.
//!
//! Elements of O_F are written in the basis 1, omega where omega is
//! (1 + sqrt(d))/2 for d = 1 mod 4 and sqrt(d) otherwise. Integral ideals
//! are kept in Hermite normal form a*Z + (b + c*omega)*Z.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaKind {
    /// omega = (1 + sqrt(d))/2, discriminant d
    HalfPlusRoot,
    /// omega = sqrt(d), discriminant 4d
    Root,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitType {
    Split,
    Inert,
    Ramified,
}

/// Arithmetic context for F = Q(sqrt(d)).
#[derive(Debug, Clone)]
pub struct FieldContext {
    pub d: i64,
    pub disc: i64,
    pub kind: OmegaKind,
    /// omega^2 = omega + mul_const (HalfPlusRoot) or omega^2 = mul_const (Root)
    pub mul_const: i64,
    /// floor(sqrt(d))
    pub sqrt_floor: i64,
    /// fundamental unit > 1 as coordinates (x, y) for x + y*omega
    pub fundamental_unit: (BigInt, BigInt),
    /// norm of the fundamental unit, +1 or -1
    pub unit_norm: i64,
    /// smallest totally positive unit > 1
    pub tp_unit: (BigInt, BigInt),
    pub narrow_certified: bool,
    pub cert_prime_bound: i64,
}

fn is_squarefree(d: i64) -> bool {
    if d % 4 == 0 {
        return false;
    }
    let mut n = d;
    let mut p = 2i64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

pub fn is_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    let mut p = 2i64;
    while p * p <= n {
        if n % p == 0 {
            return false;
        }
        p += 1;
    }
    true
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        if a < 0 {
            return (-a, -1, 0);
        }
        return (a, 1, 0);
    }
    let (g, s, t) = ext_gcd(b, a.rem_euclid(b));
    // g = s*b + t*(a - floor(a/b)*b)
    (g, t, s - a.div_euclid(b) * t)
}

fn modpow(mut base: u64, mut exp: u64, modulus: u64) -> u64 {
    let mut acc: u64 = 1 % modulus;
    base %= modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = ((acc as u128 * base as u128) % modulus as u128) as u64;
        }
        base = ((base as u128 * base as u128) % modulus as u128) as u64;
        exp >>= 1;
    }
    acc
}

/// Sign of a + b*sqrt(d): -1, 0, or +1.
pub fn sign_a_plus_b_sqrt(a: i128, b: i128, d: i64) -> i32 {
    let d = d as i128;
    if a >= 0 && b >= 0 {
        if a == 0 && b == 0 {
            return 0;
        }
        return 1;
    }
    if a <= 0 && b <= 0 {
        return -1;
    }
    // opposite signs: compare a^2 with b^2 d
    let lhs = a.checked_mul(a).expect("sign comparison overflow");
    let rhs = b
        .checked_mul(b)
        .and_then(|v| v.checked_mul(d))
        .expect("sign comparison overflow");
    let big = if a > 0 {
        // a > 0, b < 0: positive iff a^2 > b^2 d
        lhs - rhs
    } else {
        rhs - lhs
    };
    if big > 0 {
        1
    } else if big < 0 {
        -1
    } else {
        0
    }
}

fn bigint_sign_a_plus_b_sqrt(a: &BigInt, b: &BigInt, d: i64) -> i32 {
    if !a.is_negative() && !b.is_negative() {
        if a.is_zero() && b.is_zero() {
            return 0;
        }
        return 1;
    }
    if !a.is_positive() && !b.is_positive() {
        return -1;
    }
    let diff = a * a - b * b * BigInt::from(d);
    let cmp = if a.is_positive() { diff } else { -diff };
    match cmp.sign() {
        num_bigint::Sign::Plus => 1,
        num_bigint::Sign::Minus => -1,
        num_bigint::Sign::NoSign => 0,
    }
}

// Element helpers on integer coordinates (x, y) meaning x + y*omega.

pub fn elt_mul(ctx: &FieldContext, a: (i128, i128), b: (i128, i128)) -> (i128, i128) {
    let (x1, y1) = a;
    let (x2, y2) = b;
    let m = ctx.mul_const as i128;
    match ctx.kind {
        OmegaKind::HalfPlusRoot => (x1 * x2 + m * y1 * y2, x1 * y2 + x2 * y1 + y1 * y2),
        OmegaKind::Root => (x1 * x2 + m * y1 * y2, x1 * y2 + x2 * y1),
    }
}

pub fn elt_conj(ctx: &FieldContext, a: (i128, i128)) -> (i128, i128) {
    let (x, y) = a;
    match ctx.kind {
        OmegaKind::HalfPlusRoot => (x + y, -y),
        OmegaKind::Root => (x, -y),
    }
}

pub fn elt_norm(ctx: &FieldContext, a: (i128, i128)) -> i128 {
    let (x, y) = a;
    let m = ctx.mul_const as i128;
    match ctx.kind {
        OmegaKind::HalfPlusRoot => x * x + x * y - m * y * y,
        OmegaKind::Root => x * x - m * y * y,
    }
}

pub fn elt_trace(ctx: &FieldContext, a: (i128, i128)) -> i128 {
    let (x, y) = a;
    match ctx.kind {
        OmegaKind::HalfPlusRoot => 2 * x + y,
        OmegaKind::Root => 2 * x,
    }
}

/// Sign of the first (positive square root) embedding.
pub fn sign_embed1(ctx: &FieldContext, a: (i128, i128)) -> i32 {
    let (x, y) = a;
    match ctx.kind {
        OmegaKind::HalfPlusRoot => sign_a_plus_b_sqrt(2 * x + y, y, ctx.d),
        OmegaKind::Root => sign_a_plus_b_sqrt(x, y, ctx.d),
    }
}

/// Sign of the second (negative square root) embedding.
pub fn sign_embed2(ctx: &FieldContext, a: (i128, i128)) -> i32 {
    let (x, y) = a;
    match ctx.kind {
        OmegaKind::HalfPlusRoot => sign_a_plus_b_sqrt(2 * x + y, -y, ctx.d),
        OmegaKind::Root => sign_a_plus_b_sqrt(x, -y, ctx.d),
    }
}

pub fn is_totally_positive(ctx: &FieldContext, a: (i128, i128)) -> bool {
    sign_embed1(ctx, a) > 0 && sign_embed2(ctx, a) > 0
}

impl FieldContext {
    /// Build the context for Q(sqrt(d)), computing the fundamental unit.
    pub fn new(d: i64) -> Result<FieldContext> {
        if d < 2 || !is_squarefree(d) {
            return Err(Error::InvalidField(d));
        }
        let (kind, disc, mul_const) = if d % 4 == 1 {
            (OmegaKind::HalfPlusRoot, d, (d - 1) / 4)
        } else {
            (OmegaKind::Root, 4 * d, d)
        };
        let sqrt_floor = d.sqrt();
        let mut ctx = FieldContext {
            d,
            disc,
            kind,
            mul_const,
            sqrt_floor,
            fundamental_unit: (BigInt::zero(), BigInt::zero()),
            unit_norm: 0,
            tp_unit: (BigInt::zero(), BigInt::zero()),
            narrow_certified: false,
            cert_prime_bound: 0,
        };
        let eps = fundamental_unit_cf(&ctx)?;
        let nrm = ctx.big_norm(&eps);
        let unit_norm = if nrm == BigInt::one() {
            1
        } else if nrm == -BigInt::one() {
            -1
        } else {
            return Err(Error::Internal(format!(
                "continued fraction produced a non-unit of norm {nrm}"
            )));
        };
        let tp_unit = if unit_norm == 1 {
            eps.clone()
        } else {
            ctx.big_mul(&eps, &eps)
        };
        ctx.fundamental_unit = eps;
        ctx.unit_norm = unit_norm;
        ctx.tp_unit = tp_unit;
        Ok(ctx)
    }

    /// Like `new`, additionally certifying that every prime ideal of norm up
    /// to `prime_bound` has a totally positive generator. Requires d = 1 mod 4
    /// and a fundamental unit of norm -1, so that the narrow and wide class
    /// groups agree.
    pub fn certified(d: i64, prime_bound: i64) -> Result<FieldContext> {
        let mut ctx = FieldContext::new(d)?;
        if ctx.kind != OmegaKind::HalfPlusRoot || ctx.unit_norm != -1 {
            return Err(Error::NotCertified(d));
        }
        let mut p = 2i64;
        while p <= prime_bound {
            if is_prime(p) && splitting_type(&ctx, p) != SplitType::Inert {
                for prime in primes_above(&ctx, p)? {
                    tp_generator(&ctx, &prime)?;
                }
            }
            p += 1;
        }
        ctx.narrow_certified = true;
        ctx.cert_prime_bound = prime_bound;
        Ok(ctx)
    }

    pub fn big_mul(&self, a: &(BigInt, BigInt), b: &(BigInt, BigInt)) -> (BigInt, BigInt) {
        let m = BigInt::from(self.mul_const);
        match self.kind {
            OmegaKind::HalfPlusRoot => (
                &a.0 * &b.0 + &m * &a.1 * &b.1,
                &a.0 * &b.1 + &a.1 * &b.0 + &a.1 * &b.1,
            ),
            OmegaKind::Root => (&a.0 * &b.0 + &m * &a.1 * &b.1, &a.0 * &b.1 + &a.1 * &b.0),
        }
    }

    pub fn big_conj(&self, a: &(BigInt, BigInt)) -> (BigInt, BigInt) {
        match self.kind {
            OmegaKind::HalfPlusRoot => (&a.0 + &a.1, -&a.1),
            OmegaKind::Root => (a.0.clone(), -&a.1),
        }
    }

    pub fn big_norm(&self, a: &(BigInt, BigInt)) -> BigInt {
        let m = BigInt::from(self.mul_const);
        match self.kind {
            OmegaKind::HalfPlusRoot => &a.0 * &a.0 + &a.0 * &a.1 - m * &a.1 * &a.1,
            OmegaKind::Root => &a.0 * &a.0 - m * &a.1 * &a.1,
        }
    }

    /// Sign of the first embedding for BigInt coordinates.
    pub fn big_sign_embed1(&self, a: &(BigInt, BigInt)) -> i32 {
        match self.kind {
            OmegaKind::HalfPlusRoot => {
                bigint_sign_a_plus_b_sqrt(&(2 * &a.0 + &a.1), &a.1, self.d)
            }
            OmegaKind::Root => bigint_sign_a_plus_b_sqrt(&a.0, &a.1, self.d),
        }
    }

    /// First embedding of omega as f64, for approximate range computations.
    pub fn omega1_f64(&self) -> f64 {
        match self.kind {
            OmegaKind::HalfPlusRoot => (1.0 + (self.d as f64).sqrt()) / 2.0,
            OmegaKind::Root => (self.d as f64).sqrt(),
        }
    }

    pub fn omega2_f64(&self) -> f64 {
        match self.kind {
            OmegaKind::HalfPlusRoot => (1.0 - (self.d as f64).sqrt()) / 2.0,
            OmegaKind::Root => -(self.d as f64).sqrt(),
        }
    }

    /// The different ideal.
    pub fn different(&self) -> IdealHNF {
        let gen = match self.kind {
            // sqrt(d) = 2*omega - 1
            OmegaKind::HalfPlusRoot => (-1i128, 2i128),
            // 2*sqrt(d)
            OmegaKind::Root => (0i128, 2i128),
        };
        ideal_from_element(self, gen).expect("different ideal")
    }

    fn fundamental_unit_i128(&self) -> Result<(i128, i128)> {
        let x = self.fundamental_unit.0.to_i128();
        let y = self.fundamental_unit.1.to_i128();
        match (x, y) {
            (Some(x), Some(y)) => Ok((x, y)),
            _ => Err(Error::NotCertified(self.d)),
        }
    }

    fn tp_unit_i128(&self) -> Result<(i128, i128)> {
        let x = self.tp_unit.0.to_i128();
        let y = self.tp_unit.1.to_i128();
        match (x, y) {
            (Some(x), Some(y)) => Ok((x, y)),
            _ => Err(Error::NotCertified(self.d)),
        }
    }

    /// Integer upper bound for the first embedding of the fundamental unit.
    fn unit_upper_i128(&self) -> Result<i128> {
        let (x, y) = self.fundamental_unit_i128()?;
        let s = self.sqrt_floor as i128;
        Ok(match self.kind {
            OmegaKind::HalfPlusRoot => x + (y * (s + 2) + 1).div_euclid(2) + 1,
            OmegaKind::Root => x + y * (s + 1) + 1,
        })
    }
}

/// Fundamental unit by the continued fraction of omega.
fn fundamental_unit_cf(ctx: &FieldContext) -> Result<(BigInt, BigInt)> {
    let d = ctx.d;
    let s = ctx.sqrt_floor;
    let (mut p_st, mut q_st) = match ctx.kind {
        OmegaKind::HalfPlusRoot => (1i64, 2i64),
        OmegaKind::Root => (0i64, 1i64),
    };
    // convergent matrix (p_n, p_{n-1}; q_n, q_{n-1}), starting at the identity
    let mut mat = (
        BigInt::one(),
        BigInt::zero(),
        BigInt::zero(),
        BigInt::one(),
    );
    let mut seen: Vec<((i64, i64), (BigInt, BigInt, BigInt, BigInt))> = Vec::new();
    for _ in 0..100_000 {
        if let Some((_, past)) = seen.iter().find(|(st, _)| *st == (p_st, q_st)) {
            // gamma = M_{j-1} * M_{i-1}^{-1} fixes omega; the unit is
            // C*omega + D from its bottom row
            let det = &past.0 * &past.3 - &past.1 * &past.2;
            let inv = (
                &past.3 * &det,
                -&past.1 * &det,
                -&past.2 * &det,
                &past.0 * &det,
            );
            let c = &mat.2 * &inv.0 + &mat.3 * &inv.2;
            let dd = &mat.2 * &inv.1 + &mat.3 * &inv.3;
            return normalize_unit(ctx, (dd, c));
        }
        seen.push(((p_st, q_st), mat.clone()));
        if q_st <= 0 {
            return Err(Error::Internal(format!(
                "continued fraction state degenerated for d = {d}"
            )));
        }
        let a = (p_st + s).div_euclid(q_st);
        let p_next = a * q_st - p_st;
        let q_next = (d - p_next * p_next) / q_st;
        let ab = BigInt::from(a);
        mat = (
            &mat.0 * &ab + &mat.1,
            mat.0.clone(),
            &mat.2 * &ab + &mat.3,
            mat.2.clone(),
        );
        p_st = p_next;
        q_st = q_next;
    }
    Err(Error::Internal(format!(
        "continued fraction for d = {d} did not cycle"
    )))
}

/// Pick the conjugate/inverse/negation with first embedding > 1.
fn normalize_unit(ctx: &FieldContext, eps: (BigInt, BigInt)) -> Result<(BigInt, BigInt)> {
    let nrm = ctx.big_norm(&eps);
    if !(nrm.clone().abs().is_one()) {
        return Err(Error::Internal(format!(
            "candidate unit has norm {nrm}, expected a unit"
        )));
    }
    let conj = ctx.big_conj(&eps);
    let inv = (&conj.0 * &nrm, &conj.1 * &nrm);
    for cand in [
        eps.clone(),
        (-&eps.0, -&eps.1),
        inv.clone(),
        (-&inv.0, -&inv.1),
    ] {
        // first embedding > 1, i.e. cand - 1 has positive first embedding
        let shifted = (&cand.0 - BigInt::one(), cand.1.clone());
        if ctx.big_sign_embed1(&shifted) > 0 {
            return Ok(cand);
        }
    }
    Err(Error::Internal("no unit candidate exceeds 1".into()))
}

/// Integral ideal a*Z + (b + c*omega)*Z in Hermite normal form:
/// c | a, c | b, 0 <= b < a, and a*c divides N(b + c*omega).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IdealHNF {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl IdealHNF {
    pub fn norm(&self) -> i64 {
        self.a * self.c
    }

    pub fn unit_ideal() -> IdealHNF {
        IdealHNF { a: 1, b: 0, c: 1 }
    }

    pub fn is_unit_ideal(&self) -> bool {
        self.a == 1 && self.c == 1
    }

    pub fn is_valid(&self, ctx: &FieldContext) -> bool {
        if self.a <= 0 || self.c <= 0 || self.b < 0 || self.b >= self.a {
            return false;
        }
        if self.a % self.c != 0 || self.b % self.c != 0 {
            return false;
        }
        let n = elt_norm(ctx, (self.b as i128, self.c as i128));
        n % (self.a as i128 * self.c as i128) == 0
    }
}

impl Ord for IdealHNF {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.norm(), self.a, self.b, self.c).cmp(&(other.norm(), other.a, other.b, other.c))
    }
}

impl PartialOrd for IdealHNF {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Hermite normal form of the Z-lattice spanned by the given vectors.
fn lattice_hnf(ctx: &FieldContext, gens: &[(i128, i128)]) -> Result<IdealHNF> {
    let mut xs: Vec<i128> = Vec::new();
    let mut cur: Option<(i128, i128)> = None;
    for &(x, y) in gens {
        if x == 0 && y == 0 {
            continue;
        }
        if y == 0 {
            xs.push(x.abs());
            continue;
        }
        match cur {
            None => {
                cur = if y > 0 { Some((x, y)) } else { Some((-x, -y)) };
            }
            Some((bx, cy)) => {
                let (g, s, t) = ext_gcd(cy, y);
                let nb = s * bx + t * x;
                xs.push(((y / g) * bx - (cy / g) * x).abs());
                cur = Some((nb, g));
            }
        }
    }
    let (bx, c) = cur.ok_or(Error::ZeroIdeal)?;
    let a = xs.iter().fold(0i128, |acc, &v| {
        let (g, _, _) = ext_gcd(acc, v);
        g
    });
    if a == 0 {
        return Err(Error::Internal("lattice is not of full rank".into()));
    }
    let b = bx.rem_euclid(a);
    let (a, b, c) = (
        i64::try_from(a).map_err(|_| Error::Internal("ideal HNF overflow".into()))?,
        i64::try_from(b).map_err(|_| Error::Internal("ideal HNF overflow".into()))?,
        i64::try_from(c).map_err(|_| Error::Internal("ideal HNF overflow".into()))?,
    );
    let ideal = IdealHNF { a, b, c };
    debug_assert!(ideal.is_valid(ctx), "HNF produced a non-ideal {ideal:?}");
    Ok(ideal)
}

fn omega_shift(ctx: &FieldContext, v: (i128, i128)) -> (i128, i128) {
    // omega * (x + y*omega)
    let (x, y) = v;
    let m = ctx.mul_const as i128;
    match ctx.kind {
        OmegaKind::HalfPlusRoot => (m * y, x + y),
        OmegaKind::Root => (m * y, x),
    }
}

/// Principal ideal generated by x + y*omega.
pub fn ideal_from_element(ctx: &FieldContext, gen: (i128, i128)) -> Result<IdealHNF> {
    if gen == (0, 0) {
        return Err(Error::ZeroIdeal);
    }
    lattice_hnf(ctx, &[gen, omega_shift(ctx, gen)])
}

pub fn ideal_mul(ctx: &FieldContext, lhs: &IdealHNF, rhs: &IdealHNF) -> IdealHNF {
    let e = [
        (lhs.a as i128, 0i128),
        (lhs.b as i128, lhs.c as i128),
    ];
    let f = [
        (rhs.a as i128, 0i128),
        (rhs.b as i128, rhs.c as i128),
    ];
    let mut gens = Vec::with_capacity(8);
    for &u in &e {
        for &v in &f {
            let p = elt_mul(ctx, u, v);
            gens.push(p);
            gens.push(omega_shift(ctx, p));
        }
    }
    lattice_hnf(ctx, &gens).expect("product of nonzero ideals")
}

pub fn ideal_pow(ctx: &FieldContext, base: &IdealHNF, exp: u32) -> IdealHNF {
    let mut acc = IdealHNF::unit_ideal();
    for _ in 0..exp {
        acc = ideal_mul(ctx, &acc, base);
    }
    acc
}

pub fn contains_element(ideal: &IdealHNF, x: i128, y: i128) -> bool {
    let (a, b, c) = (ideal.a as i128, ideal.b as i128, ideal.c as i128);
    if y.rem_euclid(c) != 0 {
        return false;
    }
    (x - b * (y / c)).rem_euclid(a) == 0
}

pub fn contains_ideal(outer: &IdealHNF, inner: &IdealHNF) -> bool {
    contains_element(outer, inner.a as i128, 0) && contains_element(outer, inner.b as i128, inner.c as i128)
}

/// Ideal sum (greatest common divisor).
pub fn ideal_sum(ctx: &FieldContext, lhs: &IdealHNF, rhs: &IdealHNF) -> IdealHNF {
    lattice_hnf(
        ctx,
        &[
            (lhs.a as i128, 0),
            (lhs.b as i128, lhs.c as i128),
            (rhs.a as i128, 0),
            (rhs.b as i128, rhs.c as i128),
        ],
    )
    .expect("sum of nonzero ideals")
}

pub fn is_coprime(ctx: &FieldContext, lhs: &IdealHNF, rhs: &IdealHNF) -> bool {
    ideal_sum(ctx, lhs, rhs).is_unit_ideal()
}

/// Splitting behaviour of a rational prime, decided by the Kronecker symbol
/// of the discriminant. Deliberately independent of `primes_above`.
pub fn splitting_type(ctx: &FieldContext, p: i64) -> SplitType {
    if ctx.disc % p == 0 {
        return SplitType::Ramified;
    }
    if p == 2 {
        // odd discriminant here, so disc mod 8 is 1 or 5
        return if ctx.disc.rem_euclid(8) == 1 {
            SplitType::Split
        } else {
            SplitType::Inert
        };
    }
    let a = ctx.disc.rem_euclid(p) as u64;
    let ls = modpow(a, ((p - 1) / 2) as u64, p as u64);
    if ls == 1 {
        SplitType::Split
    } else {
        SplitType::Inert
    }
}

/// Distinct prime ideals above p, found from roots of the minimal polynomial
/// of omega mod p.
pub fn primes_above(ctx: &FieldContext, p: i64) -> Result<Vec<IdealHNF>> {
    if p < 2 || !is_prime(p) {
        return Err(Error::Internal(format!("{p} is not prime")));
    }
    let m = ctx.mul_const as i128;
    let pp = p as i128;
    let mut roots = Vec::new();
    for r in 0..pp {
        let val = match ctx.kind {
            OmegaKind::HalfPlusRoot => r * r - r - m,
            OmegaKind::Root => r * r - m,
        };
        if val.rem_euclid(pp) == 0 {
            roots.push(r);
        }
    }
    if roots.is_empty() {
        return Ok(vec![IdealHNF { a: p, b: 0, c: p }]);
    }
    let mut out = Vec::new();
    for r in roots {
        let e1 = (pp, 0i128);
        let e2 = (-r, 1i128);
        let prime = lattice_hnf(
            ctx,
            &[e1, omega_shift(ctx, e1), e2, omega_shift(ctx, e2)],
        )?;
        if !out.contains(&prime) {
            out.push(prime);
        }
    }
    out.sort();
    Ok(out)
}

/// A prime ideal together with the rational prime below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeIdeal {
    pub ideal: IdealHNF,
    pub p: i64,
    pub residue_degree: u32,
    pub ramified: bool,
}

/// Prime ideals above p with residue data, sorted by ideal key.
pub fn prime_ideals_above(ctx: &FieldContext, p: i64) -> Result<Vec<PrimeIdeal>> {
    let ramified = splitting_type(ctx, p) == SplitType::Ramified;
    Ok(primes_above(ctx, p)?
        .into_iter()
        .map(|ideal| PrimeIdeal {
            ideal,
            p,
            residue_degree: if ideal.norm() == p { 1 } else { 2 },
            ramified,
        })
        .collect())
}

/// All prime ideals of norm at most `bound`, sorted by ideal key.
pub fn prime_ideals_up_to_norm(ctx: &FieldContext, bound: i64) -> Result<Vec<PrimeIdeal>> {
    let mut out = Vec::new();
    let mut p = 2i64;
    while p <= bound {
        if is_prime(p) {
            for pr in prime_ideals_above(ctx, p)? {
                if pr.ideal.norm() <= bound {
                    out.push(pr);
                }
            }
        }
        p += 1;
    }
    out.sort_by_key(|pr| pr.ideal);
    Ok(out)
}

/// Factor an integral ideal into prime ideal powers, sorted by prime.
pub fn factor_ideal(ctx: &FieldContext, ideal: &IdealHNF) -> Result<Vec<(IdealHNF, u32)>> {
    let mut out = Vec::new();
    let mut n = ideal.norm();
    let mut p = 2i64;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            for prime in primes_above(ctx, p)? {
                let e = ideal_valuation(ctx, ideal, &prime);
                if e > 0 {
                    out.push((prime, e));
                }
            }
        }
        p += 1;
    }
    if n > 1 {
        for prime in primes_above(ctx, n)? {
            let e = ideal_valuation(ctx, ideal, &prime);
            if e > 0 {
                out.push((prime, e));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Valuation of an ideal at a prime ideal, by containment in prime powers.
pub fn ideal_valuation(ctx: &FieldContext, ideal: &IdealHNF, prime: &IdealHNF) -> u32 {
    let mut e = 0u32;
    let mut power = *prime;
    while contains_ideal(&power, ideal) {
        e += 1;
        power = ideal_mul(ctx, &power, prime);
    }
    e
}

/// All integral ideals dividing the given one, sorted.
pub fn divisors(ctx: &FieldContext, ideal: &IdealHNF) -> Result<Vec<IdealHNF>> {
    let factors = factor_ideal(ctx, ideal)?;
    let mut out = vec![IdealHNF::unit_ideal()];
    for (prime, e) in factors {
        let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
        for d in &out {
            let mut acc = *d;
            next.push(acc);
            for _ in 0..e {
                acc = ideal_mul(ctx, &acc, &prime);
                next.push(acc);
            }
        }
        out = next;
    }
    out.sort();
    Ok(out)
}

/// All integral ideals of norm at most `bound`, sorted.
pub fn ideals_up_to_norm(ctx: &FieldContext, bound: i64) -> Vec<IdealHNF> {
    let mut out = Vec::new();
    let m = ctx.mul_const as i128;
    for n in 1..=bound {
        let mut c = 1i64;
        while c * c <= n {
            if n % (c * c) == 0 {
                let ap = n / (c * c);
                for bp in 0..ap {
                    let bb = bp as i128;
                    let val = match ctx.kind {
                        OmegaKind::HalfPlusRoot => bb * bb + bb - m,
                        OmegaKind::Root => bb * bb - m,
                    };
                    if val.rem_euclid(ap as i128) == 0 {
                        out.push(IdealHNF {
                            a: n / c,
                            b: c * bp,
                            c,
                        });
                    }
                }
            }
            c += 1;
        }
    }
    out.sort();
    out
}

/// Totally positive generator of an ideal, as the canonical orbit
/// representative g with 1 <= g/g' < u^2 for the totally positive
/// fundamental unit u. Errors if no totally positive generator exists.
pub fn tp_generator(ctx: &FieldContext, ideal: &IdealHNF) -> Result<(i64, i64)> {
    let n = ideal.norm() as i128;
    let eps = ctx.fundamental_unit_i128()?;
    let eps_up = ctx.unit_upper_i128()?;
    let window = (n * eps_up).sqrt() + 1;
    let om1 = ctx.omega1_f64();
    let om2 = ctx.omega2_f64();
    let sw = window as f64;
    let y_max = (2 * window) / (ctx.sqrt_floor as i128) + 2;

    let mut reps: BTreeSet<(i64, i64)> = BTreeSet::new();
    let mut saw_negative_norm = false;
    for y in -y_max..=y_max {
        let yf = y as f64;
        let lo = (-sw - yf * om1).max(-sw - yf * om2);
        let hi = (sw - yf * om1).min(sw - yf * om2);
        if lo > hi + 4.0 {
            continue;
        }
        let x_lo = lo.floor() as i128 - 2;
        let x_hi = hi.ceil() as i128 + 2;
        for x in x_lo..=x_hi {
            let nrm = elt_norm(ctx, (x, y));
            if nrm.abs() != n {
                continue;
            }
            if ideal_from_element(ctx, (x, y))? != *ideal {
                continue;
            }
            let cand = if nrm == n {
                if sign_embed1(ctx, (x, y)) > 0 {
                    (x, y)
                } else {
                    (-x, -y)
                }
            } else {
                saw_negative_norm = true;
                if ctx.unit_norm != -1 {
                    continue;
                }
                let t = elt_mul(ctx, (x, y), eps);
                if sign_embed1(ctx, t) > 0 {
                    t
                } else {
                    (-t.0, -t.1)
                }
            };
            debug_assert!(is_totally_positive(ctx, cand));
            let rep = canonical_rep(ctx, cand)?;
            let rep = (
                i64::try_from(rep.0).map_err(|_| Error::Internal("generator overflow".into()))?,
                i64::try_from(rep.1).map_err(|_| Error::Internal("generator overflow".into()))?,
            );
            reps.insert(rep);
        }
    }
    let _ = saw_negative_norm;
    match reps.len() {
        0 => Err(Error::NotNarrowClassOne(ideal.norm())),
        1 => Ok(reps.into_iter().next().unwrap()),
        _ => Err(Error::Internal(format!(
            "canonical representative not unique for {ideal:?}"
        ))),
    }
}

/// Canonical representative of the unit orbit of a totally positive element:
/// the associate g with 1 <= g/g' < u^2.
pub fn canonical_rep(ctx: &FieldContext, elt: (i128, i128)) -> Result<(i128, i128)> {
    if !is_totally_positive(ctx, elt) {
        return Err(Error::NotTotallyPositive);
    }
    let u = ctx.tp_unit_i128()?;
    let u_inv = elt_conj(ctx, u);
    let u_sq = elt_mul(ctx, u, u);
    let mut g = elt;
    // g/g' >= 1 iff y >= 0, since g - g' = y*sqrt(disc-part) and both are > 0
    for _ in 0..256 {
        if g.1 >= 0 {
            break;
        }
        g = elt_mul(ctx, g, u);
    }
    for _ in 0..256 {
        // g/g' < u^2 iff u^2 * g' - g has positive first embedding
        let diff = {
            let t = elt_mul(ctx, u_sq, elt_conj(ctx, g));
            (t.0 - g.0, t.1 - g.1)
        };
        if sign_embed1(ctx, diff) > 0 {
            return Ok(g);
        }
        g = elt_mul(ctx, g, u_inv);
    }
    Err(Error::Internal("canonical representative loop diverged".into()))
}
