//! Fourier expansions of Hilbert modular forms, indexed by integral ideals.
//!
//! A form of even weight k is stored as its constant term together with the
//! coefficients c(m) for every nonzero ideal m of norm at most `bound`. The
//! multiplication law enumerates totally positive decompositions mu1 + mu2 of
//! a totally positive generator, which is exact and closed under truncation:
//! both parts of a decomposition have strictly smaller embeddings, hence
//! strictly smaller norm.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::linalg::{rref, FieldScalar};
use crate::quadfield::{
    ideal_from_element, ideals_up_to_norm, sign_embed1, sign_embed2, tp_generator, FieldContext,
    IdealHNF,
};
use crate::specialvalues::{eis_coefficient, zeta_special};

/// Element u + v*sqrt(m) of the coefficient field Q(sqrt(m)); m = 1 encodes a
/// plain rational (with v = 0).
#[derive(Debug, Clone)]
pub struct CoeffNumber {
    pub u: BigRational,
    pub v: BigRational,
    pub m: i64,
}

impl PartialEq for CoeffNumber {
    fn eq(&self, other: &Self) -> bool {
        self.u == other.u && self.v == other.v && (self.v.is_zero() || self.m == other.m)
    }
}

impl Eq for CoeffNumber {}

fn joined_m(a: &CoeffNumber, b: &CoeffNumber) -> i64 {
    if a.m == b.m {
        a.m
    } else if a.v.is_zero() {
        b.m
    } else if b.v.is_zero() {
        a.m
    } else {
        panic!("coefficient field mismatch: sqrt({}) vs sqrt({})", a.m, b.m);
    }
}

impl CoeffNumber {
    pub fn zero() -> CoeffNumber {
        CoeffNumber {
            u: BigRational::zero(),
            v: BigRational::zero(),
            m: 1,
        }
    }

    pub fn one() -> CoeffNumber {
        CoeffNumber::from_int(1)
    }

    pub fn from_int(n: i64) -> CoeffNumber {
        CoeffNumber::from_ratio(BigRational::from(BigInt::from(n)))
    }

    pub fn from_ratio(u: BigRational) -> CoeffNumber {
        CoeffNumber {
            u,
            v: BigRational::zero(),
            m: 1,
        }
    }

    pub fn new(u: BigRational, v: BigRational, m: i64) -> CoeffNumber {
        CoeffNumber { u, v, m }
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_zero() && self.v.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.v.is_zero()
    }

    pub fn add(&self, other: &CoeffNumber) -> CoeffNumber {
        CoeffNumber {
            u: &self.u + &other.u,
            v: &self.v + &other.v,
            m: joined_m(self, other),
        }
    }

    pub fn sub(&self, other: &CoeffNumber) -> CoeffNumber {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> CoeffNumber {
        CoeffNumber {
            u: -self.u.clone(),
            v: -self.v.clone(),
            m: self.m,
        }
    }

    pub fn mul(&self, other: &CoeffNumber) -> CoeffNumber {
        let m = joined_m(self, other);
        let mq = BigRational::from(BigInt::from(m));
        CoeffNumber {
            u: &self.u * &other.u + (&self.v * &other.v) * &mq,
            v: &self.u * &other.v + &self.v * &other.u,
            m,
        }
    }

    /// Galois conjugate u - v*sqrt(m).
    pub fn conj(&self) -> CoeffNumber {
        CoeffNumber {
            u: self.u.clone(),
            v: -self.v.clone(),
            m: self.m,
        }
    }

    pub fn inv(&self) -> Option<CoeffNumber> {
        let mq = BigRational::from(BigInt::from(self.m));
        let norm = &self.u * &self.u - (&self.v * &self.v) * &mq;
        if norm.is_zero() {
            return None;
        }
        Some(CoeffNumber {
            u: &self.u / &norm,
            v: -(&self.v / &norm),
            m: self.m,
        })
    }
}

impl fmt::Display for CoeffNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.v.is_zero() {
            write!(f, "{}", self.u)
        } else if self.v.is_negative() {
            write!(f, "{}-{}*sqrt({})", self.u, -self.v.clone(), self.m)
        } else {
            write!(f, "{}+{}*sqrt({})", self.u, self.v, self.m)
        }
    }
}

impl FieldScalar for CoeffNumber {
    fn zero_val() -> Self {
        CoeffNumber::zero()
    }

    fn is_zero_val(&self) -> bool {
        self.is_zero()
    }

    fn add_s(&self, other: &Self) -> Self {
        self.add(other)
    }

    fn sub_s(&self, other: &Self) -> Self {
        self.sub(other)
    }

    fn mul_s(&self, other: &Self) -> Self {
        self.mul(other)
    }

    fn inv_s(&self) -> Option<Self> {
        self.inv()
    }
}

/// Truncated Fourier expansion of a Hilbert modular form over Q(sqrt(d)).
#[derive(Debug, Clone)]
pub struct Expansion {
    pub ctx: Arc<FieldContext>,
    pub weight: i64,
    /// m of the coefficient field Q(sqrt(m)); 1 for rational coefficients
    pub coeff_disc: i64,
    pub constant_term: CoeffNumber,
    /// dense: one entry for every ideal of norm at most `bound`
    pub coeffs: BTreeMap<IdealHNF, CoeffNumber>,
    pub bound: i64,
}

impl PartialEq for Expansion {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.d == other.ctx.d
            && self.weight == other.weight
            && self.coeff_disc == other.coeff_disc
            && self.constant_term == other.constant_term
            && self.bound == other.bound
            && self.coeffs == other.coeffs
    }
}

fn join_disc(a: i64, b: i64) -> Result<i64> {
    if a == b {
        Ok(a)
    } else if a == 1 {
        Ok(b)
    } else if b == 1 {
        Ok(a)
    } else {
        Err(Error::CoeffDiscMismatch(a, b))
    }
}

impl Expansion {
    pub fn zero(ctx: &Arc<FieldContext>, weight: i64, coeff_disc: i64, bound: i64) -> Expansion {
        let coeffs = ideals_up_to_norm(ctx, bound)
            .into_iter()
            .map(|id| (id, CoeffNumber::zero()))
            .collect();
        Expansion {
            ctx: Arc::clone(ctx),
            weight,
            coeff_disc,
            constant_term: CoeffNumber::zero(),
            coeffs,
            bound,
        }
    }

    pub fn coefficient(&self, ideal: &IdealHNF) -> Result<&CoeffNumber> {
        self.coeffs.get(ideal).ok_or(Error::BoundTooSmall {
            have: self.bound,
            need: ideal.norm(),
        })
    }

    pub fn truncate(&self, bound: i64) -> Result<Expansion> {
        if bound > self.bound {
            return Err(Error::BoundTooSmall {
                have: self.bound,
                need: bound,
            });
        }
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(id, _)| id.norm() <= bound)
            .map(|(id, c)| (*id, c.clone()))
            .collect();
        Ok(Expansion {
            ctx: Arc::clone(&self.ctx),
            weight: self.weight,
            coeff_disc: self.coeff_disc,
            constant_term: self.constant_term.clone(),
            coeffs,
            bound,
        })
    }

    pub fn is_cuspidal(&self) -> bool {
        self.constant_term.is_zero()
    }
}

/// Eisenstein series E_k: constant term zeta_F(1-k)/4, and c(m) the sum of
/// N(r)^(k-1) over divisors r of m.
pub fn eisenstein(ctx: &Arc<FieldContext>, k: i64, bound: i64) -> Result<Expansion> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::OddWeight(k));
    }
    if bound < 1 {
        return Err(Error::BoundTooSmall { have: bound, need: 1 });
    }
    let constant = zeta_special(ctx, k)? / BigRational::from(BigInt::from(4));
    let mut coeffs = BTreeMap::new();
    for ideal in ideals_up_to_norm(ctx, bound) {
        let c = eis_coefficient(ctx, &ideal, k)?;
        coeffs.insert(ideal, CoeffNumber::from_ratio(BigRational::from(c)));
    }
    Ok(Expansion {
        ctx: Arc::clone(ctx),
        weight: k,
        coeff_disc: 1,
        constant_term: CoeffNumber::from_ratio(constant),
        coeffs,
        bound,
    })
}

/// All ordered pairs (mu1, mu2) of totally positive integers with
/// mu1 + mu2 = mu. Both parts have strictly smaller embeddings than mu.
pub fn decompositions(
    ctx: &FieldContext,
    mu: (i128, i128),
) -> Result<Vec<((i128, i128), (i128, i128))>> {
    if sign_embed1(ctx, mu) <= 0 || sign_embed2(ctx, mu) <= 0 {
        return Err(Error::NotTotallyPositive);
    }
    let om1 = ctx.omega1_f64();
    let om2 = ctx.omega2_f64();
    let s1 = mu.0 as f64 + mu.1 as f64 * om1;
    let s2 = mu.0 as f64 + mu.1 as f64 * om2;
    let gap = om1 - om2;
    let y_lo = (-s2 / gap).floor() as i128 - 2;
    let y_hi = (s1 / gap).ceil() as i128 + 2;
    let mut out = Vec::new();
    for y in y_lo..=y_hi {
        let yf = y as f64;
        let x_lo = (-yf * om1).max(-yf * om2).floor() as i128 - 2;
        let x_hi = (s1 - yf * om1).min(s2 - yf * om2).ceil() as i128 + 2;
        for x in x_lo..=x_hi {
            let part = (x, y);
            let rest = (mu.0 - x, mu.1 - y);
            if sign_embed1(ctx, part) > 0
                && sign_embed2(ctx, part) > 0
                && sign_embed1(ctx, rest) > 0
                && sign_embed2(ctx, rest) > 0
            {
                debug_assert!(
                    crate::quadfield::elt_norm(ctx, part) < crate::quadfield::elt_norm(ctx, mu)
                        && crate::quadfield::elt_norm(ctx, rest)
                            < crate::quadfield::elt_norm(ctx, mu)
                );
                out.push((part, rest));
            }
        }
    }
    Ok(out)
}

/// Multiply two expansions; the result is truncated to the smaller bound.
pub fn product(f: &Expansion, h: &Expansion) -> Result<Expansion> {
    if f.ctx.d != h.ctx.d {
        return Err(Error::ContextMismatch(f.ctx.d, h.ctx.d));
    }
    let coeff_disc = join_disc(f.coeff_disc, h.coeff_disc)?;
    let bound = f.bound.min(h.bound);
    let ctx = &f.ctx;
    let mut coeffs = BTreeMap::new();
    for ideal in ideals_up_to_norm(ctx, bound) {
        let mu = tp_generator(ctx, &ideal)?;
        let mu = (mu.0 as i128, mu.1 as i128);
        let mut c = f
            .constant_term
            .mul(h.coefficient(&ideal)?)
            .add(&f.coefficient(&ideal)?.mul(&h.constant_term));
        for (p1, p2) in decompositions(ctx, mu)? {
            let i1 = ideal_from_element(ctx, p1)?;
            let i2 = ideal_from_element(ctx, p2)?;
            c = c.add(&f.coefficient(&i1)?.mul(h.coefficient(&i2)?));
        }
        coeffs.insert(ideal, c);
    }
    Ok(Expansion {
        ctx: Arc::clone(ctx),
        weight: f.weight + h.weight,
        coeff_disc,
        constant_term: f.constant_term.mul(&h.constant_term),
        coeffs,
        bound,
    })
}

/// Add two expansions of the same weight; truncates to the smaller bound.
pub fn add(f: &Expansion, h: &Expansion) -> Result<Expansion> {
    if f.ctx.d != h.ctx.d {
        return Err(Error::ContextMismatch(f.ctx.d, h.ctx.d));
    }
    if f.weight != h.weight {
        return Err(Error::WeightMismatch(f.weight, h.weight));
    }
    let coeff_disc = join_disc(f.coeff_disc, h.coeff_disc)?;
    let bound = f.bound.min(h.bound);
    let mut coeffs = BTreeMap::new();
    for ideal in ideals_up_to_norm(&f.ctx, bound) {
        let c = f.coefficient(&ideal)?.add(h.coefficient(&ideal)?);
        coeffs.insert(ideal, c);
    }
    Ok(Expansion {
        ctx: Arc::clone(&f.ctx),
        weight: f.weight,
        coeff_disc,
        constant_term: f.constant_term.add(&h.constant_term),
        coeffs,
        bound,
    })
}

/// Scale an expansion by a coefficient field element.
pub fn scale(f: &Expansion, s: &CoeffNumber) -> Result<Expansion> {
    let coeff_disc = if s.is_rational() {
        f.coeff_disc
    } else {
        join_disc(f.coeff_disc, s.m)?
    };
    let coeffs = f
        .coeffs
        .iter()
        .map(|(id, c)| (*id, c.mul(s)))
        .collect();
    Ok(Expansion {
        ctx: Arc::clone(&f.ctx),
        weight: f.weight,
        coeff_disc,
        constant_term: f.constant_term.mul(s),
        coeffs,
        bound: f.bound,
    })
}

/// Monomials in the generators of weights 2, 6, 10 spanning the given weight,
/// for d = 5 and even weight below 20. Linear independence is certified by a
/// rank computation on the stored coefficients.
pub fn monomial_basis(ctx: &Arc<FieldContext>, k: i64, bound: i64) -> Result<Vec<Expansion>> {
    if ctx.d != 5 {
        return Err(Error::Inconclusive(format!(
            "monomial basis is only available for d = 5, got d = {}",
            ctx.d
        )));
    }
    if k < 2 || k % 2 != 0 {
        return Err(Error::OddWeight(k));
    }
    if k >= 20 {
        return Err(Error::Inconclusive(format!(
            "generators of weights 2, 6, 10 only span freely below weight 20, got {k}"
        )));
    }
    let e2 = eisenstein(ctx, 2, bound)?;
    let e6 = eisenstein(ctx, 6, bound)?;
    let e10 = eisenstein(ctx, 10, bound)?;
    let mut exps = Vec::new();
    for c in 0..=(k / 10) {
        for b in 0..=((k - 10 * c) / 6) {
            let rem = k - 10 * c - 6 * b;
            if rem % 2 == 0 {
                exps.push(((rem / 2) as u32, b as u32, c as u32));
            }
        }
    }
    let mut basis = Vec::with_capacity(exps.len());
    for (a, b, c) in exps {
        let mut f: Option<Expansion> = None;
        for (gen, e) in [(&e2, a), (&e6, b), (&e10, c)] {
            for _ in 0..e {
                f = Some(match f {
                    Some(g) => product(&g, gen)?,
                    None => gen.clone(),
                });
            }
        }
        basis.push(f.expect("weight is positive, so some exponent is positive"));
    }
    let mut rows: Vec<Vec<CoeffNumber>> = basis
        .iter()
        .map(|f| {
            let mut row = vec![f.constant_term.clone()];
            row.extend(f.coeffs.values().cloned());
            row
        })
        .collect();
    let n = rows.len();
    if rref(&mut rows).len() != n {
        return Err(Error::BasisRankDeficient(k));
    }
    Ok(basis)
}

/// Echelonized basis of the cuspidal subspace: the kernel of the constant
/// term functional on the span, with leading coefficient 1 at the pivot
/// ideals.
pub fn cusp_subspace(basis: &[Expansion]) -> Result<Vec<Expansion>> {
    let Some(first) = basis.first() else {
        return Ok(Vec::new());
    };
    let ctx = &first.ctx;
    let mut coeff_disc = 1;
    for f in basis {
        if f.ctx.d != ctx.d {
            return Err(Error::ContextMismatch(ctx.d, f.ctx.d));
        }
        if f.weight != first.weight {
            return Err(Error::WeightMismatch(first.weight, f.weight));
        }
        if f.bound != first.bound {
            return Err(Error::BoundTooSmall {
                have: f.bound.min(first.bound),
                need: f.bound.max(first.bound),
            });
        }
        coeff_disc = join_disc(coeff_disc, f.coeff_disc)?;
    }
    let kernel: Vec<Expansion> = match basis.iter().position(|f| !f.constant_term.is_zero()) {
        None => basis.to_vec(),
        Some(j) => {
            let pivot = &basis[j];
            let inv = pivot.constant_term.inv().expect("nonzero by choice of j");
            let mut out = Vec::with_capacity(basis.len() - 1);
            for (i, f) in basis.iter().enumerate() {
                if i == j {
                    continue;
                }
                let ratio = f.constant_term.mul(&inv).neg();
                out.push(add(f, &scale(pivot, &ratio)?)?);
            }
            out
        }
    };
    if kernel.is_empty() {
        return Ok(Vec::new());
    }
    let ideals = ideals_up_to_norm(ctx, first.bound);
    let mut rows: Vec<Vec<CoeffNumber>> = kernel
        .iter()
        .map(|f| ideals.iter().map(|id| f.coeffs[id].clone()).collect())
        .collect();
    let pivots = rref(&mut rows);
    let mut out = Vec::with_capacity(pivots.len());
    for row in rows.into_iter().take(pivots.len()) {
        let coeffs = ideals.iter().copied().zip(row).collect();
        out.push(Expansion {
            ctx: Arc::clone(ctx),
            weight: first.weight,
            coeff_disc,
            constant_term: CoeffNumber::zero(),
            coeffs,
            bound: first.bound,
        });
    }
    Ok(out)
}

fn ratio_value(r: &BigRational) -> Value {
    json!([r.numer().to_string(), r.denom().to_string()])
}

fn coeff_value(c: &CoeffNumber) -> Value {
    json!([ratio_value(&c.u), ratio_value(&c.v)])
}

fn parse_ratio(v: &Value) -> Result<BigRational> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::Parse("rational must be a [numerator, denominator] pair".into()))?;
    let p: BigInt = arr[0]
        .as_str()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad numerator {}", arr[0])))?;
    let q: BigInt = arr[1]
        .as_str()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad denominator {}", arr[1])))?;
    if !q.is_positive() {
        return Err(Error::Parse(format!("denominator {q} must be positive")));
    }
    let r = BigRational::new(p.clone(), q.clone());
    if *r.numer() != p || *r.denom() != q {
        return Err(Error::Parse(format!("{p}/{q} is not in lowest terms")));
    }
    Ok(r)
}

fn parse_coeff(v: &Value, coeff_disc: i64) -> Result<CoeffNumber> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::Parse("coefficient must be a [u, v] pair".into()))?;
    let u = parse_ratio(&arr[0])?;
    let v = parse_ratio(&arr[1])?;
    if coeff_disc == 1 && !v.is_zero() {
        return Err(Error::Parse(
            "irrational part must vanish when coeff_disc is 1".into(),
        ));
    }
    Ok(CoeffNumber::new(u, v, coeff_disc))
}

fn field_i64(map: &Map<String, Value>, key: &str) -> Result<i64> {
    map.get(key)
        .and_then(Value::as_i64)
        .ok_or_else(|| Error::Parse(format!("missing or non-integer field \"{key}\"")))
}

impl Expansion {
    /// Canonical single-line JSON with alphabetically sorted keys.
    pub fn to_json(&self) -> String {
        let coeffs: Vec<Value> = self
            .coeffs
            .iter()
            .map(|(id, c)| {
                json!({
                    "ideal": [id.norm(), id.a, id.b, id.c],
                    "value": coeff_value(c),
                })
            })
            .collect();
        json!({
            "bound": self.bound,
            "coeff_disc": self.coeff_disc,
            "coeffs": coeffs,
            "constant_term": coeff_value(&self.constant_term),
            "d": self.ctx.d,
            "weight": self.weight,
        })
        .to_string()
    }

    /// Strict inverse of `to_json`: every field validated, the coefficient
    /// list must cover exactly the ideals of norm at most `bound`.
    pub fn from_json(s: &str) -> Result<Expansion> {
        let value: Value =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("invalid json: {e}")))?;
        let map = value
            .as_object()
            .ok_or_else(|| Error::Parse("top level must be an object".into()))?;
        const KEYS: [&str; 6] = ["bound", "coeff_disc", "coeffs", "constant_term", "d", "weight"];
        for key in map.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Parse(format!("unexpected field \"{key}\"")));
            }
        }
        let d = field_i64(map, "d")?;
        let weight = field_i64(map, "weight")?;
        let coeff_disc = field_i64(map, "coeff_disc")?;
        let bound = field_i64(map, "bound")?;
        if weight < 2 || weight % 2 != 0 {
            return Err(Error::OddWeight(weight));
        }
        if coeff_disc < 1 {
            return Err(Error::Parse(format!("coeff_disc {coeff_disc} must be >= 1")));
        }
        if bound < 1 {
            return Err(Error::BoundTooSmall { have: bound, need: 1 });
        }
        let ctx = Arc::new(FieldContext::certified(d, 50)?);
        let constant_term = parse_coeff(
            map.get("constant_term")
                .ok_or_else(|| Error::Parse("missing field \"constant_term\"".into()))?,
            coeff_disc,
        )?;
        let entries = map
            .get("coeffs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing or non-array field \"coeffs\"".into()))?;
        let mut coeffs = BTreeMap::new();
        for entry in entries {
            let obj = entry
                .as_object()
                .ok_or_else(|| Error::Parse("coefficient entry must be an object".into()))?;
            if obj.len() != 2 {
                return Err(Error::Parse("coefficient entry must have exactly the fields \"ideal\" and \"value\"".into()));
            }
            let quad = obj
                .get("ideal")
                .and_then(Value::as_array)
                .filter(|a| a.len() == 4)
                .ok_or_else(|| Error::Parse("ideal must be a [norm, a, b, c] quadruple".into()))?;
            let nums: Vec<i64> = quad
                .iter()
                .map(|x| x.as_i64())
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Parse("ideal entries must be integers".into()))?;
            let ideal = IdealHNF {
                a: nums[1],
                b: nums[2],
                c: nums[3],
            };
            if !ideal.is_valid(&ctx) || ideal.norm() != nums[0] {
                return Err(Error::Parse(format!(
                    "[{}, {}, {}, {}] is not a valid ideal in hermite normal form",
                    nums[0], nums[1], nums[2], nums[3]
                )));
            }
            if ideal.norm() > bound {
                return Err(Error::Parse(format!(
                    "ideal of norm {} exceeds bound {bound}",
                    ideal.norm()
                )));
            }
            let c = parse_coeff(
                obj.get("value")
                    .ok_or_else(|| Error::Parse("coefficient entry missing \"value\"".into()))?,
                coeff_disc,
            )?;
            if coeffs.insert(ideal, c).is_some() {
                return Err(Error::Parse(format!(
                    "duplicate ideal of norm {}",
                    ideal.norm()
                )));
            }
        }
        let expected = ideals_up_to_norm(&ctx, bound);
        if coeffs.len() != expected.len() {
            return Err(Error::Parse(format!(
                "expected {} coefficients up to norm {bound}, got {}",
                expected.len(),
                coeffs.len()
            )));
        }
        Ok(Expansion {
            ctx,
            weight,
            coeff_disc,
            constant_term,
            coeffs,
            bound,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    fn ratio(s: &str) -> BigRational {
        BigRational::from_str(s).unwrap()
    }

    fn ctx5() -> Arc<FieldContext> {
        Arc::new(FieldContext::certified(5, 50).unwrap())
    }

    fn ideal_of(ctx: &FieldContext, gen: (i128, i128)) -> IdealHNF {
        ideal_from_element(ctx, gen).unwrap()
    }

    fn rc(f: &Expansion, ideal: &IdealHNF) -> BigRational {
        let c = f.coefficient(ideal).unwrap();
        assert!(c.is_rational());
        c.u.clone()
    }

    #[test]
    fn eisenstein_golden_coefficients() {
        let ctx = ctx5();
        let e2 = eisenstein(&ctx, 2, 20).unwrap();
        let two = ideal_of(&ctx, (2, 0));
        let three = ideal_of(&ctx, (3, 0));
        let diff = ctx.different();
        assert_eq!(e2.constant_term, CoeffNumber::from_ratio(ratio("1/120")));
        assert_eq!(rc(&e2, &two), ratio("5"));
        assert_eq!(rc(&e2, &three), ratio("10"));
        assert_eq!(rc(&e2, &diff), ratio("6"));
        let e4 = eisenstein(&ctx, 4, 20).unwrap();
        assert_eq!(e4.constant_term, CoeffNumber::from_ratio(ratio("1/240")));
        assert_eq!(rc(&e4, &two), ratio("65"));
        assert_eq!(rc(&e4, &three), ratio("730"));
        assert_eq!(rc(&e4, &diff), ratio("126"));
    }

    #[test]
    fn decomposition_counts_at_d5() {
        let ctx = ctx5();
        assert_eq!(decompositions(&ctx, (2, 0)).unwrap(), vec![((1, 0), (1, 0))]);
        assert_eq!(decompositions(&ctx, (3, 0)).unwrap().len(), 4);
        assert_eq!(decompositions(&ctx, (4, 0)).unwrap().len(), 7);
        // totally positive generator of the ramified prime above 5
        assert_eq!(decompositions(&ctx, (2, 1)).unwrap().len(), 2);
    }

    #[test]
    fn decomposition_count_is_unit_orbit_invariant() {
        use num_traits::ToPrimitive;
        let ctx = ctx5();
        let u = (
            ctx.tp_unit.0.to_i128().unwrap(),
            ctx.tp_unit.1.to_i128().unwrap(),
        );
        for mu in [(2i128, 0i128), (3, 0), (2, 1)] {
            let scaled = crate::quadfield::elt_mul(&ctx, mu, u);
            assert_eq!(
                decompositions(&ctx, mu).unwrap().len(),
                decompositions(&ctx, scaled).unwrap().len()
            );
        }
    }

    #[test]
    fn square_of_weight_two_eisenstein() {
        let ctx = ctx5();
        let e2 = eisenstein(&ctx, 2, 50).unwrap();
        let e4 = eisenstein(&ctx, 4, 50).unwrap();
        let sq = scale(&product(&e2, &e2).unwrap(), &CoeffNumber::from_int(60)).unwrap();
        assert_eq!(sq, e4);
    }

    fn h6(ctx: &Arc<FieldContext>, bound: i64) -> Expansion {
        let e2 = eisenstein(ctx, 2, bound).unwrap();
        let e4 = eisenstein(ctx, 4, bound).unwrap();
        let e6 = eisenstein(ctx, 6, bound).unwrap();
        let mix = add(
            &scale(&product(&e2, &e4).unwrap(), &CoeffNumber::from_int(5360)).unwrap(),
            &scale(&e6, &CoeffNumber::from_int(-7)).unwrap(),
        )
        .unwrap();
        scale(&mix, &CoeffNumber::from_ratio(ratio("1/60"))).unwrap()
    }

    #[test]
    fn weight_six_cusp_form_goldens() {
        let ctx = ctx5();
        let h6 = h6(&ctx, 20);
        assert!(h6.is_cuspidal());
        assert_eq!(rc(&h6, &ideal_of(&ctx, (2, 0))), ratio("20"));
        assert_eq!(rc(&h6, &ideal_of(&ctx, (3, 0))), ratio("90"));
        assert_eq!(rc(&h6, &ctx.different()), ratio("-90"));
        assert_eq!(rc(&h6, &ideal_of(&ctx, (4, 0))), ratio("-624"));
    }

    #[test]
    fn weight_eight_cusp_form_goldens() {
        let ctx = ctx5();
        let e2 = eisenstein(&ctx, 2, 20).unwrap();
        let h8 = scale(
            &product(&e2, &h6(&ctx, 20)).unwrap(),
            &CoeffNumber::from_int(120),
        )
        .unwrap();
        assert!(h8.is_cuspidal());
        assert_eq!(rc(&h8, &ideal_of(&ctx, (2, 0))), ratio("140"));
        // regression: the norm-9 coefficient picks up the two unit
        // decompositions of 3, giving 3330 rather than -126510
        assert_eq!(rc(&h8, &ideal_of(&ctx, (3, 0))), ratio("3330"));
        assert_eq!(rc(&h8, &ctx.different()), ratio("150"));
        assert_eq!(rc(&h8, &ideal_of(&ctx, (4, 0))), ratio("3216"));
    }

    #[test]
    fn product_identity_between_weight_ten_forms() {
        let ctx = ctx5();
        let e2 = eisenstein(&ctx, 2, 30).unwrap();
        let e4 = eisenstein(&ctx, 4, 30).unwrap();
        let h6 = h6(&ctx, 30);
        let h8 = scale(&product(&e2, &h6).unwrap(), &CoeffNumber::from_int(120)).unwrap();
        let lhs = product(&e2, &h8).unwrap();
        let rhs = scale(&product(&e4, &h6).unwrap(), &CoeffNumber::from_int(2)).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn product_matches_prime_closed_forms() {
        let ctx = ctx5();
        let f = eisenstein(&ctx, 2, 30).unwrap();
        let h = h6(&ctx, 30);
        let p = product(&f, &h).unwrap();
        let one = IdealHNF::unit_ideal();
        // inert prime (2): the single decomposition 1 + 1 contributes
        // c(O, f) c(O, h) on top of the constant cross terms
        let two = ideal_of(&ctx, (2, 0));
        let expect = f
            .constant_term
            .mul(&h.coeffs[&two])
            .add(&f.coeffs[&two].mul(&h.constant_term))
            .add(&f.coeffs[&one].mul(&h.coeffs[&one]));
        assert_eq!(p.coeffs[&two], expect);
        // ramified prime above 5: two unit decompositions
        let diff = ctx.different();
        let expect = f
            .constant_term
            .mul(&h.coeffs[&diff])
            .add(&f.coeffs[&diff].mul(&h.constant_term))
            .add(
                &f.coeffs[&one]
                    .mul(&h.coeffs[&one])
                    .mul(&CoeffNumber::from_int(2)),
            );
        assert_eq!(p.coeffs[&diff], expect);
        // norm 16: three rational decompositions and four unit-pair ones
        let four = ideal_of(&ctx, (4, 0));
        let two_id = &f.coeffs[&two];
        let three_id = ideal_of(&ctx, (3, 0));
        let expect = f
            .constant_term
            .mul(&h.coeffs[&four])
            .add(&f.coeffs[&four].mul(&h.constant_term))
            .add(&f.coeffs[&three_id].mul(&h.coeffs[&one]))
            .add(&two_id.mul(&h.coeffs[&two]))
            .add(&f.coeffs[&one].mul(&h.coeffs[&three_id]))
            .add(
                &f.coeffs[&diff]
                    .mul(&h.coeffs[&one])
                    .mul(&CoeffNumber::from_int(2)),
            )
            .add(
                &f.coeffs[&one]
                    .mul(&h.coeffs[&diff])
                    .mul(&CoeffNumber::from_int(2)),
            );
        assert_eq!(p.coeffs[&four], expect);
    }

    #[test]
    fn primes_above_two_factor_through_constants_when_two_splits_or_ramifies() {
        // split case: no totally positive decompositions for either prime
        // above 2, so the product coefficient is the constant cross term
        let ctx = Arc::new(FieldContext::certified(17, 50).unwrap());
        let f = eisenstein(&ctx, 2, 20).unwrap();
        let p = product(&f, &f).unwrap();
        for prime in crate::quadfield::primes_above(&ctx, 2).unwrap() {
            let mu = tp_generator(&ctx, &prime).unwrap();
            assert!(decompositions(&ctx, (mu.0 as i128, mu.1 as i128))
                .unwrap()
                .is_empty());
            let expect = f
                .constant_term
                .mul(&f.coeffs[&prime])
                .add(&f.coeffs[&prime].mul(&f.constant_term));
            assert_eq!(p.coeffs[&prime], expect);
        }
        // ramified case: 2 + sqrt(2) generates the prime above 2 in Z[sqrt(2)]
        let ctx2 = Arc::new(FieldContext::new(2).unwrap());
        assert!(decompositions(&ctx2, (2, 1)).unwrap().is_empty());
    }

    #[test]
    fn eisenstein_coefficients_are_multiplicative() {
        let ctx = ctx5();
        let e4 = eisenstein(&ctx, 4, 100).unwrap();
        let ideals = ideals_up_to_norm(&ctx, 100);
        for a in &ideals {
            for b in &ideals {
                let prod = crate::quadfield::ideal_mul(&ctx, a, b);
                if prod.norm() > 100 || !crate::quadfield::is_coprime(&ctx, a, b) {
                    continue;
                }
                assert_eq!(e4.coeffs[&prod], e4.coeffs[a].mul(&e4.coeffs[b]));
            }
        }
    }

    #[test]
    fn monomial_basis_dimensions() {
        let ctx = ctx5();
        let expect = [(2, 1), (4, 1), (6, 2), (8, 2), (10, 3), (12, 4)];
        for (k, dim) in expect {
            assert_eq!(monomial_basis(&ctx, k, 40).unwrap().len(), dim, "k = {k}");
        }
        assert!(monomial_basis(&ctx, 20, 40).is_err());
        assert!(monomial_basis(&ctx, 3, 40).is_err());
    }

    #[test]
    fn cusp_subspace_dimensions_and_echelon_shape() {
        let ctx = ctx5();
        let expect = [(2, 0), (4, 0), (6, 1), (8, 1), (10, 2), (12, 3)];
        for (k, dim) in expect {
            let basis = monomial_basis(&ctx, k, 40).unwrap();
            let cusp = cusp_subspace(&basis).unwrap();
            assert_eq!(cusp.len(), dim, "k = {k}");
            for f in &cusp {
                assert!(f.is_cuspidal());
            }
        }
        let cusp10 = cusp_subspace(&monomial_basis(&ctx, 10, 40).unwrap()).unwrap();
        let ideals = ideals_up_to_norm(&ctx, 40);
        // echelon: first form leads with 1 at the first ideal, second is 0
        // there and leads later
        assert_eq!(cusp10[0].coeffs[&ideals[0]], CoeffNumber::one());
        assert!(cusp10[1].coeffs[&ideals[0]].is_zero());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let ctx = ctx5();
        let e2 = eisenstein(&ctx, 2, 20).unwrap();
        let back = Expansion::from_json(&e2.to_json()).unwrap();
        assert_eq!(back, e2);
        let irr = scale(
            &e2,
            &CoeffNumber::new(ratio("1"), ratio("1/3"), 809),
        )
        .unwrap();
        let back = Expansion::from_json(&irr.to_json()).unwrap();
        assert_eq!(back, irr);
    }

    #[test]
    fn json_loader_rejects_malformed_input() {
        let ctx = ctx5();
        let good = eisenstein(&ctx, 2, 11).unwrap().to_json();
        assert!(Expansion::from_json(&good).is_ok());
        let missing = good.replacen("\"weight\":2", "\"weight\":2,\"junk\":0", 1);
        assert!(matches!(Expansion::from_json(&missing), Err(Error::Parse(_))));
        let wrong_norm = good.replacen("[4,2,0,2]", "[5,2,0,2]", 1);
        assert!(matches!(Expansion::from_json(&wrong_norm), Err(Error::Parse(_))));
        let unreduced = good.replacen("[\"5\",\"1\"]", "[\"10\",\"2\"]", 1);
        assert!(matches!(Expansion::from_json(&unreduced), Err(Error::Parse(_))));
        let negative_den = good.replacen("[\"5\",\"1\"]", "[\"-5\",\"-1\"]", 1);
        assert!(matches!(Expansion::from_json(&negative_den), Err(Error::Parse(_))));
        // drop one coefficient entry: the dense completeness check must fire
        let v: serde_json::Value = serde_json::from_str(&good).unwrap();
        let mut map = v.as_object().unwrap().clone();
        let mut coeffs = map["coeffs"].as_array().unwrap().clone();
        coeffs.pop();
        map.insert("coeffs".into(), serde_json::Value::Array(coeffs));
        let truncated = serde_json::Value::Object(map).to_string();
        assert!(matches!(Expansion::from_json(&truncated), Err(Error::Parse(_))));
        // rational coefficient field cannot carry irrational values
        let irr = good.replacen(
            "\"constant_term\":[[\"1\",\"120\"],[\"0\",\"1\"]]",
            "\"constant_term\":[[\"1\",\"120\"],[\"1\",\"1\"]]",
            1,
        );
        assert!(matches!(Expansion::from_json(&irr), Err(Error::Parse(_))));
    }

    #[test]
    fn truncation_and_bound_errors() {
        let ctx = ctx5();
        let e2 = eisenstein(&ctx, 2, 30).unwrap();
        let t = e2.truncate(10).unwrap();
        assert_eq!(t.bound, 10);
        assert!(t.coeffs.keys().all(|id| id.norm() <= 10));
        assert!(e2.truncate(31).is_err());
        let big = ideal_of(&ctx, (7, 0));
        assert!(matches!(
            e2.coefficient(&big),
            Err(Error::BoundTooSmall { .. })
        ));
    }
}
