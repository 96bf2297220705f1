//! Hecke operators on expansions, eigenform extraction in small weights, and
//! the Ramanujan bound check at prime ideals.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::forms::{add, cusp_subspace, monomial_basis, scale, CoeffNumber, Expansion};
use crate::quadfield::{
    contains_ideal, elt_conj, elt_mul, elt_norm, factor_ideal, ideal_from_element, ideal_mul,
    ideal_pow, ideals_up_to_norm, prime_ideals_up_to_norm, tp_generator, FieldContext, IdealHNF,
};

/// A normalized eigenform c(O) = 1 with its Hecke eigenvalue at the smallest
/// prime, as produced by `eigenforms`.
#[derive(Debug, Clone)]
pub struct EigenformRecord {
    pub label: String,
    pub form: Expansion,
    pub t2_eigenvalue: CoeffNumber,
}

fn quotient_by_prime(
    ctx: &FieldContext,
    ideal: &IdealHNF,
    prime: &IdealHNF,
) -> Result<IdealHNF> {
    let nu = tp_generator(ctx, ideal)?;
    let pi = tp_generator(ctx, prime)?;
    let z = elt_mul(
        ctx,
        (nu.0 as i128, nu.1 as i128),
        elt_conj(ctx, (pi.0 as i128, pi.1 as i128)),
    );
    let n = elt_norm(ctx, (pi.0 as i128, pi.1 as i128));
    if z.0 % n != 0 || z.1 % n != 0 {
        return Err(Error::Internal(format!(
            "prime of norm {} does not divide ideal of norm {}",
            prime.norm(),
            ideal.norm()
        )));
    }
    ideal_from_element(ctx, (z.0 / n, z.1 / n))
}

/// Apply the Hecke operator T_p for a prime ideal p:
/// c(m, T_p f) = c(mp, f) + N(p)^(k-1) c(m p^(-1), f), the second term only
/// when p divides m. The result is dense up to bound / N(p).
pub fn hecke_operator(f: &Expansion, prime: &IdealHNF) -> Result<Expansion> {
    let ctx = &f.ctx;
    let factors = factor_ideal(ctx, prime)?;
    if factors.len() != 1 || factors[0].1 != 1 {
        return Err(Error::Parse(format!(
            "ideal of norm {} is not prime",
            prime.norm()
        )));
    }
    let np = prime.norm();
    let bound = f.bound / np;
    if bound < 1 {
        return Err(Error::BoundTooSmall {
            have: f.bound,
            need: np,
        });
    }
    let np_pow = CoeffNumber::from_ratio(BigRational::from(
        BigInt::from(np).pow((f.weight - 1) as u32),
    ));
    let mut out = Expansion::zero(ctx, f.weight, f.coeff_disc, bound);
    out.constant_term = f
        .constant_term
        .add(&f.constant_term.mul(&np_pow));
    for ideal in ideals_up_to_norm(ctx, bound) {
        let up = ideal_mul(ctx, &ideal, prime);
        let mut c = f.coefficient(&up)?.clone();
        if contains_ideal(prime, &ideal) {
            let down = quotient_by_prime(ctx, &ideal, prime)?;
            c = c.add(&f.coefficient(&down)?.mul(&np_pow));
        }
        out.coeffs.insert(ideal, c);
    }
    Ok(out)
}

fn leading_ideal(f: &Expansion) -> Result<IdealHNF> {
    f.coeffs
        .iter()
        .find(|(_, c)| !c.is_zero())
        .map(|(id, _)| *id)
        .ok_or_else(|| Error::Internal("zero expansion in echelon basis".into()))
}

/// Largest s with s^2 | n, together with the squarefree part.
fn split_square(n: &BigInt) -> Result<(BigInt, i64)> {
    let mut s = BigInt::from(1);
    let mut rem = n.clone();
    let mut p = BigInt::from(2);
    let limit = BigInt::from(2_000_000);
    while &p * &p <= rem && p <= limit {
        while (&rem % (&p * &p)).is_zero() {
            rem /= &p * &p;
            s *= &p;
        }
        p += 1;
    }
    let m: i64 = rem.try_into().map_err(|_| {
        Error::Inconclusive("eigenvalue discriminant has a huge squarefree part".into())
    })?;
    Ok((s, m))
}

fn coords(f: &Expansion, pivots: &[IdealHNF]) -> Result<Vec<CoeffNumber>> {
    pivots
        .iter()
        .map(|id| f.coefficient(id).cloned())
        .collect()
}

/// Normalized Hecke eigenforms of the given even weight for d = 5, labelled
/// h{k} (and h{k}p for the Galois conjugate when the eigenvalues generate a
/// real quadratic field). Every produced form is re-verified to satisfy
/// T_(2) f = lambda f coefficientwise.
pub fn eigenforms(ctx: &Arc<FieldContext>, k: i64, bound: i64) -> Result<Vec<EigenformRecord>> {
    let basis = monomial_basis(ctx, k, bound)?;
    let cusp = cusp_subspace(&basis)?;
    let dim = cusp.len();
    if dim == 0 {
        return Ok(Vec::new());
    }
    if dim > 2 {
        return Err(Error::UnsupportedDimension { weight: k, dim });
    }
    let two = ideal_from_element(ctx, (2, 0))?;
    let check_bound = (bound / two.norm()).min(50);
    let mut records = Vec::new();
    let mut push_verified = |form: Expansion, eigenvalue: CoeffNumber, label: String| -> Result<()> {
        let image = hecke_operator(&form, &two)?;
        for ideal in ideals_up_to_norm(ctx, check_bound) {
            if *image.coefficient(&ideal)? != form.coefficient(&ideal)?.mul(&eigenvalue) {
                return Err(Error::Internal(format!(
                    "constructed weight {k} form is not a T_(2) eigenform at norm {}",
                    ideal.norm()
                )));
            }
        }
        records.push(EigenformRecord {
            label,
            form,
            t2_eigenvalue: eigenvalue,
        });
        Ok(())
    };
    if dim == 1 {
        let lead = leading_ideal(&cusp[0])?;
        if !lead.is_unit_ideal() {
            return Err(Error::Internal(format!(
                "one-dimensional cusp space at weight {k} has no form with c(O) = 1"
            )));
        }
        let form = cusp[0].clone();
        let eigenvalue = form.coefficient(&two)?.clone();
        push_verified(form, eigenvalue, format!("h{k}"))?;
        return Ok(records);
    }
    let pivots: Vec<IdealHNF> = cusp
        .iter()
        .map(leading_ideal)
        .collect::<Result<_>>()?;
    if !pivots[0].is_unit_ideal() {
        return Err(Error::Internal(format!(
            "cusp space at weight {k} has no form with nonzero c(O)"
        )));
    }
    // matrix of T_(2) in the echelon basis: row i holds the coordinates of
    // T_(2) g_i, read off at the pivot ideals
    let mut a = Vec::with_capacity(2);
    for g in &cusp {
        let row = coords(&hecke_operator(g, &two)?, &pivots)?;
        if row.iter().any(|c| !c.is_rational()) {
            return Err(Error::Internal("irrational Hecke matrix entry".into()));
        }
        a.push(row);
    }
    let tr = a[0][0].u.clone() + &a[1][1].u;
    let det = a[0][0].u.clone() * &a[1][1].u - a[0][1].u.clone() * &a[1][0].u;
    let disc = tr.clone() * &tr - BigRational::from(BigInt::from(4)) * det;
    if disc.is_negative() {
        return Err(Error::Inconclusive(
            "eigenvalue discriminant is negative".into(),
        ));
    }
    // sqrt(disc) = (s / q) sqrt(m) with m squarefree
    let (s_num, m_num) = split_square(disc.numer())?;
    let (s_den, m_den) = split_square(disc.denom())?;
    if m_den != 1 {
        return Err(Error::Inconclusive(
            "eigenvalue discriminant denominator is not square".into(),
        ));
    }
    let m = m_num;
    let root_scale = BigRational::new(s_num, s_den);
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    for (sign, label) in [(1i64, format!("h{k}")), (-1, format!("h{k}p"))] {
        let eigenvalue = if m == 1 {
            CoeffNumber::from_ratio(
                (&tr + BigRational::from(BigInt::from(sign)) * &root_scale) * &half,
            )
        } else {
            CoeffNumber::new(
                &tr * &half,
                BigRational::from(BigInt::from(sign)) * &root_scale * &half,
                m,
            )
        };
        // eigenvector (x, y): x (A00 - lambda) + y A10 = 0
        let (x, y) = if !a[1][0].u.is_zero() {
            (
                a[1][0].clone(),
                eigenvalue.sub(&CoeffNumber::from_ratio(a[0][0].u.clone())),
            )
        } else {
            return Err(Error::Inconclusive(
                "Hecke matrix is triangular; eigenbasis not implemented for this shape".into(),
            ));
        };
        let xinv = x.inv().expect("nonzero by branch");
        let form = add(&cusp[0], &scale(&cusp[1], &y.mul(&xinv))?)?;
        push_verified(form, eigenvalue, label)?;
        if m == 1 {
            // both eigenvalues are rational; the loop still emits two records
            continue;
        }
    }
    Ok(records)
}

/// Witness that an expansion fails to be a normalized Hecke eigenform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenWitness {
    /// c(O) is not 1
    NotNormalized,
    /// c(ab) != c(a) c(b) for the listed coprime pair
    CoprimeSplit { a: IdealHNF, b: IdealHNF },
    /// c(p^e) != c(p) c(p^(e-1)) - N(p)^(k-1) c(p^(e-2))
    PrimePower { prime: IdealHNF, power: u32 },
}

impl std::fmt::Display for EigenWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EigenWitness::NotNormalized => write!(f, "constant-coefficient ideal O has c(O) != 1"),
            EigenWitness::CoprimeSplit { a, b } => write!(
                f,
                "multiplicativity fails for the coprime pair of norms {} and {}",
                a.norm(),
                b.norm()
            ),
            EigenWitness::PrimePower { prime, power } => write!(
                f,
                "recurrence fails at power {power} of the prime of norm {}",
                prime.norm()
            ),
        }
    }
}

/// Check the multiplicative relations a normalized eigenform must satisfy at
/// every ideal within the bound. Returns the first violation in ideal order,
/// or None when all relations hold.
pub fn is_normalized_eigenform(f: &Expansion) -> Result<Option<EigenWitness>> {
    let ctx = &f.ctx;
    let one = IdealHNF::unit_ideal();
    if *f.coefficient(&one)? != CoeffNumber::one() {
        return Ok(Some(EigenWitness::NotNormalized));
    }
    for ideal in ideals_up_to_norm(ctx, f.bound) {
        let factors = factor_ideal(ctx, &ideal)?;
        if factors.len() > 1 {
            let (p0, e0) = factors[0];
            let a = ideal_pow(ctx, &p0, e0);
            let mut b = one;
            for (p, e) in &factors[1..] {
                b = ideal_mul(ctx, &b, &ideal_pow(ctx, p, *e));
            }
            if *f.coefficient(&ideal)? != f.coefficient(&a)?.mul(f.coefficient(&b)?) {
                return Ok(Some(EigenWitness::CoprimeSplit { a, b }));
            }
        } else if let Some(&(p, e)) = factors.first() {
            if e < 2 {
                continue;
            }
            let np_pow = CoeffNumber::from_ratio(BigRational::from(
                BigInt::from(p.norm()).pow((f.weight - 1) as u32),
            ));
            let lower = f.coefficient(&ideal_pow(ctx, &p, e - 1))?;
            let lowest = f.coefficient(&ideal_pow(ctx, &p, e - 2))?;
            let expect = f
                .coefficient(&p)?
                .mul(lower)
                .sub(&np_pow.mul(lowest));
            if *f.coefficient(&ideal)? != expect {
                return Ok(Some(EigenWitness::PrimePower { prime: p, power: e }));
            }
        }
    }
    Ok(None)
}

/// Outcome of the Ramanujan bound check |c(p)| <= 2 N(p)^((k-1)/2 + 7/64) at
/// prime ideals, verified exactly in both embeddings via 64-th powers.
#[derive(Debug, Clone)]
pub struct RamanujanReport {
    pub primes_checked: usize,
    /// largest observed |c(p)| / bound ratio, in floating point
    pub max_ratio: f64,
    pub violations: Vec<IdealHNF>,
}

/// u + v sqrt(m) <= r, decided exactly.
fn embed_leq(u: &BigRational, v: &BigRational, m: i64, r: &BigRational) -> bool {
    let t = r - u;
    let vv_m = v * v * BigRational::from(BigInt::from(m));
    if v.is_zero() {
        !t.is_negative()
    } else if v.is_positive() {
        !t.is_negative() && vv_m <= &t * &t
    } else {
        !t.is_negative() || &t * &t <= vv_m
    }
}

fn embed_f64(c: &CoeffNumber, sign: f64) -> f64 {
    let q = |r: &BigRational| {
        let n: f64 = r.numer().to_string().parse().unwrap_or(f64::NAN);
        let d: f64 = r.denom().to_string().parse().unwrap_or(f64::NAN);
        n / d
    };
    q(&c.u) + sign * q(&c.v) * (c.m as f64).sqrt()
}

pub fn ramanujan_check(f: &Expansion, norm_bound: i64) -> Result<RamanujanReport> {
    if !f.is_cuspidal() {
        return Err(Error::NotCuspidal);
    }
    let ctx = &f.ctx;
    let mut report = RamanujanReport {
        primes_checked: 0,
        max_ratio: 0.0,
        violations: Vec::new(),
    };
    for pr in prime_ideals_up_to_norm(ctx, norm_bound.min(f.bound))? {
        let n = pr.ideal.norm();
        let c = f.coefficient(&pr.ideal)?;
        // |sigma(c)|^64 <= 2^64 N^(32(k-1)+7) in both embeddings
        let mut c64 = c.clone();
        for _ in 0..6 {
            c64 = c64.mul(&c64);
        }
        let rhs = BigRational::from(
            (BigInt::from(1) << 64) * BigInt::from(n).pow((32 * (f.weight - 1) + 7) as u32),
        );
        let ok = embed_leq(&c64.u, &c64.v, c64.m, &rhs) && embed_leq(&c64.u, &-c64.v.clone(), c64.m, &rhs);
        if !ok {
            report.violations.push(pr.ideal);
        }
        let bound_f = 2.0 * (n as f64).powf((f.weight - 1) as f64 / 2.0 + 7.0 / 64.0);
        for sign in [1.0, -1.0] {
            let ratio = embed_f64(c, sign).abs() / bound_f;
            if ratio > report.max_ratio {
                report.max_ratio = ratio;
            }
        }
        report.primes_checked += 1;
    }
    Ok(report)
}
