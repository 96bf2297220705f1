//! Special values zeta_F(1-k) for even k: exact rationals via diagonal
//! restriction to elliptic modular forms, a high-precision oracle through the
//! functional equation, and the explicit L-value bounds used by the search.
//!
//! The diagonal restriction of the weight-k Hilbert Eisenstein series is an
//! elliptic form of weight 2k. Its q^n coefficient for n >= 1 is a finite sum
//! of ideal coefficients over the trace-n slice of the dual lattice, all
//! computable without knowing the constant term. Solving for the membership
//! of the restriction in the level-one space pins the constant term, which is
//! zeta_F(1-k)/4.

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::rref;
use crate::numeric::{factorial, pi, precision_bits, zeta_even_iv, Iv};
use crate::quadfield::{
    divisors, ideal_from_element, sign_embed1, sign_embed2, FieldContext, IdealHNF,
};

/// Exact Bernoulli number B_n (B_1 = -1/2 convention).
pub fn bernoulli(n: usize) -> BigRational {
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        if m == 0 {
            b.push(BigRational::one());
            continue;
        }
        // B_m = -1/(m+1) * sum_{j<m} C(m+1, j) B_j
        let mut acc = BigRational::zero();
        let mut binom = BigInt::one();
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from(binom.clone()) * bj;
            binom = binom * BigInt::from((m + 1 - j) as u64) / BigInt::from((j + 1) as u64);
        }
        b.push(-acc / BigRational::from(BigInt::from((m + 1) as u64)));
    }
    b.pop().unwrap()
}

/// Eisenstein ideal coefficient: sum of N(r)^(k-1) over divisors r of m.
pub fn eis_coefficient(ctx: &FieldContext, ideal: &IdealHNF, k: i64) -> Result<BigInt> {
    let mut acc = BigInt::zero();
    for d in divisors(ctx, ideal)? {
        acc += BigInt::from(d.norm()).pow((k - 1) as u32);
    }
    Ok(acc)
}

/// Kronecker symbol (a/n) for n >= 1.
pub fn kronecker(a: i64, n: i64) -> i64 {
    assert!(n >= 1);
    let mut a = a;
    let mut n = n;
    let mut result = 1i64;
    while n % 2 == 0 {
        n /= 2;
        match a.rem_euclid(8) {
            1 | 7 => {}
            3 | 5 => result = -result,
            _ => return 0,
        }
    }
    if n == 1 {
        return result;
    }
    if a < 0 {
        if n.rem_euclid(4) == 3 {
            result = -result;
        }
        a = -a;
    }
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n.rem_euclid(8), 3 | 5) {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.rem_euclid(4) == 3 && n.rem_euclid(4) == 3 {
            result = -result;
        }
        a = a.rem_euclid(n);
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Elliptic modular form of level one as a truncated q-expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticQExpansion {
    pub weight: i64,
    /// coefficients of q^0 .. q^(len-1)
    pub coeffs: Vec<BigRational>,
}

fn sigma(n: u64, e: u32) -> BigInt {
    let mut acc = BigInt::zero();
    for d in 1..=n {
        if n % d == 0 {
            acc += BigInt::from(d).pow(e);
        }
    }
    acc
}

/// Level-one Eisenstein series E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n.
pub fn elliptic_eisenstein(weight: i64, len: usize) -> Result<EllipticQExpansion> {
    if weight < 4 || weight % 2 != 0 {
        return Err(Error::OddWeight(weight));
    }
    let factor = -BigRational::from(BigInt::from(2 * weight)) / bernoulli(weight as usize);
    let mut coeffs = Vec::with_capacity(len);
    coeffs.push(BigRational::one());
    for n in 1..len {
        coeffs.push(&factor * BigRational::from(sigma(n as u64, (weight - 1) as u32)));
    }
    Ok(EllipticQExpansion { weight, coeffs })
}

fn elliptic_one(len: usize) -> EllipticQExpansion {
    let mut coeffs = vec![BigRational::zero(); len];
    coeffs[0] = BigRational::one();
    EllipticQExpansion { weight: 0, coeffs }
}

pub fn elliptic_mul(a: &EllipticQExpansion, b: &EllipticQExpansion) -> EllipticQExpansion {
    let len = a.coeffs.len().min(b.coeffs.len());
    let mut coeffs = vec![BigRational::zero(); len];
    for (i, ai) in a.coeffs.iter().enumerate().take(len) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.coeffs.iter().enumerate().take(len - i) {
            coeffs[i + j] += ai * bj;
        }
    }
    EllipticQExpansion {
        weight: a.weight + b.weight,
        coeffs,
    }
}

/// dim M_w(SL_2(Z)) for even w >= 0.
pub fn dim_level_one(w: i64) -> i64 {
    if w < 0 || w % 2 != 0 {
        0
    } else if w % 12 == 2 {
        w / 12
    } else {
        w / 12 + 1
    }
}

/// Echelonized basis of M_w(SL_2(Z)) from monomials E_4^a E_6^b, with pivot
/// columns q^0 .. q^(dim-1).
pub fn miller_basis(weight: i64, len: usize) -> Result<Vec<EllipticQExpansion>> {
    if weight < 0 || weight % 2 != 0 {
        return Err(Error::OddWeight(weight));
    }
    let dim = dim_level_one(weight);
    let mut exps = Vec::new();
    for a in 0..=(weight / 4) {
        let rem = weight - 4 * a;
        if rem % 6 == 0 {
            exps.push((a, rem / 6));
        }
    }
    if exps.len() as i64 != dim {
        return Err(Error::Internal(format!(
            "weight {weight}: {} Eisenstein monomials for dimension {dim}",
            exps.len()
        )));
    }
    if dim == 0 {
        return Ok(Vec::new());
    }
    if (len as i64) < dim {
        return Err(Error::BoundTooSmall {
            have: len as i64,
            need: dim,
        });
    }
    let e4 = elliptic_eisenstein(4, len)?;
    let e6 = elliptic_eisenstein(6, len)?;
    let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(exps.len());
    for &(a, b) in &exps {
        let mut f = elliptic_one(len);
        for _ in 0..a {
            f = elliptic_mul(&f, &e4);
        }
        for _ in 0..b {
            f = elliptic_mul(&f, &e6);
        }
        rows.push(f.coeffs);
    }
    let pivots = rref(&mut rows);
    if pivots.len() as i64 != dim || pivots.iter().enumerate().any(|(i, &c)| c != i) {
        return Err(Error::BasisRankDeficient(weight));
    }
    Ok(rows
        .into_iter()
        .take(dim as usize)
        .map(|coeffs| EllipticQExpansion { weight, coeffs })
        .collect())
}

/// q^n coefficient of the diagonal restriction of E_k: the sum of
/// c((mu), E_k) over the trace-n slice of the totally positive dual cone,
/// written as elements x + n*omega with sigma1 > 0 > sigma2.
fn diag_coeff(ctx: &FieldContext, k: i64, n: i64) -> Result<BigInt> {
    let om1 = ctx.omega1_f64();
    let om2 = ctx.omega2_f64();
    let nf = n as f64;
    let x_lo = (-nf * om1).floor() as i128 - 2;
    let x_hi = (-nf * om2).ceil() as i128 + 2;
    let mut acc = BigInt::zero();
    for x in x_lo..=x_hi {
        let e = (x, n as i128);
        if sign_embed1(ctx, e) > 0 && sign_embed2(ctx, e) < 0 {
            let ideal = ideal_from_element(ctx, e)?;
            acc += eis_coefficient(ctx, &ideal, k)?;
        }
    }
    Ok(acc)
}

/// Exact zeta_F(1-k) for even k >= 2 by diagonal restriction.
pub fn zeta_special(ctx: &FieldContext, k: i64) -> Result<BigRational> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::OddWeight(k));
    }
    if !ctx.narrow_certified {
        return Err(Error::NotCertified(ctx.d));
    }
    let w = 2 * k;
    let dim = dim_level_one(w) as usize;
    let mut extra = 8usize;
    loop {
        let n_max = dim + extra;
        let basis = miller_basis(w, n_max + 1)?;
        let mut b = vec![BigRational::zero(); n_max + 1];
        for (n, bn) in b.iter_mut().enumerate().skip(1) {
            *bn = BigRational::from(diag_coeff(ctx, k, n as i64)?);
        }
        let f0 = &basis[0];
        let mut solved: Option<BigRational> = None;
        for n in dim..=n_max {
            if f0.coeffs[n].is_zero() {
                continue;
            }
            let mut rhs = b[n].clone();
            for (i, fi) in basis.iter().enumerate().skip(1) {
                rhs -= &fi.coeffs[n] * &b[i];
            }
            solved = Some(rhs / &f0.coeffs[n]);
            break;
        }
        let Some(b0) = solved else {
            if extra >= 16 {
                return Err(Error::Internal(
                    "echelon basis leading coefficients all vanish".into(),
                ));
            }
            extra = 16;
            continue;
        };
        // every remaining coefficient must agree, or the restriction is not
        // in the level-one space and something is deeply wrong
        for n in dim..=n_max {
            let mut expect = &b0 * &f0.coeffs[n];
            for (i, fi) in basis.iter().enumerate().skip(1) {
                expect += &fi.coeffs[n] * &b[i];
            }
            if expect != b[n] {
                return Err(Error::Internal(format!(
                    "diagonal restriction escaped the level-one space at q^{n}"
                )));
            }
        }
        return Ok(b0 * BigRational::from(BigInt::from(4)));
    }
}

/// (2/pi) (D/4pi^2)^(k-1/2) Gamma(k)^2 as a certified interval.
fn functional_prefactor(disc: i64, k: i64, bits: u32) -> Result<Iv> {
    let pi_ = pi(bits);
    let four_pi_sq = pi_.mul(&pi_).scale_int(4);
    let two_over_pi = Iv::from_int(2, bits).div(&pi_)?;
    let base = Iv::from_int(disc, bits).div(&four_pi_sq)?;
    let half_power = base.powi(2 * k - 1)?.sqrt()?;
    let g = factorial((k - 1) as u64);
    let gamma_sq = Iv::from_ratio(&BigRational::from(&g * &g), bits);
    Ok(two_over_pi.mul(&half_power).mul(&gamma_sq))
}

/// High-precision enclosure of zeta_F(1-k) through the functional equation:
/// (2/pi) (D/4pi^2)^(k-1/2) Gamma(k)^2 zeta(k) L(k, chi_D), with the L-series
/// summed far enough that the certified tail stays below 1e-11.
pub fn zeta_special_numeric(ctx: &FieldContext, k: i64) -> Result<Iv> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::OddWeight(k));
    }
    let bits = precision_bits();
    let disc = ctx.disc;
    let target = 2i128 * disc as i128 * 100_000_000_000i128;
    let n_sum = target.nth_root(k as u32) + 1;
    let unit = BigInt::one() << bits;
    let mut lo = BigInt::zero();
    let mut hi = BigInt::zero();
    for n in 1..=n_sum {
        let chi = kronecker(disc, n as i64);
        if chi == 0 {
            continue;
        }
        let nk = BigInt::from(n).pow(k as u32);
        let q_lo = unit.div_floor(&nk);
        let q_hi = &q_lo + 1;
        if chi > 0 {
            lo += q_lo;
            hi += q_hi;
        } else {
            lo -= q_hi;
            hi -= q_lo;
        }
    }
    // Abel summation tail: character partial sums are bounded by disc
    let tail = (BigInt::from(2 * disc) << bits)
        .div_ceil(&BigInt::from(n_sum + 1).pow(k as u32))
        + 1;
    let l_chi = Iv {
        lo: lo - &tail,
        hi: hi + &tail,
        bits,
    };
    let pref = functional_prefactor(disc, k, bits)?;
    let zk = zeta_even_iv(k, bits)?;
    Ok(pref.mul(&zk).mul(&l_chi))
}

/// Explicit two-sided bounds for |L(1-k, psi)|, holding for every narrow
/// class character psi of a field with discriminant D.
#[derive(Debug, Clone)]
pub struct LBoundPair {
    pub disc: i64,
    pub k: i64,
    pub lower: Iv,
    pub upper: Iv,
}

/// lower = pref * zeta(4k)/zeta(k)^2, upper = pref * zeta(k)^2 where
/// pref = (2/pi)(D/4pi^2)^(k-1/2) Gamma(k)^2.
pub fn l_bounds(disc: i64, k: i64, bits: u32) -> Result<LBoundPair> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::OddWeight(k));
    }
    let pref = functional_prefactor(disc, k, bits)?;
    let zk = zeta_even_iv(k, bits)?;
    let z4k = zeta_even_iv(4 * k, bits)?;
    let zk_sq = zk.mul(&zk);
    Ok(LBoundPair {
        disc,
        k,
        lower: pref.mul(&z4k.div(&zk_sq)?),
        upper: pref.mul(&zk_sq),
    })
}
