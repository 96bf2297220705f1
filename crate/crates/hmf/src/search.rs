//! The classification engine: enumerate candidate products g = f h of
//! normalized eigenforms over weight pairs, prune with explicit L-value
//! inequalities, settle the survivors exactly at d = 5, and emit a
//! machine-checkable certificate for every excluded candidate.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{
    cusp_subspace, eisenstein, monomial_basis, product, scale, CoeffNumber, Expansion,
};
use crate::hecke::{eigenforms, is_normalized_eigenform, EigenWitness, EigenformRecord};
use crate::numeric::{pi, Iv};
use crate::quadfield::{
    ideal_from_element, ideal_mul, ideal_pow, splitting_type, FieldContext, IdealHNF, SplitType,
};
use crate::specialvalues::{eis_coefficient, kronecker, l_bounds, zeta_special};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CandidateKind {
    EisEis,
    EisCusp,
}

/// One candidate identity shape: f of weight k1 times h of weight k2, with f
/// Eisenstein and h Eisenstein (EisEis) or cuspidal (EisCusp).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CandidateTriple {
    pub d: i64,
    pub kind: CandidateKind,
    pub k1: i64,
    pub k2: i64,
}

/// All candidate triples with total weight at most max_weight. Eisenstein
/// pairs are unordered (k1 >= k2); cusp pairs are ordered by role.
pub fn candidates(d: i64, max_weight: i64) -> Vec<CandidateTriple> {
    let mut out = Vec::new();
    let mut k1 = 2;
    while k1 + 2 <= max_weight {
        let mut k2 = 2;
        while k1 + k2 <= max_weight {
            if k2 <= k1 {
                out.push(CandidateTriple {
                    d,
                    kind: CandidateKind::EisEis,
                    k1,
                    k2,
                });
            }
            out.push(CandidateTriple {
                d,
                kind: CandidateKind::EisCusp,
                k1,
                k2,
            });
            k2 += 2;
        }
        k1 += 2;
    }
    out
}

/// Proof that a candidate admits no identity, tied to the rule that decided
/// it. For exact rules lhs/rhs/margin are exact values in display form; for
/// bound rules they are certified decimal enclosure endpoints. Either way
/// margin is rhs - lhs and is nonzero (positive for bound rules).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionCertificate {
    #[serde(rename = "D")]
    pub d: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<String>,
    pub k1: i64,
    pub k2: i64,
    pub kind: CandidateKind,
    pub lhs: String,
    pub margin: String,
    pub rhs: String,
    pub rule: String,
}

/// A verified identity f h = scalar g, coefficientwise up to `bound`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub bound: i64,
    pub f: String,
    pub g: String,
    pub h: String,
    pub scalar: String,
}

/// Complete classification output: every candidate triple lands in exactly
/// one of the two lists (a triple may carry several certificates when the
/// cusp space has several eigenforms).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub bound: i64,
    pub d: i64,
    pub exclusions: Vec<ExclusionCertificate>,
    pub identities: Vec<IdentityRecord>,
    pub max_weight: i64,
}

/// Exact two-sided evaluation of a rational identity check.
#[derive(Debug, Clone)]
pub struct ExactCheck {
    pub holds: bool,
    pub lhs: BigRational,
    pub rhs: BigRational,
}

/// Values of a bound rule that excluded a candidate.
#[derive(Debug, Clone)]
pub struct BoundExclusion {
    pub lhs: String,
    pub rhs: String,
    pub margin: String,
}

const DEC_DIGITS: u32 = 24;

fn dec_lo(iv: &Iv) -> String {
    iv.dec_pair(DEC_DIGITS).0
}

fn dec_hi(iv: &Iv) -> String {
    iv.dec_pair(DEC_DIGITS).1
}

/// Constant-term and c(O) comparison for E_{k1} E_{k2} = s E_{k1+k2}:
/// 1/zeta_F(1-k1) + 1/zeta_F(1-k2) must equal 1/zeta_F(1-k1-k2).
pub fn eis_pair_exact_check(ctx: &Arc<FieldContext>, k1: i64, k2: i64) -> Result<ExactCheck> {
    let z1 = zeta_special(ctx, k1)?;
    let z2 = zeta_special(ctx, k2)?;
    let z12 = zeta_special(ctx, k1 + k2)?;
    let lhs = z1.recip() + z2.recip();
    let rhs = z12.recip();
    Ok(ExactCheck {
        holds: lhs == rhs,
        lhs,
        rhs,
    })
}

/// Equal-weight refinement at the inert prime (2):
/// (4^(2k-1) - 4^(k-1)) / zeta_F(1-2k) must equal 4 / zeta_F(1-k)^2.
pub fn eis_pair_inert_check(ctx: &Arc<FieldContext>, k1: i64) -> Result<ExactCheck> {
    if splitting_type(ctx, 2) != SplitType::Inert {
        return Err(Error::Inconclusive(format!(
            "the inert-prime relation needs 2 inert in Q(sqrt({}))",
            ctx.d
        )));
    }
    let zk = zeta_special(ctx, k1)?;
    let z2k = zeta_special(ctx, 2 * k1)?;
    let pow = |e: u32| BigRational::from(BigInt::from(4).pow(e));
    let lhs = (pow((2 * k1 - 1) as u32) - pow((k1 - 1) as u32)) / z2k;
    let rhs = BigRational::from(BigInt::from(4)) / (&zk * &zk);
    Ok(ExactCheck {
        holds: lhs == rhs,
        lhs,
        rhs,
    })
}

fn gamma_ratio(a: i64, b: i64) -> BigRational {
    // Gamma(a) / Gamma(b) for integers a >= b >= 1
    let mut acc = BigInt::one();
    for j in b..a {
        acc *= j;
    }
    BigRational::from(acc)
}

/// (disc / 4 pi^2)^e as an interval.
fn disc_power(disc: i64, e: i64, bits: u32) -> Result<Iv> {
    let p = pi(bits);
    Iv::from_int(disc, bits)
        .div(&p.mul(&p).scale_int(4))?
        .powi(e)
}

/// 1296 / pi^8: the crude enclosure constant for a ratio of Dedekind zeta
/// factors, each bracketed by ((6/pi^2)^2, (pi^2/6)^2). Anything sharper
/// here would wrongly exclude surviving candidates.
fn zeta_ratio_floor(bits: u32) -> Result<Iv> {
    Iv::from_int(1296, bits).div(&pi(bits).powi(8)?)
}

/// Unequal-weight Eisenstein pruning. The constant-term relation forces
/// |zeta_12| (1/|zeta_2| - 1/|zeta_1|) <= 1 where zeta_j = zeta_F(1-k_j) and
/// zeta_12 = zeta_F(1-k1-k2); we exclude when the certified lower bound
/// (ratio_lb - 1) * (|zeta_12|/|zeta_1|)_lb exceeds 1.
pub fn eis_unequal_weight_bound(
    disc: i64,
    k1: i64,
    k2: i64,
    bits: u32,
) -> Result<Option<BoundExclusion>> {
    if k1 <= k2 {
        return Err(Error::Internal(format!(
            "unequal-weight rule called with k1 = {k1} <= k2 = {k2}"
        )));
    }
    let floor = zeta_ratio_floor(bits)?;
    let ar = gamma_ratio(k1, k2);
    let ratio_lb = disc_power(disc, k1 - k2, bits)?
        .mul(&Iv::from_ratio(&(&ar * &ar), bits))
        .mul(&floor);
    let one = Iv::from_int(1, bits);
    if !ratio_lb.certainly_gt(&one) {
        return Ok(None);
    }
    let br = gamma_ratio(k1 + k2, k1);
    let l12_over_l1_lb = disc_power(disc, k2, bits)?
        .mul(&Iv::from_ratio(&(&br * &br), bits))
        .mul(&floor);
    let expr = ratio_lb.sub(&one).mul(&l12_over_l1_lb);
    if !expr.certainly_gt(&one) {
        return Ok(None);
    }
    Ok(Some(BoundExclusion {
        lhs: "1".into(),
        rhs: dec_lo(&expr),
        margin: dec_lo(&expr.sub(&one)),
    }))
}

/// Equal-weight Eisenstein pruning when (2) is inert: the inert-prime
/// relation bounds the integer 4^(2k-1) - 4^(k-1) from below by
/// 2 pi (D/4pi^2)^(1/2) (Gamma(2k)/Gamma(k)^2)^2 (6/pi^2)^6; exclusion when
/// the bound certainly exceeds the integer.
pub fn eis_equal_inert_bound(disc: i64, k1: i64, bits: u32) -> Result<Option<BoundExclusion>> {
    let p = pi(bits);
    let gr = gamma_ratio(2 * k1, k1) / gamma_ratio(k1, 1);
    let six = Iv::from_int(6, bits).powi(6)?.div(&p.powi(12)?)?;
    let lb = disc_power(disc, 1, bits)?
        .sqrt()?
        .mul(&p)
        .scale_int(2)
        .mul(&Iv::from_ratio(&(&gr * &gr), bits))
        .mul(&six);
    let int_side = BigRational::from(
        BigInt::from(4).pow((2 * k1 - 1) as u32) - BigInt::from(4).pow((k1 - 1) as u32),
    );
    let int_iv = Iv::from_ratio(&int_side, bits);
    if !lb.certainly_gt(&int_iv) {
        return Ok(None);
    }
    Ok(Some(BoundExclusion {
        lhs: int_side.to_string(),
        rhs: dec_lo(&lb),
        margin: dec_lo(&lb.sub(&int_iv)),
    }))
}

/// Equal-weight Eisenstein pruning when (2) ramifies: the coefficient at the
/// prime above 2 is 0 or +-2^k1, so the relation pins an integer of
/// magnitude at most 2^(2k1-1) + 2^(k1-1); exclusion when the certified
/// lower bound exceeds that.
pub fn eis_equal_ramified_bound(disc: i64, k1: i64, bits: u32) -> Result<Option<BoundExclusion>> {
    let floor = zeta_ratio_floor(bits)?;
    let br = gamma_ratio(2 * k1, k1);
    let lb = disc_power(disc, k1, bits)?
        .mul(&Iv::from_ratio(&(&br * &br), bits))
        .mul(&floor)
        .scale_int(2i64.pow(k1 as u32));
    let int_side = BigRational::from(
        BigInt::from(2).pow((2 * k1 - 1) as u32) + BigInt::from(2).pow((k1 - 1) as u32),
    );
    let int_iv = Iv::from_ratio(&int_side, bits);
    if !lb.certainly_gt(&int_iv) {
        return Ok(None);
    }
    Ok(Some(BoundExclusion {
        lhs: int_side.to_string(),
        rhs: dec_lo(&lb),
        margin: dec_lo(&lb.sub(&int_iv)),
    }))
}

/// Exact integrality gate on the Eisenstein weight in a cusp-case candidate:
/// 4/zeta_F(1-k1) is a difference of eigenvalue coefficients, hence an
/// algebraic integer, hence an integer.
pub fn eis_cusp_integrality_check(ctx: &Arc<FieldContext>, k1: i64) -> Result<ExactCheck> {
    let r = BigRational::from(BigInt::from(4)) / zeta_special(ctx, k1)?;
    let nearest = r.round();
    Ok(ExactCheck {
        holds: r.is_integer(),
        lhs: nearest,
        rhs: r,
    })
}

/// Eisenstein weights admissible for cusp-case candidates under the exact
/// integrality gate.
pub fn cusp_case_k1_filter(ctx: &Arc<FieldContext>, max_weight: i64) -> Result<Vec<i64>> {
    let mut out = Vec::new();
    let mut k1 = 2;
    while k1 + 2 <= max_weight {
        if eis_cusp_integrality_check(ctx, k1)?.holds {
            out.push(k1);
        }
        k1 += 2;
    }
    Ok(out)
}

/// Bound-only version of the integrality gate for the discriminant scan:
/// once |zeta_F(1-k1)| is certainly above 4, 4/zeta_F(1-k1) lies strictly
/// between 0 and 1 and cannot be an integer.
pub fn eis_cusp_weight_filter_bound(
    disc: i64,
    k1: i64,
    bits: u32,
) -> Result<Option<BoundExclusion>> {
    let lower = l_bounds(disc, k1, bits)?.lower;
    let four = Iv::from_int(4, bits);
    if !lower.certainly_gt(&four) {
        return Ok(None);
    }
    Ok(Some(BoundExclusion {
        lhs: "4".into(),
        rhs: dec_lo(&lower),
        margin: dec_lo(&lower.sub(&four)),
    }))
}

/// Growth rule for cusp-case candidates at d = 5. Comparing the norm-16
/// coefficients of E_{k1} h and of an eigenform forces
///   (4^k1 - 1) 4^(k2-1) = z^2 - z(c3 + 2cd) + z(2 - c2) c((2),h)
///                         - z c((3),h) - 2 z c(D,h),
/// with z = 4/zeta_F(1-k1) and c2, c3, cd the E_{k1} coefficients at the
/// ideals of norm 4, 9, 5. Majorizing the h-coefficients with the
/// Ramanujan-type bound 2 N^((k2-1)/2 + 7/64) caps the right side;
/// exclusion when the integer left side certainly exceeds the cap.
pub fn eis_cusp_growth_check(
    ctx: &Arc<FieldContext>,
    k1: i64,
    k2: i64,
    bits: u32,
) -> Result<Option<BoundExclusion>> {
    if ctx.d != 5 {
        return Err(Error::Inconclusive(
            "the growth rule is derived for d = 5 decompositions".into(),
        ));
    }
    let two = BigRational::from(BigInt::from(2));
    let z = BigRational::from(BigInt::from(4)) / zeta_special(ctx, k1)?;
    let c2 = BigRational::from(eis_coefficient(ctx, &ideal_from_element(ctx, (2, 0))?, k1)?);
    let c3 = BigRational::from(eis_coefficient(ctx, &ideal_from_element(ctx, (3, 0))?, k1)?);
    let cd = BigRational::from(eis_coefficient(ctx, &ctx.different(), k1)?);
    let constant = (&z * &z - &z * (&c3 + &two * &cd)).abs();
    // 2 N^((k2-1)/2 + 7/64) = 2 N^((32(k2-1)+7)/64)
    let kn = |n: i64| -> Result<Iv> {
        Ok(Iv::from_int(n, bits)
            .pow_frac(32 * (k2 - 1) + 7, 6)?
            .scale_int(2))
    };
    let majorant = Iv::from_ratio(&constant, bits)
        .add(&kn(4)?.mul(&Iv::from_ratio(&(&z * (&two - &c2).abs()), bits)))
        .add(&kn(9)?.mul(&Iv::from_ratio(&z, bits)))
        .add(&kn(5)?.mul(&Iv::from_ratio(&(&z * &two), bits)));
    let lhs_int = BigRational::from(
        (BigInt::from(4).pow(k1 as u32) - 1) * BigInt::from(4).pow((k2 - 1) as u32),
    );
    let lhs_iv = Iv::from_ratio(&lhs_int, bits);
    if !lhs_iv.certainly_gt(&majorant) {
        return Ok(None);
    }
    Ok(Some(BoundExclusion {
        lhs: dec_hi(&majorant),
        rhs: lhs_int.to_string(),
        margin: dec_lo(&lhs_iv.sub(&majorant)),
    }))
}

/// Largest even k2 not excluded by the growth rule for this k1. Beyond the
/// cutoff the left side gains a factor 16 per step while every majorant term
/// gains at most 9, so a single failure is final; the scan still checks
/// every even weight through 64 and insists the rule fires monotonically.
pub fn cusp_case_k2_bound(ctx: &Arc<FieldContext>, k1: i64, bits: u32) -> Result<i64> {
    let mut cutoff = None;
    let mut k2 = 6;
    while k2 <= 64 {
        let excluded = eis_cusp_growth_check(ctx, k1, k2, bits)?.is_some();
        match (excluded, cutoff) {
            (true, None) => cutoff = Some(k2 - 2),
            (false, Some(_)) => {
                return Err(Error::Internal(format!(
                    "growth rule is not monotone at k1 = {k1}, k2 = {k2}"
                )))
            }
            _ => {}
        }
        k2 += 2;
    }
    cutoff.ok_or_else(|| {
        Error::Inconclusive(format!(
            "growth rule never fires for k1 = {k1} up to weight 64"
        ))
    })
}

/// Outcome of the exact adjudication of one candidate product.
#[derive(Debug, Clone)]
pub enum VerifyOutcome {
    Identity {
        g: String,
        scalar: CoeffNumber,
    },
    NotEigenform {
        witness: EigenWitness,
        lhs: CoeffNumber,
        rhs: CoeffNumber,
    },
}

fn witness_sides(g: &Expansion, witness: &EigenWitness) -> Result<(CoeffNumber, CoeffNumber)> {
    let ctx = &g.ctx;
    match witness {
        EigenWitness::NotNormalized => Ok((
            g.coefficient(&IdealHNF::unit_ideal())?.clone(),
            CoeffNumber::one(),
        )),
        EigenWitness::CoprimeSplit { a, b } => {
            let prod = ideal_mul(ctx, a, b);
            Ok((
                g.coefficient(&prod)?.clone(),
                g.coefficient(a)?.mul(g.coefficient(b)?),
            ))
        }
        EigenWitness::PrimePower { prime, power } => {
            let np_pow = CoeffNumber::from_ratio(BigRational::from(
                BigInt::from(prime.norm()).pow((g.weight - 1) as u32),
            ));
            let actual = g.coefficient(&ideal_pow(ctx, prime, *power))?.clone();
            let predicted = g
                .coefficient(prime)?
                .mul(g.coefficient(&ideal_pow(ctx, prime, power - 1))?)
                .sub(&np_pow.mul(g.coefficient(&ideal_pow(ctx, prime, power - 2))?));
            Ok((actual, predicted))
        }
    }
}

/// Exact adjudication: normalize f h by its c(O), test the Hecke relations,
/// and on success match the candidate against the eigenbasis of the product
/// weight. Failure always comes with a concrete witness; a bound too small
/// to decide is an error, never a silent pass.
pub fn verify_identity(f: &Expansion, h: &Expansion) -> Result<VerifyOutcome> {
    let ctx = &f.ctx;
    let p = product(f, h)?;
    let s = p.coefficient(&IdealHNF::unit_ideal())?.clone();
    if s.is_zero() {
        return Ok(VerifyOutcome::NotEigenform {
            witness: EigenWitness::NotNormalized,
            lhs: CoeffNumber::zero(),
            rhs: CoeffNumber::one(),
        });
    }
    let g_cand = scale(&p, &s.inv().expect("nonzero scalar"))?;
    if let Some(witness) = is_normalized_eigenform(&g_cand)? {
        let (lhs, rhs) = witness_sides(&g_cand, &witness)?;
        return Ok(VerifyOutcome::NotEigenform { witness, lhs, rhs });
    }
    let weight = g_cand.weight;
    if g_cand.is_cuspidal() {
        for rec in eigenforms(ctx, weight, g_cand.bound)? {
            if rec.form == g_cand {
                return Ok(VerifyOutcome::Identity {
                    g: rec.label,
                    scalar: s,
                });
            }
        }
        Err(Error::Inconclusive(format!(
            "weight {weight} candidate satisfies every Hecke relation in bound but matches no eigenform"
        )))
    } else {
        let e = eisenstein(ctx, weight, g_cand.bound)?;
        if g_cand == e {
            Ok(VerifyOutcome::Identity {
                g: format!("E{weight}"),
                scalar: s,
            })
        } else {
            Err(Error::Inconclusive(format!(
                "non-cuspidal weight {weight} candidate passes every Hecke relation in bound but is not the Eisenstein series"
            )))
        }
    }
}

const RULE_ZETA: &str = "eis-eis-zeta-relation";
const RULE_INERT: &str = "eis-eis-inert-two-relation";
const RULE_RATIO_GAP: &str = "eis-eis-ratio-gap";
const RULE_INERT_GAP: &str = "eis-eis-inert-two-gap";
const RULE_RAMIFIED_GAP: &str = "eis-eis-ramified-two-gap";
const RULE_INTEGRALITY: &str = "eis-cusp-integrality";
const RULE_WEIGHT_FILTER: &str = "eis-cusp-weight-filter-bound";
const RULE_GROWTH: &str = "eis-cusp-growth";
const RULE_CUSP_EMPTY: &str = "cusp-space-empty";
const RULE_NOT_EIGEN: &str = "product-not-eigenform";

struct CertBuilder {
    d: i64,
    kind: CandidateKind,
    k1: i64,
    k2: i64,
}

impl CertBuilder {
    fn make(
        &self,
        rule: &str,
        lhs: String,
        rhs: String,
        margin: String,
        form: Option<String>,
    ) -> ExclusionCertificate {
        ExclusionCertificate {
            d: self.d,
            form,
            k1: self.k1,
            k2: self.k2,
            kind: self.kind,
            lhs,
            margin,
            rhs,
            rule: rule.into(),
        }
    }

    fn exact(&self, rule: &str, check: &ExactCheck) -> ExclusionCertificate {
        self.make(
            rule,
            check.lhs.to_string(),
            check.rhs.to_string(),
            (&check.rhs - &check.lhs).to_string(),
            None,
        )
    }

    fn bound(&self, rule: &str, b: &BoundExclusion) -> ExclusionCertificate {
        self.make(rule, b.lhs.clone(), b.rhs.clone(), b.margin.clone(), None)
    }

    fn witness(
        &self,
        lhs: &CoeffNumber,
        rhs: &CoeffNumber,
        form: Option<String>,
    ) -> ExclusionCertificate {
        self.make(
            RULE_NOT_EIGEN,
            lhs.to_string(),
            rhs.to_string(),
            rhs.sub(lhs).to_string(),
            form,
        )
    }
}

fn cusp_dimension(ctx: &Arc<FieldContext>, k: i64) -> Result<usize> {
    Ok(cusp_subspace(&monomial_basis(ctx, k, 30)?)?.len())
}

/// Run the complete candidate classification for d = 5. Every triple with
/// k1 + k2 <= max_weight is either verified as an identity (coefficientwise
/// up to `bound`) or excluded with a certificate.
pub fn classify(
    ctx: &Arc<FieldContext>,
    max_weight: i64,
    bound: i64,
    bits: u32,
) -> Result<IdentityReport> {
    if ctx.d != 5 {
        return Err(Error::Inconclusive(
            "exact classification is implemented for d = 5".into(),
        ));
    }
    if !(4..=20).contains(&max_weight) {
        return Err(Error::Inconclusive(
            "classification covers total weight 4 through 20".into(),
        ));
    }
    if bound < 16 {
        return Err(Error::BoundTooSmall {
            have: bound,
            need: 16,
        });
    }
    let mut exclusions = Vec::new();
    let mut identities = Vec::new();
    let mut eis_cache: HashMap<i64, Expansion> = HashMap::new();
    let mut eigen_cache: HashMap<i64, Vec<EigenformRecord>> = HashMap::new();
    let mut eis = |k: i64| -> Result<Expansion> {
        if let Some(e) = eis_cache.get(&k) {
            return Ok(e.clone());
        }
        let e = eisenstein(ctx, k, bound)?;
        eis_cache.insert(k, e.clone());
        Ok(e)
    };
    let mut cusp_eigen = |k: i64| -> Result<Vec<EigenformRecord>> {
        if let Some(v) = eigen_cache.get(&k) {
            return Ok(v.clone());
        }
        let v = eigenforms(ctx, k, bound)?;
        eigen_cache.insert(k, v.clone());
        Ok(v)
    };

    for triple in candidates(ctx.d, max_weight) {
        let cb = CertBuilder {
            d: ctx.d,
            kind: triple.kind,
            k1: triple.k1,
            k2: triple.k2,
        };
        match triple.kind {
            CandidateKind::EisEis => {
                if triple.k1 > triple.k2 {
                    if let Some(b) =
                        eis_unequal_weight_bound(ctx.disc, triple.k1, triple.k2, bits)?
                    {
                        exclusions.push(cb.bound(RULE_RATIO_GAP, &b));
                        continue;
                    }
                }
                let zeta = eis_pair_exact_check(ctx, triple.k1, triple.k2)?;
                if !zeta.holds {
                    exclusions.push(cb.exact(RULE_ZETA, &zeta));
                    continue;
                }
                if triple.k1 == triple.k2 {
                    let inert = eis_pair_inert_check(ctx, triple.k1)?;
                    if !inert.holds {
                        exclusions.push(cb.exact(RULE_INERT, &inert));
                        continue;
                    }
                }
                match verify_identity(&eis(triple.k1)?, &eis(triple.k2)?)? {
                    VerifyOutcome::Identity { g, scalar } => identities.push(IdentityRecord {
                        bound,
                        f: format!("E{}", triple.k1),
                        g,
                        h: format!("E{}", triple.k2),
                        scalar: scalar.to_string(),
                    }),
                    VerifyOutcome::NotEigenform { lhs, rhs, .. } => {
                        exclusions.push(cb.witness(&lhs, &rhs, None));
                    }
                }
            }
            CandidateKind::EisCusp => {
                if cusp_dimension(ctx, triple.k2)? == 0 {
                    exclusions.push(cb.make(
                        RULE_CUSP_EMPTY,
                        "0".into(),
                        "1".into(),
                        "1".into(),
                        None,
                    ));
                    continue;
                }
                let integrality = eis_cusp_integrality_check(ctx, triple.k1)?;
                if !integrality.holds {
                    exclusions.push(cb.exact(RULE_INTEGRALITY, &integrality));
                    continue;
                }
                if let Some(b) = eis_cusp_growth_check(ctx, triple.k1, triple.k2, bits)? {
                    exclusions.push(cb.bound(RULE_GROWTH, &b));
                    continue;
                }
                let f = eis(triple.k1)?;
                for rec in cusp_eigen(triple.k2)? {
                    match verify_identity(&f, &rec.form)? {
                        VerifyOutcome::Identity { g, scalar } => {
                            identities.push(IdentityRecord {
                                bound,
                                f: format!("E{}", triple.k1),
                                g,
                                h: rec.label.clone(),
                                scalar: scalar.to_string(),
                            })
                        }
                        VerifyOutcome::NotEigenform { lhs, rhs, .. } => {
                            exclusions.push(cb.witness(&lhs, &rhs, Some(rec.label.clone())));
                        }
                    }
                }
            }
        }
    }
    Ok(IdentityReport {
        bound,
        d: ctx.d,
        exclusions,
        identities,
        max_weight,
    })
}

fn is_squarefree(n: i64) -> bool {
    let mut n = n;
    let mut p = 2;
    while p * p <= n {
        if n % (p * p) == 0 {
            return false;
        }
        if n % p == 0 {
            n /= p;
        }
        p += 1;
    }
    true
}

/// Fundamental discriminants of real quadratic fields in [lo, hi].
pub fn fundamental_discriminants(lo: i64, hi: i64) -> Vec<i64> {
    let mut out = Vec::new();
    for disc in lo.max(5)..=hi {
        let ok = if disc % 4 == 1 {
            is_squarefree(disc)
        } else if disc % 4 == 0 {
            let d = disc / 4;
            (d % 4 == 2 || d % 4 == 3) && is_squarefree(d)
        } else {
            false
        };
        if ok {
            out.push(disc);
        }
    }
    out
}

/// Bound-only certificate scan over every fundamental discriminant in
/// range. No exact arithmetic is used, so only candidates the inequalities
/// reach are reported; the rest stay unclassified here.
pub fn bounds_scan(
    dmin: i64,
    dmax: i64,
    max_weight: i64,
    bits: u32,
) -> Result<Vec<ExclusionCertificate>> {
    let mut out = Vec::new();
    for disc in fundamental_discriminants(dmin, dmax) {
        let two_split = kronecker(disc, 2);
        let mut k1 = 2;
        while k1 + 2 <= max_weight {
            let mut k2 = 2;
            while k1 + k2 <= max_weight {
                let cb = |kind: CandidateKind| CertBuilder {
                    d: disc,
                    kind,
                    k1,
                    k2,
                };
                if k2 < k1 {
                    if let Some(b) = eis_unequal_weight_bound(disc, k1, k2, bits)? {
                        out.push(cb(CandidateKind::EisEis).bound(RULE_RATIO_GAP, &b));
                    }
                } else if k2 == k1 {
                    let fired = match two_split {
                        -1 => eis_equal_inert_bound(disc, k1, bits)?.map(|b| (RULE_INERT_GAP, b)),
                        0 => eis_equal_ramified_bound(disc, k1, bits)?
                            .map(|b| (RULE_RAMIFIED_GAP, b)),
                        _ => None,
                    };
                    if let Some((rule, b)) = fired {
                        out.push(cb(CandidateKind::EisEis).bound(rule, &b));
                    }
                }
                if let Some(b) = eis_cusp_weight_filter_bound(disc, k1, bits)? {
                    out.push(cb(CandidateKind::EisCusp).bound(RULE_WEIGHT_FILTER, &b));
                }
                k2 += 2;
            }
            k1 += 2;
        }
    }
    Ok(out)
}

fn ctx_for_disc(disc: i64) -> Result<Arc<FieldContext>> {
    let d = if disc % 4 == 0 { disc / 4 } else { disc };
    Ok(Arc::new(FieldContext::certified(d, 50)?))
}

/// Re-evaluate a certificate with independent arithmetic: exact rules are
/// recomputed exactly and must reproduce the stored sides; bound rules are
/// re-evaluated at the given precision and must still exclude.
pub fn recheck_certificate(cert: &ExclusionCertificate, bits: u32) -> Result<()> {
    let confirm = |ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(Error::Inconclusive(format!(
                "certificate for ({}, {}, {:?}) under rule {} failed re-evaluation",
                cert.k1, cert.k2, cert.kind, cert.rule
            )))
        }
    };
    match cert.rule.as_str() {
        RULE_ZETA => {
            let ctx = ctx_for_disc(cert.d)?;
            let c = eis_pair_exact_check(&ctx, cert.k1, cert.k2)?;
            confirm(!c.holds && c.lhs.to_string() == cert.lhs && c.rhs.to_string() == cert.rhs)
        }
        RULE_INERT => {
            let ctx = ctx_for_disc(cert.d)?;
            let c = eis_pair_inert_check(&ctx, cert.k1)?;
            confirm(!c.holds && c.lhs.to_string() == cert.lhs && c.rhs.to_string() == cert.rhs)
        }
        RULE_INTEGRALITY => {
            let ctx = ctx_for_disc(cert.d)?;
            let c = eis_cusp_integrality_check(&ctx, cert.k1)?;
            confirm(!c.holds && c.rhs.to_string() == cert.rhs)
        }
        RULE_RATIO_GAP => {
            confirm(eis_unequal_weight_bound(cert.d, cert.k1, cert.k2, bits)?.is_some())
        }
        RULE_INERT_GAP => confirm(eis_equal_inert_bound(cert.d, cert.k1, bits)?.is_some()),
        RULE_RAMIFIED_GAP => confirm(eis_equal_ramified_bound(cert.d, cert.k1, bits)?.is_some()),
        RULE_WEIGHT_FILTER => {
            confirm(eis_cusp_weight_filter_bound(cert.d, cert.k1, bits)?.is_some())
        }
        RULE_GROWTH => {
            let ctx = ctx_for_disc(cert.d)?;
            confirm(eis_cusp_growth_check(&ctx, cert.k1, cert.k2, bits)?.is_some())
        }
        RULE_CUSP_EMPTY => {
            let ctx = ctx_for_disc(cert.d)?;
            confirm(cusp_dimension(&ctx, cert.k2)? == 0)
        }
        RULE_NOT_EIGEN => {
            let ctx = ctx_for_disc(cert.d)?;
            let recheck_bound = 20;
            let f = eisenstein(&ctx, cert.k1, recheck_bound)?;
            let hs: Vec<Expansion> = match (cert.kind, &cert.form) {
                (CandidateKind::EisEis, _) => vec![eisenstein(&ctx, cert.k2, recheck_bound)?],
                (CandidateKind::EisCusp, Some(label)) => eigenforms(&ctx, cert.k2, recheck_bound)?
                    .into_iter()
                    .filter(|r| r.label == *label)
                    .map(|r| r.form)
                    .collect(),
                (CandidateKind::EisCusp, None) => {
                    return Err(Error::Inconclusive(
                        "cusp-case eigenform certificate is missing its form label".into(),
                    ))
                }
            };
            let [h] = hs.as_slice() else {
                return Err(Error::Inconclusive(format!(
                    "no eigenform labelled {:?} at weight {}",
                    cert.form, cert.k2
                )));
            };
            match verify_identity(&f, h)? {
                VerifyOutcome::Identity { .. } => confirm(false),
                VerifyOutcome::NotEigenform { lhs, rhs, .. } => {
                    confirm(lhs.to_string() == cert.lhs && rhs.to_string() == cert.rhs)
                }
            }
        }
        other => Err(Error::Inconclusive(format!("unknown rule \"{other}\""))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;
    use std::str::FromStr;

    fn ratio(s: &str) -> BigRational {
        BigRational::from_str(s).unwrap()
    }

    fn ctx5() -> Arc<FieldContext> {
        Arc::new(FieldContext::certified(5, 50).unwrap())
    }

    #[test]
    fn zeta_relation_golden_cases() {
        let ctx = ctx5();
        let pass = eis_pair_exact_check(&ctx, 2, 2).unwrap();
        assert!(pass.holds);
        assert_eq!(pass.lhs, ratio("60"));
        let cases = [
            (4, 2, "90", "630/67"),
            (4, 4, "120", "120/361"),
            (6, 2, "2640/67", "120/361"),
            (6, 4, "4650/67", "1650/412751"),
        ];
        for (k1, k2, lhs, rhs) in cases {
            let c = eis_pair_exact_check(&ctx, k1, k2).unwrap();
            assert!(!c.holds, "({k1},{k2})");
            assert_eq!(c.lhs, ratio(lhs), "({k1},{k2})");
            assert_eq!(c.rhs, ratio(rhs), "({k1},{k2})");
        }
    }

    #[test]
    fn inert_relation_golden_cases() {
        let ctx = ctx5();
        let pass = eis_pair_inert_check(&ctx, 2).unwrap();
        assert!(pass.holds);
        assert_eq!(pass.lhs, ratio("3600"));
        assert_eq!(pass.rhs, ratio("3600"));
        assert!(!eis_pair_inert_check(&ctx, 4).unwrap().holds);
        assert!(!eis_pair_inert_check(&ctx, 6).unwrap().holds);
    }

    #[test]
    fn unequal_weight_survivors_match_expected_set() {
        let mut survivors = BTreeSet::new();
        let mut k1 = 4;
        while k1 + 2 <= 20 {
            let mut k2 = 2;
            while k2 < k1 && k1 + k2 <= 20 {
                if eis_unequal_weight_bound(5, k1, k2, 200).unwrap().is_none() {
                    survivors.insert((k1, k2));
                }
                k2 += 2;
            }
            k1 += 2;
        }
        let expected: BTreeSet<(i64, i64)> = [(4, 2), (6, 2), (6, 4)].into_iter().collect();
        assert_eq!(survivors, expected);
    }

    #[test]
    fn unequal_weight_bound_is_monotone_in_the_discriminant() {
        // exclusion at a discriminant persists at every larger one
        for (k1, k2) in [(8, 2), (8, 6), (10, 4)] {
            assert!(eis_unequal_weight_bound(5, k1, k2, 200).unwrap().is_some());
            for disc in [8, 13, 24, 101, 1000] {
                assert!(
                    eis_unequal_weight_bound(disc, k1, k2, 200).unwrap().is_some(),
                    "({k1},{k2}) at {disc}"
                );
            }
        }
    }

    #[test]
    fn integrality_filter_admits_only_small_weights() {
        let ctx = ctx5();
        assert_eq!(cusp_case_k1_filter(&ctx, 20).unwrap(), vec![2, 4]);
        let c6 = eis_cusp_integrality_check(&ctx, 6).unwrap();
        assert!(!c6.holds);
        assert_eq!(c6.rhs, ratio("2520/67"));
        let c8 = eis_cusp_integrality_check(&ctx, 8).unwrap();
        assert!(!c8.holds);
        assert_eq!(c8.rhs, ratio("480/361"));
    }

    #[test]
    fn growth_rule_cutoffs_match_expected_weights() {
        let ctx = ctx5();
        assert_eq!(cusp_case_k2_bound(&ctx, 2, 200).unwrap(), 10);
        assert_eq!(cusp_case_k2_bound(&ctx, 4, 200).unwrap(), 8);
        assert!(eis_cusp_growth_check(&ctx, 2, 10, 200).unwrap().is_none());
        assert!(eis_cusp_growth_check(&ctx, 2, 12, 200).unwrap().is_some());
        assert!(eis_cusp_growth_check(&ctx, 4, 8, 200).unwrap().is_none());
        assert!(eis_cusp_growth_check(&ctx, 4, 10, 200).unwrap().is_some());
    }

    #[test]
    fn verify_identity_confirms_and_refutes() {
        let ctx = ctx5();
        let e2 = eisenstein(&ctx, 2, 60).unwrap();
        match verify_identity(&e2, &e2).unwrap() {
            VerifyOutcome::Identity { g, scalar } => {
                assert_eq!(g, "E4");
                assert_eq!(scalar.to_string(), "1/60");
            }
            other => panic!("expected identity, got {other:?}"),
        }
        let h6 = &eigenforms(&ctx, 6, 60).unwrap()[0].form;
        match verify_identity(&e2, h6).unwrap() {
            VerifyOutcome::Identity { g, scalar } => {
                assert_eq!(g, "h8");
                assert_eq!(scalar.to_string(), "1/120");
            }
            other => panic!("expected identity, got {other:?}"),
        }
        let h8 = &eigenforms(&ctx, 8, 60).unwrap()[0].form;
        match verify_identity(&e2, h8).unwrap() {
            VerifyOutcome::NotEigenform { witness, lhs, rhs } => {
                assert!(matches!(witness, EigenWitness::PrimePower { power: 2, .. }));
                assert_eq!(lhs.to_string(), "525456");
                assert_eq!(rhs.to_string(), "-194544");
            }
            other => panic!("expected refutation, got {other:?}"),
        }
    }

    #[test]
    fn classification_finds_exactly_the_two_identities() {
        let ctx = ctx5();
        let report = classify(&ctx, 20, 100, 200).unwrap();
        assert_eq!(report.identities.len(), 2);
        let ids: BTreeSet<(String, String, String, String)> = report
            .identities
            .iter()
            .map(|i| (i.f.clone(), i.h.clone(), i.g.clone(), i.scalar.clone()))
            .collect();
        assert!(ids.contains(&("E2".into(), "E2".into(), "E4".into(), "1/60".into())));
        assert!(ids.contains(&("E2".into(), "h6".into(), "h8".into(), "1/120".into())));

        // every candidate triple appears in exactly one of the two lists
        let all: BTreeSet<(CandidateKind, i64, i64)> = candidates(5, 20)
            .into_iter()
            .map(|t| (t.kind, t.k1, t.k2))
            .collect();
        assert_eq!(all.len(), 70);
        let excluded: BTreeSet<(CandidateKind, i64, i64)> = report
            .exclusions
            .iter()
            .map(|c| (c.kind, c.k1, c.k2))
            .collect();
        let identified: BTreeSet<(CandidateKind, i64, i64)> = [
            (CandidateKind::EisEis, 2, 2),
            (CandidateKind::EisCusp, 2, 6),
        ]
        .into_iter()
        .collect();
        assert_eq!(excluded.len(), 68);
        assert!(excluded.is_disjoint(&identified));
        let covered: BTreeSet<_> = excluded.union(&identified).copied().collect();
        assert_eq!(covered, all);

        // the weight-10 cusp pair is excluded once per eigenform
        let tens: Vec<&ExclusionCertificate> = report
            .exclusions
            .iter()
            .filter(|c| c.kind == CandidateKind::EisCusp && c.k1 == 2 && c.k2 == 10)
            .collect();
        assert_eq!(tens.len(), 2);
        let labels: BTreeSet<_> = tens.iter().map(|c| c.form.clone().unwrap()).collect();
        assert_eq!(labels, ["h10".to_string(), "h10p".to_string()].into());
        assert_eq!(report.exclusions.len(), 69);
        assert!(report
            .exclusions
            .iter()
            .all(|c| c.rule == RULE_NOT_EIGEN || c.form.is_none()));
    }

    #[test]
    fn classification_certificates_pass_recheck() {
        let ctx = ctx5();
        let report = classify(&ctx, 20, 100, 200).unwrap();
        for cert in &report.exclusions {
            recheck_certificate(cert, 400).unwrap_or_else(|e| {
                panic!(
                    "recheck failed for ({},{}) {:?} rule {}: {e}",
                    cert.k1, cert.k2, cert.form, cert.rule
                )
            });
        }
    }

    #[test]
    fn report_serializes_with_sorted_keys() {
        let ctx = ctx5();
        let report = classify(&ctx, 8, 40, 200).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.starts_with("{\"bound\":40,\"d\":5,\"exclusions\":["));
        assert!(json.contains("\"max_weight\":8"));
        assert!(json.contains("\"D\":5"));
        let back: IdentityReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        let cert_json = serde_json::to_string(&report.exclusions[0]).unwrap();
        assert!(cert_json.starts_with("{\"D\":5,"));
        let mut pos = 0;
        for key in [
            "\"k1\"", "\"k2\"", "\"kind\"", "\"lhs\"", "\"margin\"", "\"rhs\"", "\"rule\"",
        ] {
            let at = cert_json[pos..]
                .find(key)
                .unwrap_or_else(|| panic!("key {key} out of order in {cert_json}"));
            pos += at;
        }
    }

    #[test]
    fn discriminant_scan_emits_rechecked_certificates() {
        let certs = bounds_scan(5, 40, 20, 200).unwrap();
        assert!(!certs.is_empty());
        assert!(certs.iter().any(|c| c.rule == RULE_RATIO_GAP && c.d == 5));
        assert!(certs.iter().any(|c| c.rule == RULE_RAMIFIED_GAP));
        assert!(certs.iter().any(|c| c.rule == RULE_WEIGHT_FILTER));
        for cert in &certs {
            recheck_certificate(cert, 400).unwrap_or_else(|e| {
                panic!(
                    "scan recheck failed for D={} ({},{}) rule {}: {e}",
                    cert.d, cert.k1, cert.k2, cert.rule
                )
            });
        }
    }

    #[test]
    fn fundamental_discriminant_listing() {
        assert_eq!(
            fundamental_discriminants(5, 30),
            vec![5, 8, 12, 13, 17, 21, 24, 28, 29]
        );
        let more = fundamental_discriminants(5, 50);
        for bad in [16, 25, 36, 45, 50] {
            assert!(!more.contains(&bad), "{bad}");
        }
    }
}
