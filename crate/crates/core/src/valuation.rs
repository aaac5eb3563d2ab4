//! p-adic valuations of cyclotomic numbers.
//!
//! Write m = p^a m' with p not dividing m'. We send zeta_m to T*Z where T is a
//! Teichmuller root of unity of order m' in the unramified ring
//! W = (Z/p^B)[y]/(h), and Z is a root of the p^a-th cyclotomic polynomial
//! adjoined over W. In the pi = Z - 1 basis the valuation of
//! sum_k b_k pi^k (k < phi(p^a)) is min_k v(b_k) + k/phi(p^a).

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::cyclo::{q, qadd, qi, CycloLaurent, CycloNumber, Q};
use crate::error::{Error, Result};
use crate::local_arith::{fp_poly, ResidueRing};
use crate::util::{factor, invmod, max_level, mult_order, mulmod, pow_u64, powmod, vp_i128};

/// A valuation: an exact rational or +infinity (the valuation of zero).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValRational {
    Finite(Q),
    Infinity,
}

impl ValRational {
    pub fn finite(&self) -> Option<Q> {
        match self {
            ValRational::Finite(x) => Some(*x),
            ValRational::Infinity => None,
        }
    }

    pub fn add(&self, other: &ValRational) -> ValRational {
        match (self, other) {
            (ValRational::Finite(a), ValRational::Finite(b)) => ValRational::Finite(qadd(a, b)),
            _ => ValRational::Infinity,
        }
    }

    pub fn to_json_string(&self) -> String {
        match self {
            ValRational::Finite(x) => crate::cyclo::q_to_string(x),
            ValRational::Infinity => "inf".to_string(),
        }
    }

    /// Whether this is at least the given rational.
    pub fn ge(&self, b: &Q) -> bool {
        match self {
            ValRational::Finite(x) => x >= b,
            ValRational::Infinity => true,
        }
    }
}

impl PartialOrd for ValRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ValRational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ValRational::Finite(a), ValRational::Finite(b)) => a.cmp(b),
            (ValRational::Finite(_), ValRational::Infinity) => Ordering::Less,
            (ValRational::Infinity, ValRational::Finite(_)) => Ordering::Greater,
            (ValRational::Infinity, ValRational::Infinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ValRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json_string())
    }
}

/// p-adic valuation of a nonzero rational.
pub fn val_rational(x: &Q, p: u64) -> ValRational {
    if x.is_zero() {
        return ValRational::Infinity;
    }
    ValRational::Finite(qi((vp_i128(*x.numer(), p) - vp_i128(*x.denom(), p)) as i128))
}

/// Embedding tables for one (p, m, B).
#[derive(Debug)]
pub struct PadicPrecision {
    pub p: u64,
    pub m: u64,
    pub b: u32,
    pub a: u32,
    pub m1: u64,
    ring: ResidueRing,
    /// T^i for i < m'.
    tpows: Vec<Vec<u64>>,
}

fn context(p: u64, m: u64, b: u32) -> Arc<PadicPrecision> {
    static CACHE: OnceLock<RwLock<HashMap<(u64, u64, u32), Arc<PadicPrecision>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(c) = cache.read().unwrap().get(&(p, m, b)) {
        return c.clone();
    }
    let ctx = Arc::new(build_context(p, m, b));
    cache.write().unwrap().entry((p, m, b)).or_insert(ctx).clone()
}

/// Degree of the ambient unramified extension used for the pinned prime.
pub const AMBIENT_DEGREE: usize = 8;

fn build_context(p: u64, m: u64, b: u32) -> PadicPrecision {
    let mut a = 0;
    let mut m1 = m;
    while m1 % p == 0 {
        m1 /= p;
        a += 1;
    }
    let ord = mult_order(p % m1.max(1), m1).max(1) as usize;
    // One ambient residue field for all m' with ord | 8, so that the
    // embeddings for different m are compatible.
    let f1 = if AMBIENT_DEGREE % ord == 0 { AMBIENT_DEGREE } else { ord };
    let h = fp_poly::least_irreducible(f1, p);
    let hi: Vec<i64> = h.iter().map(|&c| c as i64).collect();
    let ring = ResidueRing::new(p, b, &hi);
    let r1 = ResidueRing::new(p, 1, &hi);
    let qq = pow_u64(p, f1 as u32);
    // Least primitive element of the residue field, by index sum c_i p^i.
    let fac = factor(qq - 1);
    let from_idx = |mut x: u64| {
        let mut v = vec![0u64; f1];
        for c in v.iter_mut() {
            *c = x % p;
            x /= p;
        }
        v
    };
    let g = (1..qq)
        .map(from_idx)
        .find(|a| fac.iter().all(|&(l, _)| r1.pow(a, ((qq - 1) / l) as u128) != r1.one()))
        .expect("finite fields have primitive elements");
    let tg = ring.teich(&g, qq);
    let t = ring.pow(&tg, ((qq - 1) / m1) as u128);
    let mut tpows = Vec::with_capacity(m1 as usize);
    let mut x = ring.one();
    for _ in 0..m1 {
        tpows.push(x.clone());
        x = ring.mul(&x, &t);
    }
    debug_assert!(x == ring.one());
    PadicPrecision { p, m, b, a, m1, ring, tpows }
}

fn vp_u64(x: u64, p: u64, cap: u32) -> u32 {
    if x == 0 {
        return cap;
    }
    let mut x = x;
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// Attempt at precision B; None if every coordinate vanished mod p^B.
fn try_val(z: &CycloNumber, ctx: &PadicPrecision, shift: i64) -> Option<Q> {
    let p = ctx.p;
    let ring = &ctx.ring;
    let md = ring.modulus;
    let pa = pow_u64(p, ctx.a);
    let phi = if ctx.a == 0 { 1 } else { (p - 1) * pow_u64(p, ctx.a - 1) };
    let low = if ctx.a == 0 { 1 } else { pow_u64(p, ctx.a - 1) };
    let mut acc = vec![ring.zero(); phi as usize];
    for (e, c) in z.terms() {
        // c * p^(-shift) is p-integral.
        let n = *c.numer();
        let d = *c.denom();
        let vn = vp_i128(n, p) - vp_i128(d, p) - shift;
        debug_assert!(vn >= 0);
        let nn = n / (p as i128).pow(vp_i128(n, p) as u32);
        let dd = d / (p as i128).pow(vp_i128(d, p) as u32);
        let dinv = invmod(dd, md as i128).expect("p-free denominator");
        let unit = ((nn % md as i128 + md as i128) as u128 * dinv as u128 % md as u128) as u64;
        let coef = if vn as u32 >= ctx.b { 0 } else { mulmod(unit, pow_u64(p, vn as u32), md) };
        if coef == 0 {
            continue;
        }
        let w = ring.scale(&ctx.tpows[(e % ctx.m1) as usize], coef);
        let e2 = if ctx.a == 0 { 0 } else { e % pa };
        if e2 < phi {
            acc[e2 as usize] = ring.add(&acc[e2 as usize], &w);
        } else {
            let r = e2 - phi;
            for k in 0..p - 1 {
                let i = (r + k * low) as usize;
                acc[i] = ring.sub(&acc[i], &w);
            }
        }
    }
    // Taylor shift Z = 1 + pi.
    let n = acc.len();
    let mut res = vec![ring.zero(); n];
    for k in (0..n).rev() {
        for i in (1..n).rev() {
            res[i] = ring.add(&res[i], &res[i - 1]);
        }
        res[0] = ring.add(&res[0], &acc[k]);
    }
    let mut best: Option<Q> = None;
    for (k, bk) in res.iter().enumerate() {
        let v = bk.iter().map(|&c| vp_u64(c, p, ctx.b)).min().unwrap();
        if v >= ctx.b {
            continue;
        }
        let val = qadd(&qi(v as i128), &q(k as i128, phi as i128));
        best = Some(match best {
            Some(b) if b <= val => b,
            _ => val,
        });
    }
    best.map(|b| qadd(&b, &qi(shift as i128)))
}

/// Valuation of a cyclotomic number for the pinned embedding.
pub fn val_p_cyclo(z: &CycloNumber, p: u64) -> Result<ValRational> {
    if p == 2 || !crate::util::is_prime(p) {
        return Err(Error::BadPrime(p));
    }
    if z.is_zero() {
        return Ok(ValRational::Infinity);
    }
    if let Some(r) = z.as_rational() {
        return Ok(val_rational(&r, p));
    }
    let shift = z
        .terms()
        .iter()
        .map(|(_, c)| vp_i128(*c.numer(), p) - vp_i128(*c.denom(), p))
        .min()
        .unwrap();
    let cap = max_level(p);
    let mut b = 6.min(cap);
    loop {
        let ctx = context(p, z.order(), b);
        if let Some(v) = try_val(z, &ctx, shift) {
            return Ok(ValRational::Finite(v));
        }
        if b == cap {
            return Err(Error::PrecisionExhausted(b));
        }
        b = (2 * b).min(cap);
    }
}

/// Residue mod the pinned prime of the image of zeta_m^e, for e divisible
/// by the p-part of m, when that residue lies in F_p.
pub fn residue_of_root(p: u64, m: u64, e: u64) -> Option<u64> {
    let ctx = context(p, m, 1);
    if e % pow_u64(p, ctx.a) != 0 {
        return None;
    }
    let t = &ctx.tpows[(e % ctx.m1) as usize];
    t[1..].iter().all(|&c| c == 0).then_some(t[0])
}

/// Valuation at a fixed precision B (for the escalation regression checks).
pub fn val_p_cyclo_at(z: &CycloNumber, p: u64, b: u32) -> Option<ValRational> {
    if z.is_zero() {
        return Some(ValRational::Infinity);
    }
    let shift = z
        .terms()
        .iter()
        .map(|(_, c)| vp_i128(*c.numer(), p) - vp_i128(*c.denom(), p))
        .min()
        .unwrap();
    let ctx = context(p, z.order(), b.min(max_level(p)));
    try_val(z, &ctx, shift).map(ValRational::Finite)
}

/// Valuation for the embedding twisted by zeta -> zeta^b.
pub fn val_p_cyclo_embedding(z: &CycloNumber, p: u64, b: i64) -> Result<ValRational> {
    val_p_cyclo(&z.galois(b)?, p)
}

/// A second embedding exponent for order m: the least b > 1 coprime to m
/// that moves the prime above p, or just the least b > 1 coprime to m if p
/// is inert in Q(zeta_m').
pub fn alternate_embedding(m: u64, p: u64) -> i64 {
    let mut m1 = m;
    while m1 % p == 0 {
        m1 /= p;
    }
    let dec: Vec<u64> = if m1 > 1 {
        let ord = mult_order(p % m1, m1);
        (0..ord).map(|i| powmod(p, i, m1)).collect()
    } else {
        vec![0]
    };
    let coprime = |b: u64| b.gcd(&m) == 1;
    (2..m.max(3) * 2)
        .find(|&b| coprime(b) && m1 > 1 && !dec.contains(&(b % m1)))
        .or_else(|| (2..m.max(3) * 2).find(|&b| coprime(b)))
        .unwrap_or(1) as i64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Certainty {
    Exact,
    LowerBound,
}

impl Certainty {
    pub fn as_str(&self) -> &'static str {
        match self {
            Certainty::Exact => "exact",
            Certainty::LowerBound => "lower_bound",
        }
    }
}

/// Term-wise valuation of a Laurent polynomial with val(X) = nu. Exact when
/// the minimum is attained by a single term.
pub fn val_p_laurent(z: &CycloLaurent, p: u64, nu: &Q) -> Result<(ValRational, Certainty)> {
    if z.is_zero() {
        return Ok((ValRational::Infinity, Certainty::Exact));
    }
    let mut vals = Vec::new();
    for (k, c) in z.terms() {
        let v = val_p_cyclo(c, p)?;
        vals.push(v.add(&ValRational::Finite(crate::cyclo::qmul(&qi(*k as i128), nu))));
    }
    let min = *vals.iter().min().unwrap();
    let count = vals.iter().filter(|v| **v == min).count();
    Ok((min, if count == 1 { Certainty::Exact } else { Certainty::LowerBound }))
}

/// Exact valuation after substituting X = zeta_r^s.
pub fn val_p_laurent_specialized(z: &CycloLaurent, p: u64, r: u64, s: i64) -> Result<ValRational> {
    val_p_cyclo(&z.specialize(r, s), p)
}

/// Absolute value of a rational.
pub fn qabs(x: &Q) -> Q {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::sqrt_p;
    use proptest::prelude::*;

    fn z(m: u64, e: i64) -> CycloNumber {
        CycloNumber::root(m, e)
    }
    fn fin(n: i128, d: i128) -> ValRational {
        ValRational::Finite(q(n, d))
    }

    #[test]
    fn examples() {
        assert_eq!(val_p_cyclo(&CycloNumber::from_q(q(9, 5)), 3).unwrap(), fin(2, 1));
        let w = z(3, 1).sub(&z(3, 2));
        assert_eq!(w.mul(&w), CycloNumber::from_int(-3));
        assert_eq!(val_p_cyclo(&w, 3).unwrap(), fin(1, 2));
        assert_eq!(val_p_cyclo(&CycloNumber::one().sub(&z(5, 1)), 3).unwrap(), fin(0, 1));
        assert_eq!(val_p_cyclo(&CycloNumber::zero(), 3).unwrap(), ValRational::Infinity);
    }

    #[test]
    fn uniformizers_and_units() {
        for p in [3u64, 5, 7] {
            for a in 1..=3u32 {
                let pa = p.pow(a);
                let phi = ((p - 1) * p.pow(a - 1)) as i128;
                let u = CycloNumber::one().sub(&z(pa, 1));
                assert_eq!(val_p_cyclo(&u, p).unwrap(), fin(1, phi));
                assert_eq!(val_p_cyclo(&u.lift(pa * 8), p).unwrap(), fin(1, phi));
            }
            for m in [4u64, 8, 13, 24 * p] {
                let mm = m / p.pow(0);
                assert_eq!(val_p_cyclo(&z(mm, 1), p).unwrap(), fin(0, 1));
            }
            assert_eq!(val_p_cyclo(&sqrt_p(p), p).unwrap(), fin(1, 2));
        }
    }

    #[test]
    fn laurent_examples() {
        let x = CycloLaurent::monomial(1, CycloNumber::one());
        let xi = CycloLaurent::monomial(-1, CycloNumber::one());
        let s = x.add(&xi);
        assert_eq!(val_p_laurent_specialized(&s, 3, 1, 0).unwrap(), fin(0, 1));
        let t2 = CycloLaurent::monomial(2, CycloNumber::one()).add(&CycloLaurent::monomial(-2, CycloNumber::one()));
        let (v, c) = val_p_laurent(&t2, 3, &q(1, 4)).unwrap();
        assert_eq!(v, fin(-1, 2));
        assert_eq!(c, Certainty::Exact);
        let qx = CycloLaurent::monomial(1, CycloNumber::from_int(3));
        assert_eq!(val_p_laurent(&qx.sub(&qx), 3, &q(1, 2)).unwrap().0, ValRational::Infinity);
    }

    #[test]
    fn precision_escalation_is_stable() {
        let w = z(9, 1).sub(&z(9, 4)).mul(&z(8, 1).add(&CycloNumber::from_int(3))).scale(&q(27, 2));
        let v = val_p_cyclo(&w, 3).unwrap();
        for b in [6u32, 12, 24, 39] {
            if let Some(vb) = val_p_cyclo_at(&w, 3, b) {
                assert_eq!(vb, v);
            }
        }
    }

    fn arb(m: u64) -> impl Strategy<Value = CycloNumber> {
        proptest::collection::vec((0..m, -9i128..10, 1i128..10), 1..6).prop_map(move |ts| {
            CycloNumber::from_terms(m, ts.into_iter().map(|(e, n, d)| (e, q(n, d))))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn multiplicative_and_ultrametric(
            (p, a, b) in prop_oneof![Just((3u64, 36u64)), Just((5, 20)), Just((3, 72)), Just((7, 42)), Just((5, 60))]
                .prop_flat_map(|(p, m)| (Just(p), arb(m), arb(m)))
        ) {
            prop_assume!(!a.is_zero() && !b.is_zero());
            let va = val_p_cyclo(&a, p).unwrap();
            let vb = val_p_cyclo(&b, p).unwrap();
            prop_assert_eq!(val_p_cyclo(&a.mul(&b), p).unwrap(), va.add(&vb));
            prop_assert!(val_p_cyclo(&a.add(&b), p).unwrap() >= va.min(vb));
            // Norm-like product with the conjugate is Galois stable.
            let c = a.mul(&a.galois(-1).unwrap());
            prop_assert_eq!(val_p_cyclo(&c, p).unwrap(), va.add(&val_p_cyclo(&a.galois(-1).unwrap(), p).unwrap()));
        }
    }

    #[test]
    fn embeddings_compatible_across_orders() {
        // Same element presented in several ambient orders.
        for (p, m, big) in [(3u64, 24u64, 240u64), (5, 12, 312), (7, 48, 4800), (3, 8, 80)] {
            for e in 0..m as i64 {
                let a = z(m, e).sub(&CycloNumber::one()).add(&z(m, 2 * e + 1).scale(&q(3, 1)));
                let v1 = val_p_cyclo(&a, p).unwrap();
                let v2 = val_p_cyclo(&a.lift(big), p).unwrap();
                assert_eq!(v1, v2, "p={p} m={m} e={e}");
            }
        }
    }
}
