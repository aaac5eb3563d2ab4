//! Exact arithmetic in Q(zeta_m) and Laurent polynomials over it in one
//! formal unit X.
//!
//! Numbers are kept in a canonical basis: an exponent e is a basis index iff
//! for every prime power p^v || m the top base-p digit of (e mod p^v) is not
//! p-1. A non-basis term is rewritten with the relation
//! sum_{j<p} zeta^(e + j m/p) = 0. For m = p^a this is the power basis.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::util::{euler_phi, factor, invmod};

pub type Q = Ratio<i128>;

pub fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

pub fn qi(n: i128) -> Q {
    Q::from_integer(n)
}

#[inline]
pub fn qadd(a: &Q, b: &Q) -> Q {
    a.checked_add(b).expect("rational overflow in addition")
}

#[inline]
pub fn qsub(a: &Q, b: &Q) -> Q {
    a.checked_sub(b).expect("rational overflow in subtraction")
}

#[inline]
pub fn qmul(a: &Q, b: &Q) -> Q {
    a.checked_mul(b).expect("rational overflow in multiplication")
}

/// p^e as an exact rational, e of any sign.
pub fn qpow_int(p: u64, e: i64) -> Q {
    let b = (p as i128)
        .checked_pow(e.unsigned_abs() as u32)
        .expect("rational overflow in power");
    if e >= 0 {
        qi(b)
    } else {
        Q::new(1, b)
    }
}

pub fn q_to_string(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i128 = n.trim().parse().map_err(|_| Error::Parse(s.into()))?;
            let d: i128 = d.trim().parse().map_err(|_| Error::Parse(s.into()))?;
            if d == 0 {
                return Err(Error::Parse(s.into()));
            }
            Ok(Q::new(n, d))
        }
        None => Ok(qi(s.parse().map_err(|_| Error::Parse(s.into()))?)),
    }
}

#[derive(Debug)]
struct Basis {
    m: u64,
    /// (p, p^v, m/p)
    primes: Vec<(u64, u64, u64)>,
}

impl Basis {
    fn new(m: u64) -> Basis {
        let primes = factor(m)
            .into_iter()
            .map(|(p, v)| (p, p.pow(v), m / p))
            .collect();
        Basis { m, primes }
    }

    fn is_basis(&self, e: u64) -> bool {
        self.primes
            .iter()
            .all(|&(p, pv, _)| (e % pv) / (pv / p) != p - 1)
    }

    fn expand(&self, idx: usize, e: u64, c: Q, acc: &mut HashMap<u64, Q>) {
        if idx == self.primes.len() {
            let slot = acc.entry(e).or_insert_with(Q::zero);
            *slot = qadd(slot, &c);
            return;
        }
        let (p, pv, step) = self.primes[idx];
        if (e % pv) / (pv / p) != p - 1 {
            self.expand(idx + 1, e, c, acc);
        } else {
            let nc = -c;
            for j in 1..p {
                self.expand(idx + 1, (e + j * step) % self.m, nc, acc);
            }
        }
    }

    fn basis_list(&self) -> Vec<u64> {
        (0..self.m).filter(|&e| self.is_basis(e)).collect()
    }
}

fn collect(acc: HashMap<u64, Q>) -> Vec<(u64, Q)> {
    let mut v: Vec<(u64, Q)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    v.sort_unstable_by_key(|t| t.0);
    v
}

/// An element of Q(zeta_m) in canonical form.
#[derive(Clone, Debug)]
pub struct CycloNumber {
    m: u64,
    terms: Vec<(u64, Q)>,
}

impl CycloNumber {
    pub fn zero() -> Self {
        CycloNumber { m: 1, terms: vec![] }
    }

    pub fn one() -> Self {
        Self::from_q(Q::one())
    }

    pub fn from_q(c: Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        CycloNumber { m: 1, terms: vec![(0, c)] }
    }

    pub fn from_int(c: i128) -> Self {
        Self::from_q(qi(c))
    }

    /// zeta_m^e.
    pub fn root(m: u64, e: i64) -> Self {
        assert!(m >= 1);
        Self::from_terms(m, [(e.rem_euclid(m as i64) as u64, Q::one())])
    }

    /// Build from arbitrary exponent/coefficient pairs.
    pub fn from_terms<I: IntoIterator<Item = (u64, Q)>>(m: u64, terms: I) -> Self {
        let b = Basis::new(m);
        let mut acc = HashMap::new();
        for (e, c) in terms {
            if !c.is_zero() {
                b.expand(0, e % m, c, &mut acc);
            }
        }
        CycloNumber { m, terms: collect(acc) }
    }

    pub fn order(&self) -> u64 {
        self.m
    }

    pub fn terms(&self) -> &[(u64, Q)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_rational(&self) -> Option<Q> {
        match self.terms.as_slice() {
            [] => Some(Q::zero()),
            [(0, c)] => Some(*c),
            _ => None,
        }
    }

    /// Re-express in Q(zeta_M) for a multiple M of the current order.
    pub fn lift(&self, big: u64) -> Self {
        assert!(big % self.m == 0, "lift target must be a multiple of the order");
        if big == self.m {
            return self.clone();
        }
        let r = big / self.m;
        Self::from_terms(big, self.terms.iter().map(|&(e, c)| (e * r, c)))
    }

    fn common(&self, other: &Self) -> (u64, Self, Self) {
        let m = self.m.lcm(&other.m);
        (m, self.lift(m), other.lift(m))
    }

    pub fn add(&self, other: &Self) -> Self {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        let (m, a, b) = self.common(other);
        let mut out = Vec::with_capacity(a.terms.len() + b.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < a.terms.len() || j < b.terms.len() {
            if j == b.terms.len() || (i < a.terms.len() && a.terms[i].0 < b.terms[j].0) {
                out.push(a.terms[i]);
                i += 1;
            } else if i == a.terms.len() || b.terms[j].0 < a.terms[i].0 {
                out.push(b.terms[j]);
                j += 1;
            } else {
                let c = qadd(&a.terms[i].1, &b.terms[j].1);
                if !c.is_zero() {
                    out.push((a.terms[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        CycloNumber { m, terms: out }
    }

    pub fn neg(&self) -> Self {
        CycloNumber { m: self.m, terms: self.terms.iter().map(|&(e, c)| (e, -c)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        CycloNumber { m: self.m, terms: self.terms.iter().map(|(e, x)| (*e, qmul(x, c))).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        if let Some(c) = self.as_rational() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_rational() {
            return self.scale(&c);
        }
        let (m, a, b) = self.common(other);
        let basis = Basis::new(m);
        let mut acc = HashMap::with_capacity(a.terms.len() * 2);
        for (ea, ca) in &a.terms {
            for (eb, cb) in &b.terms {
                basis.expand(0, (ea + eb) % m, qmul(ca, cb), &mut acc);
            }
        }
        CycloNumber { m, terms: collect(acc) }
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut r = Self::one();
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        r
    }

    /// The automorphism zeta_m -> zeta_m^a.
    pub fn galois(&self, a: i64) -> Result<Self> {
        let m = self.m as i64;
        if invmod(a as i128, m as i128).is_none() && m > 1 {
            return Err(Error::NotCoprime(a, self.m));
        }
        let a = a.rem_euclid(m.max(1)) as u64;
        Ok(Self::from_terms(
            self.m,
            self.terms.iter().map(|&(e, c)| (((e as u128 * a as u128) % self.m as u128) as u64, c)),
        ))
    }

    /// Multiplicative inverse. Uses linear algebra over the basis, so the
    /// degree of the ambient field is capped.
    pub fn inv(&self) -> Result<Self> {
        const CAP: u64 = 128;
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if let Some(c) = self.as_rational() {
            return Ok(Self::from_q(c.recip()));
        }
        if self.terms.len() == 1 {
            let (e, c) = self.terms[0];
            return Ok(Self::root(self.m, -(e as i64)).scale(&c.recip()));
        }
        let n = euler_phi(self.m);
        if n > CAP {
            return Err(Error::InverseTooLarge(n, CAP));
        }
        let basis = Basis::new(self.m);
        let list = basis.basis_list();
        let pos: HashMap<u64, usize> = list.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let n = list.len();
        let big = |c: &Q| BigRational::new(BigInt::from(*c.numer()), BigInt::from(*c.denom()));
        // Column j holds the coordinates of self * zeta^(list[j]).
        let mut mat = vec![vec![BigRational::zero(); n + 1]; n];
        for (j, &e) in list.iter().enumerate() {
            let col = self.mul(&Self::root(self.m, e as i64));
            for (f, c) in &col.terms {
                mat[pos[f]][j] = big(c);
            }
        }
        mat[pos[&0]][n] = BigRational::one();
        for c in 0..n {
            let pr = (c..n).find(|&r| !mat[r][c].is_zero()).ok_or(Error::DivisionByZero)?;
            mat.swap(c, pr);
            let piv = mat[c][c].clone();
            for x in mat[c].iter_mut() {
                *x = &*x / &piv;
            }
            for r in 0..n {
                if r != c && !mat[r][c].is_zero() {
                    let fac = mat[r][c].clone();
                    for cc in c..=n {
                        let t = &fac * &mat[c][cc];
                        mat[r][cc] -= t;
                    }
                }
            }
        }
        let mut terms = Vec::new();
        for (j, &e) in list.iter().enumerate() {
            let x = &mat[j][n];
            if !x.is_zero() {
                let num = x.numer().to_i128().expect("inverse coefficient overflow");
                let den = x.denom().to_i128().expect("inverse coefficient overflow");
                terms.push((e, Q::new(num, den)));
            }
        }
        let out = CycloNumber { m: self.m, terms };
        debug_assert!(out.mul(self) == Self::one());
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(e, c)| json!([e, q_to_string(c)]))
            .collect();
        json!({"m": self.m, "terms": terms})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let m = v["m"].as_u64().ok_or_else(|| Error::Parse("missing m".into()))?;
        let arr = v["terms"].as_array().ok_or_else(|| Error::Parse("missing terms".into()))?;
        let mut terms = Vec::new();
        for t in arr {
            let e = t[0].as_u64().ok_or_else(|| Error::Parse("bad exponent".into()))?;
            let c = parse_q(t[1].as_str().ok_or_else(|| Error::Parse("bad coefficient".into()))?)?;
            terms.push((e, c));
        }
        Ok(Self::from_terms(m, terms))
    }

    /// The largest absolute numerator and denominator, a size measure.
    pub fn height(&self) -> i128 {
        self.terms
            .iter()
            .map(|(_, c)| c.numer().abs().max(*c.denom()))
            .max()
            .unwrap_or(0)
    }
}

impl PartialEq for CycloNumber {
    fn eq(&self, other: &Self) -> bool {
        if self.m == other.m {
            return self.terms == other.terms;
        }
        let (_, a, b) = self.common(other);
        a.terms == b.terms
    }
}
impl Eq for CycloNumber {}

impl fmt::Display for CycloNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| if *e == 0 { format!("{c}") } else { format!("({c})z{}^{e}", self.m) })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// sqrt(p) for an odd prime p, as an explicit quadratic Gauss sum.
pub fn sqrt_p(p: u64) -> CycloNumber {
    let leg = |x: u64| crate::util::powmod(x, (p - 1) / 2, p) == 1;
    let g = CycloNumber::from_terms(
        p,
        (1..p).map(|x| (x, if leg(x) { Q::one() } else { -Q::one() })),
    );
    if p % 4 == 1 {
        g
    } else {
        // g^2 = -p here, and (-i g)^2 = p.
        g.mul(&CycloNumber::root(4, 1)).neg()
    }
}

/// q^(h/2) where q = p^f, exactly.
pub fn q_half_pow(p: u64, f: usize, h: i64) -> CycloNumber {
    let n = f as i64 * h;
    if n % 2 == 0 {
        CycloNumber::from_q(qpow_int(p, n / 2))
    } else {
        sqrt_p(p).scale(&qpow_int(p, (n - 1).div_euclid(2)))
    }
}

/// A Laurent polynomial in the formal unit X with cyclotomic coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CycloLaurent {
    terms: BTreeMap<i64, CycloNumber>,
}

impl CycloLaurent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: CycloNumber) -> Self {
        Self::monomial(0, c)
    }

    pub fn monomial(k: i64, c: CycloNumber) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(k, c);
        }
        CycloLaurent { terms }
    }

    pub fn terms(&self) -> &BTreeMap<i64, CycloNumber> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            let s = match terms.get(k) {
                Some(x) => x.add(c),
                None => c.clone(),
            };
            if s.is_zero() {
                terms.remove(k);
            } else {
                terms.insert(*k, s);
            }
        }
        CycloLaurent { terms }
    }

    pub fn neg(&self) -> Self {
        CycloLaurent { terms: self.terms.iter().map(|(k, c)| (*k, c.neg())).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &CycloNumber) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        CycloLaurent { terms: self.terms.iter().map(|(k, x)| (*k, x.mul(c))).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                out = out.add(&Self::monomial(k1 + k2, c1.mul(c2)));
            }
        }
        out
    }

    /// Multiply by X^k.
    pub fn shift(&self, k: i64) -> Self {
        CycloLaurent { terms: self.terms.iter().map(|(j, c)| (j + k, c.clone())).collect() }
    }

    /// Substitute X = zeta_r^s.
    pub fn specialize(&self, r: u64, s: i64) -> CycloNumber {
        let mut acc = CycloNumber::zero();
        for (k, c) in &self.terms {
            acc = acc.add(&c.mul(&CycloNumber::root(r, s * k)));
        }
        acc
    }

    /// Substitute X by an arbitrary cyclotomic number (must be a unit when
    /// negative powers occur).
    pub fn substitute(&self, x: &CycloNumber) -> Result<CycloNumber> {
        let xinv = if self.terms.keys().any(|&k| k < 0) { Some(x.inv()?) } else { None };
        let mut acc = CycloNumber::zero();
        for (k, c) in &self.terms {
            let pw = if *k >= 0 { x.pow(*k as u64) } else { xinv.as_ref().unwrap().pow((-k) as u64) };
            acc = acc.add(&c.mul(&pw));
        }
        Ok(acc)
    }

    /// Apply a field automorphism to the coefficients, leaving X fixed.
    pub fn galois_coeffs(&self, a: i64) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            terms.insert(*k, c.galois(a)?);
        }
        Ok(CycloLaurent { terms })
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self.terms.iter().map(|(k, c)| json!([k, c.to_json()])).collect();
        json!({"terms": terms})
    }
}

impl From<CycloNumber> for CycloLaurent {
    fn from(c: CycloNumber) -> Self {
        CycloLaurent::constant(c)
    }
}

/// Apply the automorphism zeta -> zeta^a to a number.
pub fn galois_apply(a: i64, z: &CycloNumber) -> Result<CycloNumber> {
    z.galois(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(m: u64, e: i64) -> CycloNumber {
        CycloNumber::root(m, e)
    }

    #[test]
    fn basic_identities() {
        assert_eq!(z(3, 1).add(&z(3, 2)), CycloNumber::from_int(-1));
        assert_eq!(z(4, 1).mul(&z(4, 1)), CycloNumber::from_int(-1));
        let a = CycloNumber::one().sub(&z(3, 1));
        let expect = CycloNumber::one().sub(&z(3, 2)).scale(&q(1, 3));
        assert_eq!(a.inv().unwrap(), expect);
        assert_eq!(a.mul(&expect), CycloNumber::one());
        assert_eq!(CycloNumber::zero().inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn roots_of_unity_have_order() {
        for m in [1u64, 2, 3, 4, 6, 8, 9, 12, 15, 20, 36, 45, 72] {
            for e in 0..m as i64 {
                assert_eq!(z(m, e).pow(m), CycloNumber::one(), "m={m} e={e}");
            }
            let s = (0..m as i64).fold(CycloNumber::zero(), |acc, e| acc.add(&z(m, e)));
            assert_eq!(s, if m == 1 { CycloNumber::one() } else { CycloNumber::zero() });
        }
    }

    #[test]
    fn sqrt_p_squares() {
        for p in [3u64, 5, 7, 11, 13] {
            let s = sqrt_p(p);
            assert_eq!(s.mul(&s), CycloNumber::from_int(p as i128));
            for f in 1..=2 {
                for h in -3..=3 {
                    let a = q_half_pow(p, f, h);
                    let b = q_half_pow(p, f, -h);
                    assert_eq!(a.mul(&b), CycloNumber::one());
                }
            }
        }
    }

    #[test]
    fn galois_examples() {
        assert_eq!(z(3, 1).galois(2).unwrap(), z(3, 2));
        let w = z(12, 5).add(&z(12, 1).scale(&q(3, 7)));
        assert_eq!(w.galois(1).unwrap(), w);
        assert!(matches!(w.galois(3), Err(Error::NotCoprime(3, 12))));
        // Galois acts on sqrt(5) by the Legendre symbol.
        assert_eq!(sqrt_p(5).galois(2).unwrap(), sqrt_p(5).neg());
    }

    #[test]
    fn json_roundtrip() {
        let w = z(15, 4).add(&z(15, 1).scale(&q(-3, 7)));
        let j = w.to_json();
        assert_eq!(CycloNumber::from_json(&j).unwrap(), w);
        let s = serde_json::to_string(&z(3, 1).add(&CycloNumber::from_q(q(1, 2))).to_json()).unwrap();
        assert_eq!(s, r#"{"m":3,"terms":[[0,"1/2"],[1,"1/1"]]}"#);
    }

    #[test]
    fn laurent_ops() {
        let x = CycloLaurent::monomial(1, CycloNumber::one());
        let xi = CycloLaurent::monomial(-1, CycloNumber::one());
        let s = x.add(&xi);
        assert_eq!(s.specialize(1, 0), CycloNumber::from_int(2));
        assert!(x.scale(&CycloNumber::from_int(3)).sub(&x.scale(&CycloNumber::from_int(3))).is_zero());
        let prod = s.mul(&s);
        assert_eq!(prod.terms().len(), 3);
        assert_eq!(prod.specialize(4, 1), s.specialize(4, 1).pow(2));
    }

    fn arb_cyclo(m: u64) -> impl Strategy<Value = CycloNumber> {
        proptest::collection::vec((0..m, -5i128..6, 1i128..4), 0..5).prop_map(move |ts| {
            CycloNumber::from_terms(m, ts.into_iter().map(|(e, n, d)| (e, q(n, d))))
        })
    }

    fn arb_pair() -> impl Strategy<Value = (CycloNumber, CycloNumber, CycloNumber, i64)> {
        prop_oneof![Just(12u64), Just(24), Just(30), Just(45), Just(360), Just(56), Just(9)]
            .prop_flat_map(|m| (arb_cyclo(m), arb_cyclo(m), arb_cyclo(m / 3 * 3), Just(m as i64)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn ring_axioms((a, b, c, _m) in arb_pair()) {
            prop_assert_eq!(a.add(&b), b.add(&a));
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            prop_assert!(a.sub(&a).is_zero());
        }

        #[test]
        fn galois_is_automorphism((a, b, _c, m) in arb_pair(), s in 1i64..400, t in 1i64..400) {
            let ok = |x: i64| num_integer::Integer::gcd(&x, &m) == 1;
            prop_assume!(ok(s) && ok(t));
            let g = |x: &CycloNumber, k: i64| x.lift(m as u64).galois(k).unwrap();
            prop_assert_eq!(g(&a.add(&b), s), g(&a, s).add(&g(&b, s)));
            prop_assert_eq!(g(&a.mul(&b), s), g(&a, s).mul(&g(&b, s)));
            prop_assert_eq!(g(&g(&a, t), s), g(&a, (s * t) % m));
        }

        #[test]
        fn specialization_is_ring_map(
            c1 in arb_cyclo(12), c2 in arb_cyclo(12), k1 in -3i64..4, k2 in -3i64..4, r in 1u64..7
        ) {
            let a = CycloLaurent::monomial(k1, c1.clone()).add(&CycloLaurent::monomial(k2, c2.clone()));
            let b = CycloLaurent::monomial(k2 - 1, c1).add(&CycloLaurent::constant(c2));
            prop_assert_eq!(a.mul(&b).specialize(r, 1), a.specialize(r, 1).mul(&b.specialize(r, 1)));
            prop_assert_eq!(a.add(&b).specialize(r, 1), a.specialize(r, 1).add(&b.specialize(r, 1)));
        }

        #[test]
        fn inverse_roundtrip(a in arb_cyclo(12)) {
            prop_assume!(!a.is_zero());
            prop_assert_eq!(a.inv().unwrap().mul(&a), CycloNumber::one());
        }
    }
}
