//! Finite-order characters of O_F^x (extended by chi(p) = 1) and the
//! standard additive character.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use serde_json::{json, Value};

use crate::cyclo::CycloNumber;
use crate::error::{Error, Result};
use crate::local_arith::{Field, FracElement, QuadExt, UnitClass};
use crate::util::pow_u64;

/// Default cap on the number of characters an enumeration may produce.
pub const DEFAULT_CHAR_CAP: u64 = 100_000;

/// A character of (O/p^k)^x, stored at level max(c(chi), 1) by exponents
/// against that level's generators: a_0 mod q-1 and a_i mod p^(k-1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultChar {
    field: Field,
    level: u32,
    exps: Vec<u64>,
    conductor: u32,
}

fn vp(x: u64, p: u64) -> u32 {
    let mut x = x;
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// Conductor of the character with exponents `exps` at level k.
fn conductor_of(p: u64, k: u32, exps: &[u64]) -> u32 {
    let mut c = if exps[0] != 0 { 1 } else { 0 };
    for &a in &exps[1..] {
        if a != 0 {
            c = c.max(1 + (k - 1) - vp(a, p));
        }
    }
    if c == 0 && exps[1..].iter().any(|&a| a != 0) {
        c = 1;
    }
    c
}

impl MultChar {
    /// Build from exponents at level k (exponents reduced mod the generator
    /// orders); the result is normalized to level max(c, 1).
    pub fn new(field: &Field, k: u32, exps: &[u64]) -> Result<MultChar> {
        if k == 0 {
            return Ok(Self::trivial(field));
        }
        let n = if k == 1 { 1 } else { 1 + field.f };
        if exps.len() != n {
            return Err(Error::InvalidRep(format!("expected {n} exponents, got {}", exps.len())));
        }
        let pk1 = pow_u64(field.p, k - 1);
        let mut e: Vec<u64> = exps.to_vec();
        e[0] %= field.q - 1;
        for a in e[1..].iter_mut() {
            *a %= pk1;
        }
        let c = conductor_of(field.p, k, &e);
        let lvl = c.max(1);
        // Drop to level lvl: the 1-unit exponents are divisible by p^(k-lvl).
        let drop = pow_u64(field.p, k - lvl);
        let mut ne = vec![e[0]];
        if lvl >= 2 {
            for a in &e[1..] {
                debug_assert_eq!(a % drop, 0);
                ne.push(a / drop);
            }
        }
        Ok(MultChar { field: field.clone(), level: lvl, exps: ne, conductor: c })
    }

    pub fn trivial(field: &Field) -> MultChar {
        MultChar { field: field.clone(), level: 1, exps: vec![0], conductor: 0 }
    }

    /// The character whose value on each generator of level k is
    /// exp(2 pi i * num/den) as returned by `val`.
    pub fn from_generator_values<F: Fn(&UnitClass) -> (u64, u64)>(
        field: &Field,
        k: u32,
        val: F,
    ) -> Result<MultChar> {
        let g = crate::local_arith::unit_group(field, k)?;
        let mut exps = Vec::new();
        for (gen, ord) in &g.generators {
            let (num, den) = val(gen);
            // num/den = a/ord for an integer a.
            let a = (num as u128 * *ord as u128) / den as u128;
            if (num as u128 * *ord as u128) % den as u128 != 0 {
                return Err(Error::InvalidRep("generator value has the wrong order".into()));
            }
            exps.push((a % *ord as u128) as u64);
        }
        MultChar::new(field, k, &exps)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exps
    }

    pub fn conductor(&self) -> u32 {
        self.conductor
    }

    pub fn is_trivial(&self) -> bool {
        self.conductor == 0
    }

    /// Exponents at a level k >= self.level.
    pub fn exponents_at(&self, k: u32) -> Vec<u64> {
        assert!(k >= self.level);
        let mut e = vec![self.exps[0]];
        if k >= 2 {
            let up = pow_u64(self.field.p, k - self.level);
            for i in 0..self.field.f {
                e.push(self.exps.get(1 + i).copied().unwrap_or(0) * up);
            }
        }
        e
    }

    /// Denominator D such that all values lie in (1/D)Z/Z.
    pub fn value_denominator(&self) -> u64 {
        (self.field.q - 1).lcm(&pow_u64(self.field.p, self.level - 1))
    }

    /// Order of the character.
    pub fn order(&self) -> u64 {
        let d = self.value_denominator();
        let n0 = self.field.q - 1;
        let n1 = pow_u64(self.field.p, self.level - 1);
        let mut g = d;
        g = g.gcd(&(self.exps[0] * (d / n0)));
        for a in &self.exps[1..] {
            g = g.gcd(&(a * (d / n1)));
        }
        d / g.gcd(&d)
    }

    /// chi(u) as num/den in Q/Z.
    pub fn value_frac(&self, u: &UnitClass) -> Result<(u64, u64)> {
        if u.field != self.field {
            return Err(Error::FieldMismatch("character and unit over different fields".into()));
        }
        if u.level < self.conductor {
            return Err(Error::LevelTooLow { got: u.level, need: self.conductor });
        }
        let u = u.at_level(self.level);
        let e = u.dlog();
        Ok(self.frac_from_dlog(&e))
    }

    /// Value from exponents of a unit at this character's level.
    pub fn frac_from_dlog(&self, e: &[u64]) -> (u64, u64) {
        let d = self.value_denominator() as u128;
        let n0 = (self.field.q - 1) as u128;
        let n1 = pow_u64(self.field.p, self.level - 1) as u128;
        let mut num = (self.exps[0] as u128 * e[0] as u128 % n0) * (d / n0);
        for (a, x) in self.exps[1..].iter().zip(&e[1..]) {
            num += (*a as u128 * *x as u128 % n1) * (d / n1);
        }
        ((num % d) as u64, d as u64)
    }

    /// Value from exponents of a unit at a level k >= self.level.
    pub fn frac_from_dlog_at(&self, k: u32, e: &[u64]) -> (u64, u64) {
        if k == self.level {
            return self.frac_from_dlog(e);
        }
        let pdrop = pow_u64(self.field.p, self.level.max(1) - 1);
        let mut ee = vec![e[0]];
        if self.level >= 2 {
            for x in &e[1..] {
                ee.push(x % pdrop);
            }
        }
        self.frac_from_dlog(&ee)
    }

    pub fn eval(&self, u: &UnitClass) -> Result<CycloNumber> {
        let (n, d) = self.value_frac(u)?;
        Ok(CycloNumber::root(d, n as i64))
    }

    /// chi(x) = chi(unit part), since chi(p) = 1.
    pub fn eval_frac(&self, x: &FracElement) -> Result<CycloNumber> {
        self.eval(&x.unit)
    }

    pub fn eval_int(&self, x: i64) -> Result<CycloNumber> {
        self.eval(&UnitClass::from_int(&self.field, self.level, x)?)
    }

    fn binop(&self, other: &MultChar, sign: i64) -> MultChar {
        assert!(self.field == other.field, "characters over different fields");
        let k = self.level.max(other.level);
        let a = self.exponents_at(k);
        let b = other.exponents_at(k);
        let n0 = self.field.q - 1;
        let n1 = pow_u64(self.field.p, k - 1);
        let e: Vec<u64> = a
            .iter()
            .zip(&b)
            .enumerate()
            .map(|(i, (&x, &y))| {
                let n = if i == 0 { n0 } else { n1 };
                if sign > 0 {
                    (x + y) % n
                } else {
                    (x + n - y % n) % n
                }
            })
            .collect();
        MultChar::new(&self.field, k, &e).unwrap()
    }

    pub fn mul(&self, other: &MultChar) -> MultChar {
        self.binop(other, 1)
    }

    pub fn div(&self, other: &MultChar) -> MultChar {
        self.binop(other, -1)
    }

    pub fn inv(&self) -> MultChar {
        Self::trivial(&self.field).div(self)
    }

    pub fn pow(&self, a: i64) -> MultChar {
        let n0 = (self.field.q - 1) as i128;
        let n1 = pow_u64(self.field.p, self.level - 1) as i128;
        let e: Vec<u64> = self
            .exps
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let n = if i == 0 { n0 } else { n1 };
                (x as i128 * a as i128).rem_euclid(n) as u64
            })
            .collect();
        MultChar::new(&self.field, self.level, &e).unwrap()
    }

    /// The Galois conjugate tau_a o chi, i.e. chi^a.
    pub fn galois(&self, a: i64) -> MultChar {
        self.pow(a)
    }

    /// chi o N_{E/F} as a character of E.
    pub fn compose_norm(&self, ext: &QuadExt) -> Result<MultChar> {
        let k = self.level;
        ext.ext.level_data(k);
        MultChar::from_generator_values(&ext.ext, k, |g| {
            let n = ext.norm(g).expect("norm lands in the base field");
            self.value_frac(&n).unwrap()
        })
    }

    /// Restriction of a character of E to O_F^x.
    pub fn restrict(&self, ext: &QuadExt) -> Result<MultChar> {
        let k = self.level;
        MultChar::from_generator_values(&ext.base, k, |g| self.value_frac(&ext.embed(g)).unwrap())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "conductor": self.conductor,
            "order": self.order(),
            "level": self.level,
            "exponents": self.exps,
        })
    }
}

impl fmt::Display for MultChar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chi[c={}, k={}, {:?}]", self.conductor, self.level, self.exps)
    }
}

/// All characters of conductor at most k, sorted by conductor and then by
/// exponents at level k. Index 0 is the trivial character.
pub fn enumerate_chars(field: &Field, k: u32) -> Result<Vec<MultChar>> {
    enumerate_chars_capped(field, k, DEFAULT_CHAR_CAP)
}

pub fn enumerate_chars_capped(field: &Field, k: u32, cap: u64) -> Result<Vec<MultChar>> {
    if k == 0 {
        return Ok(vec![MultChar::trivial(field)]);
    }
    let count = field.unit_count(k);
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }
    let g = crate::local_arith::unit_group(field, k)?;
    let orders: Vec<u64> = g.generators.iter().map(|x| x.1).collect();
    let mut keyed = Vec::with_capacity(count as usize);
    let mut e = vec![0u64; orders.len()];
    loop {
        let ch = MultChar::new(field, k, &e)?;
        keyed.push((ch.conductor, e.clone(), ch));
        let mut i = 0;
        loop {
            if i == e.len() {
                keyed.sort_by(|a, b| match a.0.cmp(&b.0) {
                    Ordering::Equal => a.1.cmp(&b.1),
                    o => o,
                });
                return Ok(keyed.into_iter().map(|t| t.2).collect());
            }
            e[i] += 1;
            if e[i] < orders[i] {
                break;
            }
            e[i] = 0;
            i += 1;
        }
    }
}

/// Characters of conductor exactly k.
pub fn chars_of_conductor(field: &Field, k: u32) -> Result<Vec<MultChar>> {
    Ok(enumerate_chars(field, k)?.into_iter().filter(|c| c.conductor == k).collect())
}

/// The additive character psi(x) = exp(2 pi i {Tr_{F/Q_p}(x)}), of
/// conductor exponent 0.
#[derive(Clone, Debug)]
pub struct AdditiveChar {
    pub field: Field,
}

impl AdditiveChar {
    pub fn new(field: &Field) -> Self {
        AdditiveChar { field: field.clone() }
    }

    /// psi(p^(-j) a) for an integral a given by coefficients, as a fraction
    /// num/p^j.
    pub fn frac(&self, coeffs: &[u64], j: u32) -> (u64, u64) {
        if j == 0 {
            return (0, 1);
        }
        (self.field.trace_mod(coeffs, j), pow_u64(self.field.p, j))
    }

    pub fn eval_coeffs(&self, coeffs: &[u64], j: u32) -> CycloNumber {
        let (n, d) = self.frac(coeffs, j);
        CycloNumber::root(d, n as i64)
    }

    /// psi(x) for a nonzero fractional element.
    pub fn eval(&self, x: &FracElement) -> Result<CycloNumber> {
        if x.valuation >= 0 {
            return Ok(CycloNumber::one());
        }
        let j = (-x.valuation) as u32;
        if x.unit.level < j {
            return Err(Error::LevelTooLow { got: x.unit.level, need: j });
        }
        Ok(self.eval_coeffs(&x.unit.coeffs, j))
    }
}

/// psi evaluated at p^(-j) * a for an integral a.
pub fn psi_eval(psi: &AdditiveChar, x: &FracElement) -> Result<CycloNumber> {
    psi.eval(x)
}

pub fn char_eval(chi: &MultChar, x: &FracElement) -> Result<CycloNumber> {
    chi.eval_frac(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_arith::{field, unit_table, QuadExt};

    #[test]
    fn enumeration_counts_and_profiles() {
        let q3 = field(3, 1).unwrap();
        let cs = enumerate_chars(&q3, 1).unwrap();
        assert_eq!(cs.len(), 2);
        assert!(cs[0].is_trivial());
        assert_eq!(cs[1].order(), 2);
        let cs = enumerate_chars(&q3, 2).unwrap();
        let prof: Vec<u32> = cs.iter().map(|c| c.conductor()).collect();
        assert_eq!(prof, vec![0, 1, 2, 2, 2, 2]);
        let q5 = field(5, 1).unwrap();
        let cs = enumerate_chars(&q5, 1).unwrap();
        assert_eq!(cs.len(), 4);
        assert!(cs.iter().all(|c| 4 % c.order() == 0));
        assert_eq!(enumerate_chars(&q3, 0).unwrap().len(), 1);
        assert!(matches!(
            enumerate_chars_capped(&q5, 3, 10),
            Err(Error::CapExceeded { count: 100, cap: 10 })
        ));
    }

    #[test]
    fn conductor_matches_kernel_test() {
        // Independent conductor: smallest n with chi trivial on 1 + p^n.
        for (p, f, k) in [(3u64, 1usize, 3u32), (5, 1, 2), (3, 2, 2), (7, 1, 2)] {
            let fd = field(p, f).unwrap();
            for ch in enumerate_chars(&fd, k).unwrap() {
                let t = unit_table(&fd, k);
                let mut c = k;
                for n in (0..=k).rev() {
                    let pn = pow_u64(p, n);
                    let trivial = t.elems.iter().all(|x| {
                        let in_kernel = if n == 0 {
                            true
                        } else {
                            (x[0] + pow_u64(p, k) - 1) % pn == 0 && x[1..].iter().all(|&y| y % pn == 0)
                        };
                        !in_kernel || {
                            let u = UnitClass { field: fd.clone(), level: k, coeffs: x.clone() };
                            ch.value_frac(&u).unwrap().0 == 0
                        }
                    });
                    if trivial {
                        c = n;
                    } else {
                        break;
                    }
                }
                assert_eq!(c, ch.conductor(), "{ch}");
            }
        }
    }

    #[test]
    fn orthogonality_and_duality() {
        for (p, f) in [(3u64, 1usize), (5, 1), (7, 1), (3, 2)] {
            let fd = field(p, f).unwrap();
            let kmax = if fd.q <= 5 { 3 } else { 2 };
            for k in 1..=kmax {
                let t = unit_table(&fd, k);
                let chars = enumerate_chars(&fd, k).unwrap();
                for ch in &chars {
                    let mut s = CycloNumber::zero();
                    for x in &t.elems {
                        let u = UnitClass { field: fd.clone(), level: k, coeffs: x.clone() };
                        s = s.add(&ch.eval(&u).unwrap());
                    }
                    let expect = if ch.is_trivial() { t.elems.len() as i128 } else { 0 };
                    assert_eq!(s, CycloNumber::from_int(expect));
                    assert_eq!(ch.inv().inv(), *ch);
                    assert_eq!(ch.inv().conductor(), ch.conductor());
                }
                if k >= 2 {
                    let exact = chars.iter().filter(|c| c.conductor() == k).count() as u64;
                    assert_eq!(exact, fd.unit_count(k) - fd.unit_count(k - 1));
                }
            }
        }
    }

    #[test]
    fn evaluation_examples() {
        let q3 = field(3, 1).unwrap();
        let quad = &enumerate_chars(&q3, 1).unwrap()[1];
        let x = FracElement::new(1, UnitClass::from_int(&q3, 1, 2).unwrap());
        assert_eq!(char_eval(quad, &x).unwrap(), CycloNumber::from_int(-1));
        let q5 = field(5, 1).unwrap();
        for ch in chars_of_conductor(&q5, 1).unwrap().iter().filter(|c| c.order() == 4) {
            let v2 = ch.eval_int(2).unwrap();
            assert_eq!(v2.pow(4), CycloNumber::one());
            assert_eq!(v2.pow(2), ch.eval_int(4).unwrap());
            assert_eq!(v2.pow(2), CycloNumber::from_int(-1));
        }
    }

    #[test]
    fn additive_character_examples() {
        let q3 = field(3, 1).unwrap();
        let psi = AdditiveChar::new(&q3);
        let x = FracElement::new(-1, UnitClass::one(&q3, 1));
        assert_eq!(psi_eval(&psi, &x).unwrap(), CycloNumber::root(3, 1));
        assert_eq!(psi_eval(&psi, &FracElement::new(0, UnitClass::one(&q3, 1))).unwrap(), CycloNumber::one());
        let f9 = field(3, 2).unwrap();
        let psi = AdditiveChar::new(&f9);
        let a = FracElement::new(-1, UnitClass::new(&f9, 1, &[0, 1]).unwrap());
        assert_eq!(psi_eval(&psi, &a).unwrap(), CycloNumber::one());
        // Additivity on p^-2 O.
        let t = unit_table(&f9, 2);
        let ring = f9.ring(2);
        for x in t.elems.iter().step_by(5) {
            for y in t.elems.iter().step_by(7) {
                let s = ring.add(x, y);
                assert_eq!(psi.eval_coeffs(&s, 2), psi.eval_coeffs(x, 2).mul(&psi.eval_coeffs(y, 2)));
            }
        }
    }

    #[test]
    fn norm_composition_and_restriction() {
        let q3 = field(3, 1).unwrap();
        let ext = QuadExt::new(&q3).unwrap();
        for ch in enumerate_chars(&q3, 2).unwrap() {
            let cn = ch.compose_norm(&ext).unwrap();
            // On F^x, chi o N = chi^2.
            assert_eq!(cn.restrict(&ext).unwrap(), ch.pow(2));
            assert_eq!(cn.conductor(), ch.conductor());
        }
    }
}
