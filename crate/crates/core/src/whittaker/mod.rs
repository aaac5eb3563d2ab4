//! Fourier coefficients c_{t,l}(chi), Whittaker newform values on the cells
//! g_{t,l,v}, the Atkin-Lehner relation and Galois equivariance.

pub mod decompose;

use std::collections::{BTreeMap, HashMap};

use num_integer::Integer;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::characters::{enumerate_chars, AdditiveChar, MultChar};
use crate::cyclo::{q, q_half_pow, CycloLaurent, CycloNumber, Q};
use crate::error::{Error, Result};
use crate::local_arith::{FracElement, UnitClass};
use crate::reps::{eps1, RepDescriptor, RepKind, RepType};
use crate::util::pow_u64;

pub use decompose::{decompose_gl2, in_cell, CellDecomposition, KElem, KField, Mat2};



/// A cell representative g_{t,l,v} at level n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellPoint {
    pub t: i64,
    pub l: u32,
    pub v: UnitClass,
    pub n: u32,
}

impl CellPoint {
    pub fn new(t: i64, l: u32, v: UnitClass, n: u32) -> Result<Self> {
        if l > n {
            return Err(Error::LevelOutOfRange { l: l as i64, n });
        }
        Ok(CellPoint { t, l, v, n })
    }
}

/// Precision at which sweep and check routines carry v, enough for every
/// additive character argument that occurs for t >= -(n + 6).
pub fn working_level(n: u32) -> u32 {
    2 * n + 6
}

fn inv_qm1(q_: u64) -> CycloNumber {
    CycloNumber::from_q(q(1, q_ as i128 - 1))
}

fn qh(pi: &RepDescriptor, h: i64) -> CycloNumber {
    q_half_pow(pi.field.p, pi.field.f, h)
}

/// epsilon(1/2, chi^-1 pi~) with pi~ the contragredient.
fn eps_tilde_twist(pt: &RepDescriptor, chi: &MultChar) -> Result<CycloLaurent> {
    pt.epsilon_twist(&chi.inv())
}

/// Shared shape q^{1-c(chi)/2}/(q-1) eps(chi) eps(chi^-1 pi~).
fn generic_term(pi: &RepDescriptor, pt: &RepDescriptor, chi: &MultChar) -> Result<CycloLaurent> {
    let c = chi.conductor() as i64;
    let s = qh(pi, 2 - c).mul(&inv_qm1(pi.field.q)).mul(&eps1(chi)?);
    Ok(eps_tilde_twist(pt, chi)?.scale(&s))
}

/// c_{t,l}(chi) in the collected form, as a Laurent polynomial in X = q^{c1}
/// (constant for Types 1 and 2a).
pub fn c_tl(pi: &RepDescriptor, chi: &MultChar, t: i64, l: u32) -> Result<CycloLaurent> {
    let pt = pi.contragredient()?;
    c_tl_with(pi, &pt, chi, t, l)
}

pub fn c_tl_with(
    pi: &RepDescriptor,
    pt: &RepDescriptor,
    chi: &MultChar,
    t: i64,
    l: u32,
) -> Result<CycloLaurent> {
    let n = pi.conductor();
    if l > n {
        return Err(Error::LevelOutOfRange { l: l as i64, n });
    }
    if chi.field() != &pi.field {
        return Err(Error::FieldMismatch("character and representation over different fields".into()));
    }
    let zero = CycloLaurent::zero();
    let qq = pi.field.q;
    let c = chi.conductor();
    if c > l {
        return Ok(zero);
    }
    if chi.is_trivial() {
        if t != -(n as i64) {
            return Ok(zero);
        }
        return match l {
            0 => pt.epsilon(),
            1 => Ok(pt.epsilon()?.scale(&inv_qm1(qq).neg())),
            _ => Ok(zero),
        };
    }
    if c != l {
        return Ok(zero);
    }
    match &pi.kind {
        RepKind::Supercuspidal { .. } => {
            if t == -(pi.twisted_conductor(chi)? as i64) {
                generic_term(pi, pt, chi)
            } else {
                Ok(zero)
            }
        }
        RepKind::Steinberg { mu } => {
            let mi = mu.inv();
            if *chi != mi {
                if t == -2 * chi.mul(mu).conductor() as i64 {
                    generic_term(pi, pt, chi)
                } else {
                    Ok(zero)
                }
            } else {
                let e = eps1(&mi)?;
                let cm = mi.conductor() as i64;
                if t == -2 {
                    Ok(qh(pi, -cm).mul(&inv_qm1(qq)).mul(&e).into())
                } else if t > -2 {
                    let k = CycloNumber::from_int(-(qq as i128 + 1));
                    Ok(k.mul(&qh(pi, -4 - 2 * t - cm)).mul(&e).into())
                } else {
                    Ok(zero)
                }
            }
        }
        RepKind::PrincipalSeries { beta1, beta2 } if pi.rep_type() == RepType::T3a => {
            let (b1i, b2i) = (beta1.inv(), beta2.inv());
            let i = if *chi == b1i {
                1
            } else if *chi == b2i {
                2
            } else {
                let tt = chi.mul(beta1).conductor() + chi.mul(beta2).conductor();
                return if t == -(tt as i64) { generic_term(pi, pt, chi) } else { Ok(zero) };
            };
            let (bi, bj, s) = if i == 1 { (beta1, beta2, 1) } else { (beta2, beta1, -1) };
            let cc = bi.inv().mul(bj).conductor() as i64;
            let lc = l as i64;
            let ee = eps1(&bi.inv())?.mul(&eps1(&bi.div(bj))?);
            if t == -cc - 1 {
                let k = qh(pi, 1 - lc).mul(&inv_qm1(qq)).neg().mul(&ee);
                Ok(CycloLaurent::monomial(s * (1 - cc), k))
            } else if t >= -cc {
                let k = qh(pi, -t - lc - cc).mul(&ee);
                Ok(CycloLaurent::monomial(-s * (t + 2 * cc), k))
            } else {
                Ok(zero)
            }
        }
        RepKind::PrincipalSeries { beta1, .. } => {
            let bi = beta1.inv();
            if *chi != bi {
                return if t == -2 * chi.mul(beta1).conductor() as i64 {
                    generic_term(pi, pt, chi)
                } else {
                    Ok(zero)
                };
            }
            let e = eps1(&bi)?;
            let cb = bi.conductor() as i64;
            if t == -2 {
                Ok(qh(pi, -cb).mul(&inv_qm1(qq)).mul(&e).into())
            } else if t == -1 {
                let k = qh(pi, -1 - cb).mul(&e).neg();
                Ok(CycloLaurent::monomial(-1, k.clone()).add(&CycloLaurent::monomial(1, k)))
            } else if t >= 0 {
                let k = qh(pi, -2 - t - cb).mul(&e).neg();
                let mut poly = CycloLaurent::monomial(-(t + 2), CycloNumber::one())
                    .add(&CycloLaurent::monomial(t + 2, CycloNumber::one()));
                let qm1 = CycloNumber::from_int(-(qq as i128 - 1));
                for kk in 0..=t {
                    poly = poly.add(&CycloLaurent::monomial(t - 2 * kk, qm1.clone()));
                }
                Ok(poly.scale(&k))
            } else {
                Ok(zero)
            }
        }
    }
}

/// The nonzero entries of chi -> c_{t,l}(chi) over characters of
/// conductor at most l.
#[derive(Clone, Debug)]
pub struct CoefficientTable {
    pub t: i64,
    pub l: u32,
    pub entries: Vec<(MultChar, CycloLaurent)>,
}

impl CoefficientTable {
    pub fn build(pi: &RepDescriptor, t: i64, l: u32) -> Result<Self> {
        let pt = pi.contragredient()?;
        Self::build_with(pi, &pt, t, l)
    }

    pub fn build_with(pi: &RepDescriptor, pt: &RepDescriptor, t: i64, l: u32) -> Result<Self> {
        let mut entries = Vec::new();
        for chi in characters_up_to(pi, l)? {
            let c = c_tl_with(pi, pt, &chi, t, l)?;
            if !c.is_zero() {
                entries.push((chi, c));
            }
        }
        Ok(CoefficientTable { t, l, entries })
    }

    /// Sum c(chi) chi(v).
    pub fn evaluate(&self, v: &UnitClass) -> Result<CycloLaurent> {
        let mut acc = CycloLaurent::zero();
        if self.entries.is_empty() {
            return Ok(acc);
        }
        if self.l == 0 {
            for (_, c) in &self.entries {
                acc = acc.add(c);
            }
            return Ok(acc);
        }
        if v.level < self.l {
            return Err(Error::LevelTooLow { got: v.level, need: self.l });
        }
        let e = v.at_level(self.l).dlog();
        for (chi, c) in &self.entries {
            let (num, den) = chi.frac_from_dlog_at(self.l, &e);
            acc = acc.add(&c.scale(&CycloNumber::root(den, num as i64)));
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> =
            self.entries.iter().map(|(chi, c)| json!({"chi": chi.to_json(), "c": c.to_json()})).collect();
        json!({"t": self.t, "l": self.l, "entries": rows})
    }
}

/// Characters that can carry a nonzero c_{t,l}: conductor exactly l, plus
/// the trivial character for l <= 1.
fn characters_up_to(pi: &RepDescriptor, l: u32) -> Result<Vec<MultChar>> {
    if l == 0 {
        return Ok(vec![MultChar::trivial(&pi.field)]);
    }
    Ok(enumerate_chars(&pi.field, l)?
        .into_iter()
        .filter(|c| c.conductor() == l || (l == 1 && c.is_trivial()))
        .collect())
}

/// W_pi(g_{t,l,v}) through the Fourier expansion, for any 0 <= l <= n.
pub fn whittaker_value_direct(pi: &RepDescriptor, t: i64, l: u32, v: &UnitClass) -> Result<CycloLaurent> {
    CoefficientTable::build(pi, t, l)?.evaluate(v)
}

/// Sign conventions for the additive character factor in the Atkin-Lehner
/// relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlVariant {
    /// psi(-p^{t+l} v^-1)
    Derived,
    /// psi(p^{-t+l} v^-1)
    Printed,
}

fn psi_factor(pi: &RepDescriptor, variant: AlVariant, t: i64, l: u32, v: &UnitClass) -> Result<CycloNumber> {
    let (val, unit) = match variant {
        AlVariant::Derived => (t + l as i64, v.inv().neg()),
        AlVariant::Printed => (-t + l as i64, v.inv()),
    };
    if val >= 0 {
        return Ok(CycloNumber::one());
    }
    AdditiveChar::new(&pi.field).eval(&FracElement::new(val, unit))
}

/// Both sides of the Atkin-Lehner relation
/// W_{pi~}(g_{t,l,v}) = eps(1/2,pi) omega(v) psi(..) W_pi(g_{t+2l-n,n-l,-v}),
/// each evaluated by Fourier expansion.
pub fn atkin_lehner_sides(
    pi: &RepDescriptor,
    t: i64,
    l: u32,
    v: &UnitClass,
    variant: AlVariant,
) -> Result<(CycloLaurent, CycloLaurent)> {
    let n = pi.conductor();
    if l > n {
        return Err(Error::LevelOutOfRange { l: l as i64, n });
    }
    let pt = pi.contragredient()?;
    let lhs = whittaker_value_direct(&pt, t, l, v)?;
    let w = whittaker_value_direct(pi, t + 2 * l as i64 - n as i64, n - l, &v.neg())?;
    if w.is_zero() {
        return Ok((lhs, w));
    }
    let k = pi.omega().eval(v)?.mul(&psi_factor(pi, variant, t, l, v)?);
    Ok((lhs, w.mul(&pi.epsilon()?).scale(&k)))
}

/// Upper end of the l-range on which values are read off the Fourier
/// expansion; the remaining interior l go through the Atkin-Lehner relation.
pub fn direct_window(pi: &RepDescriptor) -> u32 {
    match &pi.kind {
        RepKind::PrincipalSeries { beta1, beta2 } if pi.rep_type() == RepType::T3a => {
            beta1.conductor().max(beta2.conductor())
        }
        _ => pi.conductor() / 2,
    }
}

/// W_pi(g_{t,0,v}) = eps(1/2, pi~) if t = -n, else 0.
pub fn endpoint_l0(pi: &RepDescriptor, t: i64) -> Result<CycloLaurent> {
    if t == -(pi.conductor() as i64) {
        pi.contragredient()?.epsilon()
    } else {
        Ok(CycloLaurent::zero())
    }
}

/// W_pi(g_{t,n,v}) = omega(-1) omega(v)^-1 psi(-p^{-n} v^-1) if t = -2n, else 0.
pub fn endpoint_ln(pi: &RepDescriptor, t: i64, v: &UnitClass) -> Result<CycloLaurent> {
    let n = pi.conductor();
    if t != -2 * n as i64 {
        return Ok(CycloLaurent::zero());
    }
    if v.level < n {
        return Err(Error::LevelTooLow { got: v.level, need: n });
    }
    let w = pi.omega();
    let one = UnitClass::one(&pi.field, v.level.max(1));
    let k = w
        .eval(&one.neg())?
        .mul(&w.inv().eval(v)?)
        .mul(&AdditiveChar::new(&pi.field).eval(&FracElement::new(-(n as i64), v.inv().neg()))?);
    Ok(k.into())
}

/// W_pi(g_{t,l,v}): endpoints by closed form, l inside the window by the
/// Fourier expansion, and the rest by the Atkin-Lehner relation applied to
/// the contragredient.
pub fn whittaker_value(pi: &RepDescriptor, point: &CellPoint) -> Result<CycloLaurent> {
    let n = pi.conductor();
    let (t, l, v) = (point.t, point.l, &point.v);
    if l > n {
        return Err(Error::LevelOutOfRange { l: l as i64, n });
    }
    if l == 0 {
        return endpoint_l0(pi, t);
    }
    if l == n {
        return endpoint_ln(pi, t, v);
    }
    if l <= direct_window(pi) {
        return whittaker_value_direct(pi, t, l, v);
    }
    let pt = pi.contragredient()?;
    let w = whittaker_value_direct(&pt, t + 2 * l as i64 - n as i64, n - l, &v.neg())?;
    if w.is_zero() {
        return Ok(w);
    }
    let k = pt.omega().eval(v)?.mul(&psi_factor(pi, AlVariant::Derived, t, l, v)?);
    Ok(w.mul(&pt.epsilon()?).scale(&k))
}

/// Roots of unity of order prime to p that can occur in values attached to
/// representations over F (including its quadratic extension and the
/// specializations of X).
pub fn tame_order(pi: &RepDescriptor) -> u64 {
    let q = pi.field.q;
    let mut m = num_integer::lcm(q * q - 1, 24);
    while m % pi.field.p == 0 {
        m /= pi.field.p;
    }
    m
}

/// An integer a' with a' = a mod p^big and a' = 1 on the tame part, or a
/// itself when a is already a unit modulo p^big * tame.
pub fn galois_lift(pi: &RepDescriptor, a: i64, big: u32) -> Result<i64> {
    let p = pi.field.p;
    let pn = pow_u64(p, big) as i128;
    let m = tame_order(pi) as i128;
    let modulus = pn * m;
    if (a as i128).gcd(&modulus) == 1 {
        return Ok(a);
    }
    if (a as i128).gcd(&(p as i128)) != 1 {
        return Err(Error::NotCoprime(a, p));
    }
    // a' = a + pn * k with a' = 1 mod m.
    let inv = crate::util::invmod(pn.rem_euclid(m), m).ok_or(Error::NotCoprime(a, m as u64))?;
    let k = ((1 - a as i128).rem_euclid(m) * inv).rem_euclid(m);
    let r = (a as i128 + pn * k).rem_euclid(modulus);
    Ok(r as i64)
}

/// Data of one Galois comparison at a cell, with X specialized to zeta_r^s.
#[derive(Clone, Debug)]
pub struct GaloisSides {
    /// tau_a'(W_pi(g_{t,l,v})).
    pub lhs: CycloNumber,
    /// W_{tau pi}(g_{t,l,alpha^-1 v}).
    pub rhs: CycloNumber,
    /// omega_{tau pi}(alpha); the two sides differ exactly by this factor.
    pub omega_alpha: CycloNumber,
    pub lift: i64,
}

impl GaloisSides {
    pub fn literal_holds(&self) -> bool {
        self.lhs == self.rhs
    }

    /// tau(W_pi(g)) = omega_{tau pi}(alpha)^-1 W_{tau pi}(a(alpha) g).
    pub fn normalized_holds(&self) -> bool {
        self.lhs.mul(&self.omega_alpha) == self.rhs
    }
}

/// The Galois conjugate representation: characters raised to a', and for
/// principal series the unramified twist by sigma = tau(sqrt q)/sqrt q coming
/// from the normalized induction. Steinberg and dihedral data carry no twist.
fn galois_rep_value(tpi: &RepDescriptor, point: &CellPoint, sigma: i64, x: &CycloNumber) -> Result<CycloNumber> {
    let mut w = whittaker_value(tpi, point)?.substitute(x)?;
    if sigma == -1 && tpi.has_x() && point.t.rem_euclid(2) == 1 {
        w = w.neg();
    }
    Ok(w)
}

/// Both sides of tau(W_pi(g_{t,l,v})) = W_{tau pi}(g_{t,l,alpha^-1 v}) for
/// tau = tau_a', where alpha = a' as a unit.
pub fn galois_act_sides(pi: &RepDescriptor, point: &CellPoint, a: i64, r: u64, s: i64) -> Result<GaloisSides> {
    let n = pi.conductor();
    let big = working_level(n).max(point.v.level);
    let ap = galois_lift(pi, a, big)?;
    let lhs = whittaker_value(pi, point)?.specialize(r, s).galois(ap)?;
    let sq = q_half_pow(pi.field.p, pi.field.f, 1);
    let sigma = if sq.galois(ap)? == sq { 1 } else { -1 };
    let tpi = pi.galois_characters(ap)?;
    let alpha = UnitClass::from_int(&pi.field, point.v.level, ap)?;
    let p2 = CellPoint { v: alpha.inv().mul(&point.v), ..point.clone() };
    let x = CycloNumber::root(r, s).galois(ap)?;
    let rhs = galois_rep_value(&tpi, &p2, sigma, &x)?;
    let omega_alpha = tpi.omega().eval(&alpha)?;
    Ok(GaloisSides { lhs, rhs, omega_alpha, lift: ap })
}

/// The literal identity tau(W_pi(g)) = W_{tau pi}(a(alpha) g).
pub fn galois_act_check(pi: &RepDescriptor, point: &CellPoint, a: i64, r: u64, s: i64) -> Result<bool> {
    Ok(galois_act_sides(pi, point, a, r, s)?.literal_holds())
}

/// Exact Atkin-Lehner check (formal in X).
pub fn atkin_lehner_check(pi: &RepDescriptor, t: i64, l: u32, v: &UnitClass) -> Result<bool> {
    let (a, b) = atkin_lehner_sides(pi, t, l, v, AlVariant::Derived)?;
    Ok(a == b)
}

/// Fourier inversion: (1/#U_l) sum_v W(g_{t,l,v}) chi^-1(v) over (O/p^l)^x,
/// for every chi of conductor at most l.
pub fn fourier_inversion(pi: &RepDescriptor, t: i64, l: u32) -> Result<Vec<(MultChar, CycloLaurent)>> {
    let fd = pi.field.clone();
    let table = CoefficientTable::build(pi, t, l)?;
    let k = l.max(1);
    let units = crate::local_arith::unit_table(&fd, k);
    let vals: Vec<CycloLaurent> = units
        .elems
        .iter()
        .map(|c| {
            let v = UnitClass { field: fd.clone(), level: k, coeffs: c.clone() };
            table.evaluate(&v)
        })
        .collect::<Result<_>>()?;
    let scale = q(1, fd.unit_count(k) as i128);
    // Sum raw exponents at one common order and reduce once per power of X.
    let mut m = 1u64;
    for w in &vals {
        for c in w.terms().values() {
            m = m.lcm(&c.order());
        }
    }
    let mut out = Vec::new();
    for chi in enumerate_chars(&fd, l)? {
        let chi_inv = chi.inv();
        let mut mm = m;
        let roots: Vec<(u64, u64)> = units.exps.iter().map(|e| chi_inv.frac_from_dlog_at(k, e)).collect();
        for (_, den) in &roots {
            mm = mm.lcm(den);
        }
        let mut raw: BTreeMap<i64, HashMap<u64, Q>> = BTreeMap::new();
        for (w, (num, den)) in vals.iter().zip(&roots) {
            let shift = (num % den) * (mm / den);
            for (x, c) in w.terms() {
                let step = mm / c.order();
                let slot = raw.entry(*x).or_default();
                for (ex, v) in c.terms() {
                    let key = (ex * step + shift) % mm;
                    let e = slot.entry(key).or_insert_with(Q::zero);
                    *e += v;
                }
            }
        }
        let mut acc = CycloLaurent::zero();
        for (x, slot) in raw {
            let c = CycloNumber::from_terms(mm, slot.into_iter().map(|(e, v)| (e, v * scale)));
            acc = acc.add(&CycloLaurent::monomial(x, c));
        }
        out.push((chi, acc));
    }
    Ok(out)
}

/// Evaluates W_pi on many cells with the contragredient and epsilon
/// factors computed once; the routing matches `whittaker_value`.
pub struct Evaluator<'a> {
    pub pi: &'a RepDescriptor,
    pub pt: RepDescriptor,
    eps_pt: CycloLaurent,
    window: u32,
}

impl<'a> Evaluator<'a> {
    pub fn new(pi: &'a RepDescriptor) -> Result<Self> {
        let pt = pi.contragredient()?;
        let eps_pt = pt.epsilon()?;
        Ok(Evaluator { pi, pt, eps_pt, window: direct_window(pi) })
    }

    /// W_pi(g_{t,l,v}) for each v.
    pub fn values(&self, t: i64, l: u32, vs: &[UnitClass]) -> Result<Vec<CycloLaurent>> {
        let pi = self.pi;
        let n = pi.conductor();
        if l > n {
            return Err(Error::LevelOutOfRange { l: l as i64, n });
        }
        if l == 0 {
            let w = if t == -(n as i64) { self.eps_pt.clone() } else { CycloLaurent::zero() };
            return Ok(vec![w; vs.len()]);
        }
        if l == n {
            return vs.iter().map(|v| endpoint_ln(pi, t, v)).collect();
        }
        if l <= self.window {
            let tb = CoefficientTable::build_with(pi, &self.pt, t, l)?;
            return vs.iter().map(|v| tb.evaluate(v)).collect();
        }
        let tb = CoefficientTable::build_with(&self.pt, pi, t + 2 * l as i64 - n as i64, n - l)?;
        vs.iter()
            .map(|v| {
                let w = tb.evaluate(&v.neg())?;
                if w.is_zero() {
                    return Ok(w);
                }
                let k = self.pt.omega().eval(v)?.mul(&psi_factor(pi, AlVariant::Derived, t, l, v)?);
                Ok(w.mul(&self.eps_pt).scale(&k))
            })
            .collect()
    }
}

/// Representatives of O^x/(1+p^m), as canonical lifts carried at level k.
pub fn transversal(pi: &RepDescriptor, m: u32, k: u32) -> Vec<UnitClass> {
    let fd = &pi.field;
    if m == 0 {
        return vec![UnitClass::one(fd, k)];
    }
    crate::local_arith::unit_table(fd, m)
        .elems
        .iter()
        .map(|c| UnitClass { field: fd.clone(), level: m, coeffs: c.clone() }.lift_to(k.max(m)))
        .collect()
}
