//! Gauss sums G(x, chi) and GL(1) epsilon factors at s = 1/2.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_traits::Zero;

use crate::characters::{AdditiveChar, MultChar};
use crate::cyclo::{q, q_half_pow, qi, qmul, CycloNumber, Q};
use crate::error::{Error, Result};
use crate::local_arith::{for_each_unit, FracElement, UnitClass};
use crate::util::{pow_u64, powmod};
use crate::valuation::{val_p_cyclo, val_p_cyclo_embedding, ValRational};

/// Cap on the size of the unit group a brute-force sum may visit.
pub const DEFAULT_SUM_CAP: u64 = 2_000_000;

/// zeta_F(1) = q/(q-1).
pub fn zeta_f1(qq: u64) -> Q {
    q(qq as i128, qq as i128 - 1)
}

/// zeta_F(2) = q^2/(q^2-1).
pub fn zeta_f2(qq: u64) -> Q {
    let q2 = (qq as i128) * (qq as i128);
    q(q2, q2 - 1)
}

/// G(x, chi) as the normalized sum over (O/p^L)^x with
/// L = max(c(chi), -val(x), 1).
pub fn gauss_bruteforce(chi: &MultChar, x: &FracElement) -> Result<CycloNumber> {
    gauss_bruteforce_capped(chi, x, DEFAULT_SUM_CAP)
}

pub fn gauss_bruteforce_capped(chi: &MultChar, x: &FracElement, cap: u64) -> Result<CycloNumber> {
    let fd = chi.field().clone();
    let j = (-x.valuation).max(0) as u32;
    let l = chi.conductor().max(j).max(1);
    let count = fd.unit_count(l);
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }
    if x.unit.level < j {
        return Err(Error::LevelTooLow { got: x.unit.level, need: j });
    }
    let d_chi = chi.value_denominator();
    let d_psi = pow_u64(fd.p, j);
    let m = num_integer::lcm(d_chi, d_psi);
    let (s_chi, s_psi) = (m / d_chi, m / d_psi);
    let psi = AdditiveChar::new(&fd);
    let ring = fd.ring(l);
    let u = x.unit.at_level(l).coeffs;
    let u_is_one = u == ring.one();
    let mut counts = vec![0i128; m as usize];
    for_each_unit(&fd, l, |y, e| {
        let (a, _) = chi.frac_from_dlog_at(l, e);
        let b = if j == 0 {
            0
        } else if u_is_one {
            psi.frac(y, j).0
        } else {
            psi.frac(&ring.mul(y, &u), j).0
        };
        let idx = (a * s_chi + b * s_psi) % m;
        counts[idx as usize] += 1;
    });
    let scale = q(1, count as i128);
    Ok(CycloNumber::from_terms(
        m,
        counts
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c != 0)
            .map(|(e, c)| (e as u64, qmul(&qi(c), &scale))),
    ))
}

type EpsKey = (u64, usize, u32, Vec<u64>);

fn eps_cache() -> &'static Mutex<HashMap<EpsKey, CycloNumber>> {
    static C: OnceLock<Mutex<HashMap<EpsKey, CycloNumber>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// epsilon(1/2, chi) for ramified chi, defined through
/// epsilon(1/2, chi) = G(p^-c, chi^-1) (q-1) q^(c/2 - 1).
pub fn epsilon_value(chi: &MultChar) -> Result<CycloNumber> {
    if chi.is_trivial() {
        return Err(Error::Unramified);
    }
    let fd = chi.field();
    let key = (fd.p, fd.f, chi.level(), chi.exponents().to_vec());
    if let Some(v) = eps_cache().lock().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let c = chi.conductor();
    let x = FracElement::new(-(c as i64), UnitClass::one(fd, c));
    let g = gauss_bruteforce(&chi.inv(), &x)?;
    let v = g
        .scale(&qi(fd.q as i128 - 1))
        .mul(&q_half_pow(fd.p, fd.f, c as i64 - 2));
    eps_cache().lock().unwrap().insert(key, v.clone());
    Ok(v)
}

/// Closed form of G(x, chi) from epsilon factors.
pub fn gauss_closed(chi: &MultChar, x: &FracElement) -> Result<CycloNumber> {
    let fd = chi.field();
    let c = chi.conductor() as i64;
    let v = x.valuation;
    if c == 0 {
        return Ok(if v >= 0 {
            CycloNumber::one()
        } else if v == -1 {
            CycloNumber::from_q(q(-1, fd.q as i128 - 1))
        } else {
            CycloNumber::zero()
        });
    }
    if v != -c {
        return Ok(CycloNumber::zero());
    }
    let eps = epsilon_value(&chi.inv())?;
    let chix = chi.eval(&x.unit.inv())?;
    Ok(q_half_pow(fd.p, fd.f, 2 - c)
        .scale(&q(1, fd.q as i128 - 1))
        .mul(&eps)
        .mul(&chix))
}

#[derive(Clone, Debug)]
pub struct EpsFactor {
    pub chi: MultChar,
    pub value: CycloNumber,
    pub valuation: ValRational,
    pub s_invariant: Option<i64>,
}

pub fn epsilon_gl1(chi: &MultChar) -> Result<EpsFactor> {
    let value = epsilon_value(chi)?;
    let valuation = val_p_cyclo(&value, chi.field().p)?;
    let s_invariant = if chi.conductor() == 1 { s_from_val(chi, &valuation) } else { None };
    Ok(EpsFactor { chi: chi.clone(), value, valuation, s_invariant })
}

fn s_from_val(chi: &MultChar, v: &ValRational) -> Option<i64> {
    let fd = chi.field();
    let x = v.finite()?;
    let s = (x + q(fd.f as i128, 2)) * qi(fd.p as i128 - 1);
    s.is_integer().then(|| *s.numer() as i64)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct L1Report {
    pub valuation: ValRational,
    pub s: Option<i64>,
    pub in_range: bool,
}

/// Check the valuation law for epsilon(1/2, chi): for c = 1 the quantity
/// (val + f/2)(p-1) is an integer in [1, (p-1)f]; for c > 1 val = 0.
pub fn check_l1(chi: &MultChar) -> Result<L1Report> {
    check_l1_embedding(chi, 1)
}

/// The same check for the embedding twisted by zeta -> zeta^b.
pub fn check_l1_embedding(chi: &MultChar, b: i64) -> Result<L1Report> {
    let fd = chi.field();
    let e = epsilon_value(chi)?;
    let valuation = if b == 1 { val_p_cyclo(&e, fd.p)? } else { val_p_cyclo_embedding(&e, fd.p, b)? };
    if chi.conductor() == 1 {
        let s = s_from_val(chi, &valuation);
        let in_range = matches!(s, Some(s) if s >= 1 && s <= (fd.p as i64 - 1) * fd.f as i64);
        Ok(L1Report { valuation, s, in_range })
    } else {
        let in_range = valuation == ValRational::Finite(Q::zero());
        Ok(L1Report { valuation, s: None, in_range })
    }
}

/// Independent s for f = 1 from Stickelberger's theorem. With omega the
/// Teichmuller character of the pinned prime, chi = omega^a (0 < a < p-1)
/// gives val(epsilon(1/2, chi)) = -1/2 + a/(p-1).
pub fn digit_oracle_s(chi: &MultChar) -> Result<i64> {
    let fd = chi.field();
    if fd.f != 1 || chi.conductor() != 1 {
        return Err(Error::UnsupportedRep("digit oracle needs f = 1 and conductor 1".into()));
    }
    let p = fd.p;
    // Residue of the image of zeta_{p-1} under the pinned embedding of an
    // ambient order containing the epsilon factor.
    let m = num_integer::lcm(4 * p, p - 1);
    let r = crate::valuation::residue_of_root(p, m, m / (p - 1)).expect("zeta_{p-1} has residue in F_p");
    // r = g^b with g the character generator (least primitive root).
    let g = fd.prim_root;
    let b = (0..p - 1).find(|&b| powmod(g, b, p) == r).expect("residue is a power of g");
    let a0 = chi.exponents()[0];
    Ok(((a0 * b) % (p - 1)) as i64)
}
