//! Representation descriptors for Types 1, 2a, 3a and 3b.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde_json::{json, Value};

use crate::characters::{enumerate_chars, enumerate_chars_capped, MultChar, DEFAULT_CHAR_CAP};
use crate::cyclo::{CycloLaurent, CycloNumber};
use crate::error::{Error, Result};
use crate::gauss_eps::epsilon_value;
use crate::local_arith::{field, Field, QuadExt};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RepType {
    T1,
    T2a,
    T3a,
    T3b,
}

impl RepType {
    pub fn as_str(&self) -> &'static str {
        match self {
            RepType::T1 => "1",
            RepType::T2a => "2a",
            RepType::T3a => "3a",
            RepType::T3b => "3b",
        }
    }

    pub fn parse(s: &str) -> Result<RepType> {
        match s {
            "1" => Ok(RepType::T1),
            "2a" => Ok(RepType::T2a),
            "3a" => Ok(RepType::T3a),
            "3b" => Ok(RepType::T3b),
            "2b" | "3c" => Err(Error::UnsupportedRep(format!("type {s} is excluded"))),
            _ => Err(Error::Parse(format!("unknown representation type {s:?}"))),
        }
    }
}

impl fmt::Display for RepType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Cached unramified quadratic extension of a field.
pub fn quad_ext(base: &Field) -> Result<Arc<QuadExt>> {
    static C: OnceLock<Mutex<HashMap<(u64, usize), Arc<QuadExt>>>> = OnceLock::new();
    let c = C.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(e) = c.lock().unwrap().get(&(base.p, base.f)) {
        return Ok(e.clone());
    }
    let e = Arc::new(QuadExt::new(base)?);
    c.lock().unwrap().insert((base.p, base.f), e.clone());
    Ok(e)
}

/// GL(1) epsilon factor at 1/2 for a character of F^x with chi(p) = 1,
/// with the unramified value 1.
pub fn eps1(chi: &MultChar) -> Result<CycloNumber> {
    if chi.is_trivial() {
        Ok(CycloNumber::one())
    } else {
        epsilon_value(chi)
    }
}

/// epsilon(1/2, xi) over E for a character xi with xi(p) = -1, given by its
/// restriction to units.
pub fn eps_e_signed(xi: &MultChar) -> Result<CycloNumber> {
    let e = eps1(xi)?;
    Ok(if xi.conductor() % 2 == 1 { e.neg() } else { e })
}

#[derive(Clone, Debug)]
pub enum RepKind {
    /// Dihedral supercuspidal from a character xi of E^x with xi(p) = -1;
    /// xi is stored by its restriction to O_E^x.
    Supercuspidal { ext: Arc<QuadExt>, xi: MultChar },
    /// mu St with mu ramified.
    Steinberg { mu: MultChar },
    /// beta_1 |.|^c1 + beta_2 |.|^(-c1) with X = q^c1 formal.
    PrincipalSeries { beta1: MultChar, beta2: MultChar },
}

#[derive(Clone, Debug)]
pub struct RepDescriptor {
    pub field: Field,
    pub kind: RepKind,
    conductor: u32,
    omega: MultChar,
}

impl PartialEq for RepDescriptor {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (RepKind::Supercuspidal { xi: a, .. }, RepKind::Supercuspidal { xi: b, .. }) => a == b,
            (RepKind::Steinberg { mu: a }, RepKind::Steinberg { mu: b }) => a == b,
            (
                RepKind::PrincipalSeries { beta1: a1, beta2: a2 },
                RepKind::PrincipalSeries { beta1: b1, beta2: b2 },
            ) => a1 == b1 && a2 == b2,
            _ => false,
        }
    }
}

fn xi_sigma(ext: &QuadExt, xi: &MultChar) -> Result<MultChar> {
    MultChar::from_generator_values(&ext.ext, xi.level(), |g| xi.value_frac(&ext.sigma(g)).unwrap())
}

impl RepDescriptor {
    pub fn supercuspidal(ext: Arc<QuadExt>, xi: MultChar) -> Result<Self> {
        if xi.field() != &ext.ext {
            return Err(Error::FieldMismatch("xi must be a character of E".into()));
        }
        // Trivial on the norm-one kernel iff xi factors through the norm,
        // iff xi o sigma = xi.
        if xi_sigma(&ext, &xi)? == xi {
            return Err(Error::InvalidRep("xi is trivial on the kernel of the norm".into()));
        }
        let field = ext.base.clone();
        let omega = xi.restrict(&ext)?;
        let conductor = 2 * xi.conductor();
        Ok(RepDescriptor { field, kind: RepKind::Supercuspidal { ext, xi }, conductor, omega })
    }

    pub fn steinberg(mu: MultChar) -> Result<Self> {
        if mu.is_trivial() {
            return Err(Error::UnsupportedRep("type 2b (unramified twist of Steinberg) is excluded".into()));
        }
        let field = mu.field().clone();
        let omega = mu.mul(&mu);
        let conductor = 2 * mu.conductor();
        Ok(RepDescriptor { field, kind: RepKind::Steinberg { mu }, conductor, omega })
    }

    pub fn principal_series(beta1: MultChar, beta2: MultChar) -> Result<Self> {
        if beta1.field() != beta2.field() {
            return Err(Error::FieldMismatch("beta_1 and beta_2 over different fields".into()));
        }
        if beta1.is_trivial() || beta2.is_trivial() {
            return Err(Error::UnsupportedRep("type 3c (one unramified character) is excluded".into()));
        }
        let field = beta1.field().clone();
        let omega = beta1.mul(&beta2);
        let conductor = beta1.conductor() + beta2.conductor();
        Ok(RepDescriptor { field, kind: RepKind::PrincipalSeries { beta1, beta2 }, conductor, omega })
    }

    pub fn rep_type(&self) -> RepType {
        match &self.kind {
            RepKind::Supercuspidal { .. } => RepType::T1,
            RepKind::Steinberg { .. } => RepType::T2a,
            RepKind::PrincipalSeries { beta1, beta2 } => {
                if beta1 == beta2 {
                    RepType::T3b
                } else {
                    RepType::T3a
                }
            }
        }
    }

    pub fn conductor(&self) -> u32 {
        self.conductor
    }

    pub fn omega(&self) -> &MultChar {
        &self.omega
    }

    /// Whether values carry the formal variable X = q^c1.
    pub fn has_x(&self) -> bool {
        matches!(self.kind, RepKind::PrincipalSeries { .. })
    }

    /// xi (chi o N) for Type 1.
    fn xi_twist(&self, chi: &MultChar) -> Result<MultChar> {
        match &self.kind {
            RepKind::Supercuspidal { ext, xi } => Ok(xi.mul(&chi.compose_norm(ext)?)),
            _ => unreachable!(),
        }
    }

    /// c(chi pi).
    pub fn twisted_conductor(&self, chi: &MultChar) -> Result<u32> {
        Ok(match &self.kind {
            RepKind::Supercuspidal { .. } => 2 * self.xi_twist(chi)?.conductor(),
            RepKind::Steinberg { mu } => {
                let cm = chi.mul(mu);
                if cm.is_trivial() {
                    1
                } else {
                    2 * cm.conductor()
                }
            }
            RepKind::PrincipalSeries { beta1, beta2 } => chi.mul(beta1).conductor() + chi.mul(beta2).conductor(),
        })
    }

    /// epsilon(1/2, pi) as a Laurent polynomial in X (gamma = lambda = 1).
    pub fn epsilon(&self) -> Result<CycloLaurent> {
        self.epsilon_twist(&MultChar::trivial(&self.field))
    }

    /// epsilon(1/2, chi pi).
    pub fn epsilon_twist(&self, chi: &MultChar) -> Result<CycloLaurent> {
        Ok(match &self.kind {
            RepKind::Supercuspidal { .. } => CycloLaurent::constant(eps_e_signed(&self.xi_twist(chi)?)?),
            RepKind::Steinberg { mu } => {
                let cm = chi.mul(mu);
                if cm.is_trivial() {
                    CycloLaurent::constant(CycloNumber::from_int(-1))
                } else {
                    let e = eps1(&cm)?;
                    CycloLaurent::constant(e.mul(&e))
                }
            }
            RepKind::PrincipalSeries { beta1, beta2 } => {
                // epsilon(1/2, chi beta_i |.|^{c_i}) = q^{-c_i c(chi beta_i)} epsilon(1/2, chi beta_i).
                let (a, b) = (chi.mul(beta1), chi.mul(beta2));
                let k = b.conductor() as i64 - a.conductor() as i64;
                CycloLaurent::monomial(k, eps1(&a)?.mul(&eps1(&b)?))
            }
        })
    }

    /// The contragredient omega^{-1} pi.
    pub fn contragredient(&self) -> Result<RepDescriptor> {
        let r = match &self.kind {
            RepKind::Supercuspidal { ext, xi } => {
                let r = xi.restrict(ext)?.inv().compose_norm(ext)?;
                RepDescriptor::supercuspidal(ext.clone(), xi.mul(&r))?
            }
            RepKind::Steinberg { mu } => RepDescriptor::steinberg(mu.inv())?,
            RepKind::PrincipalSeries { beta1, beta2 } => {
                RepDescriptor::principal_series(beta2.inv(), beta1.inv())?
            }
        };
        debug_assert_eq!(r.conductor, self.conductor);
        Ok(r)
    }

    /// Galois conjugate data: characters raised to the a-th power. The unramified
    /// sign twist coming from tau(sqrt q) is handled by the caller.
    pub fn galois_characters(&self, a: i64) -> Result<RepDescriptor> {
        match &self.kind {
            RepKind::Supercuspidal { ext, xi } => RepDescriptor::supercuspidal(ext.clone(), xi.galois(a)),
            RepKind::Steinberg { mu } => RepDescriptor::steinberg(mu.galois(a)),
            RepKind::PrincipalSeries { beta1, beta2 } => {
                RepDescriptor::principal_series(beta1.galois(a), beta2.galois(a))
            }
        }
    }

    /// L(s, pi) = 1 for every supported type.
    pub fn l_factor_is_trivial(&self) -> bool {
        true
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "type": self.rep_type().as_str(),
            "p": self.field.p,
            "f": self.field.f,
            "conductor": self.conductor,
            "omega": self.omega.to_json(),
        });
        match &self.kind {
            RepKind::Supercuspidal { xi, .. } => {
                v["xi"] = xi.to_json();
                v["xi_at_uniformizer"] = json!(-1);
            }
            RepKind::Steinberg { mu } => v["mu"] = mu.to_json(),
            RepKind::PrincipalSeries { beta1, beta2 } => {
                v["beta1"] = beta1.to_json();
                v["beta2"] = beta2.to_json();
            }
        }
        v
    }
}

impl fmt::Display for RepDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RepKind::Supercuspidal { xi, .. } => write!(f, "T1(xi={xi})"),
            RepKind::Steinberg { mu } => write!(f, "T2a(mu={mu})"),
            RepKind::PrincipalSeries { beta1, beta2 } => write!(f, "T{}({beta1}, {beta2})", self.rep_type()),
        }
    }
}

fn of_conductor(chars: &[MultChar], c: u32) -> Vec<MultChar> {
    chars.iter().filter(|x| x.conductor() == c).cloned().collect()
}

/// All descriptors of the given type and conductor over F. Type 3a pairs are
/// unordered (beta_1 before beta_2 in enumeration order); Type 1 lists one xi
/// from each pair {xi, xi o sigma}.
pub fn list_reps(fd: &Field, ty: RepType, n: u32) -> Result<Vec<RepDescriptor>> {
    let mut out = Vec::new();
    match ty {
        RepType::T2a | RepType::T3b => {
            if n % 2 == 1 || n < 2 {
                return Ok(out);
            }
            for c in of_conductor(&enumerate_chars(fd, n / 2)?, n / 2) {
                out.push(if ty == RepType::T2a {
                    RepDescriptor::steinberg(c)?
                } else {
                    RepDescriptor::principal_series(c.clone(), c)?
                });
            }
        }
        RepType::T3a => {
            if n < 2 {
                return Ok(out);
            }
            let all = enumerate_chars(fd, n - 1)?;
            for (i, b1) in all.iter().enumerate() {
                for b2 in &all[i + 1..] {
                    if !b1.is_trivial() && b1.conductor() + b2.conductor() == n {
                        out.push(RepDescriptor::principal_series(b1.clone(), b2.clone())?);
                    }
                }
            }
        }
        RepType::T1 => {
            if n % 2 == 1 || n < 2 {
                return Ok(out);
            }
            let ext = quad_ext(fd)?;
            let chars = enumerate_chars_capped(&ext.ext, n / 2, DEFAULT_CHAR_CAP)?;
            let mut seen: Vec<MultChar> = Vec::new();
            for xi in of_conductor(&chars, n / 2) {
                if seen.contains(&xi) {
                    continue;
                }
                let xs = xi_sigma(&ext, &xi)?;
                if xs == xi {
                    continue;
                }
                seen.push(xs);
                out.push(RepDescriptor::supercuspidal(ext.clone(), xi)?);
            }
        }
    }
    Ok(out)
}

/// Parse a type tag and build the list for (p, f).
pub fn list_reps_pf(p: u64, f: usize, ty: RepType, n: u32) -> Result<Vec<RepDescriptor>> {
    list_reps(&field(p, f)?, ty, n)
}
