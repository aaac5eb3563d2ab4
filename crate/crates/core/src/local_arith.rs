//! Unramified p-adic fields truncated at finite level.
//!
//! Elements of O_F/p^k are coefficient vectors in the power basis of a root
//! of the defining polynomial. All moduli stay below 2^62 so that u128
//! intermediates never overflow.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::util::{factor, is_prime, max_level, mulmod, pow_u64};

const DEFAULT_FIELDS: &str = include_str!("../data/fields.txt");

/// Arithmetic in (Z/p^k)[y]/(h) for a monic h.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueRing {
    pub p: u64,
    pub k: u32,
    pub modulus: u64,
    /// Monic modulus polynomial, constant term first, reduced mod p^k.
    pub h: Vec<u64>,
}

impl ResidueRing {
    pub fn new(p: u64, k: u32, h: &[i64]) -> Self {
        let modulus = pow_u64(p, k);
        let h = h.iter().map(|&c| c.rem_euclid(modulus as i64) as u64).collect();
        ResidueRing { p, k, modulus, h }
    }

    #[inline]
    pub fn deg(&self) -> usize {
        self.h.len() - 1
    }

    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.deg()]
    }

    pub fn one(&self) -> Vec<u64> {
        self.from_int(1)
    }

    pub fn from_int(&self, c: i64) -> Vec<u64> {
        let mut v = self.zero();
        v[0] = c.rem_euclid(self.modulus as i64) as u64 % self.modulus;
        v
    }

    pub fn reduce(&self, a: &[u64]) -> Vec<u64> {
        a.iter().map(|&c| c % self.modulus).collect()
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| {
                let s = x + y;
                if s >= self.modulus {
                    s - self.modulus
                } else {
                    s
                }
            })
            .collect()
    }

    pub fn sub(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| if x >= y { x - y } else { x + self.modulus - y })
            .collect()
    }

    pub fn neg(&self, a: &[u64]) -> Vec<u64> {
        a.iter()
            .map(|&x| if x == 0 { 0 } else { self.modulus - x })
            .collect()
    }

    pub fn scale(&self, a: &[u64], c: u64) -> Vec<u64> {
        let c = c % self.modulus;
        a.iter().map(|&x| mulmod(x, c, self.modulus)).collect()
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let d = self.deg();
        let m = self.modulus;
        let mut r = vec![0u64; 2 * d - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if y == 0 {
                    continue;
                }
                let s = r[i + j] + mulmod(x, y, m);
                r[i + j] = if s >= m { s - m } else { s };
            }
        }
        for i in (d..2 * d - 1).rev() {
            let c = r[i];
            if c == 0 {
                continue;
            }
            r[i] = 0;
            for j in 0..d {
                let t = mulmod(c, self.h[j], m);
                let idx = i - d + j;
                r[idx] = if r[idx] >= t { r[idx] - t } else { r[idx] + m - t };
            }
        }
        r.truncate(d);
        r
    }

    pub fn pow(&self, a: &[u64], mut e: u128) -> Vec<u64> {
        let mut r = self.one();
        let mut b = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        r
    }

    pub fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&c| c == 0)
    }

    /// The k-th power of the generator y.
    pub fn y_pow(&self, k: usize) -> Vec<u64> {
        let mut y = self.zero();
        if self.deg() == 1 {
            // y is the root of h = y + h0, i.e. -h0.
            y[0] = (self.modulus - self.h[0]) % self.modulus;
        } else {
            y[1] = 1;
        }
        self.pow(&y, k as u128)
    }

    /// Residue reduction: coefficients mod p.
    pub fn residue(&self, a: &[u64]) -> Vec<u64> {
        a.iter().map(|&c| c % self.p).collect()
    }

    /// Teichmuller lift of an element whose residue is nonzero, for residue
    /// field order `q`.
    pub fn teich(&self, a: &[u64], q: u64) -> Vec<u64> {
        let mut x = self.reduce(a);
        for _ in 0..self.k {
            x = self.pow(&x, q as u128);
        }
        x
    }
}

/// Polynomials over F_p, constant term first, trailing zeros stripped.
pub(crate) mod fp_poly {
    use crate::util::{invmod, mulmod};

    pub fn trim(mut a: Vec<u64>) -> Vec<u64> {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    pub fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let n = a.len().max(b.len());
        let mut r = vec![0; n];
        for i in 0..n {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            r[i] = (x + p - y) % p;
        }
        trim(r)
    }

    pub fn rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut r = trim(a.to_vec());
        let b = trim(b.to_vec());
        let db = b.len() - 1;
        let inv = invmod(b[db] as i128, p as i128).unwrap() as u64;
        while r.len() > db && !r.is_empty() {
            let c = mulmod(*r.last().unwrap(), inv, p);
            let shift = r.len() - 1 - db;
            for j in 0..=db {
                r[shift + j] = (r[shift + j] + p - mulmod(c, b[j], p)) % p;
            }
            r = trim(r);
        }
        r
    }

    pub fn mulmod_poly(a: &[u64], b: &[u64], h: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return vec![];
        }
        let mut r = vec![0; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                r[i + j] = (r[i + j] + mulmod(x, y, p)) % p;
            }
        }
        rem(&r, h, p)
    }

    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut a = trim(a.to_vec());
        let mut b = trim(b.to_vec());
        while !b.is_empty() {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        a
    }

    /// x^(p^e) mod h.
    pub fn frob_x(h: &[u64], p: u64, e: usize) -> Vec<u64> {
        let mut x = rem(&[0, 1], h, p);
        for _ in 0..e {
            let mut r = vec![1u64];
            let mut b = x.clone();
            let mut k = p;
            while k > 0 {
                if k & 1 == 1 {
                    r = mulmod_poly(&r, &b, h, p);
                }
                b = mulmod_poly(&b, &b, h, p);
                k >>= 1;
            }
            x = r;
        }
        x
    }

    /// Rabin's irreducibility test for a monic polynomial over F_p.
    pub fn is_irreducible(h: &[u64], p: u64) -> bool {
        let h = trim(h.to_vec());
        let n = h.len() - 1;
        if n == 0 {
            return false;
        }
        if n == 1 {
            return true;
        }
        if sub(&frob_x(&h, p, n), &[0, 1], p).iter().any(|&c| c != 0) {
            return false;
        }
        for (r, _) in crate::util::factor(n as u64) {
            let d = sub(&frob_x(&h, p, n / r as usize), &[0, 1], p);
            let g = gcd(&h, &d, p);
            if g.len() > 1 {
                return false;
            }
        }
        true
    }

    /// Lexicographically least monic irreducible polynomial of degree n,
    /// comparing coefficient vectors from the constant term up.
    pub fn least_irreducible(n: usize, p: u64) -> Vec<u64> {
        if n == 1 {
            return vec![0, 1];
        }
        let total = p.pow(n as u32);
        for idx in 0..total {
            let mut h = Vec::with_capacity(n + 1);
            let mut x = idx;
            for _ in 0..n {
                h.push(x % p);
                x /= p;
            }
            h.push(1);
            if is_irreducible(&h, p) {
                return h;
            }
        }
        unreachable!("irreducible polynomials exist in every degree")
    }
}

/// Generators of the truncated unit group at one level.
#[derive(Debug)]
pub struct LevelData {
    pub ring: ResidueRing,
    /// Generators with their orders: the Teichmuller generator first, then
    /// 1 + p*y^i for each basis index i when k >= 2.
    pub gens: Vec<(Vec<u64>, u64)>,
    /// inv_pows[i][j-1] = gens[1+i]^(-p^(j-1)), j = 1..k-1.
    inv_pows: Vec<Vec<Vec<u64>>>,
    g0_pows: Vec<Vec<u64>>,
}

/// An unramified extension of Q_p of residue degree f.
pub struct LocalFieldDesc {
    pub p: u64,
    pub f: usize,
    pub q: u64,
    pub defining_poly: Vec<i64>,
    /// Residue index (sum c_i p^i) of the least primitive root of F_q.
    pub prim_root: u64,
    res_log: Vec<u64>,
    res_exp: Vec<u64>,
    /// Tr_{F/Q_p}(y^i) for i < f.
    traces: Vec<i128>,
    levels: Mutex<HashMap<u32, Arc<LevelData>>>,
    tables: Mutex<HashMap<u32, Arc<UnitTable>>>,
}

pub type Field = Arc<LocalFieldDesc>;

impl fmt::Debug for LocalFieldDesc {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fmt, "Field(p={}, f={}, poly={:?})", self.p, self.f, self.defining_poly)
    }
}

impl PartialEq for LocalFieldDesc {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.f == other.f && self.defining_poly == other.defining_poly
    }
}
impl Eq for LocalFieldDesc {}

/// Parse the field table format: `p f c_0 ... c_f` per line, `#` comments.
pub fn parse_fields(text: &str) -> Result<HashMap<(u64, usize), Vec<i64>>> {
    let mut out = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let nums: std::result::Result<Vec<i64>, _> =
            line.split_whitespace().map(|s| s.parse::<i64>()).collect();
        let nums = nums.map_err(|e| Error::FieldData(format!("line {}: {e}", lineno + 1)))?;
        if nums.len() < 3 || nums[0] < 2 || nums[1] < 1 {
            return Err(Error::FieldData(format!("line {}: malformed", lineno + 1)));
        }
        let (p, f) = (nums[0] as u64, nums[1] as usize);
        if nums.len() != f + 3 {
            return Err(Error::FieldData(format!(
                "line {}: expected {} coefficients",
                lineno + 1,
                f + 1
            )));
        }
        if nums[f + 2] != 1 {
            return Err(Error::FieldData(format!("line {}: polynomial not monic", lineno + 1)));
        }
        out.insert((p, f), nums[2..].to_vec());
    }
    Ok(out)
}

fn field_table() -> Result<&'static HashMap<(u64, usize), Vec<i64>>> {
    static TABLE: OnceLock<std::result::Result<HashMap<(u64, usize), Vec<i64>>, Error>> =
        OnceLock::new();
    TABLE
        .get_or_init(|| match std::env::var("WHITTAKER_FIELDS_PATH") {
            Ok(path) => std::fs::read_to_string(&path)
                .map_err(|e| Error::FieldData(format!("{path}: {e}")))
                .and_then(|t| parse_fields(&t)),
            Err(_) => parse_fields(DEFAULT_FIELDS),
        })
        .as_ref()
        .map_err(|e| e.clone())
}

/// The unramified field of residue degree f over Q_p, from the field table.
/// Constructed fields are shared.
pub fn field(p: u64, f: usize) -> Result<Field> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize), Field>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(fd) = cache.lock().unwrap().get(&(p, f)) {
        return Ok(fd.clone());
    }
    if p == 2 || !is_prime(p) {
        return Err(Error::BadPrime(p));
    }
    let poly = field_table()?
        .get(&(p, f))
        .cloned()
        .ok_or(Error::UnknownField { p, f })?;
    let fd = Arc::new(LocalFieldDesc::new(p, poly)?);
    cache.lock().unwrap().insert((p, f), fd.clone());
    Ok(fd)
}

impl LocalFieldDesc {
    pub fn new(p: u64, poly: Vec<i64>) -> Result<Self> {
        if p == 2 || !is_prime(p) {
            return Err(Error::BadPrime(p));
        }
        let f = poly.len() - 1;
        if f == 0 || poly[f] != 1 {
            return Err(Error::FieldData("defining polynomial must be monic of degree >= 1".into()));
        }
        let hp: Vec<u64> = poly.iter().map(|&c| c.rem_euclid(p as i64) as u64).collect();
        if !fp_poly::is_irreducible(&hp, p) {
            return Err(Error::Reducible { p, f });
        }
        let q = pow_u64(p, f as u32);
        let r1 = ResidueRing::new(p, 1, &poly);
        let ofs = |v: &[u64]| v.iter().rev().fold(0u64, |acc, &c| acc * p + c);
        let from_idx = |mut x: u64| {
            let mut v = vec![0u64; f];
            for c in v.iter_mut() {
                *c = x % p;
                x /= p;
            }
            v
        };
        let qm1_factors = factor(q - 1);
        let mut prim_root = 0;
        for idx in 1..q {
            let a = from_idx(idx);
            let primitive = qm1_factors
                .iter()
                .all(|&(l, _)| r1.pow(&a, ((q - 1) / l) as u128) != r1.one());
            if primitive {
                prim_root = idx;
                break;
            }
        }
        let mut res_log = vec![u64::MAX; q as usize];
        let mut res_exp = vec![0u64; (q - 1) as usize];
        let g = from_idx(prim_root);
        let mut x = r1.one();
        for e in 0..q - 1 {
            let i = ofs(&x);
            res_exp[e as usize] = i;
            res_log[i as usize] = e;
            x = r1.mul(&x, &g);
        }
        // Newton power sums of the roots of the defining polynomial.
        let a: Vec<i128> = poly.iter().map(|&c| c as i128).collect();
        let mut s = vec![0i128; f];
        for i in 0..f {
            if i == 0 {
                s[0] = f as i128;
                continue;
            }
            // s_i + a_{f-1} s_{i-1} + ... + a_{f-i+1} s_1 + i a_{f-i} = 0
            let mut acc = i as i128 * a[f - i];
            for j in 1..i {
                acc += a[f - j] * s[i - j];
            }
            s[i] = -acc;
        }
        Ok(LocalFieldDesc {
            p,
            f,
            q,
            defining_poly: poly,
            prim_root,
            res_log,
            res_exp,
            traces: s,
            levels: Mutex::new(HashMap::new()),
            tables: Mutex::new(HashMap::new()),
        })
    }

    pub fn ring(&self, k: u32) -> ResidueRing {
        ResidueRing::new(self.p, k, &self.defining_poly)
    }

    /// Residue index (sum c_i p^i) of a coefficient vector.
    pub fn residue_index(&self, coeffs: &[u64]) -> u64 {
        coeffs.iter().rev().fold(0u64, |acc, &c| acc * self.p + c % self.p)
    }

    pub fn residue_from_index(&self, mut idx: u64) -> Vec<u64> {
        let mut v = vec![0u64; self.f];
        for c in v.iter_mut() {
            *c = idx % self.p;
            idx /= self.p;
        }
        v
    }

    /// Discrete logarithm in F_q^x with respect to the least primitive root.
    pub fn residue_log(&self, idx: u64) -> Option<u64> {
        let l = *self.res_log.get(idx as usize)?;
        (l != u64::MAX).then_some(l)
    }

    pub fn residue_exp(&self, e: u64) -> u64 {
        self.res_exp[(e % (self.q - 1)) as usize]
    }

    /// Tr_{F/Q_p} of an integral element given by coefficients, as an integer
    /// modulo p^j.
    pub fn trace_mod(&self, coeffs: &[u64], j: u32) -> u64 {
        let m = pow_u64(self.p, j) as i128;
        let mut t = 0i128;
        for (c, s) in coeffs.iter().zip(&self.traces) {
            t = (t + (*c as i128 % m) * s.rem_euclid(m)).rem_euclid(m);
        }
        t as u64
    }

    pub fn level_data(&self, k: u32) -> Arc<LevelData> {
        assert!(k >= 1);
        if let Some(d) = self.levels.lock().unwrap().get(&k) {
            return d.clone();
        }
        let ring = self.ring(k);
        let g0 = ring.teich(&self.residue_from_index(self.prim_root), self.q);
        let mut gens = vec![(g0.clone(), self.q - 1)];
        let mut inv_pows = Vec::new();
        if k >= 2 {
            let ord = pow_u64(self.p, k - 1);
            for i in 0..self.f {
                let mut g = ring.one();
                let yi = if i == 0 { ring.one() } else { ring.y_pow(i) };
                g = ring.add(&g, &ring.scale(&yi, self.p));
                let ginv = ring.pow(&g, (ord - 1) as u128);
                let mut pows = Vec::new();
                let mut cur = ginv;
                for _ in 1..k {
                    pows.push(cur.clone());
                    cur = ring.pow(&cur, self.p as u128);
                }
                inv_pows.push(pows);
                gens.push((g, ord));
            }
        }
        let mut g0_pows = Vec::with_capacity((self.q - 1) as usize);
        let mut x = ring.one();
        for _ in 0..self.q - 1 {
            g0_pows.push(x.clone());
            x = ring.mul(&x, &g0);
        }
        let d = Arc::new(LevelData { ring, gens, inv_pows, g0_pows });
        self.levels.lock().unwrap().insert(k, d.clone());
        d
    }

    /// Unit group order (q-1) q^(k-1).
    pub fn unit_count(&self, k: u32) -> u64 {
        (self.q - 1) * pow_u64(self.q, k - 1)
    }
}

/// Description of (O/p^k)^x.
#[derive(Clone, Debug)]
pub struct UnitGroup {
    pub generators: Vec<(UnitClass, u64)>,
    pub order: u64,
}

pub fn unit_group(field: &Field, k: u32) -> Result<UnitGroup> {
    if k == 0 {
        return Err(Error::LevelTooLow { got: 0, need: 1 });
    }
    let d = field.level_data(k);
    let generators = d
        .gens
        .iter()
        .map(|(g, o)| (UnitClass { field: field.clone(), level: k, coeffs: g.clone() }, *o))
        .collect();
    Ok(UnitGroup { generators, order: field.unit_count(k) })
}

/// Teichmuller lift of a residue element given by coefficients mod p.
pub fn teichmuller(field: &Field, residue: &[u64], k: u32) -> Result<UnitClass> {
    if residue.iter().all(|&c| c % field.p == 0) {
        return Err(Error::ZeroResidue);
    }
    let ring = field.ring(k);
    let coeffs = ring.teich(&ring.reduce(residue), field.q);
    Ok(UnitClass { field: field.clone(), level: k, coeffs })
}

/// A unit of O/p^k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitClass {
    pub field: Field,
    pub level: u32,
    pub coeffs: Vec<u64>,
}

impl UnitClass {
    pub fn new(field: &Field, level: u32, coeffs: &[i64]) -> Result<Self> {
        if level == 0 {
            return Err(Error::LevelTooLow { got: 0, need: 1 });
        }
        let ring = field.ring(level);
        let m = ring.modulus as i64;
        let mut c: Vec<u64> = coeffs.iter().map(|&x| x.rem_euclid(m) as u64).collect();
        c.resize(field.f, 0);
        if c.iter().all(|&x| x % field.p == 0) {
            return Err(Error::NotUnit);
        }
        Ok(UnitClass { field: field.clone(), level, coeffs: c })
    }

    pub fn from_int(field: &Field, level: u32, x: i64) -> Result<Self> {
        Self::new(field, level, &[x])
    }

    pub fn one(field: &Field, level: u32) -> Self {
        Self::from_int(field, level, 1).unwrap()
    }

    fn ring(&self) -> ResidueRing {
        self.field.ring(self.level)
    }

    fn check(&self, other: &UnitClass) {
        assert!(self.field == other.field, "unit from a different field");
        assert_eq!(self.level, other.level, "unit level mismatch");
    }

    pub fn mul(&self, other: &UnitClass) -> UnitClass {
        self.check(other);
        let coeffs = self.ring().mul(&self.coeffs, &other.coeffs);
        UnitClass { field: self.field.clone(), level: self.level, coeffs }
    }

    pub fn pow(&self, e: i128) -> UnitClass {
        let ord = (self.field.q - 1) as i128 * pow_u64(self.field.p, self.level - 1) as i128;
        let e = e.rem_euclid(ord) as u128;
        let coeffs = self.ring().pow(&self.coeffs, e);
        UnitClass { field: self.field.clone(), level: self.level, coeffs }
    }

    pub fn inv(&self) -> UnitClass {
        self.pow(-1)
    }

    pub fn neg(&self) -> UnitClass {
        let coeffs = self.ring().neg(&self.coeffs);
        UnitClass { field: self.field.clone(), level: self.level, coeffs }
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == self.ring().one()
    }

    /// Reduction to a lower level.
    pub fn reduce_to(&self, k: u32) -> UnitClass {
        assert!(k >= 1 && k <= self.level);
        let m = pow_u64(self.field.p, k);
        UnitClass {
            field: self.field.clone(),
            level: k,
            coeffs: self.coeffs.iter().map(|&c| c % m).collect(),
        }
    }

    /// The canonical lift (same integer coefficients) to a higher level.
    pub fn lift_to(&self, k: u32) -> UnitClass {
        assert!(k >= self.level);
        UnitClass { field: self.field.clone(), level: k, coeffs: self.coeffs.clone() }
    }

    /// Reduce or lift to level k.
    pub fn at_level(&self, k: u32) -> UnitClass {
        if k <= self.level {
            self.reduce_to(k)
        } else {
            self.lift_to(k)
        }
    }

    pub fn residue_index(&self) -> u64 {
        self.field.residue_index(&self.coeffs)
    }

    /// Exponents with respect to the level's generators: the first modulo
    /// q-1, the rest modulo p^(k-1).
    pub fn dlog(&self) -> Vec<u64> {
        let fd = &self.field;
        let d = fd.level_data(self.level);
        let ring = &d.ring;
        let e0 = fd.residue_log(self.residue_index()).expect("unit has nonzero residue");
        let mut exps = vec![e0];
        if self.level == 1 {
            return exps;
        }
        let mut w = ring.mul(&self.coeffs, &d.g0_pows[((fd.q - 1 - e0) % (fd.q - 1)) as usize]);
        exps.extend(std::iter::repeat(0).take(fd.f));
        let p = fd.p;
        for j in 1..self.level {
            let pj = pow_u64(p, j);
            for i in 0..fd.f {
                let c = if i == 0 { (w[0] + ring.modulus - 1) % ring.modulus } else { w[i] };
                debug_assert_eq!(c % pj, 0);
                let b = (c / pj) % p;
                for _ in 0..b {
                    w = ring.mul(&w, &d.inv_pows[i][(j - 1) as usize]);
                }
                exps[1 + i] += b * pow_u64(p, j - 1);
            }
        }
        debug_assert!(w == ring.one());
        exps
    }

    /// The unit with the given generator exponents.
    pub fn from_exponents(field: &Field, k: u32, exps: &[u64]) -> UnitClass {
        let d = field.level_data(k);
        let mut x = d.g0_pows[(exps[0] % (field.q - 1)) as usize].clone();
        for (i, &e) in exps.iter().enumerate().skip(1) {
            x = d.ring.mul(&x, &d.ring.pow(&d.gens[i].0, e as u128));
        }
        UnitClass { field: field.clone(), level: k, coeffs: x }
    }
}

/// A nonzero element p^valuation * unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FracElement {
    pub valuation: i64,
    pub unit: UnitClass,
}

impl FracElement {
    pub fn new(valuation: i64, unit: UnitClass) -> Self {
        FracElement { valuation, unit }
    }

    pub fn mul(&self, other: &FracElement) -> FracElement {
        let k = self.unit.level.min(other.unit.level);
        FracElement {
            valuation: self.valuation + other.valuation,
            unit: self.unit.at_level(k).mul(&other.unit.at_level(k)),
        }
    }
}

/// All units of O/p^k, with their generator exponents.
#[derive(Debug)]
pub struct UnitTable {
    pub level: u32,
    pub elems: Vec<Vec<u64>>,
    pub exps: Vec<Vec<u64>>,
}

/// Full unit tables are cached only below this size.
pub const TABLE_CACHE_LIMIT: u64 = 10_000;

/// Visit every unit of O/p^k with its exponent vector, in odometer order
/// over the generators.
pub fn for_each_unit<F: FnMut(&[u64], &[u64])>(field: &Field, k: u32, mut visit: F) {
    if field.unit_count(k) <= TABLE_CACHE_LIMIT {
        let t = unit_table(field, k);
        for (x, e) in t.elems.iter().zip(&t.exps) {
            visit(x, e);
        }
        return;
    }
    odometer(field, k, |x, e| visit(x, e));
}

fn odometer<F: FnMut(&[u64], &[u64])>(field: &Field, k: u32, mut visit: F) {
    let d = field.level_data(k);
    let n = d.gens.len();
    let mut exps = vec![0u64; n];
    let mut cur = d.ring.one();
    loop {
        visit(&cur, &exps);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            exps[i] += 1;
            cur = d.ring.mul(&cur, &d.gens[i].0);
            if exps[i] < d.gens[i].1 {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
    }
}

pub fn unit_table(field: &Field, k: u32) -> Arc<UnitTable> {
    if let Some(t) = field.tables.lock().unwrap().get(&k) {
        return t.clone();
    }
    let mut elems = Vec::new();
    let mut exps = Vec::new();
    odometer(field, k, |x, e| {
        elems.push(x.to_vec());
        exps.push(e.to_vec());
    });
    let t = Arc::new(UnitTable { level: k, elems, exps });
    if field.unit_count(k) <= TABLE_CACHE_LIMIT {
        field.tables.lock().unwrap().insert(k, t.clone());
    }
    t
}

/// Solve A x = b modulo p^k for a full-column-rank A (over F_p); returns
/// None if the system is inconsistent.
pub(crate) fn solve_mod(a: &[Vec<u64>], b: &[u64], ring_p: u64, modulus: u64) -> Option<Vec<u64>> {
    let rows = a.len();
    let cols = a[0].len();
    let mut m: Vec<Vec<u64>> = a
        .iter()
        .zip(b)
        .map(|(r, &bi)| {
            let mut r = r.clone();
            r.push(bi);
            r
        })
        .collect();
    let sub = |x: u64, y: u64| if x >= y { x - y } else { x + modulus - y };
    let mut pivrow = 0;
    let mut pivots = Vec::new();
    for c in 0..cols {
        let pr = (pivrow..rows).find(|&r| m[r][c] % ring_p != 0)?;
        m.swap(pivrow, pr);
        let inv = crate::util::invmod(m[pivrow][c] as i128, modulus as i128)? as u64;
        for x in m[pivrow].iter_mut() {
            *x = mulmod(*x, inv, modulus);
        }
        for r in 0..rows {
            if r != pivrow && m[r][c] != 0 {
                let fac = m[r][c];
                for cc in 0..=cols {
                    let t = mulmod(fac, m[pivrow][cc], modulus);
                    m[r][cc] = sub(m[r][cc], t);
                }
            }
        }
        pivots.push(c);
        pivrow += 1;
    }
    if m[pivrow..].iter().any(|r| r[cols] != 0) {
        return None;
    }
    Some((0..cols).map(|c| m[c][cols]).collect())
}

/// An unramified quadratic extension E/F with the embedding of F and the
/// Frobenius of E/F, at a fixed working level.
#[derive(Debug)]
pub struct QuadExt {
    pub base: Field,
    pub ext: Field,
    level: u32,
    /// Image in E of the defining root of F.
    theta_pows: Vec<Vec<u64>>,
    /// sigma(y^i) for the defining root y of E.
    sigma_pows: Vec<Vec<u64>>,
}

fn newton_root(ring: &ResidueRing, poly: &[i64], start: &[u64], q: u64) -> Vec<u64> {
    // Hensel lifting of a simple root; the derivative at the root is a unit.
    let eval = |x: &[u64], coeffs: &[i64]| {
        let mut acc = ring.zero();
        for &c in coeffs.iter().rev() {
            acc = ring.add(&ring.mul(&acc, x), &ring.from_int(c));
        }
        acc
    };
    let deriv: Vec<i64> = poly.iter().enumerate().skip(1).map(|(i, &c)| c * i as i64).collect();
    let mut x = ring.reduce(start);
    // Exponent of the unit group divides (q-1) p^(k-1).
    let unit_exp = (q - 1) as u128 * pow_u64(ring.p, ring.k - 1) as u128;
    let mut prec = 1;
    while prec < ring.k {
        let d = eval(&x, &deriv);
        let dinv = ring.pow(&d, unit_exp - 1);
        x = ring.sub(&x, &ring.mul(&eval(&x, poly), &dinv));
        prec *= 2;
    }
    x
}

impl QuadExt {
    pub fn new(base: &Field) -> Result<QuadExt> {
        let ext = field(base.p, 2 * base.f)?;
        Self::with_fields(base, &ext)
    }

    pub fn with_fields(base: &Field, ext: &Field) -> Result<QuadExt> {
        if ext.p != base.p || ext.f != 2 * base.f {
            return Err(Error::FieldMismatch(format!(
                "{ext:?} is not the unramified quadratic extension of {base:?}"
            )));
        }
        let level = max_level(base.p);
        let ring = ext.ring(level);
        let r1 = ext.ring(1);
        // Least residue root of the base polynomial in the residue field of E.
        let hb: Vec<u64> = base
            .defining_poly
            .iter()
            .map(|&c| c.rem_euclid(base.p as i64) as u64)
            .collect();
        let eval1 = |x: &[u64], coeffs: &[u64]| {
            let mut acc = r1.zero();
            for &c in coeffs.iter().rev() {
                acc = r1.add(&r1.mul(&acc, x), &r1.from_int(c as i64));
            }
            acc
        };
        let mut theta0 = None;
        for idx in 0..ext.q {
            let x = ext.residue_from_index(idx);
            if r1.is_zero(&eval1(&x, &hb)) {
                theta0 = Some(x);
                break;
            }
        }
        let theta0 = theta0.ok_or_else(|| Error::FieldMismatch("base polynomial has no root".into()))?;
        let theta = newton_root(&ring, &base.defining_poly, &theta0, ext.q);
        let mut theta_pows = vec![ring.one()];
        for i in 1..base.f {
            theta_pows.push(ring.mul(&theta_pows[i - 1], &theta));
        }
        // sigma(y) is the root of h_E congruent to y^(q_F).
        let y = ring.y_pow(1);
        let s0 = r1.pow(&r1.reduce(&y), base.q as u128);
        let sy = newton_root(&ring, &ext.defining_poly, &s0, ext.q);
        let mut sigma_pows = vec![ring.one()];
        for i in 1..ext.f {
            sigma_pows.push(ring.mul(&sigma_pows[i - 1], &sy));
        }
        Ok(QuadExt { base: base.clone(), ext: ext.clone(), level, theta_pows, sigma_pows })
    }

    fn lin(&self, coeffs: &[u64], basis: &[Vec<u64>], k: u32) -> Vec<u64> {
        let ring = self.ext.ring(k);
        let mut acc = ring.zero();
        for (c, b) in coeffs.iter().zip(basis) {
            acc = ring.add(&acc, &ring.scale(&ring.reduce(b), *c));
        }
        acc
    }

    /// Embed F-coordinates into E-coordinates at level k.
    pub fn embed_coeffs(&self, coeffs: &[u64], k: u32) -> Vec<u64> {
        assert!(k <= self.level);
        self.lin(coeffs, &self.theta_pows, k)
    }

    pub fn embed(&self, u: &UnitClass) -> UnitClass {
        assert!(u.field == self.base);
        UnitClass { field: self.ext.clone(), level: u.level, coeffs: self.embed_coeffs(&u.coeffs, u.level) }
    }

    pub fn sigma_coeffs(&self, coeffs: &[u64], k: u32) -> Vec<u64> {
        self.lin(coeffs, &self.sigma_pows, k)
    }

    pub fn sigma(&self, u: &UnitClass) -> UnitClass {
        UnitClass { field: self.ext.clone(), level: u.level, coeffs: self.sigma_coeffs(&u.coeffs, u.level) }
    }

    /// Express a Frobenius-fixed element of E in F-coordinates.
    pub fn descend_coeffs(&self, coeffs: &[u64], k: u32) -> Result<Vec<u64>> {
        let ring = self.ext.ring(k);
        let cols: Vec<Vec<u64>> = self.theta_pows.iter().map(|b| ring.reduce(b)).collect();
        let a: Vec<Vec<u64>> = (0..self.ext.f)
            .map(|r| cols.iter().map(|c| c[r]).collect())
            .collect();
        solve_mod(&a, coeffs, self.base.p, ring.modulus)
            .ok_or_else(|| Error::FieldMismatch("element does not lie in the base field".into()))
    }

    pub fn norm(&self, u: &UnitClass) -> Result<UnitClass> {
        let n = u.mul(&self.sigma(u));
        let c = self.descend_coeffs(&n.coeffs, u.level)?;
        Ok(UnitClass { field: self.base.clone(), level: u.level, coeffs: c })
    }

    pub fn trace_coeffs(&self, coeffs: &[u64], k: u32) -> Result<Vec<u64>> {
        let ring = self.ext.ring(k);
        let t = ring.add(&ring.reduce(coeffs), &self.sigma_coeffs(coeffs, k));
        self.descend_coeffs(&t, k)
    }
}

/// Norm and trace of a unit of E down to F.
pub fn norm_and_trace(ext: &QuadExt, u: &UnitClass) -> Result<(UnitClass, Vec<u64>)> {
    if u.field != ext.ext {
        return Err(Error::FieldMismatch("unit is not in the extension field".into()));
    }
    Ok((ext.norm(u)?, ext.trace_coeffs(&u.coeffs, u.level)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_group_orders() {
        let q3 = field(3, 1).unwrap();
        let g = unit_group(&q3, 1).unwrap();
        assert_eq!(g.generators.iter().map(|x| x.1).collect::<Vec<_>>(), vec![2]);
        let g = unit_group(&q3, 2).unwrap();
        assert_eq!(g.generators.iter().map(|x| x.1).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(g.order, 6);
        let f9 = field(3, 2).unwrap();
        let g = unit_group(&f9, 1).unwrap();
        assert_eq!(g.order, 8);
        assert_eq!(g.generators.len(), 1);
        // The generator has exact order 8.
        let x = &g.generators[0].0;
        assert!(!x.pow(4).is_one());
        assert!(x.pow(8).is_one());
    }

    #[test]
    fn generators_generate() {
        for (p, f, k) in [(3, 1, 3), (5, 1, 2), (3, 2, 2), (7, 1, 2)] {
            let fd = field(p, f).unwrap();
            let t = unit_table(&fd, k);
            let mut seen: Vec<_> = t.elems.clone();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len() as u64, fd.unit_count(k));
            for (x, e) in t.elems.iter().zip(&t.exps) {
                let u = UnitClass { field: fd.clone(), level: k, coeffs: x.clone() };
                assert_eq!(&u.dlog(), e);
                assert_eq!(UnitClass::from_exponents(&fd, k, e).coeffs, *x);
            }
        }
    }

    #[test]
    fn teichmuller_examples() {
        let q5 = field(5, 1).unwrap();
        assert_eq!(teichmuller(&q5, &[1], 3).unwrap().coeffs, vec![1]);
        assert_eq!(teichmuller(&q5, &[2], 2).unwrap().coeffs, vec![7]);
        let q3 = field(3, 1).unwrap();
        assert_eq!(teichmuller(&q3, &[2], 2).unwrap().coeffs, vec![8]);
        assert_eq!(teichmuller(&q3, &[0], 2), Err(Error::ZeroResidue));
    }

    #[test]
    fn teichmuller_search_agrees() {
        // x^4 = 1, x = 2 mod 5, by search mod 25.
        let sol: Vec<u64> = (0..25u64).filter(|&x| x % 5 == 2 && crate::util::powmod(x, 4, 25) == 1).collect();
        assert_eq!(sol, vec![7]);
    }

    #[test]
    fn norm_trace_examples() {
        let q3 = field(3, 1).unwrap();
        let ext = QuadExt::new(&q3).unwrap();
        let one = UnitClass::one(&ext.ext, 2);
        let (n, t) = norm_and_trace(&ext, &one).unwrap();
        assert!(n.is_one());
        assert_eq!(t, vec![2]);
        // alpha with alpha^2 + 1 = 0 is the defining root of F_9.
        let alpha = UnitClass::new(&ext.ext, 1, &[0, 1]).unwrap();
        let (n, t) = norm_and_trace(&ext, &alpha).unwrap();
        assert_eq!(n.coeffs, vec![1]);
        assert_eq!(t, vec![0]);
        // Galois-fixed u in F.
        let u = ext.embed(&UnitClass::from_int(&q3, 3, 5).unwrap());
        let (n, t) = norm_and_trace(&ext, &u).unwrap();
        assert_eq!(n.coeffs, vec![25 % 27]);
        assert_eq!(t, vec![10]);
    }

    #[test]
    fn norm_multiplicative_sweep() {
        for f in [1usize, 2] {
            let base = field(3, f).unwrap();
            let ext = QuadExt::new(&base).unwrap();
            for k in 1..=2 {
                let t = unit_table(&ext.ext, k);
                let us: Vec<UnitClass> = t
                    .elems
                    .iter()
                    .step_by(7)
                    .map(|c| UnitClass { field: ext.ext.clone(), level: k, coeffs: c.clone() })
                    .collect();
                for a in us.iter().take(12) {
                    for b in us.iter().take(12) {
                        let lhs = ext.norm(&a.mul(b)).unwrap();
                        let rhs = ext.norm(a).unwrap().mul(&ext.norm(b).unwrap());
                        assert_eq!(lhs, rhs);
                        let ring = ext.base.ring(k);
                        let ts = ring.add(
                            &ext.trace_coeffs(&a.coeffs, k).unwrap(),
                            &ext.trace_coeffs(&b.coeffs, k).unwrap(),
                        );
                        let sum = ext.ext.ring(k).add(&a.coeffs, &b.coeffs);
                        assert_eq!(ext.trace_coeffs(&sum, k).unwrap(), ts);
                    }
                }
            }
        }
    }

    #[test]
    fn field_table_parsing() {
        let t = parse_fields("# c\n3 2 1 0 1\n").unwrap();
        assert_eq!(t[&(3, 2)], vec![1, 0, 1]);
        assert!(parse_fields("3 2 1 0 2").is_err());
        assert!(matches!(LocalFieldDesc::new(3, vec![2, 0, 1]), Err(Error::Reducible { .. })));
    }

    #[test]
    fn traces_of_power_basis() {
        let f9 = field(3, 2).unwrap();
        // y^2 + 1 = 0: Tr(1) = 2, Tr(y) = 0.
        assert_eq!(f9.trace_mod(&[1, 0], 2), 2);
        assert_eq!(f9.trace_mod(&[0, 1], 2), 0);
    }

    #[test]
    fn shipped_polynomials_irreducible() {
        for (&(p, f), poly) in parse_fields(DEFAULT_FIELDS).unwrap().iter() {
            let hp: Vec<u64> = poly.iter().map(|&c| c.rem_euclid(p as i64) as u64).collect();
            assert!(fp_poly::is_irreducible(&hp, p), "p={p} f={f}");
        }
    }
}
