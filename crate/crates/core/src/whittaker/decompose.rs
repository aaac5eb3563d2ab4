//! The decomposition GL_2(F) = disjoint union of Z U g_{t,l,v} K_1(n), with
//! exact arithmetic in F = Q(y)/(h).

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::local_arith::{Field, UnitClass};
use crate::util::pow_u64;

use super::{working_level, CellPoint};

/// An element of Q(y)/(h) in the power basis 1, y, ..., y^(f-1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KElem {
    pub c: Vec<BigRational>,
}

fn vp_big(x: &BigInt, p: u64) -> i64 {
    let pb = BigInt::from(p);
    let mut x = x.clone();
    let mut v = 0;
    while !x.is_zero() && (&x % &pb).is_zero() {
        x /= &pb;
        v += 1;
    }
    v
}

fn rat_vp(x: &BigRational, p: u64) -> Option<i64> {
    if x.is_zero() {
        None
    } else {
        Some(vp_big(x.numer(), p) - vp_big(x.denom(), p))
    }
}

impl KElem {
    pub fn zero(f: usize) -> Self {
        KElem { c: vec![BigRational::zero(); f] }
    }

    pub fn from_int(f: usize, x: i64) -> Self {
        let mut e = Self::zero(f);
        e.c[0] = BigRational::from_integer(BigInt::from(x));
        e
    }

    pub fn from_coeffs(f: usize, coeffs: &[u64]) -> Self {
        let mut e = Self::zero(f);
        for (i, &x) in coeffs.iter().enumerate().take(f) {
            e.c[i] = BigRational::from_integer(BigInt::from(x));
        }
        e
    }

    /// p^e.
    pub fn p_pow(f: usize, p: u64, e: i64) -> Self {
        let mut x = Self::zero(f);
        let pe = BigInt::from(p).pow(e.unsigned_abs() as u32);
        x.c[0] = if e >= 0 { BigRational::from_integer(pe) } else { BigRational::new(BigInt::one(), pe) };
        x
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    pub fn add(&self, o: &Self) -> Self {
        KElem { c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    pub fn neg(&self) -> Self {
        KElem { c: self.c.iter().map(|a| -a).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    /// Valuation; None for zero. The power basis is integral and p is inert,
    /// so this is the least coefficient valuation.
    pub fn val(&self, p: u64) -> Option<i64> {
        self.c.iter().filter_map(|x| rat_vp(x, p)).min()
    }

    /// Coefficients of self / p^val(self) modulo p^k.
    pub fn unit_coeffs(&self, p: u64, k: u32) -> Result<Vec<u64>> {
        let v = self.val(p).ok_or(Error::NotUnit)?;
        let m = BigInt::from(pow_u64(p, k));
        let scale = KElem::p_pow(self.c.len(), p, -v);
        let u = KElem { c: self.c.iter().map(|x| x * &scale.c[0]).collect() };
        u.c.iter()
            .map(|x| {
                let den = x.denom().mod_floor(&m);
                let inv = crate::util::invmod(den.to_i128().unwrap(), pow_u64(p, k) as i128).ok_or(Error::NotUnit)?;
                let r = (x.numer().mod_floor(&m) * BigInt::from(inv)).mod_floor(&m);
                Ok(r.to_u64().unwrap())
            })
            .collect()
    }
}

/// Arithmetic in F = Q(y)/(h) for a fixed field.
#[derive(Clone, Debug)]
pub struct KField {
    pub field: Field,
}

impl KField {
    pub fn new(field: &Field) -> Self {
        KField { field: field.clone() }
    }

    pub fn f(&self) -> usize {
        self.field.f
    }

    pub fn p(&self) -> u64 {
        self.field.p
    }

    pub fn zero(&self) -> KElem {
        KElem::zero(self.f())
    }

    pub fn one(&self) -> KElem {
        KElem::from_int(self.f(), 1)
    }

    pub fn int(&self, x: i64) -> KElem {
        KElem::from_int(self.f(), x)
    }

    pub fn p_pow(&self, e: i64) -> KElem {
        KElem::p_pow(self.f(), self.p(), e)
    }

    /// p^val * unit.
    pub fn frac(&self, val: i64, unit: &UnitClass) -> KElem {
        self.mul(&self.p_pow(val), &KElem::from_coeffs(self.f(), &unit.coeffs))
    }

    pub fn mul(&self, a: &KElem, b: &KElem) -> KElem {
        let f = self.f();
        let mut prod = vec![BigRational::zero(); 2 * f - 1];
        for (i, x) in a.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.c.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        let h = &self.field.defining_poly;
        for d in (f..prod.len()).rev() {
            let top = std::mem::replace(&mut prod[d], BigRational::zero());
            if top.is_zero() {
                continue;
            }
            for (i, &hc) in h.iter().enumerate().take(f) {
                prod[d - f + i] -= &top * BigRational::from_integer(BigInt::from(hc));
            }
        }
        prod.truncate(f);
        KElem { c: prod }
    }

    pub fn inv(&self, a: &KElem) -> Result<KElem> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let f = self.f();
        // Columns: a * y^j.
        let mut cols = Vec::with_capacity(f);
        let mut yj = self.one();
        let mut y = self.zero();
        if f > 1 {
            y.c[1] = BigRational::one();
        }
        for _ in 0..f {
            cols.push(self.mul(a, &yj));
            if f > 1 {
                yj = self.mul(&yj, &y);
            }
        }
        let mut m: Vec<Vec<BigRational>> = (0..f)
            .map(|r| {
                let mut row: Vec<BigRational> = (0..f).map(|c| cols[c].c[r].clone()).collect();
                row.push(if r == 0 { BigRational::one() } else { BigRational::zero() });
                row
            })
            .collect();
        for c in 0..f {
            let pr = (c..f).find(|&r| !m[r][c].is_zero()).ok_or(Error::DivisionByZero)?;
            m.swap(c, pr);
            let piv = m[c][c].clone();
            for x in m[c].iter_mut() {
                *x = &*x / &piv;
            }
            for r in 0..f {
                if r != c && !m[r][c].is_zero() {
                    let fac = m[r][c].clone();
                    for cc in 0..=f {
                        let t = &fac * &m[c][cc];
                        m[r][cc] -= t;
                    }
                }
            }
        }
        Ok(KElem { c: (0..f).map(|r| m[r][f].clone()).collect() })
    }

    pub fn div(&self, a: &KElem, b: &KElem) -> Result<KElem> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    pub fn val(&self, a: &KElem) -> Option<i64> {
        a.val(self.p())
    }

    /// Parse `0`, `val:u` or `val:u0,u1,...` (coefficients of the unit in the
    /// power basis).
    pub fn parse_entry(&self, s: &str) -> Result<KElem> {
        let s = s.trim();
        if s == "0" {
            return Ok(self.zero());
        }
        let (v, u) = s.split_once(':').ok_or_else(|| Error::Parse(format!("entry {s:?} is not val:unit")))?;
        let v: i64 = v.trim().parse().map_err(|_| Error::Parse(format!("bad valuation in {s:?}")))?;
        let coeffs: Vec<i64> = u
            .split(',')
            .map(|x| x.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad unit in {s:?}"))))
            .collect::<Result<_>>()?;
        if coeffs.len() > self.f() {
            return Err(Error::Parse(format!("unit in {s:?} has more than f coefficients")));
        }
        if coeffs.iter().all(|&c| c.rem_euclid(self.p() as i64) == 0) {
            return Err(Error::NotUnit);
        }
        let mut e = self.zero();
        for (i, c) in coeffs.iter().enumerate() {
            e.c[i] = BigRational::from_integer(BigInt::from(*c));
        }
        Ok(self.mul(&self.p_pow(v), &e))
    }
}

/// A 2x2 matrix [[a, b], [c, d]] over F.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat2 {
    pub a: KElem,
    pub b: KElem,
    pub c: KElem,
    pub d: KElem,
}

pub type KMatrix = Mat2;

impl Mat2 {
    pub fn mul(&self, o: &Mat2, k: &KField) -> Mat2 {
        let m = |x: &KElem, y: &KElem| k.mul(x, y);
        Mat2 {
            a: m(&self.a, &o.a).add(&m(&self.b, &o.c)),
            b: m(&self.a, &o.b).add(&m(&self.b, &o.d)),
            c: m(&self.c, &o.a).add(&m(&self.d, &o.c)),
            d: m(&self.c, &o.b).add(&m(&self.d, &o.d)),
        }
    }

    pub fn det(&self, k: &KField) -> KElem {
        k.mul(&self.a, &self.d).sub(&k.mul(&self.b, &self.c))
    }

    pub fn inv(&self, k: &KField) -> Result<Mat2> {
        let det = self.det(k);
        if det.is_zero() {
            return Err(Error::Singular);
        }
        let di = k.inv(&det)?;
        Ok(Mat2 {
            a: k.mul(&self.d, &di),
            b: k.mul(&self.b, &di).neg(),
            c: k.mul(&self.c, &di).neg(),
            d: k.mul(&self.a, &di),
        })
    }

    pub fn scale(&self, s: &KElem, k: &KField) -> Mat2 {
        Mat2 { a: k.mul(&self.a, s), b: k.mul(&self.b, s), c: k.mul(&self.c, s), d: k.mul(&self.d, s) }
    }

    /// n(x) = [[1, x], [0, 1]].
    pub fn unipotent(x: &KElem, k: &KField) -> Mat2 {
        Mat2 { a: k.one(), b: x.clone(), c: k.zero(), d: k.one() }
    }

    /// g_{t,l,v} = [[0, p^t], [-1, -v p^-l]].
    pub fn cell_rep(t: i64, l: u32, v: &KElem, k: &KField) -> Mat2 {
        Mat2 {
            a: k.zero(),
            b: k.p_pow(t),
            c: k.int(-1),
            d: k.mul(v, &k.p_pow(-(l as i64))).neg(),
        }
    }
}

impl fmt::Display for KElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.c.iter().map(|x| x.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// k in K_1(n) = [[1+m^n, O], [m^n, O]] with unit determinant.
pub fn in_k1(k: &Mat2, n: u32, kf: &KField) -> bool {
    let ge = |x: &KElem, b: i64| kf.val(x).map_or(true, |v| v >= b);
    let dv = kf.val(&k.det(kf));
    ge(&k.a.sub(&kf.one()), n as i64) && ge(&k.b, 0) && ge(&k.c, n as i64) && ge(&k.d, 0) && dv == Some(0)
}

/// A cell point with witnesses g = z n(x) g_{t,l,v} k.
#[derive(Clone, Debug)]
pub struct CellDecomposition {
    pub point: CellPoint,
    pub v_rep: KElem,
    pub z: KElem,
    pub x: KElem,
    pub k: KMatrix,
}

impl CellDecomposition {
    pub fn reconstruct(&self, kf: &KField) -> Mat2 {
        let g0 = Mat2::cell_rep(self.point.t, self.point.l, &self.v_rep, kf);
        Mat2::unipotent(&self.x, kf).mul(&g0, kf).mul(&self.k, kf).scale(&self.z, kf)
    }
}

/// Certify a decomposition: exact reconstruction and K_1(n) membership.
pub fn in_cell(g: &Mat2, dec: &CellDecomposition, kf: &KField) -> bool {
    dec.reconstruct(kf) == *g && in_k1(&dec.k, dec.point.n, kf)
}

fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// The invariants (t, l) of g and the exact unit whose class is v.
pub fn cell_invariants(g: &Mat2, n: u32, kf: &KField) -> Result<(i64, u32, KElem)> {
    let det = g.det(kf);
    let vdet = kf.val(&det).ok_or(Error::Singular)?;
    let (vc, vd) = (kf.val(&g.c), kf.val(&g.d));
    let l = match (vc, vd) {
        (None, _) => n,
        (_, None) => 0,
        (Some(c), Some(d)) => (c - d).clamp(0, n as i64) as u32,
    };
    let vz = min_opt(vc, vd).unwrap() + l as i64;
    let t = vdet - 2 * vz;
    let m = l.min(n - l);
    let v = if m == 0 {
        kf.one()
    } else {
        let num = kf.mul(&kf.mul(&g.d, &g.c), &kf.p_pow(t + l as i64));
        kf.div(&num, &det)?
    };
    Ok((t, l, v))
}

/// Decompose g in Z U g_{t,l,v} K_1(n). The returned v is the canonical
/// integer lift of its class modulo 1+p^min(l,n-l), carried at the working
/// level.
pub fn decompose_gl2(g: &Mat2, n: u32, kf: &KField) -> Result<CellDecomposition> {
    let (t, l, vex) = cell_invariants(g, n, kf)?;
    let p = kf.p();
    let m = l.min(n - l);
    let vcoeffs = if m == 0 {
        let mut one = vec![0u64; kf.f()];
        one[0] = 1;
        one
    } else {
        vex.unit_coeffs(p, m)?
    };
    let vk = KElem::from_coeffs(kf.f(), &vcoeffs);
    let level = working_level(n).max(1);
    let v = UnitClass::new(&kf.field, level, &vcoeffs.iter().map(|&x| x as i64).collect::<Vec<_>>())?;
    let point = CellPoint::new(t, l, v, n)?;
    let g0 = Mat2::cell_rep(t, l, &vk, kf);
    let det = g.det(kf);
    let mut tries: Vec<(KElem, KElem)> = Vec::new();
    if 2 * l <= n && !g.c.is_zero() {
        tries.push((g.c.neg(), kf.div(&g.a, &g.c)?));
    }
    if !g.d.is_zero() {
        let pd = kf.mul(&kf.p_pow(t + l as i64), &kf.div(&g.d, &vk)?);
        let x = kf.div(&g.b.add(&pd), &g.d)?;
        let z = kf.mul(&kf.mul(&vk, &kf.p_pow(-(l as i64) - t)), &kf.div(&det, &g.d)?).neg();
        tries.push((z, x));
    }
    for (z, x) in tries {
        let left = Mat2::unipotent(&x, kf).mul(&g0, kf).scale(&z, kf);
        let k = left.inv(kf)?.mul(g, kf);
        if in_k1(&k, n, kf) {
            return Ok(CellDecomposition { point, v_rep: vk, z, x, k });
        }
    }
    Err(Error::NoWitness(format!("t={t}, l={l}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_arith::field;

    fn kf(p: u64, f: usize) -> KField {
        KField::new(&field(p, f).unwrap())
    }

    #[test]
    fn arithmetic_in_f9() {
        let k = kf(3, 2);
        let a = k.parse_entry("1:2,1").unwrap();
        let ai = k.inv(&a).unwrap();
        assert_eq!(k.mul(&a, &ai), k.one());
        assert_eq!(k.val(&a), Some(1));
        assert_eq!(k.val(&ai), Some(-1));
        assert_eq!(k.parse_entry("0:3"), Err(Error::NotUnit));
    }

    #[test]
    fn cell_reps_are_their_own_cells() {
        let k = kf(3, 1);
        let n = 3;
        for t in -4..3 {
            for l in 0..=n {
                for v in [1i64, 2, 4, 5, 7, 8] {
                    let vk = k.int(v);
                    let g = Mat2::cell_rep(t, l, &vk, &k);
                    let d = decompose_gl2(&g, n, &k).unwrap();
                    assert_eq!((d.point.t, d.point.l), (t, l));
                    let m = l.min(n - l);
                    if m > 0 {
                        let want = (v as u64) % pow_u64(3, m);
                        assert_eq!(d.point.v.coeffs[0] % pow_u64(3, m), want);
                    }
                    assert!(in_cell(&g, &d, &k));
                }
            }
        }
    }
}
