//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use padic_whittaker::characters::{enumerate_chars, MultChar};
use padic_whittaker::cyclo::{q, q_half_pow, CycloLaurent, CycloNumber};
use padic_whittaker::gauss_eps::{epsilon_value, gauss_bruteforce};
use padic_whittaker::local_arith::{FracElement, UnitClass};
use padic_whittaker::reps::{RepDescriptor, RepKind};
use padic_whittaker::util::vp_i128;

fn qh(pi: &RepDescriptor, h: i64) -> CycloNumber {
    q_half_pow(pi.field.p, pi.field.f, h)
}

fn cq(x: padic_whittaker::cyclo::Q) -> CycloNumber {
    CycloNumber::from_q(x)
}

fn mono(k: i64, c: CycloNumber) -> CycloLaurent {
    CycloLaurent::monomial(k, c)
}

/// G(p^{-j}, chi) by direct summation.
pub fn gauss_at(chi: &MultChar, j: u32) -> CycloNumber {
    let fd = chi.field();
    let x = FracElement::new(-(j as i64), UnitClass::one(fd, j.max(1)));
    gauss_bruteforce(chi, &x).unwrap()
}

fn eps(chi: &MultChar) -> CycloNumber {
    epsilon_value(chi).unwrap()
}

/// c_{t,l}(chi) from the uncollected formulas, with every Gauss sum summed
/// directly. mu_1(p) = X^{-1}, mu_2(p) = X.
pub fn oracle_ctl(pi: &RepDescriptor, chi: &MultChar, t: i64, l: u32) -> CycloLaurent {
    let g = gauss_at(&chi.inv(), l);
    let zero = CycloLaurent::zero();
    if g.is_zero() {
        return zero;
    }
    let qq = pi.field.q as i128;
    let z1 = cq(q(qq - 1, qq));
    match &pi.kind {
        RepKind::Supercuspidal { .. } => {
            if t == -(pi.twisted_conductor(chi).unwrap() as i64) {
                let pt = pi.contragredient().unwrap();
                pt.epsilon_twist(&chi.inv()).unwrap().scale(&g)
            } else {
                zero
            }
        }
        RepKind::Steinberg { mu } => {
            let cm = chi.mul(mu);
            if !cm.is_trivial() {
                if t == -2 * cm.conductor() as i64 {
                    let e = eps(&cm.inv());
                    mono(0, e.mul(&e).mul(&g))
                } else {
                    zero
                }
            } else if t == -2 {
                mono(0, cq(q(1, qq)).mul(&g))
            } else if t > -2 {
                let k = cq(q(1, 1) - q(1, qq * qq)).neg().mul(&qh(pi, -2 - 2 * t));
                mono(0, k.mul(&g))
            } else {
                zero
            }
        }
        RepKind::PrincipalSeries { beta1, beta2 } if beta1 != beta2 => {
            let b = [beta1, beta2];
            let sgn = [-1i64, 1];
            let a: Vec<i64> = b.iter().map(|bb| chi.mul(bb).conductor() as i64).collect();
            if a[0] != 0 && a[1] != 0 {
                if t != -a[0] - a[1] {
                    return zero;
                }
                let e = eps(&chi.mul(beta1).inv()).mul(&eps(&chi.mul(beta2).inv()));
                return mono(a[0] - a[1], e.mul(&g));
            }
            let (i, j) = if a[0] == 0 { (0, 1) } else { (1, 0) };
            let aj = a[j];
            let chj = chi.mul(b[j]);
            if t == -aj - 1 {
                let e = eps(&chj.inv());
                mono(-sgn[i] - sgn[j] * aj, qh(pi, -1).neg().mul(&e).mul(&g))
            } else if t >= -aj {
                let gj = gauss_at(&chj, aj as u32);
                let k = z1.mul(&z1).mul(&qh(pi, -t)).mul(&gj).mul(&g);
                mono(sgn[i] * (t + aj) - sgn[j] * aj, k)
            } else {
                zero
            }
        }
        RepKind::PrincipalSeries { beta1, .. } => {
            let cb = chi.mul(beta1);
            let a = cb.conductor() as i64;
            if a != 0 {
                if t == -2 * a {
                    let e = eps(&cb.inv());
                    mono(0, e.mul(&e).mul(&g))
                } else {
                    zero
                }
            } else if t == -2 {
                mono(0, cq(q(1, qq)).mul(&g))
            } else if t == -1 {
                let k = qh(pi, -1).neg().mul(&z1).mul(&g);
                mono(-1, k.clone()).add(&mono(1, k))
            } else if t >= 0 {
                let k1 = cq(q(-1, qq)).mul(&z1);
                let mut poly = mono(-(t + 2), k1.clone()).add(&mono(t + 2, k1));
                for kk in 0..=t {
                    poly = poly.add(&mono(t - 2 * kk, z1.mul(&z1)));
                }
                poly.scale(&qh(pi, -t).mul(&g))
            } else {
                zero
            }
        }
    }
}

/// W_pi(g_{t,l,v}) as the sum over chi of conductor at most l of the oracle
/// coefficients.
pub fn oracle_w(pi: &RepDescriptor, t: i64, l: u32, v: &UnitClass) -> CycloLaurent {
    let chars = if l == 0 {
        vec![MultChar::trivial(&pi.field)]
    } else {
        enumerate_chars(&pi.field, l).unwrap()
    };
    let mut acc = CycloLaurent::zero();
    for chi in &chars {
        let c = oracle_ctl(pi, chi, t, l);
        if c.is_zero() {
            continue;
        }
        let vv = v.lift_to(v.level.max(chi.level()));
        acc = acc.add(&c.scale(&chi.eval(&vv).unwrap()));
    }
    acc
}


type Rat = padic_whittaker::cyclo::Q;

fn vq(x: &Rat, p: u64) -> Option<i64> {
    if *x.numer() == 0 {
        None
    } else {
        Some(vp_i128(*x.numer(), p) - vp_i128(*x.denom(), p))
    }
}

fn ge(x: &Rat, p: u64, r: i64) -> bool {
    vq(x, p).map_or(true, |v| v >= r)
}

fn ppow(p: u64, e: i64) -> Rat {
    let b = Rat::from_integer(p as i128);
    if e >= 0 {
        num_traits::pow(b, e as usize)
    } else {
        num_traits::pow(b, (-e) as usize).recip()
    }
}

/// Does some x in Q satisfy val(alpha_i + beta_i x) >= r_i for all i?
/// Each condition with beta_i != 0 is a disc; ultrametric discs have a
/// common point iff the smallest one's center lies in all of them.
fn discs_meet(conds: &[(Rat, Rat, i64)], p: u64) -> Option<Rat> {
    let mut discs: Vec<(Rat, i64)> = Vec::new();
    for (alpha, beta, r) in conds {
        if *beta.numer() == 0 {
            if !ge(alpha, p, *r) {
                return None;
            }
        } else {
            let vb = vq(beta, p).unwrap();
            discs.push((-alpha / beta, r - vb));
        }
    }
    let Some((c, _)) = discs.iter().max_by_key(|d| d.1).cloned() else {
        return Some(Rat::from_integer(0));
    };
    discs.iter().all(|(ci, ri)| ge(&(c - ci), p, *ri)).then_some(c)
}

/// Every (t, l, v mod p^min(l, n-l)) such that g = (a, b; c, d) over Q_p
/// lies in Z U g_{t,l,v} K_1(p^n), found by trying every cell with
/// |t| <= t_max and every scalar z = p^e u, u mod 1 + p^n.
pub fn exhaustive_cells(g: [Rat; 4], n: u32, p: u64, t_max: i64) -> Vec<(i64, u32, i128)> {
    let [a, b, c, d] = g;
    let det = a * d - b * c;
    let vdet = vq(&det, p).expect("singular");
    let pn = (p as i128).pow(n);
    let units: Vec<i128> = (1..pn).filter(|u| u % p as i128 != 0).collect();
    let mut found = Vec::new();
    for t in -t_max..=t_max {
        if (vdet - t) % 2 != 0 {
            continue;
        }
        let e = (vdet - t) / 2;
        for l in 0..=n {
            let m = l.min(n - l);
            let pm = (p as i128).pow(m);
            for v in (1..=pm.max(1)).filter(|v| m == 0 || v % p as i128 != 0) {
                let v = if m == 0 { 1 } else { v };
                let w = Rat::from_integer(v) * ppow(p, -(l as i64));
                let pt = ppow(p, t);
                let hit = units.iter().any(|&u| {
                    let z = Rat::from_integer(u) * ppow(p, e);
                    let s = (z * pt).recip();
                    let one = Rat::from_integer(1);
                    let conds = [
                        (s * a, -s * c, n as i64),
                        (s * b, -s * d, 0),
                        (s * (-w * a - pt * c) - one, s * w * c, n as i64),
                        (s * (-w * b - pt * d), s * w * d, 0),
                    ];
                    discs_meet(&conds, p).is_some()
                });
                if hit {
                    found.push((t, l, v));
                }
                if m == 0 {
                    break;
                }
            }
        }
    }
    found
}
