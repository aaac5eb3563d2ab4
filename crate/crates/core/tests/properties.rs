mod common;

use padic_whittaker::bounds::{bound_for_cell, bound_theorem, bound_won};
use padic_whittaker::characters::enumerate_chars;
use padic_whittaker::cyclo::{q, qi, Q};
use padic_whittaker::local_arith::{field, teichmuller, Field, UnitClass};
use padic_whittaker::reps::{list_reps, RepDescriptor, RepType};
use padic_whittaker::valuation::{val_p_cyclo, ValRational};
use padic_whittaker::whittaker::{
    decompose_gl2, direct_window, transversal, whittaker_value, whittaker_value_direct, working_level, CellPoint,
    CoefficientTable, KField, Mat2,
};
use proptest::prelude::*;

const TYPES: [RepType; 4] = [RepType::T1, RepType::T2a, RepType::T3a, RepType::T3b];

fn fd(p: u64, f: usize) -> Field {
    field(p, f).unwrap()
}

fn rep(p: u64, ty: usize, n: u32, idx: usize) -> Option<RepDescriptor> {
    let reps = list_reps(&fd(p, 1), TYPES[ty], n).unwrap();
    if reps.is_empty() {
        None
    } else {
        Some(reps[idx % reps.len()].clone())
    }
}

fn unit(f: &Field, k: u32, c: u64) -> UnitClass {
    let mut c = c % f.p.pow(k);
    if c % f.p == 0 {
        c += 1;
    }
    UnitClass::from_int(f, k, c as i64).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unit_inverse(p in prop::sample::select(vec![3u64, 5, 7]), k in 1u32..4, c in 1u64..10_000) {
        let f = fd(p, 1);
        let u = unit(&f, k, c);
        prop_assert!(u.mul(&u.inv()).is_one());
    }

    #[test]
    fn teichmuller_multiplicative(a in 1u64..9, b in 1u64..9, a1 in 0u64..3, b1 in 0u64..3, k in 1u32..4) {
        let f = fd(3, 2);
        let ra = [a % 3, a1];
        let rb = [b % 3, b1];
        prop_assume!(ra.iter().any(|&x| x != 0) && rb.iter().any(|&x| x != 0));
        let ta = teichmuller(&f, &ra, k).unwrap();
        let tb = teichmuller(&f, &rb, k).unwrap();
        let prod = ta.mul(&tb);
        let residue: Vec<u64> = prod.reduce_to(1).coeffs.clone();
        prop_assert_eq!(teichmuller(&f, &residue, k).unwrap(), prod);
    }

    #[test]
    fn character_inverse_is_involution(p in prop::sample::select(vec![3u64, 5]), k in 1u32..4, i in 0usize..1000) {
        let chars = enumerate_chars(&fd(p, 1), k).unwrap();
        let chi = &chars[i % chars.len()];
        prop_assert_eq!(&chi.inv().inv(), chi);
        prop_assert_eq!(chi.inv().conductor(), chi.conductor());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The Atkin-Lehner route and the direct Fourier expansion agree off the
    /// direct window.
    #[test]
    fn range_reduction_agrees(
        p in prop::sample::select(vec![3u64, 5]), ty in 0usize..4, n in 3u32..5, idx in 0usize..100,
        l in 1u32..4, t in -10i64..3, c in 1u64..1000,
    ) {
        let Some(pi) = rep(p, ty, n, idx) else { return Ok(()); };
        let l = 1 + l % (n - 1);
        prop_assume!(l > direct_window(&pi));
        let v = unit(&pi.field, working_level(n), c);
        let routed = whittaker_value(&pi, &CellPoint::new(t, l, v.clone(), n).unwrap()).unwrap();
        let direct = whittaker_value_direct(&pi, t, l, &v).unwrap();
        for r in [1u64, 2, 4] {
            prop_assert_eq!(routed.specialize(r, 1), direct.specialize(r, 1));
        }
    }

    /// val(W) >= min over chi of val(c_{t,l}(chi)), with equality when the
    /// minimum is attained once.
    #[test]
    fn valuation_of_sum(
        p in prop::sample::select(vec![3u64, 5]), ty in 0usize..2, n in 2u32..5, idx in 0usize..100,
        l in 1u32..3, t in -10i64..3, c in 1u64..1000,
    ) {
        let Some(pi) = rep(p, ty, n, idx) else { return Ok(()); };
        let l = 1 + (l - 1) % n.max(1);
        prop_assume!(l <= direct_window(&pi));
        let table = CoefficientTable::build(&pi, t, l).unwrap();
        let v = unit(&pi.field, working_level(n), c);
        let w = table.evaluate(&v).unwrap().specialize(1, 1);
        let vals: Vec<Q> = table
            .entries
            .iter()
            .filter_map(|(_, c)| val_p_cyclo(&c.specialize(1, 1), p).unwrap().finite())
            .collect();
        let Some(min) = vals.iter().min().cloned() else {
            prop_assert!(w.is_zero());
            return Ok(());
        };
        let vw = val_p_cyclo(&w, p).unwrap();
        prop_assert!(vw.ge(&min));
        if vals.iter().filter(|&&x| x == min).count() == 1 {
            prop_assert_eq!(vw, ValRational::Finite(min));
        }
    }

    /// Fourier orthogonality recovers every coefficient.
    #[test]
    fn fourier_roundtrip(
        p in prop::sample::select(vec![3u64, 5]), ty in 0usize..4, n in 2u32..4, idx in 0usize..100,
        l in 1u32..4, t in -9i64..3,
    ) {
        let Some(pi) = rep(p, ty, n, idx) else { return Ok(()); };
        let l = 1 + (l - 1) % n;
        let table = CoefficientTable::build(&pi, t, l).unwrap();
        for (chi, c) in padic_whittaker::whittaker::fourier_inversion(&pi, t, l).unwrap() {
            let want = table.entries.iter().find(|(x, _)| *x == chi).map(|(_, c)| c.clone());
            match want {
                Some(w) => prop_assert_eq!(c, w),
                None => prop_assert!(c.is_zero()),
            }
        }
    }

    /// Cell invariants are stable under Z and U on the left and K_1(n) on
    /// the right.
    #[test]
    fn decomposition_invariance(
        e in prop::collection::vec((-2i64..3, 1i64..243, any::<bool>()), 4),
        ze in -2i64..3, zu in 1i64..243, xe in -3i64..3, xu in 0i64..243,
        ka in -5i64..6, kb in -20i64..21, kc in -5i64..6, kd in 1i64..243,
    ) {
        let f = fd(3, 1);
        let kf = KField::new(&f);
        let unit3 = |u: i64| if u % 3 == 0 { u + 1 } else { u };
        let entry = |(v, u, neg): (i64, i64, bool)| {
            let u = unit3(u);
            kf.mul(&kf.p_pow(v), &kf.int(if neg { -u } else { u }))
        };
        let g = Mat2 { a: entry(e[0]), b: entry(e[1]), c: entry(e[2]), d: entry(e[3]) };
        prop_assume!(!g.det(&kf).is_zero());
        let n = 2;
        let k = Mat2 {
            a: kf.int(1 + 9 * ka),
            b: kf.int(kb),
            c: kf.int(9 * kc),
            d: kf.int(unit3(kd)),
        };
        let z = kf.mul(&kf.p_pow(ze), &kf.int(unit3(zu)));
        let x = kf.mul(&kf.p_pow(xe), &kf.int(xu));
        let g2 = Mat2::unipotent(&x, &kf).mul(&g, &kf).mul(&k, &kf).scale(&z, &kf);
        let d1 = decompose_gl2(&g, n, &kf).unwrap();
        let d2 = decompose_gl2(&g2, n, &kf).unwrap();
        let m = d1.point.l.min(n - d1.point.l).max(1);
        prop_assert_eq!((d1.point.t, d1.point.l), (d2.point.t, d2.point.l));
        prop_assert_eq!(d1.point.v.reduce_to(m), d2.point.v.reduce_to(m));
    }
}

#[test]
fn contragredient_invariants() {
    for (p, f) in [(3u64, 1usize), (5, 1), (3, 2)] {
        for ty in TYPES {
            for n in 2..=4 {
                if f == 2 && n > 2 {
                    continue;
                }
                for pi in list_reps(&fd(p, f), ty, n).unwrap() {
                    let pt = pi.contragredient().unwrap();
                    assert_eq!(pt.conductor(), pi.conductor(), "{pi}");
                    assert_eq!(pt.omega(), &pi.omega().inv(), "{pi}");
                }
            }
        }
    }
}

#[test]
fn conductor_two_counts() {
    for (p, f) in [(3u64, 1usize), (5, 1), (7, 1), (3, 2)] {
        let field = fd(p, f);
        let qq = field.q;
        let cond1 = enumerate_chars(&field, 1).unwrap().iter().filter(|c| c.conductor() == 1).count() as u64;
        assert_eq!(cond1, qq - 2);
        let count = |ty| list_reps(&field, ty, 2).unwrap().len() as u64;
        assert_eq!(count(RepType::T1), (qq * qq - qq) / 2, "p={p} f={f}");
        assert_eq!(count(RepType::T2a), cond1);
        assert_eq!(count(RepType::T3b), cond1);
        assert_eq!(count(RepType::T3a), cond1 * (cond1 - 1) / 2);
    }
}

#[test]
fn type_2a_epsilon_valuation() {
    // -val(eps(1/2, mu St)) = -2 val(eps(1/2, mu)) >= -f for c(mu) = 1.
    for (p, f) in [(3u64, 1usize), (5, 1), (7, 1), (3, 2)] {
        for pi in list_reps(&fd(p, f), RepType::T2a, 2).unwrap() {
            let v = padic_whittaker::bounds::epsilon_valuation(&pi, &qi(0)).unwrap().finite().unwrap();
            assert!(-v >= -qi(f as i128), "{pi}");
        }
    }
}

#[test]
fn bounds_non_increasing_in_t() {
    for (p, f) in [(3u64, 1usize), (5, 1), (3, 2)] {
        for ty in TYPES {
            for n in 2..=4 {
                for pi in list_reps(&fd(p, f), ty, n).unwrap().iter().take(4) {
                    for nu in [qi(0), q(1, 2), qi(1), q(-1, 2)] {
                        for l in 1..n {
                            for t in -12..6 {
                                let a = bound_theorem(pi, t, l, &nu).unwrap();
                                let b = bound_theorem(pi, t + 1, l, &nu).unwrap();
                                if a.clause == b.clause {
                                    assert!(b.value <= a.value, "{pi} {} t={t} l={l}", a.clause);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn endpoints_use_won() {
    for ty in TYPES {
        for n in 2..=4 {
            for pi in list_reps(&fd(5, 1), ty, n).unwrap().iter().take(3) {
                for l in [0, n] {
                    for t in -8..3 {
                        let b = bound_for_cell(pi, t, l, &q(1, 2)).unwrap();
                        assert_eq!(b.value, bound_won(pi, l, &q(1, 2)).unwrap().value);
                        assert!(b.clause.starts_with("won"));
                    }
                }
            }
        }
    }
}

#[test]
fn transversal_sizes() {
    let f = fd(5, 1);
    let pi = &list_reps(&f, RepType::T2a, 4).unwrap()[0];
    assert_eq!(transversal(pi, 0, 2).len(), 1);
    assert_eq!(transversal(pi, 1, 2).len(), 4);
    assert_eq!(transversal(pi, 2, 2).len(), 20);
}
