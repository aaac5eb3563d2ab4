mod common;

use padic_whittaker::bounds::stride_sample;
use padic_whittaker::local_arith::field;
use padic_whittaker::reps::{list_reps, RepType};
use padic_whittaker::whittaker::{transversal, working_level, Evaluator};

/// The routed evaluator against the uncollected formulas with every Gauss
/// sum summed directly.
fn compare(p: u64, f: usize, n: u32, cap: usize) {
    let fd = field(p, f).unwrap();
    for ty in [RepType::T1, RepType::T2a, RepType::T3a, RepType::T3b] {
        for pi in stride_sample(&list_reps(&fd, ty, n).unwrap(), cap) {
            let ev = Evaluator::new(&pi).unwrap();
            for l in 0..=n {
                let vs = transversal(&pi, l.min(n - l), working_level(n));
                for t in -(n as i64 + 6)..=4 {
                    let ws = ev.values(t, l, &vs).unwrap();
                    for (v, w) in vs.iter().zip(&ws) {
                        let o = common::oracle_w(&pi, t, l, v);
                        assert_eq!(&o, w, "{pi} t={t} l={l} v={:?}", v.coeffs);
                    }
                }
            }
        }
    }
}

#[test]
fn oracle_q3_conductor_2_to_4() {
    for n in 2..=4 {
        compare(3, 1, n, 2);
    }
}

#[test]
fn oracle_q5_conductor_2_3() {
    for n in 2..=3 {
        compare(5, 1, n, 2);
    }
}

#[test]
fn oracle_q9_conductor_2() {
    compare(3, 2, 2, 2);
}
