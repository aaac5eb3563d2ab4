//! Small integer helpers shared across modules.

use num_integer::Integer;

#[inline]
pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    r
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn invmod(a: i128, m: i128) -> Option<i128> {
    let g = a.mod_floor(&m).extended_gcd(&m);
    if g.gcd != 1 {
        return None;
    }
    Some(g.x.mod_floor(&m))
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Prime factorization as (prime, exponent) pairs in increasing order.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut k = 0;
            while n % d == 0 {
                n /= d;
                k += 1;
            }
            out.push((d, k));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn euler_phi(n: u64) -> u64 {
    factor(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

/// p-adic valuation of a nonzero integer.
pub fn vp_i128(mut x: i128, p: u64) -> i64 {
    assert!(x != 0);
    let p = p as i128;
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// Multiplicative order of `a` modulo `m` (a coprime to m).
pub fn mult_order(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 1;
    }
    let phi = euler_phi(m);
    let mut ord = phi;
    for (r, _) in factor(phi) {
        while ord % r == 0 && powmod(a, ord / r, m) == 1 {
            ord /= r;
        }
    }
    ord
}

pub fn pow_u64(b: u64, e: u32) -> u64 {
    b.checked_pow(e).expect("integer power overflow")
}

/// Largest B with p^B < 2^62, the working modulus bound for u64 residues.
pub fn max_level(p: u64) -> u32 {
    let mut b = 0;
    let mut x: u128 = 1;
    while x * (p as u128) < (1u128 << 62) {
        x *= p as u128;
        b += 1;
    }
    b
}
