//! Finite-field arithmetic for small orders.
//!
//! Elements of GF(p^k) are encoded as integers `0..p^k` whose base-`p`
//! digits are polynomial coefficients (least significant digit first).
//! Addition and multiplication are tabulated once at construction; the
//! orders needed for orthogonal arrays are tiny so the tables stay small.

use crate::error::{Error, Result};

/// Returns `(p, k)` with `q = p^k` when `q` is a prime power.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q % d == 0)?;
    let mut rest = q;
    let mut k = 0;
    while rest % p == 0 {
        rest /= p;
        k += 1;
    }
    (rest == 1).then_some((p, k))
}

pub fn is_prime(n: u32) -> bool {
    matches!(prime_power(n), Some((_, 1)))
}

#[derive(Clone, Debug)]
pub struct GaloisField {
    order: u32,
    prime: u32,
    add: Vec<u32>,
    mul: Vec<u32>,
}

impl GaloisField {
    /// Builds GF(q). Fails unless `q` is a prime power.
    pub fn new(q: u32) -> Result<Self> {
        let (p, k) = prime_power(q)
            .ok_or_else(|| Error::unsupported(format!("{q} is not a prime power")))?;
        if q > 1024 {
            return Err(Error::unsupported(format!("field order {q} too large for tabulation")));
        }
        let n = q as usize;

        let mut add = vec![0u32; n * n];
        for a in 0..q {
            for b in 0..q {
                add[(a * q + b) as usize] = digitwise(a, b, p, k, |x, y| (x + y) % p);
            }
        }

        let mul = if k == 1 {
            let mut mul = vec![0u32; n * n];
            for a in 0..q {
                for b in 0..q {
                    mul[(a * q + b) as usize] = (a * b) % p;
                }
            }
            mul
        } else {
            // monic modulus x^k + c(x); candidates enumerated by c
            (0..q)
                .map(|c| poly_mul_table(p, k, c))
                .find(|table| has_no_zero_divisors(table, q))
                .ok_or_else(|| Error::unsupported(format!("no irreducible polynomial for {q}")))?
        };

        Ok(Self { order: q, prime: p, add, mul })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn characteristic(&self) -> u32 {
        self.prime
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        self.add[(a * self.order + b) as usize]
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.mul[(a * self.order + b) as usize]
    }

    pub fn neg(&self, a: u32) -> u32 {
        (0..self.order).find(|&b| self.add(a, b) == 0).expect("additive inverse exists")
    }
}

fn digitwise(a: u32, b: u32, p: u32, k: u32, op: impl Fn(u32, u32) -> u32) -> u32 {
    let (mut a, mut b) = (a, b);
    let mut out = 0;
    let mut place = 1;
    for _ in 0..k {
        out += op(a % p, b % p) * place;
        a /= p;
        b /= p;
        place *= p;
    }
    out
}

fn digits(mut x: u32, p: u32, k: u32) -> Vec<u32> {
    (0..k)
        .map(|_| {
            let d = x % p;
            x /= p;
            d
        })
        .collect()
}

fn poly_mul_table(p: u32, k: u32, tail: u32) -> Vec<u32> {
    let q = p.pow(k);
    // x^k = -tail(x)
    let reduce: Vec<u32> = digits(tail, p, k).iter().map(|&d| (p - d) % p).collect();
    let mut table = vec![0u32; (q * q) as usize];
    for a in 0..q {
        let da = digits(a, p, k);
        for b in 0..q {
            let db = digits(b, p, k);
            let mut prod = vec![0u32; (2 * k - 1) as usize];
            for (i, &x) in da.iter().enumerate() {
                for (j, &y) in db.iter().enumerate() {
                    prod[i + j] = (prod[i + j] + x * y) % p;
                }
            }
            for deg in (k as usize..prod.len()).rev() {
                let c = prod[deg];
                if c == 0 {
                    continue;
                }
                prod[deg] = 0;
                for (i, &r) in reduce.iter().enumerate() {
                    let idx = deg - k as usize + i;
                    prod[idx] = (prod[idx] + c * r) % p;
                }
            }
            let value = prod[..k as usize].iter().rev().fold(0, |acc, &d| acc * p + d);
            table[(a * q + b) as usize] = value;
        }
    }
    table
}

fn has_no_zero_divisors(table: &[u32], q: u32) -> bool {
    (1..q).all(|a| (1..q).all(|b| table[(a * q + b) as usize] != 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_power_detection() {
        assert_eq!(prime_power(8), Some((2, 3)));
        assert_eq!(prime_power(9), Some((3, 2)));
        assert_eq!(prime_power(7), Some((7, 1)));
        assert_eq!(prime_power(6), None);
        assert_eq!(prime_power(1), None);
        assert!(is_prime(13));
        assert!(!is_prime(4));
    }

    #[test]
    fn field_axioms_hold_for_small_orders() {
        for q in [2, 3, 4, 5, 7, 8, 9, 16, 25, 27] {
            let f = GaloisField::new(q).unwrap();
            for a in 0..q {
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert!((1..q).any(|b| f.mul(a, b) == 1), "GF({q}): {a} not invertible");
                }
                for b in 0..q {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in 0..q {
                        assert_eq!(
                            f.mul(a, f.add(b, c)),
                            f.add(f.mul(a, b), f.mul(a, c)),
                            "GF({q}) distributivity"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_composite_orders() {
        assert!(matches!(GaloisField::new(6), Err(Error::Unsupported(_))));
        assert!(matches!(GaloisField::new(12), Err(Error::Unsupported(_))));
    }
}
