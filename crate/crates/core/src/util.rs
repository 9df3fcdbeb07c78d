//! Seeded randomness with labeled substreams, plus small numeric helpers.

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives a deterministic substream from a master seed and a label.
/// Every randomized routine takes its generator this way so that
/// concurrent or reordered callers see identical streams.
pub fn substream(seed: u64, label: &str) -> ChaCha8Rng {
    // FNV-1a over the label, folded into the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

pub fn factorial(n: usize) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for k in 2..=n {
        acc *= BigUint::from(k);
    }
    acc
}

/// |Alt(n)| = n!/2 for n >= 2, and 1 otherwise.
pub fn alt_order(n: usize) -> BigUint {
    if n < 2 {
        BigUint::from(1u32)
    } else {
        factorial(n) / BigUint::from(2u32)
    }
}

/// |SL_n(F_q)| = q^(n(n-1)/2) * prod_{k=2}^{n} (q^k - 1).
pub fn sl_order(n: usize, q: u64) -> BigUint {
    let q = BigUint::from(q);
    let mut acc = q.pow((n * (n - 1) / 2) as u32);
    for k in 2..=n {
        acc *= q.pow(k as u32) - BigUint::from(1u32);
    }
    acc
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_are_deterministic_and_label_separated() {
        use rand::RngCore;
        let mut a = substream(7, "alpha");
        let mut b = substream(7, "alpha");
        let mut c = substream(7, "beta");
        let (x, y, z) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert_eq!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn orders() {
        assert_eq!(alt_order(5), BigUint::from(60u32));
        // 25!/2, digit-for-digit.
        assert_eq!(
            alt_order(25).to_string(),
            "7755605021665492992000000"
        );
        assert_eq!(sl_order(4, 2), BigUint::from(20160u32));
    }

    #[test]
    fn primality() {
        assert!(is_prime(2) && is_prime(13) && is_prime(67) && is_prime(313));
        assert!(!is_prime(1) && !is_prime(15) && !is_prime(91));
    }
}
