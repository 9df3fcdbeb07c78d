//! Small finite fields F_q for q in {2,3,4,5,7,8,9}, via precomputed tables.
//!
//! Elements are coordinate vectors in a fixed polynomial basis, packed into a
//! single byte base p: for F_4 = F_2[x]/(x^2+x+1) the value 3 is 1 + x, for
//! F_9 = F_3[x]/(x^2+1) the value 5 is 2 + x.

use crate::{Error, Result};
use once_cell::sync::Lazy;

pub const SUPPORTED_Q: [u16; 7] = [2, 3, 4, 5, 7, 8, 9];

struct Table {
    q: u16,
    p: u16,
    add: [[u8; 9]; 9],
    mul: [[u8; 9]; 9],
    neg: [u8; 9],
    inv: [u8; 9],
}

fn poly_params(q: u16) -> (u16, usize, &'static [u8]) {
    // (p, e, irreducible tail): x^e = -(tail[0] + tail[1] x + ...)
    match q {
        2 => (2, 1, &[]),
        3 => (3, 1, &[]),
        4 => (2, 2, &[1, 1]),  // x^2 + x + 1
        5 => (5, 1, &[]),
        7 => (7, 1, &[]),
        8 => (2, 3, &[1, 1, 0]), // x^3 + x + 1
        9 => (3, 2, &[1, 0]),    // x^2 + 1
        _ => unreachable!(),
    }
}

fn unpack(v: u8, p: u16, e: usize) -> Vec<u16> {
    let mut out = vec![0u16; e];
    let mut v = v as u16;
    for c in out.iter_mut() {
        *c = v % p;
        v /= p;
    }
    out
}

fn pack(coords: &[u16], p: u16) -> u8 {
    let mut acc: u16 = 0;
    for &c in coords.iter().rev() {
        acc = acc * p + c;
    }
    acc as u8
}

fn build_table(q: u16) -> Table {
    let (p, e, tail) = poly_params(q);
    let mut add = [[0u8; 9]; 9];
    let mut mul = [[0u8; 9]; 9];
    let mut neg = [0u8; 9];
    let mut inv = [0u8; 9];
    for a in 0..q {
        let ca = unpack(a as u8, p, e);
        let nc: Vec<u16> = ca.iter().map(|&c| (p - c) % p).collect();
        neg[a as usize] = pack(&nc, p);
        for b in 0..q {
            let cb = unpack(b as u8, p, e);
            let sum: Vec<u16> = ca.iter().zip(&cb).map(|(&x, &y)| (x + y) % p).collect();
            add[a as usize][b as usize] = pack(&sum, p);
            // Polynomial product reduced by x^e = -tail.
            let mut prod = vec![0u16; 2 * e];
            for (i, &x) in ca.iter().enumerate() {
                for (j, &y) in cb.iter().enumerate() {
                    prod[i + j] = (prod[i + j] + x * y) % p;
                }
            }
            for k in (e..2 * e).rev() {
                let c = prod[k];
                if c != 0 {
                    prod[k] = 0;
                    for (t, &coef) in tail.iter().enumerate() {
                        let sub = (c * coef as u16) % p;
                        prod[k - e + t] = (prod[k - e + t] + p * p - sub) % p;
                    }
                }
            }
            mul[a as usize][b as usize] = pack(&prod[..e], p);
        }
    }
    for a in 1..q {
        for b in 1..q {
            if mul[a as usize][b as usize] == 1 {
                inv[a as usize] = b as u8;
            }
        }
    }
    Table { q, p, add, mul, neg, inv }
}

static TABLES: Lazy<Vec<Table>> = Lazy::new(|| SUPPORTED_Q.iter().map(|&q| build_table(q)).collect());

/// Handle to one of the supported fields.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fq {
    idx: u8,
}

impl Fq {
    pub fn new(q: u16) -> Result<Fq> {
        SUPPORTED_Q
            .iter()
            .position(|&s| s == q)
            .map(|idx| Fq { idx: idx as u8 })
            .ok_or(Error::UnsupportedField(q))
    }

    #[inline]
    fn table(&self) -> &'static Table {
        &TABLES[self.idx as usize]
    }

    pub fn q(&self) -> u16 {
        self.table().q
    }

    pub fn characteristic(&self) -> u16 {
        self.table().p
    }

    pub fn extension_degree(&self) -> u8 {
        let (p, e, _) = poly_params(self.q());
        let _ = p;
        e as u8
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        self.table().add[a as usize][b as usize]
    }

    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        let t = self.table();
        t.add[a as usize][t.neg[b as usize] as usize]
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.table().mul[a as usize][b as usize]
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        self.table().neg[a as usize]
    }

    pub fn inv(&self, a: u8) -> Result<u8> {
        if a == 0 {
            return Err(Error::Singular);
        }
        Ok(self.table().inv[a as usize])
    }

    pub fn elements(&self) -> impl Iterator<Item = u8> {
        0..self.q() as u8
    }

    pub fn elem(&self, v: u8) -> FqElem {
        assert!((v as u16) < self.q());
        FqElem { field: *self, v }
    }
}

impl std::fmt::Debug for Fq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "F{}", self.q())
    }
}

/// A field element paired with its field handle.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct FqElem {
    pub field: Fq,
    pub v: u8,
}

impl FqElem {
    pub fn is_zero(&self) -> bool {
        self.v == 0
    }
}

impl std::fmt::Debug for FqElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{:?}", self.v, self.field)
    }
}

impl std::fmt::Display for FqElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_hold_exhaustively() {
        for &q in &SUPPORTED_Q {
            let f = Fq::new(q).unwrap();
            let els: Vec<u8> = f.elements().collect();
            for &a in &els {
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
                for &b in &els {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for &c in &els {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn characteristic_two_negation_is_identity() {
        let f = Fq::new(2).unwrap();
        assert_eq!(f.neg(1), 1);
        let f8 = Fq::new(8).unwrap();
        for a in f8.elements() {
            assert_eq!(f8.neg(a), a);
        }
    }

    #[test]
    fn unsupported_field_is_rejected() {
        assert!(Fq::new(6).is_err());
        assert!(Fq::new(11).is_err());
    }
}
