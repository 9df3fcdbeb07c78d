//! Dense square matrices over the small fields, with the support notion used
//! by the telescope verifiers: a matrix is supported in `Y'` when it has unit
//! diagonal and zero off-diagonal entries outside `Y'`.

use super::field::{Fq, FqElem};
use crate::{Error, Result};

pub const DIM_CAP: usize = 1024;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MatFq {
    field: Fq,
    n: usize,
    a: Vec<u8>, // row-major
}

impl MatFq {
    pub fn zero(field: Fq, n: usize) -> Self {
        assert!(n <= DIM_CAP, "matrix dimension exceeds cap");
        MatFq {
            field,
            n,
            a: vec![0; n * n],
        }
    }

    pub fn identity(field: Fq, n: usize) -> Self {
        let mut m = MatFq::zero(field, n);
        for i in 0..n {
            m.a[i * n + i] = 1;
        }
        m
    }

    pub fn scalar(field: Fq, n: usize, lambda: u8) -> Self {
        let mut m = MatFq::zero(field, n);
        for i in 0..n {
            m.a[i * n + i] = lambda;
        }
        m
    }

    pub fn field(&self) -> Fq {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.a[r * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        self.a[r * self.n + c] = v;
    }

    pub fn entries(&self) -> &[u8] {
        &self.a
    }

    /// Identity plus `r` in position `(y, z)`.
    pub fn elementary(field: Fq, n: usize, y: usize, z: usize, r: u8) -> Result<Self> {
        if y == z {
            return Err(Error::SamePosition(y));
        }
        let mut m = MatFq::identity(field, n);
        m.set(y, z, r);
        Ok(m)
    }

    /// `s_{y,z} = e_{y,z}(-1) e_{z,y}(1) e_{y,z}(-1)`; swaps the two basis
    /// vectors up to sign.
    pub fn signed_perm(field: Fq, n: usize, y: usize, z: usize) -> Result<Self> {
        if y == z {
            return Err(Error::SamePosition(y));
        }
        let m1 = MatFq::elementary(field, n, y, z, field.neg(1))?;
        let m2 = MatFq::elementary(field, n, z, y, 1)?;
        Ok(m1.mul(&m2).mul(&m1))
    }

    pub fn check_compatible(&self, other: &MatFq) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch {
                left: self.field.q(),
                right: other.field.q(),
            });
        }
        if self.n != other.n {
            return Err(Error::DimMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn mul(&self, rhs: &MatFq) -> MatFq {
        self.check_compatible(rhs).expect("incompatible matrices");
        let n = self.n;
        let f = self.field;
        let mut out = MatFq::zero(f, n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                if aik == 0 {
                    continue;
                }
                let row = &rhs.a[k * n..(k + 1) * n];
                let dst = &mut out.a[i * n..(i + 1) * n];
                for j in 0..n {
                    let b = row[j];
                    if b != 0 {
                        dst[j] = f.add(dst[j], f.mul(aik, b));
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &MatFq) -> MatFq {
        self.check_compatible(rhs).expect("incompatible matrices");
        let f = self.field;
        let mut out = self.clone();
        for (x, &y) in out.a.iter_mut().zip(&rhs.a) {
            *x = f.add(*x, y);
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        *self == MatFq::identity(self.field, self.n)
    }

    /// Gaussian elimination; returns the inverse or [`Error::Singular`].
    pub fn inverse(&self) -> Result<MatFq> {
        let n = self.n;
        let f = self.field;
        let mut a = self.clone();
        let mut inv = MatFq::identity(f, n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| a.get(r, col) != 0)
                .ok_or(Error::Singular)?;
            if pivot != col {
                for j in 0..n {
                    a.a.swap(col * n + j, pivot * n + j);
                    inv.a.swap(col * n + j, pivot * n + j);
                }
            }
            let d = f.inv(a.get(col, col))?;
            for j in 0..n {
                a.a[col * n + j] = f.mul(a.a[col * n + j], d);
                inv.a[col * n + j] = f.mul(inv.a[col * n + j], d);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a.get(r, col);
                if factor == 0 {
                    continue;
                }
                for j in 0..n {
                    let s = f.mul(factor, a.a[col * n + j]);
                    a.a[r * n + j] = f.sub(a.a[r * n + j], s);
                    let s = f.mul(factor, inv.a[col * n + j]);
                    inv.a[r * n + j] = f.sub(inv.a[r * n + j], s);
                }
            }
        }
        Ok(inv)
    }

    pub fn det(&self) -> u8 {
        let n = self.n;
        let f = self.field;
        let mut a = self.clone();
        let mut det: u8 = 1;
        for col in 0..n {
            let pivot = match (col..n).find(|&r| a.get(r, col) != 0) {
                Some(p) => p,
                None => return 0,
            };
            if pivot != col {
                for j in 0..n {
                    a.a.swap(col * n + j, pivot * n + j);
                }
                det = f.neg(det);
            }
            let d = a.get(col, col);
            det = f.mul(det, d);
            let dinv = f.inv(d).expect("nonzero pivot");
            for r in col + 1..n {
                let factor = f.mul(a.get(r, col), dinv);
                if factor == 0 {
                    continue;
                }
                for j in col..n {
                    let s = f.mul(factor, a.a[col * n + j]);
                    a.a[r * n + j] = f.sub(a.a[r * n + j], s);
                }
            }
        }
        det
    }

    pub fn pow(&self, mut e: u64) -> MatFq {
        let mut base = self.clone();
        let mut acc = MatFq::identity(self.field, self.n);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative order, by repeated multiplication up to `cap`.
    pub fn order(&self, cap: u64) -> Result<u64> {
        let mut acc = self.clone();
        for k in 1..=cap {
            if acc.is_identity() {
                return Ok(k);
            }
            acc = acc.mul(self);
        }
        Err(Error::SearchExhausted(format!(
            "matrix order exceeds cap {cap}"
        )))
    }

    /// Minimal `Y'` such that the matrix is supported in `Y'`: indices with a
    /// non-unit diagonal entry or any nonzero off-diagonal entry in their row
    /// or column.
    pub fn support(&self) -> Vec<usize> {
        let n = self.n;
        let mut in_supp = vec![false; n];
        for r in 0..n {
            for c in 0..n {
                let v = self.get(r, c);
                if r == c {
                    if v != 1 {
                        in_supp[r] = true;
                    }
                } else if v != 0 {
                    in_supp[r] = true;
                    in_supp[c] = true;
                }
            }
        }
        (0..n).filter(|&i| in_supp[i]).collect()
    }

    /// True when the matrix is supported in the given index set.
    pub fn supported_in(&self, set: &[usize]) -> bool {
        let mut inside = vec![false; self.n];
        for &i in set {
            inside[i] = true;
        }
        self.support().iter().all(|&i| inside[i])
    }

    /// `Some(λ)` when the matrix is `λ·I`.
    pub fn is_scalar(&self) -> Option<FqElem> {
        let lambda = self.get(0, 0);
        for r in 0..self.n {
            for c in 0..self.n {
                let expect = if r == c { lambda } else { 0 };
                if self.get(r, c) != expect {
                    return None;
                }
            }
        }
        Some(self.field.elem(lambda))
    }

    /// Block-diagonal lift: entry `(u·t + x, v·t + x)` is `a_{u,v}`, all
    /// mixed tail positions zero. This is the transition map of the matrix
    /// telescopes with tail factor `t`.
    pub fn block_lift(&self, t: usize) -> MatFq {
        let n = self.n * t;
        let mut out = MatFq::zero(self.field, n);
        for u in 0..self.n {
            for v in 0..self.n {
                let val = self.get(u, v);
                if val != 0 {
                    for x in 0..t {
                        out.set(u * t + x, v * t + x, val);
                    }
                }
            }
        }
        out
    }

    /// Applies the matrix to a coordinate vector.
    pub fn apply_vec(&self, v: &[u8]) -> Vec<u8> {
        let f = self.field;
        let n = self.n;
        let mut out = vec![0u8; n];
        for r in 0..n {
            let mut acc = 0u8;
            for c in 0..n {
                let a = self.a[r * n + c];
                if a != 0 && v[c] != 0 {
                    acc = f.add(acc, f.mul(a, v[c]));
                }
            }
            out[r] = acc;
        }
        out
    }

    /// Canonical representative modulo scalars: scales so that the first
    /// nonzero entry (row-major) is 1.
    pub fn scalar_canonical(&self) -> MatFq {
        let f = self.field;
        let first = self.a.iter().find(|&&v| v != 0);
        match first {
            None => self.clone(),
            Some(&v) => {
                let d = f.inv(v).expect("nonzero");
                let mut out = self.clone();
                for x in out.a.iter_mut() {
                    *x = f.mul(*x, d);
                }
                out
            }
        }
    }

    /// Text form: header `q=<p>^<e> n=<dim>` then row-major entries.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "q={}^{} n={}\n",
            self.field.characteristic(),
            self.field.extension_degree(),
            self.n
        );
        for r in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|c| self.get(r, c).to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<MatFq> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(Error::Parse {
            pos: 0,
            msg: "empty matrix text".into(),
        })?;
        let parse_err = |msg: &str| Error::Parse {
            pos: 0,
            msg: msg.to_string(),
        };
        let mut p = 0u16;
        let mut e = 0u32;
        let mut n = 0usize;
        for tok in header.split_whitespace() {
            if let Some(rest) = tok.strip_prefix("q=") {
                let (pp, ee) = rest
                    .split_once('^')
                    .ok_or_else(|| parse_err("expected q=<p>^<e>"))?;
                p = pp.parse().map_err(|_| parse_err("bad characteristic"))?;
                e = ee.parse().map_err(|_| parse_err("bad extension degree"))?;
            } else if let Some(rest) = tok.strip_prefix("n=") {
                n = rest.parse().map_err(|_| parse_err("bad dimension"))?;
            }
        }
        let q = p.pow(e);
        let field = Fq::new(q)?;
        let mut m = MatFq::zero(field, n);
        let mut vals = Vec::with_capacity(n * n);
        for line in lines {
            for tok in line.split_whitespace() {
                let v: u16 = tok.parse().map_err(|_| parse_err("bad entry"))?;
                if v >= q {
                    return Err(Error::LetterOutOfRange {
                        letter: v as u32,
                        size: q as u32,
                    });
                }
                vals.push(v as u8);
            }
        }
        if vals.len() != n * n {
            return Err(parse_err("entry count does not match dimension"));
        }
        m.a = vals;
        Ok(m)
    }
}

impl std::fmt::Debug for MatFq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MatFq(q={}, n={})", self.field.q(), self.n)
    }
}
