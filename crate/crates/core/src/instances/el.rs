//! The special-linear telescope over a small finite field: level `n` is
//! `SL_{d^n}(F_q)` with word-indexed coordinates, `B = E_{{x_1,x_2} × X}(F_q)`,
//! block-diagonal transitions, and `φ_n` planting `B` at the prefix
//! `x_d^{n-2}`. The projective variant compares matrices up to a scalar.

use crate::alphabet::{Constraint, CylinderSet, WordShape};
use crate::linfq::{Fq, MatFq};
use crate::telescope::{Elem, Engine, Telescope, TelescopeImpl};
use crate::util::sl_order;
use crate::{Error, Result};
use num_bigint::BigUint;
use rand::Rng;
use std::sync::Arc;

pub(crate) struct ElTelescope {
    d: u32,
    q: Fq,
    max_level: usize,
}

pub fn build_el(d: u32, q: u16, max_level: usize) -> Result<Telescope> {
    let q = Fq::new(q)?;
    if d < 4 {
        return Err(Error::IndexConstraint(format!("d = {d} must be >= 4")));
    }
    let dim = (d as usize).pow(max_level as u32);
    if dim > crate::linfq::DIM_CAP {
        return Err(Error::BudgetExceeded(format!(
            "level {max_level} dimension {dim} exceeds the dense-matrix cap"
        )));
    }
    Ok(Telescope::new(Arc::new(ElTelescope { d, q, max_level })))
}

impl ElTelescope {
    fn dim(&self, i: usize) -> usize {
        (self.d as usize).pow(i as u32)
    }

    /// Index of the word `x_d^{n-2} x_{s+1} x_{t+1}` at level `n`.
    fn planted_index(&self, n: usize, s: usize, t: usize) -> usize {
        let d = self.d as usize;
        (d.pow((n - 2) as u32) - 1) * d * d + s * d + t
    }
}

impl TelescopeImpl for ElTelescope {
    fn name(&self) -> String {
        format!("el({},F{})", self.d, self.q.q())
    }

    fn engine(&self) -> Engine {
        Engine::Matrix
    }

    fn max_level(&self) -> usize {
        self.max_level
    }

    fn level_shape(&self, i: usize) -> WordShape {
        WordShape::uniform(self.d, i)
    }

    fn level_order(&self, i: usize) -> BigUint {
        sl_order(self.dim(i), self.q.q() as u64)
    }

    fn level_generators(&self, i: usize) -> Vec<Elem> {
        // adjacent-position transvections generate SL
        let n = self.dim(i);
        let mut out = Vec::new();
        for y in 0..n - 1 {
            for r in 1..self.q.q() as u8 {
                out.push(Elem::Mat(
                    MatFq::elementary(self.q, n, y, y + 1, r).unwrap(),
                ));
                out.push(Elem::Mat(
                    MatFq::elementary(self.q, n, y + 1, y, r).unwrap(),
                ));
            }
        }
        out
    }

    fn identity(&self, i: usize) -> Elem {
        Elem::Mat(MatFq::identity(self.q, self.dim(i)))
    }

    fn iota(&self, i: usize, j: usize, e: &Elem) -> Elem {
        assert!(i <= j);
        if i == j {
            return e.clone();
        }
        let m = e.as_mat().expect("matrix engine");
        Elem::Mat(m.block_lift((self.d as usize).pow((j - i) as u32)))
    }

    fn phi(&self, n: usize, b: &Elem) -> Elem {
        assert!(n >= 2);
        let b = b.as_mat().expect("matrix engine");
        let two_d = 2 * self.d as usize;
        assert_eq!(b.dim(), two_d);
        let mut out = MatFq::identity(self.q, self.dim(n));
        for u in 0..two_d {
            let ju = self.planted_index(n, u / self.d as usize, u % self.d as usize);
            for v in 0..two_d {
                let jv = self.planted_index(n, v / self.d as usize, v % self.d as usize);
                out.set(ju, jv, b.get(u, v));
            }
        }
        Elem::Mat(out)
    }

    fn alpha(&self, n: usize) -> Elem {
        // s_{x_d^{n-1} x_{d-1}, x_d^n}
        let d = self.d as usize;
        let dim = self.dim(n);
        let u = dim - 2; // x_d^{n-1} x_{d-1}
        let v = dim - 1; // x_d^n
        let _ = d;
        Elem::Mat(MatFq::signed_perm(self.q, dim, u, v).unwrap())
    }

    fn b_identity(&self) -> Elem {
        Elem::Mat(MatFq::identity(self.q, 2 * self.d as usize))
    }

    fn b_generators(&self) -> Vec<Elem> {
        let n = 2 * self.d as usize;
        let mut out = Vec::new();
        for y in 0..n - 1 {
            for r in 1..self.q.q() as u8 {
                out.push(Elem::Mat(
                    MatFq::elementary(self.q, n, y, y + 1, r).unwrap(),
                ));
                out.push(Elem::Mat(
                    MatFq::elementary(self.q, n, y + 1, y, r).unwrap(),
                ));
            }
        }
        out
    }

    fn b_sample(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Elem {
        let gens = self.b_generators();
        let mut acc = MatFq::identity(self.q, 2 * self.d as usize);
        for _ in 0..15 {
            let k = rng.gen_range(0..gens.len());
            acc = acc.mul(gens[k].as_mat().unwrap());
        }
        Elem::Mat(acc)
    }

    fn b_support(&self, i: usize, at_level: usize) -> Option<CylinderSet> {
        el_support(self.d, ElSupportDescriptor::Z { n: i, m: at_level }).ok()
    }

    fn alpha_support(&self, i: usize, at_level: usize) -> Option<CylinderSet> {
        if at_level < i || i < 1 {
            return None;
        }
        // {x_d^{i-1}} x {x_{d-1}, x_d} x X^{at-i}
        let d = self.d;
        let mut cs: Vec<Constraint> = (0..i - 1).map(|_| Constraint::Singleton(d - 1)).collect();
        cs.push(Constraint::Subset(vec![d - 2, d - 1]));
        cs.extend((0..at_level - i).map(|_| Constraint::Full));
        CylinderSet::new(WordShape::uniform(d, at_level), cs).ok()
    }

    fn b_conj_support(&self, alpha_i: usize, b_k: usize, at_level: usize) -> Option<CylinderSet> {
        el_support(
            self.d,
            ElSupportDescriptor::Zi {
                i: alpha_i,
                k: b_k,
                m: at_level,
            },
        )
        .ok()
    }

    fn matrix_params(&self) -> Option<(u32, Fq)> {
        Some((self.d, self.q))
    }
}

/// Support families of the matrix telescope.
#[derive(Clone, Copy, Debug)]
pub enum ElSupportDescriptor {
    /// `Z(n, m) = {x_d^{n-2} x_i v | i in {1,2}, v in X^{m-n+1}}`, `m >= n >= 2`.
    Z { n: usize, m: usize },
    /// `Z^{(i)}(k, m) = {x_d^{i-1} x_{d-1} x_d^{k-i-2} x_t x}`, `k >= i+2`, `m >= k`.
    Zi { i: usize, k: usize, m: usize },
}

pub fn el_support(d: u32, desc: ElSupportDescriptor) -> Result<CylinderSet> {
    let spine = || Constraint::Singleton(d - 1);
    let pair = Constraint::Subset(vec![0, 1]);
    match desc {
        ElSupportDescriptor::Z { n, m } => {
            if n < 2 || m < n {
                return Err(Error::IndexConstraint(format!(
                    "Z(n,m) needs m >= n >= 2, got n={n}, m={m}"
                )));
            }
            let mut cs: Vec<Constraint> = (0..n - 2).map(|_| spine()).collect();
            cs.push(pair);
            cs.extend((0..m - n + 1).map(|_| Constraint::Full));
            CylinderSet::new(WordShape::uniform(d, m), cs)
        }
        ElSupportDescriptor::Zi { i, k, m } => {
            if i < 1 || k < i + 2 || m < k {
                return Err(Error::IndexConstraint(format!(
                    "Z^(i)(k,m) needs k >= i+2 and m >= k, got i={i}, k={k}, m={m}"
                )));
            }
            let mut cs: Vec<Constraint> = (0..i - 1).map(|_| spine()).collect();
            cs.push(Constraint::Singleton(d - 2));
            cs.extend((0..k - i - 2).map(|_| spine()));
            cs.push(pair);
            cs.extend((0..m - k + 1).map(|_| Constraint::Full));
            CylinderSet::new(WordShape::uniform(d, m), cs)
        }
    }
}

/// Scalar-quotient wrapper: same representatives, comparison up to a global
/// scalar via a canonical form.
pub(crate) struct ModScalars {
    base: Arc<dyn TelescopeImpl>,
}

pub fn build_psl(d: u32, q: u16, max_level: usize) -> Result<Telescope> {
    let base = build_el(d, q, max_level)?;
    quotient_by_scalars(&base)
}

/// Normal families supported by the quotient constructor.
#[derive(Clone, Copy, Debug)]
pub enum NormalFamily {
    Trivial,
    Scalars,
}

/// Lemma-style quotient: the trivial family returns an isomorphic telescope,
/// the scalar family yields the projective variant. The containment
/// `ι_{i,j}(M_i) ⊆ M_j` is checked on scalar generators up to the horizon.
pub fn quotient(spec: &Telescope, family: NormalFamily) -> Result<Telescope> {
    match family {
        NormalFamily::Trivial => Ok(spec.clone()),
        NormalFamily::Scalars => quotient_by_scalars(spec),
    }
}

fn quotient_by_scalars(spec: &Telescope) -> Result<Telescope> {
    if spec.engine() != Engine::Matrix {
        return Err(Error::EngineMismatch {
            expected: "matrix",
            found: "permutation",
        });
    }
    let (_, q) = spec
        .matrix_params()
        .ok_or_else(|| Error::Precondition("matrix telescope required".into()))?;
    // Containment check: transition maps take scalar matrices to scalar
    // matrices, verified on every scalar at every materializable level.
    for i in 1..spec.max_level() {
        let dim = spec.level_size(i);
        for lambda in 1..q.q() as u8 {
            let m = Elem::Mat(MatFq::scalar(q, dim, lambda));
            let lifted = spec.iota(i, i + 1, &m);
            if lifted.as_mat()?.is_scalar().is_none() {
                return Err(Error::Precondition(format!(
                    "transition does not map scalars to scalars at level {i}"
                )));
            }
        }
    }
    Ok(Telescope::new(Arc::new(ModScalars {
        base: spec.inner_arc(),
    })))
}

/// Number of scalars in `SL_n(F_q)`: `#{λ : λ^n = 1}` in `F_q^*`.
pub fn scalar_count(q: Fq, n_exponent_base: u64, level: u32) -> u64 {
    // λ^(d^level) depends only on d^level mod (q-1).
    let modulus = (q.q() - 1) as u64;
    if modulus == 0 {
        return 1;
    }
    let mut e: u64 = 1;
    for _ in 0..level {
        e = (e * (n_exponent_base % modulus)) % modulus;
    }
    let mut count = 0;
    for l in 1..q.q() as u8 {
        // l^e by repeated squaring in the table
        let mut acc = 1u8;
        let mut base = l;
        let mut ee = e;
        if ee == 0 {
            ee = modulus; // λ^0 would be 1, but exponent d^level is never 0
        }
        while ee > 0 {
            if ee & 1 == 1 {
                acc = q.mul(acc, base);
            }
            base = q.mul(base, base);
            ee >>= 1;
        }
        if acc == 1 {
            count += 1;
        }
    }
    count
}

impl TelescopeImpl for ModScalars {
    fn name(&self) -> String {
        format!("psl[{}]", self.base.name())
    }
    fn engine(&self) -> Engine {
        Engine::MatrixModScalars
    }
    fn max_level(&self) -> usize {
        self.base.max_level()
    }
    fn level_shape(&self, i: usize) -> WordShape {
        self.base.level_shape(i)
    }
    fn level_order(&self, i: usize) -> BigUint {
        let (d, q) = self.base.matrix_params().expect("matrix base");
        self.base.level_order(i) / BigUint::from(scalar_count(q, d as u64, i as u32))
    }
    fn level_generators(&self, i: usize) -> Vec<Elem> {
        self.base.level_generators(i)
    }
    fn identity(&self, i: usize) -> Elem {
        self.base.identity(i)
    }
    fn iota(&self, i: usize, j: usize, e: &Elem) -> Elem {
        self.base.iota(i, j, e)
    }
    fn phi(&self, i: usize, b: &Elem) -> Elem {
        self.base.phi(i, b)
    }
    fn alpha(&self, i: usize) -> Elem {
        self.base.alpha(i)
    }
    fn b_identity(&self) -> Elem {
        self.base.b_identity()
    }
    fn b_generators(&self) -> Vec<Elem> {
        self.base.b_generators()
    }
    fn b_sample(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Elem {
        self.base.b_sample(rng)
    }
    fn elem_eq(&self, _level: usize, a: &Elem, b: &Elem) -> bool {
        match (a, b) {
            (Elem::Mat(x), Elem::Mat(y)) => x.scalar_canonical() == y.scalar_canonical(),
            _ => a == b,
        }
    }
    fn elem_is_identity(&self, _level: usize, e: &Elem) -> bool {
        match e {
            Elem::Mat(m) => m.is_scalar().is_some(),
            Elem::Perm(p) => p.is_identity(),
        }
    }
    fn b_support(&self, i: usize, at_level: usize) -> Option<CylinderSet> {
        self.base.b_support(i, at_level)
    }
    fn alpha_support(&self, i: usize, at_level: usize) -> Option<CylinderSet> {
        self.base.alpha_support(i, at_level)
    }
    fn b_conj_support(&self, alpha_i: usize, b_k: usize, at_level: usize) -> Option<CylinderSet> {
        self.base.b_conj_support(alpha_i, b_k, at_level)
    }
    fn matrix_params(&self) -> Option<(u32, Fq)> {
        self.base.matrix_params()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_one_group_order() {
        let s = build_el(4, 2, 3).unwrap();
        assert_eq!(s.level_order(1), BigUint::from(20160u32));
    }

    #[test]
    fn z_set_cardinalities_and_disjointness() {
        // Z(2,2) for d = 4 has 2*4 = 8 words.
        let z = el_support(4, ElSupportDescriptor::Z { n: 2, m: 2 }).unwrap();
        assert_eq!(z.cardinality(), 8);
        // Z^{(i)}(k,m) disjoint from Z(l,m) for k, l >= i + 2 at all levels.
        for i in 1..=2usize {
            for k in i + 2..=5usize {
                for l in 2..=5usize {
                    if l < 2 {
                        continue;
                    }
                    for m in k.max(l)..=6usize {
                        let zi = el_support(4, ElSupportDescriptor::Zi { i, k, m }).unwrap();
                        let z = el_support(4, ElSupportDescriptor::Z { n: l, m }).unwrap();
                        if l >= i + 2 {
                            assert!(zi.is_disjoint(&z).unwrap(), "i={i} k={k} l={l} m={m}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn phi_image_is_supported_in_z() {
        let s = build_el(4, 2, 3).unwrap();
        let mut rng = crate::util::substream(7, "phi-support");
        for n in 2..=3usize {
            for _ in 0..50 {
                let b = s.b_sample(&mut rng);
                let planted = s.phi(n, &b);
                let z = s.b_support(n, n).unwrap();
                let idx: Vec<usize> = z.enumerate();
                assert!(planted.as_mat().unwrap().supported_in(&idx));
            }
        }
    }

    #[test]
    fn scalars_map_to_scalars_and_quotient_builds() {
        let psl = build_psl(4, 3, 3).unwrap();
        assert_eq!(psl.engine(), Engine::MatrixModScalars);
        // |PSL_4(F_3)| = |SL_4(F_3)| / 2 since gcd(4, 3-1) = 2.
        assert_eq!(scalar_count(Fq::new(3).unwrap(), 4, 1), 2);
        assert_eq!(
            psl.level_order(1) * BigUint::from(2u32),
            sl_order(4, 3)
        );
        // Equality up to a scalar.
        let q = Fq::new(3).unwrap();
        let a = Elem::Mat(MatFq::identity(q, 4));
        let b = Elem::Mat(MatFq::scalar(q, 4, 2));
        assert!(psl.elem_eq(1, &a, &b));
        assert!(psl.elem_is_identity(1, &b));
    }

    #[test]
    fn trivial_quotient_is_isomorphic() {
        let s = build_el(4, 2, 3).unwrap();
        let t = quotient(&s, NormalFamily::Trivial).unwrap();
        assert_eq!(t.name(), s.name());
        assert_eq!(t.level_order(2), s.level_order(2));
    }

    #[test]
    fn alpha_is_the_signed_swap_on_the_last_two_words() {
        let s = build_el(4, 2, 2).unwrap();
        let a = s.alpha_elem(2);
        let m = a.as_mat().unwrap();
        assert_eq!(m.support(), vec![14, 15]);
        assert_eq!(m.det(), 1);
        assert!(m.pow(2).is_identity()); // q = 2
    }
}
