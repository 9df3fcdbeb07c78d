//! The telescope abstraction and lazy elements of the infinite product.
//!
//! A telescope instance provides level groups `Ω_i` with transition maps
//! `ι_{i,j}`, the group `B` with maps `φ_i : B → Ω_i` for `i >= 2`, and
//! flexibility witnesses `α_i`. Elements of the product are formal words in
//! `Δ`-atoms and tilde-atoms, evaluated on demand at any level and memoized
//! per (element, level).

use crate::alphabet::{CylinderSet, WordShape};
use crate::linfq::MatFq;
use crate::permgrp::Perm;
use crate::{Error, Result};
use num_bigint::BigUint;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Permutation,
    Matrix,
    MatrixModScalars,
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Engine::Permutation => write!(f, "permutation"),
            Engine::Matrix => write!(f, "matrix"),
            Engine::MatrixModScalars => write!(f, "matrix-mod-scalars"),
        }
    }
}

/// A level-group element (or an element of `B` in its own engine).
#[derive(Clone, PartialEq, Eq)]
pub enum Elem {
    Perm(Perm),
    Mat(MatFq),
}

impl Elem {
    pub fn mul(&self, rhs: &Elem) -> Elem {
        match (self, rhs) {
            (Elem::Perm(a), Elem::Perm(b)) => Elem::Perm(a.mul(b)),
            (Elem::Mat(a), Elem::Mat(b)) => Elem::Mat(a.mul(b)),
            _ => panic!("engine mismatch in element product"),
        }
    }

    pub fn inverse(&self) -> Elem {
        match self {
            Elem::Perm(p) => Elem::Perm(p.inverse()),
            Elem::Mat(m) => Elem::Mat(m.inverse().expect("group elements are invertible")),
        }
    }

    pub fn plain_is_identity(&self) -> bool {
        match self {
            Elem::Perm(p) => p.is_identity(),
            Elem::Mat(m) => m.is_identity(),
        }
    }

    /// `self^h = h^{-1} self h`.
    pub fn conj(&self, h: &Elem) -> Elem {
        h.inverse().mul(self).mul(h)
    }

    /// `[a, b] = a b a^{-1} b^{-1}`.
    pub fn commutator(a: &Elem, b: &Elem) -> Elem {
        a.mul(b).mul(&a.inverse()).mul(&b.inverse())
    }

    pub fn as_perm(&self) -> Result<&Perm> {
        match self {
            Elem::Perm(p) => Ok(p),
            Elem::Mat(_) => Err(Error::EngineMismatch {
                expected: "permutation",
                found: "matrix",
            }),
        }
    }

    pub fn as_mat(&self) -> Result<&MatFq> {
        match self {
            Elem::Mat(m) => Ok(m),
            Elem::Perm(_) => Err(Error::EngineMismatch {
                expected: "matrix",
                found: "permutation",
            }),
        }
    }
}

impl std::fmt::Debug for Elem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Elem::Perm(p) => write!(f, "{p:?}"),
            Elem::Mat(m) => write!(f, "{m:?}"),
        }
    }
}

/// Spine-and-pattern structure of a permutation-engine telescope: each
/// `φ_k(b)` acts on words `spine^{k-2}·s·t`, where the pairs `(s, t)` range
/// over the images of a fixed abstract pattern. Drives the unified normal
/// form, consistency, and action machinery.
#[derive(Clone, Debug)]
pub struct SpineData {
    /// 0-based spine letter of each coordinate.
    pub spine_letters: Vec<u32>,
    /// For each pattern point, its letter pair `(s, t)` at coordinates
    /// `(k-2, k-1)`; constant across levels for the built-in instances.
    pub pattern_pair: Vec<(u32, u32)>,
}

impl SpineData {
    pub fn pattern_size(&self) -> usize {
        self.pattern_pair.len()
    }

    pub fn spine_letter(&self, coord: usize) -> u32 {
        self.spine_letters[coord]
    }

    /// Letters occurring as the first component of a pattern pair.
    pub fn pattern_first_letters(&self) -> Vec<u32> {
        let mut ls: Vec<u32> = self.pattern_pair.iter().map(|&(s, _)| s).collect();
        ls.sort_unstable();
        ls.dedup();
        ls
    }

    pub fn shifted(&self, n: usize) -> SpineData {
        SpineData {
            spine_letters: self.spine_letters[n.min(self.spine_letters.len())..].to_vec(),
            pattern_pair: self.pattern_pair.clone(),
        }
    }
}

/// One concrete telescope: level groups, transitions, `B`, and witnesses.
pub trait TelescopeImpl: Send + Sync {
    fn name(&self) -> String;
    fn engine(&self) -> Engine;
    /// Largest level at which elements are materialized exactly.
    fn max_level(&self) -> usize;
    /// Action-stabilization constant.
    fn kappa(&self) -> usize {
        2
    }
    fn level_shape(&self, i: usize) -> WordShape;
    fn level_size(&self, i: usize) -> usize {
        self.level_shape(i).count()
    }
    fn level_order(&self, i: usize) -> BigUint;
    /// Generators of `Ω_i`.
    fn level_generators(&self, i: usize) -> Vec<Elem>;
    fn identity(&self, i: usize) -> Elem;
    /// Transition `ι_{i,j}` for `i <= j`.
    fn iota(&self, i: usize, j: usize, e: &Elem) -> Elem;
    /// `φ_i : B → Ω_i` for `i >= 2`.
    fn phi(&self, i: usize, b: &Elem) -> Elem;
    /// Flexibility witness `α_i`.
    fn alpha(&self, i: usize) -> Elem;

    fn b_identity(&self) -> Elem;
    fn b_generators(&self) -> Vec<Elem>;
    fn b_sample(&self, rng: &mut ChaCha8Rng) -> Elem;
    fn b_eq(&self, a: &Elem, b: &Elem) -> bool {
        a == b
    }

    /// Level-group equality; quotient engines compare canonical forms.
    fn elem_eq(&self, _level: usize, a: &Elem, b: &Elem) -> bool {
        a == b
    }
    fn elem_is_identity(&self, _level: usize, e: &Elem) -> bool {
        e.plain_is_identity()
    }

    /// Support of `B_{i}` pushed to `at_level`, when a formula is available.
    fn b_support(&self, i: usize, at_level: usize) -> Option<CylinderSet>;
    /// Support of `α_{i}` pushed to `at_level`.
    fn alpha_support(&self, i: usize, at_level: usize) -> Option<CylinderSet>;
    /// Support of `B_{k}` conjugated by `α_{i}`, pushed to `at_level`;
    /// requires `k >= i + 2`.
    fn b_conj_support(&self, alpha_i: usize, b_k: usize, at_level: usize) -> Option<CylinderSet>;

    fn spine(&self) -> Option<&SpineData> {
        None
    }

    /// `(d, q)` for the matrix engines.
    fn matrix_params(&self) -> Option<(u32, crate::linfq::Fq)> {
        None
    }

    /// `(d, r)` for the alternating telescope.
    fn alt_params(&self) -> Option<(u32, u32)> {
        None
    }
}

/// Shared handle to a telescope instance.
#[derive(Clone)]
pub struct Telescope {
    inner: Arc<dyn TelescopeImpl>,
}

impl Telescope {
    pub fn new(inner: Arc<dyn TelescopeImpl>) -> Self {
        Telescope { inner }
    }

    pub fn same_spec(&self, other: &Telescope) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }

    pub(crate) fn inner_arc(&self) -> Arc<dyn TelescopeImpl> {
        Arc::clone(&self.inner)
    }

    pub fn name(&self) -> String {
        self.inner.name()
    }
    pub fn engine(&self) -> Engine {
        self.inner.engine()
    }
    pub fn max_level(&self) -> usize {
        self.inner.max_level()
    }
    pub fn kappa(&self) -> usize {
        self.inner.kappa()
    }
    pub fn level_shape(&self, i: usize) -> WordShape {
        self.inner.level_shape(i)
    }
    pub fn level_size(&self, i: usize) -> usize {
        self.inner.level_size(i)
    }
    pub fn level_order(&self, i: usize) -> BigUint {
        self.inner.level_order(i)
    }
    pub fn level_generators(&self, i: usize) -> Vec<Elem> {
        self.inner.level_generators(i)
    }
    pub fn identity(&self, i: usize) -> Elem {
        self.inner.identity(i)
    }
    pub fn iota(&self, i: usize, j: usize, e: &Elem) -> Elem {
        self.inner.iota(i, j, e)
    }
    pub fn phi(&self, i: usize, b: &Elem) -> Elem {
        self.inner.phi(i, b)
    }
    pub fn alpha_elem(&self, i: usize) -> Elem {
        self.inner.alpha(i)
    }
    pub fn b_identity(&self) -> Elem {
        self.inner.b_identity()
    }
    pub fn b_generators(&self) -> Vec<Elem> {
        self.inner.b_generators()
    }
    pub fn b_sample(&self, rng: &mut ChaCha8Rng) -> Elem {
        self.inner.b_sample(rng)
    }
    pub fn b_eq(&self, a: &Elem, b: &Elem) -> bool {
        self.inner.b_eq(a, b)
    }
    pub fn elem_eq(&self, level: usize, a: &Elem, b: &Elem) -> bool {
        self.inner.elem_eq(level, a, b)
    }
    pub fn elem_is_identity(&self, level: usize, e: &Elem) -> bool {
        self.inner.elem_is_identity(level, e)
    }
    pub fn b_support(&self, i: usize, at_level: usize) -> Option<CylinderSet> {
        self.inner.b_support(i, at_level)
    }
    pub fn alpha_support(&self, i: usize, at_level: usize) -> Option<CylinderSet> {
        self.inner.alpha_support(i, at_level)
    }
    pub fn b_conj_support(&self, alpha_i: usize, b_k: usize, at_level: usize) -> Option<CylinderSet> {
        self.inner.b_conj_support(alpha_i, b_k, at_level)
    }
    pub fn spine(&self) -> Option<SpineData> {
        self.inner.spine().cloned()
    }
    pub fn matrix_params(&self) -> Option<(u32, crate::linfq::Fq)> {
        self.inner.matrix_params()
    }
    pub fn alt_params(&self) -> Option<(u32, u32)> {
        self.inner.alt_params()
    }

    fn check_level(&self, i: usize) -> Result<()> {
        if i < 1 || i > self.max_level() {
            Err(Error::LevelOutOfRange {
                level: i,
                max: self.max_level(),
            })
        } else {
            Ok(())
        }
    }

    /// The diagonal-tail atom: trivial below `i`, `ι_{i,j}(ω)` at `j >= i`.
    pub fn delta(&self, i: usize, omega: Elem) -> Result<LazyElement> {
        self.check_level(i)?;
        Ok(LazyElement::from_atoms(
            self.clone(),
            vec![SignedAtom {
                atom: Atom::Delta { level: i, elem: omega },
                inverted: false,
            }],
        ))
    }

    /// The directed atom: trivial up to `n`, then the commuting product
    /// `∏_{k=n+1}^{i} ι_{k,i}(φ_k(b))`.
    pub fn tilde(&self, n: usize, b: Elem) -> Result<LazyElement> {
        if n < 1 {
            return Err(Error::Precondition("tilde start must be >= 1".into()));
        }
        Ok(LazyElement::from_atoms(
            self.clone(),
            vec![SignedAtom {
                atom: Atom::Tilde { start: n, b },
                inverted: false,
            }],
        ))
    }

    /// An element given by an arbitrary per-level profile; used for product
    /// elements that live outside the generated group.
    pub fn profile(
        &self,
        name: &str,
        eval: Arc<dyn Fn(usize) -> Elem + Send + Sync>,
    ) -> LazyElement {
        LazyElement::from_atoms(
            self.clone(),
            vec![SignedAtom {
                atom: Atom::Profile {
                    name: name.to_string(),
                    eval,
                },
                inverted: false,
            }],
        )
    }

    pub fn identity_element(&self) -> LazyElement {
        LazyElement::from_atoms(self.clone(), vec![])
    }

    /// The `n`-fold shifted telescope: level `i` becomes level `i + n`.
    pub fn shift(&self, n: usize) -> Telescope {
        if n == 0 {
            return self.clone();
        }
        Telescope::new(Arc::new(Shifted {
            base: Arc::clone(&self.inner),
            n,
            spine: self.inner.spine().map(|s| s.shifted(n)),
        }))
    }
}

struct Shifted {
    base: Arc<dyn TelescopeImpl>,
    n: usize,
    spine: Option<SpineData>,
}

impl TelescopeImpl for Shifted {
    fn name(&self) -> String {
        format!("{}+{}", self.base.name(), self.n)
    }
    fn engine(&self) -> Engine {
        self.base.engine()
    }
    fn max_level(&self) -> usize {
        self.base.max_level().saturating_sub(self.n)
    }
    fn kappa(&self) -> usize {
        self.base.kappa()
    }
    fn level_shape(&self, i: usize) -> WordShape {
        self.base.level_shape(i + self.n)
    }
    fn level_order(&self, i: usize) -> BigUint {
        self.base.level_order(i + self.n)
    }
    fn level_generators(&self, i: usize) -> Vec<Elem> {
        self.base.level_generators(i + self.n)
    }
    fn identity(&self, i: usize) -> Elem {
        self.base.identity(i + self.n)
    }
    fn iota(&self, i: usize, j: usize, e: &Elem) -> Elem {
        self.base.iota(i + self.n, j + self.n, e)
    }
    fn phi(&self, i: usize, b: &Elem) -> Elem {
        self.base.phi(i + self.n, b)
    }
    fn alpha(&self, i: usize) -> Elem {
        self.base.alpha(i + self.n)
    }
    fn b_identity(&self) -> Elem {
        self.base.b_identity()
    }
    fn b_generators(&self) -> Vec<Elem> {
        self.base.b_generators()
    }
    fn b_sample(&self, rng: &mut ChaCha8Rng) -> Elem {
        self.base.b_sample(rng)
    }
    fn b_eq(&self, a: &Elem, b: &Elem) -> bool {
        self.base.b_eq(a, b)
    }
    fn elem_eq(&self, level: usize, a: &Elem, b: &Elem) -> bool {
        self.base.elem_eq(level + self.n, a, b)
    }
    fn elem_is_identity(&self, level: usize, e: &Elem) -> bool {
        self.base.elem_is_identity(level + self.n, e)
    }
    fn b_support(&self, i: usize, at_level: usize) -> Option<CylinderSet> {
        self.base.b_support(i + self.n, at_level + self.n)
    }
    fn alpha_support(&self, i: usize, at_level: usize) -> Option<CylinderSet> {
        self.base.alpha_support(i + self.n, at_level + self.n)
    }
    fn b_conj_support(&self, alpha_i: usize, b_k: usize, at_level: usize) -> Option<CylinderSet> {
        self.base
            .b_conj_support(alpha_i + self.n, b_k + self.n, at_level + self.n)
    }
    fn spine(&self) -> Option<&SpineData> {
        self.spine.as_ref()
    }
    fn matrix_params(&self) -> Option<(u32, crate::linfq::Fq)> {
        self.base.matrix_params()
    }
}

/// An atom of a formal word in the product.
#[derive(Clone)]
pub enum Atom {
    Delta {
        level: usize,
        elem: Elem,
    },
    Tilde {
        start: usize,
        b: Elem,
    },
    /// An arbitrary per-level profile (e.g. coordinate-wise involutions).
    Profile {
        name: String,
        eval: Arc<dyn Fn(usize) -> Elem + Send + Sync>,
    },
}

#[derive(Clone)]
pub struct SignedAtom {
    pub atom: Atom,
    pub inverted: bool,
}

impl SignedAtom {
    fn cancels(&self, other: &SignedAtom, spec: &Telescope) -> bool {
        if self.inverted == other.inverted {
            return false;
        }
        match (&self.atom, &other.atom) {
            (Atom::Delta { level: l1, elem: e1 }, Atom::Delta { level: l2, elem: e2 }) => {
                l1 == l2 && e1 == e2
            }
            (Atom::Tilde { start: n1, b: b1 }, Atom::Tilde { start: n2, b: b2 }) => {
                n1 == n2 && spec.b_eq(b1, b2)
            }
            (Atom::Profile { eval: f1, .. }, Atom::Profile { eval: f2, .. }) => {
                Arc::ptr_eq(f1, f2)
            }
            _ => false,
        }
    }
}

/// A formal word over the atoms, with per-level evaluation cache.
pub struct LazyElement {
    spec: Telescope,
    atoms: Vec<SignedAtom>,
    cache: Mutex<HashMap<usize, Elem>>,
}

impl Clone for LazyElement {
    fn clone(&self) -> Self {
        LazyElement {
            spec: self.spec.clone(),
            atoms: self.atoms.clone(),
            cache: Mutex::new(self.cache.lock().unwrap().clone()),
        }
    }
}

impl LazyElement {
    pub fn from_atoms(spec: Telescope, atoms: Vec<SignedAtom>) -> Self {
        // Free cancellation of adjacent inverse atoms; deeper rewriting is
        // the business of the normal-form module.
        let mut reduced: Vec<SignedAtom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            if let Some(last) = reduced.last() {
                if last.cancels(&a, &spec) {
                    reduced.pop();
                    continue;
                }
            }
            reduced.push(a);
        }
        LazyElement {
            spec,
            atoms: reduced,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn spec(&self) -> &Telescope {
        &self.spec
    }

    pub fn atoms(&self) -> &[SignedAtom] {
        &self.atoms
    }

    pub fn word_length(&self) -> usize {
        self.atoms.len()
    }

    pub fn mul(&self, rhs: &LazyElement) -> LazyElement {
        assert!(self.spec.same_spec(&rhs.spec), "elements from different telescopes");
        let mut atoms = self.atoms.clone();
        atoms.extend(rhs.atoms.iter().cloned());
        LazyElement::from_atoms(self.spec.clone(), atoms)
    }

    pub fn inverse(&self) -> LazyElement {
        let atoms = self
            .atoms
            .iter()
            .rev()
            .map(|a| SignedAtom {
                atom: a.atom.clone(),
                inverted: !a.inverted,
            })
            .collect();
        LazyElement::from_atoms(self.spec.clone(), atoms)
    }

    pub fn conj(&self, h: &LazyElement) -> LazyElement {
        h.inverse().mul(self).mul(h)
    }

    pub fn commutator(a: &LazyElement, b: &LazyElement) -> LazyElement {
        a.mul(b).mul(&a.inverse()).mul(&b.inverse())
    }

    fn eval_atom(&self, atom: &Atom, n: usize) -> Elem {
        let spec = &self.spec;
        match atom {
            Atom::Delta { level, elem } => {
                if n < *level {
                    spec.identity(n)
                } else {
                    spec.iota(*level, n, elem)
                }
            }
            Atom::Tilde { start, b } => {
                let mut acc = spec.identity(n);
                if n > *start {
                    for k in (*start + 1)..=n {
                        acc = acc.mul(&spec.iota(k, n, &spec.phi(k, b)));
                    }
                }
                acc
            }
            Atom::Profile { eval, .. } => eval(n),
        }
    }

    /// Homomorphic projection `π_n`, memoized.
    pub fn project(&self, n: usize) -> Result<Elem> {
        if n < 1 || n > self.spec.max_level() {
            return Err(Error::LevelOutOfRange {
                level: n,
                max: self.spec.max_level(),
            });
        }
        if let Some(e) = self.cache.lock().unwrap().get(&n) {
            return Ok(e.clone());
        }
        let mut acc = self.spec.identity(n);
        for sa in &self.atoms {
            let v = self.eval_atom(&sa.atom, n);
            let v = if sa.inverted { v.inverse() } else { v };
            acc = acc.mul(&v);
        }
        self.cache.lock().unwrap().insert(n, acc.clone());
        Ok(acc)
    }

    /// True iff `π_j(self) = π_j(other)` for all `j <= n`.
    pub fn equal_up_to(&self, other: &LazyElement, n: usize) -> Result<bool> {
        if !self.spec.same_spec(&other.spec) {
            return Err(Error::Precondition(
                "elements from different telescopes".into(),
            ));
        }
        for j in 1..=n {
            let a = self.project(j)?;
            let b = other.project(j)?;
            if !self.spec.elem_eq(j, &a, &b) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn is_identity_up_to(&self, n: usize) -> Result<bool> {
        for j in 1..=n {
            let a = self.project(j)?;
            if !self.spec.elem_is_identity(j, &a) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
