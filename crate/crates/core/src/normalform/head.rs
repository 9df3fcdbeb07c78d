//! Head normal form: modulo the direct sum, every element is
//! `ε · c_1^{δ_1} ⋯ c_m^{δ_m} · η` with `c_i` directed atoms one level above
//! the conjugators `δ_i` and pairwise distinct base points. Conjugated
//! factors with equal base points merge into a single factor. This is the
//! form behind the germ computation at eventually-spine points.

use crate::permgrp::Perm;
use crate::telescope::{Atom, Elem, LazyElement, SpineData, Telescope};
use crate::{Error, Result};
use super::carrier::ShapeAt;

#[derive(Clone)]
pub struct HeadNormalForm {
    spec: Telescope,
    spine: SpineData,
    /// conjugators live at level `n`, the directed parts start at `n + 1`
    pub n: usize,
    /// element of `Ω_{n+1}`
    pub eps: Perm,
    /// factors `(b_i, ω_i)` representing `(b_i~^{[n+1]})^{Δ_n(ω_i)}`
    pub factors: Vec<(Perm, Perm)>,
    /// element of `Ω_{n+1}`
    pub eta: Perm,
}

/// Rewrites a word over delta/tilde atoms into the head normal form. All
/// identities used hold modulo the direct sum, so the result represents the
/// same head element as the input.
pub fn head_normal_form(word: &LazyElement) -> Result<HeadNormalForm> {
    let spec = word.spec().clone();
    let spine = spec.spine().ok_or(Error::EngineMismatch {
        expected: "spined permutation telescope",
        found: "other",
    })?;
    let mut hnf = HeadNormalForm {
        spec: spec.clone(),
        spine,
        n: 1,
        eps: Perm::identity(spec.level_size(2)),
        factors: vec![],
        eta: Perm::identity(spec.level_size(2)),
    };
    for sa in word.atoms() {
        match &sa.atom {
            Atom::Delta { level, elem } => {
                let omega = elem.as_perm()?;
                let omega = if sa.inverted { omega.inverse() } else { omega.clone() };
                hnf.mul_delta(*level, &omega);
            }
            Atom::Tilde { start, b } => {
                let b = b.as_perm()?;
                let b = if sa.inverted { b.inverse() } else { b.clone() };
                hnf.mul_tilde(*start, &b);
            }
            Atom::Profile { .. } => {
                return Err(Error::Precondition(
                    "head normal form expects a word over delta and tilde atoms".into(),
                ))
            }
        }
    }
    Ok(hnf)
}

impl HeadNormalForm {
    pub fn spec(&self) -> &Telescope {
        &self.spec
    }

    fn iota_perm(&self, i: usize, j: usize, p: &Perm) -> Perm {
        self.spec
            .iota(i, j, &Elem::Perm(p.clone()))
            .as_perm()
            .expect("permutation engine")
            .clone()
    }

    fn phi_perm(&self, i: usize, b: &Perm) -> Perm {
        self.spec
            .phi(i, &Elem::Perm(b.clone()))
            .as_perm()
            .expect("permutation engine")
            .clone()
    }

    fn spine_index(&self, level: usize) -> usize {
        let shape = self.spec.level_shape_at(level);
        let letters: Vec<u32> = (0..level).map(|c| self.spine.spine_letter(c)).collect();
        shape.index_of(&letters).expect("spine in range")
    }

    /// Base point of factor `i`: `ω_i^{-1}(o^n)` as a level-`n` word index.
    pub fn base_point(&self, i: usize) -> usize {
        self.factors[i].1.inverse().apply(self.spine_index(self.n))
    }

    pub fn base_points_distinct(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        (0..self.factors.len()).all(|i| seen.insert(self.base_point(i)))
    }

    /// Moves every factor one level deeper without changing the head class.
    fn raise_n(&mut self) {
        let n = self.n;
        let mut eps = self.iota_perm(n + 1, n + 2, &self.eps);
        for (b, omega) in &self.factors {
            let planted = self.phi_perm(n + 2, b);
            let conj = planted.conj(&self.iota_perm(n, n + 2, omega));
            eps = eps.mul(&conj);
        }
        self.eps = eps;
        self.factors = self
            .factors
            .iter()
            .map(|(b, omega)| (b.clone(), self.iota_perm(n, n + 1, omega)))
            .collect();
        self.eta = self.iota_perm(n + 1, n + 2, &self.eta);
        self.n = n + 1;
    }

    fn mul_delta(&mut self, i: usize, omega: &Perm) {
        if omega.is_identity() {
            return;
        }
        while i > self.n + 1 {
            self.raise_n();
        }
        self.eta = self.eta.mul(&self.iota_perm(i, self.n + 1, omega));
    }

    fn mul_tilde(&mut self, k: usize, b: &Perm) {
        if b.is_identity() {
            return;
        }
        while k > self.n + 1 {
            self.raise_n();
        }
        let n = self.n;
        // D = π_{n+2}(b~^{[k]})
        let mut d = Perm::identity(self.spec.level_size(n + 2));
        for j in k + 1..=n + 2 {
            d = d.mul(&self.iota_perm(j, n + 2, &self.phi_perm(j, b)));
        }
        // η b~^{[n+2]} = (b~^{[n+2]})^{Δ(η^{-1})} η: new factor (b, η^{-1}).
        let omega_new = self.eta.inverse();
        // old factors lift; their level-(n+2) parts join ε
        let mut eps = self.iota_perm(n + 1, n + 2, &self.eps);
        for (bi, omega) in &self.factors {
            let planted = self.phi_perm(n + 2, bi);
            eps = eps.mul(&planted.conj(&self.iota_perm(n, n + 2, omega)));
        }
        self.eps = eps;
        let mut factors: Vec<(Perm, Perm)> = self
            .factors
            .iter()
            .map(|(bi, omega)| (bi.clone(), self.iota_perm(n, n + 1, omega)))
            .collect();
        self.eta = self.iota_perm(n + 1, n + 2, &self.eta).mul(&d);
        self.n = n + 1;
        // merge with an existing factor at the same base point, if any
        let spine_idx = self.spine_index(self.n);
        let base_new = omega_new.inverse().apply(spine_idx);
        let mut merged = false;
        for (bi, omega) in factors.iter_mut() {
            if omega.inverse().apply(spine_idx) == base_new {
                let combined = bi.mul(b);
                *bi = combined;
                merged = true;
                break;
            }
        }
        if !merged {
            factors.push((b.clone(), omega_new));
        }
        factors.retain(|(bi, _)| !bi.is_identity());
        self.factors = factors;
    }

    /// The represented element as a word (equal to the input in the head).
    pub fn reassemble(&self) -> Result<LazyElement> {
        let n = self.n;
        let mut word = self.spec.delta(n + 1, Elem::Perm(self.eps.clone()))?;
        for (b, omega) in &self.factors {
            let conj = self.spec.delta(n, Elem::Perm(omega.clone()))?;
            let c = self.spec.tilde(n + 1, Elem::Perm(b.clone()))?;
            word = word.mul(&conj.inverse()).mul(&c).mul(&conj);
        }
        word = word.mul(&self.spec.delta(n + 1, Elem::Perm(self.eta.clone()))?);
        Ok(word)
    }
}

/// A point of the boundary with eventually-spine tail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinePoint {
    /// the letters before the all-spine tail (0-based, may be empty)
    pub prefix: Vec<u32>,
}

impl SpinePoint {
    /// Letter at 1-based coordinate `c` (0-based index `c-1`).
    pub fn letter(&self, spine: &SpineData, idx: usize) -> u32 {
        if idx < self.prefix.len() {
            self.prefix[idx]
        } else {
            spine.spine_letter(idx)
        }
    }

    pub fn letters_to(&self, spine: &SpineData, len: usize) -> Vec<u32> {
        (0..len).map(|i| self.letter(spine, i)).collect()
    }

    /// Minimal prefix length: trailing spine letters are stripped.
    pub fn canonical_len(&self, spine: &SpineData) -> usize {
        let mut l = self.prefix.len();
        while l > 0 && self.prefix[l - 1] == spine.spine_letter(l - 1) {
            l -= 1;
        }
        l
    }
}

/// The germ of an element at an eventually-spine point.
pub enum Germ {
    /// The element acts as the identity on the cylinder below `prefix`.
    Trivial { prefix: Vec<u32> },
    /// The germ is that of `(b~^{[level+1]})^{Δ_level(omega)}`, where
    /// `omega` maps the point's prefix onto the spine.
    Conjugated {
        b: Perm,
        level: usize,
        omega: Perm,
        /// agreement neighborhood used in the verification
        verified_prefix: Vec<u32>,
    },
}

/// Computes the germ of the element at `ξ = prefix·o^∞`, for elements fixing
/// `ξ`. The result is verified by replaying both actions on a neighborhood
/// at every materializable level.
pub fn germ_at(word: &LazyElement, xi: &SpinePoint) -> Result<Germ> {
    let spec = word.spec().clone();
    let spine = spec.spine().ok_or(Error::EngineMismatch {
        expected: "spined permutation telescope",
        found: "other",
    })?;
    let hnf = head_normal_form(word)?;
    let n = hnf.n;
    let max = spec.max_level();
    if n + 2 > max {
        return Err(Error::BudgetExceeded(format!(
            "head normal form at depth {n} exceeds the materializable horizon"
        )));
    }
    // The element must fix ξ: its prefix of every materializable length maps
    // to itself (the action below the canonical prefix is eventually given
    // by prefix permutations).
    for j in (xi.canonical_len(&spine) + 1).max(1)..=max {
        let shape = spec.level_shape(j);
        let idx = shape.index_of(&xi.letters_to(&spine, j))?;
        let pj = word.project(j)?;
        let img = pj.as_perm()?.apply(idx);
        if shape.word_at(img) != xi.letters_to(&spine, j) {
            return Err(Error::Precondition(
                "element does not fix the point".into(),
            ));
        }
    }
    // Which factor's region contains ξ? Factor i acts inside the
    // γ_i-preimage of the spine cylinder, γ_i = Δ(ι(ω_i)·η).
    let shape_n1 = spec.level_shape(n + 1);
    let spine_n = hnf.spine_index(n);
    let mut hit: Option<usize> = None;
    for i in 0..hnf.factors.len() {
        let gamma = hnf
            .iota_perm(n, n + 1, &hnf.factors[i].1)
            .mul(&hnf.eta);
        let image = gamma.apply(shape_n1.index_of(&xi.letters_to(&spine, n + 1))?);
        let image_letters = shape_n1.word_at(image);
        let spine_word = spec.level_shape_at(n).word_at(spine_n);
        if image_letters[..n] == spine_word[..] {
            hit = Some(i);
            break;
        }
    }
    let Some(i0) = hit else {
        // trivial germ on the cylinder below the (n+1)-prefix
        let prefix = xi.letters_to(&spine, n + 1);
        verify_trivial_on(word, &prefix)?;
        return Ok(Germ::Trivial { prefix });
    };
    // ζ = γ(ξ): the factor has a nontrivial germ only at the exact spine ray.
    let (b, omega_i) = hnf.factors[i0].clone();
    let gamma = hnf.iota_perm(n, n + 1, &omega_i).mul(&hnf.eta);
    // γ is a prefix permutation at level n+1; its action on ξ replaces the
    // (n+1)-prefix and keeps the tail.
    let zeta_prefix = shape_n1.word_at(gamma.apply(shape_n1.index_of(&xi.letters_to(&spine, n + 1))?));
    let mut zeta = zeta_prefix.clone();
    zeta.extend((n + 1..xi.prefix.len().max(n + 1)).map(|c| xi.letter(&spine, c)));
    let zeta_pt = SpinePoint { prefix: zeta };
    let on_spine = zeta_pt.canonical_len(&spine) == 0;
    if !on_spine {
        // the factor acts near ζ like a finite prefix permutation: the germ
        // is trivial on a deep enough cylinder
        for len in n + 1..max {
            let prefix = xi.letters_to(&spine, len);
            if verify_trivial_on(word, &prefix).is_ok() {
                return Ok(Germ::Trivial { prefix });
            }
        }
        return Err(Error::BudgetExceeded(
            "no trivial neighborhood found within the horizon".into(),
        ));
    }
    // ζ = o^∞: germ represented by (b~^{[ℓ+1]})^{Δ_ℓ(ω)} with ω(ξ_{1..ℓ}) = o^ℓ.
    let level = xi.canonical_len(&spine).max(1);
    let shape_l = spec.level_shape(level);
    let xi_l = shape_l.index_of(&xi.letters_to(&spine, level))?;
    let spine_l = hnf.spine_index(level);
    let omega = if xi_l == spine_l {
        Perm::identity(shape_l.count())
    } else {
        let other = (0..shape_l.count())
            .find(|&p| p != xi_l && p != spine_l)
            .expect("level sets have at least three points");
        Perm::from_cycles(shape_l.count(), &[vec![xi_l, spine_l, other]])?
    };
    // verify agreement with the representative on a neighborhood
    let rep = spec
        .delta(level, Elem::Perm(omega.clone()))?
        .inverse()
        .mul(&spec.tilde(level + 1, Elem::Perm(b.clone()))?)
        .mul(&spec.delta(level, Elem::Perm(omega.clone()))?);
    let mut verified: Option<Vec<u32>> = None;
    'outer: for len in (level.max(n + 1) + 1)..=max.saturating_sub(1) {
        let prefix = xi.letters_to(&spine, len);
        let mut ok = true;
        for j in len + 1..=max {
            if !agree_below(word, &rep, &prefix, j)? {
                ok = false;
                break;
            }
        }
        if ok {
            verified = Some(prefix);
            break 'outer;
        }
    }
    match verified {
        Some(prefix) => Ok(Germ::Conjugated {
            b,
            level,
            omega,
            verified_prefix: prefix,
        }),
        None => Err(Error::Precondition(
            "germ representative disagrees on every candidate neighborhood".into(),
        )),
    }
}

fn verify_trivial_on(word: &LazyElement, prefix: &[u32]) -> Result<()> {
    let spec = word.spec();
    let max = spec.max_level();
    for j in prefix.len()..=max {
        let shape = spec.level_shape(j);
        let pj = word.project(j)?;
        let pj = pj.as_perm()?;
        let tail = crate::alphabet::WordShape::new(shape.sizes()[prefix.len()..].to_vec());
        for t in 0..tail.count() {
            let mut w = prefix.to_vec();
            w.extend_from_slice(&tail.word_at(t));
            let idx = shape.index_of(&w)?;
            if pj.apply(idx) != idx {
                return Err(Error::Precondition(
                    "element acts nontrivially on the candidate neighborhood".into(),
                ));
            }
        }
    }
    Ok(())
}

fn agree_below(a: &LazyElement, b: &LazyElement, prefix: &[u32], level: usize) -> Result<bool> {
    let spec = a.spec();
    let shape = spec.level_shape(level);
    let pa = a.project(level)?;
    let pa = pa.as_perm()?;
    let pb = b.project(level)?;
    let pb = pb.as_perm()?;
    let tail = crate::alphabet::WordShape::new(shape.sizes()[prefix.len()..].to_vec());
    for t in 0..tail.count() {
        let mut w = prefix.to_vec();
        w.extend_from_slice(&tail.word_at(t));
        let idx = shape.index_of(&w)?;
        if pa.apply(idx) != pb.apply(idx) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{build_alt, AltTelescopeParams};
    use crate::normalform::head_equal;
    use crate::util::substream;
    use rand::Rng;

    fn alt52() -> Telescope {
        build_alt(AltTelescopeParams {
            d: 5,
            r: 2,
            max_level: 5,
        })
        .unwrap()
    }

    fn random_word(spec: &Telescope, rng: &mut rand_chacha::ChaCha8Rng, len: usize) -> LazyElement {
        let mut word = spec.identity_element();
        for _ in 0..len {
            let atom = if rng.gen_bool(0.5) {
                spec.tilde(1, spec.b_sample(rng)).unwrap()
            } else {
                let omega = crate::permgrp::random_even(rng, spec.level_size(1));
                spec.delta(1, Elem::Perm(omega)).unwrap()
            };
            word = word.mul(&atom);
        }
        word
    }

    #[test]
    fn single_tilde_gives_one_factor() {
        let s = alt52();
        let b = s.b_generators()[0].clone();
        let hnf = head_normal_form(&s.tilde(1, b.clone()).unwrap()).unwrap();
        assert_eq!(hnf.factors.len(), 1);
        assert!(hnf.base_points_distinct());
        let back = hnf.reassemble().unwrap();
        assert!(head_equal(&s.tilde(1, b).unwrap(), &back).unwrap());
    }

    #[test]
    fn equal_base_points_merge() {
        let s = alt52();
        let b1 = s.b_generators()[0].as_perm().unwrap().clone();
        let b2 = s.b_generators()[1].as_perm().unwrap().clone();
        // two tildes in a row share the base point and merge into one factor
        let w = s
            .tilde(1, Elem::Perm(b1.clone()))
            .unwrap()
            .mul(&s.tilde(1, Elem::Perm(b2.clone())).unwrap());
        let hnf = head_normal_form(&w).unwrap();
        assert_eq!(hnf.factors.len(), 1);
        assert_eq!(hnf.factors[0].0, b1.mul(&b2));
    }

    #[test]
    fn random_words_have_distinct_base_points_and_correct_heads() {
        let s = alt52();
        let mut rng = substream(41, "hnf-random");
        for _ in 0..25 {
            let len = rng.gen_range(1..=6);
            let word = random_word(&s, &mut rng, len);
            let hnf = head_normal_form(&word).unwrap();
            assert!(hnf.base_points_distinct());
            if hnf.n + 1 <= s.max_level() {
                let back = hnf.reassemble().unwrap();
                assert!(
                    head_equal(&word, &back).unwrap(),
                    "head mismatch at length {len}"
                );
            }
        }
    }

    #[test]
    fn germ_of_prefix_permutation_is_trivial() {
        let s = alt52();
        // Δ_2(ω) fixing the spine has trivial germ at the spine ray.
        let shape = s.level_shape(2);
        let spine_idx = shape.index_of(&[4, 4]).unwrap();
        // a 3-cycle avoiding the spine word fixes the spine ray
        let pts: Vec<usize> = (0..25).filter(|&p| p != spine_idx).take(3).collect();
        let omega = Perm::from_cycles(25, &[pts]).unwrap();
        assert_eq!(omega.apply(spine_idx), spine_idx);
        let _ = substream(42, "germ");
        let g = s.delta(2, Elem::Perm(omega)).unwrap();
        let xi = SpinePoint { prefix: vec![] };
        match germ_at(&g, &xi).unwrap() {
            Germ::Trivial { .. } => {}
            _ => panic!("expected a trivial germ"),
        }
    }

    #[test]
    fn germ_of_tilde_at_spine_is_the_directed_datum() {
        let s = alt52();
        let b = s.b_generators()[0].clone();
        let g = s.tilde(1, b.clone()).unwrap();
        let xi = SpinePoint { prefix: vec![] };
        match germ_at(&g, &xi).unwrap() {
            Germ::Conjugated { b: got, level, omega, .. } => {
                assert_eq!(&got, b.as_perm().unwrap());
                assert_eq!(level, 1);
                assert!(omega.is_identity());
            }
            _ => panic!("expected a conjugated germ"),
        }
    }

    #[test]
    fn germ_errors_when_point_moves() {
        let s = alt52();
        // a rooted permutation moving x_5 moves the spine ray
        let omega = Perm::from_cycles(5, &[vec![4, 0, 1]]).unwrap();
        let g = s.delta(1, Elem::Perm(omega)).unwrap();
        let xi = SpinePoint { prefix: vec![] };
        assert!(germ_at(&g, &xi).is_err());
    }
}
