//! The alternating-group telescope on words over a `d`-letter alphabet:
//! level `ℓ` is `Alt(X^ℓ)`, `B = Alt({x_1..x_r} × X)`, and `φ_ℓ` plants `B`
//! on the words with prefix `x_d^{ℓ-2}`.

use crate::alphabet::{Constraint, CylinderSet, WordShape};
use crate::permgrp::{alt_generators, random_even, Perm};
use crate::telescope::{Elem, Engine, SpineData, Telescope, TelescopeImpl};
use crate::util::alt_order;
use crate::{Error, Result};
use num_bigint::BigUint;
use std::sync::Arc;

#[derive(Clone, Copy, Debug)]
pub struct AltTelescopeParams {
    pub d: u32,
    pub r: u32,
    pub max_level: usize,
}

pub(crate) struct AltTelescope {
    d: u32,
    r: u32,
    max_level: usize,
    spine: SpineData,
}

impl AltTelescope {
    fn word_index(&self, level: usize, letters: &[u32]) -> usize {
        WordShape::uniform(self.d, level)
            .index_of(letters)
            .expect("letters in range")
    }
}

pub fn build_alt(params: AltTelescopeParams) -> Result<Telescope> {
    let AltTelescopeParams { d, r, max_level } = params;
    if d < 5 {
        return Err(Error::IndexConstraint(format!("d = {d} must be >= 5")));
    }
    if r < 2 || r + 3 > d {
        return Err(Error::IndexConstraint(format!(
            "r = {r} must satisfy 2 <= r <= d - 3 = {}",
            d - 3
        )));
    }
    let pattern_pair = (0..r)
        .flat_map(|t| (0..d).map(move |y| (t, y)))
        .collect::<Vec<_>>();
    Ok(Telescope::new(Arc::new(AltTelescope {
        d,
        r,
        max_level,
        spine: SpineData {
            spine_letters: vec![d - 1; max_level + 8],
            pattern_pair,
        },
    })))
}

/// Places a pattern permutation at the spine prefix of the given level;
/// shared by the permutation-engine telescopes.
pub(crate) fn place_pattern_perm(
    shape: &WordShape,
    spine: &SpineData,
    level: usize,
    b: &Perm,
) -> Perm {
    assert!(level >= 2);
    let degree = shape.count();
    let mut img: Vec<u32> = (0..degree as u32).collect();
    let word_of = |p: usize| -> usize {
        let (s, t) = spine.pattern_pair[p];
        let mut letters: Vec<u32> = (0..level - 2).map(|c| spine.spine_letter(c)).collect();
        letters.push(s);
        letters.push(t);
        shape.index_of(&letters).expect("pattern letters in range")
    };
    for p in 0..spine.pattern_size() {
        let q = b.apply(p);
        if q != p {
            img[word_of(p)] = word_of(q) as u32;
        }
    }
    Perm::from_images(img).expect("pattern placement is a bijection")
}

/// Prefix action of a level-`i` permutation on level-`j` words.
pub(crate) fn prefix_lift(shape_j: &WordShape, i: usize, sigma: &Perm) -> Perm {
    let tail = shape_j.suffix_count(i);
    let degree = shape_j.count();
    let mut img = vec![0u32; degree];
    for hi in 0..sigma.degree() {
        let target = sigma.apply(hi) * tail;
        let base = hi * tail;
        for lo in 0..tail {
            img[base + lo] = (target + lo) as u32;
        }
    }
    Perm::from_images(img).expect("prefix lift is a bijection")
}

impl TelescopeImpl for AltTelescope {
    fn name(&self) -> String {
        format!("alt({},{})", self.d, self.r)
    }

    fn engine(&self) -> Engine {
        Engine::Permutation
    }

    fn max_level(&self) -> usize {
        self.max_level
    }

    fn level_shape(&self, i: usize) -> WordShape {
        WordShape::uniform(self.d, i)
    }

    fn level_order(&self, i: usize) -> BigUint {
        alt_order(self.level_size(i))
    }

    fn level_generators(&self, i: usize) -> Vec<Elem> {
        alt_generators(self.level_size(i))
            .into_iter()
            .map(Elem::Perm)
            .collect()
    }

    fn identity(&self, i: usize) -> Elem {
        Elem::Perm(Perm::identity(self.level_size(i)))
    }

    fn iota(&self, i: usize, j: usize, e: &Elem) -> Elem {
        assert!(i <= j);
        if i == j {
            return e.clone();
        }
        let sigma = e.as_perm().expect("permutation engine");
        Elem::Perm(prefix_lift(&self.level_shape(j), i, sigma))
    }

    fn phi(&self, i: usize, b: &Elem) -> Elem {
        assert!(i >= 2);
        let b = b.as_perm().expect("permutation engine");
        Elem::Perm(place_pattern_perm(
            &self.level_shape(i),
            &self.spine,
            i,
            b,
        ))
    }

    fn alpha(&self, i: usize) -> Elem {
        // the 3-cycle (x_d^{i-1} x_{d-2}, x_d^{i-1} x_{d-1}, x_d^i)
        let d = self.d;
        let prefix: Vec<u32> = vec![d - 1; i - 1];
        let word = |last: u32| {
            let mut letters = prefix.clone();
            letters.push(last);
            self.word_index(i, &letters)
        };
        let cycle = vec![word(d - 3), word(d - 2), word(d - 1)];
        Elem::Perm(Perm::from_cycles(self.level_size(i), &[cycle]).expect("valid 3-cycle"))
    }

    fn b_identity(&self) -> Elem {
        Elem::Perm(Perm::identity((self.r * self.d) as usize))
    }

    fn b_generators(&self) -> Vec<Elem> {
        alt_generators((self.r * self.d) as usize)
            .into_iter()
            .map(Elem::Perm)
            .collect()
    }

    fn b_sample(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Elem {
        Elem::Perm(random_even(rng, (self.r * self.d) as usize))
    }

    fn b_support(&self, i: usize, at_level: usize) -> Option<CylinderSet> {
        alt_support(self.d, self.r, AltSupportDescriptor::B { i, j: at_level }).ok()
    }

    fn alpha_support(&self, i: usize, at_level: usize) -> Option<CylinderSet> {
        alt_support(self.d, self.r, AltSupportDescriptor::Alpha { i, j: at_level }).ok()
    }

    fn b_conj_support(&self, alpha_i: usize, b_k: usize, at_level: usize) -> Option<CylinderSet> {
        alt_support(
            self.d,
            self.r,
            AltSupportDescriptor::BConj {
                i: alpha_i,
                j: b_k,
                k: at_level,
            },
        )
        .ok()
    }

    fn spine(&self) -> Option<&SpineData> {
        Some(&self.spine)
    }

    fn alt_params(&self) -> Option<(u32, u32)> {
        Some((self.d, self.r))
    }
}

/// Which support family to compute.
#[derive(Clone, Copy, Debug)]
pub enum AltSupportDescriptor {
    /// `supp(B_{i,j})` for `j >= i >= 2`.
    B { i: usize, j: usize },
    /// `supp(α_{i,j})` for `j >= i >= 1`.
    Alpha { i: usize, j: usize },
    /// `supp(B_{j,k}^{α_{i,k}})` for `k >= j >= i + 2`.
    BConj { i: usize, j: usize, k: usize },
}

/// The exact support formulas: coordinate products over `X^j` (resp `X^k`).
pub fn alt_support(d: u32, r: u32, desc: AltSupportDescriptor) -> Result<CylinderSet> {
    let rows = Constraint::Subset((0..r).collect());
    let spine = || Constraint::Singleton(d - 1);
    match desc {
        AltSupportDescriptor::B { i, j } => {
            if i < 2 || j < i {
                return Err(Error::IndexConstraint(format!(
                    "supp(B_{{i,j}}) needs j >= i >= 2, got i={i}, j={j}"
                )));
            }
            // {x_d^{i-2}} x {x_1..x_r} x X^{j+1-i}
            let mut cs: Vec<Constraint> = (0..i - 2).map(|_| spine()).collect();
            cs.push(rows);
            cs.extend((0..j + 1 - i).map(|_| Constraint::Full));
            CylinderSet::new(WordShape::uniform(d, j), cs)
        }
        AltSupportDescriptor::Alpha { i, j } => {
            if i < 1 || j < i {
                return Err(Error::IndexConstraint(format!(
                    "supp(alpha_{{i,j}}) needs j >= i >= 1, got i={i}, j={j}"
                )));
            }
            // {x_d^{i-1}} x {x_{d-2}, x_{d-1}, x_d} x X^{j-i}
            let mut cs: Vec<Constraint> = (0..i - 1).map(|_| spine()).collect();
            cs.push(Constraint::Subset(vec![d - 3, d - 2, d - 1]));
            cs.extend((0..j - i).map(|_| Constraint::Full));
            CylinderSet::new(WordShape::uniform(d, j), cs)
        }
        AltSupportDescriptor::BConj { i, j, k } => {
            if i < 1 || j < i + 2 || k < j {
                return Err(Error::IndexConstraint(format!(
                    "supp(B_{{j,k}}^{{alpha_{{i,k}}}}) needs k >= j >= i + 2, got i={i}, j={j}, k={k}"
                )));
            }
            // {x_d^{i-1} x_{d-1} x_d^{j-2-i}} x {x_1..x_r} x X^{k+1-j}
            let mut cs: Vec<Constraint> = (0..i - 1).map(|_| spine()).collect();
            cs.push(Constraint::Singleton(d - 2));
            cs.extend((0..j - 2 - i).map(|_| spine()));
            cs.push(rows);
            cs.extend((0..k + 1 - j).map(|_| Constraint::Full));
            CylinderSet::new(WordShape::uniform(d, k), cs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> Telescope {
        build_alt(AltTelescopeParams {
            d: 5,
            r: 2,
            max_level: 6,
        })
        .unwrap()
    }

    #[test]
    fn parameter_bounds_are_enforced() {
        assert!(build_alt(AltTelescopeParams { d: 4, r: 2, max_level: 3 }).is_err());
        assert!(build_alt(AltTelescopeParams { d: 5, r: 3, max_level: 3 }).is_err());
        assert!(build_alt(AltTelescopeParams { d: 5, r: 1, max_level: 3 }).is_err());
    }

    #[test]
    fn level_sizes_are_powers_of_d() {
        let s = spec();
        assert_eq!(s.level_size(1), 5);
        assert_eq!(s.level_size(2), 25);
        assert_eq!(s.level_size(3), 125);
        assert_eq!(s.level_size(4), 625);
    }

    #[test]
    fn iota_preserves_parity_and_prefix_action() {
        let s = spec();
        let omega = Perm::from_cycles(5, &[vec![0, 1, 2]]).unwrap();
        let lifted = s.iota(1, 3, &Elem::Perm(omega.clone()));
        let lifted = lifted.as_perm().unwrap();
        assert!(lifted.is_even());
        // (x_1 w) maps to (x_2 w)
        for lo in 0..25 {
            assert_eq!(lifted.apply(lo), 25 + lo);
        }
        assert_eq!(lifted.moved_count(), 3 * 25);
    }

    #[test]
    fn phi_plants_b_on_the_spine_prefix() {
        let s = spec();
        // A 3-cycle of B moving (x_1,x_1) -> (x_1,x_2) -> (x_1,x_3).
        let b = Perm::from_cycles(10, &[vec![0, 1, 2]]).unwrap();
        let at3 = s.phi(3, &Elem::Perm(b));
        let p = at3.as_perm().unwrap();
        let supp = p.support();
        assert_eq!(supp.len(), 3);
        // every moved word starts with x_5
        for w in supp {
            assert!(w >= 100, "word {w} should be x_5-prefixed");
        }
    }

    #[test]
    fn alpha_support_matches_formula() {
        let s = spec();
        for i in 1..=3usize {
            for j in i..=4usize {
                let formula = s.alpha_support(i, j).unwrap();
                let alpha = s.iota(i, j, &s.alpha_elem(i));
                let actual: std::collections::BTreeSet<usize> =
                    alpha.as_perm().unwrap().support().into_iter().collect();
                let from_formula: std::collections::BTreeSet<usize> =
                    formula.enumerate().into_iter().collect();
                assert_eq!(actual, from_formula, "alpha support at i={i}, j={j}");
            }
        }
    }

    #[test]
    fn b_support_matches_enumerated_generator_supports() {
        let s = spec();
        for i in 2..=4usize {
            for j in i..=4usize {
                let formula = s.b_support(i, j).unwrap();
                let mut union = std::collections::BTreeSet::new();
                // the full image of B is generated; generator supports union
                // to the whole block because the generators of Alt(rd) move
                // every point
                for b in s.b_generators() {
                    let planted = s.iota(i, j, &s.phi(i, &b));
                    union.extend(planted.as_perm().unwrap().support());
                }
                let from_formula: std::collections::BTreeSet<usize> =
                    formula.enumerate().into_iter().collect();
                assert_eq!(union, from_formula, "B support at i={i}, j={j}");
            }
        }
    }

    #[test]
    fn support_family_cardinalities() {
        // supp(B_{2,2}) in alt(5,2) has r*d = 10 words.
        let c = alt_support(5, 2, AltSupportDescriptor::B { i: 2, j: 2 }).unwrap();
        assert_eq!(c.cardinality(), 10);
        // supp(alpha_{1,1}) has 3 words.
        let c = alt_support(5, 2, AltSupportDescriptor::Alpha { i: 1, j: 1 }).unwrap();
        assert_eq!(c.cardinality(), 3);
        // supp(B_{3,3}^{alpha_{1,3}}) = {x_4} x {x_1,x_2} x X: 10 words.
        let c = alt_support(5, 2, AltSupportDescriptor::BConj { i: 1, j: 3, k: 3 }).unwrap();
        assert_eq!(c.cardinality(), 10);
        let letters: Vec<Vec<u32>> = c
            .enumerate()
            .iter()
            .map(|&idx| WordShape::uniform(5, 3).word_at(idx))
            .collect();
        for l in &letters {
            assert_eq!(l[0], 3); // x_4 = x_{d-1}
            assert!(l[1] == 0 || l[1] == 1);
        }
        // Index constraints are enforced.
        assert!(alt_support(5, 2, AltSupportDescriptor::BConj { i: 2, j: 3, k: 3 }).is_err());
        assert!(alt_support(5, 2, AltSupportDescriptor::B { i: 1, j: 2 }).is_err());
    }

    #[test]
    fn conjugated_support_matches_explicit_conjugation() {
        let s = spec();
        // supp(B_{3,3}^{alpha_{1,3}}) computed by actual conjugation.
        let alpha13 = s.iota(1, 3, &s.alpha_elem(1));
        let mut union = std::collections::BTreeSet::new();
        for b in s.b_generators() {
            let planted = s.phi(3, &b);
            let conj = planted.conj(&alpha13);
            union.extend(conj.as_perm().unwrap().support());
        }
        let formula = alt_support(5, 2, AltSupportDescriptor::BConj { i: 1, j: 3, k: 3 }).unwrap();
        let expect: std::collections::BTreeSet<usize> = formula.enumerate().into_iter().collect();
        assert_eq!(union, expect);
    }

    #[test]
    fn disjointness_certificates_for_the_commutator_axiom() {
        let s = spec();
        // supp(B_{i,j}) vs supp(B_j) for i < j.
        for i in 2..=5usize {
            for j in i + 1..=6usize {
                let a = s.b_support(i, j).unwrap();
                let b = s.b_support(j, j).unwrap();
                assert!(a.is_disjoint(&b).unwrap(), "i={i}, j={j}");
            }
        }
        // B_conj vs B_conj with i < j at a shared level.
        let a = alt_support(5, 2, AltSupportDescriptor::BConj { i: 1, j: 3, k: 6 }).unwrap();
        let b = alt_support(5, 2, AltSupportDescriptor::BConj { i: 2, j: 4, k: 6 }).unwrap();
        assert!(a.is_disjoint(&b).unwrap());
    }
}
