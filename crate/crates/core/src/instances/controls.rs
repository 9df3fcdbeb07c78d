//! Deliberately broken telescopes used as negative controls: the verifier
//! suite asserts that these fail the checks they are built to fail.

use super::alt::{build_alt, place_pattern_perm, AltTelescopeParams};
use crate::alphabet::{Constraint, CylinderSet, WordShape};
use crate::permgrp::{alt_generators, random_even, Perm};
use crate::telescope::{Elem, Engine, SpineData, Telescope, TelescopeImpl};
use crate::Result;
use num_bigint::BigUint;
use std::sync::Arc;

/// The alternating telescope with the planting prefix swapped from `x_d` to
/// `x_1`: images of different `φ` levels overlap, so the commutator axiom
/// fails. The support formulas describe the corrupted instance.
pub fn build_alt_phi_corrupted(params: AltTelescopeParams) -> Result<Telescope> {
    let base = build_alt(params)?;
    let corrupt_spine = SpineData {
        spine_letters: vec![0; params.max_level + 8],
        pattern_pair: (0..params.r)
            .flat_map(|t| (0..params.d).map(move |y| (t, y)))
            .collect(),
    };
    Ok(Telescope::new(Arc::new(CorruptPhi {
        base: base.inner_arc(),
        d: params.d,
        r: params.r,
        corrupt_spine,
    })))
}

struct CorruptPhi {
    base: Arc<dyn TelescopeImpl>,
    d: u32,
    r: u32,
    corrupt_spine: SpineData,
}

impl TelescopeImpl for CorruptPhi {
    fn name(&self) -> String {
        format!("{}-corrupt-phi", self.base.name())
    }
    fn engine(&self) -> Engine {
        self.base.engine()
    }
    fn max_level(&self) -> usize {
        self.base.max_level()
    }
    fn level_shape(&self, i: usize) -> WordShape {
        self.base.level_shape(i)
    }
    fn level_order(&self, i: usize) -> BigUint {
        self.base.level_order(i)
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
        assert!(i >= 2);
        let b = b.as_perm().expect("permutation engine");
        Elem::Perm(place_pattern_perm(
            &self.level_shape(i),
            &self.corrupt_spine,
            i,
            b,
        ))
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
    fn b_support(&self, i: usize, at_level: usize) -> Option<CylinderSet> {
        if i < 2 || at_level < i {
            return None;
        }
        // {x_1^{i-2}} x {x_1..x_r} x X^{at+1-i}
        let mut cs: Vec<Constraint> = (0..i - 2).map(|_| Constraint::Singleton(0)).collect();
        cs.push(Constraint::Subset((0..self.r).collect()));
        cs.extend((0..at_level - i + 1).map(|_| Constraint::Full));
        CylinderSet::new(WordShape::uniform(self.d, at_level), cs).ok()
    }
    fn alpha_support(&self, i: usize, at_level: usize) -> Option<CylinderSet> {
        self.base.alpha_support(i, at_level)
    }
    fn b_conj_support(&self, _alpha_i: usize, _b_k: usize, _at_level: usize) -> Option<CylinderSet> {
        None
    }
}

/// Alternating levels `1, B, 1, B, …` with trivial transitions: a telescope
/// that is not flexible when `B` is non-abelian.
pub fn build_nonflexible_toy(max_level: usize) -> Telescope {
    Telescope::new(Arc::new(NonFlexToy { max_level }))
}

struct NonFlexToy {
    max_level: usize,
}

impl NonFlexToy {
    fn is_live(&self, i: usize) -> bool {
        i % 2 == 0
    }
    fn degree(&self, i: usize) -> usize {
        if self.is_live(i) {
            5
        } else {
            1
        }
    }
}

impl TelescopeImpl for NonFlexToy {
    fn name(&self) -> String {
        "toy-nonflexible".into()
    }
    fn engine(&self) -> Engine {
        Engine::Permutation
    }
    fn max_level(&self) -> usize {
        self.max_level
    }
    fn level_shape(&self, i: usize) -> WordShape {
        WordShape::uniform(self.degree(i) as u32, 1)
    }
    fn level_order(&self, i: usize) -> BigUint {
        if self.is_live(i) {
            BigUint::from(60u32)
        } else {
            BigUint::from(1u32)
        }
    }
    fn level_generators(&self, i: usize) -> Vec<Elem> {
        if self.is_live(i) {
            alt_generators(5).into_iter().map(Elem::Perm).collect()
        } else {
            vec![]
        }
    }
    fn identity(&self, i: usize) -> Elem {
        Elem::Perm(Perm::identity(self.degree(i)))
    }
    fn iota(&self, i: usize, j: usize, e: &Elem) -> Elem {
        if i == j {
            e.clone()
        } else {
            self.identity(j)
        }
    }
    fn phi(&self, i: usize, b: &Elem) -> Elem {
        if self.is_live(i) {
            b.clone()
        } else {
            self.identity(i)
        }
    }
    fn alpha(&self, i: usize) -> Elem {
        self.identity(i)
    }
    fn b_identity(&self) -> Elem {
        Elem::Perm(Perm::identity(5))
    }
    fn b_generators(&self) -> Vec<Elem> {
        alt_generators(5).into_iter().map(Elem::Perm).collect()
    }
    fn b_sample(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Elem {
        Elem::Perm(random_even(rng, 5))
    }
    fn b_support(&self, _i: usize, _at: usize) -> Option<CylinderSet> {
        None
    }
    fn alpha_support(&self, _i: usize, _at: usize) -> Option<CylinderSet> {
        None
    }
    fn b_conj_support(&self, _i: usize, _k: usize, _at: usize) -> Option<CylinderSet> {
        None
    }
}
