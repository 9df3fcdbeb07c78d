//! The embedding telescope for a finite perfect group `G`: alphabets
//! `X_1 = {0..5}`, `X_i = G` for `i >= 2`, level groups `Alt(X^i)`, and
//! `B = B_0 × G` with `B_0 ≅ Alt(6)` planted on designated coordinates and
//! `G` acting by left translation along the `α`-branch.
//!
//! Coordinate roles are canonical: letters `0..5` of every alphabet are the
//! sequence values `o, α, δ, ε, y, z` (so the direction is the all-zero ray).

use super::alt::{place_pattern_perm, prefix_lift};
use crate::alphabet::{Constraint, CylinderSet, WordShape};
use crate::permgrp::{alt_generators, bsgs, normal_closure, random_even, Perm};
use crate::telescope::{Elem, Engine, LazyElement, SpineData, Telescope, TelescopeImpl};
use crate::util::alt_order;
use crate::{Error, Result};
use num_bigint::BigUint;
use rand::Rng;
use std::collections::HashMap;
use std::sync::Arc;

/// A finite group with enumerated elements and multiplication tables,
/// carried by a faithful permutation representation.
pub struct FiniteGroup {
    name: String,
    elems: Vec<Perm>,
    index: HashMap<Vec<u32>, usize>,
    mul: Vec<u32>,
    inv: Vec<u32>,
    gen_indices: Vec<usize>,
    perfect: bool,
}

impl FiniteGroup {
    pub fn from_generators(name: &str, gens: Vec<Perm>) -> Result<FiniteGroup> {
        if gens.is_empty() {
            return Err(Error::Precondition("empty generator list".into()));
        }
        let degree = gens[0].degree();
        const CAP: usize = 20_000;
        let mut elems = vec![Perm::identity(degree)];
        let mut seen: HashMap<Vec<u32>, usize> = HashMap::new();
        seen.insert(elems[0].images().to_vec(), 0);
        let mut head = 0;
        while head < elems.len() {
            let cur = elems[head].clone();
            head += 1;
            for g in &gens {
                let next = cur.mul(g);
                if !seen.contains_key(next.images()) {
                    if elems.len() >= CAP {
                        return Err(Error::BudgetExceeded(format!(
                            "group enumeration exceeds {CAP} elements"
                        )));
                    }
                    seen.insert(next.images().to_vec(), elems.len());
                    elems.push(next);
                }
            }
        }
        // Canonical order: lexicographic by image tuple; the identity sorts
        // first.
        elems.sort_by(|a, b| a.images().cmp(b.images()));
        let index: HashMap<Vec<u32>, usize> = elems
            .iter()
            .enumerate()
            .map(|(i, g)| (g.images().to_vec(), i))
            .collect();
        let n = elems.len();
        let mut mul = vec![0u32; n * n];
        let mut inv = vec![0u32; n];
        for (i, a) in elems.iter().enumerate() {
            for (j, b) in elems.iter().enumerate() {
                mul[i * n + j] = index[a.mul(b).images()] as u32;
            }
            inv[i] = index[a.inverse().images()] as u32;
        }
        let gen_indices = gens.iter().map(|g| index[g.images()]).collect();
        // Perfectness: the normal closure of the generator commutators is
        // everything.
        let mut comms = Vec::new();
        for a in &gens {
            for b in &gens {
                let c = Perm::commutator(a, b);
                if !c.is_identity() {
                    comms.push(c);
                }
            }
        }
        let perfect = if comms.is_empty() {
            n == 1
        } else {
            normal_closure(&comms, &gens)?.order() == bsgs(&gens)?.order()
        };
        Ok(FiniteGroup {
            name: name.to_string(),
            elems,
            index,
            mul,
            inv,
            gen_indices,
            perfect,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn order(&self) -> usize {
        self.elems.len()
    }
    pub fn is_perfect(&self) -> bool {
        self.perfect
    }
    pub fn elements(&self) -> &[Perm] {
        &self.elems
    }
    pub fn generator_indices(&self) -> &[usize] {
        &self.gen_indices
    }
    pub fn index_of(&self, g: &Perm) -> Option<usize> {
        self.index.get(g.images()).copied()
    }
    #[inline]
    pub fn mul_idx(&self, i: usize, j: usize) -> usize {
        self.mul[i * self.elems.len() + j] as usize
    }
    #[inline]
    pub fn inv_idx(&self, i: usize) -> usize {
        self.inv[i] as usize
    }
}

/// Built-in groups for spec files.
pub fn builtin_group(name: &str) -> Result<FiniteGroup> {
    match name {
        "alt5" => FiniteGroup::from_generators("alt5", alt_generators(5)),
        "alt6" => FiniteGroup::from_generators("alt6", alt_generators(6)),
        "sl2_5" => {
            // SL(2,5) acting on the 24 nonzero vectors of F_5^2.
            let vecs: Vec<(u8, u8)> = (0..5u8)
                .flat_map(|a| (0..5u8).map(move |b| (a, b)))
                .filter(|&(a, b)| a != 0 || b != 0)
                .collect();
            let pos: HashMap<(u8, u8), usize> =
                vecs.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            let act = |m: [[u8; 2]; 2]| -> Perm {
                let img: Vec<u32> = vecs
                    .iter()
                    .map(|&(a, b)| {
                        let x = ((m[0][0] * a + m[0][1] * b) % 5, (m[1][0] * a + m[1][1] * b) % 5);
                        pos[&x] as u32
                    })
                    .collect();
                Perm::from_images(img).expect("linear action is a bijection")
            };
            let s = act([[0, 4], [1, 0]]);
            let t = act([[1, 1], [0, 1]]);
            FiniteGroup::from_generators("sl2_5", vec![s, t])
        }
        other => Err(Error::Precondition(format!("unknown built-in group {other}"))),
    }
}

#[derive(Clone)]
pub struct EmbedTelescopeParams {
    pub max_level: usize,
}

pub(crate) struct EmbedTelescope {
    group: Arc<FiniteGroup>,
    max_level: usize,
    spine: SpineData,
}

/// A built embedding telescope, keeping the group handle for the
/// tree-embedding helpers.
pub struct EmbedBuild {
    pub spec: Telescope,
    pub group: Arc<FiniteGroup>,
}

// Letter roles in every coordinate.
pub const L_O: u32 = 0;
pub const L_ALPHA: u32 = 1;
pub const L_DELTA: u32 = 2;
pub const L_EPS: u32 = 3;
pub const L_Y: u32 = 4;
pub const L_Z: u32 = 5;

pub fn build_embed(group: FiniteGroup, params: EmbedTelescopeParams) -> Result<EmbedBuild> {
    if !group.is_perfect() {
        return Err(Error::NotPerfect);
    }
    if group.order() < 6 {
        return Err(Error::Precondition(
            "the group must have at least 6 elements".into(),
        ));
    }
    let group = Arc::new(group);
    // Pattern points: six B_0 points ({δ,ε} × {y,z,o}), then the α-branch
    // copy of G. Second letters of the B_0 points are y, z, o.
    let mut pattern_pair: Vec<(u32, u32)> = Vec::new();
    for a in [L_DELTA, L_EPS] {
        for b in [L_Y, L_Z, L_O] {
            pattern_pair.push((a, b));
        }
    }
    for g in 0..group.order() as u32 {
        pattern_pair.push((L_ALPHA, g));
    }
    let spine = SpineData {
        spine_letters: vec![L_O; params.max_level + 8],
        pattern_pair,
    };
    let spec = Telescope::new(Arc::new(EmbedTelescope {
        group: Arc::clone(&group),
        max_level: params.max_level,
        spine,
    }));
    Ok(EmbedBuild { spec, group })
}

impl EmbedBuild {
    /// The element `(b_0, g)` of `B = B_0 × G` as a pattern permutation.
    pub fn b_elem(&self, b0: &Perm, g: usize) -> Elem {
        assert_eq!(b0.degree(), 6);
        let n = self.group.order();
        let mut img: Vec<u32> = (0..(6 + n) as u32).collect();
        for p in 0..6 {
            img[p] = b0.apply(p) as u32;
        }
        for x in 0..n {
            img[6 + x] = (6 + self.group.mul_idx(g, x)) as u32;
        }
        Elem::Perm(Perm::from_images(img).expect("block product is a bijection"))
    }

    /// The image of `g` under the directed-tree embedding `g ↦ tilde(1, (1, g))`.
    pub fn embedded(&self, g: usize) -> Result<LazyElement> {
        let b = self.b_elem(&Perm::identity(6), g);
        self.spec.tilde(1, b)
    }
}

impl EmbedTelescope {
    fn count(&self, i: usize) -> usize {
        6 * self.group.order().pow((i - 1) as u32)
    }
}

impl TelescopeImpl for EmbedTelescope {
    fn name(&self) -> String {
        format!("embed({})", self.group.name())
    }

    fn engine(&self) -> Engine {
        Engine::Permutation
    }

    fn max_level(&self) -> usize {
        self.max_level
    }

    fn level_shape(&self, i: usize) -> WordShape {
        let mut sizes = vec![6u32];
        sizes.extend(std::iter::repeat(self.group.order() as u32).take(i - 1));
        WordShape::new(sizes)
    }

    fn level_order(&self, i: usize) -> BigUint {
        alt_order(self.count(i))
    }

    fn level_generators(&self, i: usize) -> Vec<Elem> {
        alt_generators(self.count(i))
            .into_iter()
            .map(Elem::Perm)
            .collect()
    }

    fn identity(&self, i: usize) -> Elem {
        Elem::Perm(Perm::identity(self.count(i)))
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
        Elem::Perm(place_pattern_perm(&self.level_shape(i), &self.spine, i, b))
    }

    fn alpha(&self, i: usize) -> Elem {
        // the 3-cycle (o^{i-1} y_i, o^{i-1} z_i, o^i); the o-prefix has
        // index 0, so the words are the letters themselves.
        let cycle = vec![L_Y as usize, L_Z as usize, L_O as usize];
        Elem::Perm(Perm::from_cycles(self.count(i), &[cycle]).expect("valid 3-cycle"))
    }

    fn b_identity(&self) -> Elem {
        Elem::Perm(Perm::identity(6 + self.group.order()))
    }

    fn b_generators(&self) -> Vec<Elem> {
        let n = self.group.order();
        let mut out = Vec::new();
        for b0 in alt_generators(6) {
            let mut img: Vec<u32> = (0..(6 + n) as u32).collect();
            for p in 0..6 {
                img[p] = b0.apply(p) as u32;
            }
            out.push(Elem::Perm(Perm::from_images(img).unwrap()));
        }
        for &gi in self.group.generator_indices() {
            let mut img: Vec<u32> = (0..(6 + n) as u32).collect();
            for x in 0..n {
                img[6 + x] = (6 + self.group.mul_idx(gi, x)) as u32;
            }
            out.push(Elem::Perm(Perm::from_images(img).unwrap()));
        }
        out
    }

    fn b_sample(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Elem {
        let n = self.group.order();
        let b0 = random_even(rng, 6);
        let g = rng.gen_range(0..n);
        let mut img: Vec<u32> = (0..(6 + n) as u32).collect();
        for p in 0..6 {
            img[p] = b0.apply(p) as u32;
        }
        for x in 0..n {
            img[6 + x] = (6 + self.group.mul_idx(g, x)) as u32;
        }
        Elem::Perm(Perm::from_images(img).unwrap())
    }

    // The support formulas below describe the enclosing coordinate products
    // {o^{i-2}} x {δ,ε,α} x X; the actual support of B_i sits inside.

    fn b_support(&self, i: usize, at_level: usize) -> Option<CylinderSet> {
        if i < 2 || at_level < i {
            return None;
        }
        let mut cs: Vec<Constraint> = (0..i - 2).map(|_| Constraint::Singleton(L_O)).collect();
        cs.push(Constraint::Subset(vec![L_ALPHA, L_DELTA, L_EPS]));
        cs.extend((0..at_level - i + 1).map(|_| Constraint::Full));
        CylinderSet::new(self.level_shape(at_level), cs).ok()
    }

    fn alpha_support(&self, i: usize, at_level: usize) -> Option<CylinderSet> {
        if i < 1 || at_level < i {
            return None;
        }
        let mut cs: Vec<Constraint> = (0..i - 1).map(|_| Constraint::Singleton(L_O)).collect();
        cs.push(Constraint::Subset(vec![L_Y, L_Z, L_O]));
        cs.extend((0..at_level - i).map(|_| Constraint::Full));
        CylinderSet::new(self.level_shape(at_level), cs).ok()
    }

    fn b_conj_support(&self, alpha_i: usize, b_k: usize, at_level: usize) -> Option<CylinderSet> {
        let (i, k) = (alpha_i, b_k);
        if i < 1 || k < i + 2 || at_level < k {
            return None;
        }
        // α_i^{-1}(o^i) = o^{i-1} z_i
        let mut cs: Vec<Constraint> = (0..i - 1).map(|_| Constraint::Singleton(L_O)).collect();
        cs.push(Constraint::Singleton(L_Z));
        cs.extend((0..k - 2 - i).map(|_| Constraint::Singleton(L_O)));
        cs.push(Constraint::Subset(vec![L_ALPHA, L_DELTA, L_EPS]));
        cs.extend((0..at_level - k + 1).map(|_| Constraint::Full));
        CylinderSet::new(self.level_shape(at_level), cs).ok()
    }

    fn spine(&self) -> Option<&SpineData> {
        Some(&self.spine)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_in_groups() {
        let a5 = builtin_group("alt5").unwrap();
        assert_eq!(a5.order(), 60);
        assert!(a5.is_perfect());
        assert!(a5.elements()[0].is_identity());
        let sl = builtin_group("sl2_5").unwrap();
        assert_eq!(sl.order(), 120);
        assert!(sl.is_perfect());
        assert!(builtin_group("nope").is_err());
    }

    #[test]
    fn non_perfect_groups_are_rejected() {
        let s7 = FiniteGroup::from_generators(
            "s7",
            vec![
                Perm::from_cycles(7, &[vec![0, 1]]).unwrap(),
                Perm::from_cycles(7, &[(0..7).collect()]).unwrap(),
            ],
        )
        .unwrap();
        assert!(!s7.is_perfect());
        assert!(matches!(
            build_embed(s7, EmbedTelescopeParams { max_level: 2 }),
            Err(Error::NotPerfect)
        ));
    }

    #[test]
    fn level_sizes_for_alt5() {
        let b = build_embed(
            builtin_group("alt5").unwrap(),
            EmbedTelescopeParams { max_level: 3 },
        )
        .unwrap();
        assert_eq!(b.spec.level_size(1), 6);
        assert_eq!(b.spec.level_size(2), 360);
        assert_eq!(b.spec.level_size(3), 21_600);
    }

    #[test]
    fn phi_of_pure_b0_fixes_everything_off_the_pattern() {
        let b = build_embed(
            builtin_group("alt5").unwrap(),
            EmbedTelescopeParams { max_level: 3 },
        )
        .unwrap();
        // (b_0, 1) with b_0 a 3-cycle of Alt(6) moves exactly 3 words of
        // level 2, all inside {δ_1, ε_1} x {y_2, z_2, o_2}.
        let b0 = Perm::from_cycles(6, &[vec![0, 1, 2]]).unwrap();
        let planted = b.spec.phi(2, &b.b_elem(&b0, 0));
        let supp = planted.as_perm().unwrap().support();
        assert_eq!(supp.len(), 3);
        let shape = b.spec.level_shape(2);
        for w in supp {
            let letters = shape.word_at(w);
            assert!(letters[0] == L_DELTA || letters[0] == L_EPS);
            assert!([L_Y, L_Z, L_O].contains(&letters[1]));
        }
    }

    #[test]
    fn embedded_elements_are_nontrivial_from_level_two() {
        let b = build_embed(
            builtin_group("alt5").unwrap(),
            EmbedTelescopeParams { max_level: 3 },
        )
        .unwrap();
        for g in 1..60 {
            let e = b.embedded(g).unwrap();
            assert!(!b
                .spec
                .elem_is_identity(2, &e.project(2).unwrap()));
            assert!(!b
                .spec
                .elem_is_identity(3, &e.project(3).unwrap()));
        }
        let id = b.embedded(0).unwrap();
        assert!(id.is_identity_up_to(3).unwrap());
    }

    #[test]
    fn psi_images_commute_elementwise() {
        let b = build_embed(
            builtin_group("alt5").unwrap(),
            EmbedTelescopeParams { max_level: 3 },
        )
        .unwrap();
        let b0 = Perm::from_cycles(6, &[vec![1, 3, 4]]).unwrap();
        for n in 2..=3usize {
            let pure_b0 = b.spec.phi(n, &b.b_elem(&b0, 0));
            let pure_g = b.spec.phi(n, &b.b_elem(&Perm::identity(6), 7));
            assert_eq!(
                pure_b0.mul(&pure_g),
                pure_g.mul(&pure_b0),
                "disjoint supports at level {n}"
            );
        }
    }
}
