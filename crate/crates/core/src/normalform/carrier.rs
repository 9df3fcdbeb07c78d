//! The depth-`m` directed family for spined permutation telescopes.
//!
//! An element is a finitely supported map from level-`m` block words to
//! pattern permutations; its image at level `k >= m + 2` plants each block's
//! pattern permutation at `block · spine^{k-m-2} · (pattern pair)`. Blocks
//! with disjoint supports commute, so the product is pointwise.

use crate::alphabet::WordShape;
use crate::permgrp::Perm;
use crate::telescope::{Atom, Elem, LazyElement, SignedAtom, SpineData, Telescope};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone, PartialEq, Eq)]
pub struct DirectedElem {
    depth: usize,
    /// block word index (within the depth-`m` shape) -> pattern permutation
    blocks: BTreeMap<usize, Perm>,
}

impl DirectedElem {
    pub fn identity(depth: usize) -> Self {
        DirectedElem {
            depth,
            blocks: BTreeMap::new(),
        }
    }

    /// A single block at the given word.
    pub fn single(depth: usize, block: usize, content: Perm) -> Self {
        let mut blocks = BTreeMap::new();
        if !content.is_identity() {
            blocks.insert(block, content);
        }
        DirectedElem { depth, blocks }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn blocks(&self) -> &BTreeMap<usize, Perm> {
        &self.blocks
    }

    pub fn is_identity(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn mul(&self, rhs: &DirectedElem) -> DirectedElem {
        assert_eq!(self.depth, rhs.depth, "directed elements of equal depth");
        let mut blocks = self.blocks.clone();
        for (&v, p) in &rhs.blocks {
            let merged = match blocks.get(&v) {
                Some(q) => q.mul(p),
                None => p.clone(),
            };
            if merged.is_identity() {
                blocks.remove(&v);
            } else {
                blocks.insert(v, merged);
            }
        }
        DirectedElem {
            depth: self.depth,
            blocks,
        }
    }

    pub fn inverse(&self) -> DirectedElem {
        DirectedElem {
            depth: self.depth,
            blocks: self
                .blocks
                .iter()
                .map(|(&v, p)| (v, p.inverse()))
                .collect(),
        }
    }

    /// Lift to depth `m + 1`: each block word is extended by the spine letter
    /// of coordinate `m`.
    pub fn lift(&self, spec: &Telescope, spine: &SpineData) -> DirectedElem {
        let m = self.depth;
        let shape_m = spec.level_shape_at(m);
        let shape_m1 = spec.level_shape_at(m + 1);
        let blocks = self
            .blocks
            .iter()
            .map(|(&v, p)| {
                let mut letters = shape_m.word_at(v);
                letters.push(spine.spine_letter(m));
                (shape_m1.index_of(&letters).expect("spine letter in range"), p.clone())
            })
            .collect();
        DirectedElem {
            depth: m + 1,
            blocks,
        }
    }

    /// The level-`k` image `φ^{(m)}_k`: every block planted at
    /// `block · spine^{k-m-2} · pair`. Requires `k >= depth + 2`.
    pub fn place(&self, spec: &Telescope, spine: &SpineData, k: usize) -> Perm {
        assert!(k >= self.depth + 2);
        let shape_k = spec.level_shape_at(k);
        let shape_m = spec.level_shape_at(self.depth);
        let degree = shape_k.count();
        let mut img: Vec<u32> = (0..degree as u32).collect();
        for (&v, p) in &self.blocks {
            let prefix = shape_m.word_at(v);
            let word_of = |pt: usize| -> usize {
                let (s, t) = spine.pattern_pair[pt];
                let mut letters = prefix.clone();
                for c in self.depth..k - 2 {
                    letters.push(spine.spine_letter(c));
                }
                letters.push(s);
                letters.push(t);
                shape_k.index_of(&letters).expect("pattern letters in range")
            };
            for pt in 0..spine.pattern_size() {
                let q = p.apply(pt);
                if q != pt {
                    img[word_of(pt)] = word_of(q) as u32;
                }
            }
        }
        Perm::from_images(img).expect("directed placement is a bijection")
    }

    /// First letters (at the pattern-pair position) of the moved pattern
    /// points of the block at `v`, if any.
    pub fn moved_first_letters(&self, spine: &SpineData, v: usize) -> Vec<u32> {
        match self.blocks.get(&v) {
            None => vec![],
            Some(p) => {
                let mut out: Vec<u32> = p
                    .support()
                    .into_iter()
                    .map(|pt| spine.pattern_pair[pt].0)
                    .collect();
                out.sort_unstable();
                out.dedup();
                out
            }
        }
    }
}

impl std::fmt::Debug for DirectedElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Directed(depth={}, blocks={})", self.depth, self.blocks.len())
    }
}

/// The element `σ~^[n]` as a lazily evaluated product element.
pub fn directed_tilde(
    spec: &Telescope,
    spine: &SpineData,
    sigma: &DirectedElem,
    n: usize,
) -> LazyElement {
    assert!(n >= sigma.depth() + 1);
    let name = format!("Tm({},{})", sigma.depth(), n);
    let spec2 = spec.clone();
    let spine = spine.clone();
    let sigma = sigma.clone();
    let start = n;
    let eval = move |j: usize| -> Elem {
        let mut acc = spec2.identity(j);
        for k in (start + 1)..=j {
            let placed = Elem::Perm(sigma.place(&spec2, &spine, k));
            acc = acc.mul(&spec2.iota(k, j, &placed));
        }
        acc
    };
    LazyElement::from_atoms(
        spec.clone(),
        vec![SignedAtom {
            atom: Atom::Profile {
                name,
                eval: Arc::new(eval),
            },
            inverted: false,
        }],
    )
}

// A level-shape helper that also works at level 0 (the singleton word).
pub(crate) trait ShapeAt {
    fn level_shape_at(&self, i: usize) -> WordShape;
}

impl ShapeAt for Telescope {
    fn level_shape_at(&self, i: usize) -> WordShape {
        if i == 0 {
            WordShape::new(vec![])
        } else {
            self.level_shape(i)
        }
    }
}
