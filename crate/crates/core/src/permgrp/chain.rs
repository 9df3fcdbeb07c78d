//! Deterministic Schreier–Sims: base and strong generating set with
//! Schreier-vector transversals.
//!
//! Base points are chosen smallest-moved-point-first. A level is certified by
//! a full pass in which every Schreier generator sifts to the identity
//! through the already-certified deeper chain; any addition below re-runs the
//! pass, so the final clean pass is a complete certificate.

use super::perm::Perm;
use num_bigint::BigUint;

struct Level {
    gen_ids: Vec<usize>,
    /// Orbit of the base point, in BFS discovery order.
    orbit: Vec<u32>,
    /// Schreier vector: for each point, `-1` absent, `-2` root, otherwise the
    /// id of the generator `g` with `point = g(parent)`.
    tree: Vec<i64>,
}

pub struct StabChain {
    degree: usize,
    base: Vec<usize>,
    gens: Vec<Perm>,
    invs: Vec<Perm>,
    levels: Vec<Level>,
}

impl StabChain {
    pub fn build(generators: Vec<Perm>) -> StabChain {
        let degree = generators.first().map(|g| g.degree()).unwrap_or(0);
        let mut chain = StabChain {
            degree,
            base: Vec::new(),
            gens: Vec::new(),
            invs: Vec::new(),
            levels: Vec::new(),
        };
        for g in generators {
            if !g.is_identity() {
                chain.insert_gen(g, 0);
            }
        }
        if !chain.base.is_empty() {
            chain.complete_level(0);
        }
        chain
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn base(&self) -> &[usize] {
        &self.base
    }

    pub fn strong_generators(&self) -> &[Perm] {
        &self.gens
    }

    pub fn order(&self) -> BigUint {
        let mut acc = BigUint::from(1u32);
        for level in &self.levels {
            acc *= BigUint::from(level.orbit.len());
        }
        acc
    }

    pub fn contains(&self, g: &Perm) -> bool {
        let (res, _) = self.sift_from(0, g.clone());
        res.is_identity()
    }

    /// Adds one generator known to fix `base[0..from)` and registers it at
    /// every level whose base prefix it fixes, extending the base if needed.
    fn insert_gen(&mut self, g: Perm, from: usize) {
        debug_assert!(!g.is_identity());
        let mut j = from;
        while j < self.base.len() && g.apply(self.base[j]) == self.base[j] {
            j += 1;
        }
        if j == self.base.len() {
            let b = g
                .smallest_moved_point()
                .expect("nontrivial permutation moves a point");
            self.base.push(b);
            self.levels.push(Level {
                gen_ids: Vec::new(),
                orbit: Vec::new(),
                tree: vec![-1; self.degree],
            });
        }
        let id = self.gens.len();
        self.invs.push(g.inverse());
        self.gens.push(g);
        for level in from..=j {
            self.levels[level].gen_ids.push(id);
        }
    }

    fn rebuild_orbit(&mut self, i: usize) {
        let b = self.base[i];
        let level = &mut self.levels[i];
        level.tree.iter_mut().for_each(|t| *t = -1);
        level.orbit.clear();
        level.orbit.push(b as u32);
        level.tree[b] = -2;
        let mut head = 0;
        while head < level.orbit.len() {
            let p = level.orbit[head] as usize;
            head += 1;
            for &gid in &level.gen_ids {
                let q = self.gens[gid].apply(p);
                if level.tree[q] == -1 {
                    level.tree[q] = gid as i64;
                    level.orbit.push(q as u32);
                }
            }
        }
    }

    /// Transversal representative `u` with `u(base[i]) = p`.
    fn transversal(&self, i: usize, p: usize) -> Perm {
        let level = &self.levels[i];
        let mut path = Vec::new();
        let mut x = p;
        while level.tree[x] != -2 {
            let gid = level.tree[x] as usize;
            path.push(gid);
            x = self.invs[gid].apply(x);
        }
        let mut u = Perm::identity(self.degree);
        for &gid in path.iter().rev() {
            u = self.gens[gid].mul(&u);
        }
        u
    }

    /// Strips `g` through levels `start..`, returning the residue and the
    /// level at which stripping stopped.
    pub fn sift_from(&self, start: usize, mut g: Perm) -> (Perm, usize) {
        for lvl in start..self.base.len() {
            let b = self.base[lvl];
            let mut y = g.apply(b);
            if y == b {
                continue;
            }
            if self.levels[lvl].tree[y] == -1 {
                return (g, lvl);
            }
            while y != b {
                let gid = self.levels[lvl].tree[y] as usize;
                g = self.invs[gid].mul(&g);
                y = self.invs[gid].apply(y);
            }
        }
        (g, self.base.len())
    }

    fn complete_level(&mut self, i: usize) {
        // Generators at this level are fixed for the duration of this call
        // (additions go strictly deeper), so the orbit is built once.
        self.rebuild_orbit(i);
        loop {
            let mut clean = true;
            let orbit_len = self.levels[i].orbit.len();
            for oi in 0..orbit_len {
                let p = self.levels[i].orbit[oi] as usize;
                let u_p = self.transversal(i, p);
                let gen_count = self.levels[i].gen_ids.len();
                for gk in 0..gen_count {
                    let gid = self.levels[i].gen_ids[gk];
                    let q = self.gens[gid].apply(p);
                    // u_q^{-1} * gen * u_p, stripping u_q via the tree.
                    let mut w = self.gens[gid].mul(&u_p);
                    let b = self.base[i];
                    let mut y = q;
                    while y != b {
                        let t = self.levels[i].tree[y] as usize;
                        w = self.invs[t].mul(&w);
                        y = self.invs[t].apply(y);
                    }
                    if w.is_identity() {
                        continue;
                    }
                    let (res, _) = self.sift_from(i + 1, w);
                    if !res.is_identity() {
                        self.insert_gen(res, i + 1);
                        self.complete_level(i + 1);
                        clean = false;
                    }
                }
            }
            if clean {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permgrp::alt_generators;

    #[test]
    fn symmetric_and_alternating_orders() {
        let chain = StabChain::build(alt_generators(5));
        assert_eq!(chain.order(), BigUint::from(60u32));
        let chain = StabChain::build(alt_generators(7));
        assert_eq!(chain.order(), BigUint::from(2520u32));
        let s4 = vec![
            Perm::from_cycles(4, &[vec![0, 1]]).unwrap(),
            Perm::from_cycles(4, &[vec![0, 1, 2, 3]]).unwrap(),
        ];
        assert_eq!(StabChain::build(s4).order(), BigUint::from(24u32));
    }

    #[test]
    fn single_transposition_has_order_two() {
        let t = Perm::from_cycles(6, &[vec![2, 5]]).unwrap();
        let chain = StabChain::build(vec![t]);
        assert_eq!(chain.order(), BigUint::from(2u32));
    }

    #[test]
    fn membership_by_sifting() {
        let chain = StabChain::build(alt_generators(6));
        let even = Perm::from_cycles(6, &[vec![0, 3, 4]]).unwrap();
        let odd = Perm::from_cycles(6, &[vec![0, 3]]).unwrap();
        assert!(chain.contains(&even));
        assert!(!chain.contains(&odd));
        assert!(chain.contains(&Perm::identity(6)));
    }

    #[test]
    fn alt25_order_matches_independent_factorial() {
        let chain = StabChain::build(alt_generators(25));
        assert_eq!(chain.order(), crate::util::alt_order(25));
        assert_eq!(chain.order().to_string(), "7755605021665492992000000");
    }
}
