//! Weak normal form over the matrix telescope, and the non-scalar witness.
//!
//! The directed carrier here holds blocks `I + P ⊗ (C_k − I)` where `P` is a
//! rank-one idempotent over the depth-`m` coordinates and `C_k` plants the
//! block content at the spine-prefixed positions of the tail. Coordinate
//! blocks have `P` a diagonal unit; conjugating a directed element by a
//! boundary matrix turns the unit into a general rank-one idempotent, which
//! is why the carrier stores projector vectors rather than block words.

use super::carrier::ShapeAt;
use crate::linfq::{find_noncommuting_tau, scalar_multiple_of, Fq, MatFq};
use crate::telescope::{Atom, Elem, LazyElement, SignedAtom, Telescope};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone)]
pub struct SlBlock {
    /// column vector of the idempotent `P = col · row`
    pub col: Vec<u8>,
    /// row vector with `row · col = 1`
    pub row: Vec<u8>,
    /// content in `B`, a `2d × 2d` matrix
    pub content: MatFq,
}

/// An ordered product of generalized directed blocks at a fixed depth.
#[derive(Clone)]
pub struct SlDirected {
    depth: usize,
    blocks: Vec<SlBlock>,
}

impl SlDirected {
    pub fn identity(depth: usize) -> Self {
        SlDirected {
            depth,
            blocks: vec![],
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn blocks(&self) -> &[SlBlock] {
        &self.blocks
    }

    pub fn is_syntactically_trivial(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Coordinate block at the word index `v` of the depth shape.
    pub fn unit(depth: usize, dim_m: usize, v: usize, content: MatFq) -> Self {
        let mut col = vec![0u8; dim_m];
        col[v] = 1;
        let row = col.clone();
        SlDirected {
            depth,
            blocks: vec![SlBlock { col, row, content }],
        }
    }

    pub fn mul(&self, rhs: &SlDirected) -> SlDirected {
        assert_eq!(self.depth, rhs.depth);
        let mut blocks = self.blocks.clone();
        blocks.extend(rhs.blocks.iter().cloned());
        SlDirected {
            depth: self.depth,
            blocks,
        }
    }

    /// Lift to depth `m + 1`: projector vectors extend by the spine unit.
    pub fn lift(&self, spec: &Telescope, spine_letter: u32) -> SlDirected {
        let d = spec.matrix_params().expect("matrix telescope").0 as usize;
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let mut col = vec![0u8; b.col.len() * d];
                let mut row = vec![0u8; b.row.len() * d];
                for (i, &x) in b.col.iter().enumerate() {
                    col[i * d + spine_letter as usize] = x;
                }
                for (i, &x) in b.row.iter().enumerate() {
                    row[i * d + spine_letter as usize] = x;
                }
                SlBlock {
                    col,
                    row,
                    content: b.content.clone(),
                }
            })
            .collect();
        SlDirected {
            depth: self.depth + 1,
            blocks,
        }
    }

    /// The level-`k` factor `φ^{(m)}_k`: the ordered product of
    /// `I + P ⊗ (C_k − I)` over the blocks. Requires `k >= depth + 2`.
    pub fn place(&self, spec: &Telescope, k: usize) -> MatFq {
        let (d, q) = spec.matrix_params().expect("matrix telescope");
        let d = d as usize;
        assert!(k >= self.depth + 2);
        let dim_k = spec.level_size(k);
        let dim_m = d.pow(self.depth as u32);
        let dim_tail = dim_k / dim_m;
        let mut out = MatFq::identity(q, dim_k);
        for block in &self.blocks {
            // C_k: the content planted at spine^{k-m-2}·{x_1,x_2}·X inside
            // the tail coordinates.
            let prefix = d.pow((k - self.depth - 2) as u32) - 1;
            let pos = |u: usize| prefix * d * d + u;
            // factor = I + P ⊗ (C_k - I); multiply into the accumulator
            let mut factor = MatFq::identity(q, dim_k);
            let two_d = 2 * d;
            for a in 0..dim_m {
                if block.col[a] == 0 {
                    continue;
                }
                for a2 in 0..dim_m {
                    let p = q.mul(block.col[a], block.row[a2]);
                    if p == 0 {
                        continue;
                    }
                    // (C_k - I) entries live on the planted 2d coordinates
                    for u in 0..two_d {
                        for v in 0..two_d {
                            let mut c = block.content.get(u, v);
                            if u == v {
                                c = q.sub(c, 1);
                            }
                            if c == 0 {
                                continue;
                            }
                            let r = a * dim_tail + pos(u);
                            let s = a2 * dim_tail + pos(v);
                            factor.set(r, s, q.add(factor.get(r, s), q.mul(p, c)));
                        }
                    }
                }
            }
            out = out.mul(&factor);
        }
        out
    }

    /// Semantic triviality, decided by materializing the first factor.
    pub fn is_trivial(&self, spec: &Telescope) -> bool {
        if self.blocks.is_empty() {
            return true;
        }
        self.place(spec, self.depth + 2).is_identity()
    }
}

/// The quadruple of the matrix weak normal form.
#[derive(Clone)]
pub struct SlNormalForm {
    spec: Telescope,
    pub m: usize,
    pub f: BTreeMap<usize, MatFq>,
    pub delta: MatFq,
    pub sigma: SlDirected,
    pub eta: MatFq,
}

/// The element `σ~^{[n]}` of the matrix directed family.
pub fn sl_directed_tilde(spec: &Telescope, sigma: &SlDirected, n: usize) -> LazyElement {
    let name = format!("Tm({},{})", sigma.depth(), n);
    let spec2 = spec.clone();
    let sigma = sigma.clone();
    let start = n;
    let eval = move |j: usize| -> Elem {
        let mut acc = spec2.identity(j);
        for k in (start + 1)..=j {
            let placed = Elem::Mat(sigma.place(&spec2, k));
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

pub fn weak_normal_form_sl(word: &LazyElement) -> Result<SlNormalForm> {
    let spec = word.spec().clone();
    let (_, q) = spec.matrix_params().ok_or(Error::EngineMismatch {
        expected: "matrix telescope",
        found: "permutation",
    })?;
    let mut nf = SlNormalForm {
        spec: spec.clone(),
        m: 0,
        f: BTreeMap::new(),
        delta: MatFq::identity(q, spec.level_size(1)),
        sigma: SlDirected::identity(0),
        eta: MatFq::identity(q, spec.level_size(1)),
    };
    for sa in word.atoms() {
        match &sa.atom {
            Atom::Delta { level, elem } => {
                let omega = elem.as_mat()?;
                let omega = if sa.inverted {
                    omega.inverse()?
                } else {
                    omega.clone()
                };
                nf.mul_delta(*level, &omega)?;
            }
            Atom::Tilde { start, b } => {
                let b = b.as_mat()?;
                let b = if sa.inverted { b.inverse()? } else { b.clone() };
                nf.mul_tilde(*start, &b)?;
            }
            Atom::Profile { .. } => {
                return Err(Error::Precondition(
                    "normal form expects a word over delta and tilde atoms".into(),
                ))
            }
        }
    }
    Ok(nf)
}

impl SlNormalForm {
    pub fn spec(&self) -> &Telescope {
        &self.spec
    }

    fn check_dim(&self, level: usize) -> Result<()> {
        let dim = self
            .spec
            .matrix_params()
            .map(|(d, _)| (d as usize).pow(level as u32))
            .unwrap_or(usize::MAX);
        if dim > crate::linfq::DIM_CAP {
            return Err(Error::BudgetExceeded(format!(
                "normal-form depth needs level {level} of dimension {dim}"
            )));
        }
        Ok(())
    }

    fn iota_mat(&self, i: usize, j: usize, m: &MatFq) -> MatFq {
        self.spec
            .iota(i, j, &Elem::Mat(m.clone()))
            .as_mat()
            .expect("matrix engine")
            .clone()
    }

    fn phi_mat(&self, i: usize, b: &MatFq) -> MatFq {
        self.spec
            .phi(i, &Elem::Mat(b.clone()))
            .as_mat()
            .expect("matrix engine")
            .clone()
    }

    fn push_f(&mut self, level: usize, p: &MatFq) {
        if p.is_identity() {
            return;
        }
        let merged = match self.f.get(&level) {
            Some(x) => x.mul(p),
            None => p.clone(),
        };
        if merged.is_identity() {
            self.f.remove(&level);
        } else {
            self.f.insert(level, merged);
        }
    }

    fn spine_index(&self, level: usize) -> usize {
        // the all-x_d word is the last one
        self.spec.level_size(level) - 1
    }

    fn raise_m(&mut self) -> Result<()> {
        let m = self.m;
        self.check_dim(m + 2)?;
        let placed = if self.sigma.is_syntactically_trivial() {
            MatFq::identity(self.delta.field(), self.spec.level_size(m + 2))
        } else {
            self.sigma.place(&self.spec, m + 2)
        };
        let new_delta = self.iota_mat(m + 1, m + 2, &self.delta).mul(&placed);
        let new_eta = self.iota_mat(m + 1, m + 2, &self.eta);
        let f_level = self.delta.mul(&self.eta);
        self.push_f(m + 1, &f_level);
        let spine_letter = self.spec.matrix_params().expect("matrix").0 - 1;
        self.sigma = self.sigma.lift(&self.spec, spine_letter);
        self.delta = new_delta;
        self.eta = new_eta;
        self.m = m + 1;
        Ok(())
    }

    fn mul_delta(&mut self, i: usize, omega: &MatFq) -> Result<()> {
        if omega.is_identity() {
            return Ok(());
        }
        while i > self.m + 1 {
            self.raise_m()?;
        }
        for j in i..=self.m {
            let lifted = self.iota_mat(i, j, omega);
            self.push_f(j, &lifted);
        }
        self.eta = self.eta.mul(&self.iota_mat(i, self.m + 1, omega));
        Ok(())
    }

    fn mul_tilde(&mut self, n: usize, b: &MatFq) -> Result<()> {
        if b.is_identity() {
            return Ok(());
        }
        if self.f.is_empty()
            && self.delta.is_identity()
            && self.eta.is_identity()
            && self.sigma.is_syntactically_trivial()
            && n >= self.m + 1
        {
            while self.m < n - 1 {
                self.check_dim(self.m + 2)?;
                let q = self.delta.field();
                self.delta = MatFq::identity(q, self.spec.level_size(self.m + 2));
                self.eta = MatFq::identity(q, self.spec.level_size(self.m + 2));
                self.sigma = SlDirected::identity(self.m + 1);
                self.m += 1;
            }
            let d = self.spec.matrix_params().expect("matrix").0 as usize;
            let dim_m = d.pow((n - 1) as u32);
            self.sigma = SlDirected::unit(n - 1, dim_m, dim_m - 1, b.clone());
            return Ok(());
        }
        while n > self.m + 1 {
            self.raise_m()?;
        }
        let m = self.m;
        self.check_dim(m + 2)?;
        let mut proj: std::collections::HashMap<usize, MatFq> = std::collections::HashMap::new();
        for j in n + 1..=m + 2 {
            let mut acc = MatFq::identity(self.delta.field(), self.spec.level_size(j));
            for k in n + 1..=j {
                acc = acc.mul(&self.iota_mat(k, j, &self.phi_mat(k, b)));
            }
            proj.insert(j, acc);
        }
        // New block: P = (η column at the spine index)(η^{-1} row at it).
        let spine_idx = self.spine_index(m + 1);
        let dim_m1 = self.spec.level_size(m + 1);
        let eta_inv = self.eta.inverse()?;
        let col: Vec<u8> = (0..dim_m1).map(|r| self.eta.get(r, spine_idx)).collect();
        let row: Vec<u8> = (0..dim_m1).map(|c| eta_inv.get(spine_idx, c)).collect();
        let tau = SlDirected {
            depth: m + 1,
            blocks: vec![SlBlock {
                col,
                row,
                content: b.clone(),
            }],
        };
        let placed = if self.sigma.is_syntactically_trivial() {
            MatFq::identity(self.delta.field(), self.spec.level_size(m + 2))
        } else {
            self.sigma.place(&self.spec, m + 2)
        };
        let new_delta = self.iota_mat(m + 1, m + 2, &self.delta).mul(&placed);
        let new_eta = self.iota_mat(m + 1, m + 2, &self.eta).mul(&proj[&(m + 2)]);
        let f_level = self.delta.mul(&self.eta);
        self.push_f(m + 1, &f_level);
        for j in n + 1..=m + 1 {
            self.push_f(j, &proj[&j]);
        }
        let spine_letter = self.spec.matrix_params().expect("matrix").0 - 1;
        self.sigma = self.sigma.lift(&self.spec, spine_letter).mul(&tau);
        self.delta = new_delta;
        self.eta = new_eta;
        self.m = m + 1;
        Ok(())
    }

    pub fn reassemble(&self) -> Result<LazyElement> {
        let max = self.spec.max_level();
        let mut word = self.spec.identity_element();
        for (&level, p) in &self.f {
            if level > max {
                continue;
            }
            let one_hot = if level + 1 <= max {
                let head = self.spec.delta(level, Elem::Mat(p.clone()))?;
                let tail = self
                    .spec
                    .delta(level + 1, Elem::Mat(self.iota_mat(level, level + 1, p)))?;
                head.mul(&tail.inverse())
            } else {
                self.spec.delta(level, Elem::Mat(p.clone()))?
            };
            word = word.mul(&one_hot);
        }
        if self.m + 1 <= max {
            word = word.mul(&self.spec.delta(self.m + 1, Elem::Mat(self.delta.clone()))?);
            word = word.mul(&sl_directed_tilde(&self.spec, &self.sigma, self.m + 1));
            word = word.mul(&self.spec.delta(self.m + 1, Elem::Mat(self.eta.clone()))?);
        }
        Ok(word)
    }

    /// True when the element is congruent to a scalar modulo the direct sum:
    /// `σ` trivial and `δ·η` scalar.
    pub fn is_scalar_class(&self) -> bool {
        self.sigma.is_trivial(&self.spec) && self.delta.mul(&self.eta).is_scalar().is_some()
    }
}

/// A non-scalar witness: `τ` at level `m+3` whose commutator with the
/// element is a one-level non-scalar element `Δ_{m+3}(ρ)`.
pub struct SlWitness {
    pub level: usize,
    pub tau: MatFq,
    pub rho: MatFq,
    pub commutator: LazyElement,
}

pub fn sl_nonscalar_witness(word: &LazyElement) -> Result<SlWitness> {
    let spec = word.spec().clone();
    let nf = weak_normal_form_sl(word)?;
    if nf.is_scalar_class() {
        return Err(Error::Precondition("scalar class".into()));
    }
    let m = nf.m;
    let level = m + 3;
    if level > spec.max_level() {
        return Err(Error::BudgetExceeded(format!(
            "witness level {level} exceeds the materializable horizon {}",
            spec.max_level()
        )));
    }
    let (d, q) = spec.matrix_params().expect("matrix telescope");
    let d = d as usize;
    let dim = spec.level_size(level);
    // Work with h = η g η^{-1} = f · Δ(ω) · σ~ where ω = η δ; commutators
    // with level-(m+3) one-level elements translate back by conjugation.
    let omega = nf.eta.mul(&nf.delta);
    let alpha = {
        // π_{m+3}(h) = ι(ω) · π_{m+3}(σ~)
        let sig = if nf.sigma.is_syntactically_trivial() {
            MatFq::identity(q, dim)
        } else {
            nf.sigma.place(&spec, level)
        };
        nf.spec.iota(m + 1, level, &Elem::Mat(omega.clone()))
            .as_mat()?
            .mul(&sig)
    };
    // U = X^m × {x_d} × {x_3} × X in coordinates.
    let dim_m = d.pow(m as u32);
    let mut u_set = Vec::new();
    for v in 0..dim_m {
        for y in 0..d {
            let idx = ((v * d + (d - 1)) * d + 2) * d + y;
            u_set.push(idx);
        }
    }
    let u_lookup: std::collections::HashSet<usize> = u_set.iter().copied().collect();
    let w_set: Vec<usize> = (0..dim).filter(|i| !u_lookup.contains(i)).collect();
    // the restriction of α to U is the ι(ω)-action there
    let lam = alpha.get(u_set[0], u_set[0]);
    let scalar_on_u = u_set
        .iter()
        .all(|&u| (0..dim).all(|r| alpha.get(r, u) == if r == u { lam } else { 0 }));
    let tau = if !scalar_on_u {
        find_noncommuting_tau(&alpha, &u_set, &w_set)?
    } else {
        // ω acts as a scalar towards U: pair τ with the level-(m+3) factor
        // of σ~ on the enlarged coordinate set X^m × {x_d} × {x_1,x_2,x_3} × X.
        let mut uprime = Vec::new();
        for v in 0..dim_m {
            for s in 0..3usize {
                for y in 0..d {
                    uprime.push(((v * d + (d - 1)) * d + s) * d + y);
                }
            }
        }
        let alpha_inv = alpha.inverse()?;
        let mut found = None;
        'search: for &y in &uprime {
            for &z in &uprime {
                if y == z {
                    continue;
                }
                for r in 1..q.q() as u8 {
                    let cand = MatFq::elementary(q, dim, y, z, r)?;
                    let comm = alpha.mul(&cand).mul(&alpha_inv).mul(&cand.inverse()?);
                    if comm.is_scalar().is_none() {
                        found = Some(cand);
                        break 'search;
                    }
                }
            }
        }
        found.ok_or_else(|| Error::SearchExhausted("no pairing transvection found".into()))?
    };
    // Translate back to a witness for g: τ' = ι(η)^{-1} τ ι(η).
    let eta_lift = nf.spec.iota(m + 1, level, &Elem::Mat(nf.eta.clone()));
    let eta_lift = eta_lift.as_mat()?;
    let tau_g = eta_lift.inverse()?.mul(&tau).mul(eta_lift);
    let g_tau = spec.delta(level, Elem::Mat(tau_g.clone()))?;
    let comm = LazyElement::commutator(word, &g_tau);
    let rho = comm.project(level)?.as_mat()?.clone();
    if rho.is_scalar().is_some() {
        return Err(Error::Precondition(
            "witness commutator is scalar; construction failed".into(),
        ));
    }
    for j in 1..=spec.max_level() {
        let pj = comm.project(j)?;
        let expect = if j < level {
            spec.identity(j)
        } else {
            spec.iota(level, j, &Elem::Mat(rho.clone()))
        };
        if pj != expect {
            return Err(Error::Precondition(format!(
                "commutator deviates from a one-level element at level {j}"
            )));
        }
    }
    Ok(SlWitness {
        level,
        tau: tau_g,
        rho,
        commutator: comm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::build_el;
    use crate::util::substream;
    use rand::Rng;

    fn el42() -> Telescope {
        build_el(4, 2, 4).unwrap()
    }

    fn random_word(
        spec: &Telescope,
        rng: &mut rand_chacha::ChaCha8Rng,
        len: usize,
        max_tildes: usize,
    ) -> LazyElement {
        let mut word = spec.identity_element();
        let mut tildes = 0;
        for _ in 0..len {
            let atom = if tildes < max_tildes && rng.gen_bool(0.4) {
                tildes += 1;
                spec.tilde(1, spec.b_sample(rng)).unwrap()
            } else {
                // a random level-1 matrix from the generators
                let gens = spec.level_generators(1);
                let mut acc = spec.identity(1);
                for _ in 0..6 {
                    let k = rng.gen_range(0..gens.len());
                    acc = acc.mul(&gens[k]);
                }
                spec.delta(1, acc).unwrap()
            };
            word = word.mul(&atom);
        }
        word
    }

    #[test]
    fn sl_normal_form_reassembles() {
        let s = el42();
        let mut rng = substream(51, "sl-nf");
        for _ in 0..8 {
            let len = rng.gen_range(1..=6);
            let word = random_word(&s, &mut rng, len, 2);
            let nf = weak_normal_form_sl(&word).unwrap();
            assert!(nf.m <= len);
            let back = nf.reassemble().unwrap();
            let horizon = (nf.m + 3).min(4);
            assert!(
                word.equal_up_to(&back, horizon).unwrap(),
                "sl reassembly mismatch at length {len}"
            );
        }
    }

    #[test]
    fn single_tilde_base_case() {
        let s = el42();
        let q = Fq::new(2).unwrap();
        let b = MatFq::elementary(q, 8, 0, 1, 1).unwrap();
        let t = s.tilde(1, Elem::Mat(b.clone())).unwrap();
        let nf = weak_normal_form_sl(&t).unwrap();
        assert_eq!(nf.m, 0);
        assert!(nf.delta.is_identity() && nf.eta.is_identity());
        assert!(!nf.sigma.is_trivial(&s));
    }

    #[test]
    fn scalar_class_detection() {
        let s = el42();
        let q = Fq::new(2).unwrap();
        // identity is scalar class
        let nf = weak_normal_form_sl(&s.identity_element()).unwrap();
        assert!(nf.is_scalar_class());
        // a delta word with non-scalar part is not
        let m = MatFq::elementary(q, 4, 0, 1, 1).unwrap();
        let g = s.delta(1, Elem::Mat(m)).unwrap();
        let nf = weak_normal_form_sl(&g).unwrap();
        assert!(!nf.is_scalar_class());
        assert!(matches!(
            sl_nonscalar_witness(&s.identity_element()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn witness_for_pure_tilde() {
        let s = el42();
        let q = Fq::new(2).unwrap();
        let b = MatFq::elementary(q, 8, 0, 1, 1).unwrap();
        let t = s.tilde(1, Elem::Mat(b)).unwrap();
        let w = sl_nonscalar_witness(&t).unwrap();
        assert_eq!(w.level, 3);
        assert!(w.rho.is_scalar().is_none());
    }

    #[test]
    fn witness_for_mixed_words() {
        let s = el42();
        let mut rng = substream(52, "sl-witness");
        let mut found = 0;
        while found < 6 {
            let len = rng.gen_range(1..=4);
            let word = random_word(&s, &mut rng, len, 1);
            let nf = weak_normal_form_sl(&word).unwrap();
            if nf.is_scalar_class() || nf.m + 3 > 4 {
                continue;
            }
            let w = sl_nonscalar_witness(&word).unwrap();
            found += 1;
            assert!(w.rho.is_scalar().is_none());
            assert_eq!(w.tau.det(), 1);
        }
    }

    #[test]
    fn projector_blocks_survive_conjugated_tildes() {
        // δ · b~ with a non-monomial δ exercises the rank-one projector path.
        let s = el42();
        let q = Fq::new(2).unwrap();
        let delta_mat = MatFq::elementary(q, 4, 3, 0, 1).unwrap();
        let b = MatFq::elementary(q, 8, 2, 5, 1).unwrap();
        let word = s
            .tilde(1, Elem::Mat(b))
            .unwrap()
            .mul(&s.delta(1, Elem::Mat(delta_mat)).unwrap())
            .mul(&s.tilde(1, Elem::Mat(MatFq::elementary(q, 8, 1, 4, 1).unwrap())).unwrap());
        let nf = weak_normal_form_sl(&word).unwrap();
        let back = nf.reassemble().unwrap();
        assert!(word.equal_up_to(&back, 4).unwrap());
    }

    #[test]
    fn scalar_multiple_helper() {
        let q = Fq::new(3).unwrap();
        let a = MatFq::elementary(q, 3, 0, 1, 1).unwrap();
        let mut b = a.clone();
        for r in 0..3 {
            for c in 0..3 {
                b.set(r, c, q.mul(2, a.get(r, c)));
            }
        }
        assert_eq!(scalar_multiple_of(&b, &a), Some(2));
        let c = MatFq::elementary(q, 3, 0, 2, 1).unwrap();
        assert_eq!(scalar_multiple_of(&c, &a), None);
    }
}
