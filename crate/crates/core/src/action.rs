//! Actions of telescope elements: the direct limit of the level sets, the
//! prefix action on the boundary, bounded-type profiles, and transitivity
//! witnesses on the limit.

use crate::normalform::weak_normal_form;
use crate::permgrp::Perm;
use crate::telescope::{Atom, Elem, LazyElement, SignedAtom, SpineData, Telescope};
use crate::verify::report::Report;
use crate::{Error, Result};
use rand::Rng;

/// A point of the direct limit: a word at some level, with trailing spine
/// letters stripped (the transition maps append them).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LimitPoint {
    pub level: usize,
    pub word: Vec<u32>,
}

impl LimitPoint {
    pub fn new(spine: &SpineData, level: usize, word: Vec<u32>) -> LimitPoint {
        assert_eq!(word.len(), level);
        let mut p = LimitPoint { level, word };
        p.canonicalize(spine);
        p
    }

    fn canonicalize(&mut self, spine: &SpineData) {
        while self.level > 0 && self.word[self.level - 1] == spine.spine_letter(self.level - 1) {
            self.word.pop();
            self.level -= 1;
        }
    }

    /// The representative at level `target >= level`.
    pub fn lift(&self, spine: &SpineData, target: usize) -> Vec<u32> {
        let mut w = self.word.clone();
        for c in self.level..target {
            w.push(spine.spine_letter(c));
        }
        w
    }

    /// `w@i` serialization, letters 1-based.
    pub fn display(&self) -> String {
        if self.word.is_empty() {
            return "e@0".to_string();
        }
        let w: String = self.word.iter().map(|&l| format!("x{}", l + 1)).collect();
        format!("{w}@{}", self.level)
    }
}

fn spined(spec: &Telescope) -> Result<SpineData> {
    spec.spine().ok_or(Error::EngineMismatch {
        expected: "spined permutation telescope",
        found: "other",
    })
}

/// Applies one evaluated permutation to a lifted point.
fn apply_at(spec: &Telescope, spine: &SpineData, level: usize, p: &Perm, x: &LimitPoint) -> LimitPoint {
    let shape = spec.level_shape(level);
    let idx = shape.index_of(&x.lift(spine, level)).expect("lift in range");
    LimitPoint::new(spine, level, shape.word_at(p.apply(idx)))
}

/// The action of an element on a limit point: each atom stabilizes at a
/// computable level, and the result is cross-checked one and two levels
/// deeper.
pub fn act_limit(g: &LazyElement, x: &LimitPoint) -> Result<LimitPoint> {
    let spec = g.spec();
    let spine = spined(spec)?;
    let kappa = spec.kappa();
    let max = spec.max_level();
    let mut cur = x.clone();
    for sa in g.atoms().iter().rev() {
        let t = match &sa.atom {
            Atom::Delta { level, .. } => cur.level.max(*level),
            Atom::Tilde { .. } | Atom::Profile { .. } => cur.level + kappa,
        };
        if t > max {
            return Err(Error::BudgetExceeded(format!(
                "stabilization level {t} exceeds the horizon {max}"
            )));
        }
        let eval = |lvl: usize| -> Result<Perm> {
            let one = LazyElement::from_atoms(spec.clone(), vec![SignedAtom {
                atom: sa.atom.clone(),
                inverted: sa.inverted,
            }]);
            Ok(one.project(lvl)?.as_perm()?.clone())
        };
        let image = apply_at(spec, &spine, t, &eval(t)?, &cur);
        // stability cross-check at t+1 and t+2 where the horizon allows
        for extra in 1..=2usize {
            let lvl = t + extra;
            if lvl > max {
                break;
            }
            let again = apply_at(spec, &spine, lvl, &eval(lvl)?, &cur);
            if again != image {
                return Err(Error::Precondition(format!(
                    "action of a profile atom does not stabilize at level {t}"
                )));
            }
        }
        cur = image;
    }
    Ok(cur)
}

/// Tail behavior of a boundary point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailRule {
    EventuallySpine,
    Unspecified,
}

/// A boundary point given by a known prefix and a tail rule.
#[derive(Clone, Debug)]
pub struct CantorPoint {
    pub prefix: Vec<u32>,
    pub tail: TailRule,
}

impl CantorPoint {
    fn letter(&self, spine: &SpineData, idx: usize) -> Result<u32> {
        if idx < self.prefix.len() {
            Ok(self.prefix[idx])
        } else {
            match self.tail {
                TailRule::EventuallySpine => Ok(spine.spine_letter(idx)),
                TailRule::Unspecified => Err(Error::InsufficientPrefix {
                    need: idx + 1,
                    have: self.prefix.len(),
                }),
            }
        }
    }

    pub fn display(&self) -> String {
        let p: String = self.prefix.iter().map(|&l| format!("x{}", l + 1)).collect();
        match self.tail {
            TailRule::EventuallySpine => format!("{p}(o*)"),
            TailRule::Unspecified => format!("{p}..."),
        }
    }
}

/// First `out_len` letters of the image of a boundary point. For unspecified
/// tails the result may be shorter when stability is only achieved on a part
/// of the known prefix.
pub fn act_cantor_prefix(g: &LazyElement, xi: &CantorPoint, out_len: usize) -> Result<Vec<u32>> {
    let spec = g.spec();
    let spine = spined(spec)?;
    let mut known: Vec<u32> = xi.prefix.clone();
    let mut tail = xi.tail;
    let mut truncated = false;
    for sa in g.atoms().iter().rev() {
        let point = CantorPoint {
            prefix: known.clone(),
            tail,
        };
        match &sa.atom {
            Atom::Delta { level, elem } => {
                let j = *level;
                let shape = spec.level_shape(j);
                let mut letters = Vec::with_capacity(j);
                for c in 0..j {
                    letters.push(point.letter(&spine, c)?);
                }
                let p = elem.as_perm()?;
                let p = if sa.inverted { p.inverse() } else { p.clone() };
                let image = shape.word_at(p.apply(shape.index_of(&letters)?));
                // extend the known region to cover the permuted block
                while known.len() < j {
                    known.push(point.letter(&spine, known.len())?);
                }
                known[..j].copy_from_slice(&image);
            }
            Atom::Tilde { start, b } => {
                // locate the spine run; the point lies in at most one
                // planted block
                let mut s = 0usize;
                let in_run = loop {
                    match point.letter(&spine, s) {
                        Ok(l) if l == spine.spine_letter(s) => s += 1,
                        Ok(_) => break true,
                        Err(_) => break false, // unknown tail: spine so far
                    }
                };
                if !in_run {
                    if tail == TailRule::Unspecified {
                        // the spine run extends past the known prefix
                        return Err(Error::InsufficientPrefix {
                            need: known.len() + 1,
                            have: known.len(),
                        });
                    }
                    // the spine ray is fixed by directed elements
                    continue;
                }
                let k = s + 2;
                if k < start + 2 {
                    continue; // below the start of this directed element
                }
                let first = point.letter(&spine, s)?;
                if !spine.pattern_first_letters().contains(&first) {
                    continue;
                }
                let second = point.letter(&spine, s + 1)?;
                let b = b.as_perm()?;
                let b = if sa.inverted { b.inverse() } else { b.clone() };
                if let Some(pt) = spine
                    .pattern_pair
                    .iter()
                    .position(|&pp| pp == (first, second))
                {
                    let q = b.apply(pt);
                    let (ns, nt) = spine.pattern_pair[q];
                    while known.len() < s + 2 {
                        known.push(point.letter(&spine, known.len())?);
                    }
                    known[s] = ns;
                    known[s + 1] = nt;
                }
            }
            Atom::Profile { eval, .. } => {
                // apply levelwise and demand a stable prefix
                let max = spec.max_level();
                let want = out_len.min(max);
                let depth = (want + 2).min(max);
                let mut letters = Vec::with_capacity(depth);
                for c in 0..depth {
                    match point.letter(&spine, c) {
                        Ok(l) => letters.push(l),
                        Err(e) => {
                            if letters.len() >= want {
                                break;
                            }
                            return Err(e);
                        }
                    }
                }
                let lvl = letters.len();
                let shape = spec.level_shape(lvl);
                let p0 = eval(lvl);
                let p0 = p0.as_perm()?;
                let p0 = if sa.inverted { p0.inverse() } else { p0.clone() };
                let image = shape.word_at(p0.apply(shape.index_of(&letters)?));
                // check one level shallower for prefix stability
                if lvl > 1 {
                    let shape1 = spec.level_shape(lvl - 1);
                    let p1 = eval(lvl - 1);
                    let p1 = p1.as_perm()?;
                    let p1 = if sa.inverted { p1.inverse() } else { p1.clone() };
                    let im1 = shape1.word_at(p1.apply(shape1.index_of(&letters[..lvl - 1])?));
                    let stable = im1[..im1.len().saturating_sub(1)]
                        == image[..im1.len().saturating_sub(1)];
                    if !stable {
                        return Err(Error::Precondition(
                            "profile atom has no stable prefix action here".into(),
                        ));
                    }
                }
                known = image;
                known.truncate(want.max(known.len().min(want + 1)));
                tail = TailRule::Unspecified;
                truncated = true;
            }
        }
    }
    let mut out = Vec::with_capacity(out_len);
    for c in 0..out_len {
        match (CantorPoint { prefix: known.clone(), tail }).letter(&spine, c) {
            Ok(l) => out.push(l),
            Err(_) => break,
        }
    }
    if out.len() < out_len && !truncated && tail == TailRule::Unspecified {
        // stable only on the achieved part; the caller sees a shorter prefix
    }
    Ok(out)
}

/// Per-level counts of boundary-inconsistent words, levels `1..=max_levels`.
/// The counts of an element of bounded type stay below a uniform constant.
pub fn bounded_type_profile(g: &LazyElement, max_levels: usize) -> Result<Vec<u64>> {
    let spec = g.spec();
    let nf = weak_normal_form(g)?;
    let mut out = Vec::with_capacity(max_levels);
    for l in 1..=max_levels {
        let shape = spec.level_shape(l);
        let mut count = 0u64;
        for idx in 0..shape.count() {
            if !nf.cantor_consistent_at(&shape.word_at(idx)) {
                count += 1;
            }
        }
        out.push(count);
    }
    Ok(out)
}

/// Samples pairs of distinct k-tuples on the limit and exhibits one-level
/// witnesses mapping one onto the other.
pub fn check_transitivity_limit(
    spec: &Telescope,
    k: usize,
    sample_budget: usize,
    seed: u64,
) -> Result<Report> {
    let spine = spined(spec)?;
    let mut report = Report::new(
        &format!("transitivity-limit-k{k}"),
        &spec.name(),
        format!("levels<= {}", spec.max_level() - 1),
    );
    if k > 3 {
        return Err(Error::Precondition("k must be at most 3".into()));
    }
    let mut rng = crate::util::substream(seed, "transitivity-limit");
    let level = 2usize.min(spec.max_level().saturating_sub(3)).max(1);
    let shape = spec.level_shape(level);
    let degree = shape.count();
    let mut sample_tuple = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<LimitPoint> {
        loop {
            let mut points = Vec::with_capacity(k);
            for _ in 0..k {
                let idx = rng.gen_range(0..degree);
                points.push(LimitPoint::new(&spine, level, shape.word_at(idx)));
            }
            let mut dedup = points.clone();
            dedup.sort_by(|a, b| (a.level, &a.word).cmp(&(b.level, &b.word)));
            dedup.dedup();
            if dedup.len() == k {
                return points;
            }
        }
    };
    for trial in 0..sample_budget {
        let xs = sample_tuple(&mut rng);
        let ys = sample_tuple(&mut rng);
        let witness = transitivity_witness(spec, &spine, level + 1, &xs, &ys)?;
        let mut ok = true;
        for (x, y) in xs.iter().zip(&ys) {
            let image = act_limit(&witness, x)?;
            if &image != y {
                ok = false;
            }
        }
        report.push(
            format!("trial={trial}"),
            "limit-witness",
            ok,
            Some(format!(
                "{} -> {}",
                xs.iter().map(|p| p.display()).collect::<Vec<_>>().join(","),
                ys.iter().map(|p| p.display()).collect::<Vec<_>>().join(",")
            )),
        );
        if !ok {
            break;
        }
    }
    Ok(report)
}

/// A one-level element mapping the first tuple onto the second. Tuples with
/// repeated entries are rejected.
pub fn transitivity_witness(
    spec: &Telescope,
    spine: &SpineData,
    level: usize,
    xs: &[LimitPoint],
    ys: &[LimitPoint],
) -> Result<LazyElement> {
    if xs.len() != ys.len() {
        return Err(Error::Precondition("tuple lengths differ".into()));
    }
    let shape = spec.level_shape(level);
    let degree = shape.count();
    let xi: Vec<usize> = xs
        .iter()
        .map(|p| shape.index_of(&p.lift(spine, level)))
        .collect::<Result<_>>()?;
    let yi: Vec<usize> = ys
        .iter()
        .map(|p| shape.index_of(&p.lift(spine, level)))
        .collect::<Result<_>>()?;
    for tuple in [&xi, &yi] {
        let mut seen = std::collections::HashSet::new();
        if !tuple.iter().all(|&p| seen.insert(p)) {
            return Err(Error::Precondition("tuple has repeated entries".into()));
        }
    }
    // extend the partial map x_s -> y_s to an even permutation
    let mut img = vec![usize::MAX; degree];
    let mut used = vec![false; degree];
    for (&x, &y) in xi.iter().zip(&yi) {
        if img[x] != usize::MAX && img[x] != y {
            return Err(Error::Precondition("inconsistent partial map".into()));
        }
        img[x] = y;
        used[y] = true;
    }
    let mut free_targets: Vec<usize> = (0..degree).filter(|&p| !used[p]).collect();
    free_targets.reverse();
    let mut unpinned: Vec<usize> = Vec::new();
    for x in 0..degree {
        if img[x] == usize::MAX {
            let y = free_targets.pop().expect("counts match");
            img[x] = y;
            unpinned.push(x);
        }
    }
    let mut perm = Perm::from_images(img.iter().map(|&v| v as u32).collect())?;
    if !perm.is_even() {
        // swap two unpinned images to fix the parity
        if unpinned.len() < 2 {
            return Err(Error::Precondition(
                "no freedom left to fix the parity".into(),
            ));
        }
        let (a, b) = (unpinned[0], unpinned[1]);
        let mut img2: Vec<u32> = perm.images().to_vec();
        img2.swap(a, b);
        perm = Perm::from_images(img2)?;
    }
    spec.delta(level, Elem::Perm(perm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{build_alt, AltTelescopeParams};
    use crate::util::substream;
    use std::sync::Arc;

    fn alt52(max_level: usize) -> Telescope {
        build_alt(AltTelescopeParams {
            d: 5,
            r: 2,
            max_level,
        })
        .unwrap()
    }

    #[test]
    fn limit_points_canonicalize() {
        let s = alt52(5);
        let spine = s.spine().unwrap();
        // x_1 x_5 x_5 is the same limit point as x_1
        let p = LimitPoint::new(&spine, 3, vec![0, 4, 4]);
        assert_eq!(p.level, 1);
        assert_eq!(p.word, vec![0]);
        assert_eq!(p.display(), "x1@1");
        // the spine ray is the empty point
        let e = LimitPoint::new(&spine, 2, vec![4, 4]);
        assert_eq!(e.level, 0);
    }

    #[test]
    fn rooted_elements_act_in_the_obvious_way() {
        let s = alt52(5);
        let spine = s.spine().unwrap();
        let omega = Perm::from_cycles(5, &[vec![0, 1, 2]]).unwrap();
        let g = s.delta(1, Elem::Perm(omega)).unwrap();
        let x = LimitPoint::new(&spine, 1, vec![0]);
        let y = act_limit(&g, &x).unwrap();
        assert_eq!(y.word, vec![1]);
        // identity fixes everything
        let e = s.identity_element();
        assert_eq!(act_limit(&e, &x).unwrap(), x);
    }

    #[test]
    fn action_is_compatible_with_products() {
        let s = alt52(6);
        let spine = s.spine().unwrap();
        let mut rng = substream(61, "act-assoc");
        for _ in 0..50 {
            let g = {
                let b = s.b_sample(&mut rng);
                s.tilde(1, b).unwrap()
            };
            let h = {
                let omega = crate::permgrp::random_even(&mut rng, 5);
                s.delta(1, Elem::Perm(omega)).unwrap()
            };
            let x = LimitPoint::new(
                &spine,
                2,
                vec![rand::Rng::gen_range(&mut rng, 0..5), rand::Rng::gen_range(&mut rng, 0..5)],
            );
            let fused = act_limit(&g.mul(&h), &x).unwrap();
            let stepped = act_limit(&g, &act_limit(&h, &x).unwrap()).unwrap();
            assert_eq!(fused, stepped);
        }
    }

    #[test]
    fn one_hot_elements_act_trivially_on_the_limit() {
        let s = alt52(6);
        let spine = s.spine().unwrap();
        let mut rng = substream(62, "act-onehot");
        let omega = Elem::Perm(crate::permgrp::random_even(&mut rng, 25));
        let one_hot = s
            .delta(2, omega.clone())
            .unwrap()
            .mul(&s.delta(3, s.iota(2, 3, &omega).inverse()).unwrap());
        for idx in 0..25usize {
            let x = LimitPoint::new(&spine, 2, s.level_shape(2).word_at(idx));
            assert_eq!(act_limit(&one_hot, &x).unwrap(), x);
        }
    }

    #[test]
    fn cantor_prefix_action() {
        let s = alt52(5);
        // Δ_1(ω) permutes the first letter and keeps the tail
        let omega = Perm::from_cycles(5, &[vec![0, 1, 2]]).unwrap();
        let g = s.delta(1, Elem::Perm(omega)).unwrap();
        let xi = CantorPoint {
            prefix: vec![0, 3],
            tail: TailRule::EventuallySpine,
        };
        assert_eq!(act_cantor_prefix(&g, &xi, 4).unwrap(), vec![1, 3, 4, 4]);
        // directed elements fix the spine ray
        let b = s.b_generators()[0].clone();
        let t = s.tilde(1, b).unwrap();
        let spine_ray = CantorPoint {
            prefix: vec![],
            tail: TailRule::EventuallySpine,
        };
        assert_eq!(act_cantor_prefix(&t, &spine_ray, 3).unwrap(), vec![4, 4, 4]);
        // unspecified tails fail when the needed letters are unknown
        let xi_short = CantorPoint {
            prefix: vec![4],
            tail: TailRule::Unspecified,
        };
        assert!(matches!(
            act_cantor_prefix(&t, &xi_short, 3),
            Err(Error::InsufficientPrefix { .. })
        ));
    }

    #[test]
    fn coordinatewise_profiles_act_per_coordinate() {
        let s = alt52(5);
        // the coordinate-wise involution (x_1 x_5)(x_2 x_4) at every level
        let s2 = s.clone();
        let profile = s.profile(
            "eps",
            Arc::new(move |j| {
                let shape = s2.level_shape(j);
                let img: Vec<u32> = (0..shape.count())
                    .map(|idx| {
                        let w = shape.word_at(idx);
                        let w2: Vec<u32> = w
                            .iter()
                            .map(|&l| match l {
                                0 => 4,
                                4 => 0,
                                1 => 3,
                                3 => 1,
                                other => other,
                            })
                            .collect();
                        shape.index_of(&w2).unwrap() as u32
                    })
                    .collect();
                Elem::Perm(Perm::from_images(img).unwrap())
            }),
        );
        let xi = CantorPoint {
            prefix: vec![0, 2],
            tail: TailRule::EventuallySpine,
        };
        let out = act_cantor_prefix(&profile, &xi, 3).unwrap();
        assert_eq!(out, vec![4, 2, 0]);
    }

    #[test]
    fn bounded_type_profiles() {
        let s = alt52(6);
        // rooted generators are consistent everywhere
        let omega = Perm::from_cycles(5, &[vec![0, 1, 2]]).unwrap();
        let g = s.delta(1, Elem::Perm(omega)).unwrap();
        assert_eq!(bounded_type_profile(&g, 5).unwrap(), vec![0, 0, 0, 0, 0]);
        // a directed generator moving both rows is inconsistent at exactly
        // r + 1 = 3 words per level from level 2 on
        let c = Perm::from_cycles(10, &[vec![0, 5, 1]]).unwrap();
        let t = s.tilde(1, Elem::Perm(c)).unwrap();
        let profile = bounded_type_profile(&t, 6).unwrap();
        assert_eq!(profile[1..], vec![3, 3, 3, 3, 3][..]);
    }

    #[test]
    fn transitivity_witnesses_on_the_limit() {
        let s = alt52(6);
        for k in 1..=2usize {
            let report = check_transitivity_limit(&s, k, 50, 99).unwrap();
            assert!(report.passed(), "k = {k}");
        }
        // repeated entries are rejected
        let spine = s.spine().unwrap();
        let p = LimitPoint::new(&spine, 1, vec![0]);
        assert!(transitivity_witness(&s, &spine, 2, &[p.clone(), p.clone()], &[
            LimitPoint::new(&spine, 1, vec![1]),
            LimitPoint::new(&spine, 1, vec![2])
        ])
        .is_err());
    }
}
