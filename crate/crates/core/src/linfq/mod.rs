//! Finite-field matrix groups: elementary matrices, signed permutations,
//! a constructive non-commuting witness for non-scalar linear maps, and a
//! transvection closure that certifies generation by replayable witnesses.

mod field;
mod matrix;

pub use field::{Fq, FqElem, SUPPORTED_Q};
pub use matrix::{MatFq, DIM_CAP};

use crate::{Error, Result};
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

/// `Some(λ)` when `m = λ·base` entrywise with `λ != 0`.
pub fn scalar_multiple_of(m: &MatFq, base: &MatFq) -> Option<u8> {
    let f = m.field();
    let mut lambda = 0u8;
    for (x, y) in m.entries().iter().zip(base.entries()) {
        match (x, y) {
            (0, 0) => {}
            (_, 0) | (0, _) => return None,
            (&a, &b) => {
                let r = f.mul(a, f.inv(b).ok()?);
                if lambda == 0 {
                    lambda = r;
                } else if lambda != r {
                    return None;
                }
            }
        }
    }
    if lambda == 0 {
        // both matrices are zero
        Some(1)
    } else {
        Some(lambda)
    }
}

/// `T^{-1} A T` where `T` is the identity with the 2x2 block `t` installed on
/// coordinates `(u1, u2)`; computed as a rank-two row/column update.
fn conj_by_block(a: &MatFq, u1: usize, u2: usize, t: [[u8; 2]; 2]) -> MatFq {
    let f = a.field();
    let n = a.dim();
    // t in SL2, so t^{-1} = [[d, -b], [-c, a]].
    let tinv = [
        [t[1][1], f.neg(t[0][1])],
        [f.neg(t[1][0]), t[0][0]],
    ];
    let mut m = a.clone();
    // m := A T: columns u1, u2 replaced by A[:,u1]*t[0][j] + A[:,u2]*t[1][j].
    for r in 0..n {
        let (c1, c2) = (a.get(r, u1), a.get(r, u2));
        m.set(r, u1, f.add(f.mul(c1, t[0][0]), f.mul(c2, t[1][0])));
        m.set(r, u2, f.add(f.mul(c1, t[0][1]), f.mul(c2, t[1][1])));
    }
    // m := T^{-1} m: rows u1, u2 replaced.
    for c in 0..n {
        let (r1, r2) = (m.get(u1, c), m.get(u2, c));
        m.set(u1, c, f.add(f.mul(tinv[0][0], r1), f.mul(tinv[0][1], r2)));
        m.set(u2, c, f.add(f.mul(tinv[1][0], r1), f.mul(tinv[1][1], r2)));
    }
    m
}

fn sl2_candidates(f: Fq) -> Vec<[[u8; 2]; 2]> {
    let q = f.q() as u8;
    let mut out = Vec::new();
    // Likely hits first: the two elementary transvections and the rotation.
    out.push([[1, 1], [0, 1]]);
    out.push([[1, 0], [1, 1]]);
    out.push([[0, f.neg(1)], [1, 0]]);
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                for d in 0..q {
                    if f.sub(f.mul(a, d), f.mul(b, c)) == 1 {
                        let cand = [[a, b], [c, d]];
                        if !out.contains(&cand) && cand != [[1, 0], [0, 1]] {
                            out.push(cand);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Given an invertible `alpha` and a basis split `U ⊔ W` with `|U| >= 2` such
/// that `alpha` does not act on `U` as a scalar (including the mixing block
/// into `W`), produces `τ` with `det τ = 1`, supported in two coordinates of
/// `U`, whose commutator with `alpha` is not a scalar matrix.
pub fn find_noncommuting_tau(alpha: &MatFq, u_set: &[usize], w_set: &[usize]) -> Result<MatFq> {
    let n = alpha.dim();
    let f = alpha.field();
    if u_set.len() < 2 {
        return Err(Error::Precondition("|U| must be at least 2".into()));
    }
    let mut seen = vec![false; n];
    for &i in u_set.iter().chain(w_set) {
        if i >= n || seen[i] {
            return Err(Error::Precondition(
                "U and W must partition the index set".into(),
            ));
        }
        seen[i] = true;
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::Precondition(
            "U and W must cover the index set".into(),
        ));
    }
    // Scalar-on-U means every column u in U equals λ e_u for a common λ.
    let lambda = alpha.get(u_set[0], u_set[0]);
    let scalar_on_u = u_set.iter().all(|&u| {
        (0..n).all(|r| alpha.get(r, u) == if r == u { lambda } else { 0 })
    });
    if scalar_on_u {
        return Err(Error::Precondition(
            "alpha acts as a scalar on U with no mixing into W".into(),
        ));
    }
    // A column of U witnessing non-scalarity makes a good first coordinate.
    let dirty = u_set
        .iter()
        .copied()
        .find(|&u| (0..n).any(|r| alpha.get(r, u) != if r == u { lambda } else { 0 }));
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    if let Some(u1) = dirty {
        for &u2 in u_set {
            if u2 != u1 {
                pairs.push((u1, u2));
            }
        }
    }
    for &a in u_set {
        for &b in u_set {
            if a != b && !pairs.contains(&(a, b)) {
                pairs.push((a, b));
            }
        }
    }
    let cands = sl2_candidates(f);
    for (u1, u2) in pairs {
        for t in &cands {
            let conj = conj_by_block(alpha, u1, u2, *t);
            if scalar_multiple_of(&conj, alpha).is_none() {
                let mut tau = MatFq::identity(f, n);
                tau.set(u1, u1, t[0][0]);
                tau.set(u1, u2, t[0][1]);
                tau.set(u2, u1, t[1][0]);
                tau.set(u2, u2, t[1][1]);
                debug_assert_eq!(tau.det(), 1);
                return Ok(tau);
            }
        }
    }
    Err(Error::SearchExhausted(
        "no 2-coordinate block witness found".into(),
    ))
}

/// A replayable word over a fixed generator alphabet.
#[derive(Debug)]
pub enum Wit {
    Gen(usize),
    Inv(Arc<Wit>),
    Mul(Arc<Wit>, Arc<Wit>),
}

/// Evaluates a witness word, sharing work across the expression DAG.
pub fn replay(wit: &Arc<Wit>, gens: &[MatFq]) -> MatFq {
    fn go(wit: &Arc<Wit>, gens: &[MatFq], memo: &mut HashMap<usize, MatFq>) -> MatFq {
        let key = Arc::as_ptr(wit) as usize;
        if let Some(m) = memo.get(&key) {
            return m.clone();
        }
        let m = match wit.as_ref() {
            Wit::Gen(i) => gens[*i].clone(),
            Wit::Inv(w) => go(w, gens, memo).inverse().expect("invertible generators"),
            Wit::Mul(a, b) => go(a, gens, memo).mul(&go(b, gens, memo)),
        };
        memo.insert(key, m.clone());
        m
    }
    go(wit, gens, &mut HashMap::new())
}

/// A certified elementary matrix: `replay(wit) = e_{row,col}(val)`.
#[derive(Clone, Debug)]
pub struct ElemFact {
    pub row: usize,
    pub col: usize,
    pub val: u8,
    pub wit: Arc<Wit>,
}

/// `Some((r, c, v))` when the matrix is `e_{r,c}(v)` with `v != 0`.
pub fn elementary_pattern(m: &MatFq) -> Option<(usize, usize, u8)> {
    let n = m.dim();
    let mut hit = None;
    for r in 0..n {
        for c in 0..n {
            let v = m.get(r, c);
            if r == c {
                if v != 1 {
                    return None;
                }
            } else if v != 0 {
                if hit.is_some() {
                    return None;
                }
                hit = Some((r, c, v));
            }
        }
    }
    hit
}

pub struct ClosureResult {
    /// For each position `(row, col)`, the nonzero values obtained together
    /// with their witnesses.
    pub facts: BTreeMap<(usize, usize), BTreeMap<u8, Arc<Wit>>>,
}

impl ClosureResult {
    pub fn positions(&self) -> usize {
        self.facts.len()
    }

    /// True when every off-diagonal position carries every nonzero value.
    pub fn covers_all(&self, n: usize, q: u16) -> bool {
        self.facts.len() == n * (n - 1)
            && self.facts.values().all(|vals| vals.len() == (q - 1) as usize)
    }
}

/// Closure of certified elementary positions under (a) conjugation by the
/// listed generators, (b) the commutator relation `[e_{u,v}(a), e_{v,w}(b)] =
/// e_{u,w}(ab)`, and (c) products at a shared position. Every derived fact is
/// checked against the matrix engine when inserted; witnesses replay to the
/// exact claimed matrices.
pub fn transvection_closure(
    field: Fq,
    n: usize,
    gens: &[MatFq],
    seeds: &[ElemFact],
    conjugator_ids: &[usize],
) -> Result<ClosureResult> {
    let mut facts: BTreeMap<(usize, usize), BTreeMap<u8, Arc<Wit>>> = BTreeMap::new();
    let mut queue: VecDeque<ElemFact> = VecDeque::new();

    let conj_inv: Vec<MatFq> = conjugator_ids
        .iter()
        .map(|&cid| gens[cid].inverse())
        .collect::<Result<_>>()?;

    let push = |fact: ElemFact,
                    facts: &mut BTreeMap<(usize, usize), BTreeMap<u8, Arc<Wit>>>,
                    queue: &mut VecDeque<ElemFact>| {
        if fact.val == 0 || fact.row == fact.col {
            return;
        }
        let entry = facts.entry((fact.row, fact.col)).or_default();
        if !entry.contains_key(&fact.val) {
            entry.insert(fact.val, fact.wit.clone());
            queue.push_back(fact);
        }
    };

    for seed in seeds {
        let expect = MatFq::elementary(field, n, seed.row, seed.col, seed.val)?;
        if replay(&seed.wit, gens) != expect {
            return Err(Error::Precondition(format!(
                "seed witness for ({}, {}) does not replay to the claimed matrix",
                seed.row, seed.col
            )));
        }
        push(seed.clone(), &mut facts, &mut queue);
    }

    while let Some(fact) = queue.pop_front() {
        let e = MatFq::elementary(field, n, fact.row, fact.col, fact.val)?;
        // (a) conjugation by the listed elements
        for (k, &cid) in conjugator_ids.iter().enumerate() {
            let m = gens[cid].mul(&e).mul(&conj_inv[k]);
            if let Some((r, c, v)) = elementary_pattern(&m) {
                let wit = Arc::new(Wit::Mul(
                    Arc::new(Wit::Mul(Arc::new(Wit::Gen(cid)), fact.wit.clone())),
                    Arc::new(Wit::Inv(Arc::new(Wit::Gen(cid)))),
                ));
                push(ElemFact { row: r, col: c, val: v, wit }, &mut facts, &mut queue);
            }
        }
        // (b) commutators with known facts, both orders
        let snapshot: Vec<ElemFact> = facts
            .iter()
            .flat_map(|(&(r, c), vals)| {
                vals.iter().map(move |(&v, w)| ElemFact {
                    row: r,
                    col: c,
                    val: v,
                    wit: w.clone(),
                })
            })
            .collect();
        for other in &snapshot {
            if fact.col == other.row && fact.row != other.col {
                let v = field.mul(fact.val, other.val);
                let wit = commutator_wit(&fact.wit, &other.wit);
                push(
                    ElemFact { row: fact.row, col: other.col, val: v, wit },
                    &mut facts,
                    &mut queue,
                );
            }
            if other.col == fact.row && other.row != fact.col {
                let v = field.mul(other.val, fact.val);
                let wit = commutator_wit(&other.wit, &fact.wit);
                push(
                    ElemFact { row: other.row, col: fact.col, val: v, wit },
                    &mut facts,
                    &mut queue,
                );
            }
            // (c) sums at a shared position
            if other.row == fact.row && other.col == fact.col {
                let v = field.add(fact.val, other.val);
                if v != 0 {
                    let wit = Arc::new(Wit::Mul(fact.wit.clone(), other.wit.clone()));
                    push(
                        ElemFact { row: fact.row, col: fact.col, val: v, wit },
                        &mut facts,
                        &mut queue,
                    );
                }
            }
        }
    }
    Ok(ClosureResult { facts })
}

fn commutator_wit(a: &Arc<Wit>, b: &Arc<Wit>) -> Arc<Wit> {
    Arc::new(Wit::Mul(
        Arc::new(Wit::Mul(a.clone(), b.clone())),
        Arc::new(Wit::Mul(
            Arc::new(Wit::Inv(a.clone())),
            Arc::new(Wit::Inv(b.clone())),
        )),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_invertible(rng: &mut impl Rng, f: Fq, n: usize) -> MatFq {
        loop {
            let mut m = MatFq::zero(f, n);
            for r in 0..n {
                for c in 0..n {
                    m.set(r, c, rng.gen_range(0..f.q()) as u8);
                }
            }
            if m.det() != 0 {
                return m;
            }
        }
    }

    #[test]
    fn tau_witness_on_seeded_instances() {
        // 100 seeded instances for each q in {2,3,5}, dimensions 4..=6.
        for q in [2u16, 3, 5] {
            let f = Fq::new(q).unwrap();
            let mut rng = crate::util::substream(901, &format!("tau-{q}"));
            let mut found = 0;
            while found < 100 {
                let n = rng.gen_range(4..=6);
                let k = rng.gen_range(2..=n - 1);
                let u_set: Vec<usize> = (0..k).collect();
                let w_set: Vec<usize> = (k..n).collect();
                let alpha = random_invertible(&mut rng, f, n);
                let lambda = alpha.get(0, 0);
                let scalar_on_u = u_set
                    .iter()
                    .all(|&u| (0..n).all(|r| alpha.get(r, u) == if r == u { lambda } else { 0 }));
                if scalar_on_u {
                    continue;
                }
                found += 1;
                let tau = find_noncommuting_tau(&alpha, &u_set, &w_set).unwrap();
                assert_eq!(tau.det(), 1);
                assert!(tau.supported_in(&u_set));
                let comm = alpha
                    .mul(&tau)
                    .mul(&alpha.inverse().unwrap())
                    .mul(&tau.inverse().unwrap());
                assert!(comm.is_scalar().is_none());
            }
        }
    }

    #[test]
    fn tau_rejects_scalar_restriction() {
        let f = Fq::new(3).unwrap();
        let id = MatFq::identity(f, 4);
        assert!(matches!(
            find_noncommuting_tau(&id, &[0, 1], &[2, 3]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn tau_handles_rank_branches_over_f2() {
        // alpha with identity on U but a nonzero mixing block C forces the
        // rank-1 or rank-2 branch of the construction.
        let f = Fq::new(2).unwrap();
        let mut alpha = MatFq::identity(f, 4);
        alpha.set(2, 0, 1); // C has rank 1: column u=0 mixes into w=2
        assert_eq!(alpha.det(), 1);
        let tau = find_noncommuting_tau(&alpha, &[0, 1], &[2, 3]).unwrap();
        let comm = alpha
            .mul(&tau)
            .mul(&alpha.inverse().unwrap())
            .mul(&tau.inverse().unwrap());
        assert!(comm.is_scalar().is_none());

        let mut alpha2 = MatFq::identity(f, 4);
        alpha2.set(2, 0, 1);
        alpha2.set(3, 1, 1); // rank 2 mixing
        let tau2 = find_noncommuting_tau(&alpha2, &[0, 1], &[2, 3]).unwrap();
        let comm2 = alpha2
            .mul(&tau2)
            .mul(&alpha2.inverse().unwrap())
            .mul(&tau2.inverse().unwrap());
        assert!(comm2.is_scalar().is_none());
    }

    #[test]
    fn closure_fixed_points() {
        let f = Fq::new(2).unwrap();
        let n = 3;
        // Seed every position: closure is a fixed point.
        let mut gens = Vec::new();
        let mut seeds = Vec::new();
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    gens.push(MatFq::elementary(f, n, r, c, 1).unwrap());
                    seeds.push(ElemFact {
                        row: r,
                        col: c,
                        val: 1,
                        wit: Arc::new(Wit::Gen(gens.len() - 1)),
                    });
                }
            }
        }
        let res = transvection_closure(f, n, &gens, &seeds, &[]).unwrap();
        assert_eq!(res.positions(), n * (n - 1));
        assert!(res.covers_all(n, 2));

        // A single seed with no composable pairs stays alone.
        let gens = vec![MatFq::elementary(f, n, 0, 1, 1).unwrap()];
        let seeds = vec![ElemFact {
            row: 0,
            col: 1,
            val: 1,
            wit: Arc::new(Wit::Gen(0)),
        }];
        let res = transvection_closure(f, n, &gens, &seeds, &[]).unwrap();
        assert_eq!(res.positions(), 1);
    }

    #[test]
    fn closure_witnesses_replay_exactly() {
        let f = Fq::new(3).unwrap();
        let n = 4;
        // One seeded position plus adjacent coordinate swaps as conjugators.
        let gens = vec![
            MatFq::elementary(f, n, 0, 1, 1).unwrap(),
            MatFq::signed_perm(f, n, 0, 1).unwrap(),
            MatFq::signed_perm(f, n, 1, 2).unwrap(),
            MatFq::signed_perm(f, n, 2, 3).unwrap(),
        ];
        let seeds = vec![ElemFact {
            row: 0,
            col: 1,
            val: 1,
            wit: Arc::new(Wit::Gen(0)),
        }];
        let res = transvection_closure(f, n, &gens, &seeds, &[1, 2, 3]).unwrap();
        assert!(res.covers_all(n, 3), "got {} positions", res.positions());
        for (&(r, c), vals) in &res.facts {
            for (&v, wit) in vals {
                let expect = MatFq::elementary(f, n, r, c, v).unwrap();
                assert_eq!(replay(wit, &gens), expect);
            }
        }
    }
}
