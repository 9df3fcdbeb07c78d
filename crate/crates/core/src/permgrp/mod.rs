//! Exact permutation group computation: base/strong-generating-set chains,
//! alternating-group recognition, normal closures, and transitivity tests.
//!
//! Orders of the groups met here range from tiny to factorials of thousands,
//! so [`bsgs`] certifies a group through one of three exact routes before
//! falling back to a full chain:
//!
//! * a Schreier–Sims chain (any group, moderate degree);
//! * a one-cycle Jordan certificate: a transitive group of even permutations
//!   containing a prime cycle of length `p` with `degree/2 < p <= degree-3`
//!   is the full alternating group;
//! * an orbit split into components that are each certified alternating of
//!   pairwise distinct sizes `>= 5`; a subdirect product of pairwise
//!   non-isomorphic non-abelian simple groups with onto projections is the
//!   whole product.

mod chain;
mod perm;

pub use chain::StabChain;
pub use perm::{random_even, Parity, Perm};

use crate::util::{alt_order, is_prime, lcm, substream};
use crate::{Error, Result};
use num_bigint::BigUint;
use rand::Rng;

pub const DEGREE_CAP: usize = 30_000;

/// Even generators of Alt(n): a 3-cycle plus a long even cycle.
pub fn alt_generators(n: usize) -> Vec<Perm> {
    match n {
        0 | 1 | 2 => vec![],
        3 => vec![Perm::from_cycles(3, &[vec![0, 1, 2]]).unwrap()],
        _ => {
            let three = Perm::from_cycles(n, &[vec![0, 1, 2]]).unwrap();
            let long = if n % 2 == 1 {
                Perm::from_cycles(n, &[(0..n).collect()]).unwrap()
            } else {
                Perm::from_cycles(n, &[(1..n).collect()]).unwrap()
            };
            vec![three, long]
        }
    }
}

/// Search budget for the Jordan p-cycle certificate.
#[derive(Clone, Copy, Debug)]
pub struct JordanBudget {
    pub words: usize,
    pub max_len: usize,
}

impl Default for JordanBudget {
    fn default() -> Self {
        JordanBudget {
            words: 200,
            max_len: 8,
        }
    }
}

fn common_degree(gens: &[Perm]) -> Result<usize> {
    let mut degree = None;
    for g in gens {
        match degree {
            None => degree = Some(g.degree()),
            Some(d) if d != g.degree() => {
                return Err(Error::DegreeMismatch {
                    left: d,
                    right: g.degree(),
                })
            }
            _ => {}
        }
    }
    degree.ok_or_else(|| Error::Precondition("empty generator list".into()))
}

/// Orbits of the generated group on `[0, degree)`, restricted to moved
/// points, each orbit sorted, orbits ordered by smallest point.
pub fn moved_orbits(gens: &[Perm], degree: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; degree];
    let mut orbits = Vec::new();
    for start in 0..degree {
        if seen[start] {
            continue;
        }
        if gens.iter().all(|g| g.apply(start) == start) {
            seen[start] = true;
            continue;
        }
        let mut orbit = vec![start];
        seen[start] = true;
        let mut head = 0;
        while head < orbit.len() {
            let p = orbit[head];
            head += 1;
            for g in gens {
                let q = g.apply(p);
                if !seen[q] {
                    seen[q] = true;
                    orbit.push(q);
                }
            }
        }
        orbit.sort_unstable();
        orbits.push(orbit);
    }
    orbits
}

fn restrict_to_orbit(gens: &[Perm], orbit: &[usize]) -> Vec<Perm> {
    let mut pos = std::collections::HashMap::new();
    for (i, &p) in orbit.iter().enumerate() {
        pos.insert(p, i);
    }
    gens.iter()
        .map(|g| {
            let img = orbit
                .iter()
                .map(|&p| pos[&g.apply(p)] as u32)
                .collect::<Vec<_>>();
            Perm::from_images(img).expect("orbit is invariant")
        })
        .collect()
}

/// True when `gens` act transitively on all of `[0, degree)`.
pub fn is_transitive(gens: &[Perm], degree: usize) -> bool {
    if degree == 0 {
        return true;
    }
    let orbits = moved_orbits(gens, degree);
    orbits.len() == 1 && orbits[0].len() == degree
}

/// Looks for an element of `⟨gens⟩` with a cycle of prime length `p`,
/// `degree/2 < p <= degree - 3`; its power by the lcm of the other cycle
/// lengths is then a p-cycle. Returns the certified p-cycle.
fn find_prime_cycle(gens: &[Perm], degree: usize, budget: JordanBudget) -> Option<(u64, Perm)> {
    let window = |l: u64| 2 * l > degree as u64 && l + 3 <= degree as u64 && is_prime(l);
    let try_elem = |g: &Perm| -> Option<(u64, Perm)> {
        let lengths = g.cycle_lengths();
        for &l in &lengths {
            let l = l as u64;
            if window(l) {
                let m = lengths
                    .iter()
                    .filter(|&&k| k as u64 != l)
                    .fold(1u64, |acc, &k| lcm(acc, k as u64));
                let c = g.pow(m);
                if c.moved_count() == l as usize && c.cycle_lengths() == vec![l as usize] {
                    return Some((l, c));
                }
            }
        }
        None
    };
    for g in gens {
        if let Some(hit) = try_elem(g) {
            return Some(hit);
        }
    }
    let mut rng = substream(0x4A0D, "jordan-p-cycle");
    for _ in 0..budget.words {
        let len = rng.gen_range(2..=budget.max_len.max(2));
        let mut w = Perm::identity(degree);
        for _ in 0..len {
            let k = rng.gen_range(0..gens.len());
            w = w.mul(&gens[k]);
        }
        if let Some(hit) = try_elem(&w) {
            return Some(hit);
        }
    }
    None
}

/// Certifies `⟨gens⟩ = Alt(degree)` by transitivity plus a prime-cycle
/// witness. `false` means the search was inconclusive, not a refutation.
pub fn jordan_alt_test(gens: &[Perm], budget: JordanBudget) -> Result<bool> {
    let degree = common_degree(gens)?;
    for g in gens {
        if !g.is_even() {
            return Err(Error::Precondition("odd generator present".into()));
        }
    }
    if degree < 8 || !is_transitive(gens, degree) {
        return Ok(false);
    }
    Ok(find_prime_cycle(gens, degree, budget).is_some())
}

enum Backend {
    Trivial,
    Chain(Box<StabChain>),
    /// Certified: the group is the direct product of the full alternating
    /// groups on these orbits (orbit sizes pairwise distinct, all >= 5, or a
    /// single orbit).
    AltComponents(Vec<Vec<usize>>),
}

/// A permutation group with an exact order and membership test.
pub struct PermGroup {
    degree: usize,
    gens: Vec<Perm>,
    order: BigUint,
    backend: Backend,
    method: &'static str,
}

impl PermGroup {
    pub fn trivial(degree: usize) -> Self {
        PermGroup {
            degree,
            gens: vec![],
            order: BigUint::from(1u32),
            backend: Backend::Trivial,
            method: "trivial",
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Perm] {
        &self.gens
    }

    pub fn order(&self) -> &BigUint {
        &self.order
    }

    /// Which exact certification route produced the order.
    pub fn method(&self) -> &'static str {
        self.method
    }

    pub fn base(&self) -> Vec<usize> {
        match &self.backend {
            Backend::Chain(c) => c.base().to_vec(),
            _ => vec![],
        }
    }

    pub fn strong_generators(&self) -> Vec<Perm> {
        match &self.backend {
            Backend::Chain(c) => c.strong_generators().to_vec(),
            _ => self.gens.clone(),
        }
    }

    pub fn contains(&self, g: &Perm) -> Result<bool> {
        if g.degree() != self.degree {
            return Err(Error::DegreeMismatch {
                left: g.degree(),
                right: self.degree,
            });
        }
        Ok(match &self.backend {
            Backend::Trivial => g.is_identity(),
            Backend::Chain(c) => c.contains(g),
            Backend::AltComponents(orbits) => {
                let mut orbit_of = vec![usize::MAX; self.degree];
                for (k, orbit) in orbits.iter().enumerate() {
                    for &p in orbit {
                        orbit_of[p] = k;
                    }
                }
                let mut ok = true;
                for p in 0..self.degree {
                    let q = g.apply(p);
                    if q != p && (orbit_of[p] == usize::MAX || orbit_of[p] != orbit_of[q]) {
                        ok = false;
                        break;
                    }
                }
                ok && orbits.iter().all(|orbit| {
                    restrict_to_orbit(std::slice::from_ref(g), orbit)[0].is_even()
                })
            }
        })
    }

    pub fn is_transitive(&self) -> bool {
        is_transitive(&self.gens, self.degree)
    }

    /// Orbit counting on ordered k-tuples of distinct points.
    pub fn is_k_transitive(&self, k: usize) -> Result<bool> {
        if self.degree < k {
            return Err(Error::DegreeMismatch {
                left: self.degree,
                right: k,
            });
        }
        if k == 0 {
            return Ok(true);
        }
        if let Backend::AltComponents(orbits) = &self.backend {
            if orbits.len() == 1 && orbits[0].len() == self.degree {
                // Alt(n) is (n-2)-transitive.
                return Ok(k + 2 <= self.degree);
            }
        }
        if !self.is_transitive() {
            return Ok(false);
        }
        let mut target = BigUint::from(1u32);
        for i in 0..k {
            target *= BigUint::from(self.degree - i);
        }
        let cap = BigUint::from(4_000_000u64);
        if target > cap {
            return Err(Error::BudgetExceeded(format!(
                "{}-tuple orbit of degree {} too large to enumerate",
                k, self.degree
            )));
        }
        let start: Vec<u32> = (0..k as u32).collect();
        let mut seen = std::collections::HashSet::new();
        let mut queue = std::collections::VecDeque::new();
        seen.insert(start.clone());
        queue.push_back(start);
        while let Some(tuple) = queue.pop_front() {
            for g in &self.gens {
                let image: Vec<u32> = tuple.iter().map(|&p| g.apply(p as usize) as u32).collect();
                if !seen.contains(&image) {
                    seen.insert(image.clone());
                    queue.push_back(image);
                }
            }
        }
        Ok(BigUint::from(seen.len()) == target)
    }

    /// Seeded random subproduct of the strong generators.
    pub fn random_element(&self, rng: &mut impl Rng) -> Perm {
        let gens = self.strong_generators();
        if gens.is_empty() {
            return Perm::identity(self.degree);
        }
        let mut out = Perm::identity(self.degree);
        for _ in 0..2 {
            for g in &gens {
                if rng.gen_bool(0.5) {
                    out = out.mul(g);
                }
            }
        }
        out
    }
}

fn dedup_nontrivial(gens: &[Perm]) -> Vec<Perm> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for g in gens {
        if !g.is_identity() && seen.insert(g.images().to_vec()) {
            out.push(g.clone());
        }
    }
    out
}

/// Certifies that the restriction generates the full alternating group on
/// the orbit: small degrees by a chain, large ones by the Jordan witness.
fn certify_alt_on(restricted: &[Perm], size: usize, budget: JordanBudget) -> bool {
    if restricted.iter().any(|g| !g.is_even()) {
        return false;
    }
    if size <= 60 {
        StabChain::build(restricted.to_vec()).order() == alt_order(size)
    } else {
        matches!(jordan_alt_test(restricted, budget), Ok(true))
    }
}

/// Attempts the alternating-components certificate; `None` means no fast
/// certificate, not a refutation.
fn certify_components(gens: &[Perm], degree: usize, budget: JordanBudget) -> Option<PermGroup> {
    let orbits = moved_orbits(gens, degree);
    if orbits.is_empty() {
        return Some(PermGroup::trivial(degree));
    }
    let mut sizes: Vec<usize> = orbits.iter().map(|o| o.len()).collect();
    if orbits.len() > 1 {
        sizes.sort_unstable();
        if sizes.windows(2).any(|w| w[0] == w[1]) || sizes[0] < 5 {
            return None;
        }
    }
    for orbit in &orbits {
        let restricted = restrict_to_orbit(gens, orbit);
        if !certify_alt_on(&restricted, orbit.len(), budget) {
            return None;
        }
    }
    let order = orbits
        .iter()
        .map(|o| alt_order(o.len()))
        .product::<BigUint>();
    Some(PermGroup {
        degree,
        gens: gens.to_vec(),
        order,
        backend: Backend::AltComponents(orbits),
        method: "alt-components",
    })
}

/// Base and strong generating set with exact order. Deterministic for a
/// fixed generator list.
pub fn bsgs(generators: &[Perm]) -> Result<PermGroup> {
    bsgs_with(generators, JordanBudget::default())
}

pub fn bsgs_with(generators: &[Perm], budget: JordanBudget) -> Result<PermGroup> {
    let degree = common_degree(generators)?;
    if degree > DEGREE_CAP {
        return Err(Error::BudgetExceeded(format!(
            "degree {} exceeds cap {}",
            degree, DEGREE_CAP
        )));
    }
    let gens = dedup_nontrivial(generators);
    if gens.is_empty() {
        return Ok(PermGroup::trivial(degree));
    }
    if let Some(group) = certify_components(&gens, degree, budget) {
        return Ok(group);
    }
    let chain = StabChain::build(gens.clone());
    let order = chain.order();
    Ok(PermGroup {
        degree,
        gens,
        order,
        backend: Backend::Chain(Box::new(chain)),
        method: "schreier-sims",
    })
}

/// Chain-only variant, used by tests as the independent route.
pub fn bsgs_chain(generators: &[Perm]) -> Result<PermGroup> {
    let degree = common_degree(generators)?;
    let gens = dedup_nontrivial(generators);
    if gens.is_empty() {
        return Ok(PermGroup::trivial(degree));
    }
    let chain = StabChain::build(gens.clone());
    let order = chain.order();
    Ok(PermGroup {
        degree,
        gens,
        order,
        backend: Backend::Chain(Box::new(chain)),
        method: "schreier-sims",
    })
}

/// Smallest group containing `h_gens` that is closed under conjugation by
/// `⟨g_gens⟩`, realized by iterated conjugation with membership pruning.
pub fn normal_closure(h_gens: &[Perm], g_gens: &[Perm]) -> Result<PermGroup> {
    normal_closure_with(h_gens, g_gens, JordanBudget::default())
}

pub fn normal_closure_with(
    h_gens: &[Perm],
    g_gens: &[Perm],
    budget: JordanBudget,
) -> Result<PermGroup> {
    let degree = if h_gens.is_empty() && g_gens.is_empty() {
        return Err(Error::Precondition("empty generator list".into()));
    } else {
        common_degree(&[h_gens, g_gens].concat())?
    };
    let mut pool = dedup_nontrivial(h_gens);
    if pool.is_empty() {
        return Ok(PermGroup::trivial(degree));
    }
    let mut seen: std::collections::HashSet<Vec<u32>> =
        pool.iter().map(|g| g.images().to_vec()).collect();
    const MAX_ROUNDS: usize = 32;
    const POOL_CAP: usize = 768;
    for _ in 0..MAX_ROUNDS {
        if let Some(group) = certify_components(&pool, degree, budget) {
            let closed = g_gens.iter().all(|g| {
                pool.iter()
                    .all(|c| group.contains(&c.conj(g)).unwrap_or(false))
            });
            if closed {
                return Ok(group);
            }
        }
        let mut added = false;
        let snapshot = pool.clone();
        for g in g_gens {
            for c in &snapshot {
                let conj = c.conj(g);
                if !conj.is_identity() && seen.insert(conj.images().to_vec()) {
                    pool.push(conj);
                    added = true;
                }
            }
        }
        if !added || pool.len() > POOL_CAP {
            break;
        }
    }
    // Exact fallback: grow a chain until conjugation-closed.
    let mut group = bsgs_with(&pool, budget)?;
    loop {
        let mut added = false;
        let snapshot = pool.clone();
        for g in g_gens {
            for c in &snapshot {
                let conj = c.conj(g);
                if !group.contains(&conj)? {
                    pool.push(conj);
                    added = true;
                }
            }
        }
        if !added {
            return Ok(group);
        }
        group = bsgs_with(&pool, budget)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force enumeration of a finite group from generators.
    pub(crate) fn enumerate_group(gens: &[Perm], cap: usize) -> Vec<Perm> {
        let degree = gens[0].degree();
        let mut seen = std::collections::HashSet::new();
        let mut out = vec![Perm::identity(degree)];
        seen.insert(out[0].images().to_vec());
        let mut head = 0;
        while head < out.len() {
            let cur = out[head].clone();
            head += 1;
            for g in gens {
                let next = cur.mul(g);
                if seen.insert(next.images().to_vec()) {
                    out.push(next);
                }
            }
            assert!(out.len() <= cap, "enumeration exceeded cap");
        }
        out
    }

    #[test]
    fn bsgs_order_matches_enumeration_on_small_corpus() {
        let corpus: Vec<Vec<Perm>> = vec![
            alt_generators(5),
            alt_generators(6),
            vec![
                Perm::from_cycles(7, &[vec![0, 1, 2, 3, 4, 5, 6]]).unwrap(),
                Perm::from_cycles(7, &[vec![1, 2, 4]]).unwrap(),
            ],
            vec![
                Perm::from_cycles(7, &[vec![0, 1]]).unwrap(),
                Perm::from_cycles(7, &[vec![0, 1, 2, 3, 4, 5, 6]]).unwrap(),
            ],
            vec![
                // dihedral on 12 points
                Perm::from_cycles(12, &[(0..12).collect()]).unwrap(),
                Perm::from_images((0..12u32).map(|i| (12 - i) % 12).collect()).unwrap(),
            ],
            vec![
                // intransitive mixed example
                Perm::from_cycles(9, &[vec![0, 1, 2]]).unwrap(),
                Perm::from_cycles(9, &[vec![3, 4], vec![5, 6]]).unwrap(),
            ],
        ];
        for gens in corpus {
            let brute = enumerate_group(&gens, 10_000).len();
            let group = bsgs(&gens).unwrap();
            assert_eq!(group.order(), &BigUint::from(brute));
        }
    }

    #[test]
    fn membership_agrees_with_naive_closure() {
        let gens = vec![
            Perm::from_cycles(6, &[vec![0, 1, 2]]).unwrap(),
            Perm::from_cycles(6, &[vec![2, 3, 4]]).unwrap(),
        ];
        let group = bsgs(&gens).unwrap();
        let all = enumerate_group(&gens, 5_000);
        let member: std::collections::HashSet<Vec<u32>> =
            all.iter().map(|g| g.images().to_vec()).collect();
        let mut rng = substream(11, "membership");
        for _ in 0..200 {
            let candidate = random_even(&mut rng, 6);
            assert_eq!(
                group.contains(&candidate).unwrap(),
                member.contains(candidate.images())
            );
        }
    }

    #[test]
    fn bsgs_alt25_order_is_factorial_over_two() {
        let group = bsgs(&alt_generators(25)).unwrap();
        assert_eq!(group.order(), &alt_order(25));
    }

    #[test]
    fn jordan_accepts_witnessed_alternating_groups() {
        // Two 13-cycles on 25 points generating a transitive group.
        let c1 = Perm::from_cycles(25, &[(0..13).collect()]).unwrap();
        let c2 = Perm::from_cycles(25, &[(12..25).collect()]).unwrap();
        assert!(jordan_alt_test(&[c1.clone(), c2], JordanBudget::default()).unwrap());
        // A single 3-cycle is not transitive.
        let three = Perm::from_cycles(25, &[vec![0, 1, 2]]).unwrap();
        assert!(!jordan_alt_test(&[three], JordanBudget::default()).unwrap());
        // Odd generators are rejected.
        let odd = Perm::from_cycles(25, &[vec![0, 1]]).unwrap();
        assert!(jordan_alt_test(&[c1, odd], JordanBudget::default()).is_err());
    }

    #[test]
    fn jordan_budget_failure_falls_back_to_chain_order() {
        // Alt(9) has window (4.5, 6]: p = 5. Generators without any useful
        // cycle may exhaust a tiny budget; bsgs still certifies by chain.
        let gens = alt_generators(9);
        let group = bsgs(&gens).unwrap();
        assert_eq!(group.order(), &alt_order(9));
    }

    #[test]
    fn normal_closure_trivial_and_invariance() {
        let g_gens = alt_generators(7);
        let trivial = normal_closure(&[Perm::identity(7)], &g_gens).unwrap();
        assert_eq!(trivial.order(), &BigUint::from(1u32));

        let h = vec![Perm::from_cycles(7, &[vec![0, 1, 2]]).unwrap()];
        let closure = normal_closure(&h, &g_gens).unwrap();
        assert_eq!(closure.order(), &alt_order(7));
        for g in &g_gens {
            for c in closure.generators() {
                assert!(closure.contains(&c.conj(g)).unwrap());
            }
        }
    }

    #[test]
    fn k_transitivity() {
        let alt5 = bsgs(&alt_generators(5)).unwrap();
        assert!(alt5.is_k_transitive(3).unwrap());
        let intransitive = bsgs(&[Perm::from_cycles(6, &[vec![0, 1, 2]]).unwrap()]).unwrap();
        assert!(!intransitive.is_k_transitive(1).unwrap());
        assert!(alt5.is_k_transitive(6).is_err());
    }

    #[test]
    fn alt_components_product_certificate() {
        // Alt(5) x Alt(25) acting on 30 points, distinct component sizes.
        let mut gens = Vec::new();
        for g in alt_generators(5) {
            let mut img: Vec<u32> = (0..30).collect();
            for p in 0..5 {
                img[p] = g.apply(p) as u32;
            }
            gens.push(Perm::from_images(img).unwrap());
        }
        for g in alt_generators(25) {
            let mut img: Vec<u32> = (0..30).collect();
            for p in 0..25 {
                img[p + 5] = (g.apply(p) + 5) as u32;
            }
            gens.push(Perm::from_images(img).unwrap());
        }
        let group = bsgs(&gens).unwrap();
        assert_eq!(group.order(), &(alt_order(5) * alt_order(25)));
        // Membership: even on each component is in; a cross-orbit swap is not.
        let in_g = gens[0].mul(&gens[2]);
        assert!(group.contains(&in_g).unwrap());
        let mut img: Vec<u32> = (0..30).collect();
        img[0] = 5;
        img[5] = 0;
        img[1] = 2;
        img[2] = 1;
        let crossing = Perm::from_images(img).unwrap();
        assert!(!group.contains(&crossing).unwrap());
    }

    #[test]
    fn random_subproducts_land_in_group() {
        let group = bsgs(&alt_generators(8)).unwrap();
        let mut rng = substream(5, "subproducts");
        for _ in 0..50 {
            let g = group.random_element(&mut rng);
            assert!(group.contains(&g).unwrap());
        }
    }
}
