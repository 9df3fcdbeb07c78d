//! Permutations on an indexed point set.

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// A permutation of `[0, degree)`, stored as the image table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Perm {
    img: Vec<u32>,
}

impl Perm {
    pub fn identity(degree: usize) -> Self {
        Perm {
            img: (0..degree as u32).collect(),
        }
    }

    pub fn from_images(img: Vec<u32>) -> Result<Self> {
        let n = img.len();
        let mut seen = vec![false; n];
        for &x in &img {
            let x = x as usize;
            if x >= n || seen[x] {
                return Err(Error::Precondition(
                    "image table is not a bijection".into(),
                ));
            }
            seen[x] = true;
        }
        Ok(Perm { img })
    }

    /// Builds a product of cycles on `[0, degree)`. Cycles must be disjoint.
    pub fn from_cycles(degree: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut img: Vec<u32> = (0..degree as u32).collect();
        let mut touched = vec![false; degree];
        for cycle in cycles {
            for w in cycle.windows(2) {
                img[w[0]] = w[1] as u32;
            }
            if let (Some(&first), Some(&last)) = (cycle.first(), cycle.last()) {
                if cycle.len() > 1 {
                    img[last] = first as u32;
                }
            }
            for &p in cycle {
                if p >= degree {
                    return Err(Error::Precondition(format!(
                        "cycle point {p} exceeds degree {degree}"
                    )));
                }
                if touched[p] {
                    return Err(Error::Precondition("cycles are not disjoint".into()));
                }
                touched[p] = true;
            }
        }
        Perm::from_images(img)
    }

    pub fn degree(&self) -> usize {
        self.img.len()
    }

    #[inline]
    pub fn apply(&self, point: usize) -> usize {
        self.img[point] as usize
    }

    pub fn images(&self) -> &[u32] {
        &self.img
    }

    pub fn is_identity(&self) -> bool {
        self.img.iter().enumerate().all(|(i, &x)| i as u32 == x)
    }

    /// Function composition: `(a * b)(x) = a(b(x))`.
    pub fn mul(&self, rhs: &Perm) -> Perm {
        debug_assert_eq!(self.degree(), rhs.degree());
        let img = rhs.img.iter().map(|&x| self.img[x as usize]).collect();
        Perm { img }
    }

    pub fn inverse(&self) -> Perm {
        let mut img = vec![0u32; self.img.len()];
        for (i, &x) in self.img.iter().enumerate() {
            img[x as usize] = i as u32;
        }
        Perm { img }
    }

    /// `self^h = h^{-1} self h`.
    pub fn conj(&self, h: &Perm) -> Perm {
        h.inverse().mul(self).mul(h)
    }

    /// `[a, b] = a b a^{-1} b^{-1}`.
    pub fn commutator(a: &Perm, b: &Perm) -> Perm {
        a.mul(b).mul(&a.inverse()).mul(&b.inverse())
    }

    pub fn pow(&self, mut e: u64) -> Perm {
        let mut base = self.clone();
        let mut acc = Perm::identity(self.degree());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn parity(&self) -> Parity {
        let mut seen = vec![false; self.img.len()];
        let mut transpositions = 0usize;
        for start in 0..self.img.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0usize;
            let mut p = start;
            while !seen[p] {
                seen[p] = true;
                p = self.img[p] as usize;
                len += 1;
            }
            transpositions += len - 1;
        }
        if transpositions % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn is_even(&self) -> bool {
        self.parity() == Parity::Even
    }

    /// Points moved by the permutation.
    pub fn support(&self) -> Vec<usize> {
        self.img
            .iter()
            .enumerate()
            .filter(|&(i, &x)| i as u32 != x)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn moved_count(&self) -> usize {
        self.img
            .iter()
            .enumerate()
            .filter(|&(i, &x)| i as u32 != x)
            .count()
    }

    pub fn smallest_moved_point(&self) -> Option<usize> {
        self.img
            .iter()
            .enumerate()
            .find(|&(i, &x)| i as u32 != x)
            .map(|(i, _)| i)
    }

    /// Nontrivial cycles, each starting at its smallest point, sorted.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.img.len()];
        let mut out = Vec::new();
        for start in 0..self.img.len() {
            if seen[start] || self.img[start] as usize == start {
                seen[start] = true;
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut p = self.img[start] as usize;
            while p != start {
                seen[p] = true;
                cycle.push(p);
                p = self.img[p] as usize;
            }
            out.push(cycle);
        }
        out
    }

    pub fn cycle_lengths(&self) -> Vec<usize> {
        self.cycles().iter().map(|c| c.len()).collect()
    }

    /// Order as the lcm of cycle lengths.
    pub fn order(&self) -> u64 {
        self.cycle_lengths()
            .into_iter()
            .fold(1u64, |acc, l| crate::util::lcm(acc, l as u64))
    }

    /// Cycle notation with a caller-supplied point namer.
    pub fn cycles_string_with(&self, namer: &dyn Fn(usize) -> String) -> String {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return "()".to_string();
        }
        let mut s = String::new();
        for cycle in cycles {
            s.push('(');
            for (k, p) in cycle.iter().enumerate() {
                if k > 0 {
                    s.push(' ');
                }
                s.push_str(&namer(*p));
            }
            s.push(')');
        }
        s
    }
}

impl std::fmt::Debug for Perm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Perm{}",
            self.cycles_string_with(&|p| p.to_string())
        )
    }
}

impl std::fmt::Display for Perm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.cycles_string_with(&|p| p.to_string()))
    }
}

/// A uniformly random even permutation: random shuffle, fixed up by a swap
/// when the shuffle came out odd.
pub fn random_even(rng: &mut impl rand::Rng, degree: usize) -> Perm {
    let mut img: Vec<u32> = (0..degree as u32).collect();
    for i in (1..degree).rev() {
        let j = rng.gen_range(0..=i);
        img.swap(i, j);
    }
    let mut p = Perm { img };
    if !p.is_even() && degree >= 2 {
        p.img.swap(0, 1);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_with_inverse_gives_identity() {
        let p = Perm::from_cycles(6, &[vec![0, 3, 4], vec![1, 5]]).unwrap();
        assert!(p.mul(&p.inverse()).is_identity());
        assert!(p.inverse().mul(&p).is_identity());
    }

    #[test]
    fn three_cycles_are_even() {
        let p = Perm::from_cycles(5, &[vec![0, 1, 2]]).unwrap();
        assert_eq!(p.parity(), Parity::Even);
        let t = Perm::from_cycles(5, &[vec![0, 1]]).unwrap();
        assert_eq!(t.parity(), Parity::Odd);
    }

    #[test]
    fn parity_is_multiplicative() {
        let mut rng = crate::util::substream(3, "parity");
        for _ in 0..1000 {
            let a = random_even(&mut rng, 9);
            let t = Perm::from_cycles(9, &[vec![2, 7]]).unwrap();
            let b = if rand::Rng::gen_bool(&mut rng, 0.5) {
                a.mul(&t)
            } else {
                random_even(&mut rng, 9)
            };
            let lhs = a.mul(&b).parity();
            let rhs = match (a.parity(), b.parity()) {
                (Parity::Even, Parity::Even) | (Parity::Odd, Parity::Odd) => Parity::Even,
                _ => Parity::Odd,
            };
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn identity_has_empty_support() {
        assert!(Perm::identity(7).support().is_empty());
    }

    #[test]
    fn order_and_cycles() {
        let p = Perm::from_cycles(10, &[vec![0, 1, 2], vec![3, 4]]).unwrap();
        assert_eq!(p.order(), 6);
        assert_eq!(p.cycle_lengths(), vec![3, 2]);
        assert!(p.pow(6).is_identity());
        assert!(!p.pow(3).is_identity());
    }
}
