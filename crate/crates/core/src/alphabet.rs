//! Index sets of words over finite alphabets, lexicographic enumeration,
//! and symbolic cylinder sets with decidable disjointness.
//!
//! Words of length `ℓ` over an alphabet of size `d` are enumerated
//! lexicographically with the first letter most significant, so the rank of a
//! word doubles as the point index used by the permutation and matrix
//! engines. Coordinates may have different alphabet sizes (the embedding
//! telescope mixes a six-element first coordinate with group-sized ones), so
//! the shape of a level is a vector of sizes.

use crate::{Error, Result};

/// Per-coordinate alphabet sizes for words of a fixed length.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WordShape {
    sizes: Vec<u32>,
}

impl WordShape {
    pub fn new(sizes: Vec<u32>) -> Self {
        assert!(sizes.iter().all(|&s| s >= 1), "coordinate sizes must be >= 1");
        WordShape { sizes }
    }

    pub fn uniform(d: u32, level: usize) -> Self {
        WordShape::new(vec![d; level])
    }

    pub fn level(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn size(&self, coord: usize) -> u32 {
        self.sizes[coord]
    }

    /// Total number of words of this shape.
    pub fn count(&self) -> usize {
        let mut acc: u128 = 1;
        for &s in &self.sizes {
            acc *= s as u128;
            assert!(acc <= usize::MAX as u128, "word space too large");
        }
        acc as usize
    }

    /// Lexicographic rank of a word given by 0-based letters.
    pub fn index_of(&self, letters: &[u32]) -> Result<usize> {
        if letters.len() != self.sizes.len() {
            return Err(Error::LevelMismatch {
                left: letters.len(),
                right: self.sizes.len(),
            });
        }
        let mut acc: usize = 0;
        for (i, &l) in letters.iter().enumerate() {
            if l >= self.sizes[i] {
                return Err(Error::LetterOutOfRange {
                    letter: l + 1,
                    size: self.sizes[i],
                });
            }
            acc = acc * self.sizes[i] as usize + l as usize;
        }
        Ok(acc)
    }

    /// Inverse of [`WordShape::index_of`].
    pub fn word_at(&self, mut index: usize) -> Vec<u32> {
        let mut letters = vec![0u32; self.sizes.len()];
        for i in (0..self.sizes.len()).rev() {
            let s = self.sizes[i] as usize;
            letters[i] = (index % s) as u32;
            index /= s;
        }
        debug_assert_eq!(index, 0, "index out of range for shape");
        letters
    }

    /// Shape of the first `n` coordinates.
    pub fn prefix(&self, n: usize) -> WordShape {
        WordShape::new(self.sizes[..n].to_vec())
    }

    /// Shape of the coordinates from `n` on.
    pub fn suffix(&self, n: usize) -> WordShape {
        WordShape::new(self.sizes[n..].to_vec())
    }

    /// Number of words in the suffix starting at coordinate `n`.
    pub fn suffix_count(&self, n: usize) -> usize {
        self.suffix(n).count()
    }
}

/// A word over a uniform `d`-letter alphabet. Letters are exposed 1-based
/// (`x_1 … x_d`) and stored 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    d: u32,
    letters: Vec<u32>, // 0-based
}

impl Word {
    pub fn empty(d: u32) -> Self {
        Word { d, letters: vec![] }
    }

    /// Builds a word from 1-based letter indices.
    pub fn from_letters(d: u32, letters_1based: &[u32]) -> Result<Self> {
        let mut letters = Vec::with_capacity(letters_1based.len());
        for &l in letters_1based {
            if l < 1 || l > d {
                return Err(Error::LetterOutOfRange { letter: l, size: d });
            }
            letters.push(l - 1);
        }
        Ok(Word { d, letters })
    }

    pub fn from_indices0(d: u32, letters0: Vec<u32>) -> Result<Self> {
        for &l in &letters0 {
            if l >= d {
                return Err(Error::LetterOutOfRange { letter: l + 1, size: d });
            }
        }
        Ok(Word { d, letters: letters0 })
    }

    pub fn alphabet_size(&self) -> u32 {
        self.d
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters0(&self) -> &[u32] {
        &self.letters
    }

    /// 1-based letter at position `i` (0-based position).
    pub fn letter(&self, i: usize) -> u32 {
        self.letters[i] + 1
    }

    /// Lexicographic rank within all words of the same length.
    pub fn index(&self) -> usize {
        WordShape::uniform(self.d, self.letters.len())
            .index_of(&self.letters)
            .expect("letters validated on construction")
    }

    pub fn from_index(d: u32, level: usize, index: usize) -> Self {
        let letters = WordShape::uniform(d, level).word_at(index);
        Word { d, letters }
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for &l in &self.letters {
            write!(f, "x{}", l + 1)?;
        }
        Ok(())
    }
}

/// One coordinate of a cylinder: anything, a single letter, or a letter set.
/// Letters are stored 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constraint {
    Full,
    Singleton(u32),
    Subset(Vec<u32>),
}

impl Constraint {
    fn validate(&self, size: u32) -> Result<()> {
        match self {
            Constraint::Full => Ok(()),
            Constraint::Singleton(l) => {
                if *l >= size {
                    Err(Error::LetterOutOfRange { letter: l + 1, size })
                } else {
                    Ok(())
                }
            }
            Constraint::Subset(ls) => {
                if ls.is_empty() {
                    return Err(Error::IndexConstraint("empty subset constraint".into()));
                }
                for &l in ls {
                    if l >= size {
                        return Err(Error::LetterOutOfRange { letter: l + 1, size });
                    }
                }
                Ok(())
            }
        }
    }

    fn card(&self, size: u32) -> u64 {
        match self {
            Constraint::Full => size as u64,
            Constraint::Singleton(_) => 1,
            Constraint::Subset(ls) => ls.len() as u64,
        }
    }

    fn admits(&self, letter: u32) -> bool {
        match self {
            Constraint::Full => true,
            Constraint::Singleton(l) => *l == letter,
            Constraint::Subset(ls) => ls.binary_search(&letter).is_ok(),
        }
    }

    /// True when the two constraints admit no common letter.
    fn disjoint(&self, other: &Constraint, size: u32) -> bool {
        match (self, other) {
            (Constraint::Full, _) | (_, Constraint::Full) => size == 0,
            (Constraint::Singleton(a), Constraint::Singleton(b)) => a != b,
            (Constraint::Singleton(a), Constraint::Subset(bs)) => bs.binary_search(a).is_err(),
            (Constraint::Subset(as_), Constraint::Singleton(b)) => as_.binary_search(b).is_err(),
            (Constraint::Subset(as_), Constraint::Subset(bs)) => {
                as_.iter().all(|a| bs.binary_search(a).is_err())
            }
        }
    }

    fn letters(&self, size: u32) -> Vec<u32> {
        match self {
            Constraint::Full => (0..size).collect(),
            Constraint::Singleton(l) => vec![*l],
            Constraint::Subset(ls) => ls.clone(),
        }
    }
}

/// A product set of words: one constraint per coordinate. Cylinders describe
/// every support set used by the verifiers, so disjointness of supports is
/// decided coordinate-by-coordinate without enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderSet {
    shape: WordShape,
    constraints: Vec<Constraint>,
}

impl CylinderSet {
    pub fn new(shape: WordShape, constraints: Vec<Constraint>) -> Result<Self> {
        if constraints.len() != shape.level() {
            return Err(Error::LevelMismatch {
                left: constraints.len(),
                right: shape.level(),
            });
        }
        let mut normalized = Vec::with_capacity(constraints.len());
        for (i, c) in constraints.into_iter().enumerate() {
            c.validate(shape.size(i))?;
            // Canonical form: sorted subsets, singleton subsets collapse,
            // subsets covering everything become Full.
            let c = match c {
                Constraint::Subset(mut ls) => {
                    ls.sort_unstable();
                    ls.dedup();
                    if ls.len() == 1 {
                        Constraint::Singleton(ls[0])
                    } else if ls.len() as u32 == shape.size(i) {
                        Constraint::Full
                    } else {
                        Constraint::Subset(ls)
                    }
                }
                other => other,
            };
            normalized.push(c);
        }
        Ok(CylinderSet {
            shape,
            constraints: normalized,
        })
    }

    pub fn full(shape: WordShape) -> Self {
        let constraints = vec![Constraint::Full; shape.level()];
        CylinderSet { shape, constraints }
    }

    pub fn level(&self) -> usize {
        self.shape.level()
    }

    pub fn shape(&self) -> &WordShape {
        &self.shape
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn cardinality(&self) -> u64 {
        self.constraints
            .iter()
            .enumerate()
            .map(|(i, c)| c.card(self.shape.size(i)))
            .product()
    }

    pub fn contains_letters(&self, letters0: &[u32]) -> bool {
        letters0.len() == self.constraints.len()
            && self
                .constraints
                .iter()
                .zip(letters0)
                .all(|(c, &l)| c.admits(l))
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.contains_letters(&self.shape.word_at(index))
    }

    /// Decides emptiness of the intersection coordinate-wise.
    pub fn is_disjoint(&self, other: &CylinderSet) -> Result<bool> {
        if self.shape != other.shape {
            return Err(Error::LevelMismatch {
                left: self.level(),
                right: other.level(),
            });
        }
        Ok(self
            .constraints
            .iter()
            .zip(&other.constraints)
            .enumerate()
            .any(|(i, (a, b))| a.disjoint(b, self.shape.size(i))))
    }

    /// Appends unconstrained coordinates, so membership of `vw` reduces to
    /// membership of `v`. This models supports under the transition maps.
    pub fn extend(&self, extra_sizes: &[u32]) -> CylinderSet {
        let mut sizes = self.shape.sizes().to_vec();
        sizes.extend_from_slice(extra_sizes);
        let mut constraints = self.constraints.clone();
        constraints.extend(extra_sizes.iter().map(|_| Constraint::Full));
        CylinderSet {
            shape: WordShape::new(sizes),
            constraints,
        }
    }

    /// Enumerates the member words as point indices, in lexicographic order.
    pub fn enumerate(&self) -> Vec<usize> {
        let per_coord: Vec<Vec<u32>> = self
            .constraints
            .iter()
            .enumerate()
            .map(|(i, c)| c.letters(self.shape.size(i)))
            .collect();
        let mut out = Vec::with_capacity(self.cardinality() as usize);
        let mut current = vec![0usize; per_coord.len()];
        'outer: loop {
            let letters: Vec<u32> = current
                .iter()
                .enumerate()
                .map(|(i, &k)| per_coord[i][k])
                .collect();
            out.push(self.shape.index_of(&letters).expect("validated"));
            // odometer
            for i in (0..current.len()).rev() {
                current[i] += 1;
                if current[i] < per_coord[i].len() {
                    continue 'outer;
                }
                current[i] = 0;
            }
            break;
        }
        if per_coord.is_empty() {
            out.truncate(1);
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn word_rank_first_and_positional() {
        // x_1 over d = 5 is the first word of length one.
        let w = Word::from_letters(5, &[1]).unwrap();
        assert_eq!(w.index(), 0);
        // x_5 x_5 has rank 4*5 + 4.
        let w = Word::from_letters(5, &[5, 5]).unwrap();
        assert_eq!(w.index(), 24);
        // The empty word is the unique word of length zero.
        assert_eq!(Word::empty(5).index(), 0);
    }

    #[test]
    fn word_rejects_out_of_range_letters() {
        assert!(Word::from_letters(5, &[6]).is_err());
        assert!(Word::from_letters(5, &[0]).is_err());
    }

    #[test]
    fn round_trip_exhaustive_small_levels() {
        for d in 2..=6u32 {
            for level in 0..=6usize {
                let count = (d as usize).pow(level as u32);
                if count > 50_000 {
                    continue;
                }
                for idx in 0..count {
                    let w = Word::from_index(d, level, idx);
                    assert_eq!(w.index(), idx);
                }
            }
        }
    }

    #[test]
    fn mixed_radix_round_trip() {
        let shape = WordShape::new(vec![6, 60, 60]);
        for idx in [0usize, 1, 59, 60, 3599, 6 * 60 * 60 - 1] {
            assert_eq!(shape.index_of(&shape.word_at(idx)).unwrap(), idx);
        }
    }

    fn random_cylinder(rng: &mut impl Rng, d: u32, level: usize) -> CylinderSet {
        let shape = WordShape::uniform(d, level);
        let constraints = (0..level)
            .map(|_| match rng.gen_range(0..3) {
                0 => Constraint::Full,
                1 => Constraint::Singleton(rng.gen_range(0..d)),
                _ => {
                    let k = rng.gen_range(1..=d);
                    let mut ls: Vec<u32> = (0..d).collect();
                    // deterministic partial shuffle
                    for i in 0..k as usize {
                        let j = rng.gen_range(i..d as usize);
                        ls.swap(i, j);
                    }
                    ls.truncate(k as usize);
                    Constraint::Subset(ls)
                }
            })
            .collect();
        CylinderSet::new(shape, constraints).unwrap()
    }

    #[test]
    fn disjointness_matches_brute_force() {
        let mut rng = crate::util::substream(0xC11, "cylinder-disjoint");
        for _ in 0..500 {
            let level = rng.gen_range(1..=4);
            let a = random_cylinder(&mut rng, 5, level);
            let b = random_cylinder(&mut rng, 5, level);
            let brute = {
                let bs: std::collections::HashSet<usize> = b.enumerate().into_iter().collect();
                a.enumerate().iter().all(|p| !bs.contains(p))
            };
            assert_eq!(a.is_disjoint(&b).unwrap(), brute);
        }
    }

    #[test]
    fn self_intersection_nonempty() {
        let shape = WordShape::uniform(5, 2);
        let a = CylinderSet::new(
            shape,
            vec![Constraint::Singleton(4), Constraint::Subset(vec![0, 1])],
        )
        .unwrap();
        assert!(!a.is_disjoint(&a).unwrap());
    }

    #[test]
    fn level_mismatch_is_an_error() {
        let a = CylinderSet::full(WordShape::uniform(5, 2));
        let b = CylinderSet::full(WordShape::uniform(5, 3));
        assert!(a.is_disjoint(&b).is_err());
    }

    #[test]
    fn cardinality_is_product_of_constraint_sizes() {
        let shape = WordShape::uniform(5, 3);
        let c = CylinderSet::new(
            shape,
            vec![
                Constraint::Singleton(4),
                Constraint::Subset(vec![0, 1]),
                Constraint::Full,
            ],
        )
        .unwrap();
        assert_eq!(c.cardinality(), 1 * 2 * 5);
        assert_eq!(c.enumerate().len() as u64, c.cardinality());
    }

    #[test]
    fn extend_multiplies_cardinality_and_preserves_membership() {
        // {x_5} extended by one level over d = 5 has five words.
        let shape = WordShape::uniform(5, 1);
        let a = CylinderSet::new(shape, vec![Constraint::Singleton(4)]).unwrap();
        let ext = a.extend(&[5]);
        assert_eq!(ext.cardinality(), 5);
        for idx in ext.enumerate() {
            let letters = ext.shape().word_at(idx);
            assert!(a.contains_letters(&letters[..1]));
        }
        // Cardinality scales by d^extra, checked by enumeration.
        let c = CylinderSet::new(
            WordShape::uniform(5, 2),
            vec![Constraint::Subset(vec![1, 3]), Constraint::Full],
        )
        .unwrap();
        let ext2 = c.extend(&[5, 5]);
        assert_eq!(ext2.enumerate().len() as u64, c.cardinality() * 25);
    }
}
