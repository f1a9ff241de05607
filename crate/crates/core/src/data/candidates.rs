use std::fmt;

use rand::Rng;

use crate::{Error, Result};

const WORD: usize = 64;

/// A set of candidate labels over a universe of `universe` known classes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CandidateSet {
    words: Vec<u64>,
    universe: usize,
}

impl CandidateSet {
    pub fn empty(universe: usize) -> Self {
        CandidateSet {
            words: vec![0; universe.div_ceil(WORD).max(1)],
            universe,
        }
    }

    pub fn from_labels(universe: usize, labels: &[usize]) -> Result<Self> {
        let mut set = Self::empty(universe);
        for &l in labels {
            if l >= universe {
                return Err(Error::InvalidArgument(format!(
                    "candidate label {l} outside universe of {universe} classes"
                )));
            }
            set.insert(l);
        }
        if set.is_empty() {
            return Err(Error::EmptyCandidateSet);
        }
        Ok(set)
    }

    /// Every class of the universe.
    pub fn full(universe: usize) -> Self {
        let mut set = Self::empty(universe);
        for l in 0..universe {
            set.insert(l);
        }
        set
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn insert(&mut self, label: usize) {
        assert!(label < self.universe, "label {label} out of range");
        self.words[label / WORD] |= 1 << (label % WORD);
    }

    pub fn remove(&mut self, label: usize) {
        if label < self.universe {
            self.words[label / WORD] &= !(1 << (label % WORD));
        }
    }

    #[inline]
    pub fn contains(&self, label: usize) -> bool {
        label < self.universe && self.words[label / WORD] & (1 << (label % WORD)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.universe
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.universe).filter(move |&l| self.contains(l))
    }

    pub fn labels(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Bitmask form; only defined for universes of at most 64 classes.
    pub fn mask(&self) -> u64 {
        debug_assert!(self.universe <= WORD);
        self.words[0]
    }
}

impl fmt::Debug for CandidateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Draws a candidate set uniformly from the `2^(k-1) - 1` proper subsets of
/// `{0..k}` that contain `true_label`.
///
/// Every other label is included with probability 1/2; a draw equal to the
/// full label set is rejected and redrawn.
pub fn generate_candidate_set<R: Rng + ?Sized>(
    true_label: usize,
    k: usize,
    rng: &mut R,
) -> Result<CandidateSet> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "candidate generation needs k >= 2, got {k}"
        )));
    }
    if true_label >= k {
        return Err(Error::InvalidArgument(format!(
            "true label {true_label} outside 0..{k}"
        )));
    }
    loop {
        let mut set = CandidateSet::empty(k);
        set.insert(true_label);
        for l in (0..k).filter(|&l| l != true_label) {
            if rng.random_bool(0.5) {
                set.insert(l);
            }
        }
        if !set.is_full() {
            return Ok(set);
        }
    }
}
