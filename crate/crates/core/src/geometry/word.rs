use std::fmt;

/// Finite word over the alphabet `{0, ..., N-1}` (displayed 1-based).
///
/// Words of a fixed length are enumerated in lexicographic order, so the
/// index of `w·i` is `index(w) * N + i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>) -> Self {
        Word(letters)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, letter: usize) -> Word {
        let mut letters = self.0.clone();
        letters.push(letter);
        Word(letters)
    }

    pub fn index(&self, n_maps: usize) -> usize {
        self.0.iter().fold(0, |acc, &l| acc * n_maps + l)
    }

    pub fn from_index(mut index: usize, len: usize, n_maps: usize) -> Word {
        let mut letters = vec![0; len];
        for slot in letters.iter_mut().rev() {
            *slot = index % n_maps;
            index /= n_maps;
        }
        Word(letters)
    }

    pub fn in_range(&self, n_maps: usize) -> bool {
        self.0.iter().all(|&l| l < n_maps)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "()");
        }
        let parts: Vec<String> = self.0.iter().map(|l| (l + 1).to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn index_roundtrip(letters in proptest::collection::vec(0usize..5, 0..7)) {
            let w = Word::new(letters);
            let idx = w.index(5);
            prop_assert_eq!(Word::from_index(idx, w.len(), 5), w);
        }
    }

    #[test]
    fn child_index() {
        let w = Word::new(vec![2, 1]);
        assert_eq!(w.child(0).index(3), w.index(3) * 3);
        assert_eq!(w.to_string(), "(3,2)");
        assert_eq!(Word::empty().to_string(), "()");
    }
}
