use alloc::vec;
use alloc::vec::Vec;

/// Square bit matrix used for per-agent reachability (transitive closure).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    n: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn new(n: usize) -> Self {
        let words_per_row = n.div_ceil(64);
        BitMatrix {
            n,
            words_per_row,
            words: vec![0; n * words_per_row],
        }
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize) {
        debug_assert!(row < self.n && col < self.n);
        self.words[row * self.words_per_row + col / 64] |= 1 << (col % 64);
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.n && col < self.n);
        self.words[row * self.words_per_row + col / 64] >> (col % 64) & 1 == 1
    }

    /// `row |= other_row`; returns true if `row` changed.
    pub fn or_row(&mut self, row: usize, other_row: usize) -> bool {
        let w = self.words_per_row;
        let mut changed = false;
        for k in 0..w {
            let v = self.words[other_row * w + k];
            let dst = &mut self.words[row * w + k];
            let before = *dst;
            *dst |= v;
            changed |= *dst != before;
        }
        changed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_or() {
        let mut m = BitMatrix::new(70);
        m.set(0, 65);
        m.set(1, 3);
        assert!(m.get(0, 65));
        assert!(!m.get(0, 3));
        assert!(m.or_row(0, 1));
        assert!(m.get(0, 3));
        assert!(!m.or_row(0, 1));
    }
}
