//! Dense bit-packed GF(2) matrices.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        BitMatrix {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.data[r * self.words + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.words {
            self.data.swap(a * self.words + w, b * self.words + w);
        }
    }

    /// `row[dst] ^= row[src]`
    fn xor_row(&mut self, dst: usize, src: usize) {
        let (d, s) = (dst * self.words, src * self.words);
        for w in 0..self.words {
            let v = self.data[s + w];
            self.data[d + w] ^= v;
        }
    }

    /// In-place reduced row echelon form, choosing pivot columns from the
    /// right. Returns the pivot column of each of the first `rank` rows.
    pub fn rref_from_right(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut next = 0;
        for col in (0..self.cols).rev() {
            if next == self.rows {
                break;
            }
            let Some(p) = (next..self.rows).find(|&r| self.get(r, col)) else {
                continue;
            };
            self.swap_rows(next, p);
            for r in 0..self.rows {
                if r != next && self.get(r, col) {
                    self.xor_row(r, next);
                }
            }
            pivots.push(col);
            next += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref_from_right().len()
    }

    /// Product with a packed bit vector, returning one bit per row.
    pub fn mul_packed(&self, v: &[u64]) -> Vec<u8> {
        (0..self.rows)
            .map(|r| {
                let ones: u32 = self.row(r).iter().zip(v).map(|(a, b)| (a & b).count_ones()).sum();
                (ones & 1) as u8
            })
            .collect()
    }
}

/// Packs 0/1 bytes into little-endian-within-word `u64`s.
pub fn pack_bits(bits: &[u8]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_dependent_rows() {
        let mut m = BitMatrix::zeros(3, 4);
        for (r, c) in [(0, 0), (0, 1), (1, 1), (1, 2), (2, 0), (2, 2)] {
            m.set(r, c, true);
        }
        // row 2 = row 0 + row 1
        assert_eq!(m.rank(), 2);
        m.set(2, 3, true);
        assert_eq!(m.rank(), 3);
    }

    #[test]
    fn rref_prefers_right_columns() {
        let mut m = BitMatrix::zeros(2, 4);
        for (r, c) in [(0, 0), (0, 3), (1, 1), (1, 2), (1, 3)] {
            m.set(r, c, true);
        }
        let piv = m.rref_from_right();
        assert_eq!(piv, vec![3, 2]);
    }

    #[test]
    fn packed_product() {
        let mut m = BitMatrix::zeros(2, 70);
        m.set(0, 0, true);
        m.set(0, 69, true);
        m.set(1, 69, true);
        let mut v = vec![0u8; 70];
        v[69] = 1;
        assert_eq!(m.mul_packed(&pack_bits(&v)), vec![1, 1]);
        v[0] = 1;
        assert_eq!(m.mul_packed(&pack_bits(&v)), vec![0, 1]);
    }
}
