//! Word-packed vectors and matrices over GF(2).
//!
//! Coordinate `i` of a vector lives in bit `i % 64` of word `i / 64`, so a
//! vector of length at most 64 is the integer `sum c_i 2^i`. This is the same
//! encoding the block tables use, and every file format in the crate relies on
//! it.

use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};

type Words = SmallVec<[u64; 1]>;

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

#[inline]
fn tail_mask(len: usize) -> u64 {
    match len % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// A vector in GF(2)^n. Bits beyond `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Words,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        let mut words = Words::new();
        words.resize(word_count(len), 0);
        BitVec { len, words }
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    /// Builds a vector of length `len <= 64` from its integer encoding.
    pub fn from_u64(len: usize, bits: u64) -> Result<Self> {
        if len > 64 {
            return Err(Error::invalid(format!(
                "from_u64 needs len <= 64, got {len}"
            )));
        }
        if len < 64 && bits >> len != 0 {
            return Err(Error::invalid(format!(
                "value {bits} has bits beyond coordinate {len}"
            )));
        }
        let mut v = Self::zeros(len);
        if len > 0 {
            v.words[0] = bits;
        }
        Ok(v)
    }

    pub fn from_words(len: usize, words: &[u64]) -> Result<Self> {
        if words.len() != word_count(len) {
            return Err(Error::DimensionMismatch {
                context: "BitVec::from_words",
                expected: word_count(len),
                found: words.len(),
            });
        }
        if let Some(&last) = words.last() {
            if last & !tail_mask(len) != 0 {
                return Err(Error::invalid("bits set beyond the vector length"));
            }
        }
        Ok(BitVec {
            len,
            words: Words::from_slice(words),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// The integer encoding, when the vector fits in one word.
    pub fn as_u64(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "coordinate {i} out of range for length {}",
            self.len
        );
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.len,
            "coordinate {i} out of range for length {}",
            self.len
        );
        let bit = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Lowest set coordinate.
    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "dot of vectors with different lengths");
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Result of row reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    /// Nonzero rows of the reduced row echelon form.
    pub reduced: BitMatrix,
    pub rank: usize,
    /// Pivot column of each row of `reduced`, strictly increasing.
    pub pivots: Vec<usize>,
}

/// A dense matrix over GF(2), rows packed into `stride` words each.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    n_rows: usize,
    n_cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        let stride = word_count(n_cols);
        BitMatrix {
            n_rows,
            n_cols,
            stride,
            data: vec![0; n_rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(n_cols: usize, rows: &[BitVec]) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    context: "BitMatrix::from_rows",
                    expected: n_cols,
                    found: row.len(),
                });
            }
            m.row_mut(i).copy_from_slice(row.words());
        }
        Ok(m)
    }

    /// Rows given by their integer encodings; requires `n_cols <= 64`.
    pub fn from_u64_rows(n_cols: usize, rows: &[u64]) -> Result<Self> {
        let vecs = rows
            .iter()
            .map(|&r| BitVec::from_u64(n_cols, r))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(n_cols, &vecs)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.stride..(i + 1) * self.stride]
    }

    pub fn row_vec(&self, i: usize) -> BitVec {
        BitVec {
            len: self.n_cols,
            words: Words::from_slice(self.row(i)),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = BitVec> + '_ {
        (0..self.n_rows).map(|i| self.row_vec(i))
    }

    /// Integer encodings of the rows, when `n_cols <= 64`.
    pub fn u64_rows(&self) -> Option<Vec<u64>> {
        if self.n_cols > 64 {
            return None;
        }
        Some(
            (0..self.n_rows)
                .map(|i| self.row(i).first().copied().unwrap_or(0))
                .collect(),
        )
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(
            r < self.n_rows && c < self.n_cols,
            "index ({r},{c}) out of range"
        );
        self.row(r)[c / 64] >> (c % 64) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(
            r < self.n_rows && c < self.n_cols,
            "index ({r},{c}) out of range"
        );
        let bit = 1u64 << (c % 64);
        let w = &mut self.row_mut(r)[c / 64];
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    fn xor_rows(&mut self, target: usize, source: usize) {
        let s = self.stride;
        let (t0, s0) = (target * s, source * s);
        for w in 0..s {
            let v = self.data[s0 + w];
            self.data[t0 + w] ^= v;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.data.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.n_cols, self.n_rows);
        for r in 0..self.n_rows {
            for c in 0..self.n_cols {
                if self.get(r, c) {
                    t.set(c, r, true);
                }
            }
        }
        t
    }

    /// Product over GF(2). Row `i` of the result is the XOR of the rows of
    /// `other` selected by row `i` of `self`.
    pub fn matmul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch {
                context: "matmul",
                expected: self.n_cols,
                found: other.n_rows,
            });
        }
        let mut out = BitMatrix::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for (wi, &word) in self.row(i).iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let j = wi * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let src = other.row(j);
                    for (o, s) in out.data[i * out.stride..(i + 1) * out.stride]
                        .iter_mut()
                        .zip(src)
                    {
                        *o ^= s;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Gauss-Jordan elimination. Zero rows are dropped from `reduced`.
    pub fn rref(&self) -> Rref {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.n_cols {
            if r == m.n_rows {
                break;
            }
            let (w, bit) = (c / 64, 1u64 << (c % 64));
            let Some(p) = (r..m.n_rows).find(|&i| m.row(i)[w] & bit != 0) else {
                continue;
            };
            m.swap_rows(r, p);
            for i in 0..m.n_rows {
                if i != r && m.row(i)[w] & bit != 0 {
                    m.xor_rows(i, r);
                }
            }
            pivots.push(c);
            r += 1;
        }
        m.data.truncate(r * m.stride);
        m.n_rows = r;
        Rref {
            reduced: m,
            rank: r,
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// Basis (in reduced row echelon form) of `{x : self * x^T = 0}`.
    pub fn kernel(&self) -> BitMatrix {
        let Rref {
            reduced, pivots, ..
        } = self.rref();
        let n = self.n_cols;
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let mut k = BitMatrix::zeros(free.len(), n);
        for (row, &f) in free.iter().enumerate() {
            k.set(row, f, true);
            for (r, &p) in pivots.iter().enumerate() {
                if reduced.get(r, f) {
                    k.set(row, p, true);
                }
            }
        }
        k.rref().reduced
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn inverse(&self) -> Result<BitMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                context: "inverse",
                expected: self.n_rows,
                found: self.n_cols,
            });
        }
        let n = self.n_rows;
        let mut aug = BitMatrix::zeros(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                if self.get(r, c) {
                    aug.set(r, c, true);
                }
            }
            aug.set(r, n + r, true);
        }
        let red = aug.rref();
        if red.rank < n || red.pivots[n - 1] >= n {
            return Err(Error::NotInvertible);
        }
        let mut inv = BitMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                if red.reduced.get(r, n + c) {
                    inv.set(r, c, true);
                }
            }
        }
        Ok(inv)
    }

    pub fn pow(&self, mut e: u64) -> Result<BitMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                context: "pow",
                expected: self.n_rows,
                found: self.n_cols,
            });
        }
        let mut base = self.clone();
        let mut acc = BitMatrix::identity(self.n_rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.matmul(&base)?;
            }
            base = base.matmul(&base)?;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Smallest `e >= 1` with `self^e = I`, searched up to `limit`.
    pub fn multiplicative_order(&self, limit: u64) -> Result<Option<u64>> {
        if self.rank() != self.n_rows || !self.is_square() {
            return Err(Error::NotInvertible);
        }
        let id = BitMatrix::identity(self.n_rows);
        let mut acc = self.clone();
        for e in 1..=limit {
            if acc == id {
                return Ok(Some(e));
            }
            acc = acc.matmul(self)?;
        }
        Ok(None)
    }

    /// Parses `n` lines of `0`/`1` characters.
    pub fn parse_rows(lines: &[&str]) -> Result<BitMatrix> {
        let n_cols = lines.first().map(|l| l.trim().len()).unwrap_or(0);
        let mut m = BitMatrix::zeros(lines.len(), n_cols);
        for (r, line) in lines.iter().enumerate() {
            let line = line.trim();
            if line.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    context: "matrix row length",
                    expected: n_cols,
                    found: line.len(),
                });
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.set(r, c, true),
                    other => {
                        return Err(Error::invalid(format!(
                            "unexpected character {other:?} in matrix row"
                        )))
                    }
                }
            }
        }
        Ok(m)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.n_rows, self.n_cols)?;
        for r in 0..self.n_rows {
            writeln!(f, "{:?}", self.row_vec(r))?;
        }
        Ok(())
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.n_rows {
            for c in 0..self.n_cols {
                f.write_str(if self.get(r, c) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
