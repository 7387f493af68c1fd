//! Subspaces of GF(2)^v in canonical form, the Grassmannian, and quotient
//! coordinates.
//!
//! A [`Subspace`] stores the reduced row echelon basis of the space, one row
//! per `u64` word with coordinate `i` at bit `i`. The pivot of a row is its
//! lowest set bit. Because the reduced basis is unique, structural equality
//! and hashing coincide with equality of subspaces.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::gf2::BitMatrix;

/// Largest ambient dimension a [`Subspace`] can live in.
pub const MAX_AMBIENT: usize = 64;

pub(crate) type Rows = SmallVec<[u64; 8]>;

#[inline]
pub(crate) fn low_mask(v: usize) -> u64 {
    if v >= 64 {
        u64::MAX
    } else {
        (1u64 << v) - 1
    }
}

/// Reduces `x` against a reduced basis and, if it is independent, inserts it
/// keeping the basis reduced and sorted by pivot. Returns whether `x` was new.
#[inline]
pub(crate) fn insert_reduced(basis: &mut Rows, mut x: u64) -> bool {
    for &b in basis.iter() {
        if x >> b.trailing_zeros() & 1 == 1 {
            x ^= b;
        }
    }
    if x == 0 {
        return false;
    }
    let p = x.trailing_zeros();
    for b in basis.iter_mut() {
        if *b >> p & 1 == 1 {
            *b ^= x;
        }
    }
    let pos = basis
        .iter()
        .position(|b| b.trailing_zeros() > p)
        .unwrap_or(basis.len());
    basis.insert(pos, x);
    true
}

/// A subspace of GF(2)^v, identified by its reduced row echelon basis.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    v: u8,
    rows: Rows,
}

impl Subspace {
    fn check_ambient(v: usize) -> Result<()> {
        if v > MAX_AMBIENT {
            return Err(Error::invalid(format!(
                "ambient dimension {v} exceeds {MAX_AMBIENT}"
            )));
        }
        Ok(())
    }

    /// The span of `generators` inside GF(2)^v.
    pub fn span(v: usize, generators: impl IntoIterator<Item = u64>) -> Result<Self> {
        Self::check_ambient(v)?;
        let mask = low_mask(v);
        let mut rows = Rows::new();
        for g in generators {
            if g & !mask != 0 {
                return Err(Error::invalid(format!(
                    "vector {g} does not lie in GF(2)^{v}"
                )));
            }
            insert_reduced(&mut rows, g);
        }
        Ok(Subspace { v: v as u8, rows })
    }

    /// Span without range checks; callers guarantee `v <= 64` and that the
    /// generators lie in GF(2)^v.
    #[inline]
    pub(crate) fn span_unchecked(v: usize, generators: impl IntoIterator<Item = u64>) -> Self {
        debug_assert!(v <= MAX_AMBIENT);
        let mut rows = Rows::new();
        for g in generators {
            debug_assert_eq!(g & !low_mask(v), 0);
            insert_reduced(&mut rows, g);
        }
        Subspace { v: v as u8, rows }
    }

    /// Wraps rows already in canonical form.
    #[inline]
    pub(crate) fn from_canonical(v: usize, rows: Rows) -> Self {
        Subspace { v: v as u8, rows }
    }

    pub fn zero(v: usize) -> Result<Self> {
        Self::span(v, [])
    }

    pub fn full(v: usize) -> Result<Self> {
        Self::span(v, (0..v).map(|i| 1u64 << i))
    }

    /// The span of the first `d` unit vectors.
    pub fn standard(v: usize, d: usize) -> Result<Self> {
        if d > v {
            return Err(Error::invalid(format!(
                "standard subspace of dim {d} in GF(2)^{v}"
            )));
        }
        Self::span(v, (0..d).map(|i| 1u64 << i))
    }

    pub fn from_matrix(m: &BitMatrix) -> Result<Self> {
        let rows = m.u64_rows().ok_or_else(|| {
            Error::invalid(format!("matrix with {} columns is too wide", m.n_cols()))
        })?;
        Self::span(m.n_cols(), rows)
    }

    pub fn basis_matrix(&self) -> BitMatrix {
        BitMatrix::from_u64_rows(self.ambient_dim(), &self.rows)
            .expect("canonical rows fit the ambient space")
    }

    pub fn ambient_dim(&self) -> usize {
        self.v as usize
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Reduced basis rows, sorted by pivot.
    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().map(|r| r.trailing_zeros() as usize)
    }

    pub fn pivot_mask(&self) -> u64 {
        self.rows
            .iter()
            .fold(0, |m, r| m | 1u64 << r.trailing_zeros())
    }

    /// `x` minus its component along this space; zero iff `x` is in the space.
    #[inline]
    pub fn reduce(&self, mut x: u64) -> u64 {
        for &b in &self.rows {
            if x >> b.trailing_zeros() & 1 == 1 {
                x ^= b;
            }
        }
        x
    }

    #[inline]
    pub fn contains_vector(&self, x: u64) -> bool {
        self.reduce(x) == 0
    }

    /// The vector with coordinates `coeffs` in the canonical basis.
    #[inline]
    pub fn combine(&self, coeffs: u64) -> u64 {
        let mut bits = coeffs;
        let mut out = 0;
        while bits != 0 {
            out ^= self.rows[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        out
    }

    /// All `2^dim` vectors of the space.
    pub fn vectors(&self) -> impl Iterator<Item = u64> + '_ {
        (0..1u64 << self.dim()).map(move |c| self.combine(c))
    }

    fn same_ambient(&self, other: &Subspace, context: &'static str) -> Result<()> {
        if self.v != other.v {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.ambient_dim(),
                found: other.ambient_dim(),
            });
        }
        Ok(())
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.same_ambient(other, "subspace sum")?;
        Ok(self.sum_unchecked(other))
    }

    pub(crate) fn sum_unchecked(&self, other: &Subspace) -> Subspace {
        let mut rows = self.rows.clone();
        for &r in &other.rows {
            insert_reduced(&mut rows, r);
        }
        Subspace { v: self.v, rows }
    }

    /// Intersection, computed as the orthogonal complement of the sum of the
    /// complements.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        self.same_ambient(other, "subspace intersection")?;
        Ok(self.dual().sum_unchecked(&other.dual()).dual())
    }

    pub fn contains(&self, inner: &Subspace) -> Result<bool> {
        self.same_ambient(inner, "subspace containment")?;
        Ok(self.contains_unchecked(inner))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, inner: &Subspace) -> bool {
        inner.dim() <= self.dim() && inner.rows.iter().all(|&r| self.contains_vector(r))
    }

    /// Orthogonal complement under the standard dot product, i.e. the kernel
    /// of the basis matrix.
    pub fn dual(&self) -> Subspace {
        let v = self.ambient_dim();
        let pivots = self.pivot_mask();
        let mut gens = Rows::new();
        for f in (0..v).filter(|&c| pivots >> c & 1 == 0) {
            let mut x = 1u64 << f;
            for &r in &self.rows {
                if r >> f & 1 == 1 {
                    x |= 1u64 << r.trailing_zeros();
                }
            }
            gens.push(x);
        }
        Subspace::span_unchecked(v, gens)
    }

    /// All `t`-dimensional subspaces of this space.
    pub fn subspaces(&self, t: usize) -> Vec<Subspace> {
        let local = LocalGrassmannian::new(self.dim(), t);
        local.images(self).collect()
    }
}

impl Ord for Subspace {
    /// Pivot sets lexicographically, then free entries lexicographically.
    /// This is the enumeration order of [`Grassmannian`].
    fn cmp(&self, other: &Self) -> Ordering {
        self.v
            .cmp(&other.v)
            .then(self.rows.len().cmp(&other.rows.len()))
            .then_with(|| {
                for (a, b) in self.rows.iter().zip(&other.rows) {
                    let o = a.trailing_zeros().cmp(&b.trailing_zeros());
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                // Same pivots: rows agree on pivot columns, so the lowest
                // differing bit is a free entry.
                for (a, b) in self.rows.iter().zip(&other.rows) {
                    let d = a ^ b;
                    if d != 0 {
                        return if a >> d.trailing_zeros() & 1 == 1 {
                            Ordering::Greater
                        } else {
                            Ordering::Less
                        };
                    }
                }
                Ordering::Equal
            })
    }
}

impl PartialOrd for Subspace {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(v={}, {:?})", self.v, self.rows.as_slice())
    }
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, ">/{}", self.v)
    }
}

/// The Gaussian binomial coefficient `[v choose k]_q`; zero when `k` is
/// outside `0..=v`.
pub fn gaussian_binomial(v: i64, k: i64, q: u64) -> Result<BigUint> {
    if q < 2 {
        return Err(Error::invalid(format!("q must be at least 2, got {q}")));
    }
    if v < 0 {
        return Err(Error::invalid(format!("v must be non-negative, got {v}")));
    }
    if k < 0 || k > v {
        return Ok(BigUint::zero());
    }
    let k = k.min(v - k) as u32;
    let q = BigUint::from(q);
    let mut acc = BigUint::one();
    // after step i, acc = [v choose i+1]_q
    for i in 0..k {
        let num = q.pow(v as u32 - i) - 1u32;
        let den = q.pow(i + 1) - 1u32;
        acc = acc * num / den;
    }
    Ok(acc)
}

/// `[v choose k]_2` as a machine integer, if it fits.
pub fn count_subspaces(v: usize, k: usize) -> Option<u64> {
    gaussian_binomial(v as i64, k as i64, 2).ok()?.to_u64()
}

/// Number of `k`-subspaces with a given pivot mask: two to the number of free
/// entries.
fn free_count(v: usize, pivots: &[usize]) -> u32 {
    let mut f = 0;
    for (r, &p) in pivots.iter().enumerate() {
        // columns after p that are not later pivots
        f += (v - 1 - p) - (pivots.len() - 1 - r);
    }
    f as u32
}

/// Advances `c` to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Builds the subspace with the given pivots whose free entries, read in
/// canonical order, are the bits of `m` from most to least significant.
fn assemble(v: usize, pivots: &[usize], free_total: u32, m: u64) -> Subspace {
    let pmask = pivots.iter().fold(0u64, |acc, &p| acc | 1 << p);
    let mut rows = Rows::new();
    let mut bit = free_total;
    for &p in pivots {
        let mut r = 1u64 << p;
        for c in p + 1..v {
            if pmask >> c & 1 == 0 {
                bit -= 1;
                if m >> bit & 1 == 1 {
                    r |= 1 << c;
                }
            }
        }
        rows.push(r);
    }
    Subspace::from_canonical(v, rows)
}

/// Streams every `k`-subspace of GF(2)^v exactly once, in canonical order.
pub struct Grassmannian {
    v: usize,
    pivots: Vec<usize>,
    free: u32,
    next: u64,
    done: bool,
}

impl Grassmannian {
    pub fn new(v: usize, k: usize) -> Result<Self> {
        if v > MAX_AMBIENT {
            return Err(Error::invalid(format!(
                "ambient dimension {v} exceeds {MAX_AMBIENT}"
            )));
        }
        if k > v {
            return Err(Error::invalid(format!("no {k}-subspaces in GF(2)^{v}")));
        }
        let pivots: Vec<usize> = (0..k).collect();
        let free = free_count(v, &pivots);
        Ok(Grassmannian {
            v,
            pivots,
            free,
            next: 0,
            done: false,
        })
    }
}

impl Iterator for Grassmannian {
    type Item = Subspace;

    fn next(&mut self) -> Option<Subspace> {
        if self.done {
            return None;
        }
        let s = assemble(self.v, &self.pivots, self.free, self.next);
        self.next += 1;
        if self.free >= 64 || self.next >> self.free != 0 {
            if next_combination(&mut self.pivots, self.v) {
                self.free = free_count(self.v, &self.pivots);
                self.next = 0;
            } else {
                self.done = true;
            }
        }
        Some(s)
    }
}

/// Convenience: the whole Grassmannian collected into a vector.
pub fn enumerate_grassmannian(v: usize, k: usize) -> Result<Vec<Subspace>> {
    Ok(Grassmannian::new(v, k)?.collect())
}

/// Dense ranking of the `k`-subspaces of GF(2)^v consistent with the
/// enumeration order: `rank(nth element) == n`.
#[derive(Clone, Debug)]
pub struct GrassmannIndex {
    v: usize,
    k: usize,
    total: u64,
    offsets: Offsets,
    /// (offset, pivot mask) sorted by offset, for unranking.
    starts: Vec<(u64, u64)>,
}

#[derive(Clone, Debug)]
enum Offsets {
    Dense(Vec<u64>),
    Sparse(HashMap<u64, u64>),
}

impl GrassmannIndex {
    pub fn new(v: usize, k: usize) -> Result<Self> {
        let total = count_subspaces(v, k)
            .ok_or_else(|| Error::invalid(format!("[{v} choose {k}]_2 does not fit in u64")))?;
        if k > v {
            return Err(Error::invalid(format!("no {k}-subspaces in GF(2)^{v}")));
        }
        let mut starts = Vec::new();
        let mut pivots: Vec<usize> = (0..k).collect();
        let mut offset = 0u64;
        loop {
            let mask = pivots.iter().fold(0u64, |m, &p| m | 1 << p);
            starts.push((offset, mask));
            offset += 1u64 << free_count(v, &pivots);
            if !next_combination(&mut pivots, v) {
                break;
            }
        }
        debug_assert_eq!(offset, total);
        let offsets = if v <= 16 {
            let mut dense = vec![u64::MAX; 1 << v];
            for &(o, m) in &starts {
                dense[m as usize] = o;
            }
            Offsets::Dense(dense)
        } else {
            Offsets::Sparse(starts.iter().map(|&(o, m)| (m, o)).collect())
        };
        Ok(GrassmannIndex {
            v,
            k,
            total,
            offsets,
            starts,
        })
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn ambient_dim(&self) -> usize {
        self.v
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    /// Rank of `s`. Panics if `s` is not a `k`-subspace of GF(2)^v.
    #[inline]
    pub fn rank(&self, s: &Subspace) -> u64 {
        assert!(
            s.ambient_dim() == self.v && s.dim() == self.k,
            "subspace {s} is not in [{} choose {}]",
            self.v,
            self.k
        );
        let pmask = s.pivot_mask();
        let offset = match &self.offsets {
            Offsets::Dense(d) => d[pmask as usize],
            Offsets::Sparse(h) => h[&pmask],
        };
        let mut m = 0u64;
        let free_cols = !pmask & low_mask(self.v);
        for &r in s.rows() {
            let p = r.trailing_zeros();
            let mut cols = free_cols & !low_mask(p as usize + 1);
            while cols != 0 {
                let c = cols.trailing_zeros();
                m = m << 1 | (r >> c & 1);
                cols &= cols - 1;
            }
        }
        offset + m
    }

    pub fn unrank(&self, idx: u64) -> Option<Subspace> {
        if idx >= self.total {
            return None;
        }
        let pos = self.starts.partition_point(|&(o, _)| o <= idx) - 1;
        let (offset, mask) = self.starts[pos];
        let pivots: Vec<usize> = (0..self.v).filter(|&c| mask >> c & 1 == 1).collect();
        let free = free_count(self.v, &pivots);
        Some(assemble(self.v, &pivots, free, idx - offset))
    }
}

/// The `t`-subspaces of GF(2)^k kept as coefficient rows, so they can be
/// pushed into any `k`-dimensional space given by a basis.
#[derive(Clone, Debug)]
pub(crate) struct LocalGrassmannian {
    t: usize,
    members: Vec<Rows>,
}

impl LocalGrassmannian {
    pub(crate) fn new(k: usize, t: usize) -> Self {
        let members = if t > k {
            Vec::new()
        } else {
            Grassmannian::new(k, t)
                .expect("k <= 64 for block dimensions")
                .map(|s| s.rows)
                .collect()
        };
        LocalGrassmannian { t, members }
    }

    /// Images of the local subspaces inside `space`.
    pub(crate) fn images<'a>(&'a self, space: &'a Subspace) -> impl Iterator<Item = Subspace> + 'a {
        let v = space.ambient_dim();
        self.members.iter().map(move |coeffs| {
            let mut rows = Rows::new();
            for &c in coeffs {
                insert_reduced(&mut rows, space.combine(c));
            }
            debug_assert_eq!(rows.len(), self.t);
            Subspace::from_canonical(v, rows)
        })
    }
}

/// Coordinates on the factor space `sup / sub`.
///
/// The transversal extends the basis of `sub` to a basis of `sup`; it is kept
/// reduced and vanishes on the pivot columns of `sub`, so quotient coordinate
/// `j` of a vector is read off the `j`-th transversal pivot after reducing
/// modulo `sub`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientFrame {
    sup: Subspace,
    sub: Subspace,
    transversal: Rows,
}

impl QuotientFrame {
    pub fn new(sup: &Subspace, sub: &Subspace) -> Result<Self> {
        if !sup.contains(sub)? {
            return Err(Error::invalid(format!("{sub} is not contained in {sup}")));
        }
        let mut transversal = Rows::new();
        for &r in sup.rows() {
            insert_reduced(&mut transversal, sub.reduce(r));
        }
        Ok(QuotientFrame {
            sup: sup.clone(),
            sub: sub.clone(),
            transversal,
        })
    }

    pub fn sup(&self) -> &Subspace {
        &self.sup
    }

    pub fn sub(&self) -> &Subspace {
        &self.sub
    }

    pub fn transversal(&self) -> &[u64] {
        &self.transversal
    }

    pub fn ambient_dim(&self) -> usize {
        self.sup.ambient_dim()
    }

    pub fn quotient_dim(&self) -> usize {
        self.transversal.len()
    }

    /// Quotient coordinates of a vector of `sup`.
    pub fn project_vector(&self, x: u64) -> Result<u64> {
        let mut y = self.sub.reduce(x);
        let mut c = 0u64;
        for (j, &t) in self.transversal.iter().enumerate() {
            if y >> t.trailing_zeros() & 1 == 1 {
                c |= 1 << j;
                y ^= t;
            }
        }
        if y != 0 {
            return Err(Error::invalid(format!(
                "vector {x} does not lie in {}",
                self.sup
            )));
        }
        Ok(c)
    }

    /// The transversal representative of quotient coordinates `c`.
    pub fn lift_vector(&self, c: u64) -> u64 {
        let mut bits = c;
        let mut out = 0;
        while bits != 0 {
            out ^= self.transversal[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        out
    }

    /// Image of `s` in the quotient; requires `sub <= s <= sup`.
    pub fn project(&self, s: &Subspace) -> Result<Subspace> {
        if s.ambient_dim() != self.ambient_dim()
            || !s.contains_unchecked(&self.sub)
            || !self.sup.contains_unchecked(s)
        {
            return Err(Error::invalid(format!(
                "{s} does not lie between {} and {}",
                self.sub, self.sup
            )));
        }
        let coords = s
            .rows()
            .iter()
            .map(|&r| self.project_vector(r))
            .collect::<Result<Rows>>()?;
        Ok(Subspace::span_unchecked(self.quotient_dim(), coords))
    }

    /// Full preimage of a quotient subspace; always contains `sub`.
    pub fn lift_preimage(&self, s: &Subspace) -> Result<Subspace> {
        if s.ambient_dim() != self.quotient_dim() {
            return Err(Error::DimensionMismatch {
                context: "lift_preimage",
                expected: self.quotient_dim(),
                found: s.ambient_dim(),
            });
        }
        Ok(self.lift_unchecked(s))
    }

    #[inline]
    pub(crate) fn lift_unchecked(&self, s: &Subspace) -> Subspace {
        let mut rows = self.sub.rows.clone();
        for &r in s.rows() {
            insert_reduced(&mut rows, self.lift_vector(r));
        }
        Subspace::from_canonical(self.ambient_dim(), rows)
    }

    /// Every subspace between `sub` and `sup` of dimension `dim(sub) + kbar`.
    pub fn quotient_grassmannian(&self, kbar: usize) -> Result<Vec<Subspace>> {
        Ok(Grassmannian::new(self.quotient_dim(), kbar)?
            .map(|s| self.lift_unchecked(&s))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    /// Counts reduced row echelon k x v matrices by direct search over rows,
    /// independent of the pivot/free-entry enumeration.
    fn count_rref_matrices(v: usize, k: usize) -> u64 {
        fn go(v: usize, k: usize, rows: &mut Vec<u64>) -> u64 {
            if rows.len() == k {
                return 1;
            }
            let last_pivot = rows.last().map(|r| r.trailing_zeros() as i64).unwrap_or(-1);
            let mut total = 0;
            for r in 1u64..1 << v {
                let p = r.trailing_zeros() as i64;
                if p <= last_pivot {
                    continue;
                }
                // new row must vanish on earlier pivots, earlier rows on this pivot
                if rows
                    .iter()
                    .any(|&q| r >> q.trailing_zeros() & 1 == 1 || q >> p & 1 == 1)
                {
                    continue;
                }
                rows.push(r);
                total += go(v, k, rows);
                rows.pop();
            }
            total
        }
        go(v, k, &mut Vec::new())
    }

    fn random_subspace(rng: &mut impl Rng, v: usize) -> Subspace {
        let n = rng.gen_range(0..=v);
        Subspace::span(v, (0..n).map(|_| rng.gen::<u64>() & low_mask(v))).unwrap()
    }

    fn point_set(s: &Subspace) -> HashSet<u64> {
        s.vectors().collect()
    }

    #[test]
    fn gaussian_binomial_values() {
        assert_eq!(gaussian_binomial(6, 2, 2).unwrap(), BigUint::from(651u32));
        assert_eq!(BigUint::from(651u32), BigUint::from(3u32 * 217));
        assert_eq!(gaussian_binomial(9, 0, 3).unwrap(), BigUint::one());
        assert_eq!(gaussian_binomial(5, 7, 2).unwrap(), BigUint::zero());
        assert_eq!(gaussian_binomial(5, -1, 2).unwrap(), BigUint::zero());
        assert!(gaussian_binomial(4, 2, 1).is_err());
    }

    #[test]
    fn gaussian_binomial_matches_rref_count() {
        let oracle = count_rref_matrices(8, 4);
        assert_eq!(oracle, 200787);
        assert_eq!(gaussian_binomial(8, 4, 2).unwrap(), BigUint::from(oracle));
        for (v, k) in [(4, 2), (6, 3), (7, 1), (5, 5)] {
            assert_eq!(count_subspaces(v, k), Some(count_rref_matrices(v, k)));
        }
    }

    #[test]
    fn gaussian_binomial_symmetry() {
        for q in [2u64, 3, 5] {
            for v in 0..12 {
                for k in 0..=v {
                    assert_eq!(
                        gaussian_binomial(v, k, q).unwrap(),
                        gaussian_binomial(v, v - k, q).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn small_grassmannians() {
        assert_eq!(enumerate_grassmannian(4, 2).unwrap().len(), 35);
        let points = enumerate_grassmannian(3, 1).unwrap();
        assert_eq!(points.len(), 7);
        let vectors: HashSet<u64> = points.iter().map(|p| p.rows()[0]).collect();
        assert_eq!(vectors, (1..8).collect());
        let full = enumerate_grassmannian(2, 2).unwrap();
        assert_eq!(full, vec![Subspace::full(2).unwrap()]);
        assert_eq!(enumerate_grassmannian(0, 0).unwrap().len(), 1);
    }

    #[test]
    fn enumeration_counts_up_to_nine() {
        for v in 0..=9 {
            for k in 0..=v {
                let n = Grassmannian::new(v, k).unwrap().count() as u64;
                assert_eq!(Some(n), count_subspaces(v, k), "v={v} k={k}");
            }
        }
    }

    #[test]
    fn enumeration_is_sorted_and_ranked() {
        for (v, k) in [(6, 3), (7, 2), (5, 0), (5, 5), (8, 1)] {
            let all = enumerate_grassmannian(v, k).unwrap();
            let idx = GrassmannIndex::new(v, k).unwrap();
            assert_eq!(idx.len(), all.len() as u64);
            for (n, s) in all.iter().enumerate() {
                assert_eq!(idx.rank(s), n as u64);
                assert_eq!(idx.unrank(n as u64).as_ref(), Some(s));
            }
            assert!(all.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn sparse_index_matches_enumeration() {
        let idx = GrassmannIndex::new(17, 1).unwrap();
        for (n, s) in Grassmannian::new(17, 1).unwrap().enumerate() {
            assert_eq!(idx.rank(&s), n as u64);
        }
    }

    #[test]
    fn lattice_trivia() {
        let a = Subspace::span(8, [3, 12, 200]).unwrap();
        assert_eq!(a.sum(&a).unwrap(), a);
        assert_eq!(a.intersect(&a).unwrap(), a);
        assert!(Subspace::full(8).unwrap().contains(&a).unwrap());
        let b = Subspace::span(7, [1]).unwrap();
        assert!(a.sum(&b).is_err());
        assert!(a.contains(&b).is_err());
    }

    #[test]
    fn lattice_operations_match_point_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let a = random_subspace(&mut rng, 8);
            let b = random_subspace(&mut rng, 8);
            let (pa, pb) = (point_set(&a), point_set(&b));
            let meet = a.intersect(&b).unwrap();
            let expected: HashSet<u64> = pa.intersection(&pb).copied().collect();
            assert_eq!(point_set(&meet), expected);
            let join = a.sum(&b).unwrap();
            let expected: HashSet<u64> = pa
                .iter()
                .flat_map(|x| pb.iter().map(move |y| x ^ y))
                .collect();
            assert_eq!(point_set(&join), expected);
            assert_eq!(join.dim() + meet.dim(), a.dim() + b.dim());
            assert_eq!(a.contains(&b).unwrap(), pb.is_subset(&pa));
        }
    }

    #[test]
    fn dual_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let v = rng.gen_range(1..=12);
            let s = random_subspace(&mut rng, v);
            let d = s.dual();
            assert_eq!(d.dim(), v - s.dim());
            assert_eq!(d.dual(), s);
            for &x in s.rows() {
                for &y in d.rows() {
                    assert_eq!((x & y).count_ones() % 2, 0);
                }
            }
        }
    }

    #[test]
    fn subspaces_of_a_block() {
        let b = Subspace::span(8, [1, 34, 40, 192]).unwrap();
        let twos = b.subspaces(2);
        assert_eq!(twos.len(), 35);
        assert!(twos.iter().all(|t| b.contains(t).unwrap() && t.dim() == 2));
        assert_eq!(twos.iter().collect::<HashSet<_>>().len(), 35);
    }

    #[test]
    fn trivial_quotient_is_identity() {
        let full = Subspace::full(5).unwrap();
        let frame = QuotientFrame::new(&full, &Subspace::zero(5).unwrap()).unwrap();
        for s in Grassmannian::new(5, 2).unwrap() {
            assert_eq!(frame.project(&s).unwrap(), s);
            assert_eq!(frame.lift_preimage(&s).unwrap(), s);
        }
    }

    #[test]
    fn quotient_of_eight_by_four() {
        let full = Subspace::full(8).unwrap();
        let sub = Subspace::span(8, [1, 34, 40, 192]).unwrap();
        let frame = QuotientFrame::new(&full, &sub).unwrap();
        assert_eq!(frame.quotient_dim(), 4);
        let lifted = frame.quotient_grassmannian(2).unwrap();
        assert_eq!(lifted.len(), 35);
        for (s, xbar) in lifted.iter().zip(Grassmannian::new(4, 2).unwrap()) {
            assert_eq!(s.dim(), 6);
            assert!(s.contains(&sub).unwrap());
            assert_eq!(frame.project(s).unwrap(), xbar);
            assert_eq!(frame.lift_preimage(&xbar).unwrap(), *s);
        }
        // a subspace not above `sub` is rejected
        assert!(frame.project(&Subspace::span(8, [2]).unwrap()).is_err());
    }

    #[test]
    fn quotient_between_proper_subspaces() {
        let sup = Subspace::span(7, [0b0001111, 0b0110000, 0b1000001]).unwrap();
        let sub = Subspace::span(7, [0b0111111]).unwrap();
        let frame = QuotientFrame::new(&sup, &sub).unwrap();
        assert_eq!(frame.quotient_dim(), sup.dim() - 1);
        for s in Grassmannian::new(frame.quotient_dim(), 1).unwrap() {
            let up = frame.lift_preimage(&s).unwrap();
            assert!(sup.contains(&up).unwrap() && up.contains(&sub).unwrap());
            assert_eq!(frame.project(&up).unwrap(), s);
        }
        assert!(QuotientFrame::new(&sub, &sup).is_err());
    }

    proptest! {
        #[test]
        fn canonical_form_ignores_generator_choice(
            gens in proptest::collection::vec(0u64..1 << 10, 0..6),
            seed in any::<u64>(),
        ) {
            let s = Subspace::span(10, gens.iter().copied()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut mixed = gens.clone();
            for _ in 0..10 {
                mixed.shuffle(&mut rng);
                if mixed.len() >= 2 {
                    let (i, j) = (rng.gen_range(0..mixed.len()), rng.gen_range(0..mixed.len()));
                    if i != j {
                        mixed[i] ^= mixed[j];
                    }
                }
                let again = Subspace::span(10, mixed.iter().copied()).unwrap();
                prop_assert_eq!(&again, &s);
            }
        }
    }
}
