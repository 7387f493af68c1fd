//! Avoiding joins, the decomposition of a Grassmannian into joins, and the
//! recursive constructions built on them.
//!
//! Over a chain `U1 <= U2` and subspaces `K1 <= U1`, `U2 <= K2`, the avoiding
//! join collects every `K` with `U1 ∩ K = K1`, `U2 + K = K2` and
//! `U1 ∩ K = U2 ∩ K`. Such a `K` meets `U2` exactly in `K1`, so it is
//! `K1` plus a graph of a linear map from a complement of `U2` in `K2` into
//! a complement of `K1` in `U2`. That gives `2^{(u2-k1)(k2-u2)}` members of
//! dimension `k1 + k2 - u2`.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::design::{
    assemble_large_set, default_hyperplane, default_point, derived_large_set, dual_large_set,
    member_lambda, residual_large_set, t_equivalence_witness, LargeSet,
};
use crate::error::{Error, Result};
use crate::grassmann::{enumerate_grassmannian, gaussian_binomial, QuotientFrame, Subspace};
use crate::planner::{LSParams, PlanNode};

/// Refuse to materialize more subspaces than this unless forced.
pub const DEFAULT_SIZE_CAP: u64 = 10_000_000;

/// Largest join exponent we are willing to enumerate.
const MAX_JOIN_EXPONENT: usize = 32;

/// A chain `U1 <= U2` inside `GF(2)^v` with the frames that move the factors
/// of a join into the ambient space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinChain {
    u1: Subspace,
    u2: Subspace,
    /// Coordinates of `U1`.
    first: QuotientFrame,
    /// Coordinates of `V / U2`.
    second: QuotientFrame,
}

impl JoinChain {
    pub fn new(u1: &Subspace, u2: &Subspace) -> Result<Self> {
        let v = u1.ambient_dim();
        if u2.ambient_dim() != v {
            return Err(Error::DimensionMismatch {
                context: "join chain",
                expected: v,
                found: u2.ambient_dim(),
            });
        }
        if !u2.contains(u1)? {
            return Err(Error::invalid(format!("{u1} is not contained in {u2}")));
        }
        Ok(JoinChain {
            u1: u1.clone(),
            u2: u2.clone(),
            first: QuotientFrame::new(u1, &Subspace::zero(v)?)?,
            second: QuotientFrame::new(&Subspace::full(v)?, u2)?,
        })
    }

    /// `U1 = <e_0..e_{d1-1}>`, `U2 = <e_0..e_{d2-1}>`.
    pub fn standard(v: usize, d1: usize, d2: usize) -> Result<Self> {
        JoinChain::new(&Subspace::standard(v, d1)?, &Subspace::standard(v, d2)?)
    }

    pub fn u1(&self) -> &Subspace {
        &self.u1
    }

    pub fn u2(&self) -> &Subspace {
        &self.u2
    }

    pub fn ambient_dim(&self) -> usize {
        self.u1.ambient_dim()
    }

    /// Ambient dimension of the first factor, `dim U1`.
    pub fn first_dim(&self) -> usize {
        self.u1.dim()
    }

    /// Ambient dimension of the second factor, `v - dim U2`.
    pub fn second_dim(&self) -> usize {
        self.ambient_dim() - self.u2.dim()
    }

    /// A subspace given in coordinates of `U1`, as a subspace of `V`.
    pub fn embed_first(&self, b: &Subspace) -> Result<Subspace> {
        self.first.lift_preimage(b)
    }

    /// Full preimage in `V` of a subspace of `V / U2`.
    pub fn lift_second(&self, b: &Subspace) -> Result<Subspace> {
        self.second.lift_preimage(b)
    }

    /// `(u2 - k1)(k2 - u2)`, the base-2 logarithm of a join's size.
    pub fn join_exponent(&self, k1: usize, k2: usize) -> usize {
        (self.u2.dim() - k1) * (k2 - self.u2.dim())
    }
}

/// The defining conditions of the avoiding join, checked literally.
pub fn in_avoiding_join(
    k: &Subspace,
    k1: &Subspace,
    k2: &Subspace,
    chain: &JoinChain,
) -> Result<bool> {
    let meet1 = chain.u1.intersect(k)?;
    Ok(meet1 == *k1 && chain.u2.sum(k)? == *k2 && meet1 == chain.u2.intersect(k)?)
}

/// Every member of the avoiding join of `k1 <= U1` and `U2 <= k2`, built
/// directly rather than by filtering.
pub fn avoiding_join(k1: &Subspace, k2: &Subspace, chain: &JoinChain) -> Result<Vec<Subspace>> {
    if !chain.u1.contains(k1)? {
        return Err(Error::invalid(format!(
            "{k1} is not contained in U1 = {}",
            chain.u1
        )));
    }
    if !k2.contains(&chain.u2)? {
        return Err(Error::invalid(format!(
            "{k2} does not contain U2 = {}",
            chain.u2
        )));
    }
    Ok(join_unchecked(k1, k2, chain))
}

fn join_unchecked(k1: &Subspace, k2: &Subspace, chain: &JoinChain) -> Vec<Subspace> {
    let v = chain.ambient_dim();
    let targets = QuotientFrame::new(&chain.u2, k1).expect("k1 <= u1 <= u2");
    let sources = QuotientFrame::new(k2, &chain.u2).expect("u2 <= k2");
    let (a, b) = (targets.quotient_dim(), sources.quotient_dim());
    let exponent = a * b;
    assert!(
        exponent <= MAX_JOIN_EXPONENT,
        "join of size 2^{exponent} is too large"
    );
    let mask = (1u64 << a) - 1;
    (0..1u64 << exponent)
        .map(|m| {
            let graph = sources
                .transversal()
                .iter()
                .enumerate()
                .map(|(j, &c)| c ^ targets.lift_vector(m >> (j * a) & mask));
            Subspace::span_unchecked(v, k1.rows().iter().copied().chain(graph))
        })
        .collect()
}

/// Union of the joins of all pairs from `b1` (in coordinates of `U1`) and
/// `b2` (in coordinates of `V / U2`), sorted. Joins of distinct pairs are
/// disjoint; a collision is reported as an error.
pub fn join_sets(b1: &[Subspace], b2: &[Subspace], chain: &JoinChain) -> Result<Vec<Subspace>> {
    let firsts = b1
        .iter()
        .map(|b| chain.embed_first(b))
        .collect::<Result<Vec<_>>>()?;
    let seconds = b2
        .iter()
        .map(|b| chain.lift_second(b))
        .collect::<Result<Vec<_>>>()?;
    let mut expected = 0u64;
    for f in &firsts {
        for s in &seconds {
            let e = chain.join_exponent(f.dim(), s.dim());
            if e > MAX_JOIN_EXPONENT {
                return Err(Error::SizeGuard {
                    count: format!("2^{e}"),
                    cap: 1 << MAX_JOIN_EXPONENT,
                });
            }
            expected += 1 << e;
        }
    }
    let mut out: Vec<Subspace> = firsts
        .par_iter()
        .flat_map_iter(|f| {
            seconds
                .iter()
                .flat_map(move |s| join_unchecked(f, s, chain))
        })
        .collect();
    out.par_sort_unstable();
    if let Some(w) = out.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!(
            "joins of distinct pairs share {}",
            w[0]
        )));
    }
    assert_eq!(out.len() as u64, expected);
    Ok(out)
}

/// One cell of the decomposition of `[V choose k]` with offset `s`: the
/// join of the `i`-subspaces of `U_{s+i}` with the `(k-i)`-subspaces of
/// `V / U_{s+i+1}` over the standard flag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionCell {
    pub v: usize,
    pub k: usize,
    pub s: usize,
    pub i: usize,
    pub chain: JoinChain,
}

impl DecompositionCell {
    /// `(ambient, dim)` of the first factor.
    pub fn first_dims(&self) -> (usize, usize) {
        (self.s + self.i, self.i)
    }

    /// `(ambient, dim)` of the second factor.
    pub fn second_dims(&self) -> (usize, usize) {
        (self.v - self.s - self.i - 1, self.k - self.i)
    }

    /// `[s+i choose i] [v-s-i-1 choose k-i] 2^{(s+1)(k-i)}`.
    pub fn size(&self) -> BigUint {
        let (a, b) = self.first_dims();
        let (c, d) = self.second_dims();
        let g = |n: usize, m: usize| gaussian_binomial(n as i64, m as i64, 2).expect("q = 2");
        (g(a, b) * g(c, d)) << ((self.s + 1) * (self.k - self.i))
    }

    pub fn materialize(&self) -> Result<Vec<Subspace>> {
        let (a, b) = self.first_dims();
        let (c, d) = self.second_dims();
        join_sets(
            &enumerate_grassmannian(a, b)?,
            &enumerate_grassmannian(c, d)?,
            &self.chain,
        )
    }
}

/// The cells `i = 0..=k` partitioning `[V choose k]`, for `0 <= s <= v-k-1`.
pub fn grassmann_decomposition(v: usize, k: usize, s: usize) -> Result<Vec<DecompositionCell>> {
    if k + s + 1 > v {
        return Err(Error::invalid(format!(
            "offset s = {s} needs s <= v-k-1 = {}",
            v as i64 - k as i64 - 1
        )));
    }
    (0..=k)
        .map(|i| {
            Ok(DecompositionCell {
                v,
                k,
                s,
                i,
                chain: JoinChain::standard(v, s + i, s + i + 1)?,
            })
        })
        .collect()
}

/// Index of the cell containing `subspace`: the `i` with
/// `dim(K ∩ U_{s+i}) = i = dim(K ∩ U_{s+i+1})`.
pub fn decomposition_cell_of(subspace: &Subspace, s: usize) -> Result<usize> {
    let v = subspace.ambient_dim();
    let meet =
        |d: usize| -> Result<usize> { Ok(Subspace::standard(v, d)?.intersect(subspace)?.dim()) };
    for i in 0..=subspace.dim() {
        if s + i + 1 > v {
            break;
        }
        if meet(s + i)? == i && meet(s + i + 1)? == i {
            return Ok(i);
        }
    }
    Err(Error::invalid(format!(
        "{subspace} lies in no cell for s = {s}"
    )))
}

/// `N` pairwise disjoint sets of `k`-subspaces of `GF(2)^v` that are
/// pairwise `t`-equivalent; `t = -1` imposes nothing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionedSet {
    v: usize,
    k: usize,
    t: i32,
    parts: Vec<Vec<Subspace>>,
}

impl PartitionedSet {
    /// Checks dimensions, disjointness and `t`-equivalence.
    pub fn new(v: usize, k: usize, t: i32, mut parts: Vec<Vec<Subspace>>) -> Result<Self> {
        if parts.is_empty() || t < -1 {
            return Err(Error::invalid("a partition needs N >= 1 parts and t >= -1"));
        }
        let mut owner: HashMap<&Subspace, usize> = HashMap::new();
        for p in &mut parts {
            p.sort_unstable();
        }
        for (j, p) in parts.iter().enumerate() {
            for b in p {
                if b.ambient_dim() != v || b.dim() != k {
                    return Err(Error::invalid(format!(
                        "{b} is not a {k}-subspace of GF(2)^{v}"
                    )));
                }
                if let Some(&i) = owner.get(b) {
                    return Err(Error::Overlap {
                        first: i,
                        second: j,
                        witness: b.clone(),
                    });
                }
                owner.insert(b, j);
            }
        }
        let set = PartitionedSet { v, k, t, parts };
        set.check_equivalence()?;
        Ok(set)
    }

    /// The whole of `[GF(2)^v choose k]` in part 0, other parts empty.
    pub fn trivial(v: usize, k: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("N must be positive"));
        }
        let mut parts = vec![Vec::new(); n];
        parts[0] = enumerate_grassmannian(v, k)?;
        Ok(PartitionedSet { v, k, t: -1, parts })
    }

    pub fn from_large_set(ls: &LargeSet) -> Self {
        PartitionedSet {
            v: ls.v(),
            k: ls.k(),
            t: ls.t() as i32,
            parts: ls.designs().iter().map(|d| d.blocks().to_vec()).collect(),
        }
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> i32 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.parts.len()
    }

    pub fn parts(&self) -> &[Vec<Subspace>] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.parts.iter().map(Vec::len).sum()
    }

    /// Reads the parts as the designs of a large set and verifies it.
    pub fn into_large_set(self) -> Result<LargeSet> {
        if self.t < 0 {
            return Err(Error::invalid("a partition with t = -1 is not a large set"));
        }
        assemble_large_set(self.v, self.k, self.t as usize, self.parts)
    }

    fn check_equivalence(&self) -> Result<()> {
        for m in 1..self.parts.len() {
            if let Some((witness, a, b)) =
                t_equivalence_witness(self.v, &self.parts[0], &self.parts[m], self.t)?
            {
                return Err(Error::NotEquivalent {
                    t: self.t,
                    first: 0,
                    second: m,
                    witness,
                    count_first: a,
                    count_second: b,
                });
            }
        }
        Ok(())
    }
}

/// Joins two `(N, t_i)`-partitions over `chain`. Part `m` collects the
/// joins of part `i` of `p1` with part `j` of `p2` for `i + j = m mod N`;
/// the result is checked to be `(t1 + t2 + 1)`-equivalent before return.
pub fn compose_partitions(
    p1: &PartitionedSet,
    p2: &PartitionedSet,
    chain: &JoinChain,
) -> Result<PartitionedSet> {
    let n = p1.n();
    if p2.n() != n {
        return Err(Error::invalid(format!(
            "cannot compose {n} parts with {} parts",
            p2.n()
        )));
    }
    if p1.v != chain.first_dim() || p2.v != chain.second_dim() {
        return Err(Error::invalid(format!(
            "factors live in dimensions {} and {}, the chain needs {} and {}",
            p1.v,
            p2.v,
            chain.first_dim(),
            chain.second_dim()
        )));
    }
    let mut parts = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            let joined = join_sets(&p1.parts[i], &p2.parts[j], chain)?;
            parts[(i + j) % n].extend(joined);
        }
    }
    for p in &mut parts {
        p.par_sort_unstable();
    }
    // a join has dimension k1 + (u2 + k2) - u2
    let result = PartitionedSet {
        v: chain.ambient_dim(),
        k: p1.k + p2.k,
        t: (p1.t + p2.t + 1).max(-1),
        parts,
    };
    result.check_equivalence()?;
    Ok(result)
}

/// `LS(t,k,v)` from `LS(t,k-1,v-1)` and `LS(t,k,v-1)`, both read inside the
/// hyperplane `H = {x : x_{v-1} = 0}`. Part `i` takes the blocks of part `i`
/// of `same_k` as they are, and every `K` not in `H` whose trace on `H` is a
/// block of part `i` of `small_k`.
pub fn extend_by_hyperplane(small_k: &LargeSet, same_k: &LargeSet) -> Result<LargeSet> {
    let (n, t, w, k) = (same_k.n(), same_k.t(), same_k.v(), same_k.k());
    if small_k.n() != n || small_k.t() != t {
        return Err(Error::invalid(format!(
            "cannot extend {} with {}: N and t must agree",
            small_k.label(),
            same_k.label()
        )));
    }
    if small_k.v() != w || small_k.k() + 1 != k {
        return Err(Error::invalid(format!(
            "{} and {} are not of shapes (t,k-1,v-1) and (t,k,v-1)",
            small_k.label(),
            same_k.label()
        )));
    }
    let v = w + 1;
    let top = 1u64 << w;
    let parts = small_k
        .designs()
        .par_iter()
        .zip(same_k.designs())
        .map(|(small, same)| {
            let mut part = Vec::with_capacity(same.len() + small.len() << (w - small_k.k()));
            for b in same.blocks() {
                part.push(Subspace::span(v, b.rows().iter().copied())?);
            }
            for a in small.blocks() {
                // complement of A in H spanned by the unit vectors off its pivots
                let free: Vec<u64> = (0..w)
                    .filter(|&c| a.pivot_mask() >> c & 1 == 0)
                    .map(|c| 1 << c)
                    .collect();
                for m in 0..1u64 << free.len() {
                    let h = free
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| m >> j & 1 == 1)
                        .fold(0, |x, (_, f)| x ^ f);
                    part.push(Subspace::span(
                        v,
                        a.rows().iter().copied().chain([top | h]),
                    )?);
                }
            }
            Ok(part)
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_large_set(v, k, t, parts)
}

/// Large sets available as leaves of a plan, keyed by parameters.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    sets: HashMap<LSParams, Arc<LargeSet>>,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn params_of(ls: &LargeSet) -> LSParams {
        LSParams::new(
            2,
            ls.n() as u64,
            ls.t() as i32,
            ls.k() as u32,
            ls.v() as u32,
        )
    }

    pub fn insert(&mut self, ls: LargeSet) -> LSParams {
        let p = Registry::params_of(&ls);
        self.sets.insert(p, Arc::new(ls));
        p
    }

    pub fn get(&self, p: &LSParams) -> Option<&Arc<LargeSet>> {
        self.sets.get(p)
    }

    pub fn contains(&self, p: &LSParams) -> bool {
        self.sets.contains_key(p)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExecOptions {
    pub size_cap: u64,
    pub force: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            size_cap: DEFAULT_SIZE_CAP,
            force: false,
        }
    }
}

/// Table leaves of `plan` that the registry cannot supply, skipping subtrees
/// whose root the registry already holds.
pub fn missing_leaves(plan: &PlanNode, registry: &Registry) -> Vec<LSParams> {
    fn go(
        n: &PlanNode,
        registry: &Registry,
        seen: &mut HashSet<LSParams>,
        out: &mut Vec<LSParams>,
    ) {
        let p = n.params();
        if registry.contains(&p) || !seen.insert(p) {
            return;
        }
        if let PlanNode::LeafTable { .. } = n {
            out.push(p);
        }
        for c in n.children() {
            go(c, registry, seen, out);
        }
    }
    let mut out = Vec::new();
    go(plan, registry, &mut HashSet::new(), &mut out);
    out.sort();
    out
}

/// Builds the large set described by `plan` explicitly and verifies it.
pub fn execute_plan(
    plan: &PlanNode,
    registry: &Registry,
    options: ExecOptions,
) -> Result<LargeSet> {
    plan.validate()?;
    let root = plan.params();
    if root.t < 0 {
        return Err(Error::invalid("the root of a plan must have t >= 0"));
    }
    let missing = missing_leaves(plan, registry);
    if !missing.is_empty() {
        return Err(Error::MissingLeaves(
            missing.iter().map(LSParams::to_string).collect(),
        ));
    }
    if !options.force {
        let mut too_big = None;
        plan.walk_distinct(&mut |n| {
            let p = n.params();
            if too_big.is_none() && !registry.contains(&p) {
                let count = gaussian_binomial(p.v as i64, p.k as i64, 2).expect("q = 2");
                if count > BigUint::from(options.size_cap) {
                    too_big = Some(count);
                }
            }
        });
        if let Some(count) = too_big {
            return Err(Error::SizeGuard {
                count: count.to_string(),
                cap: options.size_cap,
            });
        }
    }
    let mut executor = Executor {
        registry,
        memo: HashMap::new(),
    };
    let result = executor.run(plan)?;
    PartitionedSet::clone(&result).into_large_set()
}

struct Executor<'a> {
    registry: &'a Registry,
    memo: HashMap<LSParams, Arc<PartitionedSet>>,
}

impl Executor<'_> {
    fn run(&mut self, node: &PlanNode) -> Result<Arc<PartitionedSet>> {
        let p = node.params();
        if p.q != 2 {
            return Err(Error::invalid(format!("{p}: only q = 2 can be executed")));
        }
        if let Some(ls) = self.registry.get(&p) {
            return Ok(Arc::new(PartitionedSet::from_large_set(ls)));
        }
        if let Some(done) = self.memo.get(&p) {
            return Ok(done.clone());
        }
        let (v, k) = (p.v as usize, p.k as usize);
        let as_large_set = |set: Arc<PartitionedSet>| PartitionedSet::clone(&set).into_large_set();
        let result = match node {
            PlanNode::LeafTable { .. } => unreachable!("missing leaves are rejected up front"),
            PlanNode::LeafTrivial { .. } => PartitionedSet::trivial(v, k, p.n as usize)?,
            PlanNode::Derived { child, .. } => {
                let ls = as_large_set(self.run(child)?)?;
                PartitionedSet::from_large_set(&derived_large_set(&ls, &default_point(ls.v())?)?)
            }
            PlanNode::Residual { child, .. } => {
                let ls = as_large_set(self.run(child)?)?;
                PartitionedSet::from_large_set(&residual_large_set(
                    &ls,
                    &default_hyperplane(ls.v())?,
                )?)
            }
            PlanNode::Dual { child, .. } => {
                let ls = as_large_set(self.run(child)?)?;
                PartitionedSet::from_large_set(&dual_large_set(&ls)?)
            }
            PlanNode::HyperplaneExtend {
                small_k, same_k, ..
            } => {
                let small = as_large_set(self.run(small_k)?)?;
                let same = as_large_set(self.run(same_k)?)?;
                PartitionedSet::from_large_set(&extend_by_hyperplane(&small, &same)?)
            }
            PlanNode::Decompose { s, cells, .. } => {
                let decomposition = grassmann_decomposition(v, k, *s as usize)?;
                let mut parts = vec![Vec::new(); p.n as usize];
                for (cell, plan_cell) in decomposition.iter().zip(cells) {
                    let first = self.run(&plan_cell.first)?;
                    let second = self.run(&plan_cell.second)?;
                    let composed = compose_partitions(&first, &second, &cell.chain)?;
                    for (part, mut add) in parts.iter_mut().zip(composed.parts) {
                        part.append(&mut add);
                    }
                }
                PartitionedSet::new(v, k, p.t, parts)?
            }
        };
        if result.n() != p.n as usize || result.t() < p.t {
            return Err(Error::invalid(format!(
                "{} node produced an unexpected partition for {p}",
                node.kind()
            )));
        }
        let result = Arc::new(result);
        self.memo.insert(p, result.clone());
        Ok(result)
    }
}

/// `LS_2[N](0,k,v)` by cutting the Grassmannian in rank order into `N`
/// runs of equal length.
pub fn equal_split(v: usize, k: usize, n: usize) -> Result<LargeSet> {
    member_lambda(v, k, 0, n)?;
    let all = enumerate_grassmannian(v, k)?;
    let len = all.len() / n;
    let parts = all.chunks(len).map(<[Subspace]>::to_vec).collect();
    assemble_large_set(v, k, 0, parts)
}
