//! Subspace designs, large sets, their verification, and the derived,
//! residual and dual transforms.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{
    gaussian_binomial, GrassmannIndex, Grassmannian, LocalGrassmannian, QuotientFrame, Subspace,
};

/// Largest `[v choose t]_2` for which per-t-subspace counts use a dense
/// array instead of a hash map.
const DENSE_COUNT_LIMIT: u64 = 1 << 20;

/// A set of `k`-subspaces of GF(2)^v with a declared `t` and `lambda`.
/// Blocks are kept sorted and distinct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Design {
    v: usize,
    k: usize,
    t: usize,
    lambda: u64,
    blocks: Vec<Subspace>,
}

impl Design {
    /// Checks shape (dimensions, distinct blocks) but not the design
    /// property; see [`Design::verify`].
    pub fn from_parts(
        v: usize,
        k: usize,
        t: usize,
        lambda: u64,
        blocks: Vec<Subspace>,
    ) -> Result<Self> {
        let blocks = normalize_blocks(v, k, blocks)?;
        if t > k {
            return Err(Error::invalid(format!("t={t} exceeds k={k}")));
        }
        Ok(Design {
            v,
            k,
            t,
            lambda,
            blocks,
        })
    }

    /// Builds a design and verifies it, optionally against an expected lambda.
    pub fn verified(
        v: usize,
        k: usize,
        t: usize,
        blocks: Vec<Subspace>,
        expected_lambda: Option<u64>,
    ) -> Result<Self> {
        let blocks = normalize_blocks(v, k, blocks)?;
        let lambda = verify_design(v, t, &blocks)?;
        if let Some(declared) = expected_lambda {
            if declared != lambda {
                return Err(Error::LambdaMismatch {
                    declared,
                    found: lambda,
                });
            }
        }
        Ok(Design {
            v,
            k,
            t,
            lambda,
            blocks,
        })
    }

    /// Recomputes lambda and compares it with the declared value.
    pub fn verify(&self) -> Result<u64> {
        let found = verify_design(self.v, self.t, &self.blocks)?;
        if found != self.lambda {
            return Err(Error::LambdaMismatch {
                declared: self.lambda,
                found,
            });
        }
        Ok(found)
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn lambda(&self) -> u64 {
        self.lambda
    }

    pub fn blocks(&self) -> &[Subspace] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn contains(&self, block: &Subspace) -> bool {
        self.blocks.binary_search(block).is_ok()
    }

    pub fn into_blocks(self) -> Vec<Subspace> {
        self.blocks
    }
}

fn normalize_blocks(v: usize, k: usize, mut blocks: Vec<Subspace>) -> Result<Vec<Subspace>> {
    if let Some(b) = blocks.iter().find(|b| b.ambient_dim() != v || b.dim() != k) {
        return Err(Error::invalid(format!(
            "block {b} is not a {k}-subspace of GF(2)^{v}"
        )));
    }
    blocks.par_sort_unstable();
    if let Some(w) = blocks.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!("block {} is repeated", w[0])));
    }
    Ok(blocks)
}

/// How many blocks contain each `t`-subspace.
pub(crate) enum TCounts {
    Dense {
        index: GrassmannIndex,
        counts: Vec<u32>,
    },
    Sparse {
        v: usize,
        t: usize,
        total: u64,
        counts: HashMap<Subspace, u64>,
    },
}

impl TCounts {
    pub(crate) fn compute(v: usize, t: usize, blocks: &[Subspace]) -> Result<Self> {
        let total = gaussian_binomial(v as i64, t as i64, 2)?;
        let mut locals: HashMap<usize, LocalGrassmannian> = HashMap::new();
        for b in blocks {
            if b.ambient_dim() != v {
                return Err(Error::DimensionMismatch {
                    context: "t-subspace counting",
                    expected: v,
                    found: b.ambient_dim(),
                });
            }
            locals
                .entry(b.dim())
                .or_insert_with(|| LocalGrassmannian::new(b.dim(), t));
        }
        let dense = total.to_u64().filter(|&n| n <= DENSE_COUNT_LIMIT);
        if let Some(n) = dense {
            let index = GrassmannIndex::new(v, t)?;
            let counts = blocks
                .par_chunks(1024)
                .fold(
                    || vec![0u32; n as usize],
                    |mut acc, chunk| {
                        for b in chunk {
                            for s in locals[&b.dim()].images(b) {
                                acc[index.rank(&s) as usize] += 1;
                            }
                        }
                        acc
                    },
                )
                .reduce(
                    || vec![0u32; n as usize],
                    |mut a, b| {
                        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        a
                    },
                );
            Ok(TCounts::Dense { index, counts })
        } else {
            let counts = blocks
                .par_chunks(1024)
                .fold(HashMap::new, |mut acc: HashMap<Subspace, u64>, chunk| {
                    for b in chunk {
                        for s in locals[&b.dim()].images(b) {
                            *acc.entry(s).or_insert(0) += 1;
                        }
                    }
                    acc
                })
                .reduce(HashMap::new, |mut a, b| {
                    for (s, c) in b {
                        *a.entry(s).or_insert(0) += c;
                    }
                    a
                });
            Ok(TCounts::Sparse {
                v,
                t,
                total: total.to_u64().unwrap_or(u64::MAX),
                counts,
            })
        }
    }

    fn get(&self, s: &Subspace) -> u64 {
        match self {
            TCounts::Dense { index, counts } => counts[index.rank(s) as usize] as u64,
            TCounts::Sparse { counts, .. } => counts.get(s).copied().unwrap_or(0),
        }
    }

    /// Common value of all counts, or a t-subspace whose count differs from
    /// the others together with (its count, the reference count).
    fn uniform(&self) -> std::result::Result<u64, (Subspace, u64, u64)> {
        match self {
            TCounts::Dense { index, counts } => {
                let first = counts[0] as u64;
                match counts.iter().position(|&c| c as u64 != first) {
                    None => Ok(first),
                    Some(i) => Err((
                        index.unrank(i as u64).expect("rank in range"),
                        counts[i] as u64,
                        first,
                    )),
                }
            }
            TCounts::Sparse {
                v,
                t,
                total,
                counts,
            } => {
                let mut values = counts.iter();
                let reference = values.next().map(|(_, &c)| c).unwrap_or(0);
                if let Some((s, &c)) = values.find(|(_, &c)| c != reference) {
                    return Err((s.clone(), c, reference));
                }
                if counts.len() as u64 == *total {
                    return Ok(reference);
                }
                // some t-subspace lies in no block
                let missing = Grassmannian::new(*v, *t)
                    .expect("dimensions already validated")
                    .find(|s| !counts.contains_key(s))
                    .expect("fewer keys than t-subspaces");
                Err((missing, 0, reference))
            }
        }
    }

    /// First t-subspace where the two count maps differ.
    fn first_difference(&self, other: &TCounts) -> Option<(Subspace, u64, u64)> {
        match (self, other) {
            (TCounts::Dense { index, counts: a }, TCounts::Dense { counts: b, .. }) => {
                a.iter().zip(b).position(|(x, y)| x != y).map(|i| {
                    (
                        index.unrank(i as u64).expect("rank in range"),
                        a[i] as u64,
                        b[i] as u64,
                    )
                })
            }
            (TCounts::Sparse { counts: a, .. }, TCounts::Sparse { counts: b, .. }) => {
                let mut diffs: Vec<&Subspace> = a
                    .keys()
                    .chain(b.keys())
                    .filter(|s| self.get(s) != other.get(s))
                    .collect();
                diffs.sort();
                diffs
                    .first()
                    .map(|s| ((*s).clone(), self.get(s), other.get(s)))
            }
            _ => unreachable!("count maps of one (v, t) share a representation"),
        }
    }
}

/// Checks that every `t`-subspace of GF(2)^v lies in the same number of
/// blocks and returns that number.
pub fn verify_design(v: usize, t: usize, blocks: &[Subspace]) -> Result<u64> {
    let k = match blocks.first() {
        Some(b) => b.dim(),
        None => return Err(Error::invalid("a design needs at least one block")),
    };
    if let Some(b) = blocks.iter().find(|b| b.dim() != k || b.ambient_dim() != v) {
        return Err(Error::invalid(format!(
            "block {b} is not a {k}-subspace of GF(2)^{v}"
        )));
    }
    if t > k {
        return Err(Error::invalid(format!("t={t} exceeds k={k}")));
    }
    let counts = TCounts::compute(v, t, blocks)?;
    let lambda = counts
        .uniform()
        .map_err(|(witness, count, expected)| Error::NotADesign {
            t,
            witness,
            count,
            expected,
        })?;
    let lhs = BigUint::from(lambda) * gaussian_binomial(v as i64, t as i64, 2)?;
    let rhs = BigUint::from(blocks.len()) * gaussian_binomial(k as i64, t as i64, 2)?;
    if lhs != rhs {
        return Err(Error::CountIdentity {
            lhs: lhs.to_u128().unwrap_or(u128::MAX),
            rhs: rhs.to_u128().unwrap_or(u128::MAX),
        });
    }
    Ok(lambda)
}

/// A `t`-subspace whose number of containing blocks differs between the two
/// sets, with both counts; `None` if the sets are `t`-equivalent. For
/// `t = -1` there is no condition.
pub fn t_equivalence_witness(
    v: usize,
    first: &[Subspace],
    second: &[Subspace],
    t: i32,
) -> Result<Option<(Subspace, u64, u64)>> {
    if t < 0 {
        return Ok(None);
    }
    let a = TCounts::compute(v, t as usize, first)?;
    let b = TCounts::compute(v, t as usize, second)?;
    Ok(a.first_difference(&b))
}

pub fn t_equivalent(v: usize, first: &[Subspace], second: &[Subspace], t: i32) -> Result<bool> {
    Ok(t_equivalence_witness(v, first, second, t)?.is_none())
}

/// `N` designs with common parameters, meant to partition a Grassmannian.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LargeSet {
    v: usize,
    k: usize,
    t: usize,
    designs: Vec<Design>,
}

impl LargeSet {
    pub fn new(designs: Vec<Design>) -> Result<Self> {
        let first = designs
            .first()
            .ok_or_else(|| Error::invalid("a large set needs at least one design"))?;
        let (v, k, t) = (first.v, first.k, first.t);
        if let Some(d) = designs.iter().find(|d| (d.v, d.k, d.t) != (v, k, t)) {
            return Err(Error::invalid(format!(
                "design with (v,k,t)=({},{},{}) in a large set of ({v},{k},{t})",
                d.v, d.k, d.t
            )));
        }
        Ok(LargeSet { v, k, t, designs })
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n(&self) -> usize {
        self.designs.len()
    }

    pub fn designs(&self) -> &[Design] {
        &self.designs
    }

    pub fn into_designs(self) -> Vec<Design> {
        self.designs
    }

    /// Lambda of each member: `[v-t choose k-t]_2 / N`.
    pub fn member_lambda(&self) -> Result<u64> {
        member_lambda(self.v, self.k, self.t, self.n())
    }

    /// Short name such as `LS_2[3](2,4,8)`.
    pub fn label(&self) -> String {
        format!("LS_2[{}]({},{},{})", self.n(), self.t, self.k, self.v)
    }
}

pub(crate) fn member_lambda(v: usize, k: usize, t: usize, n: usize) -> Result<u64> {
    let top = v - t;
    let bottom = k - t;
    let lambda_max = gaussian_binomial(top as i64, bottom as i64, 2)?;
    if n == 0 || !(&lambda_max % n).is_zero() {
        return Err(Error::Inadmissible {
            params: format!("LS_2[{n}]({t},{k},{v})"),
            top: top as u32,
            bottom: bottom as u32,
            value: lambda_max.to_string(),
        });
    }
    (lambda_max / n)
        .to_u64()
        .ok_or_else(|| Error::invalid("lambda does not fit in 64 bits"))
}

/// Outcome of a successful [`verify_large_set`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LargeSetReport {
    pub n: usize,
    pub v: usize,
    pub k: usize,
    pub t: usize,
    pub lambda: u64,
    pub blocks_per_design: Vec<usize>,
    pub total_blocks: u64,
}

/// Checks disjointness, coverage and the design property of every member.
pub fn verify_large_set(ls: &LargeSet) -> Result<LargeSetReport> {
    let mut owner: HashMap<&Subspace, usize> = HashMap::new();
    for (i, d) in ls.designs.iter().enumerate() {
        for b in &d.blocks {
            if let Some(&j) = owner.get(b) {
                return Err(Error::Overlap {
                    first: j,
                    second: i,
                    witness: b.clone(),
                });
            }
            owner.insert(b, i);
        }
    }
    let total = owner.len() as u64;
    let expected = gaussian_binomial(ls.v as i64, ls.k as i64, 2)?;
    if BigUint::from(total) != expected {
        return Err(Error::Coverage {
            found: total,
            expected: expected.to_u64().unwrap_or(u64::MAX),
        });
    }
    let lambda = ls.member_lambda()?;
    for (index, d) in ls.designs.iter().enumerate() {
        let found = verify_design(ls.v, ls.t, &d.blocks).map_err(|e| Error::MemberDesign {
            index,
            source: Box::new(e),
        })?;
        if found != lambda || d.lambda != lambda {
            return Err(Error::MemberDesign {
                index,
                source: Box::new(Error::LambdaMismatch {
                    declared: lambda,
                    found,
                }),
            });
        }
    }
    Ok(LargeSetReport {
        n: ls.n(),
        v: ls.v,
        k: ls.k,
        t: ls.t,
        lambda,
        blocks_per_design: ls.designs.iter().map(Design::len).collect(),
        total_blocks: total,
    })
}

/// Wraps block sets as the members of a large set and verifies it.
pub fn assemble_large_set(
    v: usize,
    k: usize,
    t: usize,
    parts: Vec<Vec<Subspace>>,
) -> Result<LargeSet> {
    let lambda = member_lambda(v, k, t, parts.len())?;
    let designs = parts
        .into_iter()
        .map(|blocks| Design::from_parts(v, k, t, lambda, blocks))
        .collect::<Result<Vec<_>>>()?;
    let ls = LargeSet::new(designs)?;
    verify_large_set(&ls)?;
    Ok(ls)
}

/// `<e_0>`, the default point for derived large sets.
pub fn default_point(v: usize) -> Result<Subspace> {
    Subspace::span(v, [1])
}

/// `{x : x_{v-1} = 0}`, the default hyperplane for residual large sets.
pub fn default_hyperplane(v: usize) -> Result<Subspace> {
    Subspace::standard(v, v.saturating_sub(1))
}

/// Blocks through `point`, seen in the quotient by `point`.
pub fn derived_large_set(ls: &LargeSet, point: &Subspace) -> Result<LargeSet> {
    if ls.t == 0 || ls.k == 0 {
        return Err(Error::invalid("derived large sets need t >= 1"));
    }
    if point.ambient_dim() != ls.v || point.dim() != 1 {
        return Err(Error::invalid(format!(
            "{point} is not a point of GF(2)^{}",
            ls.v
        )));
    }
    let frame = QuotientFrame::new(&Subspace::full(ls.v)?, point)?;
    let parts = ls
        .designs
        .par_iter()
        .map(|d| {
            d.blocks
                .iter()
                .filter(|b| b.contains_unchecked(point))
                .map(|b| frame.project(b))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_large_set(ls.v - 1, ls.k - 1, ls.t - 1, parts)
}

/// Blocks inside `hyperplane`, in coordinates of the hyperplane.
pub fn residual_large_set(ls: &LargeSet, hyperplane: &Subspace) -> Result<LargeSet> {
    if ls.t == 0 {
        return Err(Error::invalid("residual large sets need t >= 1"));
    }
    if hyperplane.ambient_dim() != ls.v || hyperplane.dim() + 1 != ls.v {
        return Err(Error::invalid(format!(
            "{hyperplane} is not a hyperplane of GF(2)^{}",
            ls.v
        )));
    }
    let frame = QuotientFrame::new(hyperplane, &Subspace::zero(ls.v)?)?;
    let parts = ls
        .designs
        .par_iter()
        .map(|d| {
            d.blocks
                .iter()
                .filter(|b| hyperplane.contains_unchecked(b))
                .map(|b| frame.project(b))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_large_set(ls.v - 1, ls.k, ls.t - 1, parts)
}

/// Orthogonal complements of all blocks under the standard dot product.
pub fn dual_large_set(ls: &LargeSet) -> Result<LargeSet> {
    if ls.t > ls.v - ls.k {
        return Err(Error::invalid(format!(
            "dual of a {}-design needs t <= v-k = {}",
            ls.t,
            ls.v - ls.k
        )));
    }
    let parts = ls
        .designs
        .par_iter()
        .map(|d| d.blocks.iter().map(Subspace::dual).collect())
        .collect();
    assemble_large_set(ls.v, ls.v - ls.k, ls.t, parts)
}

/// Design file text: a `q=2 v=.. k=.. t=.. lambda=..` header, then one block
/// per line as its canonical basis rows in decimal.
pub fn format_design(d: &Design) -> String {
    let mut out = format!("q=2 v={} k={} t={} lambda={}\n", d.v, d.k, d.t, d.lambda);
    for b in &d.blocks {
        let row: Vec<String> = b.rows().iter().map(u64::to_string).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parses design file text; `path` is used in error messages only.
pub fn parse_design(text: &str, path: &str) -> Result<Design> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::format(path, 1, "missing header"))?;
    let mut fields: HashMap<&str, u64> = HashMap::new();
    for token in header.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::format(path, 1, format!("malformed header field `{token}`")))?;
        let value = value
            .parse()
            .map_err(|_| Error::format(path, 1, format!("non-numeric header value `{token}`")))?;
        fields.insert(key, value);
    }
    let field = |key: &str| {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| Error::format(path, 1, format!("header lacks `{key}`")))
    };
    if field("q")? != 2 {
        return Err(Error::format(path, 1, "only q=2 is supported"));
    }
    let (v, k, t, lambda) = (
        field("v")? as usize,
        field("k")? as usize,
        field("t")? as usize,
        field("lambda")?,
    );
    if v > crate::grassmann::MAX_AMBIENT || k > v {
        return Err(Error::format(
            path,
            1,
            format!("unsupported dimensions v={v} k={k}"),
        ));
    }
    let mut blocks = Vec::new();
    for (n, line) in lines {
        let rows = line
            .split_whitespace()
            .map(|tok| tok.parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(path, n + 1, e.to_string()))?;
        if rows.len() != k {
            return Err(Error::format(
                path,
                n + 1,
                format!("expected {k} rows, found {}", rows.len()),
            ));
        }
        let b = Subspace::span(v, rows).map_err(|e| Error::format(path, n + 1, e.to_string()))?;
        if b.dim() != k {
            return Err(Error::format(
                path,
                n + 1,
                format!("rows span a {}-subspace, expected {k}", b.dim()),
            ));
        }
        blocks.push(b);
    }
    Design::from_parts(v, k, t, lambda, blocks).map_err(|e| Error::format(path, 1, e.to_string()))
}

pub fn read_design(path: impl AsRef<Path>) -> Result<Design> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_design(&text, &path.display().to_string())
}

pub fn write_design(path: impl AsRef<Path>, d: &Design) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_design(d)).map_err(|e| Error::io(path, e))
}

/// The manifest tying the member design files of a large set together.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LargeSetManifest {
    #[serde(rename = "N")]
    pub n: usize,
    pub q: u32,
    pub v: usize,
    pub k: usize,
    pub t: usize,
    pub lambda: u64,
    /// Member design files, relative to the manifest's directory.
    pub designs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bilinear_form: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

/// Reads a manifest and its member designs. Nothing is verified.
pub fn read_large_set(manifest: impl AsRef<Path>) -> Result<(LargeSet, LargeSetManifest)> {
    let path = manifest.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m: LargeSetManifest = toml::from_str(&text)
        .map_err(|e| Error::format(&path.display().to_string(), 0, e.to_string()))?;
    if m.q != 2 || m.designs.len() != m.n {
        return Err(Error::format(
            &path.display().to_string(),
            0,
            format!(
                "manifest lists {} designs with N={} and q={}",
                m.designs.len(),
                m.n,
                m.q
            ),
        ));
    }
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let designs = m
        .designs
        .iter()
        .map(|f| read_design(dir.join(f)))
        .collect::<Result<Vec<_>>>()?;
    let ls = LargeSet::new(designs)?;
    if (ls.v, ls.k, ls.t) != (m.v, m.k, m.t) {
        return Err(Error::format(
            &path.display().to_string(),
            0,
            "member design parameters disagree with the manifest",
        ));
    }
    Ok((ls, m))
}

/// Writes `<stem>_<i>.txt` for each member and `<stem>.toml`; returns the
/// manifest path.
pub fn write_large_set(
    dir: impl AsRef<Path>,
    stem: &str,
    ls: &LargeSet,
    bilinear_form: Option<String>,
    provenance: Option<String>,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for (i, d) in ls.designs.iter().enumerate() {
        let name = format!("{stem}_{}.txt", i + 1);
        write_design(dir.join(&name), d)?;
        files.push(name);
    }
    let manifest = LargeSetManifest {
        n: ls.n(),
        q: 2,
        v: ls.v,
        k: ls.k,
        t: ls.t,
        lambda: ls.designs[0].lambda,
        designs: files,
        bilinear_form,
        provenance,
    };
    let path = dir.join(format!("{stem}.toml"));
    let text = toml::to_string(&manifest).map_err(|e| Error::invalid(e.to_string()))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
