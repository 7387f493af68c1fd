//! Matrix groups over GF(2) acting on subspaces by `x -> xA`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::grassmann::{GrassmannIndex, Grassmannian, Subspace, MAX_AMBIENT};

/// Default bound on the number of elements produced by [`Group::close`].
pub const DEFAULT_GROUP_CAP: usize = 10_000_000;

/// An invertible `v x v` matrix over GF(2), acting on row vectors from the
/// right.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GroupElement {
    rows: Vec<u64>,
}

impl GroupElement {
    pub fn new(matrix: &BitMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid(format!(
                "group element must be square, got {}x{}",
                matrix.n_rows(),
                matrix.n_cols()
            )));
        }
        if matrix.n_cols() > MAX_AMBIENT {
            return Err(Error::invalid(format!(
                "group elements are limited to dimension {MAX_AMBIENT}"
            )));
        }
        if matrix.rank() != matrix.n_rows() {
            return Err(Error::NotInvertible);
        }
        Ok(GroupElement {
            rows: matrix.u64_rows().expect("width checked"),
        })
    }

    pub fn identity(v: usize) -> Self {
        GroupElement {
            rows: (0..v).map(|i| 1u64 << i).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn matrix(&self) -> BitMatrix {
        BitMatrix::from_u64_rows(self.dim(), &self.rows).expect("rows fit")
    }

    pub fn is_identity(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, &r)| r == 1 << i)
    }

    /// `xA` for a row vector `x`.
    #[inline]
    pub fn apply(&self, x: u64) -> u64 {
        let mut bits = x;
        let mut out = 0;
        while bits != 0 {
            out ^= self.rows[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        out
    }

    /// The product `self * other`: first act by `self`, then by `other`.
    pub fn then(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            rows: self.rows.iter().map(|&r| other.apply(r)).collect(),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        let inv = self
            .matrix()
            .inverse()
            .expect("group elements are invertible");
        GroupElement {
            rows: inv.u64_rows().expect("rows fit"),
        }
    }

    /// Image of `s`, returned in canonical form.
    pub fn act(&self, s: &Subspace) -> Result<Subspace> {
        if s.ambient_dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "group action",
                expected: self.dim(),
                found: s.ambient_dim(),
            });
        }
        Ok(self.act_unchecked(s))
    }

    #[inline]
    pub(crate) fn act_unchecked(&self, s: &Subspace) -> Subspace {
        Subspace::span_unchecked(self.dim(), s.rows().iter().map(|&r| self.apply(r)))
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GroupElement({})",
            format_matrix(self).replace('\n', "/")
        )
    }
}

fn format_matrix(g: &GroupElement) -> String {
    let v = g.dim();
    g.rows
        .iter()
        .map(|&r| {
            (0..v)
                .map(|i| if r >> i & 1 == 1 { '1' } else { '0' })
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// A finite group given by an explicit, duplicate-free element list.
#[derive(Clone, Debug)]
pub struct Group {
    v: usize,
    generators: Vec<GroupElement>,
    elements: Vec<GroupElement>,
}

impl Group {
    pub fn trivial(v: usize) -> Self {
        Group {
            v,
            generators: Vec::new(),
            elements: vec![GroupElement::identity(v)],
        }
    }

    /// Breadth-first closure of `generators` under right multiplication.
    /// The element order is determined by the generator order.
    pub fn close(generators: &[GroupElement], cap: usize) -> Result<Self> {
        let v = match generators.first() {
            Some(g) => g.dim(),
            None => return Err(Error::invalid("at least one generator is required")),
        };
        if let Some(g) = generators.iter().find(|g| g.dim() != v) {
            return Err(Error::DimensionMismatch {
                context: "group generators",
                expected: v,
                found: g.dim(),
            });
        }
        let id = GroupElement::identity(v);
        let mut seen: HashSet<GroupElement> = HashSet::new();
        let mut elements = vec![id.clone()];
        seen.insert(id);
        let mut head = 0;
        while head < elements.len() {
            let current = elements[head].clone();
            head += 1;
            for g in generators {
                let next = current.then(g);
                if seen.insert(next.clone()) {
                    if elements.len() >= cap {
                        return Err(Error::GroupTooLarge { cap });
                    }
                    elements.push(next);
                }
            }
        }
        Ok(Group {
            v,
            generators: generators.to_vec(),
            elements,
        })
    }

    pub fn from_matrices(generators: &[BitMatrix]) -> Result<Self> {
        let gens = generators
            .iter()
            .map(GroupElement::new)
            .collect::<Result<Vec<_>>>()?;
        Group::close(&gens, DEFAULT_GROUP_CAP)
    }

    pub fn dim(&self) -> usize {
        self.v
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.elements.contains(g)
    }

    /// Orbit of `s`, in breadth-first order starting at `s`.
    pub fn orbit(&self, s: &Subspace) -> Result<Vec<Subspace>> {
        if s.ambient_dim() != self.v {
            return Err(Error::DimensionMismatch {
                context: "orbit",
                expected: self.v,
                found: s.ambient_dim(),
            });
        }
        Ok(self.orbit_unchecked(s))
    }

    pub(crate) fn orbit_unchecked(&self, s: &Subspace) -> Vec<Subspace> {
        let mut seen: HashSet<Subspace> = HashSet::new();
        let mut out = vec![s.clone()];
        seen.insert(s.clone());
        let mut queue: VecDeque<usize> = VecDeque::from([0]);
        // With no generators the closure is the trivial group.
        while let Some(i) = queue.pop_front() {
            for g in &self.generators {
                let image = g.act_unchecked(&out[i]);
                if seen.insert(image.clone()) {
                    out.push(image);
                    queue.push_back(out.len() - 1);
                }
            }
        }
        out
    }

    /// Number of group elements fixing `s`.
    pub fn stabilizer_order(&self, s: &Subspace) -> Result<usize> {
        let mut n = 0;
        for g in &self.elements {
            if g.act(s)? == *s {
                n += 1;
            }
        }
        Ok(n)
    }

    /// Whether the block set is mapped onto itself by every generator.
    pub fn leaves_invariant(&self, blocks: &HashSet<Subspace>) -> bool {
        self.generators
            .iter()
            .all(|g| blocks.iter().all(|b| blocks.contains(&g.act_unchecked(b))))
    }
}

/// One orbit of a partition, with its smallest member as representative.
#[derive(Clone, Debug)]
pub struct Orbit {
    pub representative: Subspace,
    pub members: Vec<Subspace>,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// The orbits of a group on all `k`-subspaces of GF(2)^v, ordered by
/// representative.
#[derive(Clone, Debug)]
pub struct OrbitPartition {
    v: usize,
    k: usize,
    group_order: usize,
    orbits: Vec<Orbit>,
    lookup: HashMap<Subspace, usize>,
}

impl OrbitPartition {
    pub fn compute(v: usize, k: usize, group: &Group) -> Result<Self> {
        if v != group.dim() {
            return Err(Error::DimensionMismatch {
                context: "orbit partition",
                expected: group.dim(),
                found: v,
            });
        }
        let index = GrassmannIndex::new(v, k)?;
        let mut assigned = vec![false; index.len() as usize];
        let mut orbits = Vec::new();
        let mut lookup = HashMap::with_capacity(index.len() as usize);
        // Walking in canonical order makes the first unassigned subspace the
        // smallest member of its orbit.
        for s in Grassmannian::new(v, k)? {
            if assigned[index.rank(&s) as usize] {
                continue;
            }
            let members = group.orbit_unchecked(&s);
            let id = orbits.len();
            for m in &members {
                assigned[index.rank(m) as usize] = true;
                lookup.insert(m.clone(), id);
            }
            if group.order() % members.len() != 0 {
                return Err(Error::invalid(format!(
                    "orbit of {s} has size {} not dividing the group order {}",
                    members.len(),
                    group.order()
                )));
            }
            orbits.push(Orbit {
                representative: s,
                members,
            });
        }
        Ok(OrbitPartition {
            v,
            k,
            group_order: group.order(),
            orbits,
            lookup,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.v
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn group_order(&self) -> usize {
        self.group_order
    }

    pub fn orbits(&self) -> &[Orbit] {
        &self.orbits
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    /// Index of the orbit containing `s`.
    pub fn orbit_of(&self, s: &Subspace) -> Option<usize> {
        self.lookup.get(s).copied()
    }

    pub fn total_members(&self) -> usize {
        self.orbits.iter().map(Orbit::len).sum()
    }
}

/// Parses matrices written as rows of `0`/`1` characters, one matrix per
/// block, blocks separated by blank lines.
pub fn parse_generators(text: &str, path: &str) -> Result<Vec<BitMatrix>> {
    let mut out = Vec::new();
    let mut block: Vec<(usize, &str)> = Vec::new();
    let flush = |block: &mut Vec<(usize, &str)>, out: &mut Vec<BitMatrix>| -> Result<()> {
        if block.is_empty() {
            return Ok(());
        }
        let first_line = block[0].0;
        let lines: Vec<&str> = block.iter().map(|(_, l)| *l).collect();
        let m = BitMatrix::parse_rows(&lines)
            .map_err(|e| Error::format(path, first_line, e.to_string()))?;
        if !m.is_square() {
            return Err(Error::format(
                path,
                first_line,
                format!("matrix is {}x{}, expected square", m.n_rows(), m.n_cols()),
            ));
        }
        out.push(m);
        block.clear();
        Ok(())
    };
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            flush(&mut block, &mut out)?;
        } else {
            block.push((n + 1, line));
        }
    }
    flush(&mut block, &mut out)?;
    Ok(out)
}

pub fn format_generators(generators: &[GroupElement]) -> String {
    generators
        .iter()
        .map(|g| format_matrix(g) + "\n")
        .collect::<Vec<_>>()
        .join("\n")
}
