//! Orbit incidence matrices and the exact search for designs and large sets
//! made of whole group orbits.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::design::{assemble_large_set, member_lambda, Design, LargeSet};
use crate::error::{Error, Result};
use crate::grassmann::{gaussian_binomial, LocalGrassmannian, Subspace};
use crate::group::{Group, OrbitPartition};

/// The incidence matrix between `t`-orbits (rows) and `k`-orbits (columns):
/// entry `(i, j)` counts the blocks of orbit `j` through a fixed member of
/// orbit `i`.
#[derive(Clone, Debug)]
pub struct KmSystem {
    v: usize,
    t: usize,
    k: usize,
    t_orbits: OrbitPartition,
    k_orbits: OrbitPartition,
    /// Row-major, `tau x kappa`.
    matrix: Vec<u32>,
    lambda_max: u64,
}

impl KmSystem {
    pub fn build(v: usize, t: usize, k: usize, group: &Group) -> Result<Self> {
        if t > k || k > v {
            return Err(Error::invalid(format!(
                "need t <= k <= v, got t={t} k={k} v={v}"
            )));
        }
        let t_orbits = OrbitPartition::compute(v, t, group)?;
        let k_orbits = OrbitPartition::compute(v, k, group)?;
        let tau = t_orbits.len();
        let kappa = k_orbits.len();
        let local = LocalGrassmannian::new(k, t);
        // Count the t-subspaces of one representative per t-orbit, then
        // rescale: |T_i| a_ij = |K_j| c_ij.
        let columns: Vec<Vec<u32>> = k_orbits
            .orbits()
            .par_iter()
            .map(|orbit| {
                let mut c = vec![0u64; tau];
                for s in local.images(&orbit.representative) {
                    c[t_orbits
                        .orbit_of(&s)
                        .expect("every t-subspace has an orbit")] += 1;
                }
                c.iter()
                    .enumerate()
                    .map(|(i, &cij)| {
                        let num = orbit.len() as u64 * cij;
                        let size = t_orbits.orbits()[i].len() as u64;
                        assert_eq!(num % size, 0, "orbit counting identity");
                        (num / size) as u32
                    })
                    .collect()
            })
            .collect();
        let mut matrix = vec![0u32; tau * kappa];
        for (j, col) in columns.iter().enumerate() {
            for (i, &a) in col.iter().enumerate() {
                matrix[i * kappa + j] = a;
            }
        }
        let lambda_max = gaussian_binomial((v - t) as i64, (k - t) as i64, 2)?
            .try_into()
            .map_err(|_| Error::invalid("lambda_max does not fit in 64 bits"))?;
        Ok(KmSystem {
            v,
            t,
            k,
            t_orbits,
            k_orbits,
            matrix,
            lambda_max,
        })
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of rows (`t`-orbits).
    pub fn tau(&self) -> usize {
        self.t_orbits.len()
    }

    /// Number of columns (`k`-orbits).
    pub fn kappa(&self) -> usize {
        self.k_orbits.len()
    }

    pub fn lambda_max(&self) -> u64 {
        self.lambda_max
    }

    pub fn entry(&self, i: usize, j: usize) -> u32 {
        self.matrix[i * self.kappa() + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let kappa = self.kappa();
        &self.matrix[i * kappa..(i + 1) * kappa]
    }

    pub fn t_orbits(&self) -> &OrbitPartition {
        &self.t_orbits
    }

    pub fn k_orbits(&self) -> &OrbitPartition {
        &self.k_orbits
    }

    /// `A chi_J`.
    pub fn row_sums(&self, columns: &[usize]) -> Vec<u64> {
        (0..self.tau())
            .map(|i| columns.iter().map(|&j| self.entry(i, j) as u64).sum())
            .collect()
    }

    pub fn is_solution(&self, columns: &[usize], lambda: u64) -> bool {
        self.row_sums(columns).iter().all(|&s| s == lambda)
    }

    /// All blocks in the chosen orbits.
    pub fn expand(&self, columns: &[usize]) -> Vec<Subspace> {
        columns
            .iter()
            .flat_map(|&j| self.k_orbits.orbits()[j].members.iter().cloned())
            .collect()
    }

    /// The columns whose orbits make up `design`; fails if the design is not
    /// a union of whole orbits.
    pub fn selection_of(&self, design: &Design) -> Result<Selection> {
        let mut hits: HashMap<usize, usize> = HashMap::new();
        for b in design.blocks() {
            let j = self
                .k_orbits
                .orbit_of(b)
                .ok_or_else(|| Error::invalid(format!("block {b} is not in the system")))?;
            *hits.entry(j).or_insert(0) += 1;
        }
        let mut columns = Vec::with_capacity(hits.len());
        for (j, n) in hits {
            if n != self.k_orbits.orbits()[j].len() {
                return Err(Error::invalid(format!(
                    "design contains {n} of the {} members of orbit {j}",
                    self.k_orbits.orbits()[j].len()
                )));
            }
            columns.push(j);
        }
        columns.sort_unstable();
        Ok(Selection { columns })
    }

    /// Text dump: a `tau kappa lambda_max` header, then one row per line.
    pub fn format_matrix(&self) -> String {
        let mut out = format!("{} {} {}\n", self.tau(), self.kappa(), self.lambda_max);
        for i in 0..self.tau() {
            let row: Vec<String> = self.row(i).iter().map(u32::to_string).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Orbit representatives, one per line as decimal basis rows.
pub fn format_representatives(p: &OrbitPartition) -> String {
    let mut out = String::new();
    for o in p.orbits() {
        let row: Vec<String> = o.representative.rows().iter().map(u64::to_string).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

/// A set of columns `J`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Selection {
    pub columns: Vec<usize>,
}

/// Result of a bounded search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Found(Selection),
    /// The search space is exhausted: no (further) solution exists.
    Infeasible,
    /// The node budget ran out first.
    Unknown,
}

/// Branching order of the columns: larger orbits first, then by index. A
/// seed shuffles columns of equal orbit size.
pub fn column_order(sys: &KmSystem, seed: Option<u64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sys.kappa()).collect();
    let size = |j: usize| sys.k_orbits.orbits()[j].len();
    order.sort_by(|&a, &b| size(b).cmp(&size(a)).then(a.cmp(&b)));
    if let Some(seed) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for group in order.chunk_by_mut(|&a, &b| size(a) == size(b)) {
            group.shuffle(&mut rng);
        }
    }
    order
}

const UNDECIDED: u8 = 0;
const CHOSEN: u8 = 1;
const EXCLUDED: u8 = 2;

struct Frame {
    candidates: Vec<usize>,
    next: usize,
    mark: usize,
}

/// Depth-first exact search for `A chi = lambda 1`, resumable: after a
/// solution, or after running out of budget, the next call continues where
/// the previous one stopped.
pub struct ExactSolver {
    /// Sparse columns: (row, entry).
    columns: Vec<Vec<(usize, u32)>>,
    /// Branching rank of each column.
    rank: Vec<usize>,
    deficit: Vec<u64>,
    status: Vec<u8>,
    trail: Vec<(usize, u8)>,
    stack: Vec<Frame>,
    /// A fresh node awaits expansion (as opposed to advancing the top frame).
    pending: bool,
    exhausted: bool,
    nodes: u64,
}

impl ExactSolver {
    pub fn new(sys: &KmSystem, lambda: u64, forbidden: &[usize], order: &[usize]) -> Result<Self> {
        if lambda > sys.lambda_max {
            return Err(Error::invalid(format!(
                "lambda {lambda} exceeds lambda_max {}",
                sys.lambda_max
            )));
        }
        Self::with_targets(sys, vec![lambda; sys.tau()], forbidden, order)
    }

    /// Solves `A chi = targets` instead of a constant right-hand side.
    pub fn with_targets(
        sys: &KmSystem,
        targets: Vec<u64>,
        forbidden: &[usize],
        order: &[usize],
    ) -> Result<Self> {
        if targets.len() != sys.tau() {
            return Err(Error::DimensionMismatch {
                context: "solver targets",
                expected: sys.tau(),
                found: targets.len(),
            });
        }
        let kappa = sys.kappa();
        let mut rank = vec![usize::MAX; kappa];
        for (r, &j) in order.iter().enumerate() {
            rank[j] = r;
        }
        if rank.contains(&usize::MAX) {
            return Err(Error::invalid("column order must be a permutation"));
        }
        let columns = (0..kappa)
            .map(|j| {
                (0..sys.tau())
                    .filter_map(|i| {
                        let a = sys.entry(i, j);
                        (a > 0).then_some((i, a))
                    })
                    .collect()
            })
            .collect();
        let mut status = vec![UNDECIDED; kappa];
        for &j in forbidden {
            if j >= kappa {
                return Err(Error::invalid(format!("column {j} out of range")));
            }
            status[j] = EXCLUDED;
        }
        Ok(ExactSolver {
            columns,
            rank,
            deficit: targets,
            status,
            trail: Vec::new(),
            stack: Vec::new(),
            pending: true,
            exhausted: false,
            nodes: 0,
        })
    }

    /// Nodes expanded so far.
    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    fn fits(&self, j: usize) -> bool {
        self.status[j] == UNDECIDED
            && self.columns[j]
                .iter()
                .all(|&(i, a)| a as u64 <= self.deficit[i])
    }

    fn set(&mut self, j: usize, status: u8) {
        self.trail.push((j, self.status[j]));
        self.status[j] = status;
        if status == CHOSEN {
            for &(i, a) in &self.columns[j] {
                self.deficit[i] -= a as u64;
            }
        }
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (j, old) = self.trail.pop().expect("trail above mark");
            if self.status[j] == CHOSEN {
                for &(i, a) in &self.columns[j] {
                    self.deficit[i] += a as u64;
                }
            }
            self.status[j] = old;
        }
    }

    /// Expands the current node: `Some(true)` for a solution, `Some(false)`
    /// after pushing a branching frame, `None` for a dead end.
    fn expand(&mut self) -> Option<bool> {
        if self.deficit.iter().all(|&d| d == 0) {
            return Some(true);
        }
        let fit: Vec<usize> = (0..self.columns.len()).filter(|&j| self.fits(j)).collect();
        let rows = self.deficit.len();
        let mut avail = vec![0u64; rows];
        let mut count = vec![0usize; rows];
        for &j in &fit {
            for &(i, a) in &self.columns[j] {
                avail[i] += a as u64;
                count[i] += 1;
            }
        }
        let mut best: Option<usize> = None;
        for i in 0..rows {
            if self.deficit[i] == 0 {
                continue;
            }
            if avail[i] < self.deficit[i] {
                return None;
            }
            if best.map_or(true, |b| count[i] < count[b]) {
                best = Some(i);
            }
        }
        let row = best.expect("some deficit is positive");
        let mut candidates: Vec<usize> = fit
            .into_iter()
            .filter(|&j| self.columns[j].iter().any(|&(i, _)| i == row))
            .collect();
        candidates.sort_by_key(|&j| self.rank[j]);
        self.stack.push(Frame {
            candidates,
            next: 0,
            mark: self.trail.len(),
        });
        Some(false)
    }

    fn chosen(&self) -> Selection {
        let mut columns: Vec<usize> = (0..self.status.len())
            .filter(|&j| self.status[j] == CHOSEN)
            .collect();
        columns.sort_unstable();
        Selection { columns }
    }

    /// Searches for the next solution, expanding at most `budget` more nodes.
    pub fn next_solution(&mut self, budget: u64) -> SolveOutcome {
        let limit = self.nodes.saturating_add(budget);
        loop {
            if self.exhausted {
                return SolveOutcome::Infeasible;
            }
            if self.pending {
                if self.nodes >= limit {
                    return SolveOutcome::Unknown;
                }
                self.nodes += 1;
                self.pending = false;
                if let Some(true) = self.expand() {
                    return SolveOutcome::Found(self.chosen());
                }
                continue;
            }
            let Some(frame) = self.stack.last_mut() else {
                self.exhausted = true;
                continue;
            };
            let (mark, idx) = (frame.mark, frame.next);
            if idx == frame.candidates.len() {
                self.stack.pop();
                self.undo_to(mark);
                continue;
            }
            frame.next += 1;
            let candidates: Vec<usize> = frame.candidates[..=idx].to_vec();
            self.undo_to(mark);
            for &j in &candidates[..idx] {
                self.set(j, EXCLUDED);
            }
            self.set(candidates[idx], CHOSEN);
            self.pending = true;
        }
    }
}

/// One-shot search: the first solution in the default column order.
pub fn solve_exact(
    sys: &KmSystem,
    lambda: u64,
    forbidden: &[usize],
    node_budget: u64,
) -> Result<SolveOutcome> {
    let order = column_order(sys, None);
    Ok(ExactSolver::new(sys, lambda, forbidden, &order)?.next_solution(node_budget))
}

/// Knobs for [`iterated_large_set_search`].
#[derive(Clone, Debug)]
pub struct LsSearchConfig {
    /// Nodes per call into a round's solver.
    pub node_budget: u64,
    /// How many times a round may be abandoned in favour of the next
    /// solution of an earlier round.
    pub retry_budget: u64,
    /// Shuffles ties in the column order.
    pub seed: Option<u64>,
    /// Fixed solutions for the first rounds; these are never revisited.
    pub seed_rounds: Vec<Vec<usize>>,
}

impl Default for LsSearchConfig {
    fn default() -> Self {
        LsSearchConfig {
            node_budget: 10_000_000,
            retry_budget: 10_000,
            seed: None,
            seed_rounds: Vec::new(),
        }
    }
}

/// Why an iterated search stopped without a large set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchFailure {
    /// Every combination of rounds was tried.
    Infeasible,
    /// The node budget of a round ran out.
    NodeBudget,
    /// Too many rounds were abandoned.
    RetryBudget,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LsSearchOutcome {
    /// `N` disjoint solutions using every column.
    Found(Vec<Selection>),
    /// The rounds completed before giving up.
    Failed {
        completed: Vec<Selection>,
        reason: SearchFailure,
    },
}

/// Repeatedly solves `A chi = (lambda_max / N) 1` on the columns not yet
/// used, backtracking into earlier rounds when a round has no solution.
/// The last round takes all remaining columns.
pub fn iterated_large_set_search(
    sys: &KmSystem,
    n: usize,
    config: &LsSearchConfig,
) -> Result<LsSearchOutcome> {
    let lambda = member_lambda(sys.v, sys.k, sys.t, n)?;
    let mut fixed: Vec<Selection> = Vec::new();
    let mut used = vec![false; sys.kappa()];
    for cols in &config.seed_rounds {
        let mut cols = cols.clone();
        cols.sort_unstable();
        for &j in &cols {
            if j >= sys.kappa() || used[j] {
                return Err(Error::invalid(format!(
                    "seed column {j} is out of range or repeated"
                )));
            }
            used[j] = true;
        }
        if !sys.is_solution(&cols, lambda) {
            return Err(Error::invalid(format!(
                "seed round {} is not a solution for lambda {lambda}",
                fixed.len() + 1
            )));
        }
        fixed.push(Selection { columns: cols });
    }
    if fixed.len() > n {
        return Err(Error::invalid("more seed rounds than designs"));
    }
    let order = column_order(sys, config.seed);
    let searched_rounds = n.saturating_sub(1).saturating_sub(fixed.len());
    let mut solvers: Vec<ExactSolver> = Vec::new();
    let mut found: Vec<Selection> = Vec::new();
    let mut retries = 0u64;
    let forbidden_for = |found: &[Selection]| -> Vec<usize> {
        let mut f: Vec<usize> = (0..sys.kappa()).filter(|&j| used[j]).collect();
        f.extend(found.iter().flat_map(|s| s.columns.iter().copied()));
        f
    };
    let all_rounds =
        |found: &[Selection]| -> Vec<Selection> { fixed.iter().chain(found).cloned().collect() };
    while found.len() < searched_rounds {
        if solvers.len() == found.len() {
            solvers.push(ExactSolver::new(
                sys,
                lambda,
                &forbidden_for(&found),
                &order,
            )?);
        }
        let solver = solvers.last_mut().expect("a solver per open round");
        match solver.next_solution(config.node_budget) {
            SolveOutcome::Found(sel) => found.push(sel),
            SolveOutcome::Unknown => {
                return Ok(LsSearchOutcome::Failed {
                    completed: all_rounds(&found),
                    reason: SearchFailure::NodeBudget,
                })
            }
            SolveOutcome::Infeasible => {
                solvers.pop();
                if found.pop().is_none() {
                    return Ok(LsSearchOutcome::Failed {
                        completed: all_rounds(&found),
                        reason: SearchFailure::Infeasible,
                    });
                }
                retries += 1;
                if retries > config.retry_budget {
                    return Ok(LsSearchOutcome::Failed {
                        completed: all_rounds(&found),
                        reason: SearchFailure::RetryBudget,
                    });
                }
            }
        }
    }
    let mut rounds = all_rounds(&found);
    if rounds.len() < n {
        let rest: Vec<usize> = {
            let taken = forbidden_for(&found);
            let mut mask = vec![false; sys.kappa()];
            taken.iter().for_each(|&j| mask[j] = true);
            (0..sys.kappa()).filter(|&j| !mask[j]).collect()
        };
        if !sys.is_solution(&rest, lambda) {
            return Err(Error::invalid("remaining columns do not form a design"));
        }
        rounds.push(Selection { columns: rest });
    }
    Ok(LsSearchOutcome::Found(rounds))
}

/// Expands selections into designs and verifies the large set.
pub fn large_set_from_selections(sys: &KmSystem, selections: &[Selection]) -> Result<LargeSet> {
    let parts = selections.iter().map(|s| sys.expand(&s.columns)).collect();
    assemble_large_set(sys.v, sys.k, sys.t, parts)
}

/// Parses seed-column text: one round per line, column indices separated by
/// whitespace.
pub fn parse_seed_columns(text: &str, path: &str) -> Result<Vec<Vec<usize>>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            l.split_whitespace()
                .map(str::parse::<usize>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::format(path, n + 1, e.to_string()))
        })
        .collect()
}

pub fn format_selections(selections: &[Selection]) -> String {
    selections
        .iter()
        .map(|s| {
            let cols: Vec<String> = s.columns.iter().map(usize::to_string).collect();
            cols.join(" ") + "\n"
        })
        .collect()
}
