//! Parameter arithmetic for large sets `LS_q[N](t,k,v)` and construction
//! plans for the infinite series with `q = 2`, `N = 3`, `t = 2`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::gaussian_binomial;

/// Parameters of a large set `LS_q[N](t,k,v)`. `t = -1` stands for an
/// unconditional partition into `N` parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LSParams {
    pub q: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub t: i32,
    pub k: u32,
    pub v: u32,
}

impl LSParams {
    pub fn new(q: u64, n: u64, t: i32, k: u32, v: u32) -> Self {
        LSParams { q, n, t, k, v }
    }

    /// `LS_2[3](t,k,v)`.
    pub fn binary3(t: i32, k: u32, v: u32) -> Self {
        LSParams::new(2, 3, t, k, v)
    }

    fn with(&self, t: i32, k: u32, v: u32) -> Self {
        LSParams { t, k, v, ..*self }
    }

    /// Parameters of the derived large set.
    pub fn derived(&self) -> Self {
        self.with(self.t - 1, self.k - 1, self.v - 1)
    }

    /// Parameters of the residual large set.
    pub fn residual(&self) -> Self {
        self.with(self.t - 1, self.k, self.v - 1)
    }

    /// Parameters of the dual large set.
    pub fn dual(&self) -> Self {
        self.with(self.t, self.v - self.k, self.v)
    }
}

impl fmt::Display for LSParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LS_{}[{}]({},{},{})",
            self.q, self.n, self.t, self.k, self.v
        )
    }
}

/// Checks `N | [v-i choose k-i]_q` for `i = t, t-1, ..., 0` and reports the
/// first failing condition.
pub fn admissibility_witness(p: &LSParams) -> Result<()> {
    if p.t < 0 {
        return Ok(());
    }
    if p.q < 2 || p.n == 0 || p.t as u32 > p.k || p.k > p.v {
        return Err(Error::invalid(format!("{p} has no meaning")));
    }
    for i in (0..=p.t as u32).rev() {
        let value = gaussian_binomial((p.v - i) as i64, (p.k - i) as i64, p.q)?;
        if !(&value % p.n).is_zero() {
            return Err(Error::Inadmissible {
                params: p.to_string(),
                top: p.v - i,
                bottom: p.k - i,
                value: value.to_string(),
            });
        }
    }
    Ok(())
}

pub fn admissible(p: &LSParams) -> bool {
    admissibility_witness(p).is_ok()
}

/// Whether the series yields an `LS_2[3](2,k,v)`: `v >= 8` and
/// `2 <= v mod 6 < k mod 6 <= 5`, for `k` or for its dual `v - k`.
pub fn realizable_by_series(k: u32, v: u32) -> bool {
    if v < 8 || k > v {
        return false;
    }
    let direct = |k: u32| {
        let (vb, kb) = (v % 6, k % 6);
        2 <= vb && vb < kb && kb <= 5
    };
    direct(k) || direct(v - k)
}

/// One row of the table of partitions used by the decomposition step,
/// selected by `i mod 6`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table5Row {
    pub residue: u32,
    pub t1: i32,
    pub t2: i32,
}

pub fn table5_row(i: u32) -> Table5Row {
    let residue = i % 6;
    let (t1, t2) = match residue {
        0 => (-1, 2),
        1 => (0, 1),
        2 => (1, 0),
        _ => (2, -1),
    };
    Table5Row { residue, t1, t2 }
}

/// Where the data of a leaf comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafSource {
    /// Built into this crate.
    Shipped,
    /// Must be supplied by the user.
    External,
}

/// A node of a construction tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanNode {
    LeafTable {
        params: LSParams,
        source: LeafSource,
    },
    /// All `k`-subspaces in one part; needs no data.
    LeafTrivial { params: LSParams },
    Derived {
        params: LSParams,
        child: Arc<PlanNode>,
    },
    Residual {
        params: LSParams,
        child: Arc<PlanNode>,
    },
    Dual {
        params: LSParams,
        child: Arc<PlanNode>,
    },
    HyperplaneExtend {
        params: LSParams,
        small_k: Arc<PlanNode>,
        same_k: Arc<PlanNode>,
    },
    Decompose {
        params: LSParams,
        s: u32,
        cells: Vec<PlanCell>,
    },
}

/// Cell `i` of a decomposition: a partition of the `i`-subspaces of
/// `U_{s+i}` joined with one of the `(k-i)`-subspaces of `V / U_{s+i+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanCell {
    pub i: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table5_row: Option<Table5Row>,
    pub first: Arc<PlanNode>,
    pub second: Arc<PlanNode>,
}

impl PlanNode {
    pub fn params(&self) -> LSParams {
        match self {
            PlanNode::LeafTable { params, .. }
            | PlanNode::LeafTrivial { params }
            | PlanNode::Derived { params, .. }
            | PlanNode::Residual { params, .. }
            | PlanNode::Dual { params, .. }
            | PlanNode::HyperplaneExtend { params, .. }
            | PlanNode::Decompose { params, .. } => *params,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PlanNode::LeafTable { .. } => "leaf_table",
            PlanNode::LeafTrivial { .. } => "leaf_trivial",
            PlanNode::Derived { .. } => "derived",
            PlanNode::Residual { .. } => "residual",
            PlanNode::Dual { .. } => "dual",
            PlanNode::HyperplaneExtend { .. } => "hyperplane_extend",
            PlanNode::Decompose { .. } => "decompose",
        }
    }

    pub fn children(&self) -> Vec<&Arc<PlanNode>> {
        match self {
            PlanNode::LeafTable { .. } | PlanNode::LeafTrivial { .. } => Vec::new(),
            PlanNode::Derived { child, .. }
            | PlanNode::Residual { child, .. }
            | PlanNode::Dual { child, .. } => {
                vec![child]
            }
            PlanNode::HyperplaneExtend {
                small_k, same_k, ..
            } => vec![small_k, same_k],
            PlanNode::Decompose { cells, .. } => {
                cells.iter().flat_map(|c| [&c.first, &c.second]).collect()
            }
        }
    }

    /// Visits every distinct node once, parents before children. Subtrees
    /// are shared, so this is much cheaper than a full tree walk.
    pub fn walk_distinct<'a>(&'a self, f: &mut impl FnMut(&'a PlanNode)) {
        fn go<'a>(
            n: &'a PlanNode,
            seen: &mut HashSet<*const PlanNode>,
            f: &mut impl FnMut(&'a PlanNode),
        ) {
            if !seen.insert(n as *const PlanNode) {
                return;
            }
            f(n);
            for c in n.children() {
                go(c, seen, f);
            }
        }
        go(self, &mut HashSet::new(), f);
    }

    /// Distinct data leaves, sorted.
    pub fn required_leaves(&self) -> Vec<(LSParams, LeafSource)> {
        let mut out = Vec::new();
        self.walk_distinct(&mut |n| {
            if let PlanNode::LeafTable { params, source } = n {
                out.push((*params, *source));
            }
        });
        out.sort_by_key(|(p, _)| *p);
        out.dedup();
        out
    }

    pub fn distinct_node_count(&self) -> usize {
        let mut n = 0;
        self.walk_distinct(&mut |_| n += 1);
        n
    }

    /// Number of nodes of the unshared tree.
    pub fn tree_size(&self) -> u128 {
        fn go(n: &PlanNode, memo: &mut HashMap<*const PlanNode, u128>) -> u128 {
            if let Some(&c) = memo.get(&(n as *const PlanNode)) {
                return c;
            }
            let c = 1 + n.children().iter().map(|c| go(c, memo)).sum::<u128>();
            memo.insert(n as *const PlanNode, c);
            c
        }
        go(self, &mut HashMap::new())
    }

    /// Checks the parameter arithmetic of every edge and the side condition
    /// `t1 + t2 + 1 >= t` of every decomposition cell.
    pub fn validate(&self) -> Result<()> {
        let mut result = Ok(());
        self.walk_distinct(&mut |n| {
            if result.is_ok() {
                result = n.validate_node();
            }
        });
        result
    }

    fn validate_node(&self) -> Result<()> {
        let bad = |msg: String| {
            Err(Error::invalid(format!(
                "{} node {}: {msg}",
                self.kind(),
                self.params()
            )))
        };
        let p = self.params();
        match self {
            PlanNode::LeafTable { .. } | PlanNode::LeafTrivial { .. } => {
                if matches!(self, PlanNode::LeafTrivial { .. }) && p.t != -1 {
                    return bad("trivial leaves carry t = -1".into());
                }
            }
            PlanNode::Derived { child, .. } => {
                if child.params().derived() != p {
                    return bad(format!("child {} does not derive to it", child.params()));
                }
            }
            PlanNode::Residual { child, .. } => {
                if child.params().residual() != p {
                    return bad(format!(
                        "child {} does not have it as residual",
                        child.params()
                    ));
                }
            }
            PlanNode::Dual { child, .. } => {
                if child.params().dual() != p {
                    return bad(format!("child {} is not dual to it", child.params()));
                }
            }
            PlanNode::HyperplaneExtend {
                small_k, same_k, ..
            } => {
                if small_k.params() != p.with(p.t, p.k - 1, p.v - 1)
                    || same_k.params() != p.with(p.t, p.k, p.v - 1)
                {
                    return bad("children must be (t,k-1,v-1) and (t,k,v-1)".into());
                }
            }
            PlanNode::Decompose { s, cells, .. } => {
                if p.k + s + 1 > p.v {
                    return bad(format!("s = {s} exceeds v-k-1"));
                }
                let indices: Vec<u32> = cells.iter().map(|c| c.i).collect();
                if indices != (0..=p.k).collect::<Vec<_>>() {
                    return bad("cells must cover i = 0..=k in order".into());
                }
                for c in cells {
                    let (f, g) = (c.first.params(), c.second.params());
                    if (f.q, f.n, f.k, f.v) != (p.q, p.n, c.i, s + c.i)
                        || (g.q, g.n, g.k, g.v) != (p.q, p.n, p.k - c.i, p.v - s - c.i - 1)
                    {
                        return bad(format!("cell {} has children {f} and {g}", c.i));
                    }
                    if f.t + g.t + 1 < p.t {
                        return bad(format!("cell {}: t1 + t2 + 1 = {} < t", c.i, f.t + g.t + 1));
                    }
                    if let Some(row) = c.table5_row {
                        if (row.t1, row.t2) != (f.t, g.t) {
                            return bad(format!("cell {} disagrees with its table row", c.i));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Construction tree of `LS_2[3](2,k,v)` following the induction of the
/// series. Equal subproblems share one subtree.
pub fn plan_series(k: u32, v: u32) -> Result<Arc<PlanNode>> {
    plan_series_with(2, 3, k, v)
}

/// The same tree shape with leaves `LS_q[N](2,3,8)` and `LS_q[N](2,4,8)`.
pub fn plan_series_with(q: u64, n: u64, k: u32, v: u32) -> Result<Arc<PlanNode>> {
    SeriesPlanner {
        q,
        n,
        memo: HashMap::new(),
    }
    .build(k, v)
}

struct SeriesPlanner {
    q: u64,
    n: u64,
    memo: HashMap<(u32, u32), Arc<PlanNode>>,
}

impl SeriesPlanner {
    fn build(&mut self, k: u32, v: u32) -> Result<Arc<PlanNode>> {
        if let Some(node) = self.memo.get(&(k, v)) {
            return Ok(node.clone());
        }
        let node = Arc::new(self.build_uncached(k, v)?);
        self.memo.insert((k, v), node.clone());
        Ok(node)
    }

    fn build_uncached(&mut self, k: u32, v: u32) -> Result<PlanNode> {
        let (q, n) = (self.q, self.n);
        let params = LSParams::new(q, n, 2, k, v);
        if !realizable_by_series(k, v) {
            return Err(Error::invalid(format!("{params} is outside the series")));
        }
        let derived = |node: Arc<PlanNode>| {
            Arc::new(PlanNode::Derived {
                params: node.params().derived(),
                child: node,
            })
        };
        let trivial = |k, v| {
            Arc::new(PlanNode::LeafTrivial {
                params: LSParams::new(q, n, -1, k, v),
            })
        };
        if 2 * k > v {
            return Ok(PlanNode::Dual {
                params,
                child: self.build(v - k, v)?,
            });
        }
        match v {
            8 => {
                let source = if (q, n, k) == (2, 3, 4) {
                    LeafSource::Shipped
                } else {
                    LeafSource::External
                };
                Ok(PlanNode::LeafTable { params, source })
            }
            9 | 10 => Ok(PlanNode::HyperplaneExtend {
                params,
                small_k: self.build(k - 1, v - 1)?,
                same_k: self.build(k, v - 1)?,
            }),
            _ => {
                let s = 5;
                let mut cells = Vec::new();
                for i in 0..=k {
                    let row = table5_row(i);
                    let (first, second) = match row.residue {
                        0 => (trivial(i, s + i), self.build(k - i, v - s - 1 - i)?),
                        1 => (
                            derived(derived(self.build(i + 2, s + i + 2)?)),
                            derived(self.build(k - i + 1, v - s - i)?),
                        ),
                        2 => (
                            derived(self.build(i + 1, s + i + 1)?),
                            derived(derived(self.build(k - i + 2, v - s - i + 1)?)),
                        ),
                        _ => (self.build(i, s + i)?, trivial(k - i, v - s - 1 - i)),
                    };
                    cells.push(PlanCell {
                        i,
                        table5_row: Some(row),
                        first,
                        second,
                    });
                }
                Ok(PlanNode::Decompose { params, s, cells })
            }
        }
    }
}

/// Leaves whose existence would give a series for other `q` and `N`, with a
/// sample plan built on them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenericTemplate {
    pub leaves: Vec<LSParams>,
    pub plan: Arc<PlanNode>,
}

pub fn check_remark_genericity(q: u64, n: u64) -> Result<GenericTemplate> {
    if q < 2 || n < 2 {
        return Err(Error::invalid(format!(
            "need q >= 2 and N >= 2, got q={q} N={n}"
        )));
    }
    let leaves = vec![LSParams::new(q, n, 2, 4, 8), LSParams::new(q, n, 2, 3, 8)];
    for leaf in &leaves {
        admissibility_witness(leaf)?;
    }
    Ok(GenericTemplate {
        leaves,
        plan: plan_series_with(q, n, 3, 14)?,
    })
}

/// Status of `LS_2[3](2,k,v)` in the overview table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Inadmissible,
    Realizable,
    Open,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TableCell {
    pub k: u32,
    pub status: CellStatus,
}

impl TableCell {
    /// `-`, the value of `k`, or `?`.
    pub fn symbol(&self) -> String {
        match self.status {
            CellStatus::Inadmissible => "-".to_string(),
            CellStatus::Realizable => self.k.to_string(),
            CellStatus::Open => "?".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TableRow {
    pub v: u32,
    pub cells: Vec<TableCell>,
}

/// Admissibility and realizability of `LS_2[3](2,k,v)` for
/// `6 <= v <= v_max` and `3 <= k <= v/2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OverviewTable {
    pub v_max: u32,
    pub rows: Vec<TableRow>,
}

pub fn generate_table(v_max: u32) -> Result<OverviewTable> {
    if v_max < 6 {
        return Err(Error::invalid(format!(
            "v_max must be at least 6, got {v_max}"
        )));
    }
    let rows = (6..=v_max)
        .map(|v| TableRow {
            v,
            cells: (3..=v / 2)
                .map(|k| {
                    let status = if !admissible(&LSParams::binary3(2, k, v)) {
                        CellStatus::Inadmissible
                    } else if realizable_by_series(k, v) {
                        CellStatus::Realizable
                    } else {
                        CellStatus::Open
                    };
                    TableCell { k, status }
                })
                .collect(),
        })
        .collect();
    Ok(OverviewTable { v_max, rows })
}

impl OverviewTable {
    /// Triangular text layout: the cell for `(k, v)` sits in slot
    /// `2k - v + v_max - 6` (0-based), so equal `k` run along diagonals.
    pub fn render_text(&self) -> String {
        let slots = (self.v_max - 5) as usize;
        let mut out = String::new();
        for row in &self.rows {
            let mut line = vec![String::new(); slots];
            for c in &row.cells {
                let slot = (2 * c.k + self.v_max) as usize - row.v as usize - 6;
                line[slot] = c.symbol();
            }
            for cell in line {
                out.push_str(&format!("{cell:>3}"));
            }
            out.push_str(&format!(" | {}\n", row.v));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility_examples() {
        assert!(admissible(&LSParams::binary3(2, 6, 20)));
        assert!(!admissible(&LSParams::binary3(2, 3, 7)));
        assert!(admissible(&LSParams::binary3(2, 4, 8)));
        assert!(admissible(&LSParams::binary3(-1, 7, 9)));
        assert!(admissible(&LSParams::new(3, 7, 2, 3, 8)));
        assert!(admissible(&LSParams::new(3, 7, 2, 4, 8)));
    }

    #[test]
    fn witness_reports_the_failing_binomial() {
        match admissibility_witness(&LSParams::new(2, 5, 2, 4, 8)) {
            Err(Error::Inadmissible {
                top, bottom, value, ..
            }) => {
                assert_eq!((top, bottom, value.as_str()), (6, 2, "651"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            check_remark_genericity(2, 5),
            Err(Error::Inadmissible { .. })
        ));
        let template = check_remark_genericity(3, 7).unwrap();
        assert_eq!(template.leaves.len(), 2);
        template.plan.validate().unwrap();
    }

    #[test]
    fn series_membership_examples() {
        assert!(realizable_by_series(4, 8));
        assert!(realizable_by_series(3, 14));
        assert!(!realizable_by_series(6, 20));
        assert!(realizable_by_series(5, 8));
        assert!(!realizable_by_series(3, 9));
    }

    #[test]
    fn small_plans() {
        assert_eq!(
            *plan_series(4, 8).unwrap(),
            PlanNode::LeafTable {
                params: LSParams::binary3(2, 4, 8),
                source: LeafSource::Shipped
            }
        );
        let p = plan_series(4, 9).unwrap();
        match &*p {
            PlanNode::HyperplaneExtend {
                small_k, same_k, ..
            } => {
                assert_eq!(small_k.params(), LSParams::binary3(2, 3, 8));
                assert_eq!(same_k.params(), LSParams::binary3(2, 4, 8));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(plan_series(6, 20).is_err());
    }

    #[test]
    fn decomposition_plan_for_3_14() {
        let p = plan_series(3, 14).unwrap();
        p.validate().unwrap();
        let PlanNode::Decompose { s, cells, .. } = &*p else {
            panic!("expected a decomposition");
        };
        assert_eq!(*s, 5);
        let rows: Vec<(i32, i32)> = cells
            .iter()
            .map(|c| (c.first.params().t, c.second.params().t))
            .collect();
        assert_eq!(rows, vec![(-1, 2), (0, 1), (1, 0), (2, -1)]);
        assert!(cells
            .iter()
            .all(|c| c.first.params().t + c.second.params().t + 1 == 2));
        let leaves = p.required_leaves();
        assert_eq!(
            leaves,
            vec![(LSParams::binary3(2, 3, 8), LeafSource::External)]
        );
    }

    #[test]
    fn plan_json_round_trip() {
        let p = plan_series(5, 14).unwrap();
        let json = serde_json::to_string_pretty(&p).unwrap();
        assert!(json.contains("\"kind\": \"decompose\""));
        let back: PlanNode = serde_json::from_str(&json).unwrap();
        assert_eq!(back, *p);
        assert!(p.tree_size() >= p.distinct_node_count() as u128);
    }

    #[test]
    fn corrupted_plans_fail_validation() {
        let mut p = (*plan_series(3, 14).unwrap()).clone();
        if let PlanNode::Decompose { cells, .. } = &mut p {
            cells[1].first = Arc::new(PlanNode::LeafTrivial {
                params: LSParams::binary3(-1, 1, 6),
            });
        }
        assert!(p.validate().is_err());
        let bad = PlanNode::Dual {
            params: LSParams::binary3(2, 4, 8),
            child: Arc::new(PlanNode::LeafTable {
                params: LSParams::binary3(2, 3, 8),
                source: LeafSource::External,
            }),
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn table_rows() {
        let t = generate_table(20).unwrap();
        let row = |v: u32| {
            t.rows
                .iter()
                .find(|r| r.v == v)
                .unwrap()
                .cells
                .iter()
                .map(TableCell::symbol)
                .collect::<Vec<_>>()
                .join(" ")
        };
        assert_eq!(row(8), "3 4");
        assert_eq!(row(12), "- - - -");
        assert_eq!(row(20), "3 4 5 ? ? ? 9 10");
        let text = t.render_text();
        assert_eq!(text.lines().count(), 15);
        assert!(text.lines().nth(2).unwrap().ends_with("  3     4 | 8"));
        assert!(generate_table(5).is_err());
    }
}
