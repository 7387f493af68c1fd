use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use subdesign::design::{
    default_hyperplane, default_point, derived_large_set, residual_large_set, verify_large_set,
};
use subdesign::join::{
    avoiding_join, compose_partitions, decomposition_cell_of, equal_split, execute_plan,
    extend_by_hyperplane, grassmann_decomposition, in_avoiding_join, join_sets, missing_leaves,
    ExecOptions, JoinChain, PartitionedSet, Registry,
};
use subdesign::planner::{plan_series, LSParams, LeafSource, PlanCell, PlanNode};
use subdesign::{
    count_subspaces, enumerate_grassmannian, paper_data, Design, Error, LargeSet, Subspace,
};

/// Vectors of a subspace as a set, computed by brute force.
fn points(s: &Subspace) -> BTreeSet<u64> {
    let mut out = BTreeSet::from([0u64]);
    for &r in s.rows() {
        let shifted: Vec<u64> = out.iter().map(|x| x ^ r).collect();
        out.extend(shifted);
    }
    out
}

fn span_of(v: usize, pts: &BTreeSet<u64>) -> Subspace {
    Subspace::span(v, pts.iter().copied()).unwrap()
}

/// The join conditions evaluated on point sets.
fn oracle(k: &Subspace, k1: &Subspace, k2: &Subspace, u1: &Subspace, u2: &Subspace) -> bool {
    let v = k.ambient_dim();
    let pk = points(k);
    let meet = |u: &Subspace| -> BTreeSet<u64> { pk.intersection(&points(u)).copied().collect() };
    let m1 = meet(u1);
    let sum: BTreeSet<u64> = pk
        .iter()
        .flat_map(|a| points(u2).into_iter().map(move |b| a ^ b))
        .collect();
    m1 == points(k1) && span_of(v, &sum) == *k2 && m1 == meet(u2)
}

fn subspaces_between(lower: &Subspace, upper: &Subspace) -> Vec<Subspace> {
    let v = upper.ambient_dim();
    (lower.dim()..=upper.dim())
        .flat_map(|d| enumerate_grassmannian(v, d).unwrap())
        .filter(|s| s.contains(lower).unwrap() && upper.contains(s).unwrap())
        .collect()
}

#[test]
fn avoiding_join_agrees_with_brute_force_filtering() {
    for v in 1..=5 {
        let all: Vec<Vec<Subspace>> = (0..=v)
            .map(|d| enumerate_grassmannian(v, d).unwrap())
            .collect();
        for d1 in 0..=v {
            for d2 in d1..=v {
                let chain = JoinChain::standard(v, d1, d2).unwrap();
                let zero = Subspace::zero(v).unwrap();
                let full = Subspace::full(v).unwrap();
                for k1 in subspaces_between(&zero, chain.u1()) {
                    for k2 in subspaces_between(chain.u2(), &full) {
                        let join: BTreeSet<Subspace> = avoiding_join(&k1, &k2, &chain)
                            .unwrap()
                            .into_iter()
                            .collect();
                        let dim = k1.dim() + k2.dim() - d2;
                        assert_eq!(join.len() as u64, 1 << ((d2 - k1.dim()) * (k2.dim() - d2)));
                        assert!(join.iter().all(|k| k.dim() == dim));
                        let filtered: BTreeSet<Subspace> = all
                            .iter()
                            .flatten()
                            .filter(|k| oracle(k, &k1, &k2, chain.u1(), chain.u2()))
                            .cloned()
                            .collect();
                        assert_eq!(join, filtered, "v={v} U1={} U2={} K1={k1} K2={k2}", d1, d2);
                        assert!(join
                            .iter()
                            .all(|k| in_avoiding_join(k, &k1, &k2, &chain).unwrap()));
                    }
                }
            }
        }
    }
}

#[test]
fn join_examples() {
    // trivial chain: the complements of a point in the plane
    let chain = JoinChain::standard(2, 1, 1).unwrap();
    let join = avoiding_join(
        &Subspace::zero(2).unwrap(),
        &Subspace::full(2).unwrap(),
        &chain,
    )
    .unwrap();
    assert_eq!(join.len(), 2);
    assert!(join
        .iter()
        .all(|k| k.dim() == 1 && !k.contains(chain.u1()).unwrap()));

    // K1 = U1 and K2 = U2 leave a single member, which must meet U2 in U1
    let chain = JoinChain::standard(5, 2, 3).unwrap();
    let join = avoiding_join(chain.u1(), chain.u2(), &chain).unwrap();
    assert_eq!(join, vec![chain.u1().clone()]);

    // v = 3, U1 = <e0>, U2 = <e0,e1>: the four points off U2
    let chain = JoinChain::standard(3, 1, 2).unwrap();
    let join = avoiding_join(
        &Subspace::zero(3).unwrap(),
        &Subspace::full(3).unwrap(),
        &chain,
    )
    .unwrap();
    let expected: Vec<Subspace> = [0b100u64, 0b101, 0b110, 0b111]
        .iter()
        .map(|&x| Subspace::span(3, [x]).unwrap())
        .collect();
    assert_eq!(
        join.into_iter().collect::<BTreeSet<_>>(),
        expected.into_iter().collect()
    );

    // preconditions
    let chain = JoinChain::standard(4, 1, 2).unwrap();
    let outside = Subspace::span(4, [0b10]).unwrap();
    assert!(avoiding_join(&outside, &Subspace::full(4).unwrap(), &chain).is_err());
    assert!(avoiding_join(
        &Subspace::zero(4).unwrap(),
        &Subspace::span(4, [0b1]).unwrap(),
        &chain
    )
    .is_err());
    assert!(JoinChain::new(
        &Subspace::span(4, [0b10]).unwrap(),
        &Subspace::standard(4, 1).unwrap()
    )
    .is_err());
}

#[test]
fn join_sets_of_full_factors_are_disjoint() {
    // v = 5: every pair of factor Grassmannians over every chain
    for d1 in 0..=5 {
        for d2 in d1..=5 {
            let chain = JoinChain::standard(5, d1, d2).unwrap();
            for a in 0..=d1 {
                for b in 0..=5 - d2 {
                    let b1 = enumerate_grassmannian(d1, a).unwrap();
                    let b2 = enumerate_grassmannian(5 - d2, b).unwrap();
                    let joined = join_sets(&b1, &b2, &chain).unwrap();
                    let distinct: HashSet<&Subspace> = joined.iter().collect();
                    assert_eq!(distinct.len(), joined.len());
                    assert_eq!(joined.len(), b1.len() * b2.len() << ((d2 - a) * b));
                }
            }
        }
    }
    // a degenerate chain lifts the quotient Grassmannian unchanged
    let chain = JoinChain::standard(4, 0, 0).unwrap();
    let joined = join_sets(
        &[Subspace::zero(0).unwrap()],
        &enumerate_grassmannian(4, 2).unwrap(),
        &chain,
    )
    .unwrap();
    assert_eq!(joined, enumerate_grassmannian(4, 2).unwrap());
}

#[test]
fn decompositions_partition_the_grassmannian() {
    for v in 1..=6 {
        for k in 0..v {
            for s in 0..v - k {
                let cells = grassmann_decomposition(v, k, s).unwrap();
                assert_eq!(cells.len(), k + 1);
                let mut seen = HashSet::new();
                for cell in &cells {
                    let members = cell.materialize().unwrap();
                    assert_eq!(members.len() as u64, u64::try_from(cell.size()).unwrap());
                    for m in members {
                        assert_eq!(decomposition_cell_of(&m, s).unwrap(), cell.i);
                        assert!(seen.insert(m));
                    }
                }
                assert_eq!(
                    Some(seen.len() as u64),
                    count_subspaces(v, k),
                    "v={v} k={k} s={s}"
                );
            }
        }
        assert!(grassmann_decomposition(v, v, 0).is_err());
    }
    let total: u64 = grassmann_decomposition(6, 3, 1)
        .unwrap()
        .iter()
        .map(|c| c.materialize().unwrap().len() as u64)
        .sum();
    assert_eq!(total, 1395);
    let zero = grassmann_decomposition(4, 0, 2).unwrap();
    assert_eq!(zero.len(), 1);
    assert_eq!(
        zero[0].materialize().unwrap(),
        vec![Subspace::zero(4).unwrap()]
    );
}

fn points_partition(v: usize) -> PartitionedSet {
    let pts = enumerate_grassmannian(v, 1).unwrap();
    assert_eq!(pts.len() % 3, 0);
    let parts = pts
        .chunks(pts.len() / 3)
        .map(<[Subspace]>::to_vec)
        .collect();
    PartitionedSet::new(v, 1, 0, parts).unwrap()
}

#[test]
fn composing_two_point_partitions_raises_t() {
    let chain = JoinChain::standard(5, 2, 3).unwrap();
    let p = points_partition(2);
    let composed = compose_partitions(&p, &p, &chain).unwrap();
    assert_eq!((composed.v(), composed.k(), composed.t()), (5, 2, 1));
    assert_eq!(composed.total(), 9 * 4);
    // the parts are also 1-equivalent by an independent count
    let count = |part: &[Subspace], x: u64| part.iter().filter(|b| b.contains_vector(x)).count();
    for x in 1..32u64 {
        let c0 = count(&composed.parts()[0], x);
        assert!(composed.parts().iter().all(|p| count(p, x) == c0));
    }
}

#[test]
fn composing_with_a_trivial_singleton() {
    let chain = JoinChain::standard(5, 2, 3).unwrap();
    let p1 = points_partition(2);
    let single = PartitionedSet::new(
        2,
        1,
        -1,
        vec![
            enumerate_grassmannian(2, 1).unwrap()[..1].to_vec(),
            vec![],
            vec![],
        ],
    )
    .unwrap();
    let composed = compose_partitions(&p1, &single, &chain).unwrap();
    assert_eq!(composed.t(), 0);
    for m in 0..3 {
        assert_eq!(
            composed.parts()[m],
            join_sets(&p1.parts()[m], &single.parts()[0], &chain).unwrap()
        );
    }
}

#[test]
fn composing_a_trivial_factor_with_a_large_set_keeps_its_strength() {
    let g = paper_data::group().unwrap();
    let ls = paper_data::large_set(&g).unwrap();
    let derived = derived_large_set(&ls, &default_point(8).unwrap()).unwrap();
    let p2 = PartitionedSet::from_large_set(&derived);
    let p1 = PartitionedSet::trivial(0, 0, 3).unwrap();
    let chain = JoinChain::standard(8, 0, 1).unwrap();
    let composed = compose_partitions(&p1, &p2, &chain).unwrap();
    assert_eq!((composed.k(), composed.t()), (3, 1));
    assert_eq!(composed.total(), 3 * 3937 * 8);
}

#[test]
fn composing_the_shipped_large_set_gives_a_two_partition() {
    // first row of the decomposition pattern: (-1, 2)
    let g = paper_data::group().unwrap();
    let p2 = PartitionedSet::from_large_set(&paper_data::large_set(&g).unwrap());
    let p1 = PartitionedSet::trivial(0, 0, 3).unwrap();
    let composed = compose_partitions(&p1, &p2, &JoinChain::standard(9, 0, 1).unwrap()).unwrap();
    assert_eq!((composed.v(), composed.k(), composed.t()), (9, 4, 2));
    assert_eq!(composed.total(), 200787 * 16);
}

#[test]
fn partitions_are_checked() {
    let pts = enumerate_grassmannian(3, 1).unwrap();
    let lines = enumerate_grassmannian(3, 2).unwrap();
    assert!(matches!(
        PartitionedSet::new(3, 1, 0, vec![pts[..3].to_vec(), pts[3..].to_vec()]),
        Err(Error::NotEquivalent { .. })
    ));
    assert!(matches!(
        PartitionedSet::new(3, 1, -1, vec![pts[..3].to_vec(), pts[2..].to_vec()]),
        Err(Error::Overlap { .. })
    ));
    assert!(PartitionedSet::new(3, 1, -1, vec![lines.clone()]).is_err());
    let p = points_partition(2);
    let q = PartitionedSet::new(
        2,
        1,
        -1,
        vec![enumerate_grassmannian(2, 1).unwrap(), vec![]],
    )
    .unwrap();
    assert!(compose_partitions(&p, &q, &JoinChain::standard(5, 2, 3).unwrap()).is_err());
}

fn shipped() -> LargeSet {
    paper_data::large_set(&paper_data::group().unwrap()).unwrap()
}

#[test]
fn hyperplane_extension_from_transforms() {
    let ls = shipped();
    let small = derived_large_set(&ls, &default_point(8).unwrap()).unwrap();
    let same = residual_large_set(&ls, &default_hyperplane(8).unwrap()).unwrap();
    let ext = extend_by_hyperplane(&small, &same).unwrap();
    let report = verify_large_set(&ext).unwrap();
    assert_eq!((ext.t(), ext.k(), ext.v()), (1, 4, 8));
    assert_eq!(report.lambda, 3937);
    assert_eq!(report.blocks_per_design, vec![66929; 3]);

    assert!(extend_by_hyperplane(&same, &small).is_err());
    let one = LargeSet::new(vec![small.designs()[0].clone()]).unwrap();
    assert!(extend_by_hyperplane(&one, &same).is_err());
}

#[test]
fn hyperplane_extension_of_trivial_large_sets() {
    let whole = |v: usize, k: usize| {
        LargeSet::new(vec![Design::verified(
            v,
            k,
            1,
            enumerate_grassmannian(v, k).unwrap(),
            None,
        )
        .unwrap()])
        .unwrap()
    };
    let ext = extend_by_hyperplane(&whole(4, 1), &whole(4, 2)).unwrap();
    assert_eq!(ext.n(), 1);
    assert_eq!(
        ext.designs()[0].blocks(),
        enumerate_grassmannian(5, 2).unwrap().as_slice()
    );
}

fn leaf(t: i32, k: u32, v: u32) -> Arc<PlanNode> {
    Arc::new(PlanNode::LeafTable {
        params: LSParams::binary3(t, k, v),
        source: LeafSource::External,
    })
}

fn trivial(k: u32, v: u32) -> Arc<PlanNode> {
    Arc::new(PlanNode::LeafTrivial {
        params: LSParams::binary3(-1, k, v),
    })
}

#[test]
fn executing_an_extension_plan() {
    let root_leaf = Arc::new(PlanNode::LeafTable {
        params: LSParams::binary3(2, 4, 8),
        source: LeafSource::Shipped,
    });
    let plan = PlanNode::HyperplaneExtend {
        params: LSParams::binary3(1, 4, 8),
        small_k: Arc::new(PlanNode::Derived {
            params: LSParams::binary3(1, 3, 7),
            child: root_leaf.clone(),
        }),
        same_k: Arc::new(PlanNode::Residual {
            params: LSParams::binary3(1, 4, 7),
            child: root_leaf,
        }),
    };
    let empty = Registry::new();
    match execute_plan(&plan, &empty, ExecOptions::default()) {
        Err(Error::MissingLeaves(m)) => assert_eq!(m, vec!["LS_2[3](2,4,8)".to_string()]),
        other => panic!("unexpected {other:?}"),
    }
    let mut registry = Registry::new();
    registry.insert(shipped());
    let ls = execute_plan(&plan, &registry, ExecOptions::default()).unwrap();
    assert_eq!(ls.member_lambda().unwrap(), 3937);

    // a target already in the registry comes back unchanged
    let same = execute_plan(&leaf(2, 4, 8), &registry, ExecOptions::default()).unwrap();
    assert_eq!(
        &same,
        registry.get(&LSParams::binary3(2, 4, 8)).unwrap().as_ref()
    );
}

#[test]
fn executing_a_decomposition_plan() {
    // LS_2[3](0,3,6) with offset 1, cells alternating (-1,0) and (0,-1)
    let cells = vec![
        PlanCell {
            i: 0,
            table5_row: None,
            first: trivial(0, 1),
            second: leaf(0, 3, 4),
        },
        PlanCell {
            i: 1,
            table5_row: None,
            first: leaf(0, 1, 2),
            second: trivial(2, 3),
        },
        PlanCell {
            i: 2,
            table5_row: None,
            first: trivial(2, 3),
            second: leaf(0, 1, 2),
        },
        PlanCell {
            i: 3,
            table5_row: None,
            first: leaf(0, 3, 4),
            second: trivial(0, 1),
        },
    ];
    let plan = PlanNode::Decompose {
        params: LSParams::binary3(0, 3, 6),
        s: 1,
        cells,
    };
    plan.validate().unwrap();
    let mut registry = Registry::new();
    assert_eq!(missing_leaves(&plan, &registry).len(), 2);
    registry.insert(equal_split(4, 3, 3).unwrap());
    registry.insert(equal_split(2, 1, 3).unwrap());
    let ls = execute_plan(&plan, &registry, ExecOptions::default()).unwrap();
    assert_eq!((ls.t(), ls.k(), ls.v(), ls.n()), (0, 3, 6, 3));
    assert!(ls.designs().iter().all(|d| d.len() == 465));
}

#[test]
fn missing_leaf_for_the_first_extension_step() {
    let plan = plan_series(4, 9).unwrap();
    let mut registry = Registry::new();
    registry.insert(shipped());
    assert_eq!(
        missing_leaves(&plan, &registry),
        vec![LSParams::binary3(2, 3, 8)]
    );
    match execute_plan(&plan, &registry, ExecOptions::default()) {
        Err(Error::MissingLeaves(m)) => assert_eq!(m, vec!["LS_2[3](2,3,8)".to_string()]),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn size_guard() {
    let plan = PlanNode::Dual {
        params: LSParams::binary3(0, 9, 12),
        child: leaf(0, 3, 12),
    };
    let registry = Registry::new();
    let options = ExecOptions {
        size_cap: 500,
        force: false,
    };
    // missing data is reported before size
    assert!(matches!(
        execute_plan(&plan, &registry, options),
        Err(Error::MissingLeaves(_))
    ));
    let plan = PlanNode::Dual {
        params: LSParams::binary3(0, 2, 6),
        child: Arc::new(PlanNode::Dual {
            params: LSParams::binary3(0, 4, 6),
            child: leaf(0, 2, 6),
        }),
    };
    let mut registry = Registry::new();
    registry.insert(equal_split(6, 2, 3).unwrap());
    assert!(matches!(
        execute_plan(&plan, &registry, options),
        Err(Error::SizeGuard { .. })
    ));
    let forced = ExecOptions {
        size_cap: 500,
        force: true,
    };
    assert!(execute_plan(&plan, &registry, forced).is_ok());
}
