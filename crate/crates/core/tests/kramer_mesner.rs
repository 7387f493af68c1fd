use std::collections::HashSet;

use subdesign::km::{
    iterated_large_set_search, large_set_from_selections, solve_exact, KmSystem, LsSearchConfig,
    LsSearchOutcome, SearchFailure, SolveOutcome,
};
use subdesign::{count_subspaces, paper_data};

fn system() -> KmSystem {
    KmSystem::build(8, 2, 4, &paper_data::group().unwrap()).unwrap()
}

#[test]
fn incidence_identities() {
    let sys = system();
    assert_eq!(sys.lambda_max(), 651);
    for i in 0..sys.tau() {
        assert_eq!(sys.row(i).iter().map(|&a| a as u64).sum::<u64>(), 651);
    }
    let k_choose_t = count_subspaces(4, 2).unwrap();
    for j in 0..sys.kappa() {
        let lhs: u64 = (0..sys.tau())
            .map(|i| sys.t_orbits().orbits()[i].len() as u64 * sys.entry(i, j) as u64)
            .sum();
        assert_eq!(lhs, sys.k_orbits().orbits()[j].len() as u64 * k_choose_t);
    }
}

#[test]
fn shipped_tables_are_a_certificate() {
    let g = paper_data::group().unwrap();
    let sys = KmSystem::build(8, 2, 4, &g).unwrap();
    let designs = paper_data::designs(&g).unwrap();
    let selections: Vec<_> = designs
        .iter()
        .map(|d| sys.selection_of(d).unwrap())
        .collect();
    let tables = paper_data::tables().unwrap();
    let mut seen = HashSet::new();
    for (sel, table) in selections.iter().zip(&tables) {
        assert_eq!(sel.columns.len(), table.len());
        assert!(sys.is_solution(&sel.columns, 217));
        for &j in &sel.columns {
            assert!(seen.insert(j), "column {j} used twice");
        }
    }
    assert_eq!(seen.len(), sys.kappa());
    let ls = large_set_from_selections(&sys, &selections).unwrap();
    assert_eq!(ls.designs(), designs.as_slice());
}

#[test]
fn seeded_search_recovers_the_last_design() {
    let g = paper_data::group().unwrap();
    let sys = KmSystem::build(8, 2, 4, &g).unwrap();
    let designs = paper_data::designs(&g).unwrap();
    let sels: Vec<_> = designs
        .iter()
        .map(|d| sys.selection_of(d).unwrap())
        .collect();
    let config = LsSearchConfig {
        seed_rounds: vec![sels[0].columns.clone(), sels[1].columns.clone()],
        ..LsSearchConfig::default()
    };
    let LsSearchOutcome::Found(rounds) = iterated_large_set_search(&sys, 3, &config).unwrap()
    else {
        panic!("seeded search failed");
    };
    assert_eq!(rounds, sels);
}

#[test]
fn second_round_budget_exhaustion_keeps_partial_output() {
    let g = paper_data::group().unwrap();
    let sys = KmSystem::build(8, 2, 4, &g).unwrap();
    let designs = paper_data::designs(&g).unwrap();
    let first = sys.selection_of(&designs[0]).unwrap();
    let config = LsSearchConfig {
        node_budget: 20_000,
        seed_rounds: vec![first.columns.clone()],
        ..LsSearchConfig::default()
    };
    match iterated_large_set_search(&sys, 3, &config).unwrap() {
        LsSearchOutcome::Failed { completed, reason } => {
            assert_eq!(reason, SearchFailure::NodeBudget);
            assert_eq!(completed, vec![first]);
        }
        LsSearchOutcome::Found(rounds) => {
            // a lucky branch order would also be acceptable
            large_set_from_selections(&sys, &rounds).unwrap();
        }
    }
}

#[test]
fn seeded_round_must_be_a_solution() {
    let sys = system();
    let config = LsSearchConfig {
        seed_rounds: vec![vec![0, 1, 2]],
        ..LsSearchConfig::default()
    };
    assert!(iterated_large_set_search(&sys, 3, &config).is_err());
    assert_eq!(
        solve_exact(&sys, 217, &(0..sys.kappa()).collect::<Vec<_>>(), 10).unwrap(),
        SolveOutcome::Infeasible
    );
}
