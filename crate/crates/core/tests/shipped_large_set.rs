use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subdesign::design::{
    default_hyperplane, default_point, derived_large_set, dual_large_set, residual_large_set,
    verify_large_set,
};
use subdesign::group::DEFAULT_GROUP_CAP;
use subdesign::{count_subspaces, paper_data, Group, GroupElement, OrbitPartition, Subspace};

fn random_subspace(rng: &mut ChaCha8Rng, k: usize) -> Subspace {
    loop {
        let s = Subspace::span(8, (0..k).map(|_| rng.gen::<u64>() & 0xff)).unwrap();
        if s.dim() == k {
            return s;
        }
    }
}

#[test]
fn generator_orders() {
    let ms = paper_data::generator_matrices().unwrap();
    assert_eq!(ms.len(), 2);
    assert_eq!(ms[0].multiplicative_order(1000).unwrap(), Some(51));
    assert_eq!(ms[1].multiplicative_order(1000).unwrap(), Some(4));
    let sigma = GroupElement::new(&ms[0]).unwrap();
    assert_eq!(
        Group::close(&[sigma], DEFAULT_GROUP_CAP).unwrap().order(),
        51
    );
}

#[test]
fn group_is_closed_of_order_204() {
    let g = paper_data::group().unwrap();
    assert_eq!(g.order(), 204);
    let elements: HashSet<&GroupElement> = g.elements().iter().collect();
    assert_eq!(elements.len(), 204);
    for a in g.elements().iter().step_by(7) {
        for b in g.elements() {
            assert!(elements.contains(&a.then(b)));
        }
    }
    assert!(g.elements().iter().any(GroupElement::is_identity));
}

#[test]
fn action_is_compatible_with_lattice_operations() {
    let g = paper_data::group().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let x = &g.elements()[rng.gen_range(0..g.order())];
        let (ka, kb) = (rng.gen_range(0..=8), rng.gen_range(0..=8));
        let a = random_subspace(&mut rng, ka);
        let b = random_subspace(&mut rng, kb);
        let xa = x.act(&a).unwrap();
        assert_eq!(xa.dim(), a.dim());
        assert_eq!(x.inverse().act(&xa).unwrap(), a);
        assert_eq!(
            x.act(&a.sum(&b).unwrap()).unwrap(),
            xa.sum(&x.act(&b).unwrap()).unwrap()
        );
        assert_eq!(
            x.act(&a.intersect(&b).unwrap()).unwrap(),
            xa.intersect(&x.act(&b).unwrap()).unwrap()
        );
    }
    assert!(g.elements()[1].act(&Subspace::zero(7).unwrap()).is_err());
}

#[test]
fn orbit_partitions_under_the_group() {
    let g = paper_data::group().unwrap();
    for k in [2, 4] {
        let p = OrbitPartition::compute(8, k, &g).unwrap();
        assert_eq!(Some(p.total_members() as u64), count_subspaces(8, k));
        assert!(p.orbits().iter().all(|o| 204 % o.len() == 0));
        for o in p.orbits().iter().step_by(37) {
            assert_eq!(
                o.len() * g.stabilizer_order(&o.representative).unwrap(),
                204
            );
        }
    }
    let first = paper_data::tables().unwrap()[0][0].subspace(0).unwrap();
    assert_eq!(204 % g.orbit(&first).unwrap().len(), 0);
}

#[test]
fn shipped_large_set_and_its_transforms() {
    let g = paper_data::group().unwrap();
    let ls = paper_data::large_set(&g).unwrap();
    let report = verify_large_set(&ls).unwrap();
    assert_eq!(report.blocks_per_design, vec![66929; 3]);
    assert_eq!(report.total_blocks, 200787);
    assert_eq!(report.lambda, 217);

    for d in ls.designs() {
        let blocks: HashSet<Subspace> = d.blocks().iter().cloned().collect();
        assert!(g.leaves_invariant(&blocks));
        // a 2-design is also a 1-design and a 0-design
        assert_eq!(
            subdesign::design::verify_design(8, 1, d.blocks()).unwrap(),
            217 * 127 / 7
        );
        assert_eq!(
            subdesign::design::verify_design(8, 0, d.blocks()).unwrap(),
            66929
        );
    }

    let derived = derived_large_set(&ls, &default_point(8).unwrap()).unwrap();
    assert_eq!((derived.t(), derived.k(), derived.v()), (1, 3, 7));
    assert_eq!(derived.member_lambda().unwrap(), 217);
    assert!(derived.designs().iter().all(|d| d.len() == 3937));

    let residual = residual_large_set(&ls, &default_hyperplane(8).unwrap()).unwrap();
    assert_eq!((residual.t(), residual.k(), residual.v()), (1, 4, 7));
    assert_eq!(residual.member_lambda().unwrap(), 465);

    let dual = dual_large_set(&ls).unwrap();
    assert_eq!((dual.t(), dual.k(), dual.v()), (2, 4, 8));
    verify_large_set(&dual).unwrap();

    // other points and hyperplanes work as well
    for p in [0b1000_0000u64, 0b0110_1001, 0b1111_1111] {
        let point = Subspace::span(8, [p]).unwrap();
        derived_large_set(&ls, &point).unwrap();
        residual_large_set(&ls, &point.dual()).unwrap();
    }
}
