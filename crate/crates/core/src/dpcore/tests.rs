//! DP unit tests: leaf enumeration shapes, end-to-end micro solves, and the
//! rounding-envelope sandwich against the portal brute force.

use std::collections::BTreeMap;

use crate::dissection::{build_quadtree, override_params, Edge, Shift};
use crate::geom::Point;
use crate::instance::{generate_instance, Instance};
use crate::perturb::perturb;

use super::demand::{canonical_pair, Demand, TourSpec};
use super::engine::Ctx;
use super::*;

fn micro_instance() -> Instance {
    // three well-separated cities, depot first
    Instance::new(
        vec![
            Point::new(0.0, 0.0),
            Point::new(80.0, 10.0),
            Point::new(30.0, 70.0),
        ],
        0,
        1,
    )
    .unwrap()
}

fn build(
    inst: &Instance,
    eps: f64,
    m: u32,
    r: u32,
    shift: (u64, u64),
) -> (crate::perturb::PerturbedInstance, crate::dissection::ShiftedQuadtree, crate::dissection::PtasParams) {
    let p = perturb(inst, eps).unwrap();
    let params = override_params(eps, p.l, m, r, None).unwrap();
    let shift = Shift {
        a: shift.0 % p.l,
        b: shift.1 % p.l,
    };
    let tree = build_quadtree(&p, shift, &params);
    (p, tree, params)
}

fn leaf_of(tree: &crate::dissection::ShiftedQuadtree, pid: usize) -> usize {
    tree.nodes
        .iter()
        .position(|n| n.is_leaf() && n.points == vec![pid])
        .expect("leaf for point")
}

#[test]
fn occupied_leaf_with_no_crossings_yields_nothing() {
    let inst = micro_instance();
    let (_p, tree, params) = build(&inst, 0.5, 2, 1, (0, 0));
    let mut ctx = Ctx::new(&tree, &params, 1, &BTreeMap::new());
    let leaf = leaf_of(&tree, 1);
    let entries = ctx.solve_leaf(leaf, &Demand(vec![TourSpec::Absent]));
    assert!(entries.is_empty(), "unvisitable point must yield no configuration");
}

#[test]
fn occupied_leaf_enumerates_bend_per_salesman() {
    // k = 2, one entry-exit pair each: the point is assigned to either tour,
    // bending that tour's pair (two variants).
    let inst = Instance::new(
        vec![
            Point::new(0.0, 0.0),
            Point::new(80.0, 10.0),
            Point::new(30.0, 70.0),
        ],
        0,
        2,
    )
    .unwrap();
    let (_p, tree, params) = build(&inst, 0.5, 2, 1, (0, 0));
    let mut ctx = Ctx::new(&tree, &params, 2, &BTreeMap::new());
    let leaf = leaf_of(&tree, 1);
    let pair_a = canonical_pair(
        PortalRef::new(Edge::Left, 0),
        PortalRef::new(Edge::Left, 2),
    );
    let pair_b = canonical_pair(
        PortalRef::new(Edge::Bottom, 0),
        PortalRef::new(Edge::Bottom, 2),
    );
    let demand = Demand(vec![
        TourSpec::paths(vec![pair_a]),
        TourSpec::paths(vec![pair_b]),
    ]);
    let entries = ctx.solve_leaf(leaf, &demand);
    assert_eq!(entries.len(), 2, "one bend variant per salesman");
    // in each variant exactly one salesman pays more than its straight path
    for entry in &entries {
        assert!(entry.true_len.iter().all(|&l| l > 0.0));
    }
}

#[test]
fn depot_leaf_requires_every_present_tour_to_bend() {
    let inst = micro_instance();
    let (_p, tree, params) = build(&inst, 0.5, 2, 1, (0, 0));
    let mut ctx = Ctx::new(&tree, &params, 1, &BTreeMap::new());
    let depot_leaf = leaf_of(&tree, tree.depot_point);
    let pair = canonical_pair(
        PortalRef::new(Edge::Top, 0),
        PortalRef::new(Edge::Top, 2),
    );
    let demand = Demand(vec![TourSpec::paths(vec![pair])]);
    let entries = ctx.solve_leaf(depot_leaf, &demand);
    assert!(!entries.is_empty());
    for entry in &entries {
        assert_eq!(entry.depot_mask, 1, "present tour must visit the depot");
    }
}

#[test]
fn forced_leaf_only_emits_forced_salesman_variants() {
    let mut forced = BTreeMap::new();
    forced.insert(1usize, 1usize); // city 1 pinned to salesman 1
    let inst = Instance::with_forced(
        vec![
            Point::new(0.0, 0.0),
            Point::new(80.0, 10.0),
            Point::new(30.0, 70.0),
        ],
        0,
        2,
        forced.clone(),
    )
    .unwrap();
    let (_p, tree, params) = build(&inst, 0.5, 2, 1, (0, 0));
    let mut ctx = Ctx::new(&tree, &params, 2, &forced);
    let leaf = leaf_of(&tree, 1);
    let pair = canonical_pair(
        PortalRef::new(Edge::Left, 0),
        PortalRef::new(Edge::Left, 2),
    );
    let demand = Demand(vec![
        TourSpec::paths(vec![pair]),
        TourSpec::paths(vec![pair]),
    ]);
    let entries = ctx.solve_leaf(leaf, &demand);
    assert_eq!(entries.len(), 1, "only the forced salesman may take the point");
    // salesman 1 pays the bend, salesman 0 passes straight
    let entry = &entries[0];
    assert!(entry.true_len[1] > entry.true_len[0]);
}

#[test]
fn two_city_single_salesman_out_and_back() {
    let inst = Instance::new(
        vec![Point::new(0.0, 0.0), Point::new(50.0, 0.0)],
        0,
        1,
    )
    .unwrap();
    let (p, tree, params) = build(&inst, 0.5, 2, 1, (3, 5));
    let outcome = solve_tree(&tree, &params, 1, 0, 2, &BTreeMap::new()).expect("feasible");
    assert_eq!(outcome.tours.len(), 1);
    assert_eq!(outcome.tours[0].first(), Some(&0));
    assert_eq!(outcome.tours[0].last(), Some(&0));
    assert!(outcome.tours[0].contains(&1));
    // portal-faithful grid length is at least the out-and-back distance
    let direct = 2.0 * p.grid_cities[0].dist(&p.grid_cities[1]);
    assert!(outcome.grid_makespan >= direct - 1e-9);
    // and not absurdly longer on this micro case
    assert!(outcome.grid_makespan <= 3.0 * direct);
}

#[test]
fn solve_is_deterministic() {
    let inst = generate_instance(6, 2, 42, 100.0).unwrap();
    let (_p, tree, params) = build(&inst, 0.5, 4, 2, (17, 23));
    let a = solve_tree(&tree, &params, 2, 0, 6, &BTreeMap::new()).unwrap();
    let b = solve_tree(&tree, &params, 2, 0, 6, &BTreeMap::new()).unwrap();
    assert_eq!(a.tours, b.tours);
    assert_eq!(a.grid_makespan, b.grid_makespan);
    assert_eq!(a.root_config.ticks, b.root_config.ticks);
}

#[test]
fn every_city_is_covered() {
    for seed in 0..12u64 {
        let n = 3 + (seed % 5) as usize;
        let k = 1 + (seed % 2) as usize;
        let inst = generate_instance(n, k, seed, 60.0).unwrap();
        let (_p, tree, params) = build(&inst, 0.5, 2, 1, (7 * seed, 11 * seed));
        let outcome = solve_tree(&tree, &params, k, 0, n, &BTreeMap::new()).expect("feasible");
        let mut seen = vec![false; n];
        for tour in &outcome.tours {
            for &c in tour {
                seen[c] = true;
            }
        }
        assert!(seen.iter().all(|&s| s), "seed {seed}: missing city");
    }
}

#[test]
fn dp_lies_inside_the_rounding_envelope_of_the_brute_force() {
    // portal_bruteforce <= DP grid makespan <= (1+alpha)^depth * portal_bruteforce
    let mut tested = 0;
    for seed in 0..40u64 {
        let n = 2 + (seed % 3) as usize;
        let inst = generate_instance(n, 1, seed, 50.0).unwrap();
        let (p, tree, params) = build(&inst, 0.5, 2, 2, (seed * 13, seed * 31));
        if tree.depth > 2 {
            continue;
        }
        let pb = portal_bruteforce(&tree, &p, &params).unwrap();
        let outcome = solve_tree(&tree, &params, 1, 0, n, &BTreeMap::new()).unwrap();
        assert!(!outcome.stats.truncated(), "micro search must be exhaustive");
        let envelope = (1.0 + params.alpha).powi(tree.depth as i32);
        assert!(
            outcome.grid_makespan >= pb - 1e-6,
            "seed {seed}: DP {} below brute force {pb}",
            outcome.grid_makespan
        );
        assert!(
            outcome.grid_makespan <= envelope * pb + 1e-6,
            "seed {seed}: DP {} above envelope {} * {pb}",
            outcome.grid_makespan,
            envelope
        );
        tested += 1;
    }
    assert!(tested >= 3, "too few depth-<=2 micro instances ({tested})");
}

#[test]
fn bruteforce_refuses_oversize() {
    let inst = generate_instance(12, 2, 1, 100.0).unwrap();
    let (p, tree, params) = build(&inst, 0.5, 2, 1, (0, 0));
    let err = portal_bruteforce(&tree, &p, &params).unwrap_err();
    assert!(err.to_string().contains("portal_bruteforce"));
}
