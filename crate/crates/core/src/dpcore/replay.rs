//! Witness replay: expands the chosen root configuration back into one
//! portal-faithful closed polyline per salesman, then into city tours.
//!
//! Each salesman's polyline threads the recorded walks: a hop through an
//! occupied child expands recursively via that child's retained witness; a
//! hop through an empty square is the straight segment between its portals.
//! City tours keep the visit order of the polyline, rotated so the depot
//! visit comes first; portal detours are dropped (shortcutting never
//! lengthens a tour).

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::dissection::{Cell, ShiftedQuadtree};

use super::demand::{canonical_pair, Demand, PortalPair, RoutingKind, TourSpec};
use super::engine::{ChildChoice, Entry, LeafAction, Witness};

/// One vertex of a reconstructed path: a portal position or a visited
/// distinct point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) enum Step {
    Portal(f64, f64),
    Point(usize),
}

impl Step {
    fn pos(&self, tree: &ShiftedQuadtree) -> (f64, f64) {
        match *self {
            Step::Portal(x, y) => (x, y),
            Step::Point(pid) => tree.points[pid].to_f64(),
        }
    }
}

/// Per-salesman realization of a square's interface: one open path per
/// demanded pair (aligned with canonical pair order) plus the closed cycle
/// when the spec is `Closed`.
struct Realized {
    pairs: Vec<Vec<Vec<Step>>>,
    closed: Vec<Option<Vec<Step>>>,
}

fn realize_empty(tree: &ShiftedQuadtree, cell: Cell, demand: &Demand) -> Realized {
    let m = tree.m;
    let k = demand.0.len();
    let mut pairs = vec![Vec::new(); k];
    for (h, spec) in demand.0.iter().enumerate() {
        if let TourSpec::Paths(list) = spec {
            for &(a, b) in list {
                let pa = cell.portal_position(m, a.edge, a.slot);
                let pb = cell.portal_position(m, b.edge, b.slot);
                pairs[h].push(vec![Step::Portal(pa.0, pa.1), Step::Portal(pb.0, pb.1)]);
            }
        }
    }
    Realized {
        pairs,
        closed: vec![None; k],
    }
}

fn realize_leaf(
    tree: &ShiftedQuadtree,
    node_id: usize,
    demand: &Demand,
    actions: &[LeafAction],
) -> Realized {
    let node = &tree.nodes[node_id];
    let pid = node.points[0];
    let m = tree.m;
    let k = demand.0.len();
    let mut pairs = vec![Vec::new(); k];
    let mut closed = vec![None; k];
    for (h, spec) in demand.0.iter().enumerate() {
        match spec {
            TourSpec::Absent => {}
            TourSpec::Closed => {
                debug_assert_eq!(actions[h], LeafAction::AtPoint);
                closed[h] = Some(vec![Step::Point(pid)]);
            }
            TourSpec::Paths(list) => {
                for (i, &(a, b)) in list.iter().enumerate() {
                    let pa = node.cell.portal_position(m, a.edge, a.slot);
                    let pb = node.cell.portal_position(m, b.edge, b.slot);
                    let path = if actions[h] == LeafAction::Bend(i) {
                        vec![
                            Step::Portal(pa.0, pa.1),
                            Step::Point(pid),
                            Step::Portal(pb.0, pb.1),
                        ]
                    } else {
                        vec![Step::Portal(pa.0, pa.1), Step::Portal(pb.0, pb.1)]
                    };
                    pairs[h].push(path);
                }
            }
        }
    }
    Realized { pairs, closed }
}

fn realize_node(
    tree: &ShiftedQuadtree,
    node_id: usize,
    demand: &Demand,
    entry: &Entry,
) -> Realized {
    match &entry.witness {
        Witness::Leaf { actions } => realize_leaf(tree, node_id, demand, actions),
        Witness::Merge(merge) => {
            let node = &tree.nodes[node_id];
            let k = demand.0.len();
            // realize children (occupied recursively, empty analytically)
            let mut child_real: [Option<Realized>; 4] = Default::default();
            for q in 0..4 {
                match (&merge.children[q], node.children[q]) {
                    (Some(choice), Some(child_id)) => {
                        let ChildChoice {
                            demand: child_demand,
                            entries,
                            index,
                        } = choice;
                        child_real[q] = Some(realize_node(
                            tree,
                            child_id,
                            child_demand,
                            &entries[*index],
                        ));
                    }
                    (None, _) => {
                        // empty square (or occupied child not demanded):
                        // derive demand from the routings
                        let specs: Vec<TourSpec> = (0..k)
                            .map(|h| merge.routings[h].spec_for_child(q))
                            .collect();
                        let d = Demand(specs);
                        if !d.all_absent() {
                            child_real[q] = Some(realize_empty(tree, node.cell.child(q), &d));
                        }
                    }
                    (Some(_), None) => unreachable!("witness child without tree child"),
                }
            }
            // per (quadrant, salesman): queues of realized paths keyed by
            // canonical pair value, consumed in order by the hops
            let mut queues: [Vec<HashMap<PortalPair, VecDeque<Vec<Step>>>>; 4] =
                Default::default();
            for q in 0..4 {
                queues[q] = vec![HashMap::new(); k];
                if let Some(real) = &child_real[q] {
                    for h in 0..k {
                        let spec = merge.routings[h].spec_for_child(q);
                        if let TourSpec::Paths(list) = spec {
                            for (i, &pair) in list.iter().enumerate() {
                                queues[q][h]
                                    .entry(pair)
                                    .or_default()
                                    .push_back(real.pairs[h][i].clone());
                            }
                        }
                    }
                }
            }
            let mut take_path = |q: usize, h: usize, pair: PortalPair, fwd: bool| -> Vec<Step> {
                let path = queues[q][h]
                    .get_mut(&pair)
                    .and_then(|queue| queue.pop_front())
                    .expect("witness pair realization missing");
                if fwd {
                    path
                } else {
                    let mut rev = path;
                    rev.reverse();
                    rev
                }
            };
            let concat = |chunks: Vec<Vec<Step>>, tree: &ShiftedQuadtree| -> Vec<Step> {
                let mut out: Vec<Step> = Vec::new();
                for chunk in chunks {
                    for step in chunk {
                        if let Some(last) = out.last() {
                            if last.pos(tree) == step.pos(tree)
                                && matches!(step, Step::Portal(..))
                            {
                                continue;
                            }
                        }
                        out.push(step);
                    }
                }
                out
            };

            let mut pairs = vec![Vec::new(); k];
            let mut closed = vec![None; k];
            for h in 0..k {
                match &merge.routings[h].kind {
                    RoutingKind::Absent => {}
                    RoutingKind::Walks(walks) => {
                        for walk in walks {
                            let chunks: Vec<Vec<Step>> = walk
                                .iter()
                                .map(|hop| {
                                    let pair = canonical_pair(hop.a, hop.b);
                                    let fwd = pair.0 == hop.a && pair.1 == hop.b;
                                    // equal endpoints: orientation irrelevant
                                    let fwd = fwd || hop.a == hop.b;
                                    take_path(hop.quadrant as usize, h, pair, fwd)
                                })
                                .collect();
                            pairs[h].push(concat(chunks, tree));
                        }
                    }
                    RoutingKind::Cycle(hops) => {
                        let chunks: Vec<Vec<Step>> = hops
                            .iter()
                            .map(|hop| {
                                let pair = canonical_pair(hop.a, hop.b);
                                let fwd = (pair.0 == hop.a && pair.1 == hop.b) || hop.a == hop.b;
                                take_path(hop.quadrant as usize, h, pair, fwd)
                            })
                            .collect();
                        closed[h] = Some(concat(chunks, tree));
                    }
                    RoutingKind::DescendClosed(q) => {
                        closed[h] = child_real[*q as usize]
                            .as_ref()
                            .and_then(|r| r.closed[h].clone());
                        debug_assert!(closed[h].is_some());
                    }
                }
            }
            Realized { pairs, closed }
        }
    }
}

/// The reconstruction result: city tours, portal-faithful polylines (grid
/// units) and their maximum length.
pub struct Reconstruction {
    pub tours: Vec<Vec<usize>>,
    pub polylines: Vec<Vec<(f64, f64)>>,
    pub grid_makespan: f64,
}

/// Expands the selected root witness into tours. `depot_city` is the
/// instance depot index; forced cities must land in their assigned tours.
pub(super) fn reconstruct(
    tree: &ShiftedQuadtree,
    demand: &Demand,
    entry: &Entry,
    depot_city: usize,
    n_cities: usize,
    forced: &BTreeMap<usize, usize>,
) -> Reconstruction {
    let k = demand.0.len();
    let realized = realize_node(tree, tree.root, demand, entry);

    // polylines and per-salesman visited point sequences
    let mut polylines: Vec<Vec<(f64, f64)>> = vec![Vec::new(); k];
    let mut visit_seqs: Vec<Vec<usize>> = vec![Vec::new(); k];
    for h in 0..k {
        if let Some(cycle) = &realized.closed[h] {
            let mut line: Vec<(f64, f64)> = Vec::new();
            for step in cycle {
                let p = step.pos(tree);
                if line.last() != Some(&p) {
                    line.push(p);
                }
                if let Step::Point(pid) = step {
                    visit_seqs[h].push(*pid);
                }
            }
            if let (Some(&first), true) = (line.first(), line.len() > 1) {
                if *line.last().unwrap() != first {
                    line.push(first);
                }
            }
            polylines[h] = line;
        }
    }
    let grid_makespan = polylines
        .iter()
        .map(|line| line.windows(2).map(|w| dist(w[0], w[1])).sum::<f64>())
        .fold(0.0, f64::max);

    // rotate visits so the depot comes first, then assign cities
    let depot_pid = tree.depot_point;
    let mut assigned = vec![false; n_cities];
    assigned[depot_city] = true;
    let mut tours: Vec<Vec<usize>> = vec![vec![depot_city]; k];
    for h in 0..k {
        if visit_seqs[h].is_empty() {
            continue;
        }
        let seq = &mut visit_seqs[h];
        if let Some(pos) = seq.iter().position(|&pid| pid == depot_pid) {
            seq.rotate_left(pos);
        }
        let mut tour = vec![depot_city];
        for &pid in seq.iter() {
            for &city in &tree.point_cities[pid] {
                if assigned[city] {
                    continue;
                }
                if let Some(&owner) = forced.get(&city) {
                    if owner != h {
                        continue; // leave for its assigned salesman
                    }
                }
                tour.push(city);
                assigned[city] = true;
            }
        }
        tour.push(depot_city);
        tours[h] = tour;
    }
    // Cities coincident with the depot ride tour 0 at zero cost when no
    // active tour picked them up (e.g. all tours empty except elsewhere).
    for city in 0..n_cities {
        if !assigned[city] {
            let tour = &mut tours[0];
            if tour.len() == 1 {
                tour.push(city);
                tour.push(depot_city);
            } else {
                let at = tour.len() - 1;
                tour.insert(at, city);
            }
            assigned[city] = true;
        }
    }

    Reconstruction {
        tours,
        polylines,
        grid_makespan,
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}
