//! The demand-driven `(m, r)`-multipath-multitour dynamic program.
//!
//! A square is solved for a joint interface (one [`TourSpec`] per salesman);
//! the result is the set of achievable configurations, each carrying the
//! per-salesman rounded-length ticks, a depot-visit mask, the witness needed
//! to reconstruct tours, and the true (unrounded) grid lengths of that
//! witness. Only demanded interfaces are ever materialized: the recursion
//! starts from the root's empty interface, and absent children of the
//! compressed tree — empty squares of the full dissection — are evaluated
//! analytically as straight portal-to-portal segments.
//!
//! Stranded subtours cannot arise by construction: every child pair is
//! threaded by a walk anchored to the parent boundary, and closed tours
//! exist only through an explicit `Closed` spec propagated from the root
//! along the chain of squares containing the depot.

use std::collections::HashMap;
use std::rc::Rc;

use crate::dissection::{PtasParams, ShiftedQuadtree};
use crate::scale::{Ladder, TickIndex};

use super::demand::{Demand, PortalPair, Routing, TourSpec};
use super::routing::{enumerate_routings, SearchLimits, Truncation};

/// One achievable configuration of a square under a given demand.
#[derive(Debug, Clone)]
pub struct Entry {
    /// Rounded length per salesman on this square's level ladder.
    pub ticks: Vec<TickIndex>,
    /// Bit `h` set when salesman `h` bends to the depot point somewhere in
    /// this square's subtree.
    pub depot_mask: u32,
    /// True grid length of the retained witness, per salesman.
    pub true_len: Vec<f64>,
    pub(super) witness: Witness,
}

impl Entry {
    pub fn max_true(&self) -> f64 {
        self.true_len.iter().cloned().fold(0.0, f64::max)
    }

    fn sum_true(&self) -> f64 {
        self.true_len.iter().sum()
    }

    fn max_tick(&self) -> TickIndex {
        self.ticks.iter().cloned().max().unwrap_or(-1)
    }

    fn sum_ticks(&self) -> i64 {
        self.ticks.iter().map(|&t| t as i64).sum()
    }
}

#[derive(Debug, Clone)]
pub(super) enum Witness {
    Leaf { actions: Vec<LeafAction> },
    Merge(Box<MergeWitness>),
}

/// What one salesman does at an occupied leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum LeafAction {
    /// Absent, or present with all pairs passing straight through.
    Straight,
    /// Pair at this index (canonical order) bends to visit the point.
    Bend(usize),
    /// `Closed` realized as a zero-length stay at the point.
    AtPoint,
}

#[derive(Debug, Clone)]
pub(super) struct MergeWitness {
    /// Chosen routing per salesman.
    pub routings: Vec<Rc<Routing>>,
    /// Demand, result list and entry index per occupied child quadrant.
    pub children: [Option<ChildChoice>; 4],
}

#[derive(Debug, Clone)]
pub(super) struct ChildChoice {
    pub demand: Rc<Demand>,
    pub entries: Rc<Vec<Entry>>,
    pub index: usize,
}

/// Per-level table and search statistics.
#[derive(Debug, Clone, Default)]
pub struct DpStats {
    pub nodes_by_level: Vec<usize>,
    /// Distinct demanded interfaces per level (memo keys).
    pub demands_by_level: Vec<usize>,
    /// Total configurations stored across all tables.
    pub configurations: usize,
    pub truncation: Truncation,
    /// Ladder saturations observed while merging (transient sums above the
    /// guard tick; never part of a selected solution).
    pub overflow_count: usize,
    pub solve_calls: usize,
    pub combos: usize,
}

impl DpStats {
    pub fn truncated(&self) -> bool {
        self.truncation.routing || self.truncation.combo || self.truncation.entry
    }
}

pub(super) struct Ctx<'a> {
    pub tree: &'a ShiftedQuadtree,
    pub params: &'a PtasParams,
    pub limits: SearchLimits,
    pub ladders: Vec<Ladder>,
    /// Forced salesman mask per distinct point id.
    pub forced_at_point: HashMap<usize, u32>,
    pub k: usize,
    memo: HashMap<usize, HashMap<Demand, Rc<Vec<Entry>>>>,
    /// Routing enumeration cache per (node, spec): specs repeat across the
    /// many joint interfaces a node is demanded for.
    routing_cache: HashMap<(usize, TourSpec), Rc<Vec<Rc<Routing>>>>,
    pub stats: DpStats,
}

impl<'a> Ctx<'a> {
    pub fn new(
        tree: &'a ShiftedQuadtree,
        params: &'a PtasParams,
        k: usize,
        forced: &std::collections::BTreeMap<usize, usize>,
    ) -> Ctx<'a> {
        let max_level = tree.depth + 1;
        let ladders = (0..=max_level)
            .map(|lvl| Ladder::new(tree.l, lvl, params.m, params.alpha))
            .collect();
        let mut forced_at_point: HashMap<usize, u32> = HashMap::new();
        // map forced city indices onto their distinct grid points
        let mut city_to_point = HashMap::new();
        for (pid, cities) in tree.point_cities.iter().enumerate() {
            for &c in cities {
                city_to_point.insert(c, pid);
            }
        }
        for (&city, &salesman) in forced {
            let pid = city_to_point[&city];
            *forced_at_point.entry(pid).or_insert(0) |= 1 << salesman;
        }
        let mut stats = DpStats {
            nodes_by_level: vec![0; (tree.depth + 1) as usize],
            demands_by_level: vec![0; (tree.depth + 1) as usize],
            ..Default::default()
        };
        for node in &tree.nodes {
            stats.nodes_by_level[node.level() as usize] += 1;
        }
        Ctx {
            tree,
            params,
            limits: SearchLimits::for_params(params.m, params.r, k),
            ladders,
            forced_at_point,
            k,
            memo: HashMap::new(),
            routing_cache: HashMap::new(),
            stats,
        }
    }

    fn contains_depot(&self, node_id: usize) -> bool {
        self.tree.nodes[node_id]
            .points
            .binary_search(&self.tree.depot_point)
            .is_ok()
    }

    pub fn solve(&mut self, node_id: usize, demand: &Demand) -> Rc<Vec<Entry>> {
        if let Some(hit) = self.memo.get(&node_id).and_then(|m| m.get(demand)) {
            return hit.clone();
        }
        self.stats.solve_calls += 1;
        if self.stats.solve_calls % 20000 == 0 {
            eprintln!("solve_calls {} combos {} node {} level {}", self.stats.solve_calls, self.stats.combos, node_id, self.tree.nodes[node_id].level());
        }
        debug_assert!(demand.respects_r(self.params.r), "demand violates r");
        let node = &self.tree.nodes[node_id];
        let entries = if node.is_leaf() {
            self.solve_leaf(node_id, demand)
        } else {
            self.solve_internal(node_id, demand, false)
        };
        let level = self.tree.nodes[node_id].level() as usize;
        self.stats.demands_by_level[level] += 1;
        self.stats.configurations += entries.len();
        let rc = Rc::new(entries);
        self.memo
            .entry(node_id)
            .or_default()
            .insert(demand.clone(), rc.clone());
        rc
    }

    /// Base case: a leaf square holding exactly one distinct grid point.
    ///
    /// Empty interfaces yield straight portal-to-portal paths; the point
    /// must be visited by bending one entry-exit pair of some salesman
    /// (every present salesman at the depot leaf; exactly the forced
    /// salesmen where a forced assignment applies).
    pub fn solve_leaf(&mut self, node_id: usize, demand: &Demand) -> Vec<Entry> {
        let node = &self.tree.nodes[node_id];
        debug_assert!(node.points.len() == 1);
        let pid = node.points[0];
        let is_depot = pid == self.tree.depot_point;
        let point = self.tree.points[pid].to_f64();
        let ladder = &self.ladders[node.level() as usize];
        let m = self.tree.m;
        let forced_mask = self.forced_at_point.get(&pid).copied().unwrap_or(0);
        let k = self.k;

        // per salesman: straight total, and per-pair bend cost
        let mut straight = vec![0.0f64; k];
        let mut bend_totals: Vec<Vec<f64>> = vec![Vec::new(); k];
        let mut present = 0u32;
        let mut closed_mask = 0u32;
        for h in 0..k {
            match &demand.0[h] {
                TourSpec::Absent => {}
                TourSpec::Closed => {
                    debug_assert!(is_depot, "Closed demanded at a non-depot leaf");
                    present |= 1 << h;
                    closed_mask |= 1 << h;
                }
                TourSpec::Paths(pairs) => {
                    present |= 1 << h;
                    let mut total = 0.0;
                    for &(a, b) in pairs {
                        let pa = node.cell.portal_position(m, a.edge, a.slot);
                        let pb = node.cell.portal_position(m, b.edge, b.slot);
                        total += dist(pa, pb);
                    }
                    straight[h] = total;
                    for &(a, b) in pairs {
                        let pa = node.cell.portal_position(m, a.edge, a.slot);
                        let pb = node.cell.portal_position(m, b.edge, b.slot);
                        let bent = total - dist(pa, pb) + dist(pa, point) + dist(point, pb);
                        bend_totals[h].push(bent);
                    }
                }
            }
        }
        if present == 0 {
            return Vec::new(); // point cannot be covered
        }

        // enumerate visitor variants
        let paths_mask = present & !closed_mask;
        let mut variants: Vec<Vec<LeafAction>> = Vec::new();
        let base: Vec<LeafAction> = (0..k)
            .map(|h| {
                if closed_mask & (1 << h) != 0 {
                    LeafAction::AtPoint
                } else {
                    LeafAction::Straight
                }
            })
            .collect();
        let bend_product = |benders: u32, variants: &mut Vec<Vec<LeafAction>>| {
            // every bender picks one of its pairs
            let mut acc = vec![base.clone()];
            for h in 0..k {
                if benders & (1 << h) == 0 {
                    continue;
                }
                let mut next = Vec::new();
                for v in &acc {
                    for pair_idx in 0..bend_totals[h].len() {
                        let mut v2 = v.clone();
                        v2[h] = LeafAction::Bend(pair_idx);
                        next.push(v2);
                    }
                }
                acc = next;
            }
            variants.append(&mut acc);
        };
        if is_depot {
            // every present tour must visit the depot inside this leaf
            if forced_mask & !present != 0 {
                return Vec::new(); // a forced salesman is absent here
            }
            if paths_mask != 0 && bend_totals.iter().enumerate().any(|(h, b)| {
                paths_mask & (1 << h) != 0 && b.is_empty()
            }) {
                return Vec::new();
            }
            bend_product(paths_mask, &mut variants);
        } else if forced_mask != 0 {
            if forced_mask & !present != 0 {
                return Vec::new();
            }
            bend_product(forced_mask & paths_mask, &mut variants);
        } else if closed_mask != 0 {
            variants.push(base.clone());
        } else {
            for h in 0..k {
                if paths_mask & (1 << h) != 0 {
                    bend_product(1 << h, &mut variants);
                }
            }
        }

        let mut table = EntryTable::new(self.limits.entry_cap);
        for actions in variants {
            let mut ticks = Vec::with_capacity(k);
            let mut true_len = Vec::with_capacity(k);
            let mut visitors = 0u32;
            for h in 0..k {
                let len = match actions[h] {
                    LeafAction::Straight => straight[h],
                    LeafAction::Bend(i) => {
                        visitors |= 1 << h;
                        bend_totals[h][i]
                    }
                    LeafAction::AtPoint => {
                        visitors |= 1 << h;
                        0.0
                    }
                };
                if self.ladders[node.level() as usize].overflows(len) {
                    self.stats.overflow_count += 1;
                }
                ticks.push(ladder.round_up(len));
                true_len.push(len);
            }
            let depot_mask = if is_depot { visitors } else { 0 };
            table.insert(
                Entry {
                    ticks,
                    depot_mask,
                    true_len,
                    witness: Witness::Leaf { actions },
                },
                &mut self.stats,
            );
        }
        table.into_entries()
    }

    /// Merge case: decompose each salesman's interface over the four
    /// children, look the induced child interfaces up recursively, sum the
    /// child ticks and re-round on this level's ladder.
    pub fn solve_internal(&mut self, node_id: usize, demand: &Demand, symmetric: bool) -> Vec<Entry> {
        let node = self.tree.nodes[node_id].clone();
        let cell = node.cell;
        let k = self.k;
        let m = self.tree.m;
        let depot_child = if self.contains_depot(node_id) {
            (0..4).find(|&q| {
                node.children[q]
                    .map(|c| self.contains_depot(c))
                    .unwrap_or(false)
            })
        } else {
            None
        };

        // per-salesman routing lists, cached per (node, spec)
        let mut lists: Vec<Rc<Vec<Rc<Routing>>>> = Vec::with_capacity(k);
        for h in 0..k {
            let key = (node_id, demand.0[h].clone());
            let cached = if let Some(hit) = self.routing_cache.get(&key) {
                hit.clone()
            } else {
                let (routings, truncated) =
                    enumerate_routings(cell, m, &self.limits, &demand.0[h], depot_child);
                if truncated {
                    self.stats.truncation.routing = true;
                }
                let rc: Rc<Vec<Rc<Routing>>> =
                    Rc::new(routings.into_iter().map(Rc::new).collect());
                self.routing_cache.insert(key, rc.clone());
                rc
            };
            if cached.is_empty() {
                return Vec::new();
            }
            lists.push(cached);
        }

        // clamp the joint product to the combo budget, trimming the largest
        // lists first (they are score-sorted, so the best stay)
        let mut take: Vec<usize> = lists.iter().map(|l| l.len()).collect();
        loop {
            let product: f64 = take.iter().map(|&t| t as f64).product();
            if product <= self.limits.combo_budget as f64 {
                break;
            }
            let argmax = (0..k).max_by_key(|&h| take[h]).unwrap();
            if take[argmax] <= 1 {
                break;
            }
            take[argmax] = (take[argmax] * 3 / 4).max(1);
            self.stats.truncation.combo = true;
        }

        let mut table = EntryTable::new(self.limits.entry_cap);
        let mut idx = vec![0usize; k];
        'combos: loop {
            // symmetry: salesmen with identical specs are interchangeable;
            // only at the root (nothing recombines above) restrict to
            // non-decreasing routing indices.
            let canonical = !symmetric
                || (1..k).all(|h| demand.0[h] != demand.0[h - 1] || idx[h] >= idx[h - 1]);
            if canonical {
                self.stats.combos += 1;
                let routings: Vec<Rc<Routing>> =
                    (0..k).map(|h| lists[h][idx[h]].clone()).collect();
                self.assemble_combo(&node, &routings, &mut table);
            }
            // odometer
            let mut h = k;
            loop {
                if h == 0 {
                    break 'combos;
                }
                h -= 1;
                idx[h] += 1;
                if idx[h] < take[h] {
                    break;
                }
                idx[h] = 0;
            }
        }
        table.into_entries()
    }

    fn assemble_combo(
        &mut self,
        node: &crate::dissection::SquareNode,
        routings: &[Rc<Routing>],
        table: &mut EntryTable,
    ) {
        let k = self.k;
        let m = self.tree.m;
        let level = node.level() as usize;
        let child_level = level + 1;

        // build child demands
        let mut child_demands: [Option<Rc<Demand>>; 4] = Default::default();
        for q in 0..4 {
            let specs: Vec<TourSpec> = (0..k).map(|h| routings[h].spec_for_child(q)).collect();
            let d = Demand(specs);
            if node.children[q].is_some() && d.all_absent() {
                return; // occupied child left uncovered
            }
            if node.children[q].is_none() {
                debug_assert!(!d.0.iter().any(|s| matches!(s, TourSpec::Closed)));
            }
            child_demands[q] = Some(Rc::new(d));
        }

        // resolve children: recursive tables for occupied quadrants,
        // straight-line ticks for empty ones
        let mut occupied: Vec<(usize, Rc<Demand>, Rc<Vec<Entry>>)> = Vec::new();
        let mut empty_ticks = vec![0.0f64; k]; // sum of child tick values
        let mut empty_true = vec![0.0f64; k];
        for q in 0..4 {
            let demand = child_demands[q].clone().unwrap();
            match node.children[q] {
                Some(child_id) => {
                    if demand.all_absent() {
                        continue;
                    }
                    let entries = self.solve(child_id, &demand);
                    if entries.is_empty() {
                        return;
                    }
                    occupied.push((q, demand, entries));
                }
                None => {
                    let cell = node.cell.child(q);
                    let child_ladder = &self.ladders[child_level];
                    for h in 0..k {
                        if let TourSpec::Paths(pairs) = &demand.0[h] {
                            let len = straight_len(cell, m, pairs);
                            if child_ladder.overflows(len) {
                                self.stats.overflow_count += 1;
                            }
                            let tick = child_ladder.round_up(len);
                            empty_ticks[h] += child_ladder.tick_value(tick);
                            empty_true[h] += len;
                        }
                    }
                }
            }
        }

        // product over occupied children's entries
        let ladder = &self.ladders[level];
        let child_ladder = &self.ladders[child_level];
        let mut sel = vec![0usize; occupied.len()];
        let mut overflow_hits = 0usize;
        'product: loop {
            let mut ticks = Vec::with_capacity(k);
            let mut true_len = Vec::with_capacity(k);
            let mut depot_mask = 0u32;
            for h in 0..k {
                let mut sum = empty_ticks[h];
                let mut t = empty_true[h];
                for (ci, (_, _, entries)) in occupied.iter().enumerate() {
                    let e = &entries[sel[ci]];
                    sum += child_ladder.tick_value(e.ticks[h]);
                    t += e.true_len[h];
                }
                if ladder.overflows(sum) {
                    overflow_hits += 1;
                }
                ticks.push(ladder.round_up(sum));
                true_len.push(t);
            }
            for (ci, (_, _, entries)) in occupied.iter().enumerate() {
                depot_mask |= entries[sel[ci]].depot_mask;
            }
            let witness = Witness::Merge(Box::new(MergeWitness {
                routings: routings.to_vec(),
                children: {
                    let mut arr: [Option<ChildChoice>; 4] = Default::default();
                    for (ci, (q, demand, entries)) in occupied.iter().enumerate() {
                        arr[*q] = Some(ChildChoice {
                            demand: demand.clone(),
                            entries: entries.clone(),
                            index: sel[ci],
                        });
                    }
                    arr
                },
            }));
            table.insert(
                Entry {
                    ticks,
                    depot_mask,
                    true_len,
                    witness,
                },
                &mut self.stats,
            );

            let mut ci = occupied.len();
            loop {
                if ci == 0 {
                    break 'product;
                }
                ci -= 1;
                sel[ci] += 1;
                if sel[ci] < occupied[ci].2.len() {
                    break;
                }
                sel[ci] = 0;
            }
        }
        self.stats.overflow_count += overflow_hits;
    }
}

pub(super) fn straight_len(
    cell: crate::dissection::Cell,
    m: u32,
    pairs: &[PortalPair],
) -> f64 {
    pairs
        .iter()
        .map(|&(a, b)| {
            dist(
                cell.portal_position(m, a.edge, a.slot),
                cell.portal_position(m, b.edge, b.slot),
            )
        })
        .sum()
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Accumulates entries keeping only Pareto-minimal configurations:
/// an entry dominates another when its ticks are componentwise no larger
/// and its depot mask is a superset; among equals the witness with the
/// smallest true length wins.
pub(super) struct EntryTable {
    entries: Vec<Entry>,
    cap: usize,
}

impl EntryTable {
    pub fn new(cap: usize) -> EntryTable {
        EntryTable {
            entries: Vec::new(),
            cap,
        }
    }

    pub fn insert(&mut self, candidate: Entry, stats: &mut DpStats) {
        for existing in &mut self.entries {
            if existing.ticks == candidate.ticks && existing.depot_mask == candidate.depot_mask {
                let better = (candidate.max_true(), candidate.sum_true())
                    < (existing.max_true(), existing.sum_true());
                if better {
                    *existing = candidate;
                }
                return;
            }
            if dominates(existing, &candidate) {
                return;
            }
        }
        self.entries.retain(|e| !dominates(&candidate, e));
        self.entries.push(candidate);
        if self.entries.len() > self.cap {
            // keep the most promising configurations
            self.entries.sort_by(|a, b| {
                (a.max_tick(), a.sum_ticks())
                    .cmp(&(b.max_tick(), b.sum_ticks()))
                    .then(
                        (a.max_true(), a.sum_true())
                            .partial_cmp(&(b.max_true(), b.sum_true()))
                            .unwrap(),
                    )
            });
            self.entries.truncate(self.cap);
            stats.truncation.entry = true;
        }
    }

    pub fn into_entries(self) -> Vec<Entry> {
        self.entries
    }
}

/// `a` dominates `b`: no larger in every tick, superset depot mask.
fn dominates(a: &Entry, b: &Entry) -> bool {
    a.depot_mask & b.depot_mask == b.depot_mask
        && a.ticks.iter().zip(&b.ticks).all(|(x, y)| x <= y)
}

/// Root interface variants: every salesman is either absent or runs one
/// closed tour. Forced salesmen must be active; without forced assignments
/// only canonical (sorted) vectors are generated since salesmen are
/// interchangeable.
pub(super) fn root_demands(k: usize, forced_mask: u32) -> Vec<Demand> {
    let mut out = Vec::new();
    if forced_mask == 0 {
        for active in 1..=k {
            let mut specs = vec![TourSpec::Absent; k - active];
            specs.extend(std::iter::repeat(TourSpec::Closed).take(active));
            out.push(Demand(specs));
        }
    } else {
        for mask in 1u32..(1 << k) {
            if mask & forced_mask != forced_mask {
                continue;
            }
            let specs = (0..k)
                .map(|h| {
                    if mask & (1 << h) != 0 {
                        TourSpec::Closed
                    } else {
                        TourSpec::Absent
                    }
                })
                .collect();
            out.push(Demand(specs));
        }
    }
    out
}

/// Selects the best root entry: smallest maximum tick, ties by
/// lexicographically smallest tick vector, then by true length. Entries
/// whose active salesmen missed the depot are filtered out.
pub(super) fn select_root_entry<'e>(
    candidates: &'e [(Demand, Entry)],
) -> Option<&'e (Demand, Entry)> {
    candidates
        .iter()
        .filter(|(demand, entry)| {
            demand.0.iter().enumerate().all(|(h, spec)| {
                spec.is_absent() || entry.depot_mask & (1 << h) != 0
            })
        })
        .min_by(|(_, a), (_, b)| {
            (a.max_tick(), &a.ticks)
                .cmp(&(b.max_tick(), &b.ticks))
                .then(
                    (a.max_true(), a.sum_true())
                        .partial_cmp(&(b.max_true(), b.sum_true()))
                        .unwrap(),
                )
        })
}
