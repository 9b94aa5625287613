//! Per-salesman routing enumeration: all the ways one salesman's interface
//! at a square can decompose into child interfaces.
//!
//! A `Paths` spec becomes one walk per entry-exit pair: a chain of hops
//! through child quadrants, crossing the four inner half-edges at portal
//! slots. A `Closed` spec becomes either a closed walk over the inner
//! segments or a descent into the one child whose subtree holds the depot.
//! Budgets keep every induced child interface `(m, r)`-admissible: each
//! inner segment is a child edge, so crossings per segment per salesman are
//! capped at `min(r, seg_cap)`.

use std::collections::HashMap;

use crate::dissection::{
    edge_children, map_parent_slot, Cell, Edge, SlotMapping, INNER_SEGMENTS,
};

use super::demand::{canonical_pair, Hop, PortalPair, PortalRef, Routing, RoutingKind, TourSpec};

/// Search budgets; `micro` parameterizations get exhaustive limits.
#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    /// Crossings per inner segment per salesman.
    pub seg_budget: u32,
    /// Total inner crossings per salesman per square.
    pub inner_budget: u32,
    /// Max routings kept per salesman per (square, spec), best-first.
    pub routing_cap: usize,
    /// Max joint routing combinations assembled per square.
    pub combo_budget: usize,
    /// Max Pareto entries kept per (square, demand).
    pub entry_cap: usize,
    /// Hard quota on walk-enumeration DFS steps per (square, spec).
    pub dfs_quota: usize,
}

impl SearchLimits {
    /// Limits derived from `(m, r, k)`. Small parameterizations
    /// (`m <= 2, r <= 2, k <= 2`) are searched exhaustively; larger ones
    /// keep caps fixed so that growing `(m, r)` only ever enlarges the
    /// searched space (resource monotonicity).
    pub fn for_params(m: u32, r: u32, k: usize) -> SearchLimits {
        let micro = m <= 2 && r <= 2 && k <= 2;
        SearchLimits {
            seg_budget: if micro { r } else { r.min(2) },
            inner_budget: if micro { (4 * r).min(6) } else { 4 },
            routing_cap: if micro { 100_000 } else { 192 },
            combo_budget: if micro { 200_000 } else { 6_000 },
            entry_cap: if micro { 96 } else { 40 },
            dfs_quota: if micro { 1_500_000 } else { 250_000 },
        }
    }
}

/// Tracks which budget got hit, for honesty flags in reports.
#[derive(Debug, Default, Clone, Copy)]
pub struct Truncation {
    pub routing: bool,
    pub combo: bool,
    pub entry: bool,
}

/// For each quadrant, its two inner segments as
/// `(segment index, own edge, neighbor quadrant, neighbor edge)`.
fn quadrant_segments(q: usize) -> [(usize, Edge, usize, Edge); 2] {
    let mut out = [(0, Edge::Left, 0, Edge::Left); 2];
    let mut found = 0;
    for (si, &(lo_q, lo_e, hi_q, hi_e)) in INNER_SEGMENTS.iter().enumerate() {
        if lo_q == q {
            out[found] = (si, lo_e, hi_q, hi_e);
            found += 1;
        } else if hi_q == q {
            out[found] = (si, hi_e, lo_q, lo_e);
            found += 1;
        }
    }
    debug_assert_eq!(found, 2);
    out
}

/// A point on some child's boundary.
#[derive(Debug, Clone, Copy)]
struct ChildPoint {
    quadrant: usize,
    portal: PortalRef,
    pos: (f64, f64),
}

struct WalkSearch<'a> {
    m: u32,
    limits: SearchLimits,
    child_cells: [Cell; 4],
    /// pair endpoints mapped to child boundaries; per pair a list of
    /// (start options, end options)
    pair_endpoints: &'a [(Vec<ChildPoint>, Vec<ChildPoint>)],
    seg_used: [u32; 4],
    inner_used: u32,
    walks: Vec<Vec<Hop>>,
    current: Vec<Hop>,
    steps: usize,
    quota_hit: bool,
    out: Vec<(Vec<Vec<Hop>>, f64)>,
    score: f64,
}

impl<'a> WalkSearch<'a> {
    fn seg_portal(&self, si: usize, own_edge: Edge, quadrant: usize, slot: u32) -> ChildPoint {
        let _ = si;
        ChildPoint {
            quadrant,
            portal: PortalRef::new(own_edge, slot),
            pos: self.child_cells[quadrant].portal_position(self.m, own_edge, slot),
        }
    }

    fn run(&mut self) {
        self.next_pair(0);
    }

    fn next_pair(&mut self, pair_idx: usize) {
        if self.steps >= self.limits.dfs_quota {
            self.quota_hit = true;
            return;
        }
        if pair_idx == self.pair_endpoints.len() {
            self.out.push((self.walks.clone(), self.score));
            return;
        }
        let (starts, ends) = &self.pair_endpoints[pair_idx];
        for s in starts.clone() {
            for e in ends.clone() {
                self.walk(pair_idx, s, e);
            }
        }
    }

    fn walk(&mut self, pair_idx: usize, cur: ChildPoint, target: ChildPoint) {
        self.steps += 1;
        if self.steps >= self.limits.dfs_quota {
            self.quota_hit = true;
            return;
        }
        // close the pair inside the current quadrant
        if cur.quadrant == target.quadrant {
            let hop = Hop {
                quadrant: cur.quadrant as u8,
                a: cur.portal,
                b: target.portal,
            };
            let d = dist(cur.pos, target.pos);
            self.current.push(hop);
            self.score += d;
            self.walks.push(std::mem::take(&mut self.current));
            self.next_pair(pair_idx + 1);
            self.current = self.walks.pop().unwrap();
            self.score -= d;
            self.current.pop();
        }
        // or cross an inner segment and keep walking
        if self.inner_used < self.limits.inner_budget {
            for (si, own_edge, other_q, other_edge) in quadrant_segments(cur.quadrant) {
                if self.seg_used[si] >= self.limits.seg_budget {
                    continue;
                }
                for slot in 0..=self.m {
                    let exit = self.seg_portal(si, own_edge, cur.quadrant, slot);
                    let hop = Hop {
                        quadrant: cur.quadrant as u8,
                        a: cur.portal,
                        b: exit.portal,
                    };
                    let d = dist(cur.pos, exit.pos);
                    self.seg_used[si] += 1;
                    self.inner_used += 1;
                    self.current.push(hop);
                    self.score += d;
                    let entered = ChildPoint {
                        quadrant: other_q,
                        portal: PortalRef::new(other_edge, slot),
                        pos: exit.pos,
                    };
                    self.walk(pair_idx, entered, target);
                    self.score -= d;
                    self.current.pop();
                    self.inner_used -= 1;
                    self.seg_used[si] -= 1;
                }
            }
        }
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Maps a parent-boundary portal onto the child boundaries it lies on
/// (two options when it sits exactly on the shared child corner).
fn map_outer(cell: Cell, m: u32, p: PortalRef) -> Vec<ChildPoint> {
    let (lo_q, hi_q) = edge_children(p.edge);
    let mk = |q: usize, slot: u32| ChildPoint {
        quadrant: q,
        portal: PortalRef::new(p.edge, slot),
        pos: cell.child(q).portal_position(m, p.edge, slot),
    };
    match map_parent_slot(p.slot, m) {
        SlotMapping::Lo(ct) => vec![mk(lo_q, ct)],
        SlotMapping::Hi(ct) => vec![mk(hi_q, ct)],
        SlotMapping::Both => vec![mk(lo_q, m), mk(hi_q, 0)],
    }
}

fn routing_from_walks(kind_walks: Vec<Vec<Hop>>, score: f64, closed: bool) -> Routing {
    let mut child_pairs: [Vec<PortalPair>; 4] = Default::default();
    for walk in &kind_walks {
        for hop in walk {
            child_pairs[hop.quadrant as usize].push(canonical_pair(hop.a, hop.b));
        }
    }
    for pairs in child_pairs.iter_mut() {
        pairs.sort();
    }
    let kind = if closed {
        debug_assert_eq!(kind_walks.len(), 1);
        RoutingKind::Cycle(kind_walks.into_iter().next().unwrap())
    } else {
        RoutingKind::Walks(kind_walks)
    };
    Routing {
        kind,
        child_pairs,
        score,
    }
}

/// All decompositions of `spec` over the children of `cell`, deduplicated
/// by induced child interfaces, sorted by optimistic length. Returns the
/// routings and whether any budget clipped the enumeration.
pub fn enumerate_routings(
    cell: Cell,
    m: u32,
    limits: &SearchLimits,
    spec: &TourSpec,
    depot_child: Option<usize>,
) -> (Vec<Routing>, bool) {
    let child_cells = [cell.child(0), cell.child(1), cell.child(2), cell.child(3)];
    let mut truncated = false;
    let mut raw: Vec<(Vec<Vec<Hop>>, f64, bool)> = Vec::new();
    let mut descend: Option<Routing> = None;

    match spec {
        TourSpec::Absent => return (vec![Routing::absent()], false),
        TourSpec::Paths(pairs) => {
            let pair_endpoints: Vec<(Vec<ChildPoint>, Vec<ChildPoint>)> = pairs
                .iter()
                .map(|&(a, b)| (map_outer(cell, m, a), map_outer(cell, m, b)))
                .collect();
            let mut search = WalkSearch {
                m,
                limits: *limits,
                child_cells,
                pair_endpoints: &pair_endpoints,
                seg_used: [0; 4],
                inner_used: 0,
                walks: Vec::new(),
                current: Vec::new(),
                steps: 0,
                quota_hit: false,
                out: Vec::new(),
                score: 0.0,
            };
            search.run();
            truncated |= search.quota_hit;
            raw.extend(search.out.into_iter().map(|(w, s)| (w, s, false)));
        }
        TourSpec::Closed => {
            // descend into the depot-bearing child, if any
            if let Some(q) = depot_child {
                descend = Some(Routing {
                    kind: RoutingKind::DescendClosed(q as u8),
                    child_pairs: Default::default(),
                    score: 0.0,
                });
            }
            // or cross the inner segments as a closed walk
            let (cycles, hit) = enumerate_cycles(cell, m, limits, &child_cells);
            truncated |= hit;
            raw.extend(cycles.into_iter().map(|(w, s)| (vec![w], s, true)));
        }
    }

    let mut best: HashMap<([Vec<PortalPair>; 4], Option<u8>), Routing> = HashMap::new();
    for (walks, score, closed) in raw {
        let routing = routing_from_walks(walks, score, closed);
        let key = routing.dedup_key();
        match best.get(&key) {
            Some(prev) if prev.score <= routing.score => {}
            _ => {
                best.insert(key, routing);
            }
        }
    }
    let mut routings: Vec<Routing> = best.into_values().collect();
    if let Some(d) = descend {
        routings.push(d);
    }
    routings.sort_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .unwrap()
            .then_with(|| a.dedup_key().cmp(&b.dedup_key()))
    });
    if routings.len() > limits.routing_cap {
        routings.truncate(limits.routing_cap);
        truncated = true;
    }
    (routings, truncated)
}

/// Closed walks over the inner segments. Each cycle starts at its minimal
/// crossing, entered from the low-quadrant side; leftover symmetric
/// duplicates collapse in the caller's dedup.
fn enumerate_cycles(
    cell: Cell,
    m: u32,
    limits: &SearchLimits,
    child_cells: &[Cell; 4],
) -> (Vec<(Vec<Hop>, f64)>, bool) {
    let _ = cell;
    let mut out = Vec::new();
    let mut quota_hit = false;
    let mut steps = 0usize;

    // candidate crossings in canonical order: (segment, slot)
    for start_seg in 0..4 {
        let (lo_q, lo_e, hi_q, hi_e) = INNER_SEGMENTS[start_seg];
        for start_slot in 0..=m {
            // cycle crosses (start_seg, start_slot): it proceeds inside the
            // low quadrant and must come back through the high side.
            let start_lo = ChildPoint {
                quadrant: lo_q,
                portal: PortalRef::new(lo_e, start_slot),
                pos: child_cells[lo_q].portal_position(m, lo_e, start_slot),
            };
            let close_hi = ChildPoint {
                quadrant: hi_q,
                portal: PortalRef::new(hi_e, start_slot),
                pos: start_lo.pos,
            };
            let mut seg_used = [0u32; 4];
            seg_used[start_seg] = 1;
            let mut hops = Vec::new();
            cycle_dfs(
                m,
                limits,
                child_cells,
                (start_seg, start_slot),
                close_hi,
                start_lo,
                &mut seg_used,
                1,
                &mut hops,
                0.0,
                &mut out,
                &mut steps,
                &mut quota_hit,
            );
        }
    }
    (out, quota_hit)
}

#[allow(clippy::too_many_arguments)]
fn cycle_dfs(
    m: u32,
    limits: &SearchLimits,
    child_cells: &[Cell; 4],
    start: (usize, u32),
    close_at: ChildPoint,
    cur: ChildPoint,
    seg_used: &mut [u32; 4],
    inner_used: u32,
    hops: &mut Vec<Hop>,
    score: f64,
    out: &mut Vec<(Vec<Hop>, f64)>,
    steps: &mut usize,
    quota_hit: &mut bool,
) {
    *steps += 1;
    if *steps >= limits.dfs_quota {
        *quota_hit = true;
        return;
    }
    // close the cycle with a final hop inside the high-side quadrant
    if cur.quadrant == close_at.quadrant {
        let mut cycle = hops.clone();
        cycle.push(Hop {
            quadrant: cur.quadrant as u8,
            a: cur.portal,
            b: close_at.portal,
        });
        out.push((cycle, score + dist(cur.pos, close_at.pos)));
    }
    if inner_used >= limits.inner_budget {
        return;
    }
    for (si, own_edge, other_q, other_edge) in quadrant_segments(cur.quadrant) {
        if seg_used[si] >= limits.seg_budget {
            continue;
        }
        for slot in 0..=m {
            // canonical start: never cross anything below the start crossing
            if (si, slot) < start {
                continue;
            }
            let exit_pos = child_cells[cur.quadrant].portal_position(m, own_edge, slot);
            let hop = Hop {
                quadrant: cur.quadrant as u8,
                a: cur.portal,
                b: PortalRef::new(own_edge, slot),
            };
            seg_used[si] += 1;
            hops.push(hop);
            let entered = ChildPoint {
                quadrant: other_q,
                portal: PortalRef::new(other_edge, slot),
                pos: exit_pos,
            };
            cycle_dfs(
                m,
                limits,
                child_cells,
                start,
                close_at,
                entered,
                seg_used,
                inner_used + 1,
                hops,
                score + dist(cur.pos, exit_pos),
                out,
                steps,
                quota_hit,
            );
            hops.pop();
            seg_used[si] -= 1;
        }
    }
}
