//! Exhaustive oracle for the portal-restricted problem: the exact optimum
//! over all `(m, r)`-light multi-tours, WITHOUT any length rounding.
//!
//! Independent of the DP: tours are searched directly as sequences of cell
//! transitions (at legal portal points) and point visits over the leaf
//! cells of the full dissection. A transition between adjacent cells at a
//! point `pt` crosses every dissection square containing exactly one of the
//! two cells; it is legal when `pt` is a portal of each such square's edge
//! and no square edge exceeds `r` crossings per tour. Used to sandwich the
//! DP inside the rounding envelope on micro instances.

use crate::dissection::{Cell, Edge, PtasParams, ShiftedQuadtree};
use crate::error::{Error, Result};
use crate::perturb::PerturbedInstance;

/// Size gate: exponential search, micro instances only.
const MAX_POINTS: usize = 5;
const MAX_K: usize = 2;
const MAX_DEPTH: u32 = 2;
const MAX_M: u32 = 2;
const MAX_R: u32 = 2;
/// Crossings allowed between two consecutive point visits (generous for
/// micro dissections; test suites assert zero prunes at this cap).
const CROSSING_RUN_CAP: u32 = 12;

struct LeafCell {
    cell: Cell,
    point: Option<usize>,
}

#[derive(Clone)]
struct Transition {
    to: usize,
    /// Candidate crossing position.
    pos: (f64, f64),
    /// `(square index, edge)` pairs whose crossing count this consumes.
    crossings: Vec<(usize, Edge)>,
}

struct Oracle<'a> {
    tree: &'a ShiftedQuadtree,
    r: u32,
    cells: Vec<LeafCell>,
    /// Adjacency: per cell, outgoing transitions.
    transitions: Vec<Vec<Transition>>,
    depot_cell: usize,
    depot_pos: (f64, f64),
}

/// Exact optimum makespan (grid units) of the `(m, r)`-light restriction,
/// searched by direct enumeration. Refuses instances above the micro gate.
pub fn portal_bruteforce(
    tree: &ShiftedQuadtree,
    p: &PerturbedInstance,
    params: &PtasParams,
) -> Result<f64> {
    if tree.points.len() > MAX_POINTS
        || p.k > MAX_K
        || tree.depth > MAX_DEPTH
        || params.m > MAX_M
        || params.r > MAX_R
    {
        return Err(Error::too_large(
            "portal_bruteforce",
            format!(
                "requires points <= {MAX_POINTS}, k <= {MAX_K}, depth <= {MAX_DEPTH}, \
                 m <= {MAX_M}, r <= {MAX_R} (got {}, {}, {}, {}, {})",
                tree.points.len(),
                p.k,
                tree.depth,
                params.m,
                params.r
            ),
        ));
    }
    let oracle = Oracle::build(tree, params);

    // assignment of non-depot points to salesmen, exact tour per subset
    let pts = tree.points.len();
    let depot_pid = tree.depot_point;
    let non_depot: Vec<usize> = (0..pts).filter(|&pid| pid != depot_pid).collect();
    let k = p.k.min(non_depot.len()).max(1);
    let mut memo: std::collections::HashMap<u64, f64> = Default::default();
    let mut tour_cost = |mask: u64, oracle: &Oracle| -> f64 {
        if let Some(&c) = memo.get(&mask) {
            return c;
        }
        let c = oracle.best_tour(mask);
        memo.insert(mask, c);
        c
    };

    let mut best = f64::INFINITY;
    if k == 1 || non_depot.is_empty() {
        let mask = non_depot.iter().fold(0u64, |m, &pid| m | (1 << pid));
        best = tour_cost(mask, &oracle);
    } else {
        for split in 0..(1u64 << non_depot.len()) {
            let mut m0 = 0u64;
            let mut m1 = 0u64;
            for (i, &pid) in non_depot.iter().enumerate() {
                if split & (1 << i) != 0 {
                    m1 |= 1 << pid;
                } else {
                    m0 |= 1 << pid;
                }
            }
            let c0 = tour_cost(m0, &oracle);
            if c0 >= best {
                continue;
            }
            let c1 = tour_cost(m1, &oracle);
            best = best.min(c0.max(c1));
        }
    }
    Ok(best)
}

impl<'a> Oracle<'a> {
    fn build(tree: &'a ShiftedQuadtree, params: &PtasParams) -> Oracle<'a> {
        // every square of the full dissection: materialized cells plus the
        // empty children of materialized internal squares
        let mut squares: Vec<Cell> = tree.nodes.iter().map(|n| n.cell).collect();
        let mut cells: Vec<LeafCell> = Vec::new();
        for node in &tree.nodes {
            if node.is_leaf() {
                cells.push(LeafCell {
                    cell: node.cell,
                    point: Some(node.points[0]),
                });
            } else {
                for q in 0..4 {
                    if node.children[q].is_none() {
                        let cell = node.cell.child(q);
                        squares.push(cell);
                        cells.push(LeafCell { cell, point: None });
                    }
                }
            }
        }

        let m = params.m;
        let mut transitions: Vec<Vec<Transition>> = vec![Vec::new(); cells.len()];
        for a in 0..cells.len() {
            for b in 0..cells.len() {
                if a == b {
                    continue;
                }
                if let Some((line_vertical, coord, lo, hi)) =
                    shared_segment(cells[a].cell, cells[b].cell)
                {
                    // squares containing exactly one of the two cells
                    let separating: Vec<(usize, Edge)> = squares
                        .iter()
                        .enumerate()
                        .filter_map(|(si, &s)| {
                            let ina = contains(s, cells[a].cell);
                            let inb = contains(s, cells[b].cell);
                            if ina == inb {
                                return None;
                            }
                            let edge = if line_vertical {
                                if s.x0 as f64 == coord {
                                    Edge::Left
                                } else {
                                    Edge::Right
                                }
                            } else if s.y0 as f64 == coord {
                                Edge::Bottom
                            } else {
                                Edge::Top
                            };
                            Some((si, edge))
                        })
                        .collect();
                    // candidate points: portals of both facing edges inside
                    // the shared segment, legal for every separating square
                    let mut candidates: Vec<(f64, f64)> = Vec::new();
                    for cell in [cells[a].cell, cells[b].cell] {
                        for edge in crate::dissection::EDGES {
                            for slot in 0..=m {
                                let pos = cell.portal_position(m, edge, slot);
                                let on_line = if line_vertical {
                                    pos.0 == coord && pos.1 >= lo && pos.1 <= hi
                                } else {
                                    pos.1 == coord && pos.0 >= lo && pos.0 <= hi
                                };
                                if on_line && !candidates.contains(&pos) {
                                    candidates.push(pos);
                                }
                            }
                        }
                    }
                    for pos in candidates {
                        let legal = separating.iter().all(|&(si, edge)| {
                            is_portal(squares[si], m, edge, pos)
                        });
                        if legal {
                            transitions[a].push(Transition {
                                to: b,
                                pos,
                                crossings: separating.clone(),
                            });
                        }
                    }
                }
            }
        }

        let depot_pos = tree.points[tree.depot_point].to_f64();
        let depot_cell = cells
            .iter()
            .position(|c| c.point == Some(tree.depot_point))
            .expect("depot lives in a leaf cell");
        Oracle {
            tree,
            r: params.r,
            cells,
            transitions,
            depot_cell,
            depot_pos,
        }
    }

    /// Min length of a closed `(m, r)`-light tour from the depot visiting
    /// every point in `mask`.
    fn best_tour(&self, mask: u64) -> f64 {
        if mask == 0 {
            return 0.0;
        }
        let mut counts = vec![[0u8; 4]; self.transitions.len().max(self.tree.nodes.len() + 16)];
        let mut best = f64::INFINITY;
        self.dfs(
            self.depot_cell,
            self.depot_pos,
            mask,
            0.0,
            0,
            &mut counts,
            &mut best,
        );
        best
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        cell: usize,
        pos: (f64, f64),
        remaining: u64,
        cost: f64,
        run: u32,
        counts: &mut Vec<[u8; 4]>,
        best: &mut f64,
    ) {
        if cost >= *best {
            return;
        }
        if remaining == 0 {
            if cell == self.depot_cell {
                let total = cost + dist(pos, self.depot_pos);
                if total < *best {
                    *best = total;
                }
            }
        } else if let Some(pid) = self.cells[cell].point {
            // visit the cell's point if still needed
            if remaining & (1 << pid) != 0 {
                let p = self.tree.points[pid].to_f64();
                self.dfs(
                    cell,
                    p,
                    remaining & !(1 << pid),
                    cost + dist(pos, p),
                    0,
                    counts,
                    best,
                );
            }
        }
        if run >= CROSSING_RUN_CAP {
            return;
        }
        // order transitions by immediate cost for earlier pruning
        let mut order: Vec<usize> = (0..self.transitions[cell].len()).collect();
        order.sort_by(|&i, &j| {
            let di = dist(pos, self.transitions[cell][i].pos);
            let dj = dist(pos, self.transitions[cell][j].pos);
            di.partial_cmp(&dj).unwrap()
        });
        for ti in order {
            let t = &self.transitions[cell][ti];
            if t
                .crossings
                .iter()
                .any(|&(si, e)| counts[si][e.index()] >= self.r as u8)
            {
                continue;
            }
            for &(si, e) in &t.crossings {
                counts[si][e.index()] += 1;
            }
            self.dfs(
                t.to,
                t.pos,
                remaining,
                cost + dist(pos, t.pos),
                run + 1,
                counts,
                best,
            );
            for &(si, e) in &t.crossings {
                counts[si][e.index()] -= 1;
            }
        }
    }
}

/// Positive-length shared boundary of two cells:
/// `(vertical?, line coordinate, lo, hi)`.
fn shared_segment(a: Cell, b: Cell) -> Option<(bool, f64, f64, f64)> {
    let (ax1, ay1) = ((a.x0 + a.side) as f64, (a.y0 + a.side) as f64);
    let (bx1, by1) = ((b.x0 + b.side) as f64, (b.y0 + b.side) as f64);
    let (ax0, ay0) = (a.x0 as f64, a.y0 as f64);
    let (bx0, by0) = (b.x0 as f64, b.y0 as f64);
    // vertical contact
    if ax1 == bx0 || bx1 == ax0 {
        let x = if ax1 == bx0 { ax1 } else { bx1 };
        let lo = ay0.max(by0);
        let hi = ay1.min(by1);
        if lo < hi {
            return Some((true, x, lo, hi));
        }
    }
    // horizontal contact
    if ay1 == by0 || by1 == ay0 {
        let y = if ay1 == by0 { ay1 } else { by1 };
        let lo = ax0.max(bx0);
        let hi = ax1.min(bx1);
        if lo < hi {
            return Some((false, y, lo, hi));
        }
    }
    None
}

fn contains(outer: Cell, inner: Cell) -> bool {
    outer.x0 <= inner.x0
        && outer.y0 <= inner.y0
        && outer.x0 + outer.side >= inner.x0 + inner.side
        && outer.y0 + outer.side >= inner.y0 + inner.side
}

/// Does `pos` sit exactly on a portal slot of this square's edge?
fn is_portal(square: Cell, m: u32, edge: Edge, pos: (f64, f64)) -> bool {
    for slot in 0..=m {
        if square.portal_position(m, edge, slot) == pos {
            return true;
        }
    }
    false
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}
