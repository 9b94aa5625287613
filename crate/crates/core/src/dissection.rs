//! The `(a, b)`-shifted quadtree dissection and its `m`-regular portals.
//!
//! Instead of wrapping dissection lines modulo `L`, the tree dissects the
//! square `[a - L, a + L) x [b - L, b + L)` of side `2L`, which contains
//! every grid city for any shift in `[0, L)^2` and reproduces the same
//! distribution of line offsets without splitting tours across a wrap seam.
//! The root is level 0; a level-`i` square has side `2L / 2^i`. Squares
//! subdivide until they hold at most one distinct grid point (or reach side
//! 1), and only occupied squares are materialized — an absent child stands
//! for an empty square of the full dissection and is handled analytically
//! by the dynamic program.
//!
//! Every edge of a square carries `m + 1` evenly spaced portal slots
//! including both corners. With `m` a power of two, a parent portal
//! coincides exactly with an even child slot (all positions are dyadic, so
//! the alignment is exact in `f64`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{next_pow2, GridPoint};
use crate::perturb::PerturbedInstance;

/// Dissection shift: integers in `[0, L)` added to the dissection lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shift {
    pub a: u64,
    pub b: u64,
}

/// One of the four edges of a square. Slots on horizontal edges run
/// left-to-right, on vertical edges bottom-to-top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

pub const EDGES: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top];

impl Edge {
    pub fn index(self) -> usize {
        match self {
            Edge::Left => 0,
            Edge::Right => 1,
            Edge::Bottom => 2,
            Edge::Top => 3,
        }
    }

    pub fn from_index(i: usize) -> Edge {
        EDGES[i]
    }
}

/// Axis-aligned square cell of the dissection (grid units).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub x0: i64,
    pub y0: i64,
    pub side: i64,
    pub level: u32,
}

impl Cell {
    /// Quadrant `q` child: bit 0 = east half, bit 1 = north half.
    pub fn child(&self, q: usize) -> Cell {
        let half = self.side / 2;
        Cell {
            x0: self.x0 + ((q & 1) as i64) * half,
            y0: self.y0 + ((q >> 1) as i64) * half,
            side: half,
            level: self.level + 1,
        }
    }

    /// Quadrant a point belongs to, with points on a split line going to
    /// the high side (and thus never double-counted).
    pub fn quadrant_of(&self, p: GridPoint) -> usize {
        let mx = self.x0 + self.side / 2;
        let my = self.y0 + self.side / 2;
        ((p.x >= mx) as usize) | (((p.y >= my) as usize) << 1)
    }

    /// Position of portal `slot` (in `0..=m`) on `edge`. Exact for dyadic
    /// slot spacings, which `m` a power of two guarantees.
    pub fn portal_position(&self, m: u32, edge: Edge, slot: u32) -> (f64, f64) {
        debug_assert!(slot <= m);
        let step = self.side as f64 / m as f64;
        let along = slot as f64 * step;
        match edge {
            Edge::Left => (self.x0 as f64, self.y0 as f64 + along),
            Edge::Right => ((self.x0 + self.side) as f64, self.y0 as f64 + along),
            Edge::Bottom => (self.x0 as f64 + along, self.y0 as f64),
            Edge::Top => (self.x0 as f64 + along, (self.y0 + self.side) as f64),
        }
    }
}

/// The two child quadrants adjacent to a parent edge, low-slot side first.
pub fn edge_children(edge: Edge) -> (usize, usize) {
    match edge {
        Edge::Left => (0, 2),
        Edge::Right => (1, 3),
        Edge::Bottom => (0, 1),
        Edge::Top => (2, 3),
    }
}

/// Where a parent-edge portal lands among the child's portals.
#[derive(Debug, Clone, Copy)]
pub enum SlotMapping {
    /// In the low child's edge, at this child slot.
    Lo(u32),
    /// In the high child's edge, at this child slot.
    Hi(u32),
    /// Exactly on the shared child corner; a crossing there may belong to
    /// either child (low child slot `m`, high child slot `0`).
    Both,
}

/// Maps parent-edge slot `t` (of `m + 1`) onto the two half-edges of the
/// children. Parent portals sit at even child slots because child spacing
/// is half the parent spacing.
pub fn map_parent_slot(t: u32, m: u32) -> SlotMapping {
    if 2 * t < m {
        SlotMapping::Lo(2 * t)
    } else if 2 * t > m {
        SlotMapping::Hi(2 * t - m)
    } else {
        SlotMapping::Both
    }
}

/// The four inner half-edges created by a split, as
/// `(low quadrant, its edge, high quadrant, its edge)`. A crossing of slot
/// `u` on the segment appears at slot `u` of both adjacent child edges.
pub const INNER_SEGMENTS: [(usize, Edge, usize, Edge); 4] = [
    (0, Edge::Right, 1, Edge::Left),   // vertical, lower half
    (2, Edge::Right, 3, Edge::Left),   // vertical, upper half
    (0, Edge::Top, 2, Edge::Bottom),   // horizontal, left half
    (1, Edge::Top, 3, Edge::Bottom),   // horizontal, right half
];

/// Parameter mode: derived from the error analysis, or set directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamMode {
    Theory,
    Override,
}

/// PTAS parameters `(m, r, alpha)` plus the derivation intermediates.
///
/// Theory-mode values are astronomically large for realistic `eps`; the
/// override mode lets callers run the same machinery with small `(m, r)`.
/// Every structural invariant is parametric in `(m, r)` — only the
/// approximation guarantee is tied to theory mode.
#[derive(Debug, Clone)]
pub struct PtasParams {
    pub eps: f64,
    pub eps_prime: f64,
    /// Constant from the portal-displacement charging argument.
    pub g: u32,
    pub s: u64,
    /// Portals per edge (excluding one corner); a power of two.
    pub m: u32,
    /// Max crossings of a square edge per tour.
    pub r: u32,
    /// Rounding-ladder granularity.
    pub alpha: f64,
    pub mode: ParamMode,
}

/// Derives `(s, m, r, alpha)` from `eps` with `eps' = eps / 4`.
pub fn theory_params(eps: f64, k: usize, l: u64) -> Result<PtasParams> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("eps", format!("eps = {eps} not in (0, 1)")));
    }
    if !l.is_power_of_two() || l < 2 {
        return Err(Error::invalid("L", "L must be a power of two >= 2"));
    }
    Ok(theory_params_from_eps_prime(eps, eps / 4.0, k, l))
}

/// Parameter derivation with `eps'` supplied directly (the total-error
/// budget split chooses `eps' = eps / 4`); used by [`theory_params`] and by
/// parameter tests.
pub fn theory_params_from_eps_prime(eps: f64, eps_prime: f64, k: usize, l: u64) -> PtasParams {
    let g = 6u32;
    let s = (12.0 * g as f64 * k as f64 / eps_prime).ceil() as u64;
    let log_l = (l.trailing_zeros()) as f64;
    let m = next_pow2((2.0 * s as f64 * log_l).ceil() as u64).min(1 << 20) as u32;
    let r = (s + 4).min(u32::MAX as u64) as u32;
    let alpha = eps_prime / (2.0 * log_l);
    PtasParams {
        eps,
        eps_prime,
        g,
        s,
        m,
        r,
        alpha,
        mode: ParamMode::Theory,
    }
}

/// Builds parameters with explicit `(m, r)` and optional `alpha` (default
/// `eps/(8 log2 L)`, the theory value).
pub fn override_params(eps: f64, l: u64, m: u32, r: u32, alpha: Option<f64>) -> Result<PtasParams> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("eps", format!("eps = {eps} not in (0, 1)")));
    }
    if !m.is_power_of_two() {
        return Err(Error::invalid("m", format!("m = {m} must be a power of two")));
    }
    if r < 1 {
        return Err(Error::invalid("r", "r must be >= 1"));
    }
    let log_l = l.trailing_zeros() as f64;
    let eps_prime = eps / 4.0;
    let alpha = alpha.unwrap_or(eps_prime / (2.0 * log_l));
    if !(alpha > 0.0 && alpha < 0.1) {
        return Err(Error::invalid(
            "alpha",
            format!("alpha = {alpha} not in (0, 1/10)"),
        ));
    }
    let g = 6u32;
    let s = (12.0 * g as f64 / eps_prime).ceil() as u64;
    Ok(PtasParams {
        eps,
        eps_prime,
        g,
        s,
        m,
        r,
        alpha,
        mode: ParamMode::Override,
    })
}

/// How to pick dissection shifts.
#[derive(Debug, Clone, Copy)]
pub enum ShiftEnum {
    /// `count` uniform shifts, deterministic in `seed`.
    Sampled { seed: u64, count: usize },
    /// All `(a, b)` with both coordinates multiples of `stride`.
    Exhaustive { stride: u64 },
}

/// Enumerates dissection shifts over `[0, L)^2`.
pub fn enumerate_shifts(l: u64, mode: ShiftEnum) -> Vec<Shift> {
    match mode {
        ShiftEnum::Sampled { seed, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| Shift {
                    a: rng.gen_range(0..l),
                    b: rng.gen_range(0..l),
                })
                .collect()
        }
        ShiftEnum::Exhaustive { stride } => {
            let stride = stride.max(1);
            let mut shifts = Vec::new();
            let mut a = 0;
            while a < l {
                let mut b = 0;
                while b < l {
                    shifts.push(Shift { a, b });
                    b += stride;
                }
                a += stride;
            }
            shifts
        }
    }
}

/// One materialized square of the shifted dissection.
#[derive(Debug, Clone)]
pub struct SquareNode {
    pub cell: Cell,
    /// Materialized children by quadrant; `None` is an empty square.
    pub children: [Option<usize>; 4],
    /// Distinct grid point ids inside this square.
    pub points: Vec<usize>,
}

impl SquareNode {
    pub fn is_leaf(&self) -> bool {
        self.children.iter().all(|c| c.is_none())
    }

    pub fn level(&self) -> u32 {
        self.cell.level
    }
}

/// The shifted quadtree over the perturbed points.
#[derive(Debug, Clone)]
pub struct ShiftedQuadtree {
    pub shift: Shift,
    pub l: u64,
    pub m: u32,
    pub nodes: Vec<SquareNode>,
    pub root: usize,
    /// Distinct grid points (coincident snapped cities collapse here).
    pub points: Vec<GridPoint>,
    /// Original city indices per distinct point.
    pub point_cities: Vec<Vec<usize>>,
    /// Distinct point id of the depot.
    pub depot_point: usize,
    pub depth: u32,
}

impl ShiftedQuadtree {
    pub fn node(&self, id: usize) -> &SquareNode {
        &self.nodes[id]
    }

    /// Node ids grouped by level, root first.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let mut by_level = vec![Vec::new(); (self.depth + 1) as usize];
        for (id, node) in self.nodes.iter().enumerate() {
            by_level[node.level() as usize].push(id);
        }
        by_level
    }
}

/// Builds the `(a, b)`-shifted quadtree for a perturbed instance.
pub fn build_quadtree(p: &PerturbedInstance, shift: Shift, params: &PtasParams) -> ShiftedQuadtree {
    debug_assert!(shift.a < p.l && shift.b < p.l);
    // distinct grid points, in deterministic (sorted) order
    let mut uniq: std::collections::BTreeMap<GridPoint, Vec<usize>> = Default::default();
    for (city, &gp) in p.grid_cities.iter().enumerate() {
        uniq.entry(gp).or_default().push(city);
    }
    let points: Vec<GridPoint> = uniq.keys().cloned().collect();
    let point_cities: Vec<Vec<usize>> = uniq.values().cloned().collect();
    let depot_point = points
        .binary_search(&p.grid_cities[p.depot])
        .expect("depot grid point present");

    let l = p.l as i64;
    let root_cell = Cell {
        x0: shift.a as i64 - l,
        y0: shift.b as i64 - l,
        side: 2 * l,
        level: 0,
    };
    let mut nodes = Vec::new();
    let all: Vec<usize> = (0..points.len()).collect();
    let root = build_node(&mut nodes, &points, root_cell, all);
    let depth = nodes.iter().map(|n| n.level()).max().unwrap_or(0);
    ShiftedQuadtree {
        shift,
        l: p.l,
        m: params.m,
        nodes,
        root,
        points,
        point_cities,
        depot_point,
        depth,
    }
}

fn build_node(
    nodes: &mut Vec<SquareNode>,
    points: &[GridPoint],
    cell: Cell,
    inside: Vec<usize>,
) -> usize {
    debug_assert!(!inside.is_empty());
    let node = SquareNode {
        cell,
        children: [None; 4],
        points: inside,
    };
    let id_placeholder = nodes.len();
    if node.points.len() > 1 && cell.side > 1 {
        let mut buckets: [Vec<usize>; 4] = Default::default();
        for &pid in &node.points {
            buckets[cell.quadrant_of(points[pid])].push(pid);
        }
        nodes.push(node);
        let mut children = [None; 4];
        for (q, bucket) in buckets.into_iter().enumerate() {
            if !bucket.is_empty() {
                children[q] = Some(build_node(nodes, points, cell.child(q), bucket));
            }
        }
        nodes[id_placeholder].children = children;
        id_placeholder
    } else {
        debug_assert!(
            node.points.len() <= 1,
            "side-1 square with {} distinct points (min separation violated)",
            node.points.len()
        );
        nodes.push(node);
        id_placeholder
    }
}
