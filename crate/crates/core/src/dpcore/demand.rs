//! DP state keys: portal references, per-salesman tour specifications and
//! the joint demand a square is solved for.

use crate::dissection::Edge;

/// A portal on one edge of the owning square (`slot` in `0..=m`, corners
/// included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PortalRef {
    pub edge: Edge,
    pub slot: u32,
}

impl PortalRef {
    pub fn new(edge: Edge, slot: u32) -> Self {
        PortalRef { edge, slot }
    }

    fn key(&self) -> (usize, u32) {
        (self.edge.index(), self.slot)
    }
}

impl PartialOrd for PortalRef {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PortalRef {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

/// An unordered entry-exit pairing, stored canonically (`0 <= 1`).
pub type PortalPair = (PortalRef, PortalRef);

pub fn canonical_pair(a: PortalRef, b: PortalRef) -> PortalPair {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// What one salesman does inside a square.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TourSpec {
    /// The salesman's tour does not enter this square at all.
    Absent,
    /// The salesman's entire (single, closed) tour lies inside this square.
    /// Demanded only along the chain of squares containing the depot.
    Closed,
    /// The salesman crosses the boundary; entry-exit pairings in canonical
    /// order (each pair oriented, list sorted).
    Paths(Vec<PortalPair>),
}

impl TourSpec {
    pub fn is_absent(&self) -> bool {
        matches!(self, TourSpec::Absent)
    }

    pub fn paths(mut pairs: Vec<PortalPair>) -> TourSpec {
        debug_assert!(!pairs.is_empty());
        pairs.sort();
        TourSpec::Paths(pairs)
    }
}

/// The joint interface a square is solved for, indexed by salesman.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Demand(pub Vec<TourSpec>);

impl Demand {
    pub fn all_absent(&self) -> bool {
        self.0.iter().all(|s| s.is_absent())
    }

    /// Per-edge crossing multiplicity for salesman `h` (for the `<= r`
    /// interface invariant).
    pub fn edge_multiplicity(&self, h: usize) -> [u32; 4] {
        let mut counts = [0u32; 4];
        if let TourSpec::Paths(pairs) = &self.0[h] {
            for (a, b) in pairs {
                counts[a.edge.index()] += 1;
                counts[b.edge.index()] += 1;
            }
        }
        counts
    }

    /// Checks the interface invariants against `r`: per-salesman per-edge
    /// multiplicity at most `r` (hence total multiset size at most `4r`).
    pub fn respects_r(&self, r: u32) -> bool {
        (0..self.0.len()).all(|h| self.edge_multiplicity(h).iter().all(|&c| c <= r))
    }
}

/// One leg of a walk: the salesman enters child `quadrant` at `a` and
/// leaves it at `b` (child-local references).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hop {
    pub quadrant: u8,
    pub a: PortalRef,
    pub b: PortalRef,
}

/// How one salesman's demand at a square decomposes over the children.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RoutingKind {
    Absent,
    /// One walk per demanded pair, aligned with the canonical pair order.
    Walks(Vec<Vec<Hop>>),
    /// A closed walk crossing the inner segments (for `Closed`).
    Cycle(Vec<Hop>),
    /// The closed tour lies entirely inside this child.
    DescendClosed(u8),
}

/// A decomposition of one salesman's spec into child interfaces, with the
/// trace needed for tour reconstruction.
#[derive(Debug, Clone)]
pub struct Routing {
    pub kind: RoutingKind,
    /// Canonical pair multiset demanded of each child quadrant.
    pub child_pairs: [Vec<PortalPair>; 4],
    /// Straight-line lower bound on the length this routing implies.
    pub score: f64,
}

impl Routing {
    pub fn absent() -> Routing {
        Routing {
            kind: RoutingKind::Absent,
            child_pairs: Default::default(),
            score: 0.0,
        }
    }

    /// Dedup identity: routings inducing the same child interfaces are
    /// interchangeable (any valid chaining realizes the same demands).
    pub fn dedup_key(&self) -> ([Vec<PortalPair>; 4], Option<u8>) {
        let descend = match self.kind {
            RoutingKind::DescendClosed(q) => Some(q),
            _ => None,
        };
        (self.child_pairs.clone(), descend)
    }

    pub fn spec_for_child(&self, q: usize) -> TourSpec {
        if let RoutingKind::DescendClosed(dq) = self.kind {
            if dq as usize == q {
                return TourSpec::Closed;
            }
        }
        if self.child_pairs[q].is_empty() {
            TourSpec::Absent
        } else {
            TourSpec::Paths(self.child_pairs[q].clone())
        }
    }
}
