//! Small planar geometry helpers shared across modules.

use serde::{Deserialize, Serialize};

/// A point in the original (real-valued) coordinate space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A point on the integer grid produced by perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: i64,
    pub y: i64,
}

impl GridPoint {
    pub fn new(x: i64, y: i64) -> Self {
        GridPoint { x, y }
    }

    pub fn dist(&self, other: &GridPoint) -> f64 {
        ((self.x - other.x) as f64).hypot((self.y - other.y) as f64)
    }

    pub fn to_f64(self) -> (f64, f64) {
        (self.x as f64, self.y as f64)
    }
}

/// Total length of a closed or open polyline over original points.
pub fn path_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].dist(&w[1])).sum()
}

/// Length of the tour `order` (sequence of indices into `pts`), summing
/// consecutive Euclidean distances. The caller supplies a closed sequence.
pub fn tour_length(pts: &[Point], order: &[usize]) -> f64 {
    order.windows(2).map(|w| pts[w[0]].dist(&pts[w[1]])).sum()
}

/// Smallest power of two `>= x` (x >= 1).
pub fn next_pow2(x: u64) -> u64 {
    x.max(1).next_power_of_two()
}
