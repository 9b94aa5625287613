//! Problem data model, file I/O, random instance generation, and solution
//! validation.
//!
//! Instances are JSON objects `{"cities": [[x, y], ...], "depot": int,
//! "k": int, "forced": {"cityIndex": salesmanIndex, ...}}` where `forced`
//! is optional and pins a city to a specific salesman's tour. Solutions are
//! JSON objects `{"tours": [[int, ...], ...], "lengths": [...],
//! "makespan": ..., "meta": {...}}`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;

/// An m³TSP instance: cities in the plane, a depot (given as a city index),
/// and the number of salesmen `k`. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    /// City coordinates, arbitrary real units.
    pub cities: Vec<Point>,
    /// Index into `cities` of the shared depot.
    pub depot: usize,
    /// Number of salesmen.
    pub k: usize,
    /// Optional pinning of cities to salesmen (city index -> salesman index).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub forced: BTreeMap<usize, usize>,
}

impl Instance {
    pub fn new(cities: Vec<Point>, depot: usize, k: usize) -> Result<Self> {
        Self::with_forced(cities, depot, k, BTreeMap::new())
    }

    pub fn with_forced(
        cities: Vec<Point>,
        depot: usize,
        k: usize,
        forced: BTreeMap<usize, usize>,
    ) -> Result<Self> {
        let inst = Instance {
            cities,
            depot,
            k,
            forced,
        };
        inst.check()?;
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.cities.len()
    }

    /// Enforces every structural invariant, reporting the offending field.
    pub fn check(&self) -> Result<()> {
        if self.cities.is_empty() {
            return Err(Error::invalid("cities", "at least one city required"));
        }
        for (i, c) in self.cities.iter().enumerate() {
            if !c.x.is_finite() || !c.y.is_finite() {
                return Err(Error::invalid("cities", format!("city {i} not finite")));
            }
        }
        if self.k < 1 {
            return Err(Error::invalid("k", "k must be >= 1"));
        }
        if self.k > self.cities.len() {
            return Err(Error::invalid(
                "k",
                format!("k = {} exceeds city count {}", self.k, self.cities.len()),
            ));
        }
        if self.depot >= self.cities.len() {
            return Err(Error::invalid(
                "depot",
                format!("depot out of range: {} >= {}", self.depot, self.cities.len()),
            ));
        }
        for (&city, &salesman) in &self.forced {
            if city >= self.cities.len() {
                return Err(Error::invalid(
                    "forced",
                    format!("forced city {city} out of range"),
                ));
            }
            if salesman >= self.k {
                return Err(Error::invalid(
                    "forced",
                    format!("forced salesman {salesman} out of range (k = {})", self.k),
                ));
            }
        }
        Ok(())
    }
}

/// Parameters a solver used, recorded alongside its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SolutionMeta {
    pub solver: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// The (a, b) dissection shift the reported solution came from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<(u64, u64)>,
    /// Mode flags such as "random", "derandomized", "trivial", "fallback".
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// A feasible m³TSP solution: one depot-to-depot tour per salesman.
///
/// An unused salesman has the singleton tour `[depot]` with length 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub tours: Vec<Vec<usize>>,
    pub lengths: Vec<f64>,
    pub makespan: f64,
    pub meta: SolutionMeta,
}

impl Solution {
    /// Builds a solution from city-index tours, recomputing lengths and the
    /// makespan from the instance coordinates.
    pub fn from_tours(inst: &Instance, tours: Vec<Vec<usize>>, meta: SolutionMeta) -> Self {
        let lengths: Vec<f64> = tours
            .iter()
            .map(|t| crate::geom::tour_length(&inst.cities, t))
            .collect();
        let makespan = lengths.iter().cloned().fold(0.0, f64::max);
        Solution {
            tours,
            lengths,
            makespan,
            meta,
        }
    }

    /// The all-at-depot zero solution for degenerate instances.
    pub fn trivial(inst: &Instance, mut meta: SolutionMeta) -> Self {
        meta.flags.push("trivial".to_string());
        let mut tours = vec![vec![inst.depot]; inst.k];
        // Every city must appear somewhere; coincident cities ride in tour 0.
        let mut first = vec![inst.depot];
        for c in 0..inst.n() {
            if c != inst.depot {
                first.push(c);
            }
        }
        first.push(inst.depot);
        tours[0] = first;
        Solution::from_tours(inst, tours, meta)
    }
}

/// Loads and validates an instance from a JSON file.
pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    parse_instance(&text)
}

/// Parses and validates an instance from JSON text.
pub fn parse_instance(text: &str) -> Result<Instance> {
    #[derive(Deserialize)]
    struct Raw {
        cities: Vec<(f64, f64)>,
        depot: usize,
        k: usize,
        #[serde(default)]
        forced: BTreeMap<String, usize>,
    }
    let raw: Raw = serde_json::from_str(text)?;
    let mut forced = BTreeMap::new();
    for (key, v) in raw.forced {
        let city: usize = key
            .parse()
            .map_err(|_| Error::invalid("forced", format!("bad city index key {key:?}")))?;
        forced.insert(city, v);
    }
    Instance::with_forced(
        raw.cities.iter().map(|&(x, y)| Point::new(x, y)).collect(),
        raw.depot,
        raw.k,
        forced,
    )
}

/// Serializes an instance in canonical form (stable field order and number
/// formatting, so store(load(p)) is byte-identical).
pub fn store_instance(inst: &Instance) -> String {
    #[derive(Serialize)]
    struct Raw {
        cities: Vec<(f64, f64)>,
        depot: usize,
        k: usize,
        #[serde(skip_serializing_if = "BTreeMap::is_empty")]
        forced: BTreeMap<String, usize>,
    }
    let raw = Raw {
        cities: inst.cities.iter().map(|c| (c.x, c.y)).collect(),
        depot: inst.depot,
        k: inst.k,
        forced: inst
            .forced
            .iter()
            .map(|(&c, &s)| (c.to_string(), s))
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("instance serialization");
    s.push('\n');
    s
}

pub fn write_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, store_instance(inst))?;
    Ok(())
}

pub fn write_solution(sol: &Solution, path: impl AsRef<Path>) -> Result<()> {
    let mut s = serde_json::to_string_pretty(sol).expect("solution serialization");
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

/// Generates `n` cities uniformly in `[0, extent]^2` with depot index 0.
/// Deterministic in `seed`.
pub fn generate_instance(n: usize, k: usize, seed: u64, extent: f64) -> Result<Instance> {
    if n < 1 {
        return Err(Error::invalid("n", "n must be >= 1"));
    }
    if k < 1 {
        return Err(Error::invalid("k", "k must be >= 1"));
    }
    if k > n {
        return Err(Error::invalid("k", format!("k = {k} exceeds n = {n}")));
    }
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(Error::invalid("extent", "extent must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cities = (0..n)
        .map(|_| {
            let x = rng.gen_range(0.0..=extent);
            let y = rng.gen_range(0.0..=extent);
            Point::new(x, y)
        })
        .collect();
    Instance::new(cities, 0, k)
}

/// Checks a solution against an instance; returns human-readable violations
/// (empty means the solution satisfies every invariant).
pub fn validate_solution(inst: &Instance, sol: &Solution) -> Vec<String> {
    let mut violations = Vec::new();
    if sol.tours.len() != inst.k {
        violations.push(format!(
            "expected {} tours, found {}",
            inst.k,
            sol.tours.len()
        ));
    }
    if sol.lengths.len() != sol.tours.len() {
        violations.push(format!(
            "expected {} lengths, found {}",
            sol.tours.len(),
            sol.lengths.len()
        ));
    }
    let mut visited = vec![false; inst.n()];
    for (h, tour) in sol.tours.iter().enumerate() {
        if tour.is_empty() {
            violations.push(format!("tour {h} is empty (must contain at least depot)"));
            continue;
        }
        for &c in tour {
            if c >= inst.n() {
                violations.push(format!("tour {h} references city {c} out of range"));
            } else {
                visited[c] = true;
            }
        }
        if tour[0] != inst.depot {
            violations.push(format!("tour {h} does not start at depot"));
        }
        if tour.len() > 1 && *tour.last().unwrap() != inst.depot {
            violations.push(format!("tour {h} does not end at depot"));
        }
        if let Some(&expect) = sol.lengths.get(h) {
            let actual = crate::geom::tour_length(&inst.cities, tour);
            let scale = actual.abs().max(1.0);
            if (actual - expect).abs() > 1e-9 * scale {
                violations.push(format!(
                    "tour {h} length mismatch: recorded {expect}, recomputed {actual}"
                ));
            }
        }
    }
    for (c, &seen) in visited.iter().enumerate() {
        if !seen {
            violations.push(format!("city {c} unvisited"));
        }
    }
    let max_len = sol.lengths.iter().cloned().fold(0.0, f64::max);
    if (sol.makespan - max_len).abs() > 1e-9 * max_len.max(1.0) {
        violations.push(format!(
            "makespan {} differs from max tour length {}",
            sol.makespan, max_len
        ));
    }
    for (&city, &salesman) in &inst.forced {
        if let Some(tour) = sol.tours.get(salesman) {
            if !tour.contains(&city) {
                violations.push(format!("city {city} not in tour of salesman {salesman}"));
            }
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_instance(k: usize) -> Instance {
        Instance::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(0.0, 1.0),
                Point::new(1.0, 1.0),
                Point::new(1.0, 0.0),
            ],
            0,
            k,
        )
        .unwrap()
    }

    #[test]
    fn parse_four_city_instance() {
        let text = r#"{"cities": [[0,0],[0,1],[1,1],[1,0]], "depot": 0, "k": 2}"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.n(), 4);
        assert_eq!(inst.k, 2);
        assert!(inst.forced.is_empty());
    }

    #[test]
    fn depot_out_of_range_rejected() {
        let text = r#"{"cities": [[0,0],[0,1],[1,1],[1,0]], "depot": 7, "k": 2}"#;
        let err = parse_instance(text).unwrap_err();
        assert!(err.to_string().contains("depot out of range"), "{err}");
    }

    #[test]
    fn zero_k_rejected() {
        let text = r#"{"cities": [[0,0],[0,1]], "depot": 0, "k": 0}"#;
        let err = parse_instance(text).unwrap_err();
        assert!(err.to_string().contains("k must be >= 1"), "{err}");
    }

    #[test]
    fn forced_assignment_parsed_and_checked() {
        let text = r#"{"cities": [[0,0],[0,1],[1,1]], "depot": 0, "k": 2, "forced": {"2": 1}}"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.forced.get(&2), Some(&1));

        let bad = r#"{"cities": [[0,0],[0,1],[1,1]], "depot": 0, "k": 2, "forced": {"2": 5}}"#;
        assert!(parse_instance(bad).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_instance(5, 2, 7, 100.0).unwrap();
        let b = generate_instance(5, 2, 7, 100.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.depot, 0);
        assert_eq!(a.n(), 5);
    }

    #[test]
    fn generation_minimal_case() {
        let inst = generate_instance(1, 1, 0, 1.0).unwrap();
        assert_eq!(inst.n(), 1);
        assert_eq!(inst.depot, 0);
    }

    #[test]
    fn generation_rejects_k_above_n() {
        assert!(generate_instance(3, 5, 0, 1.0).is_err());
    }

    #[test]
    fn store_load_round_trip_is_canonical() {
        let inst = generate_instance(6, 2, 3, 50.0).unwrap();
        let stored = store_instance(&inst);
        let reparsed = parse_instance(&stored).unwrap();
        assert_eq!(store_instance(&reparsed), stored);
    }

    #[test]
    fn validate_accepts_good_solution() {
        let inst = square_instance(2);
        let sol = Solution::from_tours(
            &inst,
            vec![vec![0, 1, 2, 0], vec![0, 3, 0]],
            SolutionMeta::default(),
        );
        assert!(validate_solution(&inst, &sol).is_empty());
    }

    #[test]
    fn validate_reports_missed_city() {
        let inst = square_instance(2);
        let sol = Solution::from_tours(
            &inst,
            vec![vec![0, 1, 2, 0], vec![0]],
            SolutionMeta::default(),
        );
        let violations = validate_solution(&inst, &sol);
        assert!(violations.iter().any(|v| v == "city 3 unvisited"), "{violations:?}");
    }

    #[test]
    fn validate_reports_bad_tour_start() {
        let inst = square_instance(2);
        let sol = Solution::from_tours(
            &inst,
            vec![vec![0, 1, 2, 3, 0], vec![3, 0]],
            SolutionMeta::default(),
        );
        let violations = validate_solution(&inst, &sol);
        assert!(
            violations.iter().any(|v| v == "tour 1 does not start at depot"),
            "{violations:?}"
        );
    }

    #[test]
    fn validate_checks_forced_assignment() {
        let mut forced = BTreeMap::new();
        forced.insert(3, 1);
        let inst = Instance::with_forced(square_instance(2).cities, 0, 2, forced).unwrap();
        let sol = Solution::from_tours(
            &inst,
            vec![vec![0, 1, 2, 3, 0], vec![0]],
            SolutionMeta::default(),
        );
        let violations = validate_solution(&inst, &sol);
        assert!(
            violations.iter().any(|v| v.contains("city 3 not in tour of salesman 1")),
            "{violations:?}"
        );
    }
}
