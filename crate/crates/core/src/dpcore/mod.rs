//! Portal-restricted dynamic program over `(A, B, C)` configurations.
//!
//! Per square and per salesman a configuration holds the portal multiset
//! `A` (derivable from the pairing), the entry-exit pairing `B`, and the
//! rounded-length tick `C`. Tables keep only achievable configurations
//! (absence encodes false), Pareto-pruned per interface, with one witness
//! per configuration for tour reconstruction.

mod bruteforce;
mod demand;
mod engine;
mod replay;
mod routing;

pub use bruteforce::portal_bruteforce;
pub use demand::{canonical_pair, Demand, PortalPair, PortalRef, TourSpec};
pub use engine::DpStats;
pub use routing::SearchLimits;

use std::collections::BTreeMap;

use crate::dissection::{PtasParams, ShiftedQuadtree};
use crate::scale::TickIndex;

use engine::{root_demands, select_root_entry, Ctx};

/// The paper-facing view of a configuration: portal multisets `A`,
/// entry-exit pairings `B` and rounded-length ticks `C`, one slot per
/// salesman.
#[derive(Debug, Clone)]
pub struct Configuration {
    pub portal_multisets: Vec<Vec<PortalRef>>,
    pub pairings: Vec<Vec<PortalPair>>,
    pub ticks: Vec<TickIndex>,
}

impl Configuration {
    fn from_parts(demand: &Demand, ticks: &[TickIndex]) -> Configuration {
        let mut portal_multisets = Vec::with_capacity(demand.0.len());
        let mut pairings = Vec::with_capacity(demand.0.len());
        for spec in &demand.0 {
            match spec {
                TourSpec::Paths(pairs) => {
                    let mut multiset: Vec<PortalRef> =
                        pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
                    multiset.sort();
                    portal_multisets.push(multiset);
                    pairings.push(pairs.clone());
                }
                _ => {
                    portal_multisets.push(Vec::new());
                    pairings.push(Vec::new());
                }
            }
        }
        Configuration {
            portal_multisets,
            pairings,
            ticks: ticks.to_vec(),
        }
    }

    pub fn max_tick(&self) -> TickIndex {
        self.ticks.iter().cloned().max().unwrap_or(-1)
    }
}

/// Result of running the DP on one shifted tree.
pub struct DpOutcome {
    /// City tours (depot-to-depot), one per salesman.
    pub tours: Vec<Vec<usize>>,
    /// Portal-faithful closed polylines per salesman, grid units.
    pub polylines: Vec<Vec<(f64, f64)>>,
    /// Max true length of the portal-faithful polylines (grid units),
    /// before shortcutting.
    pub grid_makespan: f64,
    /// The selected root configuration (empty interfaces, ticks only).
    pub root_config: Configuration,
    pub stats: DpStats,
}

/// Runs the full DP on a built tree and reconstructs tours.
///
/// `forced` maps city indices to salesmen (the tour-pinning variation).
/// Returns `None` when no feasible configuration survived the search
/// budgets (callers fall back to a heuristic and flag the report).
pub fn solve_tree(
    tree: &ShiftedQuadtree,
    params: &PtasParams,
    k: usize,
    depot_city: usize,
    n_cities: usize,
    forced: &BTreeMap<usize, usize>,
) -> Option<DpOutcome> {
    let mut ctx = Ctx::new(tree, params, k, forced);
    let mut forced_mask = 0u32;
    for &salesman in forced.values() {
        forced_mask |= 1 << salesman;
    }
    let root = tree.root;
    let root_is_leaf = tree.nodes[root].is_leaf();
    let mut candidates: Vec<(Demand, engine::Entry)> = Vec::new();
    for demand in root_demands(k, forced_mask) {
        let entries = if root_is_leaf {
            ctx.solve_leaf(root, &demand)
        } else {
            ctx.solve_internal(root, &demand, forced_mask == 0)
        };
        for entry in entries {
            candidates.push((demand.clone(), entry));
        }
    }
    let (demand, entry) = select_root_entry(&candidates)?;
    let reconstruction = replay::reconstruct(tree, demand, entry, depot_city, n_cities, forced);
    let root_config = Configuration::from_parts(demand, &entry.ticks);
    Some(DpOutcome {
        tours: reconstruction.tours,
        polylines: reconstruction.polylines,
        grid_makespan: reconstruction.grid_makespan,
        root_config,
        stats: ctx.stats,
    })
}

#[cfg(test)]
mod tests;
