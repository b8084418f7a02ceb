//! Structural controllability decision with certificates and bounds.
//!
//! The system is structurally controllable iff every state is input-reachable
//! in the colored union graph and the generic rank of
//! `[A_1 .. A_N, B_1 .. B_N]` is `n`. That criterion is decided exactly; a
//! full cactus configuration and the randomized rank oracle must agree with
//! it, and any disagreement is reported as an error.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::cactus::{best_cactus_cover, conventional_cactus_cover, CactusCertificate, CactusConfiguration};
use crate::field::MERSENNE_61;
use crate::mdg::{build_mdg, max_linking, MdgError, MdgLimits};
use crate::model::SwitchedStructure;
use crate::rankcore::{controllable_dim, RankError, RankReport};
use crate::unigraph::{build_union_graph, input_reachable_set, max_s_disjoint, ColoredUnionGraph, Vertex};

pub const DEFAULT_SEED: u64 = 20_190_601;
pub const DEFAULT_TRIALS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub seed: u64,
    pub trials: usize,
    pub prime: u64,
    pub limits: MdgLimits,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            seed: DEFAULT_SEED,
            trials: DEFAULT_TRIALS,
            prime: MERSENNE_61,
            limits: MdgLimits::default(),
        }
    }
}

impl CheckOptions {
    /// One seed per oracle trial, counting up from `seed`.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.trials as u64).map(|i| self.seed.wrapping_add(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriterionA {
    pub reachable_count: usize,
    pub grank_concat: usize,
    pub unreachable: Vec<Vertex>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub lower: usize,
    pub upper: usize,
    /// Layers of the MDG whose maximum linking was used, if it was built.
    pub linking_layers: Option<usize>,
    pub linking_size: Option<usize>,
    /// Set when the MDG exceeded its limits and `upper` is the reachable
    /// count alone.
    pub upper_fallback: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub n: usize,
    pub structurally_controllable: bool,
    pub criterion_a: CriterionA,
    pub certificate_b: Option<CactusCertificate>,
    pub oracle_c: RankReport,
    pub bounds: Bounds,
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

/// Generic rank of `[B_1 .. B_N]`: a maximum matching of input edges.
pub fn grank_gamma0(g: &ColoredUnionGraph) -> usize {
    let inputs_only: Vec<_> = g.input_edges().copied().collect();
    let sub = g.restrict_to_edges(&inputs_only);
    max_s_disjoint(&sub, &(0..g.n()).collect()).len()
}

/// Upper bound `min(|reachable|, max linking of the MDG with n - grank B layers)`.
fn upper_bound(sys: &SwitchedStructure, g: &ColoredUnionGraph, reachable: usize, limits: MdgLimits) -> Bounds {
    let layers = sys.n() - grank_gamma0(g);
    let linking = build_mdg(sys, layers, limits).map(|mdg| max_linking(&mdg).size());
    match linking {
        Ok(size) => Bounds {
            lower: 0,
            upper: reachable.min(size),
            linking_layers: Some(layers),
            linking_size: Some(size),
            upper_fallback: false,
        },
        Err(MdgError::TooManyLayers { .. } | MdgError::TooManyVertices { .. }) => Bounds {
            lower: 0,
            upper: reachable,
            linking_layers: None,
            linking_size: None,
            upper_fallback: true,
        },
        Err(e) => unreachable!("build_mdg only fails on limits: {e}"),
    }
}

fn bounds_with_cover(
    sys: &SwitchedStructure,
    g: &ColoredUnionGraph,
    reachable: &BTreeSet<usize>,
    opts: &CheckOptions,
) -> (Bounds, CactusConfiguration) {
    let cover = best_cactus_cover(g);
    let mut bounds = upper_bound(sys, g, reachable.len(), opts.limits);
    bounds.lower = cover.size();
    (bounds, cover)
}

/// Lower bound from the best cactus cover, upper bound from reachability and
/// the maximum MDG linking.
pub fn dim_bounds(sys: &SwitchedStructure, opts: &CheckOptions) -> Bounds {
    let g = build_union_graph(sys);
    let reachable = input_reachable_set(&g);
    bounds_with_cover(sys, &g, &reachable, opts).0
}

/// Covered count of the best cactus configuration that uses one subsystem
/// digraph at a time.
pub fn conventional_cactus_lower(sys: &SwitchedStructure) -> usize {
    conventional_cactus_cover(&build_union_graph(sys)).size()
}

pub fn check(sys: &SwitchedStructure, opts: &CheckOptions) -> Result<Verdict, CheckError> {
    let n = sys.n();
    let g = build_union_graph(sys);
    let reachable = input_reachable_set(&g);
    let all: BTreeSet<usize> = (0..n).collect();
    let grank = max_s_disjoint(&g, &all).len();
    let criterion_a = CriterionA {
        reachable_count: reachable.len(),
        grank_concat: grank,
        unreachable: all.difference(&reachable).map(|&j| Vertex::State(j)).collect(),
    };
    let controllable = reachable.len() == n && grank == n;

    let oracle = controllable_dim(sys, &opts.seeds(), opts.prime)?;
    let (bounds, cover) = bounds_with_cover(sys, &g, &reachable, opts);

    let mut problems = Vec::new();
    if let Err(v) = cover.validate(&g, &reachable) {
        problems.push(format!("cactus cover fails validation: {v:?}"));
    }
    if controllable {
        if cover.size() != n {
            problems.push(format!("criterion (a) holds but the cover has {} of {n} states", cover.size()));
        }
        if oracle.dim != n {
            problems.push(format!("criterion (a) holds but the oracle found dim {} < {n}", oracle.dim));
        }
    } else {
        if cover.size() == n {
            problems.push("criterion (a) fails but a full cover exists".to_string());
        }
        if oracle.trials.iter().any(|t| t.dim == n) {
            problems.push("criterion (a) fails but an oracle trial reached full rank".to_string());
        }
    }
    if !(bounds.lower <= oracle.dim && oracle.dim <= bounds.upper) {
        problems.push(format!(
            "bounds ({}, {}) do not contain the oracle dim {}",
            bounds.lower, bounds.upper, oracle.dim
        ));
    }
    if !problems.is_empty() {
        return Err(CheckError::Inconsistent(format!(
            "{}; system = {}",
            problems.join("; "),
            sys.to_json()
        )));
    }

    Ok(Verdict {
        n,
        structurally_controllable: controllable,
        criterion_a,
        certificate_b: controllable.then(|| cover.certificate()),
        oracle_c: oracle,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn three_state_system() {
        let v = check(&fixtures::three_state(), &CheckOptions::default()).unwrap();
        assert!(v.structurally_controllable);
        assert_eq!(v.criterion_a.grank_concat, 3);
        assert_eq!(v.criterion_a.reachable_count, 3);
        assert_eq!(v.certificate_b.as_ref().unwrap().size, 3);
        assert_eq!(v.oracle_c.dim, 3);
        assert_eq!((v.bounds.lower, v.bounds.upper), (3, 3));
        assert_eq!(v.bounds.linking_layers, Some(2));
    }

    #[test]
    fn boost_converter() {
        let v = check(&fixtures::boost_converter(), &CheckOptions::default()).unwrap();
        assert!(v.structurally_controllable);
        assert_eq!(v.oracle_c.dim, 2);
    }

    #[test]
    fn empty_system() {
        let v = check(&fixtures::empty(), &CheckOptions::default()).unwrap();
        assert!(!v.structurally_controllable);
        assert_eq!(v.oracle_c.dim, 0);
        assert!(v.certificate_b.is_none());
        assert_eq!((v.bounds.lower, v.bounds.upper), (0, 0));
        assert_eq!(v.criterion_a.unreachable.len(), 2);
    }

    #[test]
    fn ten_state_fixture() {
        let sys = fixtures::ten_state();
        let v = check(&sys, &CheckOptions::default()).unwrap();
        assert!(!v.structurally_controllable);
        assert_eq!(v.criterion_a.grank_concat, 9);
        assert_eq!(v.criterion_a.reachable_count, 10);
        assert_eq!(v.oracle_c.dim, 8);
        assert_eq!((v.bounds.lower, v.bounds.upper), (8, 8));
        assert_eq!(v.bounds.linking_size, Some(8));
        assert_eq!(conventional_cactus_lower(&sys), 6);
    }

    #[test]
    fn conventional_lower() {
        assert_eq!(conventional_cactus_lower(&fixtures::three_state()), 2);
        let single = SwitchedStructure::new(2, vec![fixtures::boost_converter().subsystem(0).clone()]).unwrap();
        assert_eq!(conventional_cactus_lower(&single), dim_bounds(&single, &CheckOptions::default()).lower);
    }

    #[test]
    fn linking_fallback() {
        let opts = CheckOptions {
            limits: MdgLimits {
                max_layers: 1,
                max_vertices: 1000,
            },
            ..CheckOptions::default()
        };
        let b = dim_bounds(&fixtures::three_state(), &opts);
        assert!(b.upper_fallback);
        assert_eq!(b.upper, 3);
    }

    #[test]
    fn verdict_json_is_stable() {
        let opts = CheckOptions::default();
        let a = serde_json::to_string(&check(&fixtures::three_state(), &opts).unwrap()).unwrap();
        let b = serde_json::to_string(&check(&fixtures::three_state(), &opts).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"grank_concat\":3"));
    }
}
