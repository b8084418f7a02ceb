mod common;

use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use structctl::cactus::{
    best_cactus_cover, bud_walks, conventional_cactus_cover, decompose, distinct_colors_disjoint, stem_walks,
    verify_cactus_walking, InputStateWalk, DEFAULT_WALK_LIMIT,
};
use structctl::checker::{check, dim_bounds, grank_gamma0, CheckOptions};
use structctl::field::{FpMatrix, Prime};
use structctl::mdg::{build_mdg, max_linking, walk_mdg_path, MdgLimits};
use structctl::model::{EntryKey, FieldTag, MatrixTag};
use structctl::random::{random_shape, random_sparse_system, random_system, RandomShape};
use structctl::rankcore::controllable_dim;
use structctl::unigraph::{build_union_graph, grank_concat, input_reachable_set, max_s_disjoint, ColoredUnionGraph, Vertex};
use structctl::{sample_realization, SwitchedStructure};

const P: u64 = (1 << 61) - 1;

fn system(seed: u64, max_n: usize, max_subsystems: usize) -> SwitchedStructure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = random_shape(&mut rng, max_n, max_subsystems);
    random_system(shape, &mut rng)
}

/// Rank of the explicit matrix of all columns `A_{k_1} .. A_{k_j} B_l e_i`
/// with `j < n`, on one realization.
fn explicit_dim(sys: &SwitchedStructure, seed: u64) -> usize {
    let prime = Prime::new(P).unwrap();
    let r = sample_realization(sys, FieldTag::FiniteField(prime), seed);
    let mats = r.fp_matrices(sys);
    let mut level: Vec<Vec<u64>> = mats.iter().flat_map(|(_, b)| (0..b.cols()).map(|c| b.column(c))).collect();
    let mut all = level.clone();
    for _ in 1..sys.n() {
        level = level
            .iter()
            .flat_map(|v| mats.iter().map(move |(a, _)| a.mul_vec(v)))
            .collect();
        all.extend(level.iter().cloned());
    }
    if all.is_empty() {
        return 0;
    }
    FpMatrix::from_columns(sys.n(), &all, prime).rank()
}

fn random_walk(g: &ColoredUnionGraph, rng: &mut ChaCha8Rng, max_len: usize) -> Option<InputStateWalk> {
    let inputs: Vec<_> = g.input_edges().copied().collect();
    if inputs.is_empty() {
        return None;
    }
    let mut edges = vec![inputs[rng.gen_range(0..inputs.len())]];
    let len = rng.gen_range(1..=max_len);
    while edges.len() < len {
        let out: Vec<_> = g.out_edges(Vertex::State(edges.last().unwrap().head)).copied().collect();
        if out.is_empty() {
            break;
        }
        edges.push(out[rng.gen_range(0..out.len())]);
    }
    InputStateWalk::from_edges(&edges).ok()
}

fn all_walks(g: &ColoredUnionGraph, max_len: usize) -> Vec<InputStateWalk> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<_>> = g.input_edges().map(|e| vec![*e]).collect();
    for _ in 0..max_len {
        let mut next = Vec::new();
        for p in &frontier {
            out.push(InputStateWalk::from_edges(p).unwrap());
            for e in g.out_edges(Vertex::State(p.last().unwrap().head)) {
                let mut q = p.clone();
                q.push(*e);
                next.push(q);
            }
        }
        frontier = next;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn grank_matches_exhaustive_subsets(seed in any::<u64>(), nnz in 0usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=4);
        let subs = rng.gen_range(1..=2);
        let sys = random_sparse_system(&mut rng, n, subs, 1, nnz);
        let g = build_union_graph(&sys);
        prop_assert_eq!(grank_concat(&sys), common::brute_s_disjoint(g.edges()));
    }

    #[test]
    fn grank_is_generic_rank(seed in any::<u64>()) {
        let sys = system(seed, 5, 3);
        let prime = Prime::new(P).unwrap();
        let r = sample_realization(&sys, FieldTag::FiniteField(prime), seed);
        let mats = r.fp_matrices(&sys);
        let mut m = FpMatrix::zeros(sys.n(), 0, prime);
        for (a, _) in &mats {
            m = m.hcat(a);
        }
        for (_, b) in &mats {
            m = m.hcat(b);
        }
        prop_assert_eq!(grank_concat(&sys), m.rank());
    }

    #[test]
    fn reachability_matches_relaxation(seed in any::<u64>()) {
        let g = build_union_graph(&system(seed, 6, 3));
        prop_assert_eq!(input_reachable_set(&g), common::brute_reachable(&g));
    }

    #[test]
    fn oracle_matches_explicit_matrix(seed in any::<u64>()) {
        let sys = system(seed, 4, 3);
        let report = controllable_dim(&sys, &[seed], P).unwrap();
        prop_assert_eq!(report.dim, explicit_dim(&sys, seed));
        prop_assert!(report.layers_used <= sys.n());
    }

    #[test]
    fn returned_configurations_are_valid(seed in any::<u64>()) {
        let sys = system(seed, 6, 3);
        let g = build_union_graph(&sys);
        let reach = input_reachable_set(&g);
        for c in [best_cactus_cover(&g), conventional_cactus_cover(&g)] {
            prop_assert!(c.validate(&g, &reach).is_ok());
            let report = controllable_dim(&sys, &[seed, seed ^ 1], P).unwrap();
            prop_assert!(report.trials.iter().all(|t| t.dim >= c.size()));
        }
    }

    #[test]
    fn decompose_conserves_edges(seed in any::<u64>()) {
        let sys = system(seed, 6, 3);
        let g = build_union_graph(&sys);
        let reach = input_reachable_set(&g);
        let all: BTreeSet<usize> = (0..sys.n()).collect();
        let sd = max_s_disjoint(&g, &all);
        let d = decompose(&sd, &g, &reach).unwrap();
        prop_assert!(d.config.validate(&g, &reach).is_ok());
        let mut both = d.config.edges();
        both.extend(d.dropped.iter().copied());
        both.sort();
        prop_assert_eq!(both, sd.edges().to_vec());
        let heads: BTreeSet<usize> = d.config.edges().iter().map(|e| e.head).collect();
        prop_assert_eq!(heads, d.config.covered.clone());
    }

    #[test]
    fn heuristic_never_exceeds_exact(seed in any::<u64>()) {
        let g = build_union_graph(&system(seed, 6, 3));
        let exact = common::exact_max_cover(&g);
        prop_assert!(best_cactus_cover(&g).size() <= exact);
        prop_assert!(conventional_cactus_cover(&g).size() <= best_cactus_cover(&g).size());
    }

    #[test]
    fn fast_path_agrees_with_mdg_paths(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = RandomShape { n: rng.gen_range(1..=4), subsystems: 2, max_inputs: 1, a_density: 0.6, b_density: 0.6 };
        let sys = random_system(shape, &mut rng);
        let g = build_union_graph(&sys);
        let (Some(p), Some(q)) = (random_walk(&g, &mut rng, 6), random_walk(&g, &mut rng, 6)) else {
            return Ok(());
        };
        let a: HashSet<_> = walk_mdg_path(&p, 2).unwrap().into_iter().collect();
        let b: HashSet<_> = walk_mdg_path(&q, 2).unwrap().into_iter().collect();
        let disjoint = a.is_disjoint(&b);
        if distinct_colors_disjoint(&p, &q) {
            prop_assert!(disjoint);
        }
        let verdict = verify_cactus_walking(&[p, q], &g, DEFAULT_WALK_LIMIT).is_ok();
        prop_assert_eq!(verdict, disjoint);
    }

    #[test]
    fn symbolic_paths_exist_in_the_mdg(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = system(seed, 3, 2);
        let g = build_union_graph(&sys);
        if let Some(w) = random_walk(&g, &mut rng, 4) {
            let mdg = build_mdg(&sys, 3, MdgLimits::default()).unwrap();
            let ids = mdg.path_of_walk(&w).unwrap();
            prop_assert_eq!(ids.len(), w.len() + 1);
            prop_assert_eq!(mdg.vertex(ids[0]).layer(), w.len() - 1);
        }
    }

    #[test]
    fn stem_and_bud_walkings_are_linkings(seed in any::<u64>(), q in 0usize..4) {
        let sys = system(seed, 6, 3);
        let g = build_union_graph(&sys);
        let c = best_cactus_cover(&g);
        for s in &c.stems {
            let walks = stem_walks(s);
            prop_assert_eq!(verify_cactus_walking(&walks, &g, DEFAULT_WALK_LIMIT), Ok(s.vertices().len()));
        }
        for b in &c.buds {
            let walks = bud_walks(b, &g, q).unwrap();
            prop_assert_eq!(verify_cactus_walking(&walks, &g, DEFAULT_WALK_LIMIT), Ok(b.vertices().len()));
        }
    }

    #[test]
    fn linking_bounds_and_monotonicity(seed in any::<u64>()) {
        let sys = system(seed, 4, 2);
        let g = build_union_graph(&sys);
        let star = sys.n() - grank_gamma0(&g);
        let mut prev = 0;
        let mut sizes = Vec::new();
        for layers in 0..=star + 1 {
            let mdg = build_mdg(&sys, layers, MdgLimits::default()).unwrap();
            let big_n = sys.num_subsystems();
            for i in 1..=layers {
                prop_assert_eq!(mdg.state_count_in_layer(i), sys.n() * big_n.pow(i as u32));
                prop_assert_eq!(mdg.input_count_in_layer(i), sys.total_inputs() * big_n.pow(i as u32));
            }
            let l = max_linking(&mdg);
            prop_assert!(l.verify(&mdg));
            prop_assert!(l.size() >= prev);
            prev = l.size();
            sizes.push(l.size());
        }
        prop_assert_eq!(sizes[star], sizes[star + 1]);
        let report = controllable_dim(&sys, &[seed], P).unwrap();
        prop_assert!(report.dim <= sizes[star]);
    }

    #[test]
    fn bound_sandwich(seed in any::<u64>()) {
        let sys = system(seed, 5, 3);
        let opts = CheckOptions { seed, ..CheckOptions::default() };
        let v = check(&sys, &opts).unwrap();
        let conv = conventional_cactus_cover(&build_union_graph(&sys)).size();
        prop_assert!(conv <= v.bounds.lower);
        prop_assert!(v.bounds.lower <= v.oracle_c.dim);
        prop_assert!(v.oracle_c.dim <= v.bounds.upper);
        prop_assert!(v.bounds.upper <= v.criterion_a.reachable_count);
        prop_assert_eq!(v.bounds, dim_bounds(&sys, &opts));
    }

    #[test]
    fn adding_an_entry_is_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = system(seed, 5, 3);
        let i = rng.gen_range(0..sys.num_subsystems());
        let m = sys.subsystem(i).b.cols();
        let key = if m > 0 && rng.gen_bool(0.3) {
            EntryKey { subsystem: i, matrix: MatrixTag::B, row: rng.gen_range(0..sys.n()), col: rng.gen_range(0..m) }
        } else {
            EntryKey { subsystem: i, matrix: MatrixTag::A, row: rng.gen_range(0..sys.n()), col: rng.gen_range(0..sys.n()) }
        };
        let Some(bigger) = sys.with_entry(key) else { return Ok(()); };
        prop_assert!(grank_concat(&bigger) >= grank_concat(&sys));
        let r0 = input_reachable_set(&build_union_graph(&sys));
        let r1 = input_reachable_set(&build_union_graph(&bigger));
        prop_assert!(r0.is_subset(&r1));
        let d0 = controllable_dim(&sys, &[seed, seed + 1], P).unwrap().dim;
        let d1 = controllable_dim(&bigger, &[seed, seed + 1], P).unwrap().dim;
        prop_assert!(d1 >= d0);
    }
}

#[test]
fn mdg_paths_are_injective_on_walks() {
    let sys = SwitchedStructure::from_patterns(
        2,
        &[(&[(0, 0), (1, 0), (0, 1)], 1, &[(0, 0)]), (&[(1, 0), (1, 1)], 1, &[(1, 0)])],
    )
    .unwrap();
    let g = build_union_graph(&sys);
    let walks = all_walks(&g, 5);
    assert!(walks.len() > 50);
    let paths: HashSet<_> = walks.iter().map(|w| walk_mdg_path(w, 2).unwrap()).collect();
    assert_eq!(paths.len(), walks.len());
}

#[test]
fn oracle_agrees_with_criterion_on_random_systems() {
    for seed in 0..150u64 {
        let sys = system(seed, 5, 3);
        let v = check(&sys, &CheckOptions { seed, ..CheckOptions::default() }).unwrap();
        let full = v.oracle_c.trials.iter().any(|t| t.dim == sys.n());
        assert_eq!(full, v.structurally_controllable, "seed {seed}");
    }
}
