//! Randomized evaluation of the generic controllable-subspace dimension.
//!
//! The controllable subspace of a switched system is the limit of
//! `W_0 = span[B_1 .. B_N]`, `W_{j+1} = W_j + sum_i A_i W_j`, which stabilizes
//! after at most `n - rank W_0` steps. Each trial samples a realization over
//! `GF(p)` and runs this recursion on an incrementally reduced basis, so no
//! step holds more than `n` vectors.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::field::{rank_real, EchelonBasis, FieldError, FpMatrix, Prime};
use crate::model::{sample_realization, FieldTag, Realization, SwitchedStructure};

#[derive(Debug, Error)]
pub enum RankError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("at least one seed is required")]
    NoSeeds,
    #[error("expected {expected} weights (one per subsystem), got {found}")]
    WeightCount { expected: usize, found: usize },
}

/// Outcome of one realization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialResult {
    pub seed: u64,
    pub dim: usize,
    /// First index `j` with `W_j = W_{j+1}`.
    pub layers_used: usize,
    /// `rank W_0, rank W_1, .., rank W_{layers_used}`.
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub dim: usize,
    pub layers_used: usize,
    pub trials: Vec<TrialResult>,
    pub field: FieldTag,
}

impl RankReport {
    /// Trial that attained the reported dimension (the first one on ties).
    pub fn best_trial(&self) -> &TrialResult {
        self.trials
            .iter()
            .find(|t| t.dim == self.dim)
            .expect("report has at least one trial")
    }

    pub fn all_trials_full(&self, n: usize) -> bool {
        self.trials.iter().all(|t| t.dim == n)
    }

    pub fn all_trials_deficient(&self, n: usize) -> bool {
        self.trials.iter().all(|t| t.dim < n)
    }
}

/// Runs the subspace recursion on the given finite-field matrices.
pub fn fixpoint_dim(n: usize, mats: &[(FpMatrix, FpMatrix)], prime: Prime) -> (usize, usize, Vec<usize>) {
    let mut basis = EchelonBasis::new(n, prime);
    for (_, b) in mats {
        for c in 0..b.cols() {
            basis.insert(&b.column(c));
        }
    }
    let mut ranks = vec![basis.rank()];
    // Vectors added in the previous round; applying every A_i to them is
    // enough since A_i W_{j-1} is already contained in W_j.
    let mut frontier: Vec<usize> = (0..basis.rank()).collect();
    loop {
        let before = basis.rank();
        let mut added = Vec::new();
        for &idx in &frontier {
            let v = basis.vector(idx).to_vec();
            for (a, _) in mats {
                if let Some(new) = basis.insert(&a.mul_vec(&v)) {
                    added.push(new);
                }
            }
        }
        if basis.rank() == before {
            break;
        }
        debug_assert!(basis.rank() > before);
        ranks.push(basis.rank());
        frontier = added;
    }
    (basis.rank(), ranks.len() - 1, ranks)
}

/// One trial of [`controllable_dim`] on an explicit finite-field realization.
pub fn controllable_dim_of(sys: &SwitchedStructure, realization: &Realization) -> TrialResult {
    let FieldTag::FiniteField(prime) = realization.field else {
        panic!("controllable_dim_of needs a finite-field realization");
    };
    let mats = realization.fp_matrices(sys);
    let (dim, layers_used, ranks) = fixpoint_dim(sys.n(), &mats, prime);
    TrialResult {
        seed: realization.seed,
        dim,
        layers_used,
        ranks,
    }
}

/// Generic controllable-subspace dimension, estimated as the maximum over
/// one random `GF(p)` realization per seed.
pub fn controllable_dim(
    sys: &SwitchedStructure,
    seeds: &[u64],
    p: u64,
) -> Result<RankReport, RankError> {
    let prime = Prime::new(p)?;
    if seeds.is_empty() {
        return Err(RankError::NoSeeds);
    }
    let field = FieldTag::FiniteField(prime);
    let trials: Vec<TrialResult> = seeds
        .iter()
        .map(|&seed| controllable_dim_of(sys, &sample_realization(sys, field, seed)))
        .collect();
    let dim = trials.iter().map(|t| t.dim).max().unwrap_or(0);
    let layers_used = trials
        .iter()
        .find(|t| t.dim == dim)
        .map_or(0, |t| t.layers_used);
    Ok(RankReport {
        dim,
        layers_used,
        trials,
        field,
    })
}

fn orthonormal_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if m.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let max_norm = m.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return DMatrix::zeros(n, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let tol = 1e-9 * max_norm;
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol)
        .map(|(i, _)| i)
        .collect();
    u.select_columns(&keep)
}

/// Floating-point variant of the recursion on a real realization.
///
/// Ranks use a threshold of `1e-9` times the largest column norm. Meant for
/// demonstration; the finite-field path is authoritative.
pub fn controllable_dim_real(sys: &SwitchedStructure, seed: u64) -> TrialResult {
    let r = sample_realization(sys, FieldTag::Real, seed);
    let mats = r.real_matrices(sys);
    let n = sys.n();
    let total: usize = mats.iter().map(|(_, b)| b.ncols()).sum();
    let mut gamma0 = DMatrix::zeros(n, total);
    let mut offset = 0;
    for (_, b) in &mats {
        gamma0.columns_mut(offset, b.ncols()).copy_from(b);
        offset += b.ncols();
    }
    let mut q = orthonormal_basis(&gamma0);
    let mut ranks = vec![q.ncols()];
    loop {
        let mut blocks = vec![q.clone()];
        blocks.extend(mats.iter().map(|(a, _)| a * &q));
        let width: usize = blocks.iter().map(|b| b.ncols()).sum();
        let mut stacked = DMatrix::zeros(n, width);
        let mut offset = 0;
        for b in &blocks {
            stacked.columns_mut(offset, b.ncols()).copy_from(b);
            offset += b.ncols();
        }
        let next = orthonormal_basis(&stacked);
        if next.ncols() <= q.ncols() {
            break;
        }
        ranks.push(next.ncols());
        q = next;
    }
    TrialResult {
        seed,
        dim: q.ncols(),
        layers_used: ranks.len() - 1,
        ranks,
    }
}

/// Rank of `[sum_i w_i A_i, sum_i w_i B_i]` on one sampled realization.
///
/// Input matrices with fewer columns are padded with zero columns to the
/// widest `B_i` before summing.
pub fn lti_reduction_rank(
    sys: &SwitchedStructure,
    weights: &[u64],
    seed: u64,
    prime: Prime,
) -> Result<usize, RankError> {
    if weights.len() != sys.num_subsystems() {
        return Err(RankError::WeightCount {
            expected: sys.num_subsystems(),
            found: weights.len(),
        });
    }
    let r = sample_realization(sys, FieldTag::FiniteField(prime), seed);
    Ok(lti_reduction_rank_of(sys, weights, &r))
}

/// [`lti_reduction_rank`] on an explicit realization.
pub fn lti_reduction_rank_of(sys: &SwitchedStructure, weights: &[u64], r: &Realization) -> usize {
    let FieldTag::FiniteField(prime) = r.field else {
        panic!("lti_reduction_rank_of needs a finite-field realization");
    };
    let n = sys.n();
    let width = sys.input_dims().into_iter().max().unwrap_or(0);
    let mut a_sum = FpMatrix::zeros(n, n, prime);
    let mut b_sum = FpMatrix::zeros(n, width, prime);
    for ((a, b), &w) in r.fp_matrices(sys).iter().zip(weights) {
        a_sum = a_sum.add(&a.scale(w));
        let scaled = b.scale(w);
        for row in 0..n {
            for col in 0..b.cols() {
                let cur = b_sum.get(row, col);
                b_sum.set(row, col, prime.add(cur, scaled.get(row, col)));
            }
        }
    }
    a_sum.hcat(&b_sum).rank()
}

/// Numerical rank of `[sum_i w_i A_i, sum_i w_i B_i]` for a real realization.
pub fn lti_reduction_rank_real(sys: &SwitchedStructure, weights: &[f64], seed: u64) -> usize {
    let r = sample_realization(sys, FieldTag::Real, seed);
    let n = sys.n();
    let width = sys.input_dims().into_iter().max().unwrap_or(0);
    let mut m = DMatrix::zeros(n, n + width);
    for ((a, b), &w) in r.real_matrices(sys).iter().zip(weights) {
        let mut left = m.columns_mut(0, n);
        left += a * w;
        let mut right = m.columns_mut(n, b.ncols());
        right += b * w;
    }
    rank_real(&m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::MERSENNE_61;
    use crate::fixtures;

    #[test]
    fn three_state_system_is_full() {
        let report = controllable_dim(&fixtures::three_state(), &[1, 2, 3], MERSENNE_61).unwrap();
        assert_eq!(report.dim, 3);
        assert!(report.all_trials_full(3));
        // W_0 = span B_1 (rank 1), W_1 adds A_1 B_1 and A_2 B_1.
        assert_eq!(report.best_trial().ranks, vec![1, 3]);
        assert_eq!(report.layers_used, 1);
    }

    #[test]
    fn zero_inputs_give_zero() {
        let sys = SwitchedStructure::from_patterns(3, &[(&[(1, 0)], 1, &[]), (&[], 0, &[])]).unwrap();
        let report = controllable_dim(&sys, &[5], MERSENNE_61).unwrap();
        assert_eq!(report.dim, 0);
        assert_eq!(report.layers_used, 0);
    }

    #[test]
    fn layer_bound_holds() {
        // Chain u -> x1 -> x2 -> x3 -> x4 needs three extra layers.
        let sys = SwitchedStructure::from_patterns(4, &[(&[(1, 0), (2, 1), (3, 2)], 1, &[(0, 0)])]).unwrap();
        let report = controllable_dim(&sys, &[9], MERSENNE_61).unwrap();
        assert_eq!(report.dim, 4);
        assert_eq!(report.layers_used, 3);
        assert!(report.layers_used <= 4 - 1 + 1);
    }

    #[test]
    fn errors() {
        let sys = fixtures::three_state();
        assert!(matches!(controllable_dim(&sys, &[], MERSENNE_61), Err(RankError::NoSeeds)));
        assert!(matches!(
            controllable_dim(&sys, &[1], MERSENNE_61 + 2),
            Err(RankError::Field(FieldError::NotPrime(_)))
        ));
        assert!(matches!(
            lti_reduction_rank(&sys, &[1], 0, Prime::mersenne61()),
            Err(RankError::WeightCount { .. })
        ));
    }

    #[test]
    fn real_mode_agrees_on_three_state_system() {
        let t = controllable_dim_real(&fixtures::three_state(), 11);
        assert_eq!(t.dim, 3);
        assert_eq!(lti_reduction_rank_real(&fixtures::three_state(), &[0.7, -0.3], 11), 2);
    }

    #[test]
    fn lti_reduction_cases() {
        let p = Prime::mersenne61();
        let sys = fixtures::three_state();
        assert!(lti_reduction_rank(&sys, &[3, 5], 1, p).unwrap() <= 2);
        assert_eq!(lti_reduction_rank(&sys, &[0, 0], 1, p).unwrap(), 0);
        // N = 1 and weight 1 is the plain [A, B] rank.
        let single = fixtures::boost_converter();
        let lti = SwitchedStructure::new(2, vec![single.subsystem(0).clone()]).unwrap();
        let r = sample_realization(&lti, FieldTag::FiniteField(p), 4);
        let (a, b) = r.fp_matrices(&lti).remove(0);
        assert_eq!(lti_reduction_rank(&lti, &[1], 4, p).unwrap(), a.hcat(&b).rank());
    }
}
