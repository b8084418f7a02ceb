//! Random structured systems for property tests and benchmarks.

use rand::Rng;

use crate::model::{StructuredMatrix, Subsystem, SwitchedStructure};

/// Shape and density of a random system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomShape {
    pub n: usize,
    pub subsystems: usize,
    /// Upper bound on inputs per subsystem; each `m_i` is drawn from `0..=max_inputs`.
    pub max_inputs: usize,
    /// Probability of each entry of `A_i` being nonzero.
    pub a_density: f64,
    /// Probability of each entry of `B_i` being nonzero.
    pub b_density: f64,
}

pub fn random_system<R: Rng>(shape: RandomShape, rng: &mut R) -> SwitchedStructure {
    let n = shape.n;
    let subsystems = (0..shape.subsystems)
        .map(|_| {
            let m = rng.gen_range(0..=shape.max_inputs);
            let a = (0..n)
                .flat_map(|r| (0..n).map(move |c| (r, c)))
                .filter(|_| rng.gen_bool(shape.a_density))
                .collect::<Vec<_>>();
            let b = (0..n)
                .flat_map(|r| (0..m).map(move |c| (r, c)))
                .filter(|_| rng.gen_bool(shape.b_density))
                .collect::<Vec<_>>();
            Subsystem {
                a: StructuredMatrix::new(n, n, a).expect("in range"),
                b: StructuredMatrix::new(n, m, b).expect("in range"),
            }
        })
        .collect();
    SwitchedStructure::new(n, subsystems).expect("consistent dimensions")
}

/// Random shape with `1..=max_n` states, `1..=max_subsystems` subsystems, up
/// to two inputs per subsystem and densities spread over sparse and dense.
pub fn random_shape<R: Rng>(rng: &mut R, max_n: usize, max_subsystems: usize) -> RandomShape {
    RandomShape {
        n: rng.gen_range(1..=max_n),
        subsystems: rng.gen_range(1..=max_subsystems),
        max_inputs: 2,
        a_density: rng.gen_range(0.05..0.5),
        b_density: rng.gen_range(0.1..0.6),
    }
}

/// System with exactly `nnz` distinct nonzeros spread uniformly over all A
/// and B positions (fewer if there are not enough positions).
pub fn random_sparse_system<R: Rng>(
    rng: &mut R,
    n: usize,
    subsystems: usize,
    inputs: usize,
    nnz: usize,
) -> SwitchedStructure {
    use rand::seq::index::sample;
    let per = n * n + n * inputs;
    let total = per * subsystems;
    let picks = sample(rng, total, nnz.min(total));
    let mut a = vec![Vec::new(); subsystems];
    let mut b = vec![Vec::new(); subsystems];
    for p in picks.iter() {
        let (i, r) = (p / per, p % per);
        if r < n * n {
            a[i].push((r / n, r % n));
        } else {
            let r = r - n * n;
            b[i].push((r / inputs, r % inputs));
        }
    }
    let subs = (0..subsystems)
        .map(|i| Subsystem {
            a: StructuredMatrix::new(n, n, a[i].clone()).expect("in range"),
            b: StructuredMatrix::new(n, inputs, b[i].clone()).expect("in range"),
        })
        .collect();
    SwitchedStructure::new(n, subs).expect("consistent dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_are_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let shape = random_shape(&mut rng, 5, 3);
            let sys = random_system(shape, &mut rng);
            assert_eq!(sys.n(), shape.n);
            assert_eq!(sys.num_subsystems(), shape.subsystems);
            assert!(sys.input_dims().iter().all(|&m| m <= 2));
        }
    }

    #[test]
    fn sparse_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sys = random_sparse_system(&mut rng, 4, 2, 1, 6);
        assert_eq!(sys.nnz(), 6);
        let sys = random_sparse_system(&mut rng, 1, 1, 1, 10);
        assert_eq!(sys.nnz(), 2);
    }

    #[test]
    fn deterministic() {
        let shape = RandomShape {
            n: 4,
            subsystems: 2,
            max_inputs: 1,
            a_density: 0.3,
            b_density: 0.3,
        };
        let a = random_system(shape, &mut ChaCha8Rng::seed_from_u64(9));
        let b = random_system(shape, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }
}
