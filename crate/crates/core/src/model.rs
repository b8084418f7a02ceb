//! Structured switched systems and their numeric realizations.
//!
//! A [`SwitchedStructure`] holds the zero/nonzero patterns of the subsystem
//! pairs `(A_i, B_i)`. Indices are 0-based in memory and 1-based in every
//! serialized form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FpMatrix, Prime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MatrixTag {
    A,
    B,
}

impl fmt::Display for MatrixTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixTag::A => write!(f, "A"),
            MatrixTag::B => write!(f, "B"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed system document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("system must have at least one subsystem")]
    NoSubsystems,
    #[error("state dimension n must be positive")]
    ZeroStates,
    #[error("subsystem {subsystem}: {matrix} is {found_rows}x{found_cols}, expected {expected_rows}x{expected_cols}")]
    DimensionMismatch {
        subsystem: usize,
        matrix: MatrixTag,
        expected_rows: usize,
        expected_cols: usize,
        found_rows: usize,
        found_cols: usize,
    },
    #[error("subsystem {subsystem}: {matrix}({row},{col}) lies outside a {rows}x{cols} matrix (indices are 1-based)")]
    OutOfRange {
        subsystem: usize,
        matrix: MatrixTag,
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("subsystem {subsystem}: duplicate nonzero {matrix}({row},{col})")]
    DuplicateEntry {
        subsystem: usize,
        matrix: MatrixTag,
        row: usize,
        col: usize,
    },
}

/// Errors raised while building a bare [`StructuredMatrix`]; positions are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("entry ({row},{col}) outside a {rows}x{cols} pattern")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("duplicate entry ({row},{col})")]
    Duplicate { row: usize, col: usize },
}

/// Zero/nonzero pattern of a matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StructuredMatrix {
    rows: usize,
    cols: usize,
    nonzeros: BTreeSet<(usize, usize)>,
}

impl StructuredMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        StructuredMatrix {
            rows,
            cols,
            nonzeros: BTreeSet::new(),
        }
    }

    /// Builds a pattern from 0-based positions.
    pub fn new(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, PatternError> {
        let mut nonzeros = BTreeSet::new();
        for (row, col) in entries {
            if row >= rows || col >= cols {
                return Err(PatternError::OutOfRange {
                    row,
                    col,
                    rows,
                    cols,
                });
            }
            if !nonzeros.insert((row, col)) {
                return Err(PatternError::Duplicate { row, col });
            }
        }
        Ok(StructuredMatrix {
            rows,
            cols,
            nonzeros,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.nonzeros.len()
    }

    pub fn is_nonzero(&self, row: usize, col: usize) -> bool {
        self.nonzeros.contains(&(row, col))
    }

    /// Nonzero positions in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nonzeros.iter().copied()
    }

    /// Marks `(row, col)` nonzero; returns false if it already was.
    pub fn insert(&mut self, row: usize, col: usize) -> Result<bool, PatternError> {
        if row >= self.rows || col >= self.cols {
            return Err(PatternError::OutOfRange {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(self.nonzeros.insert((row, col)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subsystem {
    pub a: StructuredMatrix,
    pub b: StructuredMatrix,
}

/// Structured switched system `x' = A_s x + B_s u_s` given by its patterns.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SwitchedStructure {
    n: usize,
    subsystems: Vec<Subsystem>,
}

impl SwitchedStructure {
    pub fn new(n: usize, subsystems: Vec<Subsystem>) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::ZeroStates);
        }
        if subsystems.is_empty() {
            return Err(ModelError::NoSubsystems);
        }
        for (i, s) in subsystems.iter().enumerate() {
            if s.a.rows() != n || s.a.cols() != n {
                return Err(ModelError::DimensionMismatch {
                    subsystem: i + 1,
                    matrix: MatrixTag::A,
                    expected_rows: n,
                    expected_cols: n,
                    found_rows: s.a.rows(),
                    found_cols: s.a.cols(),
                });
            }
            if s.b.rows() != n {
                return Err(ModelError::DimensionMismatch {
                    subsystem: i + 1,
                    matrix: MatrixTag::B,
                    expected_rows: n,
                    expected_cols: s.b.cols(),
                    found_rows: s.b.rows(),
                    found_cols: s.b.cols(),
                });
            }
        }
        Ok(SwitchedStructure { n, subsystems })
    }

    /// Convenience constructor from 0-based `(row, col)` lists:
    /// one `(a_entries, input_count, b_entries)` triple per subsystem.
    pub fn from_patterns(
        n: usize,
        patterns: &[(&[(usize, usize)], usize, &[(usize, usize)])],
    ) -> Result<Self, ModelError> {
        let mut subsystems = Vec::with_capacity(patterns.len());
        for (i, &(a, m, b)) in patterns.iter().enumerate() {
            let a = pattern_or_model_error(i, MatrixTag::A, n, n, a.iter().copied())?;
            let b = pattern_or_model_error(i, MatrixTag::B, n, m, b.iter().copied())?;
            subsystems.push(Subsystem { a, b });
        }
        Self::new(n, subsystems)
    }

    /// State dimension `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of subsystems `N`.
    pub fn num_subsystems(&self) -> usize {
        self.subsystems.len()
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn subsystem(&self, i: usize) -> &Subsystem {
        &self.subsystems[i]
    }

    /// Input counts `m_1..m_N`.
    pub fn input_dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.b.cols()).collect()
    }

    pub fn total_inputs(&self) -> usize {
        self.subsystems.iter().map(|s| s.b.cols()).sum()
    }

    pub fn nnz(&self) -> usize {
        self.subsystems.iter().map(|s| s.a.nnz() + s.b.nnz()).sum()
    }

    /// Every nonzero position, ordered by (subsystem, matrix, row, col).
    pub fn entries(&self) -> impl Iterator<Item = EntryKey> + '_ {
        self.subsystems.iter().enumerate().flat_map(|(i, s)| {
            let a = s.a.iter().map(move |(row, col)| EntryKey {
                subsystem: i,
                matrix: MatrixTag::A,
                row,
                col,
            });
            let b = s.b.iter().map(move |(row, col)| EntryKey {
                subsystem: i,
                matrix: MatrixTag::B,
                row,
                col,
            });
            a.chain(b)
        })
    }

    /// Copy of `self` with one more nonzero. Returns `None` if the position
    /// is out of range or already nonzero.
    pub fn with_entry(&self, key: EntryKey) -> Option<Self> {
        let mut out = self.clone();
        let sub = out.subsystems.get_mut(key.subsystem)?;
        let m = match key.matrix {
            MatrixTag::A => &mut sub.a,
            MatrixTag::B => &mut sub.b,
        };
        match m.insert(key.row, key.col) {
            Ok(true) => Some(out),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        parse_system(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SystemDoc::from(self)).expect("system serializes")
    }
}

fn pattern_or_model_error(
    subsystem: usize,
    matrix: MatrixTag,
    rows: usize,
    cols: usize,
    entries: impl Iterator<Item = (usize, usize)>,
) -> Result<StructuredMatrix, ModelError> {
    StructuredMatrix::new(rows, cols, entries).map_err(|e| match e {
        PatternError::OutOfRange {
            row,
            col,
            rows,
            cols,
        } => ModelError::OutOfRange {
            subsystem: subsystem + 1,
            matrix,
            row: row + 1,
            col: col + 1,
            rows,
            cols,
        },
        PatternError::Duplicate { row, col } => ModelError::DuplicateEntry {
            subsystem: subsystem + 1,
            matrix,
            row: row + 1,
            col: col + 1,
        },
    })
}

// ---------------------------------------------------------------------------
// JSON schema

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    n: usize,
    subsystems: Vec<SubsystemDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubsystemDoc {
    #[serde(rename = "A")]
    a: StateMatrixDoc,
    #[serde(rename = "B")]
    b: InputMatrixDoc,
}

/// `A` is either a bare list of 1-based positions (implicitly `n x n`) or an
/// object carrying explicit dimensions that must agree with `n`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum StateMatrixDoc {
    Entries(Vec<[usize; 2]>),
    Sized {
        rows: usize,
        cols: usize,
        nonzeros: Vec<[usize; 2]>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InputMatrixDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
    cols: usize,
    nonzeros: Vec<[usize; 2]>,
}

impl From<&SwitchedStructure> for SystemDoc {
    fn from(sys: &SwitchedStructure) -> Self {
        let one_based = |m: &StructuredMatrix| -> Vec<[usize; 2]> {
            m.iter().map(|(r, c)| [r + 1, c + 1]).collect()
        };
        SystemDoc {
            n: sys.n,
            subsystems: sys
                .subsystems
                .iter()
                .map(|s| SubsystemDoc {
                    a: StateMatrixDoc::Entries(one_based(&s.a)),
                    b: InputMatrixDoc {
                        rows: None,
                        cols: s.b.cols(),
                        nonzeros: one_based(&s.b),
                    },
                })
                .collect(),
        }
    }
}

fn zero_based(
    subsystem: usize,
    matrix: MatrixTag,
    rows: usize,
    cols: usize,
    entries: &[[usize; 2]],
) -> Result<Vec<(usize, usize)>, ModelError> {
    entries
        .iter()
        .map(|&[r, c]| {
            if r == 0 || c == 0 || r > rows || c > cols {
                Err(ModelError::OutOfRange {
                    subsystem: subsystem + 1,
                    matrix,
                    row: r,
                    col: c,
                    rows,
                    cols,
                })
            } else {
                Ok((r - 1, c - 1))
            }
        })
        .collect()
}

/// Parses and validates a system document (1-based indices).
pub fn parse_system(text: &str) -> Result<SwitchedStructure, ModelError> {
    let doc: SystemDoc = serde_json::from_str(text)?;
    let n = doc.n;
    if n == 0 {
        return Err(ModelError::ZeroStates);
    }
    if doc.subsystems.is_empty() {
        return Err(ModelError::NoSubsystems);
    }
    let mut subsystems = Vec::with_capacity(doc.subsystems.len());
    for (i, s) in doc.subsystems.iter().enumerate() {
        let (a_rows, a_cols, a_entries) = match &s.a {
            StateMatrixDoc::Entries(e) => (n, n, e.as_slice()),
            StateMatrixDoc::Sized {
                rows,
                cols,
                nonzeros,
            } => (*rows, *cols, nonzeros.as_slice()),
        };
        if (a_rows, a_cols) != (n, n) {
            return Err(ModelError::DimensionMismatch {
                subsystem: i + 1,
                matrix: MatrixTag::A,
                expected_rows: n,
                expected_cols: n,
                found_rows: a_rows,
                found_cols: a_cols,
            });
        }
        let b_rows = s.b.rows.unwrap_or(n);
        if b_rows != n {
            return Err(ModelError::DimensionMismatch {
                subsystem: i + 1,
                matrix: MatrixTag::B,
                expected_rows: n,
                expected_cols: s.b.cols,
                found_rows: b_rows,
                found_cols: s.b.cols,
            });
        }
        let a = zero_based(i, MatrixTag::A, n, n, a_entries)?;
        let b = zero_based(i, MatrixTag::B, n, s.b.cols, &s.b.nonzeros)?;
        let a = pattern_or_model_error(i, MatrixTag::A, n, n, a.into_iter())?;
        let b = pattern_or_model_error(i, MatrixTag::B, n, s.b.cols, b.into_iter())?;
        subsystems.push(Subsystem { a, b });
    }
    SwitchedStructure::new(n, subsystems)
}

// ---------------------------------------------------------------------------
// Realizations

/// Scalar field a realization lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldTag {
    FiniteField(Prime),
    Real,
}

/// Position of a nonzero parameter, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntryKey {
    pub subsystem: usize,
    pub matrix: MatrixTag,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Residue(u64),
    Real(f64),
}

/// Concrete values for every nonzero of a [`SwitchedStructure`].
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub field: FieldTag,
    pub seed: u64,
    values: BTreeMap<EntryKey, Scalar>,
}

impl Realization {
    pub fn values(&self) -> &BTreeMap<EntryKey, Scalar> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, key: &EntryKey) -> Option<Scalar> {
        self.values.get(key).copied()
    }

    /// Residue at `key`, or 0 for a structural zero. Panics on a real realization.
    pub fn residue(&self, key: &EntryKey) -> u64 {
        match self.values.get(key) {
            None => 0,
            Some(Scalar::Residue(v)) => *v,
            Some(Scalar::Real(_)) => panic!("residue requested from a real realization"),
        }
    }

    /// Dense `(A_i, B_i)` matrices over `GF(p)`.
    ///
    /// Panics if the realization is real-valued.
    pub fn fp_matrices(&self, sys: &SwitchedStructure) -> Vec<(FpMatrix, FpMatrix)> {
        let FieldTag::FiniteField(p) = self.field else {
            panic!("fp_matrices called on a real realization");
        };
        let n = sys.n();
        sys.subsystems()
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut a = FpMatrix::zeros(n, n, p);
                let mut b = FpMatrix::zeros(n, s.b.cols(), p);
                for (r, c) in s.a.iter() {
                    a.set(r, c, self.residue(&EntryKey { subsystem: i, matrix: MatrixTag::A, row: r, col: c }));
                }
                for (r, c) in s.b.iter() {
                    b.set(r, c, self.residue(&EntryKey { subsystem: i, matrix: MatrixTag::B, row: r, col: c }));
                }
                (a, b)
            })
            .collect()
    }

    /// Dense real `(A_i, B_i)` matrices. Panics on a finite-field realization.
    pub fn real_matrices(
        &self,
        sys: &SwitchedStructure,
    ) -> Vec<(nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>)> {
        assert_eq!(self.field, FieldTag::Real, "real_matrices on a finite-field realization");
        let n = sys.n();
        let value = |k: EntryKey| match self.values.get(&k) {
            Some(Scalar::Real(v)) => *v,
            _ => 0.0,
        };
        sys.subsystems()
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut a = nalgebra::DMatrix::zeros(n, n);
                let mut b = nalgebra::DMatrix::zeros(n, s.b.cols());
                for (r, c) in s.a.iter() {
                    a[(r, c)] = value(EntryKey { subsystem: i, matrix: MatrixTag::A, row: r, col: c });
                }
                for (r, c) in s.b.iter() {
                    b[(r, c)] = value(EntryKey { subsystem: i, matrix: MatrixTag::B, row: r, col: c });
                }
                (a, b)
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RealizationDoc::from(self)).expect("realization serializes")
    }
}

#[derive(Serialize)]
struct RealizationDoc {
    field: FieldTag,
    seed: u64,
    entries: Vec<EntryDoc>,
}

#[derive(Serialize)]
struct EntryDoc {
    subsystem: usize,
    matrix: MatrixTag,
    row: usize,
    col: usize,
    value: Scalar,
}

impl From<&Realization> for RealizationDoc {
    fn from(r: &Realization) -> Self {
        RealizationDoc {
            field: r.field,
            seed: r.seed,
            entries: r
                .values
                .iter()
                .map(|(k, &value)| EntryDoc {
                    subsystem: k.subsystem + 1,
                    matrix: k.matrix,
                    row: k.row + 1,
                    col: k.col + 1,
                    value,
                })
                .collect(),
        }
    }
}

/// Assigns an independent random value to every nonzero position.
///
/// Finite-field values are uniform in `[1, p-1]`; real values are uniform in
/// `[-1, 1]` with zero excluded. The result is a pure function of
/// `(sys, field, seed)`.
pub fn sample_realization(sys: &SwitchedStructure, field: FieldTag, seed: u64) -> Realization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = sys
        .entries()
        .map(|key| {
            let v = match field {
                FieldTag::FiniteField(p) => Scalar::Residue(rng.gen_range(1..p.get())),
                FieldTag::Real => loop {
                    let x: f64 = rng.gen_range(-1.0..=1.0);
                    if x != 0.0 {
                        break Scalar::Real(x);
                    }
                },
            };
            (key, v)
        })
        .collect();
    Realization {
        field,
        seed,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parses_three_state_system() {
        let sys = parse_system(fixtures::THREE_STATE_JSON).unwrap();
        assert_eq!(sys.n(), 3);
        assert_eq!(sys.num_subsystems(), 2);
        assert!(sys.subsystem(0).a.is_nonzero(1, 0));
        assert!(sys.subsystem(1).a.is_nonzero(2, 0));
        assert!(sys.subsystem(0).b.is_nonzero(0, 0));
        assert_eq!(sys.subsystem(1).b.nnz(), 0);
    }

    #[test]
    fn parses_boost_converter() {
        let sys = parse_system(fixtures::BOOST_JSON).unwrap();
        assert_eq!(sys.n(), 2);
        assert_eq!(sys.input_dims(), vec![1, 1]);
        assert_eq!(sys.subsystem(0).a.nnz(), 3);
        assert_eq!(sys.subsystem(1).a.nnz(), 1);
    }

    #[test]
    fn zero_input_subsystem_is_allowed() {
        let text = r#"{"n":3,"subsystems":[
            {"A":[[2,1]],"B":{"cols":1,"nonzeros":[[1,1]]}},
            {"A":[[3,1]],"B":{"cols":0,"nonzeros":[]}}]}"#;
        let sys = parse_system(text).unwrap();
        assert_eq!(sys.input_dims(), vec![1, 0]);
    }

    #[test]
    fn rejects_misshapen_state_matrix() {
        let text = r#"{"n":2,"subsystems":[
            {"A":{"rows":2,"cols":3,"nonzeros":[[1,3]]},"B":{"cols":1,"nonzeros":[[1,1]]}}]}"#;
        match parse_system(text) {
            Err(ModelError::DimensionMismatch {
                subsystem: 1,
                matrix: MatrixTag::A,
                found_cols: 3,
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_with_position() {
        let text = r#"{"n":2,"subsystems":[
            {"A":[[1,2],[1,2]],"B":{"cols":1,"nonzeros":[]}}]}"#;
        match parse_system(text) {
            Err(ModelError::DuplicateEntry {
                subsystem: 1,
                matrix: MatrixTag::A,
                row: 1,
                col: 2,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_and_zero_index() {
        let text = r#"{"n":2,"subsystems":[{"A":[[3,1]],"B":{"cols":1,"nonzeros":[]}}]}"#;
        assert!(matches!(parse_system(text), Err(ModelError::OutOfRange { row: 3, .. })));
        let text = r#"{"n":2,"subsystems":[{"A":[],"B":{"cols":1,"nonzeros":[[0,1]]}}]}"#;
        assert!(matches!(parse_system(text), Err(ModelError::OutOfRange { row: 0, .. })));
        let text = r#"{"n":2,"subsystems":[]}"#;
        assert!(matches!(parse_system(text), Err(ModelError::NoSubsystems)));
        assert!(matches!(parse_system("{"), Err(ModelError::Json(_))));
    }

    #[test]
    fn json_round_trip() {
        let sys = fixtures::boost_converter();
        assert_eq!(parse_system(&sys.to_json()).unwrap(), sys);
    }

    #[test]
    fn realization_is_deterministic_and_pattern_faithful() {
        let sys = fixtures::three_state();
        let field = FieldTag::FiniteField(Prime::mersenne61());
        let r1 = sample_realization(&sys, field, 7);
        let r2 = sample_realization(&sys, field, 7);
        assert_eq!(r1, r2);
        assert_eq!(r1.len(), 3);
        assert!(r1.values().values().all(|v| matches!(v, Scalar::Residue(x) if *x != 0)));
        let keys: Vec<_> = r1.values().keys().copied().collect();
        assert_eq!(keys, sys.entries().collect::<Vec<_>>());
    }

    #[test]
    fn empty_pattern_gives_empty_realization() {
        let sys = SwitchedStructure::from_patterns(2, &[(&[], 1, &[])]).unwrap();
        let r = sample_realization(&sys, FieldTag::Real, 1);
        assert!(r.is_empty());
    }

    #[test]
    fn distinct_seeds_disagree() {
        let sys = fixtures::three_state();
        let field = FieldTag::FiniteField(Prime::mersenne61());
        for s in 0..100u64 {
            let a = sample_realization(&sys, field, 2 * s);
            let b = sample_realization(&sys, field, 2 * s + 1);
            assert_ne!(a.values(), b.values());
        }
    }

    #[test]
    fn real_values_are_nonzero_and_bounded() {
        let sys = fixtures::boost_converter();
        let r = sample_realization(&sys, FieldTag::Real, 3);
        for v in r.values().values() {
            let Scalar::Real(x) = v else { panic!() };
            assert!(*x != 0.0 && x.abs() <= 1.0);
        }
        let mats = r.real_matrices(&sys);
        assert_eq!(mats.len(), 2);
        assert!(mats[1].0[(0, 0)] != 0.0);
    }
}
