//! Exact arithmetic in prime fields F_q and the elimination-based linear
//! algebra (rank, solve, row-space membership) used by scheme decoding and
//! the decodability checker.
//!
//! Everything here is integer arithmetic modulo a prime; there is no
//! floating point anywhere, so results are bit-exact and reproducible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("modulus {0} is not a prime >= 2")]
    NotPrime(u64),
    #[error("element {element} is out of range for F_{modulus}")]
    OutOfRange { element: u64, modulus: u64 },
    #[error("zero has no multiplicative inverse")]
    NoInverse,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),
}

/// A prime field F_q. The modulus is validated by trial division at
/// construction, so a `FieldSpec` value is always a usable field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct FieldSpec {
    q: u64,
}

impl TryFrom<u64> for FieldSpec {
    type Error = GfError;
    fn try_from(q: u64) -> Result<Self, GfError> {
        FieldSpec::new(q)
    }
}

impl From<FieldSpec> for u64 {
    fn from(spec: FieldSpec) -> u64 {
        spec.q
    }
}

impl FieldSpec {
    pub fn new(q: u64) -> Result<Self, GfError> {
        if is_prime(q) {
            Ok(Self { q })
        } else {
            Err(GfError::NotPrime(q))
        }
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    fn check(&self, a: u64) -> Result<(), GfError> {
        if a < self.q {
            Ok(())
        } else {
            Err(GfError::OutOfRange {
                element: a,
                modulus: self.q,
            })
        }
    }

    pub fn add(&self, a: u64, b: u64) -> Result<u64, GfError> {
        self.check(a)?;
        self.check(b)?;
        Ok((a + b) % self.q)
    }

    pub fn sub(&self, a: u64, b: u64) -> Result<u64, GfError> {
        self.check(a)?;
        self.check(b)?;
        Ok((a + self.q - b) % self.q)
    }

    pub fn neg(&self, a: u64) -> Result<u64, GfError> {
        self.check(a)?;
        Ok((self.q - a) % self.q)
    }

    pub fn mul(&self, a: u64, b: u64) -> Result<u64, GfError> {
        self.check(a)?;
        self.check(b)?;
        Ok((a as u128 * b as u128 % self.q as u128) as u64)
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inv(&self, a: u64) -> Result<u64, GfError> {
        self.check(a)?;
        if a == 0 {
            return Err(GfError::NoInverse);
        }
        let (mut r0, mut r1) = (self.q as i128, a as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        debug_assert_eq!(r0, 1, "modulus is prime so gcd(a, q) = 1");
        Ok(t0.rem_euclid(self.q as i128) as u64)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Smallest prime strictly greater than `n`. Used to pick the default field
/// for the weighted-sum scheme, which needs q > 2*C(K,2).
pub fn smallest_prime_greater_than(n: u64) -> u64 {
    let mut candidate = n + 1;
    while !is_prime(candidate) {
        candidate += 1;
    }
    candidate
}

/// Outcome of solving a linear system over F_q. Non-unique outcomes keep the
/// reason, since decodability diagnostics need to tell an inconsistent
/// transcript apart from an underdetermined one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Unique(Vec<u64>),
    Underdetermined { rank: usize },
    Inconsistent,
}

/// A dense row-major matrix with entries in F_q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GfMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
}

impl GfMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<u64>) -> Result<Self, GfError> {
        if entries.len() != rows * cols {
            return Err(GfError::MalformedMatrix(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self, GfError> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(GfError::MalformedMatrix(
                "rows have differing lengths".into(),
            ));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            entries: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.entries[r * self.cols + c] = v;
    }

    fn check_entries(&self, spec: &FieldSpec) -> Result<(), GfError> {
        for &e in &self.entries {
            spec.check(e)?;
        }
        Ok(())
    }

    /// Rank over F_q via Gaussian elimination with first-nonzero pivoting.
    pub fn rank(&self, spec: &FieldSpec) -> Result<usize, GfError> {
        self.check_entries(spec)?;
        let mut work = self.clone();
        Ok(eliminate(&mut work, spec))
    }

    /// Solves `self * x = b` when a unique solution exists; otherwise reports
    /// whether the system is underdetermined or inconsistent.
    pub fn solve(&self, spec: &FieldSpec, b: &[u64]) -> Result<SolveOutcome, GfError> {
        self.check_entries(spec)?;
        if b.len() != self.rows {
            return Err(GfError::DimensionMismatch(format!(
                "matrix has {} rows but right-hand side has {} entries",
                self.rows,
                b.len()
            )));
        }
        for &v in b {
            spec.check(v)?;
        }
        let mut aug = GfMatrix::zero(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c));
            }
            aug.set(r, self.cols, b[r]);
        }
        let pivots = reduce_to_rref(&mut aug, spec);
        // A pivot in the augmented column means some row reads 0 = nonzero.
        if pivots.contains(&self.cols) {
            return Ok(SolveOutcome::Inconsistent);
        }
        let rank = pivots.len();
        if rank < self.cols {
            return Ok(SolveOutcome::Underdetermined { rank });
        }
        let mut x = vec![0u64; self.cols];
        for (row, &col) in pivots.iter().enumerate() {
            x[col] = aug.get(row, self.cols);
        }
        Ok(SolveOutcome::Unique(x))
    }

    /// Reduces `self` to reduced row echelon form in place and returns the
    /// pivot column of each nonzero row, in row order.
    pub fn reduced_row_echelon(&mut self, spec: &FieldSpec) -> Result<Vec<usize>, GfError> {
        self.check_entries(spec)?;
        Ok(reduce_to_rref(self, spec))
    }

    /// True iff `v` is an F_q-linear combination of the rows of `self`,
    /// i.e. appending `v` leaves the rank unchanged.
    pub fn row_space_contains(&self, spec: &FieldSpec, v: &[u64]) -> Result<bool, GfError> {
        if v.len() != self.cols {
            return Err(GfError::DimensionMismatch(format!(
                "matrix has {} columns but vector has {} entries",
                self.cols,
                v.len()
            )));
        }
        for &e in v {
            spec.check(e)?;
        }
        let base_rank = self.rank(spec)?;
        let mut extended = self.entries.clone();
        extended.extend_from_slice(v);
        let mut work = GfMatrix::new(self.rows + 1, self.cols, extended)?;
        Ok(eliminate(&mut work, spec) == base_rank)
    }
}

/// Forward elimination in place; returns the rank.
fn eliminate(m: &mut GfMatrix, spec: &FieldSpec) -> usize {
    let mut pivot_row = 0;
    for col in 0..m.cols {
        if pivot_row == m.rows {
            break;
        }
        let Some(src) = (pivot_row..m.rows).find(|&r| m.get(r, col) != 0) else {
            continue;
        };
        swap_rows(m, pivot_row, src);
        normalize_row(m, pivot_row, col, spec);
        for r in pivot_row + 1..m.rows {
            eliminate_entry(m, r, pivot_row, col, spec);
        }
        pivot_row += 1;
    }
    pivot_row
}

/// Full reduced row echelon form in place; returns pivot column indices in
/// row order.
fn reduce_to_rref(m: &mut GfMatrix, spec: &FieldSpec) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut pivot_row = 0;
    for col in 0..m.cols {
        if pivot_row == m.rows {
            break;
        }
        let Some(src) = (pivot_row..m.rows).find(|&r| m.get(r, col) != 0) else {
            continue;
        };
        swap_rows(m, pivot_row, src);
        normalize_row(m, pivot_row, col, spec);
        for r in 0..m.rows {
            if r != pivot_row {
                eliminate_entry(m, r, pivot_row, col, spec);
            }
        }
        pivots.push(col);
        pivot_row += 1;
    }
    pivots
}

fn swap_rows(m: &mut GfMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for c in 0..m.cols {
        let (va, vb) = (m.get(a, c), m.get(b, c));
        m.set(a, c, vb);
        m.set(b, c, va);
    }
}

fn normalize_row(m: &mut GfMatrix, row: usize, col: usize, spec: &FieldSpec) {
    let inv = spec
        .inv(m.get(row, col))
        .expect("pivot entry is nonzero by selection");
    if inv == 1 {
        return;
    }
    for c in col..m.cols {
        let v = spec.mul(m.get(row, c), inv).expect("entries in range");
        m.set(row, c, v);
    }
}

fn eliminate_entry(m: &mut GfMatrix, target: usize, pivot_row: usize, col: usize, spec: &FieldSpec) {
    let factor = m.get(target, col);
    if factor == 0 {
        return;
    }
    for c in col..m.cols {
        let scaled = spec.mul(factor, m.get(pivot_row, c)).expect("in range");
        let v = spec.sub(m.get(target, c), scaled).expect("in range");
        m.set(target, c, v);
    }
}
