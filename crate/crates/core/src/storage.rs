//! (K,R,M,N) storage systems and their database-contents map, plus the two
//! graph families used throughout, spec-file I/O, and seeded message stores.
//!
//! Message and database indices are 1-based everywhere, matching the usual
//! W_1..W_K / D_1..D_N labelling of the tables this code reproduces.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::FieldSpec;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("message index {index} out of range 1..={k}")]
    MessageOutOfRange { index: usize, k: usize },
    #[error("database index {index} out of range 1..={n}")]
    DatabaseOutOfRange { index: usize, n: usize },
    #[error("cyclic systems need k >= 3, got {0}")]
    CyclicTooSmall(usize),
    #[error("fully-connected systems need k >= 2, got {0}")]
    FullyConnectedTooSmall(usize),
}

/// On-disk spec file layout. Database order in the array defines the
/// database indices 1..N.
#[derive(Debug, Serialize, Deserialize)]
struct SpecFile {
    k: usize,
    r: usize,
    m: usize,
    n: usize,
    databases: Vec<Vec<usize>>,
}

/// A feasible (K,R,M,N) storage system: K messages, each replicated in R
/// databases, each of the N databases storing M distinct messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorageSystem {
    k: usize,
    r: usize,
    m: usize,
    n: usize,
    /// contents[d - 1] is Z_d, sorted ascending.
    contents: Vec<Vec<usize>>,
}

impl StorageSystem {
    /// Validates the three system invariants: K*R = M*N, every database
    /// stores exactly M distinct in-range messages, and every message
    /// appears in exactly R databases.
    pub fn new(
        k: usize,
        r: usize,
        m: usize,
        n: usize,
        databases: Vec<Vec<usize>>,
    ) -> Result<Self, StorageError> {
        if k == 0 || r == 0 || m == 0 || n == 0 {
            return Err(StorageError::Validation(
                "k, r, m, n must all be positive".into(),
            ));
        }
        if k * r != m * n {
            return Err(StorageError::Validation(format!(
                "infeasible parameters: K*R = {}*{} = {} but M*N = {}*{} = {}",
                k,
                r,
                k * r,
                m,
                n,
                m * n
            )));
        }
        if databases.len() != n {
            return Err(StorageError::Validation(format!(
                "expected {} databases, got {}",
                n,
                databases.len()
            )));
        }
        let mut contents = Vec::with_capacity(n);
        for (i, db) in databases.into_iter().enumerate() {
            let unique: BTreeSet<usize> = db.iter().copied().collect();
            if unique.len() != db.len() {
                return Err(StorageError::Validation(format!(
                    "database {} lists a repeated message",
                    i + 1
                )));
            }
            if db.len() != m {
                return Err(StorageError::Validation(format!(
                    "database {} stores {} messages, expected M={}",
                    i + 1,
                    db.len(),
                    m
                )));
            }
            for &msg in &unique {
                if msg == 0 || msg > k {
                    return Err(StorageError::Validation(format!(
                        "database {} references message {} outside 1..={}",
                        i + 1,
                        msg,
                        k
                    )));
                }
            }
            contents.push(unique.into_iter().collect());
        }
        let mut replica_counts = vec![0usize; k];
        for db in &contents {
            for &msg in db {
                replica_counts[msg - 1] += 1;
            }
        }
        for (msg, &count) in replica_counts.iter().enumerate() {
            if count != r {
                return Err(StorageError::Validation(format!(
                    "message {} appears in {} databases, expected R={}",
                    msg + 1,
                    count,
                    r
                )));
            }
        }
        Ok(Self { k, r, m, n, contents })
    }

    /// The (K,2,2,K) system with Z_i = {W_i, W_{i+1}} cyclically.
    pub fn cyclic(k: usize) -> Result<Self, StorageError> {
        if k < 3 {
            return Err(StorageError::CyclicTooSmall(k));
        }
        let databases = (1..=k).map(|i| vec![i, i % k + 1]).collect();
        Self::new(k, 2, 2, k, databases)
    }

    /// The (K, K-1, 2, C(K,2)) system whose databases are all 2-element
    /// subsets of 1..=K in lexicographic order.
    pub fn fully_connected(k: usize) -> Result<Self, StorageError> {
        if k < 2 {
            return Err(StorageError::FullyConnectedTooSmall(k));
        }
        let mut databases = Vec::new();
        for a in 1..=k {
            for b in a + 1..=k {
                databases.push(vec![a, b]);
            }
        }
        let n = k * (k - 1) / 2;
        Self::new(k, k - 1, 2, n, databases)
    }

    pub fn from_json_str(text: &str) -> Result<Self, StorageError> {
        let file: SpecFile =
            serde_json::from_str(text).map_err(|e| StorageError::Parse(e.to_string()))?;
        Self::new(file.k, file.r, file.m, file.n, file.databases)
    }

    pub fn load_spec(path: impl AsRef<Path>) -> Result<Self, StorageError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        let file = SpecFile {
            k: self.k,
            r: self.r,
            m: self.m,
            n: self.n,
            databases: self.contents.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("spec files always serialize");
        text.push('\n');
        text
    }

    pub fn save_spec(&self, path: impl AsRef<Path>) -> Result<(), StorageError> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Contents Z_d of a database, sorted ascending. 1-based index.
    pub fn database(&self, db: usize) -> Result<&[usize], StorageError> {
        if db == 0 || db > self.n {
            return Err(StorageError::DatabaseOutOfRange {
                index: db,
                n: self.n,
            });
        }
        Ok(&self.contents[db - 1])
    }

    pub fn contents(&self) -> &[Vec<usize>] {
        &self.contents
    }

    pub fn stores(&self, db: usize, message: usize) -> bool {
        self.contents
            .get(db - 1)
            .map(|z| z.binary_search(&message).is_ok())
            .unwrap_or(false)
    }

    /// The set R_m of databases containing a message, sorted ascending.
    pub fn databases_containing(&self, message: usize) -> Result<Vec<usize>, StorageError> {
        if message == 0 || message > self.k {
            return Err(StorageError::MessageOutOfRange {
                index: message,
                k: self.k,
            });
        }
        Ok((1..=self.n)
            .filter(|&db| self.stores(db, message))
            .collect())
    }
}

/// K messages of L symbols each over F_q; the ground truth a simulation
/// answers queries against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageStore {
    q: FieldSpec,
    l: usize,
    symbols: Vec<Vec<u64>>,
}

impl MessageStore {
    /// Uniform i.i.d. symbols, deterministic given the seed.
    pub fn random(system: &StorageSystem, q: FieldSpec, l: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let symbols = (0..system.k())
            .map(|_| (0..l).map(|_| rng.gen_range(0..q.modulus())).collect())
            .collect();
        Self { q, l, symbols }
    }

    pub fn zero(k: usize, q: FieldSpec, l: usize) -> Self {
        Self {
            q,
            l,
            symbols: vec![vec![0; l]; k],
        }
    }

    pub fn from_rows(q: FieldSpec, rows: Vec<Vec<u64>>) -> Result<Self, StorageError> {
        let l = rows.first().map(Vec::len).unwrap_or(0);
        if l == 0 || rows.iter().any(|r| r.len() != l) {
            return Err(StorageError::Validation(
                "message store rows must be nonempty and equal-length".into(),
            ));
        }
        for row in &rows {
            for &s in row {
                if s >= q.modulus() {
                    return Err(StorageError::Validation(format!(
                        "symbol {} out of range for F_{}",
                        s,
                        q.modulus()
                    )));
                }
            }
        }
        Ok(Self { q, l, symbols: rows })
    }

    pub fn q(&self) -> FieldSpec {
        self.q
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn k(&self) -> usize {
        self.symbols.len()
    }

    /// Symbol `index` (1-based) of message `message` (1-based).
    pub fn symbol(&self, message: usize, index: usize) -> u64 {
        self.symbols[message - 1][index - 1]
    }

    pub fn message(&self, message: usize) -> &[u64] {
        &self.symbols[message - 1]
    }
}
