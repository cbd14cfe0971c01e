//! Query-plan construction for each retrieval scheme, answer computation,
//! and decoding of the desired message.
//!
//! A plan is built in a per-message "logical" symbol space and then pushed
//! through private uniform index permutations, so the equations a database
//! sees carry only the permuted symbol indices. Decoding solves the linear
//! system the transcript induces over every referenced symbol.

mod cyclic;
mod download_all;
mod fully_connected;
mod m3;
mod sun_jafar;
pub mod wire;

pub use cyclic::{plan_cyclic, plan_cyclic_fixed, plan_cyclic_repetition};
pub use download_all::plan_download_all;
pub use fully_connected::{plan_fully_connected, plan_fully_connected_with_coefficients};
pub use m3::{m3_reference_system, plan_m3_example, plan_m3_example_fixed};
pub use sun_jafar::{plan_sun_jafar_332, plan_sun_jafar_332_no_dummy};

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::analysis::recognize_family;
use crate::gf::{self, FieldSpec, GfError, GfMatrix};
use crate::storage::{MessageStore, StorageSystem};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("unsupported structure: {0}")]
    UnsupportedStructure(String),
    #[error("equation sent to database {database} references message {message} it does not store")]
    NotAnswerable { database: usize, message: usize },
    #[error("message store does not match plan: {0}")]
    StoreMismatch(String),
    #[error("decodability failure: {0}")]
    Decodability(String),
    #[error("{0}")]
    Domain(String),
    #[error("malformed plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Gf(#[from] GfError),
}

/// One symbol reference inside a linear request: message index, symbol index
/// within the message (both 1-based), and a nonzero F_q coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Term {
    pub message: usize,
    pub symbol: usize,
    pub coefficient: u64,
}

/// A single linear-combination request sent to one database.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    terms: Vec<Term>,
}

impl Equation {
    pub fn new(terms: Vec<Term>) -> Result<Self, SchemeError> {
        if terms.is_empty() {
            return Err(SchemeError::InvalidPlan("equation with no terms".into()));
        }
        let mut seen = BTreeSet::new();
        for t in &terms {
            if t.coefficient == 0 {
                return Err(SchemeError::InvalidPlan(format!(
                    "zero coefficient on message {} symbol {}",
                    t.message, t.symbol
                )));
            }
            if !seen.insert((t.message, t.symbol)) {
                return Err(SchemeError::InvalidPlan(format!(
                    "equation references message {} symbol {} twice",
                    t.message, t.symbol
                )));
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }
}

/// Whether the scheme fixes its coefficients (the F_2 sum schemes) or draws
/// them from a desired-independent random ensemble (the weighted-sum scheme).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientMode {
    Fixed,
    UniformEnsemble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeId {
    DownloadAll,
    SunJafar332,
    SunJafar332NoDummy,
    Cyclic,
    FullyConnected,
    M3Example,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [
        SchemeId::DownloadAll,
        SchemeId::SunJafar332,
        SchemeId::SunJafar332NoDummy,
        SchemeId::Cyclic,
        SchemeId::FullyConnected,
        SchemeId::M3Example,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeId::DownloadAll => "download-all",
            SchemeId::SunJafar332 => "sun-jafar-332",
            SchemeId::SunJafar332NoDummy => "sun-jafar-332-no-dummy",
            SchemeId::Cyclic => "cyclic",
            SchemeId::FullyConnected => "fully-connected",
            SchemeId::M3Example => "m3-example",
        }
    }
}

impl std::fmt::Display for SchemeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown scheme '{s}'"))
    }
}

/// A complete query plan: per-database equation lists over permuted symbol
/// indices, plus the private permutations the user keeps to themselves.
///
/// The permutations and the desired index are secrets: they exist for
/// decoding and testing and are never part of what a database observes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPlan {
    system: StorageSystem,
    scheme: SchemeId,
    desired: usize,
    q: FieldSpec,
    l: usize,
    per_database: Vec<Vec<Equation>>,
    permutations: Vec<Vec<usize>>,
    coefficient_mode: CoefficientMode,
    rng_draws: u64,
}

impl QueryPlan {
    /// Validates answerability (every equation references only messages its
    /// database stores), term ranges, and that the permutations really are
    /// permutations of 1..=L.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        system: StorageSystem,
        scheme: SchemeId,
        desired: usize,
        q: FieldSpec,
        l: usize,
        per_database: Vec<Vec<Equation>>,
        permutations: Vec<Vec<usize>>,
        coefficient_mode: CoefficientMode,
        rng_draws: u64,
    ) -> Result<Self, SchemeError> {
        if desired == 0 || desired > system.k() {
            return Err(SchemeError::Domain(format!(
                "desired message {} out of range 1..={}",
                desired,
                system.k()
            )));
        }
        if l == 0 {
            return Err(SchemeError::Domain("message length must be positive".into()));
        }
        if per_database.len() != system.n() {
            return Err(SchemeError::InvalidPlan(format!(
                "plan covers {} databases, system has {}",
                per_database.len(),
                system.n()
            )));
        }
        for (db_idx, equations) in per_database.iter().enumerate() {
            let db = db_idx + 1;
            for eq in equations {
                for t in eq.terms() {
                    if !system.stores(db, t.message) {
                        return Err(SchemeError::NotAnswerable {
                            database: db,
                            message: t.message,
                        });
                    }
                    if t.symbol == 0 || t.symbol > l {
                        return Err(SchemeError::InvalidPlan(format!(
                            "symbol index {} out of range 1..={}",
                            t.symbol, l
                        )));
                    }
                    if t.coefficient >= q.modulus() {
                        return Err(SchemeError::InvalidPlan(format!(
                            "coefficient {} out of range for F_{}",
                            t.coefficient,
                            q.modulus()
                        )));
                    }
                }
            }
        }
        if permutations.len() != system.k() {
            return Err(SchemeError::InvalidPlan(
                "one private permutation per message is required".into(),
            ));
        }
        for perm in &permutations {
            let mut seen = vec![false; l];
            if perm.len() != l {
                return Err(SchemeError::InvalidPlan(
                    "permutation length differs from L".into(),
                ));
            }
            for &p in perm {
                if p == 0 || p > l || seen[p - 1] {
                    return Err(SchemeError::InvalidPlan(
                        "permutation is not a bijection on 1..=L".into(),
                    ));
                }
                seen[p - 1] = true;
            }
        }
        Ok(Self {
            system,
            scheme,
            desired,
            q,
            l,
            per_database,
            permutations,
            coefficient_mode,
            rng_draws,
        })
    }

    pub fn system(&self) -> &StorageSystem {
        &self.system
    }

    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    /// Secret: which message the user is after.
    pub fn desired(&self) -> usize {
        self.desired
    }

    pub fn q(&self) -> FieldSpec {
        self.q
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Equations for one database, 1-based index.
    pub fn equations(&self, db: usize) -> &[Equation] {
        &self.per_database[db - 1]
    }

    pub fn per_database(&self) -> &[Vec<Equation>] {
        &self.per_database
    }

    /// Secret: the private index permutation of each message.
    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.permutations
    }

    pub fn coefficient_mode(&self) -> CoefficientMode {
        self.coefficient_mode
    }

    /// How many RNG draws building this plan consumed. Identical across
    /// desired messages for every shipped scheme; the privacy checker
    /// asserts this for the random-coefficient scheme.
    pub fn rng_draws(&self) -> u64 {
        self.rng_draws
    }

    pub fn downloads(&self) -> usize {
        self.per_database.iter().map(Vec::len).sum()
    }
}

/// Queries plus the computed answers, with room for the decoding result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    plan: QueryPlan,
    answers: Vec<Vec<u64>>,
    decoded: Option<Vec<u64>>,
}

impl Transcript {
    pub fn new(plan: QueryPlan, answers: Vec<Vec<u64>>) -> Result<Self, SchemeError> {
        if answers.len() != plan.system().n()
            || answers
                .iter()
                .zip(plan.per_database())
                .any(|(a, e)| a.len() != e.len())
        {
            return Err(SchemeError::InvalidPlan(
                "answers do not align one-to-one with plan equations".into(),
            ));
        }
        Ok(Self {
            plan,
            answers,
            decoded: None,
        })
    }

    pub fn plan(&self) -> &QueryPlan {
        &self.plan
    }

    /// Answers for one database, aligned with its equation list. 1-based.
    pub fn answers(&self, db: usize) -> &[u64] {
        &self.answers[db - 1]
    }

    pub fn all_answers(&self) -> &[Vec<u64>] {
        &self.answers
    }

    pub fn downloads(&self) -> usize {
        self.answers.iter().map(Vec::len).sum()
    }

    pub fn decoded(&self) -> Option<&[u64]> {
        self.decoded.as_deref()
    }

    pub fn set_decoded(&mut self, decoded: Vec<u64>) -> Result<(), SchemeError> {
        if decoded.len() != self.plan.l() {
            return Err(SchemeError::InvalidPlan(format!(
                "decoded vector has length {}, expected L={}",
                decoded.len(),
                self.plan.l()
            )));
        }
        self.decoded = Some(decoded);
        Ok(())
    }
}

/// Evaluates every equation against the store: each answer is the F_q inner
/// product of the coefficients with the referenced stored symbols.
pub fn answer_query(plan: &QueryPlan, store: &MessageStore) -> Result<Transcript, SchemeError> {
    if store.k() != plan.system().k() {
        return Err(SchemeError::StoreMismatch(format!(
            "store has {} messages, system has {}",
            store.k(),
            plan.system().k()
        )));
    }
    if store.l() != plan.l() {
        return Err(SchemeError::StoreMismatch(format!(
            "store has L={}, plan has L={}",
            store.l(),
            plan.l()
        )));
    }
    if store.q() != plan.q() {
        return Err(SchemeError::StoreMismatch(format!(
            "store is over F_{}, plan over F_{}",
            store.q().modulus(),
            plan.q().modulus()
        )));
    }
    let q = plan.q();
    let mut answers = Vec::with_capacity(plan.system().n());
    for db in 1..=plan.system().n() {
        let mut db_answers = Vec::with_capacity(plan.equations(db).len());
        for eq in plan.equations(db) {
            let mut acc = 0u64;
            for t in eq.terms() {
                if !plan.system().stores(db, t.message) {
                    return Err(SchemeError::NotAnswerable {
                        database: db,
                        message: t.message,
                    });
                }
                let product = q.mul(t.coefficient, store.symbol(t.message, t.symbol))?;
                acc = q.add(acc, product)?;
            }
            db_answers.push(acc);
        }
        answers.push(db_answers);
    }
    Transcript::new(plan.clone(), answers)
}

/// Solves the transcript's linear system over every referenced symbol and
/// extracts the desired message. Fails loudly if any desired symbol is not
/// uniquely determined by the answers; a failure here is a scheme bug.
pub fn decode(transcript: &Transcript) -> Result<Vec<u64>, SchemeError> {
    let plan = transcript.plan();
    let q = plan.q();
    let columns = referenced_symbols(plan);
    let ncols = columns.len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for db in 1..=plan.system().n() {
        for (eq, &answer) in plan.equations(db).iter().zip(transcript.answers(db)) {
            let mut row = vec![0u64; ncols + 1];
            for t in eq.terms() {
                row[columns[&(t.message, t.symbol)]] = t.coefficient;
            }
            row[ncols] = answer;
            rows.push(row);
            rhs.push(answer);
        }
    }
    let mut aug = GfMatrix::from_rows(&rows)?;
    let pivots = aug.reduced_row_echelon(&q)?;
    if pivots.contains(&ncols) {
        return Err(SchemeError::Decodability(
            "answers are mutually inconsistent".into(),
        ));
    }
    let pivot_row_of: BTreeMap<usize, usize> = pivots
        .iter()
        .enumerate()
        .map(|(row, &col)| (col, row))
        .collect();
    let free_cols: Vec<usize> =
        (0..ncols).filter(|c| !pivot_row_of.contains_key(c)).collect();
    let mut decoded = Vec::with_capacity(plan.l());
    for symbol in 1..=plan.l() {
        let Some(&col) = columns.get(&(plan.desired(), symbol)) else {
            return Err(SchemeError::Decodability(format!(
                "desired symbol {symbol} is never referenced by the plan"
            )));
        };
        let Some(&row) = pivot_row_of.get(&col) else {
            return Err(SchemeError::Decodability(format!(
                "desired symbol {symbol} is not determined by the answers"
            )));
        };
        if free_cols.iter().any(|&f| aug.get(row, f) != 0) {
            return Err(SchemeError::Decodability(format!(
                "desired symbol {symbol} depends on undetermined symbols"
            )));
        }
        decoded.push(aug.get(row, ncols));
    }
    let _ = rhs;
    Ok(decoded)
}

/// Column index for every (message, symbol) pair referenced by the plan, in
/// ascending order.
pub(crate) fn referenced_symbols(plan: &QueryPlan) -> BTreeMap<(usize, usize), usize> {
    let mut keys = BTreeSet::new();
    for equations in plan.per_database() {
        for eq in equations {
            for t in eq.terms() {
                keys.insert((t.message, t.symbol));
            }
        }
    }
    keys.into_iter()
        .enumerate()
        .map(|(i, key)| (key, i))
        .collect()
}

/// Seeded RNG that counts how many draws it hands out, so plans can record a
/// desired-independent consumption figure.
pub(crate) struct CountingRng {
    rng: ChaCha8Rng,
    draws: u64,
}

impl CountingRng {
    pub(crate) fn seed_from_u64(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            draws: 0,
        }
    }

    pub(crate) fn range(&mut self, upper: usize) -> usize {
        self.draws += 1;
        self.rng.gen_range(0..upper)
    }

    pub(crate) fn draws(&self) -> u64 {
        self.draws
    }
}

/// One uniform private permutation per message (logical index -> emitted
/// symbol index), or the identity for the deterministic diagnostic variants.
pub(crate) fn sample_permutations(
    k: usize,
    l: usize,
    rng: Option<&mut CountingRng>,
) -> Vec<Vec<usize>> {
    match rng {
        None => vec![(1..=l).collect(); k],
        Some(rng) => (0..k)
            .map(|_| {
                let mut perm: Vec<usize> = (1..=l).collect();
                for i in (1..l).rev() {
                    let j = rng.range(i + 1);
                    perm.swap(i, j);
                }
                perm
            })
            .collect(),
    }
}

/// Parameters for building a plan by scheme name; `q` and `l` fall back to
/// each scheme's defaults.
#[derive(Debug, Clone)]
pub struct PlanRequest {
    pub scheme: SchemeId,
    pub desired: usize,
    pub seed: u64,
    pub q: Option<u64>,
    pub l: Option<usize>,
}

/// Single dispatch point used by the CLI and the privacy checker.
///
/// For fully-connected systems below K=4 this routes to the scheme that is
/// actually capacity-achieving there: plain download for K=2 (the system is
/// one database holding both messages) and the cyclic scheme for the K=3
/// triangle.
pub fn build_plan(system: &StorageSystem, req: &PlanRequest) -> Result<QueryPlan, SchemeError> {
    let require_f2 = |q: Option<u64>| -> Result<(), SchemeError> {
        match q {
            None | Some(2) => Ok(()),
            Some(other) => Err(SchemeError::Domain(format!(
                "scheme {} works over F_2, got q={}",
                req.scheme, other
            ))),
        }
    };
    match req.scheme {
        SchemeId::DownloadAll => {
            let q = FieldSpec::new(req.q.unwrap_or(2))?;
            plan_download_all(system, req.desired, req.l.unwrap_or(4), q)
        }
        SchemeId::SunJafar332 => {
            require_f2(req.q)?;
            plan_sun_jafar_332(system, req.desired, req.seed)
        }
        SchemeId::SunJafar332NoDummy => {
            require_f2(req.q)?;
            plan_sun_jafar_332_no_dummy(system, req.desired, req.seed)
        }
        SchemeId::Cyclic => {
            require_f2(req.q)?;
            plan_cyclic(system, req.desired, req.seed)
        }
        SchemeId::FullyConnected => {
            let family = recognize_family(system);
            if !family.is_fully_connected() {
                return Err(SchemeError::UnsupportedStructure(format!(
                    "system is {family}, not fully-connected"
                )));
            }
            match system.k() {
                2 => {
                    let q = FieldSpec::new(req.q.unwrap_or(2))?;
                    plan_download_all(system, req.desired, req.l.unwrap_or(1), q)
                }
                3 => plan_cyclic(system, req.desired, req.seed),
                _ => {
                    let default_q =
                        gf::smallest_prime_greater_than(2 * system.n() as u64);
                    let q = FieldSpec::new(req.q.unwrap_or(default_q))?;
                    plan_fully_connected(system, req.desired, req.seed, q)
                }
            }
        }
        SchemeId::M3Example => {
            require_f2(req.q)?;
            plan_m3_example(system, req.desired, req.seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equation_rejects_duplicates_and_zero_coefficients() {
        let dup = Equation::new(vec![
            Term { message: 1, symbol: 1, coefficient: 1 },
            Term { message: 1, symbol: 1, coefficient: 1 },
        ]);
        assert!(dup.is_err());
        let zero = Equation::new(vec![Term { message: 1, symbol: 1, coefficient: 0 }]);
        assert!(zero.is_err());
    }

    #[test]
    fn from_parts_rejects_unanswerable_equations() {
        let system = StorageSystem::cyclic(3).unwrap();
        let q = FieldSpec::new(2).unwrap();
        // Database 1 stores {1, 2}; asking it about message 3 must fail.
        let eq = Equation::new(vec![Term { message: 3, symbol: 1, coefficient: 1 }]).unwrap();
        let err = QueryPlan::from_parts(
            system,
            SchemeId::DownloadAll,
            1,
            q,
            4,
            vec![vec![eq], vec![], vec![]],
            vec![(1..=4).collect(); 3],
            CoefficientMode::Fixed,
            0,
        )
        .unwrap_err();
        match err {
            SchemeError::NotAnswerable { database, message } => {
                assert_eq!((database, message), (1, 3));
            }
            other => panic!("expected NotAnswerable, got {other:?}"),
        }
    }

    #[test]
    fn answer_query_is_linear() {
        let system = StorageSystem::fully_connected(4).unwrap();
        let q = FieldSpec::new(13).unwrap();
        let alpha: Vec<u64> = (1..=12).collect();
        let plan = plan_fully_connected_with_coefficients(&system, 1, q, &alpha).unwrap();
        let store = MessageStore::random(&system, q, 3, 9);
        let transcript = answer_query(&plan, &store).unwrap();

        // Doubling every coefficient doubles every answer.
        let doubled: Vec<u64> = alpha.iter().map(|&a| (2 * a) % 13).collect();
        let plan2 = plan_fully_connected_with_coefficients(&system, 1, q, &doubled).unwrap();
        let transcript2 = answer_query(&plan2, &store).unwrap();
        for db in 1..=system.n() {
            for (a, b) in transcript.answers(db).iter().zip(transcript2.answers(db)) {
                assert_eq!(q.mul(2, *a).unwrap(), *b);
            }
        }

        // All-zero store answers zero everywhere.
        let zero_store = MessageStore::zero(4, q, 3);
        let zeros = answer_query(&plan, &zero_store).unwrap();
        for db in 1..=system.n() {
            assert!(zeros.answers(db).iter().all(|&a| a == 0));
        }
    }

    #[test]
    fn answer_query_rejects_mismatched_stores() {
        let system = StorageSystem::cyclic(3).unwrap();
        let q = FieldSpec::new(2).unwrap();
        let plan = plan_download_all(&system, 1, 4, q).unwrap();
        let wrong_l = MessageStore::zero(3, q, 5);
        assert!(matches!(
            answer_query(&plan, &wrong_l),
            Err(SchemeError::StoreMismatch(_))
        ));
        let wrong_q = MessageStore::zero(3, FieldSpec::new(3).unwrap(), 4);
        assert!(matches!(
            answer_query(&plan, &wrong_q),
            Err(SchemeError::StoreMismatch(_))
        ));
    }

    #[test]
    fn scheme_ids_round_trip_through_strings() {
        for id in SchemeId::ALL {
            assert_eq!(id.as_str().parse::<SchemeId>().unwrap(), id);
        }
        assert!("no-such-scheme".parse::<SchemeId>().is_err());
    }

    #[test]
    fn build_plan_routes_small_fully_connected_systems() {
        let k2 = StorageSystem::fully_connected(2).unwrap();
        let plan = build_plan(
            &k2,
            &PlanRequest {
                scheme: SchemeId::FullyConnected,
                desired: 1,
                seed: 0,
                q: None,
                l: None,
            },
        )
        .unwrap();
        assert_eq!(plan.scheme(), SchemeId::DownloadAll);
        assert_eq!(plan.downloads(), 2);

        let k3 = StorageSystem::fully_connected(3).unwrap();
        let plan = build_plan(
            &k3,
            &PlanRequest {
                scheme: SchemeId::FullyConnected,
                desired: 2,
                seed: 0,
                q: None,
                l: None,
            },
        )
        .unwrap();
        assert_eq!(plan.scheme(), SchemeId::Cyclic);
    }
}
