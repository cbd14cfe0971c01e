//! Independent verification of the three retrieval contracts: privacy
//! (query-structure indistinguishability across desired messages),
//! reliability (decodability of the desired message from the answers), and
//! rate (exact rational download accounting against the bound), plus a
//! brute-force recovery oracle for small instances.

use std::collections::BTreeMap;

use num_rational::Ratio;
use thiserror::Error;

use crate::analysis::BoundReport;
use crate::gf::{FieldSpec, GfError, GfMatrix};
use crate::schemes::{
    build_plan, CoefficientMode, PlanRequest, QueryPlan, SchemeError, SchemeId, Transcript,
};
use crate::storage::StorageSystem;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unsupported structure: {0}")]
    UnsupportedStructure(String),
    #[error("oracle scale exceeded: {0}")]
    OracleScale(String),
    #[error("database index {0} out of range")]
    DatabaseOutOfRange(usize),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Gf(#[from] GfError),
}

/// What one database can see of a plan, with the private symbol indices
/// replaced by first-appearance labels per (database, message). Two plans
/// with equal canonical views are indistinguishable to that database up to
/// the uniform index permutations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalQueryView {
    pub database: usize,
    /// Per equation: (message, canonical label) pairs sorted by message.
    pub equations: Vec<Vec<(usize, usize)>>,
    pub coefficient_profile: Vec<CoeffProfile>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoeffProfile {
    /// Fixed-coefficient schemes expose the literal coefficients, aligned
    /// with the equation's message-sorted terms.
    Literal(Vec<u64>),
    /// Coefficients drawn from a desired-independent seeded ensemble carry
    /// no per-equation structure worth comparing literally.
    UniformEnsemble,
}

/// Deterministic canonical view of one database's query list. Reads only
/// the equations, never the plan's secrets.
pub fn canonicalize(plan: &QueryPlan, database: usize) -> CanonicalQueryView {
    let mut labels: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut next_label: BTreeMap<usize, usize> = BTreeMap::new();
    let mut equations = Vec::new();
    let mut coefficient_profile = Vec::new();
    for eq in plan.equations(database) {
        let mut terms: Vec<_> = eq.terms().to_vec();
        terms.sort_by_key(|t| t.message);
        let mut labeled = Vec::with_capacity(terms.len());
        for t in &terms {
            let label = *labels.entry((t.message, t.symbol)).or_insert_with(|| {
                let counter = next_label.entry(t.message).or_insert(0);
                *counter += 1;
                *counter
            });
            labeled.push((t.message, label));
        }
        equations.push(labeled);
        coefficient_profile.push(match plan.coefficient_mode() {
            CoefficientMode::Fixed => {
                CoeffProfile::Literal(terms.iter().map(|t| t.coefficient).collect())
            }
            CoefficientMode::UniformEnsemble => CoeffProfile::UniformEnsemble,
        });
    }
    CanonicalQueryView {
        database,
        equations,
        coefficient_profile,
    }
}

#[derive(Debug, Clone)]
pub struct PrivacyViolation {
    pub database: usize,
    pub desired_pair: (usize, usize),
    pub seed_pair: (u64, u64),
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct PrivacyReport {
    pub scheme: SchemeId,
    pub pass: bool,
    pub violations: Vec<PrivacyViolation>,
}

fn first_view_difference(a: &CanonicalQueryView, b: &CanonicalQueryView) -> Option<String> {
    if a.equations.len() != b.equations.len() {
        return Some(format!(
            "equation counts differ: {} vs {}",
            a.equations.len(),
            b.equations.len()
        ));
    }
    for (i, (ea, eb)) in a.equations.iter().zip(&b.equations).enumerate() {
        if ea != eb {
            return Some(format!("equation {} differs: {:?} vs {:?}", i + 1, ea, eb));
        }
        if a.coefficient_profile[i] != b.coefficient_profile[i] {
            return Some(format!("equation {} coefficient profile differs", i + 1));
        }
    }
    None
}

/// Checks that every database's canonical view is identical for every
/// desired message, per seed and across seeds. For ensemble-coefficient
/// schemes the amount of randomness consumed must also match, so the
/// coefficient channel cannot leak the request either.
pub fn check_privacy(
    scheme: SchemeId,
    system: &StorageSystem,
    seeds: &[u64],
) -> Result<PrivacyReport, VerifyError> {
    if seeds.is_empty() {
        return Err(VerifyError::UnsupportedStructure(
            "privacy check needs at least one seed".into(),
        ));
    }
    let plan_for = |desired: usize, seed: u64| -> Result<QueryPlan, VerifyError> {
        Ok(build_plan(
            system,
            &PlanRequest {
                scheme,
                desired,
                seed,
                q: None,
                l: None,
            },
        )?)
    };
    let baseline_plan = plan_for(1, seeds[0])?;
    let baseline: Vec<CanonicalQueryView> = (1..=system.n())
        .map(|db| canonicalize(&baseline_plan, db))
        .collect();
    // Randomness consumption may differ between seeds (rejection sampling),
    // but never between desired messages under the same seed.
    let mut draws_for_seed: BTreeMap<u64, u64> = BTreeMap::new();
    for &seed in seeds {
        draws_for_seed.insert(seed, plan_for(1, seed)?.rng_draws());
    }
    let mut violations = Vec::new();
    for desired in 1..=system.k() {
        for &seed in seeds {
            let plan = plan_for(desired, seed)?;
            if plan.rng_draws() != draws_for_seed[&seed] {
                violations.push(PrivacyViolation {
                    database: 0,
                    desired_pair: (1, desired),
                    seed_pair: (seed, seed),
                    detail: format!(
                        "randomness consumption differs: {} vs {} draws",
                        draws_for_seed[&seed],
                        plan.rng_draws()
                    ),
                });
            }
            for db in 1..=system.n() {
                let view = canonicalize(&plan, db);
                if let Some(detail) = first_view_difference(&baseline[db - 1], &view) {
                    violations.push(PrivacyViolation {
                        database: db,
                        desired_pair: (1, desired),
                        seed_pair: (seeds[0], seed),
                        detail,
                    });
                }
            }
        }
    }
    Ok(PrivacyReport {
        scheme,
        pass: violations.is_empty(),
        violations,
    })
}

#[derive(Debug, Clone)]
pub struct DecodabilityReport {
    pub pass: bool,
    pub matrix_rank: usize,
    pub unknowns: usize,
    /// Desired symbol indices whose unit vector is outside the row space.
    pub undetermined: Vec<usize>,
}

/// Independent decodability check: builds the coefficient matrix over all
/// referenced unknowns and asserts every desired-symbol unit vector lies in
/// its row space. Shares no code path with `decode`'s value extraction.
pub fn check_decodability(transcript: &Transcript) -> Result<DecodabilityReport, VerifyError> {
    let plan = transcript.plan();
    let q = plan.q();
    let columns = referenced_columns(plan);
    let ncols = columns.len();
    let mut rows = Vec::new();
    for db in 1..=plan.system().n() {
        for eq in plan.equations(db) {
            let mut row = vec![0u64; ncols];
            for t in eq.terms() {
                row[columns[&(t.message, t.symbol)]] = t.coefficient;
            }
            rows.push(row);
        }
    }
    let mut echelon = GfMatrix::from_rows(&rows)?;
    let pivots = echelon.reduced_row_echelon(&q)?;
    let rank = pivots.len();
    let mut undetermined = Vec::new();
    for symbol in 1..=plan.l() {
        let in_span = columns
            .get(&(plan.desired(), symbol))
            .map(|&col| unit_vector_in_rowspace(&echelon, &pivots, col, ncols, &q))
            .unwrap_or(false);
        if !in_span {
            undetermined.push(symbol);
        }
    }
    Ok(DecodabilityReport {
        pass: undetermined.is_empty(),
        matrix_rank: rank,
        unknowns: ncols,
        undetermined,
    })
}

fn referenced_columns(plan: &QueryPlan) -> BTreeMap<(usize, usize), usize> {
    let mut keys = std::collections::BTreeSet::new();
    for eqs in plan.per_database() {
        for eq in eqs {
            for t in eq.terms() {
                keys.insert((t.message, t.symbol));
            }
        }
    }
    keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect()
}

/// Membership test against an already-reduced echelon basis: reduce e_col by
/// the pivot rows and see whether anything survives.
fn unit_vector_in_rowspace(
    echelon: &GfMatrix,
    pivots: &[usize],
    col: usize,
    ncols: usize,
    q: &FieldSpec,
) -> bool {
    let mut v = vec![0u64; ncols];
    v[col] = 1;
    for (row, &pivot_col) in pivots.iter().enumerate() {
        let factor = v[pivot_col];
        if factor == 0 {
            continue;
        }
        for c in 0..ncols {
            let scaled = q.mul(factor, echelon.get(row, c)).expect("in range");
            v[c] = q.sub(v[c], scaled).expect("in range");
        }
    }
    v.iter().all(|&x| x == 0)
}

/// The number of desired symbols one database's answers pin down once every
/// undesired message is known: the rank of the desired-coefficient block of
/// that database's equations. For the shipped schemes this meets the L/R
/// answer-size floor with equality at every desired-holding database.
pub fn desired_info_rank(transcript: &Transcript, database: usize) -> Result<usize, VerifyError> {
    let plan = transcript.plan();
    if database == 0 || database > plan.system().n() {
        return Err(VerifyError::DatabaseOutOfRange(database));
    }
    let mut columns: BTreeMap<usize, usize> = BTreeMap::new();
    for eq in plan.equations(database) {
        for t in eq.terms().iter().filter(|t| t.message == plan.desired()) {
            let next = columns.len();
            columns.entry(t.symbol).or_insert(next);
        }
    }
    if columns.is_empty() {
        return Ok(0);
    }
    let mut rows = Vec::new();
    for eq in plan.equations(database) {
        let mut row = vec![0u64; columns.len()];
        let mut any = false;
        for t in eq.terms().iter().filter(|t| t.message == plan.desired()) {
            row[columns[&t.symbol]] = t.coefficient;
            any = true;
        }
        if any {
            rows.push(row);
        }
    }
    let matrix = GfMatrix::from_rows(&rows)?;
    Ok(matrix.rank(&plan.q())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    BelowBound,
    EqualsCapacity,
    ViolatesBound,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::BelowBound => write!(f, "below-bound"),
            Verdict::EqualsCapacity => write!(f, "equals-capacity"),
            Verdict::ViolatesBound => write!(f, "violates-bound"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RateReport {
    pub l: usize,
    pub downloads: usize,
    pub rate: Ratio<u64>,
    pub bound: Option<Ratio<u64>>,
    pub capacity: Option<Ratio<u64>>,
    pub verdict: Verdict,
}

/// Exact rational rate L/downloads compared against the Theorem-style bound
/// and the family's closed-form capacity when available. A violates-bound
/// verdict must never occur for a shipped scheme.
pub fn measure_rate(transcript: &Transcript, report: Option<&BoundReport>) -> RateReport {
    let l = transcript.plan().l();
    let downloads = transcript.downloads();
    let rate = Ratio::new(l as u64, downloads as u64);
    let bound = report.map(|r| r.bound);
    let capacity = report.and_then(|r| r.closed_form_capacity);
    let verdict = if bound.map(|b| rate > b).unwrap_or(false) {
        Verdict::ViolatesBound
    } else if capacity.map(|c| rate == c).unwrap_or(false) {
        Verdict::EqualsCapacity
    } else {
        Verdict::BelowBound
    };
    RateReport {
        l,
        downloads,
        rate,
        bound,
        capacity,
        verdict,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recovered {
    Message(Vec<u64>),
    Ambiguous,
}

const ORACLE_BUDGET: u128 = 1 << 24;

/// Brute-force reliability oracle: enumerates every assignment of the
/// symbols the transcript references, keeps the ones consistent with all
/// answers, and reports the desired message only if it is identical across
/// every consistent assignment.
pub fn brute_force_recover(
    transcript: &Transcript,
    system: &StorageSystem,
) -> Result<Recovered, VerifyError> {
    let plan = transcript.plan();
    if plan.system() != system {
        return Err(VerifyError::UnsupportedStructure(
            "transcript was produced for a different storage system".into(),
        ));
    }
    let q = plan.q().modulus();
    let columns = referenced_columns(plan);
    let nsyms = columns.len();
    let combos = (q as u128).checked_pow(nsyms as u32).unwrap_or(u128::MAX);
    if combos > ORACLE_BUDGET {
        return Err(VerifyError::OracleScale(format!(
            "{q}^{nsyms} assignments exceed the 2^24 budget"
        )));
    }
    // Every desired symbol must be referenced for the oracle to pin it down.
    let desired_cols: Vec<usize> = (1..=plan.l())
        .filter_map(|s| columns.get(&(plan.desired(), s)).copied())
        .collect();
    if desired_cols.len() != plan.l() {
        return Ok(Recovered::Ambiguous);
    }
    // Flatten the equations once.
    let mut equations: Vec<(Vec<(usize, u64)>, u64)> = Vec::new();
    for db in 1..=plan.system().n() {
        for (eq, &answer) in plan.equations(db).iter().zip(transcript.answers(db)) {
            let terms = eq
                .terms()
                .iter()
                .map(|t| (columns[&(t.message, t.symbol)], t.coefficient))
                .collect();
            equations.push((terms, answer));
        }
    }
    let mut assignment = vec![0u64; nsyms];
    let mut recovered: Option<Vec<u64>> = None;
    loop {
        let consistent = equations.iter().all(|(terms, answer)| {
            let sum = terms
                .iter()
                .fold(0u128, |acc, &(col, coeff)| {
                    acc + coeff as u128 * assignment[col] as u128
                });
            (sum % q as u128) as u64 == *answer
        });
        if consistent {
            let desired: Vec<u64> = desired_cols.iter().map(|&c| assignment[c]).collect();
            match &recovered {
                None => recovered = Some(desired),
                Some(previous) if *previous != desired => return Ok(Recovered::Ambiguous),
                Some(_) => {}
            }
        }
        // Odometer increment in base q.
        let mut pos = 0;
        loop {
            if pos == nsyms {
                return Ok(match recovered {
                    Some(message) => Recovered::Message(message),
                    None => Recovered::Ambiguous,
                });
            }
            assignment[pos] += 1;
            if assignment[pos] < q {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

/// The machine-readable verification summary the CLI emits.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub privacy: Option<bool>,
    pub decodability: bool,
    pub rate: RateReport,
}

impl VerificationReport {
    pub fn to_json(&self) -> serde_json::Value {
        let ratio_json = |r: &Ratio<u64>| {
            serde_json::json!({ "num": *r.numer(), "den": *r.denom() })
        };
        serde_json::json!({
            "privacy": self.privacy.map(|p| if p { "pass" } else { "fail" }),
            "decodability": if self.decodability { "pass" } else { "fail" },
            "rate": ratio_json(&self.rate.rate),
            "bound": self.rate.bound.as_ref().map(ratio_json),
            "capacity": self.rate.capacity.as_ref().map(ratio_json),
            "verdict": self.rate.verdict.to_string(),
        })
    }
}
