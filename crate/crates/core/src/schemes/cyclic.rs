//! Capacity-achieving scheme for cyclic systems, rate 2/(K+1).
//!
//! The plan run C(K,2) repetitions, one per unordered pair of databases. In
//! a repetition the chosen pair receives the full three-query pattern (one
//! fresh singleton per stored message plus a 2-sum) and every other database
//! has its requests compressed to two 2-sums over its two stored messages.
//! Each repetition introduces 4 fresh desired symbols and 2 fresh symbols
//! per undesired message, so its 2K+2 equations form a square system.
//!
//! Within a repetition the symbol indices of the compressed sums are chosen
//! by propagating side information outward from the full-query pair: each
//! sum pairs one symbol already solvable from the processed side with one
//! fresh symbol. Every repetition is verified to be uniquely solvable over
//! F_2; if the propagation ever produces a singular system, a deterministic
//! enumeration of the remaining index pairings takes over.

use std::collections::BTreeMap;

use crate::analysis::recognize_family;
use crate::gf::{FieldSpec, GfMatrix};
use crate::storage::StorageSystem;

use super::sun_jafar::apply_permutations;
use super::{
    sample_permutations, CoefficientMode, CountingRng, Equation, QueryPlan, SchemeError, SchemeId,
    Term,
};

#[derive(Debug, Clone, Copy)]
struct Slot {
    message: usize,
    symbol: Option<usize>,
}

#[derive(Debug, Clone)]
struct RepEq {
    db: usize,
    slots: Vec<Slot>,
}

#[derive(Debug, Clone, Copy)]
struct Alloc {
    index: usize,
    db: usize,
    used_twice: bool,
}

/// Full capacity-achieving plan: repetitions over all database pairs in
/// lexicographic order, L = 4*C(K,2).
pub fn plan_cyclic(
    system: &StorageSystem,
    desired: usize,
    seed: u64,
) -> Result<QueryPlan, SchemeError> {
    build(system, desired, Some(seed), None)
}

/// Identity-permutation variant; reproduces the published query tables
/// literally. Intended for inspection and tests.
pub fn plan_cyclic_fixed(system: &StorageSystem, desired: usize) -> Result<QueryPlan, SchemeError> {
    build(system, desired, None, None)
}

/// A single repetition with L = 4: the scaled-down building block. Not
/// private on its own (the chosen pair stands out); used as a decodable
/// sub-instance for oracle comparisons.
pub fn plan_cyclic_repetition(
    system: &StorageSystem,
    desired: usize,
    seed: u64,
    full_pair: (usize, usize),
) -> Result<QueryPlan, SchemeError> {
    build(system, desired, Some(seed), Some(full_pair))
}

fn build(
    system: &StorageSystem,
    desired: usize,
    seed: Option<u64>,
    single: Option<(usize, usize)>,
) -> Result<QueryPlan, SchemeError> {
    let family = recognize_family(system);
    if !family.is_cyclic_like() {
        return Err(SchemeError::UnsupportedStructure(format!(
            "cyclic scheme needs a cyclic system, got {family}"
        )));
    }
    let (k, n) = (system.k(), system.n());
    if desired == 0 || desired > k {
        return Err(SchemeError::Domain(format!(
            "desired message {desired} out of range 1..={k}"
        )));
    }
    let reps: Vec<(usize, usize)> = match single {
        Some((i, j)) => {
            if i == j || i == 0 || j == 0 || i > n || j > n {
                return Err(SchemeError::Domain(format!(
                    "invalid database pair ({i}, {j}) for N={n}"
                )));
            }
            vec![(i.min(j), i.max(j))]
        }
        None => {
            let mut pairs = Vec::new();
            for i in 1..=n {
                for j in i + 1..=n {
                    pairs.push((i, j));
                }
            }
            pairs
        }
    };
    let l = 4 * reps.len();
    let q = FieldSpec::new(2).expect("2 is prime");
    let mut next_fresh = vec![0usize; k + 1];
    let mut desired_next = 0usize;
    let mut per_database: Vec<Vec<Equation>> = vec![Vec::new(); n];
    for &pair in &reps {
        let rep_eqs = build_repetition(system, desired, pair, &mut next_fresh, &mut desired_next)?;
        for eq in rep_eqs {
            let terms = eq
                .slots
                .iter()
                .map(|s| Term {
                    message: s.message,
                    symbol: s.symbol.expect("repetition fully assigned"),
                    coefficient: 1,
                })
                .collect();
            per_database[eq.db - 1].push(Equation::new(terms)?);
        }
    }
    debug_assert_eq!(desired_next, l);
    let (permutations, draws) = match seed {
        Some(seed) => {
            let mut rng = CountingRng::seed_from_u64(seed);
            let perms = sample_permutations(k, l, Some(&mut rng));
            (perms, rng.draws())
        }
        None => (sample_permutations(k, l, None), 0),
    };
    let per_database = apply_permutations(per_database, &permutations)?;
    QueryPlan::from_parts(
        system.clone(),
        SchemeId::Cyclic,
        desired,
        q,
        l,
        per_database,
        permutations,
        CoefficientMode::Fixed,
        draws,
    )
}

/// Builds one repetition's 2K+2 equations with all symbol indices assigned
/// and verified uniquely solvable.
fn build_repetition(
    system: &StorageSystem,
    desired: usize,
    full_pair: (usize, usize),
    next_fresh: &mut [usize],
    desired_next: &mut usize,
) -> Result<Vec<RepEq>, SchemeError> {
    let (k, n) = (system.k(), system.n());
    let fresh_snapshot: Vec<usize> = next_fresh.to_vec();
    let mut eqs: Vec<RepEq> = Vec::new();
    for db in 1..=n {
        let z = system.database(db).expect("db in range");
        let (x, y) = (z[0], z[1]);
        let slot = |message| Slot { message, symbol: None };
        if db == full_pair.0 || db == full_pair.1 {
            eqs.push(RepEq { db, slots: vec![slot(x)] });
            eqs.push(RepEq { db, slots: vec![slot(y)] });
            eqs.push(RepEq { db, slots: vec![slot(x), slot(y)] });
        } else {
            eqs.push(RepEq { db, slots: vec![slot(x), slot(y)] });
            eqs.push(RepEq { db, slots: vec![slot(x), slot(y)] });
        }
    }
    // Desired indices advance round-major: the full databases' singletons
    // first, then every desired slot inside a sum in emission order.
    for eq in eqs.iter_mut().filter(|e| e.slots.len() == 1) {
        if eq.slots[0].message == desired {
            *desired_next += 1;
            eq.slots[0].symbol = Some(*desired_next);
        }
    }
    for eq in eqs.iter_mut().filter(|e| e.slots.len() == 2) {
        for s in eq.slots.iter_mut().filter(|s| s.message == desired) {
            *desired_next += 1;
            s.symbol = Some(*desired_next);
        }
    }
    // Undesired singletons seed the propagation.
    let mut allocs: Vec<Vec<Alloc>> = vec![Vec::new(); k + 1];
    for eq in eqs.iter_mut().filter(|e| e.slots.len() == 1) {
        let s = &mut eq.slots[0];
        if s.message != desired {
            next_fresh[s.message] += 1;
            s.symbol = Some(next_fresh[s.message]);
            allocs[s.message].push(Alloc {
                index: next_fresh[s.message],
                db: eq.db,
                used_twice: false,
            });
        }
    }
    let complete = run_worklist(&mut eqs, &mut allocs, next_fresh, desired);
    if !complete || !repetition_solvable(&eqs) {
        assign_by_enumeration(&mut eqs, next_fresh, &fresh_snapshot, desired, k)?;
    }
    Ok(eqs)
}

/// First allocated symbol of `m` that has a use left and was introduced at a
/// different database. A symbol appears exactly once at each of its
/// message's two holders, which also keeps every database's queries over
/// first-appearance indices.
fn take_reusable(allocs: &mut [Alloc], db: usize) -> Option<usize> {
    let alloc = allocs
        .iter_mut()
        .find(|a| !a.used_twice && a.db != db)?;
    alloc.used_twice = true;
    Some(alloc.index)
}

fn has_reusable(allocs: &[Alloc], db: usize) -> bool {
    allocs.iter().any(|a| !a.used_twice && a.db != db)
}

/// Propagation fixpoint. A sum is resolved by pairing one symbol that is
/// already solvable from the processed side with one fresh symbol; when both
/// directions are open the lower message supplies the solvable side.
fn run_worklist(
    eqs: &mut [RepEq],
    allocs: &mut [Vec<Alloc>],
    next_fresh: &mut [usize],
    desired: usize,
) -> bool {
    loop {
        let mut progress = false;
        for i in 0..eqs.len() {
            let db = eqs[i].db;
            let unassigned: Vec<usize> = eqs[i]
                .slots
                .iter()
                .enumerate()
                .filter(|(_, s)| s.symbol.is_none())
                .map(|(j, _)| j)
                .collect();
            match unassigned.as_slice() {
                [] => continue,
                [j] => {
                    // The co-term is a fresh desired symbol; the undesired
                    // side must reuse something solvable elsewhere.
                    let m = eqs[i].slots[*j].message;
                    debug_assert_ne!(m, desired);
                    if let Some(idx) = take_reusable(&mut allocs[m], db) {
                        eqs[i].slots[*j].symbol = Some(idx);
                        progress = true;
                    }
                }
                [j1, j2] => {
                    let (m1, m2) = (eqs[i].slots[*j1].message, eqs[i].slots[*j2].message);
                    let reuse_first = has_reusable(&allocs[m1], db) && allocs[m2].len() < 2;
                    let reuse_second = has_reusable(&allocs[m2], db) && allocs[m1].len() < 2;
                    let direction = if reuse_first {
                        Some((*j1, m1, *j2, m2))
                    } else if reuse_second {
                        Some((*j2, m2, *j1, m1))
                    } else {
                        None
                    };
                    if let Some((rj, rm, fj, fm)) = direction {
                        let idx = take_reusable(&mut allocs[rm], db).expect("checked above");
                        eqs[i].slots[rj].symbol = Some(idx);
                        next_fresh[fm] += 1;
                        eqs[i].slots[fj].symbol = Some(next_fresh[fm]);
                        allocs[fm].push(Alloc {
                            index: next_fresh[fm],
                            db,
                            used_twice: false,
                        });
                        progress = true;
                    }
                }
                _ => {}
            }
        }
        if !progress {
            break;
        }
    }
    eqs.iter().all(|e| e.slots.iter().all(|s| s.symbol.is_some()))
}

/// The repetition's equations must uniquely determine its fresh unknowns:
/// square system of full rank over F_2.
fn repetition_solvable(eqs: &[RepEq]) -> bool {
    let q = FieldSpec::new(2).expect("2 is prime");
    let mut columns: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for eq in eqs {
        for s in eq.slots.iter() {
            let key = (s.message, s.symbol.expect("assigned"));
            let next = columns.len();
            columns.entry(key).or_insert(next);
        }
    }
    if columns.len() != eqs.len() {
        return false;
    }
    let mut m = GfMatrix::zero(eqs.len(), columns.len());
    for (r, eq) in eqs.iter().enumerate() {
        for s in eq.slots.iter() {
            m.set(r, columns[&(s.message, s.symbol.expect("assigned"))], 1);
        }
    }
    m.rank(&q).expect("binary entries") == eqs.len()
}

/// Deterministic fallback: each undesired message's four slots (two at each
/// holder) take its two fresh symbols either in parallel or crossed; walk
/// the 2^(K-1) combinations until one is solvable.
fn assign_by_enumeration(
    eqs: &mut [RepEq],
    next_fresh: &mut [usize],
    snapshot: &[usize],
    desired: usize,
    k: usize,
) -> Result<(), SchemeError> {
    let undesired: Vec<usize> = (1..=k).filter(|&m| m != desired).collect();
    if undesired.len() > 20 {
        return Err(SchemeError::Decodability(
            "index-assignment fallback is infeasible for this many messages".into(),
        ));
    }
    let mut slot_map: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k + 1];
    for (i, eq) in eqs.iter().enumerate() {
        for (j, s) in eq.slots.iter().enumerate() {
            if s.message != desired {
                slot_map[s.message].push((i, j));
            }
        }
    }
    for &m in &undesired {
        if slot_map[m].len() != 4 {
            return Err(SchemeError::Decodability(format!(
                "message {m} has {} slots in the repetition, expected 4",
                slot_map[m].len()
            )));
        }
    }
    for combo in 0u64..1 << undesired.len() {
        for (pos, &m) in undesired.iter().enumerate() {
            next_fresh[m] = snapshot[m];
            let f1 = next_fresh[m] + 1;
            let f2 = next_fresh[m] + 2;
            next_fresh[m] += 2;
            let crossed = combo >> pos & 1 == 1;
            let order = if crossed { [f1, f2, f2, f1] } else { [f1, f2, f1, f2] };
            for (&(i, j), idx) in slot_map[m].iter().zip(order) {
                eqs[i].slots[j].symbol = Some(idx);
            }
        }
        if repetition_solvable(eqs) {
            return Ok(());
        }
    }
    Err(SchemeError::Decodability(
        "no uniquely solvable symbol assignment exists for a repetition".into(),
    ))
}
