//! The Sun-Jafar greedy scheme instantiated on the (3,2,2,3) triangle:
//! per database two fresh singletons and one 2-sum, where the database not
//! holding the desired message contributes a dummy sum purely to keep the
//! query structure identical across desired messages. Rate 4/9.

use crate::analysis::recognize_family;
use crate::gf::FieldSpec;
use crate::storage::StorageSystem;

use super::{
    sample_permutations, CoefficientMode, CountingRng, Equation, QueryPlan, SchemeError, SchemeId,
    Term,
};

const L: usize = 4;

fn validate_triangle(system: &StorageSystem) -> Result<(), SchemeError> {
    let family = recognize_family(system);
    if system.k() == 3 && family.is_cyclic_like() {
        Ok(())
    } else {
        Err(SchemeError::UnsupportedStructure(format!(
            "scheme needs the (3,2,2,3) triangle, system is {family} with K={}",
            system.k()
        )))
    }
}

fn build(
    system: &StorageSystem,
    desired: usize,
    seed: u64,
    scheme: SchemeId,
    with_dummy: bool,
) -> Result<QueryPlan, SchemeError> {
    validate_triangle(system)?;
    if desired == 0 || desired > 3 {
        return Err(SchemeError::Domain(format!(
            "desired message {desired} out of range 1..=3"
        )));
    }
    let holders = system
        .databases_containing(desired)
        .expect("desired in range");
    let mut counters = [0usize; 4];
    let mut desired_next = 0usize;
    // side_info[m]: the singleton index of undesired message m at the
    // database that does not hold the desired message; the holders cancel
    // exactly these symbols inside their sums.
    let mut side_info = [0usize; 4];
    let mut round1: Vec<Vec<Equation>> = vec![Vec::new(); 3];
    let mut round2: Vec<Vec<Equation>> = vec![Vec::new(); 3];

    for db in 1..=3 {
        for &m in system.database(db).expect("db in range") {
            let symbol = if m == desired {
                desired_next += 1;
                desired_next
            } else {
                counters[m] += 1;
                if !holders.contains(&db) {
                    side_info[m] = counters[m];
                }
                counters[m]
            };
            round1[db - 1].push(Equation::new(vec![Term { message: m, symbol, coefficient: 1 }])?);
        }
    }
    for db in 1..=3 {
        let contents = system.database(db).expect("db in range");
        if holders.contains(&db) {
            let other = *contents.iter().find(|&&m| m != desired).expect("M=2");
            desired_next += 1;
            let mut terms = vec![
                Term { message: desired, symbol: desired_next, coefficient: 1 },
                Term { message: other, symbol: side_info[other], coefficient: 1 },
            ];
            terms.sort_by_key(|t| t.message);
            round2[db - 1].push(Equation::new(terms)?);
        } else if with_dummy {
            let terms = contents
                .iter()
                .map(|&m| {
                    counters[m] += 1;
                    Term { message: m, symbol: counters[m], coefficient: 1 }
                })
                .collect();
            round2[db - 1].push(Equation::new(terms)?);
        }
    }

    let per_database: Vec<Vec<Equation>> = round1
        .into_iter()
        .zip(round2)
        .map(|(mut a, b)| {
            a.extend(b);
            a
        })
        .collect();
    let mut rng = CountingRng::seed_from_u64(seed);
    let permutations = sample_permutations(3, L, Some(&mut rng));
    let draws = rng.draws();
    let per_database = apply_permutations(per_database, &permutations)?;
    QueryPlan::from_parts(
        system.clone(),
        scheme,
        desired,
        FieldSpec::new(2).expect("2 is prime"),
        L,
        per_database,
        permutations,
        CoefficientMode::Fixed,
        draws,
    )
}

/// Rewrites logical symbol indices through the private permutations.
pub(super) fn apply_permutations(
    per_database: Vec<Vec<Equation>>,
    permutations: &[Vec<usize>],
) -> Result<Vec<Vec<Equation>>, SchemeError> {
    per_database
        .into_iter()
        .map(|equations| {
            equations
                .into_iter()
                .map(|eq| {
                    let terms = eq
                        .terms()
                        .iter()
                        .map(|t| Term {
                            message: t.message,
                            symbol: permutations[t.message - 1][t.symbol - 1],
                            coefficient: t.coefficient,
                        })
                        .collect();
                    Equation::new(terms)
                })
                .collect()
        })
        .collect()
}

/// The Table-3 baseline: desired-holding databases send two singletons and a
/// fresh-desired-plus-side-information sum; the remaining database sends two
/// fresh singletons and the dummy sum.
pub fn plan_sun_jafar_332(
    system: &StorageSystem,
    desired: usize,
    seed: u64,
) -> Result<QueryPlan, SchemeError> {
    let plan = build(system, desired, seed, SchemeId::SunJafar332, true)?;
    debug_assert_eq!(plan.downloads(), 9);
    Ok(plan)
}

/// Deliberately broken variant that drops the dummy sum. It still decodes,
/// but the download counts now leak the desired message; the privacy checker
/// uses it as its negative control.
pub fn plan_sun_jafar_332_no_dummy(
    system: &StorageSystem,
    desired: usize,
    seed: u64,
) -> Result<QueryPlan, SchemeError> {
    build(system, desired, seed, SchemeId::SunJafar332NoDummy, false)
}
