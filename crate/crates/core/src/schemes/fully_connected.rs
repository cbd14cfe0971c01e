//! Capacity-achieving scheme for fully-connected systems with K >= 4, rate
//! (K-1)/C(K,2) = 2/K.
//!
//! Every database answers one weighted 2-sum over its two stored messages,
//! with coefficients from F_q for a prime q > 2*C(K,2). The desired message
//! contributes a new symbol at each of its K-1 holders; every undesired
//! message reuses its first (privately permuted) symbol everywhere. The
//! coefficient tuple is drawn seeded and redrawn until the induced system of
//! C(K,2) equations in 2K-2 unknowns has full column rank simultaneously for
//! every possible desired message, which keeps the draw procedure - and so
//! the quantity of randomness consumed - independent of the actual request.

use crate::analysis::recognize_family;
use crate::gf::{FieldSpec, GfMatrix};
use crate::storage::StorageSystem;

use super::sun_jafar::apply_permutations;
use super::{
    sample_permutations, CoefficientMode, CountingRng, Equation, QueryPlan, SchemeError, SchemeId,
    Term,
};

fn validate(system: &StorageSystem, q: FieldSpec) -> Result<(), SchemeError> {
    let family = recognize_family(system);
    if !family.is_fully_connected() {
        return Err(SchemeError::UnsupportedStructure(format!(
            "weighted-sum scheme needs a fully-connected system, got {family}"
        )));
    }
    if system.k() < 4 {
        return Err(SchemeError::UnsupportedStructure(format!(
            "weighted-sum scheme needs K >= 4 (got K={}); K=3 is served by the \
             cyclic scheme and K=2 by downloading the single database",
            system.k()
        )));
    }
    if q.modulus() <= 2 * system.n() as u64 {
        return Err(SchemeError::Domain(format!(
            "field F_{} is too small: need q > 2*C(K,2) = {}",
            q.modulus(),
            2 * system.n()
        )));
    }
    Ok(())
}

/// The per-database symbol index in the logical space: the i-th holder of
/// the desired message (by database order) asks for desired symbol i, every
/// undesired message is pinned to symbol 1.
fn logical_equations(
    system: &StorageSystem,
    desired: usize,
    alpha: &[u64],
) -> Result<Vec<Vec<Equation>>, SchemeError> {
    let mut desired_occurrence = 0usize;
    let mut per_database = Vec::with_capacity(system.n());
    for db in 1..=system.n() {
        let z = system.database(db).expect("db in range");
        let mut terms = Vec::with_capacity(2);
        for (slot, &message) in z.iter().enumerate() {
            let symbol = if message == desired {
                desired_occurrence += 1;
                desired_occurrence
            } else {
                1
            };
            terms.push(Term {
                message,
                symbol,
                coefficient: alpha[2 * (db - 1) + slot],
            });
        }
        per_database.push(vec![Equation::new(terms)?]);
    }
    Ok(per_database)
}

/// Decoding matrix for one desired message: one row per database over the
/// K-1 desired symbols followed by the K-1 undesired first-symbols.
fn decoding_matrix(system: &StorageSystem, desired: usize, alpha: &[u64]) -> GfMatrix {
    let k = system.k();
    let undesired_col = |message: usize| {
        // Columns K-1.. in message order, skipping the desired message.
        let rank = (1..=k).filter(|&m| m != desired).position(|m| m == message);
        k - 1 + rank.expect("message is undesired")
    };
    let mut psi = GfMatrix::zero(system.n(), 2 * (k - 1));
    let mut desired_occurrence = 0usize;
    for db in 1..=system.n() {
        let z = system.database(db).expect("db in range");
        for (slot, &message) in z.iter().enumerate() {
            let col = if message == desired {
                desired_occurrence += 1;
                desired_occurrence - 1
            } else {
                undesired_col(message)
            };
            psi.set(db - 1, col, alpha[2 * (db - 1) + slot]);
        }
    }
    psi
}

fn coefficients_decode_every_message(
    system: &StorageSystem,
    q: FieldSpec,
    alpha: &[u64],
) -> bool {
    let want = 2 * (system.k() - 1);
    (1..=system.k()).all(|desired| {
        decoding_matrix(system, desired, alpha)
            .rank(&q)
            .expect("coefficients are field elements")
            == want
    })
}

/// Draws 2N distinct nonzero field elements (a partial Fisher-Yates over
/// 1..q-1) until the tuple decodes every candidate desired message.
fn draw_coefficients(system: &StorageSystem, q: FieldSpec, rng: &mut CountingRng) -> Vec<u64> {
    let need = 2 * system.n();
    loop {
        let mut pool: Vec<u64> = (1..q.modulus()).collect();
        for i in 0..need {
            let j = i + rng.range(pool.len() - i);
            pool.swap(i, j);
        }
        pool.truncate(need);
        if coefficients_decode_every_message(system, q, &pool) {
            return pool;
        }
    }
}

pub fn plan_fully_connected(
    system: &StorageSystem,
    desired: usize,
    seed: u64,
    q: FieldSpec,
) -> Result<QueryPlan, SchemeError> {
    validate(system, q)?;
    let l = system.k() - 1;
    let mut rng = CountingRng::seed_from_u64(seed);
    let alpha = draw_coefficients(system, q, &mut rng);
    let permutations = sample_permutations(system.k(), l, Some(&mut rng));
    let draws = rng.draws();
    let per_database = apply_permutations(logical_equations(system, desired, &alpha)?, &permutations)?;
    QueryPlan::from_parts(
        system.clone(),
        SchemeId::FullyConnected,
        desired,
        q,
        l,
        per_database,
        permutations,
        CoefficientMode::UniformEnsemble,
        draws,
    )
}

/// Fixed-coefficient, identity-permutation variant. No redraw happens, so a
/// deliberately singular tuple goes through as-is; the decodability checker
/// is expected to catch it. This is the hook for reproducing the published
/// K=4 worked example bit-for-bit.
pub fn plan_fully_connected_with_coefficients(
    system: &StorageSystem,
    desired: usize,
    q: FieldSpec,
    alpha: &[u64],
) -> Result<QueryPlan, SchemeError> {
    validate(system, q)?;
    if alpha.len() != 2 * system.n() {
        return Err(SchemeError::Domain(format!(
            "need {} coefficients, got {}",
            2 * system.n(),
            alpha.len()
        )));
    }
    let l = system.k() - 1;
    QueryPlan::from_parts(
        system.clone(),
        SchemeId::FullyConnected,
        desired,
        q,
        l,
        logical_equations(system, desired, alpha)?,
        sample_permutations(system.k(), l, None),
        CoefficientMode::UniformEnsemble,
        0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{answer_query, decode};
    use crate::storage::MessageStore;

    fn f13() -> FieldSpec {
        FieldSpec::new(13).unwrap()
    }

    #[test]
    fn k4_worked_example_equations() {
        let system = StorageSystem::fully_connected(4).unwrap();
        let alpha: Vec<u64> = (1..=12).collect();
        let plan = plan_fully_connected_with_coefficients(&system, 1, f13(), &alpha).unwrap();
        let expected: [&[(usize, usize, u64)]; 6] = [
            &[(1, 1, 1), (2, 1, 2)],
            &[(1, 2, 3), (3, 1, 4)],
            &[(1, 3, 5), (4, 1, 6)],
            &[(2, 1, 7), (3, 1, 8)],
            &[(2, 1, 9), (4, 1, 10)],
            &[(3, 1, 11), (4, 1, 12)],
        ];
        for db in 1..=6 {
            let eqs = plan.equations(db);
            assert_eq!(eqs.len(), 1);
            let got: Vec<(usize, usize, u64)> = eqs[0]
                .terms()
                .iter()
                .map(|t| (t.message, t.symbol, t.coefficient))
                .collect();
            assert_eq!(got, expected[db - 1], "database {db}");
        }
        // The induced decoding system is full rank.
        let psi = decoding_matrix(&system, 1, &alpha);
        assert_eq!(psi.rank(&f13()).unwrap(), 6);
    }

    #[test]
    fn k4_worked_example_answers_and_decode() {
        let system = StorageSystem::fully_connected(4).unwrap();
        let alpha: Vec<u64> = (1..=12).collect();
        let plan = plan_fully_connected_with_coefficients(&system, 1, f13(), &alpha).unwrap();
        let store = MessageStore::from_rows(
            f13(),
            vec![
                vec![3, 5, 7],  // a
                vec![2, 0, 1],  // b
                vec![11, 4, 9], // c
                vec![6, 8, 12], // d
            ],
        )
        .unwrap();
        let transcript = answer_query(&plan, &store).unwrap();
        // A_1 = a_1 + 2 b_1 etc., all mod 13.
        assert_eq!(transcript.answers(1), &[(3 + 2 * 2) % 13]);
        assert_eq!(transcript.answers(2), &[(3 * 5 + 4 * 11) % 13]);
        assert_eq!(transcript.answers(3), &[(5 * 7 + 6 * 6) % 13]);
        assert_eq!(transcript.answers(4), &[(7 * 2 + 8 * 11) % 13]);
        assert_eq!(transcript.answers(5), &[(9 * 2 + 10 * 6) % 13]);
        assert_eq!(transcript.answers(6), &[(11 * 11 + 12 * 6) % 13]);
        assert_eq!(decode(&transcript).unwrap(), &[3, 5, 7]);
    }

    #[test]
    fn seeded_plans_decode_for_all_desired() {
        for k in [4usize, 5, 6] {
            let system = StorageSystem::fully_connected(k).unwrap();
            let n = system.n() as u64;
            let q = FieldSpec::new(crate::gf::smallest_prime_greater_than(2 * n)).unwrap();
            for seed in 0..3 {
                let store = MessageStore::random(&system, q, k - 1, 70 + seed);
                for desired in 1..=k {
                    let plan = plan_fully_connected(&system, desired, seed, q).unwrap();
                    assert_eq!(plan.downloads(), system.n());
                    let transcript = answer_query(&plan, &store).unwrap();
                    assert_eq!(
                        decode(&transcript).unwrap(),
                        store.message(desired),
                        "k={k} desired={desired} seed={seed}"
                    );
                }
            }
        }
    }

    #[test]
    fn coefficient_draws_do_not_depend_on_desired() {
        let system = StorageSystem::fully_connected(5).unwrap();
        let q = FieldSpec::new(23).unwrap();
        let draws: Vec<u64> = (1..=5)
            .map(|desired| {
                plan_fully_connected(&system, desired, 11, q)
                    .unwrap()
                    .rng_draws()
            })
            .collect();
        assert!(draws.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn rejects_small_k_and_small_fields() {
        let k3 = StorageSystem::fully_connected(3).unwrap();
        assert!(matches!(
            plan_fully_connected(&k3, 1, 0, f13()),
            Err(SchemeError::UnsupportedStructure(_))
        ));
        let k4 = StorageSystem::fully_connected(4).unwrap();
        let small = FieldSpec::new(11).unwrap();
        assert!(matches!(
            plan_fully_connected(&k4, 1, 0, small),
            Err(SchemeError::Domain(_))
        ));
    }

    #[test]
    fn singular_coefficients_fail_decode_loudly() {
        // Rows for databases {2,3}, {2,4}, {3,4} chosen so the undesired
        // block is singular mod 13: [1 1 0; 1 0 1; 0 1 12] has determinant
        // -13 = 0.
        let system = StorageSystem::fully_connected(4).unwrap();
        let alpha = [1, 2, 3, 4, 5, 6, 1, 1, 1, 1, 1, 12];
        let plan = plan_fully_connected_with_coefficients(&system, 1, f13(), &alpha).unwrap();
        assert!(decoding_matrix(&system, 1, &alpha).rank(&f13()).unwrap() < 6);
        let store = MessageStore::random(&system, f13(), 3, 1);
        let transcript = answer_query(&plan, &store).unwrap();
        assert!(matches!(
            decode(&transcript),
            Err(SchemeError::Decodability(_))
        ));
    }
}
