//! The trivial baseline: fetch every symbol of every message, each message
//! from exactly one of its holders. Rate 1/K, private because the request
//! never depends on the desired message at all.

use crate::gf::FieldSpec;
use crate::storage::StorageSystem;

use super::{sample_permutations, CoefficientMode, Equation, QueryPlan, SchemeError, SchemeId, Term};

pub fn plan_download_all(
    system: &StorageSystem,
    desired: usize,
    l: usize,
    q: FieldSpec,
) -> Result<QueryPlan, SchemeError> {
    if l == 0 {
        return Err(SchemeError::Domain("message length must be positive".into()));
    }
    // Each message is fetched from its lowest-indexed holder.
    let mut owner = vec![0usize; system.k()];
    for message in 1..=system.k() {
        owner[message - 1] = *system
            .databases_containing(message)
            .map_err(|e| SchemeError::Domain(e.to_string()))?
            .first()
            .expect("every message has R >= 1 holders");
    }
    let mut per_database = vec![Vec::new(); system.n()];
    for db in 1..=system.n() {
        for &message in system.database(db).expect("db index in range") {
            if owner[message - 1] != db {
                continue;
            }
            for symbol in 1..=l {
                per_database[db - 1].push(Equation::new(vec![Term {
                    message,
                    symbol,
                    coefficient: 1,
                }])?);
            }
        }
    }
    QueryPlan::from_parts(
        system.clone(),
        SchemeId::DownloadAll,
        desired,
        q,
        l,
        per_database,
        sample_permutations(system.k(), l, None),
        CoefficientMode::Fixed,
        0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{answer_query, decode};
    use crate::storage::MessageStore;

    #[test]
    fn download_counts_give_rate_one_over_k() {
        let q = FieldSpec::new(2).unwrap();
        let cyclic = StorageSystem::cyclic(3).unwrap();
        let plan = plan_download_all(&cyclic, 1, 1, q).unwrap();
        assert_eq!(plan.downloads(), 3);

        let fc = StorageSystem::fully_connected(4).unwrap();
        let plan = plan_download_all(&fc, 2, 1, q).unwrap();
        assert_eq!(plan.downloads(), 4);
    }

    #[test]
    fn every_desired_message_decodes() {
        let q = FieldSpec::new(2).unwrap();
        let system = StorageSystem::cyclic(4).unwrap();
        let store = MessageStore::random(&system, q, 3, 17);
        for desired in 1..=4 {
            let plan = plan_download_all(&system, desired, 3, q).unwrap();
            let transcript = answer_query(&plan, &store).unwrap();
            assert_eq!(decode(&transcript).unwrap(), store.message(desired));
        }
    }
}
