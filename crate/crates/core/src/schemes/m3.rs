//! Achievable scheme for the (6,2,3,4) system with M=3, rate 18/60 = 3/10.
//!
//! The scheme extends the greedy round structure to three rounds: two fresh
//! singletons per stored message, then 2-sums that consume side information
//! (including side information *processed* by combining sums from two or
//! three other databases), then 3-sums. The published plan retrieves W_1;
//! other desired messages are served by relabeling the plan along an
//! automorphism of the storage system, which exists for every message here:
//! viewing the four databases as vertices and the six messages as the edges
//! between them, the system is a complete graph on four vertices, and its
//! automorphisms move any edge to any other.

use crate::gf::FieldSpec;
use crate::storage::StorageSystem;

use super::sun_jafar::apply_permutations;
use super::{
    sample_permutations, CoefficientMode, CountingRng, Equation, QueryPlan, SchemeError, SchemeId,
    Term,
};

const L: usize = 18;
const BLOCKS: [[usize; 3]; 4] = [[1, 2, 5], [1, 4, 6], [2, 3, 6], [3, 4, 5]];

type Pattern = Vec<Vec<(usize, usize)>>;

/// The published query pattern for desired = 1, per storage role, split into
/// rounds (singletons, 2-sums, 3-sums). Entries are (message, symbol index).
fn canonical_rounds() -> [[Pattern; 3]; 4] {
    [
        [
            vec![vec![(1, 1)], vec![(1, 2)], vec![(2, 1)], vec![(2, 2)], vec![(5, 1)], vec![(5, 2)]],
            vec![
                vec![(1, 5), (2, 3)],
                vec![(1, 6), (2, 4)],
                vec![(1, 7), (5, 3)],
                vec![(1, 8), (5, 4)],
                vec![(2, 5), (5, 5)],
                vec![(2, 6), (5, 6)],
            ],
            vec![
                vec![(1, 13), (2, 7), (5, 7)],
                vec![(1, 14), (2, 8), (5, 8)],
                vec![(1, 15), (2, 9), (5, 9)],
            ],
        ],
        [
            vec![vec![(1, 3)], vec![(1, 4)], vec![(4, 1)], vec![(4, 2)], vec![(6, 1)], vec![(6, 2)]],
            vec![
                vec![(1, 9), (4, 3)],
                vec![(1, 10), (4, 4)],
                vec![(1, 11), (6, 3)],
                vec![(1, 12), (6, 4)],
                vec![(4, 5), (6, 5)],
                vec![(4, 6), (6, 6)],
            ],
            vec![
                vec![(1, 16), (4, 7), (6, 7)],
                vec![(1, 17), (4, 8), (6, 8)],
                vec![(1, 18), (4, 9), (6, 9)],
            ],
        ],
        [
            vec![vec![(2, 3)], vec![(2, 4)], vec![(3, 1)], vec![(3, 2)], vec![(6, 3)], vec![(6, 4)]],
            vec![
                vec![(2, 7), (3, 7)],
                vec![(2, 8), (3, 8)],
                vec![(2, 9), (6, 5)],
                vec![(2, 5), (6, 9)],
                vec![(3, 9), (6, 7)],
                vec![(3, 5), (6, 8)],
            ],
            vec![
                vec![(2, 1), (3, 3), (6, 1)],
                vec![(2, 2), (3, 4), (6, 2)],
                vec![(2, 6), (3, 6), (6, 6)],
            ],
        ],
        [
            vec![vec![(3, 3)], vec![(3, 4)], vec![(4, 3)], vec![(4, 4)], vec![(5, 3)], vec![(5, 4)]],
            vec![
                vec![(3, 9), (4, 7)],
                vec![(3, 5), (4, 8)],
                vec![(3, 7), (5, 7)],
                vec![(3, 8), (5, 8)],
                vec![(4, 5), (5, 9)],
                vec![(4, 9), (5, 5)],
            ],
            vec![
                vec![(3, 1), (4, 1), (5, 1)],
                vec![(3, 2), (4, 2), (5, 2)],
                vec![(3, 6), (4, 6), (5, 6)],
            ],
        ],
    ]
}

/// The reference (6,2,3,4) system this scheme is written for.
pub fn m3_reference_system() -> StorageSystem {
    StorageSystem::new(6, 2, 3, 4, BLOCKS.iter().map(|b| b.to_vec()).collect())
        .expect("reference system is feasible")
}

/// Which pair of storage roles each message occupies, 0-based roles.
fn role_pairs() -> [(usize, usize); 6] {
    let mut pairs = [(usize::MAX, usize::MAX); 6];
    for (role, block) in BLOCKS.iter().enumerate() {
        for &m in block {
            if pairs[m - 1].0 == usize::MAX {
                pairs[m - 1].0 = role;
            } else {
                pairs[m - 1].1 = role;
            }
        }
    }
    pairs
}

fn message_of_roles(pairs: &[(usize, usize); 6], a: usize, b: usize) -> usize {
    let key = (a.min(b), a.max(b));
    pairs
        .iter()
        .position(|&p| p == key)
        .expect("every role pair is a message")
        + 1
}

/// All permutations of {0,1,2,3} in lexicographic order.
fn permutations_of_four() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 4];
                    if p.iter().all(|&x| !std::mem::replace(&mut seen[x], true)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// First storage-system automorphism (in lexicographic role-permutation
/// order) whose induced message relabeling sends message 1 to `desired`.
fn relabeling_for(desired: usize) -> Option<([usize; 4], [usize; 6])> {
    let pairs = role_pairs();
    for sigma in permutations_of_four() {
        let image_of_one = message_of_roles(&pairs, sigma[pairs[0].0], sigma[pairs[0].1]);
        if image_of_one != desired {
            continue;
        }
        let mut phi = [0usize; 6];
        for m in 1..=6 {
            let (a, b) = pairs[m - 1];
            phi[m - 1] = message_of_roles(&pairs, sigma[a], sigma[b]);
        }
        return Some((sigma, phi));
    }
    None
}

fn build(
    system: &StorageSystem,
    desired: usize,
    seed: Option<u64>,
) -> Result<QueryPlan, SchemeError> {
    if desired == 0 || desired > 6 {
        return Err(SchemeError::Domain(format!(
            "desired message {desired} out of range 1..=6"
        )));
    }
    // Identify which database plays which storage role.
    let mut db_of_role = [0usize; 4];
    for (role, block) in BLOCKS.iter().enumerate() {
        let found = (1..=system.n()).find(|&db| {
            system
                .database(db)
                .map(|z| z == block.as_slice())
                .unwrap_or(false)
        });
        match found {
            Some(db) => db_of_role[role] = db,
            None => {
                return Err(SchemeError::UnsupportedStructure(
                    "scheme is specific to the (6,2,3,4) reference system".into(),
                ))
            }
        }
    }
    let (sigma, phi) = relabeling_for(desired).ok_or_else(|| {
        SchemeError::UnsupportedStructure(format!(
            "no storage automorphism maps message 1 to {desired}"
        ))
    })?;
    let rounds = canonical_rounds();
    let mut per_database: Vec<Vec<Equation>> = vec![Vec::new(); system.n()];
    for role in 0..4 {
        let target = db_of_role[sigma[role]];
        let mut emitted = Vec::new();
        for round in &rounds[role] {
            let mut relabeled: Vec<Vec<(usize, usize)>> = round
                .iter()
                .map(|eq| {
                    let mut terms: Vec<(usize, usize)> =
                        eq.iter().map(|&(m, s)| (phi[m - 1], s)).collect();
                    terms.sort_unstable();
                    terms
                })
                .collect();
            // Deterministic emission: group by the message tuple, then by
            // symbol indices. The per-round multiset of message tuples is
            // the same for every desired message, so the canonical query
            // shape each database sees does not depend on the request.
            relabeled.sort_by(|a, b| {
                let msgs = |eq: &Vec<(usize, usize)>| {
                    eq.iter().map(|&(m, _)| m).collect::<Vec<_>>()
                };
                msgs(a).cmp(&msgs(b)).then_with(|| a.cmp(b))
            });
            emitted.extend(relabeled);
        }
        per_database[target - 1] = emitted
            .into_iter()
            .map(|terms| {
                Equation::new(
                    terms
                        .into_iter()
                        .map(|(message, symbol)| Term { message, symbol, coefficient: 1 })
                        .collect(),
                )
            })
            .collect::<Result<_, _>>()?;
    }
    let (permutations, draws) = match seed {
        Some(seed) => {
            let mut rng = CountingRng::seed_from_u64(seed);
            let perms = sample_permutations(6, L, Some(&mut rng));
            (perms, rng.draws())
        }
        None => (sample_permutations(6, L, None), 0),
    };
    let per_database = apply_permutations(per_database, &permutations)?;
    QueryPlan::from_parts(
        system.clone(),
        SchemeId::M3Example,
        desired,
        FieldSpec::new(2).expect("2 is prime"),
        L,
        per_database,
        permutations,
        CoefficientMode::Fixed,
        draws,
    )
}

pub fn plan_m3_example(
    system: &StorageSystem,
    desired: usize,
    seed: u64,
) -> Result<QueryPlan, SchemeError> {
    build(system, desired, Some(seed))
}

/// Identity-permutation variant reproducing the published table literally.
pub fn plan_m3_example_fixed(
    system: &StorageSystem,
    desired: usize,
) -> Result<QueryPlan, SchemeError> {
    build(system, desired, None)
}
