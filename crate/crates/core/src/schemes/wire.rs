//! Transcript JSON: per-database equation lists as [message, symbol,
//! coefficient] triples plus the flat answer array. The desired index and
//! the private permutations travel in a separate "secrets" section that
//! structural verification never reads.

use serde::{Deserialize, Serialize};

use crate::gf::FieldSpec;
use crate::storage::StorageSystem;

use super::{CoefficientMode, Equation, QueryPlan, SchemeError, SchemeId, Term, Transcript};

#[derive(Serialize, Deserialize)]
struct WireSystem {
    k: usize,
    r: usize,
    m: usize,
    n: usize,
    databases: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct WireSecrets {
    desired: usize,
    permutations: Vec<Vec<usize>>,
    rng_draws: u64,
}

#[derive(Serialize, Deserialize)]
struct WireTranscript {
    system: WireSystem,
    scheme: String,
    q: u64,
    l: usize,
    coefficient_mode: String,
    /// queries[db - 1][eq] = [[message, symbol, coefficient], ...]
    queries: Vec<Vec<Vec<(usize, usize, u64)>>>,
    /// Flat answers in (database, equation) order.
    answers: Vec<u64>,
    downloads: usize,
    decoded: Option<Vec<u64>>,
    secrets: WireSecrets,
}

pub fn transcript_to_json(transcript: &Transcript) -> String {
    let plan = transcript.plan();
    let system = plan.system();
    let wire = WireTranscript {
        system: WireSystem {
            k: system.k(),
            r: system.r(),
            m: system.m(),
            n: system.n(),
            databases: system.contents().to_vec(),
        },
        scheme: plan.scheme().to_string(),
        q: plan.q().modulus(),
        l: plan.l(),
        coefficient_mode: match plan.coefficient_mode() {
            CoefficientMode::Fixed => "fixed".into(),
            CoefficientMode::UniformEnsemble => "uniform-ensemble".into(),
        },
        queries: plan
            .per_database()
            .iter()
            .map(|eqs| {
                eqs.iter()
                    .map(|eq| {
                        eq.terms()
                            .iter()
                            .map(|t| (t.message, t.symbol, t.coefficient))
                            .collect()
                    })
                    .collect()
            })
            .collect(),
        answers: (1..=system.n())
            .flat_map(|db| transcript.answers(db).to_vec())
            .collect(),
        downloads: transcript.downloads(),
        decoded: transcript.decoded().map(<[u64]>::to_vec),
        secrets: WireSecrets {
            desired: plan.desired(),
            permutations: plan.permutations().to_vec(),
            rng_draws: plan.rng_draws(),
        },
    };
    let mut text = serde_json::to_string_pretty(&wire).expect("transcripts always serialize");
    text.push('\n');
    text
}

pub fn transcript_from_json(text: &str) -> Result<Transcript, SchemeError> {
    let wire: WireTranscript = serde_json::from_str(text)
        .map_err(|e| SchemeError::InvalidPlan(format!("transcript parse error: {e}")))?;
    let system = StorageSystem::new(
        wire.system.k,
        wire.system.r,
        wire.system.m,
        wire.system.n,
        wire.system.databases,
    )
    .map_err(|e| SchemeError::InvalidPlan(e.to_string()))?;
    let scheme: SchemeId = wire
        .scheme
        .parse()
        .map_err(|e: String| SchemeError::InvalidPlan(e))?;
    let q = FieldSpec::new(wire.q)?;
    let coefficient_mode = match wire.coefficient_mode.as_str() {
        "fixed" => CoefficientMode::Fixed,
        "uniform-ensemble" => CoefficientMode::UniformEnsemble,
        other => {
            return Err(SchemeError::InvalidPlan(format!(
                "unknown coefficient mode '{other}'"
            )))
        }
    };
    let per_database: Vec<Vec<Equation>> = wire
        .queries
        .iter()
        .map(|eqs| {
            eqs.iter()
                .map(|terms| {
                    Equation::new(
                        terms
                            .iter()
                            .map(|&(message, symbol, coefficient)| Term {
                                message,
                                symbol,
                                coefficient,
                            })
                            .collect(),
                    )
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let plan = QueryPlan::from_parts(
        system,
        scheme,
        wire.secrets.desired,
        q,
        wire.l,
        per_database,
        wire.secrets.permutations,
        coefficient_mode,
        wire.secrets.rng_draws,
    )?;
    let mut answers = Vec::with_capacity(plan.system().n());
    let mut cursor = 0usize;
    for eqs in plan.per_database() {
        let end = cursor + eqs.len();
        if end > wire.answers.len() {
            return Err(SchemeError::InvalidPlan(
                "answer array shorter than the equation count".into(),
            ));
        }
        answers.push(wire.answers[cursor..end].to_vec());
        cursor = end;
    }
    if cursor != wire.answers.len() {
        return Err(SchemeError::InvalidPlan(
            "answer array longer than the equation count".into(),
        ));
    }
    let mut transcript = Transcript::new(plan, answers)?;
    if let Some(decoded) = wire.decoded {
        transcript.set_decoded(decoded)?;
    }
    Ok(transcript)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{answer_query, plan_cyclic};
    use crate::storage::MessageStore;

    #[test]
    fn transcripts_round_trip() {
        let system = StorageSystem::cyclic(4).unwrap();
        let q = FieldSpec::new(2).unwrap();
        let plan = plan_cyclic(&system, 2, 5).unwrap();
        let store = MessageStore::random(&system, q, plan.l(), 8);
        let mut transcript = answer_query(&plan, &store).unwrap();
        transcript
            .set_decoded(store.message(2).to_vec())
            .unwrap();
        let json = transcript_to_json(&transcript);
        let back = transcript_from_json(&json).unwrap();
        assert_eq!(&back, &transcript);
    }

    #[test]
    fn tampered_equations_are_rejected_by_name() {
        let system = StorageSystem::cyclic(3).unwrap();
        let plan = plan_cyclic(&system, 1, 0).unwrap();
        let store = MessageStore::random(&system, FieldSpec::new(2).unwrap(), plan.l(), 1);
        let transcript = answer_query(&plan, &store).unwrap();
        // Point an equation of database 1 at message 3, which it lacks.
        let json = transcript_to_json(&transcript);
        let mut value: serde_json::Value = serde_json::from_str(&json).unwrap();
        value["queries"][0][0][0][0] = serde_json::json!(3);
        let err = transcript_from_json(&value.to_string()).unwrap_err();
        match err {
            SchemeError::NotAnswerable { database, message } => {
                assert_eq!((database, message), (1, 3));
            }
            other => panic!("expected NotAnswerable, got {other:?}"),
        }
    }
}
