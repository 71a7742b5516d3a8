//! Nearest-neighbour recognition and the grant/deny decision.

use serde::{Deserialize, Serialize};

use super::db::{EnrollmentDb, StoredEmbedding};
use super::embed::FaceEmbedding;
use crate::error::FaceError;

pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoMatchCause {
    EmptyDatabase,
    AboveThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub matched: bool,
    /// Nearest identity, present whenever the database is non-empty.
    pub identity: Option<String>,
    /// Distance to the nearest stored embedding; `None` for an empty database.
    pub distance: Option<f64>,
    pub threshold: f64,
    pub cause: Option<NoMatchCause>,
}

/// Linear scan over every stored embedding. Identities are visited in
/// ascending order and only a strictly smaller distance replaces the best, so
/// ties go to the lexicographically smallest identity.
pub fn recognize(
    db: &EnrollmentDb,
    query: &FaceEmbedding,
    threshold: f64,
) -> Result<MatchResult, FaceError> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(FaceError::InvalidThreshold(threshold));
    }
    let q = StoredEmbedding::from_embedding(query);
    let mut best: Option<(&str, f64)> = None;
    for (name, recs) in db.entries() {
        for r in recs {
            let d = r.distance(&q);
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((name, d));
            }
        }
    }
    Ok(match best {
        None => MatchResult {
            matched: false,
            identity: None,
            distance: None,
            threshold,
            cause: Some(NoMatchCause::EmptyDatabase),
        },
        Some((name, d)) => {
            let matched = d <= threshold;
            MatchResult {
                matched,
                identity: Some(name.to_string()),
                distance: Some(d),
                threshold,
                cause: (!matched).then_some(NoMatchCause::AboveThreshold),
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum AuthEvent {
    Granted {
        identity: String,
        distance: f64,
    },
    Denied {
        best_distance: Option<f64>,
        cause: NoMatchCause,
    },
}

impl AuthEvent {
    pub fn is_granted(&self) -> bool {
        matches!(self, AuthEvent::Granted { .. })
    }
}

pub fn gate_decision(result: &MatchResult) -> AuthEvent {
    match (result.matched, &result.identity, result.distance) {
        (true, Some(identity), Some(distance)) => AuthEvent::Granted {
            identity: identity.clone(),
            distance,
        },
        _ => AuthEvent::Denied {
            best_distance: result.distance,
            cause: result.cause.unwrap_or(NoMatchCause::AboveThreshold),
        },
    }
}
