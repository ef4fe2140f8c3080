use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::formula::{Assignment, Clause};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accepted,
    Rejected,
    NotDrawn,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub clause: Clause,
    pub decision: Decision,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceCounts {
    pub accepted: usize,
    pub rejected: usize,
    /// Clauses examined, including ones whose coin failed.
    pub scanned: usize,
}

/// Ordered record of a generation run.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationTrace {
    pub variant: &'static str,
    pub seed: u64,
    /// `p1 + p2 - p1 * p2` for the two-round process.
    pub derived_p: Option<f64>,
    pub events: Vec<TraceEvent>,
    /// Satisfying assignment of the output; absent for unrestricted output.
    pub witness: Option<Assignment>,
    pub counts: TraceCounts,
}

impl GenerationTrace {
    pub(crate) fn new(variant: &'static str, seed: u64) -> Self {
        GenerationTrace {
            variant,
            seed,
            derived_p: None,
            events: Vec::new(),
            witness: None,
            counts: TraceCounts::default(),
        }
    }

    pub(crate) fn record(&mut self, clause: Clause, decision: Decision) {
        self.counts.scanned += 1;
        match decision {
            Decision::Accepted => self.counts.accepted += 1,
            Decision::Rejected => self.counts.rejected += 1,
            Decision::NotDrawn => {}
        }
        self.events.push(TraceEvent { clause, decision });
    }

    pub fn accepted_clauses(&self) -> impl Iterator<Item = &Clause> {
        self.events
            .iter()
            .filter(|e| e.decision == Decision::Accepted)
            .map(|e| &e.clause)
    }

    /// Line-oriented JSON: a header object, one object per event, and a
    /// closing summary. Events look like
    /// `{"clause":[1,-2,3],"decision":"accepted"}`.
    pub fn to_jsonl(&self, n: usize, k: usize) -> String {
        #[derive(Serialize)]
        struct Header<'a> {
            header: HeaderBody<'a>,
        }
        #[derive(Serialize)]
        struct HeaderBody<'a> {
            n: usize,
            k: usize,
            variant: &'a str,
            seed: u64,
            #[serde(skip_serializing_if = "Option::is_none")]
            derived_p: Option<f64>,
        }
        #[derive(Serialize)]
        struct Event {
            clause: Vec<i64>,
            decision: Decision,
        }
        #[derive(Serialize)]
        struct Summary {
            summary: SummaryBody,
        }
        #[derive(Serialize)]
        struct SummaryBody {
            accepted: usize,
            rejected: usize,
            scanned: usize,
            witness: Option<Vec<i64>>,
        }

        let mut out = String::new();
        let header = Header {
            header: HeaderBody {
                n,
                k,
                variant: self.variant,
                seed: self.seed,
                derived_p: self.derived_p,
            },
        };
        writeln!(out, "{}", serde_json::to_string(&header).unwrap()).unwrap();
        for e in &self.events {
            let line = Event {
                clause: e.clause.to_dimacs(),
                decision: e.decision,
            };
            writeln!(out, "{}", serde_json::to_string(&line).unwrap()).unwrap();
        }
        let summary = Summary {
            summary: SummaryBody {
                accepted: self.counts.accepted,
                rejected: self.counts.rejected,
                scanned: self.counts.scanned,
                witness: self.witness.as_ref().map(|w| {
                    w.values()
                        .iter()
                        .enumerate()
                        .map(|(v, &b)| if b { v as i64 + 1 } else { -(v as i64 + 1) })
                        .collect()
                }),
            },
        };
        writeln!(out, "{}", serde_json::to_string(&summary).unwrap()).unwrap();
        out
    }
}
