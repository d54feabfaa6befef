use std::fmt::Write as _;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{AsynchronyModel, EventCounts, ENVELOPE_TOLERANCE};

/// Header of the trace CSV export.
pub const CSV_HEADER: &str = "tick,cycles,max_block_error,objective,envelope";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub tick: u64,
    /// Completed communication cycles `c(k)`.
    pub cycles: u64,
    /// Largest agent error to the run's fixed point.
    pub max_block_error: f64,
    /// Unregularized objective at agent 0's local copy.
    pub objective: f64,
    /// `q^{c(k)} · D_o`.
    pub envelope: f64,
    pub agent_errors: Vec<f64>,
    /// Block-max distance of the owners' blocks to the run's fixed point.
    pub state_error: f64,
    /// Block-max distance of the owners' blocks to the reference point.
    pub reference_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub num_agents: usize,
    pub dim: usize,
    pub model: AsynchronyModel,
    pub record_every: u64,
    pub q: f64,
    pub d_o: f64,
    /// Errors below this are not counted as envelope violations online.
    pub roundoff_floor: f64,
    pub gammas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub stepsizes_valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeViolation {
    pub tick: u64,
    pub cycles: u64,
    pub agent: usize,
    pub error: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub ticks: u64,
    pub cycles: u64,
    pub counts: EventCounts,
    /// Agent-ticks, over every tick, at which an error exceeded the envelope.
    pub envelope_violations: u64,
    pub first_violation: Option<EnvelopeViolation>,
    pub final_max_block_error: f64,
    pub final_state_error: f64,
    pub final_reference_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub metadata: RunMetadata,
    pub summary: RunSummary,
    pub rows: Vec<TraceRow>,
    pub final_state: Vec<f64>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    metadata: &'a RunMetadata,
    summary: &'a RunSummary,
}

impl RunTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.tick, r.cycles, r.max_block_error, r.objective, r.envelope);
        }
        out
    }

    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }

    /// Run metadata and summary as pretty JSON.
    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&Sidecar { metadata: &self.metadata, summary: &self.summary })
            .expect("plain data serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeCheck {
    pub holds: bool,
    pub first_violation: Option<EnvelopeViolation>,
    pub violations: u64,
}

/// Checks `‖x_i(k) − x*‖_{2,p} ≤ q^{c(k)} · D_o` on every recorded row and agent.
pub fn verify_contraction_envelope(trace: &RunTrace, q: f64, d_o: f64) -> EnvelopeCheck {
    let mut check = EnvelopeCheck { holds: true, first_violation: None, violations: 0 };
    for row in &trace.rows {
        let envelope = d_o * q.powi(row.cycles.min(i32::MAX as u64) as i32);
        for (agent, &error) in row.agent_errors.iter().enumerate() {
            if error > envelope * (1.0 + ENVELOPE_TOLERANCE) {
                check.holds = false;
                check.violations += 1;
                check.first_violation.get_or_insert(EnvelopeViolation {
                    tick: row.tick,
                    cycles: row.cycles,
                    agent,
                    error,
                    envelope,
                });
            }
        }
    }
    check
}
