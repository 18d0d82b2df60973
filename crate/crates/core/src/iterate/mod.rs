//! The inductive construction of matrix orderings: alternating projection
//! and d-minimalization stages over the initial cone, with a ledger of
//! certified elements, properness probes and relation spot-checks.

pub mod run;
pub mod stage;

pub use run::{
    limit_member, limit_member_at, run_iteration, run_iteration_with, IterationConfig, IterationReport, IterationRun,
    LedgerEntry, LimitVerdict, Outcome, RelationSpot, StageReport, LEDGER_EPS, LIMIT_EPS,
};
pub use stage::{step_schedule, CachedOracle, DMinStage, ProjectionStage, QueryCache, StepKind};
