//! The iterative conjugacy scheme: parameters, state, the inductive step,
//! the driver loop and decay diagnostics.

mod params;
mod run;
mod state;
mod step;

pub use params::{
    calibrate_delta, invert_exponent, theoretical_parameters, theoretical_parameters_with, KamSchedule, Profile,
    TheoreticalParameters,
};
pub use run::{run, verify_decay, DecayReport, JsonlSink, RunOutcome, TraceRecord, TraceSink, CALIBRATION_PROBES, CALIBRATION_SEED};
pub use state::{ActionState, StateNorms};
pub use step::{inductive_step, OmegaReport, StepOutcome, StepReport, RELATION_BUDGET};
