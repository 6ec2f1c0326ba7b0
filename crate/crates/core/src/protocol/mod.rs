//! Pulse sequences for the three pump/probe experiments: pumping to steady
//! state, stroboscopic probing of the dark relaxation, and the Ramsey-like
//! field switch of the decoherence measurement.

mod engine;
mod spec;
mod states;

pub use engine::{
    ground_populations, oscillation_frequency_prediction, subtract_traces, PumpOutcome, RawTrace, Sampling,
    Simulator, StateDiagnostics,
};
pub use spec::{
    Beam, ExperimentSpec, FieldSpec, Numerics, ProtocolKind, PulseSequence, RelaxationSpec, Segment, Timing,
    VaporSpec, PROBE_CALIBRATION_HZ, PUMP_CALIBRATION_HZ,
};
pub use states::{dark_state_weights, expectation, inner, m_only_state, normalized_f2_block, DarkStateWeights, ReferenceStates};
