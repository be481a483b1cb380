"""Robust phase estimation (RPE) and Bayesian RPE for single-qubit calibration."""

from ._core import (
    EstimateReport,
    EstimationError,
    ModelFamily,
    ReplayError,
    RoundRecord,
    ScalingRow,
    Schedule,
    Sequence,
    SignalModel,
    SweepResult,
    SweepRow,
    analytic_records,
    brpe_estimate,
    brpe_posterior,
    build_gate_schedule,
    build_ramsey_schedule,
    circuit_probability,
    confidence_score,
    delta_threshold,
    fidelity_error,
    load_replay,
    outcome_probability,
    rpe_estimate,
    run_sweep,
    scaling_study,
    simulate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
