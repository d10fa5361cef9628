"""Calibration routines run against the simulated device."""

from .crosstalk import CompensationResult, calibrate_compensation
from .detuning import DetuningTrace, extract_detuning, signals_from_populations
from .expfit import CollapseWarning, ExpFitResult, fit_exponentials, refine
from .flux import (FluxCalibration, FluxCalibrationConfig, ResponseTrace, calibrate_flux_line,
                   merge_calibrations, ramsey_response, random_transfer_function,
                   spectroscopy_response)
from .freqplan import (FrequencyPlan, PlanGrid, Violation, check_plan, make_plan, reference_plan,
                       plan_mux, validate_plan)
from .gatephase import GatePhaseResult, calibrate_gate_phase, companion_phase, sweep_gate_phase
from .lorentz import LorentzFit, fit_lorentzian, lorentzian
from .predistort import inverse_filter, predistort

__all__ = [
    "CompensationResult", "calibrate_compensation",
    "DetuningTrace", "extract_detuning", "signals_from_populations",
    "CollapseWarning", "ExpFitResult", "fit_exponentials", "refine",
    "FluxCalibration", "FluxCalibrationConfig", "ResponseTrace", "calibrate_flux_line",
    "merge_calibrations", "ramsey_response", "random_transfer_function", "spectroscopy_response",
    "FrequencyPlan", "PlanGrid", "Violation", "check_plan", "make_plan", "reference_plan",
    "plan_mux", "validate_plan",
    "GatePhaseResult", "calibrate_gate_phase", "companion_phase", "sweep_gate_phase",
    "LorentzFit", "fit_lorentzian", "lorentzian",
    "inverse_filter", "predistort",
]
