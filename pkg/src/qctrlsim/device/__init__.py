"""Simulated devices used as ground truth by the calibration routines."""

from .crosstalk import (Compensation, CrosstalkScenario, chevron_center, chevron_map, contrast,
                        rabi_population)
from .flux import (FluxQubit, TransferFunction, apply_channel, impulse_response, qubit_freq,
                   ramsey_population, ramsey_traces, spectroscopy_population)
from .gates import (GatePhases, amplified_populations, bell_state, bswap_unitary, run_gate_sequence,
                    z_gates)
from .parametric import (AnalogLoModel, ParametricScenario, iswap_readout_phase,
                         parametric_project)

__all__ = [
    "Compensation", "CrosstalkScenario", "chevron_center", "chevron_map", "contrast",
    "rabi_population", "FluxQubit", "TransferFunction", "apply_channel", "impulse_response",
    "qubit_freq", "ramsey_population", "ramsey_traces", "spectroscopy_population",
    "GatePhases", "amplified_populations", "bell_state", "bswap_unitary", "run_gate_sequence",
    "z_gates", "AnalogLoModel", "ParametricScenario", "iswap_readout_phase", "parametric_project",
]
