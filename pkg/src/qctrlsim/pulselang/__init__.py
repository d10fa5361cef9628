"""Timed pulse-program language: parse, schedule, verify and execute."""

from .ast import ChanRef, PulseProgram, Quantity, format_program
from .coherence import (CoherenceConstraint, CoherenceReport, check_phase_coherence,
                        constraint_phases, simulate_phase_coherence, with_repetitions)
from .execute import ExecutionResult, HardwareConfig, execute, trace
from .parser import Diagnostic, ParseError, parse, parse_file, parse_with_diagnostics
from .schedule import (Schedule, ScheduleError, TimedInstruction, schedule,
                       schedule_with_diagnostics)

__all__ = [
    "ChanRef", "PulseProgram", "Quantity", "format_program",
    "CoherenceConstraint", "CoherenceReport", "check_phase_coherence",
    "constraint_phases", "simulate_phase_coherence", "with_repetitions",
    "ExecutionResult", "HardwareConfig", "execute", "trace",
    "Diagnostic", "ParseError", "parse", "parse_file", "parse_with_diagnostics",
    "Schedule", "ScheduleError", "TimedInstruction", "schedule", "schedule_with_diagnostics",
]
