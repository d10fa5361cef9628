"""Named experiments driven by scenario configs, and their report files.

Every experiment returns an :class:`ExperimentResult` holding CSV traces and
a list of checks (quantity, value, tolerance).  Nothing here reads the wall
clock, so a rerun with the same config and seed writes identical files.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .calibration import (FluxCalibrationConfig, PlanGrid, calibrate_compensation,
                          calibrate_flux_line, calibrate_gate_phase, check_plan, plan_mux,
                          random_transfer_function)
from .calibration.crosstalk import chevron_freqs, default_lengths
from .calibration.expfit import CollapseWarning
from .calibration.freqplan import FrequencyPlan
from .config import ConfigError, Section, section
from .device import (AnalogLoModel, Compensation, CrosstalkScenario, FluxQubit, GatePhases,
                     TransferFunction, chevron_center, chevron_map)
from .errors import QctrlError
from .pulselang import (check_phase_coherence, parse_with_diagnostics,
                        schedule_with_diagnostics, simulate_phase_coherence)
from .readout import PfbConfig, assign_bin, loopback
from .stability import phase_stability

EXPERIMENTS = ("mux-loopback", "predistort", "phase-stability", "crosstalk", "gate-phase",
               "plan-mux", "check-program")


class ProgramDiagnosticsError(QctrlError):
    """The pulse program did not parse or schedule."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    comparison: str = "<="  # value <= tolerance, or ">=" / "=="

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.value):
            return False
        if self.comparison == "<=":
            return self.value <= self.tolerance
        if self.comparison == ">=":
            return self.value >= self.tolerance
        return self.value == self.tolerance

    def to_dict(self):
        return {"name": self.name, "value": self.value, "tolerance": self.tolerance,
                "comparison": self.comparison, "passed": self.passed}


@dataclass(frozen=True)
class Trace:
    name: str  # file stem
    header: tuple
    rows: list


@dataclass
class ExperimentResult:
    experiment: str
    seed: int
    traces: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> dict:
        return {"experiment": self.experiment, "seed": self.seed, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks],
                "artifacts": [t.name + ".csv" for t in self.traces], "info": self.info}


def export_report(result: ExperimentResult, out_dir) -> list[Path]:
    """One CSV per trace plus ``summary.json``; returns the written paths."""
    if not result.traces and not result.checks:
        raise QctrlError("nothing to report: no traces and no checks")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"cannot write to {out}")
    paths = [io.write_csv(out / f"{t.name}.csv", t.header, t.rows) for t in result.traces]
    summary = out / "summary.json"
    summary.write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n")
    return paths + [summary]


def _path(cfg: dict, rel: str) -> Path:
    p = Path(rel)
    return p if p.is_absolute() else Path(cfg.get("_dir", ".")) / p


# ---------------------------------------------------------------- experiments

def run_mux_loopback(cfg: dict, seed: int) -> ExperimentResult:
    s = section(cfg, "mux")
    f_dac, f_adc = s.freq("f_dac"), s.freq("f_adc")
    n_adc = s.number("n_adc", 32768, int)
    noise = s.number("noise_rms", 0.0)
    tones = []
    for i, t in enumerate(s.list("tones")):
        ts = Section(t, f"mux.tones[{i}]")
        tones.append((ts.freq("freq"), ts.number("amp"), ts.angle("phase", 0.0)))
    got = loopback(tones, f_dac, f_adc, n_adc, PfbConfig(), noise_rms=noise, seed=seed)
    rows, amp_err, ph_err = [], 0.0, 0.0
    for i, ((f, a, ph), z) in enumerate(zip(tones, got)):
        ea = abs(abs(z) - a) / a
        ep = abs(math.degrees(np.angle(z * np.exp(-1j * ph))))
        amp_err, ph_err = max(amp_err, ea), max(ph_err, ep)
        rows.append((i, f, assign_bin(f, f_adc), a, abs(z), math.degrees(ph),
                     math.degrees(np.angle(z)), ea, ep))
    header = ("tone", "freq_hz", "bin", "amp_in", "amp_out", "phase_in_deg", "phase_out_deg",
              "amp_rel_error", "phase_error_deg")
    res = ExperimentResult("mux-loopback", seed, [Trace("tones", header, rows)])
    res.checks += [Check("max_amplitude_rel_error", float(amp_err), s.number("amp_tol", 0.01)),
                   Check("max_phase_error_deg", float(ph_err), s.number("phase_tol_deg", 1.0))]
    return res


def _transfer_function(s: Section) -> TransferFunction:
    terms = []
    for i, t in enumerate(s.list("terms")):
        ts = Section(t, f"{s.name}.terms[{i}]")
        terms.append((ts.number("a"), ts.time("tau")))
    return TransferFunction(tuple(terms))


def run_predistort(cfg: dict, seed: int) -> ExperimentResult:
    s = section(cfg, "predistort")
    q = FluxQubit(s.freq("f_sweet"), s.number("curvature"), s.number("flux_gain", 1.0))
    fc = FluxCalibrationConfig(target_detuning=s.freq("target_detuning"), f_s=s.freq("f_s"),
                               horizon=s.time("horizon"), n_fit_points=s.number("fit_points", 1500, int),
                               n_terms=s.number("n_terms", 4, int))
    settle_at, settle_tol = s.time("settle_time", 10.0), s.number("settle_tol", 1e-3)
    approach_at, approach_tol = s.time("approach_time", 1.0), s.number("approach_tol", 1e-2)
    method = s.text("method", "ramsey")
    if "line" in s:
        lines = [_transfer_function(s.table("line"))]
    else:
        rng = np.random.default_rng(seed)
        lines = [random_transfer_function(rng, f_s=fc.f_s) for _ in range(s.number("n_lines", 1, int))]
    export = s.number("export_samples", 2048, int)
    res = ExperimentResult("predistort", seed)
    line_rows, worst_settle, worst_approach, n_fail = [], 0.0, 0.0, 0
    for k, line in enumerate(lines):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CollapseWarning)
            cal = calibrate_flux_line(q, line, fc, method)
        e_settle, e_approach = cal.settle_error(settle_at), cal.settle_error(approach_at)
        worst_settle, worst_approach = max(worst_settle, e_settle), max(worst_approach, e_approach)
        n_fail += not (e_settle <= settle_tol and e_approach <= approach_tol)
        line_rows.append((k, len(line.terms), repr(line.terms), repr(cal.fit.terms), e_settle, e_approach))
        if k == 0:
            fitted = cal.fit(cal.measured.t)
            sel = np.unique(np.geomspace(1, len(cal.measured), 2000).astype(int) - 1)
            res.traces.append(Trace("fit", ("t_s", "measured", "fitted", "residual"),
                                    [(cal.measured.t[i], cal.measured.response[i], fitted[i],
                                      cal.measured.response[i] - fitted[i]) for i in sel]))
            cl = cal.closed_loop
            sel = np.unique(np.geomspace(1, len(cl), 2000).astype(int) - 1)
            res.traces.append(Trace("closed_loop", ("t_s", "response", "error"),
                                    [(cl.t[i], cl.response[i], cl.response[i] - 1.0) for i in sel]))
            d = cal.drive[:export]
            res.traces.append(Trace("drive", io.ENVELOPE_HEADER,
                                    list(zip(range(len(d)), d.real, np.zeros(len(d))))))
    res.traces.append(Trace("lines", ("line", "n_terms", "true_terms", "fitted_terms",
                                      "settle_error", "approach_error"), line_rows))
    if len(lines) == 1:
        res.checks += [Check("max_error_after_settle_time", worst_settle, settle_tol),
                       Check("max_error_after_approach_time", worst_approach, approach_tol)]
    res.checks.append(Check("failed_lines", float(n_fail), s.number("max_failures", 0.0)))
    res.info.update({"lines": len(lines), "worst_settle_error": worst_settle,
                     "worst_approach_error": worst_approach})
    return res


def _load_program(cfg: dict, s: Section):
    path = _path(cfg, s.text("path"))
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read program {path}: {e.strerror}") from e
    prog, diags = parse_with_diagnostics(text, s.text("path"))
    if prog is None:
        raise ProgramDiagnosticsError(diags)
    sched, sdiags = schedule_with_diagnostics(prog)
    if sched is None:
        raise ProgramDiagnosticsError(sdiags)
    return prog, list(diags) + [d for d in sdiags if d not in diags]


def run_phase_stability(cfg: dict, seed: int) -> ExperimentResult:
    prog, _ = _load_program(cfg, section(cfg, "program"))
    s = section(cfg, "stability")
    constraint = s.text("constraint", prog.constraints[0].name if prog.constraints else "")
    n_reps, spacing = s.number("n_reps", 10_000, int), s.time("spacing")
    d = s.table("drift", required=False)
    drift = AnalogLoModel({ch.name: 0.0 for ch in prog.channels if ch.lo is not None},
                          pll_period=d.time("pll_period", "360 s"),
                          pll_amplitude=d.angle("pll_amplitude", "0.2 rad"),
                          thermal_rate=d.angle("thermal_rate_per_hour", "0.05 rad"),
                          walk_sigma=d.angle("walk_sigma", "1e-3 rad"), seed=seed)
    res = ExperimentResult("phase-stability", seed)
    rows = {}
    for model in s.list("models", ["dds", "analog_lo"]):
        r = phase_stability(prog, constraint, model, n_reps, spacing, drift)
        rows[model] = r
        res.traces.append(Trace(f"phase_{model}", ("rep", "t_s", "phase_rad"), r.rows()))
        res.info[model] = {"spread_rad": r.spread, "period_s": r.period, "amplitude_rad": r.amplitude}
    flat_tol = s.number("flat_tol", 1e-10)
    if "dds" in rows:
        res.checks.append(Check("dds_phase_spread_rad", rows["dds"].spread, flat_tol))
    if "analog_lo" in rows:
        r = rows["analog_lo"]
        err = abs(r.period - drift.pll_period) / drift.pll_period if r.period else math.inf
        res.checks.append(Check("analog_lo_period_rel_error", err, s.number("period_tol", 0.05)))
        res.checks.append(Check("analog_lo_phase_spread_rad", r.spread, 10 * flat_tol, ">="))
    return res


def run_crosstalk(cfg: dict, seed: int) -> ExperimentResult:
    s = section(cfg, "crosstalk")
    kw = dict(f_a=s.freq("f_a"), f_b=s.freq("f_b"), rabi=s.freq("rabi", 2e6),
              drive_amp=s.number("drive_amp", 1.0), drive_phase=s.angle("drive_phase", 0.0))
    if "stark_shift" in s:
        sc = CrosstalkScenario.with_stark_shift(s.freq("stark_shift"), s.number("to_a", 0.25),
                                                s.number("to_b", 0.0), **kw)
    else:
        m = np.eye(3, dtype=complex)
        for i, row in enumerate(s.list("matrix")):
            for j, v in enumerate(row):
                m[i, j] = complex(v[0], v[1]) if isinstance(v, list) else v
        sc = CrosstalkScenario(matrix=m, stark_coeff=s.number("stark_coeff"), **kw)
    lengths = default_lengths(sc)
    freqs = chevron_freqs(sc, s.freq("span", 20e6), s.freq("step", 0.05e6))
    before = chevron_map(sc, Compensation(), freqs, lengths)
    cal = calibrate_compensation(sc, lengths)
    after = chevron_map(sc, cal.compensation, freqs, lengths)
    res = ExperimentResult("crosstalk", seed)
    res.traces += [Trace("chevron_before", ("x", "y", "value"),
                         [(f, t, before[i, j]) for i, f in enumerate(freqs) for j, t in enumerate(lengths)]),
                   Trace("chevron_after", ("x", "y", "value"),
                         [(f, t, after[i, j]) for i, f in enumerate(freqs) for j, t in enumerate(lengths)])]
    c = cal.compensation
    res.traces.append(Trace("compensation", ("line", "amplitude", "phase_deg"),
                            [("a", c.amp_a, math.degrees(c.phase_a)), ("b", c.amp_b, math.degrees(c.phase_b))]))
    res.info.update({"center_before_hz": chevron_center(freqs, before), "center_after_hz": cal.center,
                     "notes": list(cal.notes)})
    res.checks.append(Check("center_error_hz", abs(cal.center - sc.bare_sum), s.freq("center_tol", 0.05e6)))
    if "expected_phase" in s:
        err = abs(math.degrees(np.angle(np.exp(1j * (c.phase_a - s.angle("expected_phase"))))))
        res.checks.append(Check("phase_a_error_deg", err, s.number("phase_tol_deg", 2.0)))
    return res


def run_gate_phase(cfg: dict, seed: int) -> ExperimentResult:
    s = section(cfg, "gate")
    g = GatePhases(theta=s.angle("theta", 45.0), phi_d=s.angle("phi_d", 0.0), phi_01=s.angle("phi_01", 0.0),
                   phi_10=s.angle("phi_10", 0.0), phi_zz=s.angle("phi_zz", 0.0))
    blocks = s.number("blocks", 402, int)
    r = calibrate_gate_phase(g, blocks)
    res = ExperimentResult("gate-phase", seed, [Trace("sweep", ("phi_a_deg", "p11"), list(zip(r.sweep_deg, r.p11)))])
    expected = math.degrees(np.mod(-g.phi_11, 2 * np.pi))
    err = abs((math.degrees(r.phi_a) - expected + 180.0) % 360.0 - 180.0)
    res.checks += [Check("optimum_error_deg", err, s.number("tol_deg", 0.5)),
                   Check("sensitivity_per_deg", r.sensitivity, s.number("min_sensitivity", 0.10), ">=")]
    res.info.update({"phi_a_deg": math.degrees(r.phi_a), "phi_11_deg": math.degrees(r.phi_11),
                     "phi_01_deg": math.degrees(r.phi_01), "phi_10_deg": math.degrees(r.phi_10),
                     "phi_zz_deg": math.degrees(r.phi_zz), "peak_drop_1deg": r.peak_drop})
    return res


_PLAN_HEADER = ("tone", "resonator_hz", "dac_tone_hz", "offset_hz", "sideband", "bin")


def run_plan_mux(cfg: dict, seed: int) -> ExperimentResult:
    s = section(cfg, "plan")
    res_f = [Section({"f": f}, "plan.resonators").freq("f") for f in s.list("resonators")]
    f_dac, f_adc = s.freq("f_dac"), s.freq("f_adc")
    g = s.table("grid", required=False)
    grid = PlanGrid(g.freq("lo_min", 0.0), g.freq("lo_max", 12e9), g.freq("lo_step", 5e6),
                    g.freq("mix_step", 1e6), f_dac)
    res = ExperimentResult("plan-mux", seed)
    if "validate" in s:
        v = s.table("validate")
        offsets = tuple(Section({"f": f}, "plan.validate.offsets").freq("f") for f in v.list("offsets"))
        sidebands = tuple(int(x) for x in v.list("sidebands", [1] * len(offsets)))
        f_mix = v.freq("f_mix")
        given = FrequencyPlan(f_mix, v.freq("lo", 0.0), offsets, sidebands,
                              tuple(assign_bin(f_mix + f, f_adc) for f in offsets))
        bad = check_plan(given, res_f, f_dac, f_adc)
        res.traces.append(Trace("plan_given", _PLAN_HEADER, given.rows()))
        res.checks.append(Check("given_plan_violations", float(len(bad)), 0.0, "=="))
        res.info["given_plan_violations"] = [str(b) for b in bad]
    found = plan_mux(res_f, f_dac, f_adc, grid)
    res.traces.append(Trace("plan", _PLAN_HEADER, found.rows()))
    res.checks.append(Check("found_plan_violations", float(len(check_plan(found, res_f, f_dac, f_adc))), 0.0, "=="))
    res.info.update({"f_mix_hz": found.f_mix, "lo_hz": found.lo})
    return res


def run_check_program(cfg: dict, seed: int) -> ExperimentResult:
    prog, diags = _load_program(cfg, section(cfg, "program"))
    s = section(cfg, "check", required=False)
    models = s.list("models", ["dds"])
    names = s.list("constraints", [c.name for c in prog.constraints])
    numeric = "numeric_reps" in s
    res = ExperimentResult("check-program", seed)
    rows = []
    for name in names:
        for model in models:
            r = check_phase_coherence(prog, name, model)
            rows.append((name, model, "static", r.passed, r.worst_drift, r.drift_per_rep, ""))
            res.checks.append(Check(f"{name}/{model}/worst_drift_rad", r.worst_drift, 0.0, "=="))
            if numeric:
                n = simulate_phase_coherence(prog, name, model, s.number("numeric_reps", 100, int))
                rows.append((name, model, "numeric", n.passed, n.worst_drift, n.drift_per_rep, n.variance))
    res.traces.append(Trace("coherence", ("constraint", "model", "method", "passed", "worst_drift_rad",
                                          "drift_per_rep_rad", "variance_rad2"), rows))
    res.info["warnings"] = [str(d) for d in diags if d.severity != "error"]
    return res


RUNNERS = {
    "mux-loopback": run_mux_loopback,
    "predistort": run_predistort,
    "phase-stability": run_phase_stability,
    "crosstalk": run_crosstalk,
    "gate-phase": run_gate_phase,
    "plan-mux": run_plan_mux,
    "check-program": run_check_program,
}


def run_experiment(name: str, cfg: dict, seed: int = 0) -> ExperimentResult:
    if name not in RUNNERS:
        raise KeyError(name)
    return RUNNERS[name](cfg, seed)
