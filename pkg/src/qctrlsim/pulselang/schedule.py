"""Absolute-time scheduling of pulse programs.

Times are integer generator samples.  The scheduler keeps a reference time
``ref`` and a cursor per channel (end of its last play):

* ``play`` without ``@`` starts at ``max(ref, cursor)``; with ``@ t`` at ``ref + t``.
* ``wait t`` advances ``ref``; ``sync`` moves ``ref`` to the latest cursor.
* ``repeat N period P`` starts iteration ``i`` at ``start + i*P``.  Without a
  period, ``P`` is the length of iteration 0.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .. import dsp
from ..errors import QctrlError
from .ast import (ANGLE_UNITS, FREQ_UNITS, TIME_UNITS, EnvelopeDecl, PhaseReset, Play,
                  PulseProgram, Quantity, Repeat, SetFreq, SetGain, SetPhase, Sync,
                  Trigger, Wait, format_statement)
from .parser import BAD_VALUE, Diagnostic

INEXACT = "W001"
CONFLICT = "E101"

_FREQ_EXP = {"Hz": 0, "kHz": 3, "MHz": 6, "GHz": 9}
_TIME_EXP = {"ns": -9, "us": -6, "ms": -3, "s": 0}


class ScheduleError(QctrlError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class _Fail(Exception):
    def __init__(self, stmt, code, message):
        self.stmt, self.code, self.message = stmt, code, message


def exact(q: Quantity) -> Fraction:
    """The literal's value as an exact rational in SI units (radians stay radians)."""
    v = Fraction(q.value) if isinstance(q.value, int) else Fraction(repr(q.value))
    if q.unit in _FREQ_EXP:
        return v * Fraction(10) ** _FREQ_EXP[q.unit]
    if q.unit in _TIME_EXP:
        return v * Fraction(10) ** _TIME_EXP[q.unit]
    return v


def frequency_hz(q: Quantity) -> float:
    if q.unit not in FREQ_UNITS:
        raise ValueError(f"{q} is not a frequency")
    return float(exact(q))


def angle_rad(q: Quantity) -> float:
    if q.unit == "deg":
        return math.radians(q.value)
    if q.unit in ("rad", ""):
        return float(q.value)
    raise ValueError(f"{q} is not an angle")


def clock_rate(p: PulseProgram) -> Fraction:
    return exact(p.clock.rate)


@dataclass(frozen=True)
class TimedInstruction:
    """One scheduled action.

    ``index`` is the position in the unrolled program order, which is also the
    order register updates take effect in.  ``rep`` is the iteration of the
    outermost ``repeat`` (``None`` outside it).
    """

    channel: str
    action: str
    start: int
    duration: int
    index: int
    stmt: object = field(compare=False, repr=False)
    rep: int | None = None
    tone: int | None = None
    value: object = None

    @property
    def stop(self) -> int:
        return self.start + self.duration


@dataclass
class Schedule:
    instructions: list
    rep_starts: list  # start sample of each outer-repeat iteration
    rep_period: int | None
    diagnostics: list
    end: int

    def __iter__(self):
        return iter(self.instructions)

    def __len__(self):
        return len(self.instructions)

    def on_channel(self, name: str) -> list:
        """Instructions of one channel in time order (ties keep program order)."""
        return sorted((i for i in self.instructions if i.channel == name),
                      key=lambda i: (i.start, i.index))


def _describe(stmt) -> str:
    return f"'{format_statement(stmt)[0].strip()}' (line {stmt.span.line})"


class _Scheduler:
    def __init__(self, p: PulseProgram, file: str, envelope_lengths: dict | None):
        self.p = p
        self.file = file
        self.rate = clock_rate(p)
        self.out: list[TimedInstruction] = []
        self.diags: list[Diagnostic] = []
        self.cursor = {c.name: 0 for c in p.channels}
        self.rep = None
        self.rep_starts: list[int] = []
        self.rep_period = None
        self.outer_seen = False
        self.lengths = envelope_lengths or {}

    # literal conversion

    def warn(self, stmt, message):
        span = stmt.span
        self.diags.append(Diagnostic(self.file, span.line, span.col, INEXACT, message, "warning"))

    def samples(self, q: Quantity, stmt, what="time") -> int:
        if q.unit == "":
            if not isinstance(q.value, int):
                raise _Fail(stmt, BAD_VALUE, f"{what} {q} is not a whole number of samples")
            n = q.value
        elif q.unit in TIME_UNITS:
            x = exact(q) * self.rate
            n = round(x)
            if n != x:
                self.warn(stmt, f"{what} {q} is {float(x):.6g} samples, rounded to {n}")
        else:
            raise _Fail(stmt, BAD_VALUE, f"{what} {q} must be in samples or a time unit")
        if n < 0:
            raise _Fail(stmt, BAD_VALUE, f"{what} {q} is negative")
        return int(n)

    def envelope_length(self, name: str, stmt) -> int:
        if name not in self.lengths:
            self.lengths[name] = envelope_dac_length(self.p.envelope(name), self.rate,
                                                         program_dir(self.p))
        return self.lengths[name]

    # emission

    def emit(self, channel, action, start, duration, stmt, tone=None, value=None):
        self.out.append(TimedInstruction(channel, action, int(start), int(duration), len(self.out),
                                         stmt, self.rep, tone, value))

    def run(self, body, ref: int) -> int:
        """Schedule ``body`` from reference time ``ref``; returns the final ref."""
        for s in body:
            ref = self.step(s, ref)
        return ref

    def step(self, s, ref: int) -> int:
        if isinstance(s, SetFreq):
            value = self.p.frequency(s.value) if isinstance(s.value, str) else s.value
            if value.unit not in FREQ_UNITS:
                raise _Fail(s, BAD_VALUE, f"{value} is not a frequency")
            self.emit(s.target.name, "set_freq", ref, 0, s, s.target.tone, value)
        elif isinstance(s, SetPhase):
            if s.value.unit not in ANGLE_UNITS and s.value.unit != "":
                raise _Fail(s, BAD_VALUE, f"{s.value} is not an angle")
            self.emit(s.target.name, "set_phase", ref, 0, s, s.target.tone, s.value)
        elif isinstance(s, SetGain):
            if s.value.unit != "" or not -1 <= s.value.value <= 1:
                raise _Fail(s, BAD_VALUE, f"gain {s.value} must be a plain number in [-1, 1]")
            self.emit(s.target.name, "set_gain", ref, 0, s, s.target.tone, s.value)
        elif isinstance(s, Play):
            dur = self.envelope_length(s.envelope, s)
            if s.at is None:
                start = max(ref, self.cursor[s.channel])
            else:
                start = ref + self.samples(s.at, s)
            self.emit(s.channel, "play", start, dur, s, value=s.envelope)
            self.cursor[s.channel] = max(self.cursor[s.channel], start + dur)
        elif isinstance(s, Trigger):
            t0 = ref if s.at is None else ref + self.samples(s.at, s)
            length = self.samples(s.length, s, "length")
            if s.every is None:
                times = [t0]
            else:
                if s.every.unit == "":
                    step = Fraction(self.samples(s.every, s, "interval"))
                else:
                    step = exact(s.every) * self.rate
                    if step <= 0:
                        raise _Fail(s, BAD_VALUE, "trigger interval must be positive")
                times = [t0 + round(i * step) for i in range(s.count)]
            for t in times:
                self.emit(s.readout, "trigger", t, length, s)
        elif isinstance(s, Wait):
            ref += self.samples(s.duration, s, "duration")
        elif isinstance(s, Sync):
            ref = max([ref] + list(self.cursor.values()))
        elif isinstance(s, PhaseReset):
            t = ref if s.at is None else ref + self.samples(s.at, s)
            chans = s.channels or tuple(self.cursor)
            for c in chans:
                self.emit(c, "phase_reset", t, 0, s)
        elif isinstance(s, Repeat):
            ref = self.repeat(s, ref)
        else:  # pragma: no cover - parser only builds the types above
            raise TypeError(s)
        return ref

    def repeat(self, s: Repeat, ref: int) -> int:
        outer = not self.outer_seen and self.rep is None
        if outer:
            self.outer_seen = True
        period = None if s.period is None else self.samples(s.period, s, "period")
        start = ref
        for i in range(s.count):
            it_start = start if period is None else start + i * period
            if outer:
                self.rep = i
                self.rep_starts.append(it_start)
            first = len(self.out)
            end = self.run(s.body, it_start)
            if period is None:
                ends = [end] + [ins.stop for ins in self.out[first:]]
                period = max(ends) - start
                if period == 0:
                    raise _Fail(s, BAD_VALUE, "repeat body has zero duration and no period")
        if outer:
            self.rep = None
            self.rep_period = period
        return start + s.count * period

    def check_conflicts(self):
        by_chan: dict = {}
        for ins in self.out:
            by_chan.setdefault(ins.channel, []).append(ins)
        for chan, items in by_chan.items():
            plays = sorted((i for i in items if i.action == "play"), key=lambda i: (i.start, i.index))
            for a, b in zip(plays, plays[1:]):
                if b.start < a.stop:
                    self.conflict(b.stmt, f"{_describe(b.stmt)} at sample {b.start} overlaps "
                                          f"{_describe(a.stmt)} playing [{a.start}, {a.stop}) on {chan}")
            resets = [i for i in items if i.action == "phase_reset"]
            for r in resets:
                for pl in plays:
                    if pl.start < r.start < pl.stop:
                        self.conflict(r.stmt, f"{_describe(r.stmt)} at sample {r.start} falls inside "
                                              f"{_describe(pl.stmt)} playing [{pl.start}, {pl.stop}) on {chan}")

    def conflict(self, stmt, message):
        span = stmt.span
        self.diags.append(Diagnostic(self.file, span.line, span.col, CONFLICT, message))


def program_dir(p: PulseProgram) -> str | None:
    """Directory relative envelope file paths resolve against."""
    if p.source.startswith("<"):
        return None
    return os.path.dirname(os.path.abspath(p.source))


def envelope_dac_length(decl: EnvelopeDecl, rate: Fraction, base_dir=None) -> int:
    """Length in generator samples of a declared envelope."""
    return len(build_envelope(decl, rate, base_dir)) * (dsp.INTERP_FACTOR if decl.interp else 1)


def _env_samples(q, rate, divisor, what, decl):
    if isinstance(q, str):
        raise ValueError(f"envelope {decl.name}: {what} must be a number")
    if q.unit in TIME_UNITS:
        return float(exact(q) * rate / divisor)
    if q.unit:
        raise ValueError(f"envelope {decl.name}: {what} {q} has a bad unit")
    return float(q.value)


def build_envelope(decl: EnvelopeDecl, rate: Fraction, base_dir=None) -> dsp.Envelope:
    """Construct the dsp envelope for a declaration (before interpolation)."""
    return _build_envelope_cached(decl, rate, None if base_dir is None else str(base_dir))


@lru_cache(maxsize=256)
def _build_envelope_cached(decl, rate, base_dir):
    div = dsp.INTERP_FACTOR if decl.interp else 1
    if decl.shape == "file":
        from ..io import load_envelope_csv

        path = decl.param("path")
        if not isinstance(path, str):
            raise ValueError(f"envelope {decl.name}: file envelopes need path=\"...\"")
        if base_dir is not None and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        samples = load_envelope_csv(path)
        return dsp.Envelope(samples, div, "file")
    length_q = decl.param("length")
    if length_q is None:
        raise ValueError(f"envelope {decl.name} needs length=")
    length = int(round(_env_samples(length_q, rate, div, "length", decl)))
    if decl.shape == "flat":
        amp = decl.param("amplitude", Quantity(1.0))
        return dsp.flat(length, float(amp.value), div)
    if decl.shape == "triangle":
        return dsp.triangle(length, div)
    sigma = _env_samples(decl.param("sigma", Quantity(length / 4)), rate, div, "sigma", decl)
    if decl.shape == "gaussian":
        return dsp.gaussian(length, sigma, div)
    alpha = decl.param("alpha", Quantity(0.0))
    return dsp.drag(length, sigma, float(alpha.value), div)


def schedule_with_diagnostics(p: PulseProgram, file: str | None = None):
    """Schedule ``p``; returns ``(Schedule or None, diagnostics)``."""
    file = p.source if file is None else file
    s = _Scheduler(p, file, None)
    try:
        end = s.run(p.body, 0)
    except _Fail as f:
        span = f.stmt.span
        s.diags.append(Diagnostic(file, span.line, span.col, f.code, f.message))
        return None, s.diags
    except (ValueError, dsp.DomainError) as e:
        s.diags.append(Diagnostic(file, 0, 0, BAD_VALUE, str(e)))
        return None, s.diags
    s.check_conflicts()
    if any(d.severity == "error" for d in s.diags):
        return None, s.diags
    end = max([end] + [i.stop for i in s.out])
    return Schedule(s.out, s.rep_starts, s.rep_period, s.diags, end), s.diags


def schedule(p: PulseProgram) -> Schedule:
    """Deterministic absolute-time schedule; raises ScheduleError on conflicts."""
    sched, diags = schedule_with_diagnostics(p)
    if sched is None:
        raise ScheduleError([d for d in diags if d.severity == "error"])
    return sched

