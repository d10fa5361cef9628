"""Syntax tree for pulse programs, plus the canonical pretty-printer.

Source spans are carried on every node but excluded from equality, so a
program printed and parsed again compares equal to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

FREQ_UNITS = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9}
TIME_UNITS = {"ns": 1e-9, "us": 1e-6, "ms": 1e-3, "s": 1.0}
ANGLE_UNITS = {"rad": 1.0, "deg": None}
UNITS = set(FREQ_UNITS) | set(TIME_UNITS) | set(ANGLE_UNITS)


@dataclass(frozen=True)
class Span:
    line: int
    col: int


NOSPAN = Span(0, 0)


def _span():
    return field(default=NOSPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Quantity:
    """A literal with its unit as written; bare integers count samples."""

    value: Union[int, float]
    unit: str = ""

    def __str__(self):
        v = self.value
        text = str(v) if isinstance(v, int) else repr(float(v))
        return text + self.unit


@dataclass(frozen=True)
class ChanRef:
    name: str
    tone: int | None = None

    def __str__(self):
        return self.name if self.tone is None else f"{self.name}:{self.tone}"


# declarations

@dataclass(frozen=True)
class ClockDecl:
    rate: Quantity
    span: Span = _span()


@dataclass(frozen=True)
class ChannelDecl:
    name: str
    mux_tones: int = 0  # 0 for a single-tone drive channel
    lo: Quantity | None = None
    span: Span = _span()


@dataclass(frozen=True)
class ReadoutDecl:
    name: str
    rate: Quantity
    span: Span = _span()


@dataclass(frozen=True)
class EnvelopeDecl:
    name: str
    shape: str
    params: tuple = ()  # (key, Quantity | str) pairs in source order
    interp: bool = False
    span: Span = _span()

    def param(self, key, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default


@dataclass(frozen=True)
class FrequencyDecl:
    name: str
    value: Quantity
    span: Span = _span()


@dataclass(frozen=True)
class ConstraintDecl:
    name: str
    terms: tuple  # (Fraction coefficient, ChanRef) pairs
    span: Span = _span()


# statements

Value = Union[Quantity, str]  # a literal or the name of a declared frequency


@dataclass(frozen=True)
class SetFreq:
    target: ChanRef
    value: Value
    span: Span = _span()


@dataclass(frozen=True)
class SetPhase:
    target: ChanRef
    value: Quantity
    span: Span = _span()


@dataclass(frozen=True)
class SetGain:
    target: ChanRef
    value: Quantity
    span: Span = _span()


@dataclass(frozen=True)
class Play:
    channel: str
    envelope: str
    at: Quantity | None = None
    span: Span = _span()


@dataclass(frozen=True)
class Trigger:
    readout: str
    at: Quantity | None = None
    length: Quantity = Quantity(1)
    every: Quantity | None = None
    count: int = 1
    span: Span = _span()


@dataclass(frozen=True)
class Wait:
    duration: Quantity
    span: Span = _span()


@dataclass(frozen=True)
class Sync:
    span: Span = _span()


@dataclass(frozen=True)
class PhaseReset:
    channels: tuple = ()  # empty: every channel
    at: Quantity | None = None
    span: Span = _span()


@dataclass(frozen=True)
class Repeat:
    count: int
    period: Quantity | None
    body: tuple
    span: Span = _span()


@dataclass(frozen=True)
class PulseProgram:
    clock: ClockDecl
    channels: tuple = ()
    readouts: tuple = ()
    envelopes: tuple = ()
    frequencies: tuple = ()
    constraints: tuple = ()
    body: tuple = ()
    source: str = field(default="<string>", compare=False)

    def channel(self, name: str) -> ChannelDecl:
        for c in self.channels:
            if c.name == name:
                return c
        raise KeyError(name)

    def envelope(self, name: str) -> EnvelopeDecl:
        for e in self.envelopes:
            if e.name == name:
                return e
        raise KeyError(name)

    def constraint(self, name: str) -> ConstraintDecl:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    def frequency(self, name: str) -> Quantity:
        for f in self.frequencies:
            if f.name == name:
                return f.value
        raise KeyError(name)


def _coef(c: Fraction) -> str:
    sign = "-" if c < 0 else "+"
    mag = abs(c)
    return sign if mag == 1 else f"{sign} {mag.numerator}/{mag.denominator}"


def _at(q):
    return "" if q is None else f" @ {q}"


def format_statement(s, indent: int = 0) -> list[str]:
    pad = "  " * indent
    if isinstance(s, SetFreq):
        return [f"{pad}set_freq {s.target} {s.value}"]
    if isinstance(s, SetPhase):
        return [f"{pad}set_phase {s.target} {s.value}"]
    if isinstance(s, SetGain):
        return [f"{pad}set_gain {s.target} {s.value}"]
    if isinstance(s, Play):
        return [f"{pad}play {s.channel} {s.envelope}{_at(s.at)}"]
    if isinstance(s, Trigger):
        text = f"{pad}trigger {s.readout}{_at(s.at)} length {s.length}"
        if s.every is not None:
            text += f" every {s.every} count {s.count}"
        return [text]
    if isinstance(s, Wait):
        return [f"{pad}wait {s.duration}"]
    if isinstance(s, Sync):
        return [f"{pad}sync"]
    if isinstance(s, PhaseReset):
        chans = "".join(f" {c}" for c in s.channels)
        return [f"{pad}phase_reset{chans}{_at(s.at)}"]
    if isinstance(s, Repeat):
        head = f"{pad}repeat {s.count}"
        if s.period is not None:
            head += f" period {s.period}"
        lines = [head]
        for inner in s.body:
            lines += format_statement(inner, indent + 1)
        return lines + [f"{pad}end"]
    raise TypeError(f"not a statement: {s!r}")


def format_program(p: PulseProgram) -> str:
    """Canonical text of a program; parsing it yields an equal program."""
    out = [f"clock {p.clock.rate}"]
    for c in p.channels:
        line = f"channel {c.name}"
        if c.mux_tones:
            line += f" mux {c.mux_tones}"
        if c.lo is not None:
            line += f" lo {c.lo}"
        out.append(line)
    for r in p.readouts:
        out.append(f"readout {r.name} rate {r.rate}")
    for e in p.envelopes:
        parts = [f"envelope {e.name} {e.shape}"]
        for k, v in e.params:
            parts.append(f'{k}="{v}"' if isinstance(v, str) else f"{k}={v}")
        if e.interp:
            parts.append("interp")
        out.append(" ".join(parts))
    for f in p.frequencies:
        out.append(f"frequency {f.name} {f.value}")
    for c in p.constraints:
        terms = " ".join(f"{_coef(k)} {ref}" for k, ref in c.terms)
        out.append(f"constraint {c.name} = {terms}")
    for s in p.body:
        out += format_statement(s)
    return "\n".join(out) + "\n"
