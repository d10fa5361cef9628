"""Phase-coherence verification across repetitions.

A constraint is a signed combination of channel phases, each taken at the
start ``t_N`` of repetition ``N`` of the outermost ``repeat``.  A channel's
phase at ``t_N`` is that of the carrier it plays first in the repetition,
extended back to ``t_N``.  A channel that does not play uses its programmed
state at the loop head.

Two models:

``dds``
    The whole carrier is a DDS accumulator; LO declarations are ignored.
``analog_lo``
    Channels with an ``lo`` play the intermediate frequency ``f - lo`` on the
    DDS and add a free-running LO phase ``2 pi lo t``.

The static check uses exact rational arithmetic.  For ``N >= 1`` the combination
is affine in ``N``, so repetitions 0, 1 and 2 decide it.  With a half
coefficient the combination is only defined modulo pi.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .. import dsp
from ..errors import DomainError
from .ast import ChanRef, ConstraintDecl, PulseProgram, Repeat
from .execute import HardwareConfig, execute, trace
from .schedule import clock_rate, exact

VARIANCE_THRESHOLD = 1e-20  # rad^2


@dataclass(frozen=True)
class CoherenceConstraint:
    """``sum(coef * phase(channel))`` must not change between repetitions."""

    terms: tuple  # (Fraction, ChanRef)
    name: str = ""

    def __post_init__(self):
        terms = tuple((Fraction(c), r if isinstance(r, ChanRef) else ChanRef(r)) for c, r in self.terms)
        if len(terms) < 2:
            raise DomainError("a coherence constraint needs at least two terms")
        for c, _ in terms:
            if abs(c) not in (1, Fraction(1, 2)):
                raise DomainError(f"coefficient {c} is not +-1 or +-1/2")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_decl(cls, d: ConstraintDecl) -> "CoherenceConstraint":
        return cls(d.terms, d.name)

    @property
    def modulus(self) -> Fraction:
        """Period of the combination in cycles."""
        return Fraction(1, 2) if any(abs(c) != 1 for c, _ in self.terms) else Fraction(1)


@dataclass(frozen=True)
class CoherenceReport:
    constraint: str
    model: str
    passed: bool
    worst_drift: float  # rad, over the program's repetitions
    drift_per_rep: float  # rad, wrapped
    n_reps: int
    method: str
    variance: float | None = None  # numeric check only


def _resolve(p: PulseProgram, c) -> CoherenceConstraint:
    if isinstance(c, str):
        c = p.constraint(c)
    if isinstance(c, ConstraintDecl):
        c = CoherenceConstraint.from_decl(c)
    names = {ch.name: ch for ch in p.channels}
    for _, ref in c.terms:
        if ref.name not in names:
            raise DomainError(f"constraint {c.name!r} references {ref.name!r}, absent from the program")
        n_tones = max(names[ref.name].mux_tones, 1)
        if ref.tone is not None and not 0 <= ref.tone < n_tones:
            raise DomainError(f"channel {ref.name!r} has no tone {ref.tone}")
    return c


def _outer_repeat(p: PulseProgram):
    for i, s in enumerate(p.body):
        if isinstance(s, Repeat):
            return i, s
    return None, None


def with_repetitions(p: PulseProgram, n: int, period=None) -> PulseProgram:
    """Copy of ``p`` whose outermost ``repeat`` runs ``n`` times.

    ``period`` (a Quantity) replaces the declared repetition period when given.
    """
    i, rep = _outer_repeat(p)
    if rep is None:
        return p
    body = list(p.body)
    body[i] = dataclasses.replace(rep, count=n, period=rep.period if period is None else period)
    return dataclasses.replace(p, body=tuple(body))


def _wrap(x, period):
    """Wrap into ``(-period/2, period/2]``."""
    return x - period * math.floor(x / period + 0.5) if not isinstance(x, np.ndarray) \
        else x - period * np.floor(x / period + 0.5)


def _first_plays(plays, n_reps):
    first = [dict() for _ in range(n_reps)]
    for ev in plays:
        if ev.rep is not None and ev.channel not in first[ev.rep]:
            first[ev.rep][ev.channel] = ev
    return first


def _tone_state(tones, ref: ChanRef):
    k = 0 if ref.tone is None else ref.tone
    return tones[k][1] if isinstance(tones[k], tuple) else tones[k]


def _lo_of(p: PulseProgram, name: str, model: str):
    ch = p.channel(name)
    if model != "analog_lo" or ch.lo is None:
        return None
    return exact(ch.lo)


def _exact_cycles(ch: dsp.DdsChannel, t: int, lo, rate: Fraction):
    """``(cycles, offset_rad)`` of a channel's phase at sample ``t``, exactly."""
    word = dsp.freq_word(ch.freq, float(rate))
    cycles = Fraction(word * (t - ch.reset_epoch), dsp.PHASE_MODULUS)
    if lo is not None:
        cycles += lo * t / rate
    return cycles, Fraction(ch.phase_offset)


def _rep_combos(p: PulseProgram, c: CoherenceConstraint, phase_model: str):
    """Exact ``(cycles, offset_rad)`` of the combination at repetitions 0, 1 and 2."""
    probe = with_repetitions(p, 3)
    hw = HardwareConfig(phase_model, keep_buffers=False)
    sched, plays, _, regs = trace(probe, hw)
    rate = clock_rate(p)
    first = _first_plays(plays, 3)
    los = {ref.name: _lo_of(p, ref.name, phase_model) for _, ref in c.terms}
    combos = []
    for n in range(3):
        t_n = sched.rep_starts[n]
        cyc, rad = Fraction(0), Fraction(0)
        for coef, ref in c.terms:
            ev = first[n].get(ref.name)
            if ev is not None:
                ch = _tone_state(ev.tones, ref)
            else:
                ch = _tone_state(regs[n][ref.name], ref)
                if los[ref.name] is not None:
                    ch = dataclasses.replace(ch, freq=ch.freq - float(los[ref.name]))
            x, off = _exact_cycles(ch, t_n, los[ref.name], rate)
            cyc += coef * x
            rad += coef * off
        combos.append((cyc, rad))
    return combos


def constraint_phases(p: PulseProgram, c, phase_model: str = "dds", n_reps: int | None = None) -> np.ndarray:
    """Combination phase (rad, wrapped to its modulus) at every repetition start.

    Repetitions beyond the first two are extrapolated exactly from the
    affine dependence on ``N``.
    """
    c = _resolve(p, c)
    _, outer = _outer_repeat(p)
    if outer is None:
        raise DomainError("program has no repeat block")
    n_reps = outer.count if n_reps is None else n_reps
    combos = _rep_combos(p, c, phase_model)
    m = c.modulus
    period = 2 * math.pi * float(m)
    step = (combos[2][0] - combos[1][0], combos[2][1] - combos[1][1])
    out = np.empty(n_reps)
    for n in range(n_reps):
        if n < 3:
            cyc, rad = combos[n]
        else:
            cyc = combos[1][0] + (n - 1) * step[0]
            rad = combos[1][1] + (n - 1) * step[1]
        out[n] = _wrap(2 * math.pi * float(cyc % m) + float(rad), period)
    return out


def check_phase_coherence(p: PulseProgram, c, phase_model: str = "dds") -> CoherenceReport:
    """Static verdict on a coherence constraint.

    ``c`` is a :class:`CoherenceConstraint`, a constraint declaration, or the
    name of a constraint declared in ``p``.
    """
    HardwareConfig(phase_model)  # validates the model name
    c = _resolve(p, c)
    _, outer = _outer_repeat(p)
    if outer is None or outer.count == 1:
        return CoherenceReport(c.name, phase_model, True, 0.0, 0.0, 1, "static")
    combos = _rep_combos(p, c, phase_model)
    m = c.modulus
    period = 2 * math.pi * float(m)

    def drift(a, b):
        # exact comparison first so a true zero reports as exactly zero
        dc = (b[0] - a[0]) % m
        if dc == 0 and b[1] == a[1]:
            return 0.0
        return _wrap(2 * math.pi * float(dc) + float(b[1] - a[1]), period)

    step = (combos[2][0] - combos[1][0], combos[2][1] - combos[1][1])
    passed = drift(combos[0], combos[1]) == 0.0 and drift(combos[1], combos[2]) == 0.0
    worst = 0.0
    if not passed:
        first_rep = drift(combos[0], combos[1])
        worst = abs(first_rep)
        for n in range(2, outer.count):
            later = (combos[1][0] + (n - 1) * step[0], combos[1][1] + (n - 1) * step[1])
            worst = max(worst, abs(drift(combos[0], later)))
    per_rep = drift((Fraction(0), Fraction(0)), step)
    return CoherenceReport(c.name, phase_model, passed, float(worst), float(per_rep),
                           outer.count, "static")


def simulate_phase_coherence(p: PulseProgram, c, phase_model: str = "dds",
                             n_reps: int = 100) -> CoherenceReport:
    """Brute-force check: run ``n_reps`` repetitions and measure the phases.

    Each channel phase is read off the synthesized samples at the envelope
    peak of its first play and carried back to the repetition start.  The LO
    contribution is added in extended precision.
    """
    c = _resolve(p, c)
    _, outer = _outer_repeat(p)
    if outer is None:
        return CoherenceReport(c.name, phase_model, True, 0.0, 0.0, 1, "numeric", 0.0)
    prog = with_repetitions(p, n_reps)
    res = execute(prog, HardwareConfig(phase_model, keep_buffers=False))
    f_s = res.clock.f_s
    first = _first_plays(res.plays, n_reps)
    period = 2 * math.pi * float(c.modulus)
    los = {ref.name: _lo_of(p, ref.name, phase_model) for _, ref in c.terms}
    rate_ld = np.longdouble(float(clock_rate(p)))
    values = np.empty(n_reps)
    for n in range(n_reps):
        t_n = res.schedule.rep_starts[n]
        total = 0.0
        for coef, ref in c.terms:
            ev = first[n].get(ref.name)
            phase = None
            if ev is not None:
                k_tone = 0 if ref.tone is None else ref.tone
                ch = ev.tones[k_tone][1]
                w = ev.waves[k_tone].samples
                env = res.envelopes[ev.envelope].samples
                k = int(np.argmax(np.abs(env)))
                if ch.gain != 0 and abs(w[k]) > 0:
                    measured = np.angle(w[k] / (ch.gain * env[k]))
                    f_real = dsp.realized_freq(ch.freq, f_s)
                    phase = measured - 2 * math.pi * f_real * (ev.start + k - t_n) / f_s
            if phase is None:
                # nothing to measure: fall back to the programmed register state
                ch = _tone_state(ev.tones if ev is not None else res.registers[n][ref.name], ref)
                if ev is None and los[ref.name] is not None:
                    ch = dataclasses.replace(ch, freq=ch.freq - float(los[ref.name]))
                word = dsp.freq_word(ch.freq, f_s)
                cyc = Fraction(word * (t_n - ch.reset_epoch), dsp.PHASE_MODULUS) % 1
                phase = 2 * math.pi * float(cyc) + ch.phase_offset
            lo = los[ref.name]
            if lo is not None:
                cycles = np.longdouble(float(lo)) * np.longdouble(t_n) / rate_ld
                phase += float(2 * np.pi * (cycles - np.floor(cycles)))
            total += float(coef) * phase
        values[n] = total
    dev = _wrap(values - values[0], period)
    var = float(np.var(dev))
    per_rep = float(_wrap(values[2] - values[1], period)) if n_reps > 2 else 0.0
    return CoherenceReport(c.name, phase_model, var < VARIANCE_THRESHOLD, float(np.max(np.abs(dev))),
                           per_rep, n_reps, "numeric", var)
