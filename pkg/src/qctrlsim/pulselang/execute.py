"""Run a scheduled program against the DDS generators."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .. import dsp
from ..errors import CapacityError, DomainError
from .ast import PulseProgram
from .schedule import (Schedule, angle_rad, build_envelope, clock_rate, exact, frequency_hz,
                       program_dir, schedule)

PHASE_MODELS = ("dds", "analog_lo")


@dataclass(frozen=True)
class HardwareConfig:
    """Generator settings used when executing a program.

    ``phase_model="analog_lo"`` treats every channel declared with ``lo`` as an
    IQ-mixer chain: the generator plays the intermediate frequency ``f - lo``
    and the LO phase keeps running from time zero, untouched by phase resets.
    """

    phase_model: str = "dds"
    max_envelope: int = dsp.DEFAULT_MAX_ENVELOPE
    max_mux_tones: int = dsp.DEFAULT_MUX_TONES
    keep_buffers: bool = True

    def __post_init__(self):
        if self.phase_model not in PHASE_MODELS:
            raise DomainError(f"phase model must be one of {PHASE_MODELS}, got {self.phase_model!r}")


@dataclass(frozen=True)
class PlayEvent:
    channel: str
    start: int
    envelope: str
    tones: tuple  # (tone index or None, DdsChannel) as programmed at the play
    rep: int | None
    lo: Fraction | None = None  # LO frequency in Hz when the analog model applies
    waves: tuple = ()  # per-tone ComplexWaveform, filled by execute()


@dataclass(frozen=True)
class TriggerEvent:
    readout: str
    sample: int  # generator sample index
    time: float  # seconds
    length: int
    rep: int | None


@dataclass
class ExecutionResult:
    waveforms: dict
    triggers: list
    plays: list
    schedule: Schedule
    clock: dsp.SampleClock
    registers: list = field(default_factory=list)  # state at each outer-rep start
    envelopes: dict = field(default_factory=dict)  # DAC-rate envelopes by name

    def trigger_times(self, readout: str | None = None) -> np.ndarray:
        return np.array([t.sample for t in self.triggers if readout is None or t.readout == readout])


class _Registers:
    def __init__(self, p: PulseProgram, hw: HardwareConfig):
        self.state = {}
        self.lo = {}
        for c in p.channels:
            if c.mux_tones:
                self.state[c.name] = [dsp.DdsChannel(0.0, gain=0.0) for _ in range(c.mux_tones)]
            else:
                self.state[c.name] = [dsp.DdsChannel(0.0)]
            self.lo[c.name] = exact(c.lo) if (c.lo is not None and hw.phase_model == "analog_lo") else None
        self.mux = {c.name: bool(c.mux_tones) for c in p.channels}
        self.p = p

    def targets(self, name, tone):
        tones = self.state[name]
        return range(len(tones)) if tone is None else [tone]

    def update(self, name, tone, **kw):
        for k in self.targets(name, tone):
            self.state[name][k] = replace(self.state[name][k], **kw)

    def snapshot(self):
        return {k: tuple(v) for k, v in self.state.items()}

    def play_tones(self, name):
        lo = self.lo[name]
        out = []
        for k, ch in enumerate(self.state[name]):
            if lo is not None:
                ch = replace(ch, freq=ch.freq - float(lo))
            out.append((k if self.mux[name] else None, ch))
        return tuple(out)


def trace(p: PulseProgram, hw: HardwareConfig = HardwareConfig(), sched: Schedule | None = None):
    """Register walk without synthesis.

    Returns ``(schedule, plays, triggers, registers)`` where ``registers`` holds the
    programmed state of every channel at each outer-repetition start.
    """
    sched = schedule(p) if sched is None else sched
    clock = dsp.SampleClock(float(clock_rate(p)))
    regs = _Registers(p, hw)
    plays, triggers, rep_regs = [], [], []
    current_rep = None
    for ins in sched.instructions:
        if ins.rep is not None and ins.rep != current_rep:
            # first instruction of a new repetition; every instruction inside the
            # body belongs to it, so this is the register state at the loop head
            while len(rep_regs) <= ins.rep:
                rep_regs.append(regs.snapshot())
            current_rep = ins.rep
        a = ins.action
        if a == "set_freq":
            regs.update(ins.channel, ins.tone, freq=frequency_hz(ins.value))
        elif a == "set_phase":
            regs.update(ins.channel, ins.tone, phase_offset=angle_rad(ins.value))
        elif a == "set_gain":
            regs.update(ins.channel, ins.tone, gain=float(ins.value.value))
        elif a == "phase_reset":
            for k, ch in enumerate(regs.state[ins.channel]):
                regs.state[ins.channel][k] = dsp.phase_reset([ch], ins.start)[0]
        elif a == "play":
            lo = regs.lo[ins.channel]
            plays.append(PlayEvent(ins.channel, ins.start, ins.value, regs.play_tones(ins.channel),
                                   ins.rep, lo))
        elif a == "trigger":
            triggers.append(TriggerEvent(ins.channel, ins.start, float(clock.time(ins.start)),
                                         ins.duration, ins.rep))
    while len(rep_regs) < len(sched.rep_starts):
        rep_regs.append(regs.snapshot())
    return sched, plays, triggers, rep_regs


def execute(p: PulseProgram, hw: HardwareConfig = HardwareConfig()) -> ExecutionResult:
    """Synthesize every channel's waveform and collect readout triggers.

    Waveforms cover samples ``[0, end)`` of the generator clock.  For channels
    under the analog LO model they are the intermediate-frequency signal.
    """
    sched, plays, triggers, rep_regs = trace(p, hw)
    rate = clock_rate(p)
    clock = dsp.SampleClock(float(rate))
    base = program_dir(p)
    envs = {}
    for e in p.envelopes:
        env = build_envelope(e, rate, base)
        if env.rate_divisor != 1:
            if len(env) * env.rate_divisor > hw.max_envelope:
                raise CapacityError(f"envelope {e.name} exceeds memory of {hw.max_envelope}")
            env = dsp.interpolate_envelope(env, clock)
        envs[e.name] = env
    buffers = {c.name: np.zeros(sched.end, dtype=np.complex128) for c in p.channels} \
        if hw.keep_buffers else {}
    done = []
    for ev in plays:
        env = envs[ev.envelope]
        waves = []
        if len(ev.tones) > hw.max_mux_tones:
            raise CapacityError(f"{ev.channel} plays {len(ev.tones)} tones, "
                                f"limit {hw.max_mux_tones}")
        for _, ch in ev.tones:
            if len(ev.tones) > 1 and abs(ch.freq) >= clock.f_s / 2:
                raise DomainError(f"mux tone at {ch.freq} Hz is outside the first Nyquist zone")
            w = dsp.synthesize_pulse(ch, env, ev.start, clock, hw.max_envelope)
            waves.append(w)
            if hw.keep_buffers:
                buffers[ev.channel][w.start:w.stop] += w.samples
        done.append(replace(ev, waves=tuple(waves)))
    waveforms = {}
    for name, buf in buffers.items():
        sat = bool(np.any(np.abs(buf) > 1.0 + 1e-12))
        waveforms[name] = dsp.ComplexWaveform(buf, clock, 0, sat)
    return ExecutionResult(waveforms, triggers, done, sched, clock, rep_regs, envs)
