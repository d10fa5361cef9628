"""Digital synthesis primitives: DDS phase accumulators, envelopes and generators.

Phase is always a pure function of the absolute sample index, the channel
frequency word, the programmed offset and the epoch of the last synchronous
phase reset.  Nothing here keeps running state, which is what makes pulses
on a common clock phase coherent by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.signal import upfirdn
from scipy.signal.windows import kaiser

from .errors import CapacityError, DomainError

TWO_PI = 2.0 * np.pi

#: Width of the DDS phase accumulator and frequency word.
PHASE_BITS = 32
PHASE_MODULUS = 1 << PHASE_BITS

#: Interpolated generators run their envelope at 1/16 of the DAC rate.
INTERP_FACTOR = 16
INTERP_TAPS = 16
INTERP_BETA = 8.0

#: Stored envelope samples per generator.
DEFAULT_MAX_ENVELOPE = 65536
#: Tones per multiplexed generator.
DEFAULT_MUX_TONES = 8


@dataclass(frozen=True)
class SampleClock:
    """A sample clock; every timestamp is an integer index against it."""

    f_s: float
    t0: int = 0

    def __post_init__(self):
        if not self.f_s > 0:
            raise DomainError(f"sample rate must be positive, got {self.f_s}")

    @property
    def dt(self) -> float:
        return 1.0 / self.f_s

    def time(self, n):
        """Seconds since ``t0`` for sample index ``n``."""
        return (np.asarray(n) - self.t0) / self.f_s

    def samples(self, seconds: float) -> int:
        return int(round(seconds * self.f_s))


@dataclass(frozen=True)
class DdsChannel:
    freq: float
    phase_offset: float = 0.0
    gain: float = 1.0
    reset_epoch: int = 0

    def __post_init__(self):
        if not -1.0 <= self.gain <= 1.0:
            raise DomainError(f"gain must lie in [-1, 1], got {self.gain}")
        object.__setattr__(self, "phase_offset", float(np.mod(self.phase_offset, TWO_PI)))


def freq_word(freq: float, f_s: float) -> int:
    """Unsigned 32-bit frequency word, rounded to nearest (ties to even)."""
    word = round(Fraction(freq) / Fraction(f_s) * PHASE_MODULUS)
    return int(word) % PHASE_MODULUS


def realized_freq(freq: float, f_s: float) -> float:
    """The frequency a 32-bit accumulator actually produces for ``freq``.

    Words above half the modulus are read as negative frequencies.
    """
    word = freq_word(freq, f_s)
    if word >= PHASE_MODULUS // 2:
        word -= PHASE_MODULUS
    return word * f_s / PHASE_MODULUS


def phase_accumulator(ch: DdsChannel, clock: SampleClock, n) -> np.ndarray:
    """Accumulator contents (integers mod 2**32) at sample indices ``n``."""
    k = np.asarray(n, dtype=np.int64) - ch.reset_epoch
    if np.any(k < 0):
        raise DomainError("sample index precedes the channel's last phase reset")
    word = np.uint64(freq_word(ch.freq, clock.f_s))
    # uint64 products wrap mod 2**64, which 2**32 divides
    acc = (k.astype(np.uint64) * word) & np.uint64(PHASE_MODULUS - 1)
    return acc


def _wrap(phase):
    phase = np.mod(phase, TWO_PI)
    return np.where(phase >= TWO_PI, 0.0, phase)


def dds_phase_at(ch: DdsChannel, clock: SampleClock, n, *, exact_freq: bool = False):
    """Carrier phase in ``[0, 2pi)`` at sample index ``n`` (scalar or array).

    The default path models the hardware: a 32-bit frequency word integrated
    exactly, so the result is ``2pi * realized_freq * (n - epoch) / f_s + offset``.
    ``exact_freq=True`` is the real-valued reference path that uses ``ch.freq``
    without rounding it to a frequency word.
    """
    scalar = np.ndim(n) == 0
    if exact_freq:
        k = np.asarray(n, dtype=np.float64) - ch.reset_epoch
        if np.any(k < 0):
            raise DomainError("sample index precedes the channel's last phase reset")
        cycles = np.mod(ch.freq / clock.f_s * k, 1.0)
        phase = _wrap(TWO_PI * cycles + ch.phase_offset)
    else:
        acc = phase_accumulator(ch, clock, n)
        phase = _wrap(acc.astype(np.float64) * (TWO_PI / PHASE_MODULUS) + ch.phase_offset)
    return float(phase) if scalar else phase


def phase_reset(channels: Sequence[DdsChannel], t: int) -> list[DdsChannel]:
    """Synchronously reset every channel's accumulator at sample ``t``."""
    for ch in channels:
        if t < ch.reset_epoch:
            raise DomainError(f"reset at {t} precedes an earlier reset at {ch.reset_epoch}")
    return [replace(ch, reset_epoch=int(t)) for ch in channels]


@dataclass(frozen=True, eq=False)
class Envelope:
    samples: np.ndarray
    rate_divisor: int = 1
    shape: str = "user"

    def __post_init__(self):
        s = np.asarray(self.samples)
        s = s.astype(np.complex128 if np.iscomplexobj(s) else np.float64)
        if s.ndim != 1:
            raise DomainError("envelope samples must be one-dimensional")
        if self.rate_divisor not in (1, INTERP_FACTOR):
            raise DomainError(f"rate_divisor must be 1 or {INTERP_FACTOR}")
        if not np.all(np.isfinite(s)):
            raise DomainError("envelope samples must be finite")
        if s.size and np.max(np.abs(s)) > 1.0 + 1e-12:
            raise DomainError("envelope magnitude exceeds full scale")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return len(self.samples)

    @property
    def dac_length(self) -> int:
        return len(self.samples) * self.rate_divisor


def flat(length: int, amplitude: float = 1.0, rate_divisor: int = 1) -> Envelope:
    return Envelope(np.full(length, amplitude), rate_divisor, "flat")


def gaussian(length: int, sigma: float, rate_divisor: int = 1) -> Envelope:
    """Gaussian centred in the window, peak 1; ``sigma`` in envelope samples."""
    x = np.arange(length) - (length - 1) / 2.0
    return Envelope(np.exp(-0.5 * (x / sigma) ** 2), rate_divisor, "gaussian")


def drag(length: int, sigma: float, alpha: float, rate_divisor: int = 1) -> Envelope:
    """Gaussian in-phase part with a derivative quadrature part, rescaled to full scale if needed."""
    x = np.arange(length) - (length - 1) / 2.0
    g = np.exp(-0.5 * (x / sigma) ** 2)
    env = g - 1j * alpha * (x / sigma**2) * g
    peak = np.max(np.abs(env))
    if peak > 1.0:
        env = env / peak
    return Envelope(env, rate_divisor, "drag")


def triangle(length: int, rate_divisor: int = 1) -> Envelope:
    x = np.arange(length) - (length - 1) / 2.0
    half = max((length - 1) / 2.0, 1.0)
    return Envelope(1.0 - np.abs(x) / half, rate_divisor, "triangle")


@dataclass(frozen=True, eq=False)
class ComplexWaveform:
    samples: np.ndarray
    clock: SampleClock
    start: int = 0
    saturated: bool = False

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        if s.ndim != 1 or not np.all(np.isfinite(s)):
            raise DomainError("waveform samples must be a finite 1-D array")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return len(self.samples)

    @property
    def stop(self) -> int:
        return self.start + len(self.samples)

    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.stop)

    def times(self) -> np.ndarray:
        return self.clock.time(self.indices())

    def window(self, start: int, stop: int) -> "ComplexWaveform":
        """Samples covering absolute indices ``[start, stop)``, zero-filled outside."""
        out = np.zeros(stop - start, dtype=np.complex128)
        lo, hi = max(start, self.start), min(stop, self.stop)
        if hi > lo:
            out[lo - start:hi - start] = self.samples[lo - self.start:hi - self.start]
        return ComplexWaveform(out, self.clock, start, self.saturated)


def overlay(waves: Sequence[ComplexWaveform], start: int | None = None,
            stop: int | None = None) -> ComplexWaveform:
    """Sum waveforms on a common clock onto one buffer."""
    if not waves:
        raise DomainError("nothing to overlay")
    clock = waves[0].clock
    if any(w.clock != clock for w in waves):
        raise DomainError("waveforms are on different clocks")
    start = min(w.start for w in waves) if start is None else start
    stop = max(w.stop for w in waves) if stop is None else stop
    total = np.zeros(stop - start, dtype=np.complex128)
    for w in waves:
        total += w.window(start, stop).samples
    return ComplexWaveform(total, clock, start, any(w.saturated for w in waves))


def interpolation_kernel(factor: int = INTERP_FACTOR, taps: int = INTERP_TAPS,
                         beta: float = INTERP_BETA) -> np.ndarray:
    """Kaiser-windowed sinc interpolator, ``factor * taps + 1`` points, centred.

    Every polyphase branch is normalised to unit sum so constants pass unchanged.
    """
    n = factor * taps + 1
    d = np.arange(n) - factor * taps // 2
    h = np.sinc(d / factor) * kaiser(n, beta)
    for r in range(factor):
        branch = h[r::factor]
        h[r::factor] = branch / branch.sum()
    return h


_KERNEL = interpolation_kernel()


def interpolate_envelope(env: Envelope, clock: SampleClock | None = None) -> Envelope:
    """Upsample a 1/16-rate envelope to the DAC rate.

    Output sample ``16*j`` coincides with input sample ``j``.  The input is
    extended by holding its end values, so a constant stays constant.
    ``clock`` is accepted for symmetry with the other generators; the kernel
    only depends on the rate ratio.
    """
    if env.rate_divisor != INTERP_FACTOR:
        raise DomainError("interpolate_envelope needs an envelope at 1/16 rate")
    if len(env) == 0:
        raise DomainError("cannot interpolate an empty envelope")
    pad = INTERP_TAPS // 2
    x = np.pad(env.samples, pad, mode="edge")
    y = upfirdn(_KERNEL, x, up=INTERP_FACTOR)
    offset = pad * INTERP_FACTOR + (len(_KERNEL) - 1) // 2
    y = y[offset:offset + len(env) * INTERP_FACTOR]
    # ringing can overshoot full scale by a hair; saturate like the DAC would
    mag = np.abs(y)
    over = mag > 1.0
    if np.any(over):
        y = y.copy()
        y[over] /= mag[over]
    return Envelope(y, 1, env.shape)


def synthesize_pulse(ch: DdsChannel, env: Envelope, start: int, clock: SampleClock,
                     max_samples: int = DEFAULT_MAX_ENVELOPE) -> ComplexWaveform:
    """Play ``env`` on channel ``ch`` starting at absolute sample ``start``."""
    if len(env) == 0:
        raise DomainError("envelope is empty")
    if len(env) > max_samples:
        raise CapacityError(f"envelope of {len(env)} samples exceeds memory of {max_samples}")
    if start < ch.reset_epoch:
        raise DomainError("pulse starts before the channel's last phase reset")
    if env.rate_divisor != 1:
        env = interpolate_envelope(env, clock)
    n = start + np.arange(len(env))
    carrier = np.exp(1j * dds_phase_at(ch, clock, n))
    return ComplexWaveform(ch.gain * env.samples * carrier, clock, start)


def synthesize_mux(tones: Sequence[tuple[DdsChannel, float]], length: int, clock: SampleClock,
                   start: int = 0, max_tones: int = DEFAULT_MUX_TONES) -> ComplexWaveform:
    """Sum of flat-envelope tones; each tuple's gain replaces the channel gain."""
    if not 1 <= len(tones) <= max_tones:
        raise CapacityError(f"mux generator takes 1..{max_tones} tones, got {len(tones)}")
    for ch, _ in tones:
        if abs(ch.freq) >= clock.f_s / 2:
            raise DomainError(f"tone at {ch.freq} Hz is outside the first Nyquist zone")
    env = flat(length)
    total = np.zeros(length, dtype=np.complex128)
    for ch, gain in tones:
        total += synthesize_pulse(replace(ch, gain=gain), env, start, clock,
                                  max_samples=max(length, 1)).samples
    return ComplexWaveform(total, clock, start)


@dataclass(frozen=True)
class FixedPointFormat:
    total_bits: int = 16
    frac_bits: int = 15

    def __post_init__(self):
        if not 0 < self.frac_bits <= self.total_bits <= 32:
            raise DomainError("need 0 < frac_bits <= total_bits <= 32")

    @property
    def max_code(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def min_code(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def lsb(self) -> float:
        return 2.0 ** -self.frac_bits


def quantize_real(x, fmt: FixedPointFormat = FixedPointFormat()):
    """Round-half-even to ``fmt`` codes.  Returns ``(values, saturated)``.

    Full scale (+1.0 for the default format) maps onto the largest positive
    code without being reported as saturation; anything beyond that is.
    """
    scale = float(1 << fmt.frac_bits)
    codes = np.rint(np.asarray(x, dtype=np.float64) * scale)
    saturated = bool(np.any(codes > fmt.max_code + 1) or np.any(codes < fmt.min_code))
    codes = np.clip(codes, fmt.min_code, fmt.max_code)
    return codes / scale, saturated


def quantize(w: ComplexWaveform, fmt: FixedPointFormat = FixedPointFormat()) -> ComplexWaveform:
    re, sat_re = quantize_real(w.samples.real, fmt)
    im, sat_im = quantize_real(w.samples.imag, fmt)
    return ComplexWaveform(re + 1j * im, w.clock, w.start, w.saturated or sat_re or sat_im)


# Nyquist-zone bookkeeping.  Output shaping is reduced to one scalar per zone.

def nyquist_zone(f: float, f_s: float) -> int:
    """1-based Nyquist zone of a (real) frequency."""
    return int(abs(f) // (f_s / 2)) + 1


def fold_frequency(f: float, f_s: float) -> float:
    """Apparent frequency in ``[0, f_s/2]`` of a real tone sampled at ``f_s``."""
    r = np.mod(abs(f), f_s)
    return float(min(r, f_s - r))


def _zone_center_gain(zone: int, mode: str) -> float:
    x = (zone - 0.5) / 2.0  # zone centre as a fraction of f_s
    if mode == "normal":
        return abs(np.sinc(x))
    if mode == "mix":
        return abs(np.sinc(x / 2) * np.sin(np.pi * x / 2))
    raise DomainError(f"unknown DAC mode {mode!r}")


ZONE_GAIN = {
    mode: {zone: _zone_center_gain(zone, mode) for zone in (1, 2, 3, 4)}
    for mode in ("normal", "mix")
}


def zone_gain(f: float, f_s: float, mode: str = "normal") -> float:
    zone = nyquist_zone(f, f_s)
    table = ZONE_GAIN[mode] if mode in ZONE_GAIN else None
    if table is None:
        raise DomainError(f"unknown DAC mode {mode!r}")
    if zone not in table:
        raise DomainError(f"no gain entry for Nyquist zone {zone}")
    return table[zone]
