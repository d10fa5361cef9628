"""Multiplexed readout: polyphase channelizer, DDS demodulation and bin bookkeeping.

The channelizer is a 2x oversampled modulated filter bank.  Sixteen branches
split the full complex band into channels spaced ``f_s/16`` apart; the first
eight (``0 .. 7/16 f_s``) cover the Nyquist band of a real ADC stream and are
the ones exposed.  Each channel is decimated by 8, so neighbouring channels
overlap by half their span and a tone anywhere in the band is seen at close
to full gain by at least one of them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.optimize import minimize_scalar
from scipy.signal import firwin, upfirdn
from scipy.signal.windows import kaiser

from .dsp import (ComplexWaveform, DdsChannel, FixedPointFormat, SampleClock,
                  dds_phase_at, quantize_real, synthesize_mux)
from .errors import CapacityError, CollisionError, DomainError

#: Simultaneous readout outputs of the multiplexed readout block.
MAX_OUTPUTS = 4

#: Half-amplitude frequency of the prototype, in channel spacings.  Chosen so
#: that adjacent channels cross at -3 dB and the bank is power complementary.
DEFAULT_CUTOFF = 0.566
DEFAULT_BETA = 9.0


@dataclass(frozen=True, eq=False)
class PfbConfig:
    n_channels: int = 8
    taps_per_branch: int = 8
    beta: float = DEFAULT_BETA
    cutoff: float = DEFAULT_CUTOFF
    coefficients: np.ndarray | None = None

    def __post_init__(self):
        if self.n_channels < 1 or self.taps_per_branch < 1:
            raise DomainError("channel and tap counts must be positive")
        if self.coefficients is not None:
            c = np.asarray(self.coefficients, dtype=np.float64)
            if c.shape != (self.n_branches * self.taps_per_branch,):
                raise DomainError(
                    f"expected {self.n_branches * self.taps_per_branch} coefficients, got {c.size}")
            object.__setattr__(self, "coefficients", c)

    @property
    def n_branches(self) -> int:
        return 2 * self.n_channels

    @property
    def decimation(self) -> int:
        return self.n_channels

    @property
    def span(self) -> int:
        return self.n_branches * self.taps_per_branch

    def channel_spacing(self, f_s: float) -> float:
        return f_s / self.n_branches

    @cached_property
    def prototype(self) -> np.ndarray:
        if self.coefficients is not None:
            return self.coefficients
        n = self.span
        d = np.arange(n) - (n - 1) / 2.0
        c = self.cutoff / self.n_branches
        h = 2 * c * np.sinc(2 * c * d) * kaiser(n, self.beta)
        return h / h.sum()

    def response(self, offset: float, f_s: float) -> complex:
        """Complex gain of one channel for a tone ``offset`` Hz from its centre."""
        lag = np.arange(self.span)
        return complex(np.sum(self.prototype * np.exp(-2j * np.pi * offset / f_s * lag)))

    def power_sum(self, f, f_s: float) -> np.ndarray:
        """Total power gain summed over all branches at absolute frequencies ``f``."""
        f = np.atleast_1d(np.asarray(f, dtype=np.float64))
        centers = np.arange(self.n_branches) * self.channel_spacing(f_s)
        total = np.zeros_like(f)
        for c in centers:
            offs = (f - c + f_s / 2) % f_s - f_s / 2
            total += np.abs([self.response(o, f_s) for o in offs]) ** 2
        return total

    def ripple_bound(self, f_s: float = 1.0, points: int = 257) -> float:
        """Largest deviation of the bank's summed power gain from 1 across the band.

        The summed gain repeats every channel spacing, so one spacing is
        sampled and the worst grid point polished with a bounded search.
        """
        step = self.channel_spacing(f_s) / (points - 1)
        f = np.arange(points) * step
        dev = np.abs(self.power_sum(f, f_s) - 1.0)
        i = int(np.argmax(dev))
        res = minimize_scalar(lambda x: -abs(self.power_sum(x, f_s)[0] - 1.0),
                              bounds=(f[i] - step, f[i] + step), method="bounded",
                              options={"xatol": step * 1e-6})
        return float(max(dev[i], -res.fun))


@dataclass(frozen=True, eq=False)
class ChannelStreams:
    """Decimated channel outputs; ``data[k, m]`` is channel ``k`` at input sample ``m * D``."""

    data: np.ndarray
    clock: SampleClock
    input_clock: SampleClock
    valid: np.ndarray
    cfg: PfbConfig

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    def channel(self, k: int) -> np.ndarray:
        return self.data[k]

    def center(self, k: int) -> float:
        return k * self.cfg.channel_spacing(self.input_clock.f_s)


def _as_stream(x, clock):
    if isinstance(x, ComplexWaveform):
        return x.samples, x.clock
    if clock is None:
        raise DomainError("a raw sample array needs an explicit clock")
    return np.asarray(x), clock


def channelize(x, cfg: PfbConfig = PfbConfig(), clock: SampleClock | None = None,
               all_branches: bool = False) -> ChannelStreams:
    """Split an ADC stream (real array or ComplexWaveform) into decimated channels.

    Channel ``k`` is centred on ``k * f_s / 16``.  Output sample ``m`` uses
    input samples up to ``m * D``; outputs whose filter span reaches before
    the first input sample are marked invalid.
    """
    x, clock = _as_stream(x, clock)
    n = len(x)
    span, m_br, dec = cfg.span, cfg.n_branches, cfg.decimation
    if n < span:
        raise DomainError(f"input of {n} samples is shorter than one filter span ({span})")
    xp = np.concatenate([np.zeros(span - 1, dtype=x.dtype), x])
    windows = sliding_window_view(xp, span)[::dec]
    n_out = windows.shape[0]
    weighted = windows[:, ::-1] * cfg.prototype
    folded = weighted.reshape(n_out, cfg.taps_per_branch, m_br).sum(axis=1)
    spectra = m_br * np.fft.ifft(folded, axis=1)
    k = np.arange(m_br)
    m = np.arange(n_out)
    sign = np.where(np.outer(m, k) % 2 == 0, 1.0, -1.0)  # exp(-i pi k m)
    out = (spectra * sign).T
    if not all_branches:
        out = out[:cfg.n_channels]
    valid = m * dec >= span - 1
    out_clock = SampleClock(clock.f_s / dec, clock.t0)
    return ChannelStreams(out, out_clock, clock, valid, cfg)


def channelize_direct(x, cfg: PfbConfig, clock: SampleClock | None = None) -> np.ndarray:
    """Reference channelizer: mix each channel to DC, filter, decimate.

    Deliberately naive; used to check :func:`channelize`.
    """
    x, clock = _as_stream(x, clock)
    n = np.arange(len(x))
    rows = []
    for k in range(cfg.n_channels):
        mixed = x * np.exp(-2j * np.pi * k * n / cfg.n_branches)
        rows.append(np.convolve(mixed, cfg.prototype)[:len(x)][::cfg.decimation])
    return np.array(rows)


@dataclass(frozen=True)
class ReadoutResult:
    i: float
    q: float
    channel: int
    n_samples: int

    @property
    def iq(self) -> complex:
        return complex(self.i, self.q)


def demodulate_accumulate(stream, dds: DdsChannel, window: int, clock: SampleClock | None = None,
                          start: int = 0, channel: int = 0) -> ReadoutResult:
    """Accumulate ``stream[k] * conj(exp(i * dds_phase(k)))`` over ``window`` samples."""
    if window <= 0:
        raise DomainError("accumulation window must be at least one sample")
    data = np.asarray(stream)
    if start + window > len(data):
        raise DomainError("window runs past the end of the stream")
    clock = clock or SampleClock(1.0)
    idx = np.arange(start, start + window)
    lo = np.exp(-1j * dds_phase_at(dds, clock, idx))
    acc = np.sum(data[start:start + window] * lo)
    return ReadoutResult(float(acc.real), float(acc.imag), channel, window)


def fold_tone(f: float, f_s: float) -> tuple[float, bool]:
    """Apparent frequency in ``[0, f_s/2]`` of a real tone, and whether its phase is inverted."""
    r = np.mod(abs(f), f_s)
    if r <= f_s / 2:
        return float(r), f < 0
    return float(f_s - r), f >= 0


def assign_bin(f: float, f_adc: float, n_bins: int = 16) -> int:
    """Readout bin of a tone: folded frequency divided by ``f_adc / 16``."""
    folded, _ = fold_tone(f, f_adc)
    width = f_adc / n_bins
    return min(int(folded // width), n_bins // 2 - 1)


def check_bins(freqs: Sequence[float], f_adc: float) -> list[int]:
    """Bins of every tone; raises :class:`CollisionError` naming the first clash."""
    seen: dict[int, float] = {}
    bins = []
    for f in freqs:
        b = assign_bin(f, f_adc)
        if b in seen:
            raise CollisionError(seen[b], f, b)
        seen[b] = f
        bins.append(b)
    return bins


def nearest_channel(f: float, f_adc: float, cfg: PfbConfig = PfbConfig()) -> int:
    folded, _ = fold_tone(f, f_adc)
    return min(int(round(folded / cfg.channel_spacing(f_adc))), cfg.n_channels - 1)


@dataclass(frozen=True)
class ReadoutOutput:
    """One of the readout block's outputs: a channel and the DDS demodulating it."""

    channel: int
    freq: float  # analog tone frequency the output listens for


@dataclass
class MuxReadout:
    """Channelizer plus up to four demodulating outputs."""

    f_adc: float
    cfg: PfbConfig = field(default_factory=PfbConfig)
    outputs: list = field(default_factory=list)
    max_outputs: int = MAX_OUTPUTS

    def add_output(self, freq: float, channel: int | None = None) -> ReadoutOutput:
        if len(self.outputs) >= self.max_outputs:
            raise CapacityError(f"readout has only {self.max_outputs} outputs")
        if channel is None:
            channel = nearest_channel(freq, self.f_adc, self.cfg)
        folded, _ = fold_tone(freq, self.f_adc)
        if abs(folded - channel * self.cfg.channel_spacing(self.f_adc)) > self.cfg.channel_spacing(self.f_adc) / 2:
            warnings.warn(f"tone at {freq / 1e6:.6g} MHz lies outside channel {channel}'s passband",
                          stacklevel=2)
        out = ReadoutOutput(channel, freq)
        self.outputs.append(out)
        return out

    def measure(self, adc, window: int | None = None, clock: SampleClock | None = None):
        """Demodulate every output.

        Returns a list of ``(ReadoutResult, amplitude)`` where ``amplitude`` is
        the complex tone amplitude (as injected on the DAC) after undoing the
        channel filter gain and the real-sampling factor of 1/2.
        """
        clock = clock or SampleClock(self.f_adc)
        streams = channelize(adc, self.cfg, clock)
        first = int(np.argmax(streams.valid))
        avail = streams.data.shape[1] - first
        window = avail if window is None else window
        if window > avail:
            raise DomainError("window longer than the valid channel output")
        results = []
        for out in self.outputs:
            folded, inverted = fold_tone(out.freq, self.f_adc)
            offset = folded - streams.center(out.channel)
            dds = DdsChannel(offset)
            res = demodulate_accumulate(streams.channel(out.channel), dds, window,
                                        streams.clock, start=first, channel=out.channel)
            gain = self.cfg.response(offset, self.f_adc)
            amp = 2.0 * res.iq / window / gain
            if inverted:
                amp = np.conj(amp)
            results.append((res, complex(amp)))
        return results


def dac_to_adc(w: ComplexWaveform, f_adc: float, n_adc: int, taps_per_phase: int = 48,
               noise_rms: float = 0.0, seed: int = 0,
               fmt: FixedPointFormat | None = FixedPointFormat()) -> np.ndarray:
    """Ideal analog loop from a real DAC to a direct-sampling ADC.

    The DAC output (real part of ``w``) is reconstructed with a long
    band-limiting interpolator and sampled at ``f_adc`` without anti-alias
    filtering, so tones above ``f_adc/2`` fold as they do on hardware.  The
    DAC/ADC rate ratio must be a ratio of small integers.
    """
    from fractions import Fraction

    ratio = Fraction(f_adc / w.clock.f_s).limit_denominator(1000)
    if abs(float(ratio) - f_adc / w.clock.f_s) > 1e-12 * f_adc / w.clock.f_s:
        raise DomainError("DAC and ADC rates are not in a small rational ratio")
    up, down = ratio.numerator, ratio.denominator
    # total length 2*q*down + 1 keeps the group delay on the output grid
    q = max(1, (taps_per_phase * up) // (2 * down))
    numtaps = 2 * q * down + 1
    h = up * firwin(numtaps, 0.9 / up, window=("kaiser", 10.0))
    need_in = (n_adc + q) * down // up + numtaps // up + 2
    x = w.window(w.start, w.start + max(need_in, len(w))).samples.real
    y = upfirdn(h, x, up=up, down=down)[q:q + n_adc]
    if len(y) < n_adc:
        raise DomainError("DAC waveform too short for the requested ADC record")
    if noise_rms > 0:
        y = y + np.random.default_rng(seed).normal(0.0, noise_rms, size=y.shape)
    if fmt is not None:
        y, _ = quantize_real(y, fmt)
    return y


def loopback(tones: Sequence[tuple[float, float, float]], f_dac: float, f_adc: float,
             n_adc: int = 32768, cfg: PfbConfig = PfbConfig(), noise_rms: float = 0.0,
             seed: int = 0, fmt: FixedPointFormat | None = FixedPointFormat()):
    """Generate tones on a mux DAC and read them back through the channelizer.

    ``tones`` are ``(freq, gain, phase)``.  Returns the recovered complex
    amplitudes, one per tone, in the order given.
    """
    if len(tones) > MAX_OUTPUTS:
        raise CapacityError(f"at most {MAX_OUTPUTS} tones can be read out at once")
    dac = SampleClock(f_dac)
    chans = [(DdsChannel(f, phase_offset=ph), g) for f, g, ph in tones]
    n_dac = int(np.ceil(n_adc * f_dac / f_adc)) + 4096
    w = synthesize_mux(chans, n_dac, dac)
    if fmt is not None:
        from .dsp import quantize
        w = quantize(w, fmt)
    adc = dac_to_adc(w, f_adc, n_adc, noise_rms=noise_rms, seed=seed, fmt=fmt)
    ro = MuxReadout(f_adc, cfg)
    for f, _, _ in tones:
        ro.add_output(f)
    return [amp for _, amp in ro.measure(adc)]


def export_results_csv(path, rows) -> None:
    """Write ``(rep, ReadoutResult)`` rows as ``rep,channel,i,q``."""
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["rep", "channel", "i", "q"])
        for rep, r in rows:
            wr.writerow([rep, r.channel, repr(r.i), repr(r.q)])


def load_coefficients_csv(path, n_channels: int = 8, taps_per_branch: int = 8) -> PfbConfig:
    """PFB config from a one-column (or ``index,coeff``) CSV of prototype taps."""
    data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#",
                      skiprows=_header_rows(path))
    coeffs = data[:, -1]
    return PfbConfig(n_channels, taps_per_branch, coefficients=coeffs)


def _header_rows(path) -> int:
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(v) for v in first.strip().split(",")]
        return 0
    except ValueError:
        return 1
