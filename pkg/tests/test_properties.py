"""Randomised invariants of the DSP chain, the device model and calibration."""

from collections import Counter

import numpy as np
from hypothesis import given, settings, strategies as st

from corpus import make_case
from qctrlsim.calibration import predistort, random_transfer_function
from qctrlsim.device import GatePhases, apply_channel, bswap_unitary
from qctrlsim.device.parametric import parametric_project
from qctrlsim.dsp import (PHASE_MODULUS, DdsChannel, Envelope, SampleClock, flat, freq_word,
                          interpolate_envelope, phase_accumulator, quantize_real,
                          synthesize_mux, synthesize_pulse)
from qctrlsim.pulselang import format_program, parse
from qctrlsim.readout import PfbConfig, assign_bin, channelize

CLOCK = SampleClock(6881.28e6)
UNIT = SampleClock(1.0)
CFG = PfbConfig()
RIPPLE = CFG.ripple_bound()
PROPS = settings(max_examples=150, deadline=None, derandomize=True)
DSP = settings(max_examples=300, deadline=None, derandomize=True)
CASES = Counter()  # executed examples per DSP invariant
DSP_INVARIANTS = ("test_phase_coherent_across_gap", "test_mux_linear",
                  "test_pfb_energy_within_ripple", "test_interpolation_band_limited")

freqs = st.floats(-3.4e9, 3.4e9, allow_nan=False)
phases = st.floats(0, 2 * np.pi, allow_nan=False)
angles = st.floats(-np.pi, np.pi, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)


@DSP
@given(f=freqs, ph=phases, s1=st.integers(0, 10**7), n1=st.integers(1, 300),
       gap=st.integers(0, 10**9), n2=st.integers(1, 300))
def test_phase_coherent_across_gap(f, ph, s1, n1, gap, n2):
    CASES["test_phase_coherent_across_gap"] += 1
    # a pulse after an idle gap continues the carrier a single long pulse would have played
    ch = DdsChannel(f, ph)
    s2 = s1 + n1 + gap
    second = synthesize_pulse(ch, flat(n2), s2, CLOCK).samples
    n = np.arange(s2, s2 + n2)
    acc = (n.astype(object) * freq_word(f, CLOCK.f_s)) % PHASE_MODULUS
    assert np.array_equal(phase_accumulator(ch, CLOCK, n), np.array(acc, dtype=np.uint64))
    carrier = np.exp(1j * np.mod(np.array(acc, float) * (2 * np.pi / PHASE_MODULUS) + ch.phase_offset,
                                 2 * np.pi))
    assert np.max(np.abs(second - carrier)) < 1e-12


@DSP
@given(tones=st.lists(st.tuples(freqs, phases, st.floats(-1, 1)), min_size=2, max_size=8),
       split=st.integers(1, 7), start=st.integers(0, 10**6))
def test_mux_linear(tones, split, start):
    CASES["test_mux_linear"] += 1
    split = min(split, len(tones) - 1)
    chans = [(DdsChannel(f, ph), g) for f, ph, g in tones]
    whole = synthesize_mux(chans, 64, CLOCK, start).samples
    parts = (synthesize_mux(chans[:split], 64, CLOCK, start).samples
             + synthesize_mux(chans[split:], 64, CLOCK, start).samples)
    assert np.max(np.abs(whole - parts)) <= 1e-12 * len(tones)


@DSP
@given(f=st.floats(0, 1, exclude_max=True), amp=st.floats(0.01, 10), ph=phases)
def test_pfb_energy_within_ripple(f, amp, ph):
    CASES["test_pfb_energy_within_ripple"] += 1
    x = amp * np.exp(1j * (2 * np.pi * f * np.arange(1024) + ph))
    s = channelize(x, CFG, UNIT, all_branches=True)
    d = s.data[:, s.valid]
    energy = np.sum(np.abs(d) ** 2) / d.shape[1] / amp ** 2
    assert abs(energy - 1.0) <= RIPPLE + 1e-12


@DSP
@given(tones=st.lists(st.tuples(st.floats(0, 1 / 48), phases, st.floats(0.05, 1)),
                      min_size=1, max_size=3),
       n=st.integers(48, 160))
def test_interpolation_band_limited(tones, n):
    CASES["test_interpolation_band_limited"] += 1
    # envelope content below f_s/48, i.e. a third of the envelope Nyquist rate
    total = sum(a for _, _, a in tones)
    k = np.arange(n * 16)

    def signal(idx):
        return sum(0.9 * a / total * np.cos(2 * np.pi * f * idx + p) for f, p, a in tones)

    y = interpolate_envelope(Envelope(signal(k[::16]), 16)).samples.real
    ref = signal(k)
    sl = slice(16 * 16, -16 * 16)
    err = np.linalg.norm(y[sl] - ref[sl])
    assert err <= 1e-3 * max(np.linalg.norm(ref[sl]), 1e-3 * np.sqrt(len(ref[sl])))


@PROPS
@given(x=st.lists(st.floats(-2, 2), min_size=1, max_size=50))
def test_quantize_idempotent_and_bounded(x):
    q, sat = quantize_real(x)
    q2, sat2 = quantize_real(q)
    assert np.array_equal(q, q2) and not sat2
    x = np.asarray(x)
    inside = (x >= -1) & (x <= 1 - 2**-16)
    assert np.all(np.abs(q - x)[inside] <= 2**-16)


@PROPS
@given(theta=angles, d=angles, a=angles, b=angles, zz=angles)
def test_gate_unitary(theta, d, a, b, zz):
    u = bswap_unitary(GatePhases(theta, d, a, b, zz))
    assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-12)


@PROPS
@given(v=st.tuples(angles, st.floats(0, np.pi), st.floats(0, 1)), g=angles, c=angles)
def test_projection_idempotent_and_contracting(v, g, c):
    az, pol, r = v
    b = r * np.array([np.sin(pol) * np.cos(az), np.sin(pol) * np.sin(az), np.cos(pol)])
    once = parametric_project(b, g, c)
    assert np.allclose(parametric_project(once, g, c), once, atol=1e-12)
    assert np.linalg.norm(once) <= np.linalg.norm(b) + 1e-12


@PROPS
@given(seed=seeds)
def test_predistort_round_trip(seed):
    rng = np.random.default_rng(seed)
    h = random_transfer_function(rng)
    x = rng.normal(size=2000)
    y = apply_channel(predistort(h, x, CLOCK.f_s), h, CLOCK.f_s)
    assert np.max(np.abs(y - x)) < 1e-6 * np.max(np.abs(x))


@settings(max_examples=60, deadline=None, derandomize=True)
@given(seed=st.integers(0, 10**6))
def test_program_print_parse(seed):
    p = parse(make_case(seed).text)
    assert parse(format_program(p)) == p


@PROPS
@given(f=st.floats(-1e10, 1e10))
def test_bins_in_range_and_mirror_symmetric(f):
    b = assign_bin(f, 2457.6e6)
    assert 0 <= b <= 8 and b == assign_bin(-f, 2457.6e6)
