from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from qctrlsim.dsp import (PHASE_MODULUS, TWO_PI, ComplexWaveform, DdsChannel, Envelope,
                          FixedPointFormat, SampleClock, dds_phase_at, drag, flat, freq_word,
                          gaussian, interpolate_envelope, interpolation_kernel, fold_frequency,
                          nyquist_zone, overlay, phase_reset, quantize, quantize_real,
                          realized_freq, synthesize_mux, synthesize_pulse, triangle, zone_gain)
from qctrlsim.errors import CapacityError, DomainError

F_DAC = 6881.28e6
CLK = SampleClock(F_DAC)


def rational_phase(freq_word_or_frac, k, offset=0.0):
    """Phase from exact rational cycles; the float conversion happens once at the end."""
    cycles = (Fraction(freq_word_or_frac) * k) % 1
    return float(np.mod(TWO_PI * float(cycles) + offset, TWO_PI))


class TestDdsPhase:
    def test_quarter_rate(self):
        ch = DdsChannel(F_DAC / 4)
        assert dds_phase_at(ch, CLK, 3) == 3 * np.pi / 2

    def test_dc_offset(self):
        ch = DdsChannel(0.0, phase_offset=1.0)
        assert all(dds_phase_at(ch, CLK, n) == 1.0 for n in (0, 1, 12345, 10**9))

    def test_91mhz_after_1e6_samples_rational_oracle(self):
        ch = DdsChannel(91e6)
        n = 10**6
        word = round(Fraction(91_000_000) * PHASE_MODULUS / Fraction(6_881_280_000))
        hw = rational_phase(Fraction(word, PHASE_MODULUS), n)
        assert dds_phase_at(ch, CLK, n) == pytest.approx(hw, abs=1e-12)
        exact = rational_phase(Fraction(91_000_000, 6_881_280_000), n)
        assert dds_phase_at(ch, CLK, n, exact_freq=True) == pytest.approx(exact, abs=1e-9)

    def test_word_rounding_bound(self):
        for f in (91e6, 950e6, -816e6, 1234.5678e6):
            assert abs(realized_freq(f, F_DAC) - f) <= F_DAC / PHASE_MODULUS / 2

    def test_negative_frequency_word(self):
        assert freq_word(-F_DAC / 4, F_DAC) == 3 * PHASE_MODULUS // 4
        assert realized_freq(-F_DAC / 4, F_DAC) == -F_DAC / 4

    def test_before_epoch_raises(self):
        ch = DdsChannel(1e6, reset_epoch=100)
        with pytest.raises(DomainError):
            dds_phase_at(ch, CLK, 99)

    def test_array_matches_scalar(self):
        ch = DdsChannel(333e6, phase_offset=0.3, reset_epoch=7)
        n = np.arange(7, 107)
        arr = dds_phase_at(ch, CLK, n)
        assert np.array_equal(arr, [dds_phase_at(ch, CLK, int(k)) for k in n])
        assert np.all((arr >= 0) & (arr < TWO_PI))

    def test_gain_range(self):
        with pytest.raises(DomainError):
            DdsChannel(1e6, gain=1.5)


class TestSynthesis:
    def test_flat_dc(self):
        w = synthesize_pulse(DdsChannel(0.0), flat(64), 0, CLK)
        assert np.array_equal(w.samples, np.ones(64, complex))

    def test_gap_coherence(self):
        ch = DdsChannel(123.4e6, phase_offset=0.7)
        env = flat(200)
        a = synthesize_pulse(ch, env, 0, CLK)
        b = synthesize_pulse(ch, env, 537, CLK)
        whole = synthesize_pulse(ch, flat(737), 0, CLK)
        assert np.array_equal(a.samples, whole.samples[:200])
        assert np.array_equal(b.samples, whole.samples[537:])

    def test_gaussian_at_eighth_rate_matches_per_sample_product(self):
        ch = DdsChannel(F_DAC / 8, gain=0.8)
        env = gaussian(101, 15.0)
        w = synthesize_pulse(ch, env, 40, CLK)
        k = np.arange(101)
        # f_s/8 advances exactly pi/4 per sample
        ref = 0.8 * env.samples * np.exp(1j * np.pi / 4 * ((40 + k) % 8))
        assert np.allclose(w.samples, ref, rtol=0, atol=1e-15)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            synthesize_pulse(DdsChannel(0.0), flat(11), 0, CLK, max_samples=10)

    def test_empty_envelope(self):
        with pytest.raises(DomainError):
            synthesize_pulse(DdsChannel(0.0), flat(0), 0, CLK)

    def test_start_before_reset(self):
        with pytest.raises(DomainError):
            synthesize_pulse(DdsChannel(0.0, reset_epoch=5), flat(4), 4, CLK)

    def test_interpolated_pulse_length(self):
        w = synthesize_pulse(DdsChannel(0.0), gaussian(8, 2.0, rate_divisor=16), 0, CLK)
        assert len(w) == 128


class TestEnvelope:
    def test_rate_divisor_checked(self):
        with pytest.raises(DomainError):
            Envelope(np.ones(4), 4)

    def test_full_scale_checked(self):
        with pytest.raises(DomainError):
            Envelope(np.array([1.2]))

    def test_shapes(self):
        assert gaussian(65, 10).samples[32] == 1.0
        assert triangle(5).samples.tolist() == [0.0, 0.5, 1.0, 0.5, 0.0]
        d = drag(64, 8, 0.5)
        assert np.iscomplexobj(d.samples) and np.max(np.abs(d.samples)) <= 1.0
        assert flat(3, 0.5).shape == "flat"


class TestInterpolation:
    def test_constant(self):
        out = interpolate_envelope(flat(20, 0.6, rate_divisor=16))
        assert len(out) == 320 and out.rate_divisor == 1
        assert np.allclose(out.samples, 0.6, atol=1e-14)

    def test_impulse_gives_kernel(self):
        n = 64
        x = np.zeros(n)
        x[n // 2] = 1.0
        out = interpolate_envelope(Envelope(x, 16)).samples
        h = interpolation_kernel()
        c = 16 * (n // 2)
        half = (len(h) - 1) // 2
        assert np.allclose(out[c - half:c + half + 1], h, atol=1e-15)

    def test_single_tone_at_64th_rate(self):
        j = np.arange(256)
        f = 1 / 64  # cycles per DAC sample
        e = Envelope(0.9 * np.cos(TWO_PI * f * 16 * j + 0.3), 16)
        y = interpolate_envelope(e).samples.real
        ref = 0.9 * np.cos(TWO_PI * f * np.arange(256 * 16) + 0.3)
        sl = slice(256, -256)
        assert np.linalg.norm(y[sl] - ref[sl]) / np.linalg.norm(ref[sl]) < 1e-3

    def test_rejects_full_rate(self):
        with pytest.raises(DomainError):
            interpolate_envelope(flat(4))

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            interpolate_envelope(Envelope(np.zeros(0), 16))


class TestMux:
    def test_two_identical_tones(self):
        ch = DdsChannel(200e6, phase_offset=0.4)
        w = synthesize_mux([(ch, 1.0), (ch, 1.0)], 500, CLK)
        assert np.allclose(np.abs(w.samples), 2.0, atol=1e-14)

    def test_zero_gain(self):
        w = synthesize_mux([(DdsChannel(1e8), 0.0), (DdsChannel(3e8), 0.0)], 100, CLK)
        assert not np.any(w.samples)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            synthesize_mux([(DdsChannel(1e6 * k), 0.1) for k in range(9)], 10, CLK)

    def test_nyquist_limit(self):
        with pytest.raises(DomainError):
            synthesize_mux([(DdsChannel(F_DAC / 2), 0.1)], 10, CLK)

    def test_reference_offsets_fft_peaks(self):
        offsets = np.array([-70e6, -816e6, 822e6, 91e6])
        n = 1 << 16
        w = synthesize_mux([(DdsChannel(f), 0.2) for f in offsets], n, CLK)
        spec = np.abs(np.fft.fft(w.samples * np.hanning(n)))
        freqs = np.fft.fftfreq(n, 1 / F_DAC)
        peaks = freqs[np.argsort(spec)[::-1]]
        found = []
        for f in peaks:
            if all(abs(f - g) > 5e6 for g in found):
                found.append(f)
            if len(found) == 4:
                break
        bin_w = F_DAC / n
        assert sorted(found) == pytest.approx(sorted(offsets), abs=bin_w)

    def test_linearity_exact(self):
        tones = [(DdsChannel(f, phase_offset=p), g)
                 for f, p, g in [(1e8, 0.1, 0.2), (-4e8, 2.0, 0.3), (7e8, 5.0, 0.1)]]
        total = synthesize_mux(tones, 300, CLK, start=17)
        parts = [synthesize_pulse(replace(c, gain=g), flat(300), 17, CLK).samples for c, g in tones]
        assert np.allclose(total.samples, sum(parts), rtol=0, atol=4e-16)


class TestReset:
    def test_offsets_at_reset(self):
        a, b = phase_reset([DdsChannel(1e8), DdsChannel(3e8, phase_offset=np.pi / 2)], 1000)
        assert dds_phase_at(a, CLK, 1000) == 0.0
        assert dds_phase_at(b, CLK, 1000) == np.pi / 2

    def test_reset_before_epoch(self):
        with pytest.raises(DomainError):
            phase_reset([DdsChannel(1e8, reset_epoch=10)], 5)

    def test_rerun_bit_identical(self):
        def run():
            chans = phase_reset([DdsChannel(1.1e8), DdsChannel(2.2e8)], 50)
            return [synthesize_pulse(c, gaussian(64, 9), 60, CLK).samples for c in chans]
        for x, y in zip(run(), run()):
            assert np.array_equal(x, y)

    def test_three_channel_combination_constant_over_reps(self):
        f1, fp, f2 = 4.4e9 - 4e9, 0.9e9, 5.3e9 - 5e9
        period = 137_641
        combos = []
        for rep in range(100):
            t = rep * period
            c1, cp, c2 = phase_reset([DdsChannel(f1), DdsChannel(fp), DdsChannel(f2)], t)
            combos.append(dds_phase_at(c1, CLK, t + 33) + dds_phase_at(cp, CLK, t + 33)
                          - dds_phase_at(c2, CLK, t + 33))
        assert len(set(combos)) == 1
        assert np.var(combos) < 1e-20


class TestQuantize:
    def test_zero(self):
        vals, sat = quantize_real(0.0)
        assert vals == 0.0 and not sat

    def test_full_scale(self):
        fmt = FixedPointFormat()
        vals, sat = quantize_real(1.0, fmt)
        assert vals == fmt.max_code * fmt.lsb and not sat

    def test_saturation_flag(self):
        w = ComplexWaveform(np.array([1.5 + 0j]), CLK)
        assert quantize(w).saturated

    def test_half_even(self):
        lsb = FixedPointFormat().lsb
        vals, _ = quantize_real(np.array([0.5, 1.5, 2.5]) * lsb)
        assert vals.tolist() == [0.0, 2 * lsb, 2 * lsb]

    def test_format_bounds(self):
        with pytest.raises(DomainError):
            FixedPointFormat(16, 17)


class TestWaveformPlumbing:
    def test_window_zero_fill(self):
        w = ComplexWaveform(np.arange(1, 5), CLK, start=10)
        assert w.window(8, 16).samples.tolist() == [0, 0, 1, 2, 3, 4, 0, 0]

    def test_overlay_sums(self):
        a = ComplexWaveform(np.ones(4), CLK, 0)
        b = ComplexWaveform(np.ones(4), CLK, 2)
        assert overlay([a, b]).samples.real.tolist() == [1, 1, 2, 2, 1, 1]

    def test_overlay_clock_mismatch(self):
        with pytest.raises(DomainError):
            overlay([ComplexWaveform(np.ones(2), CLK), ComplexWaveform(np.ones(2), SampleClock(1e9))])

    def test_clock_positive(self):
        with pytest.raises(DomainError):
            SampleClock(0.0)


class TestZones:
    def test_zone_and_fold(self):
        assert nyquist_zone(100e6, 1e9) == 1
        assert nyquist_zone(600e6, 1e9) == 2
        assert fold_frequency(600e6, 1e9) == pytest.approx(400e6)

    def test_gain_table(self):
        assert zone_gain(100e6, 1e9) > zone_gain(600e6, 1e9)
        assert zone_gain(600e6, 1e9, "mix") > zone_gain(600e6, 1e9, "normal")
        with pytest.raises(DomainError):
            zone_gain(100e6, 1e9, "bogus")
