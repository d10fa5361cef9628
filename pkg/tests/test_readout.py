import numpy as np
import pytest

from qctrlsim.dsp import DdsChannel, SampleClock, synthesize_mux
from qctrlsim.errors import CapacityError, CollisionError, DomainError
from qctrlsim.readout import (MAX_OUTPUTS, MuxReadout, PfbConfig, ReadoutResult, assign_bin,
                              channelize, channelize_direct, check_bins, demodulate_accumulate,
                              export_results_csv, fold_tone, load_coefficients_csv, loopback)

F_DAC, F_ADC = 6881.28e6, 2457.6e6
UNIT = SampleClock(1.0)
CFG = PfbConfig()


def channel_energy(x):
    s = channelize(x, CFG, UNIT)
    return np.sum(np.abs(s.data[:, s.valid]) ** 2, axis=1)


class TestChannelize:
    k = np.arange(8192)

    def test_dc_in_channel_zero(self):
        e = channel_energy(np.ones(len(self.k)))
        assert np.argmax(e) == 0 and e[0] / e.sum() > 0.999

    def test_three_sixteenths(self):
        e = channel_energy(np.exp(2j * np.pi * 3 / 16 * self.k))
        assert e[3] / e.sum() >= 0.99

    def test_real_tone_three_sixteenths(self):
        e = channel_energy(np.cos(2 * np.pi * 3 / 16 * self.k))
        assert e[3] / e.sum() >= 0.99

    def test_midway_split(self):
        e = channel_energy(np.exp(2j * np.pi * 2.5 / 16 * self.k))
        assert e[2] / e[3] == pytest.approx(1.0, abs=0.01)
        assert (e[2] + e[3]) / e.sum() > 0.99

    def test_matches_direct_reference(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=3000) + 1j * rng.normal(size=3000)
        fast = channelize(x, CFG, UNIT).data
        ref = channelize_direct(x, CFG, UNIT)
        assert np.max(np.abs(fast - ref)) < 1e-10 * np.max(np.abs(ref))

    def test_short_input(self):
        with pytest.raises(DomainError):
            channelize(np.ones(CFG.span - 1), CFG, UNIT)

    def test_raw_array_needs_clock(self):
        with pytest.raises(DomainError):
            channelize(np.ones(512), CFG)

    def test_transient_flagged(self):
        s = channelize(np.ones(1024), CFG, UNIT)
        first = int(np.argmax(s.valid))
        assert first * CFG.decimation >= CFG.span - 1
        assert not s.valid[:first].any() and s.valid[first:].all()

    def test_energy_within_ripple(self):
        bound = CFG.ripple_bound()
        for f in np.random.default_rng(1).uniform(0, 1, 10):
            s = channelize(np.exp(2j * np.pi * f * self.k), CFG, UNIT, all_branches=True)
            d = s.data[:, s.valid]
            assert np.sum(np.abs(d) ** 2) / d.shape[1] == pytest.approx(1.0, abs=bound)

    def test_flat_coverage(self):
        # up to the upper crossover of the last exposed channel
        f = np.linspace(0, 7.5 / 16, 401)
        best = [max(abs(CFG.response(x - c / 16, 1.0)) for c in range(8)) for x in f]
        assert min(best) >= np.sqrt(0.5) - CFG.ripple_bound()

    def test_gap_above_last_channel_warns(self):
        with pytest.warns(UserWarning):
            MuxReadout(F_ADC).add_output(1200e6)

    def test_geometry(self):
        assert CFG.n_branches == 16 and CFG.decimation == 8
        assert CFG.channel_spacing(F_ADC) == pytest.approx(153.6e6)


class TestDemod:
    def test_own_tone(self):
        dds = DdsChannel(0.07)
        idx = np.arange(500)
        from qctrlsim.dsp import dds_phase_at
        stream = np.exp(1j * dds_phase_at(dds, UNIT, idx))
        r = demodulate_accumulate(stream, dds, 400, UNIT)
        assert r.i == pytest.approx(400, abs=1e-9) and r.q == pytest.approx(0, abs=1e-9)
        r = demodulate_accumulate(1j * stream, dds, 400, UNIT)
        assert r.i == pytest.approx(0, abs=1e-9) and r.q == pytest.approx(400, abs=1e-9)

    def test_zero_window(self):
        with pytest.raises(DomainError):
            demodulate_accumulate(np.ones(4), DdsChannel(0.0), 0)

    def test_window_past_end(self):
        with pytest.raises(DomainError):
            demodulate_accumulate(np.ones(4), DdsChannel(0.0), 5)

    def test_magnitude_bound(self):
        r = demodulate_accumulate(np.ones(64), DdsChannel(0.01), 64)
        assert abs(r.iq) <= 64


class TestBins:
    def test_examples(self):
        assert assign_bin(91e6, F_ADC) == 0
        assert assign_bin(822e6, F_ADC) == 5

    def test_reference_dac_tones_distinct(self):
        tones = [950e6 + f for f in (-70e6, -816e6, 822e6, 91e6)]
        assert check_bins(tones, F_ADC) == [5, 0, 4, 6]

    def test_collision_names_both(self):
        with pytest.raises(CollisionError) as e:
            check_bins([100e6, 110e6], F_ADC)
        assert e.value.tones == (100e6, 110e6)

    def test_folding(self):
        assert fold_tone(F_ADC - 100e6, F_ADC)[0] == pytest.approx(100e6)
        assert fold_tone(-100e6, F_ADC) == (100e6, True)
        assert assign_bin(F_ADC / 2, F_ADC) == 7


class TestMuxReadout:
    def test_output_limit(self):
        ro = MuxReadout(F_ADC)
        for f in (1e8, 3e8, 5e8, 7e8):
            ro.add_output(f)
        assert len(ro.outputs) == MAX_OUTPUTS
        with pytest.raises(CapacityError):
            ro.add_output(9e8)

    def test_loopback_four_tones(self):
        tones = [(880e6, 0.2, 0.2), (134e6, 0.2, -0.8), (1772e6, 0.2, 2.1), (1041e6, 0.2, 3.5)]
        got = loopback(tones, F_DAC, F_ADC)
        for (f, a, ph), z in zip(tones, got):
            assert abs(abs(z) - a) / a < 0.01
            assert abs(np.degrees(np.angle(z * np.exp(-1j * ph)))) < 1.0

    def test_loopback_too_many(self):
        with pytest.raises(CapacityError):
            loopback([(1e8 * k, 0.1, 0.0) for k in range(1, 6)], F_DAC, F_ADC)

    def test_direct_adc_tone(self):
        adc = SampleClock(F_ADC)
        w = synthesize_mux([(DdsChannel(500e6, phase_offset=1.0), 0.5)], 8192, adc)
        ro = MuxReadout(F_ADC)
        ro.add_output(500e6)
        (_, amp), = ro.measure(w.samples.real, clock=adc)
        assert abs(amp) == pytest.approx(0.5, rel=1e-3)
        assert np.angle(amp) == pytest.approx(1.0, abs=1e-3)


class TestCsv:
    def test_results_export(self, tmp_path):
        p = tmp_path / "r.csv"
        export_results_csv(p, [(0, ReadoutResult(1.5, -2.0, 3, 10))])
        assert p.read_text().splitlines() == ["rep,channel,i,q", "0,3,1.5,-2.0"]

    def test_coefficients_roundtrip(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("index,coeff\n" + "".join(f"{i},{float(c)!r}\n" for i, c in enumerate(CFG.prototype)))
        cfg = load_coefficients_csv(p)
        assert np.array_equal(cfg.prototype, CFG.prototype)

    def test_coefficients_wrong_length(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("1.0\n2.0\n")
        with pytest.raises(DomainError):
            load_coefficients_csv(p)
