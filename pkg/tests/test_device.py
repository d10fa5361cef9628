import numpy as np
import pytest
from scipy.signal import fftconvolve

from qctrlsim.calibration import fit_lorentzian
from qctrlsim.device import (Compensation, CrosstalkScenario, FluxQubit, GatePhases,
                             TransferFunction, apply_channel, bswap_unitary, chevron_center,
                             chevron_map)
from qctrlsim.device.flux import (accumulated_phase, impulse_response, probe_linewidth,
                                  qubit_freq, ramsey_from_phase, ramsey_population, ramsey_traces,
                                  spectroscopy_integrated, spectroscopy_population)
from qctrlsim.device.gates import (amplified_populations, basis_state, bell_state, density,
                                   populations, purity, run_gate_sequence, state_fidelity, z_gates)
from qctrlsim.device.parametric import (AnalogLoModel, ParametricScenario,
                                        bloch_length_after_measurement, fit_axis_sweep,
                                        iswap_readout_phase, parametric_project)
from qctrlsim.errors import DomainError

F_S = 6.88128e9
QUBIT = FluxQubit(5e9, 2e9)


class TestChannel:
    def test_identity(self):
        x = np.random.default_rng(0).normal(size=100)
        assert np.array_equal(apply_channel(x, TransferFunction(), F_S), x)

    def test_single_term_step_closed_form(self):
        tau = 100e-9
        h = TransferFunction(((-0.2, tau),))
        n = int(round(5 * tau * F_S)) + 10
        y = apply_channel(np.ones(n), h, F_S)
        for t in (0.0, tau, 5 * tau):
            k = int(round(t * F_S))
            assert y[k] == pytest.approx(1 - 0.2 * np.exp(-k / F_S / tau), abs=1e-12)

    def test_fft_convolution_oracle(self):
        rng = np.random.default_rng(1)
        h = TransferFunction(((0.3, 20e-9), (-0.1, 400e-9), (0.05, 3e-6), (-0.2, 9e-6)))
        n = 100_000
        x = rng.normal(size=n)
        fast = apply_channel(x, h, F_S)
        ref = fftconvolve(x, impulse_response(h, n, F_S))[:n]
        assert np.max(np.abs(fast - ref)) <= 1e-9 * np.max(np.abs(ref))

    def test_needs_rate(self):
        with pytest.raises(DomainError):
            apply_channel(np.ones(3), TransferFunction())

    def test_terms_validated(self):
        with pytest.raises(DomainError):
            TransferFunction(((0.1, 0.0),))

    def test_step_response_limits(self):
        h = TransferFunction(((0.1, 1e-9), (-0.3, 1e-6)))
        assert h.initial_value == pytest.approx(0.8)
        assert h.step_response(1.0) == pytest.approx(1.0)


class TestQubit:
    def test_zero_flux(self):
        assert np.all(qubit_freq(QUBIT, np.zeros(10)) == 5e9)

    def test_constant_flux(self):
        assert np.allclose(QUBIT.detuning(np.full(5, 0.1)), -2e9 * 0.01)

    def test_distorted_step_composition(self):
        h = TransferFunction(((-0.2, 50e-9),))
        x = np.full(2000, QUBIT.amplitude_for(-100e6))
        delivered = apply_channel(x, h, F_S)
        d = QUBIT.detuning(delivered)
        assert np.allclose(d, -2e9 * delivered ** 2)
        assert abs(d[-1] + 100e6) < abs(d[0] + 100e6)

    def test_cannot_tune_up(self):
        with pytest.raises(DomainError):
            QUBIT.amplitude_for(1e6)


class TestRamsey:
    def test_zero_detuning(self):
        assert ramsey_population(QUBIT, np.zeros(10), 10, "X", F_S) == pytest.approx(1.0)
        assert ramsey_population(QUBIT, np.zeros(10), 10, "Y", F_S) == pytest.approx(0.5)

    def test_constant_detuning_rate(self):
        d0 = -37e6
        x = np.full(400, QUBIT.amplitude_for(d0))
        px, py = ramsey_traces(QUBIT, x, F_S)
        phi = np.unwrap(np.angle((2 * px - 1) + 1j * (2 * py - 1)))
        rate = np.diff(phi) * F_S / (2 * np.pi)
        assert np.allclose(rate, d0, rtol=1e-6)

    def test_quadratures_on_unit_circle(self):
        phi = np.random.default_rng(2).uniform(-10, 10, 200)
        x = 2 * ramsey_from_phase(phi, "X") - 1
        y = 2 * ramsey_from_phase(phi, "Y") - 1
        assert np.allclose(x ** 2 + y ** 2, 1.0, atol=1e-12)

    def test_phase_is_held_sample_integral(self):
        x = np.linspace(0, 0.2, 50)
        phi = accumulated_phase(QUBIT, x, F_S)
        assert phi[0] == 0.0
        assert phi[-1] == pytest.approx(2 * np.pi / F_S * np.sum(QUBIT.detuning(x)))

    def test_support_checked(self):
        with pytest.raises(DomainError):
            ramsey_population(QUBIT, np.zeros(4), 5, f_s=F_S)

    def test_axis_checked(self):
        with pytest.raises(DomainError):
            ramsey_from_phase(0.0, "Z")


class TestSpectroscopy:
    def test_peak_at_qubit(self):
        x = np.zeros(2000)
        on = spectroscopy_population(QUBIT, x, 1000, 5e9, F_S)
        assert on == pytest.approx(0.5)
        assert on >= spectroscopy_population(QUBIT, x, 1000, 5e9 + 1e6, F_S)

    def test_far_detuned(self):
        gamma = probe_linewidth(7e-9)
        assert spectroscopy_population(QUBIT, np.zeros(2000), 1000, 5e9 + 30 * gamma, F_S) < 1e-3

    def test_drifting_center_matches_integration_oracle(self):
        n = 3000
        x = QUBIT.amplitude_for(-100e6) * (1 - 0.3 * np.exp(-np.arange(n) / F_S / 20e-9))
        gamma = probe_linewidth(7e-9)
        # probe window (+-4 sigma, 193 samples) entirely after the step onset
        for delay in (200, 400, 1500):
            model = fit_lorentzian(*self._sweep(spectroscopy_population, x, delay, gamma)).center
            oracle = fit_lorentzian(*self._sweep(spectroscopy_integrated, x, delay, gamma)).center
            assert abs(model - oracle) < gamma / 10

    @staticmethod
    def _sweep(fn, x, delay, gamma):
        mid = qubit_freq(QUBIT, x[delay:delay + 1])[0]
        freqs = mid + np.linspace(-3, 3, 61) * gamma
        if fn is spectroscopy_population:
            return freqs, fn(QUBIT, x, delay, freqs, F_S)
        return freqs, np.array([fn(QUBIT, x, delay, f, F_S) for f in freqs])


class TestParametric:
    def test_iswap_phase(self):
        assert iswap_readout_phase(0, 0, 0) == -1.0
        assert iswap_readout_phase(np.pi / 4, np.pi / 4, 0) == pytest.approx(0.0, abs=1e-15)
        assert iswap_readout_phase(np.pi, 0, 0) == 1.0

    def test_projection_examples(self):
        assert np.allclose(parametric_project([1, 0, 0], 0, 0), [1, 0, 0])
        assert np.allclose(parametric_project([0, 1, 0], 0, 0), [0, 0, 0])

    def test_projection_sweep_oracle(self):
        phi_c = np.linspace(0, 4 * np.pi, 41)
        out = parametric_project(np.array([1.0, 0, 0]), 0.7, phi_c)
        r = np.linalg.norm(out, axis=-1)
        assert np.allclose(r, np.abs(np.cos((0.7 - phi_c) / 2)), atol=1e-14)

    def test_projection_rejects_long_vector(self):
        with pytest.raises(DomainError):
            parametric_project([1.1, 0, 0], 0, 0)

    def test_bloch_length(self):
        assert bloch_length_after_measurement(0.3, 0.6, 0.0) == pytest.approx(1.0)

    def test_axis_fit(self):
        phi_c = np.linspace(0, 2 * np.pi, 16, endpoint=False)
        r2 = np.cos((1.1 - phi_c) / 2) ** 2
        assert fit_axis_sweep(phi_c, r2) == pytest.approx(1.1)

    def test_scenario(self):
        s = ParametricScenario(4.4e9, 5.3e9, delta=1e6, phi_g=1.0, phi_c=0.2)
        assert s.fp == pytest.approx(0.9e9 + 1e6)
        assert s.phi_m == pytest.approx(0.4) and s.phi_s == pytest.approx(0.6)
        with pytest.raises(DomainError):
            ParametricScenario(5e9, 4e9)

    def test_drift_reproducible(self):
        m = AnalogLoModel({"a": 4e9, "b": 1e9}, seed=3)
        t = np.linspace(0, 3600, 1000)
        assert np.array_equal(m.drift("a", t), m.drift("a", t))
        assert not np.array_equal(m.drift("a", t), m.drift("b", t))
        with pytest.raises(DomainError):
            m.drift("c", t)


class TestGates:
    def test_identity_at_zero(self):
        assert np.allclose(bswap_unitary(GatePhases(theta=0.0)), np.eye(4))

    def test_half_rotation(self):
        psi = run_gate_sequence([bswap_unitary(GatePhases(theta=np.pi / 2))])
        assert np.allclose(psi, [0, 0, 0, 1j])

    def test_unitary_random(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            u = bswap_unitary(GatePhases(*rng.uniform(-np.pi, np.pi, 5)))
            assert np.max(np.abs(u @ u.conj().T - np.eye(4))) < 1e-12

    def test_period_four(self):
        u = bswap_unitary(GatePhases())
        psi0 = np.random.default_rng(5).normal(size=4) + 0j
        psi0 /= np.linalg.norm(psi0)
        assert np.allclose(populations(np.linalg.matrix_power(u, 4) @ psi0), populations(psi0))

    def test_full_rotation_with_corrections(self):
        g = GatePhases(phi_01=0.2, phi_10=-0.5, phi_zz=0.1)
        phi_a = -g.phi_11
        ops = [bswap_unitary(g), z_gates(phi_a, 0.0), bswap_unitary(g)]
        assert populations(run_gate_sequence(ops))[3] == pytest.approx(1.0, abs=1e-12)

    def test_bell_state(self):
        psi = run_gate_sequence([bswap_unitary(GatePhases())])
        rho = density(psi)
        assert state_fidelity(rho, bell_state()) == pytest.approx(1.0, abs=1e-12)
        assert purity(rho) == pytest.approx(1.0, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            run_gate_sequence([np.eye(3)])
        with pytest.raises(DomainError):
            run_gate_sequence([np.eye(4)], np.ones(3))
        with pytest.raises(DomainError):
            run_gate_sequence([])

    def test_amplified_matches_sequential(self):
        g = GatePhases(phi_01=0.03, phi_10=0.02)
        pa, pb = 0.4, -0.1
        psi = basis_state("00")
        block = z_gates(pa, pb) @ bswap_unitary(g)
        for _ in range(402):
            psi = block @ psi
        assert np.allclose(amplified_populations(g, pa, pb, 402), populations(psi), atol=1e-10)

    def test_sweep_optimum_at_357(self):
        g = GatePhases(phi_01=np.radians(1.0), phi_10=np.radians(2.0))
        deg = np.arange(0, 360, 0.1)
        p = amplified_populations(g, np.radians(deg), 0.0)
        assert deg[np.argmax(p[:, 3])] == pytest.approx(357.0, abs=0.1)
        assert deg[np.argmin(p[:, 0])] == pytest.approx(357.0, abs=0.1)


class TestChevron:
    freqs = np.arange(90e6, 130e6, 0.05e6)
    lengths = np.linspace(0, 2e-6, 81)

    def test_no_crosstalk_center(self):
        s = CrosstalkScenario(stark_coeff=1e6)
        grid = chevron_map(s, Compensation(), self.freqs, self.lengths)
        assert chevron_center(self.freqs, grid) == pytest.approx(110.2e6, abs=1e3)

    def test_seven_mhz_shift(self):
        s = CrosstalkScenario.with_stark_shift(7e6)
        assert s.center() == pytest.approx(103.2e6)
        grid = chevron_map(s, Compensation(), self.freqs, self.lengths)
        assert chevron_center(self.freqs, grid) == pytest.approx(103.2e6, abs=1e3)

    def test_exact_cancellation(self):
        s = CrosstalkScenario.with_stark_shift(7e6)
        c = Compensation(0.25, np.pi)
        assert np.allclose(s.residual(c), 0.0)
        assert s.center(c) == pytest.approx(110.2e6)
        e = s.exact_compensation()
        assert e.amp_a == pytest.approx(0.25) and abs(np.cos(e.phase_a) + 1) < 1e-12

    def test_range_and_symmetry(self):
        s = CrosstalkScenario.with_stark_shift(7e6)
        c = s.center()
        d = np.linspace(0, 8e6, 33)
        up = chevron_map(s, Compensation(), c + d, self.lengths)
        down = chevron_map(s, Compensation(), c - d, self.lengths)
        assert np.allclose(up, down, atol=1e-12)
        assert up.min() >= 0 and up.max() <= 1

    def test_matrix_validation(self):
        m = np.eye(3)
        m[0, 2] = 0.3
        with pytest.raises(DomainError):
            CrosstalkScenario(matrix=m)
        with pytest.raises(DomainError):
            CrosstalkScenario(matrix=2 * np.eye(3))
