import warnings

import numpy as np
import pytest

from qctrlsim.calibration import (CollapseWarning, FluxCalibrationConfig, PlanGrid,
                                  calibrate_compensation, calibrate_flux_line,
                                  calibrate_gate_phase, check_plan, extract_detuning,
                                  fit_exponentials, fit_lorentzian, inverse_filter, lorentzian,
                                  make_plan, reference_plan, plan_mux, predistort,
                                  random_transfer_function, refine, signals_from_populations,
                                  validate_plan)
from qctrlsim.calibration.gatephase import sweep_gate_phase
from qctrlsim.device import CrosstalkScenario, FluxQubit, GatePhases, TransferFunction, apply_channel
from qctrlsim.device.flux import ramsey_traces
from qctrlsim.errors import DomainError, FitError, InfeasiblePlanError

F_S = 6.88128e9
QUBIT = FluxQubit(5e9, 2e9)


def wrap_deg(x):
    return (x + 180.0) % 360.0 - 180.0


class TestDetuning:
    def test_closed_form_rotation(self):
        dt, f = 1e-9, 3.7e6
        t = np.arange(300) * dt
        tr = extract_detuning(np.cos(2 * np.pi * f * t), np.sin(2 * np.pi * f * t), dt)
        assert tr.valid.all()
        assert np.allclose(tr.delta, f, rtol=1e-9)

    def test_constant_phase_gives_zero(self):
        tr = extract_detuning(np.full(50, 0.6), np.full(50, 0.8), 1e-9)
        assert np.all(tr.delta == 0.0)

    def test_device_ramsey(self):
        d0 = -80e6
        x = np.full(600, QUBIT.amplitude_for(d0))
        px, py = ramsey_traces(QUBIT, x, F_S)
        tr = extract_detuning(*signals_from_populations(px, py), 1 / F_S)
        assert np.allclose(tr.delta[2:-1], d0, rtol=0.01)

    def test_low_amplitude_masked(self):
        x, y = np.cos(np.arange(20) * 0.1), np.sin(np.arange(20) * 0.1)
        x[10] = y[10] = 0.0
        tr = extract_detuning(x, y, 1.0)
        assert not tr.valid[10] and np.isnan(tr.delta[10])
        assert tr.valid[:10].all() and tr.valid[11:].all()

    def test_domain(self):
        with pytest.raises(DomainError):
            extract_detuning(np.ones(5), np.ones(4), 1.0)
        with pytest.raises(DomainError):
            extract_detuning(np.ones(5), np.ones(5), 0.0)


class TestExpFit:
    t = np.geomspace(1e-10, 20e-6, 1500)

    def test_single_term_exact(self):
        y = TransferFunction(((0.1, 100e-9),)).step_response(self.t)
        (a, tau), = fit_exponentials(self.t, y, 1).terms
        assert a == pytest.approx(0.1, rel=1e-6) and tau == pytest.approx(100e-9, rel=1e-6)

    def test_flat_response(self):
        r = fit_exponentials(self.t, np.ones_like(self.t), 1)
        assert all(abs(a) < 1e-8 for a, _ in r.terms)

    def test_two_terms_noise_monte_carlo(self):
        true = np.array([0.2, 30e-9, -0.1, 1e-6])
        h = TransferFunction(((0.2, 30e-9), (-0.1, 1e-6)))
        errs = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            y = h.step_response(self.t) + rng.normal(0, 1e-3, self.t.size)
            got = np.array(fit_exponentials(self.t, y, 2).terms).ravel()
            errs.append(np.abs(got - true) / np.abs(true))
        assert np.all(np.percentile(errs, 95, axis=0) < 0.01)

    def test_collapse_warns_and_merges(self):
        y = TransferFunction(((0.1, 100e-9),)).step_response(self.t)
        with pytest.warns(CollapseWarning):
            r = fit_exponentials(self.t, y, 2, initial_taus=[99e-9, 101e-9])
        assert r.n_terms == 1

    def test_refine_keeps_solution(self):
        y = TransferFunction(((0.1, 50e-9), (0.05, 2e-6))).step_response(self.t)
        r = fit_exponentials(self.t, y, 2)
        assert np.allclose(np.array(refine(r, self.t, y).terms), np.array(r.terms), rtol=1e-6)

    @pytest.mark.parametrize("n", [0, 5])
    def test_term_count(self, n):
        with pytest.raises(DomainError):
            fit_exponentials(self.t, np.ones_like(self.t), n)

    def test_too_few_points(self):
        with pytest.raises(DomainError):
            fit_exponentials(self.t[:7], np.ones(7), 2)


class TestPredistort:
    def test_identity_line(self):
        x = np.random.default_rng(0).normal(size=64)
        assert np.array_equal(predistort(TransferFunction(), x, F_S), x)

    def test_single_pole_step_flat(self):
        h = TransferFunction(((-0.2, 100e-9),))
        step = np.ones(5000)
        out = apply_channel(predistort(h, step, F_S), h, F_S)
        assert np.max(np.abs(out[1:] - 1)) < 1e-3

    def test_overshoot_for_undershooting_line(self):
        h = TransferFunction(((-0.2, 100e-9),))
        d = predistort(h, np.ones(2000), F_S)
        assert d[0] == pytest.approx(1 / 0.8) and d[-1] < d[0] and np.all(np.diff(d) <= 1e-15)

    def test_round_trip_random_lines(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            h = random_transfer_function(rng)
            x = rng.normal(size=3000)
            y = apply_channel(predistort(h, x, F_S), h, F_S)
            assert np.max(np.abs(y - x)) < 1e-4 * np.max(np.abs(x))

    def test_not_invertible(self):
        with pytest.raises(DomainError):
            inverse_filter(TransferFunction(((-1.0, 1e-8),)), F_S)

    def test_plain_array_needs_rate(self):
        with pytest.raises(DomainError):
            predistort(TransferFunction(((0.1, 1e-8),)), np.ones(4))


class TestLorentz:
    f = np.linspace(-50e6, 50e6, 201) + 4.9e9

    def test_round_trip(self):
        fit = fit_lorentzian(self.f, lorentzian(self.f, 4.903e9, 7e6, 0.8))
        assert fit.center == pytest.approx(4.903e9, abs=1e-8 * 7e6)
        assert fit.width == pytest.approx(7e6, rel=1e-8)
        assert fit.amplitude == pytest.approx(0.8, rel=1e-8)

    def test_symmetric_data_centred(self):
        fit = fit_lorentzian(self.f, 1.0 / (1.0 + ((self.f - 4.9e9) / 3e6) ** 4))
        assert fit.center == pytest.approx(4.9e9, abs=1.0)

    def test_no_peak(self):
        with pytest.raises(FitError):
            fit_lorentzian(self.f, np.zeros_like(self.f))


class TestCrosstalk:
    def test_reference_scenario(self):
        s = CrosstalkScenario.with_stark_shift(7e6)
        r = calibrate_compensation(s)
        assert abs(wrap_deg(np.degrees(r.compensation.phase_a) - 180.0)) < 2.0
        assert r.center == pytest.approx(110.2e6, abs=0.05e6)

    def test_no_crosstalk(self):
        r = calibrate_compensation(CrosstalkScenario(stark_coeff=1e6))
        assert r.compensation.amp_a == 0.0 and r.compensation.amp_b == 0.0
        assert len(r.notes) == 2

    def test_phase_follows_drive(self):
        s = CrosstalkScenario.with_stark_shift(7e6, drive_phase=np.radians(40.0))
        r = calibrate_compensation(s)
        assert abs(wrap_deg(np.degrees(r.compensation.phase_a) - 220.0)) < 2.0


class TestGatePhase:
    def test_reference_optimum(self):
        r = calibrate_gate_phase(GatePhases(phi_01=np.radians(1.0), phi_10=np.radians(2.0)))
        assert np.degrees(r.phi_a) == pytest.approx(357.0, abs=0.5)

    def test_no_phase_error(self):
        r = calibrate_gate_phase(GatePhases())
        assert abs(wrap_deg(np.degrees(r.phi_a))) < 0.5

    def test_random_phases(self):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            g = GatePhases(phi_d=rng.uniform(0, 2 * np.pi), phi_01=rng.uniform(-0.5, 0.5),
                           phi_10=rng.uniform(-0.5, 0.5), phi_zz=rng.uniform(-0.5, 0.5))
            r = calibrate_gate_phase(g, companions=False)
            assert abs(wrap_deg(np.degrees(r.phi_a + g.phi_11))) < 0.5

    def test_companions_recover_zz(self):
        g = GatePhases(phi_01=0.03, phi_10=-0.02, phi_zz=0.05)
        r = calibrate_gate_phase(g)
        assert r.phi_01 == pytest.approx(0.03, abs=1e-3)
        assert r.phi_10 == pytest.approx(-0.02, abs=1e-3)
        assert r.phi_zz == pytest.approx(0.05, abs=2e-3)

    def test_flat_sweep(self):
        with pytest.raises(FitError):
            calibrate_gate_phase(GatePhases(theta=0.0))

    def test_block_count(self):
        with pytest.raises(DomainError):
            calibrate_gate_phase(GatePhases(), blocks=400)

    def test_sweep_shape(self):
        deg, p = sweep_gate_phase(GatePhases())
        assert len(deg) == 360 and np.all((p >= -1e-12) & (p <= 1 + 1e-12))


class TestFreqPlan:
    def test_reference_plan_valid(self):
        res, plan = reference_plan()
        assert validate_plan(plan, res) is plan
        assert plan.bins == (5, 0, 4, 6)

    def test_search_finds_valid_plan(self):
        res, _ = reference_plan()
        plan = plan_mux(res)
        assert check_plan(plan, res) == []

    def test_single_resonator_no_lo(self):
        plan = plan_mux([800e6])
        assert plan.lo == 0 and check_plan(plan, [800e6]) == []

    def test_close_pair_without_lo_infeasible(self):
        with pytest.raises(InfeasiblePlanError) as e:
            plan_mux([800e6, 810e6], grid=PlanGrid(lo_max=0.0))
        assert e.value.tightest.constraint == "bin-collision"

    def test_offset_violation_reported(self):
        plan = make_plan([2000e6], 0.0, 0.0)
        assert [v.constraint for v in check_plan(plan)] == ["offset-range"]

    def test_too_many(self):
        with pytest.raises(DomainError):
            plan_mux([1e9, 2e9, 3e9, 4e9, 5e9])


class TestFluxLine:
    def test_fixed_line_settles(self):
        line = TransferFunction(((-0.1, 20e-9), (0.05, 400e-9)))
        cfg = FluxCalibrationConfig(horizon=5e-6)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CollapseWarning)
            cal = calibrate_flux_line(QUBIT, line, cfg)
        assert cal.settle_error(cfg.settle_time) < cfg.settle_tol
