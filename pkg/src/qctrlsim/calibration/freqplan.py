"""Frequency planning for one multiplexed readout generator plus an optional LO.

A resonator at ``r`` is reached by the DAC tone ``g = f_mix + f_i`` either
directly (no LO) or on one sideband of the mixer, ``r = lo + s g``.  The
return path is mixed down by the same LO, so the ADC sees ``g`` again.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, InfeasiblePlanError
from ..readout import assign_bin, fold_tone

F_DAC = 6881.28e6
F_ADC = 2457.6e6
MAX_TONES = 4


@dataclass(frozen=True)
class FrequencyPlan:
    f_mix: float
    lo: float  # 0 means no external LO
    offsets: tuple  # f_i, Hz
    sidebands: tuple  # +1 or -1 per tone
    bins: tuple

    @property
    def dac_tones(self) -> tuple:
        return tuple(self.f_mix + f for f in self.offsets)

    def resonators(self) -> tuple:
        if self.lo == 0:
            return self.dac_tones
        return tuple(self.lo + s * g for s, g in zip(self.sidebands, self.dac_tones))

    def rows(self):
        """One CSV row per tone: index, resonator, DAC tone, offset, sideband, bin."""
        return [(i, r, g, f, s, b) for i, (r, g, f, s, b) in enumerate(
            zip(self.resonators(), self.dac_tones, self.offsets, self.sidebands, self.bins))]


@dataclass(frozen=True)
class Violation:
    constraint: str  # "offset-range", "dac-range", "bin-collision" or "resonator-mismatch"
    excess: float  # Hz by which the constraint is missed
    detail: str

    def __str__(self):
        return f"{self.constraint}: {self.detail} (misses by {self.excess / 1e6:.3f} MHz)"


def _bin_violations(tones, f_adc):
    width = f_adc / 16
    out = []
    bins = [assign_bin(g, f_adc) for g in tones]
    for i in range(len(tones)):
        for j in range(i + 1, len(tones)):
            if bins[i] == bins[j]:
                # distance either tone would have to move to leave the shared bin
                moves = []
                for g in (tones[i], tones[j]):
                    x = fold_tone(g, f_adc)[0] - bins[i] * width
                    moves.append(min(x, width - x))
                out.append(Violation("bin-collision", float(min(moves)),
                                     f"tones {i} and {j} share bin {bins[i]}"))
    return out


def check_plan(plan: FrequencyPlan, resonators=None, f_dac: float = F_DAC,
               f_adc: float = F_ADC, tol: float = 1.0) -> list[Violation]:
    """Every constraint the plan breaks; empty when valid."""
    out = []
    limit = f_dac / 8
    for i, f in enumerate(plan.offsets):
        if not -limit < f < limit:
            out.append(Violation("offset-range", abs(f) - limit,
                                 f"offset {i} = {f / 1e6:.3f} MHz outside +-{limit / 1e6:.2f} MHz"))
    for i, g in enumerate(plan.dac_tones):
        if not 0 < g <= f_dac:
            out.append(Violation("dac-range", max(g - f_dac, -g),
                                 f"DAC tone {i} = {g / 1e6:.3f} MHz outside (0, {f_dac / 1e6:.2f}] MHz"))
    out.extend(_bin_violations(plan.dac_tones, f_adc))
    if [assign_bin(g, f_adc) for g in plan.dac_tones] != list(plan.bins):
        out.append(Violation("bin-collision", 0.0, "recorded bins disagree with the tones"))
    if resonators is not None:
        for i, (want, got) in enumerate(zip(resonators, plan.resonators())):
            if abs(want - got) > tol:
                out.append(Violation("resonator-mismatch", abs(want - got),
                                     f"tone {i} lands at {got / 1e6:.3f} MHz, not {want / 1e6:.3f} MHz"))
        if len(resonators) != len(plan.offsets):
            out.append(Violation("resonator-mismatch", 0.0, "tone count differs from resonator count"))
    return out


def validate_plan(plan: FrequencyPlan, resonators=None, f_dac: float = F_DAC,
                  f_adc: float = F_ADC) -> FrequencyPlan:
    bad = check_plan(plan, resonators, f_dac, f_adc)
    if bad:
        tight = min(bad, key=lambda v: v.excess)
        raise InfeasiblePlanError("; ".join(map(str, bad)), tightest=tight)
    return plan


def make_plan(resonators, f_mix: float, lo: float, f_adc: float = F_ADC) -> FrequencyPlan:
    """Plan implied by ``(f_mix, lo)``; sidebands follow from which side of the LO each resonator sits."""
    r = np.asarray(resonators, float)
    if lo == 0:
        g, s = r, np.ones(len(r), int)
    else:
        s = np.where(r >= lo, 1, -1)
        g = np.abs(r - lo)
    return FrequencyPlan(float(f_mix), float(lo), tuple((g - f_mix).tolist()), tuple(s.tolist()),
                         tuple(assign_bin(x, f_adc) for x in g))


@dataclass(frozen=True)
class PlanGrid:
    lo_min: float = 0.0
    lo_max: float = 12000e6
    lo_step: float = 5e6
    mix_step: float = 1e6
    mix_max: float = F_DAC


def _best_mix(tones, grid: PlanGrid):
    """Grid value of ``f_mix`` that minimises the largest ``|f_i|``."""
    centre = 0.5 * (max(tones) + min(tones))
    k = np.clip(np.round(centre / grid.mix_step), 0, np.floor(grid.mix_max / grid.mix_step))
    return float(k * grid.mix_step)


def plan_mux(resonators, f_dac: float = F_DAC, f_adc: float = F_ADC,
             grid: PlanGrid = PlanGrid()) -> FrequencyPlan:
    """Exhaustive search over the LO grid and the ``f_mix`` grid.

    Only the offsets depend on ``f_mix``, so for each LO the grid point
    nearest the middle of the tone span is the best ``f_mix`` and the scan
    over it is done in closed form.  Among feasible plans the one with the
    largest margin to the offset limit wins (ties go to the lowest LO).
    When nothing fits, the error names the constraint missed by the
    smallest amount.
    """
    r = [float(x) for x in resonators]
    if not 1 <= len(r) <= MAX_TONES:
        raise DomainError(f"need 1..{MAX_TONES} resonators, got {len(r)}")
    n_lo = int(round((grid.lo_max - grid.lo_min) / grid.lo_step))
    los = grid.lo_min + grid.lo_step * np.arange(n_lo + 1)
    best, best_margin, nearest = None, -np.inf, None
    for lo in los:
        if lo != 0 and np.any(np.isclose(r, lo, rtol=0, atol=1.0)):
            continue
        tones = make_plan(r, 0.0, lo, f_adc).dac_tones
        plan = make_plan(r, _best_mix(tones, grid), lo, f_adc)
        bad = check_plan(plan, None, f_dac, f_adc)
        if bad:
            worst = max(bad, key=lambda v: v.excess)
            if nearest is None or worst.excess < nearest.excess:
                nearest = worst
            continue
        margin = f_dac / 8 - max(abs(f) for f in plan.offsets)
        if margin > best_margin + 1e-6:
            best, best_margin = plan, margin
    if best is None:
        raise InfeasiblePlanError(f"no feasible plan on the grid; closest miss {nearest}", tightest=nearest)
    return best


def reference_plan() -> tuple:
    """The four-resonator reference assignment: ``(resonators, plan)``."""
    res = (6805e6, 5791e6, 7697e6, 6966e6)
    offsets = (-70e6, -816e6, 822e6, 91e6)
    f_mix, lo = 950e6, 5925e6
    sidebands = (1, -1, 1, 1)
    tones = [f_mix + f for f in offsets]
    return res, FrequencyPlan(f_mix, lo, offsets, sidebands, tuple(assign_bin(g, F_ADC) for g in tones))
