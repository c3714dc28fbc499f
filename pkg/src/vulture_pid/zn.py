"""Ziegler-Nichols closed-loop (ultimate gain) tuning."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .lti import (
    PidGains,
    Polynomial,
    Stability,
    TransferFunction,
    routh_array,
    routh_stable,
)

log = logging.getLogger(__name__)

BRACKET_CAP = 1e6
BISECT_RTOL = 1e-9


class NoUltimateGain(ValueError):
    """The plant has no finite gain at which the loop becomes marginally stable."""


class ControlType(str, enum.Enum):
    P = "P"
    PI = "PI"
    PID = "PID"


@dataclass(frozen=True)
class UltimateParams:
    ku: float
    tu: float

    def __post_init__(self):
        if not (self.ku > 0 and self.tu > 0):
            raise ValueError(f"ultimate parameters must be positive, got ku={self.ku}, tu={self.tu}")


def gain_loop_den(plant: TransferFunction, k: float) -> Polynomial:
    """Characteristic polynomial den + k*num of the loop closed with a pure gain."""
    return plant.den + plant.num * k


def _crossover_from_routh(plant: TransferFunction, k_stable: float, k_unstable: float, ku: float) -> float:
    """Imaginary-axis frequency at ku, from the auxiliary polynomial of the Routh row above
    the first-column entry that changes sign across the bracket."""
    _, lo_res = routh_array(gain_loop_den(plant, k_stable))
    _, hi_res = routh_array(gain_loop_den(plant, k_unstable))
    col_lo, col_hi = lo_res.first_column, hi_res.first_column
    idx = next(
        (i for i, (a, b) in enumerate(zip(col_lo, col_hi)) if (a > 0) != (b > 0)),
        None,
    )
    if idx is None or idx == 0:
        raise NoUltimateGain("could not locate the Routh row that vanishes at the ultimate gain")
    rows, _ = routh_array(gain_loop_den(plant, ku))
    n = len(rows) - 1
    prev = rows[idx - 1]
    order = n - (idx - 1)
    aux = []
    for k in range(order // 2 + 1):
        aux.append(prev[k])
    # aux(s) = sum_k prev[k] s^(order-2k); substitute w^2 = -s^2 and look for positive roots
    powers = [order - 2 * k for k in range(len(aux))]
    in_w2 = [c * (-1) ** (p // 2) for c, p in zip(aux, powers)]
    roots = np.roots(in_w2) if len(in_w2) > 1 else np.array([])
    cands = [r.real for r in roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r)) and r.real > 0]
    if not cands:
        raise NoUltimateGain("auxiliary polynomial has no imaginary-axis roots")
    return math.sqrt(min(cands))


def phase_crossover(plant: TransferFunction, w_min: float = 1e-6, w_max: float = 1e6, n: int = 20000):
    """Frequency sweep for the first -180 deg phase crossing of the plant.

    Returns ``(w_c, 1/|G(j w_c)|)`` or ``None`` when the phase never reaches -180 deg on the grid.
    """
    w = np.logspace(np.log10(w_min), np.log10(w_max), n)
    phase = np.unwrap(np.angle(plant(1j * w)))
    hits = np.flatnonzero((phase[:-1] > -np.pi) & (phase[1:] <= -np.pi))
    if hits.size == 0:
        return None
    i = hits[0]
    wc = brentq(lambda x: plant(1j * x).imag, w[i], w[i + 1], xtol=1e-15, rtol=1e-14)
    return wc, 1.0 / abs(plant(1j * wc))


def _bisect(plant, lo, hi, below):
    """Shrink [lo, hi] around the gain where ``below(verdict)`` switches from True to False."""
    while hi - lo > BISECT_RTOL * hi:
        mid = 0.5 * (lo + hi)
        if below(routh_stable(gain_loop_den(plant, mid))):
            lo = mid
        else:
            hi = mid
    return lo, hi


def find_ultimate(plant: TransferFunction) -> UltimateParams:
    """Ultimate gain by Routh bisection, ultimate period from the auxiliary polynomial."""
    if not plant.is_strictly_proper:
        raise ValueError("plant must be strictly proper")
    if routh_stable(plant.den) is not Stability.STABLE:
        raise NoUltimateGain("open-loop plant is not stable")
    lo, hi = 0.0, 1.0
    while (verdict := routh_stable(gain_loop_den(plant, hi))) is not Stability.UNSTABLE:
        if verdict is Stability.STABLE:
            lo = hi
        hi *= 2
        if hi > BRACKET_CAP:
            raise NoUltimateGain(f"loop stays stable for all gains up to {BRACKET_CAP:g}; no -180 deg crossing")
    # the marginal verdict covers a narrow tolerance band; take the midpoint of its two edges
    stable_edge = _bisect(plant, lo, hi, lambda v: v is Stability.STABLE)
    unstable_edge = _bisect(plant, lo, hi, lambda v: v is not Stability.UNSTABLE)
    ku = 0.5 * (stable_edge[0] + unstable_edge[1])
    k_lo = min(stable_edge[0], ku * (1 - 1e-3))
    k_hi = max(unstable_edge[1], ku * (1 + 1e-3))
    w = _crossover_from_routh(plant, k_lo, k_hi, ku)
    tu = 2 * math.pi / w
    sweep = phase_crossover(plant)
    if sweep is not None:
        tu_sweep = 2 * math.pi / sweep[0]
        if abs(tu_sweep - tu) > 1e-3 * tu:
            log.warning("Routh period %.6g s disagrees with frequency-sweep period %.6g s", tu, tu_sweep)
    return UltimateParams(ku, tu)


# classic ZN rows: (kp/ku, ki*tu/ku, kd/(ku*tu))
ZN_TABLE = {
    ControlType.P: (0.50, 0.0, 0.0),
    ControlType.PI: (0.45, 0.54, 0.0),
    ControlType.PID: (0.60, 1.2, 3 / 40),
}


def zn_gains(ultimate: UltimateParams, control_type: ControlType | str = ControlType.PID) -> PidGains:
    ku, tu = ultimate.ku, ultimate.tu
    a, b, c = ZN_TABLE[ControlType(control_type)]
    return PidGains(a * ku, b * ku / tu, c * ku * tu)
