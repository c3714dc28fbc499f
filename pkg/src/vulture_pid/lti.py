"""Continuous-time SISO transfer functions, the unity-feedback PID loop, Routh-Hurwitz tests."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from numbers import Number
from typing import Sequence

import numpy as np

TRIM_TOL = 1e-12
ROUTH_RTOL = 1e-9


class LTIError(ValueError):
    """Ill-posed model or operation (zero denominator, improper system, ...)."""


def _trim(coeffs: Sequence[Number], tol: float = TRIM_TOL) -> tuple:
    coeffs = tuple(coeffs)
    if not coeffs:
        return (0.0,)
    scale = max(abs(c) for c in coeffs)
    if scale == 0:
        return (coeffs[-1],)
    i = 0
    while i < len(coeffs) - 1 and abs(coeffs[i]) <= tol * scale:
        i += 1
    return coeffs[i:]


@dataclass(frozen=True)
class Polynomial:
    """Polynomial in s, coefficients highest power first.

    Coefficients are kept as given (floats, ints or Fractions); arithmetic is plain
    Python so exact types survive multiplication and addition.
    """

    coeffs: tuple

    def __init__(self, coeffs: Sequence[Number]):
        coeffs = tuple(coeffs)
        if not coeffs:
            raise LTIError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", _trim(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def __call__(self, s):
        acc = 0
        for c in self.coeffs:
            acc = acc * s + c
        return acc

    def __add__(self, other: Polynomial) -> Polynomial:
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        a = (0,) * (n - len(a)) + a
        b = (0,) * (n - len(b)) + b
        return Polynomial([x + y for x, y in zip(a, b)])

    def __mul__(self, other: Polynomial | Number) -> Polynomial:
        if not isinstance(other, Polynomial):
            return Polynomial([c * other for c in self.coeffs])
        a, b = self.coeffs, other.coeffs
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                out[i + j] += x * y
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> Polynomial:
        out = Polynomial([1])
        for _ in range(k):
            out = out * self
        return out

    def as_floats(self) -> list[float]:
        return [float(c) for c in self.coeffs]


@dataclass(frozen=True)
class TransferFunction:
    num: Polynomial
    den: Polynomial

    def __init__(self, num, den):
        num = num if isinstance(num, Polynomial) else Polynomial(num)
        den = den if isinstance(den, Polynomial) else Polynomial(den)
        if den.is_zero():
            raise LTIError("transfer function denominator is the zero polynomial")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __call__(self, s):
        return self.num(s) / self.den(s)

    @property
    def is_proper(self) -> bool:
        return self.num.is_zero() or self.num.degree <= self.den.degree

    @property
    def is_strictly_proper(self) -> bool:
        return self.num.is_zero() or self.num.degree < self.den.degree

    def __mul__(self, other: TransferFunction) -> TransferFunction:
        return TransferFunction(self.num * other.num, self.den * other.den)


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float

    def __post_init__(self):
        for name in ("kp", "ki", "kd"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.kp, self.ki, self.kd)


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float = 0.0
    order: int = field(init=False)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        a = np.zeros((0, 0)) if a.size == 0 else np.atleast_2d(a)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        n = a.shape[0]
        if a.shape != (n, n) or b.shape != (n,) or c.shape != (n,):
            raise LTIError(f"inconsistent state-space dimensions: a{a.shape} b{b.shape} c{c.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "order", n)

    def __call__(self, s: complex) -> complex:
        """Frequency response c (sI - a)^-1 b + d."""
        if self.order == 0:
            return complex(self.d)
        x = np.linalg.solve(s * np.eye(self.order) - self.a, self.b.astype(complex))
        return complex(self.c @ x + self.d)

    def dc_gain(self) -> float | None:
        if self.order == 0:
            return self.d
        try:
            return float(self.d - self.c @ np.linalg.solve(self.a, self.b))
        except np.linalg.LinAlgError:
            return None


def pid_transfer_function(gains: PidGains) -> TransferFunction:
    """Ideal PID C(s) = (kd s^2 + kp s + ki) / s; the common s is cancelled when ki = 0."""
    if gains.ki == 0:
        return TransferFunction([gains.kd, gains.kp], [1.0])
    return TransferFunction([gains.kd, gains.kp, gains.ki], [1.0, 0.0])


def closed_loop(plant: TransferFunction, controller: TransferFunction) -> TransferFunction:
    """Unity negative feedback: T = CG / (1 + CG), no pole-zero cancellation."""
    open_num = controller.num * plant.num
    open_den = controller.den * plant.den
    if open_num.degree > open_den.degree and not open_num.is_zero():
        raise LTIError("loop transfer function C*G is improper")
    den = open_den + open_num
    if den.is_zero():
        raise LTIError("ill-posed loop: closed-loop denominator vanishes")
    return TransferFunction(open_num, den)


def pid_loop(plant: TransferFunction, gains: PidGains) -> TransferFunction:
    return closed_loop(plant, pid_transfer_function(gains))


class Stability(str, enum.Enum):
    STABLE = "stable"
    MARGINAL = "marginal"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class RouthResult:
    first_column: tuple[float, ...]
    sign_changes: int
    degenerate: bool
    # aux polynomial (highest power first) taken at the first all-zero row, if any
    auxiliary: tuple[float, ...] | None

    @property
    def verdict(self) -> Stability:
        if self.sign_changes:
            return Stability.UNSTABLE
        if self.degenerate:
            return Stability.MARGINAL
        return Stability.STABLE


def _coeff_list(den) -> list[float]:
    coeffs = den.coeffs if isinstance(den, Polynomial) else _trim(den)
    return [float(c) for c in coeffs]


def routh_array(den, rtol: float = ROUTH_RTOL) -> tuple[list[list[float]], RouthResult]:
    """Build the Routh table of ``den`` (highest power first).

    Zero first-column entries (|x| < rtol * max|first column|) are handled with the
    epsilon substitution; an all-zero row is replaced by the derivative of the
    auxiliary polynomial formed from the row above it.
    """
    c = _coeff_list(den)
    if all(x == 0 for x in c):
        raise LTIError("Routh test on the zero polynomial")
    if c[0] < 0:
        c = [-x for x in c]
    n = len(c) - 1
    width = n // 2 + 1
    row0 = c[0::2] + [0.0] * (width - len(c[0::2]))
    rows = [row0]
    if n == 0:
        res = RouthResult((row0[0],), 0, False, None)
        return rows, res
    row1 = c[1::2] + [0.0] * (width - len(c[1::2]))
    scale = max(abs(x) for x in c)
    degenerate = False
    aux = None
    pending = row1
    for i in range(1, n + 1):
        cur = pending
        order = n - i
        zero_tol = rtol * max(scale, max(abs(r[0]) for r in rows))
        if all(abs(x) <= zero_tol for x in cur):
            prev = rows[-1]
            prev_order = order + 1
            if aux is None:
                aux_coeffs = []
                for k in range(prev_order // 2 + 1):
                    aux_coeffs.extend([prev[k], 0.0])
                aux = tuple(aux_coeffs[: prev_order + 1])
            cur = [prev[k] * (prev_order - 2 * k) for k in range(width)]
            cur = [x if prev_order - 2 * k > 0 else 0.0 for k, x in enumerate(cur)]
            degenerate = True
            zero_tol = rtol * max(scale, max(abs(x) for x in cur))
        if abs(cur[0]) <= zero_tol:
            cur = [zero_tol if zero_tol > 0 else np.finfo(float).tiny] + list(cur[1:])
            degenerate = True
        rows.append(list(cur))
        if i == n:
            break
        prev = rows[-2]
        nxt = [
            (cur[0] * (prev[j + 1] if j + 1 < width else 0.0) - prev[0] * (cur[j + 1] if j + 1 < width else 0.0))
            / cur[0]
            for j in range(width)
        ]
        pending = nxt
    first = tuple(r[0] for r in rows)
    changes = sum(1 for x, y in zip(first, first[1:]) if (x > 0) != (y > 0))
    return rows, RouthResult(first, changes, degenerate, aux)


def routh_stable(den) -> Stability:
    """Routh-Hurwitz verdict for a characteristic polynomial."""
    return routh_array(den)[1].verdict


def dc_gain(tf: TransferFunction) -> float:
    n0, d0 = tf.num(0.0), tf.den(0.0)
    if d0 == 0:
        if n0 == 0:
            raise LTIError("num and den both vanish at s=0; DC gain is indeterminate")
        raise LTIError("infinite DC gain (pole at the origin)")
    return float(n0) / float(d0)


def to_state_space(tf: TransferFunction) -> StateSpaceModel:
    """Controllable canonical realization (companion matrix with the last row filled)."""
    if not tf.is_proper:
        raise LTIError("cannot realize an improper transfer function")
    den = np.array(tf.den.as_floats())
    num = np.array(tf.num.as_floats())
    lead = den[0]
    den = den / lead
    n = len(den) - 1
    num = np.concatenate([np.zeros(n + 1 - len(num)), num]) / lead
    d = num[0]
    resid = num - d * den  # strictly proper remainder, leading entry 0
    a = np.zeros((n, n))
    if n:
        a[:-1, 1:] = np.eye(n - 1)
        a[-1, :] = -den[1:][::-1]
    b = np.zeros(n)
    if n:
        b[-1] = 1.0
    c = resid[1:][::-1].copy()
    return StateSpaceModel(a, b, c, d)


TANK_PLANT = TransferFunction([1.0], [64.0, 9.6, 0.48, 0.008])
