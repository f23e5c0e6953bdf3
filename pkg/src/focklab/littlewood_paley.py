"""Distortion functions and the Littlewood-Paley comparison.

The p-distortion function of a radial weight is the tail quotient::

    psi_p(r) = int_r^inf s exp(-p phi(s)) ds / ((1 + r) exp(-p phi(r)))

It is always computed relative to ``exp(-p phi(r))`` so that the quotient
keeps full precision even where ``exp(-p phi(r))`` itself underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DivergentTail, GridTooShort, ToleranceNotMet
from .functions import EntireFunction
from .numerics import (
    DEFAULT_TOL,
    NODES,
    _LOG_WK,
    _panels,
    log_circle_mean,
    log_integrate,
    logsumexp,
    radial_integral,
)
from .weights import RadialWeight

# the knot table stops once exp(-p phi) has dropped this many nats below its
# value at the origin; beyond that psi is computed point by point
TABLE_NATS = 1500.0
# largest change of the log integrand allowed across one knot interval
KNOT_NATS = 2.0


def _check_integrable(w: RadialWeight, p: float) -> None:
    if p <= 0:
        raise ValueError("p must be positive")
    if w.family == "log" and w.param * p <= 2:
        raise DivergentTail(
            f"int s (1+s)**(-{w.param * p:g}) ds diverges (needs a*p > 2)"
        )


def log_distortion(w: RadialWeight, p: float, r, tol: float = DEFAULT_TOL) -> np.ndarray:
    """log psi_p(r) by direct quadrature of the tail integral at each radius."""
    _check_integrable(w, p)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty_like(r)
    for i, ri in enumerate(r):
        if ri < 0:
            raise ValueError(f"radius must be nonnegative, got {ri}")
        res = radial_integral(None, w, p, r_lo=float(ri), tol=tol, relative=True)
        out[i] = res.log_value - math.log1p(ri)
    return out


def distortion(w: RadialWeight, p: float, r: float, tol: float = DEFAULT_TOL) -> float:
    """psi_p(r), the p-distortion function of ``w`` at radius ``r``.

    Raises
    ------
    DivergentTail
        For a logarithmic weight with ``a p <= 2``, where the numerator
        integral is infinite.
    """
    return math.exp(float(log_distortion(w, p, [r], tol)[0]))


class DistortionTable:
    """psi_p evaluated quickly at many radii from a table of knot integrals.

    Knots are placed so that the log integrand ``log s - p phi(s)`` changes
    by at most ``KNOT_NATS`` between neighbours; each knot interval is then
    resolved by a single 15-point Kronrod panel (split further if its error
    estimate is not negligible).  The relative tail ``A_i = T(k_i) e^{p phi(k_i)}``
    obeys the backward recursion

        A_i = I_i + exp(-p (phi(k_{i+1}) - phi(k_i))) A_{i+1}

    whose terms are all positive, so no cancellation occurs.
    """

    def __init__(self, w: RadialWeight, p: float, tol: float = DEFAULT_TOL):
        _check_integrable(w, p)
        self.w, self.p, self.tol = w, p, tol
        self.knots = self._place_knots()
        self._log_a = self._tail_table()

    def _place_knots(self) -> np.ndarray:
        w, p = self.w, self.p
        knots = [0.0]
        r = 0.0
        base = float(w.phi(0.0))
        while r < 1e4:
            slope = abs(1.0 / max(r, 1e-2) - p * float(w.dphi(r)))
            step = min(0.05 * (1.0 + r), KNOT_NATS / max(slope, 1e-300))
            r = r + step
            if r == knots[-1]:
                break
            knots.append(r)
            if p * (float(w.phi(r)) - base) > TABLE_NATS:
                break
        return np.array(knots)

    def _log_rel_segment(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """log int_lo^hi s exp(-p (phi(s) - phi(lo))) ds per pair, one panel."""
        w, p = self.w, self.p
        half = 0.5 * (hi - lo)
        x = half[:, None] * (NODES[None, :] + 1.0)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            y = np.log(lo[:, None] + x) - p * w.phi_increment(lo[:, None], x)
            y = np.where(np.isnan(y), -np.inf, y)
            return logsumexp(y + _LOG_WK[None, :], axis=1) + np.log(half)

    def _tail_table(self) -> np.ndarray:
        w, p = self.w, self.p
        k = self.knots
        lo, hi = k[:-1], k[1:]
        log_i = self._log_rel_segment(lo, hi)
        # confirm the single panels are accurate; split offending ones
        for _ in range(30):
            logk, loge = _panels(
                lambda s, _lo=lo: np.log(s) - p * w.phi_increment(_lo[:, None], s - _lo[:, None]),
                lo,
                hi,
            )
            rel = np.exp(loge - logk)
            bad = np.flatnonzero(rel > 1e-2 * self.tol)
            if bad.size == 0:
                break
            mids = 0.5 * (lo[bad] + hi[bad])
            self.knots = k = np.unique(np.concatenate([k, mids]))
            lo, hi = k[:-1], k[1:]
            log_i = self._log_rel_segment(lo, hi)
        inc = w.phi_increment(lo, hi - lo)
        last = radial_integral(None, w, p, r_lo=float(k[-1]), tol=self.tol, relative=True)
        log_a = np.empty(k.size)
        log_a[-1] = last.log_value
        for i in range(k.size - 2, -1, -1):
            log_a[i] = np.logaddexp(log_i[i], -p * inc[i] + log_a[i + 1])
        return log_a

    def log_psi(self, r) -> np.ndarray:
        r_in = np.asarray(r, dtype=float)
        r = np.atleast_1d(r_in).ravel()
        out = np.empty_like(r)
        k = self.knots
        inside = (r >= 0) & (r < k[-1])
        if np.any(inside):
            ri = r[inside]
            j = np.searchsorted(k, ri, side="right")  # ri in [k[j-1], k[j])
            upper = k[j]
            seg = self._log_rel_segment(ri, upper)
            seg = np.where(upper > ri, seg, -np.inf)
            inc = self.w.phi_increment(ri, upper - ri)
            tail = -self.p * inc + self._log_a[j]
            out[inside] = np.logaddexp(seg, tail) - np.log1p(ri)
        outside = ~inside
        if np.any(outside):
            out[outside] = log_distortion(self.w, self.p, r[outside], self.tol)
        return out.reshape(r_in.shape) if r_in.ndim else out

    def psi(self, r) -> np.ndarray:
        return np.exp(self.log_psi(r))


# -- profiles and asymptotics ---------------------------------------------


@dataclass
class DistortionProfile:
    p: float
    r_grid: list
    psi_values: list
    psi_times_dphi: list

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def distortion_profile(w: RadialWeight, p: float, r_grid) -> DistortionProfile:
    r = np.asarray(r_grid, dtype=float)
    log_psi = log_distortion(w, p, r)
    prod = np.exp(log_psi + w.log_dphi(r))
    return DistortionProfile(p, r.tolist(), np.exp(log_psi).tolist(), prod.tolist())


def distortion_asymptote_check(w: RadialWeight, p: float, r_grid) -> list:
    """psi_p(r) phi'(r) along the grid; tends to 1/p for class-I weights."""
    return distortion_profile(w, p, r_grid).psi_times_dphi


def reliable_radius(w: RadialWeight, p: float, floor_log: float = -280 * math.log(10)) -> float:
    """Largest r with exp(-p phi(r)) above ``exp(floor_log)`` (bisection)."""
    lo, hi = 0.0, 1.0
    while -p * float(w.phi(hi)) > floor_log:
        lo, hi = hi, 2 * hi
        if hi > 1e8:
            return math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if -p * float(w.phi(mid)) > floor_log:
            lo = mid
        else:
            hi = mid
    return lo


# -- condition K_p ---------------------------------------------------------


@dataclass
class KpReport:
    sup_estimate: float
    satisfied: bool
    r_grid: list
    q_values: list

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def kp_quantity(w: RadialWeight, p: float, r) -> np.ndarray:
    """Q(r) = (r e^{-p phi})' int_r^inf s e^{-p phi} ds / (r^2 e^{-2 p phi(r)}).

    Evaluated as ``(1 - p r phi'(r)) psi_p(r) (1 + r) / r**2`` in log form.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    log_psi = log_distortion(w, p, r)
    log_x = math.log(p) + np.log(r) + w.log_dphi(r)  # log(p r phi')
    with np.errstate(divide="ignore", invalid="ignore"):
        # |1 - x| from log x without overflow
        log_abs = np.where(
            log_x > 0,
            log_x + np.log(-np.expm1(-log_x)),
            np.log(-np.expm1(log_x)),
        )
    sign = np.where(log_x > 0, -1.0, 1.0)
    mag = np.exp(log_abs + log_psi + np.log1p(r) - 2 * np.log(r))
    return sign * mag


def kp_condition(w: RadialWeight, p: float, r_grid) -> KpReport:
    """Numerical check of condition K_p along a grid in [1, inf).

    ``satisfied`` requires a finite supremum together with a tail (last quarter
    of the grid) that is either non-increasing or settling, meaning its
    successive increments shrink in size.
    """
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or r.size < 4 or np.any(np.diff(r) <= 0):
        raise ValueError("r_grid must be strictly increasing with >= 4 points")
    if r[0] < 1:
        raise ValueError("r_grid must lie in [1, inf)")
    need = 3.0 if w.family == "doubleexp" else 20.0
    if r[-1] < need:
        raise GridTooShort(f"max(r_grid) = {r[-1]} < {need}")
    q = kp_quantity(w, p, r)
    sup = float(np.max(q))
    return KpReport(sup, _tail_bounded(q), r.tolist(), q.tolist())


def _tail_bounded(values: np.ndarray) -> bool:
    """Finite, and over the last quarter either non-increasing or settling."""
    if not np.all(np.isfinite(values)):
        return False
    tail = values[-max(3, values.size // 4):]
    d = np.diff(tail)
    scale = max(1.0, float(np.max(np.abs(tail))))
    non_increasing = bool(np.all(d <= 1e-9 * scale))
    settling = bool(np.all(np.abs(d[1:]) <= np.abs(d[:-1]) + 1e-12 * scale))
    return non_increasing or settling


# -- the Littlewood-Paley sides ------------------------------------------


@dataclass
class LPComparison:
    lhs: float
    rhs: float
    ratio: float | None
    log_lhs: float = field(repr=False, default=-math.inf)
    log_rhs: float = field(repr=False, default=-math.inf)
    rel_error: float = 0.0
    flag: str = ""

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "rel_error": self.rel_error,
            "flag": self.flag,
        }


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def lp_sides(
    f: EntireFunction,
    w: RadialWeight,
    p: float,
    q: float,
    tol: float = 1e-9,
    table: DistortionTable | None = None,
) -> LPComparison:
    """Both sides of the Littlewood-Paley equivalence for ``f``.

    lhs = int_0^inf M_q(r, f)^p r e^{-p phi} dr and
    rhs = |f(0)|^p + int_0^inf M_q(r, f')^p psi_p(r)^p r e^{-p phi} dr.
    For ``f = 0`` both sides vanish and the ratio is ``None`` with a flag.
    """
    _check_integrable(w, p)
    if f.is_zero():
        return LPComparison(0.0, 0.0, None, flag="UndefinedRatio: f is identically zero")
    table = table or DistortionTable(w, p, tol)

    def lhs_h(s):
        return p * log_circle_mean(f, s, q)

    lhs = radial_integral(lhs_h, w, p, tol=tol)
    log_f0 = p * math.log(abs(f.coeffs[0])) if f.coeffs[0] != 0 else -math.inf
    if f.is_constant():
        log_rhs, rhs_err = log_f0, 0.0
    else:
        df = f.derivative()

        def rhs_h(s):
            return p * (log_circle_mean(df, s, q) + table.log_psi(s))

        body = radial_integral(rhs_h, w, p, tol=tol)
        log_rhs = float(np.logaddexp(log_f0, body.log_value))
        rhs_err = body.rel_error_estimate
    ratio = _safe_exp(lhs.log_value - log_rhs)
    return LPComparison(
        lhs=_safe_exp(lhs.log_value),
        rhs=_safe_exp(log_rhs),
        ratio=ratio,
        log_lhs=lhs.log_value,
        log_rhs=log_rhs,
        rel_error=max(lhs.rel_error_estimate, rhs_err),
    )


@dataclass
class LPSweep:
    min_ratio: float
    max_ratio: float
    ratios: list
    comparisons: list

    @property
    def spread(self) -> float:
        return self.max_ratio / self.min_ratio


def lp_ratio_sweep(
    functions: Sequence[EntireFunction], w: RadialWeight, p: float, q: float
) -> LPSweep:
    """Extremes of the Littlewood-Paley ratio over a family of functions.

    Zero functions are skipped since their ratio is undefined.
    """
    if not functions:
        raise ValueError("need at least one function")
    table = DistortionTable(w, p)
    comps = [lp_sides(f, w, p, q, table=table) for f in functions]
    ratios = [c.ratio for c in comps if c.ratio is not None]
    if not ratios:
        raise ValueError("every function in the family is identically zero")
    return LPSweep(min(ratios), max(ratios), ratios, comps)


# -- disc weights ------------------------------------------------------------


@dataclass(frozen=True)
class DiscWeight:
    """Positive weights on [0, 1): ``const``, ``exp_pole:g`` or ``triple_exp``.

    ``exp_pole:g`` is ``exp(-(1-r)**-g)`` and ``triple_exp`` is
    ``exp(-exp(exp(1/(1-r))))``.
    """

    family: str
    param: float | None = None

    @classmethod
    def parse(cls, spec: str) -> "DiscWeight":
        from .errors import ParseError

        name, sep, arg = spec.strip().partition(":")
        if name in ("const", "triple_exp"):
            if sep:
                raise ParseError(arg, f"{name} takes no parameter")
            return cls(name)
        if name == "exp_pole":
            try:
                g = float(arg)
            except ValueError:
                raise ParseError(arg, "exponent is not a number") from None
            if not g > 0:
                raise ParseError(arg, "exponent must be positive")
            return cls(name, g)
        raise ParseError(name, "unknown disc weight family")

    @property
    def spec(self) -> str:
        return self.family if self.param is None else f"{self.family}:{self.param:g}"

    def log_w(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            if self.family == "const":
                return np.zeros_like(r)
            if self.family == "exp_pole":
                return -((1.0 - r) ** -self.param)
            return -np.exp(np.exp(1.0 / (1.0 - r)))

    def dlog_w(self, r):
        """(log w)'(r) = w'/w."""
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            if self.family == "const":
                return np.zeros_like(r)
            if self.family == "exp_pole":
                g = self.param
                return -g * (1.0 - r) ** (-g - 1)
            t = 1.0 / (1.0 - r)
            return -np.exp(np.exp(t) + t) * t * t


def bergman_distortion(wd: DiscWeight, r: float, tol: float = DEFAULT_TOL) -> float:
    """psi_w(r) = (1/w(r)) int_r^1 w(u) du for a disc weight."""
    if not 0 <= r < 1:
        raise ValueError(f"r must lie in [0, 1), got {r}")
    base = float(wd.log_w(r))
    if not np.isfinite(base):
        raise ToleranceNotMet(f"log w({r}) is not representable")

    def logf(u):
        return wd.log_w(u) - base

    res = log_integrate(logf, float(r), 1.0, tol=tol)
    return math.exp(res.log_value)


def bergman_L_condition(wd: DiscWeight, r_grid, bound: float | None = None):
    """sup over the grid of (w'/w**2) int_r^1 w, and whether it stays bounded.

    Returns ``(sup, ok)``.  With ``bound`` given, ok means sup <= bound;
    otherwise ok applies the same tail rule as :func:`kp_condition`.
    """
    r = np.asarray(r_grid, dtype=float)
    vals = np.array([float(wd.dlog_w(x)) * bergman_distortion(wd, float(x)) for x in r])
    sup = float(np.max(vals))
    if bound is not None:
        return sup, bool(sup <= bound)
    return sup, _tail_bounded(vals)
