"""Radial weights phi and their derived quantities.

A weight is one of five analytic families evaluated on radii ``r >= 0``::

    power:a      phi = r**a
    exp:b        phi = exp(b r)
    doubleexp    phi = exp(exp(r))
    gauss        phi = r**2 / 2
    log:a        phi = a log(1 + r)

All methods accept scalars or numpy arrays.  Besides the plain values the
weight exposes log-domain versions (``log_dphi``, ``log_laplacian``,
``log_tau``) because for the exponential families the plain values overflow
long before the radii of interest are reached.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GridTooShort, NonpositiveLaplacian, ParseError, SingularLimit

FAMILIES = ("power", "exp", "doubleexp", "gauss", "log")

# tau is blended linearly across this annulus so that the regularised
# version is continuous at |z| = 1
BLEND_LO = 0.9
BLEND_HI = 1.1


@dataclass(frozen=True)
class RadialWeight:
    family: str
    param: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParseError(self.family, "unknown weight family")
        needs_param = self.family in ("power", "exp", "log")
        if needs_param and self.param is None:
            raise ParseError(self.family, "weight family needs a parameter")
        if needs_param and not self.param > 0:
            raise ParseError(str(self.param), "weight parameter must be positive")
        if not needs_param and self.param is not None:
            raise ParseError(str(self.param), f"{self.family} takes no parameter")

    @classmethod
    def parse(cls, spec: str) -> "RadialWeight":
        """Build a weight from its mini-language spec, e.g. ``"power:3"``."""
        name, sep, arg = spec.strip().partition(":")
        if name not in FAMILIES:
            raise ParseError(name, "unknown weight family")
        if not sep:
            return cls(name)
        try:
            value = float(arg)
        except ValueError:
            raise ParseError(arg, "weight parameter is not a number") from None
        return cls(name, value)

    @property
    def spec(self) -> str:
        if self.param is None:
            return self.family
        return f"{self.family}:{self.param:g}"

    # -- plain values --------------------------------------------------

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        a = self.param
        with np.errstate(over="ignore"):
            if self.family == "power":
                return r**a
            if self.family == "exp":
                return np.exp(a * r)
            if self.family == "doubleexp":
                return np.exp(np.exp(r))
            if self.family == "gauss":
                return 0.5 * r * r
            return a * np.log1p(r)

    def dphi(self, r):
        r = np.asarray(r, dtype=float)
        a = self.param
        with np.errstate(over="ignore"):
            if self.family == "power":
                return a * r ** (a - 1)
            if self.family == "exp":
                return a * np.exp(a * r)
            if self.family == "doubleexp":
                return np.exp(r + np.exp(r))
            if self.family == "gauss":
                return r
            return a / (1.0 + r)

    def ddphi(self, r):
        r = np.asarray(r, dtype=float)
        a = self.param
        with np.errstate(over="ignore"):
            if self.family == "power":
                return a * (a - 1) * r ** (a - 2)
            if self.family == "exp":
                return a * a * np.exp(a * r)
            if self.family == "doubleexp":
                er = np.exp(r)
                return (er + er * er) * np.exp(er)
            if self.family == "gauss":
                return np.ones_like(r)
            return -a / (1.0 + r) ** 2

    def laplacian(self, r):
        """phi'' + phi'/r, the Laplacian of phi(|z|); may be inf at r = 0."""
        r = np.asarray(r, dtype=float)
        a = self.param
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if self.family == "power":
                return a * a * r ** (a - 2)
            if self.family == "exp":
                return a * np.exp(a * r) * (a + 1.0 / r)
            if self.family == "doubleexp":
                er = np.exp(r)
                return np.exp(er) * (er + er * er + er / r)
            if self.family == "gauss":
                return np.full_like(r, 2.0)
            return a / (r * (1.0 + r) ** 2)

    def tau(self, r):
        """Laplacian ** -1/2 (needs a positive Laplacian)."""
        return np.exp(self.log_tau(r))

    def neg_log_density(self, p: float, r):
        """p * phi(r), i.e. minus the log of exp(-p phi(r))."""
        return p * self.phi(r)

    def phi_increment(self, r0, x):
        """phi(r0 + x) - phi(r0) without cancellation for small x >= 0.

        ``r0`` and ``x`` broadcast against each other.
        """
        x = np.asarray(x, dtype=float)
        r0 = np.asarray(r0, dtype=float)
        a = self.param
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if self.family == "power":
                safe = np.where(r0 > 0, r0, 1.0)
                rel = safe**a * np.expm1(a * np.log1p(x / safe))
                return np.where(r0 > 0, rel, x**a)
            if self.family == "exp":
                return np.exp(a * r0) * np.expm1(a * x)
            if self.family == "doubleexp":
                er0 = np.exp(r0)
                inner = np.expm1(er0 * np.expm1(x))
                return np.exp(er0 + np.log(inner))
            if self.family == "gauss":
                return x * (r0 + 0.5 * x)
            return a * np.log1p(x / (1.0 + r0))

    # -- log domain ----------------------------------------------------

    def log_dphi(self, r):
        r = np.asarray(r, dtype=float)
        a = self.param
        with np.errstate(divide="ignore"):
            if self.family == "power":
                return np.log(a) + (a - 1) * np.log(r)
            if self.family == "exp":
                return np.log(a) + a * r
            if self.family == "doubleexp":
                return r + np.exp(r)
            if self.family == "gauss":
                return np.log(r)
            return np.log(a) - np.log1p(r)

    def log_laplacian(self, r):
        r = np.asarray(r, dtype=float)
        a = self.param
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.family == "power":
                out = 2 * np.log(a) + (a - 2) * np.log(r)
                if a == 2:
                    out = np.full_like(r, 2 * np.log(a))
                return out
            if self.family == "exp":
                return np.log(a) + a * r + np.log(a + 1.0 / r)
            if self.family == "doubleexp":
                er = np.exp(r)
                return er + r + np.log1p(er + 1.0 / r)
            if self.family == "gauss":
                return np.full_like(r, np.log(2.0))
            return np.log(a) - np.log(r) - 2 * np.log1p(r)

    def log_tau(self, r):
        return -0.5 * self.log_laplacian(r)

    def dlog_tau(self, r, rel_step: float = 1e-5):
        """d(log tau)/dr by central differences of the analytic log tau."""
        r = np.asarray(r, dtype=float)
        h = rel_step * np.maximum(1.0, r)
        return (self.log_tau(r + h) - self.log_tau(r - h)) / (2 * h)

    # -- regularised tau ----------------------------------------------

    def log_tau_tilde(self, r):
        """log of tau regularised near the origin.

        Equals ``tau(1)`` for r <= 0.9, ``tau(r)`` for r >= 1.1, and the
        linear interpolation between ``tau(1)`` and ``tau(1.1)`` in between.
        """
        r = np.asarray(r, dtype=float)
        inner = float(self.log_tau(1.0))
        outer = np.where(r >= BLEND_HI, self.log_tau(np.maximum(r, BLEND_HI)), inner)
        t_hi = np.exp(float(self.log_tau(BLEND_HI)))
        t_one = np.exp(inner)
        # clipped so the unused branch of np.where stays finite
        frac = np.clip((r - BLEND_LO) / (BLEND_HI - BLEND_LO), 0.0, 1.0)
        blended = np.log(t_one + frac * (t_hi - t_one))
        mid = (r > BLEND_LO) & (r < BLEND_HI)
        return np.where(mid, blended, outer)

    def tau_tilde(self, r):
        return np.exp(self.log_tau_tilde(r))


class WeightProfile(NamedTuple):
    phi: float
    dphi: float
    ddphi: float
    laplacian: float
    tau: float


def _laplacian_at_zero(w: RadialWeight) -> float:
    if w.family == "gauss":
        return 2.0
    if w.family == "power":
        a = w.param
        if a > 2:
            return 0.0
        if a == 2:
            return 4.0
    raise SingularLimit(f"Laplacian of {w.spec} diverges as r -> 0+")


def weight_profile(w: RadialWeight, r: float) -> WeightProfile:
    """phi, phi', phi'', Laplacian and tau of ``w`` at a single radius.

    Raises
    ------
    NonpositiveLaplacian
        If the Laplacian is not positive at ``r``.
    SingularLimit
        If ``r == 0`` and the Laplacian has no finite limit there.
    """
    if r < 0:
        raise ValueError(f"radius must be nonnegative, got {r}")
    lap = _laplacian_at_zero(w) if r == 0 else float(w.laplacian(r))
    if not lap > 0:
        raise NonpositiveLaplacian(r, lap)
    return WeightProfile(
        float(w.phi(r)), float(w.dphi(r)), float(w.ddphi(r)), lap, lap**-0.5
    )


@dataclass
class ClassIReport:
    weight: str
    laplacian_positive: bool
    tau_decreasing: bool
    tau_prime_vanishing: bool
    side_condition_A: bool
    side_condition_B: bool
    fitted_C: float
    tau_prime_at_max: float
    in_class_I: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def class_I_report(w: RadialWeight, r_grid) -> ClassIReport:
    """Numerical class-I membership diagnostics on a radial grid.

    Side condition A asks for ``tau(r) r**C`` increasing, which holds for some
    C exactly when ``-r tau'/tau`` stays bounded; C is fitted as the maximum of
    that quantity over the top half of the grid and A additionally requires
    the quantity not to keep growing there.  Side condition B asks
    ``tau'(r) log(1/tau(r))`` to decrease toward 0.
    """
    grid = np.asarray(r_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 4 or np.any(np.diff(grid) <= 0):
        raise ValueError("r_grid must be strictly increasing with >= 4 points")
    if grid[-1] < 10:
        raise GridTooShort(f"max(r_grid) = {grid[-1]} < 10")

    outer = grid[grid >= 1.0]
    log_lap = w.log_laplacian(outer)
    lap_pos = bool(np.all(np.isfinite(log_lap)))
    log_tau = -0.5 * log_lap
    tau_dec = bool(lap_pos and np.all(np.diff(log_tau) < 0))

    dlt = w.dlog_tau(outer)  # tau'/tau
    with np.errstate(over="ignore", under="ignore"):
        tau_prime = np.exp(log_tau) * dlt
    tau_prime_max = float(tau_prime[-1])
    tau_prime_vanishing = bool(abs(tau_prime_max) < 1e-2)

    top = outer[outer >= 0.5 * (outer[0] + outer[-1])]
    itop = outer >= top[0]
    growth = -top * dlt[itop]
    fitted_C = float(max(growth.max(), 0.0) + 1e-9)
    increasing = np.all(np.diff(log_tau[itop] + fitted_C * np.log(top)) > 0)
    not_growing = growth[-1] <= 1.05 * max(growth[0], 1e-12)
    side_A = bool(tau_dec and increasing and not_growing)

    # log |tau' log(1/tau)|, only meaningful where tau < 1
    with np.errstate(divide="ignore", invalid="ignore"):
        log_b = log_tau[itop] + np.log(np.abs(dlt[itop])) + np.log(-log_tau[itop])
    side_B = bool(
        tau_dec
        and np.all(log_tau[itop] < 0)
        and np.all(np.diff(log_b) <= 1e-12)
        and log_b[-1] < np.log(1e-2)
    )

    in_class = lap_pos and tau_dec and tau_prime_vanishing and (side_A or side_B)
    return ClassIReport(
        weight=w.spec,
        laplacian_positive=lap_pos,
        tau_decreasing=tau_dec,
        tau_prime_vanishing=tau_prime_vanishing,
        side_condition_A=side_A,
        side_condition_B=side_B,
        fitted_C=fitted_C,
        tau_prime_at_max=tau_prime_max,
        in_class_I=bool(in_class),
    )
