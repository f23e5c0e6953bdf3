"""Greedy coverings of a disc by tau-discs.

Points live on the square grid ``step * (i, k)`` restricted to ``|z| <= R_max``.
The greedy selection repeatedly takes the uncovered grid point with the
largest radius ``t(z) = delta * tau_tilde(|z|)`` (ties to the lowest row-major
index) and marks every grid point strictly inside ``D(z, t(z))`` as covered.

Because ``t`` is radial and non-increasing in ``|z|``, the greedy order is the
order of increasing ``i**2 + k**2`` with equal-``t`` groups sorted by index, so
points are streamed in blocks instead of being sorted all at once.  All disc
tests compare ``(di**2 + dk**2) * step**2 < t**2`` on grid-index offsets, so
build and verification use bit-identical arithmetic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import GridTooCoarse, LipschitzViolation, NonpositiveLaplacian
from .functions import EntireFunction
from .weights import RadialWeight

LIPSCHITZ = 0.25
DILATION = 3.0


def scaled_tau(w: RadialWeight, z, delta: float) -> np.ndarray:
    """t(z) = delta * tau_tilde(|z|).

    Raises
    ------
    NonpositiveLaplacian
        If the Laplacian of ``w`` is not positive at some ``|z| >= 0.9``.
    """
    r = np.abs(np.asarray(z, dtype=complex))
    lt = w.log_tau_tilde(r)
    bad = ~np.isfinite(lt)
    if np.any(bad):
        r_bad = float(np.atleast_1d(r)[np.atleast_1d(bad)][0])
        raise NonpositiveLaplacian(r_bad, float(w.laplacian(r_bad)))
    return delta * np.exp(lt)


def estimate_c1(w: RadialWeight, R_max: float, step: float) -> float:
    """Largest difference quotient of tau_tilde between adjacent radii."""
    n = max(2, int(math.ceil(R_max / step)) + 1)
    r = np.linspace(0.0, max(R_max, step), n)
    t = w.tau_tilde(r)
    return float(np.max(np.abs(np.diff(t)) / np.diff(r)))


def m_tau(c1: float) -> float:
    return min(1.0, 1.0 / c1) / 4.0 if c1 > 0 else 0.25


@dataclass
class CoveringConfig:
    """Domain, grid and scale of a covering.

    ``t_const`` replaces ``delta * tau_tilde`` by a constant radius, which
    gives a purely geometric test case.
    """

    R_max: float
    grid_step: float
    delta: float
    c1_estimate: float
    m_tau: float
    t_const: float | None = None
    delta_halvings: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def t_of_r(self, w: RadialWeight | None, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.t_const is not None:
            return np.full_like(r, self.t_const)
        return scaled_tau(w, r, self.delta)


def _lipschitz_probe(w: RadialWeight | None, cfg: CoveringConfig):
    """First adjacent radial pair violating |t(r) - t(s)| <= |r - s| / 4."""
    if cfg.t_const is not None:
        return None
    n = max(2, int(math.ceil(cfg.R_max / cfg.grid_step)) + 1)
    r = np.linspace(0.0, max(cfg.R_max, cfg.grid_step), n)
    t = cfg.t_of_r(w, r)
    q = np.abs(np.diff(t)) / np.diff(r)
    bad = np.flatnonzero(q > LIPSCHITZ)
    if bad.size:
        i = int(bad[0])
        return complex(r[i]), complex(r[i + 1]), LIPSCHITZ
    return None


def make_config(
    w: RadialWeight | None,
    R_max: float,
    delta: float | None = None,
    grid_step: float | None = None,
    t_const: float | None = None,
) -> CoveringConfig:
    """A valid covering configuration.

    c1 is estimated on a radial grid of spacing ``min(grid_step, 1e-3)``.
    Without an explicit ``delta`` the scale starts at m_tau and is halved
    until the empirical 1/4-Lipschitz check passes; an explicit ``delta`` that
    fails the check raises :class:`LipschitzViolation`.  The default grid step
    is ``min t / 8`` over the domain.
    """
    if R_max < 0:
        raise ValueError("R_max must be nonnegative")
    if t_const is not None:
        step = grid_step if grid_step is not None else t_const / 8.0
        cfg = CoveringConfig(R_max, step, 1.0, 0.0, 0.25, t_const=t_const)
        _check_step(w, cfg)
        return cfg
    probe_step = min(grid_step or 1e-3, 1e-3)
    c1 = estimate_c1(w, max(R_max, 1.2), probe_step)
    mt = m_tau(c1)
    explicit = delta is not None
    d = delta if explicit else mt
    halvings = 0
    while True:
        cfg = CoveringConfig(R_max, probe_step, d, c1, mt, delta_halvings=halvings)
        violation = _lipschitz_probe(w, cfg)
        if violation is None:
            break
        if explicit:
            raise LipschitzViolation(*violation)
        d *= 0.5
        halvings += 1
    t_min = float(cfg.t_of_r(w, max(R_max, 0.0)))
    t_min = min(t_min, float(np.min(cfg.t_of_r(w, np.linspace(0, R_max, 257)))))
    cfg.grid_step = grid_step if grid_step is not None else t_min / 8.0
    _check_step(w, cfg)
    return cfg


def _check_step(w, cfg: CoveringConfig) -> None:
    r = np.linspace(0.0, cfg.R_max, 257)
    t_min = float(np.min(cfg.t_of_r(w, r)))
    if not cfg.grid_step > 0:
        raise ValueError("grid_step must be positive")
    if cfg.grid_step > t_min / 8.0 * (1 + 1e-12):
        raise GridTooCoarse(
            f"grid_step {cfg.grid_step:.4g} exceeds min t / 8 = {t_min / 8:.4g}"
        )


# -- numba kernels -------------------------------------------------------


@numba.njit(cache=True)
def _isqrt(n):
    r = int(math.sqrt(n))
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


@numba.njit(cache=True)
def _shell_sorted(K, n_lo, n_hi, n_max):
    """Grid offsets with n_lo <= i^2 + k^2 < n_hi (and <= n_max).

    Sorted by n = i^2 + k^2, row-major within equal n (a stable counting sort
    over the row-major enumeration).
    """
    top = min(n_hi - 1, n_max)
    width = top - n_lo + 1
    if width <= 0:
        e = np.empty(0, np.int64)
        return e, e, e
    bucket = np.zeros(width + 1, np.int64)
    for i in range(-K, K + 1):
        ii = i * i
        if ii > top:
            continue
        kmax = _isqrt(top - ii)
        kmin = 0 if n_lo <= ii else _isqrt(n_lo - ii - 1) + 1
        first_hi = kmax if kmin == 0 else -kmin
        for k in range(-kmax, first_hi + 1):
            bucket[ii + k * k - n_lo + 1] += 1
        if kmin == 0:
            continue
        for k in range(kmin, kmax + 1):
            bucket[ii + k * k - n_lo + 1] += 1
    for m in range(width):
        bucket[m + 1] += bucket[m]
    cnt = bucket[width]
    out_i = np.empty(cnt, np.int64)
    out_k = np.empty(cnt, np.int64)
    out_n = np.empty(cnt, np.int64)
    for i in range(-K, K + 1):
        ii = i * i
        if ii > top:
            continue
        kmax = _isqrt(top - ii)
        kmin = 0 if n_lo <= ii else _isqrt(n_lo - ii - 1) + 1
        # row-major: k in [-kmax, -kmin], then [kmin, kmax] (0 only once)
        first_hi = kmax if kmin == 0 else -kmin
        for k in range(-kmax, first_hi + 1):
            n = ii + k * k
            pos = bucket[n - n_lo]
            bucket[n - n_lo] += 1
            out_i[pos] = i
            out_k[pos] = k
            out_n[pos] = n
        if kmin == 0:
            continue
        for k in range(kmin, kmax + 1):
            n = ii + k * k
            pos = bucket[n - n_lo]
            bucket[n - n_lo] += 1
            out_i[pos] = i
            out_k[pos] = k
            out_n[pos] = n
    return out_i, out_k, out_n


@numba.njit(cache=True)
def _greedy_block(order_i, order_k, t_vals, K, step2, covered, sel_i, sel_k, sel_t, n_sel):
    W = 2 * K + 1
    for idx in range(order_i.size):
        i = order_i[idx]
        k = order_k[idx]
        if covered[(i + K) * W + (k + K)]:
            continue
        t = t_vals[idx]
        sel_i[n_sel] = i
        sel_k[n_sel] = k
        sel_t[n_sel] = t
        n_sel += 1
        t2 = t * t
        reach = int(t / math.sqrt(step2)) + 1
        for di in range(-reach, reach + 1):
            ii = i + di
            if ii < -K or ii > K:
                continue
            base = (ii + K) * W
            for dk in range(-reach, reach + 1):
                kk = k + dk
                if kk < -K or kk > K:
                    continue
                if (di * di + dk * dk) * step2 < t2:
                    covered[base + kk + K] = 1
    return n_sel


@numba.njit(cache=True, parallel=True)
def _disc_counts(ci, ck, t, scale, K, step2, n_max, n_bands):
    """How many discs D(c_j, scale t_j) contain each domain grid point.

    Work is split into bands of rows; each band is written by one thread, so
    the counts do not depend on the thread count.
    """
    W = 2 * K + 1
    counts = np.zeros(W * W, np.uint16)
    band = (W + n_bands - 1) // n_bands
    for b in numba.prange(n_bands):
        row_lo = -K + b * band
        row_hi = min(K, row_lo + band - 1)
        for j in range(ci.size):
            rad = scale * t[j]
            r2 = rad * rad
            reach = int(rad / math.sqrt(step2)) + 1
            lo = max(row_lo, ci[j] - reach)
            hi = min(row_hi, ci[j] + reach)
            for ii in range(lo, hi + 1):
                di = ii - ci[j]
                base = (ii + K) * W
                for kk in range(max(-K, ck[j] - reach), min(K, ck[j] + reach) + 1):
                    dk = kk - ck[j]
                    if ii * ii + kk * kk > n_max:
                        continue
                    if (di * di + dk * dk) * step2 < r2:
                        counts[base + kk + K] += 1
    return counts


@numba.njit(cache=True)
def _domain_histogram(counts, K, n_max):
    """Histogram of counts over grid points with i^2 + k^2 <= n_max."""
    W = 2 * K + 1
    top = 0
    for v in counts:
        if v > top:
            top = v
    hist = np.zeros(int(top) + 1, np.int64)
    for i in range(-K, K + 1):
        if i * i > n_max:
            continue
        kmax = _isqrt(n_max - i * i)
        base = (i + K) * W + K
        for k in range(-kmax, kmax + 1):
            hist[counts[base + k]] += 1
    return hist


@numba.njit(cache=True)
def _separation(ci, ck, t, step2, cell, K):
    """First pair (j, k), k < j, with center j strictly inside disc k; else (-1, -1).

    Earlier discs are bucketed in cells of ``cell`` grid units, larger than
    every radius, so only the 3x3 neighbouring cells need checking.
    """
    W = (2 * K) // cell + 2
    n = ci.size
    head = -np.ones(W * W, np.int64)
    nxt = -np.ones(n, np.int64)
    for j in range(n):
        cx = (ci[j] + K) // cell
        cy = (ck[j] + K) // cell
        for ox in range(-1, 2):
            for oy in range(-1, 2):
                x = cx + ox
                y = cy + oy
                if x < 0 or y < 0 or x >= W or y >= W:
                    continue
                m = head[x * W + y]
                while m >= 0:
                    di = ci[j] - ci[m]
                    dk = ck[j] - ck[m]
                    if (di * di + dk * dk) * step2 < t[m] * t[m]:
                        return j, m
                    m = nxt[m]
        slot = cx * W + cy
        nxt[j] = head[slot]
        head[slot] = j
    return -1, -1


# -- build and verify ----------------------------------------------------


@dataclass
class CoveringResult:
    centers: np.ndarray  # complex
    radii: np.ndarray
    index_i: np.ndarray = field(repr=False)
    index_k: np.ndarray = field(repr=False)
    grid_step: float = 0.0
    K: int = 0
    multiplicity_max: int | None = None
    multiplicity_histogram: dict | None = None

    @property
    def n_centers(self) -> int:
        return int(self.centers.size)

    def subset(self, keep: np.ndarray) -> "CoveringResult":
        return CoveringResult(
            self.centers[keep], self.radii[keep], self.index_i[keep],
            self.index_k[keep], self.grid_step, self.K,
        )


def _domain(cfg: CoveringConfig) -> tuple[int, int]:
    K = int(math.floor(cfg.R_max / cfg.grid_step + 1e-9))
    n_max = int(math.floor((cfg.R_max / cfg.grid_step) ** 2 + 1e-9))
    return K, n_max


def _t_at_n(w, cfg: CoveringConfig, n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return cfg.t_of_r(w, cfg.grid_step * np.sqrt(n))


def _greedy_order(w, cfg: CoveringConfig, K: int, n_lo: int, n_hi: int, n_max: int):
    """Points of one shell in greedy order, with their radii t."""
    oi, ok, on = _shell_sorted(K, n_lo, n_hi, n_max)
    if on.size == 0:
        return oi, ok, np.empty(0)
    starts = np.flatnonzero(np.r_[True, on[1:] != on[:-1]])
    t_u = _t_at_n(w, cfg, on[starts])
    if np.any(np.diff(t_u) > 0):
        raise ValueError("t must be non-increasing in |z| for greedy ordering")
    lengths = np.diff(np.r_[starts, on.size])
    t = np.repeat(t_u, lengths)
    # runs of equal t spanning several n are re-sorted by row-major index
    run_start = np.flatnonzero(np.r_[True, t_u[1:] != t_u[:-1]])
    run_end = np.r_[run_start[1:], t_u.size]
    W = 2 * K + 1
    for a, b in zip(run_start, run_end):
        if b - a > 1:
            lo, hi = starts[a], (starts[b] if b < starts.size else on.size)
            key = (oi[lo:hi] + K) * W + (ok[lo:hi] + K)
            order = np.argsort(key, kind="stable")
            oi[lo:hi] = oi[lo:hi][order]
            ok[lo:hi] = ok[lo:hi][order]
    return oi, ok, t


def build_covering(
    w: RadialWeight | None, cfg: CoveringConfig, block: int = 1 << 20
) -> CoveringResult:
    """Greedy covering of the grid points of ``|z| <= R_max``.

    Raises
    ------
    LipschitzViolation
        If ``t`` is not 1/4-Lipschitz along the radial grid.
    GridTooCoarse
        If the grid step exceeds ``min t / 8``.
    """
    violation = _lipschitz_probe(w, cfg)
    if violation is not None:
        raise LipschitzViolation(*violation)
    _check_step(w, cfg)
    K, n_max = _domain(cfg)
    step2 = cfg.grid_step**2
    W = 2 * K + 1
    covered = np.zeros(W * W, np.uint8)
    cap = 1024
    sel_i = np.empty(cap, np.int64)
    sel_k = np.empty(cap, np.int64)
    sel_t = np.empty(cap, float)
    n_sel = 0
    # about pi grid points per unit of n
    width = max(1, int(block / math.pi))
    n_lo = 0
    prev_t = math.inf
    while n_lo <= n_max:
        n_hi = min(n_max + 1, n_lo + width)
        # never split a group of equal t across two shells
        while n_hi <= n_max and _t_at_n(w, cfg, n_hi) == _t_at_n(w, cfg, n_hi - 1):
            n_hi = min(n_max + 1, n_hi + width)
        oi, ok, t = _greedy_order(w, cfg, K, n_lo, n_hi, n_max)
        if t.size:
            if t[0] > prev_t:
                raise ValueError("t must be non-increasing in |z| for greedy ordering")
            prev_t = float(t[-1])
            need = n_sel + oi.size
            if need > cap:
                cap = max(2 * cap, need)
                sel_i = np.resize(sel_i, cap)
                sel_k = np.resize(sel_k, cap)
                sel_t = np.resize(sel_t, cap)
            n_sel = _greedy_block(oi, ok, t, K, step2, covered, sel_i, sel_k, sel_t, n_sel)
        n_lo = n_hi
    ci, ck, tt = sel_i[:n_sel].copy(), sel_k[:n_sel].copy(), sel_t[:n_sel].copy()
    centers = cfg.grid_step * (ci + 1j * ck)
    return CoveringResult(centers, tt, ci, ck, cfg.grid_step, K)


@dataclass
class VerificationReport:
    separation: bool
    coverage: bool
    coverage_fraction: float
    engulfing: bool
    finite_multiplicity: bool
    multiplicity_max: int
    multiplicity_min: int
    multiplicity_histogram: dict
    n_centers: int
    first_separation_failure: tuple | None = None
    t_increase_violations: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_covering(
    cov: CoveringResult,
    w: RadialWeight | None,
    cfg: CoveringConfig,
    n_samples: int = 2000,
    seed: int = 0,
    multiplicity_bound: int = 25,
    n_bands: int = 64,
) -> VerificationReport:
    """Check the four covering conclusions on the grid.

    (i) separation of later centers from earlier discs (exact, on grid
    offsets); (ii) every domain grid point lies in some open disc; (iii)
    sampled ``z`` in ``D(z_j, t_j)`` and ``u`` in ``D(z, t(z))`` satisfy
    ``|u - z_j| < 3 t_j``; (iv) multiplicity of the 3x-dilated discs over the
    grid, reported together with whether it stays within ``multiplicity_bound``.
    """
    K, n_max = _domain(cfg)
    step2 = cfg.grid_step**2
    W = 2 * K + 1
    ci, ck, t = cov.index_i, cov.index_k, cov.radii
    n = ci.size

    if n:
        reach_cells = int(np.max(t) / cfg.grid_step) + 2
        j, m = _separation(ci, ck, t, step2, reach_cells, K)
    else:
        j, m = -1, -1
    separation = j < 0

    with warnings.catch_warnings():
        # numba probes an optional threading backend and warns if it is old
        warnings.filterwarnings("ignore", message=".*TBB")
        counts1 = _disc_counts(ci, ck, t, 1.0, K, step2, n_max, n_bands)
    hist1 = _domain_histogram(counts1, K, n_max)
    n_domain = int(hist1.sum())
    coverage_fraction = float(1.0 - hist1[0] / n_domain) if n_domain else 1.0
    del counts1

    rng = np.random.default_rng(seed)
    engulf = True
    if n:
        pick = rng.integers(0, n, size=n_samples)
        zj = cov.centers[pick]
        tj = t[pick]
        z = zj + tj * np.sqrt(rng.random(n_samples)) * np.exp(2j * np.pi * rng.random(n_samples))
        tz = cfg.t_of_r(w, np.abs(z))
        u = z + tz * np.sqrt(rng.random(n_samples)) * np.exp(2j * np.pi * rng.random(n_samples))
        engulf = bool(np.all(np.abs(u - zj) < DILATION * tj))

    counts3 = _disc_counts(ci, ck, t, DILATION, K, step2, n_max, n_bands)
    hist3 = _domain_histogram(counts3, K, n_max)
    del counts3
    hist = {int(v): int(c) for v, c in enumerate(hist3) if c}
    mmax = max(hist) if hist else 0
    mmin = min(hist) if hist else 0

    slack = cfg.grid_step * LIPSCHITZ
    mono = int(np.sum(np.diff(t) > slack)) if n > 1 else 0
    cov.multiplicity_max = mmax
    cov.multiplicity_histogram = hist
    return VerificationReport(
        separation=bool(separation),
        coverage=bool(n_domain and hist1[0] == 0),
        coverage_fraction=coverage_fraction,
        engulfing=engulf,
        finite_multiplicity=bool(1 <= mmin and mmax <= multiplicity_bound),
        multiplicity_max=mmax,
        multiplicity_min=mmin,
        multiplicity_histogram=hist,
        n_centers=int(n),
        first_separation_failure=None if separation else (int(j), int(m)),
        t_increase_violations=mono,
    )


# -- local estimates -------------------------------------------------------


def tau_doubling_check(w: RadialWeight, pairs) -> bool:
    """True iff tau(a)/2 <= tau(z) <= 2 tau(a) for every sampled (a, z).

    Uses the regularised tau.
    """
    pairs = list(pairs)
    if not pairs:
        return True
    a = np.array([p[0] for p in pairs], dtype=complex)
    z = np.array([p[1] for p in pairs], dtype=complex)
    ta = w.tau_tilde(np.abs(a))
    tz = w.tau_tilde(np.abs(z))
    return bool(np.all((0.5 * ta <= tz) & (tz <= 2.0 * ta)))


def sample_disc_pairs(w: RadialWeight, a: complex, delta: float, n: int, seed: int = 0):
    """``n`` pairs (a, z) with z uniform in D(a, delta tau_tilde(a))."""
    rng = np.random.default_rng(seed)
    rad = delta * float(w.tau_tilde(abs(a)))
    z = a + rad * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))
    return [(a, zz) for zz in z]


def pointwise_estimate_check(
    w: RadialWeight,
    p: float,
    f: EntireFunction,
    a: complex,
    delta: float,
    n_radial: int = 200,
    n_angular: int = 400,
) -> tuple[float, float]:
    """|f(a)|^p e^{-p phi(a)} against the disc average of |f|^p e^{-p phi}.

    The disc is ``D(a, delta tau_tilde(a))`` and the average uses the midpoint
    rule on a polar grid centred at ``a``; dividing the integral by
    ``(delta tau)**2`` leaves the normalisation of the bound to the caller.
    Returns ``(lhs, mean_integral)`` with
    ``mean_integral = int_D |f|^p e^{-p phi} dm / (delta tau(a))**2``.
    Both are computed relative to ``exp(-p phi(|a|))`` and rescaled at the end.
    """
    rad = delta * float(w.tau_tilde(abs(a)))
    rho = (np.arange(n_radial) + 0.5) / n_radial * rad
    th = (np.arange(n_angular) + 0.5) / n_angular * 2 * np.pi
    z = a + rho[:, None] * np.exp(1j * th[None, :])
    ra = abs(a)
    base = float(w.phi(ra))
    with np.errstate(divide="ignore"):
        log_fz = p * np.log(np.abs(f(z)))
        log_fa = p * math.log(abs(f(a))) if f(a) != 0 else -math.inf
    rel = log_fz - p * (w.phi(np.abs(z)) - base)
    dA = (rad / n_radial) * (2 * np.pi / n_angular) * rho[:, None]
    integral_rel = float(np.sum(np.exp(rel) * dA))
    scale = math.exp(-p * base)
    lhs = math.exp(log_fa) * scale if np.isfinite(log_fa) else 0.0
    return lhs, integral_rel * scale / rad**2
