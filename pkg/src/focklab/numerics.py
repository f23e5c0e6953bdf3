"""Log-domain quadrature and integral means.

Every integrand is handled through its logarithm so that weights such as
``exp(-p exp(exp(r)))`` never have to be represented as plain floats.  Panel
values are combined with a log-sum-exp that sorts its terms first, which
keeps results bit-identical regardless of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergentTail, NonDecayingTail, ToleranceNotMet

# 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1]
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_LOG_WK = np.log(np.concatenate([_WK[:-1], _WK[::-1]]))
# Gauss nodes are the odd-indexed Kronrod nodes
_GAUSS_IDX = np.array([1, 3, 5, 7, 9, 11, 13])
_LOG_WG = np.log(np.concatenate([_WG[:-1], _WG[::-1]]))

TAIL_NATS = 69.0  # ~ log(1e30)
MAX_RADIUS = 1e4
MAX_EVALS = 10_000_000
DEFAULT_TOL = 1e-9

LogFn = Callable[[np.ndarray], np.ndarray]


def logsumexp(values, axis=None):
    """log(sum(exp(values))) with terms summed largest first.

    Returns ``-inf`` for an empty input or when every term is ``-inf``.
    """
    v = np.asarray(values, dtype=float)
    if axis is None:
        v = v.ravel()
        axis = 0
    if v.size == 0:
        return -np.inf
    v = -np.sort(-v, axis=axis)
    top = np.take(v, [0], axis=axis)
    safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(invalid="ignore", under="ignore", divide="ignore"):
        s = np.sum(np.exp(v - safe), axis=axis, keepdims=True)
        out = safe + np.log(s)
    out = np.where(np.isneginf(top), -np.inf, out)
    out = np.where(np.isposinf(top), np.inf, out)
    return np.squeeze(out, axis=axis)[()]


@dataclass(frozen=True)
class LogQuadratureResult:
    log_value: float
    rel_error_estimate: float
    r_cut: float
    n_evals: int

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def _eval_log(logf: LogFn, x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", over="ignore", under="ignore", invalid="ignore"):
        y = np.asarray(logf(x), dtype=float)
    y = np.broadcast_to(y, x.shape)
    return np.where(np.isnan(y), -np.inf, y)


def _panels(logf: LogFn, a: np.ndarray, b: np.ndarray):
    """Kronrod value and error estimate of each panel, both as logs."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    y = _eval_log(logf, x)
    log_half = np.log(half)
    log_k = logsumexp(y + _LOG_WK, axis=1) + log_half
    log_g = logsumexp(y[:, _GAUSS_IDX] + _LOG_WG, axis=1) + log_half
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        rel = np.abs(-np.expm1(log_g - log_k))
        # QUADPACK's scaling of |K - G| for a nonnegative integrand
        scale = np.minimum(1.0, (200.0 * rel) ** 1.5)
        log_err = log_k + np.log(np.maximum(scale, 50 * np.finfo(float).eps))
    log_err = np.where(np.isfinite(log_k), log_err, -np.inf)
    return log_k, log_err


def _adapt(logf: LogFn, edges: np.ndarray, tol: float, budget: int):
    """Bisect panels until the summed error is below ``tol`` relative."""
    a, b = edges[:-1].copy(), edges[1:].copy()
    log_k, log_err = _panels(logf, a, b)
    n_evals = a.size * NODES.size
    log_tol = math.log(tol)
    while True:
        total = logsumexp(log_k)
        err = logsumexp(log_err)
        if not np.isfinite(total):
            return -np.inf, 0.0, n_evals
        if err - total <= log_tol:
            return float(total), float(math.exp(err - total)), n_evals
        if n_evals >= budget:
            raise ToleranceNotMet(
                f"relative error {math.exp(err - total):.3g} after {n_evals} evaluations"
            )
        # every panel above its fair share of the error budget is split
        share = total + log_tol - math.log(a.size)
        bad = log_err > share
        if not np.any(bad):
            bad = log_err >= np.max(log_err)
        am, bm = a[bad], b[bad]
        mm = 0.5 * (am + bm)
        if np.any((mm <= am) | (mm >= bm)):
            raise ToleranceNotMet("panel width reached floating-point resolution")
        new_a = np.concatenate([am, mm])
        new_b = np.concatenate([mm, bm])
        nk, ne = _panels(logf, new_a, new_b)
        n_evals += new_a.size * NODES.size
        keep = ~bad
        a = np.concatenate([a[keep], new_a])
        b = np.concatenate([b[keep], new_b])
        log_k = np.concatenate([log_k[keep], nk])
        log_err = np.concatenate([log_err[keep], ne])
        order = np.argsort(a, kind="stable")
        a, b, log_k, log_err = a[order], b[order], log_k[order], log_err[order]


def _initial_step(logf: LogFn, r_lo: float) -> float:
    """A first scan offset over which the integrand drops by < ~1 nat."""
    step = 1e-3 * max(1.0, r_lo)
    y0 = float(_eval_log(logf, np.array([r_lo]))[0])
    if not np.isfinite(y0):
        return step
    for _ in range(320):
        y1 = float(_eval_log(logf, np.array([r_lo + step]))[0])
        if y1 > y0 - 1.0:
            return step
        step *= 0.1
    return step


def _scan_grid(r_lo: float, step: float, r_max: float) -> np.ndarray:
    n = int(math.ceil(math.log1p(0.01 * (r_max - r_lo) / step) / math.log(1.01))) + 1
    s = step * (1.01 ** np.arange(n) - 1.0) / 0.01
    pts = r_lo + s
    pts = pts[pts < r_max]
    return np.append(pts, r_max)


def _thin(points: np.ndarray, max_panels: int = 256) -> np.ndarray:
    if points.size - 1 <= max_panels:
        return points
    idx = np.unique(np.linspace(0, points.size - 1, max_panels + 1).round().astype(int))
    return points[idx]


def log_integrate(
    logf: LogFn,
    a: float,
    b: float | None = None,
    tol: float = DEFAULT_TOL,
    budget: int = MAX_EVALS,
) -> LogQuadratureResult:
    """log of the integral of ``exp(logf)`` over ``[a, b]``.

    With ``b=None`` the upper limit is infinity: the integrand is scanned
    outward from ``a`` on a geometric grid and cut at the first point where it
    has fallen ``TAIL_NATS`` below its running maximum while decreasing.  If no
    such point exists below ``MAX_RADIUS`` but the integrand is decreasing
    faster than ``1/s`` there, the remaining tail is integrated after the
    substitution ``s = R/u``.
    """
    if not 1e-12 <= tol <= 1e-3:
        raise ValueError(f"tol must lie in [1e-12, 1e-3], got {tol}")
    if b is not None:
        if b <= a:
            return LogQuadratureResult(-np.inf, 0.0, float(b), 0)
        step = _initial_step(logf, a)
        edges = _thin(_scan_grid(a, step, b))
        log_v, rel, n = _adapt(logf, edges, tol, budget)
        return LogQuadratureResult(log_v, rel, float(b), n)

    step = _initial_step(logf, a)
    grid = _scan_grid(a, step, max(MAX_RADIUS, 2.0 * a + 1.0))
    n_scan = 0
    running = -np.inf
    cut = None
    prev = -np.inf
    for start in range(0, grid.size, 256):
        x = grid[start:start + 256]
        y = _eval_log(logf, x)
        n_scan += x.size
        if np.any(y == np.inf):
            raise NonDecayingTail("integrand is infinite")
        cm = np.maximum.accumulate(np.maximum(y, running))
        before = np.concatenate([[prev], y[:-1]])
        hit = (y < cm - TAIL_NATS) & (y < before)
        if np.any(hit):
            k = int(np.argmax(hit))
            cut = start + k
            break
        running = cm[-1]
        prev = y[-1]
    if cut is not None:
        edges = _thin(grid[: cut + 1])
        log_v, rel, n = _adapt(logf, edges, tol, budget)
        return LogQuadratureResult(log_v, rel, float(grid[cut]), n + n_scan)

    # no cut below MAX_RADIUS: accept an integrable algebraic tail only
    r_c = float(grid[-1])
    y_c = _eval_log(logf, np.array([0.5 * r_c, r_c]))
    slope = (y_c[1] - y_c[0]) / math.log(2.0)
    if not y_c[1] < y_c[0]:
        raise NonDecayingTail(f"integrand is not decreasing at r = {r_c:g}")
    if slope >= -1.0:
        raise DivergentTail(f"integrand decays like s**{slope:.3f} at s = {r_c:g}")
    head = log_integrate(logf, a, r_c, tol=tol, budget=budget)

    def mapped(u):
        return _eval_log(logf, r_c / u) + math.log(r_c) - 2.0 * np.log(u)

    tail = log_integrate(mapped, 0.0, 1.0, tol=tol, budget=budget)
    total = logsumexp([head.log_value, tail.log_value])
    rel = head.rel_error_estimate * math.exp(head.log_value - total) + (
        tail.rel_error_estimate * math.exp(tail.log_value - total)
    )
    return LogQuadratureResult(float(total), rel, math.inf, head.n_evals + tail.n_evals + n_scan)


def radial_integral(
    log_h: LogFn | None,
    w,
    p: float,
    r_lo: float = 0.0,
    extra_power: float = 0.0,
    tol: float = DEFAULT_TOL,
    r_hi: float | None = None,
    relative: bool = False,
) -> LogQuadratureResult:
    """log of  int_{r_lo}^{r_hi} h(s) s**(1 + extra_power) exp(-p phi(s)) ds.

    ``log_h`` returns log h(s) for an array of radii (``None`` means h = 1).
    ``r_hi=None`` integrates to infinity with a certified tail cutoff.
    With ``relative=True`` the density is ``exp(-p (phi(s) - phi(r_lo)))``,
    i.e. the result is the integral divided by ``exp(-p phi(r_lo))``.

    The integration variable is the offset ``x = s - r_lo`` and the density
    enters as ``exp(-p (phi(r_lo + x) - phi(r_lo)))``; the constant
    ``-p phi(r_lo)`` is added to the log afterwards.  This keeps the integrand
    resolvable when phi' is so large that it decays over distances finer
    than the floating-point spacing of ``r_lo`` itself.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    power = 1.0 + extra_power
    r0 = float(r_lo)

    def logf(x):
        s = r0 + x
        out = power * np.log(s) - p * w.phi_increment(r0, x)
        if log_h is not None:
            out = out + log_h(s)
        return out

    upper = None if r_hi is None else float(r_hi) - r0
    res = log_integrate(logf, 0.0, upper, tol=tol)
    offset = 0.0 if relative else -p * float(w.phi(r0))
    return LogQuadratureResult(
        res.log_value + offset, res.rel_error_estimate, r0 + res.r_cut, res.n_evals
    )


# -- integral means on circles --------------------------------------------


def _coeff_array(f) -> np.ndarray:
    c = getattr(f, "coeffs", f)
    return np.asarray(c, dtype=complex)


def _scaled_terms(c: np.ndarray, r: np.ndarray):
    """c_k r**k / exp(shift(r)) together with the per-radius log shift."""
    k = np.arange(c.size)
    with np.errstate(divide="ignore"):
        log_c = np.log(np.abs(c))
        log_r = np.log(r)
    lt = log_c[None, :] + k[None, :] * log_r[:, None]
    lt[:, 0] = log_c[0]
    lt = np.where(np.isnan(lt), -np.inf, lt)
    shift = np.max(lt, axis=1)
    safe = np.where(np.isfinite(shift), shift, 0.0)
    with np.errstate(under="ignore"):
        mag = np.exp(lt - safe[:, None])
    phase = np.where(np.abs(c) > 0, c / np.where(np.abs(c) > 0, np.abs(c), 1.0), 0)
    return mag * phase[None, :], shift


def default_nodes(f) -> int:
    deg = _coeff_array(f).size - 1
    return max(64, 8 * (deg + 1))


def log_circle_mean(f, r, q: float, n_nodes: int | None = None) -> np.ndarray:
    """log M_q(r, f) for an array of radii (``q = inf`` gives the max modulus).

    The mean over the circle uses the trapezoidal rule on ``n_nodes``
    equispaced angles, computed with an FFT of the coefficient vector.  For
    ``q = inf`` the best node is refined three times with 8x oversampling.
    """
    c = _coeff_array(f)
    deg = c.size - 1
    n = default_nodes(c) if n_nodes is None else int(n_nodes)
    if n < 4 * (deg + 1):
        raise ValueError(f"n_nodes must be >= 4*(degree+1) = {4 * (deg + 1)}")
    if not q > 0:
        raise ValueError("q must be positive")
    r_in = np.asarray(r, dtype=float)
    r = np.atleast_1d(r_in).ravel()
    terms, shift = _scaled_terms(c, r)
    vals = np.abs(np.fft.fft(terms, n=n, axis=1))
    if np.isinf(q):
        best = np.max(vals, axis=1)
        theta = -2 * np.pi * np.argmax(vals, axis=1) / n
        width = 2 * np.pi / n
        k = np.arange(c.size)
        for _ in range(3):
            t = theta[:, None] + width * np.linspace(-1.0, 1.0, 17)[None, :]
            e = np.exp(1j * k[None, None, :] * t[:, :, None])
            v = np.abs(np.einsum("mk,msk->ms", terms, e))
            j = np.argmax(v, axis=1)
            best = np.maximum(best, v[np.arange(r.size), j])
            theta = t[np.arange(r.size), j]
            width /= 8.0
        with np.errstate(divide="ignore"):
            out = shift + np.log(best)
    else:
        with np.errstate(divide="ignore"):
            out = shift + np.log(np.mean(vals**q, axis=1)) / q
    out = np.where(np.isfinite(shift), out, -np.inf)
    return out.reshape(r_in.shape) if r_in.ndim else out


def circle_mean(f, r: float, q: float, n_nodes: int | None = None) -> float:
    """M_q(r, f), the q-th integral mean of ``f`` on the circle of radius r."""
    lv = float(log_circle_mean(f, [r], q, n_nodes)[0])
    if lv > math.log(np.finfo(float).max):
        raise OverflowError(f"M_q(r, f) overflows at r={r}")
    return math.exp(lv)
