"""Monomial norms, the integration operator T_g and its criteria.

``T_g f(z) = int_0^z f(s) g'(s) ds`` acts on monomials by
``z**k -> sum_m m c_m z**(k+m) / (k+m)``, so in the orthonormal basis
``e_n = z**n / delta_n`` of the p = 2 space it is a lower-triangular band
matrix.  The Volterra operator (g = z) is the weighted shift
``e_n -> omega_n e_{n+1}``.

Growth criteria over the plane are evaluated along radii with
``M_inf(r, g')`` as the envelope of ``|g'|`` and classified by the log-log
slope of the tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EigenFailure, OutOfCaseRange, TruncationInsufficient
from .functions import EntireFunction, taylor_tail
from .numerics import log_circle_mean, log_integrate, logsumexp, radial_integral
from .weights import RadialWeight

LogEnvelope = Callable[[np.ndarray], np.ndarray]

SLOPE_BAND = 0.05  # |slope| below this counts as flat
INTEGRABLE_SLOPE = (-1.05, -0.95)  # log-log slope window judged inconclusive
STABLE_REL = 0.02

# -- monomial norms --------------------------------------------------------

_NORM_CACHE: dict = {}


@dataclass(frozen=True)
class MonomialNorms:
    p: float
    log_values: np.ndarray = field(repr=False)  # log delta_n, n = 0..N_max
    N_max: int = 0

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)


def _log_monomial_norm(w: RadialWeight, p: float, n: int) -> float:
    res = radial_integral(None, w, p, extra_power=n * p, tol=1e-11)
    return (math.log(2 * math.pi) + res.log_value) / p


def monomial_norms(w: RadialWeight, p: float, N_max: int) -> MonomialNorms:
    """delta_n for n = 0..N_max, where delta_n**p = 2 pi int r**(np+1) e^{-p phi} dr.

    Values are cached per (weight, p) and extended on demand.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    if N_max < 0:
        raise ValueError("N_max must be nonnegative")
    key = (w, float(p))
    have = _NORM_CACHE.setdefault(key, [])
    for n in range(len(have), N_max + 1):
        have.append(_log_monomial_norm(w, p, n))
    return MonomialNorms(float(p), np.array(have[: N_max + 1]), N_max)


def volterra_weights(w: RadialWeight, N_max: int) -> np.ndarray:
    """omega_n = delta_{n+1} / ((n+1) delta_n) for n = 0..N_max-1 (p = 2)."""
    ld = monomial_norms(w, 2.0, N_max).log_values
    n = np.arange(N_max)
    return np.exp(ld[1:] - ld[:-1] - np.log(n + 1.0))


def shift_monotonicity(omega: Sequence[float]) -> tuple[bool, int | None]:
    """Smallest n_0 with omega strictly decreasing on [n_0, end] and
    omega_end < omega_{n_0} / 2; ``(False, None)`` if there is none."""
    om = np.asarray(omega, dtype=float)
    if om.size < 50:
        raise ValueError("need at least 50 terms")
    dec = np.diff(om) < 0
    # start of the final strictly decreasing run
    bad = np.flatnonzero(~dec)
    n0 = int(bad[-1] + 1) if bad.size else 0
    if n0 >= om.size - 1:
        return False, None
    if om[-1] < om[n0] / 2:
        return True, n0
    return False, None


# -- the operator matrix ---------------------------------------------------


@dataclass(frozen=True)
class OperatorMatrix:
    entries: np.ndarray = field(repr=False)
    symbol: EntireFunction
    N: int

    def subdiagonal(self, m: int = 1) -> np.ndarray:
        return np.diagonal(self.entries, offset=-m).copy()


def tg_matrix(g: EntireFunction, w: RadialWeight, N: int) -> OperatorMatrix:
    """N x N matrix of T_g in the orthonormal monomial basis of F^phi_2.

    Entry (k+m, k) is ``m c_m delta_{k+m} / ((k+m) delta_k)``.
    """
    c = g.array
    deg = g.degree
    if N < deg + 5:
        raise ValueError(f"N must be >= deg g + 5 = {deg + 5}")
    ld = monomial_norms(w, 2.0, N).log_values
    T = np.zeros((N, N), dtype=complex)
    k = np.arange(N)
    for m in range(1, deg + 1):
        if c[m] == 0:
            continue
        kk = k[: N - m]
        T[kk + m, kk] = m * c[m] * np.exp(ld[kk + m] - ld[kk]) / (kk + m)
    return OperatorMatrix(T, g, N)


def singular_values(T: np.ndarray, method: str = "eigh") -> np.ndarray:
    """Singular values (descending) via eigh of T*T or a direct SVD."""
    try:
        if method == "svd":
            return np.linalg.svd(T, compute_uv=False)
        ev = np.linalg.eigvalsh(T.conj().T @ T)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    return np.sqrt(np.clip(ev, 0.0, None))[::-1]


@dataclass
class SchattenTail:
    p: float
    sizes: list
    partial_sums: list
    convergent: bool
    last_change: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def schatten_tail(
    g: EntireFunction, w: RadialWeight, p: float, sizes: Sequence[int] = (50, 100, 200)
) -> SchattenTail:
    """Partial sums sum_j s_j(T_N)**p over truncation sizes N.

    ``convergent`` means the last two partial sums differ by at most 2%.
    """
    sizes = sorted(int(n) for n in sizes)
    if len(sizes) < 3 or sizes[-1] < 200:
        raise ValueError("need >= 3 truncation sizes with the largest >= 200")
    sums = []
    for n in sizes:
        s = singular_values(tg_matrix(g, w, n).entries)
        sums.append(float(np.sum(s**p)))
    if sums[-1] == 0:
        return SchattenTail(p, sizes, sums, True, 0.0)
    change = (sums[-1] - sums[-2]) / sums[-1]
    return SchattenTail(p, sizes, sums, bool(abs(change) <= STABLE_REL), float(change))


# -- radial envelopes and tail slopes ---------------------------------------


def log_envelope(g) -> LogEnvelope | None:
    """log M_inf(r, g') for an EntireFunction, a callable passed through.

    Returns ``None`` when g' vanishes identically.
    """
    if isinstance(g, EntireFunction):
        if g.is_constant():
            return None
        dg = g.derivative()
        return lambda r: log_circle_mean(dg, r, math.inf)
    return g


def _log1p_dphi(w: RadialWeight, r):
    return np.logaddexp(0.0, w.log_dphi(r))


def default_criterion_grid(w: RadialWeight, n: int = 400) -> np.ndarray:
    """Geometric grid from 1 to a family-dependent top radius."""
    top = {"doubleexp": 700.0, "exp": 1e4}.get(w.family, 1e6)
    return np.geomspace(1.0, top, n)


def tail_slope(r: np.ndarray, log_v: np.ndarray, frac: float = 0.25) -> float:
    """Least-squares slope of log v against log r over the last ``frac`` of points."""
    m = max(3, int(round(frac * r.size)))
    x, y = np.log(r[-m:]), log_v[-m:]
    if not np.all(np.isfinite(y)):
        if np.all(y == -np.inf):
            return -math.inf
        return math.inf if np.any(y == np.inf) else -math.inf
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class CriterionReport:
    quantity_name: str
    r_grid: list
    values: list  # natural logs
    sup_estimate: float
    loglog_slope_tail: float
    verdict: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def classify_growth(r: np.ndarray, log_v: np.ndarray) -> tuple[float, str]:
    """Verdict from the tail slope of a positive quantity.

    Unbounded for slope >= 0.05; VanishesAtInfinity for slope < -0.05 with
    the last value below a tenth of the first; Bounded for a flat monotone
    tail or a decaying one without the tenfold drop; Inconclusive for a flat
    non-monotone tail.
    """
    if np.all(log_v == -np.inf):
        return -math.inf, "VanishesAtInfinity"
    slope = tail_slope(r, log_v)
    if slope >= SLOPE_BAND:
        return slope, "Unbounded"
    if slope < -SLOPE_BAND:
        if log_v[-1] < log_v[0] - math.log(10.0):
            return slope, "VanishesAtInfinity"
        return slope, "Bounded"
    m = max(3, int(round(0.25 * r.size)))
    d = np.diff(log_v[-m:])
    d = np.where(np.abs(d) < 1e-12, 0.0, d)  # rounding noise in a flat tail
    monotone = bool(np.all(d >= 0) or np.all(d <= 0))
    return slope, "Bounded" if monotone else "Inconclusive"


def tg_bounded_criterion(
    g, w: RadialWeight, p: float, q: float, r_grid=None
) -> CriterionReport:
    """B(r) = M_inf(r, g') Delta phi(r)**((q-p)/(pq)) / (1 + phi'(r)), for p <= q."""
    if not 0 < p <= q:
        raise ValueError("tg_bounded_criterion needs 0 < p <= q")
    r = default_criterion_grid(w) if r_grid is None else np.asarray(r_grid, dtype=float)
    env = log_envelope(g)
    if env is None:
        logv = np.full(r.size, -np.inf)
    else:
        beta = (q - p) / (p * q)
        logv = env(r) + beta * w.log_laplacian(r) - _log1p_dphi(w, r)
    slope, verdict = classify_growth(r, logv)
    sup = float(np.exp(np.max(logv))) if np.max(logv) < 709 else math.inf
    return CriterionReport("B(r)", r.tolist(), logv.tolist(), sup, slope, verdict)


@dataclass
class IntegralCriterion:
    log_integral: float
    finite: bool | None
    status: str
    tail_slope: float
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _judge_integrable(r, log_integrand) -> tuple[bool | None, str, float]:
    slope = tail_slope(r, log_integrand)
    lo, hi = INTEGRABLE_SLOPE
    if slope < lo:
        return True, "Finite", slope
    if slope <= hi:
        return None, "InconclusiveTail", slope
    return False, "Divergent", slope


def _radial_log_integral(logf: LogEnvelope) -> float:
    """log 2 pi int_0^inf exp(logf(r)) dr, logf already containing the r of dm."""
    res = log_integrate(logf, 0.0, None, tol=1e-8)
    return math.log(2 * math.pi) + res.log_value


def cw5_check(w: RadialWeight, r_grid=None) -> dict:
    """sup of -tau'' tau / (tau phi')**2 along a grid, and whether it stays bounded.

    ``tau''/tau = (log tau)'' + ((log tau)')**2`` by central differences.
    """
    r = np.geomspace(2.0, 200.0 if w.family != "doubleexp" else 6.0, 200) if r_grid is None else np.asarray(r_grid, float)
    h = 1e-4 * r
    lt = w.log_tau
    d1 = (lt(r + h) - lt(r - h)) / (2 * h)
    d2 = (lt(r + h) - 2 * lt(r) + lt(r - h)) / h**2
    with np.errstate(over="ignore"):
        val = -(d2 + d1**2) / np.exp(2 * w.log_dphi(r))
    sup = float(np.max(val))
    tail = val[-50:]
    ok = bool(np.isfinite(sup) and np.all(np.diff(tail) <= 1e-9 * max(1.0, abs(sup))) or np.all(np.abs(tail) < abs(sup) + 1e-12))
    return {"cw5_sup": sup, "cw5_bounded": ok}


def schatten_integral_criterion(
    g, w: RadialWeight, p: float, r_tail=None
) -> IntegralCriterion:
    """2 pi int_0^inf (M_inf(r, g') / (1 + phi'))**p Delta phi(r) r dr.

    Finiteness is read from the tail log-log slope of the integrand (which
    includes the factor r of area measure); the integral itself is only
    evaluated when the tail is integrable.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    env = log_envelope(g)
    extras = cw5_check(w)
    if env is None:
        return IntegralCriterion(-math.inf, True, "Finite", -math.inf, extras)

    def logf(r):
        return p * (env(r) - _log1p_dphi(w, r)) + w.log_laplacian(r) + np.log(r)

    r = default_criterion_grid(w) if r_tail is None else np.asarray(r_tail, float)
    finite, status, slope = _judge_integrable(r, logf(r))
    log_val = _radial_log_integral(logf) if finite else math.inf
    return IntegralCriterion(float(log_val), finite, status, slope, extras)


def tg_qlp_criterion(g, w: RadialWeight, p: float, q: float, r_tail=None) -> IntegralCriterion:
    """log of || g'/(1 + phi') ||_{L^s(dm)} with s = pq/(p-q), for q < p."""
    if not 0 < q < p:
        raise ValueError("tg_qlp_criterion needs 0 < q < p")
    s = p * q / (p - q)
    env = log_envelope(g)
    if env is None:
        return IntegralCriterion(-math.inf, True, "Finite", -math.inf, {"s": s})

    def logf(r):
        return s * (env(r) - _log1p_dphi(w, r)) + np.log(r)

    r = default_criterion_grid(w) if r_tail is None else np.asarray(r_tail, float)
    finite, status, slope = _judge_integrable(r, logf(r))
    log_norm = _radial_log_integral(logf) / s if finite else math.inf
    return IntegralCriterion(float(log_norm), finite, status, slope, {"s": s})


# -- closed-form thresholds ------------------------------------------------


@dataclass
class ThresholdVerdict:
    bounded: bool | None
    compact: bool | None
    borderline: bool
    case: str
    expression: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @property
    def growth_verdict(self) -> str | None:
        """The verdict tg_bounded_criterion should reach for the same data."""
        if self.bounded is None:
            return None
        if self.compact:
            return "VanishesAtInfinity"
        return "Bounded" if self.bounded else "Unbounded"


def power_threshold(alpha: float, p: float, q: float) -> float:
    """Largest admissible degree 2 + (alpha-2)(1 - 1/p + 1/q) for p <= q."""
    return 2.0 + (alpha - 2.0) * (1.0 - 1.0 / p + 1.0 / q)


def degree_threshold(
    w: RadialWeight, p: float, q: float, g_degree: int | None
) -> ThresholdVerdict:
    """Closed-form boundedness / compactness of T_g: F_p -> F_q.

    ``g_degree=None`` stands for a transcendental symbol.  For the exponential
    families the non-polynomial regimes are returned as a sup or integral
    condition in ``expression`` with ``None`` verdicts.

    Raises
    ------
    OutOfCaseRange
        For weights other than power (alpha > 2), exp and doubleexp, or
        nonpositive exponents.
    """
    if not (p > 0 and q > 0):
        raise OutOfCaseRange("p and q must be positive")
    d = g_degree
    const = d == 0
    if w.family == "power":
        a = w.param
        if not a > 2:
            raise OutOfCaseRange(f"power weight needs alpha > 2, got {a}")
        if p <= q:
            T = power_threshold(a, p, q)
            if const:
                return ThresholdVerdict(True, True, False, "power/I", f"deg g <= {T:g}")
            if d is None:
                return ThresholdVerdict(False, False, False, "power/I", "g must be a polynomial")
            if T < 1:
                return ThresholdVerdict(False, False, False, "power/I: constants only", f"threshold {T:g} < 1")
            bounded = d <= T + 1e-12
            compact = d < T - 1e-12
            return ThresholdVerdict(bounded, compact, abs(d - T) <= 1e-12, "power/I", f"deg g <= {T:g}")
        s = p * q / (p - q)
        T = a - 2.0 / s
        if const:
            return ThresholdVerdict(True, True, False, "power/II", f"deg g < {T:g}")
        if d is None:
            return ThresholdVerdict(False, False, False, "power/II", "g must be a polynomial")
        ok = d < T - 1e-12
        return ThresholdVerdict(ok, ok, abs(d - T) <= 1e-12, "power/II", f"deg g < {T:g}, r = {s:g}")
    if w.family == "exp":
        b = w.param
        if p <= q:
            s = 1.0 / p - 1.0 / q
            if const:
                return ThresholdVerdict(True, True, False, "exp/I")
            if s > 1 + 1e-12:
                return ThresholdVerdict(False, False, False, "exp/I: constants only")
            if abs(s - 1) <= 1e-12:
                if d is None:
                    return ThresholdVerdict(False, False, False, "exp/I: deg g <= 1")
                return ThresholdVerdict(d <= 1, False, d == 1, "exp/I: deg g <= 1")
            expr = f"sup |g'(z)| exp({b * (s - 1):g} |z|) < inf"
            if d is None:
                return ThresholdVerdict(None, None, False, "exp/I", expr)
            return ThresholdVerdict(True, True, False, "exp/I", expr)
        s = p * q / (p - q)
        expr = f"int (|g'(z)| exp(-{b:g} |z|))**{s:g} dm < inf"
        if d is None:
            return ThresholdVerdict(None, None, False, "exp/II", expr)
        return ThresholdVerdict(True, True, False, "exp/II", expr)
    if w.family == "doubleexp":
        if p <= q:
            s = 1.0 / p - 1.0 / q
            if const:
                return ThresholdVerdict(True, True, False, "doubleexp/I")
            if s >= 1 - 1e-12:
                return ThresholdVerdict(False, False, False, "doubleexp/I: constants only")
            expr = f"sup |g'(z)| exp(|z| + {s - 1:g} (2|z| + e^|z|)) < inf"
            if d is None:
                return ThresholdVerdict(None, None, False, "doubleexp/I", expr)
            return ThresholdVerdict(True, True, False, "doubleexp/I", expr)
        s = p * q / (p - q)
        expr = f"int (|g'(z)| exp(-|z| - e^|z|))**{s:g} dm < inf"
        if d is None:
            return ThresholdVerdict(None, None, False, "doubleexp/II", expr)
        return ThresholdVerdict(True, True, False, "doubleexp/II", expr)
    raise OutOfCaseRange(f"no closed form for weight {w.spec}")


def schatten_threshold(alpha: float, p: float, g_degree: int) -> bool:
    """T_g in S_p for phi = r**alpha: p > alpha/(alpha-1) and deg g < alpha(1-1/p)."""
    if g_degree == 0:
        return True
    return p > alpha / (alpha - 1) and g_degree < alpha * (1 - 1 / p)


# -- kernels and density ---------------------------------------------------


@dataclass
class KernelNorm:
    log_norm_sq: float
    check_ratio: float
    N_used: int

    @property
    def norm_sq(self) -> float:
        return math.exp(self.log_norm_sq)


def kernel_norm(w: RadialWeight, r: float, N_max: int | None = None) -> KernelNorm:
    """||K_z||**2 = sum_n |z|**(2n) / delta_n**2 and ||K_z||**2 e^{-2 phi} tau**2.

    With ``N_max=None`` the truncation doubles until the last term is below
    1e-12 of the largest term.

    Raises
    ------
    TruncationInsufficient
        If the last kept term is not negligible.
    """
    if r < 0:
        raise ValueError("radius must be nonnegative")

    def terms(N):
        ld = monomial_norms(w, 2.0, N).log_values
        n = np.arange(N + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            lt = 2 * n * math.log(r) - 2 * ld if r > 0 else np.where(n == 0, -2 * ld, -np.inf)
        return lt

    tiny = math.log(1e-12)
    if N_max is None:
        N = 64
        while True:
            lt = terms(N)
            if lt[-1] - np.max(lt) < tiny or N >= 1 << 14:
                break
            N *= 2
    else:
        N = int(N_max)
        lt = terms(N)
    if not lt[-1] - np.max(lt) < tiny:
        raise TruncationInsufficient(
            f"last term is exp({lt[-1] - np.max(lt):.1f}) of the largest at N = {N}"
        )
    log_k = float(logsumexp(lt))
    log_ratio = log_k - 2 * float(w.phi(r)) + 2 * float(w.log_tau_tilde(r))
    return KernelNorm(log_k, math.exp(log_ratio), N)


def fock_log_norm(f: EntireFunction, w: RadialWeight, p: float) -> float:
    """log ||f||_{F_p}, where ||f||**p = 2 pi int_0^inf M_p(r, f)**p r e^{-p phi} dr."""
    if f.is_zero():
        return -math.inf
    res = radial_integral(lambda s: p * log_circle_mean(f, s, p), w, p, tol=1e-10)
    return (math.log(2 * math.pi) + res.log_value) / p


def taylor_tail_norm(f: EntireFunction, w: RadialWeight, p: float, M: int) -> float:
    """||f - P_M f||_{F_p} (zero once M reaches the degree)."""
    if M < 0:
        raise ValueError("M must be nonnegative")
    tail = taylor_tail(f, M)
    return 0.0 if tail.is_zero() else math.exp(fock_log_norm(tail, w, p))
