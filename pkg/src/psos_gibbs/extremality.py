"""Sufficient conditions for extremality of a translation-invariant measure.

Extremality holds when ``k kappa gamma < 1`` (``kappa``: half the largest
L1 distance between kernel rows; ``gamma``: a boundary-influence constant
used only through its upper bound ``|1 - T| / (1 + T)``).  Non-extremality
holds when ``k lambda_max^2 > 1``.  Both tests are one-sided, so a point
may satisfy neither.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from psos_gibbs import backend
from psos_gibbs.errors import DomainError
from psos_gibbs.laws import LawPoint
from psos_gibbs.params import ModelParams, safe_exp
from psos_gibbs.spectral import TransitionKernel, _diff, build_kernel, kesten_stigum

GAMMA_SLACK = 1e-9


class Verdict(str, enum.Enum):
    MSW_EXTREMAL = "MSW_EXTREMAL"
    KS_NONEXTREMAL = "KS_NONEXTREMAL"
    UNDETERMINED = "UNDETERMINED"
    CONFLICT = "CONFLICT"


@dataclass(frozen=True)
class GammaBound:
    value: float  # (1 - T) / (1 + T), signed
    domain_restricted: bool  # theta >= 1: the bound is not established there

    @property
    def magnitude(self) -> float:
        return abs(self.value)


@dataclass(frozen=True)
class ExtremalityReport:
    branch: int
    kappa: float
    gamma_bound: float
    U: float
    eta: float
    lambda_max: float
    verdict: Verdict
    domain_restricted: bool
    msw_enabled: bool


def big_theta(t: float, theta: float) -> float:
    """``(1 - theta^t) / (1 + theta^t)``, written as ``-tanh(t ln(theta) / 2)``."""
    return -math.tanh(0.5 * t * math.log(theta))


def gamma_bound(params: ModelParams) -> GammaBound:
    """Upper bound ``(1 - T) / (1 + T)`` on gamma, ``T = theta^(2^p)``."""
    return GammaBound(-math.tanh(0.5 * params.log_theta_pow), params.theta >= 1.0)


# ---------------------------------------------------------------------------
# kappa


def _row_distance(log_P, i, j) -> float:
    return math.fsum(abs(_diff(log_P[i, l], log_P[j, l])) for l in range(3))


def kappa(point: LawPoint, params: ModelParams, kernel: Optional[TransitionKernel] = None) -> float:
    """``max_{i,j} sum_l |P_il - P_jl| / 2`` over the kernel of ``point``."""
    kernel = build_kernel(point, params) if kernel is None else kernel
    d = max(_row_distance(kernel.log_P, i, j) for i, j in ((0, 1), (0, 2), (1, 2)))
    return 0.5 * d


def kappa_terms(point: LawPoint, params: ModelParams) -> tuple:
    """The three row-pair distances in the common-normalizer form, each over ``2Z``.

    Valid at fixed points only, and only while ``T`` is a finite double.
    """
    T = params.theta_pow
    if not math.isfinite(T):
        raise DomainError(f"theta^(2^p) overflows at theta={params.theta}, p={params.p}")
    th, x, y = params.theta, point.x, point.y
    Z = T * x * x + th * y * y + 1.0
    r01 = (x * x * abs(y - th * x) + y * y * abs(x - th * y) + abs(T * y - th * x)) / (x * y)
    r02 = (x * x * abs(1.0 - T * x) + th * y * y * abs(1.0 - x) + abs(T - x)) / x
    r12 = (x * x * abs(th - T * y) + y * y * abs(1.0 - th * y) + abs(th - y)) / y
    return r01 / (2.0 * Z), r02 / (2.0 * Z), r12 / (2.0 * Z)


def kappa_explicit(point: LawPoint, params: ModelParams) -> float:
    return max(kappa_terms(point, params))


def kappa_x1(log_y: float, params: ModelParams) -> tuple:
    """``kappa(1, y)`` and which term is active: ``"rows01"`` or ``"rows02"``.

    ``kappa(1, y) = max{(|y - th| + y^2 |1 - th y| + |T y - th|) / y, 2 |1 - T|} / (2 Z1)``
    with ``Z1 = T + th y^2 + 1``; evaluated with ``T`` factored out when it is large.
    """
    th, lT = params.theta, params.log_theta_pow
    y = safe_exp(log_y)
    if lT > 0.0:
        u = safe_exp(-lT)  # every term divided by T
        a = (abs(y - th) * u + y * y * abs(1.0 - th * y) * u + abs(y - th * u)) / y
        b = 2.0 * abs(u - 1.0)
        z = 1.0 + (th * y * y + 1.0) * u
    else:
        T = safe_exp(lT)
        a = (abs(y - th) + y * y * abs(1.0 - th * y) + abs(T * y - th)) / y
        b = 2.0 * abs(math.expm1(lT))
        z = T + th * y * y + 1.0
    if a >= b:
        return a / (2.0 * z), "rows01"
    return b / (2.0 * z), "rows02"


def kappa_switch(log_y: float, params: ModelParams) -> float:
    """Difference of the two ``x = 1`` kappa terms; its sign tells which is active."""
    th, lT = params.theta, params.log_theta_pow
    y = safe_exp(log_y)
    if lT > 0.0:
        u = safe_exp(-lT)
        a = (abs(y - th) * u + y * y * abs(1.0 - th * y) * u + abs(y - th * u)) / y
        return a - 2.0 * abs(u - 1.0)
    T = safe_exp(lT)
    a = (abs(y - th) + y * y * abs(1.0 - th * y) + abs(T * y - th)) / y
    return a - 2.0 * abs(math.expm1(lT))


def sign_identities(point: LawPoint, params: ModelParams) -> dict:
    """``y - theta``, ``1 - T x`` and ``x - T``; positive on branches 4-7."""
    T = params.theta_pow
    return {
        "y_minus_theta": point.y - params.theta,
        "one_minus_Tx": 1.0 - T * point.x,
        "x_minus_T": point.x - T,
    }


# ---------------------------------------------------------------------------
# gamma lemma


@dataclass(frozen=True)
class BoundaryCheck:
    name: str
    t: float
    u: float
    value: float
    expected: float

    @property
    def error(self) -> float:
        return abs(self.value - self.expected)


@dataclass(frozen=True)
class GammaLemmaReport:
    max_abs: float
    bound: float
    holds: bool
    maxima: dict  # per function: f, phi, psi, g
    boundary: tuple = field(default_factory=tuple)


def _log_args(point: LawPoint, params: ModelParams):
    return 2.0 * point.log_x, 2.0 * point.log_y, params.log_theta, params.log_theta_pow


def _softmax3(a):
    top = max(a)
    e = [math.exp(v - top) for v in a]
    s = math.fsum(e)
    return [v / s for v in e]


def _lemma_from_logs(la: float, lb: float, lc: float, point: LawPoint, params: ModelParams) -> dict:
    lx2, ly2, lt, lT = _log_args(point, params)
    p0 = _softmax3((lx2 + la, lt + ly2 + lb, lT + lc))
    p1 = _softmax3((lt + lx2 + la, ly2 + lb, lt + lc))
    p2 = _softmax3((lT + lx2 + la, lt + ly2 + lb, lc))
    return {
        "f": p0[0] - p2[0],
        "phi": p0[0] - p1[0],
        "psi": p1[1] - p0[1],
        "g": p2[2] - p0[2],
    }


def lemma_functions(t: float, u: float, point: LawPoint, params: ModelParams) -> dict:
    """``f, phi, psi, g`` at boundary distribution ``(t, 1 - t - u, u)``."""
    mid = max(0.0, 1.0 - t - u)
    la, lb, lc = (math.log(v) if v > 0 else -math.inf for v in (t, mid, u))
    return _lemma_from_logs(la, lb, lc, point, params)


def _split(log_a: float, log_b: float) -> tuple:
    """Logs of ``e^a / (e^a + e^b)`` and ``e^b / (e^a + e^b)``."""
    top = max(log_a, log_b)
    norm = top + math.log1p(math.exp(min(log_a, log_b) - top))
    return log_a - norm, log_b - norm


def boundary_checks(point: LawPoint, params: ModelParams) -> tuple:
    """Closed-form edge maxima of ``f`` and ``phi`` versus direct evaluation.

    The argmax weights are built in log space: at large ``p`` they sit
    closer to 0 or 1 than a double can resolve.
    """
    lx2, ly2, lt, lT = _log_args(point, params)
    th, half = params.theta, 2.0 ** (params.p - 1.0)
    ninf = -math.inf
    out = []
    # f on t + u = 1, at t = 1/(1 + x^2)
    la, lc = _split(0.0, lx2)
    out.append(("f|t+u=1", la, ninf, lc, "f", big_theta(2.0 ** params.p, th)))
    # f on u = 0, at t = y^2 / (theta^(2^(p-1) - 1) x^2 + y^2)
    la, lb = _split(ly2, (half - 1.0) * lt + lx2)
    out.append(("f|u=0", la, lb, ninf, "f", big_theta(half, th)))
    # phi on u = 0, at t = y^2 / (x^2 + y^2)
    la, lb = _split(ly2, lx2)
    out.append(("phi|u=0", la, lb, ninf, "phi", big_theta(1.0, th)))
    # phi on t + u = 1, at t = theta^(2^(p-1)) / (theta^(2^(p-1)) + x^2)
    la, lc = _split(half * lt, lx2)
    out.append(("phi|t+u=1", la, ninf, lc, "phi", big_theta(half, th)))
    return tuple(
        BoundaryCheck(name, math.exp(la), math.exp(lc),
                      _lemma_from_logs(la, lb, lc, point, params)[fn], expected)
        for name, la, lb, lc, fn, expected in out
    )


def verify_gamma_lemma(params: ModelParams, point: LawPoint, grid_n: int = 200) -> GammaLemmaReport:
    """Brute-force ``max |f|, |phi|, |psi|, |g|`` over the simplex against the bound.

    The grid is the ``grid_n x grid_n`` triangle plus the three edges at
    ``grid_n**2`` points each.
    """
    if not params.theta < 1.0:
        raise DomainError(f"the gamma bound needs theta < 1, got {params.theta}")
    if grid_n < 2:
        raise DomainError(f"grid_n must be >= 2, got {grid_n}")
    maxima = backend.gamma_grid_max(*_log_args(point, params), int(grid_n))
    bound = gamma_bound(params).value
    top = max(maxima)
    return GammaLemmaReport(
        top, bound, top <= bound + GAMMA_SLACK,
        dict(zip(("f", "phi", "psi", "g"), maxima)),
        boundary_checks(point, params),
    )


def theta_monotone_check(p: float, theta: float, n: int = 2001) -> bool:
    """Whether ``Theta(t) = (1 - theta^t)/(1 + theta^t)`` is nondecreasing on ``(-1, 2^p]``."""
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must be in (0, 1), got {theta}")
    ts = np.linspace(-1.0, 2.0 ** p, n)[1:]
    vals = -np.tanh(0.5 * ts * math.log(theta))
    return bool(np.all(np.diff(vals) >= 0.0))


# ---------------------------------------------------------------------------
# verdict


def indicator_u(kap: float, params: ModelParams) -> float:
    """``U = k |gamma_bound| kappa - 1``; negative means extremal where the bound applies."""
    return params.k * gamma_bound(params).magnitude * kap - 1.0


def msw_report(
    point: LawPoint,
    params: ModelParams,
    kernel: Optional[TransitionKernel] = None,
    extend_bound: bool = False,
) -> ExtremalityReport:
    """Kesten-Stigum and MSW indicators for the measure on ``point``.

    For ``theta >= 1`` the gamma bound is not established, so the MSW
    side is disabled unless ``extend_bound`` is set; the verdict is then
    decided by Kesten-Stigum alone.
    """
    kernel = build_kernel(point, params) if kernel is None else kernel
    kap = kappa(point, params, kernel)
    gb = gamma_bound(params)
    U = indicator_u(kap, params)
    eta = kesten_stigum(kernel, params.k).eta
    msw_enabled = extend_bound or not gb.domain_restricted
    msw = msw_enabled and U < 0.0
    ks = eta > 0.0
    if msw and ks:
        verdict = Verdict.CONFLICT
    elif msw:
        verdict = Verdict.MSW_EXTREMAL
    elif ks:
        verdict = Verdict.KS_NONEXTREMAL
    else:
        verdict = Verdict.UNDETERMINED
    return ExtremalityReport(
        point.branch, kap, gb.value, U, eta, kernel.lambda_max, verdict,
        gb.domain_restricted, msw_enabled,
    )
