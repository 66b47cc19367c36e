"""Transition kernel of a translation-invariant measure and its spectrum.

For a law ``(x, y)`` the tree-indexed chain on ``{0, 1, 2}`` has

    P_ij = theta^{|i-j|^p} z_j / sum_l theta^{|i-l|^p} z_l,   z = (x^2, y^2, 1).

Rows are evaluated as softmaxes of log weights, so ``theta^(2^p)`` may
leave the double range without harm.  Since 1 is always an eigenvalue,
the other two come from the 2x2 matrix ``M_ij = P_ij - P_2j``
(``i, j < 2``), which is the characteristic cubic divided by ``(lambda - 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from psos_gibbs.errors import StochasticityViolation
from psos_gibbs.laws import LawPoint
from psos_gibbs.params import ModelParams, logsumexp, safe_exp

STOCHASTIC_TOL = 1e-9


@dataclass(frozen=True)
class TransitionKernel:
    P: np.ndarray
    log_P: np.ndarray
    log_Z: tuple  # per-row log normalizers
    lambda1: float
    lambda2: float
    lambda_max: float
    complex_pair: bool = False
    m1_deviation: float = 0.0  # max row-sum defect of the common-normalizer form

    @property
    def Z(self) -> tuple:
        return tuple(safe_exp(v) for v in self.log_Z)

    @property
    def spectrum(self) -> tuple:
        return (1.0, self.lambda1, self.lambda2)


@dataclass(frozen=True)
class KSReport:
    eta: float
    ks_nonextremal: bool


def log_weights(params: ModelParams) -> np.ndarray:
    lt, lT = params.log_theta, params.log_theta_pow
    return np.array([[0.0, lt, lT], [lt, 0.0, lt], [lT, lt, 0.0]])


def _log_rows(log_x: float, log_y: float, params: ModelParams):
    A = log_weights(params) + np.array([2.0 * log_x, 2.0 * log_y, 0.0])[None, :]
    log_Z = np.array([logsumexp(row) for row in A])
    return A - log_Z[:, None], log_Z


def _m1_deviation(log_x, log_y, log_Z) -> float:
    # with the common normalizer Z = T x^2 + theta y^2 + 1, rows 0 and 1
    # normalize to x Z and y Z exactly when (x, y) is a fixed point
    lZ = log_Z[2]
    return max(
        abs(math.expm1(log_Z[0] - log_x - lZ)),
        abs(math.expm1(log_Z[1] - log_y - lZ)),
    )


def _diff(log_a: float, log_b: float) -> float:
    """``e^a - e^b`` keeping the relative accuracy of the logs."""
    if log_a == -math.inf and log_b == -math.inf:
        return 0.0
    if log_a >= log_b:
        return -math.exp(log_a) * math.expm1(log_b - log_a)
    return math.exp(log_b) * math.expm1(log_a - log_b)


def _quadratic_pair(tr: float, det: float):
    """Roots of ``l^2 - tr l + det``; flagged when they are a conjugate pair."""
    disc = tr * tr - 4.0 * det
    if disc < 0.0:
        return tr / 2.0, tr / 2.0, math.sqrt(det), True
    s = math.sqrt(disc)
    big = (tr + math.copysign(s, tr)) / 2.0
    small = det / big if big != 0.0 else 0.0
    return big, small, max(abs(big), abs(small)), False


def _eigen_from_logs(log_P: np.ndarray, symmetric: bool):
    if symmetric:
        # x = 1: the chain is invariant under 0 <-> 2, so the deflated
        # quadratic factors into the antisymmetric mode (1, 0, -1) with
        # root P00 - P02 and the symmetric one with root P11 - P01.  Using
        # the factors keeps full precision where the two roots meet.
        lam1 = _diff(log_P[1, 1], log_P[0, 1])
        lam2 = _diff(log_P[0, 0], log_P[0, 2])
        return lam1, lam2, max(abs(lam1), abs(lam2)), False
    M = [[_diff(log_P[i, j], log_P[2, j]) for j in range(2)] for i in range(2)]
    tr = M[0][0] + M[1][1]
    det = M[0][0] * M[1][1] - M[0][1] * M[1][0]
    a, b, lmax, cplx = _quadratic_pair(tr, det)
    if not cplx and b > a:
        a, b = b, a
    return a, b, lmax, cplx


def deflated_quadratic(kernel: "TransitionKernel") -> tuple:
    """Trace and determinant of ``M_ij = P_ij - P_2j``: the non-unit eigenvalues
    are the roots of ``l^2 - trace l + det``."""
    lp = kernel.log_P
    M = [[_diff(lp[i, j], lp[2, j]) for j in range(2)] for i in range(2)]
    return M[0][0] + M[1][1], M[0][0] * M[1][1] - M[0][1] * M[1][0]


def eigenvalues(kernel: TransitionKernel) -> tuple:
    """The two non-unit eigenvalues ``(lambda1, lambda2)``.

    For a conjugate pair both entries hold the common real part and
    ``kernel.lambda_max`` holds the modulus.
    """
    return kernel.lambda1, kernel.lambda2


def build_kernel(point: LawPoint, params: ModelParams) -> TransitionKernel:
    """Kernel of the measure built on ``point``.

    Raises :class:`StochasticityViolation` when ``point`` is not a
    fixed point (the common-normalizer rows then fail to sum to one).
    """
    params.require_binary()
    log_P, log_Z = _log_rows(point.log_x, point.log_y, params)
    dev = _m1_deviation(point.log_x, point.log_y, log_Z)
    if not dev <= STOCHASTIC_TOL:
        raise StochasticityViolation(
            f"row sums of the common-normalizer kernel deviate by {dev:.3g} "
            f"(limit {STOCHASTIC_TOL:g}); ({point.x}, {point.y}) is not a fixed point"
        )
    lam1, lam2, lmax, cplx = _eigen_from_logs(log_P, point.log_x == 0.0)
    return TransitionKernel(
        np.exp(log_P), log_P, tuple(float(v) for v in log_Z),
        lam1, lam2, lmax, cplx, dev,
    )


def closed_form_eigenvalues(log_y: float, params: ModelParams) -> tuple:
    """``(lambda1, lambda2)`` for the law ``(1, y)`` from the explicit formulas.

    ``lambda1 = (T - 2 theta^2 + 1) y^2 / (theta y^4 + (T + 2 theta^2 + 1) y^2 + 2 theta (T + 1))``
    ``lambda2 = (1 - T) / (T + theta y^2 + 1)``
    """
    theta = params.theta
    lT = params.log_theta_pow
    y2 = safe_exp(2.0 * log_y)
    t2 = theta * theta
    if lT > 0.0:
        # divide through by T
        u = safe_exp(-lT)
        num1 = (1.0 + (1.0 - 2.0 * t2) * u) * y2
        den1 = theta * y2 * y2 * u + (1.0 + (2.0 * t2 + 1.0) * u) * y2 + 2.0 * theta * (1.0 + u)
        lam2 = math.expm1(-lT) / (1.0 + (theta * y2 + 1.0) * u)
    else:
        T = safe_exp(lT)
        num1 = (T - 2.0 * t2 + 1.0) * y2
        den1 = theta * y2 * y2 + (T + 2.0 * t2 + 1.0) * y2 + 2.0 * theta * (T + 1.0)
        lam2 = -math.expm1(lT) / (T + theta * y2 + 1.0)
    return num1 / den1, lam2


def kesten_stigum(kernel: TransitionKernel, k: int = 2) -> KSReport:
    """``eta = k lambda_max^2 - 1``; positive means the measure is not extreme."""
    eta = k * kernel.lambda_max ** 2 - 1.0
    return KSReport(eta, eta > 0.0)
