"""Boundary-law recursion for arbitrary state count ``m`` and tree order ``k``.

Works in log space: ``h_i = ln z_i`` with the last state normalized to
``h_m = 0``.  The translation-invariant laws are the fixed points of
``h -> k F(h)``; they are found by multi-start damped iteration followed
by Newton polishing, which also reaches repelling fixed points that the
plain iteration can never settle on.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from psos_gibbs import backend
from psos_gibbs.errors import DomainError, NonConvergence
from psos_gibbs.params import ModelParams, residual_tol

LATTICE_LEVELS = (-10.0, -5.0, 0.0, 5.0, 10.0)
DEDUP_TOL = 1e-6
DAMPED_TOL = 1e-6
_MAX_LATTICE = 4096


@dataclass(frozen=True)
class LawVector:
    """One translation-invariant law ``z = exp(h)`` (``m`` free components)."""

    h: tuple
    residual: float
    converged: bool
    spectral_radius: float

    @property
    def z(self) -> tuple:
        return tuple(math.exp(v) for v in self.h)


@dataclass(frozen=True)
class SearchResult:
    laws: tuple
    failures: tuple  # NonConvergence records, one per start that failed
    starts: int


def coupling_logs(params: ModelParams) -> np.ndarray:
    """``W[i, j] = |i - j|**p * ln(theta)`` over states ``0..m``."""
    idx = np.arange(params.m + 1, dtype=float)
    dist = np.abs(idx[:, None] - idx[None, :])
    return np.where(dist > 0, dist ** params.p, 0.0) * params.log_theta


def f_map(h, params: ModelParams) -> list:
    """``F_i(h) = ln(sum_j theta^|i-j|^p e^{h_j}) - ln(sum_j theta^|m-j|^p e^{h_j})``."""
    h = np.asarray(h, dtype=float)
    if h.shape != (params.m,):
        raise DomainError(f"h must have length m={params.m}, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise DomainError("h must be finite")
    A = coupling_logs(params) + np.append(h, 0.0)[None, :]
    top = A.max(axis=1, keepdims=True)
    lse = top[:, 0] + np.log(np.exp(A - top).sum(axis=1))
    return list(lse[:-1] - lse[-1])


def _softmax_rows(h, W):
    A = W + np.append(h, 0.0)[None, :]
    E = np.exp(A - A.max(axis=1, keepdims=True))
    return E / E.sum(axis=1, keepdims=True)


def jacobian(h, params: ModelParams) -> np.ndarray:
    """Jacobian of ``h -> k F(h)``."""
    S = _softmax_rows(np.asarray(h, dtype=float), coupling_logs(params))
    m = params.m
    return params.k * (S[:m, :m] - S[m:, :m])


def law_residual(h, params: ModelParams) -> float:
    """Relative defect ``max_i |z_i / RHS_i(z) - 1|`` of the fixed-point system."""
    F = np.asarray(f_map(h, params))
    return float(np.max(np.abs(np.expm1(params.k * F - np.asarray(h)))))


def start_points(m: int, starts: int, seed: int = 0) -> np.ndarray:
    """Lattice ``{-10, -5, 0, 5, 10}^m`` plus seeded uniform draws, ``>= starts`` rows."""
    rng = np.random.default_rng(seed)
    if len(LATTICE_LEVELS) ** m <= _MAX_LATTICE:
        lattice = np.array(list(itertools.product(LATTICE_LEVELS, repeat=m)), dtype=float)
    else:
        lattice = rng.choice(LATTICE_LEVELS, size=(_MAX_LATTICE, m))
    extra = max(starts - len(lattice), starts // 2)
    draws = rng.uniform(LATTICE_LEVELS[0], LATTICE_LEVELS[-1], size=(extra, m))
    return np.vstack([lattice, draws])


def _dedup(H: np.ndarray, tol: float) -> list:
    order = np.lexsort(H.T[::-1])
    kept = []
    for row in H[order]:
        if not any(np.max(np.abs(row - other)) <= tol for other in kept):
            kept.append(row)
    return kept


def search(
    params: ModelParams,
    starts: int = 64,
    damping: float = 0.5,
    max_iter: int = 2000,
    newton_iter: int = 200,
    tol: float | None = None,
    seed: int = 0,
) -> SearchResult:
    """Multi-start fixed-point search with per-start failure records.

    Every start runs twice: damped iteration then Newton, and Newton
    alone.  The second pass is what finds the repelling laws.
    """
    if starts < 1:
        raise DomainError(f"starts must be >= 1, got {starts}")
    if not 0.0 < damping <= 1.0:
        raise DomainError(f"damping must be in (0, 1], got {damping}")
    tol = residual_tol() if tol is None else tol
    W = coupling_logs(params)
    H0 = start_points(params.m, starts, seed)
    # the damped phase only has to land in a Newton basin; Newton then
    # runs until it stops improving
    k = float(params.k)
    Ha, na = backend.multistart(H0, W, k, damping, max_iter, newton_iter, DAMPED_TOL)
    Hb, nb = backend.multistart(H0, W, k, damping, 0, newton_iter, DAMPED_TOL)
    H = np.vstack([Ha, Hb])
    norms = np.concatenate([na, nb])

    failures = []
    good = []
    for row, nrm in zip(H, norms):
        res = law_residual(row, params) if np.isfinite(nrm) and np.all(np.isfinite(row)) else math.inf
        if res < tol:
            good.append(row)
        else:
            failures.append(NonConvergence(f"start ended at h={row.tolist()} with defect {res:.3g}"))
    laws = []
    if good:
        for row in _dedup(np.array(good), DEDUP_TOL):
            rho = float(np.max(np.abs(np.linalg.eigvals(jacobian(row, params)))))
            laws.append(LawVector(tuple(float(v) for v in row), law_residual(row, params), True, rho))
    return SearchResult(tuple(laws), tuple(failures), len(H0))


def ti_fixed_points(params: ModelParams, starts: int = 64, damping: float = 0.5, **kwargs) -> list:
    """Distinct translation-invariant laws found from ``starts`` initial points."""
    return list(search(params, starts, damping, **kwargs).laws)
