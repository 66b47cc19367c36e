"""Critical couplings located by bisection in ``theta`` at fixed ``p``.

Each sign-change quantity (discriminants, KS and MSW indicators, region
curves, the eigenvalue and kappa crossovers) is wrapped as a function of
``theta`` and bisected.  Bisection is used throughout because several of
these functions have kinks (absolute values, piecewise maxima).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from psos_gibbs.errors import (
    BranchAbsent,
    BranchVanished,
    DomainError,
    NoSignChange,
    NotDefined,
    PsosError,
)
from psos_gibbs.extremality import kappa, kappa_switch, msw_report
from psos_gibbs.laws import (
    M_curve,
    cubic_discriminant,
    find_branch,
    l_curve,
    m_curve,
    q_curve,
    xi_analysis,
)
from psos_gibbs.params import ModelParams
from psos_gibbs.spectral import build_kernel, kesten_stigum


class Quantity(str, enum.Enum):
    DELTA = "DELTA"  # cubic discriminant
    BIG_D = "BIG_D"  # xi discriminant (factored form)
    ETA = "ETA"  # k lambda_max^2 - 1
    U = "U"  # k |gamma bound| kappa - 1
    MSW = "MSW"  # U where the gamma bound is established (theta < 1), +1 elsewhere
    Q_CURVE = "Q_CURVE"
    L_CURVE = "L_CURVE"
    LAMBDA_CROSS = "LAMBDA_CROSS"  # |lambda1| - |lambda2|
    KAPPA_CROSS = "KAPPA_CROSS"  # difference of the two x = 1 kappa terms


_NEEDS_BRANCH = {Quantity.ETA, Quantity.U, Quantity.MSW, Quantity.LAMBDA_CROSS, Quantity.KAPPA_CROSS}


@dataclass(frozen=True)
class ThresholdQuery:
    p: float
    quantity: Quantity
    bracket: tuple
    branch: int = 1
    tol: float = 1e-10
    coordinate: str = "theta"  # or "inverse": bisect in s = 1/theta

    def __post_init__(self):
        object.__setattr__(self, "quantity", Quantity(self.quantity))
        lo, hi = (float(v) for v in self.bracket)
        object.__setattr__(self, "bracket", (lo, hi))
        if not lo < hi:
            raise DomainError(f"bracket must satisfy lo < hi, got {self.bracket}")
        if self.coordinate not in ("theta", "inverse"):
            raise DomainError(f"coordinate must be 'theta' or 'inverse', got {self.coordinate!r}")
        if not lo > 0:
            raise DomainError(f"bracket must be positive, got {self.bracket}")
        curve = self.quantity in (Quantity.Q_CURVE, Quantity.L_CURVE)
        if not (self.p >= 0 if curve else self.p > 0):
            raise DomainError(f"p out of range for {self.quantity.value}: {self.p}")
        if self.branch not in range(1, 8):
            raise DomainError(f"branch must be in 1..7, got {self.branch}")
        if self.quantity in (Quantity.KAPPA_CROSS, Quantity.LAMBDA_CROSS) and self.branch > 3:
            raise DomainError(f"{self.quantity.value} is defined for branches 1-3 only")
        if not self.tol >= 0:
            raise DomainError(f"tol must be nonnegative, got {self.tol}")


def quantity_function(quantity: Quantity, p: float, branch: int = 1) -> Callable[[float], float]:
    """``theta -> value``; raises :class:`BranchAbsent` where the branch is missing."""
    quantity = Quantity(quantity)
    if quantity is Quantity.Q_CURVE:
        return lambda th: q_curve(th, p)
    if quantity is Quantity.L_CURVE:
        return lambda th: l_curve(th, p)
    if quantity is Quantity.DELTA:
        return lambda th: cubic_discriminant(ModelParams(th, p))
    if quantity is Quantity.BIG_D:
        return lambda th: xi_analysis(ModelParams(th, p)).d_factored

    def branch_value(th):
        P = ModelParams(th, p)
        pt = find_branch(P, branch)
        if quantity is Quantity.KAPPA_CROSS:
            return kappa_switch(pt.log_y, P)
        K = build_kernel(pt, P)
        if quantity is Quantity.ETA:
            return kesten_stigum(K, P.k).eta
        if quantity is Quantity.LAMBDA_CROSS:
            return abs(K.lambda1) - abs(K.lambda2)
        rep = msw_report(pt, P, K, extend_bound=quantity is Quantity.U)
        if quantity is Quantity.MSW and not rep.msw_enabled:
            return 1.0
        return rep.U

    return branch_value


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    @property
    def root(self) -> float:
        return 0.5 * (self.lo + self.hi)


def bisect(func: Callable[[float], float], lo: float, hi: float, tol: float) -> Bracket:
    """Shrink ``[lo, hi]`` around a sign change of ``func`` until narrower than ``tol``.

    ``tol = 0`` runs until the midpoint is no longer representable
    between the endpoints.  Raises :class:`NoSignChange` and
    :class:`BranchVanished`.
    """
    try:
        f_lo, f_hi = func(lo), func(hi)
    except BranchAbsent as exc:
        raise BranchVanished(f"branch missing at a bracket end: {exc}", None) from exc
    s_lo, s_hi = _sign(f_lo), _sign(f_hi)
    if s_lo == 0:
        return Bracket(lo, lo, f_lo, f_lo)
    if s_hi == 0:
        return Bracket(hi, hi, f_hi, f_hi)
    if s_lo == s_hi:
        raise NoSignChange(f"f({lo!r}) = {f_lo:.6g} and f({hi!r}) = {f_hi:.6g} share a sign")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        try:
            f_mid = func(mid)
        except BranchAbsent as exc:
            raise BranchVanished(
                f"branch missing at {mid!r} inside [{lo!r}, {hi!r}]", (lo, hi)
            ) from exc
        s = _sign(f_mid)
        if s == 0:
            return Bracket(mid, mid, f_mid, f_mid)
        if s == s_lo:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return Bracket(lo, hi, f_lo, f_hi)


def find_threshold(q: ThresholdQuery) -> float:
    """``theta`` at which the queried quantity changes sign (pure bisection)."""
    f = quantity_function(q.quantity, q.p, q.branch)
    lo, hi = q.bracket
    if q.coordinate == "inverse":
        br = bisect(lambda s: f(1.0 / s), lo, hi, q.tol)
        return 1.0 / br.root
    return bisect(f, lo, hi, q.tol).root


def sign_changes(func, lo: float, hi: float, n: int = 400, tol: float = 1e-10) -> list:
    """All sign changes of ``func`` seen on an ``n``-point grid, each bisected.

    Grid points where ``func`` is undefined are skipped.
    """
    grid = np.linspace(lo, hi, n)
    prev = None
    out = []
    for th in grid:
        try:
            v = func(float(th))
        except PsosError:
            prev = None
            continue
        if prev is not None and _sign(prev[1]) * _sign(v) < 0:
            try:
                out.append(bisect(func, prev[0], float(th), tol).root)
            except (BranchVanished, NoSignChange):
                pass
        prev = (float(th), v)
    return out


# ---------------------------------------------------------------------------
# named suite


@dataclass(frozen=True)
class SuiteEntry:
    name: str
    quantity: Quantity
    branch: int
    bracket: Optional[tuple]
    coordinate: str
    reference: Optional[float]
    value: Optional[float] = None
    error: Optional[str] = None
    note: str = ""

    @property
    def defined(self) -> bool:
        return self.value is not None

    @property
    def rel_error(self) -> Optional[float]:
        if self.value is None or not self.reference:
            return None
        return abs(self.value - self.reference) / abs(self.reference)


# name, quantity, branch, bracket, coordinate, reference value, note
_SUITE = {
    0.1: (
        ("theta_1", Quantity.LAMBDA_CROSS, 1, (0.25, 0.45), "theta", 0.32,
         "|lambda1| = |lambda2| on branch 1"),
        ("theta_hat_1", Quantity.KAPPA_CROSS, 1, (0.25, 0.45), "theta", 0.335,
         "active kappa term switches on branch 1"),
        ("theta_2", Quantity.DELTA, 1, (0.1, 0.3), "theta", 0.206,
         "branches 2, 3 exist below"),
        ("theta_hat_2", Quantity.ETA, 3, (0.1, 0.2), "theta", 0.175,
         "KS onset, smallest cubic root"),
        ("theta_hat_3", Quantity.ETA, 2, (0.1, 0.2), "theta", 0.139,
         "KS onset, middle cubic root"),
        ("theta_bar_2", Quantity.U, 3, (0.1, 0.2), "theta", 0.1817,
         "MSW onset, smallest cubic root"),
        ("theta_bar_3", Quantity.U, 2, (0.1, 0.2), "theta", 0.1625,
         "MSW onset, middle cubic root"),
        ("theta_star_1", Quantity.U, 1, (10.0, 30.0), "theta", 19.08,
         "MSW onset on branch 1 (gamma bound taken in modulus above theta = 1)"),
        ("theta_tilde_1", Quantity.ETA, 1, (1e-4, 1e-3), "inverse", 1523.4,
         "KS onset on branch 1, bisected in 1/theta"),
    ),
    10.0: (
        ("theta_2_prime", Quantity.DELTA, 1, (0.1, 0.2), "theta", 0.136,
         "branches 2, 3 exist below"),
        ("theta_msw_1", Quantity.MSW, 1, (0.5, 1.5), "theta", 1.0,
         "upper edge of the MSW-certified region of branch 1"),
        ("theta_ks_1", Quantity.ETA, 1, (1.0005, 1.01), "theta", 1.0,
         "KS onset on branch 1"),
        ("theta_u_1", Quantity.U, 1, (1.0005, 1.01), "theta", None,
         "U crossing on branch 1 with the gamma bound taken in modulus"),
    ),
}

# entries that cannot exist at the given exponent, with the reason
_UNDEFINED = {
    10.0: (
        ("theta_hat_2", Quantity.ETA, 3, "eta > 0 wherever the branch exists"),
        ("theta_hat_3", Quantity.ETA, 2, "eta > 0 wherever the branch exists"),
        ("theta_bar_2", Quantity.U, 3, "U > 0 wherever the branch exists"),
        ("theta_bar_3", Quantity.U, 2, "U > 0 wherever the branch exists"),
    ),
}


def _constant_sign(p: float, quantity: Quantity, branch: int, hi: float, n: int = 200) -> bool:
    f = quantity_function(quantity, p, branch)
    signs = set()
    for th in np.geomspace(1e-3, hi, n):
        try:
            signs.add(_sign(f(float(th))))
        except BranchAbsent:
            continue
    return len(signs) == 1


def paper_threshold_suite(p: float, tol: float = 1e-10) -> list:
    """Named critical couplings at ``p = 0.1`` or ``p = 10``; generic scan otherwise."""
    key = next((k for k in _SUITE if math.isclose(p, k)), None)
    if key is None:
        return _generic_suite(p, tol)
    out = []
    for name, qty, br, bracket, coord, ref, note in _SUITE[key]:
        q = ThresholdQuery(key, qty, bracket, br, tol, coord)
        try:
            out.append(SuiteEntry(name, qty, br, bracket, coord, ref, find_threshold(q), note=note))
        except PsosError as exc:
            out.append(SuiteEntry(name, qty, br, bracket, coord, ref, None, f"{type(exc).__name__}: {exc}", note))
    existence = next((e.value for e in out if e.quantity is Quantity.DELTA), None)
    for name, qty, br, reason in _UNDEFINED.get(key, ()):
        if existence is not None and _constant_sign(key, qty, br, existence):
            err = NotDefined(reason)
        else:
            err = NotDefined(f"expected no sign change ({reason}) but one was seen")
        out.append(SuiteEntry(name, qty, br, None, "theta", None, None, f"NotDefined: {err}"))
    return out


def _generic_suite(p: float, tol: float) -> list:
    out = []
    f = quantity_function(Quantity.DELTA, p)
    for i, th in enumerate(sign_changes(f, 1e-3, 1.0, 400, tol)):
        out.append(SuiteEntry(f"delta_zero_{i}", Quantity.DELTA, 1, None, "theta", None, th))
    for br in (1, 2, 3):
        for qty in (Quantity.ETA, Quantity.U):
            g = quantity_function(qty, p, br)
            for i, th in enumerate(sign_changes(g, 1e-3, 1.0, 400, tol)):
                out.append(SuiteEntry(f"{qty.value.lower()}_{br}_{i}", qty, br, None, "theta", None, th))
    return out


# ---------------------------------------------------------------------------
# curves


class Curve(str, enum.Enum):
    M_SMALL = "M_SMALL"  # m(theta): q(theta, p) = 0
    M_BIG = "M_BIG"  # M(theta): l(theta, p) = 0
    DELTA0 = "DELTA0"  # p with Delta(theta, p) = 0
    D0 = "D0"  # p with D(theta, p) = 0


_P_GRID = np.geomspace(1e-3, 40.0, 600)


def _p_root(func, tol=1e-12) -> Optional[float]:
    """Smallest ``p`` on the search grid where ``func`` changes sign, bisected."""
    prev = None
    for p in _P_GRID:
        try:
            v = func(float(p))
        except PsosError:
            prev = None
            continue
        if v == 0.0:
            return float(p)
        if prev is not None and _sign(prev[1]) != _sign(v):
            return bisect(func, prev[0], float(p), tol).root
        prev = (float(p), v)
    return None


def curve_point(name: Curve, theta: float) -> Optional[float]:
    name = Curve(name)
    if name is Curve.M_SMALL:
        return m_curve(theta)
    if name is Curve.M_BIG:
        return M_curve(theta)
    if name is Curve.DELTA0:
        return _p_root(lambda p: cubic_discriminant(ModelParams(theta, p)))
    if not theta < 1.0:
        return None
    return _p_root(lambda p: xi_analysis(ModelParams(theta, p)).d_factored)


def trace_curve(name: Curve, theta_range: tuple, n: int) -> list:
    """``n`` samples ``(theta, p)`` along a region curve; ``p`` is None off its domain."""
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    lo, hi = theta_range
    if not 0 < lo < hi:
        raise DomainError(f"need 0 < lo < hi, got {theta_range}")
    return [(float(th), curve_point(name, float(th))) for th in np.linspace(lo, hi, n)]
