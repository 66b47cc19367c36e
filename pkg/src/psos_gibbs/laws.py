"""Closed-form translation-invariant boundary laws for k = m = 2.

A law is a pair ``(x, y) = (sqrt(z0), sqrt(z1))`` solving

    x = (x^2 + theta y^2 + T) / (T x^2 + theta y^2 + 1)
    y = (theta x^2 + y^2 + theta) / (T x^2 + theta y^2 + 1)

with ``T = theta ** (2 ** p)``.  Solutions split into the ``x = 1``
family (roots of a cubic in ``y``, branches 1-3) and the ``x != 1``
family (branches 4-7), which exists only for ``theta < 1`` and is
parameterized through ``xi = x + 1/x``.

Values of ``y`` below the double range (``theta > 1`` with large ``p``)
are carried exactly in ``log_y``; ``y`` itself then reads ``0.0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

from psos_gibbs.errors import (
    BranchAbsent,
    ConditionViolation,
    DomainError,
    PsosError,
    ToleranceAmbiguity,
)
from psos_gibbs.params import (
    AMBIGUITY_BAND,
    ModelParams,
    log1pexp,
    logsumexp,
    power,
    residual_tol,
    safe_exp,
)

# above this log(T) the x = 1 cubic is solved in the rescaled variable
# v = (T + 1) y, whose single root sits near 2 theta
_SCALED_LOG_T = 40.0

SQRT5_QUARTER = (math.sqrt(5.0) - 1.0) / 4.0
Q_ROOT_P0 = (2.0 * math.sqrt(2.0) - 1.0) / 7.0


class Region(str, enum.Enum):
    UNIQUE = "UNIQUE"
    BOUNDARY_mM = "BOUNDARY_mM"
    Q_MINUS_CAP_P = "Q_MINUS_CAP_P"
    Q_ZERO = "Q_ZERO"
    Q_PLUS = "Q_PLUS"


REGION_COUNT = {
    Region.UNIQUE: 1,
    Region.BOUNDARY_mM: 3,
    Region.Q_MINUS_CAP_P: 5,
    Region.Q_ZERO: 6,
    Region.Q_PLUS: 7,
}

REGION_BRANCHES = {
    Region.UNIQUE: (1,),
    Region.BOUNDARY_mM: (1, 4, 6),
    Region.Q_MINUS_CAP_P: (1, 4, 5, 6, 7),
    Region.Q_ZERO: (1, 3, 4, 5, 6, 7),
    Region.Q_PLUS: (1, 2, 3, 4, 5, 6, 7),
}


def fixed_point_residual(log_x: float, log_y: float, params: ModelParams) -> float:
    """Largest relative defect ``|1 - rhs/v|`` of the two fixed-point equations.

    Evaluated in log space so that it stays meaningful when ``T`` or
    ``y`` leave the double range.
    """
    lt = params.log_theta
    lT = params.log_theta_pow
    den = logsumexp((lT + 2 * log_x, lt + 2 * log_y, 0.0))
    rx = logsumexp((2 * log_x, lt + 2 * log_y, lT)) - den
    ry = logsumexp((lt + 2 * log_x, 2 * log_y, lt)) - den
    return max(abs(math.expm1(rx - log_x)), abs(math.expm1(ry - log_y)))


@dataclass(frozen=True)
class LawPoint:
    """One solution ``(x, y)`` of the k = m = 2 system with its branch index."""

    x: float
    y: float
    branch: int
    residual: float
    log_x: float = None
    log_y: float = None

    def __post_init__(self):
        if self.log_x is None:
            object.__setattr__(self, "log_x", math.log(self.x))
        if self.log_y is None:
            object.__setattr__(self, "log_y", math.log(self.y))

    @classmethod
    def from_logs(cls, log_x: float, log_y: float, branch: int, params: ModelParams):
        res = fixed_point_residual(log_x, log_y, params)
        return cls(safe_exp(log_x), safe_exp(log_y), branch, res, log_x, log_y)

    @property
    def h(self) -> tuple:
        """Log-space coordinates ``(ln z0, ln z1) = (2 ln x, 2 ln y)``."""
        return (2.0 * self.log_x, 2.0 * self.log_y)


# ---------------------------------------------------------------------------
# x = 1: the cubic  theta y^3 - y^2 + (T + 1) y - 2 theta = 0


@dataclass(frozen=True)
class CubicAnalysis:
    delta: float
    roots: tuple
    log_roots: tuple
    multiplicities: tuple
    boundary: bool = False
    band: float = 0.0


def _discriminant_parts(params: ModelParams):
    theta = params.theta
    T = params.theta_pow
    if math.isinf(T):
        return -math.inf, math.inf
    tT = theta * T
    u = 1.0 - 3.0 * theta - 3.0 * tT
    v = 2.0 - 9.0 * theta + 54.0 * theta**3 - 9.0 * tT
    den = 27.0 * theta * theta
    u3 = u * u * u
    return (4.0 * u3 - v * v) / den, (4.0 * abs(u3) + v * v) / den


def cubic_discriminant(params: ModelParams) -> float:
    """Discriminant of the ``x = 1`` cubic; its sign gives the root count."""
    params.require_binary()
    return _discriminant_parts(params)[0]


def _polish_cubic(y, a, b, c, d, steps=6):
    def f(v):
        return ((a * v + b) * v + c) * v + d

    fy = f(y)
    for _ in range(steps):
        if fy == 0.0:
            break
        fp = (3.0 * a * y + 2.0 * b) * y + c
        if fp == 0.0:
            break
        cand = y - fy / fp
        fc = f(cand)
        if not (cand > 0.0) or abs(fc) >= abs(fy):
            break
        y, fy = cand, fc
    return y


def _dominant_root_log(params: ModelParams) -> float:
    # theta y^3 - y^2 + (T+1) y - 2 theta = 0 with y = eps v, eps = 1/(T+1)
    theta = params.theta
    log_scale = log1pexp(params.log_theta_pow)
    eps = math.exp(-log_scale)
    v = 2.0 * theta
    for _ in range(8):
        g = ((theta * eps**3 * v - eps * eps) * v + 1.0) * v - 2.0 * theta
        gp = (3.0 * theta * eps**3 * v - 2.0 * eps * eps) * v + 1.0
        step = g / gp
        v -= step
        if abs(step) <= 1e-17 * v:
            break
    return math.log(v) - log_scale


def solve_cubic_x1(params: ModelParams, band: float = AMBIGUITY_BAND) -> CubicAnalysis:
    """Positive roots ``y1 > y2 > y3`` of the ``x = 1`` cubic.

    Uses the trigonometric/hyperbolic forms of Cardano's formula on the
    depressed cubic, a Vieta fallback for roots lost to cancellation and
    a guarded Newton polish.  When ``|Delta|`` falls inside the relative
    ambiguity band the closest pair of roots is merged into a double root
    and ``boundary`` is set.
    """
    params.require_binary()
    delta, scale = _discriminant_parts(params)
    if params.log_theta_pow > _SCALED_LOG_T:
        ly = _dominant_root_log(params)
        return CubicAnalysis(delta, (safe_exp(ly),), (ly,), (1,), False, band * scale)

    theta = params.theta
    T = params.theta_pow
    a, b, c, d = theta, -1.0, T + 1.0, -2.0 * theta
    B, C, D = b / a, c / a, d / a
    P = C - B * B / 3.0
    Q = 2.0 * B**3 / 27.0 - B * C / 3.0 + D
    shift = -B / 3.0
    boundary = math.isfinite(delta) and abs(delta) <= band * scale

    if boundary or delta > 0:
        if P >= 0.0:
            ts = [-math.copysign(abs(Q) ** (1.0 / 3.0), Q)] * 3
        else:
            r = 2.0 * math.sqrt(-P / 3.0)
            arg = 3.0 * Q / (2.0 * P) * math.sqrt(-3.0 / P)
            phi = math.acos(min(1.0, max(-1.0, arg))) / 3.0
            ts = [r * math.cos(phi - 2.0 * math.pi * j / 3.0) for j in range(3)]
        ys = sorted((shift + t for t in ts), reverse=True)
        t_small = min(ts, key=lambda t: abs(shift + t))
        if abs(shift + t_small) < 0.5 * abs(t_small) and ys[0] * ys[1] > 0:
            ys[2] = 2.0 / (ys[0] * ys[1])
        ys = [_polish_cubic(y, a, b, c, d) for y in ys]
        ys.sort(reverse=True)
        if boundary:
            ys, mult = _merge_double(ys, a, b, c)
        else:
            mult = [1, 1, 1]
    else:
        if P < 0.0:
            arg = -3.0 * abs(Q) / (2.0 * P) * math.sqrt(-3.0 / P)
            t0 = -2.0 * math.copysign(1.0, Q) * math.sqrt(-P / 3.0) * math.cosh(
                math.acosh(max(1.0, arg)) / 3.0
            )
        elif P > 0.0:
            t0 = -2.0 * math.sqrt(P / 3.0) * math.sinh(
                math.asinh(3.0 * Q / (2.0 * P) * math.sqrt(3.0 / P)) / 3.0
            )
        else:
            t0 = -math.copysign(abs(Q) ** (1.0 / 3.0), Q)
        y0 = shift + t0
        if abs(y0) < 0.5 * abs(t0):
            # product of the three roots is 2; the complex pair is well conditioned
            mod2 = (shift - t0 / 2.0) ** 2 + 0.75 * t0 * t0 + P
            y0 = 2.0 / mod2
        ys = [_polish_cubic(y0, a, b, c, d)]
        mult = [1]

    if not all(y > 0.0 for y in ys):
        raise PsosError(f"non-positive cubic root {ys} at theta={theta}, p={params.p}")
    return CubicAnalysis(
        delta,
        tuple(ys),
        tuple(math.log(y) for y in ys),
        tuple(mult),
        boundary,
        band * scale,
    )


def _merge_double(ys, a, b, c):
    gaps = [ys[0] - ys[1], ys[1] - ys[2]]
    i = 0 if gaps[0] <= gaps[1] else 1
    mean = 0.5 * (ys[i] + ys[i + 1])
    # the double root is a critical point: 3a y^2 + 2b y + c = 0
    disc = b * b - 3.0 * a * c
    if disc >= 0.0:
        crit = [(-b + s * math.sqrt(disc)) / (3.0 * a) for s in (1.0, -1.0)]
        double = min(crit, key=lambda r: abs(r - mean))
    else:
        double = mean
    if i == 0:
        return [double, ys[2]], [2, 1]
    return [ys[0], double], [1, 2]


# ---------------------------------------------------------------------------
# x != 1: the quadratic  a xi^2 + b xi + c = 0  in xi = x + 1/x


@dataclass(frozen=True)
class XiAnalysis:
    a: float
    b: float
    c: float
    bigD: float
    d_factored: float
    sign: int
    boundary: bool
    xi1: Optional[float] = None
    xi2: Optional[float] = None
    xi_eq12: Optional[tuple] = None
    c1_satisfied: bool = False
    c2_satisfied: bool = False
    x_by_branch: dict = field(default_factory=dict)
    c2_by_branch: dict = field(default_factory=dict)
    radicand_by_branch: dict = field(default_factory=dict)


def _xi_closed_form(theta, q):
    num0 = -3.0 * theta * q * q + 2.0 * (theta + 1.0) * q + 2.0 * (theta * theta - 1.0)
    rad = q * (q + 2.0 * theta - 2.0) * ((q - theta - 1.0) ** 2 + (theta + 1.0) * (3.0 * theta - 1.0))
    den = (q - theta - 1.0) * (theta * q * q + (theta * theta - 1.0) * (q + theta - 1.0))
    if den == 0.0:
        return None
    s = theta * math.sqrt(max(rad, 0.0))
    r = sorted((q / 2.0 * (num0 - s) / den, q / 2.0 * (num0 + s) / den))
    return tuple(r)


def _x_pair(xi):
    big = 0.5 * (xi + math.sqrt((xi - 2.0) * (xi + 2.0)))
    return 1.0 / big, big


def xi_analysis(params: ModelParams, band: float = AMBIGUITY_BAND) -> XiAnalysis:
    """Coefficients, discriminant and roots of the ``xi`` quadratic (``theta < 1``).

    The sign decision uses the factored discriminant
    ``theta^2 (T-1)^3 l q``; a relative band on the two vanishing factors
    ``l`` and ``q`` marks the boundary curves ``p = M(theta)`` and
    ``p = m(theta)``.
    """
    params.require_binary()
    theta = params.theta
    if theta >= 1.0:
        raise DomainError(f"x != 1 branch requires theta < 1, got theta={theta}")
    lT = params.log_theta_pow
    T = math.exp(lT)
    q = -math.expm1(lT)
    a = theta * T * q * q + (theta * theta - T) ** 2
    b = q * (2.0 * (theta * theta - T) - theta * q * (1.0 - 3.0 * T))
    c = q * q * (1.0 - 2.0 * theta * q)
    bigD = b * b - 4.0 * a * c

    l_val = T - 2.0 * theta + 1.0
    q_val = (T + theta) ** 2 + 3.0 * theta * theta + 2.0 * theta - 1.0
    d_factored = -(theta * theta) * q**3 * l_val * q_val
    on_l = abs(l_val) <= band * (T + 2.0 * theta + 1.0)
    on_q = abs(q_val) <= band * ((T + theta) ** 2 + 3.0 * theta * theta + 2.0 * theta + 1.0)
    boundary = on_l or on_q
    sign = 0 if boundary else (1 if d_factored > 0 else -1)

    if sign < 0:
        return XiAnalysis(a, b, c, bigD, d_factored, sign, boundary)

    if sign == 0:
        xi1 = xi2 = -b / (2.0 * a)
    else:
        sq = math.sqrt(d_factored)
        qq = -0.5 * (b + math.copysign(sq, b))
        xi1, xi2 = sorted((qq / a, c / qq))
    c1 = 2.0 < xi1 <= xi2

    xs, c2s, rads = {}, {}, {}
    pairs = ((4, 7, xi2), (5, 6, xi1)) if sign > 0 else ((4, 6, xi1),)
    for lo, hi, xi in pairs:
        if not xi > 2.0:
            continue
        x_lo, x_hi = _x_pair(xi)
        # (1-T) x - T (x^2 + 1) = x (q - T xi): same sign for x and 1/x
        g = q - T * xi
        xs[lo], xs[hi] = x_lo, x_hi
        rads[lo], rads[hi] = x_lo * g, x_hi * g
        c2s[lo] = c2s[hi] = g >= 0.0
    c2 = bool(c2s) and all(c2s.values())
    return XiAnalysis(
        a, b, c, bigD, d_factored, sign, boundary, xi1, xi2,
        _xi_closed_form(theta, q), c1, c2, xs, c2s, rads,
    )


def _polish_law(x, y, params: ModelParams, steps=4):
    # Newton on x Z - (x^2 + th y^2 + T) = 0, y Z - (th x^2 + y^2 + th) = 0
    th = params.theta
    T = params.theta_pow

    def defect(x, y):
        Z = T * x * x + th * y * y + 1.0
        return x * Z - (x * x + th * y * y + T), y * Z - (th * x * x + y * y + th)

    e1, e2 = defect(x, y)
    for _ in range(steps):
        Z = T * x * x + th * y * y + 1.0
        j11 = Z + 2.0 * T * x * x - 2.0 * x
        j12 = 2.0 * th * x * y - 2.0 * th * y
        j21 = 2.0 * T * x * y - 2.0 * th * x
        j22 = Z + 2.0 * th * y * y - 2.0 * y
        det = j11 * j22 - j12 * j21
        if det == 0.0:
            break
        nx = x - (e1 * j22 - e2 * j12) / det
        ny = y - (j11 * e2 - j21 * e1) / det
        if not (nx > 0.0 and ny > 0.0):
            break
        f1, f2 = defect(nx, ny)
        if max(abs(f1), abs(f2)) >= max(abs(e1), abs(e2)):
            break
        x, y, e1, e2 = nx, ny, f1, f2
    return x, y


def branch_points_4to7(params: ModelParams, xi: XiAnalysis) -> list:
    """Laws ``(x_i, y_i)``, ``i = 4..7``, for the roots of the xi quadratic.

    Branches whose radicand ``(1-T) x - T (x^2+1)`` is negative are left
    out; ``xi.c2_by_branch`` records which.
    """
    out = []
    theta = params.theta
    for branch in sorted(xi.x_by_branch):
        if not xi.c2_by_branch[branch]:
            continue
        x = xi.x_by_branch[branch]
        rad = xi.radicand_by_branch[branch]
        if rad <= 0.0:
            continue
        y = math.sqrt(rad / theta)
        pt = LawPoint.from_logs(math.log(x), math.log(y), branch, params)
        if pt.residual > 1e-14:
            px, py = _polish_law(x, y, params)
            cand = LawPoint.from_logs(math.log(px), math.log(py), branch, params)
            if cand.residual < pt.residual:
                pt = cand
        out.append(pt)
    return out


# ---------------------------------------------------------------------------
# region curves


def l_curve(theta: float, p: float) -> float:
    return power(theta, 2.0**p) - 2.0 * theta + 1.0


def q_curve(theta: float, p: float) -> float:
    s = power(theta, 2.0**p) + theta
    return s * s + 3.0 * theta * theta + 2.0 * theta - 1.0


def m_curve(theta: float) -> Optional[float]:
    """Exponent ``p`` on the curve ``q(theta, p) = 0``, for ``0 < theta < (sqrt5-1)/4``."""
    if not 0.0 < theta < SQRT5_QUARTER:
        return None
    inner = -theta + math.sqrt((theta + 1.0) * (1.0 - 3.0 * theta))
    return math.log(math.log(inner) / math.log(theta)) / math.log(2.0)


def M_curve(theta: float) -> Optional[float]:
    """Exponent ``p`` on the curve ``l(theta, p) = 0``, for ``1/2 < theta < 1``."""
    if not 0.5 < theta < 1.0:
        return None
    return math.log(math.log(2.0 * theta - 1.0) / math.log(theta)) / math.log(2.0)


@dataclass(frozen=True)
class RegionCurves:
    m_val: Optional[float]
    M_val: Optional[float]
    l_val: Optional[float] = None
    q_val: Optional[float] = None


def region_curves(theta: float, p: Optional[float] = None) -> RegionCurves:
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    if p is None:
        return RegionCurves(m_curve(theta), M_curve(theta))
    return RegionCurves(m_curve(theta), M_curve(theta), l_curve(theta, p), q_curve(theta, p))


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class SolutionSet:
    """Every law at ``(theta, p)`` plus the region the solution set realizes.

    ``region`` is read off the branches actually present, so ``count``
    always matches the region table.  ``nominal_region`` is where the
    signs of Delta and D alone would place ``(theta, p)``; the two differ
    exactly when the xi-roots violate the positivity conditions, which
    is then described in ``violations``.
    """

    params: ModelParams
    points: tuple
    region: Region
    count: int
    cubic: CubicAnalysis
    xi: Optional[XiAnalysis] = None
    nominal_region: Optional[Region] = None
    violations: tuple = ()

    @property
    def delta_sign(self) -> int:
        if self.cubic.boundary:
            return 0
        return 1 if len(self.cubic.roots) == 3 else -1

    @property
    def d_sign(self) -> Optional[int]:
        return None if self.xi is None else self.xi.sign

    @property
    def c1(self) -> Optional[bool]:
        return None if self.xi is None else self.xi.c1_satisfied

    @property
    def c2(self) -> Optional[bool]:
        return None if self.xi is None else self.xi.c2_satisfied

    @property
    def conditions_hold(self) -> bool:
        return not self.violations

    def point(self, branch: int) -> LawPoint:
        for pt in self.points:
            if pt.branch == branch:
                return pt
        raise BranchAbsent(
            f"branch {branch} absent at theta={self.params.theta}, p={self.params.p} "
            f"(region {self.region.value})"
        )


def _cubic_labels(n: int) -> tuple:
    return {3: (1, 2, 3), 2: (1, 3), 1: (1,)}[n]


def _x1_points(params: ModelParams, cubic: CubicAnalysis) -> list:
    return [
        LawPoint.from_logs(0.0, ly, br, params)
        for br, ly in zip(_cubic_labels(len(cubic.roots)), cubic.log_roots)
    ]


def _nominal_region(delta_sign: int, d_sign: int) -> Region:
    if delta_sign > 0:
        return Region.Q_PLUS
    if delta_sign == 0:
        return Region.Q_ZERO
    return {1: Region.Q_MINUS_CAP_P, 0: Region.BOUNDARY_mM, -1: Region.UNIQUE}[d_sign]


_REGION_BY_BRANCHES = {v: k for k, v in REGION_BRANCHES.items()}


def classify(params: ModelParams, ambiguity: str = "raise", band: float = AMBIGUITY_BAND) -> SolutionSet:
    """All translation-invariant laws at ``(theta, p)`` and their region.

    ``ambiguity="raise"`` (default) raises :class:`ToleranceAmbiguity`
    when Delta or D is within ``band`` of zero; ``"snap"`` treats such
    values as exactly zero and returns the boundary region.

    Positivity of the xi-roots is checked, not assumed.  Where D > 0 but
    no root exceeds 2 (this happens for ``1/2 < theta < 1``,
    ``p > M(theta)``) the x != 1 family is empty and the set realizes
    the one-measure region; the failure is listed in ``violations``.
    """
    if ambiguity not in ("raise", "snap"):
        raise ValueError(f"ambiguity must be 'raise' or 'snap', got {ambiguity!r}")
    params.require_binary()
    cubic = solve_cubic_x1(params, band)
    if cubic.boundary and ambiguity == "raise":
        raise ToleranceAmbiguity(
            f"|Delta| = {abs(cubic.delta):.3g} within band {cubic.band:.3g} "
            f"at theta={params.theta}, p={params.p}",
            "DELTA", cubic.delta, cubic.band,
        )
    points = _x1_points(params, cubic)
    delta_sign = 0 if cubic.boundary else (1 if len(points) == 3 else -1)

    if params.theta >= 1.0:
        if len(points) != 1:
            raise ConditionViolation(f"{len(points)} cubic roots for theta >= 1")
        return SolutionSet(params, tuple(points), Region.UNIQUE, 1, cubic,
                           nominal_region=Region.UNIQUE)

    xi = xi_analysis(params, band)
    if xi.boundary and ambiguity == "raise":
        raise ToleranceAmbiguity(
            f"D within band of zero at theta={params.theta}, p={params.p}",
            "BIG_D", xi.d_factored, band,
        )
    violations = []
    if xi.sign >= 0 and not xi.c1_satisfied:
        violations.append(f"C1: xi roots ({xi.xi1:.17g}, {xi.xi2:.17g}) not both > 2")
    failed_c2 = sorted(br for br, ok in xi.c2_by_branch.items() if not ok)
    if failed_c2:
        violations.append(f"C2: negative radicand on branches {failed_c2}")
    points += branch_points_4to7(params, xi)

    branches = tuple(pt.branch for pt in points)
    region = _REGION_BY_BRANCHES.get(branches)
    if region is None:
        raise ConditionViolation(
            f"branch set {branches} matches no region at theta={params.theta}, "
            f"p={params.p}; violations: {violations}"
        )
    return SolutionSet(
        params, tuple(points), region, len(points), cubic, xi,
        _nominal_region(delta_sign, xi.sign), tuple(violations),
    )


def find_branch(params: ModelParams, branch: int, band: float = AMBIGUITY_BAND) -> LawPoint:
    """The law on one branch, without assembling the full solution set."""
    if branch not in range(1, 8):
        raise DomainError(f"branch must be in 1..7, got {branch}")
    params.require_binary()
    if branch <= 3:
        cubic = solve_cubic_x1(params, band)
        for pt in _x1_points(params, cubic):
            if pt.branch == branch:
                return pt
    elif params.theta < 1.0:
        xi = xi_analysis(params, band)
        for pt in branch_points_4to7(params, xi):
            if pt.branch == branch:
                return pt
    raise BranchAbsent(f"branch {branch} absent at theta={params.theta}, p={params.p}")


def check_point(pt: LawPoint, tol: Optional[float] = None) -> None:
    """Raise if a law violates the positivity or residual invariants."""
    tol = residual_tol() if tol is None else tol
    if not (math.isfinite(pt.log_x) and math.isfinite(pt.log_y)):
        raise PsosError(f"non-finite law {pt}")
    if pt.branch in (1, 2, 3) and pt.log_x != 0.0:
        raise PsosError(f"branch {pt.branch} must have x = 1, got {pt.x}")
    if not pt.residual < tol:
        raise PsosError(f"residual {pt.residual:.3g} >= {tol:.3g} for {pt}")
