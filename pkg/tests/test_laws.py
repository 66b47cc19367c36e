"""Closed-form laws: cubic branch, xi branch, region curves and classification."""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from psos_gibbs.errors import BranchAbsent, DomainError, ToleranceAmbiguity
from psos_gibbs.laws import (
    Q_ROOT_P0,
    REGION_BRANCHES,
    REGION_COUNT,
    SQRT5_QUARTER,
    LawPoint,
    M_curve,
    Region,
    branch_points_4to7,
    check_point,
    classify,
    cubic_discriminant,
    find_branch,
    fixed_point_residual,
    l_curve,
    m_curve,
    q_curve,
    region_curves,
    solve_cubic_x1,
    xi_analysis,
)
from psos_gibbs.params import ModelParams

from conftest import random_params

# frozen from 50-digit mpmath evaluations
CUBIC_ROOTS = {
    (0.1, 0.1): (8.7920717567791279988, 0.9744975073284116386, 0.23343073589246036256),
    (0.3, 0.1): (1.1487803313763082702,),
    (0.5, 1.0): (1.271069167986134518,),
    (0.15, 0.1): (5.3202075478096382159, 0.95128145375406050171, 0.39517766510296794902),
    (1.5, 2.0): (0.50504533141696259135,),
}
LAWS_4TO7 = {  # theta = 0.1, p = 0.1
    4: (0.094860413959884302258, 0.11356341748217407842),
    5: (0.20559232992049750914, 0.99907458697645123849),
    6: (4.8639946849510372931, 4.859493480923111648),
    7: (10.541805145641593646, 1.1971634187702272128),
}
DELTA_015_01 = 0.072484288469209361202


# --- cubic -----------------------------------------------------------------


@pytest.mark.parametrize("p", [0.5, 7.3])
def test_discriminant_at_theta_one(p):
    assert cubic_discriminant(ModelParams(1.0, p)) == pytest.approx(-72.0, abs=1e-12)


def test_discriminant_frozen_value():
    assert cubic_discriminant(ModelParams(0.15, 0.1)) == pytest.approx(DELTA_015_01, rel=1e-12)


@pytest.mark.parametrize("key", sorted(CUBIC_ROOTS))
def test_cubic_roots_frozen(key):
    cub = solve_cubic_x1(ModelParams(*key))
    assert len(cub.roots) == len(CUBIC_ROOTS[key])
    for got, want in zip(cub.roots, CUBIC_ROOTS[key]):
        assert got == pytest.approx(want, rel=1e-13)


@pytest.mark.parametrize("p", [0.3, 1.0, 5.0, 11.0])
def test_theta_one_single_root(p):
    cub = solve_cubic_x1(ModelParams(1.0, p))
    assert cub.roots == pytest.approx((1.0,), rel=1e-15)


def test_root_count_follows_delta_sign():
    assert len(solve_cubic_x1(ModelParams(0.1, 0.1)).roots) == 3
    assert cubic_discriminant(ModelParams(0.1, 0.1)) > 0
    assert len(solve_cubic_x1(ModelParams(0.3, 0.1)).roots) == 1
    assert cubic_discriminant(ModelParams(0.3, 0.1)) < 0


def test_huge_theta_pow_root_kept_in_logs():
    # T = 5^1024 overflows; y ~ 2 theta / T underflows
    P = ModelParams(5.0, 10.0)
    cub = solve_cubic_x1(P)
    assert cub.roots == (0.0,)
    assert cub.log_roots[0] == pytest.approx(math.log(10.0) - P.log_theta_pow, rel=1e-12)
    pt = find_branch(P, 1)
    assert pt.residual < 1e-12


def _mp_log_roots(theta, p):
    # enough digits to resolve roots spread over e^(+-log T)
    lT = abs(ModelParams(theta, p).log_theta_pow)
    mp.mp.dps = 30 + int(lT / 1.15)
    th = mp.mpf(theta)
    T = mp.exp(mp.mpf(2) ** mp.mpf(p) * mp.log(th))
    roots = mp.polyroots([th, -1, T + 1, -2 * th], maxsteps=400, extraprec=400)
    real = sorted((mp.re(r) for r in roots if abs(mp.im(r)) <= 1e-20 * abs(r)), reverse=True)
    return [float(mp.log(r)) for r in real if r > 0]


def test_cubic_matches_iterative_root_finder():
    """Durand-Kerner (mpmath) as the independent oracle, 1e-10 in log y."""
    rng = np.random.default_rng(7)
    checked = 0
    for theta, p in random_params(rng, 600, (0.01, 2.0), (0.05, 12.0)):
        P = ModelParams(theta, p)
        cub = solve_cubic_x1(P)
        if cub.boundary or abs(P.log_theta_pow) > 300:
            continue
        want = _mp_log_roots(theta, p)
        assert len(want) == len(cub.roots), (theta, p)
        for got, w in zip(cub.log_roots, want):
            assert abs(got - w) < 1e-10, (theta, p, got, w)
        checked += 1
    assert checked > 400


def test_cubic_matches_numpy_roots_on_10k_draws():
    rng = np.random.default_rng(11)
    for _ in range(10000):
        theta, p = float(rng.uniform(0.0, 2.0)), float(rng.uniform(0.05, 12.0))
        if theta == 0.0:
            continue
        P = ModelParams(theta, p)
        cub = solve_cubic_x1(P)
        T = P.theta_pow
        if cub.boundary or not math.isfinite(T) or P.log_theta_pow > 40:
            continue
        r = np.roots([theta, -1.0, T + 1.0, -2.0 * theta])
        real = np.sort(r[np.abs(r.imag) <= 1e-7 * np.abs(r)].real)[::-1]
        assert len(real) == len(cub.roots), (theta, p)
        # np.roots loses digits near coalescing roots; compare the defect instead
        for y in cub.roots:
            f = ((theta * y - 1.0) * y + T + 1.0) * y - 2.0 * theta
            scale = theta * y**3 + y * y + (T + 1.0) * y + 2.0 * theta
            assert abs(f) <= 1e-13 * scale


@given(st.floats(0.005, 3.0), st.floats(0.05, 12.0))
def test_cubic_root_properties(theta, p):
    P = ModelParams(theta, p)
    cub = solve_cubic_x1(P)
    assert len(cub.roots) == {True: len(cub.roots)}.get(cub.boundary, 3 if cub.delta > 0 else 1)
    assert all(ly > -math.inf for ly in cub.log_roots)
    assert list(cub.log_roots) == sorted(cub.log_roots, reverse=True)
    assert len(set(cub.log_roots)) == len(cub.log_roots)


def test_boundary_band_merges_double_root():
    # Delta(theta, 0.1) changes sign between 0.205 and 0.21; bisect to the curve
    lo, hi = 0.205, 0.21
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if cubic_discriminant(ModelParams(mid, 0.1)) > 0:
            lo = mid
        else:
            hi = mid
    cub = solve_cubic_x1(ModelParams(lo, 0.1))
    assert cub.boundary
    assert len(cub.roots) == 2 and 2 in cub.multiplicities
    with pytest.raises(ToleranceAmbiguity):
        classify(ModelParams(lo, 0.1))
    snapped = classify(ModelParams(lo, 0.1), ambiguity="snap")
    assert snapped.region is Region.Q_ZERO and snapped.count == 6


# --- xi branch ---------------------------------------------------------------


def test_xi_requires_theta_below_one():
    with pytest.raises(DomainError):
        xi_analysis(ModelParams(1.0, 2.0))
    with pytest.raises(DomainError):
        xi_analysis(ModelParams(1.7, 2.0))


def test_xi_negative_outside_region():
    xi = xi_analysis(ModelParams(0.9, 0.05))
    assert xi.bigD < 0 and xi.sign < 0 and xi.xi1 is None


def test_xi_roots_at_reference_point():
    xi = xi_analysis(ModelParams(0.1, 0.1))
    assert xi.bigD > 0 and 2.0 < xi.xi1 < xi.xi2 and xi.c1_satisfied and xi.c2_satisfied
    for r in (xi.xi1, xi.xi2):
        assert abs(xi.a * r * r + xi.b * r + xi.c) < 1e-12 * (xi.a * r * r + abs(xi.b * r) + abs(xi.c))
    # sum/product and the closed-form pair agree
    assert xi.xi1 + xi.xi2 == pytest.approx(-xi.b / xi.a, rel=1e-12)
    assert xi.xi_eq12 == pytest.approx((xi.xi1, xi.xi2), rel=1e-9)


def test_xi_boundary_on_l_curve():
    theta = 0.6
    P = ModelParams(theta, M_curve(theta))
    assert abs(l_curve(theta, P.p)) < 1e-14
    xi = xi_analysis(P)
    assert xi.boundary and xi.sign == 0
    assert abs(xi.bigD) < 1e-12


@given(st.floats(0.01, 0.99), st.floats(0.05, 12.0))
def test_discriminant_factored_agrees_in_sign(theta, p):
    xi = xi_analysis(ModelParams(theta, p))
    scale = xi.b * xi.b + 4.0 * abs(xi.a * xi.c)
    assume(abs(xi.bigD) > 1e-9 * scale)
    assert np.sign(xi.bigD) == np.sign(xi.d_factored)


def test_branch_points_reference():
    P = ModelParams(0.1, 0.1)
    pts = branch_points_4to7(P, xi_analysis(P))
    assert [pt.branch for pt in pts] == [4, 5, 6, 7]
    for pt in pts:
        x, y = LAWS_4TO7[pt.branch]
        assert pt.x == pytest.approx(x, rel=1e-12)
        assert pt.y == pytest.approx(y, rel=1e-12)
        assert pt.residual < 1e-10
    x = {pt.branch: pt.x for pt in pts}
    assert abs(x[4] * x[7] - 1.0) < 1e-12 and abs(x[5] * x[6] - 1.0) < 1e-12


def test_branch_points_absent_when_d_negative():
    P = ModelParams(0.7, 0.1)
    xi = xi_analysis(P)
    assert xi.sign < 0
    assert branch_points_4to7(P, xi) == []


def test_c1_failure_region_recorded():
    # 1/2 < theta < 1 and p > M(theta): D > 0 but no xi root exceeds 2
    sol = classify(ModelParams(0.8, 5.0))
    assert sol.nominal_region is Region.Q_MINUS_CAP_P
    assert sol.region is Region.UNIQUE and sol.count == 1
    assert not sol.c1 and not sol.conditions_hold
    assert any(v.startswith("C1") for v in sol.violations)


# --- curves --------------------------------------------------------------------


def test_q_root_at_p_zero():
    assert abs(q_curve(Q_ROOT_P0, 0.0)) < 1e-15


def test_l_vanishes_at_theta_one():
    assert l_curve(1.0, 3.7) == 0.0


def test_curve_values_frozen():
    assert m_curve(0.3) == pytest.approx(1.2197870250687488541, rel=1e-12)
    assert M_curve(0.6) == pytest.approx(1.6556541231144544167, rel=1e-12)
    # finite, though negative: the curve is above p = 0 only past (2 sqrt2 - 1)/7
    assert m_curve(0.2) == pytest.approx(-1.1855293014487887851, rel=1e-12)


def test_curve_domains():
    assert m_curve(SQRT5_QUARTER) is None and m_curve(0.5) is None
    assert M_curve(0.5) is None and M_curve(1.0) is None
    assert M_curve(0.5 + 1e-12) > 5.0  # blows up at 1/2
    rc = region_curves(0.3, 1.0)
    assert rc.m_val is not None and rc.M_val is None and rc.l_val is not None


def test_m_curve_is_zero_of_q():
    for theta in (0.27, 0.29, 0.305):
        assert abs(q_curve(theta, m_curve(theta))) < 1e-12


# --- classification ------------------------------------------------------------


@pytest.mark.parametrize("theta,p,region,count", [
    (1.5, 2.0, Region.UNIQUE, 1),
    (0.15, 0.1, Region.Q_PLUS, 7),
    (1.0, 5.0, Region.UNIQUE, 1),
    (0.1, 0.1, Region.Q_PLUS, 7),
    (0.25, 0.1, Region.Q_MINUS_CAP_P, 5),
    (0.4, 1.0, Region.UNIQUE, 1),
])
def test_classify_examples(theta, p, region, count):
    sol = classify(ModelParams(theta, p))
    assert sol.region is region and sol.count == count == len(sol.points)
    assert tuple(pt.branch for pt in sol.points) == REGION_BRANCHES[region]


def test_theta_one_gives_symmetric_law():
    sol = classify(ModelParams(1.0, 5.0))
    (pt,) = sol.points
    assert pt.x == 1.0 and pt.y == pytest.approx(1.0, rel=1e-15)


def test_boundary_mM_snapped():
    theta = 0.3
    P = ModelParams(theta, m_curve(theta))
    with pytest.raises(ToleranceAmbiguity):
        classify(P)
    sol = classify(P, ambiguity="snap")
    assert sol.region is Region.BOUNDARY_mM and sol.count == 3
    assert sol.conditions_hold


def test_upper_boundary_fails_c1():
    # on the M curve the double xi root is -1/2, so only the x = 1 law survives
    P = ModelParams(0.6, M_curve(0.6))
    sol = classify(P, ambiguity="snap")
    assert sol.nominal_region is Region.BOUNDARY_mM
    assert sol.region is Region.UNIQUE and sol.count == 1
    assert sol.xi.xi1 == pytest.approx(-0.5, rel=1e-9)


def test_find_branch_absent():
    with pytest.raises(BranchAbsent):
        find_branch(ModelParams(1.5, 2.0), 2)
    with pytest.raises(BranchAbsent):
        find_branch(ModelParams(1.5, 2.0), 5)
    with pytest.raises(BranchAbsent):
        classify(ModelParams(1.5, 2.0)).point(3)


@given(st.floats(0.002, 50.0), st.floats(0.05, 12.0))
def test_classify_invariants(theta, p):
    sol = classify(ModelParams(theta, p), ambiguity="snap")
    assert sol.count in {1, 3, 5, 6, 7}
    assert REGION_COUNT[sol.region] == sol.count
    for pt in sol.points:
        check_point(pt)
        assert pt.log_x > -math.inf and pt.log_y > -math.inf
    xs = {pt.branch: pt.x for pt in sol.points if pt.branch >= 4}
    if len(xs) == 4:
        assert xs[4] <= xs[5] < 1.0 < xs[6] <= xs[7]
        assert abs(xs[4] * xs[7] - 1) < 1e-12 and abs(xs[5] * xs[6] - 1) < 1e-12
    if theta >= 1.0:
        assert sol.count == 1


def test_residual_is_relative_defect():
    P = ModelParams(0.5, 1.0)
    pt = find_branch(P, 1)
    assert fixed_point_residual(pt.log_x, pt.log_y, P) < 1e-15
    assert fixed_point_residual(0.0, pt.log_y + 1e-6, P) > 1e-8


def test_check_point_rejects_bad_law():
    with pytest.raises(Exception):
        check_point(LawPoint(1.0, 2.0, 1, 1e-3))
    with pytest.raises(Exception):
        check_point(LawPoint(1.5, 2.0, 2, 0.0))
