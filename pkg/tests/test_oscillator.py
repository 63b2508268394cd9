import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from surfent import oscillator as osc
from surfent.zoo import make_diag_linear

import oracles

# frozen from mpmath evaluations of log 3 - 4 log a and (1/5) log 3
RATE_128 = 0.1111719769420065
RATE_LOW = 0.21972245773362196


def test_frozen_constants_match_mpmath():
    assert RATE_128 == pytest.approx(float(mpmath.log(3) - 4 * mpmath.log(mpmath.mpf("1.28"))),
                                     abs=1e-15)
    assert RATE_LOW == pytest.approx(float(mpmath.log(3) / 5), abs=1e-15)


def test_sigma_examples():
    p, d = osc.sigma_osc(1 / math.pi)
    assert p[0] == pytest.approx(1 / math.pi) and abs(p[1]) < 1e-15
    p, d = osc.sigma_osc(0.0)
    assert np.array_equal(p, [0, 0]) and np.array_equal(d, [1, 0])
    p, _ = osc.sigma_osc(2 / math.pi)
    assert p[1] == pytest.approx((2 / math.pi) ** 5, rel=1e-14)


def test_g_examples():
    a, n = 1.3, 3
    u = a ** n / (7 * math.pi)
    g, _ = osc.g_n_value_and_derivative(u, a, n)
    assert abs(g) < 1e-14
    for a in (2.0, 5.0, 20.0):
        g, _ = osc.g_n_value_and_derivative(np.linspace(1e-3, 1, 50), a, 4)
        assert np.all(np.abs(g) <= 3 ** 4 * a ** (-20) * (1 + 1e-12))


def test_g_derivative_finite_difference():
    rng = np.random.default_rng(0)
    for _ in range(100):
        a = rng.uniform(1.05, 2.0)
        n = int(rng.integers(1, 7))
        u = rng.uniform(0.2, 1.0)
        h = 1e-6 * u
        _, dg = osc.g_n_value_and_derivative(u, a, n)
        gp, _ = osc.g_n_value_and_derivative(u + h, a, n)
        gm, _ = osc.g_n_value_and_derivative(u - h, a, n)
        fd = (gp - gm) / (2 * h)
        assert fd == pytest.approx(float(dg), rel=1e-6, abs=1e-9)


def test_g_is_image_of_sigma():
    a, n = 1.2, 3
    x = np.linspace(0.05, 0.3, 40)
    p, _ = osc.sigma_osc(x)
    img = p * np.array([a ** n, 3.0 ** n])
    g, _ = osc.g_n_value_and_derivative(img[:, 0], a, n)
    assert np.allclose(g, img[:, 1], rtol=1e-12, atol=1e-300)


def test_theoretical_rate_examples():
    assert osc.theoretical_rate(osc.A_LOW) == pytest.approx(RATE_LOW, abs=1e-15)
    assert osc.theoretical_rate(osc.A_HIGH * (1 - 1e-15)) == pytest.approx(0.0, abs=1e-12)
    assert osc.theoretical_rate(osc.A_HIGH) == 0.0
    assert osc.theoretical_rate(2.0) == 0.0
    assert osc.theoretical_rate(1.1) == pytest.approx(RATE_LOW, abs=1e-15)
    assert osc.theoretical_rate(1.28) == pytest.approx(RATE_128, abs=1e-15)
    with pytest.raises(ValueError):
        osc.theoretical_rate(1.0)


@given(st.floats(1.0001, 3.0))
def test_theoretical_rate_bounded_and_monotone(a):
    r = osc.theoretical_rate(a)
    assert 0 <= r <= RATE_LOW + 1e-15
    assert osc.theoretical_rate(a * 1.001) <= r + 1e-15


@pytest.mark.parametrize("a,n", [(1.1, 1), (1.1, 3), (1.1, 7), (1.28, 4), (1.28, 8),
                                 (1.5, 2), (1.5, 6), (2.0, 3)])
def test_restricted_length_matches_quadrature_oracle(a, n):
    got = osc.restricted_length(a, n).length
    want = oracles.restricted_length_quad(a, n)
    assert got == pytest.approx(want, rel=1e-10)


@pytest.mark.parametrize("a,n", [(1.1, 3), (1.5, 4)])
def test_restricted_length_matches_polyline(a, n):
    # independent route: adaptive polyline of the image curve, clipped to the square
    from surfent.curves import clipped_arc_length
    diag = make_diag_linear(a, strict=False)
    L = clipped_arc_length(diag, osc.sigma_osc_curve(), n, ((-1, -1), (1, 1)), 1e-7, init=4096)
    assert L == pytest.approx(osc.restricted_length(a, n).length, rel=1e-5)


def test_restricted_length_budget():
    with pytest.raises(osc.CellBudgetError):
        osc.restricted_length(1.1, 60, budget=1000)
    s = osc.restricted_growth(1.1, [2, 4, 60, 62], budget=10 ** 5)
    assert list(s.n) == [2, 4] and s.flags == ["truncated@n=60"]


def test_admissible_intervals_consistent():
    a, n = 1.1, 10
    iv = osc.admissible_intervals_u(a, n)
    u = np.linspace(1e-4, 1, 20001)
    g, _ = osc.g_n_value_and_derivative(u, a, n)
    inside = np.zeros_like(u, dtype=bool)
    for p, q in iv:
        inside |= (u >= p) & (u <= q)
    ok = np.abs(g) <= 1
    # disagreements only within bisection resolution of an interval edge
    edges = np.array([e for pq in iv for e in pq])
    bad = u[inside != ok]
    assert all(np.min(np.abs(edges - b)) < 1e-4 for b in bad)
    assert osc.admissible_intervals_u(1.5, 4) == [(0.0, 1.0)]


def test_length_lower_bound_holds():
    for n in (10, 20, 30):
        L = osc.restricted_length(1.28, n).length
        assert L >= osc.length_lower_bound(1.28, n)


@pytest.mark.slow
@pytest.mark.parametrize("a,target", [(1.1, RATE_LOW), (1.5, 0.0)])
def test_restricted_growth_short_runs(a, target):
    s = osc.restricted_growth(a, list(range(2, 31, 2)))
    assert abs(s.rate - target) < 0.03


def test_example_rows_csv(tmp_path):
    s = osc.restricted_growth(1.5, [2, 4])
    rows = osc.example_rows(1.5, s)
    assert rows[0].residual == rows[0].rate
    path = tmp_path / "e.csv"
    osc.write_example_csv(rows, path)
    assert path.read_text().splitlines()[0] == "a,n,L_n,rate,theoretical,residual"


def test_cos_integral_examples():
    bound = osc.cos_integral_bound(2, 1, 1)
    assert bound == pytest.approx(16 / (2 * math.pi * (2 + 2 * math.pi) ** 4), rel=1e-14)
    assert bound == pytest.approx(5.41e-4, rel=1e-2)
    audit = osc.cos_integral_audit(2, 1, 1)
    assert 0.13 <= audit.numeric <= 0.18 and audit.passed
    for b in (1e-2, 1e-3):
        au = osc.cos_integral_audit(2, b, 1)
        assert au.bound / au.numeric <= 1


@pytest.mark.parametrize("a,b,n", [(2, 1, 1), (1.1, 0.5, 6), (1.5, 1, 3), (2, 0.5, 6), (1.1, 1, 1)])
def test_cos_integral_matches_mpmath(a, b, n):
    got, err = osc.cos_integral(a, b, n)
    want = oracles.cos_integral_mp(a, b, n)
    assert got == pytest.approx(want, rel=1e-9)
    assert err < 1e-9 * got


def test_cos_integral_grid_all_pass():
    assert len(osc.AUDIT_GRID) == 36
    assert all(osc.cos_integral_audit(*g).passed for g in osc.AUDIT_GRID)


def test_monotonicity_examples():
    a, n = 1.05, 1
    au = osc.monotonicity_count_audit(a, n)
    assert au.count in (0, 1)
    au = osc.monotonicity_count_audit(1.1, 10)
    assert au.count <= 4 and au.passed
    for a in (1.05, 1.1, 1.2):
        for n in (5, 10, 15):
            assert osc.monotonicity_count_audit(a, n).passed
    with pytest.raises(ValueError):
        osc.monotonicity_count_audit(1.3, 5)


def test_tan_roots_solve_equation():
    for r in osc.tan_roots(0.5, 60):
        assert math.sin(r) - r * math.cos(r) / 5 == pytest.approx(0, abs=1e-12)
    # one root per branch
    assert len(osc.tan_roots(0.5, 60)) == len({round((r + math.pi / 2) // math.pi)
                                                 for r in osc.tan_roots(0.5, 60)})
