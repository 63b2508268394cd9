import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from surfent import dynamics as dy
from surfent.zoo import make_cat, make_diag_linear, make_identity, make_linear_planar

import oracles

finite = st.floats(-50, 50, allow_nan=False)
mat = st.tuples(finite, finite, finite, finite).map(lambda t: np.array(t).reshape(2, 2))


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return make_linear_planar([[c, -s], [s, c]], name="rot")


def test_cocycle_jacobian_examples():
    cat = make_cat()
    x = np.array([0.3, 0.7])
    assert np.array_equal(dy.cocycle_jacobian(cat, x, 1), [[2, 1], [1, 1]])
    assert np.array_equal(dy.cocycle_jacobian(cat, x, 2), [[5, 3], [3, 2]])
    assert np.array_equal(dy.cocycle_jacobian(cat, x, 0), np.eye(2))
    for n in range(1, 15):
        want = np.array(oracles.cat_power(n), dtype=float)
        assert np.array_equal(dy.cocycle_jacobian(cat, x, n), want)


def test_cocycle_jacobian_rejects_negative_n():
    with pytest.raises(ValueError):
        dy.cocycle_jacobian(make_cat(), np.array([0.1, 0.1]), -1)


def test_cocycle_escape_raises():
    diag = make_diag_linear(1.5)
    with pytest.raises(dy.DomainEscapeError):
        dy.cocycle_jacobian(diag, np.array([1.0, 1.0]), 3)


def test_operator_norm_examples():
    assert dy.operator_norm(np.eye(2)) == pytest.approx(1.0, abs=1e-15)
    assert dy.operator_norm(np.diag([1.5, 3.0])) == pytest.approx(3.0, abs=1e-15)
    assert dy.operator_norm(np.array([[2.0, 1.0], [1.0, 1.0]])) == pytest.approx(
        (3 + math.sqrt(5)) / 2, rel=1e-15)


@given(mat)
def test_operator_norm_matches_svd(M):
    want = np.linalg.svd(M, compute_uv=False)[0]
    assert dy.operator_norm(M) == pytest.approx(want, rel=1e-12, abs=1e-12)


@given(mat, mat)
def test_matmul_and_inverse(A, B):
    assert np.allclose(dy.matmul_2x2(A[None], B[None])[0], A @ B, rtol=1e-12, atol=1e-9)
    if abs(np.linalg.det(A)) > 1e-3:
        assert np.allclose(dy.inverse_2x2(A[None])[0] @ A, np.eye(2), atol=1e-6)


def test_lift_step_examples():
    ident = make_identity()
    xh = dy.TangentPoint(0.2, 0.4, 1.0)
    assert dy.lift_step(ident, xh) == xh
    diag = make_linear_planar(np.diag([2.0, 1.0]))
    assert dy.lift_step(diag, dy.TangentPoint(0.1, 0.1, 0.0)).angle == 0.0
    out = dy.lift_step(rotation(math.pi / 2), dy.TangentPoint(0.1, 0.1, 0.0))
    assert out.angle == pytest.approx(math.pi / 2, abs=1e-15)


def test_angle_reduced_mod_pi():
    assert dy.TangentPoint(0, 0, math.pi + 0.25).angle == pytest.approx(0.25)
    assert dy.TangentPoint(0, 0, -0.25).angle == pytest.approx(math.pi - 0.25)


def test_rho_examples():
    assert dy.rho(make_identity(), dy.TangentPoint(0.1, 0.2, 0.7)) == 0.0
    diag = make_diag_linear(1.5)
    assert dy.rho(diag, dy.TangentPoint(0.1, 0.1, 0.0)) == pytest.approx(math.log(1.5))
    w, V = np.linalg.eigh(np.array([[2.0, 1.0], [1.0, 1.0]]))
    v = V[:, np.argmax(w)]
    xh = dy.TangentPoint(0.3, 0.3, math.atan2(v[1], v[0]))
    assert dy.rho(make_cat(), xh) == pytest.approx(oracles.GOLDEN_LOG, abs=1e-14)


def test_rho_prime_examples():
    assert dy.rho_prime(make_identity(2.0), dy.TangentPoint(0.1, 0.2, 0.7)) == 0.0
    diag = make_diag_linear(1.5, r=2.0)
    got = dy.rho_prime(diag, dy.TangentPoint(0.1, 0.1, 0.0))
    assert got == pytest.approx(math.log(1.5) - 0.5 * math.log(3), abs=1e-15)
    cat = make_cat()
    xh = dy.TangentPoint(0.3, 0.3, 0.5)
    base = dy.rho(cat, xh)
    gaps = [abs(dy.rho_prime(cat, xh, r) - base) for r in (2, 10, 100, 1000)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert dy.rho_prime(cat, xh, math.inf) == base


def test_smoothness_order_must_exceed_one():
    with pytest.raises(ValueError):
        make_cat(r=1.0)


def test_lambda_plus_series_examples():
    grid = dy.grid_points(dy.Domain.torus(), 4)
    s = dy.lambda_plus_series(make_cat(), grid, 20)
    want = [oracles.cat_log_norm(n) / n for n in range(1, 21)]
    assert np.allclose(s.values, want, rtol=0, atol=1e-13)
    assert abs(s.diagnostics["fit_rate"] - oracles.GOLDEN_LOG) < 1e-3
    assert np.all(dy.lambda_plus_series(make_identity(), grid, 10).values == 0)
    diag = make_diag_linear(1.5)
    box = dy.grid_points(diag.domain, 4)
    assert np.allclose(dy.lambda_plus_series(diag, box, 12).values, math.log(3), atol=1e-15)


def test_log_norm_table_renormalization_long_orbits():
    # 400 steps of the cat map overflows a raw product; the renormalized log must not
    pts = dy.grid_points(dy.Domain.torus(), 3)
    table = dy.log_norm_table(make_cat(), pts, [400])
    assert np.allclose(table[0], 400 * oracles.GOLDEN_LOG, rtol=1e-12)


def test_domain_distance_wraps_on_torus():
    d = dy.Domain.torus()
    assert d.distance(np.array([0.05, 0.5]), np.array([0.95, 0.5])) == pytest.approx(0.1)
    assert d.distance(np.array([0.0, 0.0]), np.array([0.5, 0.5])) == pytest.approx(math.sqrt(0.5))


def test_refine_periodic_point():
    cat = make_cat()
    z = dy.refine_periodic_point(cat, np.array([0.38, 0.21]), 2)
    assert float(cat.domain.distance(cat.iterate(z, 2), z)) < 1e-12
