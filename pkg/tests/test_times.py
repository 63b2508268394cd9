import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from surfent import times as tm
from surfent.curves import horizontal_loop
from surfent.dynamics import TangentPoint, rho
from surfent.zoo import builtin_systems, make_cat, make_diag_linear, make_identity, make_standard_map

import oracles

# dyadic values keep every partial sum exact in floating point, and give many ties
dyadic = st.lists(st.integers(-8, 12).map(lambda k: k / 4), min_size=1, max_size=60)


def test_geometric_examples():
    assert tm.geometric_times_from_values([1.5] * 7) == list(range(1, 8))
    assert tm.geometric_times_from_values([0.5] * 7) == []
    assert tm.geometric_times_from_values([2, 0, 2, 2]) == [1, 3, 4]


@settings(max_examples=300)
@given(dyadic, st.sampled_from([0.5, 1.0, 1.25]))
def test_geometric_matches_exact_oracle(r, tau):
    got = tm.geometric_times_from_values(r, tau)
    assert got == oracles.geometric_bruteforce(r, tau)
    assert got == tm.geometric_times_bruteforce(r, tau)
    assert tm.gap_audit_values(r, got, tau)


def test_geometric_matches_oracle_on_random_floats():
    rng = np.random.default_rng(4)
    for _ in range(300):
        r = rng.normal(1.0, 1.0, int(rng.integers(1, 201)))
        got = tm.geometric_times_from_values(r)
        assert got == oracles.geometric_bruteforce(r.tolist())
        assert tm.gap_audit_values(r, got)


def test_geometric_times_on_systems():
    cat = make_cat()
    assert tm.geometric_times(cat, TangentPoint(0.2, 0.3, 0.0), 20) == []
    assert tm.geometric_times(cat, TangentPoint(0.2, 0.3, 0.0), 20, tau=0.5) == list(range(1, 21))
    with pytest.raises(ValueError):
        tm.geometric_times(cat, TangentPoint(0.2, 0.3, 0.0), 0)


def test_expand_examples():
    assert tm.expand_times([2, 3, 7, 9], 2) == [2, 3, 7, 8, 9]
    assert tm.expand_times([], 3) == []
    with pytest.raises(ValueError):
        tm.expand_times([1], -1)
    with pytest.raises(ValueError):
        tm.expand_times([1, 12], 2, n=10)


def expand_oracle(E, L):
    out = set()
    for i in E:
        for j in E:
            if i <= j <= i + L:
                out.update(range(i, j + 1))
    return sorted(out)


@given(st.sets(st.integers(0, 80), max_size=25), st.integers(0, 12))
def test_expand_matches_pairwise_definition(E, L):
    got = tm.expand_times(E, L)
    assert got == expand_oracle(E, L)
    assert set(E) <= set(got)
    assert tm.expand_times(E, 0) == sorted(E)


def test_gap_audit_examples():
    r = [2, 0, 2, 2]
    E = tm.geometric_times_from_values(r)
    assert tm.gap_audit_values(r, E)
    assert math.fsum(r[1:2]) < 1
    assert tm.gap_audit_values([3, 3, 3], [1, 2, 3])
    assert not tm.gap_audit_values([3, 3, 3], [1, 3])


@pytest.mark.parametrize("name", sorted(builtin_systems()))
def test_gap_audit_random_orbits(name):
    s = builtin_systems()[name]
    rng = np.random.default_rng(11)
    d = s.domain
    for _ in range(500 // 10):
        x = np.asarray(d.lo) + (0.3 + 0.4 * rng.random(2)) * np.array([d.width, d.height])
        prof = tm.orbit_profile(s, TangentPoint(x[0], x[1], rng.uniform(0, math.pi)), 30, tau=0.5)
        assert tm.geometric_gap_audit(prof)


def test_trapping_examples():
    diag = make_diag_linear(1.5)
    radius = 0.01
    assert tm.trapping_time(diag, np.zeros(2), 5, radius) == 5
    assert tm.trapping_time(diag, np.array([0.5, 0.5]), 5, radius) == 0
    d = radius * 1.5 ** -3 * 0.99
    assert tm.trapping_time(diag, np.array([d, 0.0]), 10, radius) == 4


def test_trapping_default_radius():
    diag = make_diag_linear(1.5)
    assert tm.default_radius(diag) == pytest.approx(0.01 / 300)
    assert tm.trapping_time(make_cat(), np.array([0.1, 0.1]), 5) == 0


def test_quantized_examples():
    bp, bpp = tm.quantized_data(make_identity(), TangentPoint(0.1, 0.1, 0.3), 6)
    assert np.all(bp == 0) and np.all(bpp == 0)
    e2 = make_diag_linear(math.e ** 2, b=1.5)
    bp, _ = tm.quantized_data(e2, TangentPoint(0.0, 0.0, 0.0), 1)
    assert bp[0] == 2
    bp, bpp = tm.quantized_data(make_cat(), TangentPoint(0.2, 0.4, 0.1), 12)
    assert np.all(bp == 1)
    bp3, _ = tm.quantized_data(make_cat(), TangentPoint(0.2, 0.4, 0.1), 4, p=3)
    assert np.allclose(bp3, math.ceil(3 * oracles.GOLDEN_LOG) / 3)


def test_empirical_measure_examples():
    cat = make_cat()
    xh = TangentPoint(0.2, 0.4, 0.1)
    assert tm.empirical_measure(cat, xh, 8, range(8)).mass == pytest.approx(1.0)
    assert tm.empirical_measure(cat, xh, 8, []).mass == 0.0
    w, V = np.linalg.eigh(np.array([[2.0, 1.0], [1.0, 1.0]]))
    v = V[:, np.argmax(w)]
    fixed = TangentPoint(0.0, 0.0, math.atan2(v[1], v[0]))
    mu = tm.empirical_measure(cat, fixed, 6, [0, 2, 5])
    assert np.allclose(mu.points, 0.0, atol=1e-12)
    assert np.allclose(mu.angles, fixed.angle, atol=1e-12)
    mean_rho = mu.integrate(lambda P, A: np.array(
        [rho(cat, TangentPoint(p[0], p[1], a)) for p, a in zip(P, A)])) / mu.mass
    assert mean_rho == pytest.approx(rho(cat, fixed), abs=1e-12)


def test_alpha_examples():
    assert tm.alpha_fraction(range(20), 3, 10) == pytest.approx(7 / 10)
    assert tm.alpha_fraction([0, 1, 15], 3, 10) == 0
    assert tm.alpha_fraction([2, 3, 7, 8, 9], 3, 10) == pytest.approx(4 / 10)
    with pytest.raises(ValueError):
        tm.alpha_fraction([1], 5, 3)


@given(st.sets(st.integers(0, 50)), st.integers(1, 50), st.integers(0, 50))
def test_alpha_in_unit_interval(E, n, m):
    m = min(m, n)
    assert 0 <= tm.alpha_fraction(E, m, n) <= 1


def test_profile_csv_has_geometric_column():
    prof = tm.orbit_profile(make_cat(), TangentPoint(0.2, 0.3, 0.0), 50, L=2, tau=0.9)
    fh = io.StringIO()
    prof.to_csv_handle(fh)
    lines = fh.getvalue().splitlines()
    header = lines[0].split(",")
    assert "is_geometric" in header and len(lines) == 52
    col = header.index("is_geometric")
    flagged = [int(l.split(",")[0]) for l in lines[1:] if l.split(",")[col] == "1"]
    assert flagged == tm.geometric_times_from_values(prof.rho_prime, 0.9)


def test_convex_split_examples():
    cat = make_cat()
    rep = tm.convex_split_report(cat, horizontal_loop(0.3), 15, 2, oracles.GOLDEN_LOG,
                                 oracles.GOLDEN_LOG, samples=8, tau=0.5)
    assert rep.alpha > 0.9
    assert abs(rep.measured - oracles.GOLDEN_LOG) < 0.05
    ident = tm.convex_split_report(make_identity(), horizontal_loop(0.3), 6, 2, 0.0, 0.0, samples=4)
    assert ident.measured == 0.0 and ident.alpha == 0.0
    std = tm.convex_split_report(make_standard_map(6.0), horizontal_loop(0.3), 5, 2, 1.0, 1.0,
                                 samples=4, tol=1e-4)
    assert math.isfinite(std.residual)
