"""Fast deterministic invariant suite behind ``surfent selftest``.

Each check returns (name, passed, detail).  Sizes are reduced versions of
the acceptance runs so the whole suite finishes in seconds.
"""

from __future__ import annotations

import math
from typing import Callable, List, Tuple

import numpy as np

from .bounds import greedy_separated_set, greedy_spanning_set, is_separated, is_spanning, random_cloud
from .cocycle import SamplePlan, cocycle_algebra_audit, integral_reports
from .curves import (arc_length, decompose_eps_bounded, horizontal_loop, is_eps_bounded,
                     piece_count, random_admissible_curve, segment)
from .oscillator import AUDIT_GRID, A_HIGH, A_LOW, cos_integral_audit, theoretical_rate
from .times import (expand_times, gap_audit_values, geometric_times_bruteforce,
                    geometric_times_from_values)
from .zoo import builtin_systems, inverse_error, jacobian_fd_error, make_cat

Result = Tuple[str, bool, str]


def _cat_exact() -> Result:
    cat = make_cat()
    n = list(range(1, 21))
    reps = integral_reports(cat, SamplePlan("grid", density=8), n)
    M = np.array([[2.0, 1.0], [1.0, 1.0]])
    err = max(abs(r.log_of_mean - math.log(np.linalg.norm(np.linalg.matrix_power(M, r.n), 2)))
              for r in reps)
    return "cat_cocycle_exact", err <= 1e-12, f"max error {err:.3g}"


def _jensen(seed: int) -> Result:
    worst, const_gap = math.inf, 0.0
    for sys in builtin_systems().values():
        plan = SamplePlan("stratified", count=2500, seed=seed)
        for r in integral_reports(sys, plan, [1, 2, 4, 8], check_domain=False):
            worst = min(worst, r.jensen_gap)
            if sys.constant_jacobian:
                const_gap = max(const_gap, abs(r.jensen_gap))
    ok = worst >= -1e-12 and const_gap <= 1e-12
    return "jensen_ordering", ok, f"min gap {worst:.3g}, constant-Jacobian gap {const_gap:.3g}"


def _geometric(seed: int) -> Result:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(200):
        k = int(rng.integers(1, 201))
        r = rng.normal(1.0, 1.0, k)
        if rng.random() < 0.3:
            r = np.round(r * 4) / 4       # exercise ties
        E = geometric_times_from_values(r)
        if E != geometric_times_bruteforce(r) or not gap_audit_values(r, E):
            bad += 1
    return "geometric_times_oracle", bad == 0, f"{bad} mismatches in 200"


def _expand() -> Result:
    cases = [(([2, 5, 6, 20], 3), [2, 3, 4, 5, 6, 20]),
             (([0, 4], 4), [0, 1, 2, 3, 4]),
             (([1, 3, 9], 0), [1, 3, 9]),
             (([], 5), [])]
    ok = all(expand_times(E, L) == want for (E, L), want in cases)
    return "expand_times", ok, f"{len(cases)} cases"


def _decomposition(seed: int) -> Result:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(10):
        c = random_admissible_curve(rng)
        for eps in (1 / 100, 1 / 250):
            pieces = decompose_eps_bounded(c, eps)
            if len(pieces) != piece_count(eps) or not all(is_eps_bounded(p, eps) for p in pieces):
                bad += 1
    return "decomposition_contract", bad == 0, f"{bad} failures in 20"


def _algebra(seed: int) -> Result:
    worst = 0.0
    for sys in builtin_systems().values():
        a = cocycle_algebra_audit(sys, count=1000, seed=seed)
        worst = max(worst, a.max_composition_error, a.max_submult_excess)
    return "cocycle_algebra", worst <= 1e-9, f"max defect {worst:.3g}"


def _sandwich(seed: int) -> Result:
    cat = make_cat()
    cloud = random_cloud(cat.domain, 1000, seed)
    bad = 0
    for eps in (0.2, 0.1):
        for n in (1, 2, 3, 4):
            sep = greedy_separated_set(cat, cloud, n, eps)
            span = greedy_spanning_set(cat, cloud, n, eps)
            span_half = greedy_spanning_set(cat, cloud, n, eps / 2)
            ok = (is_separated(cat, sep.points, n, eps)
                  and is_spanning(cat, cloud[span], cloud, n, eps)
                  and len(span) <= len(sep) <= len(span_half))
            bad += not ok
    return "packing_covering_sandwich", bad == 0, f"{bad} failures in 8"


def _calculus() -> Result:
    fails = [g for g in AUDIT_GRID if not cos_integral_audit(*g).passed]
    return "cos_integral_sweep", not fails, f"{len(fails)} failures in {len(AUDIT_GRID)}"


def _rate_shape() -> Result:
    lo = abs(theoretical_rate(A_LOW) - math.log(3) / 5)
    hi = abs(theoretical_rate(A_HIGH * (1 - 1e-12)))
    zero = theoretical_rate(1.5) == 0.0
    ok = lo < 1e-12 and hi < 1e-9 and zero
    return "theoretical_rate_shape", ok, f"jump at 3^(1/5) {lo:.3g}, at 3^(1/4) {hi:.3g}"


def _arc_length() -> Result:
    cat = make_cat()
    errs = []
    for n in (1, 3, 6):
        got = arc_length(cat, horizontal_loop(0.3), n, 1e-9)
        M = np.linalg.matrix_power(np.array([[2.0, 1.0], [1.0, 1.0]]), n)
        errs.append(abs(got / np.hypot(*M[:, 0]) - 1))
    shear_len = arc_length(builtin_systems()["shear"], segment((0.1, 0.2), (0.1, 0.7)), 4, 1e-9)
    errs.append(abs(shear_len / math.hypot(4 * 0.5, 0.5) - 1))
    worst = max(errs)
    return "arc_length_exact", bool(worst <= 1e-9), f"max relative error {worst:.3g}"


def _derivatives(seed: int) -> Result:
    rng = np.random.default_rng(seed)
    worst_fd, worst_inv = 0.0, 0.0
    for sys in builtin_systems().values():
        d = sys.domain
        pts = np.asarray(d.lo) + (0.1 + 0.8 * rng.random((64, 2))) * np.array([d.width, d.height])
        worst_fd = max(worst_fd, jacobian_fd_error(sys, pts))
        worst_inv = max(worst_inv, inverse_error(sys, pts))
    ok = worst_fd <= 1e-6 and worst_inv <= 1e-10
    return "jacobian_and_inverse", ok, f"fd {worst_fd:.3g}, inverse {worst_inv:.3g}"


def run_selftest(seed: int = 0) -> List[Result]:
    checks: List[Tuple[str, Callable[[], Result]]] = [
        ("cat_cocycle_exact", _cat_exact),
        ("jensen_ordering", lambda: _jensen(seed)),
        ("geometric_times_oracle", lambda: _geometric(seed)),
        ("expand_times", _expand),
        ("decomposition_contract", lambda: _decomposition(seed)),
        ("cocycle_algebra", lambda: _algebra(seed)),
        ("packing_covering_sandwich", lambda: _sandwich(seed)),
        ("cos_integral_sweep", _calculus),
        ("theoretical_rate_shape", _rate_shape),
        ("arc_length_exact", _arc_length),
        ("jacobian_and_inverse", lambda: _derivatives(seed)),
    ]
    out = []
    for name, chk in checks:
        try:
            _, ok, detail = chk()
            out.append((name, bool(ok), detail))
        except Exception as exc:          # a crash is a failed check
            out.append((name, False, f"{type(exc).__name__}: {exc}"))
    return out
