"""Area integrals of the tangent cocycle.

a_n = (1/n) log of the area-mean of ||Df^n_x|| and c_n = (1/n) mean of
log ||Df^n_x||, both from a single pass per sample point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .curves import arc_length, segment
from .dynamics import Domain, SurfaceSystem, grid_points, log_norm_table
from .series import GrowthSeries

Array = np.ndarray
ESCAPE_LIMIT = 0.10


class AuditFailure(AssertionError):
    pass


@dataclass(frozen=True)
class SamplePlan:
    """Deterministic sample of a region with equal weights summing to its area.

    ``scheme="grid"`` uses ``density`` cell centres per axis;
    ``scheme="stratified"`` draws one uniform point in each of ``m x m``
    cells, m = ceil(sqrt(count)), from a seeded generator.
    """

    scheme: str = "grid"
    density: int = 200
    count: int = 40000
    seed: int = 0
    region: Optional[Tuple[Tuple[float, float], Tuple[float, float]]] = None

    def __post_init__(self):
        if self.scheme not in ("grid", "stratified"):
            raise ValueError(f"unknown sampling scheme {self.scheme!r}")
        if self.density < 1 or self.count < 1:
            raise ValueError("sample sizes must be positive")

    def box(self, domain: Domain) -> Domain:
        if self.region is None:
            return domain
        lo, hi = self.region
        if not (hi[0] > lo[0] and hi[1] > lo[1]):
            raise ValueError("sample region is empty")
        return Domain.box(lo, hi)

    def points(self, domain: Domain) -> Tuple[Array, Array]:
        box = self.box(domain)
        if self.scheme == "grid":
            pts = grid_points(box, self.density)
        else:
            m = math.ceil(math.sqrt(self.count))
            rng = np.random.default_rng(self.seed)
            i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
            jitter = rng.random((m * m, 2))
            s = (np.column_stack([i.ravel(), j.ravel()]) + jitter) / m
            pts = np.asarray(box.lo) + s * np.array([box.width, box.height])
        w = np.full(len(pts), box.area / len(pts))
        return pts, w

    def doubled(self) -> "SamplePlan":
        from dataclasses import replace
        return replace(self, density=2 * self.density, count=4 * self.count)


@dataclass
class IntegralReport:
    n: int
    log_of_mean: float
    mean_of_log: float
    jensen_gap: float
    samples: int
    escapes: int
    quad_error: float = 0.0          # 3-sigma sampling error of log_of_mean
    flags: List[str] = field(default_factory=list)

    @property
    def reliable(self) -> bool:
        return "unreliable" not in self.flags

    def row(self):
        return [self.n, self.log_of_mean, self.mean_of_log, self.jensen_gap,
                self.samples, self.escapes]


CSV_HEADER = ["n", "log_of_mean", "mean_of_log", "jensen_gap", "samples", "escapes"]


def write_reports_csv(reports: Sequence[IntegralReport], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in reports:
            w.writerow([r.n, f"{r.log_of_mean:.17g}", f"{r.mean_of_log:.17g}",
                        f"{r.jensen_gap:.17g}", r.samples, r.escapes])


def _reduce(n: int, logs: Array, weights: Array) -> IntegralReport:
    alive = np.isfinite(logs)
    k = int(np.sum(alive))
    if k == 0:
        raise ValueError(f"all samples escaped the domain by n={n}")
    x, w = logs[alive], weights[alive]
    W = float(np.sum(w))
    wn = w / W
    m = float(np.max(x))
    ratio = np.exp(x - m)
    # divide once by the total weight so constant integrands reduce exactly
    mean_ratio = float(np.sum(w * ratio)) / W
    log_of_mean = m + math.log(mean_ratio)
    mean_of_log = float(np.sum(w * x)) / W
    gap = log_of_mean - mean_of_log
    sd = float(np.sqrt(np.sum(wn * (ratio - mean_ratio) ** 2)))
    qerr = 3.0 * sd / (mean_ratio * math.sqrt(k))
    escapes = len(logs) - k
    flags = ["unreliable"] if escapes > ESCAPE_LIMIT * len(logs) else []
    return IntegralReport(n, log_of_mean, mean_of_log, gap, k, escapes, qerr, flags)


def integral_reports(system: SurfaceSystem, plan: SamplePlan, n_list: Sequence[int],
                     check_domain: bool = True) -> List[IntegralReport]:
    """One IntegralReport per n from a single cocycle pass per sample point.

    ``check_domain=False`` keeps orbits that leave a planar box (the integrand
    is then the pure closed-form cocycle).
    """
    n_list = [int(k) for k in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])) or n_list[0] < 1:
        raise ValueError("n_list must be non-empty, increasing and >= 1")
    pts, w = plan.points(system.domain)
    table = log_norm_table(system, pts, n_list, check_domain=check_domain)
    return [_reduce(n, table[i], w) for i, n in enumerate(n_list)]


def _series(reports: Sequence[IntegralReport], attr: str, method: str) -> GrowthSeries:
    n = [r.n for r in reports]
    vals = [getattr(r, attr) / r.n for r in reports]
    flags = [f"unreliable@n={r.n}" for r in reports if not r.reliable]
    s = GrowthSeries.from_values(n, vals, method=method, flags=flags)
    s.diagnostics["max_quad_error"] = max(r.quad_error / r.n for r in reports)
    return s


def integral_norm_growth(system: SurfaceSystem, plan: SamplePlan, n_list: Sequence[int],
                         method: str = "fit", check_domain: bool = True) -> GrowthSeries:
    """a_n = (1/n) log of the area-mean of ||Df^n||."""
    return _series(integral_reports(system, plan, n_list, check_domain), "log_of_mean", method)


def integral_log_norm_growth(system: SurfaceSystem, plan: SamplePlan, n_list: Sequence[int],
                             method: str = "fit", check_domain: bool = True) -> GrowthSeries:
    """c_n = (1/n) area-mean of log ||Df^n||."""
    return _series(integral_reports(system, plan, n_list, check_domain), "mean_of_log", method)


def jensen_audit(system: SurfaceSystem, plan: SamplePlan, n: int,
                 check_domain: bool = True) -> IntegralReport:
    if n < 1:
        raise ValueError("n must be >= 1")
    rep = integral_reports(system, plan, [n], check_domain)[0]
    if rep.jensen_gap < -1e-12:
        raise AuditFailure(f"Jensen ordering violated at n={n}: gap {rep.jensen_gap:.3g}")
    return rep


@dataclass
class FubiniAudit:
    n: int
    lhs: float
    rhs: float
    max_horizontal: float
    max_vertical: float
    holds: bool


def fubini_line_bound_audit(system: SurfaceSystem, n: int, line_count: int = 9,
                            box=None, density: int = 64, tol: float = 1e-6,
                            curve_tol: float = 1e-8) -> FubiniAudit:
    """Area-mean of ||Df^n|| over a box against 2 max line-length / side.

    The map is iterated as a closed form without domain checks, so image
    lines may leave the box.
    """
    if system.domain.is_torus:
        raise ValueError("the line bound audit is for planar box systems")
    if n < 0 or line_count < 1:
        raise ValueError("need n >= 0 and at least one line")
    if box is None:
        box = (system.domain.lo, system.domain.hi)
    (u0, v0), (u1, v1) = box
    plan = SamplePlan("grid", density=density, region=((u0, v0), (u1, v1)))
    pts, w = plan.points(system.domain)
    logs = log_norm_table(system, pts, [n], check_domain=False)[0]
    lhs = float(np.sum(w * np.exp(logs)) / np.sum(w))
    W, H = u1 - u0, v1 - v0
    heights = v0 + H * (np.arange(line_count) + 0.5) / line_count
    cols = u0 + W * (np.arange(line_count) + 0.5) / line_count
    mh = max(arc_length(system, segment((u0, y), (u1, y)), n, curve_tol) for y in heights)
    mv = max(arc_length(system, segment((x, v0), (x, v1)), n, curve_tol) for x in cols)
    rhs = 2.0 * max(mh / W, mv / H)
    holds = lhs <= rhs * (1 + tol)
    if not holds:
        raise AuditFailure(f"line bound violated at n={n}: {lhs:.6g} > {rhs:.6g}")
    return FubiniAudit(n, lhs, rhs, mh, mv, holds)


def locality_audit(system: SurfaceSystem, plan: SamplePlan, n_list: Sequence[int],
                   region, method: str = "fit",
                   check_domain: bool = True) -> Tuple[GrowthSeries, GrowthSeries]:
    """Growth of the norm integral over a sub-rectangle U and over the whole domain."""
    from dataclasses import replace
    (u0, v0), (u1, v1) = region
    if not (u1 > u0 and v1 > v0):
        raise ValueError("sub-region U is empty")
    dom = system.domain
    if not (u0 >= dom.lo[0] and v0 >= dom.lo[1] and u1 <= dom.hi[0] and v1 <= dom.hi[1]):
        raise ValueError("sub-region U must lie in the domain")
    local = integral_norm_growth(system, replace(plan, region=region), n_list, method, check_domain)
    full = integral_norm_growth(system, replace(plan, region=None), n_list, method, check_domain)
    if system.constant_jacobian and abs(local.rate - full.rate) > 1e-9:
        raise AuditFailure("constant-Jacobian system with region-dependent rate")
    return local, full


@dataclass
class AlgebraAudit:
    system: str
    count: int
    max_composition_error: float     # max |D^{m+n} - D^n D^m| / max|D^{m+n}|
    max_submult_excess: float        # max ||D^{m+n}|| / (||D^n|| ||D^m||) - 1
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_composition_error <= self.tol and self.max_submult_excess <= self.tol


def cocycle_algebra_audit(system: SurfaceSystem, count: int = 10000, seed: int = 0,
                          max_m: int = 10, max_n: int = 10, tol: float = 1e-9) -> AlgebraAudit:
    """Check Df^{m+n}_x = Df^n_{f^m x} Df^m_x and norm sub-multiplicativity on random triples.

    Planar systems are evaluated as closed forms, without domain checks.
    """
    from .dynamics import identity_stack, matmul_2x2, operator_norm
    rng = np.random.default_rng(seed)
    dom = system.domain
    x = np.asarray(dom.lo) + rng.random((count, 2)) * np.array([dom.width, dom.height])
    m = rng.integers(0, max_m + 1, count)
    n = rng.integers(0, max_n + 1, count)
    total = m + n
    T = int(total.max())
    orbit = system.orbit(x, T)                       # (T+1, count, 2)
    J = np.stack([system.jacobian(orbit[k]) for k in range(T)]) if T else np.empty((0, count, 2, 2))
    full = identity_stack(count)
    head = identity_stack(count)                     # Df^m_x
    tail = identity_stack(count)                     # Df^n_{f^m x}
    for k in range(T):
        on = k < total
        full = np.where(on[:, None, None], matmul_2x2(J[k], full), full)
        in_head = k < m
        head = np.where(in_head[:, None, None], matmul_2x2(J[k], head), head)
        in_tail = (k >= m) & on
        tail = np.where(in_tail[:, None, None], matmul_2x2(J[k], tail), tail)
    prod = matmul_2x2(tail, head)
    scale = np.max(np.abs(full), axis=(1, 2))
    comp = float(np.max(np.max(np.abs(full - prod), axis=(1, 2)) / scale))
    ratio = operator_norm(full) / (operator_norm(tail) * operator_norm(head))
    return AlgebraAudit(system.name, count, comp, float(np.max(ratio) - 1.0), tol)
