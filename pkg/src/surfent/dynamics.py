"""Surface maps, tangent cocycles and the projective lift.

Points are plain numpy arrays of shape ``(2,)`` or ``(N, 2)`` holding chart
coordinates ``(u, v)``.  Two flat domains are supported: the unit torus
(coordinates mod 1) and planar rectangles with identity chart.  All rates are
in nats per iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .parallel import chunked_map
from .series import GrowthSeries

Array = np.ndarray


class DomainEscapeError(ValueError):
    """An orbit left a planar box domain."""

    def __init__(self, step: int, count: int = 1):
        self.step = step
        self.count = count
        super().__init__(f"orbit left the domain at step {step} ({count} point(s))")


@dataclass(frozen=True)
class Domain:
    kind: str  # "torus" | "box"
    lo: Tuple[float, float] = (0.0, 0.0)
    hi: Tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("torus", "box"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "torus" and (tuple(self.lo) != (0.0, 0.0) or tuple(self.hi) != (1.0, 1.0)):
            raise ValueError("torus domain is the unit square")
        if not (self.hi[0] > self.lo[0] and self.hi[1] > self.lo[1]):
            raise ValueError("empty domain")

    @classmethod
    def torus(cls) -> "Domain":
        return cls("torus")

    @classmethod
    def box(cls, lo, hi) -> "Domain":
        return cls("box", (float(lo[0]), float(lo[1])), (float(hi[0]), float(hi[1])))

    @property
    def is_torus(self) -> bool:
        return self.kind == "torus"

    @property
    def width(self) -> float:
        return self.hi[0] - self.lo[0]

    @property
    def height(self) -> float:
        return self.hi[1] - self.lo[1]

    @property
    def area(self) -> float:
        return self.width * self.height

    def canonical(self, pts: Array) -> Array:
        pts = np.asarray(pts, dtype=float)
        if not self.is_torus:
            return pts
        out = pts - np.floor(pts)
        # x - floor(x) can round up to exactly 1.0 for tiny negative x
        out[out >= 1.0] = 0.0
        return out

    def contains(self, pts: Array) -> Array:
        pts = np.asarray(pts, dtype=float)
        if self.is_torus:
            return np.all(np.isfinite(pts), axis=-1)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return np.all((pts >= lo) & (pts <= hi), axis=-1)

    def displacement(self, a: Array, b: Array) -> Array:
        """b - a, using the minimal representative on the torus."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.is_torus:
            d = d - np.round(d)
        return d

    def distance(self, a: Array, b: Array) -> Array:
        d = self.displacement(a, b)
        return np.hypot(d[..., 0], d[..., 1])


@dataclass(frozen=True)
class TangentPoint:
    """A point of the projective tangent bundle: base point and direction class."""

    u: float
    v: float
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", float(self.angle) % math.pi)

    @property
    def base(self) -> Array:
        return np.array([self.u, self.v])

    @property
    def direction(self) -> Array:
        return np.array([math.cos(self.angle), math.sin(self.angle)])


@dataclass(frozen=True)
class SurfaceSystem:
    """A closed-form surface diffeomorphism.

    ``map_fn``, ``inverse_fn`` and ``jacobian_fn`` act on arrays of shape
    ``(..., 2)`` and must not reduce coordinates mod 1; wrapping is done here.
    """

    name: str
    map_fn: Callable[[Array], Array]
    inverse_fn: Callable[[Array], Array]
    jacobian_fn: Callable[[Array], Array]
    domain: Domain
    smoothness_order: float = math.inf
    known_entropy: Optional[float] = None
    known_lambda: Optional[float] = None
    periodic_sources: Tuple[Tuple[Tuple[float, float], int], ...] = ()
    params: Dict[str, float] = field(default_factory=dict)
    constant_jacobian: bool = False
    norm_grid: int = 64

    def __post_init__(self):
        if not self.smoothness_order > 1:
            raise ValueError("smoothness order r must exceed 1")

    def step(self, pts: Array) -> Array:
        """One application of f, wrapped on the torus, never domain-checked."""
        return self.domain.canonical(self.map_fn(np.asarray(pts, dtype=float)))

    def inverse_step(self, pts: Array) -> Array:
        return self.domain.canonical(self.inverse_fn(np.asarray(pts, dtype=float)))

    def forward(self, pts: Array) -> Array:
        """One application of f; raises DomainEscapeError off a box domain."""
        y = self.step(pts)
        bad = ~self.domain.contains(y)
        if np.any(bad):
            raise DomainEscapeError(1, int(np.sum(bad)))
        return y

    def inverse(self, pts: Array) -> Array:
        y = self.inverse_step(pts)
        bad = ~self.domain.contains(y)
        if np.any(bad):
            raise DomainEscapeError(1, int(np.sum(bad)))
        return y

    def jacobian(self, pts: Array) -> Array:
        return self.jacobian_fn(np.asarray(pts, dtype=float))

    def iterate(self, pts: Array, n: int) -> Array:
        x = np.asarray(pts, dtype=float)
        for _ in range(n):
            x = self.step(x)
        return x

    def orbit(self, x: Array, n: int) -> Array:
        """Array of shape (n+1, ..., 2) holding x, f x, ..., f^n x (unchecked)."""
        x = np.asarray(x, dtype=float)
        out = np.empty((n + 1,) + x.shape)
        out[0] = x
        for k in range(n):
            out[k + 1] = self.step(out[k])
        return out

    @cached_property
    def norm_bounds(self) -> Tuple[float, float]:
        """Grid maxima of ||Df_x|| and ||(Df_x)^{-1}||: lower bounds on the sups."""
        pts = grid_points(self.domain, self.norm_grid)
        J = self.jacobian(pts)
        fwd = operator_norm(J)
        inv = operator_norm(inverse_2x2(J))
        return float(np.max(fwd)), float(np.max(inv))

    @property
    def r(self) -> float:
        return self.smoothness_order

    def with_order(self, r: float) -> "SurfaceSystem":
        from dataclasses import replace
        return replace(self, smoothness_order=r)


def grid_points(domain: Domain, density: int) -> Array:
    """Cell-centred uniform grid, ``density`` points per axis."""
    s = (np.arange(density) + 0.5) / density
    u = domain.lo[0] + domain.width * s
    v = domain.lo[1] + domain.height * s
    U, V = np.meshgrid(u, v, indexing="ij")
    return np.column_stack([U.ravel(), V.ravel()])


# ----------------------------------------------------------------------------
# 2x2 linear algebra on stacked arrays, written out elementwise so results do
# not depend on BLAS dispatch or chunking.

def matmul_2x2(A: Array, B: Array) -> Array:
    out = np.empty(np.broadcast_shapes(A.shape, B.shape))
    out[..., 0, 0] = A[..., 0, 0] * B[..., 0, 0] + A[..., 0, 1] * B[..., 1, 0]
    out[..., 0, 1] = A[..., 0, 0] * B[..., 0, 1] + A[..., 0, 1] * B[..., 1, 1]
    out[..., 1, 0] = A[..., 1, 0] * B[..., 0, 0] + A[..., 1, 1] * B[..., 1, 0]
    out[..., 1, 1] = A[..., 1, 0] * B[..., 0, 1] + A[..., 1, 1] * B[..., 1, 1]
    return out


def matvec_2x2(A: Array, v: Array) -> Array:
    out = np.empty(np.broadcast_shapes(A.shape[:-1], v.shape))
    out[..., 0] = A[..., 0, 0] * v[..., 0] + A[..., 0, 1] * v[..., 1]
    out[..., 1] = A[..., 1, 0] * v[..., 0] + A[..., 1, 1] * v[..., 1]
    return out


def inverse_2x2(A: Array) -> Array:
    det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    out = np.empty_like(A)
    out[..., 0, 0] = A[..., 1, 1] / det
    out[..., 0, 1] = -A[..., 0, 1] / det
    out[..., 1, 0] = -A[..., 1, 0] / det
    out[..., 1, 1] = A[..., 0, 0] / det
    return out


def operator_norm(J: Array) -> Array | float:
    """Largest singular value of a 2x2 matrix (or a stack of them).

    Uses sigma_max = (|(a+d, b-c)| + |(a-d, b+c)|)/2, which has no cancellation.
    """
    J = np.asarray(J, dtype=float)
    a, b, c, d = J[..., 0, 0], J[..., 0, 1], J[..., 1, 0], J[..., 1, 1]
    s = 0.5 * (np.hypot(a + d, b - c) + np.hypot(a - d, b + c))
    return float(s) if np.ndim(s) == 0 else s


def identity_stack(n: int) -> Array:
    out = np.zeros((n, 2, 2))
    out[:, 0, 0] = 1.0
    out[:, 1, 1] = 1.0
    return out


# ----------------------------------------------------------------------------

def cocycle_jacobian(system: SurfaceSystem, x: Array, n: int, check_domain: bool = True) -> Array:
    """Df^n_x = Df_{f^{n-1}x} ... Df_x for one point (2,) or a stack (N, 2)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if check_domain and not np.all(system.domain.contains(pts)):
        raise DomainEscapeError(0)
    M = identity_stack(len(pts))
    for k in range(n):
        M = matmul_2x2(system.jacobian(pts), M)
        if k + 1 < n:
            pts = system.step(pts)
            if check_domain:
                bad = ~system.domain.contains(pts)
                if np.any(bad):
                    raise DomainEscapeError(k + 1, int(np.sum(bad)))
    return M[0] if single else M


def log_norm_table(system: SurfaceSystem, pts: Array, n_list: Sequence[int],
                   check_domain: bool = True) -> Array:
    """log ||Df^n_x|| for every n in ``n_list`` and every row of ``pts``.

    The cocycle is accumulated once along each orbit with per-step
    renormalization (running log-scale times a unit-size matrix), so horizons
    far beyond float range are fine.  Entries whose orbit left a box domain
    before the Jacobian at step n-1 was needed are NaN.
    """
    n_list = [int(k) for k in n_list]
    if any(k < 0 for k in n_list) or list(n_list) != sorted(set(n_list)):
        raise ValueError("n_list must be strictly increasing and non-negative")
    pts = np.atleast_2d(np.asarray(pts, dtype=float))

    def work(lo: int, hi: int) -> Array:
        x = pts[lo:hi]
        m = len(x)
        out = np.full((len(n_list), m), np.nan)
        M = identity_stack(m)
        scale = np.zeros(m)
        alive = system.domain.contains(x) if check_domain else np.ones(m, dtype=bool)
        j = 0
        if n_list and n_list[0] == 0:
            out[0] = np.where(alive, 0.0, np.nan)
            j = 1
        k = 0
        while j < len(n_list):
            M = matmul_2x2(system.jacobian(x), M)
            s = np.max(np.abs(M), axis=(1, 2))
            s[s == 0] = 1.0
            M /= s[:, None, None]
            scale += np.log(s)
            k += 1
            if k == n_list[j]:
                out[j] = np.where(alive, scale + np.log(operator_norm(M)), np.nan)
                j += 1
            x = system.step(x)
            if check_domain:
                alive &= system.domain.contains(x)
        return out

    parts = chunked_map(work, len(pts))
    return np.concatenate(parts, axis=1) if parts else np.empty((len(n_list), 0))


def lift_step(system: SurfaceSystem, xh: TangentPoint) -> TangentPoint:
    """Canonical lift: (x, [v]) -> (f x, [Df_x v])."""
    x = xh.base
    w = matvec_2x2(system.jacobian(x), xh.direction)
    y = system.forward(x)
    return TangentPoint(y[0], y[1], math.atan2(w[1], w[0]))


def rho(system: SurfaceSystem, xh: TangentPoint) -> float:
    """log ||Df_x v|| for the unit vector v at the stored angle."""
    w = matvec_2x2(system.jacobian(xh.base), xh.direction)
    return float(np.log(np.hypot(w[0], w[1])))


def rho_prime(system: SurfaceSystem, xh: TangentPoint, r: Optional[float] = None) -> float:
    """rho minus (1/r) log ||Df_x||."""
    r = system.smoothness_order if r is None else r
    corr = 0.0 if math.isinf(r) else math.log(operator_norm(system.jacobian(xh.base))) / r
    return rho(system, xh) - corr


@dataclass
class TangentOrbit:
    """Vectorized lifted orbits of N seeds over n steps."""

    points: Array      # (N, n+1, 2)
    angles: Array      # (N, n+1)
    rho: Array         # (N, n)   log ||Df v|| along the lift
    log_norm: Array    # (N, n)   log ||Df|| at f^i x


def tangent_orbit(system: SurfaceSystem, pts: Array, angles: Array, n: int) -> TangentOrbit:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    ang = np.atleast_1d(np.asarray(angles, dtype=float)) % math.pi
    N = len(pts)
    P = np.empty((N, n + 1, 2))
    A = np.empty((N, n + 1))
    R = np.empty((N, n))
    LN = np.empty((N, n))
    P[:, 0], A[:, 0] = pts, ang
    x, a = pts, ang
    for i in range(n):
        J = system.jacobian(x)
        v = np.column_stack([np.cos(a), np.sin(a)])
        w = matvec_2x2(J, v)
        R[:, i] = np.log(np.hypot(w[:, 0], w[:, 1]))
        LN[:, i] = np.log(operator_norm(J))
        a = np.arctan2(w[:, 1], w[:, 0]) % math.pi
        x = system.step(x)
        P[:, i + 1], A[:, i + 1] = x, a
    return TangentOrbit(P, A, R, LN)


def lambda_plus_series(system: SurfaceSystem, sample_points: Array, n_max: int,
                       n_list: Optional[Sequence[int]] = None) -> GrowthSeries:
    """b_n = (1/n) max_x log ||Df^n_x|| over a deterministic sample.

    The headline rate is the Fekete infimum min_n b_n (the max-log sequence
    is sub-additive); the 1/n fit is kept in the diagnostics.
    """
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if pts.size == 0:
        raise ValueError("empty sample grid")
    n_list = list(range(1, n_max + 1)) if n_list is None else list(n_list)
    table = log_norm_table(system, pts, n_list, check_domain=False)
    b = np.max(table, axis=1) / np.asarray(n_list, dtype=float)
    return GrowthSeries.from_values(n_list, b, method="fekete")


def refine_periodic_point(system: SurfaceSystem, seed: Array, period: int,
                          tol: float = 1e-13, max_iter: int = 50) -> Array:
    """Newton polish of a user-supplied periodic seed: solve f^p(x) = x."""
    x = np.asarray(seed, dtype=float).copy()
    for _ in range(max_iter):
        y = system.iterate(x, period)
        F = system.domain.displacement(x, y)
        if np.hypot(*F) < tol:
            break
        J = cocycle_jacobian(system, x, period, check_domain=False) - np.eye(2)
        x = system.domain.canonical(x - np.linalg.solve(J, F))
    return x
