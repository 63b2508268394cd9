"""Curves, arc length of iterated images, and epsilon-bounded pieces.

Image curves f^n(sigma) are resolved as polylines by adaptive bisection in
the parameter: an interval is split while its two-chord length exceeds the
one-chord length by a relative factor above ``tol``.  Accepted intervals
contribute their two-chord length.  On the torus the curve is followed in the
universal cover (``map_fn`` is a planar lift), so chords never alias across
the identification.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .dynamics import SurfaceSystem
from .series import GrowthSeries

Array = np.ndarray

MAX_VERTICES = 2 ** 22
MIN_WIDTH = 1e-12
SUP_SAMPLES = 4001
# orders checked when r is infinite; all shipped analytic bounds are
# non-increasing in s past this point
S_CAP = 32


class RefinementBudgetWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Curve:
    """A parametrized curve sigma: [0, 1] -> surface.

    ``deriv_sup(s)`` returns an upper bound on sup_t ||d^s sigma|| for s >= 2;
    ``speed_sup`` is an upper bound on sup_t ||d sigma|| when known.
    """

    position: Callable[[Array], Array]
    derivative: Callable[[Array], Array]
    deriv_sup: Optional[Callable[[int], float]] = None
    second_derivative: Optional[Callable[[Array], Array]] = None
    speed_sup: Optional[float] = None
    provenance: str = "analytic"
    name: str = ""

    def __call__(self, t):
        return self.position(np.atleast_1d(np.asarray(t, dtype=float)))

    def speeds(self, t: Optional[Array] = None) -> Array:
        t = np.linspace(0.0, 1.0, SUP_SAMPLES) if t is None else t
        d = self.derivative(np.atleast_1d(t))
        return np.hypot(d[:, 0], d[:, 1])


def _const(value: float):
    return lambda t: np.broadcast_to(np.asarray(value, dtype=float), (len(t), 2)).copy()


def segment(p0, p1) -> Curve:
    p0, p1 = np.asarray(p0, dtype=float), np.asarray(p1, dtype=float)
    d = p1 - p0
    return Curve(
        position=lambda t: p0 + np.outer(t, d),
        derivative=lambda t: np.broadcast_to(d, (len(t), 2)).copy(),
        deriv_sup=lambda s: 0.0,
        second_derivative=_const(0.0),
        speed_sup=float(np.hypot(*d)),
        name=f"segment({p0[0]:g},{p0[1]:g})->({p1[0]:g},{p1[1]:g})",
    )


def horizontal_loop(height: float) -> Curve:
    c = segment((0.0, height), (1.0, height))
    return Curve(c.position, c.derivative, c.deriv_sup, c.second_derivative,
                 c.speed_sup, name=f"hloop({height:g})")


def vertical_loop(u0: float) -> Curve:
    c = segment((u0, 0.0), (u0, 1.0))
    return Curve(c.position, c.derivative, c.deriv_sup, c.second_derivative,
                 c.speed_sup, name=f"vloop({u0:g})")


def sine_graph(freq: float, amp: float) -> Curve:
    """t -> (t, amp sin(freq t))."""
    return Curve(
        position=lambda t: np.column_stack([t, amp * np.sin(freq * t)]),
        derivative=lambda t: np.column_stack([np.ones_like(t), amp * freq * np.cos(freq * t)]),
        deriv_sup=lambda s: abs(amp) * abs(freq) ** s,
        second_derivative=lambda t: np.column_stack(
            [np.zeros_like(t), -amp * freq ** 2 * np.sin(freq * t)]),
        speed_sup=math.hypot(1.0, amp * freq),
        name=f"sine({freq:g},{amp:g})",
    )


def trig_curve(p, v, amp: float, omega: float, phase: float = 0.0) -> Curve:
    """p + v t + amp (sin(omega t + phase), cos(omega t + phase))."""
    p, v = np.asarray(p, dtype=float), np.asarray(v, dtype=float)

    def pos(t):
        a = omega * t + phase
        return p + np.outer(t, v) + amp * np.column_stack([np.sin(a), np.cos(a)])

    def der(t):
        a = omega * t + phase
        return v + amp * omega * np.column_stack([np.cos(a), -np.sin(a)])

    def der2(t):
        a = omega * t + phase
        return -amp * omega ** 2 * np.column_stack([np.sin(a), np.cos(a)])

    return Curve(pos, der, lambda s: abs(amp) * abs(omega) ** s, der2,
                 float(np.hypot(*v) + abs(amp * omega)), name="trig")


def random_admissible_curve(rng: np.random.Generator) -> Curve:
    """Random analytic curve with ||sigma||_{C^r} <= 1 and speed >= 1/2 for every r."""
    theta = rng.uniform(0, 2 * math.pi)
    speed = rng.uniform(0.65, 0.75)
    v = speed * np.array([math.cos(theta), math.sin(theta)])
    omega = rng.uniform(0.1, 1.0)
    amp = rng.uniform(0.0, 0.12) / omega
    return trig_curve(rng.uniform(0, 1, 2), v, amp, omega, rng.uniform(0, 2 * math.pi))


def reparametrize(curve: Curve, delta: float, b: float) -> Curve:
    """sigma o theta with theta(t) = delta t + b."""

    def pos(t):
        return curve.position(delta * np.asarray(t) + b)

    def der(t):
        return delta * curve.derivative(delta * np.asarray(t) + b)

    sup = None if curve.deriv_sup is None else (lambda s: delta ** s * curve.deriv_sup(s))
    d2 = None if curve.second_derivative is None else (
        lambda t: delta ** 2 * curve.second_derivative(delta * np.asarray(t) + b))
    ssup = None if curve.speed_sup is None else delta * curve.speed_sup
    return Curve(pos, der, sup, d2, ssup, curve.provenance, f"{curve.name}[{b:.6g}+{delta:.6g}t]")


def iterated_curve(system: SurfaceSystem, curve: Curve, n: int) -> Curve:
    """f^n o sigma with first derivative by the chain rule (no higher bounds)."""
    from .dynamics import cocycle_jacobian, matvec_2x2

    def der(t):
        x = curve.position(np.asarray(t, dtype=float))
        return matvec_2x2(cocycle_jacobian(system, x, n, check_domain=False), curve.derivative(t))

    return Curve(lambda t: image_points(system, curve, n, t), der,
                 provenance=f"iterated({curve.name},{n})", name=f"f^{n}({curve.name})")


# ----------------------------------------------------------------------------
# boundedness

def _orders(r: float) -> range:
    top = S_CAP if math.isinf(r) else int(math.floor(r))
    return range(2, top + 1)


def higher_sup(curve: Curve, r: float = 2.0) -> float:
    """max_{2 <= s <= r} sup ||d^s sigma|| (upper bound)."""
    orders = _orders(r)
    if len(orders) == 0:
        return 0.0
    if curve.deriv_sup is not None:
        return max(float(curve.deriv_sup(s)) for s in orders)
    if curve.second_derivative is not None and orders[-1] == 2:
        d2 = curve.second_derivative(np.linspace(0.0, 1.0, SUP_SAMPLES))
        return float(np.max(np.hypot(d2[:, 0], d2[:, 1])))
    raise ValueError(f"derivative bounds unavailable for orders up to {orders[-1]}")


def is_bounded(curve: Curve, r: float = 2.0) -> bool:
    """max_{2<=s<=r} ||d^s sigma|| <= ||d sigma|| / 6.

    When the curve is bounded, the consequence ||d sigma|| <= 2 ||d_t sigma||
    is checked on the sample grid and a violation raises.
    """
    speeds = curve.speeds()
    first = float(np.max(speeds))
    ok = higher_sup(curve, r) <= first / 6.0
    if ok and first > 2.0 * float(np.min(speeds)) * (1 + 1e-12):
        raise RuntimeError(f"bounded curve {curve.name!r} violates ||d sigma|| <= 2 ||d_t sigma||")
    return ok


def is_eps_bounded(curve: Curve, eps: float, r: float = 2.0) -> bool:
    first = curve.speed_sup if curve.speed_sup is not None else float(np.max(curve.speeds()))
    return is_bounded(curve, r) and first <= eps


def is_admissible(curve: Curve, r: float = 2.0) -> bool:
    """||sigma||_{C^r} <= 1 and ||d_t sigma|| >= 1/2 on the sample grid."""
    speeds = curve.speeds()
    first = curve.speed_sup if curve.speed_sup is not None else float(np.max(speeds))
    return first <= 1.0 + 1e-12 and higher_sup(curve, r) <= 1.0 + 1e-12 \
        and float(np.min(speeds)) >= 0.5


def decompose_eps_bounded(curve: Curve, eps: float, r: float = 2.0) -> List[Curve]:
    """Split an admissible curve into ceil(1/eps) affine pieces, each eps-bounded.

    Piece j (1-based) is sigma o theta_j with theta_j(t) = delta t + b_j,
    delta = 1/N, b_j = (j-1) delta for j < N and b_N = 1 - delta.
    """
    if not 0 < eps <= 0.01:
        raise ValueError("eps must lie in (0, 1/100]")
    if not is_admissible(curve, r):
        raise ValueError("curve is not admissible (C^r norm <= 1, speed >= 1/2)")
    N = piece_count(eps)
    delta = 1.0 / N
    return [reparametrize(curve, delta, b) for b in piece_offsets(N)]


def piece_count(eps: float) -> int:
    N = math.ceil(1.0 / eps)
    # guard against 1/eps landing a hair above an integer, e.g. 1/0.01
    if abs(1.0 / eps - round(1.0 / eps)) < 1e-9:
        N = round(1.0 / eps)
    return int(N)


def piece_offsets(N: int) -> Array:
    delta = 1.0 / N
    b = np.arange(N) * delta
    b[-1] = 1.0 - delta
    return b


# ----------------------------------------------------------------------------
# image polylines

@dataclass
class Polyline:
    t: Array
    points: Array        # planar, or lifted to the universal cover on the torus
    chords: Array        # per-segment chord lengths
    depth: int
    complete: bool
    tol: float
    wrapped: bool = False  # export coordinates mod 1

    @property
    def length(self) -> float:
        return float(np.sum(self.chords))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "u", "v"])
            pts = self.points - np.floor(self.points) if self.wrapped else self.points
            for t, (u, v) in zip(self.t, pts):
                w.writerow([f"{t:.17g}", f"{u:.17g}", f"{v:.17g}"])


def image_points(system: SurfaceSystem, curve: Curve, n: int, t: Array) -> Array:
    """f^n(sigma(t)) in the plane (lifted coordinates on the torus)."""
    x = curve.position(np.asarray(t, dtype=float))
    for _ in range(n):
        x = system.map_fn(x)
    return x


def image_polyline(system: SurfaceSystem, curve: Curve, n: int, tol: float = 1e-6,
                   max_vertices: int = MAX_VERTICES, init: int = 64,
                   min_width: float = MIN_WIDTH) -> Polyline:
    """Adaptively refined polyline of f^n o sigma.

    Planar systems are iterated without domain checks: the maps are global
    closed forms and boxes only bound sampling regions.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    def dist(a, b):
        d = b - a
        return np.hypot(d[:, 0], d[:, 1])

    t0 = np.linspace(0.0, 1.0, init + 1)
    P0 = image_points(system, curve, n, t0)
    lt, rt, lP, rP = t0[:-1], t0[1:], P0[:-1], P0[1:]
    c0 = dist(lP, rP)
    acc_t: List[Array] = [t0]
    acc_P: List[Array] = [P0]
    n_vertices = len(t0)
    depth = 0
    complete = True
    while len(lt):
        depth += 1
        mt = 0.5 * (lt + rt)
        mP = image_points(system, curve, n, mt)
        acc_t.append(mt)
        acc_P.append(mP)
        n_vertices += len(mt)
        c1 = dist(lP, mP)
        c2 = dist(mP, rP)
        need = (c1 + c2) > (1.0 + tol) * c0
        need &= (0.5 * (rt - lt)) >= min_width
        if not np.any(need):
            break
        if n_vertices + 2 * int(np.sum(need)) > max_vertices:
            complete = False
            break
        lt, rt = np.concatenate([lt[need], mt[need]]), np.concatenate([mt[need], rt[need]])
        lP, rP = np.concatenate([lP[need], mP[need]]), np.concatenate([mP[need], rP[need]])
        c0 = np.concatenate([c1[need], c2[need]])
    t = np.concatenate(acc_t)
    P = np.concatenate(acc_P)
    order = np.argsort(t, kind="stable")
    t, P = t[order], P[order]
    chords = dist(P[:-1], P[1:])
    return Polyline(t, P, chords, depth, complete, tol, system.domain.is_torus)


def _warn_partial(poly: Polyline, what: str):
    if not poly.complete:
        warnings.warn(f"{what}: refinement budget exhausted at depth {poly.depth}; "
                      "length is a partial (lower) estimate", RefinementBudgetWarning)


def arc_length(system: SurfaceSystem, curve: Curve, n: int, tol: float = 1e-6, **kw) -> float:
    """Vol(f^n(sigma)) from the refined image polyline."""
    poly = image_polyline(system, curve, n, tol, **kw)
    _warn_partial(poly, "arc_length")
    return poly.length


def clip_segments(A: Array, B: Array, lo, hi) -> Array:
    """Length of each segment [A_i, B_i] inside the box (Liang-Barsky)."""
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    d = B - A
    t0 = np.zeros(len(A))
    t1 = np.ones(len(A))
    outside = np.zeros(len(A), dtype=bool)
    for k in range(2):
        for p, q in ((-d[:, k], A[:, k] - lo[k]), (d[:, k], hi[k] - A[:, k])):
            par = p == 0
            outside |= par & (q < 0)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                r = q / p
            t0 = np.where(~par & (p < 0), np.maximum(t0, r), t0)
            t1 = np.where(~par & (p > 0), np.minimum(t1, r), t1)
    frac = np.where(outside, 0.0, np.clip(t1 - t0, 0.0, None))
    return frac * np.hypot(d[:, 0], d[:, 1])


def clipped_arc_length(system: SurfaceSystem, curve: Curve, n: int, box, tol: float = 1e-6,
                       **kw) -> float:
    """Length of f^n(sigma) inside ``box = ((u0, v0), (u1, v1))`` (planar systems)."""
    if system.domain.is_torus:
        raise ValueError("clipping is defined for planar systems")
    poly = image_polyline(system, curve, n, tol, **kw)
    _warn_partial(poly, "clipped_arc_length")
    P = poly.points
    return float(np.sum(clip_segments(P[:-1], P[1:], box[0], box[1])))


def curve_growth_series(system: SurfaceSystem, curve: Curve, n_list: Sequence[int],
                        tol: float = 1e-6, **kw) -> GrowthSeries:
    """(1/n) log Vol(f^n sigma) with the 1/n-fit rate."""
    vals, flags = [], []
    for n in n_list:
        if n < 1:
            raise ValueError("n must be >= 1")
        poly = image_polyline(system, curve, n, tol, **kw)
        if not poly.complete:
            flags.append(f"partial@n={n}")
        vals.append(math.log(poly.length) / n)
    return GrowthSeries.from_values(n_list, vals, method="fit", flags=flags)


def sup_curve_growth(system: SurfaceSystem, curves: Sequence[Curve], n_list: Sequence[int],
                     tol: float = 1e-6, r: float = 2.0, **kw) -> GrowthSeries:
    """(1/n) log max_sigma Vol(f^n sigma) over an explicit admissible family."""
    for c in curves:
        if not is_admissible(c, r):
            raise ValueError(f"curve {c.name!r} is not admissible")
    vals, flags = [], []
    for n in n_list:
        best = 0.0
        for c in curves:
            poly = image_polyline(system, c, n, tol, **kw)
            if not poly.complete:
                flags.append(f"partial@n={n}:{c.name}")
            best = max(best, poly.length)
        vals.append(math.log(best) / n)
    return GrowthSeries.from_values(n_list, vals, method="fit", flags=flags)
