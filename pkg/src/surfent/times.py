"""Geometric, expanded and trapping times along lifted orbits.

Time indices follow the orbit: rho'_i is evaluated at the i-th lifted point,
i in [0, n), and geometric times live in [1, n].  With
S_j = sum_{i<j} (rho'_i - tau), m is geometric iff S_m >= S_k for every
k < m, which is the running-maximum form of
sum_{i=k}^{m-1} rho'_i >= tau (m - k) for all 0 <= k < m.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .curves import Curve, arc_length
from .dynamics import (SurfaceSystem, TangentPoint, cocycle_jacobian, matvec_2x2,
                       operator_norm, tangent_orbit)

Array = np.ndarray
EPS_CFG = 0.01


def geometric_mask(rho_prime: Sequence[float], tau: float = 1.0) -> Array:
    """Boolean array g with g[m-1] true iff m in [1, n] is geometric."""
    x = np.asarray(rho_prime, dtype=float) - tau
    S = np.concatenate([[0.0], np.cumsum(x)])
    prev_max = np.maximum.accumulate(S)[:-1]
    return S[1:] >= prev_max


def geometric_times_from_values(rho_prime: Sequence[float], tau: float = 1.0) -> List[int]:
    g = geometric_mask(rho_prime, tau)
    return [int(m) for m in np.flatnonzero(g) + 1]


def geometric_times_bruteforce(rho_prime: Sequence[float], tau: float = 1.0) -> List[int]:
    """O(n^2) reading of the definition in exact arithmetic, used as an oracle."""
    ratios = [float(v).as_integer_ratio() for v in list(rho_prime) + [tau]]
    D = max(d for _, d in ratios)
    ints = [p * (D // d) for p, d in ratios]
    r, t = ints[:-1], ints[-1]
    out = []
    for m in range(1, len(r) + 1):
        acc = 0
        for k in range(m - 1, -1, -1):
            acc += r[k]
            if acc < t * (m - k):
                break
        else:
            out.append(m)
    return out


def geometric_times(system: SurfaceSystem, xh: TangentPoint, n: int, tau: float = 1.0,
                    r: Optional[float] = None) -> List[int]:
    if n < 1:
        raise ValueError("n must be >= 1")
    return geometric_times_from_values(rho_prime_values(system, xh, n, r), tau)


def expand_times(E: Sequence[int], L: int, n: Optional[int] = None) -> List[int]:
    """Union of [i, j] over i <= j in E with j - i <= L."""
    if L < 0:
        raise ValueError("L must be >= 0")
    Es = sorted(set(int(e) for e in E))
    if n is not None and Es and (Es[0] < 0 or Es[-1] > n):
        raise ValueError("E must lie in [0, n]")
    out = set(Es)
    # consecutive elements suffice: any qualifying pair spans a chain of
    # consecutive gaps each <= L
    for i, j in zip(Es, Es[1:]):
        if j - i <= L:
            out.update(range(i, j + 1))
    return sorted(out)


def alpha_fraction(E_L: Sequence[int], m: int, n: int) -> float:
    """#([m, n) intersect E_L) / n."""
    if not 0 <= m <= n or n < 1:
        raise ValueError("need 0 <= m <= n and n >= 1")
    return sum(1 for e in set(E_L) if m <= e < n) / n


def gap_audit_values(rho_prime: Sequence[float], E: Sequence[int], tau: float = 1.0) -> bool:
    r = [float(v) for v in rho_prime]
    Eset = set(E)
    last = 0
    for m in range(1, len(r) + 1):
        if m in Eset:
            last = m
            continue
        if not math.fsum(r[last:m]) < tau * (m - last):
            return False
    return True


# ----------------------------------------------------------------------------

def rho_prime_values(system: SurfaceSystem, xh: TangentPoint, n: int,
                     r: Optional[float] = None) -> Array:
    orb = tangent_orbit(system, xh.base, [xh.angle], n)
    r = system.r if r is None else r
    corr = 0.0 if math.isinf(r) else orb.log_norm[0] / r
    return orb.rho[0] - corr


def default_radius(system: SurfaceSystem, eps_cfg: float = EPS_CFG) -> float:
    return eps_cfg / (100.0 * system.norm_bounds[0])


def trapping_time(system: SurfaceSystem, x, n: int, radius: Optional[float] = None) -> int:
    """Largest k <= n with d(f^j x, f^j z) < radius for all j < k, over the sources z."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if not system.periodic_sources:
        return 0
    radius = default_radius(system) if radius is None else radius
    x = np.asarray(x, dtype=float)
    best = 0
    for z, _period in system.periodic_sources:
        a, b = x.copy(), np.asarray(z, dtype=float)
        k = 0
        while k < n and system.domain.distance(a, b) < radius:
            k += 1
            a, b = system.step(a), system.step(b)
        best = max(best, k)
    return best


def in_dynamical_ball_of_source(system: SurfaceSystem, x, k: int, radius: float) -> bool:
    for z, _ in system.periodic_sources:
        a = system.orbit(np.asarray(x, dtype=float), max(k - 1, 0))
        b = system.orbit(np.asarray(z, dtype=float), max(k - 1, 0))
        if k == 0 or np.all(system.domain.distance(a, b) < radius):
            return True
    return False


def quantized_data(system: SurfaceSystem, xh: TangentPoint, n: int, p: int = 1):
    """(beta', beta'') over [0, n): ceilings of log ||Df^p|| and log ||Df^p v|| over p.

    For p = 1 the values are integers; for p > 1 they lie on the 1/p grid.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    orb = tangent_orbit(system, xh.base, [xh.angle], n)
    pts, ang = orb.points[0, :n], orb.angles[0, :n]
    if p == 1:
        bp = np.ceil(orb.log_norm[0])
        bpp = np.ceil(orb.rho[0])
        return bp.astype(int), bpp.astype(int)
    J = cocycle_jacobian(system, pts, p, check_domain=False)
    v = np.column_stack([np.cos(ang), np.sin(ang)])
    w = matvec_2x2(J, v)
    bp = np.ceil(np.log(operator_norm(J))) / p
    bpp = np.ceil(np.log(np.hypot(w[:, 0], w[:, 1]))) / p
    return bp, bpp


@dataclass
class EmpiricalMeasure:
    points: Array          # (k, 2)
    angles: Array          # (k,)
    weights: Array         # (k,), each 1/n

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def projection(self) -> Array:
        return self.points

    def integrate(self, fn: Callable[[Array, Array], Array]) -> float:
        if len(self.weights) == 0:
            return 0.0
        return float(np.sum(self.weights * fn(self.points, self.angles)))


def empirical_measure(system: SurfaceSystem, xh: TangentPoint, n: int,
                      E: Sequence[int]) -> EmpiricalMeasure:
    """(1/n) sum over i in E of the atom at the i-th lifted point."""
    idx = sorted(set(int(i) for i in E))
    if idx and (idx[0] < 0 or idx[-1] >= n):
        raise ValueError("E must lie in [0, n)")
    orb = tangent_orbit(system, xh.base, [xh.angle], n)
    idx = np.asarray(idx, dtype=int)
    return EmpiricalMeasure(orb.points[0, idx], orb.angles[0, idx], np.full(len(idx), 1.0 / n))


@dataclass
class OrbitProfile:
    start: TangentPoint
    n: int
    L: int
    tau: float
    rho: Array
    rho_prime: Array
    E: List[int]
    E_L: List[int]
    trapping: int
    beta_prime: Array
    beta_double_prime: Array

    def to_csv_handle(self, fh) -> None:
        """Rows i = 0..n; per-step columns are empty on the final row i = n."""
        Es, ELs = set(self.E), set(self.E_L)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "rho", "rho_prime", "is_geometric", "in_E_L",
                    "beta_prime", "beta_double_prime"])
        for i in range(self.n + 1):
            step = [f"{self.rho[i]:.17g}", f"{self.rho_prime[i]:.17g}"] if i < self.n else ["", ""]
            quant = [self.beta_prime[i], self.beta_double_prime[i]] if i < self.n else ["", ""]
            w.writerow([i] + step + [int(i in Es), int(i in ELs)] + quant)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            self.to_csv_handle(fh)


def orbit_profile(system: SurfaceSystem, xh: TangentPoint, n: int, L: int = 0,
                  tau: float = 1.0, r: Optional[float] = None,
                  radius: Optional[float] = None) -> OrbitProfile:
    if n < 1:
        raise ValueError("n must be >= 1")
    orb = tangent_orbit(system, xh.base, [xh.angle], n)
    r = system.r if r is None else r
    rp = orb.rho[0] - (0.0 if math.isinf(r) else orb.log_norm[0] / r)
    E = geometric_times_from_values(rp, tau)
    bp, bpp = quantized_data(system, xh, n)
    return OrbitProfile(xh, n, L, tau, orb.rho[0], rp, E, expand_times(E, L, n),
                        trapping_time(system, xh.base, n, radius), bp, bpp)


def geometric_gap_audit(profile: OrbitProfile) -> bool:
    return gap_audit_values(profile.rho_prime, profile.E, profile.tau)


@dataclass
class ConvexSplitReport:
    n: int
    L: int
    measured: float
    alpha: float
    reference_h: float
    reference_lambda: float
    r: float
    bound: float
    residual: float
    alphas: List[float] = field(default_factory=list)


def convex_split_report(system: SurfaceSystem, curve: Curve, n: int, L: int,
                        reference_h: float, reference_lambda: float, samples: int = 32,
                        tau: float = 1.0, r: Optional[float] = None,
                        radius: Optional[float] = None, tol: float = 1e-6) -> ConvexSplitReport:
    """Measured (1/n) log Vol(f^n sigma) against alpha h + (1 - alpha) lambda/r.

    alpha averages #([t_n(x), n) intersect E^L)/n over sampled curve points,
    lifted along the curve's tangent.  Report only.
    """
    r = system.r if r is None else r
    length = arc_length(system, curve, n, tol)
    measured = math.log(length) / n if length > 0 else -math.inf
    t = (np.arange(samples) + 0.5) / samples
    P = curve.position(t)
    D = curve.derivative(t)
    alphas = []
    for (u, v), (du, dv) in zip(P, D):
        prof = orbit_profile(system, TangentPoint(u, v, math.atan2(dv, du)), n, L, tau, r, radius)
        alphas.append(alpha_fraction(prof.E_L, min(prof.trapping, n), n))
    alpha = float(np.mean(alphas))
    lam_r = 0.0 if math.isinf(r) else reference_lambda / r
    bound = alpha * reference_h + (1 - alpha) * lam_r
    return ConvexSplitReport(n, L, measured, alpha, reference_h, reference_lambda, r,
                             bound, measured - bound, alphas)
