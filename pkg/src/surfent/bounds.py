"""Dynamical balls, separated and spanning sets, Katok and Przytycki estimates.

The Bowen distance d_n(x, y) = max_{0<=k<n} d(f^k x, f^k y) is evaluated on
orbit embeddings in R^{2n}.  Candidate neighbours come from a KD-tree in the
max-coordinate metric (periodic on the torus), which never exceeds the
per-step Euclidean distance, so the candidates form a superset that is then
filtered with the exact d_n.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .dynamics import (Domain, SurfaceSystem, identity_stack, matmul_2x2, operator_norm)
from .series import GrowthSeries

Array = np.ndarray


def random_cloud(domain: Domain, count: int, seed: int = 0) -> Array:
    """Stratified uniform cloud: one point per cell of an m x m grid, m = ceil(sqrt(count)).

    Rows come in a seeded random order so that greedy insertion behaves like
    random sequential packing rather than a raster sweep.
    """
    if count < 1:
        raise ValueError("cloud must be non-empty")
    m = math.ceil(math.sqrt(count))
    rng = np.random.default_rng(seed)
    i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    s = (np.column_stack([i.ravel(), j.ravel()]) + rng.random((m * m, 2))) / m
    s = s[rng.permutation(m * m)]
    return np.asarray(domain.lo) + s * np.array([domain.width, domain.height])


def in_dynamical_ball(system: SurfaceSystem, center, y, n: int, eps: float) -> bool:
    """d(f^k y, f^k center) < eps for 0 <= k < n; leaving a box counts as outside."""
    if n < 1 or eps <= 0:
        raise ValueError("need n >= 1 and eps > 0")
    a = np.asarray(center, dtype=float)
    b = np.asarray(y, dtype=float)
    dom = system.domain
    for k in range(n):
        if not (dom.contains(a) and dom.contains(b)):
            return False
        if not dom.distance(a, b) < eps:
            return False
        if k + 1 < n:
            a, b = system.step(a), system.step(b)
    return True


def orbit_embedding(system: SurfaceSystem, cloud: Array, n: int) -> tuple:
    """(N, n, 2) orbit array and a mask of points whose orbit stays in the domain."""
    cloud = np.atleast_2d(np.asarray(cloud, dtype=float))
    O = np.empty((len(cloud), n, 2))
    x = system.domain.canonical(cloud)
    ok = system.domain.contains(x)
    for k in range(n):
        O[:, k] = x
        if k + 1 < n:
            x = system.step(x)
            ok &= system.domain.contains(x)
    return O, ok


def bowen_distance(domain: Domain, O: Array, i: int, idx: Array) -> Array:
    d = O[idx] - O[i]
    if domain.is_torus:
        d = d - np.round(d)
    return np.max(np.hypot(d[..., 0], d[..., 1]), axis=-1)


class _Neighbours:
    def __init__(self, system: SurfaceSystem, cloud: Array, n: int):
        O, ok = orbit_embedding(system, cloud, n)
        self.index = np.flatnonzero(ok)      # positions in the original cloud
        self.O = O[ok]
        self.domain = system.domain
        flat = self.O.reshape(len(self.O), -1)
        if self.domain.is_torus:
            self.tree = cKDTree(flat, boxsize=1.0)
        else:
            self.tree = cKDTree(flat)
        self.flat = flat

    def __len__(self):
        return len(self.O)

    def within(self, i: int, eps: float, strict: bool) -> Array:
        cand = np.asarray(self.tree.query_ball_point(self.flat[i], r=eps, p=np.inf), dtype=int)
        d = bowen_distance(self.domain, self.O, i, cand)
        keep = d < eps if strict else d <= eps
        return np.sort(cand[keep])


@dataclass
class SeparatedSet:
    points: Array
    n: int
    eps: float
    order: Array            # cloud indices in insertion order

    def __len__(self):
        return len(self.points)


def greedy_separated_set(system: SurfaceSystem, cloud: Array, n: int, eps: float) -> SeparatedSet:
    """Greedy pass in cloud order keeping points with d_n > eps to every kept point."""
    cloud = np.atleast_2d(np.asarray(cloud, dtype=float))
    if len(cloud) == 0:
        raise ValueError("empty candidate cloud")
    if n < 1 or eps <= 0:
        raise ValueError("need n >= 1 and eps > 0")
    nb = _Neighbours(system, cloud, n)
    blocked = np.zeros(len(nb), dtype=bool)
    kept: List[int] = []
    for i in range(len(nb)):
        if blocked[i]:
            continue
        kept.append(i)
        blocked[nb.within(i, eps, strict=False)] = True
    kept_arr = nb.index[np.asarray(kept, dtype=int)]
    return SeparatedSet(cloud[kept_arr], n, eps, kept_arr)


def greedy_spanning_set(system: SurfaceSystem, cloud: Array, n: int, eps: float) -> Array:
    """Greedy cover of the cloud by open balls B(c, n, eps) centred at cloud points.

    Each round picks the centre covering the most uncovered points (lowest
    index on ties).  Returns the chosen cloud indices in pick order.
    """
    cloud = np.atleast_2d(np.asarray(cloud, dtype=float))
    if len(cloud) == 0:
        raise ValueError("empty candidate cloud")
    nb = _Neighbours(system, cloud, n)
    balls = [nb.within(i, eps, strict=True) for i in range(len(nb))]
    covered = np.zeros(len(nb), dtype=bool)
    heap = [(-len(b), i) for i, b in enumerate(balls)]
    heapq.heapify(heap)
    remaining = len(nb)
    picks: List[int] = []
    while remaining:
        if not heap:
            raise RuntimeError(f"cover impossible within cloud: {remaining} points uncovered")
        key, i = heapq.heappop(heap)
        gain = int(np.count_nonzero(~covered[balls[i]]))
        if gain < -key:
            if gain:
                heapq.heappush(heap, (-gain, i))
            continue
        picks.append(i)
        covered[balls[i]] = True
        remaining -= gain
    return nb.index[np.asarray(picks, dtype=int)]


def is_separated(system: SurfaceSystem, points: Array, n: int, eps: float) -> bool:
    """Exhaustive pairwise check that every pair has d_n > eps."""
    points = np.atleast_2d(points)
    O, _ = orbit_embedding(system, points, n)
    for i in range(len(points) - 1):
        idx = np.arange(i + 1, len(points))
        if np.any(bowen_distance(system.domain, O, i, idx) <= eps):
            return False
    return True


def is_spanning(system: SurfaceSystem, centres: Array, cloud: Array, n: int, eps: float) -> bool:
    """Every cloud point lies in some open ball B(c, n, eps)."""
    Oc, _ = orbit_embedding(system, centres, n)
    Ox, _ = orbit_embedding(system, cloud, n)
    tree = cKDTree(Oc.reshape(len(Oc), -1), boxsize=1.0 if system.domain.is_torus else None)
    for j in range(len(Ox)):
        cand = np.asarray(tree.query_ball_point(Ox[j].ravel(), r=eps, p=np.inf), dtype=int)
        if len(cand) == 0:
            return False
        d = Oc[cand] - Ox[j]
        if system.domain.is_torus:
            d = d - np.round(d)
        if not np.any(np.max(np.hypot(d[..., 0], d[..., 1]), axis=-1) < eps):
            return False
    return True


# ----------------------------------------------------------------------------

@dataclass
class KatokRow:
    eps: float
    n: int
    separated_count: int
    spanning_count: Optional[int]
    katok_slope: float


def katok_estimate(system: SurfaceSystem, cloud: Array, n_list: Sequence[int],
                   eps_list: Sequence[float], with_spanning: bool = False) -> Dict[float, GrowthSeries]:
    """Per-eps series (1/n) log #S(n, eps) with rate = least-squares slope of log #S on n."""
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be decreasing")
    out: Dict[float, GrowthSeries] = {}
    for eps in eps_list:
        counts = [len(greedy_separated_set(system, cloud, n, eps)) for n in n_list]
        vals = [math.log(c) / n for c, n in zip(counts, n_list)]
        s = GrowthSeries.from_values(n_list, vals, method="slope")
        s.diagnostics["counts"] = counts
        if with_spanning:
            s.diagnostics["spanning"] = [len(greedy_spanning_set(system, cloud, n, eps))
                                         for n in n_list]
        out[eps] = s
    return out


def katok_rows(series: Dict[float, GrowthSeries]) -> List[KatokRow]:
    rows = []
    for eps, s in series.items():
        span = s.diagnostics.get("spanning")
        for k, (n, c) in enumerate(zip(s.n, s.diagnostics["counts"])):
            rows.append(KatokRow(eps, int(n), int(c), None if span is None else int(span[k]),
                                 s.rate))
    return rows


def write_katok_csv(rows: Sequence[KatokRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "n", "separated_count", "spanning_count", "katok_slope"])
        for r in rows:
            w.writerow([f"{r.eps:.17g}", r.n, r.separated_count,
                        "" if r.spanning_count is None else r.spanning_count,
                        f"{r.katok_slope:.17g}"])


# ----------------------------------------------------------------------------

@dataclass
class PrzytyckiAudit:
    eps: float
    n: List[int]
    integrals: Array          # (len(z_list), len(n)) I(z, n)
    envelope: Array           # min_z I(z, n) 2^n / eps^2
    empty: List[tuple] = field(default_factory=list)

    @property
    def positive(self) -> bool:
        return bool(np.all(self.envelope > 0))

    def nondecreasing(self, dip: float = 0.10) -> bool:
        e = self.envelope
        return bool(np.all(e[1:] >= (1 - dip) * e[:-1]))


def ball_integral(system: SurfaceSystem, z, n_list: Sequence[int], eps: float,
                  density: int = 600) -> Array:
    """I(z, n) = sum of w ||Df^n_x|| over grid samples x of [z-eps, z+eps]^2 inside B(z, n, eps)."""
    n_list = [int(k) for k in n_list]
    z = np.asarray(z, dtype=float)
    s = (np.arange(density) + 0.5) / density
    off = -eps + 2 * eps * s
    U, V = np.meshgrid(off, off, indexing="ij")
    x = np.column_stack([U.ravel(), V.ravel()]) + z
    w = (2 * eps / density) ** 2
    dom = system.domain
    x = dom.canonical(x)
    zk = dom.canonical(z)
    M = identity_stack(len(x))
    scale = np.zeros(len(x))
    out = np.zeros(len(n_list))
    j = 0
    for k in range(n_list[-1]):
        alive = dom.distance(x, zk) < eps
        if not dom.is_torus:
            alive &= dom.contains(x)
        x, M, scale = x[alive], M[alive], scale[alive]
        if len(x) == 0:
            break
        M = matmul_2x2(system.jacobian(x), M)
        c = np.max(np.abs(M), axis=(1, 2))
        M /= c[:, None, None]
        scale += np.log(c)
        if k + 1 == n_list[j]:
            out[j] = w * float(np.sum(np.exp(scale + np.log(operator_norm(M)))))
            j += 1
        x, zk = system.step(x), system.step(zk)
    return out


def przytycki_audit(system: SurfaceSystem, z_list: Array, n_list: Sequence[int], eps: float,
                    density: int = 600) -> PrzytyckiAudit:
    """Empirical lower envelope of I(z, n) 2^n / eps^2 over sampled centres z.

    Each ball is sampled by a ``density x density`` grid on the square of
    side 2 eps around z; centres whose ball holds no sample are flagged.
    """
    n_list = [int(k) for k in n_list]
    if eps <= 0 or not n_list or n_list[0] < 1:
        raise ValueError("need eps > 0 and n >= 1")
    z_list = np.atleast_2d(z_list)
    I = np.array([ball_integral(system, z, n_list, eps, density) for z in z_list])
    empty = [(i, n) for i in range(len(z_list)) for j, n in enumerate(n_list) if I[i, j] == 0]
    factor = np.array([2.0 ** n for n in n_list]) / eps ** 2
    env = np.min(I, axis=0) * factor
    return PrzytyckiAudit(eps, n_list, I, env, empty)
