"""The oscillating curve sigma(x) = (x, x^5 sin(1/x)) under diag(a, 3).

The image A^n sigma inside [-1, 1]^2 is the graph of
g_n(u) = 3^n a^{-5n} u^5 sin(a^n / u) over I_n = {u in [0, 1] : |g_n| <= 1}.
All integrals are taken in t = a^n / u, where
g_n = 3^n t^{-5} sin t, g_n'(u) = K (5 sin t / t^4 - cos t / t^3), K = (3/a)^n,
du = a^n t^{-2} dt, so that the length is
L_n = int_{t >= a^n, 3^n |sin t| <= t^5} hypot(1, g_n') a^n / t^2 dt.
The t axis is cut into cells between consecutive multiples of pi/2, where
sin and cos keep their sign; each admissible piece of a cell gets 15-point
Gauss-Legendre with one split.  Past t_cut, where |g_n'| <= delta, the
length is the analytic tail u_cut + a^n K^2 / (28 t_cut^7).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .curves import Curve
from .parallel import chunked_map
from .series import GrowthSeries

Array = np.ndarray
HALF_PI = 0.5 * math.pi
LOG3 = math.log(3.0)
A_LOW = 3.0 ** 0.2     # 3^{1/5}
A_HIGH = 3.0 ** 0.25   # 3^{1/4}
CELL_BUDGET = 10 ** 7
CELL_CHUNK = 1 << 16
T_MIN = 2000.0         # keeps the tail's cos^2 averaging accurate at small n
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(15)


class CellBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class OscParams:
    a: float
    n: int

    def __post_init__(self):
        if not self.a > 1:
            raise ValueError("a must exceed 1")
        if self.n < 1:
            raise ValueError("n must be >= 1")


# ----------------------------------------------------------------------------
# closed forms

def sigma_osc(x):
    """Position and derivative of (x, x^5 sin(1/x)), extended by (0,0), (1,0) at 0."""
    x = np.asarray(x, dtype=float)
    nz = x != 0
    xs = np.where(nz, x, 1.0)
    y = np.where(nz, xs ** 5 * np.sin(1.0 / xs), 0.0)
    dy = np.where(nz, 5 * xs ** 4 * np.sin(1.0 / xs) - xs ** 3 * np.cos(1.0 / xs), 0.0)
    pos = np.stack([x, y], axis=-1)
    der = np.stack([np.ones_like(x), dy], axis=-1)
    return pos, der


def sigma_osc_curve() -> Curve:
    return Curve(position=lambda t: sigma_osc(t)[0], derivative=lambda t: sigma_osc(t)[1],
                 provenance="analytic", name="sigma_osc")


def g_n_value_and_derivative(u, a: float, n: int):
    """g_n(u) and g_n'(u); the 3^n a^{-kn} prefactors are formed in log scale."""
    u = np.asarray(u, dtype=float)
    nz = u > 0
    us = np.where(nz, u, 1.0)
    la = math.log(a)
    t = np.exp(n * la - np.log(us))
    s, c = np.sin(t), np.cos(t)
    lu = np.log(us)
    g = np.exp(n * LOG3 - 5 * n * la + 5 * lu) * s
    dg = 5 * np.exp(n * LOG3 - 5 * n * la + 4 * lu) * s - np.exp(n * LOG3 - 4 * n * la + 3 * lu) * c
    return np.where(nz, g, 0.0), np.where(nz, dg, 0.0)


def theoretical_rate(a: float) -> float:
    if not a > 1:
        raise ValueError("a must exceed 1")
    if a <= A_LOW:
        return LOG3 / 5
    if a < A_HIGH:
        return LOG3 - 4 * math.log(a)
    return 0.0


# ----------------------------------------------------------------------------
# vectorized helpers on cells

def _bisect(f, lo: Array, hi: Array, iters: int = 60) -> Array:
    """Root of f on [lo, hi] assuming f(lo) and f(hi) have opposite signs."""
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        same = np.sign(fm) == np.sign(flo)
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def _extremum(m: Array) -> Array:
    """Root of 5 sin t = t cos t in (m pi, m pi + pi/2), m >= 1 (i.e. tan t = t/5)."""
    lo = m * math.pi
    hi = lo + HALF_PI
    # Newton from the asymptotic guess, safeguarded by the cell
    t = hi - np.arctan(5.0 / hi)
    for _ in range(8):
        s, c = np.sin(t), np.cos(t)
        t = np.clip(t - (5 * s - t * c) / (4 * c + t * s), lo + 1e-15 * lo, hi)
    return t


def _gl(f, p: Array, q: Array) -> Array:
    h = 0.5 * (q - p)
    mid = 0.5 * (q + p)
    x = mid[:, None] + h[:, None] * GL_NODES[None, :]
    return h * (f(x) @ GL_WEIGHTS)


def _gl_split(f, p: Array, q: Array) -> Tuple[Array, Array]:
    """Split-GL15 value and |split - whole| error per interval."""
    whole = _gl(f, p, q)
    m = 0.5 * (p + q)
    split = _gl(f, p, m) + _gl(f, m, q)
    return split, np.abs(split - whole)


# ----------------------------------------------------------------------------
# restricted length

@dataclass
class LengthResult:
    a: float
    n: int
    length: float
    error: float
    cells: int
    t_cut: float
    tail: float


def restricted_length(a: float, n: int, delta: float = 0.02,
                      budget: int = CELL_BUDGET) -> LengthResult:
    """Length of A^n sigma inside [-1, 1]^2."""
    OscParams(a, n)
    an = a ** n
    K = (3.0 / a) ** n
    nlog3 = n * LOG3
    t5 = math.exp(nlog3 / 5)          # |g| <= 1 binds only for t < 3^{n/5}
    t_cut = max((K / delta) ** (1.0 / 3.0), an, t5, T_MIN)
    k0 = math.floor(an / HALF_PI)
    k1 = math.ceil(t_cut / HALF_PI)
    ncell = max(k1 - k0, 0)
    if ncell > budget:
        raise CellBudgetError(f"a={a:g}, n={n}: {ncell} cells exceed budget {budget}")

    def integrand(t):
        x = K * (5.0 * np.sin(t) / t ** 4 - np.cos(t) / t ** 3)
        return np.hypot(1.0, x) * an / t ** 2

    def phi(t):
        # log(3^n |sin t| / t^5); admissible where <= 0
        with np.errstate(divide="ignore"):
            return nlog3 + np.log(np.abs(np.sin(t))) - 5.0 * np.log(t)

    def work(lo_i: int, hi_i: int):
        k = np.arange(k0 + lo_i, k0 + hi_i, dtype=float)
        a_cell, b_cell = k * HALF_PI, (k + 1) * HALF_PI
        lo = np.maximum(a_cell, an)
        hi = np.minimum(b_cell, t_cut)
        ok = hi > lo
        k, a_cell, b_cell, lo, hi = k[ok], a_cell[ok], b_cell[ok], lo[ok], hi[ok]
        inc = (k % 2 == 0) & (k >= 2)        # |sin| increasing, m = k/2 >= 1
        # split points: the zero of g_n' inside increasing cells
        ts = np.full(len(k), np.nan)
        if np.any(inc):
            ts[inc] = _extremum(k[inc] / 2)
        binding = lo < t5
        pieces_p, pieces_q = [], []

        free = ~binding
        # free cells: whole [lo, hi], split at the extremum when it lies inside
        cut = free & inc & (ts > lo) & (ts < hi)
        pieces_p += [lo[free & ~cut], lo[cut], ts[cut]]
        pieces_q += [hi[free & ~cut], ts[cut], hi[cut]]

        # binding, phi monotone decreasing on the cell: allowed [root, b]
        dec = binding & ~inc
        if np.any(dec):
            L, H = lo[dec], hi[dec]
            fl, fh = phi(L), phi(H)
            start = np.where(fl <= 0, L, np.nan)
            mid = (fl > 0) & (fh <= 0)
            if np.any(mid):
                start[mid] = _bisect(phi, L[mid], H[mid])
            keep = np.isfinite(start)
            pieces_p.append(start[keep])
            pieces_q.append(H[keep])

        # binding, increasing cells: phi concave with maximum at ts
        cc = binding & inc
        if np.any(cc):
            A, B, T = a_cell[cc], b_cell[cc], ts[cc]
            L, H = lo[cc], hi[cc]
            fT = phi(T)
            whole = fT <= 0
            r1 = np.where(whole, T, np.nan)
            r2 = np.where(whole, T, np.nan)
            need = ~whole
            if np.any(need):
                r1[need] = _bisect(phi, A[need] + 1e-300 + 1e-15 * A[need], T[need])
                right_ok = phi(B[need]) <= 0
                r2n = np.full(int(np.sum(need)), np.inf)
                if np.any(right_ok):
                    r2n[right_ok] = _bisect(phi, T[need][right_ok], B[need][right_ok])
                r2[need] = r2n
            # left piece [A, r1], right piece [r2, B], each clipped to [L, H]
            p1, q1 = L, np.minimum(r1, H)
            p2, q2 = np.maximum(r2, L), H
            k1_ = q1 > p1
            k2_ = q2 > p2
            pieces_p += [p1[k1_], p2[k2_]]
            pieces_q += [q1[k1_], q2[k2_]]

        P = np.concatenate(pieces_p) if pieces_p else np.empty(0)
        Q = np.concatenate(pieces_q) if pieces_q else np.empty(0)
        if len(P) == 0:
            return 0.0, 0.0
        val, err = _gl_split(integrand, P, Q)
        return float(np.sum(val)), float(np.sum(err))

    parts = chunked_map(work, ncell, chunk=CELL_CHUNK)
    body = math.fsum(p[0] for p in parts)
    err = math.fsum(p[1] for p in parts)
    tail = an / t_cut + an * K * K / (28.0 * t_cut ** 7)
    return LengthResult(a, n, body + tail, err, ncell, t_cut, tail)


def admissible_intervals_u(a: float, n: int) -> List[Tuple[float, float]]:
    """I_n as a sorted list of u-intervals (for small n)."""
    OscParams(a, n)
    an = a ** n
    t5 = 3.0 ** (n / 5)
    if t5 <= an:
        return [(0.0, 1.0)]
    # coarse scan in t, refine each sign change of 3^n |sin t| - t^5 by bisection
    nlog3 = n * LOG3
    t = np.linspace(an, t5, max(64, int(200 * (t5 - an))) + 1)
    with np.errstate(divide="ignore"):
        ok = nlog3 + np.log(np.abs(np.sin(t))) - 5 * np.log(t) <= 0
    intervals_t = []
    start = an if ok[0] else None
    for i in range(1, len(t)):
        if ok[i] != ok[i - 1]:
            lo_, hi_ = t[i - 1], t[i]
            for _ in range(80):
                m = 0.5 * (lo_ + hi_)
                om = nlog3 + math.log(abs(math.sin(m)) or 1e-300) - 5 * math.log(m) <= 0
                if om == ok[i - 1]:
                    lo_ = m
                else:
                    hi_ = m
            edge = 0.5 * (lo_ + hi_)
            if ok[i]:
                start = edge
            else:
                intervals_t.append((start, edge))
                start = None
    # the tail t >= 3^{n/5} is always admissible
    intervals_t.append((start if start is not None else t5, math.inf))
    out = sorted((an / hi_ if math.isfinite(hi_) else 0.0, an / lo_) for lo_, hi_ in intervals_t)
    merged: List[Tuple[float, float]] = []
    for p, q in out:
        if merged and p <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(q, merged[-1][1]))
        else:
            merged.append((p, q))
    return merged


def restricted_growth(a: float, n_list: Sequence[int], delta: float = 0.02,
                      budget: int = CELL_BUDGET, method: str = "fit") -> GrowthSeries:
    """(1/n) log L_n; n past the cell budget are dropped and flagged."""
    ns, vals, flags, lengths = [], [], [], []
    for n in n_list:
        try:
            r = restricted_length(a, n, delta, budget)
        except CellBudgetError:
            flags.append(f"truncated@n={n}")
            break
        ns.append(n)
        lengths.append(r.length)
        vals.append(math.log(r.length) / n)
    s = GrowthSeries.from_values(ns, vals, method=method, flags=flags)
    s.diagnostics["lengths"] = lengths
    return s


@dataclass
class ExampleRow:
    a: float
    n: int
    length: float
    rate: float
    theoretical: float

    @property
    def residual(self) -> float:
        return self.rate - self.theoretical


def example_rows(a: float, series: GrowthSeries) -> List[ExampleRow]:
    th = theoretical_rate(a)
    return [ExampleRow(a, int(n), float(L), float(v), th)
            for n, L, v in zip(series.n, series.diagnostics["lengths"], series.values)]


def write_example_csv(rows: Sequence[ExampleRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "n", "L_n", "rate", "theoretical", "residual"])
        for r in rows:
            w.writerow([f"{r.a:.17g}", r.n, f"{r.length:.17g}", f"{r.rate:.17g}",
                        f"{r.theoretical:.17g}", f"{r.residual:.17g}"])


def length_lower_bound(a: float, n: int) -> float:
    """3^n a^{-4n} / (2 pi (1 + 2 pi)^4) - 1, valid for 3^{1/5} < a < 3^{1/4}."""
    return math.exp(n * LOG3 - 4 * n * math.log(a)) / (2 * math.pi * (1 + 2 * math.pi) ** 4) - 1


# ----------------------------------------------------------------------------
# oscillatory integral lemma

@dataclass
class CosIntegralAudit:
    a: float
    b: float
    n: int
    numeric: float
    bound: float
    error: float

    @property
    def passed(self) -> bool:
        return self.numeric > self.bound


def cos_integral(a: float, b: float, n: int, budget: int = CELL_BUDGET) -> Tuple[float, float]:
    """int_0^b u^3 |cos(a^n/u)| du = a^{4n} int_{a^n/b}^inf t^{-5} |cos t| dt.

    Cells run between zeros of cos; past T the tail uses the mean of |cos|,
    (2/pi) / (4 T^4).
    """
    if not (a > 0 and b > 0 and n >= 1):
        raise ValueError("need a, b > 0 and n >= 1")
    t0 = a ** n / b
    j0 = math.ceil(t0 / math.pi - 0.5)           # first zero pi/2 + j pi >= t0
    T_target = 50.0 * max(t0, math.pi)
    j1 = j0 + max(1, math.ceil((T_target - t0) / math.pi))
    if j1 - j0 > budget:
        raise CellBudgetError("cos integral cell budget exceeded")
    z = HALF_PI + math.pi * np.arange(j0, j1 + 1, dtype=float)
    p = np.concatenate([[t0], z[:-1]])
    q = z
    keep = q > p
    val, err = _gl_split(lambda t: np.abs(np.cos(t)) / t ** 5, p[keep], q[keep])
    T = z[-1]
    tail = (2.0 / math.pi) / (4.0 * T ** 4)
    scale = a ** (4 * n)
    return scale * (math.fsum(val) + tail), scale * math.fsum(err)


def cos_integral_bound(a: float, b: float, n: int) -> float:
    an = a ** n
    return an ** 4 * b ** 4 / (2 * math.pi * (an + 2 * math.pi * b) ** 4)


def cos_integral_audit(a: float, b: float, n: int) -> CosIntegralAudit:
    num, err = cos_integral(a, b, n)
    return CosIntegralAudit(a, b, n, num, cos_integral_bound(a, b, n), err)


AUDIT_GRID = [(a, b, n) for a in (1.1, 1.5, 2.0) for b in (0.5, 1.0) for n in range(1, 7)]


# ----------------------------------------------------------------------------

@dataclass
class MonotonicityAudit:
    a: float
    n: int
    count: int
    bound: float
    roots: List[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.count <= self.bound


def tan_roots(lo: float, hi: float) -> List[float]:
    """Roots of tan t = t/5 in [lo, hi], one per branch (k pi - pi/2, k pi + pi/2)."""
    if hi < lo:
        return []
    out = []
    k_lo = math.floor((lo + HALF_PI) / math.pi)
    k_hi = math.floor((hi + HALF_PI) / math.pi)
    for k in range(k_lo, k_hi + 1):
        a_, b_ = k * math.pi - HALF_PI, k * math.pi + HALF_PI
        # sin t - (t/5) cos t is monotone on the branch and changes sign
        f = lambda t: math.sin(t) - t * math.cos(t) / 5.0
        x0, x1 = a_, b_
        f0 = f(x0)
        for _ in range(200):
            m = 0.5 * (x0 + x1)
            fm = f(m)
            if (fm > 0) == (f0 > 0):
                x0, f0 = m, fm
            else:
                x1 = m
            if x1 - x0 <= 4e-16 * max(1.0, abs(m)):
                break
        r = 0.5 * (x0 + x1)
        if lo <= r <= hi:
            out.append(r)
    return out


def monotonicity_count_audit(a: float, n: int) -> MonotonicityAudit:
    """Count critical points of g_n (tan t = t/5) on [a^n, 3^{n/5}]."""
    if not 1 < a <= A_LOW * (1 + 1e-15):
        raise ValueError("the count applies to 1 < a <= 3^{1/5}")
    lo, hi = a ** n, 3.0 ** (n / 5)
    if hi - lo > CELL_BUDGET * math.pi:
        raise CellBudgetError("interval exceeds the cell budget")
    roots = tan_roots(lo, hi)
    return MonotonicityAudit(a, n, len(roots), hi / math.pi + 2, roots)
