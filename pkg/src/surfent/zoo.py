"""Built-in closed-form systems with analytic Jacobians.

Every shipped periodic source is data, not discovered; ``certify_sources``
checks the period and the expansion of both eigenvalues.
"""

from __future__ import annotations

import math
from typing import Dict

import numpy as np

from .dynamics import Domain, SurfaceSystem, cocycle_jacobian

TWO_PI = 2.0 * math.pi


def _linear(M: np.ndarray):
    M = np.asarray(M, dtype=float)
    Minv = np.linalg.inv(M)

    def fwd(x):
        return x @ M.T

    def inv(x):
        return x @ Minv.T

    def jac(x):
        return np.broadcast_to(M, x.shape[:-1] + (2, 2)).copy()

    return fwd, inv, jac


def make_toral_automorphism(m11: int, m12: int, m21: int, m22: int,
                            r: float = math.inf, name: str | None = None) -> SurfaceSystem:
    """x -> M x mod 1 for an integer matrix with determinant +-1."""
    entries = (m11, m12, m21, m22)
    if any(int(e) != e for e in entries):
        raise ValueError("toral automorphism needs integer entries")
    M = np.array([[m11, m12], [m21, m22]], dtype=float)
    det = m11 * m22 - m12 * m21
    if abs(det) != 1:
        raise ValueError(f"|det| must be 1, got {det}")
    radius = float(np.max(np.abs(np.linalg.eigvals(M))))
    h = math.log(radius) if radius > 1 + 1e-12 else 0.0
    fwd, inv, jac = _linear(M)
    return SurfaceSystem(
        name=name or f"toral({m11},{m12},{m21},{m22})",
        map_fn=fwd, inverse_fn=inv, jacobian_fn=jac,
        domain=Domain.torus(), smoothness_order=r,
        known_entropy=h, known_lambda=h,
        params={"m11": m11, "m12": m12, "m21": m21, "m22": m22},
        constant_jacobian=True,
    )


def make_cat(r: float = math.inf) -> SurfaceSystem:
    return make_toral_automorphism(2, 1, 1, 1, r=r, name="cat")


def make_identity(r: float = math.inf) -> SurfaceSystem:
    return make_toral_automorphism(1, 0, 0, 1, r=r, name="identity")


def make_shear(r: float = math.inf) -> SurfaceSystem:
    return make_toral_automorphism(1, 1, 0, 1, r=r, name="shear")


def make_linear_planar(M, box=((-2.0, -2.0), (2.0, 2.0)), r: float = math.inf,
                       name: str = "linear", sources=()) -> SurfaceSystem:
    """Planar linear map on a box (testing aid: rotations, degenerate diagonals)."""
    M = np.asarray(M, dtype=float)
    if abs(np.linalg.det(M)) < 1e-300:
        raise ValueError("singular matrix")
    fwd, inv, jac = _linear(M)
    lam = float(math.log(max(np.linalg.svd(M, compute_uv=False))))
    return SurfaceSystem(
        name=name, map_fn=fwd, inverse_fn=inv, jacobian_fn=jac,
        domain=Domain.box(*box), smoothness_order=r,
        known_lambda=lam, periodic_sources=tuple(sources),
        params={"m11": M[0, 0], "m12": M[0, 1], "m21": M[1, 0], "m22": M[1, 1]},
        constant_jacobian=True,
    )


def make_diag_linear(a: float, b: float = 3.0, r: float = math.inf,
                     strict: bool = True) -> SurfaceSystem:
    """diag(a, b) on the box [-2, 2]^2 with the origin as a fixed source.

    ``strict=False`` admits a = 1 for degenerate test cases.
    """
    if strict and not a > 1:
        raise ValueError("diag(a, 3) needs a > 1")
    if not a > 0 or not b > 0:
        raise ValueError("diagonal entries must be positive")
    sources = (((0.0, 0.0), 1),) if (a > 1 and b > 1) else ()
    sys_ = make_linear_planar(np.diag([a, b]), r=r, name="diag", sources=sources)
    from dataclasses import replace
    return replace(sys_, params={"a": a, "b": b})


def make_standard_map(k: float, r: float = math.inf) -> SurfaceSystem:
    """(u, v) -> (u + v + k/2pi sin 2pi u, v + k/2pi sin 2pi u) mod 1."""
    if k < 0:
        raise ValueError("k must be >= 0")
    c = k / TWO_PI

    def fwd(x):
        u, v = x[..., 0], x[..., 1]
        vn = v + c * np.sin(TWO_PI * u)
        return np.stack([u + vn, vn], axis=-1)

    def inv(x):
        u1, v1 = x[..., 0], x[..., 1]
        u = u1 - v1
        return np.stack([u, v1 - c * np.sin(TWO_PI * u)], axis=-1)

    def jac(x):
        kc = k * np.cos(TWO_PI * x[..., 0])
        J = np.empty(x.shape[:-1] + (2, 2))
        J[..., 0, 0] = 1.0 + kc
        J[..., 0, 1] = 1.0
        J[..., 1, 0] = kc
        J[..., 1, 1] = 1.0
        return J

    return SurfaceSystem(
        name="standard", map_fn=fwd, inverse_fn=inv, jacobian_fn=jac,
        domain=Domain.torus(), smoothness_order=r,
        known_entropy=0.0 if k == 0 else None,
        known_lambda=0.0 if k == 0 else None,
        params={"k": k}, constant_jacobian=(k == 0),
    )


def make_perturbed_cat(eps: float, r: float = math.inf) -> SurfaceSystem:
    """Cat map after the shear (u, v) -> (u + eps sin 2pi v, v), mod 1."""
    if abs(eps) >= 0.1:
        raise ValueError("|eps| must be < 0.1 (hyperbolicity is not guaranteed beyond)")
    A = np.array([[2.0, 1.0], [1.0, 1.0]])
    Ainv = np.array([[1.0, -1.0], [-1.0, 2.0]])

    def fwd(x):
        p = np.stack([x[..., 0] + eps * np.sin(TWO_PI * x[..., 1]), x[..., 1]], axis=-1)
        return p @ A.T

    def inv(x):
        y = x @ Ainv.T
        return np.stack([y[..., 0] - eps * np.sin(TWO_PI * y[..., 1]), y[..., 1]], axis=-1)

    def jac(x):
        s = TWO_PI * eps * np.cos(TWO_PI * x[..., 1])
        J = np.empty(x.shape[:-1] + (2, 2))
        # A @ [[1, s], [0, 1]]
        J[..., 0, 0] = 2.0
        J[..., 0, 1] = 2.0 * s + 1.0
        J[..., 1, 0] = 1.0
        J[..., 1, 1] = s + 1.0
        return J

    lam = math.log((3 + math.sqrt(5)) / 2)
    return SurfaceSystem(
        name="perturbed_cat", map_fn=fwd, inverse_fn=inv, jacobian_fn=jac,
        domain=Domain.torus(), smoothness_order=r,
        known_entropy=lam if eps == 0 else None,
        known_lambda=lam if eps == 0 else None,
        params={"eps": eps}, constant_jacobian=(eps == 0),
    )


# name -> (constructor, default params)
REGISTRY: Dict[str, tuple] = {
    "cat": (lambda **p: make_cat(**p), {}),
    "identity": (lambda **p: make_identity(**p), {}),
    "shear": (lambda **p: make_shear(**p), {}),
    "toral": (lambda **p: make_toral_automorphism(
        int(p.pop("m11")), int(p.pop("m12")), int(p.pop("m21")), int(p.pop("m22")), **p),
        {"m11": 2, "m12": 1, "m21": 1, "m22": 1}),
    "diag": (lambda **p: make_diag_linear(**p), {"a": 1.5}),
    "standard": (lambda **p: make_standard_map(**p), {"k": 6.0}),
    "perturbed_cat": (lambda **p: make_perturbed_cat(**p), {"eps": 0.05}),
}


def make_system(name: str, **params) -> SurfaceSystem:
    """Resolve a system by registry name; unspecified parameters take defaults."""
    if name not in REGISTRY:
        raise KeyError(f"unknown system {name!r}; known: {', '.join(sorted(REGISTRY))}")
    ctor, defaults = REGISTRY[name]
    merged = dict(defaults)
    merged.update(params)
    return ctor(**merged)


def builtin_systems() -> Dict[str, SurfaceSystem]:
    """The shipped test bench used by invariant suites."""
    return {
        "cat": make_cat(),
        "identity": make_identity(),
        "shear": make_shear(),
        "diag1.5": make_diag_linear(1.5),
        "standard0": make_standard_map(0.0),
        "standard6": make_standard_map(6.0),
        "perturbed_cat": make_perturbed_cat(0.05),
    }


def certify_sources(system: SurfaceSystem, tol: float = 1e-9) -> bool:
    """Every listed source returns within ``tol`` and expands in both directions."""
    for z, period in system.periodic_sources:
        z = np.asarray(z, dtype=float)
        back = system.iterate(z, period)
        if system.domain.distance(z, back) >= tol:
            return False
        J = cocycle_jacobian(system, z, period, check_domain=False)
        if np.min(np.abs(np.linalg.eigvals(J))) <= 1.0:
            return False
    return True


def jacobian_fd_error(system: SurfaceSystem, pts: np.ndarray, h: float = 1e-6) -> float:
    """Max entrywise gap between the analytic Jacobian and central differences."""
    pts = np.atleast_2d(pts)
    J = system.jacobian(pts)
    fd = np.empty_like(J)
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        d = system.map_fn(pts + e) - system.map_fn(pts - e)
        fd[:, :, j] = d / (2 * h)
    return float(np.max(np.abs(J - fd)))


def inverse_error(system: SurfaceSystem, pts: np.ndarray) -> float:
    pts = np.atleast_2d(pts)
    back = system.inverse_step(system.step(pts))
    return float(np.max(system.domain.distance(pts, back)))
