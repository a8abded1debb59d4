"""Closed-form functions: Newton potential, dipole fields, corner singular
functions, the angle function about ``Q``, level circles and extremal circles.

Scaled-coordinate functions take a ``BowtieConfig`` or just the aperture.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    BowtieConfig,
    GeometryError,
    edge_rays,
    inside_cones,
    polar_about_vertex,
)

__all__ = [
    "Exponents",
    "exponents",
    "DipoleSpec",
    "LevelCircle",
    "ExtremalPoints",
    "newton_potential",
    "newton_gradient",
    "dipole_potential",
    "dipole_gradient",
    "corner_singular_B",
    "grad_corner_singular_B",
    "angle_phi",
    "grad_angle_phi",
    "phi_center",
    "level_circle_for_value",
    "extremal_boundary_points",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Exponents:
    beta: float
    gamma: float


def exponents(alpha) -> Exponents:
    alpha = alpha.alpha if isinstance(alpha, BowtieConfig) else float(alpha)
    if not 0.0 < alpha < math.pi:
        raise GeometryError("aperture must lie in (0, pi)")
    return Exponents(math.pi / (TWO_PI - alpha), math.pi / (math.pi - alpha))


@dataclass(frozen=True)
class DipoleSpec:
    """Dipole emitter ``a . grad N`` located at ``(0, epsilon * p)``.

    An explicit ``location`` overrides the on-axis placement (used by the
    disk validation geometry).
    """

    direction: tuple
    p: float = 0.0
    epsilon: float = 1.0
    location: tuple | None = None

    def __post_init__(self):
        a = np.asarray(self.direction, dtype=float)
        if a.shape != (2,) or abs(np.hypot(*a) - 1.0) > 1e-12:
            raise ValueError(f"dipole direction {self.direction} must be a unit 2-vector")
        if abs(self.p) > 1.0 and self.location is None:
            raise ValueError("emitter height |p| must not exceed 1")
        object.__setattr__(self, "direction", (float(a[0]), float(a[1])))
        if self.location is not None:
            loc = tuple(float(x) for x in self.location)
            object.__setattr__(self, "location", loc)

    @property
    def a(self) -> np.ndarray:
        return np.array(self.direction)

    @property
    def point(self) -> np.ndarray:
        if self.location is not None:
            return np.array(self.location)
        return np.array([0.0, self.epsilon * self.p])

    def with_epsilon(self, epsilon: float) -> "DipoleSpec":
        return DipoleSpec(self.direction, self.p, epsilon, self.location)

    def to_dict(self) -> dict:
        return {"direction": list(self.direction), "p": self.p, "epsilon": self.epsilon,
                "location": list(self.point)}


def _offset(X, p0, what: str) -> tuple[np.ndarray, np.ndarray]:
    D = np.asarray(X, dtype=float) - np.asarray(p0, dtype=float)
    r2 = D[..., 0] ** 2 + D[..., 1] ** 2
    if np.any(r2 == 0.0):
        raise ValueError(f"evaluation point coincides with the {what}")
    return D, r2


def newton_potential(X, p0) -> np.ndarray:
    """``log|X - p0| / (2 pi)``."""
    _, r2 = _offset(X, p0, "source point")
    return np.log(r2) / (4.0 * math.pi)


def newton_gradient(X, p0) -> np.ndarray:
    D, r2 = _offset(X, p0, "source point")
    return D / (TWO_PI * r2[..., None])


def dipole_potential(X, spec: DipoleSpec) -> np.ndarray:
    D, r2 = _offset(X, spec.point, "emitter")
    return (D @ spec.a) / (TWO_PI * r2)


def dipole_gradient(X, spec: DipoleSpec) -> np.ndarray:
    """Hessian of the Newton potential applied to ``a``."""
    D, r2 = _offset(X, spec.point, "emitter")
    a = spec.a
    ad = D @ a
    return (a * r2[..., None] - 2.0 * ad[..., None] * D) / (TWO_PI * r2[..., None] ** 2)


# ----------------------------------------------------------------------
# corner singular functions


def corner_singular_B(Y, vertex_id: int, config) -> np.ndarray:
    """``r^beta sin(beta theta)`` about ``S_j`` in scaled coordinates."""
    beta = exponents(config).beta
    chart = polar_about_vertex(Y, vertex_id, config)
    return chart.r ** beta * np.sin(beta * chart.theta)


def grad_corner_singular_B(Y, vertex_id: int, config) -> np.ndarray:
    alpha = config.alpha if isinstance(config, BowtieConfig) else float(config)
    beta = exponents(alpha).beta
    chart = polar_about_vertex(Y, vertex_id, config)
    r, th = chart.r, chart.theta
    if np.any(r == 0.0):
        raise GeometryError("gradient of B_j is undefined at the vertex")
    ang = th + 0.5 * alpha
    er = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    et = np.stack([-np.sin(ang), np.cos(ang)], axis=-1)
    mag = beta * r ** (beta - 1.0)
    g = mag[..., None] * (np.sin(beta * th)[..., None] * er + np.cos(beta * th)[..., None] * et)
    if vertex_id == 1:
        g = g * np.array([-1.0, 1.0])
    return g


# ----------------------------------------------------------------------
# angle function


def phi_center(config) -> np.ndarray:
    """Intersection ``Q`` of the two upper edge lines."""
    alpha = config.alpha if isinstance(config, BowtieConfig) else float(config)
    return np.array([0.0, -0.5 * math.tan(0.5 * alpha)])


def _phi_prepare(Y, config):
    alpha = config.alpha if isinstance(config, BowtieConfig) else float(config)
    Y = np.asarray(Y, dtype=float)
    if np.any(inside_cones(Y, alpha)):
        raise GeometryError("point lies inside a cone")
    Q = phi_center(alpha)
    if np.any(np.all(Y == Q, axis=-1)):
        raise GeometryError("angle function is singular at Q")
    lower = Y[..., 1] < 0.0
    Ym = np.where(lower[..., None], Y * np.array([1.0, -1.0]), Y)
    return alpha, Ym - Q, lower


def angle_phi(Y, config) -> np.ndarray:
    """Angle at ``Q`` from the upper edge line of ``Gamma_1``, even in ``y2``."""
    alpha, D, _ = _phi_prepare(Y, config)
    phi = (math.pi - 0.5 * alpha) - np.arctan2(D[..., 1], D[..., 0])
    return np.clip(phi, 0.0, math.pi - alpha)


def grad_angle_phi(Y, config) -> np.ndarray:
    _, D, lower = _phi_prepare(Y, config)
    r2 = D[..., 0] ** 2 + D[..., 1] ** 2
    g = np.stack([D[..., 1], -D[..., 0]], axis=-1) / r2[..., None]
    return np.where(lower[..., None], g * np.array([1.0, -1.0]), g)


# ----------------------------------------------------------------------
# level circles and extremal circles


@dataclass(frozen=True)
class LevelCircle:
    value: float
    center: np.ndarray
    radius: float
    spec: DipoleSpec | None = None

    def points(self, n: int = 8) -> np.ndarray:
        t = (np.arange(n) + 0.5) * TWO_PI / n
        return self.center + self.radius * np.stack([np.cos(t), np.sin(t)], axis=1)

    def verify(self, n: int = 8, tol: float = 1e-12) -> bool:
        vals = _d2_newton(self.points(n), self.spec.point)
        return bool(np.all(np.abs(vals - self.value) <= tol * max(1.0, abs(self.value))))


def _d2_newton(X, e) -> np.ndarray:
    return dipole_potential(X, DipoleSpec((0.0, 1.0), location=tuple(e)))


def level_circle_for_value(value: float, spec: DipoleSpec) -> LevelCircle:
    """Level set ``{d2 N_e = value}``: circle through ``e`` with centre above/below it."""
    if value == 0:
        raise ValueError("the zero level set is a line, not a circle")
    zeta = 1.0 / (4.0 * math.pi * value)
    e = spec.point
    return LevelCircle(float(value), np.array([e[0], e[1] + zeta]), abs(zeta), spec)


@dataclass(frozen=True)
class ExtremalPoints:
    max_points: tuple
    min_points: tuple
    max_value: float
    min_value: float
    scaled_max_points: tuple
    scaled_min_points: tuple
    scaled_max_value: float
    scaled_min_value: float
    max_circle_center: np.ndarray
    max_circle_radius: float
    min_circle_center: np.ndarray
    min_circle_radius: float
    ray_parameters: dict = field(default_factory=dict)


def _ray_extrema(S, d, p):
    """Max and min of ``(y2 - p)/(2 pi |Y - e|^2)`` along ``S + s d``, ``s >= 0``."""
    e = np.array([0.0, p])
    A = S[1] - p
    B = d[1]
    C = float((S - e) @ (S - e))
    D = 2.0 * float(d @ (S - e))
    cands = [0.0]
    if abs(B) > 1e-15:
        disc = A * A + B * (B * C - A * D)
        if disc >= 0:
            for sgn in (1.0, -1.0):
                s = (-A + sgn * math.sqrt(disc)) / B
                if s > 0:
                    cands.append(s)
    elif abs(A) > 0:
        s = 0.5 * (B * C - A * D) / A
        if s > 0:
            cands.append(s)
    vals = [(A + B * s) / (TWO_PI * (C + D * s + s * s)) for s in cands]
    # the value tends to 0 at infinity
    out = {}
    imax = int(np.argmax(vals))
    imin = int(np.argmin(vals))
    out["max"] = (vals[imax], cands[imax]) if vals[imax] > 0 else (0.0, math.inf)
    out["min"] = (vals[imin], cands[imin]) if vals[imin] < 0 else (0.0, math.inf)
    return out


def extremal_boundary_points(config: BowtieConfig, spec: DipoleSpec) -> ExtremalPoints:
    """Extremes of ``d2 N_{eps e}`` over the cone edges, via closed-form critical points.

    Along a ray the critical parameters solve ``B s^2 + 2 A s - (B C - A D) = 0``;
    the maximum is attained where the level circle above ``e`` is tangent to
    the upper edges, the minimum on the smallest circle below ``e`` that
    meets the edges.
    """
    p = spec.p
    if p == 0:
        raise ValueError("extremal construction requires p != 0")
    flip = p < 0
    pp = abs(p)
    rays = edge_rays(config.alpha)
    best = {1: {}, 2: {}}
    params = {}
    for name, (S, d) in rays.items():
        j = 1 if name.endswith("1") else 2
        ext = _ray_extrema(S, d, pp)
        params[name] = {"max": ext["max"][1], "min": ext["min"][1]}
        for kind in ("max", "min"):
            val, s = ext[kind]
            cur = best[j].get(kind)
            better = cur is None or (val > cur[0] if kind == "max" else val < cur[0])
            if better:
                pt = S + s * d if math.isfinite(s) else None
                best[j][kind] = (val, pt)

    def mirror(pt):
        if pt is None:
            return None
        return pt * np.array([1.0, -1.0]) if flip else pt

    # a mirrored emitter swaps the roles of max and min with a sign change
    vmax = max(best[1]["max"][0], best[2]["max"][0])
    vmin = min(best[1]["min"][0], best[2]["min"][0])
    pmax = tuple(mirror(best[j]["max"][1]) for j in (1, 2))
    pmin = tuple(mirror(best[j]["min"][1]) for j in (1, 2))
    if flip:
        vmax, vmin = -vmin, -vmax
        pmax, pmin = pmin, pmax
    eps = spec.epsilon
    e = np.array([0.0, p])

    def circle(v):
        if v == 0:
            return np.array([0.0, np.inf]), math.inf
        z = 1.0 / (4.0 * math.pi * v)
        return e + np.array([0.0, z]), abs(z)

    cmax, rmax = circle(vmax)
    cmin, rmin = circle(vmin)
    scale = lambda pts: tuple(None if q is None else eps * q for q in pts)
    return ExtremalPoints(
        max_points=scale(pmax),
        min_points=scale(pmin),
        max_value=vmax / eps,
        min_value=vmin / eps,
        scaled_max_points=pmax,
        scaled_min_points=pmin,
        scaled_max_value=vmax,
        scaled_min_value=vmin,
        max_circle_center=cmax,
        max_circle_radius=rmax,
        min_circle_center=cmin,
        min_circle_radius=rmin,
        ray_parameters=params,
    )
