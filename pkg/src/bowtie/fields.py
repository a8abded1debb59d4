"""Field evaluation from solve results, corner coefficient extraction and the
sigma decomposition check."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import quadrature as quad
from .bie import SolveResult
from .geometry import GeometryError, inside_inclusions, point_from_polar

__all__ = [
    "FieldSample",
    "RegimeThresholds",
    "CornerCoefficient",
    "CornerExtractionError",
    "eval_potential",
    "eval_gradient",
    "eval_fields",
    "sample_fields",
    "samples_to_csv",
    "normal_derivative_on_boundary",
    "corner_coefficient_from_trace",
    "extract_corner_coefficient",
    "sigma_consistency",
]

VERTEX_EXCLUSION = 0.005  # in units of epsilon, for boundary normal derivatives


class CornerExtractionError(RuntimeError):
    pass


def _inside_mesh(mesh, X: np.ndarray) -> np.ndarray:
    """Crossing-number test against the polyline through all nodes."""
    inside = np.zeros(X.shape[0], dtype=bool)
    p = mesh.order
    for j in mesh.components:
        pan = mesh.component_panels(j)
        pts = []
        for k in pan:
            pts.append(mesh.start[k][None, :])
            pts.append(mesh.nodes[k * p : (k + 1) * p])
        poly = np.concatenate(pts)
        a, b = poly, np.roll(poly, -1, axis=0)
        cross = np.zeros(X.shape[0], dtype=bool)
        for s in range(0, X.shape[0], 256):
            x = X[s : s + 256, None, :]
            cond = (a[None, :, 1] > x[..., 1]) != (b[None, :, 1] > x[..., 1])
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = a[None, :, 0] + (x[..., 1] - a[None, :, 1]) * (b[None, :, 0] - a[None, :, 0]) / (
                    b[None, :, 1] - a[None, :, 1]
                )
            hit = cond & (x[..., 0] < xint)
            cross[s : s + 256] = (hit.sum(axis=1) % 2) == 1
        inside |= cross
    return inside


def _check_targets(result: SolveResult, X: np.ndarray) -> None:
    cfg = result.spec.config
    if cfg is not None and result.mesh.label in ("bowtie", "single"):
        bad = inside_inclusions(cfg, X, single=result.mesh.label == "single")
    else:
        bad = _inside_mesh(result.mesh, X)
    if np.any(bad):
        raise GeometryError(f"{int(bad.sum())} evaluation point(s) lie inside an inclusion")
    if result.spec.dipole is not None and result.spec.kind in ("emitter", "single"):
        d = np.hypot(*(X - result.spec.dipole.point).T)
        if np.any(d < 1e-12):
            raise GeometryError("evaluation point coincides with the emitter")


def _layer(result: SolveResult, X: np.ndarray, kind: str) -> np.ndarray:
    mesh = result.mesh
    p = mesh.order
    mu = result.mu
    rho = result.density
    width = quad.kernel_width(kind)
    out = np.zeros((X.shape[0], width))
    for s in range(0, X.shape[0], 256):
        K = quad.kernel_values(kind, X[s : s + 256, None, :], mesh.nodes[None, :, :])
        if width == 1:
            out[s : s + 256, 0] = K @ mu
        else:
            out[s : s + 256] = np.einsum("ikc,k->ic", K, mu)
    ti, pj = quad.find_near_pairs(mesh, X)
    if ti.size:
        rows = quad.near_rows(mesh, kind, X[ti], pj)
        cols = pj[:, None] * p + np.arange(p)[None, :]
        far = quad.kernel_values(kind, X[ti][:, None, :], mesh.nodes[cols])
        if width == 1:
            far = far[..., None]
        corr = np.einsum("mck,mk->mc", rows, rho[cols]) - np.einsum("mkc,mk->mc", far, mu[cols])
        np.add.at(out, ti, corr)
    return out


def eval_potential(result: SolveResult, X) -> np.ndarray:
    """``u(X)``: particular part plus single layer (plus the global constant, if any)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _check_targets(result, X)
    u = result.spec.particular_value(X) + _layer(result, X, "slp")[:, 0]
    if "C" in result.constants:
        u = u + result.constants["C"]
    return u


def eval_gradient(result: SolveResult, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _check_targets(result, X)
    return result.spec.particular_gradient(X) + _layer(result, X, "grad")


def eval_fields(result: SolveResult, X) -> tuple[np.ndarray, np.ndarray]:
    return eval_potential(result, X), eval_gradient(result, X)


# ----------------------------------------------------------------------
# samples


@dataclass(frozen=True)
class RegimeThresholds:
    """Near-vertex radius (units of epsilon) and the mid-range band for ``|X|``.

    The band is ``(mid_factor * eps |log eps|, mid_outer)``.  Points in none
    of the three regimes are tagged ``transition``.
    """

    near: float = 0.1
    mid_factor: float = 10.0
    mid_outer: float = 0.3

    def classify(self, X: np.ndarray, eps: float) -> np.ndarray:
        X = np.atleast_2d(X)
        v = np.array([0.5 * eps, 0.0])
        dv = np.minimum(np.hypot(*(X - v).T), np.hypot(*(X + v).T))
        r = np.hypot(*X.T)
        tags = np.full(X.shape[0], "transition", dtype=object)
        lo = self.mid_factor * eps * abs(math.log(eps))
        tags[(r > lo) & (r < self.mid_outer)] = "mid_range"
        tags[r >= self.mid_outer] = "far"
        tags[dv < self.near * eps] = "near_vertex"
        return tags


@dataclass(frozen=True)
class FieldSample:
    point: np.ndarray
    u: float
    grad_u: np.ndarray
    dist_V1: float
    dist_V2: float
    dist_emitter: float
    regime_tag: str

    @property
    def grad_norm(self) -> float:
        return float(np.hypot(*self.grad_u))


def sample_fields(result: SolveResult, X, thresholds: RegimeThresholds | None = None) -> list[FieldSample]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    u, g = eval_fields(result, X)
    cfg = result.spec.config
    eps = cfg.epsilon if cfg is not None else 1.0
    v1 = np.array([-0.5 * eps, 0.0])
    v2 = -v1
    e = result.spec.dipole.point if result.spec.dipole is not None else np.array([np.nan, np.nan])
    tags = (thresholds or RegimeThresholds()).classify(X, eps)
    return [
        FieldSample(
            X[i].copy(),
            float(u[i]),
            g[i].copy(),
            float(np.hypot(*(X[i] - v1))),
            float(np.hypot(*(X[i] - v2))),
            float(np.hypot(*(X[i] - e))),
            str(tags[i]),
        )
        for i in range(X.shape[0])
    ]


SAMPLE_COLUMNS = ["x", "y", "u", "ux", "uy", "dist_V1", "dist_V2", "dist_emitter", "regime_tag"]


def samples_to_csv(samples, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_COLUMNS)
        for s in samples:
            w.writerow(
                [format(float(v), ".12e") for v in (s.point[0], s.point[1], s.u, s.grad_u[0], s.grad_u[1],
                                                    s.dist_V1, s.dist_V2, s.dist_emitter)]
                + [s.regime_tag]
            )


# ----------------------------------------------------------------------


def normal_derivative_on_boundary(result: SolveResult, node_index) -> np.ndarray:
    """Exterior ``d_nu u`` (inward normal) at boundary nodes away from the vertices."""
    idx = np.atleast_1d(np.asarray(node_index))
    mesh = result.mesh
    eps = result.spec.config.epsilon if result.spec.config is not None else 1.0
    close = mesh.arc_coordinate[idx] < VERTEX_EXCLUSION * eps
    if np.any(close):
        raise GeometryError(f"node(s) {idx[close].tolist()} within the vertex exclusion zone")
    out = result.normal_derivative[idx]
    return out if np.ndim(node_index) else float(out[0])


# ----------------------------------------------------------------------
# corner coefficients


@dataclass(frozen=True)
class CornerCoefficient:
    vertex_id: int
    a1: float
    arc_radius: float
    truncation_estimate: float
    a1_half_radius: float | None = None

    @property
    def relative_change(self) -> float | None:
        if self.a1_half_radius is None:
            return None
        return abs(self.a1_half_radius - self.a1) / abs(self.a1)


def corner_coefficient_from_trace(trace, alpha: float, radius: float, mode: int = 1, n_theta: int = 64) -> float:
    """``a_n`` from samples of a function vanishing on both edges.

    ``trace(theta)`` is evaluated on the arc of (scaled) radius ``radius``;
    ``a_n = 2 / ((2 pi - alpha) r^{n beta}) int trace sin(n beta theta) dtheta``.
    """
    beta = math.pi / (2 * math.pi - alpha)
    span = 2 * math.pi - alpha
    t, w = quad.gauss_rule(n_theta)
    theta = 0.5 * span * (t + 1.0)
    vals = np.asarray(trace(theta), dtype=float)
    integral = 0.5 * span * np.sum(w * vals * np.sin(mode * beta * theta))
    return float(2.0 / (span * radius ** (mode * beta)) * integral)


def _sigma_setup(result: SolveResult, q_result: SolveResult | None):
    """Returns (k, boundary value) so that ``sigma = u - k q`` equals it on the boundary."""
    c = result.constants
    if "C" in c:
        return 0.0, c["C"]
    vals = list(c.values())
    if len(vals) == 1 or abs(vals[1] - vals[0]) <= 1e-12 * max(1.0, abs(vals[0])):
        return 0.0, float(np.mean(vals))
    if q_result is None:
        raise CornerExtractionError("potential gap is nonzero; pass the capacity solution")
    lam = q_result.constants
    k = (c[2] - c[1]) / (lam[2] - lam[1])
    return k, c[1] - k * lam[1]


def extract_corner_coefficient(
    result: SolveResult,
    vertex_id: int,
    arc_radius: float | None = None,
    *,
    q_result: SolveResult | None = None,
    n_theta: int = 64,
    check: bool = True,
    tolerance: float = 0.05,
) -> CornerCoefficient:
    """Leading Fourier coefficient of the scaled corner trace ``eps (sigma - sigma|_bdry)``.

    ``arc_radius`` is physical (default ``0.1 eps``); the extraction is
    repeated at half the radius and the relative change must stay below
    ``tolerance`` when ``check`` is set.
    """
    cfg = result.spec.config
    eps = cfg.epsilon
    if arc_radius is None:
        arc_radius = 0.1 * eps
    if not 0 < arc_radius <= 0.2 * eps:
        raise CornerExtractionError("arc radius must lie in (0, 0.2 eps]")
    k, sb = _sigma_setup(result, q_result)

    def coefficient(radius, mode=1):
        def trace(theta):
            X = point_from_polar(np.full_like(theta, radius), theta, vertex_id, cfg, physical=True)
            s = eval_potential(result, X)
            if k != 0.0:
                s = s - k * eval_potential(q_result, X)
            return eps * (s - sb)

        return corner_coefficient_from_trace(trace, cfg.alpha, radius / eps, mode, n_theta)

    a1 = coefficient(arc_radius)
    a2 = coefficient(arc_radius, mode=2)
    beta = cfg.beta
    tail = abs(a2) * (arc_radius / eps) ** beta / max(abs(a1), 1e-300)
    half = None
    if check:
        half = coefficient(0.5 * arc_radius)
        if abs(half - a1) > tolerance * abs(a1):
            raise CornerExtractionError(f"a1 unstable under radius halving: {a1:.6g} vs {half:.6g}")
    return CornerCoefficient(vertex_id, a1, arc_radius, tail, half)


# ----------------------------------------------------------------------


def sigma_consistency(u_result: SolveResult, q_result: SolveResult, v_result: SolveResult, X_samples) -> float:
    """``max |grad sigma - grad(a.grad N) + grad v|`` with ``sigma = u - k q``."""
    h = {u_result.mesh_hash, q_result.mesh_hash, v_result.mesh_hash}
    if len(h) != 1:
        raise ValueError("results were computed on different meshes")
    X = np.atleast_2d(np.asarray(X_samples, dtype=float))
    cu, cq = u_result.constants, q_result.constants
    k = (cu[2] - cu[1]) / (cq[2] - cq[1])
    grad_sigma = eval_gradient(u_result, X) - k * eval_gradient(q_result, X)
    grad_p = u_result.spec.particular_gradient(X)
    grad_v = eval_gradient(v_result, X)
    return float(np.max(np.hypot(*(grad_sigma - grad_p + grad_v).T)))
