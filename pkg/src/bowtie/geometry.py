"""Bow-tie geometry: inclusions, graded panel meshes, vertex charts, condition (A).

Physical coordinates are denoted ``X``; scaled coordinates ``Y = X / epsilon``.
The scaled cones have vertices ``S1 = (-1/2, 0)`` and ``S2 = (1/2, 0)``; the
physical inclusions coincide with ``epsilon * (cones)`` inside the disk of
radius ``mu`` and are closed off by a circular cap with two rounding fillets.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BowtieConfig",
    "Panel",
    "PanelMesh",
    "PolarChart",
    "ConditionAResult",
    "build_bowtie_boundary",
    "build_single_inclusion_boundary",
    "build_disk_boundary",
    "polar_about_vertex",
    "point_from_polar",
    "check_condition_a",
    "scale_relation_check",
    "inside_inclusions",
    "inside_cones",
    "load_config",
]

LINE, ARC = 0, 1
TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-12
MAX_ARC_ANGLE = math.pi / 12
# a panel may be as long as its distance to a vertex
VERTEX_KAPPA = 1.0
JUNCTION_KAPPA = 1.0 / 3.0


class GeometryError(ValueError):
    """Invalid geometric input."""


@dataclass(frozen=True)
class BowtieConfig:
    """The epsilon-parametrized bow-tie geometry.

    ``cap_fillet`` is the fillet radius joining the straight edges to the
    circular cap; ``None`` selects ``0.1 * mu``.
    """

    alpha: float
    epsilon: float
    mu: float = 1.5
    cap_fillet: float | None = None
    symmetric: bool = True

    def __post_init__(self):
        if not 0.0 < self.alpha < math.pi:
            raise GeometryError(f"aperture alpha={self.alpha} not in (0, pi)")
        if not 0.0 < self.epsilon < 0.25:
            raise GeometryError(f"epsilon={self.epsilon} not in (0, 1/4)")
        if not self.mu > 1.0:
            raise GeometryError(f"mu={self.mu} must exceed 1")
        if not self.symmetric:
            raise GeometryError("only symmetric bow-tie geometries are supported")
        if self.fillet <= 0.0:
            raise GeometryError("cap fillet radius must be positive")
        if self.fillet_angle >= 0.45 * self.alpha:
            raise GeometryError(
                f"fillet radius {self.fillet} too large for aperture {self.alpha}"
            )

    @property
    def fillet(self) -> float:
        return 0.1 * self.mu if self.cap_fillet is None else float(self.cap_fillet)

    @property
    def beta(self) -> float:
        return math.pi / (2.0 * math.pi - self.alpha)

    @property
    def gamma(self) -> float:
        return math.pi / (math.pi - self.alpha)

    @property
    def vertices(self) -> tuple[np.ndarray, np.ndarray]:
        h = 0.5 * self.epsilon
        return np.array([-h, 0.0]), np.array([h, 0.0])

    def vertex(self, j: int) -> np.ndarray:
        return self.vertices[j - 1]

    # cap construction -------------------------------------------------
    @property
    def edge_length(self) -> float:
        """Length of each straight edge, measured from its vertex."""
        return self.mu + 0.5 * self.epsilon + self.fillet

    @property
    def fillet_center_distance(self) -> float:
        return math.hypot(self.edge_length, self.fillet)

    @property
    def cap_radius(self) -> float:
        return self.fillet_center_distance + self.fillet

    @property
    def fillet_angle(self) -> float:
        return math.asin(self.fillet / self.fillet_center_distance)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "mu": self.mu,
            "cap_fillet": self.fillet,
        }


@dataclass(frozen=True)
class Panel:
    """Read-only view of one boundary panel."""

    endpoints: tuple[np.ndarray, np.ndarray]
    nodes: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    component_id: int
    arc_coordinate: float
    length: float
    kind: str


@dataclass(frozen=True)
class PanelMesh:
    """Panel discretization of one or more closed inclusion boundaries.

    Panels of a component are contiguous and traversed counterclockwise,
    starting at the component's vertex (if any).  ``normals`` point into the
    inclusion, matching the inward normal used for fluxes.
    """

    kind: np.ndarray
    start: np.ndarray
    end: np.ndarray
    center: np.ndarray
    radius: np.ndarray
    theta0: np.ndarray
    theta1: np.ndarray
    length: np.ndarray
    component: np.ndarray
    panel_arc: np.ndarray
    ref_nodes: np.ndarray
    ref_weights: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray
    node_panel: np.ndarray
    node_component: np.ndarray
    arc_coordinate: np.ndarray
    grading_exponent: float
    panels_per_side: int
    breakpoints: np.ndarray
    vertex_points: dict = field(default_factory=dict)
    vertex_markers: tuple = ()
    config: BowtieConfig | None = None
    label: str = "bowtie"

    @property
    def order(self) -> int:
        return self.ref_nodes.size

    @property
    def n_panels(self) -> int:
        return self.kind.size

    @property
    def total_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def components(self) -> tuple[int, ...]:
        return tuple(int(c) for c in np.unique(self.component))

    @property
    def panels(self) -> list[Panel]:
        p = self.order
        out = []
        for k in range(self.n_panels):
            sl = slice(k * p, (k + 1) * p)
            out.append(
                Panel(
                    endpoints=(self.start[k].copy(), self.end[k].copy()),
                    nodes=self.nodes[sl],
                    weights=self.weights[sl],
                    normals=self.normals[sl],
                    component_id=int(self.component[k]),
                    arc_coordinate=float(self.panel_arc[k]),
                    length=float(self.length[k]),
                    kind="line" if self.kind[k] == LINE else "arc",
                )
            )
        return out

    def component_nodes(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.node_component == j)

    def component_panels(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.component == j)

    def points_at(self, pidx: np.ndarray, t: np.ndarray):
        """Positions and unit tangents at reference parameters ``t`` of panels ``pidx``."""
        pidx = np.asarray(pidx)
        t = np.asarray(t, dtype=float)
        lam = 0.5 * (t + 1.0)
        kind = self.kind[pidx]
        a, b = self.start[pidx], self.end[pidx]
        lin = a + lam[..., None] * (b - a)
        dl = b - a
        nrm = np.linalg.norm(dl, axis=-1)
        lin_tan = dl / np.where(nrm > 0, nrm, 1.0)[..., None]
        th0, th1 = self.theta0[pidx], self.theta1[pidx]
        th = th0 + lam * (th1 - th0)
        c, r = self.center[pidx], self.radius[pidx]
        arc = c + r[..., None] * np.stack([np.cos(th), np.sin(th)], axis=-1)
        sgn = np.sign(th1 - th0)
        arc_tan = sgn[..., None] * np.stack([-np.sin(th), np.cos(th)], axis=-1)
        is_arc = (kind == ARC)[..., None]
        return np.where(is_arc, arc, lin), np.where(is_arc, arc_tan, lin_tan)

    def node_positions_array(self) -> np.ndarray:
        return self.nodes

    def to_csv(self, path) -> None:
        """Write one row per node: x, y, nx, ny, weight, component_id, arc_coordinate."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "nx", "ny", "weight", "component_id", "arc_coordinate"])
            for i in range(self.total_nodes):
                w.writerow(
                    [
                        _fmt(self.nodes[i, 0]),
                        _fmt(self.nodes[i, 1]),
                        _fmt(self.normals[i, 0]),
                        _fmt(self.normals[i, 1]),
                        _fmt(self.weights[i]),
                        int(self.node_component[i]),
                        _fmt(self.arc_coordinate[i]),
                    ]
                )

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for arr in (self.nodes, self.weights, self.normals):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:16]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ----------------------------------------------------------------------
# boundary pieces


@dataclass
class _Piece:
    kind: int
    start: np.ndarray
    end: np.ndarray
    center: np.ndarray = field(default_factory=lambda: np.zeros(2))
    radius: float = 0.0
    theta0: float = 0.0
    theta1: float = 0.0
    graded_from: str | None = None  # "start" / "end": side touching the vertex

    @property
    def length(self) -> float:
        if self.kind == LINE:
            return float(np.linalg.norm(self.end - self.start))
        return abs(self.theta1 - self.theta0) * self.radius

    def point(self, lam: float) -> np.ndarray:
        if self.kind == LINE:
            return self.start + lam * (self.end - self.start)
        th = self.theta0 + lam * (self.theta1 - self.theta0)
        return self.center + self.radius * np.array([math.cos(th), math.sin(th)])

    def sub(self, l0: float, l1: float) -> "_Piece":
        if self.kind == LINE:
            return _Piece(LINE, self.point(l0), self.point(l1))
        t0 = self.theta0 + l0 * (self.theta1 - self.theta0)
        t1 = self.theta0 + l1 * (self.theta1 - self.theta0)
        return _Piece(ARC, self.point(l0), self.point(l1), self.center, self.radius, t0, t1)


def _unit(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle)])


def _inclusion_pieces(cfg: BowtieConfig, vertex: np.ndarray, psi: float) -> list[_Piece]:
    """Counterclockwise boundary of one inclusion opening in direction ``psi``."""
    half = 0.5 * cfg.alpha
    d, f = cfg.edge_length, cfg.fillet
    rc, delta, rcap = cfg.fillet_center_distance, cfg.fillet_angle, cfg.cap_radius
    e_out, e_in = psi - half, psi + half

    t1 = vertex + d * _unit(e_out)
    cf1 = vertex + rc * _unit(e_out + delta)
    t2 = vertex + rcap * _unit(e_out + delta)
    t2b = vertex + rcap * _unit(e_in - delta)
    cf2 = vertex + rc * _unit(e_in - delta)
    t1b = vertex + d * _unit(e_in)

    return [
        _Piece(LINE, vertex.copy(), t1, graded_from="start"),
        _Piece(ARC, t1, t2, cf1, f, e_out - 0.5 * math.pi, e_out + delta),
        _Piece(ARC, t2, t2b, vertex.copy(), rcap, e_out + delta, e_in - delta),
        _Piece(ARC, t2b, t1b, cf2, f, e_in - delta, e_in + 0.5 * math.pi),
        _Piece(LINE, t1b, vertex.copy(), graded_from="end"),
    ]


def _graded_breakpoints(n: int, g: float) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    return (k / n) ** g


def _segment_point_distance(a: np.ndarray, b: np.ndarray, q: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    lam = 0.0 if denom == 0.0 else min(1.0, max(0.0, float((q - a) @ ab) / denom))
    return float(np.linalg.norm(a + lam * ab - q))


def _refine(
    piece: _Piece,
    l0: float,
    l1: float,
    features: Sequence[tuple[np.ndarray, float, float]],
    own_vertex: np.ndarray | None,
    corner_min: float,
    out: list[tuple[float, float]],
    depth: int = 0,
) -> None:
    """Bisect ``[l0, l1]`` until every feature is at least ``kappa * h`` away.

    A panel touching a feature point is split down to that feature's floor
    length (``corner_min`` for the vertex).
    """
    a, b = piece.point(l0), piece.point(l1)
    h = (l1 - l0) * piece.length
    cut = None
    if depth < 400:
        if piece.kind == ARC and (l1 - l0) * abs(piece.theta1 - piece.theta0) > MAX_ARC_ANGLE:
            cut = 0.5
        for q, kappa, floor in features:
            if own_vertex is not None and q is own_vertex and piece.graded_from is not None:
                # distance along the edge, exact in the parameter
                near = l0 if piece.graded_from == "start" else 1.0 - l1
                if near == 0.0:
                    if h > corner_min:
                        cut = 0.5
                        break
                    continue
                dist = near * piece.length
            else:
                dist = _segment_point_distance(a, b, q)
            if dist < 1e-14:
                if h > floor:
                    cut = 0.5
            elif h * kappa > dist * (1.0 + 1e-9):
                cut = 0.5
    if cut is not None:
        m = l0 + cut * (l1 - l0)
        _refine(piece, l0, m, features, own_vertex, corner_min, out, depth + 1)
        _refine(piece, m, l1, features, own_vertex, corner_min, out, depth + 1)
    else:
        out.append((l0, l1))


def _mesh_from_pieces(
    comps: list[tuple[int, list[_Piece], np.ndarray | None]],
    n: int,
    g: float,
    order: int,
    features: list[tuple[np.ndarray, float, float]],
    corner_min: float,
    far_length: float,
    config,
    label: str,
) -> PanelMesh:
    ref_t, ref_w = np.polynomial.legendre.leggauss(order)
    rows = []
    comp_perims = {}
    bps = _graded_breakpoints(n, g)
    for cid, pieces, vertex in comps:
        s_acc = 0.0
        comp_rows = []
        for piece in pieces:
            if piece.graded_from is not None:
                lam = bps if piece.graded_from == "start" else 1.0 - bps[::-1]
                macro = list(zip(lam[:-1], lam[1:]))
            else:
                m = max(1, int(math.ceil(piece.length / far_length)))
                lam = np.linspace(0.0, 1.0, m + 1)
                macro = list(zip(lam[:-1], lam[1:]))
            intervals: list[tuple[float, float]] = []
            for l0, l1 in macro:
                _refine(piece, l0, l1, features, vertex, corner_min, intervals)
            for l0, l1 in intervals:
                sp = piece.sub(l0, l1)
                comp_rows.append((cid, sp, s_acc + l0 * piece.length, s_acc + l1 * piece.length))
            s_acc += piece.length
        comp_perims[cid] = s_acc
        rows.extend(comp_rows)

    P = len(rows)
    kind = np.array([r[1].kind for r in rows], dtype=int)
    start = np.array([r[1].start for r in rows])
    end = np.array([r[1].end for r in rows])
    center = np.array([r[1].center for r in rows])
    radius = np.array([r[1].radius for r in rows])
    theta0 = np.array([r[1].theta0 for r in rows])
    theta1 = np.array([r[1].theta1 for r in rows])
    length = np.array([r[1].length for r in rows])
    component = np.array([r[0] for r in rows], dtype=int)
    s0 = np.array([r[2] for r in rows])
    s1 = np.array([r[3] for r in rows])

    has_vertex = {cid: v is not None for cid, _, v in comps}
    perim = np.array([comp_perims[c] for c in component])

    def arc_coord(s, comp_ids):
        out = np.minimum(s, perim_for(comp_ids) - s)
        novert = np.array([not has_vertex[int(c)] for c in np.atleast_1d(comp_ids)])
        return np.where(novert, np.inf, out)

    def perim_for(comp_ids):
        return np.array([comp_perims[int(c)] for c in np.atleast_1d(comp_ids)])

    panel_arc = arc_coord(0.5 * (s0 + s1), component)

    mesh0 = PanelMesh(
        kind=kind, start=start, end=end, center=center, radius=radius,
        theta0=theta0, theta1=theta1, length=length, component=component,
        panel_arc=panel_arc, ref_nodes=ref_t, ref_weights=ref_w,
        nodes=np.zeros((0, 2)), weights=np.zeros(0), normals=np.zeros((0, 2)),
        tangents=np.zeros((0, 2)), node_panel=np.zeros(0, dtype=int),
        node_component=np.zeros(0, dtype=int), arc_coordinate=np.zeros(0),
        grading_exponent=g, panels_per_side=n, breakpoints=bps,
    )
    pidx = np.repeat(np.arange(P), order)
    tt = np.tile(ref_t, P)
    pts, tans = mesh0.points_at(pidx, tt)
    weights = np.repeat(0.5 * length, order) * np.tile(ref_w, P)
    normals = np.stack([-tans[:, 1], tans[:, 0]], axis=1)
    s_node = np.repeat(s0, order) + 0.5 * (tt + 1.0) * np.repeat(length, order)
    node_comp = component[pidx]
    vpoints = {cid: v for cid, _, v in comps if v is not None}
    markers = []
    for cid, _, v in comps:
        if v is None:
            continue
        cp = np.flatnonzero(component == cid)
        markers.append((int(cp[0]), int(cp[-1])))
    return PanelMesh(
        kind=kind, start=start, end=end, center=center, radius=radius,
        theta0=theta0, theta1=theta1, length=length, component=component,
        panel_arc=panel_arc, ref_nodes=ref_t, ref_weights=ref_w,
        nodes=pts, weights=weights, normals=normals, tangents=tans,
        node_panel=pidx, node_component=node_comp,
        arc_coordinate=arc_coord(s_node, node_comp),
        grading_exponent=g, panels_per_side=n, breakpoints=bps,
        vertex_points=vpoints, vertex_markers=tuple(markers), config=config,
        label=label,
    )


def _check_mesh_args(panels_per_side: int, grading: float) -> None:
    if int(panels_per_side) != panels_per_side or panels_per_side < 8:
        raise GeometryError(f"panels_per_side={panels_per_side} must be an integer >= 8")
    if not grading >= 1.0:
        raise GeometryError(f"grading exponent {grading} must be >= 1")


def default_grading(config: BowtieConfig) -> float:
    return max(3.0, 2.0 / config.beta)


def _features(config, vertices, refine_points, emitter_factor, corner_min, junction_min, comps):
    feats = [(v, VERTEX_KAPPA, corner_min) for v in vertices]
    for q in refine_points:
        feats.append((np.asarray(q, dtype=float), float(emitter_factor), corner_min))
    if junction_min is None:
        junction_min = 0.05 * config.fillet
    if math.isfinite(junction_min):
        for _, pieces, _ in comps:
            for piece in pieces[1:]:
                feats.append((piece.start, JUNCTION_KAPPA, float(junction_min)))
    return feats


def build_bowtie_boundary(
    config: BowtieConfig,
    panels_per_side: int = 32,
    grading: float | None = None,
    *,
    order: int = 16,
    refine_points: Iterable = (),
    refine_factor: float = 2.0,
    corner_min: float | None = None,
    junction_min: float | None = None,
) -> PanelMesh:
    """Corner-graded two-component mesh of the bow-tie.

    Each straight edge is split at the algebraic breakpoints ``L (k/n)^g``;
    every panel is then bisected until its length is at most its
    distance to either vertex (and ``1/refine_factor`` of its distance to
    each point of ``refine_points``).  The panel touching a vertex is
    split down to ``corner_min`` (default ``1e-10 * epsilon``).

    The curvature jumps where the fillets meet the edges and the cap leave a
    weak singularity in layer densities; panels are graded toward those
    junctions down to ``junction_min`` (default ``0.05 * fillet``; pass
    ``math.inf`` to switch this off).
    """
    _check_mesh_args(panels_per_side, grading if grading is not None else 1.0)
    g = default_grading(config) if grading is None else float(grading)
    _check_mesh_args(panels_per_side, g)
    v1, v2 = config.vertices
    comps = [
        (1, _inclusion_pieces(config, v1, math.pi), v1),
        (2, _inclusion_pieces(config, v2, 0.0), v2),
    ]
    cm = 1e-10 * config.epsilon if corner_min is None else float(corner_min)
    far = np.inf
    return _mesh_from_pieces(
        comps, int(panels_per_side), g, order,
        _features(config, (v1, v2), refine_points, refine_factor, cm, junction_min, comps),
        cm, far, config, "bowtie",
    )


def build_single_inclusion_boundary(
    config: BowtieConfig,
    panels_per_side: int = 32,
    grading: float | None = None,
    *,
    order: int = 16,
    refine_points: Iterable = (),
    refine_factor: float = 2.0,
    corner_min: float | None = None,
    junction_min: float | None = None,
) -> PanelMesh:
    """Mesh of the left inclusion alone (vertex ``V1``), same grading contract."""
    g = default_grading(config) if grading is None else float(grading)
    _check_mesh_args(panels_per_side, g)
    v1, _ = config.vertices
    comps = [(1, _inclusion_pieces(config, v1, math.pi), v1)]
    cm = 1e-10 * config.epsilon if corner_min is None else float(corner_min)
    far = np.inf
    return _mesh_from_pieces(
        comps, int(panels_per_side), g, order,
        _features(config, (v1,), refine_points, refine_factor, cm, junction_min, comps),
        cm, far, config, "single",
    )


def build_disk_boundary(center, radius: float, n_panels: int = 64, *, order: int = 16) -> PanelMesh:
    """Uniform mesh of a circle (validation geometry without corners)."""
    center = np.asarray(center, dtype=float)
    if radius <= 0 or n_panels < 4:
        raise GeometryError("disk needs positive radius and at least 4 panels")
    th = np.linspace(0.0, TWO_PI, n_panels + 1)
    pieces = [
        _Piece(
            ARC,
            center + radius * _unit(th[k]),
            center + radius * _unit(th[k + 1]),
            center,
            radius,
            th[k],
            th[k + 1],
        )
        for k in range(n_panels)
    ]
    return _mesh_from_pieces(
        [(1, pieces, None)], n_panels, 1.0, order, [], 0.0, np.inf, None, "disk"
    )


# ----------------------------------------------------------------------
# vertex charts


@dataclass(frozen=True)
class PolarChart:
    vertex_id: int
    r: np.ndarray
    theta: np.ndarray


def _alpha_of(config) -> float:
    if isinstance(config, BowtieConfig):
        return config.alpha
    alpha = float(config)
    if not 0.0 < alpha < math.pi:
        raise GeometryError(f"alpha must lie in (0, pi), got {alpha}")
    return alpha


def _vertex_point(vertex_id: int, config, physical: bool) -> np.ndarray:
    if vertex_id not in (1, 2):
        raise GeometryError(f"vertex_id must be 1 or 2, got {vertex_id}")
    s = 0.5 if not physical else 0.5 * config.epsilon
    return np.array([-s, 0.0]) if vertex_id == 1 else np.array([s, 0.0])


def polar_about_vertex(Y, vertex_id: int, config, *, physical: bool = False) -> PolarChart:
    """Polar coordinates about ``S_j`` (``V_j`` when ``physical``).

    ``theta`` is measured from the upper edge ray and increases through the
    exterior, so it lies in ``[0, 2*pi - alpha]``.  Points strictly inside the
    cone raise ``GeometryError``.
    """
    alpha = _alpha_of(config)
    Y = np.asarray(Y, dtype=float)
    S = _vertex_point(vertex_id, config, physical)
    D = Y - S
    if vertex_id == 1:
        D = D * np.array([-1.0, 1.0])
    r = np.hypot(D[..., 0], D[..., 1])
    theta = np.mod(np.arctan2(D[..., 1], D[..., 0]) - 0.5 * alpha, TWO_PI)
    top = TWO_PI - alpha
    # angular roundoff from forming Y - S grows like |S| / r near the vertex
    with np.errstate(divide="ignore"):
        tol = ANGLE_TOL + 8e-16 * (np.hypot(*S) + np.hypot(Y[..., 0], Y[..., 1])) / r
    wrap = theta > TWO_PI - tol
    theta = np.where(wrap, 0.0, theta)
    over = theta > top
    if np.any(over & (theta > top + tol) & (r > 0)):
        raise GeometryError("point lies strictly inside the cone")
    theta = np.where(over, top, theta)
    return PolarChart(vertex_id, r, theta)


def point_from_polar(r, theta, vertex_id: int, config, *, physical: bool = False) -> np.ndarray:
    """Inverse of :func:`polar_about_vertex`."""
    alpha = _alpha_of(config)
    r = np.asarray(r, dtype=float)
    ang = np.asarray(theta, dtype=float) + 0.5 * alpha
    D = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=-1)
    if vertex_id == 1:
        D = D * np.array([-1.0, 1.0])
    return _vertex_point(vertex_id, config, physical) + D


# ----------------------------------------------------------------------
# condition (A)


@dataclass(frozen=True)
class ConditionAResult:
    holds: bool
    center: np.ndarray
    radius: float
    witness: np.ndarray | None = None
    witness_edge: str | None = None
    ray_parameter: float | None = None
    ray_parameters: dict = field(default_factory=dict)

    def __str__(self) -> str:
        state = "holds" if self.holds else "fails"
        s = f"{state}: circle center=({self.center[0]:.12g}, {self.center[1]:.12g}) radius={self.radius:.12g}"
        if self.witness is not None:
            s += f"; meets {self.witness_edge} at ({self.witness[0]:.12g}, {self.witness[1]:.12g}) s={self.ray_parameter:.12g}"
        return s


def edge_rays(alpha: float) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Origin and unit direction of the four edge rays of the scaled cones."""
    c, s = math.cos(0.5 * alpha), math.sin(0.5 * alpha)
    S1, S2 = np.array([-0.5, 0.0]), np.array([0.5, 0.0])
    return {
        "upper edge of Gamma_1": (S1, np.array([-c, s])),
        "lower edge of Gamma_1": (S1, np.array([-c, -s])),
        "upper edge of Gamma_2": (S2, np.array([c, s])),
        "lower edge of Gamma_2": (S2, np.array([c, -s])),
    }


def check_condition_a(config, p: float, *, tol: float = 1e-12) -> ConditionAResult:
    """Circle through ``S1``, ``S2`` and ``e = (0, p)`` versus the cone edges.

    Since the circle passes through each vertex, the second intersection with
    the ray ``S + s d`` sits at ``s = -2 d . (S - C)``; the condition holds iff
    that root is not positive (roots below ``tol`` are the vertex itself).
    """
    alpha = _alpha_of(config)
    if p == 0:
        raise GeometryError("condition (A) is undefined for p = 0")
    if abs(p) > 1:
        raise GeometryError("|p| must not exceed 1")
    k = (p * p - 0.25) / (2.0 * p)
    C = np.array([0.0, k])
    radius = math.hypot(k, 0.5)
    params = {}
    witness = None
    for name, (S, d) in edge_rays(alpha).items():
        s = -2.0 * float(d @ (S - C))
        params[name] = s
        if s > tol and witness is None:
            witness = (name, s, S + s * d)
    if witness is None:
        return ConditionAResult(True, C, radius, ray_parameters=params)
    return ConditionAResult(False, C, radius, witness[2], witness[0], witness[1], params)


# ----------------------------------------------------------------------
# membership tests


def inside_cones(Y, alpha: float) -> np.ndarray:
    """Strict membership in the scaled open cones ``Gamma_1 u Gamma_2``."""
    Y = np.asarray(Y, dtype=float)
    t = math.tan(0.5 * alpha)
    y1, y2 = Y[..., 0], np.abs(Y[..., 1])
    return (y2 < t * (-y1 - 0.5)) | (y2 < t * (y1 - 0.5))


def _inside_one(config: BowtieConfig, X: np.ndarray, vertex: np.ndarray, psi: float) -> np.ndarray:
    D = X - vertex
    c, s = math.cos(psi), math.sin(psi)
    lx = c * D[..., 0] + s * D[..., 1]
    ly = -s * D[..., 0] + c * D[..., 1]
    rho = np.hypot(lx, ly)
    ang = np.arctan2(ly, lx)
    half = 0.5 * config.alpha
    delta = config.fillet_angle
    rc, f = config.fillet_center_distance, config.fillet
    in_wedge = np.abs(ang) < half
    angc = np.sign(ang) * (half - delta)
    dang = ang - angc
    disc = np.maximum(f * f - (rc * np.sin(dang)) ** 2, 0.0)
    rho_far = rc * np.cos(dang) + np.sqrt(disc)
    limit = np.where(np.abs(ang) <= half - delta, config.cap_radius, rho_far)
    return in_wedge & (rho < limit)


def inside_inclusions(config: BowtieConfig, X, *, single: bool = False) -> np.ndarray:
    """Strict membership in the physical inclusions (left one only if ``single``)."""
    X = np.asarray(X, dtype=float)
    v1, v2 = config.vertices
    out = _inside_one(config, X, v1, math.pi)
    if not single:
        out = out | _inside_one(config, X, v2, 0.0)
    return out


def scale_relation_check(config: BowtieConfig, Y) -> np.ndarray:
    """Whether ``epsilon*Y`` in the inclusions agrees with ``Y`` in the cones."""
    Y = np.asarray(Y, dtype=float)
    if np.any(np.hypot(*(config.epsilon * Y).T) >= config.mu):
        raise GeometryError("scaled point outside B_mu")
    return inside_inclusions(config, config.epsilon * Y) == inside_cones(Y, config.alpha)


# ----------------------------------------------------------------------
# configuration files


GEOMETRY_KEYS = ("alpha", "epsilon", "mu", "panels_per_side", "grading", "cap_fillet")


def load_config(path) -> dict:
    """Read a JSON or YAML configuration file into a plain dict."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise GeometryError(f"{path}: configuration must be a mapping")
    return data


def config_from_mapping(data: dict) -> tuple[BowtieConfig, dict]:
    """Split a mapping into a :class:`BowtieConfig` and mesh keyword arguments."""
    unknown = set(data) - set(GEOMETRY_KEYS)
    if unknown:
        raise GeometryError(f"unknown geometry keys: {sorted(unknown)}")
    cfg = BowtieConfig(
        alpha=float(data["alpha"]),
        epsilon=float(data["epsilon"]),
        mu=float(data.get("mu", 1.5)),
        cap_fillet=data.get("cap_fillet"),
    )
    mesh = {}
    if "panels_per_side" in data:
        mesh["panels_per_side"] = int(data["panels_per_side"])
    if "grading" in data:
        mesh["grading"] = float(data["grading"])
    return cfg, mesh
