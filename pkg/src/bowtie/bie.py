"""Single-layer boundary integral solver for exterior problems with floating
(per-component constant) boundary potentials and prescribed fluxes.

Representation: ``u = u_particular + S[rho] + const`` where ``S`` is the
single layer with kernel ``log|x - y| / (2 pi)``.  The unknown is
``mu = weight * rho`` at the Gauss nodes, which keeps the columns belonging
to tiny corner panels well scaled.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from . import quadrature as quad
from .analytic import DipoleSpec, dipole_gradient, dipole_potential
from .geometry import (
    BowtieConfig,
    PanelMesh,
    _segment_point_distance,
    build_bowtie_boundary,
    build_single_inclusion_boundary,
)

__all__ = [
    "ProblemSpec",
    "LinearSystem",
    "SolveResult",
    "AssemblyError",
    "SolveError",
    "assemble",
    "solve",
    "solve_problem",
    "default_mesh",
]

KINDS = ("emitter", "capacity", "auxiliary", "background", "single", "dirichlet")
RCOND_MIN = 1e-15
EMITTER_STANDOFF = 2.0


class AssemblyError(RuntimeError):
    pass


class SolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    """One exterior problem.

    ``emitter``    u = a.grad N + S[rho], u = c_j on each component, zero fluxes
    ``capacity``   q = S[rho], q = lambda_j, fluxes -1 / +1 on components 1 / 2
    ``auxiliary``  v = S[rho] + C, v = a.grad N on the boundary, zero total charge
    ``background`` u = a.X + S[rho], u = c_j, zero fluxes
    ``single``     emitter problem on the one-inclusion geometry
    ``dirichlet``  v = S[rho] + C with user data (manufactured solutions)
    """

    kind: str
    config: BowtieConfig | None = None
    dipole: DipoleSpec | None = None
    direction: tuple | None = None
    data: Callable | None = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.kind in ("emitter", "auxiliary", "single") and self.dipole is None:
            raise ValueError(f"{self.kind} problem needs a dipole")
        if self.kind == "background":
            a = np.asarray(self.direction, dtype=float)
            if a.shape != (2,) or abs(np.hypot(*a) - 1) > 1e-12:
                raise ValueError("background direction must be a unit vector")
        if self.kind == "dirichlet" and self.data is None:
            raise ValueError("dirichlet problem needs boundary data")
        if self.dipole is not None and self.config is not None and self.dipole.location is None:
            if abs(self.dipole.epsilon - self.config.epsilon) > 1e-15:
                object.__setattr__(self, "dipole", self.dipole.with_epsilon(self.config.epsilon))

    # constructors
    @classmethod
    def emitter(cls, config, direction, p):
        return cls("emitter", config, DipoleSpec(tuple(direction), p, config.epsilon))

    @classmethod
    def capacity(cls, config):
        return cls("capacity", config)

    @classmethod
    def auxiliary(cls, config, direction, p):
        return cls("auxiliary", config, DipoleSpec(tuple(direction), p, config.epsilon))

    @classmethod
    def background(cls, config, direction):
        return cls("background", config, direction=tuple(float(x) for x in direction))

    @classmethod
    def single_inclusion(cls, config, direction, p):
        return cls("single", config, DipoleSpec(tuple(direction), p, config.epsilon))

    @property
    def floating(self) -> bool:
        """Per-component unknown constants (as opposed to one global constant)."""
        return self.kind in ("emitter", "capacity", "background", "single")

    def particular_value(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.kind in ("emitter", "single"):
            return dipole_potential(X, self.dipole)
        if self.kind == "background":
            return X @ np.asarray(self.direction)
        return np.zeros(X.shape[:-1])

    def particular_gradient(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.kind in ("emitter", "single"):
            return dipole_gradient(X, self.dipole)
        if self.kind == "background":
            return np.broadcast_to(np.asarray(self.direction, dtype=float), X.shape).copy()
        return np.zeros(X.shape)

    def boundary_data(self, X) -> np.ndarray:
        if self.kind == "auxiliary":
            return dipole_potential(X, self.dipole)
        if self.kind == "dirichlet":
            return np.asarray(self.data(np.asarray(X, dtype=float)), dtype=float)
        raise ValueError("only auxiliary/dirichlet problems carry Dirichlet data")

    def fluxes(self, components) -> dict:
        """Prescribed ``int d_nu u ds`` per component (floating problems)."""
        if self.kind == "capacity":
            return {1: -1.0, 2: 1.0}
        return {j: 0.0 for j in components}

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "label": self.label}
        if self.config is not None:
            d["geometry"] = self.config.to_dict()
        if self.dipole is not None:
            d["dipole"] = self.dipole.to_dict()
        if self.direction is not None:
            d["direction"] = list(self.direction)
        return d


@dataclass
class LinearSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    mesh: PanelMesh
    spec: ProblemSpec
    unknown_labels: list
    assembly_time: float = 0.0


@dataclass(frozen=True)
class SolveResult:
    """Density, boundary constants and diagnostics of one solve.

    ``density`` is rho at the nodes; ``normal_derivative`` is ``d_nu u`` at
    the nodes (inward normal), computed from the jump relation.
    """

    spec: ProblemSpec
    mesh: PanelMesh
    density: np.ndarray
    constants: dict
    fluxes: dict
    residual: float
    condition_estimate: float
    normal_derivative: np.ndarray
    timings: dict

    @property
    def mu(self) -> np.ndarray:
        return self.density * self.mesh.weights

    @property
    def c1(self) -> float:
        return self.constants[1]

    @property
    def c2(self) -> float:
        return self.constants[2]

    @property
    def mesh_hash(self) -> str:
        return self.mesh.fingerprint()

    def to_dict(self) -> dict:
        return {
            "constants": {str(k): v for k, v in self.constants.items()},
            "fluxes": {str(k): v for k, v in self.fluxes.items()},
            "residual": self.residual,
            "condition_estimate": self.condition_estimate,
            "mesh_hash": self.mesh_hash,
            "total_nodes": self.mesh.total_nodes,
            "spec": self.spec.to_dict(),
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def density_csv(self, path) -> None:
        """Rows aligned with :meth:`PanelMesh.to_csv`."""
        m = self.mesh
        with open(path, "w") as fh:
            fh.write("x,y,density,normal_derivative,component_id\n")
            for i in range(m.total_nodes):
                fh.write(
                    f"{m.nodes[i, 0]:.17g},{m.nodes[i, 1]:.17g},{self.density[i]:.17g},"
                    f"{self.normal_derivative[i]:.17g},{int(m.node_component[i])}\n"
                )


# ----------------------------------------------------------------------


def _check_emitter(mesh: PanelMesh, spec: ProblemSpec) -> None:
    if spec.dipole is None:
        return
    e = spec.dipole.point
    for k in range(mesh.n_panels):
        d = _segment_point_distance(mesh.start[k], mesh.end[k], e)
        if d < EMITTER_STANDOFF * mesh.length[k]:
            raise AssemblyError(
                f"emitter at {e} is {d:.3g} from panel {k} of length {mesh.length[k]:.3g};"
                " refine the mesh toward the emitter"
            )


def single_layer_matrix(mesh: PanelMesh) -> np.ndarray:
    """Boundary single-layer matrix acting on ``mu``."""
    N, p = mesh.total_nodes, mesh.order
    A = np.empty((N, N))
    Y = mesh.nodes
    step = 512
    for s in range(0, N, step):
        X = Y[s : s + step]
        D0 = X[:, None, 0] - Y[None, :, 0]
        D1 = X[:, None, 1] - Y[None, :, 1]
        with np.errstate(divide="ignore"):
            A[s : s + step] = np.log(D0 * D0 + D1 * D1) / (2.0 * quad.TWO_PI)
    w = mesh.weights
    for k in range(mesh.n_panels):
        sl = slice(k * p, (k + 1) * p)
        A[sl, sl] = quad.self_slp_block(mesh, k) / w[None, sl]
    table = quad.boundary_near_table(mesh, "slp")
    cols = table.panels[:, None] * p + np.arange(p)[None, :]
    A[table.targets[:, None], cols] = table.rows[:, 0, :] / w[cols]
    return A


def dlp_adjoint_apply(mesh: PanelMesh, rho: np.ndarray) -> np.ndarray:
    """``K' rho`` at the nodes, with ``K'(x, y) = (x - y).n_x / (2 pi r^2)``, ``n = -nu``."""
    N, p = mesh.total_nodes, mesh.order
    Y = mesh.nodes
    n_out = -mesh.normals
    mu = rho * mesh.weights
    out = np.empty(N)
    step = 512
    for s in range(0, N, step):
        X = Y[s : s + step]
        D0 = X[:, None, 0] - Y[None, :, 0]
        D1 = X[:, None, 1] - Y[None, :, 1]
        r2 = D0 * D0 + D1 * D1
        with np.errstate(divide="ignore", invalid="ignore"):
            K = (D0 * n_out[s : s + step, 0, None] + D1 * n_out[s : s + step, 1, None]) / (quad.TWO_PI * r2)
        idx = np.arange(s, min(s + step, N))
        # drop self-panel and near entries; they are added back below
        same = mesh.node_panel[idx][:, None] == mesh.node_panel[None, :]
        K[same] = 0.0
        out[s : s + step] = K @ mu
    table = quad.boundary_near_table(mesh, "dlp_adjoint")
    cols = table.panels[:, None] * p + np.arange(p)[None, :]
    far = quad.kernel_values(
        "dlp_adjoint", mesh.nodes[table.targets][:, None, :], Y[cols], n_out[table.targets][:, None, :]
    )
    corr = np.einsum("mk,mk->m", table.rows[:, 0, :], rho[cols]) - np.einsum("mk,mk->m", far, mu[cols])
    np.add.at(out, table.targets, corr)
    for k in range(mesh.n_panels):
        sl = slice(k * p, (k + 1) * p)
        out[sl] += quad.self_dlp_adjoint_block(mesh, k) @ rho[sl]
    return out


def assemble(mesh: PanelMesh, spec: ProblemSpec) -> LinearSystem:
    """Dense system for ``(mu, constants)``."""
    t0 = time.perf_counter()
    comps = mesh.components
    if spec.kind in ("emitter", "capacity", "background") and spec.config is not None and len(comps) != 2:
        raise AssemblyError(f"{spec.kind} problem needs the two-component geometry")
    if spec.kind == "single" and len(comps) != 1:
        raise AssemblyError("single-inclusion problem needs a one-component mesh")
    if spec.kind == "capacity" and len(comps) != 2:
        raise AssemblyError("capacity problem needs two components")
    _check_emitter(mesh, spec)
    N = mesh.total_nodes
    S = single_layer_matrix(mesh)
    if spec.floating:
        m = len(comps)
        A = np.zeros((N + m, N + m))
        A[:N, :N] = S
        b = np.zeros(N + m)
        b[:N] = -spec.particular_value(mesh.nodes)
        target = spec.fluxes(comps)
        for c, j in enumerate(comps):
            on = mesh.node_component == j
            A[:N, N + c][on] = -1.0
            A[N + c, :N][on] = 1.0
            # flux through component j equals minus its total charge
            b[N + c] = -target[j]
        labels = [f"c{j}" for j in comps]
    else:
        A = np.zeros((N + 1, N + 1))
        A[:N, :N] = S
        A[:N, N] = 1.0
        A[N, :N] = 1.0
        b = np.zeros(N + 1)
        b[:N] = spec.boundary_data(mesh.nodes)
        labels = ["C"]
    return LinearSystem(A, b, mesh, spec, labels, time.perf_counter() - t0)


def solve(system: LinearSystem, *, refinement_steps: int = 2, tol: float = 1e-11) -> SolveResult:
    """LU with iterative refinement, then flux post-check by quadrature."""
    t0 = time.perf_counter()
    A, b = system.matrix, system.rhs
    anorm = np.abs(A).sum(axis=0).max()
    try:
        lu, piv = sla.lu_factor(A, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SolveError(f"factorization failed: {exc}") from exc
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or rcond < RCOND_MIN:
        raise AssemblyError(f"system is numerically singular (rcond={rcond:.3g})")
    x = sla.lu_solve((lu, piv), b)
    for _ in range(refinement_steps):
        x = x + sla.lu_solve((lu, piv), b - A @ x)
    bnorm = max(np.abs(b).max(), np.finfo(float).tiny)
    residual = float(np.abs(b - A @ x).max() / max(bnorm, np.abs(A).max() * np.abs(x).max()))
    if not np.isfinite(residual) or residual > tol:
        raise SolveError(f"residual {residual:.3g} above tolerance {tol:.3g}")
    t1 = time.perf_counter()

    mesh, spec = system.mesh, system.spec
    N = mesh.total_nodes
    mu = x[:N]
    rho = mu / mesh.weights
    consts = x[N:]
    if spec.floating:
        constants = {j: float(consts[c]) for c, j in enumerate(mesh.components)}
    else:
        constants = {"C": float(consts[0])}
    kprime = dlp_adjoint_apply(mesh, rho)
    nu = mesh.normals
    grad_p = spec.particular_gradient(mesh.nodes)
    dnu = -0.5 * rho - kprime + np.einsum("ij,ij->i", nu, grad_p)
    fluxes = {
        j: float(np.sum(mesh.weights[mesh.node_component == j] * dnu[mesh.node_component == j]))
        for j in mesh.components
    }
    t2 = time.perf_counter()
    return SolveResult(
        spec=spec,
        mesh=mesh,
        density=rho,
        constants=constants,
        fluxes=fluxes,
        residual=residual,
        condition_estimate=float(1.0 / rcond),
        normal_derivative=dnu,
        timings={"assemble": system.assembly_time, "solve": t1 - t0, "postprocess": t2 - t1},
    )


MESH_DEFAULTS = {"panels_per_side": 32, "grading": 3.0, "order": 16}


def default_mesh(spec: ProblemSpec, mesh_params: dict | None = None) -> PanelMesh:
    params = dict(MESH_DEFAULTS)
    params.update(mesh_params or {})
    if spec.config is None:
        raise ValueError("problem has no geometry; pass a mesh to assemble()")
    refine = [spec.dipole.point] if spec.dipole is not None and spec.dipole.location is None else []
    builder = build_single_inclusion_boundary if spec.kind == "single" else build_bowtie_boundary
    return builder(
        spec.config,
        int(params["panels_per_side"]),
        float(params["grading"]),
        order=int(params["order"]),
        refine_points=refine,
        **({"corner_min": params["corner_min"]} if "corner_min" in params else {}),
    )


def solve_problem(spec: ProblemSpec, mesh_params: dict | None = None, *, mesh: PanelMesh | None = None) -> SolveResult:
    """Mesh (unless given), assemble and solve."""
    mesh = default_mesh(spec, mesh_params) if mesh is None else mesh
    return solve(assemble(mesh, spec))
