"""Reference solutions that share no quadrature or assembly code with the
boundary integral solver: the disk image system (checked against a circular
harmonic series), manufactured sums of point sources, and a finite
difference solve on a truncated box."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .analytic import DipoleSpec, dipole_gradient, dipole_potential, newton_gradient, newton_potential
from .geometry import BowtieConfig, GeometryError, inside_inclusions

__all__ = [
    "OracleReport",
    "compare",
    "disk_image_oracle",
    "disk_series_oracle",
    "disk_uniform_field_solution",
    "ManufacturedSolution",
    "manufactured_solution",
    "FDGrid",
    "fd_reference_solve",
    "five_point_laplacian",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class OracleReport:
    oracle_name: str
    max_abs_error: float
    max_rel_error: float
    sample_count: int
    runtime: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def compare(name: str, exact, approx, runtime: float = 0.0, scale: float | None = None) -> OracleReport:
    """Errors of ``approx`` against ``exact`` (rows are samples, trailing axis vector components).

    The relative error is taken against ``scale`` if given, else against the
    per-sample magnitude of ``exact``.
    """
    exact = np.asarray(exact, dtype=float)
    approx = np.asarray(approx, dtype=float)
    if exact.ndim == 1:
        exact, approx = exact[:, None], approx[:, None]
    err = np.linalg.norm(approx - exact, axis=1)
    mag = np.linalg.norm(exact, axis=1) if scale is None else np.full(err.shape, scale)
    return OracleReport(name, float(err.max()), float(np.max(err / mag)), int(err.size), float(runtime))


# ----------------------------------------------------------------------
# disk


def _disk_setup(center, radius, spec: DipoleSpec, X):
    c = complex(*np.asarray(center, dtype=float))
    z0 = complex(*spec.point) - c
    if abs(z0) <= radius:
        raise GeometryError("emitter must lie outside the closed disk")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    z = X[:, 0] + 1j * X[:, 1] - c
    if np.any(np.abs(z) < radius * (1 - 1e-14)):
        raise GeometryError("samples must lie outside the disk")
    A = complex(*spec.a)
    return z, z0, A


def disk_image_oracle(disk_center, disk_radius: float, spec: DipoleSpec, X_samples):
    """Exact ``(u, grad u)`` outside a perfectly conducting disk with zero net flux.

    With ``A = a1 + i a2`` and the dipole at ``z0`` (relative to the centre),
    ``u = Re F - Re(conj(A)/conj(z0)) / (2 pi)`` where
    ``F = (A/(z - z0) - conj(A) z / (R^2 - conj(z0) z)) / (2 pi)``.
    ``Re F`` vanishes on the circle; the image term is regular outside and
    adds no charge, and the constant enforces decay.  The boundary value is
    ``-Re(A/z0)/(2 pi)``.
    """
    z, z0, A = _disk_setup(disk_center, disk_radius, spec, X_samples)
    R2 = disk_radius ** 2
    den = R2 - np.conj(z0) * z
    F = (A / (z - z0) - np.conj(A) * z / den) / TWO_PI
    dF = (-A / (z - z0) ** 2 - np.conj(A) * R2 / den ** 2) / TWO_PI
    u = F.real - (np.conj(A) / np.conj(z0)).real / TWO_PI
    grad = np.stack([dF.real, -dF.imag], axis=1)
    return u, grad


def disk_boundary_value(disk_center, disk_radius: float, spec: DipoleSpec) -> float:
    c = complex(*np.asarray(disk_center, dtype=float))
    z0 = complex(*spec.point) - c
    return float(-(complex(*spec.a) / z0).real / TWO_PI)


def disk_series_oracle(disk_center, disk_radius: float, spec: DipoleSpec, X_samples, n_terms: int = 2000):
    """Same problem by circular harmonics of the dipole trace (FFT), truncated at ``n_terms``.

    ``u - u_dipole = sum_{n>=1} (R/r)^n (-a_n cos n t - b_n sin n t)`` with
    ``a_n, b_n`` the Fourier coefficients of the dipole potential on the circle.
    """
    center = np.asarray(disk_center, dtype=float)
    X = np.atleast_2d(np.asarray(X_samples, dtype=float))
    if np.hypot(*(spec.point - center)) <= disk_radius:
        raise GeometryError("emitter must lie outside the closed disk")
    M = 4 * n_terms + 16
    t = TWO_PI * np.arange(M) / M
    ring = center + disk_radius * np.stack([np.cos(t), np.sin(t)], axis=1)
    coef = np.fft.rfft(dipole_potential(ring, spec)) / M
    n = np.arange(1, n_terms + 1)
    an, bn = 2 * coef[1 : n_terms + 1].real, -2 * coef[1 : n_terms + 1].imag
    D = X - center
    r = np.hypot(D[:, 0], D[:, 1])
    th = np.arctan2(D[:, 1], D[:, 0])
    q = (disk_radius / r)[:, None] ** n[None, :]
    cos, sin = np.cos(np.outer(th, n)), np.sin(np.outer(th, n))
    w = q * (-an * cos - bn * sin)
    corr = w.sum(axis=1)
    dr = (-(n[None, :] / r[:, None]) * w).sum(axis=1)
    dth = (q * n * (an * sin - bn * cos)).sum(axis=1) / r
    gx = dr * np.cos(th) - dth * np.sin(th)
    gy = dr * np.sin(th) + dth * np.cos(th)
    u = dipole_potential(X, spec) + corr
    g = dipole_gradient(X, spec) + np.stack([gx, gy], axis=1)
    return u, g


def disk_uniform_field_solution(disk_center, disk_radius: float, field, X_samples):
    """Grounded-disk response to the linear potential ``E . X``: ``E.D (1 - R^2/|D|^2)``."""
    E = np.asarray(field, dtype=float)
    D = np.atleast_2d(np.asarray(X_samples, dtype=float)) - np.asarray(disk_center, dtype=float)
    r2 = (D ** 2).sum(axis=1)
    ed = D @ E
    R2 = disk_radius ** 2
    u = ed * (1 - R2 / r2)
    g = E[None, :] * (1 - R2 / r2)[:, None] + (2 * R2 * ed / r2 ** 2)[:, None] * D
    return u, g


# ----------------------------------------------------------------------
# manufactured solutions


@dataclass(frozen=True)
class ManufacturedSolution:
    points: np.ndarray
    coefficients: np.ndarray

    def value(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return sum(c * newton_potential(X, p) for p, c in zip(self.points, self.coefficients))

    def gradient(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return sum(c * newton_gradient(X, p) for p, c in zip(self.points, self.coefficients))

    __call__ = value


def manufactured_solution(geometry, points, coefficients) -> ManufacturedSolution:
    """``sum c_i N_{p_i}`` with ``sum c_i = 0`` and every ``p_i`` inside an inclusion.

    ``geometry`` is a ``BowtieConfig`` (bow-tie), ``(config, "single")`` or an
    ``inside(X) -> bool array`` callable.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    c = np.asarray(coefficients, dtype=float)
    if P.shape[0] != c.size:
        raise ValueError("one coefficient per point")
    if abs(c.sum()) > 1e-14 * max(1.0, np.abs(c).sum()):
        raise ValueError("coefficients must sum to zero for decay")
    if isinstance(geometry, BowtieConfig):
        inside = inside_inclusions(geometry, P)
    elif isinstance(geometry, tuple):
        inside = inside_inclusions(geometry[0], P, single=True)
    else:
        inside = np.asarray(geometry(P), dtype=bool)
    if not np.all(inside):
        raise GeometryError("all source points must lie strictly inside inclusions")
    return ManufacturedSolution(P, c)


# ----------------------------------------------------------------------
# finite differences


def five_point_laplacian(values: np.ndarray, h: float) -> np.ndarray:
    """Standard 5-point Laplacian at interior nodes of a 2D array."""
    v = values
    return (v[2:, 1:-1] + v[:-2, 1:-1] + v[1:-1, 2:] + v[1:-1, :-2] - 4 * v[1:-1, 1:-1]) / (h * h)


@dataclass
class FDGrid:
    """Grid values of ``u`` (NaN inside inclusions); node ``(i, j)`` sits at
    ``origin + h * (i, j)`` with ``i`` along ``x``."""

    values: np.ndarray
    correction: np.ndarray  # u - u_particular
    origin: np.ndarray
    h: float
    particular: Callable
    runtime: float = 0.0
    iterations: int = 0

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def node(self, i, j) -> np.ndarray:
        return self.origin + self.h * np.stack([np.asarray(i, float), np.asarray(j, float)], axis=-1)

    def sample(self, X) -> np.ndarray:
        """Bilinear interpolation of ``u - u_particular`` plus the exact particular part."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        s = (X - self.origin) / self.h
        i0 = np.floor(s).astype(int)
        f = s - i0
        W = self.correction
        i, j = i0[:, 0], i0[:, 1]
        val = (
            W[i, j] * (1 - f[:, 0]) * (1 - f[:, 1])
            + W[i + 1, j] * f[:, 0] * (1 - f[:, 1])
            + W[i, j + 1] * (1 - f[:, 0]) * f[:, 1]
            + W[i + 1, j + 1] * f[:, 0] * f[:, 1]
        )
        return val + self.particular(X)

    def to_files(self, prefix) -> None:
        """``prefix.bin`` (float64, C order, NaN inside) and ``prefix.csv`` header."""
        self.values.astype("<f8").tofile(f"{prefix}.bin")
        with open(f"{prefix}.csv", "w") as fh:
            fh.write("nx,ny,h,origin_x,origin_y\n")
            fh.write(f"{self.shape[0]},{self.shape[1]},{self.h:.17g},{self.origin[0]:.17g},{self.origin[1]:.17g}\n")


def _crossing(inside: Callable, P: np.ndarray, Q: np.ndarray, iters: int = 60) -> np.ndarray:
    """Fraction ``t`` in (0, 1] where ``P + t (Q - P)`` enters the inclusion (P outside, Q inside)."""
    lo = np.zeros(P.shape[0])
    hi = np.ones(P.shape[0])
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ins = inside(P + mid[:, None] * (Q - P))
        hi = np.where(ins, mid, hi)
        lo = np.where(ins, lo, mid)
    return 0.5 * (lo + hi)


def fd_reference_solve(
    config: BowtieConfig,
    particular: Callable,
    constants: dict,
    boundary_values: Callable,
    box_size: float,
    grid_n: int,
    *,
    emitter=None,
    tol: float = 1e-12,
) -> FDGrid:
    """Shortley-Weller finite differences for ``w = u - u_particular`` on ``[-L, L]^2``.

    ``w`` is harmonic outside the inclusions (the emitter singularity is in
    the particular part); ``w = c_j - u_particular`` on inclusion ``j`` (at the
    exact boundary crossing of each grid arm) and ``w = boundary_values - u_particular``
    on the box edges.  ``emitter`` marks a point where the particular part
    is singular; its grid node (if any) gets NaN in ``values``.
    """
    if grid_n > 4096 or grid_n < 8:
        raise ValueError("grid_n must lie in [8, 4096]")
    t0 = time.perf_counter()
    L = float(box_size)
    n = int(grid_n)
    h = 2 * L / n
    origin = np.array([-L, -L])
    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    XY = origin + h * np.stack([ii, jj], axis=-1).astype(float)
    flat = XY.reshape(-1, 2)
    inside_fn = lambda P: inside_inclusions(config, P)
    ins = inside_fn(flat).reshape(n + 1, n + 1)
    edge = np.zeros_like(ins)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
    unknown = ~ins & ~edge
    W = np.full((n + 1, n + 1), np.nan)
    be = edge & ~ins
    bpts = XY[be]
    W[be] = boundary_values(bpts) - particular(bpts)

    def comp_value(P):
        j = np.where(P[:, 0] < 0, 1, 2)
        c = np.where(j == 1, constants[1], constants[2])
        return c - particular(P)

    idx = -np.ones((n + 1, n + 1), dtype=int)
    idx[unknown] = np.arange(unknown.sum())
    N = int(unknown.sum())
    ui, uj = np.nonzero(unknown)
    rows, cols, vals = [], [], []
    rhs = np.zeros(N)
    diag = np.zeros(N)
    me = idx[ui, uj]
    arms = {}
    for axis, (di, dj) in enumerate(((1, 0), (-1, 0), (0, 1), (0, -1))):
        ni, nj = ui + di, uj + dj
        n_in = ins[ni, nj]
        length = np.full(N, h)
        value = np.zeros(N)
        if np.any(n_in):
            P = XY[ui[n_in], uj[n_in]]
            Q = XY[ni[n_in], nj[n_in]]
            t = _crossing(inside_fn, P, Q)
            length[n_in] = t * h
            value[n_in] = comp_value(P + t[:, None] * (Q - P))
        n_edge = edge[ni, nj] & ~n_in
        value[n_edge] = W[ni[n_edge], nj[n_edge]]
        arms[(di, dj)] = (ni, nj, n_in, n_edge, length, value)
    for pair in (((1, 0), (-1, 0)), ((0, 1), (0, -1))):
        (a_ni, a_nj, a_in, a_edge, a_len, a_val) = arms[pair[0]]
        (b_ni, b_nj, b_in, b_edge, b_len, b_val) = arms[pair[1]]
        s = a_len + b_len
        ca = 2.0 / (a_len * s)
        cb = 2.0 / (b_len * s)
        diag -= ca + cb
        for coef, ni, nj, nin, nedge, val in ((ca, a_ni, a_nj, a_in, a_edge, a_val), (cb, b_ni, b_nj, b_in, b_edge, b_val)):
            known = nin | nedge
            rhs[known] -= coef[known] * val[known]
            free = ~known
            rows.append(me[free])
            cols.append(idx[ni[free], nj[free]])
            vals.append(coef[free])
    rows.append(me)
    cols.append(me)
    vals.append(diag)
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    # scale rows so the matrix has unit diagonal magnitude
    Dinv = sp.diags(-1.0 / diag)
    A = (Dinv @ A).tocsr()
    rhs = -rhs / diag
    x, iters = _solve_sparse(A, rhs, tol)
    W[unknown] = x
    full = np.full_like(W, np.nan)
    ok = ~np.isnan(W)
    if emitter is not None:
        ok &= np.hypot(*(XY - np.asarray(emitter, dtype=float)).transpose(2, 0, 1)) > 1e-12
    full[ok] = W[ok] + particular(XY[ok])
    return FDGrid(full, W, origin, h, particular, time.perf_counter() - t0, iters)


def _solve_sparse(A, b, tol):
    import pyamg

    ml = pyamg.ruge_stuben_solver(A, max_coarse=500)
    res = []
    x = ml.solve(b, tol=tol, accel="bicgstab", maxiter=400, residuals=res)
    return x, len(res)
