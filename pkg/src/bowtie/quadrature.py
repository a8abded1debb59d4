"""Panel quadrature for the logarithmic single layer and its derivatives.

* far pairs: the panel's own Gauss rule;
* self pairs (single layer): Legendre product integration of ``log|t - t_i|``
  plus Gauss on the smooth remainder;
* near pairs: adaptive bisection of the source panel in its parameter, with
  the density interpolated from the panel nodes and a 32-point rule on each
  accepted piece.

Everything works on the unknown ``mu = weight * density``, i.e. matrices map
``mu`` to values.  Near rows are returned per (target, panel) pair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg

from .geometry import ARC, LINE, PanelMesh

TWO_PI = 2.0 * math.pi

# Bernstein-ellipse parameters: beyond FAR_RHO the native rule is used,
# subpanels are accepted once they reach ACCEPT_RHO.
FAR_RHO = 3.5
ACCEPT_RHO = 2.5
SUB_ORDER = 32
MAX_LEVELS = 60

KERNELS = ("slp", "grad", "dlp_adjoint")


@lru_cache(maxsize=None)
def gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = npleg.leggauss(n)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def legendre_vandermonde(t: np.ndarray, n: int) -> np.ndarray:
    """``V[i, m] = P_m(t_i)`` for ``m < n``."""
    return npleg.legvander(np.asarray(t, dtype=float), n - 1)


@lru_cache(maxsize=None)
def nodes_to_coefficients(n: int) -> np.ndarray:
    t, _ = gauss_rule(n)
    C = np.linalg.inv(legendre_vandermonde(t, n))
    C.setflags(write=False)
    return C


def interpolation_matrix(t_eval: np.ndarray, n: int) -> np.ndarray:
    """Values at ``t_eval`` of the degree ``n-1`` interpolant through the Gauss nodes."""
    return legendre_vandermonde(t_eval, n) @ nodes_to_coefficients(n)


def legendre_log_moments(x: np.ndarray, n: int) -> np.ndarray:
    """``M[i, m] = int_{-1}^{1} log|x_i - t| P_m(t) dt`` for ``|x_i| < 1``.

    Uses ``P_m = (P'_{m+1} - P'_{m-1})/(2m+1)``, integration by parts and
    Neumann's integral for the second-kind functions ``Q_m``.
    """
    x = np.asarray(x, dtype=float)
    lp, lm = np.log1p(x), np.log1p(-x)
    Q = np.empty((n + 1,) + x.shape)
    Q[0] = 0.5 * (lp - lm)
    if n >= 1:
        Q[1] = x * Q[0] - 1.0
    for k in range(1, n):
        Q[k + 1] = ((2 * k + 1) * x * Q[k] - k * Q[k - 1]) / (k + 1)
    J = np.empty_like(Q)
    for k in range(n + 1):
        J[k] = lm - (-1.0) ** k * lp + 2.0 * Q[k]
    M = np.empty(x.shape + (n,))
    M[..., 0] = (1 + x) * lp + (1 - x) * lm - 2.0
    for m in range(1, n):
        M[..., m] = (J[m + 1] - J[m - 1]) / (2 * m + 1)
    return M


@lru_cache(maxsize=None)
def log_product_weights(n: int) -> np.ndarray:
    """``W[i, k]``: ``int log|t_i - t| f(t) dt ~ sum_k W[i, k] f(t_k)`` at Gauss nodes."""
    t, _ = gauss_rule(n)
    W = legendre_log_moments(t, n) @ nodes_to_coefficients(n)
    W.setflags(write=False)
    return W


# ----------------------------------------------------------------------
# kernels; ``n_x`` is the outward (exterior-facing) normal at the target


def kernel_values(kind: str, X: np.ndarray, Y: np.ndarray, n_x: np.ndarray | None = None):
    D = X - Y
    r2 = D[..., 0] ** 2 + D[..., 1] ** 2
    if kind == "slp":
        return np.log(r2) / (2.0 * TWO_PI)
    if kind == "grad":
        return D / (TWO_PI * r2[..., None])
    if kind == "dlp_adjoint":
        return (D[..., 0] * n_x[..., 0] + D[..., 1] * n_x[..., 1]) / (TWO_PI * r2)
    raise ValueError(f"unknown kernel {kind!r}")


def kernel_width(kind: str) -> int:
    return 2 if kind == "grad" else 1


def bernstein_rho(a: np.ndarray, b: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Bernstein-ellipse parameter of ``X`` w.r.t. the segment ``[a, b]``."""
    za = a[..., 0] + 1j * a[..., 1]
    zb = b[..., 0] + 1j * b[..., 1]
    zx = X[..., 0] + 1j * X[..., 1]
    z = (2.0 * zx - za - zb) / (zb - za)
    w = np.abs(z + np.sqrt(z - 1.0) * np.sqrt(z + 1.0))
    # the two branches are reciprocal; pick the one outside the unit circle
    return np.maximum(w, 1.0 / w)


# ----------------------------------------------------------------------
# near-field integration by adaptive subdivision


def near_rows(
    mesh: PanelMesh,
    kind: str,
    targets: np.ndarray,
    panels: np.ndarray,
    target_normals: np.ndarray | None = None,
) -> np.ndarray:
    """Quadrature rows for (target, source panel) pairs.

    Returns ``R`` of shape ``(npairs, width, p)`` with
    ``int_panel K(x, y) rho(y) ds_y ~ sum_k R[., ., k] rho_k``.
    """
    p = mesh.order
    width = kernel_width(kind)
    npairs = targets.shape[0]
    out = np.zeros((npairs, width, p))
    if npairs == 0:
        return out
    ts, ws = gauss_rule(SUB_ORDER)
    pair = np.arange(npairs)
    lo = -np.ones(npairs)
    hi = np.ones(npairs)
    for level in range(MAX_LEVELS + 1):
        if pair.size == 0:
            break
        pid = panels[pair]
        pa, _ = mesh.points_at(pid, lo)
        pb, _ = mesh.points_at(pid, hi)
        X = targets[pair]
        rho = bernstein_rho(pa, pb, X)
        done = (rho >= ACCEPT_RHO) | (level == MAX_LEVELS)
        if np.any(done):
            dp = pair[done]
            dlo, dhi = lo[done], hi[done]
            half = 0.5 * (dhi - dlo)
            tq = 0.5 * (dhi + dlo)[:, None] + half[:, None] * ts[None, :]
            Yq, _ = mesh.points_at(pid[done][:, None], tq)
            speed = 0.5 * mesh.length[pid[done]]
            wq = (half * speed)[:, None] * ws[None, :]
            nx = None if target_normals is None else target_normals[dp][:, None, :]
            K = kernel_values(kind, targets[dp][:, None, :], Yq, nx)
            if width == 1:
                K = K[..., None]
            L = interpolation_matrix(tq.ravel(), p).reshape(tq.shape + (p,))
            contrib = np.einsum("mq,mqc,mqk->mck", wq, K, L)
            np.add.at(out, dp, contrib)
        keep = ~done
        pair = np.repeat(pair[keep], 2)
        mid = 0.5 * (lo[keep] + hi[keep])
        lo, hi = (
            np.stack([lo[keep], mid], axis=1).ravel(),
            np.stack([mid, hi[keep]], axis=1).ravel(),
        )
    return out


def find_near_pairs(
    mesh: PanelMesh, X: np.ndarray, exclude_node_panel: np.ndarray | None = None, rho: float = FAR_RHO
):
    """All (target, panel) pairs with Bernstein parameter below ``rho``.

    ``exclude_node_panel[i]`` (boundary targets) removes the self pair.
    """
    X = np.asarray(X, dtype=float)
    mid = 0.5 * (mesh.start + mesh.end)
    chord = np.linalg.norm(mesh.end - mesh.start, axis=1)
    # an ellipse with parameter rho has semi-major axis (rho + 1/rho)/2 * chord/2
    reach = 0.25 * (rho + 1.0 / rho) * chord + 0.1 * mesh.length
    ti, pj = [], []
    block = max(1, 4_000_000 // max(1, mesh.n_panels))
    for s in range(0, X.shape[0], block):
        Xb = X[s : s + block]
        d = np.hypot(Xb[:, None, 0] - mid[None, :, 0], Xb[:, None, 1] - mid[None, :, 1])
        i, j = np.nonzero(d < reach[None, :])
        if i.size:
            r = bernstein_rho(mesh.start[j], mesh.end[j], Xb[i])
            sel = r < rho
            ti.append(i[sel] + s)
            pj.append(j[sel])
    ti = np.concatenate(ti) if ti else np.zeros(0, dtype=int)
    pj = np.concatenate(pj) if pj else np.zeros(0, dtype=int)
    if exclude_node_panel is not None and ti.size:
        keep = exclude_node_panel[ti] != pj
        ti, pj = ti[keep], pj[keep]
    return ti, pj


def self_slp_block(mesh: PanelMesh, k: int) -> np.ndarray:
    """Single-layer block of panel ``k`` on its own nodes, acting on ``rho``."""
    p = mesh.order
    t, w = gauss_rule(p)
    speed = 0.5 * mesh.length[k]
    W = log_product_weights(p)
    dt = t[:, None] - t[None, :]
    if mesh.kind[k] == LINE:
        smooth = np.full((p, p), math.log(speed))
    else:
        dth = mesh.theta1[k] - mesh.theta0[k]
        R = mesh.radius[k]
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.log(2.0 * R * np.abs(np.sin(0.25 * dth * dt)) / np.abs(dt))
        g[np.diag_indices(p)] = math.log(speed)
        smooth = g
    return speed * (W + smooth * w[None, :]) / TWO_PI


def self_dlp_adjoint_block(mesh: PanelMesh, k: int) -> np.ndarray:
    """``K'`` on a panel's own nodes: zero on segments, ``1/(4 pi R)`` on convex arcs."""
    p = mesh.order
    if mesh.kind[k] == LINE:
        return np.zeros((p, p))
    _, w = gauss_rule(p)
    speed = 0.5 * mesh.length[k]
    return np.tile(speed * w / (2.0 * TWO_PI * mesh.radius[k]), (p, 1))


@dataclass
class NearTable:
    """Near-field corrections for boundary or off-boundary targets."""

    targets: np.ndarray  # target indices
    panels: np.ndarray
    rows: np.ndarray  # (npairs, width, p) acting on rho


def boundary_near_table(mesh: PanelMesh, kind: str) -> NearTable:
    ti, pj = find_near_pairs(mesh, mesh.nodes, exclude_node_panel=mesh.node_panel)
    normals = -mesh.normals if kind == "dlp_adjoint" else None
    rows = near_rows(mesh, kind, mesh.nodes[ti], pj, None if normals is None else normals[ti])
    return NearTable(ti, pj, rows)


def dense_kernel_matrix(mesh: PanelMesh, kind: str, X: np.ndarray, normals=None) -> np.ndarray:
    """Native-rule kernel matrix acting on ``mu = weight * rho`` (no corrections)."""
    Y = mesh.nodes
    return kernel_values(kind, X[:, None, :], Y[None, :, :], None if normals is None else normals[:, None, :])
