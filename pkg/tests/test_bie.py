from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest

from bowtie import quadrature as quad
from bowtie.analytic import DipoleSpec
from bowtie.bie import AssemblyError, ProblemSpec, assemble, solve, solve_problem
from bowtie.geometry import BowtieConfig, build_bowtie_boundary, build_disk_boundary

mp.mp.dps = 30


@pytest.mark.parametrize("x", [-0.97, -0.3, 0.0, 0.51, 0.999])
def test_legendre_log_moments_against_mpmath(x):
    M = quad.legendre_log_moments(np.array([x]), 12)[0]
    for m in (0, 1, 5, 11):
        ref = mp.quad(lambda t: mp.log(abs(x - t)) * mp.legendre(m, t), [-1, x, 1])
        assert M[m] == pytest.approx(float(ref), abs=1e-14)


def test_log_product_weights_integrate_polynomials():
    n = 16
    t, _ = quad.gauss_rule(n)
    W = quad.log_product_weights(n)
    for k in (0, 3, 15):
        for i in (0, 7, 15):
            ref = mp.quad(lambda s: mp.log(abs(t[i] - s)) * s ** k, [-1, t[i], 1])
            assert W[i] @ t ** k == pytest.approx(float(ref), abs=1e-13)


def test_interpolation_reproduces_polynomials():
    t = np.linspace(-1, 1, 7)
    L = quad.interpolation_matrix(t, 16)
    nodes, _ = quad.gauss_rule(16)
    f = lambda s: 3 * s ** 15 - s ** 4 + 0.5
    assert np.allclose(L @ f(nodes), f(t), atol=1e-12)


def test_bernstein_rho_on_known_ellipse():
    a, b = np.array([-1.0, 0.0]), np.array([1.0, 0.0])
    rho = 2.5
    th = np.linspace(0, 2 * np.pi, 13)
    z = 0.5 * (rho * np.exp(1j * th) + np.exp(-1j * th) / rho)
    X = np.c_[z.real, z.imag]
    assert np.allclose(quad.bernstein_rho(a[None], b[None], X), rho, rtol=1e-12)
    # the real axis beyond the endpoints
    assert quad.bernstein_rho(a, b, np.array([-1.5, 0.0])) > 1


@pytest.fixture(scope="module")
def disk_mesh():
    return build_disk_boundary((0.0, 0.0), 1.0, 32)


def test_self_block_on_arc_against_mpmath(disk_mesh):
    m = disk_mesh
    k = 3
    B = quad.self_slp_block(m, k)
    t, _ = quad.gauss_rule(m.order)
    th0, th1 = m.theta0[k], m.theta1[k]
    dens = lambda tt: 1 + 0.3 * tt - tt ** 2
    i = 5
    xi = th0 + 0.5 * (t[i] + 1) * (th1 - th0)
    x = (math.cos(xi), math.sin(xi))

    def integrand(s):
        th = th0 + 0.5 * (s + 1) * (th1 - th0)
        r = mp.sqrt((x[0] - mp.cos(th)) ** 2 + (x[1] - mp.sin(th)) ** 2)
        return mp.log(r) / (2 * mp.pi) * dens(s) * 0.5 * abs(th1 - th0)

    ref = mp.quad(integrand, [-1, t[i], 1])
    assert B[i] @ dens(t) == pytest.approx(float(ref), abs=1e-14)


@pytest.mark.parametrize("kind", ["slp", "grad"])
@pytest.mark.parametrize("offset", [1e-2, 1e-5])
def test_near_rows_against_mpmath(disk_mesh, kind, offset):
    m = disk_mesh
    k = 7
    th0, th1 = m.theta0[k], m.theta1[k]
    xm = 0.5 * (th0 + th1) + 0.1 * (th1 - th0)
    X = np.array([[(1 + offset) * math.cos(xm), (1 + offset) * math.sin(xm)]])
    R = quad.near_rows(m, kind, X, np.array([k]))[0]
    t, _ = quad.gauss_rule(m.order)
    dens = lambda s: np.cos(2 * s) + s
    got = R @ dens(t)

    def integrand(s, comp):
        th = th0 + 0.5 * (s + 1) * (th1 - th0)
        dx, dy = X[0, 0] - mp.cos(th), X[0, 1] - mp.sin(th)
        r2 = dx * dx + dy * dy
        val = mp.log(r2) / (4 * mp.pi) if kind == "slp" else (dx if comp == 0 else dy) / (2 * mp.pi * r2)
        return val * (mp.cos(2 * s) + s) * 0.5 * abs(th1 - th0)

    split = [-1, 2 * (xm - th0) / (th1 - th0) - 1, 1]
    for c in range(got.size):
        ref = mp.quad(lambda s: integrand(s, c), split)
        assert got[c] == pytest.approx(float(ref), rel=1e-11, abs=1e-13)


# ----------------------------------------------------------------------
# solver


def test_capacity_solution_invariants(solve):
    q = solve("capacity", 0.05)
    m = q.mesh
    for j, target in ((1, 1.0), (2, -1.0)):
        assert q.mu[m.node_component == j].sum() == pytest.approx(target, abs=1e-12)
    assert q.fluxes[1] == pytest.approx(-1.0, abs=1e-8)
    assert q.fluxes[2] == pytest.approx(1.0, abs=1e-8)
    assert q.c1 == pytest.approx(-q.c2, abs=1e-12)
    assert q.residual < 1e-11
    assert q.c2 > q.c1


def test_emitter_fluxes_vanish(solve):
    u = solve("emitter", 0.05, (0.0, 1.0), 0.5)
    for j in (1, 2):
        assert abs(u.fluxes[j]) < 1e-7
        assert abs(u.mu[u.mesh.node_component == j].sum()) < 1e-12


def test_constants_converge_under_refinement():
    cfg = BowtieConfig(math.pi / 2, 0.05)
    spec = ProblemSpec.capacity(cfg)
    a = solve_problem(spec)
    b = solve_problem(spec, {"panels_per_side": 40})
    assert abs(a.c2 - b.c2) < 1e-9 * abs(a.c2)


def test_zero_data_gives_zero_density():
    cfg = BowtieConfig(math.pi / 2, 0.1)
    res = solve_problem(ProblemSpec("dirichlet", cfg, data=lambda X: np.zeros(len(X))))
    assert np.abs(res.density).max() == 0.0
    assert res.constants["C"] == 0.0


def test_emitter_too_close_to_coarse_mesh_is_rejected():
    cfg = BowtieConfig(math.pi / 2, 0.1)
    mesh = build_bowtie_boundary(cfg, 8, 3)  # no refinement toward the emitter
    spec = ProblemSpec.emitter(cfg, (1.0, 0.0), 0.0)
    with pytest.raises(AssemblyError):
        assemble(mesh, spec)


def test_wrong_mesh_for_problem_is_rejected():
    cfg = BowtieConfig(math.pi / 2, 0.1)
    disk = build_disk_boundary((5.0, 0.0), 1.0, 16)
    with pytest.raises(AssemblyError):
        assemble(disk, ProblemSpec.capacity(cfg))


def test_problem_spec_validation():
    cfg = BowtieConfig(math.pi / 2, 0.1)
    with pytest.raises(ValueError):
        ProblemSpec("nonsense", cfg)
    with pytest.raises(ValueError):
        ProblemSpec("emitter", cfg)
    with pytest.raises(ValueError):
        ProblemSpec.background(cfg, (1.0, 1.0))
    # the emitter height follows the geometry's epsilon
    spec = ProblemSpec("emitter", cfg, DipoleSpec((1.0, 0.0), 0.5, 1.0))
    assert np.allclose(spec.dipole.point, [0.0, 0.05])


def test_disk_uniform_field_response():
    from bowtie.oracles import disk_uniform_field_solution
    from bowtie.fields import eval_gradient

    mesh = build_disk_boundary((0.0, 0.0), 1.0, 64)
    spec = ProblemSpec("dirichlet", None, data=lambda X: -X[:, 0], label="disk")
    res = solve(assemble(mesh, spec))
    X = np.array([[1.5, 0.2], [-0.3, 2.0], [0.0, -1.05]])
    _, g = disk_uniform_field_solution((0, 0), 1.0, (1.0, 0.0), X)
    # the grounded-disk response minus the applied field is the layer potential
    assert np.allclose(eval_gradient(res, X), g - [1.0, 0.0], atol=1e-12)
