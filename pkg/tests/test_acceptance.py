"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The sweeps are the default configurations (seven epsilons from 0.1 to 0.001)
and take several minutes in total on one core.
"""
from __future__ import annotations

import math
import subprocess
import sys

import numpy as np
import pytest

from bowtie.analytic import (
    DipoleSpec,
    dipole_potential,
    exponents,
    grad_angle_phi,
    grad_corner_singular_B,
    phi_center,
)
from bowtie.bie import ProblemSpec, solve_problem
from bowtie.fields import eval_gradient, eval_potential, sigma_consistency
from bowtie.geometry import (
    BowtieConfig,
    build_bowtie_boundary,
    build_disk_boundary,
    inside_cones,
    inside_inclusions,
    point_from_polar,
)
from bowtie.oracles import compare, disk_image_oracle, fd_reference_solve, manufactured_solution

RIGHT = math.pi / 2


@pytest.fixture
def verdict(capsys):
    def emit(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail

    return emit


def _check(report, name):
    c = report.check(name)
    return bool(c["pass"]), c["value"]


def _exterior_sample(cfg: BowtieConfig, n: int, seed: int) -> np.ndarray:
    """Points between 0.05 eps and 20 eps from the origin, clear of vertices and emitter."""
    eps = cfg.epsilon
    rng = np.random.default_rng(seed)
    r = eps * 10 ** rng.uniform(-1, 1.3, 6 * n)
    t = rng.uniform(0, 2 * np.pi, 6 * n)
    X = np.c_[r * np.cos(t), r * np.sin(t)]
    X = X[~inside_inclusions(cfg, X)]
    dv = np.minimum(np.hypot(*(X - cfg.vertex(1)).T), np.hypot(*(X - cfg.vertex(2)).T))
    X = X[(dv > 0.05 * eps) & (np.hypot(*X.T) > 0.05 * eps)]
    return X[:n]


# ----------------------------------------------------------------------


def test_criterion_1_analytic_identities(verdict):
    worst = 0.0
    rng = np.random.default_rng(0)
    for alpha in (0.5, RIGHT, 2.2):
        beta = exponents(alpha).beta
        for vid in (1, 2):
            Y = point_from_polar(10 ** rng.uniform(-4, 0.5, 1000), rng.uniform(0, 2 * math.pi - alpha, 1000), vid, alpha)
            S = np.array([-0.5 if vid == 1 else 0.5, 0.0])
            r = np.hypot(*(Y - S).T)
            g = np.hypot(*grad_corner_singular_B(Y, vid, alpha).T)
            worst = max(worst, np.max(np.abs(g / (beta * r ** (beta - 1)) - 1)))
        Y = rng.uniform(-3, 3, (4000, 2))
        Y = Y[~inside_cones(Y, alpha)][:1000]
        assert len(Y) == 1000
        Q = phi_center(alpha)
        dist = np.where(Y[:, 1] >= 0, np.hypot(*(Y - Q).T), np.hypot(*(Y - Q * [1, -1]).T))
        worst = max(worst, np.max(np.abs(np.hypot(*grad_angle_phi(Y, alpha).T) * dist - 1)))
    e = exponents(RIGHT)
    exact = e.beta == 2 / 3 and e.gamma == 2.0
    verdict(1, worst < 1e-12 and exact, f"max identity error {worst:.2e}; beta, gamma exact: {exact}")


def test_criterion_2_oracle_equivalence(verdict):
    # disk: BIE against the image system at standoff >= 0.1 R
    spec = DipoleSpec((0.0, 1.0), location=(3.0, 0.0))
    rng = np.random.default_rng(0)
    r = rng.uniform(1.1, 4.0, 400)
    t = rng.uniform(0, 2 * np.pi, 400)
    X = np.c_[r * np.cos(t), r * np.sin(t)]
    X = X[np.hypot(*(X - spec.point).T) > 0.2]
    res = solve_problem(ProblemSpec("emitter", None, spec), mesh=build_disk_boundary((0, 0), 1.0, 128))
    _, g = disk_image_oracle((0, 0), 1.0, spec, X)
    disk_err = compare("disk", g, eval_gradient(res, X)).max_rel_error

    # manufactured solution down to 1e-3 eps along the bisector
    cfg = BowtieConfig(RIGHT, 0.05)
    ms = manufactured_solution(cfg, [[-0.3, 0.05], [0.4, -0.1]], [1.0, -1.0])
    mres = solve_problem(ProblemSpec("dirichlet", cfg, data=ms.value), mesh=build_bowtie_boundary(cfg, 32, 3))
    d = np.geomspace(1e-3, 0.3, 25) * cfg.epsilon
    B = np.concatenate([np.c_[0.5 * cfg.epsilon - d, 0 * d], np.c_[-0.5 * cfg.epsilon + d, 0 * d]])
    ms_err = compare("manufactured", ms.gradient(B), eval_gradient(mres, B), scale=1.0).max_abs_error

    # finite differences for Case 2 at eps = 0.1, box data from the BIE field
    u = solve_problem(ProblemSpec.emitter(BowtieConfig(RIGHT, 0.1), (0.0, 1.0), 0.0))
    grid = fd_reference_solve(u.spec.config, lambda P: dipole_potential(P, u.spec.dipole), {1: 0.0, 2: 0.0},
                              lambda P: eval_potential(u, P), 0.3, 512, emitter=u.spec.dipole.point)
    Y = rng.uniform(-0.28, 0.28, (3000, 2))
    Y = Y[~inside_inclusions(u.spec.config, Y)]
    dv = np.minimum(np.hypot(*(Y - [-0.05, 0]).T), np.hypot(*(Y - [0.05, 0]).T))
    Y = Y[(dv > 0.05) & (np.hypot(*Y.T) > 0.05)]
    fd = grid.sample(Y)
    ok = np.isfinite(fd)  # cells with all four nodes outside the inclusions
    ref = eval_potential(u, Y[ok])
    fd_err = np.abs(ref - fd[ok]).max() / np.abs(ref).max()

    passed = disk_err < 1e-8 and ms_err < 1e-7 and fd_err < 1e-2 and ok.sum() >= 1000
    verdict(2, passed, f"disk {disk_err:.2e} (<1e-8), manufactured {ms_err:.2e} (<1e-7), "
                       f"FD {fd_err:.2e} (<1e-2) on {ok.sum()} points")


def test_criterion_3_symmetry_and_sign(verdict, solve):
    eps = 0.05
    cfg = BowtieConfig(RIGHT, eps)
    X = _exterior_sample(cfg, 400, 7)
    lines, ok = [], len(X) >= 100

    u1 = solve("emitter", eps, (1.0, 0.0), 0.0)
    skew = np.abs(eval_potential(u1, X) + eval_potential(u1, X * [-1, 1])).max()
    skew = max(skew, abs(u1.c1 + u1.c2))
    ok &= skew < 1e-9
    lines.append(f"case1 skew {skew:.1e}")

    u2 = solve("emitter", eps, (0.0, 1.0), 0.0)
    odd = np.abs(eval_potential(u2, X) + eval_potential(u2, X * [1, -1])).max()
    odd = max(odd, abs(u2.c1), abs(u2.c2))
    ok &= odd < 1e-9
    lines.append(f"case2 odd/zero constants {odd:.1e}")

    u3 = solve("emitter", eps, (0.0, 1.0), 0.5)
    gap = abs(u3.c2 - u3.c1)
    ok &= gap < 1e-9
    lines.append(f"case3 gap {gap:.1e}")

    q = solve("capacity", eps)
    comp = q.mesh.node_component
    hopf = bool(np.all(q.normal_derivative[comp == 1] < 0) and np.all(q.normal_derivative[comp == 2] > 0))
    ok &= hopf
    lines.append(f"hopf sign on {comp.size} nodes {hopf}")

    # v with boundary data d1 N (emitter at the origin): 0 < v < d1 N on the right, mirrored on the left
    v = solve("auxiliary", eps, (1.0, 0.0), 0.0)
    vv, d1 = eval_potential(v, X), dipole_potential(X, v.spec.dipole)
    right = X[:, 0] > 0
    between = bool(np.all((0 < vv[right]) & (vv[right] < d1[right]))
                   and np.all((d1[~right] < vv[~right]) & (vv[~right] < 0)))
    ok &= between and right.sum() >= 100
    lines.append(f"0<v<d1N ({right.sum()}+{(~right).sum()} pts) {between}")

    # v with boundary data d2 N: |v| <= |d2 N| <= 1 / (2 pi |X|)
    w = solve("auxiliary", eps, (0.0, 1.0), 0.0)
    ww, d2 = eval_potential(w, X), dipole_potential(X, w.spec.dipole)
    bound = bool(np.all(np.abs(ww) <= np.abs(d2)) and np.all(np.abs(d2) <= 1 / (2 * np.pi * np.hypot(*X.T))))
    ok &= bound
    lines.append(f"|v|<=|d2N|<=1/(2pi|X|) {bound}")

    verdict(3, bool(ok), f"{len(X)} points; " + ", ".join(lines))


def test_criterion_4_case1_near_vertex_law(verdict, sweep):
    rep = sweep("case1")
    names = [c["name"] for c in rep.checks if c["name"].startswith("spatial_slope")]
    spatial = [_check(rep, n) for n in names]
    eps_ok, eps_slope = _check(rep, "epsilon_slope")
    ok = len(spatial) == len(rep.config["epsilons"]) and all(p for p, _ in spatial) and eps_ok
    worst = max(abs(s + 1 / 3) for _, s in spatial)
    verdict(4, ok, f"spatial slopes within {worst:.1e} of -1/3 at {len(spatial)} eps; "
                   f"cross-eps slope {eps_slope:.4f} (target -5/3 +/- 0.1)")


def test_criterion_5_case1_mid_range_and_gaps(verdict, sweep):
    rep = sweep("case1")
    names = ("mid_range_band", "potential_gap_band", "capacity_gap_band", "near_vertex_flux_band", "hopf_sign")
    results = {n: _check(rep, n) for n in names}
    ok = all(p for p, _ in results.values())
    verdict(5, ok, ", ".join(f"{n} {v if isinstance(v, bool) else round(v, 4)}" for n, (_, v) in results.items()))


def test_criterion_6_case2_non_enhancement(verdict, sweep):
    rep = sweep("case2")
    band_ok, band = _check(rep, "case2_sup_band")
    slope_ok, slope = _check(rep, "case2_sup_epsilon_slope")
    verdict(6, band_ok and slope_ok, f"sup band ratio {band:.4f} (<3), cross-eps slope {slope:.2e} (|.|<0.1)")


def test_criterion_7_case3(verdict, sweep):
    rep = sweep("case3")
    spatial = [_check(rep, c["name"]) for c in rep.checks if c["name"].startswith("spatial_slope")]
    names = ("epsilon_slope", "condition_a", "upper_bound_band", "zero_gap", "a1_negative", "a1_radius_stable",
             "extremal_values", "extremal_max_scaled_band")
    results = {n: _check(rep, n) for n in names}
    ok = all(p for p, _ in spatial) and bool(spatial) and all(p for p, _ in results.values())
    a1 = results["a1_negative"][1]
    verdict(7, ok, f"slopes ok at {len(spatial)} eps, eps slope {results['epsilon_slope'][1]:.4f}, "
                   f"upper-bound band {results['upper_bound_band'][1]:.3f}, a1 in [{min(a1):.4f}, {max(a1):.4f}], "
                   f"extremal rel err {results['extremal_values'][1]:.1e}, "
                   f"max*eps band {results['extremal_max_scaled_band'][1]:.3f}")


def test_criterion_8_single_inclusion(verdict, sweep):
    single, bowtie = sweep("single"), sweep("case1")
    names = [c["name"] for c in bowtie.checks if c["name"].startswith("spatial_slope")] + ["epsilon_slope"]
    diffs = {n: abs(single.check(n)["value"] - bowtie.check(n)["value"]) for n in names}
    worst = max(diffs.values())
    verdict(8, worst < 0.05 and single.passed,
            f"max exponent difference {worst:.4f} (<0.05); eps slope single {single.check('epsilon_slope')['value']:.4f} "
            f"vs bow-tie {bowtie.check('epsilon_slope')['value']:.4f}")


def test_criterion_9_decomposition_identity(verdict):
    eps = 0.05
    cfg = BowtieConfig(RIGHT, eps)
    rng = np.random.default_rng(5)
    devs = []
    for direction, p in (((1.0, 0.0), 0.0), ((0.0, 1.0), 0.5)):
        u = solve_problem(ProblemSpec.emitter(cfg, direction, p))
        q = solve_problem(ProblemSpec.capacity(cfg), mesh=u.mesh)
        v = solve_problem(ProblemSpec.auxiliary(cfg, direction, p), mesh=u.mesh)
        # half near the vertices, half in the wider exterior
        near = np.concatenate([
            point_from_polar(eps * 10 ** rng.uniform(-3, -0.7, 50), rng.uniform(0, 1.5 * np.pi, 50), vid, cfg,
                             physical=True)
            for vid in (1, 2)
        ])
        far = rng.uniform(-0.5, 0.5, (1000, 2))
        far = far[~inside_inclusions(cfg, far)]
        far = far[np.hypot(*(far - u.spec.dipole.point).T) > 0.2 * eps][:100]
        X = np.concatenate([near, far])
        assert len(X) == 200
        devs.append(sigma_consistency(u, q, v, X))
    verdict(9, max(devs) < 1e-7, f"case1 {devs[0]:.2e}, case3 {devs[1]:.2e} (<1e-7) on 200 points each")


def test_criterion_10_determinism(verdict, tmp_path):
    argv = ["--case", "2", "--epsilons", "0.1", "0.05", "0.02", "0.01", "0.005"]
    blobs = []
    for run in ("a", "b"):
        out = tmp_path / run
        proc = subprocess.run([sys.executable, "-m", "bowtie", "sweep", *argv, "--out", str(out)],
                              capture_output=True, text=True)
        assert proc.returncode in (0, 1), proc.stderr
        blobs.append((out / "report.json").read_bytes())
    same = blobs[0] == blobs[1]
    verdict(10, same, f"two sweep runs, report.json {len(blobs[0])} bytes, byte-identical: {same}")
