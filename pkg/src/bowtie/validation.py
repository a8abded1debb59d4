"""Self-check suite behind ``bowtie validate``."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .analytic import DipoleSpec, corner_singular_B, exponents
from .bie import ProblemSpec, solve_problem
from .fields import eval_gradient
from .geometry import (
    BowtieConfig,
    build_bowtie_boundary,
    build_disk_boundary,
    check_condition_a,
    inside_inclusions,
)
from .oracles import compare, disk_image_oracle, disk_series_oracle, manufactured_solution


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    runtime: float

    def line(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        return f"{state} {self.name}: {self.value:.3e} (threshold {self.threshold:.1e}, {self.runtime:.1f}s)"


def _timed(name, threshold, fn) -> CheckResult:
    t0 = time.perf_counter()
    value = float(fn())
    return CheckResult(name, value <= threshold, value, threshold, time.perf_counter() - t0)


def _disk_samples(n=400, seed=0):
    rng = np.random.default_rng(seed)
    r = rng.uniform(1.1, 4.0, n)
    t = rng.uniform(0, 2 * np.pi, n)
    X = np.c_[r * np.cos(t), r * np.sin(t)]
    return X[np.hypot(*(X - [3.0, 0.0]).T) > 0.2]


def _image_vs_series():
    spec = DipoleSpec((0.0, 1.0), location=(3.0, 0.0))
    X = _disk_samples()
    _, g1 = disk_image_oracle((0, 0), 1.0, spec, X)
    _, g2 = disk_series_oracle((0, 0), 1.0, spec, X)
    return compare("image_vs_series", g1, g2).max_rel_error


def _disk_bie():
    spec = DipoleSpec((0.0, 1.0), location=(3.0, 0.0))
    X = _disk_samples()
    res = solve_problem(ProblemSpec("emitter", None, spec), mesh=build_disk_boundary((0, 0), 1.0, 128))
    _, g = disk_image_oracle((0, 0), 1.0, spec, X)
    return compare("disk_bie", g, eval_gradient(res, X)).max_rel_error


def _manufactured():
    cfg = BowtieConfig(math.pi / 2, 0.05)
    ms = manufactured_solution(cfg, [[-0.3, 0.05], [0.4, -0.1]], [1.0, -1.0])
    res = solve_problem(ProblemSpec("dirichlet", cfg, data=ms.value), mesh=build_bowtie_boundary(cfg, 32, 3))
    r = np.geomspace(1e-3, 0.3, 20) * cfg.epsilon
    X = np.c_[0.5 * cfg.epsilon - r, 0 * r]
    rng = np.random.default_rng(1)
    Y = rng.uniform(-0.8, 0.8, (400, 2))
    Y = Y[~inside_inclusions(cfg, Y)]
    X = np.concatenate([X, Y])
    return compare("manufactured", ms.gradient(X), eval_gradient(res, X), scale=1.0).max_abs_error


def _harmonic_B():
    # five-point Laplacian of the corner function at a few scaled points
    cfg = math.pi / 2
    h = 1e-3
    pts = np.array([[0.2, 0.1], [0.5, 0.4], [0.6, -0.5]])
    off = np.array([[h, 0], [-h, 0], [0, h], [0, -h]])
    lap = sum(corner_singular_B(pts + o, 2, cfg) for o in off) - 4 * corner_singular_B(pts, 2, cfg)
    return np.abs(lap / h ** 2).max()


def _condition_a():
    ok = check_condition_a(math.pi / 2, 0.5).holds and not check_condition_a(0.9 * math.pi, 0.1).holds
    return 0.0 if ok else 1.0


def _exponents():
    e = exponents(math.pi / 2)
    return abs(e.beta - 2 / 3) + abs(e.gamma - 2.0)


def run_validation(quick: bool = False) -> list[CheckResult]:
    checks = [
        _timed("exponents", 1e-15, _exponents),
        _timed("corner function harmonic", 1e-4, _harmonic_B),
        _timed("condition (A) reference cases", 0.5, _condition_a),
        _timed("disk image vs series", 1e-10, _image_vs_series),
    ]
    if not quick:
        checks.append(_timed("disk BIE vs image", 1e-8, _disk_bie))
        checks.append(_timed("bow-tie manufactured solution", 1e-8, _manufactured))
    return checks
