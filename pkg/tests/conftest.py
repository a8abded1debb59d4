from __future__ import annotations

import functools
import math

import pytest

from bowtie.bie import ProblemSpec, solve_problem
from bowtie.experiments import SweepConfig, epsilon_sweep
from bowtie.geometry import BowtieConfig

RIGHT = math.pi / 2


@functools.lru_cache(maxsize=None)
def cached_solve(kind: str, eps: float, direction=(1.0, 0.0), p: float = 0.0, alpha: float = RIGHT):
    cfg = BowtieConfig(alpha, eps)
    spec = {
        "emitter": lambda: ProblemSpec.emitter(cfg, direction, p),
        "capacity": lambda: ProblemSpec.capacity(cfg),
        "auxiliary": lambda: ProblemSpec.auxiliary(cfg, direction, p),
        "background": lambda: ProblemSpec.background(cfg, direction),
        "single": lambda: ProblemSpec.single_inclusion(cfg, direction, p),
    }[kind]()
    return solve_problem(spec)


@functools.lru_cache(maxsize=None)
def cached_sweep(case: str, epsilons: tuple | None = None):
    data = {"case": case}
    if epsilons is not None:
        data["epsilons"] = list(epsilons)
    return epsilon_sweep(SweepConfig.from_mapping(data))


@pytest.fixture(scope="session")
def solve():
    return cached_solve


@pytest.fixture(scope="session")
def sweep():
    return cached_sweep
