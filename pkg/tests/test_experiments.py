from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bowtie.experiments import (
    FitRejected,
    Report,
    SweepConfig,
    band_ratio,
    fit_exponent,
    fit_power_law,
    ray_profile,
    region_samples,
    upper_bound_check,
    write_outputs,
)
from bowtie.fields import FieldSample
from bowtie.geometry import BowtieConfig, GeometryError, inside_inclusions


@settings(max_examples=100, deadline=None)
@given(slope=st.floats(-5, 5), logc=st.floats(-10, 10), lo=st.floats(-8, 0), span=st.floats(1, 6))
def test_fit_recovers_exact_power_laws(slope, logc, lo, span):
    x = np.logspace(lo, lo + span, 12)
    y = math.exp(logc) * x ** slope
    fit = fit_power_law(x, y)
    assert abs(fit.slope - slope) < 1e-12 * max(1.0, abs(slope)) + 1e-12
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points == 12


def test_fit_window_selection():
    x = np.logspace(-6, 0, 61)
    y = np.where(x < 1e-3, x ** -0.5, 1e-3 ** -0.5 * (x / 1e-3) ** -2)
    assert fit_power_law(x, y, (1e-6, 1e-3)).slope == pytest.approx(-0.5, abs=1e-12)
    assert fit_power_law(x, y, (1e-3, 1.0)).slope == pytest.approx(-2.0, abs=1e-12)


def test_fit_rejections():
    x = np.logspace(0, 2, 8)
    rng = np.random.default_rng(0)
    noisy = x ** -1 * np.exp(rng.normal(0, 0.5, x.size))
    with pytest.raises(FitRejected):
        fit_power_law(x, noisy)
    soft = fit_power_law(x, noisy, strict=False)
    assert not soft.accepted
    with pytest.raises(ValueError):
        fit_power_law(x[:4], x[:4])
    with pytest.raises(ValueError):
        fit_power_law(x, -x)
    with pytest.raises(ValueError):
        fit_power_law(np.ones(6), np.arange(1.0, 7.0))


def test_fit_exponent_from_samples():
    r = np.logspace(-5, -3, 9)
    samples = [
        FieldSample(np.array([0.0, 0.0]), 0.0, np.array([ri ** (-1 / 3), 0.0]), 1.0, ri, 1.0, "near_vertex")
        for ri in r
    ]
    fit = fit_exponent(samples)
    assert fit.slope == pytest.approx(-1 / 3, abs=1e-12)
    eps = np.logspace(-3, -1, 6)
    assert fit_exponent(np.c_[eps, eps ** (-5 / 3)], "epsilon").slope == pytest.approx(-5 / 3, abs=1e-12)
    with pytest.raises(ValueError):
        fit_exponent(samples, "bogus")


def test_band_ratio():
    assert band_ratio([1.0, 2.0, 1.5]) == 2.0
    assert band_ratio([1.0, -1.0]) == math.inf
    assert math.isnan(band_ratio([]))


def test_sweep_config_validation_and_hash(tmp_path):
    a = SweepConfig.from_mapping({"case": "case1"})
    b = SweepConfig.from_mapping({"case": 1})
    assert a.config_hash == b.config_hash
    c = SweepConfig.from_mapping({"case": "case1", "fit_window": [1e-4, 1e-3]})
    assert c.config_hash != a.config_hash
    assert SweepConfig.from_mapping({"case": "3"}).p == 0.5
    for bad in (
        {"case": "case9"},
        {"case": "case1", "epsilons": [0.01, 0.1]},
        {"case": "case1", "epsilons": [0.2, 0.1]},
        {"case": "case2", "p": 0.3},
        {"case": "case3", "p": 0.0},
        {"case": "case1", "fit_window": [1e-3, 1e-5]},
        {"case": "case1", "colour": "red"},
    ):
        with pytest.raises(ValueError):
            SweepConfig.from_mapping(bad)
    (tmp_path / "s.yaml").write_text("case: case2\nepsilons: [0.1, 0.05]\ntolerances:\n  case2_band: 2.5\n")
    s = SweepConfig.load(tmp_path / "s.yaml")
    assert s.epsilons == (0.1, 0.05) and s.tol["case2_band"] == 2.5


def test_region_samples_stay_outside():
    cfg = BowtieConfig(math.pi / 2, 0.01)
    X = region_samples(cfg, near=0.1, emitter=np.array([0.0, 0.005]))
    assert X.shape[0] > 500
    assert not np.any(inside_inclusions(cfg, X))
    dv = np.minimum(np.hypot(*(X - cfg.vertex(1)).T), np.hypot(*(X - cfg.vertex(2)).T))
    assert dv.min() >= 0.1 * cfg.epsilon
    assert np.hypot(*(X - [0.0, 0.005]).T).min() > 0.05 * cfg.epsilon


def test_ray_profile_and_bound(solve):
    u = solve("emitter", 0.1, (1.0, 0.0), 0.0)
    prof = ray_profile(u, 2, relative_radii=np.logspace(-5, -3, 7))
    assert all(s.regime_tag == "near_vertex" for s in prof)
    assert fit_exponent(prof).slope == pytest.approx(-1 / 3, abs=0.02)
    with pytest.raises(GeometryError):
        ray_profile(u, 2, direction=(1.0, 0.0), relative_radii=[0.1])
    chk = upper_bound_check(u, region_samples(u.spec.config, emitter=u.spec.dipole.point), "case1")
    assert 0 < chk["sup_ratio"] < math.inf


def test_report_json_and_outputs_are_deterministic(tmp_path):
    rep = Report("abc", {"case": "case2"}, [{"epsilon": 0.1, "profile": [[1e-5, 2.0], [1e-4, 1.5]],
                                              "case2_sup": 0.19}],
                 [], [], [{"name": "x", "value": 1.0, "threshold": 2.0, "pass": True}], {})
    write_outputs(rep, tmp_path / "a")
    write_outputs(rep, tmp_path / "b")
    for name in ("report.json", "samples.csv", "profile_eps_0.1.dat", "case2_sup_vs_eps.dat"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    data = json.loads((tmp_path / "a" / "report.json").read_text())
    assert set(data) >= {"config_hash", "fits", "bands", "pass"}
    assert data["pass"] is True
