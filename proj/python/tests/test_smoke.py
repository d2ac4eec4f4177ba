import math

import numpy as np
import pytest

import lamegap


def test_rho_branches():
    assert lamegap.rho(0, 2, 2, 1e-4) == pytest.approx(100.0)
    assert lamegap.rho(0, 3, 2, math.exp(-10)) == pytest.approx(10.0)
    assert lamegap.rho(2, 4, 2, 0.5) == 1.0
    assert lamegap.rho_form(1, 2, 2) == "|ln eps|"


def test_gap_integral_closed_form():
    eps = 1e-4
    s = math.sqrt(eps)
    assert lamegap.gap_integral(0, 2, 2, eps) == pytest.approx(2 / s * math.atan(1 / s), rel=1e-8)
    assert lamegap.gap_integral(1, 2, 2, eps) == pytest.approx(math.log1p(1 / eps), rel=1e-8)


def test_rate_equivalence():
    rep = lamegap.verify_rate_equivalence(1, 2, 2, [1e-2, 1e-3, 1e-4, 1e-5])
    assert rep["pass"]
    assert rep["spread"] < 1.1


def test_classify_and_hypothesis_error():
    p = lamegap.classify("phi_tilde_three", m=4, k=1)
    assert p["locus"] == "cylinder_surface"
    assert p["lower_rate"]["eps_exponent"] == "-3/4"
    with pytest.raises(lamegap.HypothesisViolation):
        lamegap.classify("phi_two", m=2)
    with pytest.raises(ValueError):
        lamegap.classify("phi_six", m=2)


def test_config_roundtrip():
    names = lamegap.builtin_config_names()
    assert "gram" in names
    cfg = lamegap.builtin_config("gram")
    assert lamegap.normalize_config(cfg) == cfg
    with pytest.raises(ValueError):
        lamegap.normalize_config({"unknown_key": 1})


def small_config(preset):
    cfg = lamegap.builtin_config("gram")
    cfg["data"]["preset"] = preset
    cfg["geometry"]["grading"].update(q_v=2, g_h=0.5, bulk_size=0.3)
    cfg["eps_list"] = [1e-2, 1e-3, 1e-4]
    return cfg


def test_sweep_records_and_determinism():
    cfg = small_config("generic")
    recs = lamegap.run_sweep(cfg, workers=2)
    assert [r["eps"] for r in recs] == [1e-2, 1e-3, 1e-4]
    assert all(r["ok"] for r in recs)
    assert isinstance(recs[0]["Q"], np.ndarray) and recs[0]["gram"].shape == (3, 3)
    assert lamegap.sweep_report(cfg, workers=1) == lamegap.sweep_report(cfg, workers=3)


def test_solve_record():
    rec = lamegap.solve(small_config("zero"), 1e-2)
    assert rec["schema"] == "lamegap.decomposition/1"
    assert rec["Q"] == [0.0, 0.0, 0.0]


def test_acceptance_criterion():
    r = lamegap.run_criterion(1)
    assert r["pass"], r["detail"]
    assert lamegap.criterion_count == 11
