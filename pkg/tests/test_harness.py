import csv
import json
import math

import numpy as np
import pytest

from convexa import harness as H
from convexa.functionals import EstimateCI

SMALL = {"sphere_samples": 2000, "measure_samples": 4000, "subspace_trials": 4, "dirs": 30,
         "vrad_budget": 1000, "refine_steps": 5}


def cfg(check, subject, **kw):
    d = {"experiment_id": kw.pop("experiment_id", check), "check": check, "subject": subject,
         "budgets": dict(SMALL, **kw.pop("budgets", {}))}
    d.update(kw)
    return H.ExperimentConfig.from_dict(d)


def body(variant, **params):
    dim = params.pop("dim", None)
    spec = {"variant": variant, "params": params}
    if dim is not None:
        spec["dim"] = dim
    return {"body": spec}


def measure(variant, dim, **params):
    return {"measure": {"variant": variant, "dim": dim, "params": params}}


# -- config validation ----------------------------------------------------------------

def test_config_normalises_subjects():
    c = cfg("sandwich", [body("cube", dim=2), {"variant": "euclidean_ball", "dim": 3}])
    assert [s["variant"] for s in c.subject] == ["cube", "euclidean_ball"]
    assert c.tolerance_policy == {"ci_sigma": 3.0, "fit_window": "upper_half", "invert": False}
    assert c.budgets["dirs"] == 30 and c.budgets["vrad_budget"] == 1000


@pytest.mark.parametrize("bad", [
    {"check": "nonsense"},
    {"subject": []},
    {"subject": measure("standard_gaussian", 2)},           # wrong kind for a body check
    {"n_list": [4, 2]},
    {"n_list": []},
    {"n_list": [0, 2]},
    {"budgets": {"dirs": 0}},
    {"budgets": {"coffee": 1}},
    {"seed": -1},
    {"tolerance_policy": {"ci_sigma": 0}},
    {"surprise": 1},
])
def test_config_rejects(bad):
    d = {"experiment_id": "x", "check": "sandwich", "subject": body("cube", dim=2)}
    d.update(bad)
    with pytest.raises(ValueError):
        H.ExperimentConfig.from_dict(d)


def test_load_configs_forms():
    one = {"experiment_id": "a", "check": "santalo", "subject": body("cube", dim=2)}
    two = dict(one, experiment_id="b")
    assert len(H.load_configs(one)) == 1
    assert len(H.load_configs([one, two])) == 2
    assert len(H.load_configs({"experiments": [one, two]})) == 2
    with pytest.raises(ValueError):
        H.load_configs([one, one])


# -- verdict helpers --------------------------------------------------------------------

def test_compare_le():
    assert H.compare_le(1.0, 0.0, 2.0, 0.0, 3) == "pass"
    assert H.compare_le(2.0, 0.0, 1.0, 0.0, 3) == "fail"
    assert H.compare_le(1.0, 0.1, 1.1, 0.1, 3) == "inconclusive"
    assert H.compare_le(1.0, 0.0, 1.0, 0.0, 3) == "pass"          # equality holds
    assert H.compare_le(1.0, 0.0, 2.0, 0.0, 3, invert=True) == "fail"
    assert H.compare_le(1.0 + 1e-12, 0.0, 1.0, 0.0, 3) == "pass"  # rounding slack


def test_compare_within_and_worst():
    assert H.compare_within(0.5, 0.01, 0.45, 0.55, 3) == "pass"
    assert H.compare_within(0.3, 0.01, 0.45, 0.55, 3) == "fail"
    assert H.compare_within(0.46, 0.01, 0.45, 0.55, 3) == "inconclusive"
    assert H.worst("pass", "inconclusive") == "inconclusive"
    assert H.worst("pass", "fail", "inconclusive") == "fail"


def test_loglog_slope_exact():
    qs = [2.0, 4.0, 8.0]
    ests = [EstimateCI.exact(3 * q**0.5) for q in qs]
    s = H.loglog_slope(qs, ests)
    assert s.value == pytest.approx(0.5) and s.method == "closed_form"
    ests = [EstimateCI(q**-0.25, 0.01, 100, 0, "monte_carlo") for q in qs]
    s = H.loglog_slope(qs, ests)
    assert s.value == pytest.approx(-0.25) and s.std_err > 0


# -- grids ----------------------------------------------------------------------------------

def test_grid_points_defaults():
    c = cfg("thm42_witness", body("cube"), n_list=[4, 8])
    gps = [gp for gp, _, _ in H.grid_points(c)]
    assert [(g["n"], g["k"]) for g in gps] == [(4, 1), (4, 2), (8, 1), (8, 2), (8, 4)]
    c = cfg("zq_inclusions", measure("standard_gaussian", 3), q_list=[2, 4, 8])
    pairs = [(g["p"], g["q"]) for g, _, _ in H.grid_points(c)]
    assert pairs == [(2, 4), (4, 8), (2, 8)]
    c = cfg("sandwich", body("ellipsoid", semiaxes=[1, 2, 3]))
    assert H.grid_points(c)[0][2] == 3


def test_point_streams_differ():
    c = cfg("sandwich", body("cube"), n_list=[2, 4])
    a, b = [H.point_stream(c, gp) for gp, _, _ in H.grid_points(c)]
    assert a.seed == b.seed == c.seed
    assert a.stream_id != b.stream_id


# -- individual checks ------------------------------------------------------------------------

def test_sandwich_square_values():
    recs = H.run(cfg("sandwich", body("cube", dim=2)))
    r = recs[0]
    assert r.verdict == "pass"
    assert r.measured.value == pytest.approx(math.sqrt(4 / math.pi), abs=1e-4)
    assert r.bound["lower"].value == pytest.approx(math.pi / (2 * math.sqrt(2)), abs=1e-4)
    assert r.bound["upper"].value == pytest.approx(4 / math.pi, abs=1e-4)


def test_santalo_values():
    recs = H.run(cfg("santalo", [body("cube", dim=2), body("ellipsoid", semiaxes=[2, 1])]))
    assert recs[0].measured.value == pytest.approx(math.sqrt(8 / math.pi**2), abs=1e-3)
    assert recs[1].measured.value == pytest.approx(1.0, abs=1e-6)
    assert all(r.verdict == "pass" for r in recs)


def test_vk_monotone_ellipsoid():
    c = cfg("vk_monotone", body("ellipsoid", semiaxes=[4, 1, 1, 1]),
            params={"candidates": "axes"}, budgets={"subspace_trials": 16, "refine_steps": 20})
    recs = H.run(c)
    v = [r.measured.value for r in recs if r.grid_point["profile"] == "v_k"]
    assert v == pytest.approx([4, 2, 4 ** (1 / 3), math.sqrt(2)], rel=1e-6)
    assert all(r.verdict == "pass" for r in recs)


def test_zq_inclusions_gaussian():
    c = cfg("zq_inclusions", measure("standard_gaussian", 3), q_list=[2, 4])
    (r,) = H.run(c)
    assert r.verdict == "pass"
    assert r.fitted_constant == pytest.approx(3 ** 0.25 / 2, rel=1e-9)


def test_zn_equiv_cube():
    (r,) = H.run(cfg("zn_equiv", body("cube", dim=4)))
    assert r.verdict in ("pass", "inconclusive")
    assert 0.2 <= r.fitted_constant <= 1.0


def test_zq_vrad_scaling_gaussian_slope_is_recorded():
    c = cfg("zq_vrad_scaling", measure("standard_gaussian", 64), q_list=[2, 4, 8])
    recs = H.run(c)
    assert recs[0].measured.value == 1.0 and recs[0].verdict == "pass"
    fit = recs[-1]
    assert fit.grid_point["fit"] == "vrad_slope"
    x = np.log([2, 4, 8])
    y = np.log([(2 ** (q / 2) * math.gamma((q + 1) / 2) / math.sqrt(math.pi)) ** (1 / q)
                for q in (2, 4, 8)])
    assert fit.measured.value == pytest.approx(np.polyfit(x, y, 1)[0], rel=1e-12)


def test_MZq_scaling_gaussian():
    c = cfg("MZq_scaling", measure("standard_gaussian", 16), q_list=[2, 4, 8, 16])
    recs = H.run(c)
    assert recs[0].measured.value == pytest.approx(1.0)
    fit = recs[-1]
    assert fit.details["slope_verdict"] == "pass"
    assert fit.measured.value <= -0.15
    assert all(r.fitted_constant > 0 for r in recs[:-1])


def test_thm42_witness_ellipsoid():
    c = cfg("thm42_witness", body("ellipsoid", semiaxes=[4, 1, 1, 1]), k_list=[1],
            params={"candidates": "axes"}, budgets={"subspace_trials": 8})
    (r,) = H.run(c)
    assert r.measured.value >= 1 - 1e-6
    assert r.verdict == "pass" and math.isfinite(r.fitted_constant)


def test_thm31_covering_disk_and_high_dim():
    (r,) = H.run(cfg("thm31_covering", body("euclidean_ball", dim=2), k_list=[2]))
    assert r.verdict == "pass" and r.measured.value <= 1.0
    (r,) = H.run(cfg("thm31_covering", body("euclidean_ball", dim=6), k_list=[6]))
    assert r.verdict == "inconclusive" and r.measured is None
    assert r.bound.value == pytest.approx(math.log(math.e + 1) * 2 ** (-1 / 3))


def test_low_mstar_ball():
    (r,) = H.run(cfg("low_mstar_crosscheck", body("euclidean_ball", dim=4), k_list=[2]))
    assert r.measured.value == pytest.approx(1.0)
    assert r.bound.value == pytest.approx(math.sqrt(2))
    assert r.verdict == "pass" and "thm42_bound" in r.details


def test_lemma61_gaussian():
    c = cfg("lemma61_profile", measure("standard_gaussian", 4), q_list=[2, 4], k_list=[1, 2],
            params={"A_k_marginals": 1})
    recs = H.run(c)
    pts = [r for r in recs if "k" in r.grid_point]
    assert all(r.verdict == "pass" for r in pts)
    assert pts[0].measured.value == pytest.approx(1.0, rel=1e-6)


def test_psi_alpha_suite_gaussian():
    c = cfg("psi_alpha_suite", measure("standard_gaussian", 3), q_list=[2, 4], k_list=[1],
            params={"alpha": 2.0})
    recs = H.run(c)
    head = recs[0]
    assert head.measured.value == pytest.approx(2 ** -0.5, rel=1e-9)
    assert head.details["validity_exponent"] == pytest.approx(2 / 3)


def test_conditional_suite_runs():
    c = cfg("conditional_suite", measure("product", 3, law="uniform", isotropic=True),
            q_list=[2], k_list=[1])
    recs = H.run(c)
    assert recs[0].measured.value == pytest.approx(12 ** -0.5)
    assert all(r.verdict != "fail" for r in recs)


# -- errors, determinism, output -------------------------------------------------------------

def test_construction_errors_are_per_point():
    c = cfg("sandwich", [body("cube", dim=2), body("ellipsoid", semiaxes=[1, -1])])
    recs = H.run(c)
    assert recs[0].verdict == "pass"
    assert recs[1].verdict == "fail" and recs[1].error["kind"] == "config"


def test_numeric_errors_are_recorded():
    # a 40-dimensional polytope without a closed volume exceeds the Monte-Carlo cap
    rows = np.vstack([np.eye(40), np.full(40, 0.1)]).tolist()
    (r,) = H.run(cfg("santalo", body("h_polytope", rows=rows)))
    assert r.verdict == "fail"
    assert r.error["kind"] == "numeric" and r.error["type"] == "UnsupportedError"


def test_inverted_policy_fails():
    c = cfg("santalo", body("cube", dim=2), tolerance_policy={"invert": True})
    (r,) = H.run(c)
    assert r.verdict == "fail"


def _strip(recs):
    out = []
    for r in recs:
        d = r.to_dict()
        d.pop("runtime_ms")
        out.append(json.dumps(d, sort_keys=True))
    return out


def test_determinism_across_workers():
    c = cfg("sandwich", [body("cross_polytope", dim=3), body("cube", dim=5)], seed=7)
    a = H.run(c, workers=1)
    b = H.run(c, workers=4)
    assert _strip(a) == _strip(b)
    d = cfg("sandwich", [body("cross_polytope", dim=3), body("cube", dim=5)], seed=8)
    assert _strip(H.run(d)) != _strip(a)


def test_writers(tmp_path):
    c = cfg("santalo", [body("cube", dim=2), body("euclidean_ball", dim=3)])
    recs = H.run(c)
    H.write_jsonl(recs, tmp_path / "r.jsonl")
    H.write_summary_csv(recs, tmp_path / "s.csv")
    lines = (tmp_path / "r.jsonl").read_text().splitlines()
    assert len(lines) == 2
    for line in lines:
        d = json.loads(line)
        assert d["schema_version"] == H.SCHEMA_VERSION
        assert set(d) >= {"experiment_id", "check", "subject_digest", "grid_point", "measured",
                          "bound", "fitted_constant", "verdict", "runtime_ms", "seed"}
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0] == ["experiment_id", "check", "grid_point", "measured", "bound",
                       "fitted_constant", "verdict"]
    assert len(rows) == 3


def test_records_stream_in_order():
    seen = []
    c = cfg("santalo", [body("cube", dim=2), body("euclidean_ball", dim=3)])
    recs = H.run(c, workers=2, on_record=seen.append)
    assert seen == recs


def test_run_all_only_filter():
    cs = [cfg("santalo", body("cube", dim=2)),
          cfg("sandwich", body("cube", dim=2))]
    recs = H.run_all(cs, only={"santalo"})
    assert {r.check for r in recs} == {"santalo"}
