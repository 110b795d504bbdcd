import json

import pytest

from szego_lab import gsets
from szego_lab.harness import (SCENARIOS, ScenarioReport, brute_force_generated, random_exterior_set, run_all,
                               run_scenario, verify_predictors, verify_thm21, verify_thm44, verify_thm54)


def names(rep):
    return {c.name: c for c in rep.criteria}


def test_report_schema_and_csv():
    rep = ScenarioReport("demo", {"family": "zero"})
    rep.check("a", True, "< 1", 0.5, 1)
    rep.check("b", False, "text", "note", None)
    d = rep.to_dict()
    assert set(d) == {"scenario", "inputs", "measurements", "criteria", "pass", "runtime_ms"}
    assert "runtime_ms" not in rep.to_dict(include_runtime=False)
    assert d["pass"] is False and [c["pass"] for c in d["criteria"]] == [True, False]
    assert rep.csv_rows() == [["demo", "a", "< 1", "0.5", "1", "pass"], ["demo", "b", "text", "note", "null", "fail"]]
    assert json.loads(rep.to_json())["scenario"] == "demo"


def test_zero_family_radius_is_cutoff():
    rep = verify_thm21("zero", {})
    assert rep.passed and "cutoff" in rep.measurements["radius"]


def test_zero_family_q3_reduces_to_plain_radius():
    rep = verify_thm54("zero", {}, prec=256)
    assert rep.passed and rep.measurements["note"] == "empty model: q3 = 0"


def test_zero_family_predictors():
    # empty model: E_n = z^n decays at rate |z|, E~_n vanishes
    rep = verify_predictors("zero", {})
    assert rep.passed
    crit = names(rep)
    assert abs(crit["z=0.1 rate of E_n"].measured - 0.1) < 1e-9
    assert crit["z=0.1 E~_n at the floor"].measured == 0


@pytest.mark.parametrize("fam,params,T,P", [
    ("rogers-szego", {"q": 0.25}, [-2], [-2, -8, -32]),
    ("single-moment", {"a": 0.8}, [2, 8, 32], [2]),
])
def test_inclusions(fam, params, T, P):
    rep = verify_thm44(fam, params)
    assert rep.passed
    got_T = sorted(round(p[0], 6) for p in rep.measurements["T"])
    got_P = sorted(round(p[0], 6) for p in rep.measurements["P"])
    assert got_T == sorted(T) and got_P == sorted(P)


def test_inclusions_toy_set():
    T = gsets.ExteriorSet((2,), 40, 1e-6)
    assert T.issubset(gsets.g_full(T)) and gsets.g_full(T).contains(2)


def test_brute_force_agrees_with_library():
    import random
    rng = random.Random(3)
    for _ in range(20):
        T = random_exterior_set(rng)
        brute = gsets.ExteriorSet.build(brute_force_generated(T, T.radius_cut), T.radius_cut, T.merge_eps)
        assert brute.same_points(gsets.g_full(T))


def test_reports_are_reproducible():
    a = [r.to_json(include_runtime=False) for r in run_scenario("thm44")]
    b = [r.to_json(include_runtime=False) for r in run_scenario("thm44")]
    assert a == b


def test_unknown_scenario():
    with pytest.raises(ValueError):
        run_scenario("nosuch")
    assert "thm21" in SCENARIOS and "rogers-szego" in SCENARIOS


def test_run_all_isolates_domain_errors(monkeypatch):
    from szego_lab import harness
    from szego_lab.errors import SzegoLabError

    def boom(*args, **kwargs):
        raise SzegoLabError("broken", where="test")
    monkeypatch.setattr(harness, "SCENARIOS", ("gsets",))
    monkeypatch.setattr(harness, "verify_gsets", boom)
    out = run_all()
    assert out[0]["pass"] is False and out[0]["error"]["error"] == "SzegoLabError"
