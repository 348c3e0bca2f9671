import json
from fractions import Fraction

import pytest

import flowmap


def test_tmr_map_wire_component_and_hash():
    f = flowmap.tmr_flow_map()
    assert f.variables == ["w", "v"]
    assert f.component("w").startswith("3*w^2 + 6*w*v + 3*v^2")
    assert len(f.hash) == 16


def test_eval_matches_direct_polynomial():
    f = flowmap.uv_example_map()
    out = f({"u": 0.0, "v": 0.2})
    assert out["u"] == pytest.approx(0.04, abs=1e-12)
    assert out["v"] == pytest.approx(0.104, abs=1e-12)


def test_round_trip_json():
    f = flowmap.tmr_flow_map()
    g = flowmap.parse_flowmap(f.to_json())
    assert g.hash == f.hash


def test_pseudothreshold_and_asymptotic():
    f = flowmap.tmr_flow_map()
    assert flowmap.pseudothreshold(f, "w") == pytest.approx(0.129, abs=1e-3)
    assert flowmap.asymptotic_threshold(f, "v") == pytest.approx(0.246, abs=1e-3)


def test_fixed_points_count():
    pts = flowmap.fixed_points(flowmap.tmr_flow_map())
    assert len(pts) == 5


def test_low_order_bound_is_one_twelfth():
    r = flowmap.low_order_bound(flowmap.tmr_flow_map(), 2)
    assert Fraction(r["exact"]) == Fraction(1, 12)


def test_threshold_set_summary():
    r = flowmap.threshold_set(flowmap.tmr_flow_map(), "w", "v", 0.5, 60)
    assert r["below"] + r["above"] + r["undetermined"] == 3600
    assert r["largest_cube_edge"] <= 0.2465


def test_unknown_location_raises():
    with pytest.raises(KeyError):
        flowmap.pseudothreshold(flowmap.tmr_flow_map(), "q")


def test_steane_zero_noise_and_census():
    r = flowmap.mc_failure("2", {}, 1000, seed=1)
    assert r["failures"] == 0
    census = flowmap.steane_census("1")
    assert set(census) == {"1", "2", "w", "1m", "p"}
    assert all(v > 0 for v in census.values())


def test_mc_is_deterministic():
    rates = {"1": 2e-3, "2": 2e-3, "w": 2e-4, "1m": 2e-3, "p": 2e-3}
    a = flowmap.mc_failure("1", rates, 20000, seed=9)
    b = flowmap.mc_failure("1", rates, 20000, seed=9)
    assert a == b


def test_cli_in_process(tmp_path):
    out = tmp_path / "fp.csv"
    code, _, _ = flowmap.run_cli(["fixed-points", "--out", str(out)])
    assert code == 0
    header = out.read_text().splitlines()[0]
    assert header.startswith("# provenance: ")
    prov = json.loads(header[len("# provenance: "):])
    assert prov["config"]["command"] == "fixed-points"
    code, _, err = flowmap.run_cli(["pseudothreshold", "--location", "nope"])
    assert code == 1 and "nope" in err
