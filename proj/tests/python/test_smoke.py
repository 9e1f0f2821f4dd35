import math

import numpy as np
import pytest

import v2xslice as vx


def short(tech, scenario="s2", ms=300, seed=21):
    c = vx.Config()
    c.set("scenario", scenario)
    c.set("technology", tech)
    c.seed = seed
    c.duration_ms = ms
    return c


def test_config_round_trip():
    c = vx.Config.from_text("seed = 7\nscenario = s3\ntechnology = rsu_relay\n")
    assert c.seed == 7
    assert c.scenario == "s3"
    assert c.technology == "rsu_relay"
    echo = c.echo()
    assert echo["seed"] == "7"
    again = vx.Config.from_text("\n".join(f"{k} = {v}" for k, v in echo.items()))
    assert again.echo() == echo


def test_bad_key_names_the_key():
    with pytest.raises(ValueError, match="bogus"):
        vx.Config.from_text("bogus = 1\n")
    c = vx.Config()
    c.duration_ms = 150
    with pytest.raises(vx.ConfigError):
        c.validate()


def test_pathloss_examples():
    assert vx.pathloss_v2i(1000.0) == pytest.approx(100.7)
    assert vx.pathloss_v2v(10.0) == pytest.approx(83.3)


def test_drop_matches_simulation():
    cfg = short("ns", "s3")
    drop = vx.generate_drop(cfg)
    assert len(drop["rsus"]) == 2
    xs = [v["x"] for v in drop["vehicles"]]
    assert all(0 <= x < drop["highway_length"] for x in xs)
    assert vx.simulate(cfg)["stats"]["vehicles"] == len(xs)


def test_similarity_and_eigengap():
    # two tight groups far apart
    xs = [0, 1, 2, 500, 501, 502]
    c = vx.similarity(xs, [0.0] * 6, sigma=5.0)
    assert np.allclose(c, c.T)
    assert np.allclose(np.diag(c), 1.0)
    z = vx.laplacian_eigenvalues(c)
    lap = np.diag(c.sum(axis=1)) - c
    assert np.allclose(z, np.linalg.eigvalsh(lap), atol=1e-9)
    assert vx.eigengap_count(list(z), 5) == 2


def test_link_abstraction():
    assert vx.bicm_capacity(2, 1e8) == pytest.approx(2.0, abs=1e-3)
    flat = [10.0] * 50
    assert vx.miesm_effective_sinr(flat, 4) == pytest.approx(10.0, rel=1e-6)
    assert vx.select_mcs(-30.0) == 0
    assert vx.select_mcs(30.0) > vx.select_mcs(5.0)
    assert vx.bler(-20.0, 5) > 0.99


def test_metrics_helpers():
    assert vx.prr([(4, 2), (3, 3), (2, 0)]) == pytest.approx(0.5)
    cdf = vx.rate_cdf([100.0, 200.0, 300.0], [0.0, 150.0, 300.0])
    assert cdf[1] == (150.0, pytest.approx(1 / 3))
    assert cdf[-1][1] == 1.0


@pytest.mark.parametrize("tech", ["rsu", "rsu_relay", "ns", "ns_relay"])
def test_simulate_every_technology(tech):
    r = vx.simulate(short(tech))
    s = r["stats"]
    assert 0.0 <= r["prr"] <= 1.0
    assert s["delivered_bits"] <= s["generated_bits"]
    assert len(r["safety_kbps"]) == s["vehicles"]
    assert len(r["video_kbps"]) == s["video_vehicles"]
    assert r["window_ms"] == 200
    assert (len(s["ap_counts"]) > 0) == tech.startswith("ns")
    assert (len(s["relay_counts"]) > 0) == tech.endswith("relay")


def test_simulate_is_deterministic():
    a = vx.simulate(short("ns_relay"))
    b = vx.simulate(short("ns_relay"))
    assert a == b


def test_overrides_apply():
    r = vx.simulate(short("ns"), {"duration_ms": "400"})
    assert r["window_ms"] == 300


def test_matrix_rows():
    cells = vx.run_matrix(short("ns", "s3", 200), ["s3"], ["rsu", "ns"], [5.0, 50.0], seeds=1)
    assert [(c["technology"], c["sigma"]) for c in cells] == [("rsu", "-"), ("ns", "5"), ("ns", "50")]
    assert all(math.isfinite(c["prr"]) for c in cells)


def test_run_writes_outputs(tmp_path):
    assert vx.run(short("ns", "s3", 200), tmp_path / "out") == 0
    assert (tmp_path / "out" / "summary.csv").exists()
    assert (tmp_path / "out" / "run_meta").exists()
