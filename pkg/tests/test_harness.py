import json
from pathlib import Path

import numpy as np
import pytest

from wignerfluct.ensembles import EnsembleSpec, gaussian, goe, gue, rademacher
from wignerfluct.harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    SCHEMA_VERSION,
    entry_samples,
    read_samples_csv,
    run,
    write_samples_csv,
)
from wignerfluct.harness.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


# --- configuration ---------------------------------------------------------------

def test_config_from_toml_string():
    cfg = ExperimentConfig.from_toml_string("""
kind = "entry_mc"
n = [200, 400]
replicas = 150
seed = 3
points = [2.5, "2i", [1.0, 1.0]]

[ensemble]
symmetry = "hermitian"
offdiag = { name = "three_point", kappa4_std = 1.0 }
diag = { name = "gaussian", variance = 0.5 }
""")
    assert cfg.n_list == (200, 400) and cfg.master_seed == 3
    assert cfg.points == (2.5 + 0j, 2j, 1 + 1j)
    assert cfg.ensemble.hermitian and cfg.ensemble.diag_variance == pytest.approx(0.5)


@pytest.mark.parametrize("text,msg", [
    ('kind = "nope"', "unknown kind"),
    ('kind = "entry_mc"\nreplicas = 50', "replicas"),
    ('kind = "entry_mc"\nn = 7\nblock = 2', r"4 \* block"),
    ('kind = "entry_mc"\ncentering = "median"', "centering"),
    ('kind = "entry_mc"\nbogus = 1', "unknown configuration keys"),
    ('replicas = 200', "kind"),
])
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        ExperimentConfig.from_toml_string(text)


def test_config_round_trip_and_overrides():
    cfg = ExperimentConfig("schur_field", gue(), "x3", (300,), 200, points=(2.5, "1+1i"), master_seed=4)
    back = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert back.to_dict() == cfg.to_dict()
    o = cfg.with_overrides(n=500, replicas=300, seed=9, out="x.json")
    assert (o.n, o.replicas, o.master_seed, o.output) == (500, 300, 9, "x.json")
    with pytest.raises(ConfigError):
        cfg.with_overrides(replicas=10)


def test_bundled_configs_parse():
    files = sorted(CONFIGS.glob("*.toml"))
    assert len(files) >= 6
    for f in files:
        ExperimentConfig.from_toml(f)


# --- results ---------------------------------------------------------------------

def test_result_round_trip(tmp_path):
    res = ExperimentResult("entry_mc", {"a": 1}, {"master_seed": 0})
    res.add_statistic("v", 1.1, 0.05, 1.0)
    res.add_statistic("w", 2.0, 0.1, None)
    res.add_check("ok", True, value=np.float64(1.0))
    res.add_check("nan", False, value=float("nan"))
    assert res.statistics[0]["zscore"] == pytest.approx(2.0)
    assert res.statistics[1]["zscore"] is None
    assert not res.passed and [c["name"] for c in res.failures()] == ["nan"]
    p = tmp_path / "r.json"
    res.save(p)
    back = ExperimentResult.load(p)
    assert back.to_dict() == res.to_dict()
    assert json.loads(p.read_text())["schema_version"] == SCHEMA_VERSION
    bad = res.to_dict()
    bad["schema_version"] = 99
    with pytest.raises(ValueError):
        ExperimentResult.from_dict(bad)


def test_samples_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    s = rng.normal(size=(5, 2, 2)) + 1j * rng.normal(size=(5, 2, 2))
    p = tmp_path / "s.csv"
    write_samples_csv(p, s)
    assert p.read_text().splitlines()[0] == "replica,entry_i,entry_j,value_re,value_im"
    assert np.array_equal(read_samples_csv(p), s)


# --- runners (small sizes) -------------------------------------------------------

def test_entry_mc_linear_function_matches_entry_law():
    spec = EnsembleSpec("real_symmetric", rademacher(), gaussian(1.5))
    cfg = ExperimentConfig("entry_mc", spec, "x1", (100,), 2000, block=2, master_seed=21)
    res = run(cfg)
    for s in res.statistics:
        assert abs(s["estimate"] / s["predicted"] - 1) <= 5 * s["stderr"] / s["predicted"]
    diag = [s for s in res.statistics if "diag[" in s["name"] and "offdiag" not in s["name"]]
    assert diag[0]["predicted"] == pytest.approx(1.5)


def test_entry_mc_goe_variance_moderate():
    cfg = ExperimentConfig("entry_mc", goe(), "x3", (400,), 1500, block=2, master_seed=22)
    res = run(cfg)
    for s in res.statistics:
        assert abs(s["zscore"]) < 5 or abs(s["estimate"] / s["predicted"] - 1) < 0.15
    assert res.ks and all(k["method"] == "gauss_hermite" for k in res.ks)


def test_entry_mc_centerings_and_csv(tmp_path):
    csv = tmp_path / "s.csv"
    base = dict(kind="entry_mc", ensemble=goe(), function="x2", n_list=(50,), replicas=120, master_seed=1)
    r0 = run(ExperimentConfig(**base, options={"samples_csv": str(csv)}))
    r1 = run(ExperimentConfig(**base, centering="semicircle_integral"))
    r2 = run(ExperimentConfig(**base, centering="zero"))
    back = read_samples_csv(csv)
    assert back.shape == (120, 2, 2)
    m0 = [s["mean"] for s in r0.statistics]
    assert np.allclose(m0, 0.0, atol=1e-9)
    # x^2 has semicircle mean 1 on the diagonal: zero centering shifts the diagonal mean by sqrt(N)
    d1 = r1.statistics[0]["mean"]
    d2 = r2.statistics[0]["mean"]
    assert d2 - d1 == pytest.approx(np.sqrt(50), rel=1e-9)


def test_resolvent_and_schur_field_small():
    for kind in ("resolvent_field", "schur_field"):
        cfg = ExperimentConfig(kind, goe(), "x3", (200,), 300, points=(2.5, 3.0), block=2, master_seed=5)
        res = run(cfg)
        names = [s["name"] for s in res.statistics]
        assert any("cov ReRe z=2.5,w=3" in n for n in names)
        assert res.ks


def test_resolvent_route_agreement():
    cfg = ExperimentConfig("resolvent_field", gue(), "x3", (60,), 100, points=(2.5, "1+1i"), block=2,
                           master_seed=6)
    from wignerfluct.harness import field_samples
    a = field_samples(cfg, 60, "solve", "route-test")[:, :, 1]
    b = field_samples(cfg, 60, "schur", "route-test")[:, :, 1]
    assert np.max(np.abs(a - b)) <= 1e-9


def test_qf_and_decoupling_runners():
    res = run(ExperimentConfig("qf_clt", n_list=(500,), replicas=400, master_seed=2,
                               options={"matrix": "projections", "marginal": "uniform"}))
    assert res.passed
    res = run(ExperimentConfig("qf_clt", n_list=(500,), replicas=200, master_seed=2,
                               options={"matrix": "identity", "marginal": "rademacher"}))
    assert res.passed and res.statistics[0]["estimate"] == 0.0
    dec = run(ExperimentConfig.from_toml(CONFIGS / "decoupling.toml"))
    assert dec.passed and dec.extra["report"]["method"] == "enumeration"


def test_hs_and_predict_runners():
    res = run(ExperimentConfig("hs_check", goe(), {"kind": "bump_times", "f": "x1"}, (60,), block=2,
                               options={"grids": [100, 200]}))
    assert len(res.extra["table"]) == 4
    pred = run(ExperimentConfig.from_toml(CONFIGS / "predict.toml"))
    assert pred.passed
    assert pred.extra["functionals"]["v1sq"] is None
    assert pred.extra["laws"]["offdiag"]["field"] == "complex"
    assert "resolvent_field" in pred.extra


def test_decay_small():
    cfg = ExperimentConfig("decay", goe(), "x3", (100, 200), 200, master_seed=3,
                           options={"replicas_spectral": 100, "statistics": ["trace_resolvent", "diag_mean"]})
    res = run(cfg)
    assert {s["name"] for s in res.slopes} == {"trace_resolvent", "diag_mean"}
    assert all(len(s["points"]) == 2 for s in res.slopes)


def test_determinism_and_parallel():
    base = dict(kind="schur_field", ensemble=gue(), n_list=(40,), replicas=100, points=(2.5, "1i"),
                block=2, master_seed=8)
    a = run(ExperimentConfig(**base))
    b = run(ExperimentConfig(**base))
    c = run(ExperimentConfig(**base, workers=2))
    assert a.without_timing() == b.without_timing()
    assert [s["estimate"] for s in a.statistics] == [s["estimate"] for s in c.statistics]
    s1 = entry_samples(ExperimentConfig("entry_mc", n_list=(30,), replicas=100), 30, "x")
    s2 = entry_samples(ExperimentConfig("entry_mc", n_list=(30,), replicas=100, workers=2), 30, "x")
    assert np.array_equal(s1, s2)


def test_results_json_round_trip_real_run():
    res = run(ExperimentConfig("entry_mc", gue(), "x3", (40,), 100, master_seed=1))
    assert ExperimentResult.from_json(res.to_json()).to_dict() == res.to_dict()


# --- CLI -------------------------------------------------------------------------

def test_cli_predict_exit_zero(capsys, tmp_path):
    out = tmp_path / "p.json"
    rc = main(["predict", "--config", str(CONFIGS / "predict.toml"), "--out", str(out)])
    assert rc == 0
    assert json.loads(out.read_text())["kind"] == "predict"
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_cli_failure_list(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('kind = "entry_mc"\nfunction = "x3"\nvar_rtol = 0.0\nks_slack = 0.0\n')
    rc = main(["entry-mc", "--config", str(cfg), "--n", "20", "--replicas", "100", "--seed", "1", "--quiet"])
    assert rc == 1
    failures = json.loads(capsys.readouterr().err)
    assert failures and all(not f["passed"] for f in failures)


def test_cli_config_errors(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('kind = "qf_clt"\n')
    assert main(["entry-mc", "--config", str(cfg)]) == 2
    assert main(["entry-mc", "--replicas", "5"]) == 2
    assert main(["entry-mc", "--config", str(tmp_path / "missing.toml")]) == 2
    with pytest.raises(SystemExit):
        main(["bogus"])
