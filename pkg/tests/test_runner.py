import json

import numpy as np
import pytest

from sleeping_exp3.cli import main
from sleeping_exp3.core import ConfigError
from sleeping_exp3.runner import (
    check_sublinear,
    compare_estimators,
    load_spec,
    oracle_check,
    run_experiment,
    spec_from_dict,
)


def _config(tmp_path, **over):
    cfg = {
        "environment": {
            "n_arms": 4,
            "k": 2,
            "horizon": 10,
            "availability": [0.9, 0.8, 0.7, 0.6],
            "loss": {"kind": "constant-gap", "bernoulli": True},
        },
        "estimator_variant": "exact",
        "seeds": [1],
        "output_dir": str(tmp_path / "out"),
    }
    env_over = over.pop("environment", {})
    cfg["environment"].update(env_over)
    cfg.update(over)
    return cfg


def _summary_body(path):
    data = json.loads(path.read_text())
    data["spec"].pop("output_dir")
    return data


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_single_seed_outputs(tmp_path):
    spec = spec_from_dict(_config(tmp_path))
    report = run_experiment(spec)
    out = tmp_path / "out"
    lines = (out / "trace_seed1.csv").read_text().splitlines()
    assert len(lines) == 11 and lines[0] == "t,available,chosen,loss_sum,lambda,degenerate"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["checkpoints"][-1]["t"] == 10
    assert report.final.t == 10


def test_outputs_byte_identical(tmp_path):
    cfg = _config(tmp_path, seeds=[3, 1, 2], environment={"horizon": 300})
    a = spec_from_dict(cfg)
    b = spec_from_dict(dict(cfg, output_dir=str(tmp_path / "again")))
    run_experiment(a)
    run_experiment(b)
    for name in ("trace_seed1.csv", "trace_seed2.csv", "trace_seed3.csv"):
        assert (tmp_path / "out" / name).read_bytes() == (tmp_path / "again" / name).read_bytes()
    assert _summary_body(tmp_path / "out" / "summary.json") == _summary_body(tmp_path / "again" / "summary.json")


def test_parallel_matches_serial(tmp_path):
    cfg = _config(tmp_path, seeds=[5, 6], environment={"horizon": 200})
    serial = run_experiment(spec_from_dict(cfg))
    par = run_experiment(spec_from_dict(dict(cfg, output_dir=str(tmp_path / "par"))), workers=2)
    assert serial.per_seed == par.per_seed
    assert _summary_body(tmp_path / "out" / "summary.json") == _summary_body(tmp_path / "par" / "summary.json")


def test_aggregate_consistency(tmp_path):
    spec = spec_from_dict(_config(tmp_path, seeds=[1, 2, 3, 4], environment={"horizon": 400}))
    report = run_experiment(spec)
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    finals = list(summary["final_regret_per_seed"].values())
    assert summary["checkpoints"][-1]["mean_regret"] == pytest.approx(np.mean(finals), abs=1e-9)
    assert report.final.std_error == pytest.approx(np.std(finals, ddof=1) / 2, abs=1e-9)
    assert [r.t for r in report.rows][:3] == [4, 8, 12] and {100, 200, 400} <= {r.t for r in report.rows}


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda c: c.update(bogus=1), "bogus"),
        (lambda c: c["environment"].update(typo=1), "environment.typo"),
        (lambda c: c["environment"]["loss"].update(mean=[0.1]), "environment.loss.mean"),
        (lambda c: c.update(seeds=[]), "seeds"),
        (lambda c: c["environment"].update(k=7), "environment.k"),
        (lambda c: c["environment"].update(n_arms=20, availability=0.5, k=2), "environment.n_arms"),
        (lambda c: c.update(estimator_variant="fast"), "estimator_variant"),
    ],
)
def test_config_errors(tmp_path, mutate, field):
    cfg = _config(tmp_path)
    mutate(cfg)
    with pytest.raises(ConfigError) as exc:
        spec_from_dict(cfg)
    assert exc.value.field == field


def test_scalar_availability_broadcasts(tmp_path):
    spec = spec_from_dict(_config(tmp_path, environment={"availability": 0.8}))
    assert spec.environment.availability == (0.8,) * 4


def test_compare_estimators_degenerate_gap(tmp_path):
    spec = spec_from_dict(_config(tmp_path, environment={"availability": [1, 1, 0, 1], "horizon": 50}))
    rows = compare_estimators(spec)
    assert all(r["max_gap"] == 0.0 for r in rows)
    assert (tmp_path / "out" / "compare_seed1.csv").exists()


def test_compare_estimators_gap_shrinks(tmp_path):
    spec = spec_from_dict(
        _config(tmp_path, mc_sample_cap=None, seeds=[1, 2, 3], environment={"horizon": 600, "availability": 0.6})
    )
    early, late = [], []
    for seed in spec.seeds:
        rows = compare_estimators(spec, seed=seed, write=False)
        early.append(np.mean([r["max_gap"] for r in rows[:50]]))
        late.append(np.mean([r["max_gap"] for r in rows[-50:]]))
        assert [r["mc_samples"] for r in rows[:3]] == [1, 2, 3]
    assert np.mean(late) < np.mean(early)


def test_oracle_check_passes(tmp_path):
    spec = spec_from_dict(_config(tmp_path, seeds=[1, 2], environment={"horizon": 20}))
    assert oracle_check(spec) == []


def test_cli_run_and_exit_codes(tmp_path, capsys):
    path = _write(tmp_path, _config(tmp_path))
    assert main(["run", "--config", str(path), "--output", str(tmp_path / "cli")]) == 0
    assert (tmp_path / "cli" / "trace_seed1.csv").exists()
    assert main(["oracle-check", "--config", str(path)]) == 0
    assert main(["compare-estimators", "--config", str(path)]) == 0

    bad = _write(tmp_path, dict(_config(tmp_path), extra=True), "bad.json")
    assert main(["run", "--config", str(bad)]) == 1
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1
    assert "config error" in capsys.readouterr().err


def test_cli_sublinear_failure_exit_code(tmp_path):
    # identical losses on every arm: regret is identically zero, so "positive" fails
    cfg = _config(tmp_path, environment={"horizon": 40, "loss": {"means": [0.5] * 4, "bernoulli": False}})
    path = _write(tmp_path, cfg)
    assert main(["run", "--config", str(path), "--check-sublinear"]) == 2


def test_check_sublinear_logic(tmp_path):
    spec = spec_from_dict(_config(tmp_path, environment={"horizon": 40}))
    report = run_experiment(spec, write=False)
    names = [name for name, _, _ in check_sublinear(report, 4, 2, 40)]
    assert names == ["positive", "decreasing_ratio", "ceiling"]


def test_load_spec_invalid_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_spec(p)
