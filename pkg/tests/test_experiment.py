import csv
import json
import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest
import yaml

from intflow.cli import main
from intflow.errors import ConfigError
from intflow.experiment import (
    SWEEP_HEADER,
    ExperimentConfig,
    default_epsilons,
    load_config,
    run_continuity,
    run_fig1,
    run_fig2,
)

SMALL = dict(n_samples=400, n_perturbations=2, epsilons=[1e-3, 1e-2, 1e-1], grid_nodes=40,
             continuity_nodes=64, max_arrows=50)


def small_cfg(tmp_path, **kw):
    return ExperimentConfig(**{**SMALL, "output_dir": str(tmp_path), **kw})


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_default_config_matches_reported_setup():
    cfg = ExperimentConfig()
    assert cfg.n_samples == 10_000 and cfg.n_perturbations == 10
    assert cfg.kde_sigma == 0.2 and cfg.kde_step == 1e-4 and cfg.clip_factor == 10
    eps = default_epsilons()
    assert len(eps) == 15 and eps[0] == pytest.approx(1e-4) and eps[-1] == pytest.approx(0.3)
    assert len(cfg.mixture["weights"]) == 3


@pytest.mark.parametrize(
    "field,value",
    [
        ("epsilons", [0.0, 1e-2]),
        ("epsilons", [1e-2, 1e-3]),
        ("epsilons", [1e-2, 1e-2]),
        ("epsilons", []),
        ("n_samples", 50),
        ("n_samples", 1.5),
        ("n_perturbations", 0),
        ("clip_factor", -1.0),
        ("kde_sigma", 0.0),
        ("kde_step", float("nan")),
        ("median_window", 4),
        ("grid_nodes", 0),
        ("perturbation_scale", -0.1),
        ("seed", -3),
        ("mixture", {"weights": [0.5, 0.4], "means": [[0, 0], [1, 1]],
                     "covariances": [[[1, 0], [0, 1]], [[1, 0], [0, 1]]]}),
        ("mixture", {"weights": [1.0]}),
    ],
)
def test_config_validation_names_field(field, value):
    with pytest.raises(ConfigError, match=f"^{field}"):
        ExperimentConfig(**{field: value})


def test_load_config_yaml(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({"n_samples": 500, "epsilons": [0.01, 0.1], "seed": 4}))
    cfg = load_config(path, seed=9, output_dir=None)
    assert cfg.n_samples == 500 and cfg.epsilons == [0.01, 0.1] and cfg.seed == 9
    path.write_text("bogus_key: 1\n")
    with pytest.raises(ConfigError, match="bogus_key"):
        load_config(path)


def test_fig1_outputs(tmp_path):
    metrics = run_fig1(small_cfg(tmp_path))
    for name in ("density", "delta_p", "flow", "kde_difference"):
        assert (tmp_path / f"fig1_{name}.csv").exists()
        ET.parse(tmp_path / f"fig1_{name}.svg" if name != "delta_p" else tmp_path / "fig1_flow.svg")
    assert read_csv(tmp_path / "fig1_density.csv")[0] == ["x", "y", "value"]
    assert read_csv(tmp_path / "fig1_flow.csv")[0] == ["i", "x_1", "x_2", "v_1", "v_2", "clipped"]
    stored = json.loads((tmp_path / "fig1_metrics.json").read_text())
    assert stored["kde_delta_p_correlation"] == pytest.approx(metrics["kde_delta_p_correlation"])
    assert all(isinstance(v, (int, float)) for v in stored.values())
    svg_text = (tmp_path / "fig1_flow.svg").read_text()
    assert "href" not in svg_text and svg_text.count("<line") == 50


def test_fig1_zero_perturbation(tmp_path):
    run_fig1(small_cfg(tmp_path, perturbation_scale=0.0))
    flow = np.array([[float(v) for v in r[3:5]] for r in read_csv(tmp_path / "fig1_flow.csv")[1:]])
    assert not np.any(flow)
    kd = np.array([float(r[2]) for r in read_csv(tmp_path / "fig1_kde_difference.csv")[1:]])
    assert not np.any(kd)


def test_fig1_rejects_3d(tmp_path):
    mix3d = {"weights": [1.0], "means": [[0, 0, 0]], "covariances": [np.eye(3).tolist()]}
    with pytest.raises(ConfigError, match="2-D"):
        run_fig1(small_cfg(tmp_path, mixture=mix3d))


def test_fig2_outputs(tmp_path):
    rows, _ = run_fig2(small_cfg(tmp_path))
    assert len(rows) == 3
    table = read_csv(tmp_path / "fig2_sweep.csv")
    assert table[0] == SWEEP_HEADER
    assert all(float(v) >= 0 for r in table[1:] for v, h in zip(r, SWEEP_HEADER) if h.endswith("_std"))
    ksd = read_csv(tmp_path / "fig2_ksd_flowed.csv")
    assert ksd[0] == ["perturbation", "epsilon", "ustat", "bandwidth", "n_samples"]
    assert len(ksd) == 1 + 2 * 3
    # one bandwidth per perturbation, shared across epsilon
    assert len({r[3] for r in ksd[1:] if r[0] == "0"}) == 1
    ET.parse(tmp_path / "fig2_ksd.svg")
    meta = json.loads((tmp_path / "fig2_metadata.json").read_text())
    assert "own scale" in meta["notes"]["flow_scale"]


def test_continuity_outputs(tmp_path):
    m = run_continuity(small_cfg(tmp_path))
    assert m["relative_l2"] < 0.05
    assert read_csv(tmp_path / "continuity_residual.csv")[0] == ["x", "y", "value"]
    assert run_continuity(small_cfg(tmp_path, perturbation_scale=0.0))["relative_l2"] == 0.0


def test_continuity_refines(tmp_path):
    a = run_continuity(small_cfg(tmp_path, continuity_nodes=100))["relative_l2"]
    b = run_continuity(small_cfg(tmp_path, continuity_nodes=200))["relative_l2"]
    assert b < a


def test_rerun_is_byte_identical(tmp_path):
    for run in ("a", "b"):
        cfg = small_cfg(tmp_path / run)
        run_fig1(cfg)
        run_fig2(cfg)
        run_continuity(cfg)
    names = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert len(names) >= 8
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_runs_and_reports(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.yaml"
    cfg_path.write_text(yaml.safe_dump(SMALL))
    rc = main(["continuity", "--config", str(cfg_path), "--out", str(tmp_path / "o"), "--seed", "3",
               "--threads", "1"])
    assert rc == 0
    assert "relative_l2" in capsys.readouterr().out
    assert (tmp_path / "o" / "continuity_metrics.json").exists()


def test_cli_error_is_single_line(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.yaml"
    cfg_path.write_text(yaml.safe_dump({**SMALL, "epsilons": [0.0, 0.1]}))
    assert main(["fig2", "--config", str(cfg_path), "--out", str(tmp_path)]) != 0
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and "epsilons" in err


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_cli_unwritable_output(tmp_path, capsys):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    assert main(["continuity", "--out", str(locked / "sub")]) != 0


def test_cli_output_path_is_a_file(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["continuity", "--out", str(blocker)]) != 0
    assert "output_dir" in capsys.readouterr().err
