from __future__ import annotations

import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from gnsindy import plots
from gnsindy.cli import run_command
from gnsindy.config import PRESETS, ConfigError, load_config, parse_config_text, resolve_config
from gnsindy.sampling import load_samples, qdeim_block_ranks
from gnsindy.snapshot import PdeKind, load_snapshot

SHORT = """
preset = burgers
train.max_iter = 30
train.patience = 10
train.periodicity = 5
train.log_every = 10
train.widths = 2,8,8,1
qdeim.subsample_size = 20
"""


# ---------------------------------------------------------------- config


def test_parse_config_text():
    entries = parse_config_text("# comment\na.b = 1  # trailing\n\nc = x y\n")
    assert entries == {"a.b": "1", "c": "x y"}
    with pytest.raises(ConfigError, match=":2: duplicate"):
        parse_config_text("a = 1\na = 2\n")
    with pytest.raises(ConfigError):
        parse_config_text("no equals sign\n")


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_roundtrip_through_flat_keys(name):
    cfg = resolve_config(preset=name)
    assert cfg == PRESETS[name]
    assert resolve_config(cfg.flat()) == cfg


def test_preset_values():
    b, ac, kdv = PRESETS["burgers"], PRESETS["allen-cahn"], PRESETS["kdv"]
    assert (b.qdeim.epsilon_thr, b.qdeim.t_div, b.qdeim.subsample_size) == (1e-5, 2, 50)
    assert (ac.qdeim.epsilon_thr, ac.qdeim.t_div, ac.qdeim.subsample_size) == (1e-7, 3, 120)
    assert (kdv.qdeim.epsilon_thr, kdv.qdeim.t_div, kdv.qdeim.subsample_size) == (1e-5, 2, 900)
    assert kdv.train.widths == (2, 32, 32, 32, 32, 1) and kdv.train.periodicity == 50
    assert (ac.poly_order, ac.deriv_order, kdv.deriv_order) == (3, 3, 3)
    assert b.train.seed_data == 42 and b.train.seed_train == 50


def test_overrides_and_errors():
    cfg = resolve_config({"preset": "kdv", "train.max_iter": "2000", "estimator.kind": "lasso", "estimator.lam": "0.01"})
    assert cfg.train.max_iter == 2000 and cfg.train.estimator.kind.value == "lasso"
    assert cfg.pde.kind is PdeKind.KDV
    with pytest.raises(ConfigError, match="unknown"):
        resolve_config({"preset": "kdv", "train.bogus": "1"})
    with pytest.raises(ConfigError):
        resolve_config({"preset": "kdv", "train.max_iter": "ten"})
    with pytest.raises(ConfigError):
        resolve_config({"preset": "kdv", "train.max_iter": "500"})  # below the preset patience
    with pytest.raises(ConfigError):
        resolve_config(preset="navier-stokes")


def test_config_from_pde_kind_alone():
    cfg = resolve_config({"pde.kind": "allen-cahn", "pde.ic": "tanh", "pde.n": "128"})
    assert cfg.pde.n == 128 and cfg.pde.kind is PdeKind.ALLEN_CAHN


def test_load_config_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text(SHORT)
    assert load_config(p)["train.max_iter"] == "30"


# ---------------------------------------------------------------- CLI


def _write(tmp_path, text, name="c.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_usage_errors(capsys):
    assert run_command([]) == 1
    assert run_command(["discover", "--frobnicate"]) == 1
    assert run_command(["generate", "--preset", "heat"]) == 1
    assert "usage" in capsys.readouterr().err


def test_config_error_exit_code(tmp_path, capsys):
    assert run_command(["generate", "--config", _write(tmp_path, "preset = burgers\nfoo.bar = 1\n")]) == 2
    err = capsys.readouterr().err
    assert err.startswith("gnsindy: error[config]:")
    assert run_command(["generate"]) == 2


def test_data_error_exit_code(tmp_path, capsys):
    assert run_command(["sample", "--preset", "burgers", "--in", str(tmp_path / "missing.bin"), "--out", str(tmp_path)]) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("x\\t,0,1\n0,1\n")
    assert run_command(["sample", "--preset", "burgers", "--in", str(bad), "--out", str(tmp_path)]) == 3
    assert "error[data]" in capsys.readouterr().err


def test_numerical_error_exit_code(tmp_path, capsys):
    cfg = "pde.kind = allen-cahn\npde.ic = gaussian\npde.ic.amplitude = 1e4\npde.n = 64\npde.m = 3\n"
    assert run_command(["generate", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == 4
    assert "error[numerical]" in capsys.readouterr().err


def test_generate_writes_snapshot_and_plot(tmp_path):
    assert run_command(["generate", "--preset", "burgers", "--out", str(tmp_path), "--format", "csv"]) == 0
    snap = load_snapshot(tmp_path / "snapshot.csv")
    assert snap.values.shape == (128, 100)
    ET.parse(tmp_path / "snapshot.svg")


def test_sample_count_is_sum_of_squared_ranks(tmp_path, kdv_snapshot, capsys):
    assert run_command(["generate", "--preset", "kdv", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    assert run_command(["sample", "--preset", "kdv", "--in", str(tmp_path / "snapshot.bin"), "--out", str(tmp_path)]) == 0
    ranks = qdeim_block_ranks(kdv_snapshot, PRESETS["kdv"].qdeim)
    samples = load_samples(tmp_path / "samples.csv")
    assert len(samples) == sum(r * r for r in ranks)
    assert f"{len(samples)} samples" in capsys.readouterr().out
    ET.parse(tmp_path / "samples.svg")


def test_short_discover_and_report(tmp_path, capsys):
    cfg = _write(tmp_path, SHORT)
    q, r = tmp_path / "q", tmp_path / "r"
    assert run_command(["discover", "--config", cfg, "--out", str(q)]) == 0
    assert run_command(["discover", "--config", cfg, "--out", str(r), "--baseline-random"]) == 0
    for d in (q, r):
        for name in ("report.json", "training_log.csv", "coefficients.csv", "equation.txt", "coefficients.svg", "loss.svg", "training_samples.csv"):
            assert (d / name).exists(), name
    report = json.loads((q / "report.json").read_text())
    assert report["sampling"] == "qdeim" and report["n_samples"] == 20
    assert json.loads((r / "report.json").read_text())["sampling"] == "random"
    assert resolve_config(report["resolved_config"]).train.max_iter == 30
    capsys.readouterr()
    assert run_command(["report", "--in", str(q), str(r), "--out", str(tmp_path / "cmp")]) == 0
    out = capsys.readouterr().out
    assert "q (qdeim): u_t =" in out and "r (random): u_t =" in out
    assert (tmp_path / "cmp" / "comparison.csv").read_text().startswith("run,sampling,n_samples")


def test_discover_with_saved_samples(tmp_path):
    cfg = _write(tmp_path, SHORT)
    assert run_command(["generate", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert run_command(["sample", "--config", cfg, "--in", str(tmp_path / "snapshot.bin"), "--out", str(tmp_path)]) == 0
    args = ["discover", "--config", cfg, "--in", str(tmp_path / "snapshot.bin"), "--samples", str(tmp_path / "samples.csv")]
    assert run_command(args + ["--out", str(tmp_path / "a")]) == 0
    assert run_command(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "training_log.csv").read_bytes() == (tmp_path / "b" / "training_log.csv").read_bytes()


def test_report_rejects_garbage(tmp_path):
    (tmp_path / "report.json").write_text("{not json")
    assert run_command(["report", "--in", str(tmp_path)]) == 3


def test_thread_env_validation(tmp_path, monkeypatch):
    monkeypatch.setenv("GNSINDY_THREADS", "zero")
    assert run_command(["generate", "--preset", "burgers", "--out", str(tmp_path)]) == 2
    monkeypatch.setenv("GNSINDY_THREADS", "1")
    assert run_command(["generate", "--preset", "burgers", "--out", str(tmp_path)]) == 0


# ---------------------------------------------------------------- plots


def test_heatmap_and_line_plot_are_valid_svg(burgers_snapshot):
    s = burgers_snapshot
    svg = plots.heatmap_svg(s.values, s.x_grid, s.t_grid, "u", points=(s.t_grid[:3], s.x_grid[:3]))
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert svg.count("<circle") == 3
    line = plots.line_plot_svg(np.arange(5), {"a": [1, 2, 3, 2, 1], "b": [0, 0, 0, 0, 0]}, "t")
    ET.fromstring(line)
    assert len(plots.colormap()) == 256


def test_heatmap_downsamples_large_grids():
    vals = np.random.default_rng(0).normal(size=(512, 201))
    svg = plots.heatmap_svg(vals, np.linspace(0, 1, 512), np.linspace(0, 1, 201), max_cells=50)
    assert svg.count("<rect") <= 50 * 50 + 300
