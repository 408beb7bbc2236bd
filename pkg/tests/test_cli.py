import csv
from dataclasses import replace
import json
import os
import importlib
import subprocess
import sys

import numpy as np
import pytest


from polsar_cvnn.cli import dump_config, load_config, main, parse_config
from polsar_cvnn.cli.figures import read_ppm
from polsar_cvnn.cli.main import (cmd_train, evaluate, extract, load_model, reconstruct, run_pipeline,
                                  synth_spec, tile)
from polsar_cvnn.cxnn import predict
from polsar_cvnn.cxnn.checkpoint import read_entries
from polsar_cvnn.dataio import ComplexRaster, read_raster, synthesize
from polsar_cvnn.dataio.normalize import scales_from_meta
from polsar_cvnn.errors import ConfigError
from polsar_cvnn.metrics import read_confusion, read_report

TINY = """
[data]
tile_size = 16
synth_size = 64
synth_cells = 5
normalize = per-channel-std

[model]
depth = 1
width = 4

[optim]
epochs = 2
batch = 4
seed = {seed}

[eval]
window = 3

[output]
dir = {out}
"""

cli_main = importlib.import_module("polsar_cvnn.cli.main")

FIGURES = ("pauli_original", "pauli_reconstructed", "krogager_original", "krogager_reconstructed",
           "halpha_original", "halpha_reconstructed", "cameron_original", "cameron_reconstructed",
           "confusion_halpha", "confusion_cameron", "shifts")


def tiny_config(tmp_path, seed=0, extra="", precision=None):
    text = TINY.format(seed=seed, out=tmp_path / "out")
    if precision:
        text = text.replace("[model]", f"[model]\nprecision = {precision}")
    path = tmp_path / "run.ini"
    path.write_text(text + extra)
    return str(path)


# ---------------------------------------------------------------- configuration

def test_config_roundtrip(tmp_path):
    cfg = load_config(tiny_config(tmp_path))
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert parse_config(dump_config(parse_config(""))) == parse_config("")


@pytest.mark.parametrize("text", [
    "[data]\ntile = 16\n",
    "[nope]\n",
    "[optim]\nlr = fast\n",
    "[model]\nkind = quantum\n",
    "[eval]\nwindow = 4\n",
    "[data]\ntile_size = 20\n[model]\ndepth = 3\n",
])
def test_bad_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[data]\nbogus = 1\n")
    assert main(["train", "--config", str(bad)]) == 2
    assert "bogus" in capsys.readouterr().err
    junk = tmp_path / "junk.cplxr"
    junk.write_bytes(b"not a raster")
    assert main(["decompose", "--input", str(junk), "--out", str(tmp_path / "d")]) == 3
    assert main(["reconstruct", "--out", str(tmp_path / "nothing")]) == 2


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "polsar_cvnn", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "ablate" in r.stdout


# ---------------------------------------------------------------- commands

def test_synth_tile_decompose(tmp_path):
    cfg = tiny_config(tmp_path)
    out = str(tmp_path / "s")
    assert main(["synth", "--config", cfg, "--out", out]) == 0
    scene = os.path.join(out, "scene.cplxr")
    assert read_raster(scene).shape == (64, 64, 4)
    assert main(["tile", "--config", cfg, "--input", scene, "--out", out]) == 0
    with open(os.path.join(out, "manifest.csv")) as fh:
        assert sum(1 for line in fh if not line.startswith("#")) == 1 + 16
    assert main(["decompose", "--config", cfg, "--input", scene, "--out", out]) == 0
    for name in ("pauli", "krogager", "cameron", "halpha"):
        assert read_ppm(os.path.join(out, f"{name}.ppm")).shape == (64, 64, 3)


def test_train_reconstruct_evaluate(tmp_path):
    cfg = tiny_config(tmp_path)
    out = str(tmp_path / "out")
    assert main(["train", "--config", cfg]) == 0
    for name in ("best.ckpt", "last.ckpt", "losses.csv", "config.ini"):
        assert os.path.getsize(os.path.join(out, name)) > 0
    assert main(["reconstruct", "--config", cfg]) == 0
    assert main(["evaluate", "--config", cfg]) == 0
    for name in FIGURES:
        img = read_ppm(os.path.join(out, f"{name}.ppm"))
        assert img.size > 0
    rep = read_report(os.path.join(out, "report.txt"))
    for name in ("halpha", "cameron"):
        conf = read_confusion(os.path.join(out, f"confusion_{name}.csv"))
        assert rep[f"{name}.oa"] == pytest.approx(100 * np.trace(conf) / conf.sum())
    assert np.isfinite(rep["mse"]) and 0 <= rep["halpha.oa"] <= 100


def test_evaluate_self_is_perfect(tmp_path):
    cfg = load_config(tiny_config(tmp_path))
    r, _ = synthesize(synth_spec(cfg))
    rep = evaluate(r.data, r.data.copy(), cfg)
    assert rep.mse == 0 and rep.psnr == 99.0
    assert rep.classification["halpha"].oa == 100 and rep.classification["cameron"].oa == 100


def test_reconstruct_matches_direct_forward(tmp_path):
    cfg = load_config(tiny_config(tmp_path))
    out = str(tmp_path / "out")
    run_pipeline(cfg, out)
    model, meta = load_model(os.path.join(out, "best.ckpt"))
    src = read_raster(os.path.join(out, "reconstructed.cplxr"))
    raster = ComplexRaster(np.asarray(src.data) + 0.1, {})  # any raster of the right shape
    rec = reconstruct(model, meta, raster)
    ts = tile(raster.shape, 16)
    s = scales_from_meta(meta["norm"])
    direct = predict(model, extract((raster.data.astype(np.complex128) * s).astype(np.complex64), ts.tiles))
    got = extract((rec.data.astype(np.complex128) * s).astype(np.complex64), ts.tiles)
    np.testing.assert_allclose(got, direct, rtol=1e-5, atol=1e-6)


def test_ablation_table(tmp_path):
    cfg = tiny_config(tmp_path)
    out = str(tmp_path / "abl")
    assert main(["ablate", "--config", cfg, "--out", out, "--axis", "depth"]) == 0
    with open(os.path.join(out, "ablation_depth.csv")) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["value"] for r in rows] == ["2", "3", "4"]
    # 2^4 divides the 16px tile, so every depth runs
    assert all(r["status"] == "ok" for r in rows)
    with open(os.path.join(out, "params.json")) as fh:
        params = json.load(fh)
    assert set(params) == {"2", "3", "4"}


def test_ablation_records_failures(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(TINY.format(seed=0, out=tmp_path / "o").replace("tile_size = 16", "tile_size = 8")
                    .replace("synth_size = 64", "synth_size = 32"))
    out = str(tmp_path / "abl")
    assert main(["ablate", "--config", str(path), "--out", out, "--axis", "depth"]) == 0
    with open(os.path.join(out, "ablation_depth.csv")) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    status = {r["value"]: r["status"] for r in rows}
    assert status["2"] == "ok" and status["3"] == "ok" and status["4"].startswith("failed")


# ---------------------------------------------------------------- reproducibility

def test_end_to_end_deterministic_64bit(tmp_path):
    blobs = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        cfg = tiny_config(d, precision=64)
        assert main(["train", "--config", cfg]) == 0
        assert main(["reconstruct", "--config", cfg]) == 0
        blobs.append((d / "out" / "reconstructed.cplxr").read_bytes())
    assert blobs[0] == blobs[1]


def test_resume_is_bit_identical(tmp_path, monkeypatch):
    cfg = load_config(tiny_config(tmp_path, precision=64))
    cfg = replace(cfg, optim=replace(cfg.optim, epochs=4))
    full = str(tmp_path / "full")
    cmd_train(cfg, full)
    part = str(tmp_path / "part")
    os.makedirs(part)
    orig = cli_main.train
    with monkeypatch.context() as m:
        m.setattr(cli_main, "train", lambda *a, **k: orig(*a, stop_after=2, **k))
        cmd_train(cfg, part)
    cmd_train(cfg, part, resume=os.path.join(part, "last.ckpt"))
    a, _ = read_entries(os.path.join(full, "last.ckpt"))
    b, _ = read_entries(os.path.join(part, "last.ckpt"))
    assert a.keys() == b.keys()
    for k in a:
        assert np.asarray(a[k]).tobytes() == np.asarray(b[k]).tobytes(), k
