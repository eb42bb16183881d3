import json
import subprocess
import sys

import numpy as np
import pytest

from natstego import Raster16, load_model, load_params, read_raster, save_model, write_raster
from natstego.cli import main
from natstego.stats_eval import gradient_field, synth_flat_stack

from conftest import ISO1, ISO2


@pytest.fixture(scope="module")
def ws(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    mu = gradient_field(96, 96)
    for name, model, seed in (("iso1", ISO1, 1), ("iso2", ISO2, 2)):
        (d / name).mkdir()
        for i, f in enumerate(synth_flat_stack(mu, model, 6, seed)):
            write_raster(f, d / name / f"f{i:02d}.pgm")
    save_model(ISO1, d / "a.model")
    save_model(ISO2, d / "b.model")
    write_raster(Raster16(np.random.default_rng(0).integers(0, 65536, (100, 100)).astype(np.uint16)), d / "c.pgm")
    return d


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_estimate_noise(ws, capsys):
    code, out, _ = run(capsys, "estimate-noise", "--stack", ws / "iso1" / "*.pgm", "--delta", "5e-5",
                       "--out", ws / "est.model", "--iso", "1000")
    assert code == 0 and "frames=6" in out
    m = load_model(ws / "est.model")
    assert m.iso_label == "1000" and m.a == pytest.approx(ISO1.a, rel=0.1)


def test_diff_model_and_perturbation(ws, capsys):
    assert run(capsys, "diff-model", "--model1", ws / "a.model", "--model2", ws / "b.model", "--out", ws / "p.params")[0] == 0
    p = load_params(ws / "p.params")
    assert p.a_dd == pytest.approx(2.1e-5 * 65535)
    assert run(capsys, "diff-model", "--perturbation", "1e-4", "--out", ws / "q.params")[0] == 0
    assert load_params(ws / "q.params").perturbation


def test_diff_model_violation(ws, capsys):
    code, _, err = run(capsys, "diff-model", "--model1", ws / "b.model", "--model2", ws / "a.model", "--out", ws / "x")
    assert code == 4
    assert err.startswith("error: category=model message=") and err.count("\n") == 1


def test_embed_deterministic_across_threads(ws, capsys):
    run(capsys, "diff-model", "--model1", ws / "a.model", "--model2", ws / "b.model", "--out", ws / "p.params")
    (ws / "plan.txt").write_text("downsample tent 2\nquantize8\n")
    outs = []
    for i, t in enumerate((1, 4, 8)):
        code, _, _ = run(capsys, "embed", "--cover", ws / "c.pgm", "--params", ws / "p.params", "--plan", ws / "plan.txt",
                         "--seed", 42, "--out", ws / f"s{i}.pgm", "--threads", t, "--out-probs", ws / f"m{i}.bin")
        assert code == 0
        outs.append((ws / f"s{i}.pgm").read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert (ws / "m0.lattice3.bin").exists()
    assert read_raster(ws / "s0.pgm").shape == (50, 50)


def test_embed_outputs_costs(ws, capsys):
    run(capsys, "diff-model", "--model1", ws / "a.model", "--model2", ws / "b.model", "--out", ws / "p.params")
    code, out, _ = run(capsys, "embed", "--cover", ws / "c.pgm", "--params", ws / "p.params", "--seed", 1,
                       "--out", ws / "s.pgm", "--out-costs", ws / "c.bin", "--wet-dark")
    assert code == 0 and "bpp=" in out and (ws / "c.bin").exists()


def test_embed_requires_seed(ws, capsys):
    code, _, err = run(capsys, "embed", "--cover", ws / "c.pgm", "--params", ws / "p.params", "--out", ws / "s.pgm")
    assert code == 2 and "category=parse" in err


def test_bad_plan_and_missing_file(ws, capsys):
    run(capsys, "diff-model", "--model1", ws / "a.model", "--model2", ws / "b.model", "--out", ws / "p.params")
    code, _, err = run(capsys, "embed", "--cover", ws / "c.pgm", "--params", ws / "p.params", "--plan", "gamma -2",
                       "--seed", 1, "--out", ws / "s.pgm")
    assert code == 2
    code, _, err = run(capsys, "payload", "--cover", ws / "missing.pgm", "--params", ws / "p.params")
    assert code == 3 and "category=io" in err


def test_payload_and_sweep(ws, capsys):
    run(capsys, "diff-model", "--model1", ws / "a.model", "--model2", ws / "b.model", "--out", ws / "p.params")
    code, out, _ = run(capsys, "payload", "--cover", ws / "c.pgm", "--params", ws / "p.params",
                       "--plan", "downsample box 5; quantize8", "--out", ws / "r.txt")
    assert code == 0 and "mean_bpp=" in out and (ws / "r.txt").read_text() == out
    code, _, _ = run(capsys, "payload", "--cover", ws / "c.pgm", "--params", ws / "p.params", "--plan", "downsample tent 2")
    assert code == 2
    code, out, _ = run(capsys, "sweep", "--cover", ws / "c.pgm", "--params", ws / "p.params", "--plan", "quantize8",
                       "--plan", "downsample tent 2", "--seed", 0, "--json", ws / "sw.json")
    assert code == 0 and len(json.loads((ws / "sw.json").read_text())["reports"]) == 2


def test_tile(ws, capsys):
    code, out, _ = run(capsys, "tile", "--input", ws / "c.pgm", "--spec", "30x20:3x5", "--out-dir", ws / "tiles")
    assert code == 0 and "tiles=15" in out
    assert len(list((ws / "tiles").glob("*.pgm"))) == 15
    assert run(capsys, "tile", "--input", ws / "c.pgm", "--spec", "30x20:4x5", "--out-dir", ws / "t2")[0] == 2
    assert run(capsys, "tile", "--input", ws / "c.pgm", "--spec", "banana", "--out-dir", ws / "t2")[0] == 2


def test_mimicry_verdicts(ws, capsys):
    args = ["mimicry", "--cover-stack", ws / "iso1" / "*.pgm", "--tol", "0.1", "--tol-b", "1.0"]
    code, out, _ = run(capsys, *args, "--stego-stack", ws / "iso1" / "*.pgm", "--target", ws / "a.model",
                       "--json", ws / "mim.json")
    assert code == 0 and "verdict=pass" in out
    code, out, err = run(capsys, *args, "--stego-stack", ws / "iso1" / "*.pgm", "--target", ws / "b.model")
    assert code == 5 and "verdict=fail" in out and "category=verification" in err


def test_print_config(ws, capsys, monkeypatch):
    monkeypatch.setenv("NATSTEGO_THREADS", "3")
    code, out, _ = run(capsys, "embed", "--cover", ws / "c.pgm", "--params", ws / "p.params", "--plan",
                       "gamma 2.2 ; quantize8", "--seed", 7, "--out", ws / "never.pgm", "--print-config")
    cfg = json.loads(out)
    assert code == 0 and cfg["threads"] == 3 and cfg["seed"] == 7
    assert cfg["plan"] == "gamma 2.2; quantize8"
    assert not (ws / "never.pgm").exists()


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "natstego.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "natstego" in r.stdout
