from __future__ import annotations

import json
from dataclasses import replace

import numpy as np
import pytest

from contactchain.cli import _prompt_scene, main, perturbed_start
from contactchain.planner import build_prompt, record_transcript
from contactchain.sceneplan import load_sceneplan

from conftest import FIXTURES, LEVEL_FILES

INSTRUCTION = "I want to play video games for a while, then go to sleep."


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_validate_ok(capsys):
    assert main(["validate", str(LEVEL_FILES["simple"])]) == 0
    assert "0000: ok" in capsys.readouterr().out


def test_validate_dangling(tmp_path):
    doc = {"0": {"obj": {"000": {"id": "12747", "name": "bed", "scale": 1, "transfer": [0, 0, 0]}},
                 "chain_of_contacts": [[["sofa000", "none", "none", "none", "front"]]]}}
    assert main(["validate", write(tmp_path / "d.json", doc)]) == 2


def test_validate_unknown_part(tmp_path, capsys):
    doc = json.loads(LEVEL_FILES["simple"].read_text())
    doc["0000"]["chain_of_contacts"][1][0][1] = "wheel3"
    path = write(tmp_path / "u.json", doc)
    assert main(["validate", "--strict", path]) == 1
    assert "unknown part" in capsys.readouterr().out
    assert main(["validate", path]) == 0


def test_validate_missing_file(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == 2


def test_plan_offline_reproduces_appendix(capsys):
    code = main(["plan", INSTRUCTION, "--scene", str(FIXTURES / "prompt_scene.json"),
                 "--offline", str(FIXTURES / "appendix_transcript.json")])
    out = capsys.readouterr().out
    assert code == 0
    text, _, doc = out.partition("\n{")
    assert text.count("Step ") == 7 and text.count("Pair ") == 11
    (entry,) = load_sceneplan("{" + doc)
    assert entry.chain.objects == ["chair001", "laptop003", "bed000"]


def test_plan_missing_token(monkeypatch, capsys):
    monkeypatch.delenv("CC_NO_TOKEN", raising=False)
    code = main(["plan", "x", "--scene", str(FIXTURES / "prompt_scene.json"), "--token-env", "CC_NO_TOKEN"])
    assert code == 3


def test_plan_empty_response(tmp_path, capsys):
    spec, _, _ = _prompt_scene(json.loads((FIXTURES / "prompt_scene.json").read_text()))
    record_transcript(tmp_path / "t.json", build_prompt(replace(spec, instruction="x")), "")
    code = main(["plan", "x", "--scene", str(FIXTURES / "prompt_scene.json"), "--offline", str(tmp_path / "t.json")])
    assert code == 3


def test_plan_bad_scene(tmp_path):
    assert main(["plan", "x", "--scene", write(tmp_path / "s.json", {"objects": []})]) == 2


def test_run_simple_suite(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", str(LEVEL_FILES["simple"]), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["per_level"]["simple"]["success_rate"] == 100.0
    assert (out / "report.txt").read_text().startswith("Level")
    assert (out / "logs" / "0000_000.jsonl").exists()


def test_run_is_byte_stable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["run", str(LEVEL_FILES["simple"]), "--trials", "2", "--perturb", "0.3", "--seed", "7"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--jobs", "2"]) == 0
    for rel in ("report.json", "report.txt", "logs/0000_000.jsonl", "logs/0000_001.jsonl"):
        assert (a / rel).read_bytes() == (b / rel).read_bytes()
    # perturbation makes the two trials differ
    assert (a / "logs/0000_000.jsonl").read_bytes() != (a / "logs/0000_001.jsonl").read_bytes()


def test_perturbed_start_in_disk():
    assert perturbed_start(0, 0, 0, 0.0) == (0.0, 0.0)
    for t in range(20):
        x, y = perturbed_start(3, 1, t, 0.5)
        assert x * x + y * y <= 0.25
    assert perturbed_start(3, 1, 2, 0.5) == perturbed_start(3, 1, 2, 0.5)


@pytest.mark.parametrize("extra", [["--trials", "0"], ["--jobs", "0"], ["--trials", "many"]])
def test_run_usage_errors(extra):
    with pytest.raises(SystemExit) as exc:
        code = main(["run", str(LEVEL_FILES["simple"]), *extra])
        raise SystemExit(code)
    assert exc.value.code == 64


def test_run_unknown_path(tmp_path):
    assert main(["run", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2


def test_run_config_override(tmp_path):
    cfg = write(tmp_path / "c.json", {"sequencer": {"step_seconds": 0.5}})
    out = tmp_path / "run"
    assert main(["run", str(LEVEL_FILES["simple"]), "--out", str(out), "--config", cfg]) == 0
    assert json.loads((out / "report.json").read_text())["overall"]["success_rate"] == 0.0
    bad = write(tmp_path / "bad.json", {"reward": {"w_typo": 1}})
    assert main(["run", str(LEVEL_FILES["simple"]), "--out", str(out), "--config", bad]) == 2


def test_heightmap_empty_scene(tmp_path):
    out = tmp_path / "hm"
    assert main(["heightmap", write(tmp_path / "s.json", {"obj": {}}), "--out", str(out)]) == 0
    rows = (tmp_path / "hm.csv").read_text().splitlines()
    assert len(rows) == 16 and all(v == "0.0" for r in rows for v in r.split(","))
    assert (tmp_path / "hm.pgm").read_text().startswith("P2\n16 16\n255\n")


def test_heightmap_slab(tmp_path):
    xs, ys = np.meshgrid(np.arange(0, 1.5, 0.02), np.arange(-1.5, 1.5, 0.02))
    pts = np.stack([xs.ravel(), ys.ravel(), np.full(xs.size, 0.45)], axis=1).round(6).tolist()
    scene = write(tmp_path / "s.json", {"obj": {}, "points": pts})
    cfg = write(tmp_path / "c.json", {"heightmap": {"cell_radius": 0.06}})
    assert main(["heightmap", scene, "--pos", "0,0,0.9", "--yaw", "0", "--config", cfg,
                 "--out", str(tmp_path / "hm")]) == 0
    grid = np.loadtxt(tmp_path / "hm.csv", delimiter=",")
    assert np.all(grid[:, 8:] == 0.45) and np.all(grid[:, :8] == 0.0)


def test_heightmap_from_sceneplan(tmp_path):
    assert main(["heightmap", str(LEVEL_FILES["simple"]), "--pos", "0,-2,0.9", "--out", str(tmp_path / "hm")]) == 0
    assert np.loadtxt(tmp_path / "hm.csv", delimiter=",").max() > 0


def test_heightmap_errors(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["heightmap", "s.json", "--yaw", "north"])
    assert exc.value.code == 64
    with pytest.raises(SystemExit) as exc:
        main(["heightmap", "s.json", "--pos", "1,2"])
    assert exc.value.code == 64
    assert main(["heightmap", write(tmp_path / "s.json", {"obj": {"0": {"id": "x"}}})]) == 2
    assert main(["heightmap", write(tmp_path / "m.json", {"obj": {"0": {"id": "nope", "name": "a", "scale": 1,
                                                                         "transfer": [0, 0, 0]}}})]) == 2


def test_assets_export(tmp_path, capsys):
    assert main(["assets", str(tmp_path)]) == 0
    assert (tmp_path / "12747.json").exists()
    assert main(["validate", "--assets", str(tmp_path), str(LEVEL_FILES["hard"])]) == 0


def test_no_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 64
