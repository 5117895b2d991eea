import json
import subprocess
import sys

import numpy as np
import pytest

from helpers import smooth_rot6d_clip, two_phase_motion
from lamof.cli import main
from lamof.codec import SuperMotionSequence
from lamof.fileio import load_motion, load_supermotion, save_motion, save_skeleton, save_supermotion
from lamof.motion import MotionSequence, Representation, Skeleton


def run(capsys, *argv):
    status = main([str(a) for a in argv])
    out = capsys.readouterr()
    return status, out.out, out.err


@pytest.fixture
def two_phase(tmp_path):
    path = tmp_path / "two.json"
    save_motion(path, two_phase_motion())
    return path


def fit(capsys, tmp_path, motion_path, k=2):
    model = tmp_path / "model.lcm"
    status, out, _ = run(capsys, "fit-clusters", "--input", motion_path, "--k", k, "--out", model)
    assert status == 0 and json.loads(out)["k"] == k
    return model


def test_roundtrip_two_phase(capsys, tmp_path, two_phase):
    model = fit(capsys, tmp_path, two_phase)
    status, out, _ = run(capsys, "roundtrip", "--input", two_phase, "--model", model)
    report = json.loads(out)
    assert status == 0
    assert report["ratio"] == 10.0 and report["M"] == 2 and report["N"] == 20
    assert report["mpjpe"] <= 1e-9
    assert report["max_coherence_residual"] <= 1e-9


def test_encode_decode_resample_chain(capsys, tmp_path, two_phase):
    model = fit(capsys, tmp_path, two_phase)
    lsm, lmf = tmp_path / "two.lsm", tmp_path / "back.json"
    assert run(capsys, "encode", "--input", two_phase, "--model", model, "--out", lsm)[0] == 0
    assert run(capsys, "decode", "--input", lsm, "--out", lmf)[0] == 0
    decoded = load_motion(lmf)
    # supermotion files store float32
    assert np.max(np.abs(decoded.frames - two_phase_motion().frames)) <= 1e-6
    status, out, _ = run(capsys, "resample", "--input", lmf, "--frames", 39)
    assert status == 0 and len(json.loads(out)["frames"]) == 39


def test_retime_infeasible(capsys, tmp_path):
    sm = SuperMotionSequence(np.zeros((10, 3)), np.zeros((10, 3)), [4] * 10, [0] * 10, Representation.CARTESIAN, 1)
    path = tmp_path / "ten.lsm"
    save_supermotion(path, sm)
    out_path = tmp_path / "never.lsm"
    status, _, err = run(capsys, "retime", "--input", path, "--total", 5, "--d-min", 1, "--out", out_path)
    assert status == 2
    assert json.loads(err)["code"] == "INFEASIBLE_DURATION"
    assert not out_path.exists()


def test_retime_and_loop(capsys, tmp_path):
    sm = SuperMotionSequence([[0, 0, 0], [4, 0, 0], [4, 4, 0]], [[1, 0, 0], [0, 1, 0], [-1, -1, 0]], [4, 4, 4],
                             [0, 1, 2], Representation.CARTESIAN, 1)
    path = tmp_path / "s.lsm"
    save_supermotion(path, sm)
    status, out, _ = run(capsys, "retime", "--input", path, "--total", 14, "--out", tmp_path / "r.lsm")
    assert status == 0 and json.loads(out) == {"durations": [5, 5, 4], "total_frames": 14}
    status, out, _ = run(capsys, "loop", "--input", path, "--out", tmp_path / "l.lsm", "--report")
    assert status == 0 and set(json.loads(out)) == {"wrap_step", "max_internal_step", "seamless"}
    looped = load_supermotion(tmp_path / "l.lsm")
    assert np.array_equal(looped.start_poses[-1], looped.start_poses[0])


def test_corrupt_input_writes_nothing(capsys, tmp_path):
    bad = tmp_path / "bad.lsm"
    bad.write_bytes(b"LSM1" + b"\x00" * 3)
    out_path = tmp_path / "out.lmf"
    status, _, err = run(capsys, "decode", "--input", bad, "--out", out_path)
    assert status == 2 and json.loads(err)["code"] == "TRUNCATED_FILE"
    assert not out_path.exists()


def test_missing_file(capsys, tmp_path):
    status, _, err = run(capsys, "decode", "--input", tmp_path / "nope.lsm", "--out", tmp_path / "o.lmf")
    assert status == 2 and json.loads(err)["code"] == "IO_ERROR"


def test_usage_error(capsys):
    status, _, err = run(capsys, "encode")
    assert status == 2 and json.loads(err.strip().splitlines()[-1])["code"] == "USAGE"


def test_fit_is_deterministic(capsys, tmp_path, two_phase):
    a = tmp_path / "a.lcm"
    b = tmp_path / "b.lcm"
    run(capsys, "fit-clusters", "--input", two_phase, "--k", 3, "--seed", 5, "--out", a)
    run(capsys, "fit-clusters", "--input", two_phase, "--k", 3, "--seed", 5, "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_seed_from_environment(capsys, tmp_path, two_phase, monkeypatch):
    monkeypatch.setenv("LAMOF_SEED", "5")
    env_model = tmp_path / "env.lcm"
    run(capsys, "fit-clusters", "--input", two_phase, "--k", 3, "--out", env_model)
    monkeypatch.delenv("LAMOF_SEED")
    flag_model = tmp_path / "flag.lcm"
    run(capsys, "fit-clusters", "--input", two_phase, "--k", 3, "--seed", 5, "--out", flag_model)
    assert env_model.read_bytes() == flag_model.read_bytes()


def test_stitch_and_fsr(capsys, tmp_path):
    rng = np.random.default_rng(0)
    paths = []
    for i, n in enumerate((50, 60, 70)):
        paths.append(tmp_path / f"c{i}.lmf")
        save_motion(paths[-1], smooth_rot6d_clip(rng, 3, n))
    status, out, _ = run(capsys, "stitch", "--clips", *paths, "--out", tmp_path / "s.lmf")
    assert status == 0 and json.loads(out)["total_frames"] == 180 - 40
    save_skeleton(tmp_path / "sk.json", Skeleton((-1, 0, 1), np.array([[0, 0, 0], [0, -0.5, 0], [0, -0.5, 0.0]]), (2,)))
    status, out, _ = run(capsys, "fsr", "--input", tmp_path / "s.lmf", "--skeleton", tmp_path / "sk.json")
    assert status == 0 and 0.0 <= json.loads(out)["fsr"] <= 1.0


def test_metrics_command(capsys, tmp_path):
    sm = SuperMotionSequence([[0, 0, 0], [1, 0, 0]], [[0.5, 0, 0], [0, 0, 0]], [2, 2], [0, 1],
                             Representation.CARTESIAN, 1)
    other = sm.replace(start_poses=np.array([[0, 0, 0], [1, 3, 4.0]]))
    save_supermotion(tmp_path / "a.lsm", sm)
    save_supermotion(tmp_path / "b.lsm", other)
    (tmp_path / "w.json").write_text(json.dumps({"w_coherent": 2.0}))
    status, out, _ = run(capsys, "metrics", "--a", tmp_path / "a.lsm", "--b", tmp_path / "b.lsm",
                         "--weights", tmp_path / "w.json")
    report = json.loads(out)
    assert status == 0
    assert report["recon"] == 12.5 and report["coherent"] == 25.0 and report["total"] == 62.5
    assert report["joint"] is None


def test_build_corpus(capsys, tmp_path):
    rng = np.random.default_rng(1)
    clips = tmp_path / "clips"
    clips.mkdir()
    lines = []
    for i in range(6):
        save_motion(clips / f"{i}.lmf", smooth_rot6d_clip(rng, 2, int(rng.integers(40, 80))))
        lines.append(json.dumps({"id": f"c{i}", "path": f"{i}.lmf", "prompt": f"a person moves {i}"}))
    (clips / "clips.jsonl").write_text("\n".join(lines) + "\n")
    out_dir = tmp_path / "corpus"
    status, out, _ = run(capsys, "build-corpus", "--manifest", clips / "clips.jsonl", "--count", 2,
                         "--clips-per-sample", 3, "--seed", 4, "--out-dir", out_dir)
    assert status == 0 and json.loads(out)["samples"] == 2
    records = [json.loads(x) for x in (out_dir / "manifest.jsonl").read_text().splitlines()]
    assert len(records) == 2 and all(len(r["clip_ids"]) == 3 for r in records)


def test_module_entry_point(tmp_path):
    path = tmp_path / "m.json"
    save_motion(path, MotionSequence(np.zeros((4, 3)), Representation.CARTESIAN, 1))
    proc = subprocess.run([sys.executable, "-m", "lamof", "resample", "--input", str(path), "--frames", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["frames"] == [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
