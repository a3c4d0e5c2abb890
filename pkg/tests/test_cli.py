import json
import subprocess
import sys

import numpy as np

from qlandscape.cli import main


def run_cli(*args):
    """Invoke the installed entry point in-process; returns (code, stdout)."""
    import contextlib
    import io

    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(list(args))
    return code, buf.getvalue()


def test_binary_invocation():
    # one real subprocess round-trip through the module entry point
    proc = subprocess.run(
        [sys.executable, "-m", "qlandscape", "dla", "--family", "hva_tfim",
         "--n", "4", "--boundary", "open"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "dim=16" in proc.stdout


def test_dla_open_and_closed():
    code, out = run_cli("dla", "--family", "hva_tfim", "--n", "6", "--boundary", "open")
    assert code == 0
    assert "dim=36" in out
    code, out = run_cli("dla", "--family", "hva_tfim", "--n", "6",
                        "--boundary", "closed")
    assert code == 0
    assert "state_sector_dim=9" in out


def test_dla_dump_basis(tmp_path):
    path = tmp_path / "basis.txt"
    code, _ = run_cli("dla", "--family", "hva_tfim", "--n", "4",
                      "--boundary", "closed", "--dump-basis", str(path))
    assert code == 0
    assert path.read_text().startswith("n=4 dim=11")


def test_qfim_smoke(tmp_path):
    code, out = run_cli("qfim", "--family", "hva_tfim", "--n", "2", "--L", "1",
                        "--theta", "0,0", "--output-dir", str(tmp_path))
    assert code == 0
    assert "rank=" in out
    mat = (tmp_path / "qfim.csv").read_text().splitlines()
    assert len(mat) == 2  # 2x2 matrix, finite entries
    for row in mat:
        assert all(np.isfinite(float(x)) for x in row.split(","))
    assert (tmp_path / "qfim_spectrum.csv").exists()
    assert (tmp_path / "qfim_spectrum.json").exists()
    assert (tmp_path / "qfim_spectrum.png").exists()


def test_qfim_methods_agree(tmp_path):
    outs = {}
    for method in ("exact", "shift", "rank-one"):
        code, _ = run_cli("qfim", "--family", "hva_tfim", "--n", "2", "--L", "2",
                          "--seed", "3", "--method", method,
                          "--output-dir", str(tmp_path / method), "--no-figures")
        assert code == 0
        outs[method] = np.loadtxt(tmp_path / method / "qfim.csv", delimiter=",")
    assert np.abs(outs["exact"] - outs["shift"]).max() < 1e-8
    assert np.abs(outs["exact"] - outs["rank-one"]).max() < 1e-8


def test_qfim_bad_theta_length(tmp_path):
    code, _ = run_cli("qfim", "--family", "hva_tfim", "--n", "2", "--L", "1",
                      "--theta", "0.1", "--output-dir", str(tmp_path))
    assert code == 1


def test_theta_file_overrides_flag(tmp_path):
    theta_file = tmp_path / "theta.txt"
    theta_file.write_text("0.0, 0.0")
    code, out = run_cli("qfim", "--family", "hva_tfim", "--n", "2", "--L", "1",
                        "--theta", "9,9", "--theta-file", str(theta_file),
                        "--output-dir", str(tmp_path), "--no-figures")
    assert code == 0


def test_train_writes_record_and_trace(tmp_path):
    code, out = run_cli("train", "--task", "vqe", "--n", "2", "--depth", "3",
                        "--seed", "2", "--max-iters", "2000",
                        "--output-dir", str(tmp_path))
    assert code == 0
    assert "success=True" in out
    lines = (tmp_path / "run.csv").read_text().splitlines()
    assert lines[0].startswith("task,n,boundary,depth,M,seed")
    assert (tmp_path / "trace_3_2.csv").exists()
    assert (tmp_path / "trace.png").exists()


def test_train_seed_determinism(tmp_path):
    args = ("train", "--task", "vqe", "--n", "2", "--depth", "2", "--seed", "5",
            "--max-iters", "500", "--no-figures")
    run_cli(*args, "--output-dir", str(tmp_path / "a"))
    run_cli(*args, "--output-dir", str(tmp_path / "b"))
    assert (tmp_path / "a/run.csv").read_bytes() == (tmp_path / "b/run.csv").read_bytes()


def test_sweep_from_config(tmp_path):
    cfg = {
        "task": "vqe", "n": 2, "depth_list": [1, 3], "seeds_per_point": 3,
        "adam": {"max_iters": 1500},
        "rank_scan": {"points_per_depth": 2},
        "output_dir": str(tmp_path / "out"), "master_seed": 1,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    code, out = run_cli("sweep", "--config", str(cfg_path))
    assert code == 0
    assert (tmp_path / "out/runs.csv").exists()
    assert (tmp_path / "out/success.png").exists()
    assert "depth=3" in out


def test_sweep_rejects_bad_config(tmp_path):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"task": "vqe", "n": 2, "depth_list": [1],
                                    "mystery": True}))
    code, _ = run_cli("sweep", "--config", str(cfg_path))
    assert code == 1


def test_rank_scan_cli(tmp_path):
    code, out = run_cli("rank-scan", "--task", "vqe", "--n", "2",
                        "--depths", "1,2", "--points", "3",
                        "--output-dir", str(tmp_path), "--no-figures")
    assert code == 0
    lines = (tmp_path / "ranks.csv").read_text().splitlines()
    assert lines[0] == "depth,M,point_kind,matrix,rank,gap,lambda_max"
    assert len(lines) == 7


def test_hessian_cli(tmp_path):
    code, out = run_cli("hessian", "--task", "vqe", "--n", "2", "--depth", "2",
                        "--theta", "0.1,0.2,0.3,0.4",
                        "--output-dir", str(tmp_path), "--no-figures")
    assert code == 0
    assert "rank=" in out
    meta = json.loads((tmp_path / "hessian.json").read_text())
    assert meta["M"] == 4
    assert meta["loss_kind"] == "vqe"


def test_haar_check_cli(tmp_path):
    code, out = run_cli("haar-check", "--samples", "2000", "--seed", "0",
                        "--output-dir", str(tmp_path))
    assert code == 0
    assert "E|U00|^2" in out


def test_unknown_flag_exits_1():
    proc = subprocess.run(
        [sys.executable, "-m", "qlandscape", "dla", "--nonsense"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 1


def test_missing_config_exits_1(tmp_path):
    code, _ = run_cli("sweep", "--config", str(tmp_path / "nope.json"))
    assert code == 1
