import json
import math
import subprocess

import pytest

from chebflat import __version__
from chebflat.cli import EXIT_OK, EXIT_THRESHOLD, EXIT_USAGE, main, read_config


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_approx_build_example(capsys, tmp_path):
    code, out, _ = run(capsys, "approx", "build", "--eps", "0.1", "--eta", "0.5", "--t", "1",
                       "--out-dir", str(tmp_path))
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["version"] == __version__
    assert rep["config"]["eps"] == 0.1
    assert code == EXIT_OK and rep["pass"], out


def test_approx_build_passing_set(capsys, tmp_path):
    code, out, _ = run(capsys, "approx", "build", "--eps", "0.01", "--eta", "0.25", "--t", "1",
                       "--out-dir", str(tmp_path))
    assert code == EXIT_OK
    approx = json.loads((tmp_path / "approx.json").read_text())
    assert approx["params"]["k"] == 4
    assert [f["order"] for f in approx["factors"]] == [2 * approx["params"]["l"] * 2**i
                                                      for i in range(4)]
    assert "pass=true" in out


def test_approx_build_rejects_eps(capsys, tmp_path):
    code, _, err = run(capsys, "approx", "build", "--eps", "2", "--out-dir", str(tmp_path))
    assert code == EXIT_USAGE
    assert "eps" in err


def test_compare_taylor(capsys, tmp_path):
    out_file = tmp_path / "cmp.json"
    code, out, _ = run(capsys, "approx", "compare-taylor", "--eps", "1e-6", "--t", "1",
                       "--out", str(out_file))
    assert code == EXIT_OK
    row = json.loads(out_file.read_text())["rows"][0]
    assert (row["chebyshev"], row["taylor"]) == (17, 24)
    assert "17" in out and "24" in out


def test_certify_single(capsys, tmp_path):
    code, out, _ = run(capsys, "certify", "--from", "2", "--to", "2", "--out-dir", str(tmp_path))
    assert code == EXIT_OK
    line = [l for l in out.splitlines() if l.strip().startswith("2 ")][0]
    assert "even" in line and "positive" in line and "certified" in line
    doc = json.loads((tmp_path / "G_0002.json").read_text())
    assert doc["certificate"]["claim"] == "positive"


def test_certify_range_reproduces_corpus(capsys, tmp_path):
    code, out, _ = run(capsys, "certify", "--from", "2", "--to", "50", "--threads", "2",
                       "--out-dir", str(tmp_path))
    assert code == EXIT_OK
    assert "49 certified, 0 not certified" in out
    from pathlib import Path
    corpus = Path(__file__).resolve().parent.parent / "certificates"
    for N in range(2, 51):
        name = f"G_{N:04d}.json"
        assert (tmp_path / name).read_bytes() == (corpus / name).read_bytes()


def test_certify_rerun_identical(capsys, tmp_path):
    run(capsys, "certify", "--from", "5", "--to", "9", "--out-dir", str(tmp_path / "a"))
    run(capsys, "certify", "--from", "5", "--to", "9", "--out-dir", str(tmp_path / "b"))
    for N in range(5, 10):
        name = f"G_{N:04d}.json"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_certify_bad_range(capsys):
    assert run(capsys, "certify", "--from", "1", "--to", "3")[0] == EXIT_USAGE
    assert run(capsys, "certify", "--from", "9", "--to", "3")[0] == EXIT_USAGE


def test_ham_residuals_at_truth(capsys, tmp_path):
    out_file = tmp_path / "res.json"
    code, out, _ = run(capsys, "ham", "residuals", "--at-truth", "--out", str(out_file))
    assert code == EXIT_OK
    rep = json.loads(out_file.read_text())
    assert rep["all_pass"] and rep["at_truth"]
    assert rep["config"]["preset"] == "single-qubit"
    assert "all_pass=true" in out


def test_ham_residuals_far_from_truth(capsys):
    code, out, _ = run(capsys, "ham", "residuals", "--lam=-0.7")
    assert code == EXIT_THRESHOLD
    assert run(capsys, "ham", "residuals", "--lam", "0.1,0.2")[0] == EXIT_USAGE


def test_ham_export_ball_auto(capsys, tmp_path):
    out_file = tmp_path / "pop.json"
    code, _, _ = run(capsys, "ham", "export", "--ball-radius", "auto", "--out", str(out_file))
    assert code == EXIT_OK
    doc = json.loads(out_file.read_text())
    ball = [c for c in doc["constraints"] if c["kind"] == "ball"]
    assert len(ball) == 1
    assert doc["ball_radius"] == pytest.approx(math.sqrt(doc["m"]))
    assert doc["version"] == __version__ and doc["config"]["preset"] == "single-qubit"


def test_ham_export_residual_only(capsys, tmp_path):
    code, _, err = run(capsys, "ham", "export", "--preset", "zz-chain-4",
                       "--out", str(tmp_path / "x.json"))
    assert code == EXIT_USAGE
    assert "residual-only" in err


def test_ham_generate_and_instance(capsys, tmp_path):
    inst = tmp_path / "inst.json"
    code, _, _ = run(capsys, "ham", "generate", "--preset", "tfim-4", "--seed", "3",
                     "--out", str(inst))
    assert code == EXIT_OK
    doc = json.loads(inst.read_text())
    assert doc["interaction_graph"]["max_degree"] >= 2
    assert doc["gibbs"]["trace_err"] <= 1e-12
    assert doc["config"]["beta"] == 0.5
    res = tmp_path / "res.json"
    code, _, _ = run(capsys, "ham", "residuals", "--instance", str(inst), "--at-truth",
                     "--out", str(res))
    assert code == EXIT_OK
    rcfg = json.loads(res.read_text())["config"]
    assert rcfg["preset"] == "tfim-4" and rcfg["seed"] == 3


def test_ham_invalid_beta(capsys):
    assert run(capsys, "ham", "residuals", "--beta", "-1")[0] == EXIT_USAGE
    # unknown choices are rejected by argparse itself, with the same exit code
    with pytest.raises(SystemExit) as exc:
        main(["ham", "residuals", "--preset", "nope"])
    assert exc.value.code == EXIT_USAGE


def test_ham_learn_single(capsys, tmp_path):
    out_file = tmp_path / "learn.json"
    code, out, _ = run(capsys, "ham", "learn", "--starts", "3", "--seed", "2",
                       "--out", str(out_file))
    assert code == EXIT_OK
    rep = json.loads(out_file.read_text())
    assert abs(rep["lam_hat"][0] - 0.7) <= 0.02
    assert rep["config"]["seed"] == 2


def test_config_file_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# run settings\nset-size-b = 2\neps = 0.02\nseed = 9\n")
    assert read_config(cfg) == {"set_size_b": "2", "eps": "0.02", "seed": "9"}
    out_file = tmp_path / "res.json"
    code, _, _ = run(capsys, "ham", "residuals", "--config", str(cfg), "--seed", "4",
                     "--at-truth", "--out", str(out_file))
    assert code == EXIT_OK
    c = json.loads(out_file.read_text())["config"]
    assert c["set_size_b"] == 2 and c["eps"] == 0.02 and c["seed"] == 4


def test_config_file_errors(capsys, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("no equals sign here\n")
    assert run(capsys, "ham", "residuals", "--config", str(bad))[0] == EXIT_USAGE
    assert run(capsys, "ham", "residuals", "--config", str(tmp_path / "missing"))[0] == EXIT_USAGE


def test_determinism_byte_identical(capsys, tmp_path):
    for d in ("a", "b"):
        run(capsys, "ham", "export", "--out", str(tmp_path / d / "pop.json"))
        run(capsys, "approx", "build", "--eps", "0.01", "--eta", "0.25", "--t", "0.5",
            "--out-dir", str(tmp_path / d))
    for name in ("pop.json", "approx.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_entry_point_version():
    res = subprocess.run(["chebflat", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
