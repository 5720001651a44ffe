import hashlib
import json
import math

from thenon.cli import main
from thenon.render import STANDARD_SLICE_SHA256


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_wv_subcommand(tmp_path, capsys):
    cfg = write_config(tmp_path, {"function": {"kind": "exp"},
                                  "wv": {"r": 4000.0, "grid": 8}})
    out = tmp_path / "report.json"
    code = main(["wv", "--config", cfg, "--out", str(out), "--no-plot"])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["N"] == 4000
    assert payload["admissible"] is True


def test_wv_stdout_when_no_out(tmp_path, capsys):
    cfg = write_config(tmp_path, {"wv": {"r": 4000.0, "grid": 8}})
    assert main(["wv", "--config", cfg, "--no-plot"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["admissible"] is True


def test_wv_writes_figure(tmp_path):
    cfg = write_config(tmp_path, {"wv": {"r": 4000.0, "grid": 8}})
    out = tmp_path / "report.json"
    assert main(["wv", "--config", cfg, "--out", str(out)]) == 0
    assert (tmp_path / "report.png").exists()


def test_periodic_identity(tmp_path):
    out = tmp_path / "p4.json"
    code = main(["periodic", "--g", "id", "--out", str(out), "--no-plot"])
    assert code == 0
    payload = json.loads(out.read_text())
    z = complex(*payload["period_point"]["z"])
    assert abs(z - complex(math.log(math.pi), math.pi / 2)) < 1e-9
    assert payload["primitive"] is True
    assert payload["residual"] < 1e-10
    assert len(payload["orbit"]) == 4


def test_periodic_rejects_bad_g(tmp_path, capsys):
    out = tmp_path / "p4.json"
    code = main(["periodic", "--g", "nonsense", "--out", str(out)])
    assert code == 2
    err = capsys.readouterr().err
    assert err.startswith("thenon: error: ValidationError:")
    assert err.count("\n") == 1


def test_render_golden_and_reproducible(tmp_path):
    out = tmp_path / "slice.ppm"
    code = main(["render", "--out", str(out), "--threads", "2", "--no-plot"])
    assert code == 0
    digest = hashlib.sha256(out.read_bytes()).hexdigest()
    assert digest == STANDARD_SLICE_SHA256
    out2 = tmp_path / "slice2.ppm"
    assert main(["render", "--out", str(out2), "--threads", "1",
                 "--no-plot"]) == 0
    assert out.read_bytes() == out2.read_bytes()


def test_render_validation_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, {"render": {"width": 0}})
    out = tmp_path / "slice.ppm"
    code = main(["render", "--config", cfg, "--out", str(out)])
    assert code == 2
    assert "ValidationError" in capsys.readouterr().err


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, {"bogus": 1})
    assert main(["wv", "--config", cfg]) == 2


def test_unknown_block_key_rejected(tmp_path):
    cfg = write_config(tmp_path, {"wv": {"r": 100.0, "typo": 2}})
    assert main(["wv", "--config", cfg]) == 2


def test_orbit_csv(tmp_path):
    cfg = write_config(tmp_path, {
        "orbit": {"z": [2.5, 0.0], "w": [0.1, 0.0], "n_max": 30,
                  "log_escape_radius": math.log(1e6)},
    })
    out = tmp_path / "orbit.csv"
    assert main(["orbit", "--config", cfg, "--out", str(out),
                 "--no-plot"]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "n,re_z,im_z,re_w,im_w,log_abs_z,arg_z"
    assert len(lines) > 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    # sin cannot build a depth-2 cascade: double-exponential wall
    cfg = write_config(tmp_path, {
        "function": {"kind": "sin"},
        "escape": {"seed_radius": 2000.0, "depth": 2},
    })
    code = main(["escape", "--config", cfg, "--out",
                 str(tmp_path / "e.json")])
    assert code == 3
    err = capsys.readouterr().err
    assert err.startswith("thenon: error: DepthUnrepresentable:")


def test_escape_and_stable_pipelines(tmp_path):
    cfg = write_config(tmp_path, {
        "function": {"kind": "exp"},
        "delta": 1.0,
        "escape": {"seed_radius": 3200.0, "depth": 3},
        "stable": {"t_probe": 0.3},
    })
    out = tmp_path / "cascade.json"
    assert main(["escape", "--config", cfg, "--out", str(out),
                 "--no-plot"]) == 0
    payload = json.loads(out.read_text())
    assert payload["summary"]["depth"] == 3
    assert all(c["in_annulus"] for c in payload["annulus_checks"])
    assert (tmp_path / "cascade.orbit.csv").exists()

    curve_out = tmp_path / "curve.csv"
    assert main(["stable", "--config", cfg, "--out", str(curve_out),
                 "--no-plot"]) == 0
    diag = json.loads((tmp_path / "curve.json").read_text())
    assert diag["convergence"]["lambda_fit"] <= 0.6
    assert curve_out.exists()


def test_reproducible_json_artifact(tmp_path):
    cfg = write_config(tmp_path, {"wv": {"r": 3200.0, "grid": 8}})
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert main(["wv", "--config", cfg, "--out", str(a), "--no-plot"]) == 0
    assert main(["wv", "--config", cfg, "--out", str(b), "--no-plot"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_reproducible_escape_artifact(tmp_path):
    cfg = write_config(tmp_path, {
        "escape": {"seed_radius": 3200.0, "depth": 2},
    })
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    for out in (a, b):
        assert main(["escape", "--config", cfg, "--out", str(out),
                     "--no-plot"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_figures_written_alongside_artifacts(tmp_path):
    cfg = write_config(tmp_path, {
        "escape": {"seed_radius": 3200.0, "depth": 2},
        "orbit": {"z": [2.5, 0.0], "w": [0.0, 0.0], "n_max": 20,
                  "log_escape_radius": math.log(1e6)},
        "render": {"width": 32, "height": 32},
    })
    assert main(["escape", "--config", cfg,
                 "--out", str(tmp_path / "c.json")]) == 0
    assert (tmp_path / "c.png").exists()
    assert main(["orbit", "--config", cfg,
                 "--out", str(tmp_path / "o.csv")]) == 0
    assert (tmp_path / "o.png").exists()
    assert main(["render", "--config", cfg,
                 "--out", str(tmp_path / "s.ppm")]) == 0
    assert (tmp_path / "s.png").exists()
    assert main(["periodic", "--g", "id",
                 "--out", str(tmp_path / "p.json")]) == 0
    assert (tmp_path / "p.png").exists()
    assert main(["stable", "--config", cfg,
                 "--out", str(tmp_path / "k.csv")]) == 0
    assert (tmp_path / "k.png").exists()


def test_unwritable_output_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, {"wv": {"r": 4000.0, "grid": 8}})
    code = main(["wv", "--config", cfg, "--out",
                 str(tmp_path / "no" / "dir" / "x.json"), "--no-plot"])
    assert code == 2
    assert "IoError" in capsys.readouterr().err


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("THENON_THREADS", "2")
    out = tmp_path / "s.ppm"
    assert main(["render", "--out", str(out), "--no-plot"]) == 0
    digest = hashlib.sha256(out.read_bytes()).hexdigest()
    assert digest == STANDARD_SLICE_SHA256
    monkeypatch.setenv("THENON_THREADS", "zero")
    assert main(["render", "--out", str(out), "--no-plot"]) == 2
