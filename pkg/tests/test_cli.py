import json

import numpy as np
import pytest

from imhrate.cli import main


def _read_csv(path):
    rows = []
    names = None
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            continue
        if names is None:
            names = line.split(",")
            continue
        rows.append(dict(zip(names, line.split(","))))
    return names, rows


def test_analyze_exponential_steps_table(tmp_path):
    out = tmp_path / "exp"
    rc = main(["analyze", "--model", "registry:exponential?theta=0.5",
               "--epsilon", "0.01", "-o", str(out), "--no-figures"])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert abs(report["steps_to_eps"]["0.01"]["fractional"] - 6.64) <= 0.01
    assert report["speed_kind"] == "exact-equality"
    assert report["wstar"] == 2.0
    first = (out / "tv.csv").read_text().splitlines()[0]
    assert first.startswith("# imhrate ")
    names, rows = _read_csv(out / "tv.csv")
    assert names == ["n", "tv", "lower", "upper", "rate_fit"]
    assert float(rows[0]["tv"]) == 0.5
    assert float(rows[-1]["rate_fit"]) == pytest.approx(0.5, abs=1e-9)


def test_analyze_phi2_tv_column(tmp_path):
    out = tmp_path / "phi2"
    rc = main(["analyze", "--model", "registry:sharpness_phi2", "--horizon", "20",
               "-o", str(out), "--no-figures"])
    assert rc == 0
    _, rows = _read_csv(out / "tv.csv")
    for row in rows:
        t = int(row["t"])
        if t >= 1:
            assert float(row["tv"]) == pytest.approx(0.5 ** (t + 1), abs=1e-12)


def test_analyze_unbounded_exits_2(tmp_path, capsys):
    rc = main(["analyze", "--model", "registry:exponential?theta=1.5",
               "-o", str(tmp_path), "--no-figures"])
    assert rc == 2
    assert "not geometrically ergodic" in capsys.readouterr().err


def test_analyze_matrix_fixture(tmp_path):
    out = tmp_path / "three"
    rc = main(["analyze", "--model", "registry:three_point", "--horizon", "6",
               "-o", str(out), "--no-figures"])
    assert rc == 0
    _, rows = _read_csv(out / "tv.csv")
    got = {(int(r["t"]), int(r["state"])): float(r["tv"]) for r in rows}
    for t in range(1, 7):
        assert got[(t, 0)] <= 1e-14
        assert got[(t, 1)] == pytest.approx(0.5 * (2 / 3) ** t, abs=1e-13)


def test_outputs_are_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    argv = ["couple", "--model", "registry:sharpness_phi1", "--replicas", "400",
            "--x0", "2", "--seed", "9", "--no-figures"]
    assert main(argv + ["-o", str(out1)]) == 0
    assert main(argv + ["-o", str(out2)]) == 0
    for name in ("couple.json", "meeting_times.csv"):
        a = (out1 / name).read_bytes()
        b = (out2 / name).read_bytes()
        # identical modulo the differing output paths in the recorded command
        assert a.replace(str(out1).encode(), b"X") == b.replace(str(out2).encode(), b"X")


def test_spectrum_and_figures(tmp_path):
    out = tmp_path / "spectrum"
    rc = main(["spectrum", "--model", "registry:sharpness_phi2", "-o", str(out)])
    assert rc == 0
    names, rows = _read_csv(out / "spectrum.csv")
    assert names[:2] == ["k", "eigenvalue"]
    assert float(rows[1]["eigenvalue"]) == 0.5
    assert (out / "spectrum.png").exists()


def test_simulate_trajectory(tmp_path):
    out = tmp_path / "sim"
    rc = main(["simulate", "--model", "registry:exponential?theta=0.5",
               "--steps", "50", "--x0", "1.0", "--seed", "3", "--trajectory",
               "-o", str(out), "--no-figures"])
    assert rc == 0
    run = json.loads((out / "run.json").read_text())
    assert run["meta"]["seed"] == 3
    assert 0.0 < run["acceptance_rate"] <= 1.0
    names, rows = _read_csv(out / "states.csv")
    assert names == ["t", "state", "accepted"]
    assert len(rows) == 51


def test_simulate_mh_fixture(tmp_path):
    out = tmp_path / "mh"
    rc = main(["simulate", "--model", "registry:uniform_rwmh?delta=1.5",
               "--algorithm", "mh", "--steps", "100", "--x0", "0.0", "--seed", "1",
               "-o", str(out), "--no-figures"])
    assert rc == 0
    run = json.loads((out / "run.json").read_text())
    assert abs(run["final_state"]) <= 1.0


def test_reproduce_steps_vs_theta(tmp_path):
    out = tmp_path / "rep"
    rc = main(["reproduce", "--figure", "steps_vs_theta", "-o", str(out), "--no-figures"])
    assert rc == 0
    _, rows = _read_csv(out / "steps_vs_theta.csv")
    by_theta = {float(r["theta"]): float(r["steps_fractional"]) for r in rows}
    assert by_theta[0.5] == pytest.approx(6.64, abs=0.01)
    assert by_theta[0.99] == pytest.approx(1.0, abs=1e-12)


def test_reproduce_steps_vs_n_slope(tmp_path):
    out = tmp_path / "repn"
    rc = main(["reproduce", "--figure", "steps_vs_N", "-o", str(out), "--no-figures"])
    assert rc == 0
    _, rows = _read_csv(out / "steps_vs_N.csv")
    for p in (0.1, 0.25, 0.5):
        pts = [(float(r["N"]), float(r["steps_fractional"]))
               for r in rows if float(r["p"]) == p]
        top = [(n, s) for n, s in pts if n >= 128]
        slope = np.polyfit(np.log([n for n, _ in top]), np.log([s for _, s in top]), 1)[0]
        assert abs(slope - 0.5) <= 0.05


def test_validate_subcommand_exit_code(capsys):
    rc = main(["validate", "general", "--seed", "7"])
    assert rc == 0
    assert "0 failed" in capsys.readouterr().out


def test_figures_rendered_by_default(tmp_path):
    out = tmp_path / "fig"
    rc = main(["analyze", "--model", "registry:exponential?theta=0.5", "-o", str(out)])
    assert rc == 0
    assert (out / "tv.png").exists()


def test_analyze_point_tv_column(tmp_path):
    out = tmp_path / "pt"
    rc = main(["analyze", "--model", "registry:exponential?theta=0.5",
               "--horizon", "8", "--point", "0.0", "-o", str(out), "--no-figures"])
    assert rc == 0
    _, rows = _read_csv(out / "tv.csv")
    for row in rows:
        n = int(row["n"])
        assert float(row["tv"]) == pytest.approx(0.5 ** n, abs=1e-8)
    assert float(rows[-1]["rate_fit"]) == pytest.approx(0.5, abs=1e-6)


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("IMHRATE_OUTPUT_DIR", str(tmp_path / "envout"))
    rc = main(["reproduce", "--figure", "steps_vs_theta", "--no-figures"])
    assert rc == 0
    assert (tmp_path / "envout" / "steps_vs_theta.csv").exists()


def test_reproduce_renders_figures(tmp_path):
    out = tmp_path / "figs"
    rc = main(["reproduce", "--figure", "steps_vs_N", "-o", str(out)])
    assert rc == 0
    assert (out / "steps_vs_N.png").exists()
