import json
import math

import numpy as np
import pytest
from numpy.polynomial import legendre as npleg

from spinest.cli import EXIT_CONVERGENCE, EXIT_IO, EXIT_OK, EXIT_PARAMETER, main
from spinest.output import format_value


def _run(*argv):
    return main([str(a) for a in argv])


def _read(path):
    return path.read_bytes()


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def test_fig1_small_run_and_headers(tmp_path):
    assert _run("fig1", "--particles", 8, "--trials", 50, "--seed", 42, "--out", tmp_path) == EXIT_OK
    header, rows = read_csv(tmp_path / "fig1.csv")
    assert header == ["particle_index", "mean_fidelity", "std_error", "standard_bound"]
    assert len(rows) == 8
    assert float(rows[-1][3]) == pytest.approx(9 / 10)
    assert (tmp_path / "fig1.svg").read_bytes().startswith(b"<svg")
    manifest = json.loads((tmp_path / "fig1_manifest.json").read_text())
    assert manifest["seed"] == 42
    assert {r["path"] for r in manifest["output_files"]} == {"fig1.csv", "fig1.svg"}


def test_fig1_single_trial_reports_na(tmp_path):
    assert _run("fig1", "--particles", 4, "--trials", 1, "--out", tmp_path) == EXIT_OK
    _, rows = read_csv(tmp_path / "fig1.csv")
    assert all(r[2] == "NA" for r in rows)


def test_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert _run("fig1", "--particles", 6, "--trials", 40, "--seed", 7, "--out", out) == EXIT_OK
    assert _read(a / "fig1.csv") == _read(b / "fig1.csv")
    assert _read(a / "fig1.svg") == _read(b / "fig1.svg")


@pytest.mark.parametrize("argv", [
    ("fig1", "--particles", 5, "--trials", 30, "--seed", 3),
    ("fig2", "--particles", 12),
    ("fig3", "--particles", "2,12,60", "--n-max", 6),
    ("table", "--strategy", "bound", "--particles", "0:5"),
    ("table", "--strategy", "adaptive", "--particles", "2,4", "--trials", 25),
    ("table", "--strategy", "xyz", "--particles", "3,6", "--trials", 60),
    ("table", "--strategy", "coherent", "--particles", "2:12:2"),
])
def test_replay_reproduces_csv_for_any_thread_count(tmp_path, argv):
    first = tmp_path / "first"
    assert _run(*argv, "--out", first, "--threads", 1) == EXIT_OK
    manifest = next(first.glob("*_manifest.json"))
    for threads in (1, 3):
        out = tmp_path / f"replay{threads}"
        assert _run("replay", manifest, "--out", out, "--threads", threads) == EXIT_OK
        for csv in first.glob("*.csv"):
            assert _read(out / csv.name) == _read(csv)


def test_manifest_digests_match_files(tmp_path):
    import hashlib
    assert _run("fig2", "--out", tmp_path) == EXIT_OK
    manifest = json.loads((tmp_path / "fig2_manifest.json").read_text())
    for rec in manifest["output_files"]:
        assert hashlib.sha256((tmp_path / rec["path"]).read_bytes()).hexdigest() == rec["sha256"]
    for key in ("command", "parameters", "seed", "tool_version", "started", "finished"):
        assert key in manifest


def _fig2(tmp_path, total):
    assert _run("fig2", "--particles", total, "--out", tmp_path) == EXIT_OK
    _, rows = read_csv(tmp_path / "fig2.csv")
    data = np.array(rows, dtype=float)
    return data[:, 0], data[:, 1]


def _interior_minima(theta, dens):
    peak = dens.max()
    idx = [i for i in range(1, len(dens) - 1)
           if dens[i] <= dens[i - 1] and dens[i] <= dens[i + 1] and dens[i] < 1e-3 * peak]
    return theta[idx]


def test_fig2_zeros_at_legendre_roots(tmp_path):
    theta, dens = _fig2(tmp_path, 20)
    roots = npleg.legroots([0] * 10 + [1])
    expected = np.sort(np.arccos(roots[(roots > 0) & (roots < 1)]))
    found = np.sort(_interior_minima(theta, dens))
    assert len(found) == 5
    spacing = theta[1] - theta[0]
    np.testing.assert_allclose(found, expected, atol=spacing)


def test_fig2_two_particles_has_no_interior_zero(tmp_path):
    theta, dens = _fig2(tmp_path, 2)
    assert len(_interior_minima(theta, dens)) == 0
    np.testing.assert_allclose(dens, dens[0] * np.cos(theta) ** 2, rtol=1e-8, atol=1e-12)


def test_fig2_mass_from_csv(tmp_path):
    theta, dens = _fig2(tmp_path, 20)
    f = 2 * math.pi * np.sin(theta) * dens
    h = theta[1] - theta[0]
    simpson = h / 3 * (f[0] + f[-1] + 4 * f[1:-1:2].sum() + 2 * f[2:-1:2].sum())
    assert simpson == pytest.approx(1.0, abs=1e-6)


def test_fig2_rejects_odd_count(tmp_path):
    assert _run("fig2", "--particles", 21, "--out", tmp_path) == EXIT_PARAMETER
    assert not (tmp_path / "fig2.csv").exists()


def test_fig3_marks_optimum_and_known_values(tmp_path):
    assert _run("fig3", "--particles", "2,200,400,2520", "--n-max", 9, "--out", tmp_path) == EXIT_OK
    header, rows = read_csv(tmp_path / "fig3.csv")
    assert header == ["N", "n", "score", "optimal"]
    best = {int(r[0]): int(r[1]) for r in rows if r[3] == "1"}
    assert best[2520] == 5
    assert best[2] == 1
    two = [r for r in rows if r[0] == "2"]
    assert float(two[0][2]) == pytest.approx(0.875, abs=1e-11)
    plateau = [float(r[2]) for r in rows if r[1] == "1" and int(r[0]) >= 200]
    assert all(abs(s - (0.5 + 1 / math.pi)) < 0.005 for s in plateau)


def test_table_bound_is_exact(tmp_path):
    assert _run("table", "--strategy", "bound", "--particles", "1:10", "--out", tmp_path) == EXIT_OK
    header, rows = read_csv(tmp_path / "table_bound.csv")
    assert header == ["N", "n", "score", "std_error", "trials", "seed"]
    for r in rows:
        n = int(r[0])
        assert r[2] == format_value((n + 1) / (n + 2))


def test_table_errors(tmp_path):
    assert _run("table", "--strategy", "magic", "--out", tmp_path) == EXIT_PARAMETER
    assert _run("table", "--strategy", "adaptive", "--trials", 0, "--out", tmp_path) == EXIT_PARAMETER
    assert _run("table", "--strategy", "xyz", "--particles", "4", "--out", tmp_path) == EXIT_PARAMETER
    assert _run("fig3", "--particles", "3", "--out", tmp_path) == EXIT_PARAMETER
    assert list(tmp_path.iterdir()) == []


def test_unwritable_output_is_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert _run("fig2", "--out", blocker / "sub") == EXIT_IO


def test_convergence_failure_exit_code(tmp_path, monkeypatch):
    import spinest.cli as cli
    from spinest.strategies import ConvergenceError

    def boom(*args, **kwargs):
        raise ConvergenceError("stuck")

    monkeypatch.setattr(cli, "simulate_adaptive", boom)
    assert _run("fig1", "--particles", 3, "--trials", 2, "--out", tmp_path) == EXIT_CONVERGENCE


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\nparticles = 1:3\nstrategy = bound\nseed = 5\n", encoding="utf-8")
    out = tmp_path / "o1"
    assert _run("table", "--config", cfg, "--out", out) == EXIT_OK
    _, rows = read_csv(out / "table_bound.csv")
    assert [r[0] for r in rows] == ["1", "2", "3"]
    out = tmp_path / "o2"
    assert _run("table", "--config", cfg, "--particles", "7", "--out", out) == EXIT_OK
    _, rows = read_csv(out / "table_bound.csv")
    assert [r[0] for r in rows] == ["7"]
    manifest = json.loads((out / "table_manifest.json").read_text())
    assert manifest["seed"] == 5


def test_config_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = red\n")
    assert _run("fig2", "--config", cfg, "--out", tmp_path / "o") == EXIT_PARAMETER


def test_format_value():
    assert format_value(3) == "3"
    assert format_value(None) == "NA"
    assert format_value(float("nan")) == "NA"
    assert format_value(1 / 3) == "0.333333333333"
