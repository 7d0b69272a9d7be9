import json
from pathlib import Path

import numpy as np
import pytest

from lcsdual.cli import main, run_command, seeds_from_config
from lcsdual.config import ConfigError, apply_overrides, parse_config
from lcsdual.runio import read_csv

MINIMAL_DUAL = """
# minimal steady-ABC dual Poincare run
field.name = steady_abc
horizon.t0 = 0
horizon.t1 = 10
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL_DUAL)
    assert cfg.get("tol") == 1e-8
    assert cfg.get("section.eps") == 2e-3
    assert cfg.get("window.lo") == 4e4 and cfg.get("window.hi") == 5e4
    assert cfg.get("line.s_max") == 5e4
    assert cfg.get("line.h_max") == 0.1
    assert cfg.get("line.tol") == 1e-8
    assert cfg.get("line.orientation") == (0.0, 0.0, 1.0)


def test_backward_horizon_accepted():
    cfg = parse_config("field.name = aperiodic_abc\nhorizon.t0 = 5\nhorizon.t1 = 0\n")
    assert cfg.get("horizon.t0") == 5.0 and cfg.get("horizon.t1") == 0.0


def test_zero_band_epsilon_rejected():
    with pytest.raises(ConfigError, match="section.eps"):
        parse_config(MINIMAL_DUAL + "section.eps = 0\n")


def test_unknown_key_diagnostics():
    with pytest.raises(ConfigError, match="line 2: unknown key 'field.nam'"):
        parse_config("field.name = steady_abc\nfield.nam = oops\n")


def test_bad_value_diagnostics():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("tol = banana\n")
    with pytest.raises(ConfigError, match="out of range"):
        parse_config("field.name = cats_eye\nfield.c = 0.5\n"
                     "horizon.t0 = 0\nhorizon.t1 = 1\n")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("tol = 1e-8\ntol = 1e-9\n")


def test_window_ordering_checked():
    with pytest.raises(ConfigError, match="window.lo"):
        parse_config(MINIMAL_DUAL + "window.lo = 10\nwindow.hi = 5\n")


def test_config_hash_stable_and_sensitive():
    a = parse_config(MINIMAL_DUAL)
    b = parse_config(MINIMAL_DUAL + "\n# comment only\n")
    c = parse_config(MINIMAL_DUAL + "tol = 1e-9\n")
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()


def test_overrides():
    cfg = parse_config(MINIMAL_DUAL)
    out = apply_overrides(cfg, ["tol=1e-6", "line.s_max=100"])
    assert out.get("tol") == 1e-6 and out.get("line.s_max") == 100.0
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["nonsense"])
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["bogus.key=1"])


def test_seed_grids():
    cfg = parse_config(MINIMAL_DUAL + "seeds.nx = 4\nseeds.ny = 3\n")
    seeds = seeds_from_config(cfg)
    assert seeds.shape == (12, 3)
    assert np.all(seeds[:, 2] == 0.0)
    # cell centers: first point at half a cell
    assert abs(seeds[0, 0] - 2.0 * np.pi / 8.0) < 1e-12

    cfg = parse_config(MINIMAL_DUAL + "seeds.mode = grid3\nseeds.nx = 2\n"
                       "seeds.ny = 2\nseeds.nz = 2\n")
    assert seeds_from_config(cfg).shape == (8, 3)

    cfg = parse_config(MINIMAL_DUAL + "seeds.mode = list\n"
                       "seeds.list = 5.03,3.14,0.0; 1,2,3\n")
    seeds = seeds_from_config(cfg)
    assert seeds.shape == (2, 3)
    assert np.allclose(seeds[0], [5.03, 3.14, 0.0])


def tiny_ftle_config():
    return ("field.name = steady_abc\nhorizon.t0 = 0\nhorizon.t1 = 1\n"
            "seeds.nx = 3\nseeds.ny = 3\n")


def test_cli_ftle_roundtrip(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(tiny_ftle_config())
    out = tmp_path / "out"
    assert main(["ftle", "--config", str(cfgfile), "--out", str(out)]) == 0
    header, rows = read_csv(out / "ftle.csv")
    assert header == ["seed_id", "x", "y", "z", "sigma1", "sigma2", "sigma3", "ftle"]
    assert len(rows) == 9
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "ftle"
    assert manifest["artifacts"] == ["ftle.csv"]
    assert len(manifest["config_hash"]) == 64
    # 17-significant-digit floats round-trip
    val = float(rows[0][7])
    assert f"{val:.17g}" == rows[0][7]


def test_cli_rerun_bit_identical(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(tiny_ftle_config())
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["ftle", "--config", str(cfgfile), "--out", str(out1)])
    main(["ftle", "--config", str(cfgfile), "--out", str(out2)])
    assert (out1 / "ftle.csv").read_bytes() == (out2 / "ftle.csv").read_bytes()
    assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()


def test_cli_workers_do_not_change_bytes(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(tiny_ftle_config())
    out1, out2 = tmp_path / "w1", tmp_path / "w2"
    main(["ftle", "--config", str(cfgfile), "--out", str(out1), "--workers", "1"])
    main(["ftle", "--config", str(cfgfile), "--out", str(out2), "--workers", "2"])
    assert (out1 / "ftle.csv").read_bytes() == (out2 / "ftle.csv").read_bytes()


def test_cli_fd_compare(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(tiny_ftle_config() + "fd.delta = 1e-5\n")
    out = tmp_path / "out"
    assert main(["fd-compare", "--config", str(cfgfile), "--out", str(out)]) == 0
    header, rows = read_csv(out / "fd_compare.csv")
    assert header == ["seed_id", "x", "y", "z", "angle_deg", "ftle"]
    angles = [float(r[4]) for r in rows]
    assert all(0.0 <= a <= 90.0 for a in angles)


def test_cli_line_sweep_term_reason_on_last_row(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "field.name = steady_abc\nhorizon.t0 = 0\nhorizon.t1 = 5\n"
        "seeds.mode = list\nseeds.list = 1,2,0.5\nline.s_max = 2\n")
    out = tmp_path / "out"
    assert main(["line-sweep", "--config", str(cfgfile), "--out", str(out)]) == 0
    header, rows = read_csv(out / "lines.csv")
    assert header == ["seed_id", "s", "x", "y", "z", "term_reason"]
    assert all(r[5] == "" for r in rows[:-1])
    assert rows[-1][5] == "reached_smax"


def test_cli_dual_poincare_tiny(tmp_path):
    # constant singular frame: the line runs straight up in z and pierces the
    # band around z = 0 once per detour through the window
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "field.name = affine\nfield.M = -0.5,0,0,0,0.4,0,0,0,0.1\n"
        "horizon.t0 = 0\nhorizon.t1 = 2\n"
        "seeds.mode = list\nseeds.list = 0,0,-0.5\n"
        "line.s_max = 2\nline.h_max = 0.05\nwindow.lo = 0\nwindow.hi = 2\n"
        "section.eps = 0.03\n")
    out = tmp_path / "out"
    assert main(["dual-poincare", "--config", str(cfgfile), "--out", str(out)]) == 0
    header, rows = read_csv(out / "section.csv")
    assert header == ["seed_id", "stamp", "x", "y"]
    assert len(rows) >= 1
    sidecar = json.loads((out / "section.json").read_text())
    assert sidecar["kind"] == "dual"
    assert sidecar["config_hash"] == json.loads(
        (out / "manifest.json").read_text())["config_hash"]


def test_cli_sphere(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "field.name = steady_abc\nhorizon.t0 = 0\nhorizon.t1 = 1\n"
        "sphere.center = 1,2,0.5\nsphere.radius = 1e-3\nsphere.n_points = 64\n")
    out = tmp_path / "out"
    assert main(["sphere", "--config", str(cfgfile), "--out", str(out)]) == 0
    payload = json.loads((out / "sphere.json").read_text())
    assert len(payload["lengths"]) == 3
    assert payload["lengths"][0] <= payload["lengths"][2]


def test_cli_classical_poincare_tiny(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "field.name = steady_abc\nhorizon.t0 = 0\nhorizon.t1 = 10\n"
        "seeds.mode = list\nseeds.list = 1,1,0\n"
        "time.total = 200\nwindow.lo = 0\nwindow.hi = 200\nsection.eps = 2e-2\n")
    out = tmp_path / "out"
    assert main(["classical-poincare", "--config", str(cfgfile), "--out", str(out)]) == 0
    header, rows = read_csv(out / "section.csv")
    assert len(rows) > 0


def test_cli_config_error_exit_code(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("field.name = steady_abc\n")  # missing horizon
    out = tmp_path / "out"
    assert main(["ftle", "--config", str(cfgfile), "--out", str(out)]) == 1
    assert main(["ftle", "--config", str(tmp_path / "nope.cfg"),
                 "--out", str(out)]) == 2


def test_cli_classify_requires_threshold(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "field.name = aperiodic_abc\nhorizon.t0 = 0\nhorizon.t1 = 5\n"
        "seeds.mode = list\nseeds.list = 5.03,3.14,0\n")
    out = tmp_path / "out"
    assert main(["classify", "--config", str(cfgfile), "--out", str(out)]) == 1
