import json

import numpy as np
import pytest

from cflrh import io
from cflrh.cli import EXIT_CHECK, EXIT_INPUT, EXIT_OK, main
from cflrh.config import ConfigError, default_config, load_config
from cflrh.fields import extract_boundary, sample_exact
from cflrh.spectral import scattering_record


def _write(path, text):
    path.write_text(text)
    return path


@pytest.fixture
def pw_cfg(tmp_path):
    return _write(tmp_path / "pw.yaml", """\
schema_version: 1
scenario: plane_wave
grid: {L: 4.0, T_end: 1.0, nx: 65, nt: 33}
lambda_sets:
  small: ["0.5+0.3j", [0.9, 0.2]]
""")


# --- io --------------------------------------------------------------------

def test_fields_round_trip(tmp_path, pw_grid):
    p = tmp_path / "f.csv"
    io.write_fields_csv(pw_grid, p, "abc")
    g = io.read_fields_csv(p)
    for k in ("q", "r", "qx", "rx"):
        assert np.array_equal(getattr(g, k), getattr(pw_grid, k))
    assert np.array_equal(g.x, pw_grid.x) and np.array_equal(g.t, pw_grid.t)
    head = p.read_text().splitlines()[:3]
    assert any("schema_version" in l for l in head) and any("abc" in l for l in head)


def test_fields_schema_errors(tmp_path, pw_grid):
    p = tmp_path / "f.csv"
    io.write_fields_csv(pw_grid, p)
    text = p.read_text().replace("schema_version: 1", "schema_version: 7")
    _write(p, text)
    with pytest.raises(io.SchemaError):
        io.read_fields_csv(p)


def test_traces_and_scattering_round_trip(tmp_path, pw_grid):
    tr = extract_boundary(pw_grid)
    io.write_traces(tr, tmp_path / "t.json")
    back = io.read_traces(tmp_path / "t.json")
    assert np.array_equal(back.g1, tr.g1) and np.array_equal(back.q0, tr.q0)
    rec = scattering_record(pw_grid, 0.5 + 0.3j)
    d = json.loads(json.dumps(io.scattering_to_dict(rec)))
    rec2 = io.scattering_from_dict(d)
    assert np.array_equal(rec2.s, rec.s) and np.array_equal(rec2.Sn[2], rec.Sn[2])


def test_profile_validation(tmp_path):
    good = _write(tmp_path / "p.yaml", "schema_version: 1\nx: [0, 1, 2, 3]\nre_q0: [0, 0, 0, 0]\n"
                  "im_q0: [0, 0, 0, 0]\nre_r0: [0, 0, 0, 0]\nim_r0: [0, 0, 0, 0]\n")
    assert io.load_profile(good)["q0"].shape == (4,)
    bad = _write(tmp_path / "b.yaml", "schema_version: 1\nx: [0, 1, 2, 3]\nre_q0: [0, 0, 0]\n"
                 "im_q0: [0, 0, 0, 0]\nre_r0: [0, 0, 0, 0]\nim_r0: [0, 0, 0, 0]\n")
    with pytest.raises(io.SchemaError, match="length"):
        io.load_profile(bad)
    missing = _write(tmp_path / "m.yaml", "schema_version: 1\nx: [0, 1, 2, 3]\n")
    with pytest.raises(io.SchemaError, match="re_q0"):
        io.load_profile(missing)


# --- config ----------------------------------------------------------------

def test_config_line_addressed(tmp_path):
    p = _write(tmp_path / "bad.yaml", "schema_version: 1\nscenario: gaussian\ngrid:\n  L: 8.0\n  nxx: 10\n")
    with pytest.raises(ConfigError, match=r"bad\.yaml:5: unknown key grid\.nxx"):
        load_config(p)
    p = _write(tmp_path / "lam.yaml", "schema_version: 1\nscenario: zero\nlambda_sets:\n  s: [0, 1]\n")
    with pytest.raises(ConfigError, match=r"lam\.yaml:4:.*lambda = 0"):
        load_config(p)
    p = _write(tmp_path / "nx.yaml", "schema_version: 1\nscenario: zero\ngrid:\n  nx: 8\n")
    with pytest.raises(ConfigError, match=r"nx\.yaml:4:.*nx"):
        load_config(p)
    p = _write(tmp_path / "top.yaml", "schema_version: 1\nscenario: zero\ncolour: red\n")
    with pytest.raises(ConfigError, match=r"top\.yaml:3"):
        load_config(p)


def test_config_parses(pw_cfg):
    cfg = load_config(pw_cfg)
    assert cfg.grid["nx"] == 65 and cfg.lambda_sets["small"] == [0.5 + 0.3j, 0.9 + 0.2j]
    assert default_config("gaussian").grid["nx"] == 513


# --- cli ---------------------------------------------------------------------

def test_cli_zero_pipeline(tmp_path):
    out = tmp_path / "z"
    assert main(["simulate", "--out", str(out)]) == EXIT_OK
    g = io.read_fields_csv(out / "fields.csv")
    assert np.all(g.q == 0)
    assert json.loads((out / "simulate.json").read_text())["pde_residual"]["max"] == 0
    assert main(["spectral", "--out", str(out)]) == EXIT_OK
    recs = io.read_json(out / "scattering.json")["records"]
    for r in recs:
        assert np.array_equal(io.matrix_from_entries(r["s"]), np.eye(3))
    assert main(["reconstruct", "--out", str(out)]) == EXIT_OK
    assert io.read_json(out / "reconstruction.json")["max_rel_err"] == 0
    assert main(["report", "--out", str(out)]) == EXIT_OK
    assert (out / "spectral.csv").exists()


def test_cli_plane_wave_matches_sample(tmp_path, pw_cfg, capsys):
    out = tmp_path / "pw"
    assert main(["simulate", "--config", str(pw_cfg), "--out", str(out)]) == EXIT_OK
    cfg = load_config(pw_cfg)
    ref = sample_exact(cfg.plane_wave_params(), 4.0, 1.0, 65, 33)
    g = io.read_fields_csv(out / "fields.csv")
    assert np.array_equal(g.q, ref.q) and np.array_equal(g.qx, ref.qx)
    assert main(["spectral", "--config", str(pw_cfg), "--out", str(out), "--lambda-set", "small"]) == EXIT_OK
    assert main(["spectral", "--config", str(pw_cfg), "--out", str(out), "--lambda-set", "nope"]) == EXIT_INPUT


def test_cli_exit_codes(tmp_path):
    bad = _write(tmp_path / "bad.yaml", "schema_version: 1\nscenario: gaussian\ngrid:\n  L: 8.0\n  nxx: 10\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == EXIT_INPUT
    empty = tmp_path / "empty"
    assert main(["spectral", "--out", str(empty)]) == EXIT_INPUT
    assert main(["reconstruct", "--out", str(empty)]) == EXIT_INPUT
    assert main(["verify", "--suite", "nosuch", "--out", str(empty)]) == EXIT_INPUT
    # fields present, scattering missing
    assert main(["simulate", "--out", str(empty)]) == EXIT_OK
    assert main(["reconstruct", "--out", str(empty)]) == EXIT_INPUT


def test_cli_verify_algebra(tmp_path):
    out = tmp_path / "v"
    assert main(["verify", "--suite", "algebra", "--seed", "42", "--out", str(out)]) == EXIT_OK
    doc = io.read_json(out / "verify.json")
    assert doc["passed"] and all(c["passed"] for c in doc["checks"])


def test_cli_determinism(tmp_path, pw_cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["simulate", "--config", str(pw_cfg), "--out", str(out)]) == EXIT_OK
        assert main(["spectral", "--config", str(pw_cfg), "--out", str(out)]) == EXIT_OK
    for name in ("fields.csv", "traces.json", "scattering.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_cli_corrupted_fields_fail_jump(tmp_path):
    cfg = _write(tmp_path / "g.yaml", """\
schema_version: 1
scenario: gaussian
grid: {L: 8.0, T_end: 1.0, nx: 257, nt: 129}
contour: {per_segment: 2}
""")
    out = tmp_path / "g"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    assert main(["verify", "--config", str(cfg), "--suite", "jump", "--out", str(out),
                 "--fields", str(out / "fields.csv")]) == EXIT_OK
    g = io.read_fields_csv(out / "fields.csv")
    g.q[:, 40:] *= 1.5  # no longer a solution after t = 0.3
    io.write_fields_csv(g, out / "bad.csv")
    assert main(["verify", "--config", str(cfg), "--suite", "jump", "--out", str(out),
                 "--fields", str(out / "bad.csv")]) == EXIT_CHECK


def test_cli_file_scenario(tmp_path):
    x = np.linspace(0, 8, 257)
    q0 = 0.2 * np.exp(-((x - 4) / 0.7) ** 2)
    prof = {"schema_version": 1, "x": x.tolist(), "re_q0": q0.tolist(), "im_q0": [0.0] * 257,
            "re_r0": (0.5 * q0).tolist(), "im_r0": [0.0] * 257}
    (tmp_path / "prof.json").write_text(json.dumps(prof))
    cfg = _write(tmp_path / "f.yaml", "schema_version: 1\nscenario: file\nprofile: prof.json\n"
                 "grid: {L: 8.0, T_end: 1.0, nx: 257, nt: 129}\n")
    out = tmp_path / "f"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    assert np.allclose(io.read_fields_csv(out / "fields.csv").q[:, 0], q0, atol=1e-12)
    prof["re_q0"] = prof["re_q0"][:-1]
    (tmp_path / "prof.json").write_text(json.dumps(prof))
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_INPUT
