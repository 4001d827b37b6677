"""File formats: FieldGrid CSV, traces and scattering records as versioned JSON, profile ingestion."""
import hashlib
import json
from pathlib import Path

import numpy as np

from .fields import BoundaryTraces, FieldGrid

SCHEMA_VERSION = 1
FIELD_COLUMNS = ["x", "t", "re_q", "im_q", "re_r", "im_r", "re_qx", "im_qx", "re_rx", "im_rx"]


class SchemaError(ValueError):
    """Malformed input file; the message names the file and the offending location."""


def digest(obj):
    """Short sha256 digest of a JSON-serialisable object (key order ignored)."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _header(config_digest):
    return [f"schema_version: {SCHEMA_VERSION}", f"config_digest: {config_digest}"]


def write_fields_csv(grid, path, config_digest=""):
    X, T = np.meshgrid(grid.x, grid.t, indexing="ij")
    cols = [X, T]
    for a in (grid.q, grid.r, grid.qx, grid.rx):
        cols += [a.real, a.imag]
    data = np.column_stack([c.ravel() for c in cols])
    head = "\n".join(_header(config_digest) + [f"nx: {grid.nx}", f"nt: {grid.nt}"])
    with open(path, "w") as fh:
        fh.write("".join(f"# {h}\n" for h in head.splitlines()))
        fh.write(",".join(FIELD_COLUMNS) + "\n")
        np.savetxt(fh, data, delimiter=",", fmt="%.17g")


def _read_comments(lines, path):
    meta, n = {}, 0
    for n, line in enumerate(lines):
        if not line.startswith("#"):
            break
        key, _, val = line[1:].partition(":")
        meta[key.strip()] = val.strip()
    if meta.get("schema_version") != str(SCHEMA_VERSION):
        raise SchemaError(f"{path}:1: missing or unsupported schema_version")
    return meta, n


def read_fields_csv(path):
    path = Path(path)
    lines = path.read_text().splitlines()
    meta, n = _read_comments(lines, path)
    if n >= len(lines) or lines[n].strip() != ",".join(FIELD_COLUMNS):
        raise SchemaError(f"{path}:{n + 1}: expected header {','.join(FIELD_COLUMNS)}")
    try:
        nx, nt = int(meta["nx"]), int(meta["nt"])
        data = np.loadtxt(lines[n + 1:], delimiter=",", ndmin=2)
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"{path}: {exc}") from None
    if data.shape != (nx * nt, len(FIELD_COLUMNS)):
        raise SchemaError(f"{path}: expected {nx * nt} rows of {len(FIELD_COLUMNS)} values, "
                          f"got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        bad = int(np.argwhere(~np.isfinite(data))[0, 0])
        raise SchemaError(f"{path}:{n + 2 + bad}: non-finite value")
    d = data.reshape(nx, nt, -1)
    c = lambda k: d[:, :, k] + 1j * d[:, :, k + 1]
    return FieldGrid(d[:, 0, 0].copy(), d[0, :, 1].copy(), c(2), c(4), c(6), c(8),
                     meta={"source": "file", "path": str(path), "config_digest": meta.get("config_digest")})


def _cpx(a):
    a = np.asarray(a)
    return {"re": a.real.tolist(), "im": a.imag.tolist()}


def _uncpx(d, key, path):
    try:
        return np.asarray(d[key]["re"], dtype=float) + 1j * np.asarray(d[key]["im"], dtype=float)
    except (KeyError, TypeError, ValueError):
        raise SchemaError(f"{path}: field {key!r} must hold 're' and 'im' arrays") from None


def write_json(path, body, config_digest=""):
    doc = {"schema_version": SCHEMA_VERSION, "config_digest": config_digest, **body}
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_json(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{path}: no such file")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{path}: missing or unsupported schema_version")
    return doc


def write_traces(traces, path, config_digest=""):
    body = {"kind": "boundary_traces", "x": traces.x.tolist(), "t": traces.t.tolist()}
    for k in ("q0", "r0", "g0", "h0", "g1", "h1"):
        body[k] = _cpx(getattr(traces, k))
    write_json(path, body, config_digest)


def read_traces(path):
    doc = read_json(path)
    vals = {k: _uncpx(doc, k, path) for k in ("q0", "r0", "g0", "h0", "g1", "h1")}
    return BoundaryTraces(np.asarray(doc["x"]), np.asarray(doc["t"]), **vals)


def load_profile(path):
    """Initial profile file: x, re_q0, im_q0, re_r0, im_r0 and an optional boundary block.

    JSON or YAML; the boundary block holds t, re_g0, im_g0, re_h0, im_h0.
    """
    import yaml
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise SchemaError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top level must be a mapping")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{path}: missing or unsupported schema_version")

    def arrays(block, keys, where):
        out = {}
        for k in keys:
            if k not in block:
                raise SchemaError(f"{path}: {where}missing key {k!r}")
            try:
                out[k] = np.asarray(block[k], dtype=float)
            except (TypeError, ValueError):
                raise SchemaError(f"{path}: {where}{k!r} is not a numeric array") from None
            if out[k].ndim != 1 or not np.all(np.isfinite(out[k])):
                raise SchemaError(f"{path}: {where}{k!r} must be a finite 1-d array")
        n = {len(v) for v in out.values()}
        if len(n) != 1:
            raise SchemaError(f"{path}: {where}arrays differ in length")
        return out

    a = arrays(doc, ["x", "re_q0", "im_q0", "re_r0", "im_r0"], "")
    if len(a["x"]) < 4 or np.any(np.diff(a["x"]) <= 0):
        raise SchemaError(f"{path}: x must be strictly increasing with at least 4 points")
    prof = {"x": a["x"], "q0": a["re_q0"] + 1j * a["im_q0"], "r0": a["re_r0"] + 1j * a["im_r0"]}
    if "boundary" in doc:
        b = arrays(doc["boundary"], ["t", "re_g0", "im_g0", "re_h0", "im_h0"], "boundary: ")
        prof.update(t=b["t"], g0=b["re_g0"] + 1j * b["im_g0"], h0=b["re_h0"] + 1j * b["im_h0"])
    return prof


def matrix_entries(m):
    """The 9 complex entries of a 3x3 matrix as [re, im] pairs, row-major."""
    if m is None:
        return None
    return [[float(z.real), float(z.imag)] for z in np.asarray(m).ravel()]


def matrix_from_entries(e):
    if e is None:
        return None
    return np.array([complex(a, b) for a, b in e]).reshape(3, 3)


def scattering_to_dict(rec):
    return {
        "lambda": [rec.lam.real, rec.lam.imag],
        "region": rec.region,
        "s": matrix_entries(rec.s),
        "S": matrix_entries(rec.S),
        "Sn": {str(n): matrix_entries(m) for n, m in rec.Sn.items()},
        "cT": matrix_entries(rec.cT),
        "admissible": {k: list(v) for k, v in rec.admissible.items()},
    }


def scattering_from_dict(d):
    from .spectral import ScatteringRecord
    return ScatteringRecord(complex(*d["lambda"]), d["region"], matrix_from_entries(d["s"]),
                            matrix_from_entries(d["S"]),
                            {int(n): matrix_from_entries(m) for n, m in d["Sn"].items()},
                            matrix_from_entries(d["cT"]),
                            {k: tuple(v) for k, v in d.get("admissible", {}).items()})
