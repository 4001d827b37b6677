"""Command-line entry point: simulate, spectral, verify, reconstruct, report."""
import argparse
import csv
import json
import logging
import os
from pathlib import Path
import sys

import numpy as np

from . import io
from .config import ConfigError, RunConfig, default_config, load_config, validate
from .fields import IncompatibleDataError, SolverError, extract_boundary, pde_residual, residual_summary

log = logging.getLogger("cflrh")

EXIT_OK, EXIT_CHECK, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _config(args):
    cfg = load_config(args.config) if args.config else default_config("zero")
    if args.seed is not None:
        cfg.seed = args.seed
    validate(cfg)
    return cfg


def _out_dir(args, cfg):
    out = args.out or cfg.output_dir or os.environ.get("CFLRH_OUT") or "cflrh-out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _digest(cfg):
    return io.digest(cfg.as_dict())


def _fields_path(args, out):
    return Path(args.fields) if getattr(args, "fields", None) else out / "fields.csv"


def _load_fields(path):
    if not path.exists():
        raise InputError(f"{path}: fields file not found (run 'simulate' first or pass --fields)")
    return io.read_fields_csv(path)


def cmd_simulate(cfg, args, out):
    from .suites import build_grid
    grid = build_grid(cfg)
    dig = _digest(cfg)
    io.write_fields_csv(grid, out / "fields.csv", dig)
    traces = extract_boundary(grid)
    io.write_traces(traces, out / "traces.json", dig)
    summary = {"scenario": cfg.scenario, "nx": grid.nx, "nt": grid.nt,
               "decay_ok": bool(grid.decay_ok())}
    if grid.nx >= 5 and grid.nt >= 5:
        summary["pde_residual"] = residual_summary(pde_residual(grid))
    io.write_json(out / "simulate.json", {"kind": "simulate", **summary}, dig)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_spectral(cfg, args, out):
    from .spectral import scattering_record
    grid = _load_fields(_fields_path(args, out))
    name = args.lambda_set or "default"
    if name not in cfg.lambda_sets:
        raise InputError(f"unknown lambda set {name!r}; defined: {', '.join(sorted(cfg.lambda_sets))}")
    gate = bool(grid.decay_ok())
    if not gate:
        log.warning("decay gate not met at x = L; mu_3 uses the (L, 0) basepoint, which is exact on the grid")
    recs = [io.scattering_to_dict(scattering_record(grid, lam)) for lam in cfg.lambda_sets[name]]
    for r in recs:
        s = io.matrix_from_entries(r["s"])
        r["det_s_minus_1"] = float(abs(np.linalg.det(s) - 1))
    io.write_json(out / "scattering.json", {"kind": "scattering", "lambda_set": name, "decay_gate": gate,
                                            "records": recs}, _digest(cfg))
    print(f"wrote {len(recs)} scattering records to {out / 'scattering.json'}")
    return EXIT_OK


def cmd_verify(cfg, args, out):
    from .suites import Context, run_suite
    grid = None
    fields = getattr(args, "fields", None)
    if fields:
        grid = _load_fields(Path(fields))
    suite = args.suite or "all"
    ctx = Context(cfg, grid=grid, lambda_set=args.lambda_set or "default")
    try:
        checks = run_suite(suite, cfg, ctx)
    except KeyError as exc:
        raise InputError(str(exc.args[0])) from None
    ok = all(c.passed for c in checks)
    for c in checks:
        print(c.line())
    io.write_json(out / "verify.json", {"kind": "verify", "suite": suite, "scenario": cfg.scenario,
                                        "passed": ok, "checks": [c.as_dict() for c in checks]}, _digest(cfg))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_reconstruct(cfg, args, out):
    from .reconstruct import closure_report
    from .suites import reconstruction_points
    grid = _load_fields(_fields_path(args, out))
    scat = Path(args.scattering) if args.scattering else out / "scattering.json"
    if not scat.exists():
        raise InputError(f"{scat}: scattering file not found (run 'spectral' first or pass --scattering)")
    doc = io.read_json(scat)
    r = cfg.reconstruct
    rep = closure_report(grid, reconstruction_points(cfg, grid), r["direction"], r["magnitudes"],
                         r["order"], r["sign"])
    dig = _digest(cfg)
    rep.to_csv(out / "reconstruction.csv", [f"schema_version: {io.SCHEMA_VERSION}", f"config_digest: {dig}"])
    summary = rep.summary()
    summary["scattering_digest"] = doc.get("config_digest")
    summary["diagnostics"] = [{k: (v if k != "extrapolants_qx" else [[z.real, z.imag] for z in v])
                               for k, v in d.items()} for d in rep.diagnostics]
    io.write_json(out / "reconstruction.json", {"kind": "reconstruction", **summary}, dig)
    print(json.dumps({"max_rel_err": rep.max_rel_err, "sign": rep.sign}, sort_keys=True))
    return EXIT_OK


def cmd_report(cfg, args, out):
    index = {}
    for name in ("simulate.json", "scattering.json", "verify.json", "reconstruction.json", "traces.json"):
        p = out / name
        if p.exists():
            doc = io.read_json(p)
            index[name] = {"config_digest": doc.get("config_digest"), "kind": doc.get("kind")}
    if not index:
        raise InputError(f"{out}: no outputs to report on")
    dig = _digest(cfg)
    header = [f"# schema_version: {io.SCHEMA_VERSION}\n", f"# config_digest: {dig}\n"]
    if "verify.json" in index:
        doc = io.read_json(out / "verify.json")
        index["verify.json"]["passed"] = doc["passed"]
        with open(out / "checks.csv", "w", newline="") as fh:
            fh.writelines(header)
            w = csv.writer(fh)
            w.writerow(["criterion", "name", "passed", "measured", "comparison", "tolerance"])
            for c in doc["checks"]:
                w.writerow([c["criterion"], c["name"], c["passed"], c["measured"], c["comparison"], c["tolerance"]])
    if "scattering.json" in index:
        doc = io.read_json(out / "scattering.json")
        with open(out / "spectral.csv", "w", newline="") as fh:
            fh.writelines(header)
            w = csv.writer(fh)
            w.writerow(["re_lambda", "im_lambda", "region", "re_s11", "im_s11", "re_S11", "im_S11", "det_s_minus_1"])
            for r in doc["records"]:
                s11, S11 = r["s"][0], r["S"][0]
                w.writerow([*r["lambda"], r["region"], *s11, *S11, r["det_s_minus_1"]])
    io.write_json(out / "report.json", {"kind": "report", "files": index}, dig)
    print(json.dumps(index, sort_keys=True))
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "spectral": cmd_spectral, "verify": cmd_verify,
            "reconstruct": cmd_reconstruct, "report": cmd_report}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--out", help="output directory (default: config output_dir, $CFLRH_OUT, ./cflrh-out)")
    common.add_argument("--seed", type=int, help="seed for randomized suites")
    common.add_argument("--lambda-set", dest="lambda_set", help="named lambda set from the config")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="cflrh", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="produce the field grid and boundary traces")
    sp = sub.add_parser("spectral", parents=[common], help="scattering records over a lambda set")
    sp.add_argument("--fields", help="fields CSV (default: <out>/fields.csv)")
    vp = sub.add_parser("verify", parents=[common], help="run a verification suite")
    vp.add_argument("--suite", default="all")
    vp.add_argument("--fields", help="use this fields CSV instead of building the scenario")
    rp = sub.add_parser("reconstruct", parents=[common], help="recover q_x, r_x from large-lambda rays")
    rp.add_argument("--fields", help="fields CSV (default: <out>/fields.csv)")
    rp.add_argument("--scattering", help="scattering JSON (default: <out>/scattering.json)")
    sub.add_parser("report", parents=[common], help="summarise outputs as plot-ready CSV")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        out = _out_dir(args, cfg)
        return COMMANDS[args.command](cfg, args, out)
    except (ConfigError, io.SchemaError, InputError, FileNotFoundError, IncompatibleDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
