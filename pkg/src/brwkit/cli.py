"""Command-line front end: ``brwkit run|validate|list-experiments``.

A config file is a JSON object::

    {"experiment": "crossings-check", "seed": 1, "params": {"n_instances": 50},
     "output_dir": "out"}

Only ``experiment`` is required.  ``params`` overrides the experiment's
defaults (see ``list-experiments --verbose``).  Exit codes: 0 pass,
1 an acceptance assertion failed, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .experiments import REGISTRY, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def config_hash(cfg: dict) -> str:
    """Hash of what determines the results; the output directory is left out."""
    key = {k: cfg.get(k) for k in ("experiment", "seed", "params")}
    text = json.dumps(_jsonable(key), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def _same_kind(default, value) -> bool:
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, (int, float)):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, list):
        return isinstance(value, list)
    if isinstance(default, dict):
        return isinstance(value, dict)
    return isinstance(value, type(default))


def validate_config(cfg) -> dict:
    """Normalise a config and list every problem at once."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    problems = []
    name = cfg.get("experiment")
    if name is None:
        problems.append("missing field 'experiment'")
    elif name not in REGISTRY:
        problems.append(f"unknown experiment {name!r}; known: {', '.join(sorted(REGISTRY))}")
    extra = set(cfg) - {"experiment", "seed", "params", "output_dir"}
    if extra:
        problems.append(f"unknown top-level field(s): {', '.join(sorted(extra))}")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        problems.append("field 'seed' must be a non-negative integer")
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        problems.append("field 'params' must be an object")
        params = {}
    if name in REGISTRY:
        defaults = REGISTRY[name].defaults
        for k, v in params.items():
            if k not in defaults:
                problems.append(f"params.{k}: not a parameter of {name}")
            elif not _same_kind(defaults[k], v):
                problems.append(f"params.{k}: expected {type(defaults[k]).__name__}, got {type(v).__name__}")
    if problems:
        raise ConfigError("\n".join(problems))
    return {"experiment": name, "seed": seed, "params": params, "output_dir": cfg.get("output_dir", "out")}


def load_config(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"--set expects key=value, got {text!r}")
    k, v = text.split("=", 1)
    try:
        return k, json.loads(v)
    except json.JSONDecodeError:
        return k, v


def write_outputs(cfg: dict, result, out_dir: Path) -> tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    h = config_hash(cfg)
    name = cfg["experiment"]
    csv_path = out_dir / f"{name}.csv"
    json_path = out_dir / f"{name}.json"
    cols: list[str] = []
    for r in result.rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols + ["config_hash", "seed"])
        for r in result.rows:
            w.writerow([_jsonable(r.get(c, "")) for c in cols] + [h, cfg["seed"]])
    doc = {"config": cfg, "config_hash": h, "seed": cfg["seed"], "ok": bool(result.ok),
           "summary": result.summary}
    json_path.write_text(json.dumps(_jsonable(doc), indent=1, sort_keys=True) + "\n")
    return csv_path, json_path


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="brwkit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)
    run = sub.add_parser("run", help="run an experiment from a config file")
    run.add_argument("config", nargs="?", help="path to a JSON config")
    run.add_argument("-e", "--experiment", help="run this experiment with default parameters")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--out", help="override the output directory")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override a parameter (value parsed as JSON when possible)")
    val = sub.add_parser("validate", help="check a config file without running it")
    val.add_argument("config")
    lst = sub.add_parser("list-experiments", help="list available experiments")
    lst.add_argument("-v", "--verbose", action="store_true", help="also print default parameters")
    return ap


def _resolve(args) -> dict:
    if args.config and args.experiment:
        raise ConfigError("give either a config file or --experiment, not both")
    if args.config:
        raw = load_config(args.config)
    elif args.experiment:
        raw = {"experiment": args.experiment}
    else:
        raise ConfigError("run needs a config file or --experiment NAME")
    if isinstance(raw, dict):
        raw = dict(raw)
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.out is not None:
            raw["output_dir"] = args.out
        if args.set:
            params = dict(raw.get("params") or {})
            for s in args.set:
                k, v = _parse_override(s)
                params[k] = v
            raw["params"] = params
    return validate_config(raw)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.verb == "list-experiments":
        for name in sorted(REGISTRY):
            exp = REGISTRY[name]
            print(f"{name:26s} {exp.doc}")
            if args.verbose:
                print("    " + json.dumps(exp.defaults, sort_keys=True))
        return EXIT_OK
    try:
        if args.verb == "validate":
            cfg = validate_config(load_config(args.config))
            print(f"ok: {cfg['experiment']} (config hash {config_hash(cfg)})")
            return EXIT_OK
        cfg = _resolve(args)
    except ConfigError as exc:
        ap.print_usage(sys.stderr)
        print(f"brwkit: config error:\n{exc}", file=sys.stderr)
        return EXIT_USAGE
    result = run_experiment(cfg["experiment"], cfg["params"], cfg["seed"])
    csv_path, json_path = write_outputs(cfg, result, Path(cfg["output_dir"]))
    status = "PASS" if result.ok else "FAIL"
    print(f"{status} {cfg['experiment']} seed={cfg['seed']} hash={config_hash(cfg)}")
    print(json.dumps(_jsonable(result.summary), sort_keys=True))
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK if result.ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
