"""Command line entry point ``fi-fuse``.

Subcommands::

    fi-fuse run   --data iris.csv --target species --models rf,svm,nn --folds 5 --seed 42 --out out/
    fi-fuse fuse  --tensor importance_raw.csv --methods mean,median --out fused/
    fi-fuse synth --rows 500 --features 6 --informative 3 --classes 3 --seed 7 --out synth.csv
    fi-fuse verify out/

``run`` also reads ``--config FILE``, a flat ``key = value`` file using the
flag names as keys; flags given on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys

from . import data as data_mod
from .errors import ConfigError, FiFuseError
from .explain import TECHNIQUES
from .fuse_crisp import METHODS
from .pipeline import RunConfig, fuse_only, run_pipeline, verify_manifest


def _list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _optional_float(value: str):
    return None if value.strip().lower() in ("", "none") else float(value)


def _techniques(value: str) -> list[str]:
    return [t.upper() for t in _list(value)]


def _methods(value: str) -> list[str]:
    return list(METHODS) if value.strip().lower() == "all" else _list(value)


def _optional_str(value: str):
    return None if value.strip().lower() in ("", "none") else value.strip()


PARSERS = {
    "out": str,
    "data": _optional_str,
    "target": _optional_str,
    "synth_rows": int,
    "synth_features": int,
    "synth_informative": int,
    "synth_classes": int,
    "models": _list,
    "techniques": _techniques,
    "fusion": _methods,
    "folds": int,
    "repetition": str,
    "repetitions": int,
    "split": float,
    "num_features": float,
    "alpha": float,
    "seed": int,
    "tune": _bool,
    "fuzzy": str,
    "drop_correlated": _optional_float,
    "drop_outliers": _optional_float,
    "pi_repeats": int,
    "lime_samples": int,
    "kernel_width": _optional_float,
    "ridge_lambda": float,
    "max_background": int,
    "max_explain": int,
    "plots": _bool,
}


def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            sep = "=" if "=" in line else ":" if ":" in line else None
            if sep is None:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split(sep, 1))
            key = key.replace("-", "_")
            if key not in PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def build_config(raw: dict[str, str]) -> RunConfig:
    kwargs = {}
    for key, value in raw.items():
        try:
            kwargs[key] = PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
    return RunConfig(**kwargs)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fi-fuse", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full pipeline")
    run.add_argument("--config", help="flat key = value configuration file")
    for f in dataclasses.fields(RunConfig):
        run.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None,
                         metavar=f.name.upper())

    fz = sub.add_parser("fuse", help="fuse an existing importance tensor CSV")
    fz.add_argument("--tensor", required=True)
    fz.add_argument("--methods", default="all")
    fz.add_argument("--models", default="all", help="comma separated model names or 'all'")
    fz.add_argument("--techniques", default="all")
    fz.add_argument("--alpha", type=float, default=0.05)
    fz.add_argument("--num-features", type=float, default=1.0)
    fz.add_argument("--fuzzy", default="auto", choices=["auto", "true", "false"])
    fz.add_argument("--plots", default="true")
    fz.add_argument("--out", required=True)

    sy = sub.add_parser("synth", help="write a synthetic classification CSV")
    sy.add_argument("--rows", type=int, default=500)
    sy.add_argument("--features", type=int, default=6)
    sy.add_argument("--informative", type=int, default=3)
    sy.add_argument("--classes", type=int, default=3)
    sy.add_argument("--seed", type=int, required=True)
    sy.add_argument("--out", required=True)

    ve = sub.add_parser("verify", help="re-check a run directory against its manifest")
    ve.add_argument("directory")
    return parser


def _cmd_run(args) -> int:
    raw = read_config(args.config) if args.config else {}
    for key in PARSERS:
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    cfg = build_config(raw)
    manifest = run_pipeline(cfg)
    for name, m in manifest["models"].items():
        print(f"{name}: mean CV accuracy {m['mean_accuracy']:.3f}, F1 {m['mean_f1']:.3f}")
    for feature, label in manifest.get("labels", {}).items():
        print(f"{feature}: {label}")
    print(f"wrote {len(manifest['files']) + 1} files to {cfg.out}")
    return 0


def _cmd_fuse(args) -> int:
    def pick(value):
        return "all" if value.strip().lower() == "all" else _list(value)

    techniques = pick(args.techniques)
    if techniques != "all":
        techniques = [t.upper() for t in techniques]
    unknown = [t for t in (techniques if techniques != "all" else []) if t not in TECHNIQUES]
    if unknown:
        raise ConfigError(f"unknown techniques {unknown}")
    fused, report = fuse_only(args.tensor, args.out, _methods(args.methods), pick(args.models),
                              techniques, args.alpha, args.num_features, args.fuzzy,
                              _bool(args.plots))
    print(f"fused {len(fused)} methods into {args.out}")
    if report is not None:
        for feature, fi in report.features.items():
            print(f"{feature}: {fi.label} ({fi.degree:.2f})")
    return 0


def _cmd_synth(args) -> int:
    ds, informative = data_mod.synthetic_data(args.rows, args.features, args.informative,
                                              args.classes, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*ds.feature_names, "target"])
        for x, y in zip(ds.X, ds.y):
            w.writerow([*(repr(float(v)) for v in x), ds.class_names[y]])
    print("informative features: " + ",".join(ds.feature_names[i] for i in informative))
    return 0


def _cmd_verify(args) -> int:
    problems = verify_manifest(args.directory)
    for p in problems:
        print(p, file=sys.stderr)
    if problems:
        return 3
    print("manifest ok")
    return 0


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    commands = {"run": _cmd_run, "fuse": _cmd_fuse, "synth": _cmd_synth,
                "verify": _cmd_verify}
    try:
        return commands[args.command](args)
    except FiFuseError as exc:
        print(f"fi-fuse: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        code = 3 if isinstance(exc, OSError) else 2
        print(f"fi-fuse: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
