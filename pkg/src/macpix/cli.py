"""Command line entry point.

    macpix run CONFIG.json [--out DIR] [--seed N] [--svg]
    macpix recipe NAME            # print a canned config
    macpix recipes                # list recipe names

Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .array import ArrayReadoutError
from .config import ALIASES, RECIPES, recipe, validate_config
from .experiments import run_experiment
from .pixel import ConvergenceError

log = logging.getLogger("macpix")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _load(path):
    if path.startswith("recipe:"):
        return recipe(path.split(":", 1)[1])
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def cmd_run(args) -> int:
    try:
        doc = _load(args.config)
    except KeyError as exc:
        log.error("%s", exc.args[0])
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        log.error("%s: invalid JSON: %s", args.config, exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("cannot read %s: %s", args.config, exc)
        return EXIT_IO
    if isinstance(doc, dict):
        if args.out is not None:
            doc["output_dir"] = args.out
        if args.seed is not None:
            doc["seed"] = args.seed
        if args.svg:
            doc["svg"] = True
    cfg, errors, warns = validate_config(doc)
    for w in warns:
        log.warning("%s", w)
    if errors:
        for e in errors:
            log.error("%s", e)
        return EXIT_CONFIG
    try:
        files = run_experiment(cfg)
    except (ConvergenceError, ArrayReadoutError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except RuntimeError as exc:
        # trial-context wrapper from the Monte Carlo engine
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (TypeError, ValueError) as exc:
        log.error("invalid parameters: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_IO
    for f in files:
        print(f)
    return EXIT_OK


def cmd_recipe(args) -> int:
    try:
        print(json.dumps(recipe(args.name), indent=2))
    except KeyError as exc:
        log.error("%s", exc.args[0])
        return EXIT_CONFIG
    return EXIT_OK


def cmd_recipes(args) -> int:
    for name in sorted(RECIPES):
        alias = sorted(a for a, t in ALIASES.items() if t == name)
        print(name + (f"  (aliases: {', '.join(alias)})" if alias else ""))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="macpix", description="FeFET in-sensor MAC pixel simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config (path or recipe:NAME)")
    r.add_argument("config")
    r.add_argument("--out", default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--svg", action="store_true")
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("recipe", help="print a canned config")
    c.add_argument("name")
    c.set_defaults(func=cmd_recipe)
    ls = sub.add_parser("recipes", help="list recipe names")
    ls.set_defaults(func=cmd_recipes)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
