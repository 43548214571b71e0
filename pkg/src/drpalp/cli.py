"""Command-line front end: ``python -m drpalp <command> --config <file>``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import ConfigError, DomainError, NumericalError
from .experiments import report, run_scenario
from .scenario import load_scenario, parse_theta

log = logging.getLogger("drpalp")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p, need_config=True):
    p.add_argument("--config", required=need_config, help="scenario TOML file")
    p.add_argument("--seed", type=int, default=None, help="base seed; repetition i uses seed + i")
    p.add_argument("--out", default=None, help="output directory (default: results/<scenario name>)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes across cases")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    ap = _Parser(prog="drpalp", description="Simulated viscoelastic palpation experiments.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _common(sub.add_parser("simulate", help="write simulated sensor streams"))
    p = sub.add_parser("fit", help="offline least-squares fits")
    _common(p)
    p.add_argument("--model", action="append", default=None,
                   help="model to fit (dr_elastic, dr, kv, hc); repeatable")
    for name, helptext in (("estimate", "online point estimation"), ("scan", "dynamic scan and lump peaks")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--variant", default=None, help="ekf, afekf, afukf or ukf (default: from config)")
        p.add_argument("--theta", default=None, help="override the fading threshold (mm/s); 'inf' disables fading")
    p = sub.add_parser("report", help="collect the summary tables under a results directory")
    p.add_argument("results", help="directory holding manifest.json files")
    p.add_argument("--out", default=None, help="report CSV path (default: <results>/report.csv)")
    p.add_argument("-v", "--verbose", action="store_true")
    return ap


def _dispatch(args):
    if args.command == "report":
        text, n = report(args.results)
        dest = args.out or os.path.join(args.results, "report.csv")
        os.makedirs(os.path.dirname(os.path.abspath(dest)), exist_ok=True)
        with open(dest, "w", newline="\n") as fh:
            fh.write(text)
        print(f"collected {n} manifest(s) into {dest}")
        return
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    scenario = load_scenario(args.config, seed=args.seed)
    out = args.out or os.path.join("results", scenario.name)
    kw = {}
    if args.command == "fit":
        kw["models"] = args.model
    elif args.command in ("estimate", "scan"):
        kw["variant"] = args.variant
        kw["theta"] = None if args.theta is None else parse_theta(args.theta)
    manifest = run_scenario(args.command, scenario, out, jobs=args.jobs, **kw)
    summary = os.path.join(out, "summary.txt")
    if os.path.exists(summary):
        with open(summary) as fh:
            sys.stdout.write(fh.read())
    comparison = os.path.join(out, "comparison.txt")
    if "comparison" in manifest["tables"] and os.path.exists(comparison):
        with open(comparison) as fh:
            sys.stdout.write(fh.read())
    print(f"wrote {len(manifest['files'])} file(s) under {out}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        _dispatch(args)
    except (ConfigError, DomainError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
