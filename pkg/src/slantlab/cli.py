"""Command-line front end.

::

    slantlab verify example81 --k 1 --flat
    slantlab verify example82 --conformal linear-x1
    slantlab verify example82 --lee-sign +1 --lee-scale 1      # fails the structure check
    slantlab inequality example81 --conformal linear-x1 --grid 10x10 --format csv
    slantlab calibrate example82 --conformal product-x1y1

A scenario reference is a built-in name (``example81``, ``example82``,
``cr_product``), ``random:<seed>``, or a path to a TOML scenario file.
Exit status is 0 when every check passes, 1 when a check fails and 2 for
usage or configuration errors.
"""

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace

from . import __version__
from .ambient import ConstantFactor, factor_from_dict
from .errors import SlantLabError
from .runner import calibration_record, margin_csv, margin_json, margin_table, verify
from .scenarios import build_scenario, resolve
from .tolerances import PROFILES

log = logging.getLogger("slantlab")


def _number(text):
    try:
        return float(text)
    except ValueError:
        return text


def parse_conformal(tokens):
    """``FAMILY[-COORDS] [key=value ...]`` to a factor description dict.

    ``linear-x1`` selects the linear family along ``x1``; ``product-x1y1``
    the product of ``x1`` and ``y1``; ``gaussian-x1y1`` a bump in that plane.
    """
    head, *rest = tokens
    family, _, coords = head.partition("-")
    desc = {"family": family}
    names = [coords[i : i + 2] for i in range(0, len(coords), 2)] if coords else []
    if family == "linear" and names:
        desc["coordinate"] = names[0]
    elif family == "product" and names:
        desc["first"], desc["second"] = names[0], names[1]
    elif family == "gaussian" and names:
        desc["coords"] = names
    for tok in rest:
        key, sep, value = tok.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"conformal parameter {tok!r} is not key=value")
        desc[key] = [float(v) for v in value.split(",")] if key == "center" else _number(value)
    return desc


def parse_grid(text):
    try:
        n, m = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 10x10, got {text!r}") from None
    if n < 1 or m < 1:
        raise argparse.ArgumentTypeError("grid counts must be positive")
    return n, m


def parse_tol(text):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"tolerance override {text!r} is not name=value")
    return name, float(value)


def build_parser():
    parser = argparse.ArgumentParser(prog="slantlab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"slantlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="built-in name, random:<seed>, or TOML path")
    amb = common.add_mutually_exclusive_group()
    amb.add_argument("--flat", action="store_true", help="constant conformal factor (Kaehler ambient)")
    amb.add_argument("--conformal", nargs="+", metavar="FAMILY", help="conformal family and key=value parameters")
    common.add_argument("--k", type=float, help="slant parameter of example81")
    common.add_argument("--grid", type=parse_grid, help="grid counts NxM over the scenario's grid axes")
    common.add_argument("--seed", type=int, help="sample with this seed instead of a grid")
    common.add_argument("--count", type=int, default=100, help="number of random points with --seed")
    common.add_argument("--tol", type=parse_tol, action="append", default=[], metavar="NAME=VALUE")
    common.add_argument("--profile", choices=sorted(PROFILES), help="tolerance profile")
    common.add_argument("--lee-sign", type=int, choices=(-1, 1))
    common.add_argument("--lee-scale", type=float)
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--verbose", "-v", action="store_true")

    p = sub.add_parser("verify", parents=[common], help="run every check")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p = sub.add_parser("inequality", parents=[common], help="margin table of the inequality")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p = sub.add_parser("calibrate", parents=[common], help="Lee convention record")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def scenario_from_args(args):
    sc = resolve(args.scenario)
    params = dict(sc.params)
    if args.k is not None:
        if sc.family != "example81":
            raise SlantLabError("--k only applies to example81")
        params["k"] = args.k
    factor = sc.ambient.factor
    if args.flat:
        factor = ConstantFactor()
    elif args.conformal:
        factor = factor_from_dict(parse_conformal(args.conformal))
    lee = None
    if args.lee_sign is not None or args.lee_scale is not None:
        if args.lee_sign is None or args.lee_scale is None:
            raise SlantLabError("--lee-sign and --lee-scale must be given together")
        lee = (args.lee_sign, args.lee_scale)
    elif sc.calibration_status == "explicit":
        lee = (sc.ambient.lee_sign, sc.ambient.lee_scale)
    sampling = sc.sampling
    if args.grid is not None:
        sampling = replace(sampling, kind="grid", shape=args.grid)
    elif args.seed is not None:
        sampling = replace(sampling, kind="random", seed=args.seed, count=args.count)
    tols = dict(sc.tolerances)
    tols.update(dict(args.tol))
    return build_scenario(
        sc.family, params, factor, sampling=sampling, scenario_id=sc.id, lee=lee, tolerances=tols
    )


def _emit(text, output):
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def cmd_verify(args):
    sc = scenario_from_args(args)
    report = verify(sc, profile=args.profile)
    if args.format == "json":
        text = report.to_json()
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "status", "worst", "tolerance", "evaluated"])
        for name, c in report.checks.items():
            w.writerow([name, c["status"], "" if c["worst"] is None else repr(c["worst"]), repr(c["tolerance"]), c["evaluated"]])
        text = buf.getvalue()
    _emit(text, args.output)
    if report.failures:
        json.dump({"failures": report.failures}, sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return 1
    return 0


def cmd_inequality(args):
    sc = scenario_from_args(args)
    rows = margin_table(sc)
    text = margin_csv(sc, rows) if args.format == "csv" else margin_json(sc, rows)
    _emit(text, args.output)
    tol = dict(args.tol).get("chen_margin", sc.tolerances.get("chen_margin", 1e-9))
    bad = [r for r in rows if r["status"] == "ok" and r["margin"] < -tol]
    return 1 if bad else 0


def cmd_calibrate(args):
    sc = scenario_from_args(args)
    rec = {"scenario_id": sc.id, **calibration_record(sc)}
    if args.format == "json":
        text = json.dumps(rec, sort_keys=True, indent=2)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["status", "sign", "scale", "residual", "two_form_structure_lee", "two_form_doubled_lee"])
        w.writerow([rec["status"], rec["sign"], repr(rec["scale"]), repr(rec["residual"]),
                    repr(rec["two_form"]["structure_lee"]), repr(rec["two_form"]["doubled_lee"])])
        text = buf.getvalue()
    _emit(text, args.output)
    return 0


COMMANDS = {"verify": cmd_verify, "inequality": cmd_inequality, "calibrate": cmd_calibrate}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (SlantLabError, OSError, KeyError, ValueError) as exc:
        print(f"slantlab: error: {exc}", file=sys.stderr)
        return 2
