"""Command-line entry point: ``dchflow {run,spinodal,mms-convergence,cauchy-convergence}``."""

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, parse_config, study_settings
from .io import FORMATS, emit_study_table
from .multigrid import SolverDivergence

log = logging.getLogger("dchflow")

SPINODAL_DEFAULTS = (
    "epsilon = 0.01\ngamma = 0.01\nL = 8\ntau = 1e-3\nT = 0.1\ninitial = spinodal\n"
)


def _overrides(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _read(path):
    if path is None:
        return "", "<defaults>"
    try:
        return Path(path).read_text(), str(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def _run(args, base=""):
    from .integrator import run

    text, source = _read(args.config)
    over = _overrides(args.set)
    if args.out:
        over["out_dir"] = args.out
    if args.format:
        over["format"] = args.format
    config = parse_config(base + text, over, source)
    state, records = run(config)
    last = records[-1]
    print(f"steps={last.m} t={last.t!r} energy={last.energy!r} mass={last.mass!r} "
          f"phi_min={last.phi_min!r} phi_max={last.phi_max!r}")
    return 0


def _study(args):
    from .studies import cauchy_study, convergence_study

    text, source = _read(args.config)
    values, params = study_settings(args.command, text, _overrides(args.set), source)

    def show(row):
        errs = " ".join(f"{k}={v:.4e}" for k, v in row.errors.items())
        rts = " ".join(f"{k}={v:.2f}" for k, v in row.rates.items())
        print(f"h={row.h:.5g} {errs} {rts}".rstrip(), file=sys.stderr)

    if args.command == "mms-convergence":
        rows = convergence_study(values["norm"], values["grids"], values["path"], params,
                                 constant=values["constant"], T=values["T"], on_row=show,
                                 p_gauge=values["p_gauge"])
    else:
        rows = cauchy_study(values["norm"], values["grids"], values["path"], params,
                            constant=values["constant"], T=values["T"], on_row=show,
                            p_gauge=values["p_gauge"])
    meta = {k: values[k] for k in sorted(values)}
    path = None
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        path = Path(args.out) / f"{args.command}-{values['norm']}.csv"
    sys.stdout.write(emit_study_table(rows, path, meta))
    failed = any(v != v for row in rows for v in row.errors.values())
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="dchflow", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "time-march a configured run"),
        ("spinodal", "spinodal decomposition with the standard setup as defaults"),
        ("mms-convergence", "manufactured-solution refinement study"),
        ("cauchy-convergence", "Cauchy-difference refinement study"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=FORMATS, help="snapshot format")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "spinodal":
            return _run(args, SPINODAL_DEFAULTS)
        return _study(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverDivergence as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
