"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.  Input files hold one numeric column whose row order
is the observation order.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from importlib import resources
from pathlib import Path

from . import core, inference, power, sim
from .errors import DataError, DomainError, NumericalError, UnsupportedCombination

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
STAT_NAMES = {"wbar": "wbar", "wmax": "wmax", "mean": "mean_change"}
METHOD_NAMES = {"asymptotic": "asymptotic", "perm": "permutation"}


class UsageError(Exception):
    pass


class InputError(DataError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_column(path, column=None):
    """Floats from one column of a CSV file (header optional) or a plain list.

    ``column`` is a header name or a zero-based index; the first column by
    default.  Errors carry 1-based line numbers.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    lines = [(i + 1, row) for i, row in enumerate(csv.reader(text.splitlines())) if any(c.strip() for c in row)]
    if not lines:
        raise InputError(f"{path}: no data")
    first = lines[0][1]
    if column is not None and not column.lstrip("-").isdigit():
        header = [c.strip() for c in first]
        if column not in header:
            raise InputError(f"{path}:{lines[0][0]}: column {column!r} not in header {header}")
        idx = header.index(column)
        lines = lines[1:]
    else:
        idx = 0 if column is None else int(column)
        try:
            float(first[idx])
        except ValueError:
            lines = lines[1:]
        except IndexError:
            raise InputError(f"{path}:{lines[0][0]}: no column {idx}") from None
    values = []
    for no, row in lines:
        try:
            values.append(float(row[idx]))
        except IndexError:
            raise InputError(f"{path}:{no}: missing column {column!r}") from None
        except ValueError:
            raise InputError(f"{path}:{no}: not a number: {row[idx].strip()!r}") from None
    return values


def _load_sample(args):
    values = read_column(args.input, args.column)
    return core.validate_sample(values, ties=args.ties, jitter_seed=args.seed)


def _emit(text, output):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj, fmt):
    if fmt == "json":
        return json.dumps(obj, indent=2, sort_keys=True) + "\n"
    return sim.rows_to_csv(list(obj), [obj])


def cmd_test(args):
    kind = STAT_NAMES[args.stat]
    method = METHOD_NAMES[args.method]
    sample = _load_sample(args)
    report = inference.run_test(sample, kind, method, M=args.trunc_M, reps=args.reps, seed=args.seed,
                                variance="known" if args.known_variance else "estimated")
    out = {"schema": "cvmcp.test/1", "input": str(args.input), **report.to_dict(), "alpha": args.alpha,
           "reject": bool(report.p_value < args.alpha)}
    if sample.metadata:
        out["sample"] = sample.metadata
    _emit(_dump(out, args.format), args.output)
    return EXIT_OK


def cmd_scan(args):
    sample = _load_sample(args)
    res = core.scan(sample)
    if args.format == "json":
        obj = {"schema": "cvmcp.scan/1", "n": sample.n, "wbar": res.wbar, "wmax": res.wmax, "c_hat": res.c_hat,
               "c_hat_tied": res.c_hat_tied, "w": res.w.tolist()}
        text = json.dumps(obj, indent=2) + "\n"
    else:
        rows = [{"c": c, "w": float(v)} for c, v in enumerate(res.w, start=1)]
        text = sim.rows_to_csv(["c", "w"], rows)
    _emit(text, args.output)
    return EXIT_OK


def cmd_power(args):
    if not 0 < args.u < 1:
        raise UsageError(f"--u must lie in (0, 1), got {args.u}")
    if not 0 < args.alpha < 1:
        raise UsageError(f"--alpha must lie in (0, 1), got {args.alpha}")
    if args.family == "normal":
        alt = power.normal_shift_scale_alternative(args.gamma1, args.gamma2, args.u, args.perturbed or "tail")
    else:
        alt = power.gamma_shape_alternative(args.b, args.u, args.perturbed or "head")
    value = power.asymptotic_power(alt, args.alpha, args.J, args.K)
    out = {"schema": "cvmcp.power/1", "family": args.family, "u": args.u, "alpha": args.alpha, "J": args.J,
           "K": args.K, "power": value}
    if args.family == "normal":
        out.update(gamma1=args.gamma1, gamma2=args.gamma2)
    else:
        out.update(b=args.b)
    _emit(_dump(out, args.format), args.output)
    return EXIT_OK


def bundled_scenarios():
    return sorted(p.name[:-5] for p in resources.files("cvmcp.scenarios").iterdir() if p.name.endswith(".toml"))


def _scenario_path(name):
    p = Path(name)
    if p.exists():
        return p
    bundled = resources.files("cvmcp.scenarios") / f"{name}.toml"
    if bundled.is_file():
        return bundled
    raise InputError(f"scenario file {name!r} not found (bundled: {', '.join(bundled_scenarios())})")


def cmd_simulate(args):
    path = _scenario_path(args.scenario)
    try:
        cfg = sim.load_config(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot parse scenario file {path}: {exc}") from exc
    overrides = {"reps": args.reps, "seed": args.seed, "crit_reps": args.crit_reps, "N": args.N}
    header, rows, manifest = sim.run_config(cfg, overrides, workers=args.workers)
    if args.format == "json":
        text = json.dumps({"schema": "cvmcp.simulate/1", "rows": rows, "manifest": manifest}, indent=2,
                          default=float) + "\n"
    else:
        text = sim.rows_to_csv(header, rows)
    _emit(text, args.output)
    if args.output:
        Path(str(args.output) + ".manifest.json").write_text(sim.manifest_json(manifest) + "\n")
    return EXIT_OK


def _add_input(p):
    p.add_argument("--input", required=True, help="CSV with header, or one number per line")
    p.add_argument("--column", default=None, help="header name or zero-based index (default: first)")
    p.add_argument("--ties", choices=("reject", "jitter"), default="reject")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", default=None)


def build_parser():
    parser = _Parser(prog="cvmcp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", help="test for a change point")
    _add_input(p)
    p.add_argument("--stat", choices=tuple(STAT_NAMES), default="wbar")
    p.add_argument("--method", choices=tuple(METHOD_NAMES), default="asymptotic")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=inference.DEFAULT_REPS)
    p.add_argument("--trunc-M", dest="trunc_M", type=int, default=inference.DEFAULT_M)
    p.add_argument("--known-variance", action="store_true", help="mean statistic with sigma = 1")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("scan", help="per-split statistics")
    _add_input(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("power", help="asymptotic power under a contiguous alternative")
    p.add_argument("--family", choices=("normal", "gamma"), default="normal")
    p.add_argument("--gamma1", type=float, default=0.0, help="normal location drift")
    p.add_argument("--gamma2", type=float, default=0.0, help="normal scale drift")
    p.add_argument("--b", type=float, default=0.0, help="gamma shape drift")
    p.add_argument("--perturbed", choices=("head", "tail"), default=None)
    p.add_argument("--u", type=float, default=0.5, help="break fraction")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("-J", type=int, default=16)
    p.add_argument("-K", type=int, default=16)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("simulate", help="run a bundled or custom scenario file")
    p.add_argument("--scenario", required=True, help="TOML file or bundled name")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--crit-reps", dest="crit_reps", type=int, default=None)
    p.add_argument("--N", type=int, default=None, help="samples for histogram / calibration runs")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "test" and args.stat == "wmax" and args.method == "asymptotic":
        parser.exit(EXIT_USAGE, "cvmcp: error: --stat wmax has no asymptotic null law; use --method perm\n")
    try:
        return args.func(args)
    except (UsageError, UnsupportedCombination, DomainError) as exc:
        print(f"cvmcp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"cvmcp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"cvmcp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
