"""Command-line frontend.

Subcommands: sort (run one tree and print the ordered values), compare
(hourglass vs registered on identical input), resources (CSV resource and
latency report), trace (line-delimited per-cycle records), and gen
(reproducible input files).

Exit codes: 0 success, 1 input or usage error, 2 invariant violation or
failed oracle check, 3 non-termination guard tripped.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path
from typing import Sequence

from . import analysis, engine, plots
from .core import (
    CellRegisters,
    ConfigError,
    CycleTrace,
    InputError,
    SimConfig,
    SinkPattern,
    StallError,
)
from .topology import build_tree, format_topology

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VIOLATION = 2
EXIT_STALL = 3


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit with the input-error code."""

    def error(self, message):  # noqa: A002 - argparse API
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def generate_values(n: int, w: int, seed: int, duplicates: str = "none") -> list[int]:
    """Reproducible input arrays; duplicates control value-range squeeze.

    "none" samples distinct values, "some" draws from a range of 4n, and
    "heavy" from a range of max(2, n // 8); all ranges cap at 2**w.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    rng = random.Random(seed)
    space = 1 << w
    if duplicates == "none":
        if space < n:
            raise InputError(f"cannot draw {n} distinct values of width {w}")
        return rng.sample(range(space), n)
    if duplicates == "some":
        span = min(space, max(2, 4 * n))
    elif duplicates == "heavy":
        span = min(space, max(2, n // 8))
    else:
        raise InputError(f"unknown duplicates mode {duplicates!r}")
    return [rng.randrange(span) for _ in range(n)]


def _read_values(path: str) -> list[int]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(int(line, 10))
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: not an unsigned integer: {line!r}") from exc
    if not values:
        raise InputError(f"{path}: no values")
    return values


def _add_run_arguments(parser: argparse.ArgumentParser, with_variant: bool = True) -> None:
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", metavar="FILE", help="one unsigned decimal per line")
    src.add_argument("--random", type=int, metavar="N", help="N uniform random values")
    parser.add_argument("--width", type=int, default=16, metavar="W", help="element bit width")
    if with_variant:
        parser.add_argument(
            "--variant",
            choices=("hourglass", "registered", "combinational"),
            default="hourglass",
        )
    parser.add_argument("--take", type=int, default=None, metavar="M", help="stop after M outputs")
    parser.add_argument("--tie-break", choices=("left", "right"), default="left")
    parser.add_argument(
        "--sink", default="always", metavar="PAT", help="always | every:K | random:P"
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--indices", action="store_true", help="track original positions")
    parser.add_argument(
        "--dump-topology", action="store_true", help="print the tree wiring to stderr"
    )


def _config_from_args(args: argparse.Namespace, values: Sequence[int]) -> SimConfig:
    return SimConfig(
        n=len(values),
        w=args.width,
        variant=getattr(args, "variant", "hourglass"),
        tie_break=args.tie_break,
        take=args.take,
        sink=SinkPattern.parse(args.sink),
        seed=args.seed,
        track_indices=args.indices,
    )


def _values_from_args(args: argparse.Namespace) -> list[int]:
    if args.input is not None:
        return _read_values(args.input)
    if args.random < 1:
        raise InputError("--random needs N >= 1")
    rng = random.Random(args.seed)
    return [rng.randrange(1 << args.width) for _ in range(args.random)]


def cmd_sort(args: argparse.Namespace) -> int:
    values = _values_from_args(args)
    config = _config_from_args(args, values)
    if args.dump_topology:
        print(format_topology(build_tree(config.n)), file=sys.stderr)
    report = engine.simulate(config, values)
    out = sys.stdout
    for element in report.output:
        if config.track_indices:
            out.write(f"{element.value},{element.index}\n")
        else:
            out.write(f"{element.value}\n")
    print(
        f"first={report.first_output_cycle} total={report.total_cycles} "
        f"bubbles={report.bubbles}",
        file=sys.stderr,
    )
    status = EXIT_OK
    if report.violations:
        for message in report.violations:
            print(f"violation: {message}", file=sys.stderr)
        status = EXIT_VIOLATION
    if args.check:
        expected = analysis.oracle_stable_sort(_loaded_elements(config, values))
        if list(report.output) != expected:
            print("check: output differs from the stable-sort oracle", file=sys.stderr)
            status = EXIT_VIOLATION
        else:
            print("check: output matches the stable-sort oracle", file=sys.stderr)
    return status


def _loaded_elements(config: SimConfig, values: Sequence[int]):
    from .core import Element

    return [
        Element(int(v), i if config.track_indices else None) for i, v in enumerate(values)
    ]


def _trace_line(rec: CycleTrace, verbose: bool) -> str:
    record: dict = {
        "cycle": rec.cycle,
        "root_valid": rec.root_valid,
        "root_txn": rec.root_transaction,
        "value": rec.emitted.value if rec.emitted is not None else None,
        "index": rec.emitted.index if rec.emitted is not None else None,
    }
    if verbose:
        cells: dict[str, dict] = {}
        for cid, regs in rec.per_cell.items():
            if isinstance(regs, CellRegisters):
                cells[str(cid)] = {
                    "d0": regs.d0.value if regs.v0 else None,
                    "d1": regs.d1.value if regs.v1 else None,
                    "v0": regs.v0,
                    "v1": regs.v1,
                }
            else:
                cells[str(cid)] = {
                    "d": regs.d_out.value if regs.v_out else None,
                    "v": regs.v_out,
                    "e": regs.e_out,
                }
        record["cells"] = cells
        record["leaves"] = {
            str(j): {"d": leaf.d.value if leaf.v else None, "v": leaf.v}
            for j, leaf in rec.per_leaf.items()
        }
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def cmd_trace(args: argparse.Namespace) -> int:
    values = _values_from_args(args)
    config = _config_from_args(args, values)
    if args.dump_topology:
        print(format_topology(build_tree(config.n)), file=sys.stderr)
    report = engine.run(config, values, trace="full" if args.verbose else "basic")
    lines = [_trace_line(rec, args.verbose) for rec in report.trace or ()]
    payload = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(payload)
    else:
        sys.stdout.write(payload)
    if report.violations:
        for message in report.violations:
            print(f"violation: {message}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise InputError(f"{flag}: expected comma-separated integers, got {text!r}") from exc


def cmd_resources(args: argparse.Namespace) -> int:
    sizes = _parse_int_list(args.sizes, "--sizes")
    widths = _parse_int_list(args.widths, "--widths")
    if not sizes or not widths:
        raise InputError("need at least one size and one width")
    rows = ["n,w,lut,reg,carry8,freq,latency"]
    estimates = []
    for w in widths:
        for n in sizes:
            est = analysis.resource_estimate(n, w)
            estimates.append(est)
            if est.lut_estimate is None:
                print(
                    f"warning: no LUT fit for n={n} w={w}; column left empty",
                    file=sys.stderr,
                )
            if est.extrapolated:
                print(
                    f"warning: n={n} is not a power of two; register/carry totals "
                    "are extrapolated from the padded tree",
                    file=sys.stderr,
                )
            lut = "" if est.lut_estimate is None else str(est.lut_estimate)
            rows.append(
                f"{n},{w},{lut},{est.reg_bits},{est.carry8_blocks},,"
                f"{est.latency_first}+{n}"
            )
    payload = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(payload)
    else:
        sys.stdout.write(payload)
    if args.plot:
        outdir = Path(args.plot)
        outdir.mkdir(parents=True, exist_ok=True)
        path = plots.render_resource_figure(estimates, outdir / "resource_scaling.png")
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    values = _values_from_args(args)
    config = _config_from_args(args, values)
    if args.dump_topology:
        print(format_topology(build_tree(config.n)), file=sys.stderr)
    comparison = analysis.compare_variants(
        config, values, want_timelines=args.plot is not None
    )
    print("variant,first,last,total,bubbles")
    for name, report in (
        ("hourglass", comparison.hourglass),
        ("registered", comparison.registered),
    ):
        print(
            f"{name},{report.first_output_cycle},{report.last_output_cycle},"
            f"{report.total_cycles},{report.bubbles}"
        )
    print(f"ratio={comparison.cycle_ratio:.4f}", file=sys.stderr)
    if args.plot:
        outdir = Path(args.plot)
        outdir.mkdir(parents=True, exist_ok=True)
        path = plots.render_compare_figure(comparison, outdir / "compare_timeline.png")
        print(f"wrote {path}", file=sys.stderr)
    bad = comparison.hourglass.violations + comparison.registered.violations
    if bad:
        for message in bad:
            print(f"violation: {message}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    values = generate_values(args.n, args.width, args.seed, args.duplicates)
    payload = "\n".join(str(v) for v in values) + "\n"
    if args.out:
        Path(args.out).write_text(payload)
    else:
        sys.stdout.write(payload)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hourglass-sorter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sort = sub.add_parser("sort", help="run one tree and print sorted values")
    _add_run_arguments(p_sort)
    p_sort.add_argument(
        "--check", action="store_true", help="verify the output against the oracle"
    )
    p_sort.set_defaults(func=cmd_sort)

    p_compare = sub.add_parser("compare", help="hourglass vs registered on one input")
    _add_run_arguments(p_compare, with_variant=False)
    p_compare.add_argument("--plot", metavar="DIR", help="render a timeline figure")
    p_compare.set_defaults(func=cmd_compare)

    p_res = sub.add_parser("resources", help="resource and latency CSV report")
    p_res.add_argument("--sizes", required=True, metavar="N1,N2,...")
    p_res.add_argument("--widths", required=True, metavar="W1,W2,...")
    p_res.add_argument("--out", metavar="FILE", help="write CSV here instead of stdout")
    p_res.add_argument("--plot", metavar="DIR", help="render scaling figures")
    p_res.set_defaults(func=cmd_resources)

    p_trace = sub.add_parser("trace", help="per-cycle records as JSON lines")
    _add_run_arguments(p_trace)
    p_trace.add_argument(
        "--verbose", action="store_true", help="include per-node register snapshots"
    )
    p_trace.add_argument("--out", metavar="FILE", help="write records here")
    p_trace.set_defaults(func=cmd_trace)

    p_gen = sub.add_parser("gen", help="write a reproducible input file")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--width", type=int, default=16)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--duplicates", choices=("none", "some", "heavy"), default="none")
    p_gen.add_argument("--out", metavar="FILE", help="write values here")
    p_gen.set_defaults(func=cmd_gen)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InputError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StallError as exc:
        print(f"stalled: {exc}", file=sys.stderr)
        return EXIT_STALL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
