"""Command-line interface: ``rwspt <command> [options]``.

Exit codes: 0 success, 1 verification failure, 2 usage or input error,
3 state or time budget exhausted.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from . import ctmc as ctmc_mod
from .errors import ConfigError, NotSymmetricError, ParseError, RwsptError, StateLimitExceeded
from .models import PLConfig, build_nplsys, degradation_rules
from .net import System
from .netio import load
from .rewriting import Rule, firing_rule
from .statespace import (
    DEFAULT_LIMIT,
    build_ordinary,
    build_quotient,
    export_dot,
    verify_lumping,
    write_edges_csv,
    write_generator_csv,
    write_states_csv,
)

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3
THREADS_ENV = "RWSPT_THREADS"


@dataclass
class CommandOutcome:
    exit_code: int
    artifacts: List[Path] = field(default_factory=list)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep argparse's message but raise instead of exiting
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default="nplsys", help="preset name ('nplsys') or path to a .rwspt file")
    p.add_argument("--params", default="", help="preset parameters, e.g. N=2,K=2,M=2,fault=0.002")
    p.add_argument("--config", help="key=value file with preset parameters (applied before --params)")
    p.add_argument("--limit", type=int, default=DEFAULT_LIMIT, help="maximum number of states")
    p.add_argument("--time-budget", type=float, default=None, help="wall-clock budget in seconds")
    p.add_argument("--out", default="out", help="output directory (default ./out)")
    p.add_argument("--force", action="store_true", help="overwrite existing output files")
    p.add_argument("--threads", type=int, default=None, help=f"exploration threads (env {THREADS_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rwspt", description="Rewritable stochastic Petri nets with symmetry reduction.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in [
        ("reach", "build the ordinary reachability graph"),
        ("quotient", "build the quotient graph and its lumped generator"),
        ("verify-lump", "check strong lumpability against the ordinary graph"),
    ]:
        _common(sub.add_parser(name, help=help_))
    c = sub.add_parser("ctmc", help="transient measures on the lumped chain")
    _common(c)
    c.add_argument("--measure", choices=["reliability", "throughput"], default="reliability")
    c.add_argument("--times", default="0:5000:200:geom", help="start:end:count[:geom]")
    c.add_argument("--epsilon", type=float, default=ctmc_mod.DEFAULT_EPSILON)
    c.add_argument("--label", default="asm", help="edge label counted by the throughput measure")
    c.add_argument("--transient", action="store_true", help="also write transient.csv")
    d = sub.add_parser("export-dot", help="write a graph in DOT format")
    _common(d)
    d.add_argument("--graph", choices=["ordinary", "quotient"], default="quotient")
    ps = sub.add_parser("parse", help="syntax-check a .rwspt file")
    ps.add_argument("file")
    return parser


def parse_times(text: str):
    parts = text.split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in ("geom", "lin")):
        raise UsageError(f"bad --times {text!r}; expected start:end:count[:geom]")
    try:
        start, end, count = float(parts[0]), float(parts[1]), int(parts[2])
        return ctmc_mod.time_grid(start, end, count, geometric=len(parts) == 4 and parts[3] == "geom")
    except ValueError as exc:
        raise UsageError(f"bad --times {text!r}: {exc}") from None


def _threads(args) -> int:
    value = args.threads
    if value is None:
        env = os.environ.get(THREADS_ENV)
        try:
            value = int(env) if env else 1
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer") from None
    if value < 1:
        raise UsageError("--threads must be at least 1")
    return value


def load_model(args) -> Tuple[System, Sequence[Rule]]:
    if args.model == "nplsys":
        cfg = PLConfig()
        if args.config:
            cfg = PLConfig.from_file(args.config, cfg)
        if args.params:
            cfg = PLConfig.from_params(args.params, cfg)
        return build_nplsys(cfg), degradation_rules(cfg)
    path = Path(args.model)
    if not path.is_file():
        raise UsageError(f"unknown model {args.model!r} (not a preset and not a file)")
    if args.params or args.config:
        raise UsageError("--params/--config only apply to presets")
    doc = load(path)
    return doc.system(), [firing_rule()]


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _target(out: Path, name: str, force: bool) -> Path:
    path = out / name
    if path.exists() and not force:
        raise UsageError(f"{path} exists; pass --force to overwrite")
    return path


def _cmd_reach(args) -> CommandOutcome:
    s0, rules = load_model(args)
    ts = build_ordinary(s0, rules, args.limit, _threads(args), args.time_budget)
    out = _outdir(args)
    paths = [_target(out, n, args.force) for n in ("states.csv", "edges.csv", "ordinary.dot")]
    write_states_csv(ts, paths[0], force=True)
    write_edges_csv(ts, paths[1], force=True)
    paths[2].write_text(export_dot(ts), encoding="utf-8")
    print(ts.summary())
    return CommandOutcome(EXIT_OK, paths)


def _cmd_quotient(args) -> CommandOutcome:
    s0, rules = load_model(args)
    ts, chain = build_quotient(s0, rules, args.limit, _threads(args), args.time_budget)
    out = _outdir(args)
    paths = [_target(out, n, args.force) for n in ("states.csv", "edges.csv", "generator.csv")]
    write_states_csv(ts, paths[0], force=True)
    write_edges_csv(ts, paths[1], force=True)
    write_generator_csv(chain, paths[2], force=True)
    print(ts.summary())
    return CommandOutcome(EXIT_OK, paths)


def _cmd_verify(args) -> CommandOutcome:
    s0, rules = load_model(args)
    threads = _threads(args)
    ordinary = build_ordinary(s0, rules, args.limit, threads, args.time_budget)
    _, chain = build_quotient(s0, rules, args.limit, threads, args.time_budget)
    report = verify_lumping(ordinary, chain)
    print(f"ordinary {ordinary.summary()}; quotient states: {chain.n}")
    if report.ok:
        print(f"lumping verified: {report.checked_states} states in {report.classes} classes, 0 violations")
        return CommandOutcome(EXIT_OK)
    for v in report.violations[:20]:
        print(
            f"violation: state {v.state} (class {v.source_class}) -> class {v.target_class}: "
            f"ordinary {v.ordinary_rate!r} vs quotient {v.quotient_rate!r}",
            file=sys.stderr,
        )
    print(f"lumping FAILED: {len(report.violations)} violations", file=sys.stderr)
    return CommandOutcome(EXIT_VERIFY)


def _cmd_ctmc(args) -> CommandOutcome:
    times = parse_times(args.times)
    if not 0.0 < args.epsilon < 1.0:
        raise UsageError("--epsilon must lie in (0, 1)")
    s0, rules = load_model(args)
    _, chain = build_quotient(s0, rules, args.limit, _threads(args), args.time_budget)
    out = _outdir(args)
    paths = [_target(out, f"{args.measure}.csv", args.force)]
    if args.transient:
        paths.append(_target(out, "transient.csv", args.force))
    if args.measure == "reliability":
        points = ctmc_mod.reliability(chain, times, args.epsilon)
    else:
        label = args.label
        points = ctmc_mod.throughput(chain, lambda l: l == label, times, args.epsilon)
    ctmc_mod.write_curve_csv(points, paths[0])
    if args.transient:
        ctmc_mod.write_transient_csv(ctmc_mod.transient(chain, times, args.epsilon), paths[1])
    t_last, v_last = points[-1]
    print(f"{args.measure}: {len(points)} points over {chain.n} states; value at t={t_last:g}: {v_last:.10g}")
    return CommandOutcome(EXIT_OK, paths)


def _cmd_dot(args) -> CommandOutcome:
    s0, rules = load_model(args)
    if args.graph == "ordinary":
        ts = build_ordinary(s0, rules, args.limit, _threads(args), args.time_budget)
    else:
        ts, _ = build_quotient(s0, rules, args.limit, _threads(args), args.time_budget)
    path = _target(_outdir(args), f"{args.graph}.dot", args.force)
    path.write_text(export_dot(ts), encoding="utf-8")
    print(f"{ts.summary()} -> {path}")
    return CommandOutcome(EXIT_OK, [path])


def _cmd_parse(args) -> CommandOutcome:
    try:
        doc = load(args.file)
    except ParseError as exc:
        print(f"{args.file}:{exc.line}:{exc.column}: {exc.message}", file=sys.stderr)
        return CommandOutcome(EXIT_VERIFY)
    marked = "with" if doc.initial_marking is not None else "without"
    print(f"ok: {len(doc.net)} transitions, {len(doc.net.places)} places, {marked} initial marking")
    return CommandOutcome(EXIT_OK)


COMMANDS = {
    "reach": _cmd_reach,
    "quotient": _cmd_quotient,
    "verify-lump": _cmd_verify,
    "ctmc": _cmd_ctmc,
    "export-dot": _cmd_dot,
    "parse": _cmd_parse,
}


def run(argv: Optional[Sequence[str]] = None) -> CommandOutcome:
    """Run one command and return its outcome instead of exiting."""
    try:
        args = build_parser().parse_args(list(argv) if argv is not None else None)
    except UsageError as exc:
        print(f"rwspt: error: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_USAGE)
    except SystemExit as exc:  # --help
        return CommandOutcome(EXIT_OK if not exc.code else EXIT_USAGE)
    try:
        return COMMANDS[args.command](args)
    except StateLimitExceeded as exc:
        print(f"rwspt: aborted: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_LIMIT)
    except (UsageError, ConfigError, ParseError, NotSymmetricError, OSError) as exc:
        print(f"rwspt: error: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_USAGE)
    except RwsptError as exc:
        print(f"rwspt: error: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_VERIFY)


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run(argv).exit_code)


if __name__ == "__main__":  # pragma: no cover
    main()
