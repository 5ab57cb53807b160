"""Command-line front end: run a program file, benchmark it, or start a REPL.

Exit codes: 0 when every check passed, 1 on a failed check, 2 on a parse,
type or runtime error.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass

from . import syntax as S
from .engine import DEFAULT_MAX_ITERATIONS, Engine
from .errors import EgglogError, ParseError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2


@dataclass
class CliConfig:
    path: str | None = None
    naive: bool = False
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    dump: bool = False
    bench: str | None = None  # "both", "naive" or "semi"


def _where(path, line) -> str:
    if line is None:
        return f"{path}: "
    return f"{path}:{line}: "


def _report_error(err: EgglogError, path: str, line=None, stream=None):
    stream = stream or sys.stderr
    if isinstance(err, ParseError):
        # the message already carries line:col
        print(f"{path}:{err}", file=stream)
    else:
        print(f"{_where(path, line)}error: {err}", file=stream)


def _make_engine(config: CliConfig, naive: bool | None = None) -> Engine:
    return Engine(naive=config.naive if naive is None else naive, max_iterations=config.max_iterations)


def run_file(config: CliConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    path = config.path
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        print(f"{path}: error: {e.strerror}", file=err)
        return EXIT_ERROR
    try:
        commands = S.parse(text)
    except ParseError as e:
        _report_error(e, path, stream=err)
        return EXIT_ERROR

    engine = _make_engine(config)
    for cmd in commands:
        try:
            outcome = engine.execute(cmd)
        except EgglogError as e:
            _report_error(e, path, getattr(cmd, "line", None), stream=err)
            return EXIT_ERROR
        if outcome.kind == "check":
            if not outcome.ok:
                print(f"{_where(path, cmd.line)}check failed: {outcome.text}", file=err)
                return EXIT_CHECK_FAILED
        elif outcome.kind in ("run", "extract"):
            print(outcome.text, file=out)
    if config.dump:
        out.write(engine.dump())
    return EXIT_OK


def bench(config: CliConfig, out=None, err=None) -> int:
    """Run the program once per mode and write one CSV line per iteration."""
    out = out or sys.stdout
    err = err or sys.stderr
    path = config.path
    try:
        with open(path) as fh:
            commands = S.parse(fh.read())
    except OSError as e:
        print(f"{path}: error: {e.strerror}", file=err)
        return EXIT_ERROR
    except ParseError as e:
        _report_error(e, path, stream=err)
        return EXIT_ERROR

    modes = {"both": ["semi", "naive"], "semi": ["semi"], "naive": ["naive"]}[config.bench]
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["iteration", "mode", "rows", "millis"])
    status = EXIT_OK
    for mode in modes:
        engine = _make_engine(config, naive=(mode == "naive"))

        def record(eng, mode=mode):
            h = eng.history[-1]
            writer.writerow([h.iteration, mode, h.rows, f"{h.seconds * 1000:.3f}"])

        engine.on_iteration = record
        for cmd in commands:
            try:
                outcome = engine.execute(cmd)
            except EgglogError as e:
                _report_error(e, path, getattr(cmd, "line", None), stream=err)
                return EXIT_ERROR
            if outcome.kind == "check" and not outcome.ok:
                print(f"{_where(path, cmd.line)}check failed: {outcome.text}", file=err)
                status = EXIT_CHECK_FAILED
                break
    return status


def _incomplete(err: ParseError) -> bool:
    msg = str(err)
    return "missing ')'" in msg or "unterminated string" in msg


def repl(config: CliConfig, inp=None, out=None, err=None) -> int:
    """Read-eval-print loop; state persists and errors do not end the session."""
    inp = inp or sys.stdin
    out = out or sys.stdout
    err = err or sys.stderr
    interactive = inp.isatty()
    engine = _make_engine(config)
    buffer = ""
    lineno = 0
    start_line = 1
    while True:
        if interactive:
            out.write("... " if buffer.strip() else "> ")
            out.flush()
        line = inp.readline()
        if not line:
            break
        lineno += 1
        if not buffer.strip():
            start_line = lineno
        buffer += line
        try:
            commands = S.parse(buffer)
        except ParseError as e:
            if _incomplete(e):
                continue
            _report_error(e, "<stdin>", stream=err)
            buffer = ""
            continue
        buffer = ""
        for cmd in commands:
            try:
                outcome = engine.execute(cmd)
            except EgglogError as e:
                _report_error(e, "<stdin>", start_line, stream=err)
                break
            if outcome.kind == "check" and not outcome.ok:
                print(f"check failed: {outcome.text}", file=out)
            elif outcome.kind in ("run", "check", "extract"):
                print(outcome.text, file=out)
        out.flush()
    if buffer.strip():
        print("<stdin>: error: input ended inside an unfinished command", file=err)
    if config.dump:
        out.write(engine.dump())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fixlog",
        description="Run programs mixing Datalog rules and equality saturation.",
    )
    p.add_argument("path", nargs="?", help="program file; omit for an interactive session")
    p.add_argument("--naive", action="store_true", help="disable semi-naive evaluation")
    p.add_argument(
        "--max-iterations",
        type=int,
        default=DEFAULT_MAX_ITERATIONS,
        metavar="N",
        help=f"iteration cap for a bare (run) (default {DEFAULT_MAX_ITERATIONS})",
    )
    p.add_argument("--dump", action="store_true", help="print the database when done")
    p.add_argument(
        "--bench",
        action="store_true",
        help="write per-iteration CSV (iteration,mode,rows,millis) for both modes, "
        "or only the naive one with --naive",
    )
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.max_iterations < 0:
        print("fixlog: error: --max-iterations must be non-negative", file=sys.stderr)
        return EXIT_ERROR
    config = CliConfig(
        path=args.path,
        naive=args.naive,
        max_iterations=args.max_iterations,
        dump=args.dump,
        bench=("naive" if args.naive else "both") if args.bench else None,
    )
    if config.bench:
        if config.path is None:
            print("fixlog: error: --bench needs a program file", file=sys.stderr)
            return EXIT_ERROR
        return bench(config)
    if config.path is None:
        return repl(config)
    return run_file(config)


if __name__ == "__main__":
    sys.exit(main())
