"""Command line for the MiniObj VM.

    minivm run [--debug-listen PORT | --debug-connect HOST:PORT]
               [--suspend] program.mob
    minivm --version

Exit codes: 0 success, 1 usage/parse/purity/connection problems,
4 runtime error in the target program.
"""

from __future__ import annotations

import argparse
import sys

from .. import PROTOCOL_MAGIC, __version__
from .agent import AgentSetupError, DebugAgent
from .interp import Interpreter
from .parser import MiniParseError, parse_program
from .purity import check_purity


class _ArgParser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _ArgParser:
    p = _ArgParser(prog="minivm", description="Run MiniObj programs.")
    p.add_argument("--version", action="version",
                   version=f"minivm {__version__} (protocol {PROTOCOL_MAGIC})")
    sub = p.add_subparsers(dest="command")
    run = sub.add_parser("run", help="execute a .mob program")
    mode = run.add_mutually_exclusive_group()
    mode.add_argument("--debug-listen", type=int, metavar="PORT",
                      help="wait for a debugger on this port")
    mode.add_argument("--debug-connect", metavar="HOST:PORT",
                      help="dial a waiting debugger")
    run.add_argument("--suspend", action="store_true",
                     help="hold execution before main until the first Resume")
    run.add_argument("program", help="MiniObj source file")
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command != "run":
        parser.print_usage(sys.stderr)
        return 1
    if args.suspend and args.debug_listen is None and args.debug_connect is None:
        sys.stderr.write("minivm: --suspend requires a debug connection flag\n")
        return 1

    try:
        with open(args.program, encoding="utf-8") as f:
            source = f.read()
    except OSError as e:
        sys.stderr.write(f"minivm: cannot read {args.program}: {e}\n")
        return 1

    try:
        program = parse_program(source)
    except MiniParseError as e:
        sys.stderr.write(f"minivm: {args.program}: {e}\n")
        return 1

    problems = check_purity(program)
    if problems:
        for d in problems:
            sys.stderr.write(f"minivm: {args.program}: purity: {d}\n")
        return 1

    agent = None
    if args.debug_listen is not None:
        agent = DebugAgent("listen", args.debug_listen, args.suspend)
    elif args.debug_connect is not None:
        host, sep, port = args.debug_connect.rpartition(":")
        if not sep or not port.isdigit() or not host:
            sys.stderr.write("minivm: --debug-connect expects HOST:PORT\n")
            return 1
        agent = DebugAgent("connect", (host, int(port)), args.suspend)

    interp = Interpreter(program, sink=agent)
    if agent is not None:
        agent.bind(interp)
        try:
            agent.start()
        except AgentSetupError as e:
            sys.stderr.write(f"minivm: {e}\n")
            return 1

    status = interp.run()
    sys.stdout.flush()
    if status != 0 and interp.error is not None:
        sys.stderr.write(f"minivm: runtime error: {interp.error}\n")
    return status
