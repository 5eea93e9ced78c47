"""The auditor command line.

Exit codes: 0 all checks passed, 2 at least one FAIL, 3 errors but no
failures, 1 usage or infrastructure problems (unreadable constraints,
connection loss, strict-mode registration failure).
"""

from __future__ import annotations

import argparse
import shlex
import sys

from . import PROTOCOL_MAGIC, __version__
from .audit.loop import AuditPolicy, StrictRegistrationError, run_audit
from .audit.records import ReportWriter
from .ocl.errors import ConstraintError
from .ocl.parser import parse_constraint_file
from .wire.session import ConnectorConfig, SessionError, default_vm_cmd, \
    open_session

_KINDS = ("inv", "pre", "post")


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _ArgParser:
    p = _ArgParser(prog="auditor",
                   description="Checks declared constraints against a"
                               " running program over the debug wire.")
    p.add_argument("--version", action="version",
                   version=f"auditor {__version__} (protocol {PROTOCOL_MAGIC})")
    p.add_argument("--constraints", required=True, metavar="FILE",
                   help="constraint file to enforce")
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--launch", metavar="PROGRAM",
                     help="start the VM on PROGRAM and audit it")
    how.add_argument("--attach", metavar="HOST:PORT",
                     help="attach to a VM already listening for a debugger")
    how.add_argument("--listen", metavar="PORT", type=int,
                     help="wait for a VM to dial in on PORT")
    p.add_argument("--out", metavar="FILE", default=None,
                   help="write the report here instead of stdout")
    p.add_argument("--fail-fast", action="store_true",
                   help="disconnect after the first failed check")
    p.add_argument("--check", metavar="KINDS", default="inv,pre,post",
                   help="comma-separated subset of inv,pre,post")
    p.add_argument("--strict", action="store_true",
                   help="refuse to run if any constraint fails to register")
    p.add_argument("--vm", metavar="CMD", default=None,
                   help="VM command for --launch (default: $AUDITOR_VM"
                        " or 'minivm')")
    return p


def _parse_kinds(text: str) -> frozenset:
    kinds = [k.strip() for k in text.split(",") if k.strip()]
    bad = [k for k in kinds if k not in _KINDS]
    if bad or not kinds:
        raise ValueError(f"--check accepts a subset of inv,pre,post,"
                         f" got {text!r}")
    return frozenset(kinds)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    try:
        kinds = _parse_kinds(args.check)
    except ValueError as e:
        sys.stderr.write(f"auditor: {e}\n")
        return 1

    try:
        with open(args.constraints, encoding="utf-8") as f:
            source = f.read()
    except OSError as e:
        sys.stderr.write(f"auditor: cannot read {args.constraints}: {e}\n")
        return 1
    try:
        cf = parse_constraint_file(source, source_name=args.constraints)
    except ConstraintError as e:
        sys.stderr.write(f"auditor: {args.constraints}: {e}\n")
        return 1

    if args.launch is not None:
        vm_cmd = (tuple(shlex.split(args.vm)) if args.vm is not None
                  else default_vm_cmd())
        cfg = ConnectorConfig(mode="launch", program=args.launch,
                              vm_cmd=vm_cmd)
        target = args.launch
    elif args.attach is not None:
        host, sep, port = args.attach.rpartition(":")
        if not sep or not port.isdigit():
            sys.stderr.write("auditor: --attach expects HOST:PORT\n")
            return 1
        cfg = ConnectorConfig(mode="attach", host=host or "127.0.0.1",
                              port=int(port))
        target = args.attach
    else:
        cfg = ConnectorConfig(mode="listen", port=args.listen)
        target = f"listen:{args.listen}"

    policy = AuditPolicy(fail_fast=args.fail_fast, kinds=kinds)

    out_file = None
    if args.out is not None:
        try:
            out_file = open(args.out, "w", encoding="utf-8")
        except OSError as e:
            sys.stderr.write(f"auditor: cannot write {args.out}: {e}\n")
            return 1
    stream = out_file or sys.stdout

    session = None
    try:
        session = open_session(cfg)
        writer = ReportWriter(stream)
        writer.write_header(args.constraints, target)
        summary = run_audit(cf, session, writer, policy, strict=args.strict)
    except StrictRegistrationError as e:
        for w in e.warnings:
            sys.stderr.write(f"auditor: strict: {w}\n")
        return 1
    except SessionError as e:
        sys.stderr.write(f"auditor: {e}\n")
        return 1
    finally:
        if session is not None:
            session.close()
        if out_file is not None:
            out_file.close()

    if summary.incomplete:
        return 1
    if summary.failed:
        return 2
    if summary.errored:
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
