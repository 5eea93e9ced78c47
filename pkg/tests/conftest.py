"""Shared helpers: subprocess drivers and in-process audit plumbing."""

from __future__ import annotations

import io
import json
import subprocess
from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"


def run_vm(*argv: str, timeout: float = 30.0) -> subprocess.CompletedProcess:
    return subprocess.run(["minivm", *argv], capture_output=True, text=True,
                          timeout=timeout)


def run_auditor(*argv: str, timeout: float = 60.0) -> subprocess.CompletedProcess:
    return subprocess.run(["auditor", *argv], capture_output=True, text=True,
                          timeout=timeout)


def parse_report(text: str):
    """Splits a JSONL report into (header, records, summary)."""
    lines = [json.loads(ln) for ln in text.splitlines() if ln.strip()]
    header = next((l for l in lines if l.get("type") == "header"), None)
    summary = next((l for l in lines if l.get("type") == "summary"), None)
    records = [l for l in lines if "seq" in l]
    return header, records, summary


def launch_session(program: Path):
    from oclaudit.wire.session import ConnectorConfig, open_session
    return open_session(ConnectorConfig(mode="launch", program=str(program)))


def audit_in_process(program: Path, constraints: Path, policy=None,
                     strict: bool = False):
    """Launches the VM, runs a full audit, returns (summary, records, json
    summary line). The report is kept in memory."""
    from oclaudit.audit.loop import AuditPolicy, run_audit
    from oclaudit.audit.records import ReportWriter
    from oclaudit.ocl.parser import parse_constraint_file

    cf = parse_constraint_file(constraints.read_text(),
                               source_name=str(constraints))
    session = launch_session(program)
    buf = io.StringIO()
    writer = ReportWriter(buf)
    writer.write_header(str(constraints), str(program))
    try:
        summary = run_audit(cf, session, writer, policy or AuditPolicy(),
                            strict=strict, warn=lambda s: None)
    finally:
        session.close()
    _header, records, jsummary = parse_report(buf.getvalue())
    return summary, records, jsummary


def advance_to_entry(session, catalog, class_name: str, method: str,
                     nth: int = 1):
    """Resumes until the nth MethodEntry of class::method; the VM is left
    suspended there. Returns the entry event."""
    seen = 0
    while True:
        es = session.next_event_set()
        for ev in es["events"]:
            if (ev["type"] == "MethodEntry" and ev["class"] == class_name
                    and ev["method"] == method):
                seen += 1
                if seen == nth:
                    return ev
            if ev["type"] == "VmDeath":
                raise AssertionError(
                    f"VM finished before entry {nth} of"
                    f" {class_name}::{method}")
        if es["suspend"]:
            session.resume_all(lambda s: None)


def drain_to_death(session):
    """Resumes until VmDeath; returns (all events seen, death event)."""
    events = []
    while True:
        es = session.next_event_set()
        for ev in es["events"]:
            events.append(ev)
            if ev["type"] == "VmDeath":
                return events, ev
        if es["suspend"]:
            session.resume_all(lambda s: None)
