"""Report records and the JSONL writer.

One line per checked clause. Key order is fixed so reports diff cleanly:
seq, phase, context, kind, label?, expr, verdict, errorCode?, blame?,
objectId, frameId. errorCode appears only on ERROR, blame only on FAIL.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

PASS = "PASS"
FAIL = "FAIL"
ERROR = "ERROR"

CLIENT = "CLIENT"
SERVER = "SERVER"


@dataclass(frozen=True)
class Blame:
    party: str
    class_name: str
    method: str
    line: int

    def to_obj(self) -> dict:
        return {"party": self.party, "class": self.class_name,
                "method": self.method, "line": self.line}


class ReportWriter:
    def __init__(self, stream):
        self.stream = stream
        self.passed = 0
        self.failed = 0
        self.errored = 0
        self._seq = 0

    def write_header(self, constraints: str, target: str) -> None:
        self._line({
            "type": "header",
            "constraints": constraints,
            "target": target,
            "note": "preconditions use dynamic-chain disjunction",
        })

    def write_record(self, *, phase: str, context: str, kind: str,
                     label: str | None, expr: str, verdict: str,
                     error_code: str | None = None, blame: Blame | None = None,
                     object_id: int, frame_id: int) -> None:
        if verdict == FAIL and blame is None:
            raise ValueError("FAIL verdicts carry blame")
        if verdict != FAIL and blame is not None:
            raise ValueError("only FAIL verdicts carry blame")
        if (verdict == ERROR) != (error_code is not None):
            raise ValueError("errorCode goes with ERROR and nothing else")
        self._seq += 1
        obj: dict = {"seq": self._seq, "phase": phase, "context": context,
                     "kind": kind}
        if label is not None:
            obj["label"] = label
        obj["expr"] = expr
        obj["verdict"] = verdict
        if error_code is not None:
            obj["errorCode"] = error_code
        if blame is not None:
            obj["blame"] = blame.to_obj()
        obj["objectId"] = object_id
        obj["frameId"] = frame_id
        self._line(obj)
        if verdict == PASS:
            self.passed += 1
        elif verdict == FAIL:
            self.failed += 1
        else:
            self.errored += 1

    def write_summary(self, incomplete: bool = False) -> None:
        obj: dict = {"type": "summary", "pass": self.passed,
                     "fail": self.failed, "error": self.errored,
                     "records": self.passed + self.failed + self.errored}
        if incomplete:
            obj["incomplete"] = True
        self._line(obj)

    def _line(self, obj: dict) -> None:
        self.stream.write(json.dumps(obj, ensure_ascii=False) + "\n")
        # keep partial reports on disk useful if the run dies mid-stream
        self.stream.flush()
