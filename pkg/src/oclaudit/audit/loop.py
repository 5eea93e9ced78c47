"""The audit driver: event loop, clause scheduling, blame, verdict folds.

Checking policy per event:
  entry of a public method   invariants, then preconditions, then captures
  exit of any checked method postconditions first, then invariants
  constructor (init)         invariants at exit only
Private methods get their declared pre/post but never invariant checks.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from functools import reduce

from ..ocl.ast import Binary, BinOp, ConstraintFile
from ..ocl.printer import format_expr
from ..values import VRef
from ..wire import mirrors
from ..wire.protocol import decode_value
from ..wire.session import Session, SessionError, VmErrorReply
from . import evalexpr, records, table as tbl
from .evalexpr import CaptureError, ClauseOutcome, EvalEnv
from .records import Blame, ReportWriter


@dataclass
class AuditPolicy:
    fail_fast: bool = False
    kinds: frozenset = frozenset({"inv", "pre", "post"})
    digest_check: bool = False


@dataclass
class AuditSummary:
    passed: int = 0
    failed: int = 0
    errored: int = 0
    incomplete: bool = False
    vm_exit_status: int | None = None
    vm_entry_count: int | None = None
    digest_checks: int = 0
    digest_mismatches: int = 0
    warnings: list = field(default_factory=list)


class StrictRegistrationError(Exception):
    """Raised under --strict when any constraint fails to register."""

    def __init__(self, warnings: list[str]):
        super().__init__("; ".join(warnings))
        self.warnings = warnings


def fold_and(verdicts) -> str:
    vs = list(verdicts)
    if any(v == records.FAIL for v in vs):
        return records.FAIL
    if any(v == records.ERROR for v in vs):
        return records.ERROR
    return records.PASS


def fold_or(verdicts) -> str:
    vs = list(verdicts)
    if any(v == records.PASS for v in vs):
        return records.PASS
    if any(v == records.ERROR for v in vs):
        return records.ERROR
    return records.FAIL


def run_audit(cf: ConstraintFile, session: Session, writer: ReportWriter,
              policy: AuditPolicy | None = None, *, strict: bool = False,
              warn=None) -> AuditSummary:
    policy = policy or AuditPolicy()
    warn = warn or (lambda s: sys.stderr.write("auditor: " + s + "\n"))
    driver = _Driver(session, writer, policy, warn)
    return driver.run(cf, strict)


class _Driver:
    def __init__(self, session, writer, policy, warn):
        self.session = session
        self.writer = writer
        self.policy = policy
        self.warn = warn
        self.summary = AuditSummary()
        self.catalog: dict[str, mirrors.ClassMirror] = {}
        self.table: tbl.ConstraintTable | None = None
        self._eff_cache: dict[tuple[str, str], tbl.EffectiveSet] = {}
        self._captures: dict[int, tuple] = {}

    # --- top level ---

    def run(self, cf: ConstraintFile, strict: bool) -> AuditSummary:
        if not self._await_start():
            self._finish(incomplete=False)
            return self.summary

        self.catalog = mirrors.fetch_catalog(self.session)
        self.table, warnings = tbl.build_constraint_table(cf, self.catalog)
        self.summary.warnings = warnings
        for w in warnings:
            self.warn(w)
        if strict and warnings:
            raise StrictRegistrationError(warnings)

        if self.table.has_any():
            monitored = tbl.monitored_classes(self.table, self.catalog)
            want_exit = bool({"inv", "post"} & self.policy.kinds)
            self.session.request({"type": "SetEventPolicy",
                                  "classes": monitored,
                                  "entry": True, "exit": want_exit})
        self.session.resume_all(self.warn)

        try:
            self._event_loop()
        except SessionError as e:
            self.warn(f"session lost mid-run: {e}")
            self._finish(incomplete=True)
            return self.summary
        self._finish(incomplete=False)
        return self.summary

    def _await_start(self) -> bool:
        """Consumes VmStart; returns False if the VM was already gone."""
        es = self.session.next_event_set()
        types = {ev["type"] for ev in es["events"]}
        for ev in es["events"]:
            if ev["type"] == "VmDeath":
                self._note_death(ev)
                return False
        if "VmStart" not in types:
            raise SessionError(f"expected VmStart, got {sorted(types)}")
        if not es["suspend"]:
            # attached to a running VM; freeze it for the catalog phase
            try:
                self.session.request({"type": "Suspend"})
            except VmErrorReply:
                pass
        return True

    def _event_loop(self) -> None:
        while True:
            es = self.session.next_event_set()
            death = False
            fail_hit = False
            for ev in es["events"]:
                t = ev["type"]
                if t == "MethodEntry":
                    fail_hit = self._on_entry(ev) or fail_hit
                elif t == "MethodExit":
                    fail_hit = self._on_exit(ev) or fail_hit
                elif t == "VmDeath":
                    self._note_death(ev)
                    death = True
                if fail_hit and self.policy.fail_fast:
                    break
            if death:
                return
            if fail_hit and self.policy.fail_fast:
                try:
                    self.session.request({"type": "Disconnect"})
                except (SessionError, VmErrorReply):
                    pass
                return
            if es["suspend"]:
                self.session.resume_all(self.warn)

    def _note_death(self, ev: dict) -> None:
        self.summary.vm_exit_status = ev["exitStatus"]
        self.summary.vm_entry_count = ev["entryCount"]

    def _finish(self, incomplete: bool) -> None:
        self.writer.write_summary(incomplete=incomplete)
        self.summary.incomplete = incomplete
        self.summary.passed = self.writer.passed
        self.summary.failed = self.writer.failed
        self.summary.errored = self.writer.errored

    # --- per-event checking ---

    def _eff(self, cls: str, method: str) -> tbl.EffectiveSet:
        key = (cls, method)
        got = self._eff_cache.get(key)
        if got is None:
            got = tbl.effective_for(self.table, self.catalog, cls, method)
            self._eff_cache[key] = got
        return got

    def _method_mirror(self, cls: str, method: str):
        cm = self.catalog.get(cls)
        return cm.methods.get(method) if cm else None

    def _on_entry(self, ev: dict) -> bool:
        cls, method = ev["class"], ev["method"]
        eff = self._eff(cls, method)
        if eff.empty:
            return False
        fid = ev["frameId"]
        oid = ev.get("thisId", 0)
        args = [decode_value(a) for a in ev["args"]]
        mm = self._method_mirror(cls, method)
        visibility = mm.visibility if mm else "public"
        declaring = mm.declaring if mm else cls
        context = f"{cls}::{method}"
        this = VRef(oid, cls)
        failed = False

        if ("inv" in self.policy.kinds and method != "init"
                and visibility == "public"):
            failed = self._check_invs(eff, context, "entry", this, fid,
                                      declaring) or failed
            if failed and self.policy.fail_fast:
                return True

        if "pre" in self.policy.kinds and eff.pre_groups:
            failed = self._check_pres(eff, ev, context, this, args, fid) or failed
            if failed and self.policy.fail_fast:
                return True

        if "post" in self.policy.kinds and eff.capture_chains:
            env = EvalEnv(self.session, self.catalog, self_ref=this,
                          params=self._merged_params(eff, args))
            self._captures[fid] = self._bracket(
                lambda: evalexpr.capture_pre_values(eff.capture_chains, env))
        return failed

    def _on_exit(self, ev: dict) -> bool:
        cls, method = ev["class"], ev["method"]
        eff = self._eff(cls, method)
        fid = ev["frameId"]
        pre_vals = self._captures.pop(fid, None)
        if eff.empty:
            return False
        oid = ev.get("thisId", 0)
        args = [decode_value(a) for a in ev["args"]]
        result = decode_value(ev["returnValue"])
        mm = self._method_mirror(cls, method)
        visibility = mm.visibility if mm else "public"
        declaring = mm.declaring if mm else cls
        context = f"{cls}::{method}"
        this = VRef(oid, cls)
        failed = False

        if "post" in self.policy.kinds and eff.posts:
            if pre_vals is None:
                pre_vals = tuple(
                    CaptureError("no entry capture for this frame")
                    for _ in eff.capture_chains)
            for bc in eff.posts:
                env = EvalEnv(self.session, self.catalog, self_ref=this,
                              params=dict(zip(bc.param_names, args)),
                              result=result, pre_values=pre_vals,
                              chain_slots=eff.chain_slots)
                out = self._bracket(
                    lambda e=env, bc=bc: evalexpr.check_clause(bc.clause.expr, e))
                blame = None
                if out.verdict == records.FAIL:
                    blame = Blame(records.SERVER, declaring, method, 0)
                self.writer.write_record(
                    phase="exit", context=context, kind="post",
                    label=bc.clause.label, expr=format_expr(bc.clause.expr),
                    verdict=out.verdict, error_code=out.error_code,
                    blame=blame, object_id=oid, frame_id=fid)
                failed = failed or out.verdict == records.FAIL
                if failed and self.policy.fail_fast:
                    return True

        if ("inv" in self.policy.kinds
                and (method == "init" or visibility == "public")):
            failed = self._check_invs(eff, context, "exit", this, fid,
                                      declaring) or failed
        return failed

    def _check_invs(self, eff, context, phase, this, fid, declaring) -> bool:
        failed = False
        method = context.split("::", 1)[1]
        for bc in eff.invs:
            env = EvalEnv(self.session, self.catalog, self_ref=this)
            out = self._bracket(
                lambda e=env, bc=bc: evalexpr.check_clause(bc.clause.expr, e))
            blame = None
            if out.verdict == records.FAIL:
                blame = Blame(records.SERVER, declaring, method, 0)
            self.writer.write_record(
                phase=phase, context=context, kind="inv",
                label=bc.clause.label, expr=format_expr(bc.clause.expr),
                verdict=out.verdict, error_code=out.error_code, blame=blame,
                object_id=this.oid, frame_id=fid)
            failed = failed or out.verdict == records.FAIL
            if failed and self.policy.fail_fast:
                return True
        return failed

    def _check_pres(self, eff, ev, context, this, args, fid) -> bool:
        """Every declared clause gets its own record; when more than one
        type on the chain declares preconditions, a synthetic 'combined'
        record carries the effective (disjunctive) verdict."""
        caller = Blame(records.CLIENT, ev["callerClass"], ev["callerMethod"],
                       ev["callerLine"])
        failed = False
        group_verdicts = []
        first_error: ClauseOutcome | None = None
        for _tname, clauses in eff.pre_groups:
            outs = []
            for bc in clauses:
                env = EvalEnv(self.session, self.catalog, self_ref=this,
                              params=dict(zip(bc.param_names, args)))
                out = self._bracket(
                    lambda e=env, bc=bc: evalexpr.check_clause(bc.clause.expr, e))
                outs.append(out.verdict)
                if out.verdict == records.ERROR and first_error is None:
                    first_error = out
                self.writer.write_record(
                    phase="entry", context=context, kind="pre",
                    label=bc.clause.label, expr=format_expr(bc.clause.expr),
                    verdict=out.verdict, error_code=out.error_code,
                    blame=caller if out.verdict == records.FAIL else None,
                    object_id=this.oid, frame_id=fid)
                failed = failed or out.verdict == records.FAIL
            group_verdicts.append(fold_and(outs))

        if len(eff.pre_groups) > 1:
            total = fold_or(group_verdicts)
            expr_text = format_expr(_disjunction_expr(eff.pre_groups))
            self.writer.write_record(
                phase="entry", context=context, kind="pre", label="combined",
                expr=expr_text, verdict=total,
                error_code=(first_error.error_code
                            if total == records.ERROR else None),
                blame=caller if total == records.FAIL else None,
                object_id=this.oid, frame_id=fid)
            failed = failed or total == records.FAIL
        return failed

    def _merged_params(self, eff, args) -> dict:
        """Binding for pre-state capture. Chains are shared across every
        postcondition on the chain, so all declaring contexts' parameter
        names are merged (leaf-most context wins a name clash)."""
        merged: dict = {}
        for bc in eff.posts:
            merged.update(zip(bc.param_names, args))
        return merged

    def _bracket(self, fn):
        """Optionally verifies the heap digest is unchanged by evaluation."""
        if not self.policy.digest_check:
            return fn()
        before = mirrors.mirror_heap_digest(self.session)
        out = fn()
        after = mirrors.mirror_heap_digest(self.session)
        self.summary.digest_checks += 1
        if before != after:
            self.summary.digest_mismatches += 1
            self.warn("heap digest changed during constraint evaluation")
        return out


def _disjunction_expr(pre_groups):
    def conj(clauses):
        return reduce(lambda a, b: Binary(BinOp.AND, a, b),
                      (bc.clause.expr for bc in clauses))
    return reduce(lambda a, b: Binary(BinOp.OR, a, b),
                  (conj(clauses) for _t, clauses in pre_groups))
