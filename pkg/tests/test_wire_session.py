"""Protocol conformance against a live VM: handshake, lockstep replies,
suspension states, introspection payloads, and the closed error taxonomy."""

import socket
import subprocess
import threading
import time

import pytest

from conftest import FIXTURES, advance_to_entry, drain_to_death, launch_session
from oclaudit.values import VInt, VRef, VSeq, VStr
from oclaudit.wire import framing
from oclaudit.wire.protocol import decode_value, encode_value
from oclaudit.wire.session import (
    ConnectorConfig, Session, SessionError, VmErrorReply, open_session,
)

PROBE = FIXTURES / "probe.mob"
SPIN = FIXTURES / "spin_demo.mob"
IFACE = FIXTURES / "iface_demo.mob"
STACK = FIXTURES / "stack_demo.mob"


@pytest.fixture
def session():
    s = launch_session(PROBE)
    yield s
    s.close()


def set_policy(s, classes, entry=True, exit_=True):
    return s.request({"type": "SetEventPolicy", "classes": list(classes),
                      "entry": entry, "exit": exit_})


def test_vmstart_arrives_suspended(session):
    es = session.next_event_set()
    assert es["suspend"] is True
    assert es["events"] == [{"type": "VmStart"}]


def test_reply_ids_echo_requests(session):
    session.next_event_set()
    for expected_id in (1, 2, 3):
        reply = session.request({"type": "HeapDigest"})
        assert reply["id"] == expected_id
        assert reply["type"] == "DigestReply"


def test_list_classes_names_classes_and_interfaces():
    s = launch_session(IFACE)
    try:
        s.next_event_set()
        reply = s.request({"type": "ListClasses"})
        assert reply["type"] == "ClassList"
        assert reply["classes"] == ["Box", "BigBox", "Sized"]
    finally:
        s.close()


def test_class_info_has_full_dispatch_table():
    s = launch_session(IFACE)
    try:
        s.next_event_set()
        info = s.request({"type": "ClassInfo", "class": "BigBox"})
        assert info["name"] == "BigBox"
        assert info["base"] == "Box"
        assert info["interfaces"] == []  # own declarations only
        assert info["fields"] == []  # n belongs to Box
        declaring = {m["name"]: m["declaring"] for m in info["methods"]}
        assert declaring == {"init": "Box", "size": "Box", "grow": "BigBox"}
        by_name = {m["name"]: m for m in info["methods"]}
        assert by_name["size"]["pure"] is True
        assert by_name["grow"]["pure"] is False
        assert by_name["grow"]["params"] == ["d"]

        base = s.request({"type": "ClassInfo", "class": "Box"})
        assert base["base"] is None
        assert base["interfaces"] == ["Sized"]
        assert base["fields"] == [{"name": "n", "visibility": "private"}]
        assert all(m["declaring"] == "Box" for m in base["methods"])
    finally:
        s.close()


def test_interface_class_info():
    s = launch_session(IFACE)
    try:
        s.next_event_set()
        info = s.request({"type": "ClassInfo", "class": "Sized"})
        assert info["base"] is None
        assert info["fields"] == []
        assert info["methods"] == [{
            "name": "size", "params": [], "pure": True,
            "visibility": "public", "declaring": "Sized",
        }]
    finally:
        s.close()


def test_unknown_class_error(session):
    session.next_event_set()
    with pytest.raises(VmErrorReply) as exc:
        session.request({"type": "ClassInfo", "class": "Ghost"})
    assert exc.value.code == "UNKNOWN_CLASS"


def _suspend_at_poke(session, nth=1):
    session.next_event_set()
    set_policy(session, ["Probe"])
    session.resume_all()
    return advance_to_entry(session, None, "Probe", "poke", nth)


def test_read_field_sees_private_state(session):
    ev = _suspend_at_poke(session)
    oid = ev["thisId"]
    read = lambda f: decode_value(session.request(
        {"type": "ReadField", "objId": oid, "field": f})["value"])
    assert read("a") == VInt(7)
    assert read("hidden") == VInt(42)  # agent bypasses visibility
    obj = read("obj")
    assert isinstance(obj, VRef) and obj.class_name == "Peer"
    v = read("v")
    assert isinstance(v, VSeq)
    seq = session.request({"type": "ReadSeq", "seqId": v.oid})
    assert [decode_value(e) for e in seq["elements"]] == [
        VInt(1), VInt(2), VInt(3)]


def test_read_errors(session):
    ev = _suspend_at_poke(session)
    oid = ev["thisId"]
    with pytest.raises(VmErrorReply) as e1:
        session.request({"type": "ReadField", "objId": oid, "field": "zz"})
    assert e1.value.code == "UNKNOWN_FIELD"
    with pytest.raises(VmErrorReply) as e2:
        session.request({"type": "ReadField", "objId": 99999, "field": "a"})
    assert e2.value.code == "UNKNOWN_OBJECT"
    with pytest.raises(VmErrorReply) as e3:
        session.request({"type": "ReadSeq", "seqId": oid})
    assert e3.value.code == "UNKNOWN_OBJECT"


def test_invoke_pure_methods(session):
    ev = _suspend_at_poke(session)
    oid = ev["thisId"]

    def invoke(method, *args):
        return decode_value(session.request({
            "type": "InvokeMethod", "objId": oid, "method": method,
            "args": [encode_value(a) for a in args]})["value"])

    assert invoke("count") == VInt(3)
    assert invoke("sum2", VInt(2), VInt(3)) == VInt(5)
    assert invoke("ident", VStr("xy")) == VStr("xy")


@pytest.mark.parametrize("method,args,code", [
    ("bump", [], "PURITY"),
    ("die", [], "TARGET_EXCEPTION"),
    ("nosuch", [], "UNKNOWN_METHOD"),
    ("sum2", [VInt(1)], "ARITY"),
])
def test_invoke_errors(session, method, args, code):
    ev = _suspend_at_poke(session)
    with pytest.raises(VmErrorReply) as exc:
        session.request({"type": "InvokeMethod", "objId": ev["thisId"],
                         "method": method,
                         "args": [encode_value(a) for a in args]})
    assert exc.value.code == code


def test_invoke_on_missing_object(session):
    _suspend_at_poke(session)
    with pytest.raises(VmErrorReply) as exc:
        session.request({"type": "InvokeMethod", "objId": 424242,
                         "method": "count", "args": []})
    assert exc.value.code == "UNKNOWN_OBJECT"


def test_heap_digest_ignores_pure_invokes_but_not_mutation(session):
    ev = _suspend_at_poke(session, nth=1)
    d1 = session.request({"type": "HeapDigest"})["hex64"]
    assert len(d1) == 16 and int(d1, 16) >= 0
    session.request({"type": "InvokeMethod", "objId": ev["thisId"],
                     "method": "count", "args": []})
    assert session.request({"type": "HeapDigest"})["hex64"] == d1
    session.resume_all()
    advance_to_entry(session, None, "Probe", "poke", 1)  # nth is per-call
    d2 = session.request({"type": "HeapDigest"})["hex64"]
    assert d2 != d1  # first poke ran in between


def test_unknown_type_answered_without_closing(session):
    session.next_event_set()
    framing.write_frame(session.sock, {"type": "Wobble", "id": 77})
    reply = framing.read_frame(session.sock)
    assert reply == {"type": "Error", "id": 77, "code": "UNKNOWN_TYPE",
                     "msg": reply["msg"]}
    assert "Wobble" in reply["msg"]
    # the connection is still serviceable afterwards
    assert session.request({"type": "ListClasses"})["type"] == "ClassList"


def test_auditor_answers_unknown_types_too():
    ours, theirs = socket.socketpair()
    try:
        framing.write_frame(theirs, {"type": "Gizmo", "id": 5})
        framing.write_frame(theirs, {"type": "Ok", "id": 1})
        s = Session(ours)
        assert s.request({"type": "Suspend"}) == {"type": "Ok", "id": 1}
        cmd = framing.read_frame(theirs)
        assert cmd == {"type": "Suspend", "id": 1}
        err = framing.read_frame(theirs)
        assert err["type"] == "Error" and err["code"] == "UNKNOWN_TYPE"
        assert err["id"] == 5
    finally:
        ours.close()
        theirs.close()


def test_running_vm_rejects_inspection_but_accepts_suspend():
    s = launch_session(SPIN)
    try:
        s.next_event_set()
        set_policy(s, ["Gate"], entry=True, exit_=False)
        s.resume_all()
        advance_to_entry(s, None, "Gate", "open", 1)
        s.resume_all()  # VM now spins through Toil.tick safepoints
        with pytest.raises(VmErrorReply) as exc:
            s.request({"type": "ListClasses"})
        assert exc.value.code == "NOT_SUSPENDED"

        warnings = []
        s.resume_all(warnings.append)  # Resume while running is tolerated
        assert warnings and "not suspended" in warnings[0]

        assert s.request({"type": "Suspend"})["type"] == "Ok"
        assert s.request({"type": "ListClasses"})["classes"] == [
            "Gate", "Toil"]
        s.resume_all()

        events, death = drain_to_death(s)
        entries = [e for e in events if e["type"] == "MethodEntry"]
        assert [e["method"] for e in entries] == ["open"]
        assert death["exitStatus"] == 0
        # monitored entries delivered: Gate.init, open#1, open#2
        assert death["entryCount"] == 3
    finally:
        s.close()


def test_suspend_is_idempotent_while_suspended(session):
    session.next_event_set()
    assert session.request({"type": "Suspend"})["type"] == "Ok"
    assert session.request({"type": "Suspend"})["type"] == "Ok"
    assert session.request({"type": "ListClasses"})["type"] == "ClassList"


def test_disconnect_lets_the_vm_finish_alone():
    s = launch_session(STACK)
    try:
        s.next_event_set()
        set_policy(s, ["BoundedStack"])
        assert s.request({"type": "Disconnect"})["type"] == "Ok"
    finally:
        s.close()
    assert s.vm_proc.wait(timeout=10) == 0
    with open(s.vm_stdout_path) as f:
        got = f.read()
    assert got == (FIXTURES / "golden_stack_stdout.txt").read_text()


def test_event_payloads_carry_caller_args_and_return(session):
    session.next_event_set()
    set_policy(session, ["Probe"])
    session.resume_all()
    entry = advance_to_entry(session, None, "Probe", "poke", 1)
    assert entry["args"] == [{"k": "int", "v": 1}]
    assert entry["callerClass"] == "Main"
    assert entry["callerMethod"] == "main"
    assert entry["callerLine"] > 0
    assert isinstance(entry["thisId"], int)

    session.resume_all()
    es = session.next_event_set()
    assert es["suspend"] is True
    (exit_ev,) = es["events"]
    assert exit_ev["type"] == "MethodExit"
    assert exit_ev["frameId"] == entry["frameId"]
    assert exit_ev["thisId"] == entry["thisId"]
    assert exit_ev["returnValue"] == {"k": "int", "v": 8}


def test_policy_filters_by_exact_dynamic_class():
    s = launch_session(IFACE)
    try:
        s.next_event_set()
        # BigBox objects never match a policy naming only the base class;
        # closure over subtypes is the monitoring side's job.
        set_policy(s, ["Box"])
        s.resume_all()
        events, death = drain_to_death(s)
        assert [e["type"] for e in events] == ["VmDeath"]
        assert death["entryCount"] == 0
    finally:
        s.close()


def test_ill_typed_policy_closes_the_connection():
    s = launch_session(PROBE)
    try:
        s.next_event_set()
        with pytest.raises(SessionError):
            s.request({"type": "SetEventPolicy", "classes": "Probe",
                       "entry": True, "exit": True})
    finally:
        s.close()


def test_attach_finds_running_vm_not_suspended():
    from oclaudit.wire.session import _free_port
    port = _free_port()
    proc = subprocess.Popen(
        ["minivm", "run", "--debug-listen", str(port), str(SPIN)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    s = None
    try:
        deadline = time.monotonic() + 10.0
        while True:
            try:
                s = open_session(ConnectorConfig(mode="attach", port=port))
                break
            except SessionError:
                assert proc.poll() is None, "VM died before attach"
                assert time.monotonic() < deadline, "attach timed out"
                time.sleep(0.025)
        es = s.next_event_set()
        assert es["suspend"] is False  # late attach does not stop the VM
        assert es["events"] == [{"type": "VmStart"}]
        assert s.request({"type": "Suspend"})["type"] == "Ok"
        assert "Toil" in s.request({"type": "ListClasses"})["classes"]
        s.resume_all()
        _events, death = drain_to_death(s)
        assert death["exitStatus"] == 0
    finally:
        if s is not None:
            s.close()
        out, err = proc.communicate(timeout=10)
    assert proc.returncode == 0
    assert out == "2\n"
    assert err == ""


def test_listen_connector_accepts_dialing_vm():
    from oclaudit.wire.session import _free_port
    port = _free_port()
    box = {}

    def accept():
        box["session"] = open_session(
            ConnectorConfig(mode="listen", port=port))

    t = threading.Thread(target=accept)
    t.start()
    time.sleep(0.05)
    proc = subprocess.Popen(
        ["minivm", "run", "--debug-connect", f"127.0.0.1:{port}",
         "--suspend", str(STACK)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    t.join(timeout=10)
    assert not t.is_alive()
    s = box["session"]
    try:
        es = s.next_event_set()
        assert es["suspend"] is True
        assert es["events"] == [{"type": "VmStart"}]
        s.resume_all()
        _events, death = drain_to_death(s)
        assert death["exitStatus"] == 0
    finally:
        s.close()
        out, _err = proc.communicate(timeout=10)
    assert proc.returncode == 0
    assert out == (FIXTURES / "golden_stack_stdout.txt").read_text()


def test_handshake_mismatch_is_rejected():
    lsock = socket.socket()
    lsock.bind(("127.0.0.1", 0))
    lsock.listen(1)
    port = lsock.getsockname()[1]

    def bad_peer():
        conn, _ = lsock.accept()
        conn.recv(8)
        conn.sendall(b"MDWP-999")
        conn.close()

    t = threading.Thread(target=bad_peer)
    t.start()
    try:
        with pytest.raises(SessionError) as exc:
            open_session(ConnectorConfig(mode="attach", port=port))
        assert "mismatch" in str(exc.value)
    finally:
        t.join(timeout=5)
        lsock.close()


def test_session_dies_on_truncated_frame():
    ours, theirs = socket.socketpair()
    try:
        theirs.sendall(b"\x00\x00\x00\x30" + b'{"type":"Ok"')
        theirs.close()
        s = Session(ours)
        with pytest.raises(SessionError):
            s.request({"type": "Suspend"})
        assert s.dead
    finally:
        ours.close()
