"""Runtime contract auditor for MiniObj programs.

Checks class invariants and method pre/postconditions, written in a small
OCL-style constraint language, against a live program through a debug wire
protocol. Violations are blamed on the caller (broken precondition) or the
implementation (broken postcondition or invariant).
"""

__version__ = "0.1.0"

PROTOCOL_MAGIC = "MDWP-001"
