from .evalexpr import (  # noqa: F401
    CaptureError, ClauseOutcome, EvalEnv, EvalError, Snapshot,
    capture_pre_values, check_clause, eval_value, ocl_equal, strip_atpre,
)
from .loop import (  # noqa: F401
    AuditPolicy, AuditSummary, StrictRegistrationError, fold_and, fold_or,
    run_audit,
)
from .records import Blame, ReportWriter  # noqa: F401
from .table import (  # noqa: F401
    BoundClause, ConstraintTable, EffectiveSet, build_constraint_table,
    effective_for, monitored_classes,
)
