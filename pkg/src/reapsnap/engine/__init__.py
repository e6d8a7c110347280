from reapsnap.engine.concurrent import ConcurrentResult, run_concurrent
from reapsnap.engine.params import EngineParams
from reapsnap.engine.policy import WorkingSetPolicy, WorkingSetVerdict, assess_working_set
from reapsnap.engine.report import FetchStrategy, RestoreMode, RestoreReport
from reapsnap.engine.session import (
    RestoreSession,
    access_page,
    calibrate_base,
    cold_invocation,
    finalize_record,
    run_invocation,
    start_session,
)

__all__ = [
    "ConcurrentResult",
    "EngineParams",
    "FetchStrategy",
    "RestoreMode",
    "RestoreReport",
    "RestoreSession",
    "WorkingSetPolicy",
    "WorkingSetVerdict",
    "access_page",
    "assess_working_set",
    "calibrate_base",
    "cold_invocation",
    "finalize_record",
    "run_concurrent",
    "run_invocation",
    "start_session",
]
