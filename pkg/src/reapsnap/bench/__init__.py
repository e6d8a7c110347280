from reapsnap.bench.analyze import AnalyzedInput, cmd_analyze
from reapsnap.bench.coldstart import ColdStartResult, cmd_coldstart
from reapsnap.bench.opt_steps import OptStepRow, cmd_opt_steps
from reapsnap.bench.results import ResultsWriter
from reapsnap.bench.sweep import SweepPoint, cmd_sweep_concurrency
from reapsnap.bench.workspace import BenchWorkspace, RecordedFunction

__all__ = [
    "AnalyzedInput",
    "BenchWorkspace",
    "ColdStartResult",
    "OptStepRow",
    "RecordedFunction",
    "ResultsWriter",
    "SweepPoint",
    "cmd_analyze",
    "cmd_coldstart",
    "cmd_opt_steps",
    "cmd_sweep_concurrency",
]
