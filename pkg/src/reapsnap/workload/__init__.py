from reapsnap.workload.generator import Layout, derive_invocation, import_trace, synthesize_layout
from reapsnap.workload.profile import FunctionProfile, load_presets
from reapsnap.workload.sequence import (
    Access,
    AccessKind,
    AccessSequence,
    Phase,
    read_sequence,
    write_sequence,
)

__all__ = [
    "Access",
    "AccessKind",
    "AccessSequence",
    "FunctionProfile",
    "Layout",
    "Phase",
    "derive_invocation",
    "import_trace",
    "load_presets",
    "read_sequence",
    "synthesize_layout",
    "write_sequence",
]
