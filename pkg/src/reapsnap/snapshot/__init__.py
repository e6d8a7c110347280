from reapsnap.snapshot.content import generate_pages, regenerate_page
from reapsnap.snapshot.image import SnapshotImage, create_synthetic_image, load_image
from reapsnap.snapshot.trace import PageTrace, read_trace, write_trace
from reapsnap.snapshot.working_set import (
    WorkingSetFile,
    WsValidation,
    build_working_set,
    read_working_set,
    validate_working_set,
    write_working_set,
)

__all__ = [
    "PageTrace",
    "SnapshotImage",
    "WorkingSetFile",
    "WsValidation",
    "build_working_set",
    "create_synthetic_image",
    "generate_pages",
    "load_image",
    "read_trace",
    "read_working_set",
    "regenerate_page",
    "validate_working_set",
    "write_trace",
    "write_working_set",
]
