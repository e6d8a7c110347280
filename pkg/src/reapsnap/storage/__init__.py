from reapsnap.storage.calibration import (
    DEFAULT_CALIBRATION,
    MIB,
    Calibration,
    CalibrationPoint,
    load_calibration,
    write_calibration,
)
from reapsnap.storage.model import StorageModel
from reapsnap.storage.shared import SharedDisk, SharedRequest, shared_schedule

__all__ = [
    "Calibration",
    "CalibrationPoint",
    "DEFAULT_CALIBRATION",
    "MIB",
    "SharedDisk",
    "SharedRequest",
    "StorageModel",
    "load_calibration",
    "shared_schedule",
    "write_calibration",
]
