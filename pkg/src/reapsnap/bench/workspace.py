"""Shared state for benchmark commands: image, presets, storage and recordings."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from reapsnap.core.config import Config
from reapsnap.core.errors import ConfigError, ImageError
from reapsnap.engine.report import RestoreMode, RestoreReport
from reapsnap.engine.session import TRACE_FILE, WS_FILE, cold_invocation, finalize_record
from reapsnap.snapshot.image import META_FILE, SnapshotImage, create_synthetic_image, load_image
from reapsnap.snapshot.trace import PageTrace, read_trace
from reapsnap.snapshot.working_set import WorkingSetFile, read_working_set
from reapsnap.storage.calibration import DEFAULT_CALIBRATION, load_calibration
from reapsnap.storage.model import StorageModel
from reapsnap.workload.generator import Layout, derive_invocation, synthesize_layout
from reapsnap.workload.profile import FunctionProfile, load_presets
from reapsnap.workload.sequence import AccessSequence

logger = logging.getLogger(__name__)

RECORD_META = "record.json"


@dataclass(frozen=True)
class RecordedFunction:
    function: str
    trace: PageTrace
    ws: WorkingSetFile
    report: RestoreReport
    sequence: AccessSequence


class BenchWorkspace:
    def __init__(
        self,
        config: Config,
        *,
        out_dir: str | Path | None = None,
        storage: StorageModel | None = None,
    ) -> None:
        self.config = config
        self.out_dir = Path(out_dir) if out_dir is not None else Path(config.experiments.out_dir)
        self.params = config.engine
        if storage is None:
            calibration_file = config.storage.calibration_file
            calibration = load_calibration(calibration_file) if calibration_file else DEFAULT_CALIBRATION
            storage = StorageModel(calibration)
        self.storage = storage
        self.presets = load_presets(config.experiments.presets_file, config.image.page_size)
        self._image: SnapshotImage | None = None
        self._layouts: dict[str, Layout] = {}
        self._records: dict[str, RecordedFunction] = {}

    # -- image -----------------------------------------------------------

    @property
    def image_dir(self) -> Path:
        return self.config.image.directory or self.out_dir / "snapshot"

    def create_image(self, *, force: bool = False) -> SnapshotImage:
        if not force and (self.image_dir / META_FILE).exists():
            return self.image()
        cfg = self.config.image
        self._image = create_synthetic_image(
            self.image_dir,
            num_pages=cfg.num_pages,
            page_size=cfg.page_size,
            content_seed=cfg.content_seed,
            vmm_state_len=cfg.vmm_state_bytes,
        )
        self._records.clear()
        return self._image

    def image(self) -> SnapshotImage:
        """The configured image, loaded from disk or created on first use."""
        if self._image is not None:
            return self._image
        cfg = self.config.image
        if (self.image_dir / META_FILE).exists():
            image = load_image(self.image_dir)
            geometry = (image.num_pages, image.page_size, image.content_seed, image.vmm_state_len)
            wanted = (cfg.num_pages, cfg.page_size, cfg.content_seed, cfg.vmm_state_bytes)
            if geometry != wanted:
                raise ImageError(
                    f"image at {self.image_dir} has geometry {geometry}, config asks for {wanted}; "
                    "run 'snapshot create --force' or point image.directory elsewhere"
                )
            self._image = image
            return image
        return self.create_image(force=True)

    # -- workloads -------------------------------------------------------

    def profile(self, name: str) -> FunctionProfile:
        try:
            return self.presets[name]
        except KeyError:
            known = ", ".join(sorted(self.presets))
            raise ConfigError(f"unknown function preset {name!r} (known: {known})") from None

    def selected_functions(self) -> list[str]:
        names = self.config.experiments.functions or list(self.presets)
        for name in names:
            self.profile(name)
        return names

    def layout(self, name: str) -> Layout:
        if name not in self._layouts:
            self._layouts[name] = synthesize_layout(self.profile(name), self.config.image.num_pages)
        return self._layouts[name]

    def record_sequence(self, name: str) -> AccessSequence:
        return derive_invocation(self.profile(name), self.layout(name), self.config.experiments.record_seed)

    def input_sequence(self, name: str, input_seed: int | None = None) -> AccessSequence:
        """A cold invocation whose input pages never overlap the recorded invocation's."""
        seed = self.config.experiments.input_seed if input_seed is None else input_seed
        recorded = self.record_sequence(name).page_array()
        return derive_invocation(self.profile(name), self.layout(name), seed, exclude=recorded)

    # -- record artifacts ------------------------------------------------

    def record_dir(self, name: str) -> Path:
        return self.out_dir / "record" / name

    def record(self, name: str, *, force: bool = False) -> RecordedFunction:
        """Run (or reuse) the record phase for ``name``; artifacts land in record_dir."""
        if not force and name in self._records:
            return self._records[name]
        if not force:
            loaded = self._load_record(name)
            if loaded is not None:
                self._records[name] = loaded
                return loaded

        image = self.image()
        seq = self.record_sequence(name)
        session, report = cold_invocation(
            image, RestoreMode.RECORD, self.storage, self.params, seq, function=name
        )
        target = self.record_dir(name)
        trace, ws = finalize_record(session, target)
        meta = {"function": name, "image_id": image.image_id, "report": report.to_dict()}
        (target / RECORD_META).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        recorded = RecordedFunction(name, trace, ws, report, seq)
        self._records[name] = recorded
        return recorded

    def _load_record(self, name: str) -> RecordedFunction | None:
        target = self.record_dir(name)
        meta_path = target / RECORD_META
        if not meta_path.exists():
            return None
        image = self.image()
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if meta.get("image_id") != image.image_id:
            logger.warning("Recorded artifacts for %s belong to another image; re-recording", name)
            return None
        trace = read_trace(target / TRACE_FILE, expected_page_size=image.page_size, image_id=image.image_id)
        seq = self.record_sequence(name)
        expected = seq.first_touch_pages()
        if not np.array_equal(trace.pages, expected[expected != 0]):
            logger.warning("Recorded trace for %s no longer matches its preset; re-recording", name)
            return None
        ws = read_working_set(target / WS_FILE, trace)
        report = RestoreReport.from_dict(meta["report"])
        logger.info("Reusing recorded working set for %s from %s", name, target)
        return RecordedFunction(name, trace, ws, report, seq)


__all__ = ["BenchWorkspace", "RECORD_META", "RecordedFunction"]
