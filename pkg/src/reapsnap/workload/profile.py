from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from reapsnap.core.jsonc import load_jsonc
from reapsnap.core.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FunctionProfile:
    name: str
    ws_pages: int
    infra_pages: int
    mean_run_length: float
    unique_fraction: float
    compute_us: float
    layout_seed: int
    stated: tuple[str, ...] = field(default=(), compare=False)

    @property
    def unique_pages(self) -> int:
        return int(math.floor(self.unique_fraction * self.ws_pages + 0.5))

    @property
    def stable_pages(self) -> int:
        return self.ws_pages - self.unique_pages

    def validate(self) -> list[str]:
        where = f"presets.{self.name}"
        problems: list[str] = []
        if self.ws_pages < 0:
            problems.append(f"{where}.ws_pages should be >= 0")
        if not 0 <= self.infra_pages <= self.ws_pages:
            problems.append(f"{where}.infra_pages should be within [0, ws_pages]")
        if not 0.0 <= self.unique_fraction <= 1.0:
            problems.append(f"{where}.unique_fraction should be within [0, 1]")
        if self.mean_run_length < 1:
            problems.append(f"{where}.mean_run_length should be >= 1")
        if self.compute_us < 0:
            problems.append(f"{where}.compute_us should be >= 0")
        if self.layout_seed < 0:
            problems.append(f"{where}.layout_seed should be >= 0")
        return problems

    @classmethod
    def from_dict(cls, name: str, raw: dict[str, Any], page_size: int = 4096) -> FunctionProfile:
        if "ws_pages" in raw:
            ws_pages = int(raw["ws_pages"])
        else:
            ws_pages = int(round(float(raw.get("ws_mb", 0)) * (1 << 20) / page_size))
        if "infra_pages" in raw:
            infra = int(raw["infra_pages"])
        else:
            infra = int(round(float(raw.get("infra_mb", 0)) * (1 << 20) / page_size))
        return cls(
            name=name,
            ws_pages=ws_pages,
            infra_pages=infra,
            mean_run_length=float(raw.get("mean_run_length", 1.0)),
            unique_fraction=float(raw.get("unique_fraction", 0.0)),
            compute_us=float(raw.get("compute_us", 0.0)),
            layout_seed=int(raw.get("layout_seed", 0)),
            stated=tuple(raw.get("stated", ())),
        )


def load_presets(path: str | Path, page_size: int = 4096) -> dict[str, FunctionProfile]:
    """Load the function preset table (JSONC) keyed by function name."""
    data = load_jsonc(Path(path))
    table = data.get("presets", data)
    if not isinstance(table, dict) or not table:
        raise ConfigError(f"{path}: no presets defined")
    presets: dict[str, FunctionProfile] = {}
    problems: list[str] = []
    for name, raw in table.items():
        if not isinstance(raw, dict):
            problems.append(f"presets.{name} should be an object")
            continue
        try:
            profile = FunctionProfile.from_dict(name, raw, page_size)
        except (TypeError, ValueError) as exc:
            problems.append(f"presets.{name}: {exc}")
            continue
        problems.extend(profile.validate())
        presets[name] = profile
    if problems:
        raise ConfigError(problems)
    logger.debug("Loaded %d presets from %s", len(presets), path)
    return presets


__all__ = ["FunctionProfile", "load_presets"]
