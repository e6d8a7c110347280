from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from reapsnap.core.jsonc import load_jsonc
from reapsnap.engine.params import EngineParams
from reapsnap.engine.policy import WorkingSetPolicy

logger = logging.getLogger(__name__)

PROFILE_ENV = "REAPSNAP_PROFILE"
OUT_ENV = "REAPSNAP_OUT"
DEFAULT_CONCURRENCY = (1, 2, 4, 8, 16, 32, 64)
OUTPUT_FORMATS = ("csv", "json")


@dataclass
class ImageConfig:
    num_pages: int = 65536
    page_size: int = 4096
    content_seed: int = 7
    vmm_state_bytes: int = 3 << 20
    directory: Path | None = None


@dataclass
class StorageConfig:
    calibration_file: Path | None = None


@dataclass
class ExperimentConfig:
    functions: list[str] = field(default_factory=list)
    presets_file: Path = Path("presets.jsonc")
    repeats: int = 3
    record_seed: int = 1
    input_seed: int = 2
    concurrency: list[int] = field(default_factory=lambda: list(DEFAULT_CONCURRENCY))
    out_dir: Path = Path("results")
    format: str = "csv"


@dataclass
class ModuleConfig:
    enabled: bool = True
    required: bool = False


@dataclass
class Config:
    image: ImageConfig = field(default_factory=ImageConfig)
    engine: EngineParams = field(default_factory=EngineParams)
    rerecord: WorkingSetPolicy = field(default_factory=WorkingSetPolicy)
    storage: StorageConfig = field(default_factory=StorageConfig)
    experiments: ExperimentConfig = field(default_factory=ExperimentConfig)
    modules: dict[str, ModuleConfig] = field(default_factory=dict)
    settings: dict[str, Any] = field(default_factory=dict)
    source: Path | None = None
    # Values that could not be coerced while loading; reported by validate_config.
    load_problems: list[str] = field(default_factory=list)

    @staticmethod
    def from_dict(raw: dict, base_dir: Path | None = None) -> Config:
        base = base_dir or Path.cwd()
        problems: list[str] = []

        def coerce(section: dict, key: str, kind, default, where: str):
            value = section.get(key, default)
            if value is None:
                return default
            try:
                return kind(value)
            except (TypeError, ValueError):
                problems.append(f"{where}.{key} should be {kind.__name__} (got {value!r})")
                return default

        def resolve(value: str | None) -> Path | None:
            if not value:
                return None
            path = Path(value).expanduser()
            return path if path.is_absolute() else base / path

        image_raw = raw.get("image", {}) or {}
        image = ImageConfig(
            num_pages=coerce(image_raw, "num_pages", int, 65536, "image"),
            page_size=coerce(image_raw, "page_size", int, 4096, "image"),
            content_seed=coerce(image_raw, "content_seed", int, 7, "image"),
            vmm_state_bytes=coerce(image_raw, "vmm_state_bytes", int, 3 << 20, "image"),
            directory=resolve(image_raw.get("directory")),
        )

        engine_raw = dict(raw.get("engine", {}) or {})
        rerecord_raw = engine_raw.pop("rerecord", {}) or {}
        try:
            engine = EngineParams.from_dict(engine_raw)
        except (TypeError, ValueError) as exc:
            problems.append(f"engine: {exc}")
            engine = EngineParams()
        rerecord = WorkingSetPolicy(
            max_residual_ratio=coerce(rerecord_raw, "max_residual_ratio", float, 0.5, "engine.rerecord"),
            min_usage=coerce(rerecord_raw, "min_usage", float, 0.5, "engine.rerecord"),
        )

        storage_raw = raw.get("storage", {}) or {}
        storage = StorageConfig(calibration_file=resolve(storage_raw.get("calibration_file")))

        exp_raw = raw.get("experiments", {}) or {}
        functions = exp_raw.get("functions") or []
        if isinstance(functions, str):
            functions = [] if functions == "all" else [functions]
        concurrency_raw = exp_raw.get("concurrency", list(DEFAULT_CONCURRENCY))
        try:
            concurrency = [int(c) for c in concurrency_raw]
        except (TypeError, ValueError):
            problems.append(f"experiments.concurrency should be a list of integers (got {concurrency_raw!r})")
            concurrency = list(DEFAULT_CONCURRENCY)
        experiments = ExperimentConfig(
            functions=[str(f) for f in functions],
            presets_file=resolve(exp_raw.get("presets_file", "presets.jsonc")) or base / "presets.jsonc",
            repeats=coerce(exp_raw, "repeats", int, 3, "experiments"),
            record_seed=coerce(exp_raw, "record_seed", int, 1, "experiments"),
            input_seed=coerce(exp_raw, "input_seed", int, 2, "experiments"),
            concurrency=concurrency,
            out_dir=Path(exp_raw.get("out_dir", "results")),
            format=str(exp_raw.get("format", "csv")),
        )

        modules: dict[str, ModuleConfig] = {}
        for name, mod in (raw.get("modules", {}) or {}).items():
            modules[name] = ModuleConfig(
                enabled=bool(mod.get("enabled", True)),
                required=bool(mod.get("required", False)),
            )

        return Config(
            image=image,
            engine=engine,
            rerecord=rerecord,
            storage=storage,
            experiments=experiments,
            modules=modules,
            settings=raw.get("settings", {}) or {},
            load_problems=problems,
        )


def default_config_path() -> Path:
    repo_root = Path(__file__).resolve().parents[3]
    return repo_root / "config" / "settings.jsonc"


def load_config(path: Path | None = None) -> Config:
    config_path = Path(path) if path else default_config_path()
    if config_path.exists():
        raw = load_jsonc(config_path)
    elif path is None:
        logger.warning("No settings file at %s; using built-in defaults", config_path)
        raw = {}
    else:
        raise FileNotFoundError(f"config file not found: {config_path}")
    raw = _apply_profile_overrides(raw)
    config = Config.from_dict(raw, base_dir=config_path.parent)
    config.source = config_path

    out_override = os.getenv(OUT_ENV)
    if out_override:
        config.experiments.out_dir = Path(out_override)

    for warning in validate_config(config):
        logger.warning("Config warning: %s", warning)
    return config


def _apply_profile_overrides(raw: dict) -> dict:
    profiles = raw.get("profiles", {})
    if not isinstance(profiles, dict):
        return raw

    profile = os.getenv(PROFILE_ENV) or raw.get("profile")
    if not profile:
        return raw
    profile = str(profile)
    overrides = profiles.get(profile)
    if not isinstance(overrides, dict):
        logger.warning("Profile '%s' not found; skipping overrides", profile)
        return raw

    merged = dict(raw)
    _deep_merge(merged, overrides)
    logger.info("Applied profile overrides: %s", profile)
    return merged


def _deep_merge(target: dict, overrides: dict) -> None:
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(target.get(key), dict):
            target[key] = dict(target[key])
            _deep_merge(target[key], value)
        else:
            target[key] = value


def validate_config(config: Config) -> list[str]:
    warnings: list[str] = list(config.load_problems)

    image = config.image
    if image.num_pages < 1:
        warnings.append("image.num_pages should be >= 1")
    if image.page_size < 512 or image.page_size & (image.page_size - 1):
        warnings.append("image.page_size should be a power of two >= 512")
    if image.vmm_state_bytes < 0:
        warnings.append("image.vmm_state_bytes should be >= 0")
    if image.content_seed < 0:
        warnings.append("image.content_seed should be >= 0")

    warnings.extend(config.engine.validate())
    warnings.extend(config.rerecord.validate())

    calibration_file = config.storage.calibration_file
    if calibration_file is not None and not calibration_file.exists():
        warnings.append(f"storage.calibration_file does not exist: {calibration_file}")

    exp = config.experiments
    if exp.repeats < 1:
        warnings.append("experiments.repeats should be >= 1")
    if exp.record_seed < 0:
        warnings.append("experiments.record_seed should be >= 0")
    if exp.input_seed < 0:
        warnings.append("experiments.input_seed should be >= 0")
    if exp.record_seed == exp.input_seed:
        warnings.append("experiments.input_seed should differ from record_seed")
    if not exp.concurrency:
        warnings.append("experiments.concurrency should list at least one count")
    elif any(c < 1 for c in exp.concurrency):
        warnings.append("experiments.concurrency counts should be >= 1")
    if exp.format not in OUTPUT_FORMATS:
        warnings.append(f"experiments.format should be one of {', '.join(OUTPUT_FORMATS)}")
    if not exp.presets_file.exists():
        warnings.append(f"experiments.presets_file does not exist: {exp.presets_file}")

    level = str((config.settings.get("logging") or {}).get("level", "INFO")).upper()
    if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
        warnings.append("settings.logging.level should be a standard logging level")
    return warnings


__all__ = [
    "Config",
    "ExperimentConfig",
    "ImageConfig",
    "ModuleConfig",
    "OUT_ENV",
    "PROFILE_ENV",
    "StorageConfig",
    "default_config_path",
    "load_config",
    "validate_config",
]
