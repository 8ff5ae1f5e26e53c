"""JSON scenario files and run manifests.

A scenario file has five optional sections (``factory``, ``deployment``,
``blockage``, ``radio``, ``engine``); anything omitted keeps its built-in
default. Power ratios may be given in dB (``penetration_loss_db``,
``shelf_loss_db``) or linear (``penetration_v``, ``shelf_loss_omega``); they
are converted once here and written back out linear so a dump/load round
trip is exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

from .blockage import BlockageModel
from .channel import RadioConfig
from .engine import ScenarioConfig
from .geometry import FactoryLayout

SECTIONS = ("factory", "deployment", "blockage", "radio", "engine")
_DEPLOYMENT_KEYS = ("num_irs_M", "total_elements_N", "irs_height_h")
_ENGINE_KEYS = ("mode", "n_blockage_drops", "n_fading_draws", "master_seed", "ue_grid_resolution")


class ConfigError(ValueError):
    pass


def _pick(section: dict, allowed, name: str) -> dict:
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    return dict(section)


def _loss_to_linear(section: dict, db_key: str, lin_key: str):
    if db_key in section and lin_key in section:
        raise ConfigError(f"give either {db_key} or {lin_key}, not both")
    if db_key in section:
        section[lin_key] = 10.0 ** (-float(section.pop(db_key)) / 10.0)


def config_from_dict(data: dict) -> ScenarioConfig:
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    try:
        fac = _pick(data.get("factory", {}), [f.name for f in fields(FactoryLayout)], "factory")
        layout = FactoryLayout(**fac)

        blk = dict(data.get("blockage", {}))
        _loss_to_linear(blk, "penetration_loss_db", "penetration_v")
        _loss_to_linear(blk, "shelf_loss_db", "shelf_loss_omega")
        allowed = [f.name for f in fields(BlockageModel) if f.name != "min_height"]
        blk = _pick(blk, allowed, "blockage")
        model = BlockageModel(min_height=layout.ue_height_TU, **blk)

        rad = _pick(data.get("radio", {}), [f.name for f in fields(RadioConfig)], "radio")
        radio = RadioConfig(**rad)

        dep = _pick(data.get("deployment", {}), _DEPLOYMENT_KEYS, "deployment")
        eng = _pick(data.get("engine", {}), _ENGINE_KEYS, "engine")
        return ScenarioConfig(layout=layout, blockage=model, radio=radio, **dep, **eng)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_to_dict(cfg: ScenarioConfig) -> dict:
    blk = asdict(cfg.blockage)
    blk.pop("min_height")
    return {
        "factory": asdict(cfg.layout),
        "deployment": {k: getattr(cfg, k) for k in _DEPLOYMENT_KEYS},
        "blockage": blk,
        "radio": asdict(cfg.radio),
        "engine": {k: getattr(cfg, k) for k in _ENGINE_KEYS},
    }


def load_config(path) -> ScenarioConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return config_from_dict(data)


def dump_config(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    code_version: str = field(default_factory=code_version)
    extra: dict = field(default_factory=dict)
    started: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    finished: str | None = None
    outputs: list = field(default_factory=list)

    @property
    def digest(self) -> str:
        """Hash of everything that determines the results (not timestamps)."""
        payload = json.dumps(
            {"command": self.command, "config": self.config, "seed": self.seed,
             "code_version": self.code_version, "extra": self.extra},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()

    def finish(self, outputs) -> "RunManifest":
        return replace(self, finished=datetime.now(timezone.utc).isoformat(),
                       outputs=[str(p) for p in outputs])

    def to_json(self) -> str:
        body = asdict(self)
        body["sha256"] = self.digest
        return json.dumps(body, indent=2, sort_keys=True)
