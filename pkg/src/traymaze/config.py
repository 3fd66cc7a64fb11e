"""Run configuration: one JSON file with sections for physics, environment,
agent, partner and schedule. Unknown keys anywhere are rejected; missing
keys fall back to the section defaults.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .env import EnvConfig
from .partner import PartnerSpec
from .physics import PhysConfig
from .sac import SacConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    """Block-interleaved training protocol.

    ``block_size`` interaction steps, then ``updates_per_block`` gradient
    updates, then ``eval_trials`` deterministic test episodes, repeated
    until ``total_interaction_steps``.
    """

    total_interaction_steps: int = 3500
    updates_per_block: int = 20000
    block_size: int = 500
    eval_trials: int = 10
    step_cap: int = 200

    def __post_init__(self):
        for name in ("total_interaction_steps", "updates_per_block",
                     "block_size", "eval_trials", "step_cap"):
            if getattr(self, name) < 1:
                raise ConfigError(f"schedule.{name} must be positive")
        if self.total_interaction_steps % self.block_size != 0:
            raise ConfigError(
                f"block_size {self.block_size} must divide "
                f"total_interaction_steps {self.total_interaction_steps}")

    @property
    def n_blocks(self) -> int:
        return self.total_interaction_steps // self.block_size

    @property
    def total_updates(self) -> int:
        return self.n_blocks * self.updates_per_block


@dataclass
class RunConfig:
    phys: PhysConfig
    env: EnvConfig
    sac: SacConfig
    partner: PartnerSpec
    schedule: Schedule
    layout_path: str | None = None


_SECTIONS = {
    "physics": ("phys", PhysConfig),
    "env": ("env", EnvConfig),
    "sac": ("sac", SacConfig),
    "partner": ("partner", PartnerSpec),
    "schedule": ("schedule", Schedule),
}


def default_config() -> RunConfig:
    return RunConfig(
        phys=PhysConfig(),
        env=EnvConfig(),
        sac=SacConfig(),
        partner=PartnerSpec(),
        schedule=Schedule(),
    )


def _build_section(cls, data: dict, section: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    kwargs = dict(data)
    if cls is SacConfig and "hidden" in kwargs:
        kwargs["hidden"] = tuple(kwargs["hidden"])
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def config_from_dict(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(d) - set(_SECTIONS) - {"layout"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    parts = {}
    for section, (attr, cls) in _SECTIONS.items():
        parts[attr] = _build_section(cls, d.get(section, {}), section)
    layout = d.get("layout")
    if layout is not None and not isinstance(layout, str):
        raise ConfigError("layout must be a path string")
    return RunConfig(layout_path=layout, **parts)


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)


def config_to_dict(cfg: RunConfig) -> dict:
    out = {}
    for section, (attr, _cls) in _SECTIONS.items():
        d = dataclasses.asdict(getattr(cfg, attr))
        if "hidden" in d:
            d["hidden"] = list(d["hidden"])
        out[section] = d
    if cfg.layout_path is not None:
        out["layout"] = cfg.layout_path
    return out


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(
        json.dumps(config_to_dict(cfg), sort_keys=True).encode()).hexdigest()


def with_overrides(cfg: RunConfig, seed: int | None = None,
                   partner_kind: str | None = None) -> RunConfig:
    """CLI-level overrides: one master seed fans out to every section."""
    env, sac, partner = cfg.env, cfg.sac, cfg.partner
    if seed is not None:
        env = dataclasses.replace(env, seed=seed)
        sac = dataclasses.replace(sac, seed=seed + 1000)
        partner = dataclasses.replace(partner, seed=seed + 2000)
    if partner_kind is not None:
        partner = dataclasses.replace(partner, kind=partner_kind)
    return RunConfig(phys=cfg.phys, env=env, sac=sac, partner=partner,
                     schedule=cfg.schedule, layout_path=cfg.layout_path)
