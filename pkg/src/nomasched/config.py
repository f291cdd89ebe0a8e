"""Configuration types and the INI-style config file loader.

All quantities are SI (seconds, Hz, Watt, bits) unless the field name says
otherwise (dBm/Hz for noise PSD, dB for path loss). Config files are flat
key/value pairs grouped into sections; every key maps 1:1 onto a dataclass
field below and unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from typing import get_type_hints


class ConfigError(ValueError):
    """Raised for malformed config files or invariant violations."""


@dataclass
class SystemConfig:
    n_ues: int = 30
    n_channels: int = 3
    bandwidth_per_channel_hz: float = 10e6
    slot_duration_s: float = 1e-3
    episode_len_slots: int = 25
    area_side_m: float = 100.0
    noise_psd_dbm_hz: float = -174.0
    bs_compute_hz: float = 120e9
    queue_capacity: int = 50
    ue_tx_power_w: float = 0.08
    reward_magnitude: float = 1.0
    obs_history_len: int = 1

    def validate(self) -> None:
        if self.n_ues < 1 or self.n_channels < 1 or self.queue_capacity < 1:
            raise ConfigError("n_ues, n_channels and queue_capacity must be >= 1")
        if self.episode_len_slots < 1:
            raise ConfigError("episode_len_slots must be >= 1")
        if self.obs_history_len < 1:
            raise ConfigError("obs_history_len must be >= 1")
        if self.bandwidth_per_channel_hz <= 0 or self.bs_compute_hz <= 0:
            raise ConfigError("bandwidth and compute capacity must be > 0")
        if self.ue_tx_power_w <= 0 or self.slot_duration_s <= 0:
            raise ConfigError("transmit power and slot duration must be > 0")
        if self.area_side_m <= 0:
            raise ConfigError("area_side_m must be > 0 (zero-area region)")


@dataclass
class TrafficConfig:
    arrival_prob: float = 0.8
    size_bits: tuple[int, int] = (100, 500)
    cycles_per_bit: tuple[int, int] = (100, 20_000)
    deadline_s: tuple[float, float] = (1e-3, 5e-3)

    def validate(self) -> None:
        if not 0.0 <= self.arrival_prob <= 1.0:
            raise ConfigError("arrival_prob must lie in [0, 1]")
        for name in ("size_bits", "cycles_per_bit", "deadline_s"):
            lo, hi = getattr(self, name)
            if lo <= 0 or hi < lo:
                raise ConfigError(f"{name} range must satisfy 0 < lo <= hi")


@dataclass
class IntentSetConfig:
    """Finite menus a UE's requested QoS triple is drawn from."""

    deadline_choices_s: tuple[float, ...] = (1e-3, 2e-3, 3e-3, 4e-3, 5e-3)
    rate_threshold_choices_bps: tuple[float, ...] = (0.5e6, 1e6, 2e6)
    reliability_eps: float = 1e-3

    def validate(self) -> None:
        if not self.deadline_choices_s or not self.rate_threshold_choices_bps:
            raise ConfigError("intent choice sets must be non-empty")
        if any(d <= 0 for d in self.deadline_choices_s):
            raise ConfigError("intent deadlines must be > 0")
        if any(r <= 0 for r in self.rate_threshold_choices_bps):
            raise ConfigError("rate thresholds must be > 0")
        if not 0.0 < self.reliability_eps < 1.0:
            raise ConfigError("reliability_eps must lie in (0, 1)")


@dataclass
class ChannelConfig:
    pathloss_offset_db: float = 128.1
    pathloss_slope_db: float = 37.6
    min_distance_m: float = 1.0

    def validate(self) -> None:
        if self.min_distance_m <= 0:
            raise ConfigError("min_distance_m must be > 0")


@dataclass
class SchedulerConfig:
    contention_p_transmit: float = 0.5

    def validate(self) -> None:
        if not 0.0 <= self.contention_p_transmit <= 1.0:
            raise ConfigError("contention_p_transmit must lie in [0, 1]")


@dataclass
class PpoConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    entropy_coef: float = 0.01
    epochs_per_batch: int = 4
    minibatch_size: int = 32
    actor_lr: float = 1e-2
    critic_lr: float = 1e-4
    adam_eps: float = 1e-5
    episodes: int = 6000
    rollout_steps: int = 100
    architecture: str = "single"
    actor_width: int = 256
    critic_width: int = 512
    eval_every: int = 20
    eval_episodes: int = 5
    fallback_actor_lr: float = 3e-4
    max_grad_norm: float = 0.5
    scale_rewards: bool = True

    def validate(self) -> None:
        for name in ("gamma", "gae_lambda", "clip_eps", "entropy_coef"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1)")
        for name in ("actor_lr", "critic_lr", "adam_eps", "fallback_actor_lr",
                     "max_grad_norm"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("epochs_per_batch", "minibatch_size", "rollout_steps",
                     "eval_every", "eval_episodes", "actor_width", "critic_width"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.episodes < 0:
            raise ConfigError("episodes must be >= 0")
        if self.architecture not in ("single", "d2rl"):
            raise ConfigError("architecture must be 'single' or 'd2rl'")


@dataclass
class SimConfig:
    """Bundle of every configurable subsystem."""

    system: SystemConfig = field(default_factory=SystemConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    intents: IntentSetConfig = field(default_factory=IntentSetConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)

    def validate(self) -> None:
        for section in (self.system, self.traffic, self.intents, self.channel,
                        self.scheduler, self.ppo):
            section.validate()


_SECTIONS = {
    "system": SystemConfig,
    "traffic": TrafficConfig,
    "intents": IntentSetConfig,
    "channel": ChannelConfig,
    "scheduler": SchedulerConfig,
    "ppo": PpoConfig,
}


def _parse_value(raw: str, annot, key: str):
    raw = raw.strip()
    if annot is bool:
        lowered = raw.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if annot is int:
        try:
            value = float(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc
        if value != int(value):
            raise ConfigError(f"{key}: expected an integer, got {raw!r}")
        return int(value)
    if annot is float:
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc
    if annot is str:
        return raw
    origin = getattr(annot, "__origin__", None)
    if origin is tuple:
        elem_types = annot.__args__
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if not parts:
            raise ConfigError(f"{key}: expected a comma-separated list")
        if elem_types[-1] is Ellipsis:
            elem = elem_types[0]
            return tuple(_parse_value(p, elem, key) for p in parts)
        if len(parts) != len(elem_types):
            raise ConfigError(f"{key}: expected {len(elem_types)} values, got {len(parts)}")
        return tuple(_parse_value(p, t, key) for p, t in zip(parts, elem_types))
    raise ConfigError(f"{key}: unsupported field type {annot!r}")


def load_config(path: str) -> SimConfig:
    """Parse an INI-style config file into a validated :class:`SimConfig`.

    Missing sections or keys fall back to defaults; unknown sections or keys
    are errors so typos never pass silently.
    """
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found or unreadable: {path}")

    cfg = SimConfig()
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        target = getattr(cfg, section)
        hints = get_type_hints(type(target))
        known = {f.name for f in dataclasses.fields(target)}
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            setattr(target, key, _parse_value(raw, hints[key], f"[{section}] {key}"))
    cfg.validate()
    return cfg


def config_keys() -> dict[str, list[str]]:
    """Documented key names per section (the config-file schema)."""
    return {name: [f.name for f in dataclasses.fields(cls)] for name, cls in _SECTIONS.items()}
