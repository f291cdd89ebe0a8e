"""Experiment orchestration: multi-seed campaigns, metrics and CSV output.

A campaign runs each (scheme, seed) cell independently: learning schemes
train and are evaluated greedily every ``eval_every`` episodes, baselines
are simply evaluated on the same cadence. Evaluation episodes are seeded
by (campaign seed, window, index) only, so every scheme sees the same
evaluation environments and rows are directly comparable. Each cell
writes its own shard file; a final merge produces the combined CSV.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from .config import SimConfig
from .env import EpisodeLog, NomaEnv
from .ppo import PpoAgent, PpoPolicy, action_table_for, obs_dim_for, train
from .schedulers import BASELINE_NAMES, Scheduler, make_scheduler

log = logging.getLogger("nomasched")

CSV_HEADER = "scheme,seed,episode,success_norm,failed_norm,goodput_bps,collision_rate,mean_reward"
CSV_COMMENT = (
    "# success_norm and failed_norm are per-episode fractions of arrived tasks"
    " (success / terminally-failed); rows average the greedy evaluation"
    " episodes of one window; mean_reward is the mean total episode reward"
)

LEARNER_NAMES = ("ppo", "ppo_full")
ALL_SCHEMES = BASELINE_NAMES + LEARNER_NAMES
_SCHEME_IDS = {name: i for i, name in enumerate(ALL_SCHEMES)}


@dataclass(frozen=True)
class MetricsRow:
    scheme: str
    seed: int
    episode: int
    success_norm: float
    failed_norm: float
    goodput_bps: float
    collision_rate: float
    mean_reward: float

    def to_csv(self) -> str:
        return (f"{self.scheme},{self.seed},{self.episode},{self.success_norm!r},"
                f"{self.failed_norm!r},{self.goodput_bps!r},{self.collision_rate!r},"
                f"{self.mean_reward!r}")


def compute_metrics(elog: EpisodeLog, cfg: SimConfig) -> dict[str, float]:
    """Per-episode metric values; a zero-arrival episode yields all zeros.

    Also enforces task conservation: every arrival must be accounted for as
    a success, a terminal failure or a still-queued task.
    """
    if elog.arrivals != elog.successes + elog.failed_total + elog.residual:
        raise RuntimeError(
            f"task conservation violated: {elog.arrivals} arrivals vs "
            f"{elog.successes} + {elog.failed_total} + {elog.residual}"
        )
    wall_s = cfg.system.episode_len_slots * cfg.system.slot_duration_s
    if elog.arrivals == 0:
        success = failed = 0.0
    else:
        success = elog.successes / elog.arrivals
        failed = elog.failed_total / elog.arrivals
    return {
        "success_norm": success,
        "failed_norm": failed,
        "goodput_bps": elog.success_bits / wall_s,
        "collision_rate": (elog.collided_attempts / elog.attempts) if elog.attempts else 0.0,
        "mean_reward": elog.reward_total,
    }


def run_episode(env: NomaEnv, policy: Scheduler) -> EpisodeLog:
    policy.begin_episode(env)
    while not env.done:
        decision = policy.decide(env)
        env.step(decision.alloc, decision.collided)
    return env.episode_log()


def eval_episode_seed(campaign_seed: int, window: int, k: int) -> np.random.SeedSequence:
    # scheme-independent on purpose: every scheme is evaluated on the same
    # environment draws, making across-scheme rows paired
    return np.random.SeedSequence([campaign_seed, 0xE7A1, window, k])


def evaluate_window(cfg: SimConfig, policy: Scheduler, campaign_seed: int,
                    window: int) -> dict[str, float]:
    """Average the metrics of this window's evaluation episodes."""
    rows = []
    for k in range(cfg.ppo.eval_episodes):
        env = NomaEnv(cfg, seed=eval_episode_seed(campaign_seed, window, k))
        rows.append(compute_metrics(run_episode(env, policy), cfg))
    return {key: float(np.mean([r[key] for r in rows])) for key in rows[0]}


def _scheduler_seed(scheme: str, seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, 0x5C4E, _SCHEME_IDS[scheme]])


def run_scheme_seed(
    cfg: SimConfig,
    scheme: str,
    seed: int,
    episodes: int,
    checkpoint_path: str | None = None,
) -> tuple[list[MetricsRow], dict]:
    """One campaign cell: training run for learners, windowed evaluation
    for baselines. Deterministic in (cfg, scheme, seed, episodes)."""
    if scheme not in ALL_SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {ALL_SCHEMES}")
    rows: list[MetricsRow] = []
    meta: dict = {"scheme": scheme, "seed": seed, "episodes": episodes}

    def add_row(episode: int, values: dict[str, float]) -> None:
        rows.append(MetricsRow(scheme=scheme, seed=seed, episode=episode, **values))

    if scheme in LEARNER_NAMES:
        reduced = scheme == "ppo"
        table = action_table_for(cfg, reduced)

        def eval_fn(agent: PpoAgent, episodes_done: int):
            policy = PpoPolicy(agent, table, greedy=True)
            window = episodes_done // cfg.ppo.eval_every
            add_row(episodes_done, evaluate_window(cfg, policy, seed, window))

        agent, _, train_meta = train(cfg, seed, reduced=reduced, episodes=episodes,
                                     eval_fn=eval_fn, logger=log)
        meta.update(train_meta)
        if checkpoint_path:
            agent.save(checkpoint_path, extra={
                "scheme": scheme, "seed": seed, "reduced": reduced,
                "system_config": dataclasses.asdict(cfg.system),
                "lr_fallback": train_meta["lr_fallback"],
            })
            meta["checkpoint"] = checkpoint_path
    else:
        policy = make_scheduler(scheme, cfg, seed=_scheduler_seed(scheme, seed))
        for window in range(1, episodes // cfg.ppo.eval_every + 1):
            add_row(window * cfg.ppo.eval_every,
                    evaluate_window(cfg, policy, seed, window))
    return rows, meta


def write_rows(rows: list[MetricsRow], path: str) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_COMMENT + "\n")
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.to_csv() + "\n")


def read_rows(path: str) -> list[MetricsRow]:
    rows: list[MetricsRow] = []
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: expected header {CSV_HEADER!r}")
    for ln in lines[1:]:
        parts = ln.split(",")
        rows.append(MetricsRow(parts[0], int(parts[1]), int(parts[2]),
                               *(float(p) for p in parts[3:])))
    return rows


def run_campaign(
    cfg: SimConfig,
    schemes: list[str],
    seeds: int,
    episodes: int,
    out_dir: str,
) -> str:
    """Run every (scheme, seed) cell, persist shard CSVs and checkpoints,
    and merge everything into ``out_dir``/metrics.csv."""
    if not schemes:
        raise ValueError("at least one scheme is required")
    shard_dir = os.path.join(out_dir, "shards")
    ckpt_dir = os.path.join(out_dir, "checkpoints")
    os.makedirs(shard_dir, exist_ok=True)
    all_rows: list[MetricsRow] = []
    metas: list[dict] = []
    for scheme in schemes:
        for seed in range(seeds):
            ckpt = None
            if scheme in LEARNER_NAMES:
                os.makedirs(ckpt_dir, exist_ok=True)
                ckpt = os.path.join(ckpt_dir, f"{scheme}_seed{seed}.npz")
            log.info("running %s seed %d", scheme, seed)
            rows, meta = run_scheme_seed(cfg, scheme, seed, episodes, ckpt)
            write_rows(rows, os.path.join(shard_dir, f"{scheme}_seed{seed}.csv"))
            all_rows.extend(rows)
            metas.append(meta)
    all_rows.sort(key=lambda r: (r.scheme, r.seed, r.episode))
    merged = os.path.join(out_dir, "metrics.csv")
    write_rows(all_rows, merged)
    with open(os.path.join(out_dir, "run_meta.json"), "w") as fh:
        json.dump(metas, fh, indent=2, sort_keys=True)
    return merged


def evaluate_checkpoint(
    cfg: SimConfig,
    checkpoint_path: str,
    seeds: int,
    episodes: int,
) -> list[MetricsRow]:
    """Windowed greedy evaluation of a frozen agent checkpoint."""
    agent, meta = PpoAgent.load(checkpoint_path)
    reduced = bool(meta.get("reduced", True))
    table = action_table_for(cfg, reduced)
    if table.n_actions != agent.n_actions or obs_dim_for(cfg) != agent.obs_dim:
        raise ValueError("checkpoint does not match the configured system scale")
    scheme = meta.get("scheme", "ppo")
    rows: list[MetricsRow] = []
    policy = PpoPolicy(agent, table, greedy=True)
    for seed in range(seeds):
        for window in range(1, episodes // cfg.ppo.eval_every + 1):
            values = evaluate_window(cfg, policy, seed, window)
            rows.append(MetricsRow(scheme=scheme, seed=seed,
                                   episode=window * cfg.ppo.eval_every, **values))
    return rows
