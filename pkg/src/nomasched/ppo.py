"""Clipped-surrogate policy-gradient learner over matching action spaces.

The actor is a categorical policy over a fixed action table (either the
reduced far/near matching list or the raw pair-permutation space) with
per-slot masking of actions that would schedule nobody with pending work.
Advantages come from generalized advantage estimation, updates run a few
epochs of shuffled minibatches per rollout, and both networks are plain
numpy nets from :mod:`nomasched.nets` trained with Adam.

Since UE ids are path-loss ranked, the far/near groups occupy the same id
ranges in every episode and the action tables are reusable across
episodes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .actions import (
    build_hypergraph,
    enumerate_full_actions,
    enumerate_reduced_actions,
    matching_to_allocation,
)
from .config import PpoConfig, SimConfig
from .env import Allocation, NomaEnv, FEATURES_PER_UE
from .nets import Adam, DenseNet, clip_grad_norm
from .schedulers import Scheduler, SlotDecision

CHECKPOINT_VERSION = 1


class NonFiniteUpdate(RuntimeError):
    """An update produced a non-finite loss or parameters."""


# ----------------------------------------------------------------------
# masked categorical distribution
# ----------------------------------------------------------------------
def masked_log_probs(logits: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Log-probabilities and probabilities of a masked softmax.

    Masked entries get probability exactly 0 (log-probability -inf); each
    row must keep at least one action selectable.
    """
    logits = np.atleast_2d(logits)
    mask = np.atleast_2d(mask).astype(bool)
    if not mask.any(axis=1).all():
        raise ValueError("at least one action must stay unmasked per row")
    z = np.where(mask, logits, -np.inf)
    zmax = z.max(axis=1, keepdims=True)
    e = np.exp(z - zmax)  # exp(-inf) is exactly 0
    s = e.sum(axis=1, keepdims=True)
    probs = e / s
    logp = (z - zmax) - np.log(s)
    return logp, probs


def masked_entropy(probs: np.ndarray, logp: np.ndarray) -> np.ndarray:
    """Per-row entropy, treating 0 * log 0 as 0."""
    terms = probs * np.where(probs > 0, logp, 0.0)
    return -terms.sum(axis=1)


def sample_index(probs_row: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw; zero-probability entries are unreachable."""
    c = np.cumsum(probs_row)
    idx = int(np.searchsorted(c, rng.random(), side="right"))
    if idx >= len(probs_row) or probs_row[idx] == 0.0:
        nonzero = np.flatnonzero(probs_row)
        idx = int(nonzero[-1])
    return idx


# ----------------------------------------------------------------------
# advantage estimation and surrogate objective
# ----------------------------------------------------------------------
def gae(rewards: np.ndarray, values: np.ndarray, gamma: float, lam: float
        ) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation over one contiguous segment.

    ``values`` must hold T+1 entries: per-step estimates plus the bootstrap
    value of the state after the last step (0 for a terminal state).
    Returns (advantages, returns) with returns = advantages + values[:-1].
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    T = len(rewards)
    if len(values) != T + 1:
        raise ValueError(f"values must have length {T + 1}, got {len(values)}")
    adv = np.empty(T)
    acc = 0.0
    for t in range(T - 1, -1, -1):
        delta = rewards[t] + gamma * values[t + 1] - values[t]
        acc = delta + gamma * lam * acc
        adv[t] = acc
    return adv, adv + values[:-1]


def clipped_surrogate(logp_new: np.ndarray, logp_old: np.ndarray,
                      advantages: np.ndarray, clip_eps: float
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample clipped objective and the probability ratios."""
    ratio = np.exp(logp_new - logp_old)
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps)
    obj = np.minimum(ratio * advantages, clipped * advantages)
    return obj, ratio


# ----------------------------------------------------------------------
# action tables
# ----------------------------------------------------------------------
@dataclass
class ActionTable:
    allocations: list[Allocation]
    ue_bits: np.ndarray          # bitmask of scheduled UEs per action
    structural: np.ndarray       # actions that satisfy allocation invariants

    @property
    def n_actions(self) -> int:
        return len(self.allocations)

    def mask_for(self, nonempty_bits: int) -> np.ndarray:
        """Selectable actions: structurally valid and scheduling at least
        one backlogged UE; falls back to the structural mask when no
        action can serve anyone (an idle slot either way)."""
        mask = self.structural & ((self.ue_bits & nonempty_bits) != 0)
        if not mask.any():
            return self.structural.copy()
        return mask


def _bits(ids) -> int:
    out = 0
    for u in ids:
        out |= 1 << u
    return out


def nonempty_bits(env: NomaEnv) -> int:
    return _bits(u for u in range(env.n_ues) if env.queues[u])


def reduced_action_table(n_ues: int, n_channels: int) -> ActionTable:
    """All size-M matchings over the rank-defined far/near groups."""
    if n_ues > 62:
        raise ValueError("bitmask representation supports at most 62 UEs")
    far = tuple(range(n_ues // 2))
    near = tuple(range(n_ues // 2, n_ues))
    h = build_hypergraph(far, near, n_channels)
    matchings = enumerate_reduced_actions(h)
    allocations = [matching_to_allocation(h, m) for m in matchings]
    bits = np.array([_bits(a.scheduled) for a in allocations], dtype=np.int64)
    return ActionTable(allocations=allocations, ue_bits=bits,
                       structural=np.ones(len(allocations), dtype=bool))


def full_action_table(n_ues: int, n_channels: int) -> ActionTable:
    """The unreduced pair-permutation space; overlapping-UE actions are
    structurally masked since the environment rejects them."""
    if n_ues > 62:
        raise ValueError("bitmask representation supports at most 62 UEs")
    allocations, valid = enumerate_full_actions(n_ues, n_channels)
    bits = np.array([_bits(a.scheduled) for a in allocations], dtype=np.int64)
    return ActionTable(allocations=allocations, ue_bits=bits, structural=valid)


# ----------------------------------------------------------------------
# rollout storage
# ----------------------------------------------------------------------
@dataclass
class RolloutBuffer:
    obs: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    logps: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    values: list = field(default_factory=list)
    dones: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    tail_values: list = field(default_factory=list)

    def add(self, obs, action, logp, reward, value, done, mask,
            tail_value: float = 0.0) -> None:
        """``tail_value`` is the bootstrap used when ``done`` cuts a segment
        here: 0 for a genuine terminal state, or the critic's estimate of
        the successor state when the episode merely hit its slot horizon
        (the offloading system keeps running; the horizon is an artifact)."""
        self.obs.append(obs)
        self.actions.append(action)
        self.logps.append(logp)
        self.rewards.append(reward)
        self.values.append(value)
        self.dones.append(done)
        self.masks.append(mask)
        self.tail_values.append(tail_value)

    def __len__(self) -> int:
        return len(self.obs)

    def clear(self) -> None:
        for name in ("obs", "actions", "logps", "rewards", "values", "dones",
                     "masks", "tail_values"):
            getattr(self, name).clear()

    def batch(self, gamma: float, lam: float, bootstrap_value: float) -> dict[str, np.ndarray]:
        """Assemble arrays and compute advantages segment by segment.

        Done flags cut the advantage recursion, bootstrapping with the
        stored per-step tail value; a trailing unfinished segment
        bootstraps with ``bootstrap_value``.
        """
        rewards = np.asarray(self.rewards, dtype=float)
        values = np.asarray(self.values, dtype=float)
        dones = np.asarray(self.dones, dtype=bool)
        T = len(rewards)
        advantages = np.empty(T)
        returns = np.empty(T)
        start = 0
        for t in range(T):
            if dones[t] or t == T - 1:
                tail = self.tail_values[t] if dones[t] else bootstrap_value
                seg_vals = np.append(values[start: t + 1], tail)
                adv, ret = gae(rewards[start: t + 1], seg_vals, gamma, lam)
                advantages[start: t + 1] = adv
                returns[start: t + 1] = ret
                start = t + 1
        return {
            "obs": np.asarray(self.obs, dtype=float),
            "actions": np.asarray(self.actions, dtype=int),
            "logps": np.asarray(self.logps, dtype=float),
            "advantages": advantages,
            "returns": returns,
            "masks": np.asarray(self.masks, dtype=bool),
        }


class ReturnScaler:
    """Running scale of the discounted return, used to normalize rewards
    before advantage estimation so the critic's targets stay O(1) under
    its small learning rate. Welford accumulation keeps it one-pass."""

    def __init__(self, gamma: float):
        self.gamma = gamma
        self._acc = 0.0
        self._count = 0
        self._mean = 0.0
        self._m2 = 0.0

    def scale(self, reward: float) -> float:
        self._acc = reward + self.gamma * self._acc
        self._count += 1
        delta = self._acc - self._mean
        self._mean += delta / self._count
        self._m2 += delta * (self._acc - self._mean)
        if self._count < 2:
            return reward
        return reward / max(np.sqrt(self._m2 / self._count), 1e-6)


# ----------------------------------------------------------------------
# the agent
# ----------------------------------------------------------------------
class PpoAgent:
    def __init__(self, obs_dim: int, n_actions: int, cfg: PpoConfig, seed,
                 actor_lr: float | None = None):
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.cfg = cfg
        self.actor_lr = cfg.actor_lr if actor_lr is None else actor_lr
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        init_ss, sample_ss, shuffle_ss = ss.spawn(3)
        init_rng = np.random.default_rng(init_ss)
        self._sample_rng = np.random.default_rng(sample_ss)
        self._shuffle_rng = np.random.default_rng(shuffle_ss)
        self.actor = DenseNet(obs_dim, n_actions, cfg.actor_width, cfg.architecture,
                              init_rng, final_gain=0.01)
        self.critic = DenseNet(obs_dim, 1, cfg.critic_width, cfg.architecture,
                               init_rng, final_gain=1.0)
        self._adam_actor = Adam(self.actor.parameters(), self.actor_lr, eps=cfg.adam_eps)
        self._adam_critic = Adam(self.critic.parameters(), cfg.critic_lr, eps=cfg.adam_eps)

    # -------------------------- acting ---------------------------------
    def policy(self, obs: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        logits = self.actor.forward(obs)
        if not np.isfinite(logits).all():
            raise NonFiniteUpdate("actor produced non-finite logits")
        logp, probs = masked_log_probs(logits, mask)
        return probs[0], logp[0]

    def act(self, obs: np.ndarray, mask: np.ndarray) -> tuple[int, float, float]:
        probs, logp = self.policy(obs, mask)
        a = sample_index(probs, self._sample_rng)
        return a, float(logp[a]), self.value(obs)

    def greedy_action(self, obs: np.ndarray, mask: np.ndarray) -> int:
        _, logp = self.policy(obs, mask)
        return int(np.argmax(logp))

    def value(self, obs: np.ndarray) -> float:
        return float(self.critic.forward(obs)[0, 0])

    # -------------------------- learning -------------------------------
    def update(self, batch: dict[str, np.ndarray]) -> dict[str, float]:
        cfg = self.cfg
        adv = batch["advantages"]
        adv_n = (adv - adv.mean()) / (adv.std() + 1e-8)
        B = len(adv)
        diag = {"actor_loss": 0.0, "critic_loss": 0.0, "entropy": 0.0, "n_minibatches": 0}
        for _ in range(cfg.epochs_per_batch):
            perm = self._shuffle_rng.permutation(B)
            for start in range(0, B, cfg.minibatch_size):
                sel = perm[start: start + cfg.minibatch_size]
                stats = self._minibatch_step(
                    batch["obs"][sel], batch["actions"][sel], batch["logps"][sel],
                    adv_n[sel], batch["returns"][sel], batch["masks"][sel],
                )
                for k, v in stats.items():
                    diag[k] += v
                diag["n_minibatches"] += 1
        for k in ("actor_loss", "critic_loss", "entropy"):
            diag[k] /= max(diag["n_minibatches"], 1)
        return diag

    def _minibatch_step(self, obs, actions, logp_old, adv, returns, masks) -> dict[str, float]:
        n = len(actions)
        cfg = self.cfg

        logits = self.actor.forward(obs)
        logp, probs = masked_log_probs(logits, masks)
        rows = np.arange(n)
        logp_a = logp[rows, actions]
        obj, ratio = clipped_surrogate(logp_a, logp_old, adv, cfg.clip_eps)
        entropy = masked_entropy(probs, logp)
        actor_loss = -(obj.mean() + cfg.entropy_coef * entropy.mean())

        # d(objective)/d(logp_a): the clipped branch has zero derivative
        # outside the trust band, and equals the unclipped one inside it
        unclipped_active = ratio * adv <= np.clip(ratio, 1 - cfg.clip_eps,
                                                  1 + cfg.clip_eps) * adv
        dobj_dlogp = np.where(unclipped_active, ratio * adv, 0.0)
        onehot = np.zeros_like(probs)
        onehot[rows, actions] = 1.0
        dlogits = (onehot - probs) * dobj_dlogp[:, None]
        ent_grad = -probs * (np.where(probs > 0, logp, 0.0) + entropy[:, None])
        dlogits_loss = -(dlogits + cfg.entropy_coef * ent_grad) / n
        actor_grads = clip_grad_norm(self.actor.backward(dlogits_loss),
                                     cfg.max_grad_norm)

        v = self.critic.forward(obs)[:, 0]
        verr = v - returns
        critic_loss = float(np.mean(verr ** 2))
        critic_grads = clip_grad_norm(self.critic.backward((2.0 * verr / n)[:, None]),
                                      cfg.max_grad_norm)

        if not (np.isfinite(actor_loss) and np.isfinite(critic_loss)):
            raise NonFiniteUpdate(
                f"non-finite loss (actor={actor_loss}, critic={critic_loss})"
            )
        self._adam_actor.step(self.actor.parameters(), actor_grads)
        self._adam_critic.step(self.critic.parameters(), critic_grads)
        return {"actor_loss": float(actor_loss), "critic_loss": critic_loss,
                "entropy": float(entropy.mean())}

    # ------------------------- persistence -----------------------------
    def save(self, path: str, extra: dict | None = None) -> None:
        """Checkpoint container: versioned npz with a JSON metadata blob and
        the flat weight arrays actor_00, actor_01, ..., critic_00, ...
        (weights and biases interleaved, input layer first)."""
        meta = {
            "obs_dim": self.obs_dim,
            "n_actions": self.n_actions,
            "actor_lr": self.actor_lr,
            "ppo_config": self.cfg.__dict__,
        }
        if extra:
            meta.update(extra)
        arrays = {
            f"actor_{i:02d}": arr for i, arr in enumerate(self.actor.get_weights())
        }
        arrays.update(
            {f"critic_{i:02d}": arr for i, arr in enumerate(self.critic.get_weights())}
        )
        np.savez(path, format_version=CHECKPOINT_VERSION,
                 meta_json=json.dumps(meta, sort_keys=True), **arrays)

    @classmethod
    def load(cls, path: str, seed=0) -> tuple["PpoAgent", dict]:
        with np.load(path, allow_pickle=False) as data:
            version = int(data["format_version"])
            if version != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {version}")
            meta = json.loads(str(data["meta_json"]))
            cfg = PpoConfig(**meta["ppo_config"])
            agent = cls(meta["obs_dim"], meta["n_actions"], cfg, seed,
                        actor_lr=meta["actor_lr"])
            actor_keys = sorted(k for k in data.files if k.startswith("actor_"))
            critic_keys = sorted(k for k in data.files if k.startswith("critic_"))
            agent.actor.set_weights([data[k] for k in actor_keys])
            agent.critic.set_weights([data[k] for k in critic_keys])
        return agent, meta


# ----------------------------------------------------------------------
# scheduler wrapper and training
# ----------------------------------------------------------------------
class PpoPolicy(Scheduler):
    """Exposes a (possibly training) agent through the scheduler interface."""

    def __init__(self, agent: PpoAgent, table: ActionTable, greedy: bool = True):
        self.agent = agent
        self.table = table
        self.greedy = greedy
        self.name = "ppo"

    def decide(self, env: NomaEnv) -> SlotDecision:
        obs = env.observation()
        mask = self.table.mask_for(nonempty_bits(env))
        if self.greedy:
            a = self.agent.greedy_action(obs, mask)
        else:
            a, _, _ = self.agent.act(obs, mask)
        return SlotDecision(self.table.allocations[a])


def obs_dim_for(cfg: SimConfig) -> int:
    sys = cfg.system
    return sys.obs_history_len * (sys.n_ues * FEATURES_PER_UE + sys.n_ues * sys.n_channels)


def action_table_for(cfg: SimConfig, reduced: bool) -> ActionTable:
    if reduced:
        return reduced_action_table(cfg.system.n_ues, cfg.system.n_channels)
    return full_action_table(cfg.system.n_ues, cfg.system.n_channels)


def episode_seed(campaign_seed: int, episode: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([campaign_seed, 0x7261, episode])


def train(
    cfg: SimConfig,
    seed: int,
    reduced: bool = True,
    episodes: int | None = None,
    eval_fn=None,
    logger=None,
) -> tuple[PpoAgent, list, dict]:
    """Run the training loop; on a non-finite update restart once with the
    fallback actor learning rate and record the substitution.

    ``eval_fn(agent, episodes_done)`` is called every ``eval_every``
    episodes; whatever it returns is collected into the result list.
    """
    episodes = cfg.ppo.episodes if episodes is None else episodes
    attempts = [cfg.ppo.actor_lr, cfg.ppo.fallback_actor_lr]
    last_error: Exception | None = None
    for attempt, lr in enumerate(attempts):
        try:
            agent, rows = _train_once(cfg, seed, reduced, episodes, lr, eval_fn, logger)
            meta = {"actor_lr_used": lr, "lr_fallback": attempt > 0,
                    "reduced": reduced, "seed": seed, "episodes": episodes}
            return agent, rows, meta
        except NonFiniteUpdate as exc:
            last_error = exc
            if logger:
                logger.warning("training diverged at lr=%g (%s); retrying at %g",
                               lr, exc, cfg.ppo.fallback_actor_lr)
    raise NonFiniteUpdate(f"training diverged at every learning rate: {last_error}")


def _train_once(cfg, seed, reduced, episodes, actor_lr, eval_fn, logger):
    table = action_table_for(cfg, reduced)
    agent = PpoAgent(obs_dim_for(cfg), table.n_actions, cfg.ppo,
                     seed=np.random.SeedSequence([seed, 0xA6E7]), actor_lr=actor_lr)
    buffer = RolloutBuffer()
    rows: list = []
    ppo = cfg.ppo
    scaler = ReturnScaler(ppo.gamma) if ppo.scale_rewards else None
    for ep in range(episodes):
        env = NomaEnv(cfg, seed=episode_seed(seed, ep))
        obs = env.observation()
        done = False
        while not done:
            mask = table.mask_for(nonempty_bits(env))
            a, logp, value = agent.act(obs, mask)
            res = env.step(table.allocations[a])
            reward = scaler.scale(res.reward) if scaler else res.reward
            # the slot horizon truncates rather than terminates the system,
            # so segment tails bootstrap from the successor state's value
            tail = agent.value(res.observation) if res.done else 0.0
            buffer.add(obs, a, logp, reward, value, res.done, mask,
                       tail_value=tail)
            obs = res.observation
            done = res.done
            if len(buffer) >= ppo.rollout_steps:
                agent.update(buffer.batch(ppo.gamma, ppo.gae_lambda,
                                          agent.value(obs)))
                buffer.clear()
        if eval_fn is not None and (ep + 1) % ppo.eval_every == 0:
            rows.append(eval_fn(agent, ep + 1))
            if logger:
                logger.info("episode %d/%d evaluated", ep + 1, episodes)
    return agent, rows
