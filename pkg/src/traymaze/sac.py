"""Soft Actor-Critic with twin Q networks, target networks, a ring replay
buffer and automatic temperature tuning.

All gradients are hand-derived against the nets module and checked against
finite differences in the test suite. The update is one gradient step each
on Q1, Q2, the policy and log_alpha, followed by a Polyak update of the
target critics:

    y        = r + gamma * (1 - done) * (min Qbar(s', a') - alpha * log pi(a'|s'))
    L_Q      = mean((Q(s, a) - y)^2)
    L_pi     = mean(alpha * log pi(a|s) - min Q(s, a)),  a reparametrized
    L_alpha  = mean(-log_alpha * (log pi(a|s) + target_entropy)),  log pi detached
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .env import OBS_DIM
from .nets import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    SQUASH_EPS,
    AdamState,
    Mlp,
    TwinMlp,
    adam_step,
    squash_sample,
)


class InsufficientBufferError(RuntimeError):
    """update() called before the buffer holds one full batch."""


@dataclass(frozen=True)
class SacConfig:
    gamma: float = 0.99
    tau: float = 0.005
    batch_size: int = 128
    replay_capacity: int = 100_000
    target_entropy: float = -1.0     # negative action dimension
    policy_lr: float = 3e-4
    q_lr: float = 3e-4
    alpha_lr: float = 3e-4
    hidden: tuple[int, ...] = (64, 64)
    random_steps: int = 300          # uniform-action warmup before the policy is used
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.replay_capacity < 1:
            raise ValueError("replay_capacity must be >= 1")


@dataclass
class Transition:
    s: np.ndarray
    a: float
    r: float
    s_next: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring storage with uniform sampling."""

    def __init__(self, capacity: int, obs_dim: int = OBS_DIM, dtype=np.float64):
        self.capacity = int(capacity)
        self.obs_dim = obs_dim
        self.s = np.zeros((capacity, obs_dim), dtype=dtype)
        self.a = np.zeros(capacity, dtype=dtype)
        self.r = np.zeros(capacity, dtype=dtype)
        self.s_next = np.zeros((capacity, obs_dim), dtype=dtype)
        self.done = np.zeros(capacity, dtype=bool)
        self.size = 0
        self.cursor = 0

    def __len__(self) -> int:
        return self.size

    def store(self, t: Transition) -> None:
        if not (np.all(np.isfinite(t.s)) and np.all(np.isfinite(t.s_next))
                and math.isfinite(t.a) and math.isfinite(t.r)):
            raise ValueError("non-finite transition")
        if not -1.0 <= t.a <= 1.0:
            raise ValueError(f"action {t.a} outside [-1, 1]")
        if t.r not in (-1.0, 10.0):
            raise ValueError(f"reward {t.r} outside the sparse set {{-1, +10}}")
        i = self.cursor
        self.s[i] = t.s
        self.a[i] = t.a
        self.r[i] = t.r
        self.s_next[i] = t.s_next
        self.done[i] = t.done
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.integers(0, self.size, size=batch_size)
        return (self.s[idx], self.a[idx], self.r[idx],
                self.s_next[idx], self.done[idx].astype(self.s.dtype))

    def state_arrays(self) -> dict:
        return {"s": self.s[: self.size], "a": self.a[: self.size],
                "r": self.r[: self.size], "s_next": self.s_next[: self.size],
                "done": self.done[: self.size],
                "cursor": np.array(self.cursor), "size": np.array(self.size)}

    def load_state_arrays(self, d: dict) -> None:
        n = int(d["size"])
        self.s[:n] = d["s"]
        self.a[:n] = d["a"]
        self.r[:n] = d["r"]
        self.s_next[:n] = d["s_next"]
        self.done[:n] = d["done"]
        self.size = n
        self.cursor = int(d["cursor"])


@dataclass
class TemperatureState:
    log_alpha: np.ndarray            # 0-d array so Adam can update in place
    target_entropy: float
    opt: AdamState

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha))


@dataclass
class UpdateReport:
    q1_loss: float
    q2_loss: float
    policy_loss: float
    alpha_loss: float
    alpha: float
    entropy: float

    def to_dict(self) -> dict:
        return asdict(self)


class SacAgent:
    def __init__(self, cfg: SacConfig, obs_dim: int = OBS_DIM, act_dim: int = 1,
                 dtype=np.float32):
        if act_dim != 1:
            raise ValueError("this agent is single-axis: act_dim must be 1")
        self.cfg = cfg
        self.obs_dim = obs_dim
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(cfg.seed)
        self.policy = Mlp((obs_dim, *cfg.hidden, 2), rng, dtype)  # (mean, raw log_std)
        self.q = TwinMlp((obs_dim + 1, *cfg.hidden, 1), rng, dtype)
        self.q_target = self.q.copy()
        # whole-net optimizer state over the flat parameter vectors
        self.policy_opt = AdamState([self.policy.flat], lr=cfg.policy_lr)
        self.q_opt = AdamState([self.q.flat], lr=cfg.q_lr)
        log_alpha = np.array(0.0)
        self.temperature = TemperatureState(
            log_alpha=log_alpha,
            target_entropy=cfg.target_entropy,
            opt=AdamState([log_alpha], lr=cfg.alpha_lr),
        )

    # -- acting --------------------------------------------------------------

    def policy_heads(self, obs: np.ndarray):
        """Network heads with the raw log_std and its clamped version."""
        out, trace = self.policy.forward_trace(obs)
        mean = out[..., 0]
        raw = out[..., 1]
        log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
        return mean, raw, log_std, trace

    def select_action(self, obs: np.ndarray, mode: str = "stochastic",
                      rng: np.random.Generator | None = None) -> float:
        mean, _, log_std, _ = self.policy_heads(np.asarray(obs, dtype=float))
        if mode == "deterministic":
            return float(np.tanh(mean))
        if mode != "stochastic":
            raise ValueError(f"mode must be stochastic or deterministic, got {mode!r}")
        if rng is None:
            raise ValueError("stochastic mode needs an rng")
        a, _ = squash_sample(mean, log_std, rng.standard_normal(dtype=self.dtype))
        return float(a)

    def entropy_estimate(self, obs_batch: np.ndarray,
                         rng: np.random.Generator) -> float:
        obs_batch = np.atleast_2d(np.asarray(obs_batch, dtype=float))
        if obs_batch.shape[0] == 0:
            raise ValueError("empty observation batch")
        mean, _, log_std, _ = self.policy_heads(obs_batch)
        noise = rng.standard_normal(obs_batch.shape[0], dtype=self.dtype)
        _, logp = squash_sample(mean, log_std, noise)
        return float(-np.mean(logp))

    # -- learning ------------------------------------------------------------

    def _sample_policy(self, obs2d: np.ndarray, noise: np.ndarray):
        """Reparametrized batch sample plus everything the gradients need."""
        mean, raw, log_std, trace = self.policy_heads(obs2d)
        std = np.exp(log_std)
        u = mean + std * noise
        action = np.tanh(u)
        logp = (-0.5 * noise * noise - log_std - 0.5 * math.log(2 * math.pi)
                - np.log(1.0 - action * action + SQUASH_EPS))
        cache = {
            "mean": mean, "raw": raw, "log_std": log_std, "std": std,
            "noise": noise, "action": action, "trace": trace,
            "clamp_mask": ((raw > LOG_STD_MIN) & (raw < LOG_STD_MAX)).astype(float),
        }
        return action, logp, cache

    @staticmethod
    def _q_input(s2d: np.ndarray, a1d: np.ndarray) -> np.ndarray:
        return np.concatenate([s2d, a1d[:, None]], axis=1)

    def _critic_losses_and_grads(self, batch, noise_next):
        """MSE losses toward the entropy-regularized bootstrap target."""
        s, a, r, s_next, done = batch
        alpha = self.temperature.alpha
        a_next, logp_next, _ = self._sample_policy(s_next, noise_next)
        x_next = self._q_input(s_next, a_next)
        qt_pair = self.q_target.forward(x_next)[:, :, 0]
        qt = np.minimum(qt_pair[0], qt_pair[1])
        y = r + self.cfg.gamma * (1.0 - done) * (qt - alpha * logp_next)

        x = self._q_input(s, a)
        pred, trace = self.q.forward_trace(x)
        err = pred[:, :, 0] - y
        q1_loss = float(np.mean(err[0] * err[0]))
        q2_loss = float(np.mean(err[1] * err[1]))
        gout = (2.0 * err / err.shape[1])[:, :, None]
        grads, _ = self.q.backward(trace, gout)
        return q1_loss, q2_loss, grads

    def _policy_loss_and_grads(self, s2d: np.ndarray, noise: np.ndarray):
        """alpha * log pi - min(Q1, Q2) and its gradient wrt policy params.

        The gradient flows through the reparametrized action into both the
        log-density and the pessimistic critic; the raw log_std channel is
        masked where the clamp is active.
        """
        alpha = self.temperature.alpha
        action, logp, cache = self._sample_policy(s2d, noise)
        x = self._q_input(s2d, action)
        q_out, q_trace = self.q.forward_trace(x)
        q1v, q2v = q_out[0, :, 0], q_out[1, :, 0]
        use_q1 = q1v <= q2v
        qmin = np.where(use_q1, q1v, q2v)
        n = s2d.shape[0]
        loss = float(np.mean(alpha * logp - qmin))

        # dQmin/da through whichever critic is active per sample
        sel = np.stack([use_q1, ~use_q1]).astype(self.dtype)[:, :, None]
        _, gin = self.q.backward(q_trace, sel)
        dq_da = gin[0, :, -1] + gin[1, :, -1]     # per-sample dQmin/da

        t = cache["action"]
        d = 1.0 - t * t                              # dtanh/du
        denom = d + SQUASH_EPS
        se = cache["std"] * cache["noise"]           # du/dlog_std
        dlogp_dmean = 2.0 * t * d / denom
        dlogp_dls = -1.0 + 2.0 * t * d * se / denom
        gmean = (alpha * dlogp_dmean - dq_da * d) / n
        gls = (alpha * dlogp_dls - dq_da * d * se) / n
        gout = np.stack([gmean, gls * cache["clamp_mask"]], axis=1)
        grads, _ = self.policy.backward(cache["trace"], gout)
        return loss, grads, logp

    def update(self, buffer: ReplayBuffer, rng: np.random.Generator) -> UpdateReport:
        cfg = self.cfg
        if len(buffer) < cfg.batch_size:
            raise InsufficientBufferError(
                f"buffer holds {len(buffer)} transitions, need {cfg.batch_size}")
        batch = buffer.sample(cfg.batch_size, rng)
        noise_next = rng.standard_normal(cfg.batch_size, dtype=self.dtype)
        noise_pi = rng.standard_normal(cfg.batch_size, dtype=self.dtype)

        q1_loss, q2_loss, q_grads = self._critic_losses_and_grads(batch, noise_next)
        adam_step([self.q.flat], [self.q.flat_grad(q_grads)], self.q_opt)

        policy_loss, policy_grads, logp = \
            self._policy_loss_and_grads(batch[0], noise_pi)
        adam_step([self.policy.flat],
                  [self.policy.flat_grad(policy_grads)], self.policy_opt)

        # temperature: push entropy toward the target, log pi detached
        temp = self.temperature
        alpha_loss = float(np.mean(-temp.log_alpha * (logp + temp.target_entropy)))
        alpha_grad = -np.mean(logp + temp.target_entropy)
        adam_step([temp.log_alpha], [np.asarray(alpha_grad)], temp.opt)

        self._polyak()

        return UpdateReport(
            q1_loss=q1_loss,
            q2_loss=q2_loss,
            policy_loss=policy_loss,
            alpha_loss=alpha_loss,
            alpha=temp.alpha,
            entropy=float(-np.mean(logp)),
        )

    def _polyak(self) -> None:
        """Target critics drift toward the online critics at rate tau."""
        self.q_target.flat *= 1.0 - self.cfg.tau
        self.q_target.flat += self.cfg.tau * self.q.flat

    # -- checkpoint blobs ----------------------------------------------------

    def to_blobs(self) -> dict[str, bytes]:
        temp = self.temperature
        meta = {
            "log_alpha": float(temp.log_alpha),
            "target_entropy": temp.target_entropy,
            "config": asdict(self.cfg),
        }
        return {
            "policy.mlp": self.policy.to_bytes(),
            "q1.mlp": self.q.net(0).to_bytes(),
            "q2.mlp": self.q.net(1).to_bytes(),
            "q1_target.mlp": self.q_target.net(0).to_bytes(),
            "q2_target.mlp": self.q_target.net(1).to_bytes(),
            "policy.adam": self.policy_opt.to_bytes(),
            "q.adam": self.q_opt.to_bytes(),
            "alpha.adam": temp.opt.to_bytes(),
            "temperature.json": json.dumps(meta, sort_keys=True).encode(),
        }

    @staticmethod
    def from_blobs(blobs: dict[str, bytes]) -> "SacAgent":
        meta = json.loads(blobs["temperature.json"].decode())
        cfg_dict = dict(meta["config"])
        cfg_dict["hidden"] = tuple(cfg_dict["hidden"])
        cfg = SacConfig(**cfg_dict)
        policy = Mlp.from_bytes(blobs["policy.mlp"])
        agent = SacAgent(cfg, obs_dim=policy.sizes[0], dtype=policy.dtype)
        agent.policy = policy
        agent.q = TwinMlp.from_nets(Mlp.from_bytes(blobs["q1.mlp"]),
                                    Mlp.from_bytes(blobs["q2.mlp"]))
        agent.q_target = TwinMlp.from_nets(Mlp.from_bytes(blobs["q1_target.mlp"]),
                                           Mlp.from_bytes(blobs["q2_target.mlp"]))
        agent.policy_opt = AdamState.from_bytes(blobs["policy.adam"])
        agent.q_opt = AdamState.from_bytes(blobs["q.adam"])
        log_alpha = np.array(meta["log_alpha"])
        agent.temperature = TemperatureState(
            log_alpha=log_alpha,
            target_entropy=meta["target_entropy"],
            opt=AdamState.from_bytes(blobs["alpha.adam"]),
        )
        return agent


def config_hash(config_dict: dict) -> str:
    return hashlib.sha256(
        json.dumps(config_dict, sort_keys=True).encode()).hexdigest()
