"""Neural mutual-information estimation via the Donsker-Varadhan bound.

A two-layer ReLU statistic network is trained by Adam to maximize

    mean_joint T  -  log mean_marginal exp(T)

with marginal batches formed by shuffling one side of the joint batch. The
gradient's denominator uses an exponential moving average of mean exp(T)
(kept in log space) to de-bias the stochastic estimate; the reported value
is an EMA-smoothed full-data bound, clamped at zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InsufficientInputError, ShapeError, ValidationError
from .optim import Adam


@dataclass(frozen=True)
class MineConfig:
    epochs: int = 200
    batch_size: int = 512
    learning_rate: float = 1e-3
    hidden: int = 128
    seed: int = 0
    ema_rate: float = 0.01  # denominator bias-correction moving average
    smooth_rate: float = 0.05  # reporting EMA over the per-epoch bound

    def __post_init__(self):
        if self.epochs < 1 or self.hidden < 1:
            raise ValidationError("epochs and hidden width must be >= 1")


@dataclass
class StatisticNet:
    """T(v, e): concat input, one ReLU hidden layer, scalar output."""

    w1: np.ndarray  # (hidden, in_dim)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: np.ndarray  # () scalar as 0-d array

    @staticmethod
    def init(in_dim: int, hidden: int, rng: np.random.Generator) -> "StatisticNet":
        bound1 = 1.0 / np.sqrt(in_dim)
        bound2 = 1.0 / np.sqrt(hidden)
        return StatisticNet(
            rng.uniform(-bound1, bound1, size=(hidden, in_dim)),
            rng.uniform(-bound1, bound1, size=hidden),
            rng.uniform(-bound2, bound2, size=hidden),
            np.asarray(rng.uniform(-bound2, bound2)),
        )

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pre = x @ self.w1.T + self.b1
        hidden = np.maximum(pre, 0.0)
        return hidden @ self.w2 + self.b2, pre

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def params(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}


@dataclass(frozen=True)
class MiEstimate:
    value: float  # nats, clamped at 0
    history: tuple[float, ...]  # per-epoch full-data bound
    config: MineConfig


def _logmeanexp(t: np.ndarray) -> float:
    m = float(np.max(t))
    return m + float(np.log(np.mean(np.exp(t - m))))


def dv_objective(net: StatisticNet, joint: np.ndarray, marginal: np.ndarray) -> float:
    """Donsker-Varadhan bound for one pair of batches, log-sum-exp stabilized."""
    joint = np.atleast_2d(np.asarray(joint, dtype=np.float64))
    marginal = np.atleast_2d(np.asarray(marginal, dtype=np.float64))
    if joint.shape[0] == 0 or marginal.shape[0] == 0:
        raise ValidationError("batches must be non-empty")
    t_joint = net(joint)
    t_marg = net(marginal)
    return float(np.mean(t_joint)) - _logmeanexp(t_marg)


def _accumulate(net: StatisticNet, x: np.ndarray, coef: np.ndarray, grads: dict[str, np.ndarray]):
    t, pre = net.forward(x)
    hidden = np.maximum(pre, 0.0)
    grads["w2"] += coef @ hidden
    grads["b2"] += coef.sum()
    delta = (coef[:, None] * net.w2[None, :]) * (pre > 0)
    grads["w1"] += delta.T @ x
    grads["b1"] += delta.sum(axis=0)
    return t


def _as_matrix(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x[:, None] if x.ndim == 1 else x


def estimate_mi(v_samples: np.ndarray, e_samples: np.ndarray, cfg: MineConfig | None = None) -> MiEstimate:
    """Estimate I(v; e) in nats from paired samples.

    Requires equal sample counts (>= 100). The per-epoch history holds the
    full-data bound (fresh seeded shuffle each epoch); the reported value is
    its EMA under cfg.smooth_rate, clamped below at zero because the true MI
    cannot be negative.
    """
    cfg = cfg or MineConfig()
    v = _as_matrix(v_samples)
    e = _as_matrix(e_samples)
    if v.shape[0] != e.shape[0]:
        raise ShapeError("v and e must pair up one-to-one")
    n = v.shape[0]
    if n < 100:
        raise InsufficientInputError(f"need >= 100 samples, got {n}")

    rng = np.random.default_rng(cfg.seed)
    net = StatisticNet.init(v.shape[1] + e.shape[1], cfg.hidden, rng)
    opt = Adam(net.params(), cfg.learning_rate, maximize=True)
    joint_all = np.concatenate([v, e], axis=1)
    ema_log = None

    history: list[float] = []
    smoothed = None
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            vb, eb = v[idx], e[idx]
            joint = np.concatenate([vb, eb], axis=1)
            marginal = np.concatenate([vb, eb[rng.permutation(idx.size)]], axis=1)

            t_marg = net(marginal)
            batch_log = _logmeanexp(t_marg)
            if ema_log is None:
                ema_log = batch_log
            else:
                ema_log = np.logaddexp(
                    np.log1p(-cfg.ema_rate) + ema_log, np.log(cfg.ema_rate) + batch_log
                )

            grads = {k: np.zeros_like(p) for k, p in net.params().items()}
            _accumulate(net, joint, np.full(idx.size, 1.0 / idx.size), grads)
            _accumulate(net, marginal, -np.exp(t_marg - ema_log) / idx.size, grads)
            opt.step(grads)

        eval_perm = rng.permutation(n)
        bound = dv_objective(net, joint_all, np.concatenate([v, e[eval_perm]], axis=1))
        if not np.isfinite(bound):
            raise DivergenceError("non-finite Donsker-Varadhan bound during training")
        history.append(bound)
        smoothed = bound if smoothed is None else (1 - cfg.smooth_rate) * smoothed + cfg.smooth_rate * bound

    return MiEstimate(max(0.0, float(smoothed)), tuple(history), cfg)
