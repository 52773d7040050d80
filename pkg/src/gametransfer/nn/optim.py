from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass
class OptimizerConfig:
    kind: str = "sgd"  # sgd | adam
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.kind!r}")

    def to_dict(self):
        return asdict(self)


class Optimizer:
    """SGD with momentum (default) or Adam; updates ``net.params`` in place."""

    def __init__(self, config: OptimizerConfig):
        self.config = config
        self.state: dict = {}
        self.t = 0

    def step(self, net, grads: dict):
        cfg = self.config
        self.t += 1
        for name, p in net.params.items():
            g = grads[name]
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name}")
            if cfg.weight_decay and name.endswith(".w"):
                g = g + cfg.weight_decay * p
            if cfg.kind == "sgd":
                if cfg.momentum:
                    buf = self.state.get(name)
                    buf = g.copy() if buf is None else cfg.momentum * buf + g
                    self.state[name] = buf
                    g = buf
                p -= cfg.lr * g
            else:
                m, v = self.state.get(name, (np.zeros_like(p), np.zeros_like(p)))
                m = cfg.beta1 * m + (1 - cfg.beta1) * g
                v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
                self.state[name] = (m, v)
                mhat = m / (1 - cfg.beta1 ** self.t)
                vhat = v / (1 - cfg.beta2 ** self.t)
                p -= cfg.lr * mhat / (np.sqrt(vhat) + cfg.eps)
        return net
