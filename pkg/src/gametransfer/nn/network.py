"""Fully convolutional policy-value network with global-pooling value head.

Layout::

    stem    conv3x3(C_state -> hidden) + BN + ReLU
    blocks  [conv3x3 + BN + ReLU] * layers_per_block, identity skip
    policy  conv3x3(hidden -> hidden) + ReLU + conv3x3(hidden -> C_action)
    value   conv1x1(hidden -> value_channels) -> [mean, max] pool
            -> affine(2 * value_channels -> 1) -> tanh

Every layer keeps spatial dims, so one set of parameters runs on any board.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from gametransfer.nn import layers as L


@dataclass(frozen=True)
class NetworkConfig:
    c_state: int
    c_action: int
    hidden: Optional[int] = None
    blocks: int = 2
    layers_per_block: int = 2
    value_channels: int = 4

    def __post_init__(self):
        if self.hidden is None:
            object.__setattr__(self, "hidden", 2 * self.c_state)
        for name, v in asdict(self).items():
            if v < 1:
                raise ValueError(f"network config {name} must be >= 1, got {v}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _block_prefix(b, l):
    return f"block{b}.layer{l}"


def conv_layer_names(cfg: NetworkConfig) -> list[str]:
    names = ["stem"]
    names += [_block_prefix(b, l) for b in range(cfg.blocks) for l in range(cfg.layers_per_block)]
    return names


class Network:
    """Parameters live in ``params`` (trainable) and ``buffers`` (BN stats),
    both plain ordered dicts of float64 arrays keyed by dotted names."""

    def __init__(self, config: NetworkConfig, params: dict, buffers: dict):
        self.config = config
        self.params = params
        self.buffers = buffers

    # -- construction ------------------------------------------------------
    @classmethod
    def initialize(cls, config: NetworkConfig, rng: np.random.Generator) -> "Network":
        """Fan-in scaled uniform init for convs/affine; BN at identity."""
        params, buffers = {}, {}
        h = config.hidden

        def conv(name, cin, cout, k):
            bound = 1.0 / np.sqrt(cin * k * k)
            params[f"{name}.w"] = rng.uniform(-bound, bound, size=(cout, cin, k, k))
            params[f"{name}.b"] = rng.uniform(-bound, bound, size=cout)

        def bn(name, c):
            params[f"{name}.gamma"] = np.ones(c)
            params[f"{name}.beta"] = np.zeros(c)
            buffers[f"{name}.mean"] = np.zeros(c)
            buffers[f"{name}.var"] = np.ones(c)

        conv("stem.conv", config.c_state, h, 3)
        bn("stem.bn", h)
        for b in range(config.blocks):
            for l in range(config.layers_per_block):
                p = _block_prefix(b, l)
                conv(f"{p}.conv", h, h, 3)
                bn(f"{p}.bn", h)
        conv("policy.conv1", h, h, 3)
        conv("policy.conv2", h, config.c_action, 3)
        conv("value.conv", h, config.value_channels, 1)
        bound = 1.0 / np.sqrt(2 * config.value_channels)
        params["value.fc.w"] = rng.uniform(-bound, bound, size=(1, 2 * config.value_channels))
        params["value.fc.b"] = rng.uniform(-bound, bound, size=1)
        return cls(config, params, buffers)

    @classmethod
    def zeros(cls, config: NetworkConfig) -> "Network":
        net = cls.initialize(config, np.random.default_rng(0))
        for k, v in net.params.items():
            if not k.endswith(".gamma"):
                v[...] = 0.0
        return net

    def copy(self) -> "Network":
        return Network(self.config,
                       {k: v.copy() for k, v in self.params.items()},
                       {k: v.copy() for k, v in self.buffers.items()})

    def num_parameters(self) -> int:
        return sum(v.size for v in self.params.values())

    # -- forward / backward -----------------------------------------------
    def forward(self, x: np.ndarray, train: bool = False, cache: Optional[list] = None):
        """``x`` of shape (N, C_state, H, W) -> (logits (N, C_action, H, W), value (N,)).

        In train mode batch statistics are used and running stats updated.
        Pass a list as ``cache`` to record what :meth:`backward` needs.
        """
        if x.ndim != 4 or x.shape[1] != self.config.c_state:
            raise ValueError(f"expected input (N, {self.config.c_state}, H, W), got {x.shape}")
        if not np.isfinite(x).all():
            raise ValueError("network input contains NaN or Inf")
        P, B = self.params, self.buffers
        rec = cache.append if cache is not None else (lambda item: None)

        def conv_bn_relu(h, name):
            h, c1 = L.conv_forward(h, P[f"{name}.conv.w"], P[f"{name}.conv.b"])
            h, c2, rm, rv = L.batchnorm_forward(h, P[f"{name}.bn.gamma"], P[f"{name}.bn.beta"],
                                                B[f"{name}.bn.mean"], B[f"{name}.bn.var"], train)
            if train:
                B[f"{name}.bn.mean"], B[f"{name}.bn.var"] = rm, rv
            h, c3 = L.relu_forward(h)
            rec((name, c1, c2, c3))
            return h

        h = conv_bn_relu(x, "stem")
        for b in range(self.config.blocks):
            skip = h
            for l in range(self.config.layers_per_block):
                h = conv_bn_relu(h, _block_prefix(b, l))
            h = h + skip
        p, cp1 = L.conv_forward(h, P["policy.conv1.w"], P["policy.conv1.b"])
        p, cp2 = L.relu_forward(p)
        logits, cp3 = L.conv_forward(p, P["policy.conv2.w"], P["policy.conv2.b"])
        v, cv1 = L.conv_forward(h, P["value.conv.w"], P["value.conv.b"])
        v, cv2 = L.global_pool_forward(v)
        v, cv3 = L.affine_forward(v, P["value.fc.w"], P["value.fc.b"])
        v, cv4 = L.tanh_forward(v)
        rec(("heads", cp1, cp2, cp3, cv1, cv2, cv3, cv4))
        return logits, v[:, 0]

    def backward(self, dlogits: np.ndarray, dvalue: np.ndarray, cache: list) -> dict:
        """Gradients of sum(dlogits * logits) + sum(dvalue * value) w.r.t. params."""
        grads = {}
        _, cp1, cp2, cp3, cv1, cv2, cv3, cv4 = cache[-1]
        dv = L.tanh_backward(dvalue[:, None], cv4)
        dv, grads["value.fc.w"], grads["value.fc.b"] = L.affine_backward(dv, cv3)
        dv = L.global_pool_backward(dv, cv2)
        dh, grads["value.conv.w"], grads["value.conv.b"] = L.conv_backward(dv, cv1)
        dp, grads["policy.conv2.w"], grads["policy.conv2.b"] = L.conv_backward(dlogits, cp3)
        dp = L.relu_backward(dp, cp2)
        dp, grads["policy.conv1.w"], grads["policy.conv1.b"] = L.conv_backward(dp, cp1)
        dh = dh + dp

        entries = iter(reversed(cache[:-1]))

        def back_conv_bn_relu(d):
            name, c1, c2, c3 = next(entries)
            d = L.relu_backward(d, c3)
            d, grads[f"{name}.bn.gamma"], grads[f"{name}.bn.beta"] = L.batchnorm_backward(d, c2)
            d, grads[f"{name}.conv.w"], grads[f"{name}.conv.b"] = L.conv_backward(d, c1)
            return d

        for _ in range(self.config.blocks):
            d_skip = dh
            for _ in range(self.config.layers_per_block):
                dh = back_conv_bn_relu(dh)
            dh = dh + d_skip
        back_conv_bn_relu(dh)
        return {k: grads[k] for k in self.params}

    def predict(self, x: np.ndarray):
        """Eval-mode forward for a single (C, H, W) state."""
        logits, v = self.forward(x[None])
        return logits[0], float(v[0])


# -- policy distribution and loss --------------------------------------------
def masked_softmax(logits: np.ndarray, groups) -> np.ndarray:
    """Softmax over the distinct legal policy cells.

    ``groups`` is a sequence of policy indices (or objects with a
    ``policy_index``); each index contributes its logit exactly once, however
    many aliased moves share it. Returns one probability per group.
    """
    if len(groups) == 0:
        raise ValueError("masked_softmax needs at least one legal group")
    idx = [getattr(g, "policy_index", g) for g in groups]
    c, y, x = np.array(idx).T
    vals = logits[c, y, x]
    vals = vals - vals.max()
    e = np.exp(vals)
    return e / e.sum()


def masked_softmax_from_mask(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Probability tensor shaped like ``logits``; zero outside ``mask``."""
    if not mask.any():
        raise ValueError("masked_softmax needs at least one legal cell")
    vals = np.where(mask, logits, -np.inf)
    vals = vals - vals[mask].max()
    e = np.where(mask, np.exp(vals), 0.0)
    return e / e.sum()


def _batch_policy_terms(logits, target, mask):
    """Per-example cross-entropy and its logit gradient for masked softmax."""
    if np.any(target[~mask] != 0):
        raise ValueError("policy target puts mass on illegal cells")
    n = logits.shape[0]
    flat_l = np.where(mask, logits, -np.inf).reshape(n, -1)
    mx = flat_l.max(axis=1, keepdims=True)
    e = np.exp(flat_l - mx)
    s = e.sum(axis=1, keepdims=True)
    logp = np.where(mask.reshape(n, -1), flat_l - mx - np.log(s), 0.0)
    t = target.reshape(n, -1)
    ce = -(t * logp).sum(axis=1)
    dlogits = (e / s - t).reshape(logits.shape)
    return ce, dlogits


def loss(logits, value, policy_target, z, mask):
    """Cross-entropy over legal cells plus squared value error, batch mean.

    Shapes: logits/policy_target/mask (N, A, H, W); value/z (N,).
    Returns (loss, policy_loss, value_loss) as floats.
    """
    ce, _ = _batch_policy_terms(logits, policy_target, mask)
    vl = (value - z) ** 2
    return float((ce + vl).mean()), float(ce.mean()), float(vl.mean())


def loss_and_grads(net: Network, states, policy_target, z, mask, train: bool = True):
    """Mean batch loss and exact gradients for every trainable parameter."""
    cache = []
    logits, value = net.forward(states, train=train, cache=cache)
    n = states.shape[0]
    ce, dlogits = _batch_policy_terms(logits, policy_target, mask)
    vl = (value - z) ** 2
    dvalue = 2.0 * (value - z) / n
    grads = net.backward(dlogits / n, dvalue, cache)
    stats = {"loss": float((ce + vl).mean()), "policy_loss": float(ce.mean()),
             "value_loss": float(vl.mean())}
    return stats, grads


class InferenceNet:
    """Frozen eval-mode snapshot of a :class:`Network` for single-state calls.

    Batchnorm is folded into the preceding conv and im2col uses cached gather
    indices per board size. Outputs agree with ``Network.forward(train=False)``
    up to float rounding; use ``forward`` wherever exact comparison matters.
    """

    def __init__(self, net: Network):
        self.config = net.config
        P, B = net.params, net.buffers
        self._trunk = []
        for name in conv_layer_names(net.config):
            scale = P[f"{name}.bn.gamma"] / np.sqrt(B[f"{name}.bn.var"] + L.BN_EPS)
            w = P[f"{name}.conv.w"] * scale[:, None, None, None]
            b = (P[f"{name}.conv.b"] - B[f"{name}.bn.mean"]) * scale + P[f"{name}.bn.beta"]
            self._trunk.append((w.reshape(w.shape[0], -1).T.copy(), b))
        self._p1 = (P["policy.conv1.w"].reshape(P["policy.conv1.w"].shape[0], -1).T.copy(),
                    P["policy.conv1.b"])
        self._p2 = (P["policy.conv2.w"].reshape(P["policy.conv2.w"].shape[0], -1).T.copy(),
                    P["policy.conv2.b"])
        self._v = (P["value.conv.w"][:, :, 0, 0].T.copy(), P["value.conv.b"])
        self._fc = (P["value.fc.w"][0].copy(), float(P["value.fc.b"][0]))
        self._gather = {}

    def _indices(self, c, h, w):
        key = (c, h, w)
        idx = self._gather.get(key)
        if idx is None:
            hp, wp = h + 2, w + 2
            ch, dy, dx = np.meshgrid(np.arange(c), np.arange(3), np.arange(3), indexing="ij")
            offs = (ch * hp * wp + dy * wp + dx).ravel()  # matches (C, 3, 3) weight layout
            ys, xs = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
            base = (ys * wp + xs).ravel()
            idx = base[:, None] + offs[None, :]
            self._gather[key] = idx
        return idx

    def _conv3(self, x, wb):
        c, h, w = x.shape
        pad = np.zeros((c, h + 2, w + 2))
        pad[:, 1:-1, 1:-1] = x
        cols = pad.ravel()[self._indices(c, h, w)]  # (H*W, C*9)
        out = cols @ wb[0] + wb[1]
        return out.T.reshape(-1, h, w)

    def predict(self, x: np.ndarray):
        """(C_state, H, W) -> (logits (C_action, H, W), value float)."""
        h = x
        cfg = self.config
        trunk = iter(self._trunk)
        h = np.maximum(self._conv3(h, next(trunk)), 0.0)
        for _ in range(cfg.blocks):
            skip = h
            for _ in range(cfg.layers_per_block):
                h = np.maximum(self._conv3(h, next(trunk)), 0.0)
            h = h + skip
        p = np.maximum(self._conv3(h, self._p1), 0.0)
        logits = self._conv3(p, self._p2)
        c, hh, ww = h.shape
        v = h.reshape(c, -1).T @ self._v[0] + self._v[1]  # (H*W, Cv)
        feats = np.concatenate([v.mean(axis=0), v.max(axis=0)])
        value = float(np.tanh(feats @ self._fc[0] + self._fc[1]))
        return logits, value
