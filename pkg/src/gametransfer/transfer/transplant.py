"""Copy trained parameters into a network for a different channel layout.

Only two tensors depend on channel semantics: the input slices of the stem
conv and the output slices of the final policy conv. Everything else (trunk,
batchnorm, value head) is copied verbatim, and the hidden width is kept.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from gametransfer.nn.network import Network
from gametransfer.transfer.mapping import (
    ChannelMapping, match_action_channels, match_state_channels,
)

MODES = ("zero-shot", "finetune")
REINIT_LAYERS = ("policy.conv2", "value.conv")


@dataclass(frozen=True)
class TransferMode:
    mode: str = "zero-shot"
    reinit_final_layers: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown transfer mode {self.mode!r}; expected one of {MODES}")
        if self.reinit_final_layers and self.mode != "finetune":
            raise ValueError("reinitialising final layers only makes sense for fine-tuning")


def transplant(src_net: Network, src_specs, tgt_specs, mode: TransferMode = TransferMode(),
               rng: np.random.Generator | None = None,
               state_map: ChannelMapping | None = None,
               action_map: ChannelMapping | None = None) -> Network:
    """Build a network for ``tgt_specs = (state_spec, action_spec)``.

    Unmatched target slices are zero in zero-shot mode and freshly
    initialised (same initializer as a new network) in finetune mode.
    """
    src_state, src_action = src_specs
    tgt_state, tgt_action = tgt_specs
    if (src_net.config.c_state, src_net.config.c_action) != (len(src_state), len(src_action)):
        raise ValueError("source network does not match the source specs")
    if state_map is None:
        state_map = match_state_channels(src_state, tgt_state)
    if action_map is None:
        action_map = match_action_channels(src_action, tgt_action)
    cfg = replace(src_net.config, c_state=len(tgt_state), c_action=len(tgt_action))
    if mode.mode == "finetune":
        if rng is None:
            raise ValueError("finetune transfer needs an rng for fresh parameters")
        fresh = Network.initialize(cfg, rng)
    else:
        fresh = None

    params = {k: v.copy() for k, v in src_net.params.items()}
    buffers = {k: v.copy() for k, v in src_net.buffers.items()}

    sw = src_net.params["stem.conv.w"]
    stem = np.zeros((sw.shape[0], cfg.c_state, *sw.shape[2:]))
    for j, i in enumerate(state_map.sources):
        if i is not None:
            stem[:, j] = sw[:, i]
        elif fresh is not None:
            stem[:, j] = fresh.params["stem.conv.w"][:, j]
    params["stem.conv.w"] = stem

    pw, pb = src_net.params["policy.conv2.w"], src_net.params["policy.conv2.b"]
    head_w = np.zeros((cfg.c_action, *pw.shape[1:]))
    head_b = np.zeros(cfg.c_action)
    for c_t, c_s in enumerate(action_map.sources):
        if c_s is not None:
            head_w[c_t], head_b[c_t] = pw[c_s], pb[c_s]
        elif fresh is not None:
            head_w[c_t] = fresh.params["policy.conv2.w"][c_t]
            head_b[c_t] = fresh.params["policy.conv2.b"][c_t]
    params["policy.conv2.w"], params["policy.conv2.b"] = head_w, head_b

    net = Network(cfg, params, buffers)
    if mode.reinit_final_layers:
        reinit_final_layers(net, fresh)
    return net


def reinit_final_layers(net: Network, fresh: Network) -> Network:
    """Overwrite the last conv before each output head with ``fresh`` values."""
    for layer in REINIT_LAYERS:
        for suffix in (".w", ".b"):
            net.params[layer + suffix] = fresh.params[layer + suffix].copy()
    return net
