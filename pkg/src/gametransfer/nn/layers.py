"""Functional layers with hand-written backward passes (float64, NCHW).

Every ``*_forward`` returns ``(out, cache)``; the matching ``*_backward``
takes ``(dout, cache)`` and returns the input gradient first, then
parameter gradients.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BN_EPS = 1e-5
BN_MOMENTUM = 0.9


def _conv(x, w, pad):
    k = w.shape[-1]
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    if k == 1:
        cols = x[:, :, :, :, None, None]
    else:
        cols = sliding_window_view(x, (k, k), axis=(2, 3))  # N, C, H, W, k, k
    out = np.tensordot(cols, w, axes=([1, 4, 5], [1, 2, 3]))  # N, H, W, K
    return out.transpose(0, 3, 1, 2), cols


def conv_forward(x, w, b):
    """Stride 1, dilation 1, 'same' padding (k // 2)."""
    pad = w.shape[-1] // 2
    out, cols = _conv(x, w, pad)
    out = out + b[None, :, None, None]
    return np.ascontiguousarray(out), (cols, w, pad)


def conv_backward(dout, cache):
    cols, w, pad = cache
    k = w.shape[-1]
    dw = np.tensordot(dout, cols, axes=([0, 2, 3], [0, 2, 3]))  # K, C, k, k
    db = dout.sum(axis=(0, 2, 3))
    # Full correlation with the flipped, transposed kernel.
    w_t = np.ascontiguousarray(w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
    dx, _ = _conv(dout, w_t, k - 1 - pad)
    return np.ascontiguousarray(dx), dw, db


def batchnorm_forward(x, gamma, beta, running_mean, running_var, train):
    """Returns (out, cache, new_running_mean, new_running_var)."""
    if train:
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        running_mean = BN_MOMENTUM * running_mean + (1 - BN_MOMENTUM) * mean
        running_var = BN_MOMENTUM * running_var + (1 - BN_MOMENTUM) * var
    else:
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
    out = gamma[None, :, None, None] * xhat + beta[None, :, None, None]
    return out, (xhat, inv_std, gamma, train), running_mean, running_var


def batchnorm_backward(dout, cache):
    xhat, inv_std, gamma, train = cache
    dgamma = (dout * xhat).sum(axis=(0, 2, 3))
    dbeta = dout.sum(axis=(0, 2, 3))
    dxhat = dout * gamma[None, :, None, None]
    if not train:
        return dxhat * inv_std[None, :, None, None], dgamma, dbeta
    m = dout.shape[0] * dout.shape[2] * dout.shape[3]
    dx = (inv_std[None, :, None, None] / m) * (
        m * dxhat
        - dxhat.sum(axis=(0, 2, 3))[None, :, None, None]
        - xhat * (dxhat * xhat).sum(axis=(0, 2, 3))[None, :, None, None]
    )
    return dx, dgamma, dbeta


def relu_forward(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(dout, mask):
    return dout * mask


def global_pool_forward(x):
    """(N, C, H, W) -> (N, 2C): per-channel spatial means then maxima."""
    n, c = x.shape[:2]
    flat = x.reshape(n, c, -1)
    arg = flat.argmax(axis=2)
    mx = np.take_along_axis(flat, arg[:, :, None], axis=2)[:, :, 0]
    return np.concatenate([flat.mean(axis=2), mx], axis=1), (x.shape, arg)


def global_pool_backward(dout, cache):
    shape, arg = cache
    n, c, h, w = shape
    dmean, dmax = dout[:, :c], dout[:, c:]
    dflat = np.repeat((dmean / (h * w))[:, :, None], h * w, axis=2)
    idx_n, idx_c = np.indices((n, c))
    dflat[idx_n, idx_c, arg] += dmax
    return dflat.reshape(shape)


def affine_forward(x, w, b):
    """x (N, D) @ w.T (D, M) + b."""
    return x @ w.T + b, (x, w)


def affine_backward(dout, cache):
    x, w = cache
    return dout @ w, dout.T @ x, dout.sum(axis=0)


def tanh_forward(x):
    y = np.tanh(x)
    return y, y


def tanh_backward(dout, y):
    return dout * (1.0 - y * y)
