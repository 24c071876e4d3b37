"""Differentiable building blocks with explicit backward passes.

Tensors are channels-last with a leading batch axis: images are
``(B, H, W, C)`` and sequences ``(B, T, H, W, C)``. Convolutions are
stride-1 cross-correlations with "same" zero padding; weights are
``(k, k, C_in, C_out)``.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _check_conv(x, w, b):
    if x.ndim != 4:
        raise ValueError(f"conv2d input must be (B, H, W, C), got {x.shape}")
    if w.ndim != 4 or w.shape[0] != w.shape[1] or w.shape[0] % 2 == 0:
        raise ValueError(f"conv2d weights must be (k, k, C_in, C_out) with odd k, got {w.shape}")
    if x.shape[-1] != w.shape[2]:
        raise ValueError(f"input has {x.shape[-1]} channels, weights expect {w.shape[2]}")
    if b.shape != (w.shape[3],):
        raise ValueError(f"bias shape {b.shape} does not match {w.shape[3]} filters")
    if x.shape[1] < w.shape[0] or x.shape[2] < w.shape[0]:
        raise ValueError(f"field {x.shape[1:3]} smaller than kernel {w.shape[0]}")


def _cols(xp, k, h, w):
    bsz, c = xp.shape[0], xp.shape[-1]
    v = sliding_window_view(xp, (k, k), axis=(1, 2))  # (B, H, W, C, k, k)
    return v.reshape(bsz * h * w, c * k * k)


def conv2d_forward(x, w, b):
    x = np.asarray(x, dtype=np.float64)
    _check_conv(x, w, b)
    k = w.shape[0]
    p = k // 2
    bsz, h, wd, cin = x.shape
    xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0))) if p else x
    wmat = w.transpose(2, 0, 1, 3).reshape(cin * k * k, -1)
    y = (_cols(xp, k, h, wd) @ wmat).reshape(bsz, h, wd, -1) + b
    return y, (xp, w, x.shape)


def conv2d_backward(dy, cache):
    xp, w, xshape = cache
    k = w.shape[0]
    p = k // 2
    bsz, h, wd, cin = xshape
    cout = w.shape[3]
    dy2 = dy.reshape(-1, cout)
    db = dy2.sum(axis=0)
    wmat = w.transpose(2, 0, 1, 3).reshape(cin * k * k, cout)
    dw = (_cols(xp, k, h, wd).T @ dy2).reshape(cin, k, k, cout).transpose(1, 2, 0, 3)
    dcols = (dy2 @ wmat.T).reshape(bsz, h, wd, cin, k, k)
    dxp = np.zeros(xp.shape)
    for i in range(k):
        for j in range(k):
            dxp[:, i:i + h, j:j + wd, :] += dcols[..., i, j]
    dx = dxp[:, p:p + h, p:p + wd, :] if p else dxp
    return dx, dw, db


def conv2d(x, w, b):
    """Forward only; accepts unbatched ``(H, W, C)`` input as well."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        return conv2d_forward(x[None], w, b)[0][0]
    return conv2d_forward(x, w, b)[0]


def relu_forward(x):
    return np.maximum(x, 0.0), x > 0


def relu_backward(dy, mask):
    return dy * mask


def sigmoid(z):
    # split by sign so large |z| neither overflows nor loses precision
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def convlstm_cell_forward(x, h_prev, c_prev, w, b):
    """One ConvLSTM step; gate pre-activations come from a conv over ``[x, h]``.

    The ``4F`` output channels of ``w`` are ordered input, forget, output,
    candidate.
    """
    f = h_prev.shape[-1]
    if w.shape[3] != 4 * f:
        raise ValueError(f"gate weights emit {w.shape[3]} channels, expected 4*{f}")
    if c_prev.shape != h_prev.shape or x.shape[:3] != h_prev.shape[:3]:
        raise ValueError("x, h and c disagree on batch or lattice dims")
    z, conv_cache = conv2d_forward(np.concatenate([x, h_prev], axis=-1), w, b)
    i = sigmoid(z[..., :f])
    fg = sigmoid(z[..., f:2 * f])
    o = sigmoid(z[..., 2 * f:3 * f])
    g = np.tanh(z[..., 3 * f:])
    c = fg * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (conv_cache, i, fg, o, g, c_prev, tc, x.shape[-1])


def convlstm_cell_backward(dh, dc, cache):
    """Gradients for one step given upstream ``dL/dh_t`` and ``dL/dc_t``."""
    conv_cache, i, fg, o, g, c_prev, tc, cin = cache
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc * tc)
    di = dc * g
    dg = dc * i
    df = dc * c_prev
    dc_prev = dc * fg
    dz = np.concatenate([
        di * i * (1.0 - i),
        df * fg * (1.0 - fg),
        do * o * (1.0 - o),
        dg * (1.0 - g * g),
    ], axis=-1)
    dxh, dw, db = conv2d_backward(dz, conv_cache)
    return dxh[..., :cin], dxh[..., cin:], dc_prev, dw, db


def convlstm_forward(xs, w, b, filters: int):
    """Run a ConvLSTM layer over ``(B, T, H, W, C)``; returns all hidden states."""
    if xs.ndim != 5:
        raise ValueError(f"ConvLSTM input must be (B, T, H, W, C), got {xs.shape}")
    bsz, t, hgt, wd, _ = xs.shape
    h = np.zeros((bsz, hgt, wd, filters))
    c = np.zeros_like(h)
    hs, caches = [], []
    for s in range(t):
        h, c, cache = convlstm_cell_forward(xs[:, s], h, c, w, b)
        hs.append(h)
        caches.append(cache)
    return np.stack(hs, axis=1), caches


def convlstm_backward(dhs, caches):
    bsz, t = dhs.shape[:2]
    dh_next = np.zeros_like(dhs[:, 0])
    dc_next = np.zeros_like(dh_next)
    dxs = [None] * t
    dw = db = None
    for s in reversed(range(t)):
        dx, dh_next, dc_next, dw_s, db_s = convlstm_cell_backward(dhs[:, s] + dh_next, dc_next, caches[s])
        dxs[s] = dx
        dw = dw_s if dw is None else dw + dw_s
        db = db_s if db is None else db + db_s
    return np.stack(dxs, axis=1), dw, db


def time_collapse_forward(hs, w, b):
    """1x1 convolution over the time-stacked channels: ``(B,T,H,W,F) -> (B,H,W,C_out)``."""
    bsz, t, hgt, wd, f = hs.shape
    if w.shape[:3] != (1, 1, t * f):
        raise ValueError(f"collapse weights {w.shape} do not match T*F = {t}*{f}")
    stacked = hs.transpose(0, 2, 3, 1, 4).reshape(bsz, hgt, wd, t * f)
    y, cache = conv2d_forward(stacked, w, b)
    return y, (cache, hs.shape)


def time_collapse_backward(dy, cache):
    conv_cache, shape = cache
    bsz, t, hgt, wd, f = shape
    dstack, dw, db = conv2d_backward(dy, conv_cache)
    return dstack.reshape(bsz, hgt, wd, t, f).transpose(0, 3, 1, 2, 4), dw, db


def mse_loss(pred, target):
    """Mean squared error and its gradient with respect to ``pred``."""
    if pred.shape != target.shape:
        raise ValueError(f"prediction {pred.shape} vs target {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size
