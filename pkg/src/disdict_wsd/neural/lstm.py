"""Single LSTM layer over left-padded, masked batches (numpy, manual backprop).

Gate layout in ``W`` (shape ``(4H, D + H)``) and ``b`` is ``[input, forget, output, cell]``.
At masked steps the state is carried over unchanged, so a left-padded sequence
ends on its last real token.
"""

import numpy as np


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_forward(x, mask, W, b):
    """Run one layer.

    x: (B, L, D) inputs, mask: (B, L) of 0/1.  Returns ``(hs, cache)`` where
    ``hs`` is (B, L, H) and ``hs[:, -1]`` is the final state.
    """
    B, L, D = x.shape
    H = W.shape[0] // 4
    h = np.zeros((B, H), dtype=x.dtype)
    c = np.zeros((B, H), dtype=x.dtype)
    hs = np.empty((B, L, H), dtype=x.dtype)
    steps = []
    for t in range(L):
        xh = np.concatenate([x[:, t], h], axis=1)
        z = xh @ W.T + b
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H:2 * H])
        o = sigmoid(z[:, 2 * H:3 * H])
        g = np.tanh(z[:, 3 * H:])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        m = mask[:, t, None]
        steps.append((xh, i, f, o, g, c, tc, m))
        c = m * c_new + (1.0 - m) * c
        h = m * h_new + (1.0 - m) * h
        hs[:, t] = h
    return hs, (steps, W, D)


def lstm_backward(dhs, cache):
    """Backprop ``dhs`` (B, L, H), the gradient w.r.t. every output state.

    Returns ``(dx, dW, db)``.
    """
    steps, W, D = cache
    B, L, H = dhs.shape
    dW = np.zeros_like(W)
    db = np.zeros(W.shape[0], dtype=W.dtype)
    dx = np.zeros((B, L, D), dtype=W.dtype)
    dh_next = np.zeros((B, H), dtype=W.dtype)
    dc_next = np.zeros((B, H), dtype=W.dtype)
    for t in range(L - 1, -1, -1):
        xh, i, f, o, g, c_prev, tc, m = steps[t]
        dh = dh_next + dhs[:, t]
        dh_new = m * dh
        dc_new = m * dc_next + dh_new * o * (1.0 - tc * tc)
        do = dh_new * tc
        di = dc_new * g
        dg = dc_new * i
        df = dc_new * c_prev
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            do * o * (1.0 - o),
            dg * (1.0 - g * g),
        ], axis=1)
        dW += dz.T @ xh
        db += dz.sum(axis=0)
        dxh = dz @ W
        dx[:, t] = dxh[:, :D]
        dh_next = dxh[:, D:] + (1.0 - m) * dh
        dc_next = dc_new * f + (1.0 - m) * dc_next
    return dx, dW, db
