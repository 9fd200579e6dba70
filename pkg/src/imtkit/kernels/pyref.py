"""Reference kernel implementations in numpy.

Every function here has a compiled twin in ``_ext`` with identical
signatures and semantics; parity and gradient tests cover both.  All
arrays are float64 and C-contiguous.  Forward kernels that participate
in training return a cache tuple consumed by the matching backward
kernel.

GRU gate layout: weight matrices stack the update (z), reset (r) and
candidate (h) blocks along the last axis, in that order.
"""

import numpy as np

BACKEND_NAME = "python"


def softmax(x):
    """Row-wise softmax with max subtraction; works on 1D or 2D input."""
    x = np.asarray(x, dtype=np.float64)
    m = np.max(x, axis=-1, keepdims=True)
    e = np.exp(x - m)
    return e / np.sum(e, axis=-1, keepdims=True)


def log_softmax(x):
    x = np.asarray(x, dtype=np.float64)
    m = np.max(x, axis=-1, keepdims=True)
    s = x - m
    return s - np.log(np.sum(np.exp(s), axis=-1, keepdims=True))


def sigmoid(x):
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def affine_fwd(x, w, b):
    """y = x @ w + b for x (B, di), w (di, do), b (do,)."""
    return x @ w + b


def affine_bwd(x, w, dy):
    dx = dy @ w.T
    dw = x.T @ dy
    db = dy.sum(axis=0)
    return dx, dw, db


def tanh_fwd(x):
    return np.tanh(x)


def tanh_bwd(y, dy):
    return dy * (1.0 - y * y)


def gru_fwd(x, h_prev, wx, wh, b):
    """One batched GRU step.

    x (B, dx), h_prev (B, dh), wx (dx, 3dh), wh (dh, 3dh), b (3dh,).
    Returns (h_new, cache).  h_new = (1-z)*h_prev + z*htilde.
    """
    dh = h_prev.shape[1]
    gx = x @ wx + b
    gh = h_prev @ wh
    z = sigmoid(gx[:, :dh] + gh[:, :dh])
    r = sigmoid(gx[:, dh : 2 * dh] + gh[:, dh : 2 * dh])
    rh = r * h_prev
    htilde = np.tanh(gx[:, 2 * dh :] + rh @ wh[:, 2 * dh :])
    h_new = (1.0 - z) * h_prev + z * htilde
    cache = (x, h_prev, z, r, htilde)
    return h_new, cache


def gru_bwd(cache, wx, wh, dh_new):
    """Backward of gru_fwd. Returns (dx, dh_prev, dwx, dwh, db)."""
    x, h_prev, z, r, htilde = cache
    dh = h_prev.shape[1]

    dz = dh_new * (htilde - h_prev)
    dhtilde = dh_new * z
    dh_prev = dh_new * (1.0 - z)

    da_h = dhtilde * (1.0 - htilde * htilde)
    da_z = dz * z * (1.0 - z)

    drh = da_h @ wh[:, 2 * dh :].T
    dr = drh * h_prev
    dh_prev = dh_prev + drh * r
    da_r = dr * r * (1.0 - r)

    da = np.concatenate([da_z, da_r, da_h], axis=1)
    dx = da @ wx.T
    dwx = x.T @ da
    db = da.sum(axis=0)

    dwh = np.empty_like(wh)
    dwh[:, :dh] = h_prev.T @ da_z
    dwh[:, dh : 2 * dh] = h_prev.T @ da_r
    dwh[:, 2 * dh :] = (r * h_prev).T @ da_h
    dh_prev = dh_prev + da_z @ wh[:, :dh].T + da_r @ wh[:, dh : 2 * dh].T
    return dx, dh_prev, dwx, dwh, db


def attn_fwd(q, h, hproj, wq, v):
    """Additive attention over source annotations.

    q (B, dh) queries, h (L, da) annotations, hproj (L, dn) projected
    annotations (affine of h, computed by the caller), wq (dh, dn),
    v (dn,).  Scores e[b,l] = v . tanh(q[b] @ wq + hproj[l]); alpha is
    the row softmax of e and ctx[b] = alpha[b] @ h.
    """
    qp = q @ wq  # (B, dn)
    t = np.tanh(qp[:, None, :] + hproj[None, :, :])  # (B, L, dn)
    e = t @ v  # (B, L)
    alpha = softmax(e)
    ctx = alpha @ h
    cache = (q, t, alpha)
    return ctx, alpha, cache


def attn_bwd(cache, h, wq, v, dctx, dalpha=None):
    """Backward of attn_fwd.

    Returns (dq, dh, dhproj, dwq, dv).  dalpha is an optional direct
    gradient on the attention weights (usually None).
    """
    q, t, alpha = cache
    da = dctx @ h.T  # (B, L)
    if dalpha is not None:
        da = da + dalpha
    dh = alpha.T @ dctx  # (L, da)

    # softmax backward
    de = alpha * (da - np.sum(da * alpha, axis=-1, keepdims=True))

    dt = de[:, :, None] * v[None, None, :]  # (B, L, dn)
    dpre = dt * (1.0 - t * t)
    dv = np.einsum("bln,bl->n", t, de)
    dqp = dpre.sum(axis=1)  # (B, dn)
    dhproj = dpre.sum(axis=0)  # (L, dn)
    dq = dqp @ wq.T
    dwq = q.T @ dqp
    return dq, dh, dhproj, dwq, dv


def softmax_xent_fwd(logits, targets):
    """Per-row cross entropy: losses[b] = -log softmax(logits)[b, targets[b]].

    Returns (losses, probs).
    """
    lp = log_softmax(logits)
    rows = np.arange(logits.shape[0])
    losses = -lp[rows, targets]
    return losses, np.exp(lp)


def softmax_xent_bwd(probs, targets, dlosses):
    dlogits = probs * dlosses[:, None]
    rows = np.arange(probs.shape[0])
    dlogits[rows, targets] -= dlosses
    return dlogits
