"""Teacher-forced likelihood, hand-derived gradients, and the train loop.

The joint objective is the sum of two length-normalized NLL terms, one
per decoder: the forward decoder is forced on the target plus its
terminal EOS, the backward decoder on the reversed target plus its
terminal BOS.  Backward passes mirror the forward composition of kernel
calls step by step; the finite-difference checker is the contract.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .model import BACKWARD, FORWARD, _prefix, start_symbol, terminal_symbol


class TrainingDiverged(RuntimeError):
    pass


def _enc_chain_fwd(store, pre, x, reverse):
    L, dc = x.shape[0], store[pre + "Wh"].shape[0]
    states = np.zeros((L, dc))
    caches = [None] * L
    h = np.zeros((1, dc))
    order = range(L - 1, -1, -1) if reverse else range(L)
    for i in order:
        h, cache = K.gru_fwd(x[i : i + 1], h, store[pre + "Wx"], store[pre + "Wh"], store[pre + "b"])
        states[i] = h[0]
        caches[i] = cache
    return states, caches


def _enc_chain_bwd(store, pre, caches, dstates, reverse, grads, dx):
    L = dstates.shape[0]
    dh = np.zeros((1, dstates.shape[1]))
    order = range(L) if reverse else range(L - 1, -1, -1)
    for i in order:
        dh = dh + dstates[i : i + 1]
        dxi, dh, dwx, dwh, db = K.gru_bwd(caches[i], store[pre + "Wx"], store[pre + "Wh"], dh)
        dx[i] += dxi[0]
        grads[pre + "Wx"] += dwx
        grads[pre + "Wh"] += dwh
        grads[pre + "b"] += db


def encode_cached(model, store, src_ids):
    x = store["src_emb"][np.asarray(src_ids, dtype=np.intp)]
    hf, cf = _enc_chain_fwd(store, "enc_fwd.", x, reverse=False)
    hb, cb = _enc_chain_fwd(store, "enc_bwd.", x, reverse=True)
    H = np.concatenate([hf, hb], axis=1)
    return H, (x, cf, cb)


def encode_backward(model, store, src_ids, cache, dH, grads):
    x, cf, cb = cache
    dc = model.cfg.enc_dim
    dx = np.zeros_like(x)
    _enc_chain_bwd(store, "enc_fwd.", cf, dH[:, :dc], reverse=False, grads=grads, dx=dx)
    _enc_chain_bwd(store, "enc_bwd.", cb, dH[:, dc:], reverse=True, grads=grads, dx=dx)
    demb = grads["src_emb"]
    for i, tok in enumerate(src_ids):
        demb[tok] += dx[i]


def _forced_dir_fwd(model, store, direction, H, inputs, golds):
    """Teacher-forced pass of one decoder; returns (mean NLL, cache)."""
    pre = _prefix(direction)
    T = len(golds)
    hproj = K.affine_fwd(H, store[pre + "att.Uh"], store[pre + "att.b"])
    hbar = H.mean(axis=0, keepdims=True)
    s0pre = K.affine_fwd(hbar, store[pre + "init.W"], store[pre + "init.b"])
    s0 = np.tanh(s0pre)

    steps = []
    S = s0
    loss_sum = 0.0
    for t in range(T):
        ctx, _, acache = K.attn_fwd(S, H, hproj, store[pre + "att.Wq"], store[pre + "att.v"])
        x = np.concatenate([store["tgt_emb"][inputs[t] : inputs[t] + 1], ctx], axis=1)
        S2, gcache = K.gru_fwd(x, S, store[pre + "Wx"], store[pre + "Wh"], store[pre + "b"])
        gpre = K.affine_fwd(S2, store[pre + "out.Wg"], store[pre + "out.bg"])
        g = np.tanh(gpre)
        logits = K.affine_fwd(g, store[pre + "out.Wo"], store[pre + "out.bo"])
        losses, probs = K.softmax_xent_fwd(logits, np.array([golds[t]]))
        loss_sum += losses[0]
        steps.append((S, acache, gcache, S2, g, probs))
        S = S2
    cache = (hproj, hbar, s0, steps)
    return loss_sum / T, cache


def _forced_dir_bwd(model, store, direction, H, inputs, golds, cache, grads, scale=1.0):
    """Backward of _forced_dir_fwd; returns dH. ``scale`` multiplies the loss."""
    pre = _prefix(direction)
    hproj, hbar, s0, steps = cache
    T = len(golds)
    w = scale / T
    dH = np.zeros_like(H)
    dhproj = np.zeros_like(hproj)
    dS_next = np.zeros((1, model.cfg.hid_dim))
    demb = grads["tgt_emb"]

    for t in range(T - 1, -1, -1):
        S_prev, acache, gcache, S2, g, probs = steps[t]
        dlogits = K.softmax_xent_bwd(probs, np.array([golds[t]]), np.array([w]))
        dg, dwo, dbo = K.affine_bwd(g, store[pre + "out.Wo"], dlogits)
        grads[pre + "out.Wo"] += dwo
        grads[pre + "out.bo"] += dbo
        dgpre = K.tanh_bwd(g, dg)
        dS2, dwg, dbg = K.affine_bwd(S2, store[pre + "out.Wg"], dgpre)
        grads[pre + "out.Wg"] += dwg
        grads[pre + "out.bg"] += dbg
        dS2 = dS2 + dS_next

        dx, dS_prev, dwx, dwh, db = K.gru_bwd(gcache, store[pre + "Wx"], store[pre + "Wh"], dS2)
        grads[pre + "Wx"] += dwx
        grads[pre + "Wh"] += dwh
        grads[pre + "b"] += db
        de = model.cfg.emb_dim
        demb[inputs[t]] += dx[0, :de]
        dctx = dx[:, de:]

        dq, dHa, dhp, dwq, dv = K.attn_bwd(acache, H, store[pre + "att.Wq"], store[pre + "att.v"], dctx)
        grads[pre + "att.Wq"] += dwq
        grads[pre + "att.v"] += dv
        dH += dHa
        dhproj += dhp
        dS_next = dS_prev + dq

    # initial state
    ds0pre = K.tanh_bwd(s0, dS_next)
    dhbar, dwi, dbi = K.affine_bwd(hbar, store[pre + "init.W"], ds0pre)
    grads[pre + "init.W"] += dwi
    grads[pre + "init.b"] += dbi
    dH += dhbar / H.shape[0]

    # annotation projection
    dHp, duh, dba = K.affine_bwd(H, store[pre + "att.Uh"], dhproj)
    grads[pre + "att.Uh"] += duh
    grads[pre + "att.b"] += dba
    dH += dHp
    return dH


def _zero_grads_like(store, names):
    return {n: np.zeros_like(store[n]) for n in names}


def _grad_names(store):
    return [n for n in store.names() if not n.startswith("gate.")]


def direction_sequences(tgt_ids, direction):
    """(inputs, golds) for teacher forcing one decoder on a target."""
    y = list(tgt_ids)
    if direction == FORWARD:
        return [start_symbol(direction)] + y, y + [terminal_symbol(direction)]
    yr = y[::-1]
    return [start_symbol(direction)] + yr, yr + [terminal_symbol(direction)]


def joint_loss(model, src_ids, tgt_ids, store=None, want_grads=True):
    """NLL of the coupled objective plus gradients for every model tensor.

    Returns (loss, grads) with grads == None when want_grads is False.
    """
    store = store or model.store
    if len(tgt_ids) == 0:
        raise ValueError("target must be non-empty")
    H, enc_cache = encode_cached(model, store, src_ids)

    losses = {}
    caches = {}
    for direction in (FORWARD, BACKWARD):
        inputs, golds = direction_sequences(tgt_ids, direction)
        losses[direction], caches[direction] = _forced_dir_fwd(model, store, direction, H, inputs, golds)
    loss = losses[FORWARD] + losses[BACKWARD]
    if not want_grads:
        return loss, None

    grads = _zero_grads_like(store, _grad_names(store))
    dH = np.zeros_like(H)
    for direction in (FORWARD, BACKWARD):
        inputs, golds = direction_sequences(tgt_ids, direction)
        dH += _forced_dir_bwd(model, store, direction, H, inputs, golds, caches[direction], grads)
    encode_backward(model, store, src_ids, enc_cache, dH, grads)
    return loss, grads


def direction_loss(model, src_ids, tgt_ids, direction, store=None):
    """Length-normalized NLL of a single decoder (diagnostics/tests)."""
    store = store or model.store
    H, _ = encode_cached(model, store, src_ids)
    inputs, golds = direction_sequences(tgt_ids, direction)
    loss, _ = _forced_dir_fwd(model, store, direction, H, inputs, golds)
    return loss


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 16
    lr: float = 2e-3
    seed: int = 0
    log_every: int = 0  # epochs; 0 disables


def train_model(model, pairs, config, log=None):
    """Adam training over (src_ids, tgt_ids) pairs; returns the loss curve.

    Deterministic for a given seed.  Raises TrainingDiverged when the
    loss goes non-finite.
    """
    if not pairs:
        raise ValueError("training corpus is empty")
    rng = np.random.default_rng(config.seed)
    store = model.store
    curve = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(pairs))
        total = 0.0
        for lo in range(0, len(order), config.batch_size):
            batch = order[lo : lo + config.batch_size]
            wt = 1.0 / len(batch)
            for idx in batch:
                src_ids, tgt_ids = pairs[idx]
                loss, grads = joint_loss(model, src_ids, tgt_ids, store=store)
                if not np.isfinite(loss):
                    raise TrainingDiverged(
                        f"non-finite loss at epoch {epoch} pair {idx}: {loss!r}"
                    )
                total += loss
                for name, g in grads.items():
                    store.grads[name] += wt * g
            store.adam_step(config.lr)
        curve.append(total / len(pairs))
        if log and config.log_every and (epoch + 1) % config.log_every == 0:
            log(f"epoch {epoch + 1}/{config.epochs} loss {curve[-1]:.4f}")
    return curve


def forced_accuracy(model, pairs, store=None):
    """Per-token argmax accuracy of the forward decoder under teacher forcing."""
    store = store or model.store
    hit = 0
    total = 0
    for src_ids, tgt_ids in pairs:
        H, _ = encode_cached(model, store, src_ids)
        inputs, golds = direction_sequences(tgt_ids, FORWARD)
        _, cache = _forced_dir_fwd(model, store, FORWARD, H, inputs, golds)
        for t, (_, _, _, _, _, probs) in enumerate(cache[3]):
            hit += int(np.argmax(probs[0]) == golds[t])
            total += 1
    return hit / max(total, 1)
