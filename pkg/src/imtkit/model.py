"""Attention-based encoder with coupled forward/backward decoders.

The encoder is a bidirectional GRU whose per-position states are
concatenated into annotation vectors.  Two GRU decoders (one per
generation direction) share the encoder and the target embeddings but
own their attention, recurrence and readout weights.  The forward
decoder starts from BOS and terminates on EOS; the backward decoder
consumes/produces reversed targets, starting from EOS and terminating
on BOS.
"""

import os
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels as K
from .params import ParamStore, read_manifest, save_store, load_store, uniform_init, write_manifest
from .vocab import BOS, EOS, Vocab

FORWARD = "forward"
BACKWARD = "backward"


def start_symbol(direction):
    return BOS if direction == FORWARD else EOS


def terminal_symbol(direction):
    return EOS if direction == FORWARD else BOS


def _prefix(direction):
    if direction == FORWARD:
        return "dec_fwd."
    if direction == BACKWARD:
        return "dec_bwd."
    raise ValueError(f"unknown direction {direction!r}")


@dataclass
class ModelConfig:
    emb_dim: int = 32
    enc_dim: int = 32  # per direction; annotations have 2*enc_dim
    hid_dim: int = 64
    attn_dim: int = 32
    readout_dim: int = 64
    src_vocab_size: int = 0
    tgt_vocab_size: int = 0
    init_seed: int = 0
    init_scale: float = 0.08

    @property
    def ann_dim(self):
        return 2 * self.enc_dim

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, d):
        return cls(**d)


def build_store(cfg):
    """All trainable tensors, uniformly initialized with the config seed."""
    rng = np.random.default_rng(cfg.init_seed)
    store = ParamStore()

    def u(name, shape):
        uniform_init(store, name, shape, rng, cfg.init_scale)

    de, dc, dh, dn, dg = cfg.emb_dim, cfg.enc_dim, cfg.hid_dim, cfg.attn_dim, cfg.readout_dim
    da = cfg.ann_dim
    u("src_emb", (cfg.src_vocab_size, de))
    u("tgt_emb", (cfg.tgt_vocab_size, de))
    for side in ("enc_fwd.", "enc_bwd."):
        u(side + "Wx", (de, 3 * dc))
        u(side + "Wh", (dc, 3 * dc))
        u(side + "b", (3 * dc,))
    for pre in ("dec_fwd.", "dec_bwd."):
        u(pre + "Wx", (de + da, 3 * dh))
        u(pre + "Wh", (dh, 3 * dh))
        u(pre + "b", (3 * dh,))
        u(pre + "att.Wq", (dh, dn))
        u(pre + "att.Uh", (da, dn))
        u(pre + "att.b", (dn,))
        u(pre + "att.v", (dn,))
        u(pre + "init.W", (da, dh))
        u(pre + "init.b", (dh,))
        u(pre + "out.Wg", (dh, dg))
        u(pre + "out.bg", (dg,))
        u(pre + "out.Wo", (dg, cfg.tgt_vocab_size))
        u(pre + "out.bo", (cfg.tgt_vocab_size,))
    store.add("gate.w1", np.array(1.0))
    store.add("gate.w2", np.array(1.0))
    store.add("gate.Ws", np.zeros(dh))
    store.add("gate.Wc", np.zeros(da))
    return store


@dataclass
class Annotations:
    """Per-source-position encoder vectors stacked as H (L, ann_dim)."""

    H: np.ndarray
    src_ids: list

    def __post_init__(self):
        self._proj = {}

    def __len__(self):
        return self.H.shape[0]

    def projected(self, store, direction):
        """Attention-space projection of H for one decoder, cached."""
        pre = _prefix(direction)
        if direction not in self._proj:
            self._proj[direction] = K.affine_fwd(self.H, store[pre + "att.Uh"], store[pre + "att.b"])
        return self._proj[direction]


@dataclass
class DecoderState:
    """State after one decoder step: hidden s, context c, direction."""

    s: np.ndarray
    c: np.ndarray
    direction: str


class Seq2SeqModel:
    """Configuration + vocabularies + parameter store."""

    def __init__(self, cfg, src_vocab, tgt_vocab, store=None):
        if cfg.src_vocab_size != len(src_vocab) or cfg.tgt_vocab_size != len(tgt_vocab):
            raise ValueError("config vocab sizes disagree with the vocabularies")
        self.cfg = cfg
        self.src_vocab = src_vocab
        self.tgt_vocab = tgt_vocab
        self.store = store if store is not None else build_store(cfg)

    @classmethod
    def create(cls, src_vocab, tgt_vocab, **cfg_kwargs):
        cfg = ModelConfig(src_vocab_size=len(src_vocab), tgt_vocab_size=len(tgt_vocab), **cfg_kwargs)
        return cls(cfg, src_vocab, tgt_vocab)

    # --- encoder ---

    def encode(self, src_ids, store=None):
        """Bidirectional recurrent pass; one annotation per source token."""
        store = store or self.store
        if len(src_ids) == 0:
            raise ValueError("cannot encode an empty source")
        if any(i < 0 or i >= self.cfg.src_vocab_size for i in src_ids):
            raise ValueError("source token id out of range")
        x = store["src_emb"][np.asarray(src_ids, dtype=np.intp)]
        L, dc = len(src_ids), self.cfg.enc_dim
        hf = np.zeros((L, dc))
        h = np.zeros((1, dc))
        for i in range(L):
            h, _ = K.gru_fwd(x[i : i + 1], h, store["enc_fwd.Wx"], store["enc_fwd.Wh"], store["enc_fwd.b"])
            hf[i] = h[0]
        hb = np.zeros((L, dc))
        h = np.zeros((1, dc))
        for i in range(L - 1, -1, -1):
            h, _ = K.gru_fwd(x[i : i + 1], h, store["enc_bwd.Wx"], store["enc_bwd.Wh"], store["enc_bwd.b"])
            hb[i] = h[0]
        return Annotations(H=np.concatenate([hf, hb], axis=1), src_ids=list(src_ids))

    # --- decoder ---

    def initial_state(self, ann, direction, store=None):
        store = store or self.store
        pre = _prefix(direction)
        hbar = ann.H.mean(axis=0, keepdims=True)
        s0 = np.tanh(K.affine_fwd(hbar, store[pre + "init.W"], store[pre + "init.b"]))
        return DecoderState(s=s0[0], c=hbar[0].copy(), direction=direction)

    def attend(self, query, ann, direction, store=None):
        """Context vector and attention weights for one query state."""
        store = store or self.store
        pre = _prefix(direction)
        q = np.atleast_2d(query)
        ctx, alpha, _ = K.attn_fwd(q, ann.H, ann.projected(store, direction), store[pre + "att.Wq"], store[pre + "att.v"])
        return ctx[0], alpha[0]

    def step_batch(self, prev_ids, S, ann, direction, store=None):
        """One decoder step for a batch of hypotheses sharing ``ann``.

        prev_ids (B,) int ids, S (B, hid).  Returns (S_new, contexts,
        logits) where softmax(logits) is the model distribution.
        """
        store = store or self.store
        pre = _prefix(direction)
        prev_ids = np.asarray(prev_ids, dtype=np.intp)
        if prev_ids.min(initial=0) < 0 or prev_ids.max(initial=0) >= self.cfg.tgt_vocab_size:
            raise ValueError("target token id out of range")
        ctx, _, _ = K.attn_fwd(S, ann.H, ann.projected(store, direction), store[pre + "att.Wq"], store[pre + "att.v"])
        x = np.concatenate([store["tgt_emb"][prev_ids], ctx], axis=1)
        S2, _ = K.gru_fwd(x, S, store[pre + "Wx"], store[pre + "Wh"], store[pre + "b"])
        g = np.tanh(K.affine_fwd(S2, store[pre + "out.Wg"], store[pre + "out.bg"]))
        logits = K.affine_fwd(g, store[pre + "out.Wo"], store[pre + "out.bo"])
        return S2, ctx, logits

    def step(self, prev_token, state, ann, store=None):
        """Single-hypothesis decoder step (the batched path does the work)."""
        S2, ctx, logits = self.step_batch(
            np.array([prev_token]), state.s[None, :], ann, state.direction, store=store
        )
        return DecoderState(s=S2[0], c=ctx[0], direction=state.direction), logits[0]

    # --- persistence ---

    def save(self, directory):
        os.makedirs(directory, exist_ok=True)
        write_manifest(directory, self.cfg.to_json())
        save_store(self.store, os.path.join(directory, "params.npz"))
        self.src_vocab.save(os.path.join(directory, "vocab.src.txt"))
        self.tgt_vocab.save(os.path.join(directory, "vocab.tgt.txt"))

    @classmethod
    def load(cls, directory):
        manifest = read_manifest(directory)
        cfg = ModelConfig.from_json(manifest["config"])
        src_vocab = Vocab.load(os.path.join(directory, "vocab.src.txt"))
        tgt_vocab = Vocab.load(os.path.join(directory, "vocab.tgt.txt"))
        store = load_store(os.path.join(directory, "params.npz"))
        return cls(cfg, src_vocab, tgt_vocab, store=store)
