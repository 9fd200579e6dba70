"""Named parameter store with gradient accumulators, Adam, and checkpoint I/O."""

import json
import os
from dataclasses import dataclass, field

import numpy as np

CHECKPOINT_FORMAT_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class ParamStore:
    """Trainable tensors plus per-parameter Adam state.

    Parameters whose accumulated gradient is identically zero are
    skipped by ``adam_step`` (their moments and per-parameter step
    counts stay untouched), so an update never moves a tensor that did
    not participate in the loss.
    """

    params: dict = field(default_factory=dict)
    grads: dict = field(default_factory=dict)
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    steps: dict = field(default_factory=dict)
    t: int = 0

    def add(self, name, value):
        value = np.ascontiguousarray(value, dtype=np.float64)
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)
        self.m[name] = np.zeros_like(value)
        self.v[name] = np.zeros_like(value)
        self.steps[name] = 0
        return value

    def __getitem__(self, name):
        return self.params[name]

    def names(self):
        return list(self.params.keys())

    def zero_grads(self):
        for g in self.grads.values():
            g[...] = 0.0

    def accumulate(self, name, grad):
        self.grads[name] += grad

    def grad_norm(self):
        return float(np.sqrt(sum(float(np.sum(g * g)) for g in self.grads.values())))

    def adam_step(self, lr, beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS):
        """Bias-corrected adaptive-moment update; zeroes gradients afterward."""
        self.t += 1
        for name, p in self.params.items():
            g = self.grads[name]
            if not np.any(g):
                continue
            self.steps[name] += 1
            t = self.steps[name]
            m = self.m[name]
            v = self.v[name]
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            mhat = m / (1.0 - beta1**t)
            vhat = v / (1.0 - beta2**t)
            p -= lr * mhat / (np.sqrt(vhat) + eps)
        self.zero_grads()

    def clone(self):
        out = ParamStore(t=self.t)
        for name, p in self.params.items():
            out.params[name] = p.copy()
            out.grads[name] = self.grads[name].copy()
            out.m[name] = self.m[name].copy()
            out.v[name] = self.v[name].copy()
            out.steps[name] = self.steps[name]
        return out

    def copy_values_from(self, other):
        for name, p in other.params.items():
            self.params[name][...] = p

    def assert_finite(self):
        for name, p in self.params.items():
            if not np.all(np.isfinite(p)):
                raise FloatingPointError(f"non-finite values in parameter {name}")


def uniform_init(store, name, shape, rng, scale=0.08):
    """Uniform [-scale, scale] initialization (scalars included)."""
    return store.add(name, rng.uniform(-scale, scale, size=shape))


def save_store(store, path):
    """Write parameters + optimizer state to one .npz (bit-exact round trip)."""
    arrays = {"__t__": np.array([store.t], dtype=np.int64)}
    order = []
    for name in store.names():
        order.append(name)
        arrays[f"p::{name}"] = store.params[name]
        arrays[f"m::{name}"] = store.m[name]
        arrays[f"v::{name}"] = store.v[name]
        arrays[f"s::{name}"] = np.array([store.steps[name]], dtype=np.int64)
    arrays["__order__"] = np.array(json.dumps(order).encode("utf-8"))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_store(path):
    data = np.load(path)
    order = json.loads(bytes(data["__order__"]).decode("utf-8"))
    store = ParamStore(t=int(data["__t__"][0]))
    for name in order:
        store.params[name] = np.ascontiguousarray(data[f"p::{name}"], dtype=np.float64)
        store.grads[name] = np.zeros_like(store.params[name])
        store.m[name] = np.ascontiguousarray(data[f"m::{name}"], dtype=np.float64)
        store.v[name] = np.ascontiguousarray(data[f"v::{name}"], dtype=np.float64)
        store.steps[name] = int(data[f"s::{name}"][0])
    return store


def write_manifest(directory, config_dict, extra=None):
    manifest = {"format_version": CHECKPOINT_FORMAT_VERSION, "config": config_dict}
    if extra:
        manifest.update(extra)
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(directory):
    path = os.path.join(directory, "manifest.json")
    if not os.path.exists(path):
        raise FileNotFoundError(f"no checkpoint manifest at {path}")
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    version = manifest.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format version {version!r}")
    return manifest
