"""Finite-difference gradient checking for hand-derived backward passes."""

import numpy as np


def grad_check(fn, store, h=1e-5, sample=None, rng=None, report=None):
    """Compare analytic gradients of ``fn`` against central differences.

    ``fn(store) -> (loss, grads)`` must be deterministic; ``grads`` maps
    parameter names to arrays of matching shape.  When ``sample`` is
    given, only that many randomly chosen entries per parameter are
    probed (the analytic side is still the full gradient).

    The relative error is reported per parameter over the probed
    entries, ``|a - n| / (|a| + |n| + 1e-8)`` with Euclidean norms, so a
    single near-zero entry cannot drown the signal in finite-difference
    truncation noise.  Returns the maximum over parameters; ``report``
    (a dict) receives the per-parameter errors when passed.
    """
    loss, grads = fn(store)
    if not np.isfinite(loss):
        raise FloatingPointError("loss is not finite")
    if rng is None:
        rng = np.random.default_rng(0)

    worst = 0.0
    for name, p in store.params.items():
        if name not in grads:
            continue
        flat = p.reshape(-1)
        gflat = np.asarray(grads[name], dtype=np.float64).reshape(-1)
        n = flat.shape[0]
        if sample is not None and sample < n:
            idx = rng.choice(n, size=sample, replace=False)
        else:
            idx = np.arange(n)
        analytic = gflat[idx]
        numeric = np.empty_like(analytic)
        for k, i in enumerate(idx):
            orig = flat[i]
            flat[i] = orig + h
            lp, _ = fn(store)
            flat[i] = orig - h
            lm, _ = fn(store)
            flat[i] = orig
            numeric[k] = (lp - lm) / (2.0 * h)
        err = np.linalg.norm(analytic - numeric) / (
            np.linalg.norm(analytic) + np.linalg.norm(numeric) + 1e-8
        )
        if report is not None:
            report[name] = float(err)
        if err > worst:
            worst = float(err)
    return worst
