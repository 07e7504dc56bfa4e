"""Reproducible Monte Carlo tail estimation for the application models.

A counter-based generator (Philox) is keyed by a hash of (seed, model), and
each fixed-size block of samples runs on its own counter offset, so results
are bit-identical for identical inputs and independent of any scheduling.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np
from numpy.random import Generator, Philox

from .distributions import (
    AppModel,
    Birthday,
    Matching,
    MonteCarloEstimate,
    Occupancy,
    PoissonBinomial,
    Records,
    Triangles,
    TwoRuns,
    records_success_probs,
)

_Z95 = 1.959964
_BLOCK_CELL_BUDGET = 1 << 23  # rows*cols per sampled block


def _stream_key(model: AppModel, seed: int) -> int:
    canonical = f"{type(model).__name__}|{model!r}|seed={seed}".encode()
    digest = hashlib.sha256(canonical).digest()
    return int.from_bytes(digest[:16], "little")


def _model_width(model: AppModel) -> int:
    match model:
        case Records(n=n):
            return max(1, n - 1)
        case PoissonBinomial(p=p):
            return len(p)
        case Matching(n=n):
            return n
        case Occupancy(l=l) | Birthday(l=l):
            return l
        case Triangles(n=n):
            return math.comb(n, 2)
        case TwoRuns(n=n):
            return n
    raise TypeError(f"unknown model {model!r}")


def _sample_counts(model: AppModel, rng: Generator, size: int) -> np.ndarray:
    match model:
        case Records(n=n):
            probs = records_success_probs(n)
            return (rng.random((size, probs.size)) < probs).sum(axis=1)
        case PoissonBinomial(p=p):
            probs = np.asarray(p)
            return (rng.random((size, probs.size)) < probs).sum(axis=1)
        case Matching(n=n):
            perm = np.argsort(rng.random((size, n)), axis=1)
            return (perm == np.arange(n)).sum(axis=1)
        case Occupancy(n=n, l=l):
            boxes = rng.integers(0, n, size=(size, l))
            empty = np.zeros(size, dtype=np.int64)
            for b in range(n):
                empty += (boxes != b).all(axis=1)
            return empty
        case Birthday(n=n, l=l):
            boxes = rng.integers(0, n, size=(size, l))
            pairs = np.zeros(size, dtype=np.int64)
            for b in range(n):
                c = (boxes == b).sum(axis=1)
                pairs += c * (c - 1) // 2
            return pairs
        case Triangles(n=n, p=p):
            m = math.comb(n, 2)
            edges = rng.random((size, m)) < p
            idx = {}
            for i in range(n):
                for j in range(i + 1, n):
                    idx[(i, j)] = len(idx)
            w = np.zeros(size, dtype=np.int64)
            for a in range(n):
                for b in range(a + 1, n):
                    for c in range(b + 1, n):
                        w += edges[:, idx[(a, b)]] & edges[:, idx[(a, c)]] & edges[:, idx[(b, c)]]
            return w
        case TwoRuns(n=n, p=p):
            bits = rng.random((size, n)) < p
            return (bits & np.roll(bits, -1, axis=1)).sum(axis=1)
    raise TypeError(f"unknown model {model!r}")


def monte_carlo_tail(
    model: AppModel, a: int, k: int, n_samples: int, seed: int
) -> MonteCarloEstimate:
    """Estimate P(W - a >= k) by simulation; identical inputs reproduce bit-identically."""
    if n_samples < 10_000:
        raise ValueError(f"need n_samples >= 1e4 for a usable estimate, got {n_samples}")
    key = _stream_key(model, seed)
    block = max(1024, _BLOCK_CELL_BUDGET // max(1, _model_width(model)))
    hits = 0
    done = 0
    block_index = 0
    while done < n_samples:
        size = min(block, n_samples - done)
        rng = Generator(Philox(key=key, counter=block_index << 128))
        counts = _sample_counts(model, rng, size)
        hits += int((counts - a >= k).sum())
        done += size
        block_index += 1
    p_hat = hits / n_samples
    stderr = math.sqrt(p_hat * (1.0 - p_hat) / n_samples)
    return MonteCarloEstimate(
        p_hat=p_hat,
        stderr=stderr,
        n_samples=n_samples,
        seed=seed,
        ci95_low=max(0.0, p_hat - _Z95 * stderr),
        ci95_high=min(1.0, p_hat + _Z95 * stderr),
    )
