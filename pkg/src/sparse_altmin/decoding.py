"""Threshold decoding against the current dictionary estimate."""

from dataclasses import dataclass

import numpy as np

from .genmodel import SparseCode, generate_samples, stream

__all__ = [
    "DecodeConfig",
    "threshold_decode",
    "decode_batch",
    "sign_recovery_rate",
    "projected_decoding_matrix",
]


@dataclass(frozen=True)
class DecodeConfig:
    threshold: float = 0.5
    keep_values: bool = True

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")

    @classmethod
    def for_model(cls, params, **kw):
        return cls(threshold=params.C / 2.0, **kw)


def threshold_decode(A, y, cfg=DecodeConfig()):
    """Keep the coordinates of ``A^T y`` whose magnitude exceeds the threshold."""
    z = np.asarray(A).T @ np.asarray(y)
    idx = np.flatnonzero(np.abs(z) > cfg.threshold)
    vals = z[idx] if cfg.keep_values else np.sign(z[idx])
    return SparseCode(idx, vals)


def decode_batch(A, Y, threshold):
    """Row-wise threshold decode of the ``(p, n)`` sample matrix ``Y``.

    Returns the ``(p, m)`` matrix of kept inner products (zeros elsewhere).
    """
    Z = np.asarray(Y) @ np.asarray(A)
    Z[np.abs(Z) <= threshold] = 0.0
    return Z


def sign_recovery_rate(A, Astar, params, trials, seed, threshold=None):
    """Fraction of fresh samples whose decoded sign pattern equals ``sgn(x*)``."""
    thr = params.C / 2.0 if threshold is None else threshold
    rng = stream(seed, "codes")
    noise_rng = stream(seed, "noise")
    Y, X = generate_samples(Astar, params, trials, rng, noise_rng)
    D = decode_batch(A, Y, thr)
    hits = np.all(np.sign(D) == np.sign(X), axis=1)
    return float(hits.mean())


def projected_decoding_matrix(A, i):
    """Copy of ``A`` with every column except ``i`` projected orthogonal to ``A_i``."""
    A = np.asarray(A, dtype=float)
    a = A[:, i]
    na = np.linalg.norm(a)
    if na == 0.0:
        raise ValueError(f"column {i} is zero; cannot project against it")
    ahat = a / na
    B = A - np.outer(ahat, ahat @ A)
    B[:, i] = a
    return B
