"""Generative model: incoherent ground-truth dictionary and k-sparse codes.

Supports are uniform k-subsets of ``[m]`` so every inclusion probability
is an exact rational number; the analytic gradient and moment oracles in
:mod:`sparse_altmin.updates` and :mod:`sparse_altmin.initialization` rely
on that.

Randomness is organised in named streams. ``stream(seed, "codes", s)``
always yields the same Philox generator, independent of how many other
streams were consumed before it.
"""

import zlib
from dataclasses import dataclass, field
from math import comb

import numpy as np

__all__ = [
    "RADEMACHER",
    "SIGNED_UNIFORM",
    "ModelParams",
    "SupportStats",
    "SparseCode",
    "stream",
    "generate_dictionary",
    "coherence",
    "perturb_dictionary",
    "sample_code",
    "sample_codes",
    "generate_sample",
    "generate_samples",
    "support_stats",
]

RADEMACHER = "rademacher"
SIGNED_UNIFORM = "signed_uniform"


def stream(seed, name, *index):
    """Counter-based generator keyed by ``(seed, name, *index)``."""
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode("utf-8"))]
    key.extend(int(i) for i in index)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def _uniform_cmax(C):
    # E[x^2] = (Cmax^3 - C^3) / (3 (Cmax - C)) = 1  =>  Cmax^2 + C Cmax + C^2 - 3 = 0
    return (-C + np.sqrt(12.0 - 3.0 * C * C)) / 2.0


@dataclass(frozen=True)
class ModelParams:
    """Description of the sparse generative model.

    ``coeff_law`` is ``"rademacher"`` (values +-1) or ``"signed_uniform"``
    (random sign times a magnitude uniform on ``[C, Cmax]`` with ``Cmax``
    fixed by ``E[x^2 | x != 0] = 1``).
    """

    n: int
    m: int
    k: int
    coeff_law: str = RADEMACHER
    noise_sigma: float = 0.0
    C: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if not 1 <= self.k <= self.m:
            raise ValueError(f"need 1 <= k <= m, got k={self.k}, m={self.m}")
        if self.coeff_law not in (RADEMACHER, SIGNED_UNIFORM):
            raise ValueError(f"unknown coefficient law {self.coeff_law!r}")
        if not 0.0 < self.C <= 1.0:
            raise ValueError("C must lie in (0, 1]")
        if self.coeff_law == RADEMACHER and self.C != 1.0:
            raise ValueError("Rademacher coefficients have C = 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")

    @property
    def Cmax(self):
        if self.coeff_law == RADEMACHER:
            return 1.0
        return float(_uniform_cmax(self.C))


@dataclass(frozen=True)
class SupportStats:
    q_i: float
    q_ij: float
    q_ijk: float
    p_i: float
    c_i: float


@dataclass(frozen=True)
class SparseCode:
    support: np.ndarray
    values: np.ndarray = field(default=None)

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.int64)
        if support.size > 1 and np.any(np.diff(support) <= 0):
            raise ValueError("support indices must be strictly increasing")
        values = np.zeros(support.shape) if self.values is None else self.values
        values = np.asarray(values, dtype=float)
        if values.shape != support.shape:
            raise ValueError("values must align with support")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)

    def dense(self, m):
        x = np.zeros(m)
        x[self.support] = self.values
        return x

    @classmethod
    def from_dense(cls, x):
        x = np.asarray(x, dtype=float)
        idx = np.flatnonzero(x)
        return cls(idx, x[idx])


def generate_dictionary(n, m, seed):
    """Gaussian columns normalized to unit length."""
    if n < 2 or m < 2:
        raise ValueError("need n >= 2 and m >= 2")
    rng = stream(seed, "dict")
    A = rng.standard_normal((n, m))
    return A / np.linalg.norm(A, axis=0)


def coherence(A):
    """``sqrt(n) * max_{i != j} |<A_i, A_j>|``."""
    A = np.asarray(A, dtype=float)
    n, m = A.shape
    if m < 2:
        raise ValueError("coherence needs at least two columns")
    norms = np.linalg.norm(A, axis=0)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise ValueError("columns must be unit norm")
    G = np.abs(A.T @ A)
    np.fill_diagonal(G, 0.0)
    return float(np.sqrt(n) * G.max())


def perturb_dictionary(Astar, delta, rng):
    """Move every column of ``Astar`` by exactly ``delta`` in a random direction
    orthogonal to it. Columns are not renormalized."""
    Astar = np.asarray(Astar, dtype=float)
    D = rng.standard_normal(Astar.shape)
    D -= Astar * (np.sum(D * Astar, 0) / np.sum(Astar * Astar, 0))
    D /= np.linalg.norm(D, axis=0)
    return Astar + delta * D


def _draw_values(params, rng, size):
    signs = rng.choice(np.array([-1.0, 1.0]), size=size)
    if params.coeff_law == RADEMACHER:
        return signs
    mags = rng.uniform(params.C, params.Cmax, size=size)
    return signs * mags


def sample_code(params, rng):
    support = np.sort(rng.choice(params.m, size=params.k, replace=False))
    return SparseCode(support, _draw_values(params, rng, params.k))


def sample_codes(params, p, rng):
    """``p`` codes as a dense ``(p, m)`` array, one code per row.

    Supports are the ``k`` smallest of ``m`` iid uniforms per row, which is
    a uniform k-subset.
    """
    m, k = params.m, params.k
    if k == m:
        idx = np.broadcast_to(np.arange(m), (p, m))
    else:
        idx = np.argpartition(rng.random((p, m)), k - 1, axis=1)[:, :k]
    X = np.zeros((p, m))
    np.put_along_axis(X, idx, _draw_values(params, rng, (p, k)), axis=1)
    return X


def generate_sample(Astar, code, noise_sigma, rng=None):
    Astar = np.asarray(Astar, dtype=float)
    y = Astar[:, code.support] @ code.values
    if noise_sigma > 0:
        y = y + noise_sigma * rng.standard_normal(Astar.shape[0])
    return y


def generate_samples(Astar, params, p, rng, noise_rng=None):
    """Return ``(Y, X)`` with samples ``Y[r] = Astar @ X[r] + noise``."""
    X = sample_codes(params, p, rng)
    Y = X @ np.asarray(Astar).T
    if params.noise_sigma > 0:
        nrng = rng if noise_rng is None else noise_rng
        Y += params.noise_sigma * nrng.standard_normal(Y.shape)
    return Y, X


def support_stats(params):
    m, k = params.m, params.k
    q_i = k / m
    q_ij = k * (k - 1) / (m * (m - 1)) if m > 1 else 0.0
    q_ijk = comb(m - 3, k - 3) / comb(m, k) if m >= 3 and k >= 3 else 0.0
    if params.coeff_law == RADEMACHER:
        p_i, c_i = 1.0, 1.0
    else:
        a, b = params.C, params.Cmax
        p_i = (a + b) / 2.0
        c_i = (b**5 - a**5) / (5.0 * (b - a))
    return SupportStats(q_i=q_i, q_ij=q_ij, q_ijk=q_ijk, p_i=p_i, c_i=c_i)
