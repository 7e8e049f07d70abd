"""Shared fixtures-by-function for the test-suite."""

from itertools import combinations, product

import numpy as np

from sparse_altmin.genmodel import ModelParams, stream


def all_codes(m, k):
    """Every Rademacher code with a size-k support; equally likely under the model."""
    for S in combinations(range(m), k):
        for signs in product((-1.0, 1.0), repeat=k):
            x = np.zeros(m)
            x[list(S)] = signs
            yield x


def exact_mean(estimator, A, Astar, m, k, cfg):
    """Exact expectation of a batch estimator: run it on the full code table."""
    X = np.array(list(all_codes(m, k)))
    Y = X @ Astar.T
    return estimator(A, Y, cfg).G


def near_orthonormal(n, m, seed, eps=0.02):
    """Orthonormal columns plus a small perturbation, then renormalized."""
    rng = stream(seed, "test_dict")
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = Q[:, :m] + eps * rng.standard_normal((n, m)) / np.sqrt(n)
    return A / np.linalg.norm(A, axis=0)


def nudge(Astar, delta, seed):
    rng = stream(seed, "test_nudge")
    D = rng.standard_normal(Astar.shape)
    return Astar + delta * D / np.linalg.norm(D, axis=0)


def toy_params(n, m, k):
    return ModelParams(n=n, m=m, k=k)
