"""Signed-permutation matching of dictionaries and the (delta, kappa)-near test."""

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["NearnessReport", "match_columns", "align", "nearness", "column_errors"]


@dataclass(frozen=True)
class NearnessReport:
    permutation: np.ndarray
    signs: np.ndarray
    per_col_err: np.ndarray
    delta: float
    kappa: float
    is_near: bool

    def to_dict(self):
        d = asdict(self)
        d["permutation"] = [int(v) for v in self.permutation]
        d["signs"] = [int(v) for v in self.signs]
        d["per_col_err"] = [float(v) for v in self.per_col_err]
        return d


def match_columns(A, Astar):
    """Signed permutation maximizing ``sum_i |<A_pi(i), A*_i>|``.

    Returns ``(perm, signs)`` such that ``signs[i] * A[:, perm[i]]`` is the
    estimate of ``Astar[:, i]``.
    """
    A = np.asarray(A, dtype=float)
    Astar = np.asarray(Astar, dtype=float)
    if A.shape != Astar.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {Astar.shape}")
    C = Astar.T @ A  # C[i, j] = <A*_i, A_j>
    # scipy's solver is deterministic; ties resolve toward lower indices
    rows, cols = linear_sum_assignment(-np.abs(C))
    perm = np.empty(A.shape[1], dtype=np.int64)
    perm[rows] = cols
    inner = C[np.arange(A.shape[1]), perm]
    signs = np.where(inner < 0, -1, 1).astype(np.int64)
    return perm, signs


def align(A, perm, signs):
    return np.asarray(A)[:, perm] * signs


def column_errors(A, Astar):
    return np.linalg.norm(np.asarray(A) - np.asarray(Astar), axis=0)


def nearness(A, Astar, delta_target=np.inf, kappa_target=np.inf):
    perm, signs = match_columns(A, Astar)
    Al = align(A, perm, signs)
    err = column_errors(Al, Astar)
    delta = float(err.max())
    kappa = float(np.linalg.norm(Al - Astar, 2) / np.linalg.norm(Astar, 2))
    return NearnessReport(
        permutation=perm,
        signs=signs,
        per_col_err=err,
        delta=delta,
        kappa=kappa,
        is_near=bool(delta <= delta_target and kappa <= kappa_target),
    )
