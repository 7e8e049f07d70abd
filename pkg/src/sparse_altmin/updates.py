"""Update directions for the three alternating-minimization rules.

Each rule has an empirical estimator (a batch mean over fresh samples) and
a closed-form expectation under the generative model (the "oracle").
Empirical estimators use the residual ``A x - y`` so that an update is
always ``A - eta * G`` and ``E[G_hat]`` equals the oracle direction.

The oracles assume the decode recovers ``sgn(x*)`` exactly. They equal the
exact expectation of the estimator whenever that holds for every support
and sign pattern, which is what the enumeration tests check.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .decoding import decode_batch
from .numerics import clip_singular_values

__all__ = [
    "SIMPLE",
    "OLSHAUSEN_FIELD",
    "UNBIASED",
    "RULES",
    "EMPIRICAL",
    "ORACLE",
    "MODES",
    "GradientEstimate",
    "ProjectionSetB",
    "simple_gradient_hat",
    "simple_gradient_expected",
    "of_gradient_hat",
    "of_gradient_expected",
    "of_gradient_terms",
    "unbiased_gradient_hat",
    "unbiased_gradient_expected",
    "estimate_gradient",
    "update_step",
    "project_to_B",
]

SIMPLE = "simple"
OLSHAUSEN_FIELD = "of"
UNBIASED = "unbiased"
RULES = (SIMPLE, OLSHAUSEN_FIELD, UNBIASED)

EMPIRICAL = "empirical"
ORACLE = "oracle"
MODES = (EMPIRICAL, ORACLE)


@dataclass(frozen=True)
class GradientEstimate:
    G: np.ndarray
    rule: str
    p_used: int
    mode: str


@dataclass(frozen=True)
class ProjectionSetB:
    """Matrices column-wise within ``delta0`` of ``A0`` with ``||A|| <= norm_cap``."""

    A0: np.ndarray
    delta0: float
    norm_cap: float

    def __post_init__(self):
        if not self.delta0 > 0:
            raise ValueError("delta0 must be positive")
        if not self.norm_cap > 0:
            raise ValueError("norm_cap must be positive")

    def contains(self, A, tol=1e-9):
        A = np.asarray(A)
        col = np.linalg.norm(A - self.A0, axis=0).max()
        return bool(col <= self.delta0 + tol and np.linalg.norm(A, 2) <= self.norm_cap + tol)


def _check_batch(A, batch):
    Y = np.atleast_2d(np.asarray(batch, dtype=float))
    if Y.shape[0] == 0:
        raise ValueError("batch is empty")
    if Y.shape[1] != A.shape[0]:
        raise ValueError(f"samples have length {Y.shape[1]}, dictionary has {A.shape[0]} rows")
    return Y


def _check_pair(A, Astar):
    A = np.asarray(A, dtype=float)
    Astar = np.asarray(Astar, dtype=float)
    if A.shape != Astar.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {Astar.shape}")
    return A, Astar


def _offdiag(W):
    np.fill_diagonal(W, 0.0)
    return W


def simple_gradient_hat(A, batch, cfg):
    """Batch mean of ``(A x - y) sgn(x)^T`` with ``x`` the threshold decode."""
    A = np.asarray(A, dtype=float)
    Y = _check_batch(A, batch)
    X = decode_batch(A, Y, cfg.threshold)
    R = X @ A.T - Y
    G = R.T @ np.sign(X) / Y.shape[0]
    return GradientEstimate(G, SIMPLE, Y.shape[0], EMPIRICAL)


def simple_gradient_expected(A, Astar, stats):
    """``g_i = p q (lambda_i A_i - A*_i) + p sum_{j != i} q_ij <A_j, A*_i> A_j``."""
    A, Astar = _check_pair(A, Astar)
    lam = np.einsum("ij,ij->j", A, Astar)
    W = _offdiag(stats.q_ij * (A.T @ Astar))
    G = stats.p_i * stats.q_i * (A * lam - Astar) + stats.p_i * (A @ W)
    return GradientEstimate(G, SIMPLE, 0, ORACLE)


def of_gradient_hat(A, batch, cfg):
    """Batch mean of ``(A x - y) x^T``."""
    A = np.asarray(A, dtype=float)
    Y = _check_batch(A, batch)
    X = decode_batch(A, Y, cfg.threshold)
    R = X @ A.T - Y
    G = R.T @ X / Y.shape[0]
    return GradientEstimate(G, OLSHAUSEN_FIELD, Y.shape[0], EMPIRICAL)


def of_gradient_terms(A, Astar, stats):
    """The four pieces of the expected Olshausen-Field direction.

    Returned as a dict of ``n x m`` matrices whose sum is the direction:

    ``leading``  q_i (lambda_i^2 A_i - lambda_i A*_i)
    ``cross``    -(I - A_i A_i^T) sum_{j != i} q_ij <A*_j, A_i> A*_j
    ``coupling`` lambda_i sum_{j != i} q_ij <A_j, A*_i> A_j
    ``triple``   A_{-i} v, with v_j = q_ij <A*_j, A_i><A*_j, A_j>
                 + sum_{l not in {i, j}} q_ijl <A*_l, A_i><A*_l, A_j>
    """
    A, Astar = _check_pair(A, Astar)
    q, q2, q3 = stats.q_i, stats.q_ij, stats.q_ijk
    lam = np.einsum("ij,ij->j", A, Astar)
    leading = q * (A * lam**2 - Astar * lam)

    P = Astar.T @ A  # P[j, i] = <A*_j, A_i>
    S2 = Astar @ _offdiag(q2 * P)
    cross = -(S2 - A * np.einsum("ij,ij->j", A, S2))

    coupling = (A @ _offdiag(q2 * P.T)) * lam

    d = np.diag(P)
    PtP = P.T @ P
    # V[j, i] for j != i; the j == l term carries q_ij, the rest q_ijl
    V = q2 * P * d[:, None]
    V += q3 * (PtP - P * d[:, None] - d[None, :] * P.T)
    triple = A @ _offdiag(V)
    return {"leading": leading, "cross": cross, "coupling": coupling, "triple": triple}


def of_gradient_expected(A, Astar, stats):
    terms = of_gradient_terms(A, Astar, stats)
    G = terms["leading"] + terms["cross"] + terms["coupling"] + terms["triple"]
    return GradientEstimate(G, OLSHAUSEN_FIELD, 0, ORACLE)


def unbiased_gradient_hat(A, batch, cfg):
    """Per-column direction using the projected decoding matrix for that column.

    Only samples whose standard decode keeps column ``i`` contribute to
    ``g_i``, so each column works on roughly a ``k/m`` share of the batch.
    """
    A = np.asarray(A, dtype=float)
    Y = _check_batch(A, batch)
    p = Y.shape[0]
    thr = cfg.threshold
    Z = Y @ A
    active = np.abs(Z) > thr
    norms = np.linalg.norm(A, axis=0)
    G = np.zeros_like(A)
    for i in range(A.shape[1]):
        rows = np.flatnonzero(active[:, i])
        if rows.size == 0:
            continue
        ahat = A[:, i] / norms[i]
        coef = ahat @ A  # <A_j, ahat>
        B = A - np.outer(ahat, coef)
        B[:, i] = A[:, i]
        # B^T y from the cached A^T y: subtract <A_j, ahat><ahat, y> for j != i
        Zi = Z[rows] - np.outer(Z[rows, i] / norms[i], coef)
        Zi[:, i] = Z[rows, i]
        Zi[np.abs(Zi) <= thr] = 0.0
        R = Zi @ B.T - Y[rows]
        G[:, i] = R.T @ np.sign(Z[rows, i]) / p
    return GradientEstimate(G, UNBIASED, p, EMPIRICAL)


def unbiased_gradient_expected(A, Astar, stats):
    """``g_i = p q (lambda_i A_i - A*_i) + p B_{-i} diag(q_ij) B_{-i}^T A*_i``.

    ``B = B^{(i)}`` is the projected decoding matrix for column ``i``; since
    ``B_{-i}`` is orthogonal to ``A_i`` the correction vanishes at ``A = A*``.
    """
    A, Astar = _check_pair(A, Astar)
    lam = np.einsum("ij,ij->j", A, Astar)
    Ahat = A / np.linalg.norm(A, axis=0)
    C = Astar - Ahat * np.einsum("ij,ij->j", Ahat, Astar)
    S = A @ _offdiag(stats.q_ij * (A.T @ C))
    corr = S - Ahat * np.einsum("ij,ij->j", Ahat, S)
    G = stats.p_i * stats.q_i * (A * lam - Astar) + stats.p_i * corr
    return GradientEstimate(G, UNBIASED, 0, ORACLE)


_EMPIRICAL = {
    SIMPLE: simple_gradient_hat,
    OLSHAUSEN_FIELD: of_gradient_hat,
    UNBIASED: unbiased_gradient_hat,
}
_EXPECTED = {
    SIMPLE: simple_gradient_expected,
    OLSHAUSEN_FIELD: of_gradient_expected,
    UNBIASED: unbiased_gradient_expected,
}


def estimate_gradient(rule, mode, A, *, Astar=None, stats=None, batch=None, cfg=None):
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}; expected one of {RULES}")
    if mode == ORACLE:
        return _EXPECTED[rule](A, Astar, stats)
    if mode == EMPIRICAL:
        return _EMPIRICAL[rule](A, batch, cfg)
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def update_step(A, G, eta):
    if eta < 0:
        raise ValueError("eta must be non-negative")
    G = G.G if isinstance(G, GradientEstimate) else G
    return np.asarray(A) - eta * np.asarray(G)


def _project_columns(X, A0, radius):
    D = X - A0
    norms = np.linalg.norm(D, axis=0)
    scale = np.ones_like(norms)
    over = norms > radius
    scale[over] = radius / norms[over]
    if not over.any():
        return X
    return A0 + D * scale


def project_to_B(A, setB, max_sweeps=500, tol=1e-10, return_info=False):
    """Frobenius projection onto ``setB`` by Dykstra's alternating projections.

    The two convex pieces are the product of column balls around ``setB.A0``
    and the spectral-norm ball of radius ``setB.norm_cap``. If ``max_sweeps``
    runs out, or the sweeps stall outside ``setB`` (the pieces do not
    intersect), the last iterate is returned and a ``RuntimeWarning`` issued;
    with ``return_info=True`` the result is ``(X, info)`` where ``info`` has
    ``sweeps`` and ``converged``.
    """
    X = np.asarray(A, dtype=float)
    A0 = np.asarray(setB.A0, dtype=float)
    if X.shape != A0.shape:
        raise ValueError(f"dimension mismatch: {X.shape} vs {A0.shape}")
    P = np.zeros_like(X)
    Q = np.zeros_like(X)
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        Yc = _project_columns(X + P, A0, setB.delta0)
        P = X + P - Yc
        Xn = clip_singular_values(Yc + Q, setB.norm_cap)
        Q = Yc + Q - Xn
        change = np.linalg.norm(Xn - X)
        X = Xn
        if change < tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"projection onto B did not converge in {max_sweeps} sweeps", RuntimeWarning, stacklevel=2
        )
    elif not setB.contains(X, tol=max(1e-8, 100 * tol)):
        # disjoint pieces: Dykstra settles between them, so the change stalls
        converged = False
        warnings.warn("projection onto B is infeasible; B looks empty", RuntimeWarning, stacklevel=2)
    if return_info:
        return X, {"sweeps": sweeps, "converged": converged}
    return X
