"""Dense spectral routines: power iteration, deflation, singular-value clipping.

The power iteration runs on ``M M^T`` so it applies to rectangular and
non-symmetric matrices alike. A one-sided Jacobi SVD is kept here as an
independent reference for tests; production paths that need a full SVD
go through LAPACK.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpectralPair",
    "NonConvergenceError",
    "top_singular_pair",
    "top_two_singular_values",
    "deflated_singular_value",
    "spectral_norm",
    "clip_singular_values",
    "jacobi_svd",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000


class NonConvergenceError(RuntimeError):
    """Power iteration hit ``max_iter`` before the residual tolerance.

    The last iterate is kept on ``pair`` so callers can decide whether a
    loosely converged answer is still usable.
    """

    def __init__(self, message, pair, iterations):
        super().__init__(message)
        self.pair = pair
        self.iterations = iterations


@dataclass(frozen=True)
class SpectralPair:
    sigma: float
    vector: np.ndarray


def _as_matrix(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def _start_vector(M, column, exclude=None):
    rows = M.shape[0]
    v = M[:, column].copy() if column < M.shape[1] else np.zeros(rows)
    if exclude is not None:
        v -= exclude * (exclude @ v)
    nv = np.linalg.norm(v)
    if nv > 1e-8 * np.linalg.norm(M[:, column] if column < M.shape[1] else 0.0):
        return v / nv
    # fall back to the first basis vector with a non-trivial projected part
    for j in range(rows):
        e = np.zeros(rows)
        e[j] = 1.0
        if exclude is not None:
            e -= exclude * exclude[j]
        ne = np.linalg.norm(e)
        if ne > 1e-8:
            return e / ne
    return np.eye(rows)[0]


def _power(M, v, tol, max_iter, exclude=None):
    """Power iteration on ``P M M^T P`` where ``P`` projects out ``exclude``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    lam = 0.0
    # below this size w is rounding noise from an (effectively) null
    # direction; squared singular values under it are not resolvable anyway
    floor = 64 * np.finfo(float).eps * float(np.sum(M * M))
    for it in range(1, max_iter + 1):
        w = M @ (M.T @ v)
        if exclude is not None:
            w -= exclude * (exclude @ w)
        if np.linalg.norm(w) <= floor:
            rows = M @ M.T
            if exclude is not None:
                rows -= np.outer(exclude, exclude @ rows)
            heavy = np.linalg.norm(rows, axis=1)
            r = int(np.argmax(heavy))
            if it > 1 or heavy[r] <= floor:
                return SpectralPair(0.0, v), it
            # start vector sat in the null space; restart on the heaviest row
            v = rows[r] / heavy[r]
            continue
        lam = float(v @ w)
        resid = np.linalg.norm(w - lam * v)
        if resid <= tol * abs(lam):
            return SpectralPair(float(np.sqrt(max(lam, 0.0))), v), it
        v = w / np.linalg.norm(w)
    pair = SpectralPair(float(np.sqrt(max(lam, 0.0))), v)
    raise NonConvergenceError(
        f"power iteration did not reach tol={tol:g} in {max_iter} iterations",
        pair,
        max_iter,
    )


def _checked_power(M, v0, tol, max_iter, exclude=None):
    # work on a unit-scale copy so tiny or huge entries neither underflow
    # nor overflow in M M^T
    scale = float(np.abs(M).max()) if M.size else 0.0
    if scale == 0.0 or not np.isfinite(scale):
        return _scaled_power(M, v0, tol, max_iter, exclude)
    try:
        pair = _scaled_power(M / scale, v0, tol, max_iter, exclude)
    except NonConvergenceError as exc:
        exc.pair = SpectralPair(exc.pair.sigma * scale, exc.pair.vector)
        raise
    return SpectralPair(pair.sigma * scale, pair.vector)


def _scaled_power(M, v0, tol, max_iter, exclude=None):
    pair, _ = _power(M, v0, tol, max_iter, exclude)
    # the top singular value of P M is at least each of its row and column
    # norms; falling short means v0 was trapped in a lower singular direction
    PM = M if exclude is None else M - np.outer(exclude, exclude @ M)
    cols = np.linalg.norm(PM, axis=0)
    rows = np.linalg.norm(PM, axis=1)
    if pair.sigma < max(cols.max(), rows.max()) * (1.0 - 1e-12):
        j, i = int(np.argmax(cols)), int(np.argmax(rows))
        retry = [_power(M, PM[:, j] / cols[j], tol, max_iter, exclude)[0]]
        if rows[i] > 0:
            e = np.zeros(M.shape[0])
            e[i] = 1.0
            if exclude is not None:
                e -= exclude * exclude[i]
            retry.append(_power(M, e / np.linalg.norm(e), tol, max_iter, exclude)[0])
        pair = max([pair] + retry, key=lambda p: p.sigma)
    return pair


def top_singular_pair(M, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Largest singular value of ``M`` and its left singular vector.

    Starts from the normalized first column of ``M`` (``e_1`` if that
    column is zero), so the result is deterministic. If the answer is
    smaller than some row or column norm of ``M`` the start vector was
    trapped in a lower singular direction, and the iteration reruns from
    the heaviest column and the heaviest row.
    """
    M = _as_matrix(M)
    return _checked_power(M, _start_vector(M, 0), tol, max_iter)


def top_two_singular_values(M, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Return ``(SpectralPair(sigma_1, u_1), sigma_2)``.

    ``sigma_2`` comes from a second power iteration with ``u_1`` projected
    out of every iterate.
    """
    M = _as_matrix(M)
    if M.shape[0] < 2:
        raise ValueError("need at least two rows for a second singular value")
    first = top_singular_pair(M, tol=tol, max_iter=max_iter)
    return first, deflated_singular_value(M, first, tol=tol, max_iter=max_iter)


def deflated_singular_value(M, first, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Largest singular value of ``M`` once ``first.vector`` is projected out."""
    M = _as_matrix(M)
    u1 = first.vector
    v0 = _start_vector(M, 1 if M.shape[1] > 1 else 0, exclude=u1)
    second = _checked_power(M, v0, tol, max_iter, exclude=u1)
    return min(second.sigma, first.sigma)


def spectral_norm(M, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    return top_singular_pair(M, tol=tol, max_iter=max_iter).sigma


def clip_singular_values(M, cap):
    """Frobenius-nearest matrix with spectral norm at most ``cap``.

    Returns ``M`` itself (same object) when it already lies in the ball.
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    M = np.asarray(M, dtype=float)
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"SVD failed while clipping: {exc}") from exc
    if s[0] <= cap:
        return M
    return (U * np.minimum(s, cap)) @ Vt


def jacobi_svd(M, tol=1e-15, max_sweeps=100):
    """One-sided (Hestenes) Jacobi SVD.

    Slow but independent of LAPACK; returns ``U, s, Vt`` with singular
    values sorted in decreasing order and ``U`` of shape ``(rows, k)``,
    ``k = min(rows, cols)``.
    """
    M = np.asarray(M, dtype=float)
    transpose = M.shape[0] < M.shape[1]
    W = (M.T if transpose else M).copy()
    n = W.shape[1]
    V = np.eye(n)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = W[:, p] @ W[:, p]
                beta = W[:, q] @ W[:, q]
                gamma = W[:, p] @ W[:, q]
                if abs(gamma) <= tol * np.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                rotated = True
                with np.errstate(over="ignore"):
                    # subnormal gamma gives zeta = inf and t = 0: no rotation
                    zeta = (beta - alpha) / (2.0 * gamma)
                    t = np.sign(zeta) / (abs(zeta) + np.hypot(1.0, zeta))
                if zeta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                wp = W[:, p].copy()
                W[:, p] = c * wp - s * W[:, q]
                W[:, q] = s * wp + c * W[:, q]
                vp = V[:, p].copy()
                V[:, p] = c * vp - s * V[:, q]
                V[:, q] = s * vp + c * V[:, q]
        if not rotated:
            break
    sig = np.linalg.norm(W, axis=0)
    order = np.argsort(-sig, kind="stable")
    sig = sig[order]
    W = W[:, order]
    V = V[:, order]
    U = np.zeros_like(W)
    nz = sig > 0
    U[:, nz] = W[:, nz] / sig[nz]
    if transpose:
        return V, sig, U.T
    return U, sig, V.T
