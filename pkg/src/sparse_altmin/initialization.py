"""Pairwise-reweighted second-moment initialization.

For two samples ``u, v`` the reweighted moment
``M_uv = E[<y,u><y,v> y y^T]`` is dominated by ``A*_i A*_i^T`` when the
supports of ``u`` and ``v`` share exactly one atom ``i``. The top two
singular values certify that case; the top singular vector estimates the
atom. Accepted vectors are de-duplicated up to sign.
"""

import logging
from dataclasses import dataclass, field
from math import log

import numpy as np

from .genmodel import SparseCode, generate_samples, stream, support_stats
from .numerics import NonConvergenceError, deflated_singular_value, top_singular_pair
from .updates import ProjectionSetB, project_to_B

__all__ = [
    "InitConfig",
    "Candidate",
    "CandidateList",
    "InitIncomplete",
    "MomentDecomposition",
    "weighted_moment",
    "analytic_moment",
    "uniqueness_test",
    "sign_normalize",
    "pairwise_init",
    "pairwise_init_from_samples",
    "labeled_pairs",
]

log_ = logging.getLogger(__name__)


def _log_m(m):
    return log(m) if m > 1 else 0.0


@dataclass(frozen=True)
class InitConfig:
    """Pair budget, sample sizes and acceptance thresholds.

    A pair passes when ``sigma1 >= sigma1_floor * k/m`` and
    ``sigma2 <= sigma2_ceil * k/(m ln m)``. ``dedup_radius`` defaults to
    ``1/ln m`` and ``max_pairs`` to ``50 (m/k)^2 ln m``.
    """

    p1: int = 2000
    p2: int = 100_000
    sigma1_floor: float = 0.8
    sigma2_ceil: float = 3.0
    dedup_radius: float = None
    max_pairs: int = None
    seed: int = 0

    def __post_init__(self):
        if self.p1 < 2 or self.p2 < 1:
            raise ValueError("need p1 >= 2 and p2 >= 1")
        if not (self.sigma1_floor > 0 and self.sigma2_ceil > 0):
            raise ValueError("thresholds must be positive")
        if self.dedup_radius is not None and not 0 < self.dedup_radius < 1:
            raise ValueError("dedup_radius must lie in (0, 1)")

    def radius(self, m):
        if self.dedup_radius is not None:
            return self.dedup_radius
        lm = _log_m(m)
        return min(1.0 / lm, 0.5) if lm > 1 else 0.5

    def pair_budget(self, params):
        if self.max_pairs is not None:
            return self.max_pairs
        m, k = params.m, params.k
        return max(int(np.ceil(50 * (m / k) ** 2 * max(_log_m(m), 1.0))), 1)

    def thresholds(self, params):
        m, k = params.m, params.k
        lo = self.sigma1_floor * k / m
        lm = _log_m(m)
        hi = self.sigma2_ceil * k / (m * lm) if lm > 0 else np.inf
        return lo, hi


@dataclass(frozen=True)
class Candidate:
    vector: np.ndarray
    pair: tuple
    sigma1: float
    sigma2: float


@dataclass
class CandidateList:
    candidates: list = field(default_factory=list)
    pairs_tried: int = 0
    pairs_passed: int = 0
    nonconverged: int = 0

    def __len__(self):
        return len(self.candidates)

    @property
    def vectors(self):
        return [c.vector for c in self.candidates]

    def matrix(self):
        return np.column_stack(self.vectors)

    def distance(self, z):
        """Sign-invariant distance from ``z`` to the closest member."""
        if not self.candidates:
            return np.inf
        V = self.matrix()
        d_plus = np.linalg.norm(V - z[:, None], axis=0)
        d_minus = np.linalg.norm(V + z[:, None], axis=0)
        return float(np.minimum(d_plus, d_minus).min())

    def offer(self, cand, radius):
        """Append ``cand`` unless it lies within ``radius`` of a member."""
        if self.distance(cand.vector) > radius:
            self.candidates.append(cand)
            return True
        return False


class InitIncomplete(RuntimeError):
    """Pair budget ran out before ``m`` atoms were found."""

    def __init__(self, message, candidates):
        super().__init__(message)
        self.candidates = candidates


def weighted_moment(u, v, samples, chunk=16384):
    """``(1/p) sum_r <y_r,u><y_r,v> y_r y_r^T`` for samples in the rows of ``samples``."""
    Y = np.atleast_2d(np.asarray(samples, dtype=float))
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if Y.shape[0] == 0:
        raise ValueError("no samples")
    if Y.shape[1] != u.shape[0] or u.shape != v.shape:
        raise ValueError("sample and reweighting vectors disagree in dimension")
    n = Y.shape[1]
    M = np.zeros((n, n))
    for start in range(0, Y.shape[0], chunk):
        Yc = Y[start : start + chunk]
        w = (Yc @ u) * (Yc @ v)
        M += (Yc * w[:, None]).T @ Yc
    M /= Y.shape[0]
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class MomentDecomposition:
    M: np.ndarray
    main: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    E3: np.ndarray
    shared: np.ndarray
    beta: np.ndarray
    beta_prime: np.ndarray

    @property
    def error(self):
        return self.E1 + self.E2 + self.E3

    def norms(self):
        return {
            "main": float(np.linalg.norm(self.main, 2)),
            "E1": float(np.linalg.norm(self.E1, 2)),
            "E2": float(np.linalg.norm(self.E2, 2)),
            "E3": float(np.linalg.norm(self.E3, 2)),
            "error": float(np.linalg.norm(self.error, 2)),
        }

    def main_coefficients(self, stats):
        return stats.q_i * stats.c_i * self.beta[self.shared] * self.beta_prime[self.shared]


def _as_code(code, m):
    if isinstance(code, SparseCode):
        return code.dense(m)
    return np.asarray(code, dtype=float)


def analytic_moment(u_code, v_code, Astar, stats):
    """Exact ``E[<u,y><v,y> y y^T]`` for noiseless ``y`` split into main and error terms."""
    Astar = np.asarray(Astar, dtype=float)
    m = Astar.shape[1]
    a = _as_code(u_code, m)
    b = _as_code(v_code, m)
    beta = Astar.T @ (Astar @ a)
    betap = Astar.T @ (Astar @ b)
    bb = beta * betap
    shared = np.flatnonzero((a != 0) & (b != 0))
    diag = stats.q_i * stats.c_i * bb
    d_main = np.zeros(m)
    d_main[shared] = diag[shared]
    d_rest = diag - d_main
    main = (Astar * d_main) @ Astar.T
    E1 = (Astar * d_rest) @ Astar.T
    E2 = (Astar * (stats.q_ij * (bb.sum() - bb))) @ Astar.T
    Q = np.outer(beta, betap)
    Q = Q + Q.T
    np.fill_diagonal(Q, 0.0)
    E3 = stats.q_ij * (Astar @ Q @ Astar.T)
    M = main + E1 + E2 + E3
    M = 0.5 * (M + M.T)
    return MomentDecomposition(M, main, E1, E2, E3, shared, beta, betap)


def uniqueness_test(sigma1, sigma2, params, cfg):
    lo, hi = cfg.thresholds(params)
    return bool(sigma1 >= lo and sigma2 <= hi)


def sign_normalize(z):
    """Flip ``z`` so that its largest-magnitude coordinate is positive."""
    j = int(np.argmax(np.abs(z)))
    return -z if z[j] < 0 else z


def _top_two(M):
    first = top_singular_pair(M)
    try:
        sigma2 = deflated_singular_value(M, first)
    except NonConvergenceError as exc:
        # sigma2 ~ sigma3: the Rayleigh value is accurate even if the vector is not
        sigma2 = min(exc.pair.sigma, first.sigma)
    return first, sigma2


def _pair_indices(p1, budget, rng):
    """Distinct unordered index pairs from ``range(p1)`` in a fixed random order."""
    seen = set()
    total = p1 * (p1 - 1) // 2
    while len(seen) < min(budget, total):
        a, b = (int(x) for x in rng.choice(p1, size=2, replace=False))
        key = (min(a, b), max(a, b))
        if key in seen:
            continue
        seen.add(key)
        yield key


def _pair_loop(moment_of, p1, params, cfg, pair_rng):
    lo, hi = cfg.thresholds(params)
    if not lo > hi:
        log_.warning("sigma1 floor %.4g does not exceed sigma2 ceiling %.4g", lo, hi)
    radius = cfg.radius(params.m)
    found = CandidateList()
    for a, b in _pair_indices(p1, cfg.pair_budget(params), pair_rng):
        found.pairs_tried += 1
        try:
            first, sigma2 = _top_two(moment_of(a, b))
        except NonConvergenceError:
            # near-tie between the top two singular values; such a pair fails anyway
            found.nonconverged += 1
            continue
        if not uniqueness_test(first.sigma, sigma2, params, cfg):
            continue
        found.pairs_passed += 1
        cand = Candidate(sign_normalize(first.vector), (a, b), first.sigma, sigma2)
        found.offer(cand, radius)
        if len(found) >= params.m:
            break
    return found


def _finish(found, params, cfg, norm_cap):
    if len(found) < params.m:
        raise InitIncomplete(
            f"found {len(found)} of {params.m} atoms after {found.pairs_tried} pairs",
            found,
        )
    At = found.matrix()
    cap = 2.0 * np.linalg.norm(At, 2) if norm_cap is None else norm_cap
    setB = ProjectionSetB(A0=At, delta0=cfg.radius(params.m), norm_cap=cap)
    return project_to_B(At, setB), found


def pairwise_init(Astar, params, cfg, moment_mode="empirical"):
    """Synthetic-mode initialization against a known ground truth ``Astar``.

    Draws the pair pool (``cfg.p1`` samples) and the moment pool
    (``cfg.p2`` samples) from separate streams of ``cfg.seed``. With
    ``moment_mode="analytic"`` every ``M_uv`` is the exact expectation
    instead of the empirical mean. The output is projected onto the set
    anchored at the assembled estimate with spectral cap ``2 ||Astar||``.
    Raises :class:`InitIncomplete` if fewer than ``m`` atoms are found.
    """
    Astar = np.asarray(Astar, dtype=float)
    stats = support_stats(params)
    Yp, Xp = generate_samples(Astar, params, cfg.p1, stream(cfg.seed, "pairs_pool"), stream(cfg.seed, "noise", 0))
    if moment_mode == "analytic":

        def moment_of(a, b):
            return analytic_moment(Xp[a], Xp[b], Astar, stats).M

    elif moment_mode == "empirical":
        Ym, _ = generate_samples(Astar, params, cfg.p2, stream(cfg.seed, "moments"), stream(cfg.seed, "noise", 1))

        def moment_of(a, b):
            return weighted_moment(Yp[a], Yp[b], Ym)

    else:
        raise ValueError(f"unknown moment_mode {moment_mode!r}")
    found = _pair_loop(moment_of, cfg.p1, params, cfg, stream(cfg.seed, "pairs"))
    return _finish(found, params, cfg, 2.0 * np.linalg.norm(Astar, 2))


def pairwise_init_from_samples(pair_samples, moment_samples, params, cfg, norm_cap=None):
    """Data-only initialization; ``norm_cap`` falls back to twice the estimate's norm."""
    Yp = np.asarray(pair_samples, dtype=float)
    Ym = np.asarray(moment_samples, dtype=float)

    def moment_of(a, b):
        return weighted_moment(Yp[a], Yp[b], Ym)

    found = _pair_loop(moment_of, Yp.shape[0], params, cfg, stream(cfg.seed, "pairs"))
    return _finish(found, params, cfg, norm_cap)


def labeled_pairs(Astar, params, cfg, count, seed):
    """Classify ``count`` random pairs with exact moments.

    Returns ``(overlap, accepted)``: the true ``|U cap V|`` and the verdict
    of :func:`uniqueness_test` for each pair.
    """
    Astar = np.asarray(Astar, dtype=float)
    stats = support_stats(params)
    _, X = generate_samples(Astar, params, 2 * count, stream(seed, "labeled_pairs"))
    overlap = np.count_nonzero((X[:count] != 0) & (X[count:] != 0), axis=1)
    accepted = np.zeros(count, dtype=bool)
    for r in range(count):
        M = analytic_moment(X[r], X[count + r], Astar, stats).M
        try:
            first, sigma2 = _top_two(M)
        except NonConvergenceError:
            continue
        accepted[r] = uniqueness_test(first.sigma, sigma2, params, cfg)
    return overlap, accepted
