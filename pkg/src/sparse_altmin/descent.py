"""Approximate gradient descent driver, per-iteration trace and bound audit."""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .decoding import DecodeConfig
from .genmodel import generate_samples, stream, support_stats
from .metrics import align, match_columns
from .updates import EMPIRICAL, MODES, ORACLE, RULES, estimate_gradient, project_to_B, update_step

__all__ = [
    "DescentConfig",
    "DescentTrace",
    "TraceRow",
    "CorrelationParams",
    "AuditReport",
    "DescentAborted",
    "default_correlation_params",
    "default_eta",
    "run_descent",
    "correlation_slack",
    "column_slacks",
    "audit_convergence_bound",
    "quadratic_descent",
    "fit_rate",
    "detect_floor",
]


class DescentAborted(RuntimeError):
    """Non-finite entries appeared; ``trace`` holds the rows recorded so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class CorrelationParams:
    alpha: float
    beta: float
    eps: float = 0.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if self.eps < 0:
            raise ValueError("eps must be non-negative")
        if self.alpha * self.beta > 0.25 + 1e-15:
            warnings.warn(
                "alpha * beta > 1/4: no strongly-convex/smooth pair realizes these constants",
                RuntimeWarning,
                stacklevel=3,
            )


def default_correlation_params(stats):
    """``alpha = p q / 4`` and ``beta = 1 / (100 alpha)``."""
    alpha = stats.p_i * stats.q_i / 4.0
    return CorrelationParams(alpha=alpha, beta=1.0 / (100.0 * alpha))


def default_eta(params, eta_scale=0.25):
    return eta_scale * params.m / params.k


@dataclass(frozen=True)
class DescentConfig:
    rule: str
    eta: float
    iterations: int
    p_per_iter: int = 0
    mode: str = ORACLE
    project: object = None
    seed: int = 0
    threshold: float = None

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.mode == EMPIRICAL and self.p_per_iter < 1:
            raise ValueError("empirical mode needs p_per_iter >= 1")


@dataclass
class TraceRow:
    iter: int
    max_col_err: float
    mean_col_err: float
    spec_ratio: float
    grad_norm: float
    eta: float
    col_err_sq: np.ndarray = field(repr=False)
    slack: np.ndarray = field(repr=False)

    @property
    def max_slack(self):
        return float(self.slack.max())


@dataclass
class DescentTrace:
    rows: list = field(default_factory=list)
    alpha: float = 0.0
    beta: float = 0.0

    CSV_COLUMNS = ("iter", "max_col_err", "mean_col_err", "spec_ratio", "grad_norm", "eta")

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    @property
    def err_sq(self):
        return np.array([r.col_err_sq for r in self.rows])

    @property
    def slack(self):
        return np.array([r.slack for r in self.rows])


def correlation_slack(g, z, zstar, cp):
    """Smallest bias making ``g`` ``(alpha, beta, eps)``-correlated with ``zstar``."""
    g = np.asarray(g, dtype=float)
    e = np.asarray(z, dtype=float) - np.asarray(zstar, dtype=float)
    return float(cp.alpha * (e @ e) + cp.beta * (g @ g) - g @ e)


def column_slacks(G, A, Astar, cp):
    E = A - Astar
    return cp.alpha * np.sum(E * E, 0) + cp.beta * np.sum(G * G, 0) - np.sum(G * E, 0)


def run_descent(Astar, A0, params, cfg):
    """Run ``cfg.iterations`` steps of the chosen rule from ``A0``.

    ``A0`` is first aligned to ``Astar`` by signed permutation (a pure
    relabeling; all three rules are equivariant under it), so both the
    oracle directions and the column errors use matching indices. Returns
    the final aligned dictionary and a trace with ``iterations + 1`` rows.
    """
    Astar = np.asarray(Astar, dtype=float)
    A0 = np.asarray(A0, dtype=float)
    if A0.shape != Astar.shape:
        raise ValueError(f"dimension mismatch: {A0.shape} vs {Astar.shape}")
    stats = support_stats(params)
    cp = default_correlation_params(stats)
    thr = params.C / 2.0 if cfg.threshold is None else cfg.threshold
    dcfg = DecodeConfig(threshold=thr)
    star_norm = np.linalg.norm(Astar, 2)

    perm, signs = match_columns(A0, Astar)
    A = align(A0, perm, signs)
    trace = DescentTrace(alpha=cp.alpha, beta=cp.beta)

    for s in range(cfg.iterations + 1):
        batch = None
        if cfg.mode == EMPIRICAL:
            rng = stream(cfg.seed, "batch", s)
            batch, _ = generate_samples(Astar, params, cfg.p_per_iter, rng, stream(cfg.seed, "noise", s))
        G = estimate_gradient(cfg.rule, cfg.mode, A, Astar=Astar, stats=stats, batch=batch, cfg=dcfg).G
        E = A - Astar
        with np.errstate(over="ignore", invalid="ignore"):
            err_sq = np.sum(E * E, axis=0)
            err = np.sqrt(err_sq)
            trace.rows.append(
                TraceRow(
                    iter=s,
                    max_col_err=float(err.max()),
                    mean_col_err=float(err.mean()),
                    spec_ratio=float(np.linalg.norm(E, 2) / star_norm) if np.all(np.isfinite(E)) else np.inf,
                    grad_norm=float(np.linalg.norm(G)),
                    eta=float(cfg.eta),
                    col_err_sq=err_sq,
                    slack=column_slacks(G, A, Astar, cp),
                )
            )
        if s == cfg.iterations:
            break
        A = update_step(A, G, cfg.eta)
        if cfg.project is not None:
            A = project_to_B(A, cfg.project)
        if not np.all(np.isfinite(A)):
            raise DescentAborted(f"non-finite dictionary after step {s}", trace)
    return A, trace


@dataclass(frozen=True)
class AuditReport:
    violations: list
    pre_violation: bool
    ratios: np.ndarray
    contraction: float
    max_excess: float

    @property
    def ok(self):
        return not self.violations and not self.pre_violation


def audit_convergence_bound(trace, cp, eta, atol=1e-12):
    """Check ``e_{s+1}^2 <= (1 - 2 alpha eta) e_s^2 + 2 eta eps_s`` at every step.

    ``trace`` is a :class:`DescentTrace` or anything exposing ``err_sq`` and
    ``slack`` arrays of shape ``(steps + 1, ...)``; ``eps_s`` is the measured
    slack of the direction used at step ``s``. Violations are listed as
    ``(step, column)`` pairs (column is ``None`` for scalar traces).
    """
    err_sq = np.asarray(trace.err_sq, dtype=float)
    slack = np.asarray(trace.slack, dtype=float)
    contraction = 1.0 - 2.0 * cp.alpha * eta
    bound = contraction * err_sq[:-1] + 2.0 * eta * slack[:-1]
    excess = err_sq[1:] - bound
    tol = atol * np.maximum(1.0, np.abs(err_sq[:-1]))
    bad = np.argwhere(excess > tol)
    if err_sq.ndim == 1:
        violations = [(int(b[0]), None) for b in bad]
    else:
        violations = [(int(b[0]), int(b[1])) for b in bad]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.sqrt(err_sq[1:] / err_sq[:-1])
    return AuditReport(
        violations=violations,
        pre_violation=bool(eta > 2.0 * cp.beta),
        ratios=ratios,
        contraction=contraction,
        max_excess=float(excess.max()) if excess.size else 0.0,
    )


@dataclass
class _VectorTrace:
    err_sq: np.ndarray
    slack: np.ndarray
    iterates: np.ndarray


def quadratic_descent(grad, zstar, z0, eta, steps, cp, project=None):
    """Descent ``z <- proj(z - eta grad(z))`` recording error and slack per step."""
    zstar = np.asarray(zstar, dtype=float)
    z = np.asarray(z0, dtype=float)
    err_sq, slack, its = [], [], []
    for s in range(steps + 1):
        g = grad(z)
        e = z - zstar
        err_sq.append(float(e @ e))
        slack.append(correlation_slack(g, z, zstar, cp))
        its.append(z.copy())
        if s == steps:
            break
        z = z - eta * g
        if project is not None:
            z = project(z)
    return _VectorTrace(np.array(err_sq), np.array(slack), np.array(its))


def detect_floor(errors, rel_decrease=0.01, patience=3):
    """First index after which the error drops by less than ``rel_decrease``
    for ``patience`` consecutive steps; ``None`` if that never happens."""
    e = np.asarray(errors, dtype=float)
    run = 0
    for s in range(1, len(e)):
        if e[s - 1] > 0 and (e[s - 1] - e[s]) / e[s - 1] < rel_decrease:
            run += 1
            if run == patience:
                return s - patience
        else:
            run = 0
    return None


def fit_rate(errors, max_steps=None):
    """Least-squares per-step ratio of squared error over the pre-floor segment.

    Returns ``(ratio, tau, floor_index)`` with ``ratio = exp(slope of
    log(error^2))`` and ``tau = 1 - ratio``.
    """
    e = np.asarray(errors, dtype=float)
    floor = detect_floor(e)
    end = len(e) if floor is None else max(floor + 1, 2)
    if max_steps is not None:
        end = min(end, max_steps + 1)
    seg = e[:end]
    seg = seg[seg > 0]
    if len(seg) < 2:
        return float("nan"), float("nan"), floor
    s = np.arange(len(seg))
    slope = np.polyfit(s, np.log(seg**2), 1)[0]
    ratio = float(np.exp(slope))
    return ratio, 1.0 - ratio, floor
