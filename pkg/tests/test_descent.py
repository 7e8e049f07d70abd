import numpy as np
import pytest

from sparse_altmin.descent import (
    CorrelationParams,
    DescentAborted,
    DescentConfig,
    audit_convergence_bound,
    correlation_slack,
    default_correlation_params,
    default_eta,
    detect_floor,
    fit_rate,
    quadratic_descent,
    run_descent,
)
from sparse_altmin.fileio import format_trace_csv
from sparse_altmin.genmodel import ModelParams, generate_dictionary, perturb_dictionary, stream, support_stats
from sparse_altmin.updates import EMPIRICAL, ProjectionSetB


class TestSlack:
    def test_strongly_convex_equality(self):
        alpha = 0.3
        cp = CorrelationParams(alpha, 1 / (4 * alpha))
        z, zs = np.array([1.0, -2.0, 0.5]), np.array([0.2, 0.1, -0.3])
        assert correlation_slack(2 * alpha * (z - zs), z, zs, cp) == pytest.approx(0.0, abs=1e-15)

    def test_at_optimum(self):
        z = np.ones(3)
        assert correlation_slack(np.zeros(3), z, z, CorrelationParams(0.2, 1.0)) == 0.0

    def test_ascent_direction(self):
        z, zs = np.array([3.0, 4.0]), np.zeros(2)
        cp = CorrelationParams(1.0, 0.25)
        e2 = 25.0
        assert correlation_slack(-(z - zs), z, zs, cp) == pytest.approx(e2 + 0.25 * e2 + e2)

    def test_alpha_beta_warning(self):
        with pytest.warns(RuntimeWarning):
            CorrelationParams(1.0, 1.0)
        with pytest.raises(ValueError):
            CorrelationParams(0.0, 1.0)

    def test_defaults(self):
        params = ModelParams(n=64, m=64, k=3)
        cp = default_correlation_params(support_stats(params))
        assert cp.alpha == pytest.approx(3 / 64 / 4)
        assert cp.alpha * cp.beta == pytest.approx(0.01)
        assert default_eta(params) == pytest.approx(0.25 * 64 / 3)


class TestAudit:
    def test_isotropic_quadratic_exact_ratio(self):
        alpha = 0.7
        cp = CorrelationParams(alpha, 1 / (4 * alpha))
        zs = stream(0, "zs").standard_normal(10)
        tr = quadratic_descent(lambda z: 2 * alpha * (z - zs), zs, np.zeros(10), cp.beta, 30, cp)
        rep = audit_convergence_bound(tr, cp, cp.beta)
        assert rep.ok
        np.testing.assert_allclose(rep.ratios, 1 - 2 * alpha * cp.beta, atol=1e-12)

    def test_anisotropic_quadratic(self):
        # Hessian spectrum in [2 alpha, 1/(2 beta)] makes the gradient (alpha, beta, 0)-correlated
        alpha, beta = 0.5, 0.1
        cp = CorrelationParams(alpha, beta)
        rng = stream(1, "H")
        Q = np.linalg.qr(rng.standard_normal((10, 10)))[0]
        H = Q @ np.diag(np.linspace(2 * alpha, 1 / (2 * beta), 10)) @ Q.T
        zs = rng.standard_normal(10)
        tr = quadratic_descent(lambda z: H @ (z - zs), zs, np.zeros(10), beta, 50, cp)
        assert np.all(tr.slack <= 1e-12)
        assert audit_convergence_bound(tr, cp, beta).ok

    def test_projected_ball(self):
        alpha = 0.4
        cp = CorrelationParams(alpha, 1 / (4 * alpha))
        zs = np.array([0.3, -0.2])

        def project(z):
            r = np.linalg.norm(z)
            return z if r <= 1 else z / r

        tr = quadratic_descent(lambda z: 2 * alpha * (z - zs), zs, np.array([3.0, 2.0]), cp.beta, 30, cp, project)
        assert audit_convergence_bound(tr, cp, cp.beta).ok

    def test_violation_flagged(self):
        cp = CorrelationParams(0.5, 0.5)

        class Fake:
            err_sq = np.array([[1.0, 1.0], [1.0, 2.0]])
            slack = np.zeros((2, 2))

        rep = audit_convergence_bound(Fake, cp, 0.1)
        assert rep.violations == [(0, 0), (0, 1)]
        assert audit_convergence_bound(Fake, cp, 2.0).pre_violation


class TestFloor:
    def test_geometric_then_flat(self):
        e = np.concatenate([0.1 * 0.8 ** np.arange(10), np.full(6, 0.1 * 0.8**9)])
        assert detect_floor(e) == 9
        ratio, tau, floor = fit_rate(e)
        assert ratio == pytest.approx(0.64, rel=1e-9)
        assert tau == pytest.approx(0.36, rel=1e-9)

    def test_never_floors(self):
        assert detect_floor(0.5 ** np.arange(10)) is None

    def test_short_run(self):
        assert np.isnan(fit_rate([0.1])[0])


@pytest.fixture(scope="module")
def small():
    n = 64
    params = ModelParams(n=n, m=n, k=3)
    Astar = generate_dictionary(n, n, 1)
    return params, Astar, perturb_dictionary(Astar, 0.1, stream(1, "perturb"))


class TestRunDescent:
    def test_fixed_point(self, small):
        params, Astar, _ = small
        A, tr = run_descent(Astar, Astar, params, DescentConfig("unbiased", default_eta(params), 5))
        np.testing.assert_allclose(A, Astar, atol=1e-15)
        assert np.all(tr.column("max_col_err") <= 1e-15)
        assert len(tr) == 6

    def test_zero_step(self, small):
        params, Astar, A0 = small
        A, tr = run_descent(Astar, A0, params, DescentConfig("simple", 0.0, 1))
        np.testing.assert_allclose(A, A0)
        assert len(tr) == 2

    def test_relabeled_start(self, small):
        params, Astar, A0 = small
        perm = stream(2, "p").permutation(params.m)
        signs = stream(2, "s").choice([-1.0, 1.0], params.m)
        _, a = run_descent(Astar, A0, params, DescentConfig("simple", default_eta(params), 3))
        _, b = run_descent(Astar, A0[:, perm] * signs, params, DescentConfig("simple", default_eta(params), 3))
        np.testing.assert_allclose(a.column("max_col_err"), b.column("max_col_err"), atol=1e-14)

    @pytest.mark.parametrize("rule", ["simple", "of", "unbiased"])
    def test_oracle_contracts(self, small, rule):
        params, Astar, A0 = small
        _, tr = run_descent(Astar, A0, params, DescentConfig(rule, default_eta(params), 20))
        e = tr.column("max_col_err")
        assert e[-1] < 0.6 * e[0]
        assert np.all(tr.column("spec_ratio") <= 2)

    def test_simple_reaches_floor_in_incoherent_regime(self):
        n = 256
        params = ModelParams(n=n, m=n, k=3)
        Astar = generate_dictionary(n, n, 1)
        A0 = perturb_dictionary(Astar, 0.1, stream(1, "perturb"))
        _, tr = run_descent(Astar, A0, params, DescentConfig("simple", default_eta(params), 25))
        e = tr.column("max_col_err")
        assert e[-1] <= 0.02
        assert fit_rate(e)[0] <= 0.95

    def test_unbiased_to_machine_precision(self, small):
        params, Astar, A0 = small
        _, tr = run_descent(Astar, A0, params, DescentConfig("unbiased", default_eta(params), 200))
        assert tr.column("max_col_err")[-1] <= 1e-8

    def test_empirical_deterministic(self, small):
        params, Astar, A0 = small
        cfg = DescentConfig("simple", default_eta(params), 3, p_per_iter=2000, mode=EMPIRICAL, seed=4)
        a = format_trace_csv(run_descent(Astar, A0, params, cfg)[1])
        b = format_trace_csv(run_descent(Astar, A0, params, cfg)[1])
        assert a == b
        cfg2 = DescentConfig("simple", default_eta(params), 3, p_per_iter=2000, mode=EMPIRICAL, seed=5)
        assert format_trace_csv(run_descent(Astar, A0, params, cfg2)[1]) != a

    def test_projection_keeps_iterates_in_B(self, small):
        params, Astar, A0 = small
        setB = ProjectionSetB(Astar, 0.12, 2 * np.linalg.norm(Astar, 2))
        A, _ = run_descent(Astar, A0, params, DescentConfig("of", default_eta(params), 5, project=setB))
        assert setB.contains(A, tol=1e-8)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_abort_on_blowup(self, small):
        params, Astar, A0 = small
        with pytest.raises(DescentAborted) as info:
            run_descent(Astar, A0, params, DescentConfig("of", 1e200, 10))
        assert len(info.value.trace) >= 1

    def test_config_validation(self):
        with pytest.raises(ValueError):
            DescentConfig("simple", 1.0, 0)
        with pytest.raises(ValueError):
            DescentConfig("simple", -1.0, 1)
        with pytest.raises(ValueError):
            DescentConfig("simple", 1.0, 1, mode=EMPIRICAL)
        with pytest.raises(ValueError):
            DescentConfig("newton", 1.0, 1)

    def test_shape_mismatch(self, small):
        params, Astar, _ = small
        with pytest.raises(ValueError):
            run_descent(Astar, Astar[:, :5], params, DescentConfig("simple", 1.0, 1))
