import json
import logging

import numpy as np
import pytest

from helpers import all_codes
from sparse_altmin.fileio import candidates_to_json
from sparse_altmin.genmodel import ModelParams, generate_dictionary, generate_samples, stream, support_stats
from sparse_altmin.initialization import (
    Candidate,
    CandidateList,
    InitConfig,
    InitIncomplete,
    analytic_moment,
    labeled_pairs,
    pairwise_init,
    pairwise_init_from_samples,
    sign_normalize,
    uniqueness_test,
    weighted_moment,
)
from sparse_altmin.metrics import nearness


def code(m, support, signs=1.0):
    x = np.zeros(m)
    x[support] = signs
    return x


class TestWeightedMoment:
    def test_single_sample(self):
        e1 = np.eye(4)[0]
        M = weighted_moment(e1, e1, e1[None, :])
        expect = np.zeros((4, 4))
        expect[0, 0] = 1.0
        np.testing.assert_array_equal(M, expect)

    def test_orthogonal_reweighting(self):
        Y = np.eye(4)[:3]
        np.testing.assert_array_equal(weighted_moment(np.eye(4)[3], np.eye(4)[3], Y), 0.0)

    def test_chunking_irrelevant(self):
        Y = stream(0, "y").standard_normal((100, 5))
        u, v = Y[0], Y[1]
        np.testing.assert_allclose(weighted_moment(u, v, Y, chunk=7), weighted_moment(u, v, Y), atol=1e-13)

    def test_errors(self):
        with pytest.raises(ValueError):
            weighted_moment(np.ones(3), np.ones(3), np.zeros((0, 3)))
        with pytest.raises(ValueError):
            weighted_moment(np.ones(3), np.ones(4), np.zeros((2, 3)))

    def test_close_to_analytic(self):
        n = m = 32
        params = ModelParams(n=n, m=m, k=3)
        Astar = generate_dictionary(n, m, 5)
        a, b = code(m, [0, 5, 9], [1, -1, 1]), code(m, [0, 12, 20], [-1, 1, 1])
        Y, _ = generate_samples(Astar, params, 50_000, stream(5, "moments"))
        Mhat = weighted_moment(Astar @ a, Astar @ b, Y)
        M = analytic_moment(a, b, Astar, support_stats(params)).M
        assert np.linalg.norm(Mhat - M, 2) <= 0.1 * 3 / 32


class TestAnalyticMoment:
    @pytest.mark.parametrize("n,m,k", [(5, 4, 2), (7, 5, 3), (6, 6, 2), (8, 6, 4)])
    def test_matches_enumeration(self, n, m, k):
        Astar = generate_dictionary(n, m, m * k)
        rng = stream(m, "codes")
        a = code(m, rng.choice(m, k, replace=False), rng.choice([-1.0, 1.0], k))
        b = code(m, rng.choice(m, k, replace=False), rng.choice([-1.0, 1.0], k))
        u, v = Astar @ a, Astar @ b
        Y = np.array(list(all_codes(m, k))) @ Astar.T
        exact = weighted_moment(u, v, Y)
        M = analytic_moment(a, b, Astar, support_stats(ModelParams(n=n, m=m, k=k))).M
        np.testing.assert_allclose(M, exact, atol=1e-12)

    def test_orthonormal_unique_overlap(self):
        m = 6
        Q = np.linalg.qr(stream(0, "q").standard_normal((8, 8)))[0][:, :m]
        stats = support_stats(ModelParams(n=8, m=m, k=2))
        a, b = code(m, [1, 3], [1, -1]), code(m, [1, 4], [-1, 1])
        dec = analytic_moment(a, b, Q, stats)
        np.testing.assert_allclose(dec.beta, a, atol=1e-15)
        np.testing.assert_allclose(dec.main, stats.q_i * (1 * -1) * np.outer(Q[:, 1], Q[:, 1]), atol=1e-15)
        np.testing.assert_allclose(dec.E1, 0.0, atol=1e-15)
        assert dec.main_coefficients(stats) == pytest.approx([-stats.q_i])

    def test_orthonormal_disjoint(self):
        Q = np.eye(6)
        stats = support_stats(ModelParams(n=6, m=6, k=2))
        dec = analytic_moment(code(6, [0, 1]), code(6, [2, 3]), Q, stats)
        assert dec.shared.size == 0
        np.testing.assert_array_equal(dec.main, 0.0)
        np.testing.assert_allclose(dec.M, dec.error)
        assert set(dec.norms()) == {"main", "E1", "E2", "E3", "error"}


class TestUniqueness:
    params = ModelParams(n=64, m=64, k=3)

    def test_extremes(self):
        cfg = InitConfig()
        assert uniqueness_test(1e6, 0.0, self.params, cfg)
        lo, hi = cfg.thresholds(self.params)
        assert lo > hi
        for s in (0.5 * hi, hi, lo, 2 * lo):
            assert not uniqueness_test(s, s, self.params, cfg)

    def test_planted_toy(self):
        m, k = 8, 2
        params = ModelParams(n=8, m=m, k=k)
        stats = support_stats(params)
        # the default ceiling is tuned for m ~ 64; at m = 8 it would sit above the floor
        cfg = InitConfig(sigma2_ceil=1.0)
        lo, hi = cfg.thresholds(params)
        assert lo > hi
        cases = {
            0: (code(m, [0, 1]), code(m, [2, 3])),
            1: (code(m, [0, 1]), code(m, [0, 3], [1, -1])),
            2: (code(m, [0, 1]), code(m, [0, 1], [1, -1])),
        }
        for overlap, (a, b) in cases.items():
            s = np.linalg.svd(analytic_moment(a, b, np.eye(8), stats).M, compute_uv=False)
            assert uniqueness_test(s[0], s[1], params, cfg) == (overlap == 1), overlap

    def test_labeled_pairs_orthonormal(self):
        params = ModelParams(n=64, m=64, k=3)
        overlap, accepted = labeled_pairs(np.eye(64), params, InitConfig(), 300, seed=1)
        assert np.all(accepted == (overlap == 1))


class TestCandidates:
    def test_sign_normalize(self):
        np.testing.assert_array_equal(sign_normalize(np.array([0.1, -0.9])), [-0.1, 0.9])

    def test_dedup_is_sign_invariant(self):
        L = CandidateList()
        z = np.array([0.6, 0.8])
        assert L.offer(Candidate(z, (0, 1), 1.0, 0.0), 0.1)
        assert not L.offer(Candidate(-z, (2, 3), 1.0, 0.0), 0.1)
        assert L.offer(Candidate(np.array([0.8, -0.6]), (4, 5), 1.0, 0.0), 0.1)
        assert len(L) == 2
        d = json.loads(candidates_to_json(L))
        assert d["candidates"][0]["pair"] == [0, 1]

    def test_config(self):
        cfg = InitConfig()
        assert cfg.radius(64) == pytest.approx(1 / np.log(64))
        assert cfg.radius(2) == 0.5
        assert cfg.pair_budget(ModelParams(n=4, m=4, k=2)) == int(np.ceil(50 * 4 * np.log(4)))
        assert cfg.thresholds(ModelParams(n=1, m=1, k=1))[1] == np.inf
        with pytest.raises(ValueError):
            InitConfig(p1=1)
        with pytest.raises(ValueError):
            InitConfig(dedup_radius=1.5)


class TestPairwiseInit:
    def test_single_atom(self):
        Astar = np.array([[0.6], [0.8], [0.0]])
        params = ModelParams(n=3, m=1, k=1)
        A, found = pairwise_init(Astar, params, InitConfig(p1=10, p2=100, seed=0), moment_mode="analytic")
        assert len(found) == 1 and found.pairs_tried == 1
        assert nearness(A, Astar).delta <= 1e-10

    def test_orthonormal_analytic(self):
        # exact moments leave only the O(k/m) cross-term bias in each accepted vector
        m, k = 64, 3
        Astar = np.eye(m)
        params = ModelParams(n=m, m=m, k=k)
        A, found = pairwise_init(Astar, params, InitConfig(p1=400, seed=3), moment_mode="analytic")
        for z in found.vectors:
            assert np.min(np.minimum(np.linalg.norm(Astar - z[:, None], axis=0),
                                     np.linalg.norm(Astar + z[:, None], axis=0))) <= 0.1
        assert nearness(A, Astar).delta <= 0.1

    def test_incomplete(self):
        Astar = np.eye(6)
        params = ModelParams(n=6, m=6, k=2)
        with pytest.raises(InitIncomplete) as info:
            pairwise_init(Astar, params, InitConfig(p1=20, seed=0, max_pairs=3), moment_mode="analytic")
        assert info.value.candidates.pairs_tried == 3

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            pairwise_init(np.eye(3), ModelParams(n=3, m=3, k=1), InitConfig(p1=4, p2=4), moment_mode="exact")

    def test_threshold_overlap_logged(self, caplog):
        Astar = np.eye(6)
        with caplog.at_level(logging.WARNING):
            pairwise_init(Astar, ModelParams(n=6, m=6, k=1), InitConfig(p1=60, seed=0), moment_mode="analytic")
        assert "does not exceed" in caplog.text

    def test_from_samples(self):
        m, n = 6, 24
        Astar = generate_dictionary(n, m, 8)
        params = ModelParams(n=n, m=m, k=1)
        Yp, _ = generate_samples(Astar, params, 60, stream(1, "pairs_pool"))
        Ym, _ = generate_samples(Astar, params, 2000, stream(1, "moments"))
        A, found = pairwise_init_from_samples(Yp, Ym, params, InitConfig(p1=60, seed=1))
        assert len(found) == m
        assert nearness(A, Astar).delta <= 0.1
