import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irs_maxmin.harness import default_scenario
from irs_maxmin.metrics import (
    QuadEntry,
    TxBeams,
    lift_matrices,
    lifted_vector,
    min_weighted_sinr,
    minimizers,
    quad_forms,
    reflect_link_power,
    sinr,
    sinr_all,
)
from irs_maxmin.model import ChannelSet, SystemConfig, composite_channels, sample_channels


def _rand_c(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def _instance(seed, B=2, M=2, N=2, users=(1, 1)):
    K = sum(users)
    rng = np.random.default_rng(seed)
    cfg = SystemConfig(
        users_per_cell=users,
        M=M,
        N=N,
        p_max=[1.0] * B,
        alpha=list(rng.uniform(0.5, 2.0, K)),
        sigma2=list(rng.uniform(0.1, 1.0, K)),
        bs_positions=[(float(b), 0.0) for b in range(B)],
        user_positions=[(0.0, float(k + 1)) for k in range(K)],
        irs_position=(0.0, -1.0),
    )
    ch = ChannelSet(G=_rand_c(rng, B, N, M), f=_rand_c(rng, K, N), h=_rand_c(rng, B, K, M), config=cfg)
    W = TxBeams(_rand_c(rng, M, K) / 2, cfg.cell)
    v = rng.uniform(0, 1, N) * np.exp(1j * rng.uniform(0, 2 * np.pi, N))
    return ch, composite_channels(ch), W, v


def _sinr_by_terms(ch, comp, W, v, m):
    """Independent term-by-term evaluation of one user's SINR."""
    cfg = ch.config
    b = cfg.cell[m]
    desired = 0.0
    interference = 0.0
    for u in range(cfg.K):
        i = cfg.cell[u]
        g = 0j
        for n in range(cfg.N):
            for j in range(cfg.M):
                g += np.conj(v[n]) * comp.Phi[i, m, n, j] * W.W[j, u]
        for j in range(cfg.M):
            g += np.conj(ch.h[i, m, j]) * W.W[j, u]
        if u == m:
            desired = abs(g) ** 2
        else:
            interference += abs(g) ** 2
    assert cfg.cell[m] == b
    return desired / (interference + cfg.sigma2[m])


class TestTxBeams:
    def test_power_per_bs(self):
        W = TxBeams(np.array([[1, 1j, 2], [0, 1, 0]]), [0, 0, 1])
        np.testing.assert_allclose(W.power(), [3.0, 4.0])
        assert W.per_bs(0).shape == (2, 2)

    def test_shape_check(self):
        with pytest.raises(ValueError):
            TxBeams(np.zeros((2, 3)), [0, 1])


class TestQuadForms:
    def test_zero_beams(self):
        ch, comp, W, _ = _instance(0)
        q = quad_forms(comp, ch, np.zeros_like(W.W))
        assert not np.any(q.c) and not np.any(q.d) and not np.any(q.C) and not np.any(q.u)

    def test_rank_one(self):
        ch, comp, W, _ = _instance(1, N=4)
        C = quad_forms(comp, ch, W).C
        lam = np.linalg.eigvalsh(C.reshape(-1, 4, 4))
        tr = np.trace(C.reshape(-1, 4, 4), axis1=1, axis2=2).real
        assert np.all(lam[:, -2] < 1e-12 * np.maximum(tr, 1e-300) + 1e-15)

    def test_u_consistent(self):
        ch, comp, W, _ = _instance(2)
        q = quad_forms(comp, ch, W)
        np.testing.assert_allclose(q.u, q.c * np.conj(q.d)[..., None])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000))
    def test_expansion_matches_modulus(self, seed):
        ch, comp, W, v = _instance(seed, B=2, M=3, N=4, users=(2, 1))
        q = quad_forms(comp, ch, W)
        cfg = ch.config
        for m in range(cfg.K):
            for u in range(cfg.K):
                i = cfg.cell[u]
                direct = abs((np.conj(v) @ comp.Phi[i, m] + np.conj(ch.h[i, m])) @ W.W[:, u]) ** 2
                val = reflect_link_power(q.entry(m, u), v)
                assert abs(val - direct) <= 1e-9 * (1 + direct)

    def test_dimension_mismatch(self):
        ch, comp, W, _ = _instance(3)
        with pytest.raises(ValueError):
            quad_forms(comp, ch, np.zeros((3, 2)))


class TestReflectLinkPower:
    def test_zero_v(self):
        e = QuadEntry(np.array([1 + 1j, 2.0]), 0.5 - 1j)
        assert reflect_link_power(e, np.zeros(2)) == pytest.approx(1.25)

    def test_no_reflection(self):
        e = QuadEntry(np.zeros(3, dtype=complex), 2j)
        assert reflect_link_power(e, np.exp(1j * np.arange(3))) == pytest.approx(4.0)

    def test_matches_direct(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            c, d, v = _rand_c(rng, 6), complex(*rng.normal(size=2)), _rand_c(rng, 6)
            direct = abs(np.vdot(v, c) + d) ** 2
            assert reflect_link_power(QuadEntry(c, d), v) == pytest.approx(direct, rel=1e-10)


class TestSinr:
    def test_interference_free_mrt(self):
        cfg = SystemConfig((1,), 3, 2, [2.0], [1.0], [0.5], [(0, 0)], [(1, 0)], (0, -1))
        rng = np.random.default_rng(0)
        h = _rand_c(rng, 1, 1, 3)
        ch = ChannelSet(G=np.zeros((1, 2, 3), complex), f=np.zeros((1, 2), complex), h=h, config=cfg)
        w = np.sqrt(2.0) * h[0, 0] / np.linalg.norm(h[0, 0])
        val = sinr(ch, composite_channels(ch), w[:, None], np.ones(2), 0, 0)
        assert val == pytest.approx(2.0 * np.linalg.norm(h) ** 2 / 0.5, rel=1e-12)

    def test_homogeneous(self):
        ch, comp, W, v = _instance(6)
        s1 = sinr_all(ch, comp, W, v)
        cfg2 = ch.config.with_(sigma2=[3.0 * s for s in ch.config.sigma2])
        ch2 = ChannelSet(ch.G, ch.f, ch.h, cfg2)
        s2 = sinr_all(ch2, comp, np.sqrt(3.0) * W.W, v)
        np.testing.assert_allclose(s1, s2, rtol=1e-12)

    def test_term_enumeration_oracle(self):
        ch, comp, W, v = _instance(7, B=2, M=2, N=2)
        for m in range(ch.config.K):
            b = ch.config.cell[m]
            assert sinr(ch, comp, W, v, b, 0) == pytest.approx(_sinr_by_terms(ch, comp, W, v, m), rel=1e-12)

    def test_intra_cell_interference_counted(self):
        ch, comp, W, v = _instance(8, users=(2, 1))
        for m in range(3):
            assert sinr_all(ch, comp, W, v)[m] == pytest.approx(_sinr_by_terms(ch, comp, W, v, m), rel=1e-12)


class TestMinWeightedSinr:
    def test_unit_weights(self):
        ch, comp, W, v = _instance(9)
        cfg = ch.config.with_(alpha=[1.0, 1.0])
        ch1 = ChannelSet(ch.G, ch.f, ch.h, cfg)
        assert min_weighted_sinr(ch1, comp, W, v) == pytest.approx(np.min(sinr_all(ch1, comp, W, v)))

    def test_doubling_minimizer_weight(self):
        ch, comp, W, v = _instance(10)
        alpha = np.ones(2)
        weighted = sinr_all(ch, comp, W, v) / alpha
        m = int(np.argmin(weighted))
        t = min_weighted_sinr(ch, comp, W, v, alpha)
        alpha[m] = 2.0
        assert min_weighted_sinr(ch, comp, W, v, alpha) == pytest.approx(t / 2)

    def test_exhaustive_scan(self):
        for seed in range(50):
            ch, comp, W, v = _instance(100 + seed, B=2, M=2, N=3, users=(2, 1))
            s = [_sinr_by_terms(ch, comp, W, v, m) / ch.config.alpha[m] for m in range(3)]
            assert min_weighted_sinr(ch, comp, W, v) == pytest.approx(min(s), rel=1e-12)

    @given(st.floats(0.01, 100.0))
    def test_common_weight_scaling(self, c):
        ch, comp, W, v = _instance(11, users=(2, 1))
        alpha = np.array(ch.config.alpha)
        w1 = sinr_all(ch, comp, W, v) / alpha
        w2 = sinr_all(ch, comp, W, v) / (c * alpha)
        assert min_weighted_sinr(ch, comp, W, v, c * alpha) == pytest.approx(min_weighted_sinr(ch, comp, W, v) / c)
        assert minimizers(w1) == minimizers(w2)

    def test_bounded_by_every_user(self):
        ch, comp, W, v = _instance(12, users=(2, 1))
        t = min_weighted_sinr(ch, comp, W, v)
        assert np.all(t <= sinr_all(ch, comp, W, v) / np.array(ch.config.alpha))

    def test_ties_reported_lowest_first(self):
        assert minimizers(np.array([2.0, 1.0, 3.0, 1.0])) == [1, 3]


class TestLift:
    def test_zero_data(self):
        ch, comp, W, _ = _instance(13)
        q = quad_forms(comp, ch, np.zeros_like(W.W))
        assert not np.any(lift_matrices(q).R)

    def test_structure(self):
        ch, comp, W, _ = _instance(14, N=3)
        R = lift_matrices(quad_forms(comp, ch, W)).R
        np.testing.assert_allclose(R, np.conj(np.swapaxes(R, -1, -2)))
        assert not np.any(R[..., -1, -1])

    def test_lifted_identity(self):
        for seed in range(100):
            ch, comp, W, v = _instance(200 + seed, N=3)
            q = quad_forms(comp, ch, W)
            L = lift_matrices(q)
            vb = lifted_vector(v)
            assert vb[-1] == 1
            for m in range(2):
                for u in range(2):
                    lifted = np.real(np.vdot(vb, L.R[m, u] @ vb)) + abs(L.d[m, u]) ** 2
                    ref = reflect_link_power(q.entry(m, u), v)
                    assert abs(lifted - ref) <= 1e-10 * (1 + ref)

    def test_default_scenario_identity(self):
        cfg = default_scenario()
        ch = sample_channels(cfg, 0)
        comp = composite_channels(ch)
        rng = np.random.default_rng(0)
        W = TxBeams(_rand_c(rng, cfg.M, cfg.K), cfg.cell)
        q = quad_forms(comp, ch, W)
        L = lift_matrices(q)
        v = np.exp(1j * rng.uniform(0, 2 * np.pi, cfg.N))
        vb = lifted_vector(v)
        lifted = np.einsum("i,muij,j->mu", vb.conj(), L.R, vb).real + np.abs(L.d) ** 2
        direct = np.abs(np.einsum("n,mun->mu", v.conj(), q.c) + q.d) ** 2
        np.testing.assert_allclose(lifted, direct, rtol=1e-9)
