import math

import numpy as np
import pytest

from irs_maxmin._embed import mrt_directions, weighted_sinr
from irs_maxmin.bench import no_irs_solve, run_scheme
from irs_maxmin.conic import Status
from irs_maxmin.exact_ao import (
    bisect,
    gaussian_randomize,
    randomization_candidates,
    run_exact_ao,
    solve_reflect_sdr,
    solve_txbf,
    solve_txbf_effective,
    user_index_map,
)
from irs_maxmin.harness import Scenario, build_config, default_scenario
from irs_maxmin.metrics import TxBeams, min_weighted_sinr, quad_forms, sinr_from_quad
from irs_maxmin.model import ChannelSet, SystemConfig, composite_channels, effective_channels, sample_channels
from irs_maxmin.report import SolverFailure, Termination


def _rand_c(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def _default_q(seed):
    cfg = default_scenario()
    ch = sample_channels(cfg, seed)
    comp = composite_channels(ch)
    a = effective_channels(ch, comp, np.ones(cfg.N))
    beams = mrt_directions(a, cfg.cell, cfg.p_max)
    return cfg, quad_forms(comp, ch, beams)


def _single_user(N=6, seed=0):
    rng = np.random.default_rng(seed)
    cfg = SystemConfig((1,), 2, N, [1.0], [1.0], [0.5], [(0, 0)], [(1, 0)], (0, -1))
    ch = ChannelSet(G=_rand_c(rng, 1, N, 2), f=_rand_c(rng, 1, N), h=_rand_c(rng, 1, 1, 2), config=cfg)
    return cfg, ch


def _no_irs_channels(seed):
    cfg = default_scenario()
    ch = sample_channels(cfg, seed)
    return cfg, ChannelSet(np.zeros_like(ch.G), ch.f, ch.h, cfg)


class TestBisect:
    def test_threshold(self):
        res = bisect(lambda t: ((Status.OPTIMAL if t <= 3.7 else Status.INFEASIBLE), t, None), 0.0, 10.0, 1e-4)
        assert res.lo <= 3.7 <= res.hi
        assert res.hi - res.lo <= 1e-4 * res.hi

    def test_feasibility_monotone_along_run(self):
        res = bisect(lambda t: ((Status.OPTIMAL if t <= 2.0 else Status.INFEASIBLE), t, None), 0.0, 50.0, 1e-6)
        feas = [t for t, ok in res.probes if ok]
        infeas = [t for t, ok in res.probes if not ok]
        assert max(feas) < min(infeas)

    def test_witness_closes_bracket(self):
        # every probe reports the true optimum as its attained level
        res = bisect(lambda t: ((Status.OPTIMAL if t <= 2.0 else Status.INFEASIBLE), "w", 2.0), 0.0, 50.0, 1e-3)
        assert res.lo == 2.0 and res.payload == "w"
        assert len(res.probes) <= 3

    def test_retry_then_fail(self):
        calls = []

        def probe(t):
            calls.append(t)
            return Status.NUMERICAL_FAILURE, None, None

        with pytest.raises(SolverFailure) as err:
            bisect(probe, 1.0, 4.0, 1e-3)
        assert len(calls) == 2
        assert calls[1] == pytest.approx(0.5 * (1.0 + calls[0]))
        assert err.value.partial.lo == 1.0

    def test_retry_recovers(self):
        state = {"n": 0}

        def probe(t):
            state["n"] += 1
            if state["n"] == 1:
                return Status.NUMERICAL_FAILURE, None, None
            return (Status.OPTIMAL if t <= 1.5 else Status.INFEASIBLE), None, None

        res = bisect(probe, 1.0, 4.0, 1e-3)
        assert res.lo <= 1.5 <= res.hi

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            bisect(lambda t: None, 0.0, 1.0, 0.0)


class TestIndexMap:
    def test_bijection(self):
        m = user_index_map((2, 3, 1))
        assert sorted(m.values()) == list(range(6))
        assert m[(1, 0)] == 2 and m[(2, 0)] == 5


class TestSolveTxbf:
    def test_single_user_mrt(self):
        rng = np.random.default_rng(0)
        a = _rand_c(rng, 1, 1, 4)
        res = solve_txbf_effective(a, [0], [1.0], [0.5], [2.0], tol_rel=1e-5)
        ref = 2.0 * np.linalg.norm(a) ** 2 / 0.5
        assert res.t == pytest.approx(ref, rel=1e-4)
        w = res.beams.W[:, 0]
        assert abs(np.vdot(a[0, 0], w)) == pytest.approx(np.linalg.norm(a) * np.linalg.norm(w), rel=1e-6)

    def test_symmetric_grid_oracle(self):
        # B=2, M=1 symmetric: the 51x51 power grid contains the optimum
        for gd, gc in [(1.0, 0.3), (2.0, 1.5), (0.5, 0.05)]:
            a = np.array([[[gd], [gc]], [[gc], [gd]]], dtype=complex)
            sig = np.array([0.1, 0.1])
            p = np.linspace(0.0, 1.0, 51)
            p1, p2 = np.meshgrid(p, p, indexing="ij")
            s1 = p1 * gd**2 / (p2 * gc**2 + sig[0])
            s2 = p2 * gd**2 / (p1 * gc**2 + sig[1])
            grid = np.max(np.minimum(s1, s2))
            res = solve_txbf_effective(a, [0, 1], [1.0, 1.0], sig, [1.0, 1.0])
            assert abs(res.t - grid) <= 0.02 * grid

    def test_invariants_default(self):
        cfg = default_scenario()
        for seed in range(3):
            ch = sample_channels(cfg, seed)
            comp = composite_channels(ch)
            v = np.exp(1j * np.random.default_rng(seed).uniform(0, 2 * np.pi, cfg.N))
            res = solve_txbf(ch, comp, v)
            beams, t = res
            assert np.all(beams.power() <= np.array(cfg.p_max) * (1 + 1e-6))
            a = effective_channels(ch, comp, v)
            own = np.einsum("km,mk->k", a[cfg.cell, np.arange(cfg.K)].conj(), beams.W)
            assert np.all(np.abs(own.imag) <= 1e-6 * np.abs(own))
            assert np.all(own.real >= 0)
            assert t == pytest.approx(min_weighted_sinr(ch, comp, beams, v), rel=1e-8)
            assert res.t_hi - res.t_lo <= 1e-3 * res.t_hi
            feas = [p for p, ok in res.probes if ok]
            infeas = [p for p, ok in res.probes if not ok]
            assert all(p <= res.t_lo for p in feas)
            assert all(p >= res.t_lo for p in infeas)
            assert res.t >= res.t_lo * (1 - 1e-6)

    def test_beats_mrt_start(self):
        cfg = default_scenario()
        ch = sample_channels(cfg, 1)
        comp = composite_channels(ch)
        a = effective_channels(ch, comp, np.ones(cfg.N))
        mrt = mrt_directions(a, cfg.cell, cfg.p_max)
        t_mrt = np.min(weighted_sinr(a, mrt, cfg.sigma2, cfg.alpha))
        assert solve_txbf(ch, comp, np.ones(cfg.N)).t >= t_mrt


class TestSolveReflectSdr:
    def test_single_user_closed_form(self):
        cfg, ch = _single_user()
        comp = composite_channels(ch)
        W = TxBeams(np.array([[0.6], [0.8j]]), cfg.cell)
        q = quad_forms(comp, ch, W)
        c, d = q.c[0, 0], q.d[0, 0]
        ref = (abs(d) + np.abs(c).sum()) ** 2 / 0.5
        res = solve_reflect_sdr(q, None, cfg.alpha, cfg.sigma2, tol_rel=1e-5, rng=0)
        assert res.sdr.rank_estimate <= 1
        assert res.source == "eigenvector"
        assert res.t == pytest.approx(ref, rel=1e-4)
        assert res.t == pytest.approx(res.sdr.t_lower, rel=1e-4)
        assert res.sdr.t_relaxed >= res.t * (1 - 1e-9)
        np.testing.assert_allclose(np.abs(res.v), 1.0, atol=1e-6)

    def test_disconnected_irs(self):
        cfg, ch = _no_irs_channels(0)
        comp = composite_channels(ch)
        beams, t0 = no_irs_solve(ch)
        q = quad_forms(comp, ch, beams)
        res = solve_reflect_sdr(q, None, cfg.alpha, cfg.sigma2, rng=0, incumbent=np.ones(cfg.N))
        assert res.t == pytest.approx(t0, rel=1e-8)

    @pytest.mark.parametrize("seed", range(3))
    def test_solution_invariants(self, seed):
        cfg, q = _default_q(seed)
        res = solve_reflect_sdr(q, None, cfg.alpha, cfg.sigma2, num_rand=200, rng=seed, incumbent=np.ones(cfg.N))
        V = res.sdr.V
        N = cfg.N
        assert np.all(np.diag(V).real[:N] <= 1 + 1e-7)
        assert abs(V[N, N] - 1) <= 1e-7
        assert np.linalg.eigvalsh(V)[0] >= -1e-8
        assert np.all(np.abs(res.v) <= 1 + 1e-9)
        assert res.t == pytest.approx(float(np.min(sinr_from_quad(q, res.v, cfg.sigma2) / cfg.alpha)), rel=1e-10)
        assert res.sdr.t_relaxed >= res.t

    @pytest.mark.parametrize("seed", range(5))
    def test_relaxation_bounds_random_points(self, seed):
        cfg, q = _default_q(seed)
        res = solve_reflect_sdr(q, None, cfg.alpha, cfg.sigma2, num_rand=100, rng=seed)
        rng = np.random.default_rng(1000 + seed)
        v = np.exp(1j * rng.uniform(0, 2 * np.pi, (1000, cfg.N)))
        vals = np.min(sinr_from_quad(q, v, cfg.sigma2) / np.asarray(cfg.alpha), axis=-1)
        assert np.max(vals) <= res.sdr.t_relaxed

    def test_degraded_returns_incumbent(self):
        cfg, q = _default_q(4)
        res0 = solve_reflect_sdr(q, None, cfg.alpha, cfg.sigma2, num_rand=50, rng=0)
        # feeding the relaxation bound's best candidate back: a single draw
        # rarely beats it, and the incumbent must then come back unchanged
        res = solve_reflect_sdr(q, None, cfg.alpha, cfg.sigma2, num_rand=1, rng=1, incumbent=res0.v)
        assert res.t >= res0.t
        if res.degraded:
            np.testing.assert_array_equal(res.v, res0.v)
            assert res.source == "incumbent"


class TestGaussianRandomize:
    def test_unit_modulus(self):
        cfg, q = _default_q(0)
        res = solve_reflect_sdr(q, None, cfg.alpha, cfg.sigma2, num_rand=10, rng=0)
        cand = randomization_candidates(res.sdr.V, 500, 0)
        np.testing.assert_allclose(np.abs(cand), 1.0, atol=1e-12)

    def test_zero_last_entry_discarded(self):
        V = np.diag([1.0, 1.0, 0.0]).astype(complex)
        assert randomization_candidates(V, 10, 0).shape == (0, 2)
        _, q = _default_q(0)
        v, t = gaussian_randomize(np.zeros((21, 21), complex), 5, 0, q, [1.0] * 3, [1.0] * 3)
        assert v is None and t == -math.inf

    def test_bounded_by_relaxation(self):
        for seed in range(3):
            cfg, q = _default_q(seed)
            res = solve_reflect_sdr(q, None, cfg.alpha, cfg.sigma2, num_rand=10, rng=seed)
            _, t = gaussian_randomize(res.sdr.V, 1000, seed, q, cfg.sigma2, cfg.alpha)
            assert t <= res.sdr.t_relaxed

    def test_more_draws_help_on_average(self):
        few, many = [], []
        for seed in range(20):
            cfg, q = _default_q(seed)
            res = solve_reflect_sdr(q, None, cfg.alpha, cfg.sigma2, num_rand=10, rng=seed)
            few.append(gaussian_randomize(res.sdr.V, 10, seed, q, cfg.sigma2, cfg.alpha)[1])
            many.append(gaussian_randomize(res.sdr.V, 1000, seed, q, cfg.sigma2, cfg.alpha)[1])
        assert np.mean(many) >= np.mean(few)


class TestRunExactAo:
    def test_disconnected_irs_single_iteration(self):
        cfg, ch = _no_irs_channels(1)
        rep = run_exact_ao(ch, rng=0)
        _, t0 = no_irs_solve(ch)
        assert rep.iterations == 1
        assert rep.termination is Termination.CONVERGED
        assert rep.objective == pytest.approx(t0, rel=2e-3)

    def test_report_consistency(self):
        cfg = default_scenario()
        ch = sample_channels(cfg, 2)
        rep = run_exact_ao(ch, rng=2, num_rand=100)
        comp = composite_channels(ch)
        assert rep.objective == pytest.approx(min_weighted_sinr(ch, comp, rep.beams, rep.v), rel=1e-8)
        assert rep.objective == pytest.approx(max(t for _, t in rep.half_trace))
        assert len(rep.trace) >= 1
        assert all(r <= rep.objective for r in rep.trace)

    def test_random_init_flag(self):
        cfg = default_scenario()
        ch = sample_channels(cfg, 3)
        rep = run_exact_ao(ch, rng=3, num_rand=50, max_iters=1, random_init=True)
        assert rep.iterations == 1

    def test_beats_random_reflect(self, default_runs):
        ex = default_runs("exact_ao")
        rr = default_runs("random_reflect")
        wins = sum(a.objective >= b.objective for a, b in zip(ex, rr))
        assert wins >= 90

    def test_decrease_termination_at_high_power(self):
        cfg = build_config(Scenario(p_max_dbm=45.0))
        reasons = []
        for seed in range(8):
            reasons.append(run_scheme("exact_ao", sample_channels(cfg, seed), cfg, seed).termination)
        assert Termination.OBJECTIVE_DECREASED in reasons
