"""Acceptance criteria 1 to 10, each printing one PASS/FAIL line.

Averages use the default scenario (three cells, M = 3, N = 20, 35 dBm)
and seeds ``0 .. 99`` unless a test says otherwise.  Verdicts are
collected by the ``acceptance`` fixture and repeated in the terminal
summary.
"""

import numpy as np
import pytest
from conftest import SchemeRuns

from irs_maxmin.bench import Scheme, UnitAmplitude, run_scheme
from irs_maxmin.exact_ao import solve_reflect_sdr, solve_txbf, solve_txbf_effective
from irs_maxmin.harness import Scenario, build_config, default_scenario
from irs_maxmin.inexact_ao import surrogate_all
from irs_maxmin.lowcx_ao import objective_G, run_lowcx_ao, subgrad
from irs_maxmin.metrics import quad_forms, sinr_from_quad
from irs_maxmin.model import composite_channels, effective_channels, sample_channels

TINY = Scenario(M=1, N=1, placement="cell_edge_disks")
POWER_GRID = np.linspace(0.0, 1.0, 51)
V_GRID = (np.linspace(0.0, 1.0, 21)[:, None]
          * np.exp(1j * np.linspace(0.0, 2 * np.pi, 720, endpoint=False))[None, :]).ravel()


def _monotone(values, rtol=1e-8):
    t = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(t) >= -rtol * np.abs(t[:-1])))


def _tiny_gains(ch, comp, v):
    """``|a_{i,m}|^2`` for a batch of scalar reflection coefficients, shape ``(len(v), 2, 2)``."""
    Phi, h = comp.Phi[:, :, 0, 0], ch.h[:, :, 0]
    return np.abs(np.conj(v)[:, None, None] * Phi[None] + np.conj(h)[None]) ** 2


def _power_grid_max(G, P, sigma2, alpha, chunk=500):
    """Max over the 51 x 51 power grid of the min weighted SINR, for each gain matrix in ``G``."""
    p1 = (POWER_GRID * P[0])[None, :, None]
    p2 = (POWER_GRID * P[1])[None, None, :]
    out = np.empty(len(G))
    for s in range(0, len(G), chunk):
        g = G[s : s + chunk, :, :, None, None]
        s1 = p1 * g[:, 0, 0] / (p2 * g[:, 1, 0] + sigma2[0]) / alpha[0]
        s2 = p2 * g[:, 1, 1] / (p1 * g[:, 0, 1] + sigma2[1]) / alpha[1]
        out[s : s + chunk] = np.minimum(s1, s2).reshape(len(g), -1).max(axis=1)
    return out


@pytest.fixture(scope="module")
def tiny_runs():
    rows = []
    for seed in range(50):
        cfg = build_config(TINY, seed)
        ch = sample_channels(cfg, seed)
        comp = composite_channels(ch)
        P, sig, al = (np.asarray(x, dtype=float) for x in (cfg.p_max, cfg.sigma2, cfg.alpha))
        # the batched gain formula agrees with the model's effective channels
        probe = V_GRID[[0, 5000, 15119]]
        ref = np.stack([np.abs(effective_channels(ch, comp, np.array([x]))[..., 0]) ** 2 for x in probe])
        np.testing.assert_allclose(_tiny_gains(ch, comp, probe), ref, rtol=1e-12)
        oracle = _power_grid_max(_tiny_gains(ch, comp, V_GRID), P, sig, al).max()
        rep = run_scheme("inexact_ao", ch, cfg, seed)
        a = effective_channels(ch, comp, rep.v)
        fixed_v_oracle = _power_grid_max(np.abs(a[None, ..., 0]) ** 2, P, sig, al)[0]
        tx = solve_txbf_effective(a, cfg.cell, al, sig, P).t
        rows.append((oracle, rep.objective, fixed_v_oracle, tx))
    return np.array(rows)


def test_criterion_01_monotone_traces(default_runs, acceptance):
    bad = {s: sum(not _monotone([x for _, x in r.half_trace]) for r in default_runs(s))
           for s in ("inexact_ao", "lowcx_ao")}
    ok = acceptance.record(1, "non-decreasing traces", not any(bad.values()),
                           f"non-monotone seeds out of 100: {bad}")
    assert ok


def test_criterion_02a_inexact_vs_grid_oracle(tiny_runs, acceptance):
    ratio = tiny_runs[:, 1] / tiny_runs[:, 0]
    frac = float(np.mean(ratio >= 0.95))
    ok = acceptance.record("2a", "tiny-instance oracle (algorithm)", frac >= 0.9,
                           f"{frac:.0%} of 50 seeds at >= 0.95 x oracle, worst ratio {ratio.min():.3f}")
    assert ok


def test_criterion_02b_txbf_vs_power_grid(tiny_runs, acceptance):
    dev = np.abs(tiny_runs[:, 3] / tiny_runs[:, 2] - 1.0)
    ok = dev.max() <= 0.02
    line = f"transmit step within 2% of the power-grid oracle on {int(np.sum(dev <= 0.02))}/50 seeds, "
    line += f"max deviation {dev.max():.1%}"
    acceptance.record("2b", "tiny-instance oracle (transmit step)", ok, line)
    assert ok


def test_criterion_03_sdr_soundness(acceptance):
    cfg = default_scenario()
    alpha = np.asarray(cfg.alpha)
    violations = 0
    for seed in range(20):
        ch = sample_channels(cfg, seed)
        comp = composite_channels(ch)
        beams, _ = solve_txbf(ch, comp, np.ones(cfg.N))
        q = quad_forms(comp, ch, beams)
        res = solve_reflect_sdr(q, None, cfg.alpha, cfg.sigma2, num_rand=1000, rng=seed)
        rng = np.random.default_rng(10_000 + seed)
        v = np.exp(1j * rng.uniform(0, 2 * np.pi, (1000, cfg.N)))
        vals = np.min(sinr_from_quad(q, v, cfg.sigma2) / alpha, axis=-1)
        violations += int(np.sum(vals > res.sdr.t_relaxed)) + int(res.t > res.sdr.t_relaxed)
    ok = acceptance.record(3, "relaxation bounds random and recovered points", violations == 0,
                           f"{violations} violations over 20 seeds x 1001 points")
    assert ok


def _physical_instance(seed, rng):
    cfg = default_scenario()
    ch = sample_channels(cfg, seed)
    comp = composite_channels(ch)
    beams, _ = solve_txbf(ch, comp, np.ones(cfg.N))
    q = quad_forms(comp, ch, beams)
    v0 = np.sqrt(rng.uniform(size=cfg.N)) * np.exp(1j * rng.uniform(0, 2 * np.pi, cfg.N))
    t = float(np.min(sinr_from_quad(q, v0, cfg.sigma2) / np.asarray(cfg.alpha)))
    return cfg, q, beams, v0, t


def test_criterion_04_majorizer_and_subgradient(acceptance):
    rng = np.random.default_rng(4)
    worst = -np.inf
    for seed in range(10):
        cfg, q, beams, v0, t = _physical_instance(seed, rng)
        v = np.sqrt(rng.uniform(size=(1000, cfg.N))) * np.exp(1j * rng.uniform(0, 2 * np.pi, (1000, cfg.N)))
        F = surrogate_all(q, v, t, cfg.sigma2, cfg.alpha)
        Fu = surrogate_all(q, v, t, cfg.sigma2, cfg.alpha, v0)
        # constraint values in units of the noise power
        worst = max(worst, float(np.max((F - Fu) / min(cfg.sigma2))))
    maj_ok = worst <= 1e-9

    h, checked, seed, errs = 1e-6, 0, 0, []
    while checked < 100:
        cfg, q, beams, v0, t = _physical_instance(seed % 100, rng)
        seed += 1
        v = np.sqrt(rng.uniform(size=cfg.N)) * np.exp(1j * rng.uniform(0, 2 * np.pi, cfg.N))
        top = np.sort(surrogate_all(q, v, t, cfg.sigma2, cfg.alpha, v0))
        if top[-1] - top[-2] < 1e-3 * abs(top[-1]):
            continue  # active user not unique

        def G(x):
            return objective_G(q, x, beams, t, v0, cfg.sigma2, cfg.alpha)[0]

        fd = np.zeros(2 * cfg.N)
        for n in range(cfg.N):
            e = np.zeros(cfg.N, complex)
            e[n] = h
            fd[n] = (G(v + e) - G(v - e)) / (2 * h)
            fd[cfg.N + n] = (G(v + 1j * e) - G(v - 1j * e)) / (2 * h)
        g = subgrad(q, v, beams, t, v0, cfg.sigma2, cfg.alpha)
        ref = np.r_[g.real, g.imag]
        errs.append(np.linalg.norm(fd - ref) / np.linalg.norm(ref))
        checked += 1
    grad_ok = max(errs) < 1e-5
    ok = acceptance.record(4, "majorizer dominates and subgradient matches differences", maj_ok and grad_ok,
                           f"max violation {worst:.2e} (noise units), max gradient rel. error {max(errs):.2e}")
    assert ok


def test_criterion_05_scheme_ordering(default_runs, acceptance):
    m = {s: default_runs.mean_objective(s) for s in ("inexact_ao", "lowcx_ao", "ao_zf", "random_reflect",
                                                     "no_irs", "exact_ao")}
    chain = [("inexact_ao", "lowcx_ao"), ("lowcx_ao", "ao_zf"), ("ao_zf", "random_reflect"),
             ("inexact_ao", "exact_ao")]
    failed = [f"{a}<{b}" for a, b in chain if m[a] < 0.95 * m[b]]
    rr_ok = abs(m["random_reflect"] - m["no_irs"]) <= 0.15 * m["no_irs"]
    ok = not failed and rr_ok
    means = ", ".join(f"{k} {v:.2f}" for k, v in m.items())
    acceptance.record(5, "scheme ordering", ok, f"means {means}; violations {failed or 'none'}")
    assert ok


def test_criterion_06_irs_gain_random_users(acceptance):
    sc = Scenario(placement="random_triangle")
    alg2, base = [], []
    for seed in range(100):
        cfg = build_config(sc, seed)
        ch = sample_channels(cfg, seed)
        alg2.append(run_scheme("inexact_ao", ch, cfg, seed).objective)
        base.append(run_scheme("no_irs", ch, cfg, seed).objective)
    gain = np.mean(alg2) / np.mean(base) - 1.0
    ok = acceptance.record(6, "IRS gain with random users", gain >= 0.3, f"average gain {gain:.1%}")
    assert ok


def test_criterion_07_complexity_ordering(default_runs, acceptance):
    schemes = ("lowcx_ao", "inexact_ao", "exact_ao")
    times = {20: [default_runs.mean_time(s) for s in schemes]}
    runs30 = SchemeRuns(build_config(Scenario(N=30)), 30)
    times[30] = [runs30.mean_time(s) for s in schemes]
    order_ok = all(t[0] < t[1] < t[2] for t in times.values())

    Ns = np.array([20, 30, 40, 60, 80])
    half = []
    for N in Ns:
        cfg = build_config(Scenario(N=int(N)))
        per_run = [np.median(run_lowcx_ao(sample_channels(cfg, s), cfg).info["reflect_times"]) for s in range(5)]
        half.append(np.median(per_run))
    half = np.array(half)
    X = np.c_[np.ones(len(Ns)), Ns]
    coef, *_ = np.linalg.lstsq(X, half, rcond=None)
    resid = float(np.max(np.abs(X @ coef - half) / half))
    ok = order_ok and resid <= 0.3
    detail = "; ".join(f"N={n}: " + ", ".join(f"{s} {1e3 * x:.0f} ms" for s, x in zip(schemes, t))
                       for n, t in times.items())
    acceptance.record(7, "wall-time ordering and linear reflect step", ok,
                      f"{detail}; linear-fit residual {resid:.1%}")
    assert ok


def test_criterion_08_randomization_count(default_runs, acceptance):
    cfg = default_scenario()
    means = {}
    for n in (10, 100):
        vals = [run_scheme("exact_ao", sample_channels(cfg, s), cfg, s, num_rand=n).objective for s in range(30)]
        means[n] = float(np.mean(vals))
    # the default draw count is 1000
    means[1000] = float(np.mean([r.objective for r in default_runs("exact_ao")[:30]]))
    ok = means[1000] >= means[100] >= means[10]
    acceptance.record(8, "more randomizations help", ok,
                      ", ".join(f"{n} draws {x:.3f}" for n, x in means.items()))
    assert ok


def test_criterion_09_unit_amplitude(default_runs, acceptance):
    ratios = {s.value: default_runs.mean_objective(UnitAmplitude(s)) / default_runs.mean_objective(s)
              for s in (Scheme.EXACT_AO, Scheme.INEXACT_AO, Scheme.LOWCX_AO)}
    ok = min(ratios.values()) >= 0.9
    acceptance.record(9, "unit-amplitude loss", ok, ", ".join(f"{k} {v:.3f}" for k, v in ratios.items()))
    assert ok


def test_criterion_10_constraint_hygiene(hygiene_audit, acceptance):
    ok = hygiene_audit.checked > 0 and not hygiene_audit.violations
    acceptance.record(10, "constraint hygiene", ok,
                      f"{hygiene_audit.checked} reports checked, {len(hygiene_audit.violations)} violations")
    assert ok
