"""Quick invariant checks runnable from the command line.

Each check prints one ``PASS``/``FAIL`` line; the exit status is nonzero
when any check fails.  This is a smoke test of an installation, not a
replacement for the test suite.
"""

from __future__ import annotations

import numpy as np

from .bench import Scheme, run_scheme, zf_beams
from .exact_ao import solve_reflect_sdr, solve_txbf
from .harness import default_scenario
from .inexact_ao import surrogate_all
from .metrics import lift_matrices, quad_forms
from .model import composite_channels, effective_channels, sample_channels
from .report import check_solution

SEEDS = (0, 1)


def _hygiene(cfg):
    for seed in SEEDS:
        ch = sample_channels(cfg, seed)
        for s in Scheme:
            rep = run_scheme(s, ch, cfg, seed)
            check_solution(rep.beams, rep.v, cfg.p_max)
    return True


def _monotone(cfg):
    for seed in SEEDS:
        ch = sample_channels(cfg, seed)
        for s in (Scheme.INEXACT_AO, Scheme.LOWCX_AO):
            tr = np.asarray(run_scheme(s, ch, cfg, seed).trace)
            if np.any(np.diff(tr) < -1e-8 * np.abs(tr[:-1])):
                return False
    return True


def _majorizer(cfg):
    rng = np.random.default_rng(0)
    ch = sample_channels(cfg, 0)
    comp = composite_channels(ch)
    beams, t = solve_txbf(ch, comp, np.ones(cfg.N))
    q = quad_forms(comp, ch, beams)
    v0 = np.exp(1j * rng.uniform(0, 2 * np.pi, cfg.N))
    for _ in range(200):
        v = rng.uniform(0, 1, cfg.N) * np.exp(1j * rng.uniform(0, 2 * np.pi, cfg.N))
        F = surrogate_all(q, v, t, cfg.sigma2, cfg.alpha)
        Fup = surrogate_all(q, v, t, cfg.sigma2, cfg.alpha, v0)
        if np.any(Fup < F - 1e-9 * np.maximum(1.0, np.abs(F))):
            return False
    return True


def _zf_leakage(cfg):
    ch = sample_channels(cfg, 0)
    a = effective_channels(ch, composite_channels(ch), np.ones(cfg.N))
    W = zf_beams(a, cfg.cell, cfg.p_max).W
    for i in range(cfg.B):
        for m in range(cfg.K):
            if m != i:
                bound = 1e-8 * np.linalg.norm(a[i, m]) * np.linalg.norm(W[:, i])
                if abs(np.vdot(a[i, m], W[:, i])) > bound:
                    return False
    return True


def _sdr_bound(cfg):
    ch = sample_channels(cfg, 0)
    comp = composite_channels(ch)
    beams, _ = solve_txbf(ch, comp, np.ones(cfg.N))
    q = quad_forms(comp, ch, beams)
    res = solve_reflect_sdr(q, lift_matrices(q), cfg.alpha, cfg.sigma2, rng=0, incumbent=np.ones(cfg.N))
    return res.sdr.t_relaxed >= res.t * (1 - 1e-9)


CHECKS = (
    ("constraint hygiene of every scheme", _hygiene),
    ("non-decreasing SCA traces", _monotone),
    ("majorizer dominates the exact constraint", _majorizer),
    ("zero-forcing leakage bound", _zf_leakage),
    ("relaxation bounds the recovered value", _sdr_bound),
)


def run(out=print) -> bool:
    cfg = default_scenario()
    ok = True
    for name, fn in CHECKS:
        try:
            passed = bool(fn(cfg))
            detail = ""
        except Exception as exc:  # report and continue with the other checks
            passed, detail = False, f" ({type(exc).__name__}: {exc})"
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'}  {name}{detail}")
    return ok
