"""Low-complexity inexact alternating optimization (Algorithm 3).

The reflect update replaces the SCA program by a fixed budget of
subgradient-projection steps on ``G(v) = max_m F_up_m(v)`` over the unit
disk set.  Each step needs only the rank-one products ``v^H c`` of every
link, so its cost is linear in the number of IRS elements.

Gradients of real functions of complex ``v`` are returned in complex form:
``g`` such that ``f(v + dv) ~ f(v) + Re(g^H dv)``, i.e. ``[Re g, Im g]`` is
the ordinary gradient over ``(Re v, Im v)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .inexact_ao import alternate, solve_p4_effective, surrogate_all
from .metrics import QuadForms
from .model import ChannelSet
from .report import SolveReport

__all__ = [
    "DescentResult",
    "objective_G",
    "subgrad",
    "project_unit_disk",
    "subgrad_descend",
    "run_lowcx_ao",
]

GAMMA = 0.01
STEPS = 100


def objective_G(q: QuadForms, v, W, t: float, v0, sigma2, alpha):
    """``(max_m F_up_m(v), m)`` with the lowest maximizing index.

    ``W`` is accepted for interface symmetry; ``q`` already encodes it.
    """
    vals = surrogate_all(q, v, t, sigma2, alpha, v0)
    m = int(np.argmax(vals))
    return float(vals[m]), m


def _grad_user(q: QuadForms, v, t: float, v0, alpha, m: int) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    v = np.asarray(v, dtype=complex)
    v0 = np.asarray(v0, dtype=complex)
    c = q.c[m]  # (K, N), stream u -> user m
    s = c @ np.conj(v) + q.d[m]  # v^H c + d
    s0 = np.vdot(v0, c[m]) + q.d[m, m]
    others = np.ones(q.K, dtype=bool)
    others[m] = False
    interf = (c[others] * np.conj(s[others])[:, None]).sum(axis=0)
    return 2.0 * alpha[m] * t * interf - 2.0 * c[m] * np.conj(s0)


def subgrad(q: QuadForms, v, W, t: float, v0, sigma2, alpha) -> np.ndarray:
    """Gradient of the active (lowest-index maximizing) user's ``F_up``."""
    _, m = objective_G(q, v, W, t, v0, sigma2, alpha)
    return _grad_user(q, v, t, v0, alpha, m)


def project_unit_disk(x) -> np.ndarray:
    """Entrywise Euclidean projection onto ``{|v_n| <= 1}``."""
    x = np.asarray(x, dtype=complex)
    p = x / np.maximum(np.abs(x), 1.0)
    # x / |x| can land one ulp outside the disk
    over = np.abs(p) > 1.0
    while np.any(over):
        p[over] *= np.nextafter(1.0, 0.0)
        over = np.abs(p) > 1.0
    return p


class _Majorizer:
    """All users' ``F_up`` around a fixed expansion point, precomputed.

    The iterate is carried as ``w = conj(v)`` so that every link amplitude
    ``v^H c + d`` and the linear part of the majorizer come out of a single
    matrix-vector product.  The active user's gradient is one more product
    with that user's stacked link vectors.
    """

    def __init__(self, q: QuadForms, t: float, v0, sigma2, alpha):
        K, N = q.K, q.N
        v0 = np.asarray(v0, dtype=complex)
        idx = np.arange(K)
        at = np.asarray(alpha, dtype=float) * t
        c_own = q.c[idx, idx]
        s0 = c_own @ np.conj(v0) + q.d[idx, idx]
        g0 = c_own * np.conj(s0)[:, None]  # gradient of |s0 + c^H (v - v0)|^2 at v0, halved
        noise = np.broadcast_to(np.asarray(sigma2, dtype=float), (K,))
        self.K = K
        self.const = at * noise - np.abs(s0) ** 2 + 2.0 * np.real(g0.conj() @ v0)
        self.R = np.vstack([q.c.reshape(K * K, N), g0])
        self.r0 = np.concatenate([q.d.ravel(), np.zeros(K)])
        off = ~np.eye(K, dtype=bool)
        self.Wint = np.zeros((K, K * K))
        for m in range(K):
            self.Wint[m, m * K : (m + 1) * K] = at[m] * off[m]
        # conj of the active user's links; the own link row carries -g0
        self.Cg = np.conj(q.c.copy())
        self.Cg[idx, idx] = np.conj(g0)
        self.scale = np.where(off, 2.0 * at[:, None], -2.0)

    def __call__(self, w):
        """``(max value, active user, link amplitudes)`` at ``v = conj(w)``."""
        K = self.K
        y = self.R @ w + self.r0
        S = y[: K * K]
        vals = self.Wint @ (S.real**2 + S.imag**2) + self.const - 2.0 * y[K * K :].real
        m = int(vals.argmax())
        return float(vals[m]), m, S

    def grad_conj(self, m: int, S) -> np.ndarray:
        """``conj`` of the complex gradient of the active user's ``F_up``."""
        K = self.K
        coef = self.scale[m] * S[m * K : (m + 1) * K]
        coef[m] = -2.0
        return coef @ self.Cg[m]

    def grad(self, m: int, S) -> np.ndarray:
        return np.conj(self.grad_conj(m, S))


@dataclass
class DescentResult:
    v: np.ndarray
    value: float
    start_value: float
    steps: int  # subgradient steps taken
    best_step: int  # 0 means the starting point was never beaten
    step_lengths: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.v, self.value))


def subgrad_descend(q: QuadForms, W, t: float, v0, gamma: float = GAMMA, T: int = STEPS,
                    sigma2=None, alpha=None, start=None) -> DescentResult:
    """Constant step-length subgradient projection with best-point tracking.

    ``v0`` is the expansion point of the majorizer and, unless ``start`` is
    given, also the first iterate.  The starting point is part of the
    tracked set, so the returned value never exceeds the starting value.
    Stops early on a zero subgradient.
    """
    if T < 1 or not gamma > 0:
        raise ValueError("need T >= 1 and gamma > 0")
    v0 = np.asarray(v0, dtype=complex)
    G = _Majorizer(q, t, v0, sigma2, alpha)
    wk = np.conj(v0 if start is None else np.asarray(start, dtype=complex))
    gk, m, S = G(wk)
    best_w, best, best_step = wk, gk, 0
    values, lengths = [gk], []
    steps = 0
    for k in range(1, T + 1):
        gc = G.grad_conj(m, S)
        nrm = math.sqrt(np.vdot(gc, gc).real)
        if nrm == 0.0:
            break
        lengths.append(gamma)
        x = wk - (gamma / nrm) * gc
        wk = x / np.maximum(np.abs(x), 1.0)
        gk, m, S = G(wk)
        values.append(gk)
        steps = k
        if gk < best:
            best_w, best, best_step = wk, gk, k
    return DescentResult(np.conj(best_w), best, values[0], steps, best_step, lengths, values)


def run_lowcx_ao(channels: ChannelSet, config=None, init_v=None, eps: float = 1e-3, max_iters: int = 50,
                 gamma: float = GAMMA, T: int = STEPS, reflect_hook=None) -> SolveReport:
    """Algorithm 3: the outer loop of Algorithm 2 with a subgradient reflect update."""
    cfg = channels.config if config is None else config
    alpha, sigma2 = np.asarray(cfg.alpha), np.asarray(cfg.sigma2)
    timings = []

    def transmit(a, beams, t):
        res = solve_p4_effective(a, cfg.cell, alpha, sigma2, cfg.p_max, t, beams)
        return res.beams, res.t

    def reflect(q, beams, t_star, v):
        t0 = time.perf_counter()
        out = subgrad_descend(q, beams, t_star, v, gamma, T, sigma2, alpha).v
        timings.append(time.perf_counter() - t0)
        return out

    rep = alternate(channels, cfg, transmit, reflect, "lowcx_ao", init_v, eps, max_iters,
                    stop_on_decrease=reflect_hook is not None, reflect_hook=reflect_hook)
    rep.info["reflect_times"] = timings
    return rep
