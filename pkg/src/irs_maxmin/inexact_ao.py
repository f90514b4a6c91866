"""Inexact alternating optimization (Algorithm 2).

Each outer iteration solves one SOCP that raises a common slack in every
SINR constraint at the current target (transmit update), then one convex
SCA program that majorizes the reflect-side SINR gaps (reflect update).
Both updates keep the current point feasible, so the min-weighted SINR
never decreases.

Surrogate functions take ``q`` and ``sigma2`` in any consistent power
unit; results come back in that unit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import conic
from ._embed import Normalized, clean_beams, decode_beams, gain_operator, mrt_directions, power_rows, weighted_sinr
from .conic import ProgramBuilder
from .metrics import QuadForms, TxBeams, link_powers, quad_forms, sinr_from_quad
from .model import ChannelSet, composite_channels, effective_channels
from .report import SolveReport, Termination

__all__ = [
    "P4Result",
    "P51Result",
    "p4_program",
    "solve_p4",
    "solve_p4_effective",
    "surrogate_F",
    "surrogate_F_up",
    "surrogate_all",
    "p51_program",
    "solve_p5_1",
    "alternate",
    "run_inexact_ao",
]


def _weighted(q: QuadForms, v, sigma2, alpha) -> float:
    return float(np.min(sinr_from_quad(q, v, sigma2) / np.asarray(alpha)))


def _project_disk(x: np.ndarray) -> np.ndarray:
    mag = np.abs(x)
    return np.where(mag > 1.0, x / np.where(mag > 0, mag, 1.0), x)


# ---------------------------------------------------------------------------
# transmit update


@dataclass
class P4Result:
    beams: TxBeams
    xi: float  # optimal slack, in units of the reference noise amplitude
    t: float  # min-weighted SINR of ``beams``
    fallback: bool = False

    def __iter__(self):
        return iter((self.beams, self.xi, self.t))


def p4_program(nz: Normalized, alpha, t_prev: float, ops=None) -> conic.ConicProgram:
    """Maximize ``xi`` with ``Re(a_mm^H w_m) - xi >= sqrt(alpha t) ||[interference, sigma]||``.

    Variables: the stacked beams, then ``xi``.  ``Im(a_mm^H w_m) = 0``.
    """
    K, M = nz.K, nz.M
    Gre, Gim = ops if ops is not None else gain_operator(nz.a, nz.cell)
    nb = 2 * M * K
    n = nb + 1
    alpha = np.asarray(alpha, dtype=float)
    pb = ProgramBuilder(n)
    idx = np.arange(K)
    pb.add("zero", np.hstack([Gim[idx, idx], np.zeros((K, 1))]))
    for m in range(K):
        others = np.flatnonzero(idx != m)
        r = math.sqrt(alpha[m] * t_prev)
        F = np.zeros((2 + 2 * others.size, n))
        F[0, :nb] = Gre[m, m]
        F[0, -1] = -1.0
        F[1 : 1 + others.size, :nb] = r * Gre[m, others]
        F[1 + others.size : 1 + 2 * others.size, :nb] = r * Gim[m, others]
        g = np.zeros(F.shape[0])
        g[-1] = r * math.sqrt(nz.noise[m])
        s = max(np.abs(F[:, :nb]).max(), g[-1], 1e-300)
        pb.add("soc", F / s, g / s)
    for b in range(nz.B):
        S = power_rows(nz.cell, M, b)
        F = np.zeros((1 + S.shape[0], n))
        F[1:, :nb] = S
        pb.add("soc", F, np.r_[1.0, np.zeros(S.shape[0])])
    pb.q[-1] = -1.0
    pb.meta.update(kind="p4", t=t_prev, M=M, K=K)
    return pb.build()


def solve_p4_effective(a, cell, alpha, sigma2, p_max, t_prev: float, prev: TxBeams) -> P4Result:
    """Transmit update on effective channels ``a`` (B, K, M).

    ``prev`` must achieve ``t_prev``; it is returned unchanged (``xi = 0``)
    if the solver fails or its beams would lower the objective.
    """
    alpha = np.asarray(alpha, dtype=float)
    nz = Normalized(a, cell, sigma2, p_max)
    t_old = float(np.min(weighted_sinr(a, prev, sigma2, alpha)))
    sol = conic.solve(p4_program(nz, alpha, t_prev))
    if sol.ok:
        beams = clean_beams(nz.to_beams(decode_beams(sol.x, nz.M, nz.K)), a, p_max)
        t_new = float(np.min(weighted_sinr(a, beams, sigma2, alpha)))
        if t_new >= t_old:
            return P4Result(beams, float(sol.x[-1]), t_new)
    return P4Result(prev.copy(), 0.0, t_old, fallback=True)


def solve_p4(channels: ChannelSet, composite, v, t_prev: float, alpha=None, P=None, prev: TxBeams | None = None) -> P4Result:
    """One transmit update at fixed ``v``; ``prev`` defaults to equal-split MRT."""
    cfg = channels.config
    alpha = cfg.alpha if alpha is None else alpha
    P = cfg.p_max if P is None else P
    a = effective_channels(channels, composite, v)
    if prev is None:
        prev = clean_beams(mrt_directions(a, cfg.cell, P), a, P)
    return solve_p4_effective(a, cfg.cell, alpha, cfg.sigma2, P, t_prev, prev)


# ---------------------------------------------------------------------------
# SCA surrogate


def surrogate_all(q: QuadForms, v, t: float, sigma2, alpha, v0=None) -> np.ndarray:
    """``F`` (or ``F_up`` when ``v0`` is given) of every user at ``v``."""
    alpha = np.asarray(alpha, dtype=float)
    p = link_powers(q, v)
    desired = np.diagonal(p, axis1=-2, axis2=-1)
    interf = p.sum(axis=-1) - desired
    base = alpha * t * (interf + np.asarray(sigma2))
    if v0 is None:
        return base - desired
    idx = np.arange(q.K)
    c = q.c[idx, idx]  # (K, N)
    s0 = np.einsum("n,mn->m", np.conj(v0), c) + q.d[idx, idx]
    grad = c * np.conj(s0)[:, None]  # C v0 + u
    lin = 2.0 * np.real(np.einsum("mn,...n->...m", grad.conj(), np.asarray(v) - v0))
    return base - np.abs(s0) ** 2 - lin


def surrogate_F(q: QuadForms, v, t: float, sigma2, alpha, b: int, k: int, users_per_cell=None) -> float:
    """Gap ``alpha t (interference + noise) - desired`` of user ``(b, k)``.

    Nonpositive exactly when that user's weighted SINR is at least ``t``.
    ``users_per_cell`` maps ``(b, k)`` to the linear index; without it
    ``b`` is ignored and ``k`` is the linear index.
    """
    m = k if users_per_cell is None else int(sum(users_per_cell[:b]) + k)
    return float(surrogate_all(q, v, t, sigma2, alpha)[..., m])


def surrogate_F_up(q: QuadForms, v, t: float, v0, sigma2, alpha, b: int, k: int, users_per_cell=None) -> float:
    """Convex majorizer of :func:`surrogate_F`, tight at ``v0``."""
    m = k if users_per_cell is None else int(sum(users_per_cell[:b]) + k)
    return float(surrogate_all(q, v, t, sigma2, alpha, v0)[..., m])


# ---------------------------------------------------------------------------
# reflect update


@dataclass
class P51Result:
    v: np.ndarray
    z: float  # optimal bound, in the power unit of the inputs
    t: float  # min-weighted SINR at the returned ``v``
    fallback: bool = False

    def __iter__(self):
        return iter((self.v, self.z))


def p51_program(q: QuadForms, t_star: float, v0, sigma2, alpha) -> conic.ConicProgram:
    """Minimize ``z`` subject to ``F_up_m(v) <= z`` for all users and ``|v_n| <= 1``.

    Variables: ``[Re v, Im v, z]``.  Each majorizer constraint is the
    rotated cone ``||x||^2 <= y`` written as ``||(2x, y - 1)|| <= y + 1``,
    with ``x`` the scaled interference amplitudes and ``y`` affine.
    Inputs should be normalized so that powers are O(1).
    """
    K, N = q.K, q.N
    n = 2 * N + 1
    alpha = np.asarray(alpha, dtype=float)
    sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), (K,))
    v0 = np.asarray(v0, dtype=complex)
    pb = ProgramBuilder(n)
    idx = np.arange(K)
    for m in range(K):
        at = alpha[m] * t_star
        r = math.sqrt(at)
        c0 = q.c[m, m]
        s0 = np.vdot(v0, c0) + q.d[m, m]
        g = c0 * np.conj(s0)
        # y = z - at sigma^2 + |s0|^2 + 2 Re(g^H (v - v0))
        y_row = np.r_[2.0 * g.real, 2.0 * g.imag, 1.0]
        y_const = -at * sigma2[m] + abs(s0) ** 2 - 2.0 * np.real(np.vdot(g, v0))
        others = np.flatnonzero(idx != m)
        # s_mu = v^H c + d: Re = Re c . Re v + Im c . Im v + Re d, Im = Im c . Re v - Re c . Im v + Im d
        cc = q.c[m, others]
        dd = q.d[m, others]
        X_re = np.hstack([cc.real, cc.imag, np.zeros((others.size, 1))])
        X_im = np.hstack([cc.imag, -cc.real, np.zeros((others.size, 1))])
        F = np.vstack([y_row, y_row, 2.0 * r * X_re, 2.0 * r * X_im])
        gvec = np.r_[y_const + 1.0, y_const - 1.0, 2.0 * r * dd.real, 2.0 * r * dd.imag]
        scale = max(np.abs(F).max(), np.abs(gvec).max(), 1e-300)
        pb.add("soc", F / scale, gvec / scale)
    for nidx in range(N):
        F = np.zeros((3, n))
        F[1, nidx] = 1.0
        F[2, N + nidx] = 1.0
        pb.add("soc", F, [1.0, 0.0, 0.0])
    pb.q[-1] = 1.0
    pb.meta.update(kind="p5.1", t=t_star, N=N, K=K)
    return pb.build()


def solve_p5_1(q: QuadForms, W, t_star: float, v0, sigma2, alpha) -> P51Result:
    """SCA reflect update around ``v0`` for the beams behind ``q``.

    ``W`` is accepted for interface symmetry; ``q`` already encodes it.
    Returns ``v0`` (``z = 0``) when the solver fails or its point would
    lower the objective.
    """
    sigma2 = np.asarray(sigma2, dtype=float)
    v0 = np.asarray(v0, dtype=complex)
    ref = float(np.min(sigma2))
    qn = q.scaled(1.0 / math.sqrt(ref))
    t_old = _weighted(q, v0, sigma2, alpha)
    sol = conic.solve(p51_program(qn, t_star, v0, sigma2 / ref, alpha))
    if sol.ok:
        N = q.N
        v = _project_disk(sol.x[:N] + 1j * sol.x[N : 2 * N])
        t_new = _weighted(q, v, sigma2, alpha)
        if t_new >= t_old:
            return P51Result(v, float(sol.x[-1]) * ref, t_new)
    return P51Result(v0.copy(), 0.0, t_old, fallback=True)


# ---------------------------------------------------------------------------
# outer loop shared by the SCA-type algorithms and the closed-form benchmarks


def alternate(channels: ChannelSet, config, transmit_step, reflect_step, algorithm: str, init_v=None,
              eps: float = 1e-3, max_iters: int = 50, stop_on_decrease: bool = False,
              reflect_hook=None) -> SolveReport:
    """Alternate transmit and reflect updates from equal-split MRT and ``v = 1``.

    ``transmit_step(a, beams, t) -> (beams, t)`` acts on effective channels.
    ``reflect_step(q, beams, t, v) -> v`` acts on the quadratic forms of the
    current beams.  ``reflect_hook(v) -> v`` post-processes each reflect
    update.  The run stops when one iteration improves the objective by
    less than ``eps`` (relative), on a decrease when ``stop_on_decrease``,
    or after ``max_iters``.  The best iterate seen is returned.
    """
    cfg = channels.config if config is None else config
    start = time.perf_counter()
    comp = composite_channels(channels)
    alpha, sigma2 = np.asarray(cfg.alpha), np.asarray(cfg.sigma2)
    v = np.ones(cfg.N, dtype=complex) if init_v is None else np.asarray(init_v, dtype=complex)
    a = effective_channels(channels, comp, v)
    beams = clean_beams(mrt_directions(a, cfg.cell, cfg.p_max), a, cfg.p_max)
    t = float(np.min(weighted_sinr(a, beams, sigma2, alpha)))
    trace, half = [t], [("init", t)]
    best = (t, beams.copy(), v.copy())
    termination = Termination.MAX_ITERS
    it = 0
    for it in range(1, max_iters + 1):
        t_prev = t
        beams, t_star = transmit_step(a, beams, t)
        half.append(("transmit", t_star))
        q = quad_forms(comp, channels, beams)
        v = reflect_step(q, beams, t_star, v)
        if reflect_hook is not None:
            v = reflect_hook(v)
        a = effective_channels(channels, comp, v)
        t = float(np.min(weighted_sinr(a, beams, sigma2, alpha)))
        half.append(("reflect", t))
        trace.append(t)
        if t > best[0]:
            best = (t, beams.copy(), v.copy())
        if stop_on_decrease and t < t_prev:
            termination = Termination.OBJECTIVE_DECREASED
            break
        if t - t_prev < eps * t_prev:
            termination = Termination.CONVERGED
            break
    t_best, W_best, v_best = best
    return SolveReport(
        algorithm=algorithm,
        trace=trace,
        beams=W_best,
        v=v_best,
        objective=t_best,
        termination=termination,
        iterations=it,
        wall_time=time.perf_counter() - start,
        p_max=cfg.p_max,
        half_trace=half,
    )


def run_inexact_ao(channels: ChannelSet, config=None, init_v=None, eps: float = 1e-3, max_iters: int = 50,
                   reflect_hook=None) -> SolveReport:
    """Algorithm 2: one (P4)-type SOCP and one SCA program per iteration."""
    cfg = channels.config if config is None else config
    alpha, sigma2 = np.asarray(cfg.alpha), np.asarray(cfg.sigma2)

    def transmit(a, beams, t):
        res = solve_p4_effective(a, cfg.cell, alpha, sigma2, cfg.p_max, t, beams)
        return res.beams, res.t

    def reflect(q, beams, t_star, v):
        return solve_p5_1(q, beams, t_star, v, sigma2, alpha).v

    return alternate(channels, cfg, transmit, reflect, "inexact_ao", init_v, eps, max_iters,
                     stop_on_decrease=reflect_hook is not None, reflect_hook=reflect_hook)
