"""Exact alternating optimization (Algorithm 1).

The transmit step solves the max-min problem for fixed ``v`` by bisection
over ``t``, each probe being a feasibility SOCP.  The reflective step
solves the semidefinite relaxation of the fixed-beam problem, again by
bisection, and recovers a rank-one ``v`` either from the principal
eigenvector or by Gaussian randomization.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import conic
from ._embed import (
    Normalized,
    clean_beams,
    decode_beams,
    gain_operator,
    mrt_directions,
    power_rows,
    weighted_sinr,
)
from .conic import ProgramBuilder, Status
from .metrics import (
    LiftedForms,
    QuadForms,
    TxBeams,
    lift_matrices,
    link_powers,
    quad_forms,
    sinr_from_quad,
)
from .model import ChannelSet, CompositeChannels, composite_channels, effective_channels
from .report import SolveReport, SolverFailure, Termination

__all__ = [
    "BisectionResult",
    "TxbfResult",
    "SdrSolution",
    "ReflectResult",
    "bisect",
    "user_index_map",
    "txbf_probe_program",
    "solve_txbf",
    "solve_txbf_effective",
    "sdr_margin_primal",
    "sdr_margin_dual",
    "sdr_margin",
    "solve_reflect_sdr",
    "randomization_candidates",
    "gaussian_randomize",
    "run_exact_ao",
]

RANK_ONE_RATIO = 1e-6


# ---------------------------------------------------------------------------
# bisection driver


@dataclass
class BisectionResult:
    lo: float
    hi: float
    payload: object
    probes: list  # (t, feasible) in execution order


def bisect(probe, lo: float, hi: float, tol_rel: float, payload=None) -> BisectionResult:
    """Shrink ``[lo, hi]`` until ``hi - lo <= tol_rel * hi``.

    ``probe(t)`` returns ``(Status, payload, attained)``.  ``lo`` must be
    known feasible (with ``payload`` its witness, possibly None) and ``hi``
    known infeasible or an analytic upper bound.

    ``attained`` is the level certified by ``payload`` (None if there is
    no payload).  A witness can come back even from an infeasible probe,
    and it raises ``lo`` whenever it beats it.  After such a jump the next
    probe sits just above the new ``lo``, which closes the bracket at once
    when the witness is near-optimal.  Otherwise the split is the
    geometric midpoint (arithmetic while ``lo == 0``).

    A probe that fails numerically is retried once halfway towards ``lo``.
    A second failure raises SolverFailure.
    """
    if tol_rel <= 0:
        raise ValueError("tol_rel must be positive")
    probes = []
    lo, hi = float(lo), float(hi)
    if hi < lo:
        hi = lo
    jumped = False
    while hi - lo > tol_rel * hi:
        if jumped and lo > 0 and lo * (1.0 + 0.5 * tol_rel) < hi:
            t = lo * (1.0 + 0.5 * tol_rel)
        else:
            t = math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
        status, data, attained = probe(t)
        if status is Status.NUMERICAL_FAILURE:
            t = 0.5 * (lo + t)
            status, data, attained = probe(t)
            if status is Status.NUMERICAL_FAILURE:
                probes.append((t, None))
                raise SolverFailure(f"bisection probe failed twice near t={t:.6g}",
                                    BisectionResult(lo, hi, payload, probes))
        feasible = status is Status.OPTIMAL
        probes.append((t, feasible))
        jumped = False
        if feasible:
            lo, payload = t, data
        else:
            hi = t
        if attained is not None and attained > lo:
            lo, payload = min(attained, hi), data
            jumped = True
    return BisectionResult(lo, hi, payload, probes)


# ---------------------------------------------------------------------------
# transmit beamforming by bisection over feasibility SOCPs


def user_index_map(users_per_cell) -> dict:
    """``(b, k) -> m`` with ``m = K_0 + ... + K_{b-1} + k`` (0-based)."""
    out, m = {}, 0
    for b, kb in enumerate(users_per_cell):
        for k in range(kb):
            out[(b, k)] = m
            m += 1
    return out


@dataclass
class TxbfResult:
    beams: TxBeams
    t: float  # achieved min-weighted SINR of ``beams``
    t_lo: float
    t_hi: float
    probes: list

    def __iter__(self):
        # allows ``beams, t = solve_txbf(...)``
        return iter((self.beams, self.t))


def txbf_probe_program(nz: Normalized, alpha, t: float, ops=None, maximize_margin: bool = True) -> conic.ConicProgram:
    """SOCP probe for "all weighted SINRs >= t" under the rotation convention.

    With ``maximize_margin`` the program maximizes a common slack ``xi`` in
    every SINR cone (last variable).  The beams are bounded, so it always
    has an optimum, and level ``t`` is feasible exactly when ``xi* >= 0``.
    Without it the program is the plain feasibility form.
    """
    K, M = nz.K, nz.M
    Gre, Gim = ops if ops is not None else gain_operator(nz.a, nz.cell)
    nb = 2 * M * K
    n = nb + (1 if maximize_margin else 0)

    def widen(F):
        return np.hstack([F, np.zeros((F.shape[0], n - nb))])

    pb = ProgramBuilder(n)
    idx = np.arange(K)
    # Im(a_mm^H w_m) = 0
    pb.add("zero", widen(Gim[idx, idx]))
    for m in range(K):
        scale = math.sqrt(1.0 + 1.0 / (alpha[m] * t))
        F = widen(np.vstack([scale * Gre[m, m], Gre[m], Gim[m], np.zeros((1, nb))]))
        g = np.zeros(F.shape[0])
        g[-1] = math.sqrt(nz.noise[m])
        if maximize_margin:
            F[0, -1] = -1.0
        s = max(np.abs(F[:, :nb]).max(), g[-1])
        pb.add("soc", F / s, g / s)
    for b in range(nz.B):
        S = power_rows(nz.cell, M, b)
        pb.add("soc", widen(np.vstack([np.zeros((1, nb)), S])), np.r_[1.0, np.zeros(S.shape[0])])
    if maximize_margin:
        pb.q[-1] = -1.0
    pb.meta.update(kind="txbf-probe", t=t, M=M, K=K)
    return pb.build()


def solve_txbf_effective(a, cell, alpha, sigma2, p_max, tol_rel=1e-3, init: TxBeams | None = None) -> TxbfResult:
    """Bisection transmit design for given effective channels ``a`` (B, K, M)."""
    alpha = np.asarray(alpha, dtype=float)
    nz = Normalized(a, cell, sigma2, p_max)
    ops = gain_operator(nz.a, nz.cell)

    incumbent = init if init is not None else mrt_directions(a, cell, p_max)
    incumbent = clean_beams(incumbent, a, p_max)
    lo = float(np.min(weighted_sinr(a, incumbent, sigma2, alpha)))
    # interference-free MRT bound, valid for every feasible beam set
    own = np.linalg.norm(nz.a[nz.cell, np.arange(nz.K)], axis=-1) ** 2
    hi = float(np.min(own / (alpha * nz.noise)))
    hi = max(hi, lo)

    def probe(t):
        sol = conic.solve(txbf_probe_program(nz, alpha, t, ops))
        if not sol.ok:
            return sol.status, None, None
        beams = clean_beams(nz.to_beams(decode_beams(sol.x, nz.M, nz.K)), a, p_max)
        attained = float(np.min(weighted_sinr(a, beams, sigma2, alpha)))
        return (Status.OPTIMAL if -sol.objective >= 0.0 else Status.INFEASIBLE), beams, attained

    res = bisect(probe, lo, hi, tol_rel, payload=incumbent)
    beams = res.payload
    t_beams = float(np.min(weighted_sinr(a, beams, sigma2, alpha)))
    if t_beams < lo:
        # solver tolerance cost more than the bracket gained
        beams, t_beams = incumbent, lo
    return TxbfResult(beams, t_beams, res.lo, res.hi, res.probes)


def solve_txbf(channels: ChannelSet, composite: CompositeChannels, v, alpha=None, P=None,
               tol_rel: float = 1e-3, init: TxBeams | None = None) -> TxbfResult:
    """Optimal coordinated transmit beams for a fixed reflect vector ``v``.

    Returns a :class:`TxbfResult`; it unpacks as ``(beams, t)`` where ``t``
    is the min-weighted SINR actually achieved by ``beams``.  ``init``
    (beams feasible for the power budgets) seeds the lower bracket end.
    """
    cfg = channels.config
    alpha = cfg.alpha if alpha is None else alpha
    P = cfg.p_max if P is None else P
    a = effective_channels(channels, composite, v)
    return solve_txbf_effective(a, cfg.cell, alpha, cfg.sigma2, P, tol_rel, init)


# ---------------------------------------------------------------------------
# reflective beamforming by semidefinite relaxation


@lru_cache(maxsize=16)
def _hermitian_embedding(L: int):
    """Index maps for a Hermitian L x L variable and its real 2L x 2L PSD image.

    Variables: Re V[i, j] (i <= j) followed by Im V[i, j] (i < j).
    Returns ``(re_idx, im_idx, Mpsd)`` with ``svec(X) = Mpsd @ x``.
    """
    iu, ju = np.triu_indices(L)
    re_idx = -np.ones((L, L), dtype=int)
    re_idx[iu, ju] = np.arange(iu.size)
    re_idx[ju, iu] = re_idx[iu, ju]
    iu1, ju1 = np.triu_indices(L, 1)
    im_idx = -np.ones((L, L), dtype=int)
    im_idx[iu1, ju1] = iu.size + np.arange(iu1.size)
    nvar = iu.size + iu1.size

    n2 = 2 * L
    rows, cols, vals = [], [], []
    for c in range(n2):
        for r in range(c + 1):
            row = conic.svec_index(r, c)
            scale = 1.0 if r == c else math.sqrt(2.0)
            if (r < L) == (c < L):
                i, j = r % L, c % L
                rows.append(row)
                cols.append(re_idx[i, j])
                vals.append(scale)
            else:
                # top-right block holds -Im V[i, j]
                i, j = r, c - L
                if i < j:
                    rows.append(row)
                    cols.append(im_idx[i, j])
                    vals.append(-scale)
                elif i > j:
                    rows.append(row)
                    cols.append(im_idx[j, i])
                    vals.append(scale)
    Mpsd = sp.csr_matrix((vals, (rows, cols)), shape=(n2 * (n2 + 1) // 2, nvar))
    return re_idx, im_idx, Mpsd


def _trace_rows(R: np.ndarray, L: int) -> np.ndarray:
    """Rows ``r`` with ``Tr(R_k V) = r_k @ x`` for Hermitian ``R`` of shape (..., L, L)."""
    re_idx, im_idx, Mpsd = _hermitian_embedding(L)
    nvar = Mpsd.shape[1]
    out = np.zeros(R.shape[:-2] + (nvar,))
    iu, ju = np.triu_indices(L)
    w = np.where(iu == ju, 1.0, 2.0)
    out[..., re_idx[iu, ju]] = R[..., iu, ju].real * w
    iu1, ju1 = np.triu_indices(L, 1)
    out[..., im_idx[iu1, ju1]] = 2.0 * R[..., iu1, ju1].imag
    return out


def _decode_hermitian(x: np.ndarray, L: int) -> np.ndarray:
    re_idx, im_idx, _ = _hermitian_embedding(L)
    V = x[re_idx].astype(complex)
    iu1, ju1 = np.triu_indices(L, 1)
    im = x[im_idx[iu1, ju1]]
    V[iu1, ju1] += 1j * im
    V[ju1, iu1] -= 1j * im
    return V


class _SdrData:
    """Per-user signal and interference data for the relaxed reflect problem.

    Powers are measured relative to the smallest noise power so the
    programs are well scaled.
    """

    def __init__(self, lifted: LiftedForms, sigma2, alpha):
        K = lifted.d.shape[0]
        L = lifted.R.shape[-1]
        sigma2 = np.asarray(sigma2, dtype=float)
        self.scale = 1.0 / sigma2.min()
        self.L, self.N, self.K = L, L - 1, K
        self.alpha = np.asarray(alpha, dtype=float)
        self.noise = sigma2 * self.scale
        R = lifted.R * self.scale
        d2 = np.abs(lifted.d) ** 2 * self.scale
        idx = np.arange(K)
        off = ~np.eye(K, dtype=bool)
        self.R_sig = R[idx, idx]
        self.R_int = np.einsum("mu,mu...->m...", off.astype(float), R)
        self.sig_const = d2[idx, idx]
        self.int_const = (d2 * off).sum(axis=1)
        self.nvar = _hermitian_embedding(L)[2].shape[1]

    def margins(self, t: float, den_ref=None):
        """Margin matrices and constants, scaled per user.

        ``Tr(F[m] V) + g[m] >= 0`` iff the relaxed weighted SINR of user
        ``m`` at ``V`` is at least ``t``.  With ``den_ref`` (the weighted
        interference-plus-noise of each user at a reference point) user
        ``m``'s margin is divided by ``den_ref[m]``, so it reads as an SINR
        gap near that point; otherwise each user's pair is equilibrated on
        its own.  A final common factor brings the largest entry to 1.
        """
        at = self.alpha * t
        F = self.R_sig - at[:, None, None] * self.R_int
        g = self.sig_const - at * (self.int_const + self.noise)
        if den_ref is None:
            scale = np.maximum(np.abs(F).reshape(self.K, -1).max(axis=1), np.abs(g))
            scale = np.where(scale > 0, scale, 1.0)
        else:
            scale = np.asarray(den_ref, dtype=float)
        F, g = F / scale[:, None, None], g / scale
        top = max(float(np.abs(F).max()), float(np.abs(g).max()))
        top = top if top > 0 else 1.0
        return F / top, g / top

    def weighted_den(self, V: np.ndarray) -> np.ndarray:
        den = np.einsum("mij,ji->m", self.R_int, V).real + self.int_const + self.noise
        return self.alpha * den

    def relaxed_value(self, V: np.ndarray) -> float:
        num = np.einsum("mij,ji->m", self.R_sig, V).real + self.sig_const
        den = np.einsum("mij,ji->m", self.R_int, V).real + self.int_const + self.noise
        return float(np.min(num / (self.alpha * den)))


def _hermitian_params(H: np.ndarray) -> np.ndarray:
    """Coordinates of Hermitian ``H`` (..., L, L) in the embedding's variable order."""
    L = H.shape[-1]
    iu, ju = np.triu_indices(L)
    iu1, ju1 = np.triu_indices(L, 1)
    return np.concatenate([H[..., iu, ju].real, H[..., iu1, ju1].imag], axis=-1)


def sdr_margin_primal(data: _SdrData, t: float, den_ref=None) -> conic.ConicProgram:
    """Largest common margin at level ``t`` over the relaxed set, primal form.

    Variables are the Hermitian ``V`` coordinates followed by the margin
    ``tau``; the objective is ``-tau``.  The set is bounded (``diag V <= 1``)
    so the program always has an optimum, and ``t`` is achievable by the
    relaxation iff ``tau* >= 0``.
    """
    L, N = data.L, data.N
    re_idx, _, Mpsd = _hermitian_embedding(L)
    nvar = data.nvar
    n = nvar + 1

    def pad(F):
        return sp.hstack([sp.csr_matrix(F), sp.csr_matrix((F.shape[0], 1))])

    pb = ProgramBuilder(n)
    E = sp.csr_matrix((np.ones(1), ([0], [re_idx[N, N]])), shape=(1, nvar))
    pb.add("zero", pad(E), [-1.0])
    D = sp.csr_matrix((-np.ones(N), (np.arange(N), re_idx[np.arange(N), np.arange(N)])), shape=(N, nvar))
    pb.add("nonneg", pad(D), np.ones(N))
    F, g = data.margins(t, den_ref)
    rows = _trace_rows(F, L)
    pb.add("nonneg", np.hstack([rows, -np.ones((data.K, 1))]), g)
    pb.add("psd", pad(Mpsd), np.zeros(Mpsd.shape[0]), dim=2 * L)
    pb.q[-1] = -1.0
    pb.meta.update(kind="sdr-margin-primal", t=t, L=L)
    return pb.build()


def sdr_margin_dual(data: _SdrData, t: float, den_ref=None) -> conic.ConicProgram:
    """Lagrange dual of :func:`sdr_margin_primal`; optimal value ``tau*``.

    Variables ``y = (lam (K), mu (N), nu)``::

        minimize    g' lam + sum(mu) + nu
        subject to  sum(lam) = 1,  lam >= 0,  mu >= 0,
                    diag(mu, nu) - sum_m lam_m F_m  PSD.

    Only K + N + 1 variables, which suits a Schur-complement solver.  The
    multiplier of the PSD block is the relaxed ``V`` (see ``_v_from_dual``).
    """
    K, L, N = data.K, data.L, data.N
    _, _, Mpsd = _hermitian_embedding(L)
    n = K + N + 1
    F, g = data.margins(t, den_ref)
    pb = ProgramBuilder(n)
    row = np.zeros((1, n))
    row[0, :K] = -1.0
    pb.add("zero", row, [1.0])
    sel = np.zeros((K + N, n))
    sel[np.arange(K + N), np.arange(K + N)] = 1.0
    pb.add("nonneg", sel)
    E = np.zeros((L, L, L))
    E[np.arange(L), np.arange(L), np.arange(L)] = 1.0
    cols = np.vstack([-_hermitian_params(F), _hermitian_params(E)]).T  # (nvar, n)
    pb.add("psd", Mpsd @ cols, dim=2 * L)
    pb.q[:] = np.r_[g, np.ones(N + 1)]
    pb.meta.update(kind="sdr-margin-dual", t=t, L=L)
    return pb.build()


def _v_from_dual(z_psd: np.ndarray, L: int) -> np.ndarray:
    Z = conic.smat(z_psd, 2 * L)
    return (Z[:L, :L] + Z[L:, L:]) + 1j * (Z[L:, :L] - Z[:L, L:])


def _repair(V: np.ndarray) -> np.ndarray:
    """Exactly feasible relaxed point next to a solver output.

    Clips negative eigenvalues, fixes the corner entry to 1 and rescales any
    diagonal entry above 1; each step keeps V PSD.
    """
    V = 0.5 * (V + V.conj().T)
    w, U = np.linalg.eigh(V)
    if w[0] < 0:
        V = (U * np.clip(w, 0.0, None)) @ U.conj().T
    if V[-1, -1].real > 0:
        V = V / V[-1, -1].real
    d = np.sqrt(np.maximum(np.diag(V).real, 1.0))
    d[-1] = 1.0
    V = V / np.outer(d, d)
    V[-1, -1] = 1.0
    return V


def sdr_margin(data: _SdrData, t: float, backend: str = "native", den_ref=None):
    """Solve the max-margin program at ``t``; returns ``(status, tau*, V)``.

    ``V`` is repaired to exact feasibility.  The native and cvxopt backends
    work on the dual form, clarabel on the primal; when the requested
    backend fails the others are tried in turn.
    """
    order = [backend] + [b for b in ("native", "cvxopt", "clarabel") if b != backend]
    sol = None
    for be in order:
        if be != "clarabel":
            prog = sdr_margin_dual(data, t, den_ref)
            sol = conic.solve(prog, backend=be)
            if sol.ok and sol.z is not None:
                sl = list(prog.blocks())[-1][2]
                return Status.OPTIMAL, sol.objective, _repair(_v_from_dual(sol.z[sl], data.L))
        else:
            sol = conic.solve(sdr_margin_primal(data, t, den_ref), backend="clarabel")
            if sol.ok:
                return Status.OPTIMAL, -sol.objective, _repair(_decode_hermitian(sol.x[: data.nvar], data.L))
    return sol.status, math.nan, None


@dataclass
class SdrSolution:
    V: np.ndarray
    t_relaxed: float  # certified upper bound on the relaxed optimum
    t_lower: float  # relaxed objective attained by V
    rank_estimate: int
    eigenvalues: np.ndarray
    probes: list = field(default_factory=list)


@dataclass
class ReflectResult:
    v: np.ndarray
    t: float
    sdr: SdrSolution
    degraded: bool
    source: str  # "eigenvector", "randomization" or "incumbent"

    def __iter__(self):
        return iter((self.v, self.t, self.sdr))


def _project_disk(x: np.ndarray) -> np.ndarray:
    mag = np.abs(x)
    return np.where(mag > 1.0, x / np.where(mag > 0, mag, 1.0), x)


def randomization_candidates(V: np.ndarray, num_draws: int, rng) -> np.ndarray:
    """Unit-modulus candidates ``exp(j arg(vt_n / vt_{N+1}))`` from ``V``.

    Draws with a zero last entry are discarded, so fewer than ``num_draws``
    rows may come back.
    """
    rng = np.random.default_rng(rng)
    lam, U = np.linalg.eigh(V)
    root = U * np.sqrt(np.clip(lam, 0.0, None))[None, :]
    L = V.shape[0]
    r = (rng.standard_normal((num_draws, L)) + 1j * rng.standard_normal((num_draws, L))) / math.sqrt(2.0)
    vt = r @ root.T
    last = vt[:, -1]
    keep = np.abs(last) > 0
    ratio = vt[keep, :-1] / last[keep, None]
    return np.exp(1j * np.angle(ratio))


def gaussian_randomize(V: np.ndarray, num_draws: int, rng, q: QuadForms, sigma2, alpha,
                       chunk: int = 2000):
    """Best randomized candidate by min-weighted SINR; returns ``(v, t)``.

    ``(None, -inf)`` when every draw had to be discarded.
    """
    rng = np.random.default_rng(rng)
    alpha = np.asarray(alpha, dtype=float)
    best_v, best_t = None, -math.inf
    done = 0
    while done < num_draws:
        n = min(chunk, num_draws - done)
        cand = randomization_candidates(V, n, rng)
        done += n
        if cand.shape[0] == 0:
            continue
        vals = np.min(sinr_from_quad(q, cand, sigma2) / alpha, axis=-1)
        i = int(np.argmax(vals))
        if vals[i] > best_t:
            best_v, best_t = cand[i].copy(), float(vals[i])
    return best_v, best_t


def _value(q: QuadForms, v, sigma2, alpha) -> float:
    return float(np.min(sinr_from_quad(q, v, sigma2) / np.asarray(alpha)))


def solve_reflect_sdr(q: QuadForms, lifted: LiftedForms | None, alpha, sigma2, tol_rel: float = 1e-3,
                      num_rand: int = 1000, rng=None, incumbent=None, backend: str = "native") -> ReflectResult:
    """Reflective step of Algorithm 1 for fixed beams (through ``q``).

    ``incumbent`` is the current reflect vector (zeros if omitted); it sets
    the lower bracket end and is returned, flagged ``degraded``, when no
    rank-one recovery beats it.
    """
    rng = np.random.default_rng(rng)
    alpha = np.asarray(alpha, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    lifted = lift_matrices(q) if lifted is None else lifted
    N = q.N
    incumbent = np.zeros(N, dtype=complex) if incumbent is None else np.asarray(incumbent, dtype=complex)
    t_inc = _value(q, incumbent, sigma2, alpha)
    data = _SdrData(lifted, sigma2, alpha)

    idx = np.arange(q.K)
    own_amp = np.abs(q.d[idx, idx]) + np.abs(q.c[idx, idx]).sum(axis=-1)
    hi = float(np.min(own_amp**2 / (alpha * sigma2)))
    hi = max(hi, t_inc)

    vb = np.append(incumbent, 1.0)
    ref = {"t": t_inc, "den": data.weighted_den(np.outer(vb, vb.conj()))}

    def probe(t):
        # the max-margin program is always feasible and bounded, so level t
        # is achievable exactly when the optimal margin is nonnegative.
        # Margins are weighted at the best relaxed point so far, which makes
        # the attained value of each probe climb quickly towards the optimum.
        status, tau, V = sdr_margin(data, t, backend, ref["den"])
        if status is not Status.OPTIMAL:
            return status, None, None
        attained = data.relaxed_value(V)
        if attained > ref["t"]:
            ref["t"], ref["den"] = attained, data.weighted_den(V)
        return (Status.OPTIMAL if tau >= 0.0 else Status.INFEASIBLE), V, attained

    res = bisect(probe, t_inc, hi, tol_rel)
    if res.payload is not None:
        V = res.payload
    else:
        vb = np.append(incumbent, 1.0)
        V = np.outer(vb, vb.conj())
    t_lower = data.relaxed_value(V)
    lam = np.linalg.eigvalsh(V)[::-1]
    lam_c = np.clip(lam, 0.0, None)
    rank = int(np.sum(lam_c > RANK_ONE_RATIO * lam_c[0])) if lam_c[0] > 0 else 0
    sdr = SdrSolution(V, max(res.hi, t_lower), t_lower, rank, lam, res.probes)

    cand, t_cand, source = None, -math.inf, "randomization"
    if rank <= 1:
        w, U = np.linalg.eigh(V)
        vb = math.sqrt(max(w[-1], 0.0)) * U[:, -1]
        if abs(vb[-1]) > 1e-12:
            cand = _project_disk(vb[:-1] / vb[-1])
            t_cand = _value(q, cand, sigma2, alpha)
            source = "eigenvector"
    if cand is None:
        cand, t_cand = gaussian_randomize(V, num_rand, rng, q, sigma2, alpha)
    if cand is None or t_cand < t_inc:
        return ReflectResult(incumbent.copy(), t_inc, sdr, True, "incumbent")
    return ReflectResult(cand, t_cand, sdr, False, source)


# ---------------------------------------------------------------------------
# Algorithm 1


def _initial_v(N: int, random_init: bool, rng) -> np.ndarray:
    if random_init:
        return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, N))
    return np.ones(N, dtype=complex)


def run_exact_ao(channels: ChannelSet, config=None, init_v=None, eps: float = 1e-3, max_iters: int = 30,
                 num_rand: int = 1000, rng=None, tol_rel: float = 1e-3, random_init: bool = False,
                 reflect_hook=None) -> SolveReport:
    """Exact alternating optimization.

    Stops when the relative improvement of one outer iteration is below
    ``eps``, when the objective decreases (or the randomization could not
    beat the incumbent), or after ``max_iters``.  The best iterate seen is
    returned.  ``reflect_hook(v) -> v`` post-processes every reflect update.
    """
    cfg = channels.config if config is None else config
    rng = np.random.default_rng(rng)
    start = time.perf_counter()
    comp = composite_channels(channels)
    alpha, sigma2 = np.asarray(cfg.alpha), np.asarray(cfg.sigma2)
    v = _initial_v(cfg.N, random_init, rng) if init_v is None else np.asarray(init_v, dtype=complex)

    trace, half = [], []
    best = None  # (t, beams, v)
    beams = None
    termination = Termination.MAX_ITERS
    info = {"degraded_steps": 0, "sdr_rank": []}
    t_prev = None
    it = 0
    try:
        for it in range(1, max_iters + 1):
            a = effective_channels(channels, comp, v)
            tx = solve_txbf_effective(a, cfg.cell, alpha, sigma2, cfg.p_max, tol_rel, init=beams)
            beams = tx.beams
            half.append(("transmit", tx.t))
            if best is None or tx.t > best[0]:
                best = (tx.t, beams.copy(), v.copy())
            if t_prev is None:
                t_prev = tx.t

            q = quad_forms(comp, channels, beams)
            refl = solve_reflect_sdr(q, None, alpha, sigma2, tol_rel, num_rand, rng, incumbent=v)
            info["sdr_rank"].append(refl.sdr.rank_estimate)
            v_new = refl.v if reflect_hook is None else reflect_hook(refl.v)
            t_new = _value(q, v_new, sigma2, alpha)
            v = v_new
            half.append(("reflect", t_new))
            trace.append(t_new)
            if t_new > best[0]:
                best = (t_new, beams.copy(), v.copy())
            if refl.degraded:
                info["degraded_steps"] += 1
            if refl.degraded or t_new < t_prev:
                termination = Termination.OBJECTIVE_DECREASED
                break
            if t_new - t_prev < eps * t_prev:
                termination = Termination.CONVERGED
                break
            t_prev = t_new
    except SolverFailure as exc:
        termination = Termination.SOLVER_FAILURE
        info["error"] = str(exc)
        if best is None:
            a = effective_channels(channels, comp, v)
            fb = clean_beams(mrt_directions(a, cfg.cell, cfg.p_max), a, cfg.p_max)
            best = (float(np.min(weighted_sinr(a, fb, sigma2, alpha))), fb, v.copy())
    if not trace:
        trace.append(best[0])
    t_best, W_best, v_best = best
    return SolveReport(
        algorithm="exact_ao",
        trace=trace,
        beams=W_best,
        v=v_best,
        objective=t_best,
        termination=termination,
        iterations=it,
        wall_time=time.perf_counter() - start,
        p_max=cfg.p_max,
        half_trace=half,
        info=info,
    )
