"""Benchmark schemes and the unit-amplitude wrapper.

Besides the proposed algorithms, four reference designs are provided:
alternating SCA reflect updates with closed-form MRT or ZF beams, a random
unit-modulus reflect vector followed by optimal beams, and the same
optimal beams without any IRS.  Every scheme is dispatched through
:func:`run_scheme`, which always returns a :class:`SolveReport`.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np

from ._embed import clean_beams, mrt_directions, weighted_sinr
from .exact_ao import run_exact_ao, solve_txbf_effective
from .inexact_ao import alternate, run_inexact_ao, solve_p5_1
from .lowcx_ao import run_lowcx_ao
from .metrics import TxBeams
from .model import ChannelSet, composite_channels, effective_channels
from .report import SolveReport, Termination

__all__ = [
    "Scheme",
    "UnitAmplitude",
    "SchemeInapplicable",
    "mrt_beams",
    "zf_beams",
    "random_reflect",
    "no_irs_solve",
    "unit_amplitude_project",
    "parse_scheme",
    "scheme_name",
    "run_scheme",
]

ZERO_GAIN_RTOL = 1e-8


class SchemeInapplicable(ValueError):
    """The scheme's preconditions do not hold for this system."""


class Scheme(str, enum.Enum):
    EXACT_AO = "exact_ao"
    INEXACT_AO = "inexact_ao"
    LOWCX_AO = "lowcx_ao"
    AO_MRT = "ao_mrt"
    AO_ZF = "ao_zf"
    RANDOM_REFLECT = "random_reflect"
    NO_IRS = "no_irs"


@dataclass(frozen=True)
class UnitAmplitude:
    """Run ``inner`` with every reflect update projected to unit modulus."""

    inner: Scheme

    def __post_init__(self):
        object.__setattr__(self, "inner", Scheme(self.inner))


def scheme_name(scheme) -> str:
    if isinstance(scheme, UnitAmplitude):
        return f"unit_amplitude({scheme.inner.value})"
    return Scheme(scheme).value


def parse_scheme(name):
    """Inverse of :func:`scheme_name`; accepts ``Scheme`` or ``UnitAmplitude`` as is."""
    if isinstance(name, (Scheme, UnitAmplitude)):
        return name
    s = str(name).strip().lower()
    if s.startswith("unit_amplitude(") and s.endswith(")"):
        return UnitAmplitude(Scheme(s[len("unit_amplitude(") : -1]))
    return Scheme(s)


# ---------------------------------------------------------------------------
# closed-form beams


def mrt_beams(a: np.ndarray, cell, P, return_flags: bool = False):
    """MRT beams on effective channels ``a`` (B, K, M) at full power.

    Each BS splits its budget equally over its users.  Users whose own
    channel is zero get a zero beam and are flagged.
    """
    cell = np.asarray(cell, dtype=int)
    beams = mrt_directions(a, cell, P)
    own = np.linalg.norm(a[cell, np.arange(cell.size)], axis=-1)
    flags = own == 0
    return (beams, flags) if return_flags else beams


def zf_beams(a: np.ndarray, cell, P, return_flags: bool = False):
    """Zero-forcing beams, one user per cell, each at the full BS budget.

    BS ``b`` projects its own user's channel onto the orthogonal complement
    of its channels towards all other users.  Raises
    :class:`SchemeInapplicable` when a cell serves more than one user,
    when ``M < B``, or when those interfering channels are linearly
    dependent.  A projection with near-zero norm yields a zero beam and
    is flagged.
    """
    cell = np.asarray(cell, dtype=int)
    B, K, M = a.shape
    if K != B or not np.array_equal(np.sort(cell), np.arange(B)):
        raise SchemeInapplicable("ZF needs exactly one user per cell")
    if M < B:
        raise SchemeInapplicable(f"ZF needs M >= B, got M={M}, B={B}")
    P = np.asarray(P, dtype=float)
    W = np.zeros((M, K), dtype=complex)
    flags = np.zeros(K, dtype=bool)
    for m in range(K):
        b = cell[m]
        own = a[b, m]
        others = [u for u in range(K) if u != m]
        A = a[b, others].T  # (M, K-1)
        if A.size:
            sv = np.linalg.svd(A, compute_uv=False)
            if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
                raise SchemeInapplicable(f"interfering channels of BS {b} are rank deficient")
            Q, _ = np.linalg.qr(A)
            w = own - Q @ (Q.conj().T @ own)
        else:
            w = own.copy()
        nrm = np.linalg.norm(w)
        if nrm <= ZERO_GAIN_RTOL * np.linalg.norm(own):
            flags[m] = True
            continue
        W[:, m] = np.sqrt(P[b]) * w / nrm
    beams = TxBeams(W, cell)
    return (beams, flags) if return_flags else beams


# ---------------------------------------------------------------------------
# reflect-vector helpers


def random_reflect(N: int, seed) -> np.ndarray:
    """Unit-modulus reflect vector with i.i.d. uniform phases."""
    rng = np.random.default_rng(seed)
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=int(N)))


def unit_amplitude_project(v) -> np.ndarray:
    """``exp(j arg v_n)`` entrywise, with ``v_n = 0`` mapped to 1."""
    v = np.asarray(v, dtype=complex)
    mag = np.abs(v)
    out = np.ones_like(v)
    nz = mag > 0
    out[nz] = v[nz] / mag[nz]
    return out


def no_irs_solve(channels: ChannelSet, config=None, tol_rel: float = 1e-3):
    """Optimal coordinated beams on the direct channels alone."""
    cfg = channels.config if config is None else config
    return solve_txbf_effective(channels.h, cfg.cell, cfg.alpha, cfg.sigma2, cfg.p_max, tol_rel)


# ---------------------------------------------------------------------------
# dispatch


def _closed_form_ao(channels, cfg, design, name, eps, max_iters, reflect_hook):
    alpha, sigma2 = np.asarray(cfg.alpha), np.asarray(cfg.sigma2)

    def transmit(a, beams, t):
        new = clean_beams(design(a, cfg.cell, cfg.p_max), a, cfg.p_max)
        return new, float(np.min(weighted_sinr(a, new, sigma2, alpha)))

    def reflect(q, beams, t_star, v):
        return solve_p5_1(q, beams, t_star, v, sigma2, alpha).v

    return alternate(channels, cfg, transmit, reflect, name, None, eps, max_iters,
                     stop_on_decrease=True, reflect_hook=reflect_hook)


def _fixed_v_report(channels, cfg, v, name, start) -> SolveReport:
    comp = composite_channels(channels)
    a = effective_channels(channels, comp, v)
    beams, t = solve_txbf_effective(a, cfg.cell, cfg.alpha, cfg.sigma2, cfg.p_max)
    return SolveReport(name, [t], beams, np.asarray(v, dtype=complex), t, Termination.CONVERGED, 1,
                       time.perf_counter() - start, cfg.p_max)


def run_scheme(scheme, channels: ChannelSet, config=None, seed=None, **options) -> SolveReport:
    """Run one algorithm or benchmark and return its report.

    ``seed`` drives the random reflect vector and the Gaussian
    randomization.  ``options`` are forwarded to the algorithm (``eps``,
    ``max_iters``, ``num_rand``, ``gamma``, ``T``); unknown keys raise.
    """
    scheme = parse_scheme(scheme)
    cfg = channels.config if config is None else config
    hook = None
    if isinstance(scheme, UnitAmplitude):
        scheme, hook = scheme.inner, unit_amplitude_project
    name = scheme_name(scheme) if hook is None else scheme_name(UnitAmplitude(scheme))
    seed = 0 if seed is None else seed
    start = time.perf_counter()

    def opts(*allowed):
        extra = set(options) - set(allowed)
        if extra:
            raise TypeError(f"{name} does not accept options {sorted(extra)}")
        return options

    if scheme is Scheme.EXACT_AO:
        rep = run_exact_ao(channels, cfg, rng=seed, reflect_hook=hook,
                           **opts("eps", "max_iters", "num_rand", "tol_rel"))
    elif scheme is Scheme.INEXACT_AO:
        rep = run_inexact_ao(channels, cfg, reflect_hook=hook, **opts("eps", "max_iters"))
    elif scheme is Scheme.LOWCX_AO:
        rep = run_lowcx_ao(channels, cfg, reflect_hook=hook, **opts("eps", "max_iters", "gamma", "T"))
    elif scheme is Scheme.AO_MRT:
        o = opts("eps", "max_iters")
        rep = _closed_form_ao(channels, cfg, mrt_beams, name, o.get("eps", 1e-3), o.get("max_iters", 50), hook)
    elif scheme is Scheme.AO_ZF:
        o = opts("eps", "max_iters")
        if cfg.M < cfg.B or max(cfg.users_per_cell) != 1:
            raise SchemeInapplicable("ZF needs one user per cell and M >= B")
        rep = _closed_form_ao(channels, cfg, zf_beams, name, o.get("eps", 1e-3), o.get("max_iters", 50), hook)
    elif scheme is Scheme.RANDOM_REFLECT:
        opts()
        rep = _fixed_v_report(channels, cfg, random_reflect(cfg.N, [int(seed), 0x5EED]), name, start)
    elif scheme is Scheme.NO_IRS:
        opts()
        rep = _fixed_v_report(channels, cfg, np.zeros(cfg.N, dtype=complex), name, start)
    else:  # pragma: no cover
        raise ValueError(f"unknown scheme {scheme!r}")
    rep.algorithm = name
    return rep
