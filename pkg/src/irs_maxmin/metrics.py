"""SINR evaluation, the min-weighted-SINR objective and quadratic-form caches.

Cross gains are kept in a ``(K, K)`` matrix ``A`` with
``A[m, u] = a[cell(u), m]^H w_u``: the amplitude with which the stream of
user ``u`` reaches user ``m``.  Row ``m`` therefore holds the desired term
on the diagonal and every interference term off it.

For the reflective subproblem the same quantities are written as functions
of ``v``: with ``c = Phi[cell(u), m] @ w_u`` and ``d = h[cell(u), m]^H w_u``,

    |(v^H Phi + h^H) w|^2 = v^H C v + 2 Re(v^H u) + |d|^2 = |v^H c + d|^2

where ``C = c c^H`` and ``u = c conj(d)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ChannelSet, CompositeChannels, effective_channels

__all__ = [
    "TxBeams",
    "QuadEntry",
    "QuadForms",
    "LiftedForms",
    "cross_gains",
    "sinr_from_gains",
    "sinr_all",
    "sinr",
    "min_weighted_sinr",
    "minimizers",
    "quad_forms",
    "reflect_link_power",
    "link_powers",
    "sinr_from_quad",
    "lift_matrices",
    "lifted_vector",
    "to_db",
]


def to_db(x):
    return 10.0 * np.log10(x)


@dataclass
class TxBeams:
    """Transmit beams stored column-wise: column ``m`` is ``w`` of user ``m``,
    sent by BS ``cell[m]``."""

    W: np.ndarray  # (M, K) complex
    cell: np.ndarray  # (K,) int

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=complex)
        self.cell = np.asarray(self.cell, dtype=int)
        if self.W.ndim != 2 or self.W.shape[1] != self.cell.size:
            raise ValueError(f"W has shape {self.W.shape} for {self.cell.size} users")

    @classmethod
    def zeros(cls, M: int, cell) -> "TxBeams":
        cell = np.asarray(cell, dtype=int)
        return cls(np.zeros((M, cell.size), dtype=complex), cell)

    @property
    def B(self) -> int:
        return int(self.cell.max()) + 1

    def power(self) -> np.ndarray:
        """Transmit power of every BS."""
        col = np.sum(np.abs(self.W) ** 2, axis=0)
        return np.bincount(self.cell, weights=col, minlength=self.B)

    def per_bs(self, b: int) -> np.ndarray:
        """The ``M x K_b`` matrix of BS ``b``."""
        return self.W[:, self.cell == b]

    def copy(self) -> "TxBeams":
        return TxBeams(self.W.copy(), self.cell.copy())


def _W(W) -> np.ndarray:
    return W.W if isinstance(W, TxBeams) else np.asarray(W)


def cross_gains(a: np.ndarray, W, cell) -> np.ndarray:
    """``A[m, u] = a[cell[u], m]^H w_u`` from effective channels ``a`` (B, K, M)."""
    W = _W(W)
    cell = np.asarray(cell)
    return np.einsum("umj,ju->mu", a[cell].conj(), W)


def sinr_from_gains(A: np.ndarray, sigma2) -> np.ndarray:
    p = np.abs(A) ** 2
    desired = np.diagonal(p, axis1=-2, axis2=-1)
    interf = p.sum(axis=-1) - desired
    return desired / (interf + np.asarray(sigma2))


def sinr_all(channels: ChannelSet, composite: CompositeChannels, W, v) -> np.ndarray:
    """SINR of every user (linear), interference treated as noise."""
    cfg = channels.config
    a = effective_channels(channels, composite, v)
    return sinr_from_gains(cross_gains(a, W, cfg.cell), cfg.sigma2)


def sinr(channels: ChannelSet, composite: CompositeChannels, W, v, b: int, k: int) -> float:
    m = channels.config.user_index(b, k)
    return float(sinr_all(channels, composite, W, v)[m])


def min_weighted_sinr(channels, composite, W, v, alpha=None) -> float:
    """``min_m SINR_m / alpha_m``."""
    alpha = channels.config.alpha if alpha is None else alpha
    return float(np.min(sinr_all(channels, composite, W, v) / np.asarray(alpha)))


def minimizers(weighted: np.ndarray) -> list:
    """Linear indices attaining the minimum, lowest first (exact ties)."""
    weighted = np.asarray(weighted)
    return [int(i) for i in np.flatnonzero(weighted == weighted.min())]


# ---------------------------------------------------------------------------
# quadratic forms in v


@dataclass
class QuadEntry:
    c: np.ndarray
    d: complex

    @property
    def C(self) -> np.ndarray:
        return np.outer(self.c, self.c.conj())

    @property
    def u(self) -> np.ndarray:
        return self.c * np.conj(self.d)


@dataclass
class QuadForms:
    """Per (receiver m, stream u): ``c[m, u]`` (length N) and ``d[m, u]``."""

    c: np.ndarray  # (K, K, N)
    d: np.ndarray  # (K, K)

    @property
    def K(self) -> int:
        return self.d.shape[0]

    @property
    def N(self) -> int:
        return self.c.shape[-1]

    @property
    def C(self) -> np.ndarray:
        return self.c[..., :, None] * self.c[..., None, :].conj()

    @property
    def u(self) -> np.ndarray:
        return self.c * self.d[..., None].conj()

    def entry(self, m: int, u: int) -> QuadEntry:
        return QuadEntry(self.c[m, u].copy(), complex(self.d[m, u]))

    def scaled(self, s: float) -> "QuadForms":
        """Amplitudes multiplied by ``s`` (powers by ``s**2``)."""
        return QuadForms(self.c * s, self.d * s)


def quad_forms(composite: CompositeChannels, channels: ChannelSet, W) -> QuadForms:
    W = _W(W)
    cell = channels.config.cell
    if W.shape != (channels.config.M, cell.size):
        raise ValueError(f"beams have shape {W.shape}, expected {(channels.config.M, cell.size)}")
    # c[m, u] = Phi[cell[u], m] @ w_u ;  d[m, u] = h[cell[u], m]^H w_u
    c = np.einsum("umnj,ju->mun", composite.Phi[cell], W)
    d = np.einsum("umj,ju->mu", channels.h[cell].conj(), W)
    return QuadForms(c, d)


def reflect_link_power(q: QuadEntry, v) -> float:
    """``v^H C v + 2 Re(v^H u) + |d|^2`` for a single entry."""
    v = np.asarray(v)
    quad = abs(np.vdot(q.c, v)) ** 2  # v^H c c^H v
    val = quad + 2.0 * np.real(np.vdot(v, q.u)) + abs(q.d) ** 2
    return float(max(val, 0.0))


def link_powers(q: QuadForms, v) -> np.ndarray:
    """All ``|v^H c[m, u] + d[m, u]|^2`` at once; ``v`` may carry leading batch axes."""
    s = np.einsum("...n,mun->...mu", np.conj(v), q.c) + q.d
    return s.real**2 + s.imag**2


def sinr_from_quad(q: QuadForms, v, sigma2) -> np.ndarray:
    p = link_powers(q, v)
    desired = np.diagonal(p, axis1=-2, axis2=-1)
    return desired / (p.sum(axis=-1) - desired + np.asarray(sigma2))


# ---------------------------------------------------------------------------
# lifting


@dataclass
class LiftedForms:
    R: np.ndarray  # (K, K, N+1, N+1)
    d: np.ndarray  # (K, K)


def lift_matrices(q: QuadForms) -> LiftedForms:
    """``R = [[C, u], [u^H, 0]]`` so that ``vbar^H R vbar + |d|^2`` is the link power."""
    K, N = q.K, q.N
    R = np.zeros((K, K, N + 1, N + 1), dtype=complex)
    R[..., :N, :N] = q.C
    u = q.u
    R[..., :N, N] = u
    R[..., N, :N] = u.conj()
    return LiftedForms(R, q.d.copy())


def lifted_vector(v) -> np.ndarray:
    return np.append(np.asarray(v, dtype=complex), 1.0)
