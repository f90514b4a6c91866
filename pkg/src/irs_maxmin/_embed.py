"""Real embeddings of the complex beam variables shared by the SOCP builders.

Beam variables are stacked as ``x = [Re w_0, Re w_1, ..., Im w_0, Im w_1, ...]``
with ``w_u`` of length M, so ``w_u[j]`` lives at ``u*M + j`` (real part) and
``M*K + u*M + j`` (imaginary part).

Before building a program, channels are rescaled so that every BS budget is
1 and noise is measured relative to the smallest noise power:
``a~[i, m] = a[i, m] * sqrt(P_i) / sigma_ref``.  SINRs are unchanged, and a
normalized beam maps back through ``w = sqrt(P_cell) * w~``.
"""

from __future__ import annotations

import numpy as np

from .metrics import TxBeams, cross_gains, sinr_from_gains


def gain_operator(a: np.ndarray, cell: np.ndarray):
    """Real linear maps with ``Re A[m, u] = Gre[m, u] @ x`` and the same for Im."""
    B, K, M = a.shape
    n = 2 * M * K
    coef = np.transpose(a[cell].conj(), (1, 0, 2))  # (m, u, M)
    Gre = np.zeros((K, K, n))
    Gim = np.zeros((K, K, n))
    for u in range(K):
        re = slice(u * M, (u + 1) * M)
        im = slice(M * K + u * M, M * K + (u + 1) * M)
        Gre[:, u, re] = coef[:, u].real
        Gre[:, u, im] = -coef[:, u].imag
        Gim[:, u, re] = coef[:, u].imag
        Gim[:, u, im] = coef[:, u].real
    return Gre, Gim


def power_rows(cell: np.ndarray, M: int, b: int) -> np.ndarray:
    """Selector rows picking the real and imaginary entries of BS ``b``'s beams."""
    K = cell.size
    idx = []
    for u in np.flatnonzero(cell == b):
        idx.extend(range(u * M, (u + 1) * M))
    idx = np.array(idx, dtype=int)
    cols = np.concatenate([idx, idx + M * K])
    S = np.zeros((cols.size, 2 * M * K))
    S[np.arange(cols.size), cols] = 1.0
    return S


def decode_beams(x: np.ndarray, M: int, K: int) -> np.ndarray:
    z = x[: M * K] + 1j * x[M * K : 2 * M * K]
    return z.reshape(K, M).T


class Normalized:
    """Channels rescaled to unit power budgets and unit reference noise."""

    def __init__(self, a: np.ndarray, cell, sigma2, p_max):
        self.cell = np.asarray(cell, dtype=int)
        self.sigma2 = np.asarray(sigma2, dtype=float)
        self.p_max = np.asarray(p_max, dtype=float)
        self.sigma_ref = float(np.sqrt(self.sigma2.min()))
        self.amp = np.sqrt(self.p_max) / self.sigma_ref  # per transmitting BS
        self.a = a * self.amp[:, None, None]
        self.noise = self.sigma2 / self.sigma_ref**2
        self.B, self.K, self.M = a.shape

    def to_beams(self, Wn: np.ndarray) -> TxBeams:
        return TxBeams(Wn * np.sqrt(self.p_max[self.cell])[None, :], self.cell)

    def from_beams(self, beams: TxBeams) -> np.ndarray:
        return beams.W / np.sqrt(self.p_max[self.cell])[None, :]


def clean_beams(beams: TxBeams, a: np.ndarray, p_max) -> TxBeams:
    """Rotate so ``a[cell m, m]^H w_m >= 0`` and clip any power excess."""
    W = beams.W.copy()
    cell = beams.cell
    K = cell.size
    for m in range(K):
        g = np.vdot(a[cell[m], m], W[:, m])
        if abs(g) > 0:
            W[:, m] *= np.conj(g) / abs(g)
    out = TxBeams(W, cell)
    p = out.power()
    p_max = np.asarray(p_max, dtype=float)
    scale = np.where(p > p_max, np.sqrt(p_max / np.maximum(p, 1e-300)), 1.0)
    out.W *= scale[cell][None, :]
    return out


def weighted_sinr(a: np.ndarray, beams: TxBeams, sigma2, alpha) -> np.ndarray:
    return sinr_from_gains(cross_gains(a, beams, beams.cell), sigma2) / np.asarray(alpha)


def mrt_directions(a: np.ndarray, cell, p_max) -> TxBeams:
    """Full-power MRT with the budget of each BS split equally among its users."""
    cell = np.asarray(cell, dtype=int)
    B, K, M = a.shape
    p_max = np.asarray(p_max, dtype=float)
    counts = np.bincount(cell, minlength=B)
    W = np.zeros((M, K), dtype=complex)
    for m in range(K):
        own = a[cell[m], m]
        nrm = np.linalg.norm(own)
        if nrm > 0:
            W[:, m] = np.sqrt(p_max[cell[m]] / counts[cell[m]]) * own / nrm
    return TxBeams(W, cell)
