"""System geometry, propagation model and per-trial channel sampling.

Users are addressed either by ``(b, k)`` (cell, index inside the cell, both
0-based) or by the linear index ``m = K_0 + ... + K_{b-1} + k``.  All
per-user arrays are ordered by ``m``.

Channel array layout::

    G[b]     (B, N, M)  BS b -> IRS
    f[m]     (K, N)     IRS -> user m
    h[i, m]  (B, K, M)  BS i -> user m
    Phi[i, m] (B, K, N, M)  diag(conj(f[m])) @ G[i]

Random draws come from independent substreams.  Every link gets its own
``numpy.random.SeedSequence(seed, spawn_key=(kind, *ids))`` with

* ``(0, i, b, k)`` for ``h`` from BS ``i`` to user ``(b, k)``,
* ``(1, b, k)``    for ``f`` of user ``(b, k)``,
* ``(2, b)``       for the scattered part of ``G[b]``,

so adding cells or users never changes the draws of the other links.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "PathlossExponents",
    "SystemConfig",
    "ChannelSet",
    "CompositeChannels",
    "dbm_to_watt",
    "watt_to_dbm",
    "db_to_linear",
    "linear_to_db",
    "path_loss",
    "ula_steering",
    "los_component",
    "sample_channels",
    "composite_channel",
    "composite_channels",
    "effective_channel",
    "effective_channels",
]


def dbm_to_watt(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(p_w):
    return 10.0 * np.log10(np.asarray(p_w, dtype=float)) + 30.0


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class PathlossExponents:
    bs_user: float = 3.6
    bs_irs: float = 2.0
    irs_user: float = 2.5


def _pairs(points) -> tuple:
    return tuple((float(p[0]), float(p[1])) for p in points)


@dataclass(frozen=True)
class SystemConfig:
    """Static description of one IRS-aided multi-cell MISO system.

    Powers and noise are in watts, gains linear, positions in meters.
    ``alpha`` and ``sigma2`` are per user, ordered by linear user index.
    """

    users_per_cell: tuple
    M: int
    N: int
    p_max: tuple
    alpha: tuple
    sigma2: tuple
    bs_positions: tuple
    user_positions: tuple
    irs_position: tuple
    exponents: PathlossExponents = field(default_factory=PathlossExponents)
    c0: float = 1e-3
    d0: float = 1.0
    rician_k: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "users_per_cell", tuple(int(k) for k in self.users_per_cell))
        object.__setattr__(self, "p_max", tuple(float(p) for p in np.ravel(self.p_max)))
        object.__setattr__(self, "alpha", tuple(float(a) for a in np.ravel(self.alpha)))
        object.__setattr__(self, "sigma2", tuple(float(s) for s in np.ravel(self.sigma2)))
        object.__setattr__(self, "bs_positions", _pairs(self.bs_positions))
        object.__setattr__(self, "user_positions", _pairs(self.user_positions))
        object.__setattr__(self, "irs_position", (float(self.irs_position[0]), float(self.irs_position[1])))
        B, K = self.B, self.K
        if B < 1 or self.M < 1 or self.N < 1 or min(self.users_per_cell) < 1:
            raise ValueError("need B >= 1, M >= 1, N >= 1 and K_b >= 1")
        for name, vals, n in (
            ("p_max", self.p_max, B),
            ("alpha", self.alpha, K),
            ("sigma2", self.sigma2, K),
            ("bs_positions", self.bs_positions, B),
            ("user_positions", self.user_positions, K),
        ):
            if len(vals) != n:
                raise ValueError(f"{name} has length {len(vals)}, expected {n}")
        for name, vals in (("p_max", self.p_max), ("alpha", self.alpha), ("sigma2", self.sigma2)):
            if not all(v > 0 and math.isfinite(v) for v in vals):
                raise ValueError(f"{name} entries must be finite and strictly positive")
        if not self.c0 > 0 or not self.d0 > 0:
            raise ValueError("c0 and d0 must be positive")
        if not self.rician_k >= 0:
            raise ValueError("rician_k must be >= 0")

    @property
    def B(self) -> int:
        return len(self.users_per_cell)

    @property
    def K(self) -> int:
        return sum(self.users_per_cell)

    @property
    def cell(self) -> np.ndarray:
        """Serving cell of each user, indexed by linear user index."""
        return np.repeat(np.arange(self.B), self.users_per_cell)

    def user_index(self, b: int, k: int) -> int:
        if not 0 <= k < self.users_per_cell[b]:
            raise IndexError(f"cell {b} has no user {k}")
        return int(sum(self.users_per_cell[:b]) + k)

    def user_pairs(self):
        """List of ``(b, k)`` in linear-index order."""
        return [(b, k) for b, kb in enumerate(self.users_per_cell) for k in range(kb)]

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class ChannelSet:
    G: np.ndarray
    f: np.ndarray
    h: np.ndarray
    config: SystemConfig = field(repr=False)
    seed: int | None = None

    def __post_init__(self):
        c = self.config
        B, K, M, N = c.B, c.K, c.M, c.N
        if self.G.shape != (B, N, M) or self.f.shape != (K, N) or self.h.shape != (B, K, M):
            raise ValueError("channel dimensions do not match the configuration")
        for arr in (self.G, self.f, self.h):
            if not np.all(np.isfinite(arr)):
                raise ValueError("channels must be finite")


@dataclass(frozen=True)
class CompositeChannels:
    Phi: np.ndarray  # (B, K, N, M)


def path_loss(d, exponent, C0=1e-3, d0=1.0):
    """Distance-dependent power gain ``C0 * (d / d0) ** (-exponent)``."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0) or d0 <= 0 or C0 <= 0:
        raise ValueError("path_loss needs d > 0, d0 > 0 and C0 > 0")
    out = C0 * (d / d0) ** (-float(exponent))
    return float(out) if out.ndim == 0 else out


def ula_steering(n: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response, array axis along x, ``angle`` from the x axis."""
    return np.exp(1j * np.pi * np.arange(n) * np.cos(angle))


def _dist(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def los_component(config: SystemConfig, b: int) -> np.ndarray:
    """Deterministic rank-one BS ``b`` -> IRS response, scaled by the link gain."""
    bs, irs = config.bs_positions[b], config.irs_position
    pl = path_loss(_dist(bs, irs), config.exponents.bs_irs, config.c0, config.d0)
    depart = math.atan2(irs[1] - bs[1], irs[0] - bs[0])
    arrive = math.atan2(bs[1] - irs[1], bs[0] - irs[0])
    return math.sqrt(pl) * np.outer(ula_steering(config.N, arrive), ula_steering(config.M, depart).conj())


def _link_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def _cn(rng: np.random.Generator, shape, power: float) -> np.ndarray:
    return math.sqrt(power / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_channels(config: SystemConfig, seed: int) -> ChannelSet:
    """Draw every channel of one Monte-Carlo trial; a pure function of its inputs."""
    B, K, M, N = config.B, config.K, config.M, config.N
    ex = config.exponents
    pairs = config.user_pairs()
    h = np.empty((B, K, M), dtype=complex)
    f = np.empty((K, N), dtype=complex)
    G = np.empty((B, N, M), dtype=complex)
    for m, (b, k) in enumerate(pairs):
        upos = config.user_positions[m]
        for i in range(B):
            pl = path_loss(_dist(config.bs_positions[i], upos), ex.bs_user, config.c0, config.d0)
            h[i, m] = _cn(_link_rng(seed, 0, i, b, k), M, pl)
        pl = path_loss(_dist(config.irs_position, upos), ex.irs_user, config.c0, config.d0)
        f[m] = _cn(_link_rng(seed, 1, b, k), N, pl)
    kr = config.rician_k
    if math.isinf(kr):
        w_los, w_nlos = 1.0, 0.0
    else:
        w_los, w_nlos = math.sqrt(kr / (1.0 + kr)), math.sqrt(1.0 / (1.0 + kr))
    for b in range(B):
        pl = path_loss(_dist(config.bs_positions[b], config.irs_position), ex.bs_irs, config.c0, config.d0)
        G[b] = w_los * los_component(config, b) + w_nlos * _cn(_link_rng(seed, 2, b), (N, M), pl)
    return ChannelSet(G=G, f=f, h=h, config=config, seed=int(seed))


def composite_channel(f: np.ndarray, G: np.ndarray) -> np.ndarray:
    """``diag(f^H) @ G``: row n of ``G`` scaled by ``conj(f[n])``."""
    f = np.asarray(f)
    G = np.asarray(G)
    if f.ndim != 1 or G.ndim != 2 or G.shape[0] != f.shape[0]:
        raise ValueError(f"dimension mismatch: f {f.shape}, G {G.shape}")
    return f.conj()[:, None] * G


def composite_channels(channels: ChannelSet) -> CompositeChannels:
    Phi = channels.f.conj()[None, :, :, None] * channels.G[:, None, :, :]
    return CompositeChannels(Phi=Phi)


def effective_channel(Phi: np.ndarray, h: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``Phi^H v + h`` for one (BS, user) link."""
    Phi, h, v = np.asarray(Phi), np.asarray(h), np.asarray(v)
    if Phi.ndim != 2 or Phi.shape != (v.shape[0], h.shape[0]):
        raise ValueError(f"dimension mismatch: Phi {Phi.shape}, h {h.shape}, v {v.shape}")
    return Phi.conj().T @ v + h


def effective_channels(channels: ChannelSet, composite: CompositeChannels, v: np.ndarray) -> np.ndarray:
    """All effective channels ``a[i, m]``, shape (B, K, M)."""
    return np.einsum("ikn...,n->ik...", composite.Phi.conj(), np.asarray(v)) + channels.h
