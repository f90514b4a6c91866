"""Cone programs and the solver contract used by every convex subproblem.

A :class:`ConicProgram` is stored in the standard primal form

    minimize    q' x
    subject to  s = b - A x,   s in K_1 x K_2 x ... x K_p

where each ``K_j`` is one of

* ``"zero"``     -- equality rows (``s == 0``),
* ``"nonneg"``   -- the nonnegative orthant,
* ``"soc"``      -- a second-order cone ``{(s0, s1) : ||s1|| <= s0}``,
* ``"psd"``      -- real symmetric PSD matrices of side ``n`` stored as the
  scaled upper triangle (column major, off-diagonal entries times sqrt(2)),
  i.e. ``n (n + 1) / 2`` rows.

Complex quantities are embedded by stacking real parts before imaginary
parts; a Hermitian ``L x L`` PSD constraint becomes one ``2L x 2L`` block
``[[Re, -Im], [Im, Re]]``.  The builders living in the algorithm modules
take care of that.

Three interior-point backends are available: Clarabel (default, sparse
KKT factorization), CVXOPT (dense Schur complement) and a small native
solver for zero/nonneg/PSD programs with few variables, which is the
fastest on the relaxed reflect programs.  Whatever the backend says,
:func:`solve` re-checks the verdict itself:
``OPTIMAL`` is only returned for a point whose cone residuals are below
``PRIMAL_TOL``, and ``INFEASIBLE`` only with a verified Farkas certificate.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import clarabel
import cvxopt
import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor as _lu_factor
from scipy.linalg import lu_solve as _lu_solve

__all__ = [
    "CONE_KINDS",
    "PRIMAL_TOL",
    "CERT_TOL",
    "Status",
    "ConicProgram",
    "ConicSolution",
    "ProgramBuilder",
    "solve",
    "BACKENDS",
    "svec_index",
    "smat",
    "dumps",
    "loads",
    "write_dump",
]

CONE_KINDS = ("zero", "nonneg", "soc", "psd")
BACKENDS = ("clarabel", "cvxopt", "native")

PRIMAL_TOL = 1e-7
CERT_TOL = 1e-7

_SQRT2 = math.sqrt(2.0)


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    NUMERICAL_FAILURE = "NumericalFailure"


def _cone_rows(kind: str, dim: int) -> int:
    if kind == "psd":
        return dim * (dim + 1) // 2
    return dim


@dataclass(frozen=True)
class ConicProgram:
    """Immutable cone program ``min q'x  s.t.  b - A x in K``.

    ``cones`` is a tuple of ``(kind, dim)`` pairs laid out over consecutive
    rows of ``A``; for ``"psd"`` blocks ``dim`` is the matrix side.  ``meta``
    is free-form bookkeeping (e.g. how to map ``x`` back to complex beams).
    """

    q: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    cones: tuple
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        b = np.asarray(self.b, dtype=float)
        A = self.A if sp.isspmatrix_csc(self.A) and self.A.dtype == float else sp.csc_matrix(self.A, dtype=float)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "cones", tuple((str(k), int(d)) for k, d in self.cones))
        if A.shape != (b.size, q.size):
            raise ValueError(f"A has shape {A.shape}, expected {(b.size, q.size)}")
        rows = 0
        for kind, dim in self.cones:
            if kind not in CONE_KINDS:
                raise ValueError(f"unknown cone kind {kind!r}")
            if dim < 1 and kind != "zero":
                raise ValueError(f"{kind} cone needs a positive dimension")
            rows += _cone_rows(kind, dim)
        if rows != b.size:
            raise ValueError(f"cone blocks cover {rows} rows but program has {b.size}")

    @property
    def num_vars(self) -> int:
        return self.q.size

    @property
    def num_rows(self) -> int:
        return self.b.size

    def blocks(self):
        """Yield ``(kind, dim, row_slice)`` for each cone block."""
        start = 0
        for kind, dim in self.cones:
            stop = start + _cone_rows(kind, dim)
            yield kind, dim, slice(start, stop)
            start = stop

    def slack(self, x: np.ndarray) -> np.ndarray:
        return self.b - self.A @ x

    def cone_residuals(self, x: np.ndarray) -> np.ndarray:
        """Per-block distance-like violation of ``b - A x`` from its cone."""
        s = self.slack(x)
        return np.array([_cone_violation(kind, dim, s[sl]) for kind, dim, sl in self.blocks()])


@dataclass
class ConicSolution:
    status: Status
    x: np.ndarray | None
    objective: float
    iterations: int
    primal_residual: float
    backend_status: str = ""
    z: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


class ProgramBuilder:
    """Accumulates variables and cone blocks, then freezes a ConicProgram.

    Blocks are given as affine expressions ``s = F x + g``; the builder
    stores them in solver form (``A = -F``, ``b = g``).  Coefficients may be
    dense arrays or scipy sparse matrices with ``num_vars`` columns.
    """

    def __init__(self, num_vars: int):
        self.num_vars = int(num_vars)
        self.q = np.zeros(self.num_vars)
        self._A: list = []
        self._b: list = []
        self._cones: list = []
        self.meta: dict = {}

    def add(self, kind: str, F, g=None, dim: int | None = None) -> None:
        if kind not in CONE_KINDS:
            raise ValueError(f"unknown cone kind {kind!r}")
        if sp.issparse(F):
            F = F.tocsr()
        else:
            F = np.asarray(F, dtype=float)
            if F.ndim == 1:
                F = F.reshape(1, -1)
        if F.shape[1] != self.num_vars:
            raise ValueError(f"block has {F.shape[1]} columns, expected {self.num_vars}")
        rows = F.shape[0]
        g = np.zeros(rows) if g is None else np.asarray(g, dtype=float).reshape(rows)
        if kind == "psd":
            side = dim if dim is not None else int(round((math.sqrt(8 * rows + 1) - 1) / 2))
            if side * (side + 1) // 2 != rows:
                raise ValueError("psd block row count is not triangular")
            dim = side
        else:
            dim = rows
        self._A.append(-F)
        self._b.append(g)
        self._cones.append((kind, dim))

    def build(self) -> ConicProgram:
        if not self._A:
            A = sp.csc_matrix((0, self.num_vars))
            b = np.zeros(0)
        elif any(sp.issparse(F) for F in self._A):
            A = sp.vstack([sp.csr_matrix(F) if not sp.issparse(F) else F for F in self._A], format="csc")
            b = np.concatenate(self._b)
        else:
            A = sp.csc_matrix(np.vstack(self._A))
            b = np.concatenate(self._b)
        return ConicProgram(self.q.copy(), A, b, tuple(self._cones), dict(self.meta))


# ---------------------------------------------------------------------------
# PSD helpers


def svec_index(i: int, j: int) -> int:
    """Row offset of entry (i, j) of a symmetric matrix inside its svec."""
    if i > j:
        i, j = j, i
    return j * (j + 1) // 2 + i


@lru_cache(maxsize=None)
def _svec_pattern(n: int):
    rows, cols = np.triu_indices(n)
    order = np.lexsort((rows, cols))  # column-major over the upper triangle
    rows, cols = rows[order], cols[order]
    scale = np.where(rows == cols, 1.0, _SQRT2)
    return rows, cols, scale


def smat(s: np.ndarray, n: int) -> np.ndarray:
    """Inverse of the scaled svec used by ``"psd"`` blocks."""
    rows, cols, scale = _svec_pattern(n)
    X = np.zeros((n, n))
    X[rows, cols] = s / scale
    X[cols, rows] = s / scale
    return X


def _svec(X: np.ndarray) -> np.ndarray:
    rows, cols, scale = _svec_pattern(X.shape[0])
    return X[rows, cols] * scale


def _cone_violation(kind: str, dim: int, s: np.ndarray) -> float:
    if s.size == 0:
        return 0.0
    if kind == "zero":
        return float(np.max(np.abs(s)))
    if kind == "nonneg":
        return float(max(0.0, -np.min(s)))
    if kind == "soc":
        return float(max(0.0, np.linalg.norm(s[1:]) - s[0]))
    lam = np.linalg.eigvalsh(smat(s, dim))
    return float(max(0.0, -lam[0]))


def _dual_violation(kind: str, dim: int, z: np.ndarray) -> float:
    # dual cones: zero -> free, the rest are self-dual
    if kind == "zero":
        return 0.0
    return _cone_violation(kind, dim, z)


# ---------------------------------------------------------------------------
# solving


def _clarabel_cones(cones):
    out = []
    for kind, dim in cones:
        if kind == "zero":
            out.append(clarabel.ZeroConeT(dim))
        elif kind == "nonneg":
            out.append(clarabel.NonnegativeConeT(dim))
        elif kind == "soc":
            out.append(clarabel.SecondOrderConeT(dim))
        else:
            out.append(clarabel.PSDTriangleConeT(dim))
    return out


def _settings(max_iter: int):
    st = clarabel.DefaultSettings()
    st.verbose = False
    st.max_iter = max_iter
    st.tol_feas = 1e-9
    st.tol_gap_abs = 1e-9
    st.tol_gap_rel = 1e-9
    st.presolve_enable = False
    st.max_threads = 1
    return st


def _certificate_ok(p: ConicProgram, z: np.ndarray | None) -> bool:
    """Check a Farkas certificate: ``A'z = 0``, ``b'z < 0``, ``z in K*``."""
    if z is None or not np.all(np.isfinite(z)):
        return False
    bz = float(p.b @ z)
    if bz >= 0.0:
        return False
    y = z / -bz
    if np.max(np.abs(p.A.T @ y), initial=0.0) > CERT_TOL:
        return False
    return all(_dual_violation(kind, dim, y[sl]) <= CERT_TOL for kind, dim, sl in p.blocks())


@lru_cache(maxsize=None)
def _full_from_svec(n: int) -> sp.csr_matrix:
    """Map scaled svec to the full column-major ``n x n`` matrix."""
    rows, cols, scale = _svec_pattern(n)
    k = np.arange(rows.size)
    r = np.concatenate([cols * n + rows, (rows * n + cols)[rows != cols]])
    c = np.concatenate([k, k[rows != cols]])
    v = np.concatenate([1.0 / scale, (1.0 / scale)[rows != cols]])
    return sp.csr_matrix((v, (r, c)), shape=(n * n, rows.size))


def _run_clarabel(p: ConicProgram, max_iter: int):
    P = sp.csc_matrix((p.num_vars, p.num_vars))
    solver = clarabel.DefaultSolver(P, p.q, p.A, p.b, _clarabel_cones(p.cones), _settings(max_iter))
    res = solver.solve()
    x = np.asarray(res.x) if res.x is not None else None
    z = np.asarray(res.z) if res.z is not None else None
    status = str(res.status)
    if status == "Solved" or status == "AlmostSolved":
        kind = "solved"
    elif "PrimalInfeasible" in status:
        kind = "infeasible"
    elif status in ("MaxIterations", "InsufficientProgress"):
        kind = "stalled"
    else:
        kind = "other"
    return kind, status, x, z, res.iterations


def _run_cvxopt(p: ConicProgram, max_iter: int):
    """Solve with ``cvxopt.solvers.conelp``; ``z`` comes back in svec form."""
    Acsr = p.A.tocsr()
    groups = {"zero": [], "nonneg": [], "soc": [], "psd": []}
    for kind, dim, sl in p.blocks():
        groups[kind].append((dim, sl))
    G_parts, h_parts = [], []
    for kind in ("nonneg", "soc"):
        for dim, sl in groups[kind]:
            G_parts.append(Acsr[sl])
            h_parts.append(p.b[sl])
    for dim, sl in groups["psd"]:
        T = _full_from_svec(dim)
        G_parts.append(T @ Acsr[sl])
        h_parts.append(T @ p.b[sl])
    eq_rows = [np.arange(sl.start, sl.stop) for _, sl in groups["zero"]]
    eq_rows = np.concatenate(eq_rows) if eq_rows else np.zeros(0, dtype=int)
    dims = {
        "l": sum(d for d, _ in groups["nonneg"]),
        "q": [d for d, _ in groups["soc"]],
        "s": [d for d, _ in groups["psd"]],
    }

    def spm(M):
        M = sp.coo_matrix(M)
        return cvxopt.spmatrix(M.data.tolist(), M.row.tolist(), M.col.tolist(), size=M.shape)

    G = spm(sp.vstack(G_parts)) if G_parts else cvxopt.spmatrix([], [], [], (0, p.num_vars))
    h = cvxopt.matrix(np.concatenate(h_parts) if h_parts else np.zeros(0))
    extra = {}
    if eq_rows.size:
        extra = {"A": spm(Acsr[eq_rows]), "b": cvxopt.matrix(p.b[eq_rows])}
    opts = {"show_progress": False, "maxiters": max_iter, "abstol": 1e-9, "reltol": 1e-9, "feastol": 1e-9}
    try:
        res = cvxopt.solvers.conelp(cvxopt.matrix(p.q), G, h, dims, options=opts, **extra)
    except (ArithmeticError, ValueError) as exc:
        # cvxopt raises on a singular scaling or KKT system
        return "other", f"error: {exc}", None, None, 0
    status = res["status"]

    x = np.array(res["x"]).ravel() if res["x"] is not None else None
    z = None
    if res["z"] is not None:
        zc = np.array(res["z"]).ravel()
        yc = np.array(res["y"]).ravel() if res.get("y") is not None else np.zeros(eq_rows.size)
        z = np.zeros(p.num_rows)
        z[eq_rows] = yc
        pos = 0
        for kind in ("nonneg", "soc"):
            for dim, sl in groups[kind]:
                z[sl] = zc[pos : pos + dim]
                pos += dim
        for dim, sl in groups["psd"]:
            Z = zc[pos : pos + dim * dim].reshape(dim, dim, order="F")
            Z = np.tril(Z) + np.tril(Z, -1).T  # only the lower triangle is meaningful
            z[sl] = _svec(Z)
            pos += dim * dim
    if status == "optimal":
        kind = "solved"
    elif status == "primal infeasible":
        kind = "infeasible"
    elif status == "unknown":
        kind = "stalled"
    else:
        kind = "other"
    return kind, status, x, z, int(res.get("iterations", 0))


class _NativeSDP:
    """Dense primal-dual interior-point method for zero/nonneg/PSD programs.

    Infeasible-start path following with the HKM search direction and a
    Mehrotra predictor-corrector, written for programs with a few dozen
    variables and small PSD blocks, where the per-iteration overhead of the
    general-purpose backends dominates.  The Newton system is reduced to
    the ``n x n`` Schur complement (bordered by the equality rows).  There
    is no infeasibility detection: programs that are not solved to
    tolerance are reported as unconverged.
    """

    TOL = 1e-9
    STEP = 0.98

    def __init__(self, p: ConicProgram):
        A = p.A.toarray()
        self.q = p.q
        self.n = p.num_vars
        eq, lin, self.psd = [], [], []
        for kind, dim, sl in p.blocks():
            if kind == "zero":
                eq.append(np.arange(sl.start, sl.stop))
            elif kind == "nonneg":
                lin.append(np.arange(sl.start, sl.stop))
            elif kind == "psd":
                cols = np.stack([smat(A[sl, j], dim) for j in range(self.n)])
                self.psd.append((dim, sl, cols, smat(p.b[sl], dim), cols.reshape(self.n, dim * dim)))
            else:
                raise ValueError("the native backend handles zero, nonneg and psd cones only")
        self.eq = np.concatenate(eq) if eq else np.zeros(0, dtype=int)
        self.lin = np.concatenate(lin) if lin else np.zeros(0, dtype=int)
        self.AE, self.bE = A[self.eq], p.b[self.eq]
        self.AL, self.bL = A[self.lin], p.b[self.lin]
        self.nu = self.lin.size + sum(d for d, *_ in self.psd)
        self.num_rows = p.num_rows
        self.bnorm = 1.0 + float(np.max(np.abs(p.b), initial=0.0))
        self.qnorm = 1.0 + float(np.max(np.abs(p.q), initial=0.0))

    @staticmethod
    def _max_step(Ci, dX) -> float:
        """Largest ``a`` with ``X + a dX`` PSD, given ``Ci = chol(X)^-1``."""
        lam = np.linalg.eigvalsh(Ci @ dX @ Ci.T)[0]
        return math.inf if lam >= 0 else -1.0 / lam

    @staticmethod
    def _max_step_lin(x, dx) -> float:
        neg = dx < 0
        return float(np.min(-x[neg] / dx[neg])) if np.any(neg) else math.inf

    def run(self, max_iter: int):
        n, mE = self.n, self.eq.size
        x, y = np.zeros(n), np.zeros(mE)
        s_l = np.full(self.lin.size, self.bnorm)
        z_l = np.full(self.lin.size, self.qnorm)
        S = [self.bnorm * np.eye(d) for d, *_ in self.psd]
        Z = [self.qnorm * np.eye(d) for d, *_ in self.psd]
        it = 0
        for it in range(1, max_iter + 1):
            # residuals of the KKT system
            r_x = self.q + self.AE.T @ y + self.AL.T @ z_l
            r_l = self.AL @ x + s_l - self.bL
            r_E = self.AE @ x - self.bE
            R = []
            for k, (d, sl, cols, B, flat) in enumerate(self.psd):
                r_x = r_x + flat @ Z[k].ravel()
                R.append(np.tensordot(x, cols, axes=1) + S[k] - B)
            mu = (s_l @ z_l + sum(np.sum(Sk * Zk) for Sk, Zk in zip(S, Z))) / self.nu
            if not (math.isfinite(mu) and mu > 0 and np.all(s_l > 0) and np.all(np.isfinite(x))):
                # iterates diverge on infeasible programs
                return "other", "diverged", x, None, it
            pres = max([float(np.max(np.abs(r), initial=0.0)) for r in (r_l, r_E)]
                       + [float(np.max(np.abs(Rk))) for Rk in R]) / self.bnorm
            dres = float(np.max(np.abs(r_x), initial=0.0)) / self.qnorm
            pobj = float(self.q @ x)
            dobj = -float(self.bE @ y) - float(self.bL @ z_l) - sum(
                float(np.sum(B * Zk)) for (_, _, _, B, _), Zk in zip(self.psd, Z))
            gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
            if pres <= self.TOL and dres <= self.TOL and gap <= self.TOL:
                return "solved", x, self._z(y, z_l, Z), it - 1

            # Schur complement of the scaled Newton system
            try:
                CiS = [np.linalg.inv(np.linalg.cholesky(Sk)) for Sk in S]
                CiZ = [np.linalg.inv(np.linalg.cholesky(Zk)) for Zk in Z]
            except np.linalg.LinAlgError:
                return "other", "lost positive definiteness", x, self._z(y, z_l, Z), it
            Si = [C.T @ C for C in CiS]
            with np.errstate(over="ignore"):
                dl = z_l / s_l
            if not np.all(np.isfinite(dl)):
                return "other", "diverged", x, None, it
            M = self.AL.T @ (dl[:, None] * self.AL)
            for k, (d, sl, cols, B, flat) in enumerate(self.psd):
                # M_ij = tr(A_i Z A_j S^-1)
                W = Z[k] @ cols @ Si[k]
                M = M + flat @ W.transpose(0, 2, 1).reshape(n, d * d).T
            M = 0.5 * (M + M.T)
            KKT = np.block([[M, self.AE.T], [self.AE, np.zeros((mE, mE))]])
            try:
                lu = _lu_factor(KKT)
            except (np.linalg.LinAlgError, ValueError):
                return "other", "singular Newton system", x, None, it

            def direction(rc_l, RC):
                rhs = -r_x - self.AL.T @ (dl * r_l + rc_l)
                for k, (d, sl, cols, B, flat) in enumerate(self.psd):
                    H = Z[k] @ R[k] @ Si[k] + RC[k]
                    rhs = rhs - flat @ H.T.ravel()
                sol = _lu_solve(lu, np.r_[rhs, -r_E])
                dx, dy = sol[:n], sol[n:]
                ds_l = -r_l - self.AL @ dx
                dz_l = -dl * ds_l + rc_l
                dS, dZ = [], []
                for k, (d, sl, cols, B, flat) in enumerate(self.psd):
                    dSk = -R[k] - np.tensordot(dx, cols, axes=1)
                    dZk = -Z[k] @ dSk @ Si[k] + RC[k]
                    dS.append(dSk)
                    dZ.append(0.5 * (dZk + dZk.T))
                return dx, dy, ds_l, dz_l, dS, dZ

            def steps(ds_l, dz_l, dS, dZ):
                ap = min([self._max_step_lin(s_l, ds_l)] + [self._max_step(CiS[k], dS[k]) for k in range(len(S))])
                ad = min([self._max_step_lin(z_l, dz_l)] + [self._max_step(CiZ[k], dZ[k]) for k in range(len(Z))])
                return min(1.0, ap), min(1.0, ad)

            try:
                # predictor: affine scaling direction
                dx, dy, ds_l, dz_l, dS, dZ = direction(-z_l, [-Zk for Zk in Z])
                ap, ad = steps(ds_l, dz_l, dS, dZ)
                mu_aff = ((s_l + ap * ds_l) @ (z_l + ad * dz_l) + sum(
                    np.sum((S[k] + ap * dS[k]) * (Z[k] + ad * dZ[k])) for k in range(len(S)))) / self.nu
                sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3
                # corrector with the second-order term
                rc_l = (sigma * mu - ds_l * dz_l) / s_l - z_l
                RC = []
                for k in range(len(S)):
                    T = sigma * mu * Si[k] - Z[k] - dZ[k] @ dS[k] @ Si[k]
                    RC.append(0.5 * (T + T.T))
                dx, dy, ds_l, dz_l, dS, dZ = direction(rc_l, RC)
                ap, ad = steps(ds_l, dz_l, dS, dZ)
            except np.linalg.LinAlgError:
                return "other", "lost positive definiteness", x, self._z(y, z_l, Z), it
            ap, ad = self.STEP * ap if ap < 1.0 else ap, self.STEP * ad if ad < 1.0 else ad
            ap, ad = min(ap, self.STEP), min(ad, self.STEP)
            x, s_l = x + ap * dx, s_l + ap * ds_l
            y, z_l = y + ad * dy, z_l + ad * dz_l
            S = [S[k] + ap * dS[k] for k in range(len(S))]
            Z = [Z[k] + ad * dZ[k] for k in range(len(Z))]
        return "stalled", "iteration limit", x, self._z(y, z_l, Z), it

    def _z(self, y, z_l, Z) -> np.ndarray:
        z = np.zeros(self.num_rows)
        z[self.eq] = y
        z[self.lin] = z_l
        for (d, sl, *_), Zk in zip(self.psd, Z):
            z[sl] = _svec(Zk)
        return z


def _run_native(p: ConicProgram, max_iter: int):
    out = _NativeSDP(p).run(max_iter)
    if out[0] == "solved":
        kind, x, z, iters = out
        return kind, "solved", x, z, iters
    kind, status, x, z, iters = out
    return kind, status, x, z, iters


def solve(p: ConicProgram, max_iter: int = 200, backend: str = "clarabel") -> ConicSolution:
    """Solve ``p`` and return a verdict checked independently of the backend.

    Feasibility programs are those with ``q == 0``.  ``NUMERICAL_FAILURE``
    is returned whenever neither a feasible point nor an infeasibility
    certificate can be confirmed; callers must handle it explicitly.
    """
    if backend == "clarabel":
        kind, status, x, z, iters = _run_clarabel(p, max_iter)
    elif backend == "cvxopt":
        kind, status, x, z, iters = _run_cvxopt(p, max_iter)
    elif backend == "native":
        kind, status, x, z, iters = _run_native(p, max_iter)
    else:
        raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")

    if x is not None and np.all(np.isfinite(x)) and kind in ("solved", "stalled"):
        resid = float(np.max(p.cone_residuals(x), initial=0.0))
        # a usable point with an unconverged objective is only acceptable
        # for feasibility programs
        if resid <= PRIMAL_TOL and (kind == "solved" or not np.any(p.q)):
            return ConicSolution(Status.OPTIMAL, x, float(p.q @ x), iters, resid, status, z)
    if kind == "infeasible" and _certificate_ok(p, z):
        return ConicSolution(Status.INFEASIBLE, None, math.inf, iters, math.nan, status, z)
    resid = math.nan
    if x is not None and np.all(np.isfinite(x)):
        resid = float(np.max(p.cone_residuals(x), initial=0.0))
    return ConicSolution(Status.NUMERICAL_FAILURE, x, math.nan, iters, resid, status, z)


# ---------------------------------------------------------------------------
# debug dump: one cone block per line
#
#   conic-program 1
#   vars <n>
#   q <j>:<val> <j>:<val> ...
#   block <kind> <dim> | A <r>,<j>,<val> ... | b <r>:<val> ...
#
# Row indices inside a block line are local to that block.  Values are
# written with repr() so the round trip is exact.


def dumps(p: ConicProgram) -> str:
    out = io.StringIO()
    out.write("conic-program 1\n")
    out.write(f"vars {p.num_vars}\n")
    nz = np.flatnonzero(p.q)
    out.write("q" + "".join(f" {j}:{float(p.q[j])!r}" for j in nz) + "\n")
    Acsr = p.A.tocsr()
    for kind, dim, sl in p.blocks():
        blk = Acsr[sl].tocoo()
        a_txt = " ".join(f"{r},{c},{float(v)!r}" for r, c, v in zip(blk.row, blk.col, blk.data) if v != 0.0)
        bb = p.b[sl]
        b_txt = " ".join(f"{r}:{float(bb[r])!r}" for r in np.flatnonzero(bb))
        out.write(f"block {kind} {dim} | A {a_txt} | b {b_txt}\n")
    return out.getvalue()


def loads(text: str) -> ConicProgram:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split() != ["conic-program", "1"]:
        raise ValueError("not a conic-program dump")
    n = int(lines[1].split()[1])
    q = np.zeros(n)
    for tok in lines[2].split()[1:]:
        j, v = tok.split(":")
        q[int(j)] = float(v)
    rows, cols, vals, b_parts, cones = [], [], [], [], []
    offset = 0
    for ln in lines[3:]:
        head, a_part, b_part = (s.strip() for s in ln.split("|"))
        _, kind, dim = head.split()
        dim = int(dim)
        nrows = _cone_rows(kind, dim)
        for tok in a_part.split()[1:]:
            r, c, v = tok.split(",")
            rows.append(offset + int(r))
            cols.append(int(c))
            vals.append(float(v))
        bb = np.zeros(nrows)
        for tok in b_part.split()[1:]:
            r, v = tok.split(":")
            bb[int(r)] = float(v)
        b_parts.append(bb)
        cones.append((kind, dim))
        offset += nrows
    A = sp.csc_matrix((vals, (rows, cols)), shape=(offset, n))
    b = np.concatenate(b_parts) if b_parts else np.zeros(0)
    return ConicProgram(q, A, b, tuple(cones))


def write_dump(p: ConicProgram, path) -> None:
    path = Path(path)
    try:
        path.write_text(dumps(p))
    except OSError as exc:
        raise OSError(f"cannot write program dump to {path}: {exc}") from exc
