"""Experiment configuration, seeded sweeps and CSV output.

A sweep varies one scenario parameter over a list of values and runs every
requested scheme on every seed.  Channels (and random user positions) are
a pure function of ``(scenario, seed)``, so the rows of one scheme never
depend on which other schemes share the sweep.

Experiment files are JSON documents mirroring :class:`ExperimentSpec`;
fields carrying a unit say so in their name (``p_max_dbm``, ``d_user_m``).
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .bench import SchemeInapplicable, parse_scheme, run_scheme, scheme_name
from .model import PathlossExponents, SystemConfig, db_to_linear, dbm_to_watt, sample_channels
from .report import SolverFailure

__all__ = [
    "AXES",
    "PLACEMENTS",
    "CSV_HEADER",
    "WORKERS_ENV",
    "Scenario",
    "ExperimentSpec",
    "ResultRow",
    "default_scenario",
    "build_config",
    "user_positions",
    "run_sweep",
    "write_csv",
    "read_csv",
    "load_spec",
]

AXES = ("M", "P_max_dBm", "N", "d_user", "users_per_cell", "num_randomizations")
PLACEMENTS = ("fixed", "random_triangle", "cell_edge_disks")
CSV_HEADER = ("seed", "scheme", "axis", "axis_value", "min_sinr_db", "iters", "wall_ms", "termination")
WORKERS_ENV = "IRS_MAXMIN_WORKERS"

# random user positions use their own substream family, disjoint from the
# channel draws in the model module
_PLACEMENT_KEY = 3

_EDGE_BS = ((-100.0, 0.0), (100.0, 0.0))
_EDGE_CENTERS = ((-10.0, 0.0), (10.0, 0.0))
_EDGE_RADIUS = 10.0


@dataclass(frozen=True)
class Scenario:
    """Scenario parameters from which a :class:`SystemConfig` is built.

    ``placement`` selects the geometry:

    * ``fixed`` -- BSs at (-100, 0), (100, 0), (0, 100) m, one user per cell
      at (-d_user, 0), (d_user, 0), (0, d_user);
    * ``random_triangle`` -- same BSs, one user per cell drawn uniformly in
      the triangle spanned by the BSs;
    * ``cell_edge_disks`` -- two BSs at (+-100, 0) m, ``users_per_cell``
      users per cell drawn uniformly in radius-10 m disks centered at
      (-10, 0) and (10, 0).

    The IRS sits at ``(0, -d_irs)``.
    """

    M: int = 3
    N: int = 20
    p_max_dbm: float = 35.0
    noise_dbm: float = -80.0
    alpha: float = 1.0
    d_user_m: float = 5.0
    d_irs_m: float = 10.0
    users_per_cell: int = 1
    placement: str = "fixed"
    c0_db: float = -30.0
    d0_m: float = 1.0
    exponent_bs_user: float = 3.6
    exponent_bs_irs: float = 2.0
    exponent_irs_user: float = 2.5
    rician_k: float = 2.0

    def __post_init__(self):
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}, got {self.placement!r}")
        if int(self.M) != self.M or self.M < 1 or int(self.N) != self.N or self.N < 1:
            raise ValueError("M and N must be positive integers")
        if int(self.users_per_cell) != self.users_per_cell or self.users_per_cell < 1:
            raise ValueError("users_per_cell must be a positive integer")
        if self.placement != "cell_edge_disks" and self.users_per_cell != 1:
            raise ValueError(f"placement {self.placement!r} has one user per cell")
        if not self.d_user_m > 0 or not self.d0_m > 0 or not self.alpha > 0:
            raise ValueError("d_user_m, d0_m and alpha must be positive")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "users_per_cell", int(self.users_per_cell))

    @property
    def bs_positions(self) -> tuple:
        if self.placement == "cell_edge_disks":
            return _EDGE_BS
        return ((-100.0, 0.0), (100.0, 0.0), (0.0, 100.0))

    @property
    def num_cells(self) -> int:
        return len(self.bs_positions)


def _uniform_triangle(rng: np.random.Generator, tri) -> tuple:
    a, b, c = (np.asarray(p, dtype=float) for p in tri)
    r1, r2 = rng.uniform(size=2)
    if r1 + r2 > 1.0:
        r1, r2 = 1.0 - r1, 1.0 - r2
    p = a + r1 * (b - a) + r2 * (c - a)
    return float(p[0]), float(p[1])


def _uniform_disk(rng: np.random.Generator, center, radius: float) -> tuple:
    r = radius * math.sqrt(rng.uniform())
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return center[0] + r * math.cos(phi), center[1] + r * math.sin(phi)


def user_positions(sc: Scenario, seed: int) -> tuple:
    """User coordinates in linear user order; random modes depend only on ``seed``."""
    if sc.placement == "fixed":
        d = float(sc.d_user_m)
        return ((-d, 0.0), (d, 0.0), (0.0, d))
    out = []
    for b in range(sc.num_cells):
        for k in range(sc.users_per_cell):
            rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(_PLACEMENT_KEY, b, k)))
            if sc.placement == "random_triangle":
                out.append(_uniform_triangle(rng, sc.bs_positions))
            else:
                out.append(_uniform_disk(rng, _EDGE_CENTERS[b], _EDGE_RADIUS))
    return tuple(out)


def build_config(sc: Scenario, seed: int = 0) -> SystemConfig:
    """System configuration of ``sc``; ``seed`` only matters for random placements."""
    B = sc.num_cells
    K = B * sc.users_per_cell
    return SystemConfig(
        users_per_cell=(sc.users_per_cell,) * B,
        M=sc.M,
        N=sc.N,
        p_max=[float(dbm_to_watt(sc.p_max_dbm))] * B,
        alpha=[sc.alpha] * K,
        sigma2=[float(dbm_to_watt(sc.noise_dbm))] * K,
        bs_positions=sc.bs_positions,
        user_positions=user_positions(sc, seed),
        irs_position=(0.0, -float(sc.d_irs_m)),
        exponents=PathlossExponents(sc.exponent_bs_user, sc.exponent_bs_irs, sc.exponent_irs_user),
        c0=float(db_to_linear(sc.c0_db)),
        d0=sc.d0_m,
        rician_k=sc.rician_k,
    )


def default_scenario() -> SystemConfig:
    """Three cells, one user each, M = 3, N = 20, P_max = 35 dBm, noise -80 dBm."""
    return build_config(Scenario())


@dataclass(frozen=True)
class ExperimentSpec:
    base: Scenario
    axis: str
    values: tuple
    schemes: tuple
    seeds: tuple
    output: str = "results.csv"
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "schemes", tuple(scheme_name(parse_scheme(s)) for s in self.schemes))
        if not self.values or not self.seeds or not self.schemes:
            raise ValueError("values, seeds and schemes must be nonempty")
        for v in self.values:
            self.scenario_at(v)  # validates the value against the base scenario
            if self.axis == "num_randomizations" and (int(v) != v or v < 1):
                raise ValueError(f"num_randomizations must be a positive integer, got {v!r}")
        for name in self.overrides:
            parse_scheme(name)

    def scenario_at(self, value) -> Scenario:
        if self.axis == "M":
            return replace(self.base, M=value)
        if self.axis == "N":
            return replace(self.base, N=value)
        if self.axis == "P_max_dBm":
            return replace(self.base, p_max_dbm=float(value))
        if self.axis == "d_user":
            return replace(self.base, d_user_m=float(value))
        if self.axis == "users_per_cell":
            return replace(self.base, users_per_cell=value)
        return self.base

    def options_for(self, scheme: str, value) -> dict:
        """Tuning options for one run: inner-algorithm overrides, then the scheme's own, then the axis."""
        sch = parse_scheme(scheme)
        opts = {}
        inner = getattr(sch, "inner", None)
        if inner is not None:
            opts.update(self.overrides.get(inner.value, {}))
        opts.update(self.overrides.get(scheme, {}))
        if self.axis == "num_randomizations" and (inner or sch).value == "exact_ao":
            opts["num_rand"] = int(value)
        return opts

    def to_json(self) -> str:
        d = {
            "base": asdict(self.base),
            "axis": self.axis,
            "values": list(self.values),
            "schemes": list(self.schemes),
            "seeds": list(self.seeds),
            "output": self.output,
            "overrides": self.overrides,
        }
        return json.dumps(d, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        d = json.loads(text)
        seeds = d["seeds"]
        if isinstance(seeds, dict):
            seeds = range(int(seeds.get("start", 0)), int(seeds["stop"]))
        return cls(
            base=Scenario(**d.get("base", {})),
            axis=d["axis"],
            values=tuple(d["values"]),
            schemes=tuple(d["schemes"]),
            seeds=tuple(seeds),
            output=d.get("output", "results.csv"),
            overrides=dict(d.get("overrides", {})),
        )


def load_spec(path) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read experiment file {path}: {exc}") from exc
    return ExperimentSpec.from_json(text)


@dataclass(frozen=True)
class ResultRow:
    seed: int
    scheme: str
    axis: str
    axis_value: float
    min_sinr_db: float
    iters: int
    wall_ms: float
    termination: str

    def sort_key(self):
        return (self.axis_value, self.scheme, self.seed)


def _run_one(spec: ExperimentSpec, value, scheme: str, seed: int) -> ResultRow:
    start = time.perf_counter()
    try:
        cfg = build_config(spec.scenario_at(value), seed)
        rep = run_scheme(scheme, sample_channels(cfg, seed), cfg, seed, **spec.options_for(scheme, value))
        return ResultRow(seed, scheme, spec.axis, float(value), rep.objective_db, rep.iterations,
                         rep.wall_time * 1e3, rep.termination.value)
    except SchemeInapplicable:
        reason = "inapplicable"
    except SolverFailure:
        reason = "solver_failure"
    except (ArithmeticError, ValueError, np.linalg.LinAlgError):
        reason = "error"
    return ResultRow(seed, scheme, spec.axis, float(value), math.nan, 0,
                     (time.perf_counter() - start) * 1e3, reason)


def _run_task(args) -> ResultRow:
    return _run_one(*args)


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    return max(1, n)


def run_sweep(spec: ExperimentSpec, workers: int | None = None) -> list:
    """One row per (axis value, scheme, seed), sorted in that order.

    ``workers`` (default: the ``IRS_MAXMIN_WORKERS`` environment variable,
    else 1) sets the number of worker processes.  Failed runs become rows
    with a failure reason and a NaN objective; the sweep carries on.
    """
    tasks = [(spec, v, s, seed) for v in spec.values for s in spec.schemes for seed in spec.seeds]
    n = _workers() if workers is None else max(1, int(workers))
    if n == 1:
        rows = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(_run_task, tasks))
    return sorted(rows, key=ResultRow.sort_key)


def _fmt_value(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() else repr(float(x))


def write_csv(rows, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for r in rows:
                w.writerow([r.seed, r.scheme, r.axis, _fmt_value(r.axis_value), f"{r.min_sinr_db:.6g}",
                            r.iters, f"{r.wall_ms:.3f}", r.termination])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_csv(path) -> list:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != CSV_HEADER:
                raise ValueError(f"{path}: unexpected header {header}")
            return [
                ResultRow(int(r[0]), r[1], r[2], float(r[3]), float(r[4]), int(r[5]), float(r[6]), r[7])
                for r in reader
            ]
    except OSError as exc:
        raise OSError(f"cannot read results from {path}: {exc}") from exc
