"""Run records shared by every algorithm and benchmark scheme."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .metrics import TxBeams

__all__ = [
    "Termination",
    "SolveReport",
    "SolverFailure",
    "ConstraintViolation",
    "POWER_RTOL",
    "DISK_TOL",
    "check_solution",
    "register_post_hook",
    "remove_post_hook",
]

POWER_RTOL = 1e-6
DISK_TOL = 1e-9


class Termination(str, enum.Enum):
    CONVERGED = "converged"
    OBJECTIVE_DECREASED = "objective_decreased"
    MAX_ITERS = "max_iters"
    SOLVER_FAILURE = "solver_failure"


class SolverFailure(RuntimeError):
    """A conic solve could be neither certified feasible nor infeasible."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class ConstraintViolation(AssertionError):
    pass


def check_solution(beams: TxBeams, v, p_max) -> None:
    """Raise ConstraintViolation unless power and unit-disk constraints hold."""
    p = beams.power()
    p_max = np.asarray(p_max, dtype=float)
    if np.any(p > p_max * (1.0 + POWER_RTOL)):
        raise ConstraintViolation(f"BS power {p} exceeds budget {p_max}")
    v = np.asarray(v)
    if v.size and np.max(np.abs(v)) > 1.0 + DISK_TOL:
        raise ConstraintViolation(f"|v_n| up to {np.max(np.abs(v))!r} > 1")


_POST_HOOKS: list = []


def register_post_hook(fn) -> None:
    """``fn(report)`` runs on every SolveReport as it is created."""
    _POST_HOOKS.append(fn)


def remove_post_hook(fn) -> None:
    if fn in _POST_HOOKS:
        _POST_HOOKS.remove(fn)


@dataclass
class SolveReport:
    algorithm: str
    trace: list
    beams: TxBeams
    v: np.ndarray
    objective: float
    termination: Termination
    iterations: int
    wall_time: float
    p_max: tuple
    half_trace: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.trace) < 1:
            raise ValueError("a report needs at least one trace entry")
        for hook in list(_POST_HOOKS):
            hook(self)

    @property
    def objective_db(self) -> float:
        return float(10.0 * np.log10(self.objective)) if self.objective > 0 else float("-inf")
