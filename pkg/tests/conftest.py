import numpy as np
import pytest

from irs_maxmin.bench import run_scheme
from irs_maxmin.harness import default_scenario
from irs_maxmin.model import sample_channels
from irs_maxmin.report import check_solution, register_post_hook, remove_post_hook

NUM_SEEDS = 100


class HygieneAudit:
    """Post-hook checking power and unit-disk feasibility of every report."""

    def __init__(self):
        self.checked = 0
        self.violations = []

    def __call__(self, report):
        self.checked += 1
        try:
            check_solution(report.beams, report.v, report.p_max)
        except AssertionError as exc:
            self.violations.append((report.algorithm, str(exc)))
            raise


AUDIT = HygieneAudit()


def pytest_configure(config):
    register_post_hook(AUDIT)


def pytest_unconfigure(config):
    remove_post_hook(AUDIT)


@pytest.fixture(scope="session")
def hygiene_audit():
    return AUDIT


class SchemeRuns:
    """Lazily computed per-scheme reports on seeds ``0 .. n-1`` of one configuration."""

    def __init__(self, config, n):
        self.config = config
        self.n = n
        self._runs = {}

    def __call__(self, scheme, **options):
        key = (str(scheme), tuple(sorted(options.items())))
        if key not in self._runs:
            reps = []
            for seed in range(self.n):
                ch = sample_channels(self.config, seed)
                reps.append(run_scheme(scheme, ch, self.config, seed, **options))
            self._runs[key] = reps
        return self._runs[key]

    def mean_objective(self, scheme, **options):
        return float(np.mean([r.objective for r in self(scheme, **options)]))

    def mean_time(self, scheme, **options):
        return float(np.mean([r.wall_time for r in self(scheme, **options)]))


@pytest.fixture(scope="session")
def default_runs():
    return SchemeRuns(default_scenario(), NUM_SEEDS)


class AcceptanceLog:
    """PASS/FAIL verdicts of the acceptance criteria, printed at the end of the run."""

    def __init__(self):
        self.lines = {}

    def record(self, number, title, passed, detail):
        line = f"criterion {number!s:>3} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        self.lines[number] = line
        print(line)
        return passed


ACCEPTANCE = AcceptanceLog()


@pytest.fixture(scope="session")
def acceptance():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE.lines:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE.lines.values():
            terminalreporter.write_line(line)
