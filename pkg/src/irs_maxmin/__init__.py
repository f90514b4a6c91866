"""Max-min weighted SINR design for IRS-aided multi-cell MISO downlinks.

Modules
-------
model       geometry, path loss and seeded channel sampling
metrics     SINR evaluation and quadratic forms in the reflect vector
conic       cone-program container and the solver contract
exact_ao    bisection SOCP transmit step plus SDR reflect step
inexact_ao  one SOCP plus one SCA program per iteration
lowcx_ao    SOCP transmit step plus subgradient-projection reflect step
bench       MRT/ZF/random-reflect/no-IRS benchmarks, unit-amplitude wrapper
harness     experiment specs, seeded sweeps, CSV output
"""

from .bench import Scheme, UnitAmplitude, run_scheme
from .exact_ao import run_exact_ao
from .harness import ExperimentSpec, Scenario, default_scenario, run_sweep, write_csv
from .inexact_ao import run_inexact_ao
from .lowcx_ao import run_lowcx_ao
from .model import SystemConfig, sample_channels
from .report import SolveReport, Termination

__version__ = "0.1.0"

__all__ = [
    "Scheme",
    "UnitAmplitude",
    "run_scheme",
    "run_exact_ao",
    "run_inexact_ao",
    "run_lowcx_ao",
    "ExperimentSpec",
    "Scenario",
    "default_scenario",
    "run_sweep",
    "write_csv",
    "SystemConfig",
    "sample_channels",
    "SolveReport",
    "Termination",
]
