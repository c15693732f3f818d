"""Critical branching random walks and SIR epidemics on Z^2 and Z^3.

Subsystems:

- lattice_kernel: exact step kernels P_n, Green sums G_n, Gaussian
  comparison kernels, and the rescaled Green average diagnostic.
- kernel_bounds: deterministic scan suites for the Gaussian domination
  inequalities, with empirical constants.
- fields: sparse particle fields, mass-space rescaling, and the initial
  configuration families with their spread validators.
- offspring: the reproduction laws (per-neighbor binomial envelope,
  unit-mean Poisson, custom finite laws).
- brw_sim: branching random walk simulation (single runs and replicated
  ensembles).
- sir_sim: lattice SIR epidemics, the label coupling with its collision
  and errant-attempt counters, and the modified single-failure epidemic.
- exact_moments: closed-form mean/second-moment fields, occupation-MGF and
  cumulant recursions, and the exhaustive enumeration oracle.
- likelihood: epidemic-vs-envelope log likelihood ratios and martingale
  test functionals.
- experiments / config / cli: reproducible experiment drivers behind the
  `epibranch` command.
"""

from .brw_sim import Trajectory, brw_run, brw_step
from .engine import (
    MomentRecorder,
    OccupationRecorder,
    PairingRecorder,
    PowerRecorder,
    run_ensemble,
)
from .errors import (
    CapacityError,
    ConfigError,
    DivergenceError,
    EpibranchError,
    ExplosionError,
    HorizonError,
)
from .exact_moments import (
    CumulantTable,
    brute_force_mgf,
    cumulant_recursion,
    cumulant_time_increment,
    iterated_cumulant,
    mean_fields,
    nu_recursion,
    nu_time_increment,
    pairing_function,
    second_moment,
)
from .experiments import (
    DiagnosticReport,
    converge_run,
    importance_diagnostic,
    ks_two_sample,
    mean_check,
    occupation_time_stat,
    threshold_sweep,
)
from .fields import (
    InitialConfigFamily,
    LatticeField,
    ball_bounded_family,
    build_family,
    feller_pairing,
    point_mass_family,
    point_spread_family,
    radial_spike_family,
    validate_spread,
)
from .kernel_bounds import SUITE_IDS, BoundReport, BoundScan, default_scan, verify_bounds
from .lattice_kernel import (
    BoxFunction,
    GaussKernel,
    KernelTable,
    RescaledGreenField,
    TestFunction,
    WalkSpec,
    build_kernel_table,
    green_checkpoints,
    green_convolve,
    green_interpolate,
    rescaled_green_field,
    verify_table_invariants,
)
from .likelihood import (
    ImportanceReport,
    functional_battery,
    importance_battery,
    importance_check,
    log_lr,
)
from .offspring import OffspringLaw, binomial_envelope, custom_law, poisson_unit
from .sir_sim import CoupledReport, EpidemicHistory, coupled_run, kappa, sir_run

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "BoundScan",
    "BoxFunction",
    "CapacityError",
    "ConfigError",
    "CoupledReport",
    "CumulantTable",
    "DiagnosticReport",
    "DivergenceError",
    "EpibranchError",
    "EpidemicHistory",
    "ExplosionError",
    "GaussKernel",
    "HorizonError",
    "ImportanceReport",
    "InitialConfigFamily",
    "KernelTable",
    "LatticeField",
    "MomentRecorder",
    "OccupationRecorder",
    "OffspringLaw",
    "PairingRecorder",
    "PowerRecorder",
    "RescaledGreenField",
    "SUITE_IDS",
    "TestFunction",
    "Trajectory",
    "WalkSpec",
    "ball_bounded_family",
    "binomial_envelope",
    "brute_force_mgf",
    "brw_run",
    "brw_step",
    "build_family",
    "build_kernel_table",
    "converge_run",
    "coupled_run",
    "cumulant_recursion",
    "cumulant_time_increment",
    "custom_law",
    "default_scan",
    "feller_pairing",
    "functional_battery",
    "green_checkpoints",
    "green_convolve",
    "green_interpolate",
    "importance_battery",
    "importance_check",
    "importance_diagnostic",
    "iterated_cumulant",
    "kappa",
    "ks_two_sample",
    "log_lr",
    "mean_check",
    "mean_fields",
    "nu_recursion",
    "nu_time_increment",
    "occupation_time_stat",
    "pairing_function",
    "point_mass_family",
    "point_spread_family",
    "poisson_unit",
    "radial_spike_family",
    "rescaled_green_field",
    "run_ensemble",
    "second_moment",
    "sir_run",
    "threshold_sweep",
    "validate_spread",
    "verify_bounds",
    "verify_table_invariants",
    "__version__",
]
