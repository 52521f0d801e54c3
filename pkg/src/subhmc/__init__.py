"""A numerical laboratory for Hamiltonian Monte Carlo with data subsampling.

The library builds conjugate-Gaussian posteriors with closed-form oracles,
integrates Hamiltonian trajectories under several data-subsampling schedules,
runs HMC chains with full-data acceptance diagnostics, and drives the
experiment scenarios exposed by the ``subhmc`` command line tool.
"""

from subhmc.config import SCHEMA, defaults, load_config
from subhmc.core import (
    ConfigurationError,
    DivergenceError,
    Hamiltonian,
    KineticEnergy,
    PhaseState,
    PotentialOracle,
    ZeroPotential,
    hamiltonian_value,
    kinetic_gradient,
    sample_momentum,
    substream,
)
from subhmc.expt import SCENARIOS, ScenarioResult, calibrate_eps
from subhmc.integrate import (
    DIVERGENCE_JUMP,
    FixedBatch,
    Full,
    PartialSymmetricSweep,
    PerStepRandom,
    PerTrajectoryRandom,
    SymmetricSweep,
    TrajectoryRecord,
    endpoint_error,
    integrate,
    leapfrog_step,
    record_to_csv,
    symmetric_sweep,
)
from subhmc.model import (
    DataSet,
    ModelConfig,
    ModelContext,
    QuadraticForm,
    analytic_posterior,
    batch_potential,
    exact_flow,
    full_potential,
    generate_data,
    make_context,
    subsample_potential,
    to_quadratic,
)
from subhmc.sampler import (
    ChainRun,
    ChainSummary,
    SamplerConfig,
    acceptance_probability,
    run_chain,
    trace_to_csv,
)

__all__ = [
    "SCHEMA",
    "SCENARIOS",
    "DIVERGENCE_JUMP",
    "ChainRun",
    "ChainSummary",
    "ConfigurationError",
    "DataSet",
    "DivergenceError",
    "FixedBatch",
    "Full",
    "Hamiltonian",
    "KineticEnergy",
    "ModelConfig",
    "ModelContext",
    "PartialSymmetricSweep",
    "PerStepRandom",
    "PerTrajectoryRandom",
    "PhaseState",
    "PotentialOracle",
    "QuadraticForm",
    "SamplerConfig",
    "ScenarioResult",
    "SymmetricSweep",
    "TrajectoryRecord",
    "ZeroPotential",
    "acceptance_probability",
    "analytic_posterior",
    "batch_potential",
    "calibrate_eps",
    "defaults",
    "endpoint_error",
    "exact_flow",
    "full_potential",
    "generate_data",
    "hamiltonian_value",
    "integrate",
    "kinetic_gradient",
    "leapfrog_step",
    "load_config",
    "make_context",
    "record_to_csv",
    "run_chain",
    "sample_momentum",
    "subsample_potential",
    "substream",
    "symmetric_sweep",
    "to_quadratic",
    "trace_to_csv",
]

__version__ = "0.1.0"
