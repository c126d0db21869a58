"""1D residual-distribution solver for compressible flow in nonconservative
form, with per-element conservation corrections and exact Riemann baselines."""

from .eos import (CochranChan, EosError, HyperbolicityError, PerfectGas,
                  StiffenedGas, ThermoPoint, divided_difference_partials,
                  energy_from_pressure, energy_partials, pressure_from_energy,
                  sound_speed)
from .mesh import ConfigurationError, Mesh1D, build_mesh, dual_volume, dual_volumes
from .state import PhasePair, SolutionState, cfl_timestep
from .rd_core import StepFailureError, rk2_step
from .config import RunConfig, load_config, write_config
from .cases import builtin_cases, get_case
from .harness import CaseResult, convergence_study, l1_error, run_case, write_outputs
from .riemann import (EulerSide, MixtureRiemannProblem, MixtureSide,
                      OracleError, RiemannProblem, WaveFan, solve_mie_gruneisen,
                      solve_mixture, solve_perfect_gas, solve_stiffened_gas)

__version__ = "0.1.0"
