"""Built-in test-case registry.

Each case is a complete :class:`~ncflow.config.RunConfig`; the CLI and the
acceptance suite override individual fields (formulation, mesh size, ...)
as needed.
"""

from __future__ import annotations

from typing import Dict

from .config import RunConfig
from .eos import CochranChan, PerfectGas, StiffenedGas
from .mesh import ConfigurationError
from .riemann import EulerSide, MixtureSide
from .state import PhasePair

AIR = PerfectGas(gamma=1.4)

# Cochran-Chan parameters for the nitromethane-like solid explosive.
CC_SOLID = CochranChan(rho0=1134.0, A1=0.819181e9, E1=4.52969,
                       A2=1.50835e9, E2=1.42144, Gamma=1.19)

EPOXY = StiffenedGas(gamma=2.43, p_inf=5.3e9)
SPINEL = StiffenedGas(gamma=1.62, p_inf=141.0e9)


def builtin_cases() -> Dict[str, RunConfig]:
    cases = {}

    cases["euler_strong_shock"] = RunConfig(
        name="euler_strong_shock", formulation="conservative",
        x_min=0.0, x_max=1.0, x_d=0.5, n_cells=5000, cfl=0.5,
        t_final=45.0e-6, order=2,
        left=EulerSide(rho=100.0, u=0.0, p=1.0e9),
        right=EulerSide(rho=1.0, u=0.0, p=1.0e5),
        eos=AIR)

    # Pure contact: p and u uniform, 10:1 density jump advecting at 100 m/s.
    cases["gas_contact"] = RunConfig(
        name="gas_contact", formulation="pressure",
        x_min=0.0, x_max=1.0, x_d=0.2, n_cells=200, cfl=0.5,
        t_final=5.2e-3, order=2,
        left=EulerSide(rho=10.0, u=100.0, p=1.0e5),
        right=EulerSide(rho=1.0, u=100.0, p=1.0e5),
        eos=AIR)

    cases["cochran_contact"] = RunConfig(
        name="cochran_contact", formulation="pressure",
        x_min=0.0, x_max=1.0, x_d=0.4, n_cells=1000, cfl=0.5,
        t_final=1.0e-4, order=2,
        left=EulerSide(rho=1134.0, u=1000.0, p=20.0e9),
        right=EulerSide(rho=500.0, u=1000.0, p=20.0e9),
        eos=CC_SOLID)

    cases["cochran_riemann"] = RunConfig(
        name="cochran_riemann", formulation="pressure",
        x_min=0.0, x_max=1.0, x_d=0.5, n_cells=1000, cfl=0.5,
        t_final=50.0e-6, order=2,
        left=EulerSide(rho=1134.0, u=0.0, p=2.0e10),
        right=EulerSide(rho=120.0, u=0.0, p=2.0e5),
        eos=CC_SOLID)

    epoxy_spinel_pair = PhasePair(EPOXY, SPINEL)
    cases["epoxy_spinel"] = RunConfig(
        name="epoxy_spinel", formulation="multiphase",
        x_min=0.0, x_max=1.0, x_d=0.6, n_cells=1000, cfl=0.5,
        t_final=29.0e-6, order=2,
        left=MixtureSide(alpha1=0.5954, rho1=1185.0, rho2=3622.0,
                         u=0.0, p=2.0e11),
        right=MixtureSide(alpha1=0.5954, rho1=1185.0, rho2=3622.0,
                          u=0.0, p=1.0e5),
        pair=epoxy_spinel_pair)

    cases["mixed_eos"] = RunConfig(
        name="mixed_eos", formulation="multiphase",
        x_min=0.0, x_max=1.0, x_d=0.6, n_cells=1000, cfl=0.5,
        t_final=29.0e-6, order=2,
        left=MixtureSide(alpha1=0.5954, rho1=1185.0, rho2=3622.0,
                         u=0.0, p=2.0e11),
        right=MixtureSide(alpha1=0.2, rho1=1185.0, rho2=3622.0,
                          u=0.0, p=1.0e5),
        pair=PhasePair(EPOXY, CC_SOLID))

    # Smooth right-moving acoustic pulse for grid-convergence studies.
    cases["smooth_pulse"] = RunConfig(
        name="smooth_pulse", formulation="conservative",
        x_min=0.0, x_max=1.0, x_d=0.5, n_cells=200, cfl=0.5,
        t_final=0.1, order=2,
        left=EulerSide(rho=1.0, u=0.0, p=1.0),
        right=EulerSide(rho=1.0, u=0.0, p=1.0),
        eos=AIR, oracle="none", ic_kind="acoustic_pulse",
        pulse_amplitude=0.05, pulse_center=0.35, pulse_width=0.15)

    return cases


def get_case(name: str) -> RunConfig:
    cases = builtin_cases()
    if name not in cases:
        known = ", ".join(sorted(cases))
        raise ConfigurationError(f"unknown case {name!r}; known cases: {known}")
    return cases[name]
