"""Solution storage per formulation and CFL time-step selection.

A :class:`SolutionState` holds one row of unknowns per DOF:

    conservative : rho, m, E
    energy       : rho, m, e      (e per unit volume)
    pressure     : rho, m, p
    multiphase   : alpha1, alpha1*rho1, alpha2*rho2, m, p

with m = rho*u the momentum density.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from . import eos as _eos
from .eos import EosModel
from .mesh import Mesh1D

FORMULATIONS = ("conservative", "energy", "pressure", "multiphase")

N_VARS = {"conservative": 3, "energy": 3, "pressure": 3, "multiphase": 5}

# Clip window keeping volume fractions strictly inside (0, 1); the interface
# coefficient K and the Wood sound speed degenerate at the endpoints.
ALPHA_CLIP = 1.0e-8


@dataclass(frozen=True)
class PhasePair:
    """The two phase EOS closing the five-equation model."""

    eos1: EosModel
    eos2: EosModel


EosContext = Union[EosModel, PhasePair]


@dataclass
class SolutionState:
    formulation: str
    q: np.ndarray          # (n_dofs, n_vars)
    time: float = 0.0

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r}")
        if self.q.ndim != 2 or self.q.shape[1] != N_VARS[self.formulation]:
            raise ValueError(
                f"state array shape {self.q.shape} does not match "
                f"{self.formulation!r}")

    @property
    def n_dofs(self) -> int:
        return self.q.shape[0]

    def copy(self) -> "SolutionState":
        return replace(self, q=self.q.copy())


def mixture_density(q: np.ndarray) -> np.ndarray:
    """Mixture density alpha1*rho1 + alpha2*rho2 of a multiphase state array."""
    return q[..., 1] + q[..., 2]


def density(state: SolutionState) -> np.ndarray:
    if state.formulation == "multiphase":
        return mixture_density(state.q)
    return state.q[:, 0]


def velocity(state: SolutionState) -> np.ndarray:
    if state.formulation == "multiphase":
        return state.q[:, 3] / mixture_density(state.q)
    return state.q[:, 1] / state.q[:, 0]


def pressure(state: SolutionState, ctx: EosContext) -> np.ndarray:
    rho = density(state)
    u = velocity(state)
    q = state.q
    if state.formulation == "pressure":
        return q[:, 2].copy()
    if state.formulation == "multiphase":
        return q[:, 4].copy()
    if state.formulation == "energy":
        return np.asarray(_eos.pressure_from_energy(ctx, rho, q[:, 2]))
    e = q[:, 2] - 0.5 * rho * u * u
    return np.asarray(_eos.pressure_from_energy(ctx, rho, e))


def internal_energy(state: SolutionState, ctx: EosContext) -> np.ndarray:
    """Internal energy per unit volume (mixture value for multiphase)."""
    q = state.q
    if state.formulation == "energy":
        return q[:, 2].copy()
    if state.formulation == "conservative":
        rho = q[:, 0]
        return q[:, 2] - 0.5 * q[:, 1] ** 2 / rho
    if state.formulation == "pressure":
        return np.asarray(_eos.energy_from_pressure(ctx, q[:, 0], q[:, 2]))
    alpha1 = q[:, 0]
    alpha2 = 1.0 - alpha1
    rho1 = q[:, 1] / alpha1
    rho2 = q[:, 2] / alpha2
    e1 = np.asarray(_eos.energy_from_pressure(ctx.eos1, rho1, q[:, 4]))
    e2 = np.asarray(_eos.energy_from_pressure(ctx.eos2, rho2, q[:, 4]))
    return alpha1 * e1 + alpha2 * e2


def euler_state_from_primitives(formulation: str, rho, u, p, eos: EosModel,
                                time: float = 0.0) -> SolutionState:
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    p = np.asarray(p, dtype=float)
    m = rho * u
    if formulation == "pressure":
        third = p
    else:
        e = np.asarray(_eos.energy_from_pressure(eos, rho, p))
        third = e + 0.5 * rho * u * u if formulation == "conservative" else e
    return SolutionState(formulation, np.column_stack([rho, m, third]), time)


def multiphase_state_from_primitives(alpha1, rho1, rho2, u, p,
                                     time: float = 0.0) -> SolutionState:
    alpha1 = np.clip(np.asarray(alpha1, dtype=float), ALPHA_CLIP, 1.0 - ALPHA_CLIP)
    rho1 = np.asarray(rho1, dtype=float)
    rho2 = np.asarray(rho2, dtype=float)
    alpha2 = 1.0 - alpha1
    rho = alpha1 * rho1 + alpha2 * rho2
    q = np.column_stack([alpha1, alpha1 * rho1, alpha2 * rho2,
                         rho * np.asarray(u, dtype=float),
                         np.broadcast_to(np.asarray(p, dtype=float), rho.shape)])
    return SolutionState("multiphase", q, time)


def convert(state: SolutionState, to_formulation: str, eos: EosModel) -> SolutionState:
    """Convert between the three single-phase variable sets via the EOS."""
    if state.formulation == "multiphase" or to_formulation == "multiphase":
        raise ValueError("multiphase states cannot be converted")
    rho = density(state)
    u = velocity(state)
    p = pressure(state, eos)
    return euler_state_from_primitives(to_formulation, rho, u, p, eos, state.time)


def max_wave_speed(state: SolutionState, ctx: EosContext) -> float:
    """max over DOFs of |u| + c, with c the mixture sound speed for multiphase."""
    u = velocity(state)
    if state.formulation == "multiphase":
        from .multiphase import mixture_sound_speed  # avoid a cyclic import
        c = mixture_sound_speed(ctx, state.q)
    else:
        rho = density(state)
        p = pressure(state, ctx)
        c = np.asarray(_eos.sound_speed(ctx, rho, p))
    return float(np.max(np.abs(u) + c))


def cfl_timestep(state: SolutionState, mesh: Mesh1D, ctx: EosContext,
                 cfl: float) -> float:
    """dt = cfl * h / max(|u| + c)."""
    if not 0.0 < cfl <= 1.0:
        raise ValueError(f"CFL number must lie in (0, 1], got {cfl}")
    return cfl * mesh.h / max_wave_speed(state, ctx)
