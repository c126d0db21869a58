"""Closed-form thermodynamics for perfect gas, stiffened gas and Cochran-Chan.

Internal energy is stored per unit volume (e, J/m^3) throughout the package,
so that the total energy density is E = e + rho*u^2/2.  The Cochran-Chan
material model is written in terms of the specific energy eps = e/rho; the
conversion happens inside this module only.

All operations accept scalars or numpy arrays and are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


class EosError(ValueError):
    """Thermodynamic input outside the domain of the active EOS."""


class HyperbolicityError(EosError):
    """Squared sound speed is non-positive at the given (rho, p)."""

    def __init__(self, rho, p):
        self.rho = rho
        self.p = p
        super().__init__(f"hyperbolicity loss: c^2 <= 0 at rho={rho!r}, p={p!r}")


def _check_density(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise EosError(f"non-positive density: min rho = {np.min(rho)}")
    return rho


@dataclass(frozen=True)
class PerfectGas:
    """p = (gamma - 1) * e with e the internal energy per unit volume."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise EosError(f"perfect gas needs gamma > 1, got {self.gamma}")

    def pressure(self, rho, e):
        _check_density(rho)
        return (self.gamma - 1.0) * np.asarray(e, dtype=float)

    def energy(self, rho, p):
        _check_density(rho)
        return np.asarray(p, dtype=float) / (self.gamma - 1.0)

    def kappa_chi(self, rho, p):
        """(dp/de at fixed rho, dp/drho at fixed e)."""
        rho = _check_density(rho)
        kappa = np.full_like(rho, self.gamma - 1.0)
        return kappa, np.zeros_like(rho)


@dataclass(frozen=True)
class StiffenedGas:
    """p = (gamma - 1) * e - gamma * p_inf (e per unit volume)."""

    gamma: float
    p_inf: float

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise EosError(f"stiffened gas needs gamma > 1, got {self.gamma}")
        if self.p_inf < 0.0:
            raise EosError(f"stiffened gas needs p_inf >= 0, got {self.p_inf}")

    def pressure(self, rho, e):
        _check_density(rho)
        return (self.gamma - 1.0) * np.asarray(e, dtype=float) - self.gamma * self.p_inf

    def energy(self, rho, p):
        _check_density(rho)
        return (np.asarray(p, dtype=float) + self.gamma * self.p_inf) / (self.gamma - 1.0)

    def kappa_chi(self, rho, p):
        rho = _check_density(rho)
        kappa = np.full_like(rho, self.gamma - 1.0)
        return kappa, np.zeros_like(rho)


@dataclass(frozen=True)
class CochranChan:
    """Mie-Gruneisen form p = Gamma*rho*(eps - eps0(rho)) + p0(rho).

    The reference curves are two power laws in rho/rho0:
        p0(rho)   = A1*(rho/rho0)**E1 - A2*(rho/rho0)**E2
        eps0(rho) = A1/(rho0*(E1-1))*(rho/rho0)**(E1-1)
                  - A2/(rho0*(E2-1))*(rho/rho0)**(E2-1)
    """

    rho0: float
    A1: float
    E1: float
    A2: float
    E2: float
    Gamma: float

    def __post_init__(self):
        if self.rho0 <= 0.0:
            raise EosError(f"Cochran-Chan needs rho0 > 0, got {self.rho0}")
        if self.E1 == 1.0 or self.E2 == 1.0:
            raise EosError("Cochran-Chan exponents must differ from 1")
        if self.Gamma <= 0.0:
            raise EosError(f"Cochran-Chan needs Gamma > 0, got {self.Gamma}")

    def _ratio(self, rho):
        return np.asarray(rho, dtype=float) / self.rho0

    def p_ref(self, rho):
        r = self._ratio(rho)
        return self.A1 * r**self.E1 - self.A2 * r**self.E2

    def eps_ref(self, rho):
        r = self._ratio(rho)
        c1 = self.A1 / (self.rho0 * (self.E1 - 1.0))
        c2 = self.A2 / (self.rho0 * (self.E2 - 1.0))
        return c1 * r ** (self.E1 - 1.0) - c2 * r ** (self.E2 - 1.0)

    def dp_ref(self, rho):
        r = self._ratio(rho)
        return (self.A1 * self.E1 * r ** (self.E1 - 1.0)
                - self.A2 * self.E2 * r ** (self.E2 - 1.0)) / self.rho0

    def deps_ref(self, rho):
        r = self._ratio(rho)
        return (self.A1 * r ** (self.E1 - 2.0)
                - self.A2 * r ** (self.E2 - 2.0)) / self.rho0**2

    def pressure(self, rho, e):
        rho = _check_density(rho)
        e = np.asarray(e, dtype=float)
        return self.Gamma * (e - rho * self.eps_ref(rho)) + self.p_ref(rho)

    def energy(self, rho, p):
        rho = _check_density(rho)
        p = np.asarray(p, dtype=float)
        return (p - self.p_ref(rho)) / self.Gamma + rho * self.eps_ref(rho)

    def kappa_chi(self, rho, p):
        rho = _check_density(rho)
        kappa = np.full_like(rho, self.Gamma)
        chi = (-self.Gamma * (self.eps_ref(rho) + rho * self.deps_ref(rho))
               + self.dp_ref(rho))
        return kappa, chi


EosModel = Union[PerfectGas, StiffenedGas, CochranChan]


@dataclass(frozen=True)
class ThermoPoint:
    """A thermodynamic state; fields may be scalars or per-DOF arrays."""

    rho: ArrayLike
    p: ArrayLike
    e: ArrayLike | None = None


def thermo_from_pressure(eos: EosModel, rho, p) -> ThermoPoint:
    return ThermoPoint(rho=rho, p=p, e=eos.energy(rho, p))


def thermo_from_energy(eos: EosModel, rho, e) -> ThermoPoint:
    return ThermoPoint(rho=rho, p=eos.pressure(rho, e), e=e)


def pressure_from_energy(eos: EosModel, rho, e):
    """Pressure from density and internal energy per unit volume."""
    return eos.pressure(rho, e)


def energy_from_pressure(eos: EosModel, rho, p):
    """Internal energy per unit volume from density and pressure."""
    return eos.energy(rho, p)


def sound_speed(eos: EosModel, rho, p):
    """Thermodynamic sound speed, c^2 = dp/drho|e + (dp/de|rho) * (e + p)/rho.

    The density partial vanishes for perfect and stiffened gases, giving the
    familiar c^2 = gamma*(p + p_inf)/rho; for Mie-Gruneisen forms it does not.
    Raises :class:`HyperbolicityError` when c^2 <= 0 anywhere.
    """
    rho = _check_density(rho)
    p = np.asarray(p, dtype=float)
    e = eos.energy(rho, p)
    kappa, chi = eos.kappa_chi(rho, p)
    c2 = chi + kappa * (e + p) / rho
    if np.any(c2 <= 0.0):
        bad = np.argmin(np.asarray(c2))
        raise HyperbolicityError(np.ravel(rho)[bad] if rho.ndim else float(rho),
                                 np.ravel(p)[bad] if p.ndim else float(p))
    return np.sqrt(c2)


def energy_partials(eos: EosModel, rho, p):
    """Analytic (de/drho, de/dp) at fixed p resp. fixed rho, e per volume."""
    rho = _check_density(rho)
    kappa, chi = eos.kappa_chi(rho, p)
    return -chi / kappa, 1.0 / kappa


# Degenerate increments below this relative size fall back to the analytic
# partial at the old state; the difference quotients would divide by ~0.
_DEGENERATE_REL = 1.0e-12


def divided_difference_partials(eos: EosModel, old: ThermoPoint, new: ThermoPoint,
                                lam: float = 0.5):
    """Two-point divided differences of e(p, rho) between two states.

    Returns (tilde_de_drho, tilde_de_dp) such that the increment identity

        tilde_de_dp*(p_new - p_old) + tilde_de_drho*(rho_new - rho_old)
            = e(p_new, rho_new) - e(p_old, rho_old)

    holds exactly (in exact arithmetic) for every blending weight ``lam``.
    Increments smaller than a relative round-off threshold are replaced by
    the analytic partial at the old state.
    """
    rho_o = np.asarray(old.rho, dtype=float)
    p_o = np.asarray(old.p, dtype=float)
    rho_n = np.asarray(new.rho, dtype=float)
    p_n = np.asarray(new.p, dtype=float)

    dp = p_n - p_o
    drho = rho_n - rho_o
    dp_ok = np.abs(dp) > _DEGENERATE_REL * (np.abs(p_o) + np.abs(p_n) + 1.0)
    drho_ok = np.abs(drho) > _DEGENERATE_REL * (np.abs(rho_o) + np.abs(rho_n) + 1.0)

    e_oo = eos.energy(rho_o, p_o)
    e_on = eos.energy(rho_n, p_o)   # old p, new rho
    e_no = eos.energy(rho_o, p_n)   # new p, old rho
    e_nn = eos.energy(rho_n, p_n)

    dp_safe = np.where(dp_ok, dp, 1.0)
    drho_safe = np.where(drho_ok, drho, 1.0)

    de_dp = lam * (e_nn - e_on) / dp_safe + (1.0 - lam) * (e_no - e_oo) / dp_safe
    de_drho = lam * (e_on - e_oo) / drho_safe + (1.0 - lam) * (e_nn - e_no) / drho_safe

    an_drho, an_dp = energy_partials(eos, rho_o, p_o)
    de_dp = np.where(dp_ok, de_dp, an_dp)
    de_drho = np.where(drho_ok, de_drho, an_drho)
    return de_drho, de_dp
