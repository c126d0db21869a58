"""Formulation-agnostic residual-distribution machinery.

Every element carries two DOFs.  A stage residual for an element is split as

    Phi_sigma = centered/2 + alpha_K * (q_bar_sigma - q_hat_K)

where ``centered`` is the element integral of the space-time operator (time
increment plus flux difference or nonconservative quadrature), ``q_bar`` the
per-DOF average of the two stage levels and ``q_hat`` its element mean, so the
dissipation telescopes to zero in the element sum.  A characteristic blended
limiter then redistributes the per-DOF shares without changing element totals.

Everything here is vectorized over elements; arrays are shaped
``(n_elements, 2, n_vars)`` for per-DOF data and ``(n_elements, n_vars)`` for
element totals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Tuple

import numpy as np

from . import eos as _eos
from .eos import EosModel, HyperbolicityError
from .state import SolutionState

N_DOF_PER_ELEMENT = 2
N_GHOST = 2


class StepFailureError(RuntimeError):
    """A stage update produced an inadmissible state."""

    def __init__(self, message: str, stage: int | None = None,
                 dof: int | None = None):
        self.stage = stage
        self.dof = dof
        super().__init__(message)


# ---------------------------------------------------------------------------
# ghost padding, element gather/scatter
# ---------------------------------------------------------------------------

def pad_ghosts(q: np.ndarray) -> np.ndarray:
    """Append two zero-gradient ghost DOFs per side (transmissive boundary)."""
    return np.concatenate([q[:1], q[:1], q, q[-1:], q[-1:]], axis=0)


def element_dof_indices(n_dofs: int) -> Tuple[np.ndarray, np.ndarray]:
    """Left/right padded-DOF indices of all assembled elements.

    Covers the real elements plus one ghost element per side; the outermost
    ghost elements touch only ghost DOFs and are skipped.
    """
    left = np.arange(1, n_dofs + N_GHOST)
    return left, left + 1


def gather(q_padded: np.ndarray, left: np.ndarray) -> np.ndarray:
    """(n_padded, v) -> (n_el, 2, v) element endpoint values."""
    return np.stack([q_padded[left], q_padded[left + 1]], axis=1)


def scatter_add(per_dof: np.ndarray, left: np.ndarray, n_dofs: int) -> np.ndarray:
    """Accumulate per-DOF element residuals onto the real DOFs.

    The accumulation order is fixed (element order), so runs are
    bit-reproducible.
    """
    acc = np.zeros((n_dofs + 2 * N_GHOST, per_dof.shape[2]))
    np.add.at(acc, left, per_dof[:, 0, :])
    np.add.at(acc, left + 1, per_dof[:, 1, :])
    return acc[N_GHOST:-N_GHOST]


def element_time_integral(q0_el: np.ndarray, ql_el: np.ndarray, h: float,
                          dt: float) -> np.ndarray:
    """Trapezoidal integral of (q^(l) - q^(0))/dt over each element."""
    return 0.5 * h * (ql_el - q0_el).sum(axis=1) / dt


def flux_difference(f0_el: np.ndarray, fl_el: np.ndarray) -> np.ndarray:
    """Boundary flux difference with the two time levels averaged."""
    f_bar = 0.5 * (f0_el + fl_el)
    return f_bar[:, 1, :] - f_bar[:, 0, :]


# ---------------------------------------------------------------------------
# Rusanov split and blended limiter
# ---------------------------------------------------------------------------

def rusanov_residuals(q_bar: np.ndarray, centered: np.ndarray,
                      alpha: np.ndarray) -> np.ndarray:
    """Equal split of the centered integral plus spectral-radius dissipation.

    ``q_bar`` is the per-DOF average of the two stage levels, shape
    (n_el, 2, v); ``centered`` the element space-time integral (n_el, v);
    ``alpha`` the per-element dissipation coefficient.  The per-DOF deviation
    from the element mean is computed antisymmetrically, so the dissipation
    telescopes to zero bitwise and the residuals sum exactly to ``centered``.
    """
    half = centered / N_DOF_PER_ELEMENT
    diss = 0.5 * alpha[:, None] * (q_bar[:, 0, :] - q_bar[:, 1, :])
    return np.stack([half + diss, half - diss], axis=1)


def element_totals(per_dof: np.ndarray) -> np.ndarray:
    return per_dof.sum(axis=1)


@dataclass
class Eigensystem:
    """Eigen-decomposition of the quasilinear Jacobian at the element state."""

    values: np.ndarray   # (n_el, k)
    right: np.ndarray    # (n_el, v, k), column xi is the right eigenvector
    left: np.ndarray     # (n_el, k, v), row xi is the dual left eigenvector
    state: np.ndarray    # (n_el, v) evaluation state


def _left_from_right(right: np.ndarray) -> np.ndarray:
    """Invert the eigenvector matrix with per-row scaling for conditioning."""
    scale = np.max(np.abs(right), axis=2)
    scale = np.where(scale > 0.0, scale, 1.0)
    left = np.linalg.inv(right / scale[:, :, None])
    return left / scale[:, None, :]


# Exponent of the oscillation sensor in the blend.  The sensor
# |total| / sum|components| is O(1) at discontinuities and O(h^2) on smooth
# data; raising it sharpens the selection of the limited distribution in
# smooth regions (restoring second order) while keeping theta in [0, 1].
BLEND_SENSOR_POWER = 3.0


def blend_residuals(per_dof: np.ndarray, eig: Eigensystem) -> np.ndarray:
    """Characteristic blended limiting, preserving element totals per field.

    Each characteristic component is redistributed as a convex combination of
    the positivity-limited weights applied to the field total, blended with
    the raw split through the oscillation indicator
    theta = (|total| / sum_dof |component|)**BLEND_SENSOR_POWER, which lies
    in [0, 1].  Fields whose total vanishes keep their raw values.
    """
    phi = np.einsum("nxv,ndv->ndx", eig.left, per_dof)
    tot = phi.sum(axis=1)
    abssum = np.abs(phi).sum(axis=1)
    active = tot != 0.0

    tot_safe = np.where(active, tot, 1.0)
    sensor = np.abs(tot) / np.where(abssum > 0.0, abssum, 1.0)
    theta = np.where(active, sensor**BLEND_SENSOR_POWER, 1.0)

    ratio = phi / tot_safe[:, None, :]
    pos = np.maximum(ratio, 0.0)
    wsum = pos.sum(axis=1)           # >= 1 whenever the total is nonzero
    weights = pos / np.where(wsum > 0.0, wsum, 1.0)[:, None, :]
    limited = weights * tot[:, None, :]

    th = theta[:, None, :]
    blended = np.where(active[:, None, :], (1.0 - th) * limited + th * phi, phi)
    out = np.einsum("nvx,ndx->ndv", eig.right, blended)
    # re-center so element totals survive the eigenvector round trip exactly
    drift = out.sum(axis=1) - per_dof.sum(axis=1)
    out -= 0.5 * drift[:, None, :]
    return out


# ---------------------------------------------------------------------------
# quasilinear Jacobians and eigensystems (single-phase variable sets)
# ---------------------------------------------------------------------------

def _decode_euler(formulation: str, q: np.ndarray, eos: EosModel):
    rho = q[..., 0]
    u = q[..., 1] / rho
    if formulation == "conservative":
        e = q[..., 2] - 0.5 * rho * u * u
        p = np.asarray(_eos.pressure_from_energy(eos, rho, e))
    elif formulation == "energy":
        e = q[..., 2]
        p = np.asarray(_eos.pressure_from_energy(eos, rho, e))
    elif formulation == "pressure":
        p = q[..., 2]
        e = np.asarray(_eos.energy_from_pressure(eos, rho, p))
    else:
        raise ValueError(f"not a single-phase formulation: {formulation!r}")
    return rho, u, p, e


def euler_characteristic_speeds(formulation: str, q: np.ndarray, eos: EosModel):
    rho, u, p, e = _decode_euler(formulation, q, eos)
    kappa, chi = eos.kappa_chi(rho, p)
    c2 = chi + kappa * (e + p) / rho
    if np.any(c2 <= 0.0):
        i = int(np.argmin(c2))
        raise HyperbolicityError(np.ravel(rho)[i], np.ravel(p)[i])
    return rho, u, p, e, kappa, chi, np.sqrt(c2)


def quasilinear_matrix(formulation: str, q: np.ndarray, eos: EosModel) -> np.ndarray:
    """Jacobian of the 1D quasilinear form in the active variable set."""
    rho, u, p, e, kappa, chi, c = euler_characteristic_speeds(formulation, q, eos)
    n = rho.shape[0]
    A = np.zeros((n, 3, 3))
    A[:, 0, 1] = 1.0
    if formulation == "conservative":
        H = (e + p) / rho + 0.5 * u * u
        A[:, 1, 0] = -u * u + chi + 0.5 * kappa * u * u
        A[:, 1, 1] = (2.0 - kappa) * u
        A[:, 1, 2] = kappa
        A[:, 2, 0] = u * (chi + 0.5 * kappa * u * u - H)
        A[:, 2, 1] = H - kappa * u * u
        A[:, 2, 2] = (1.0 + kappa) * u
    elif formulation == "energy":
        h = (e + p) / rho
        A[:, 1, 0] = chi - u * u
        A[:, 1, 1] = 2.0 * u
        A[:, 1, 2] = kappa
        A[:, 2, 0] = -u * h
        A[:, 2, 1] = h
        A[:, 2, 2] = u
    else:
        A[:, 1, 0] = -u * u
        A[:, 1, 1] = 2.0 * u
        A[:, 1, 2] = 1.0
        A[:, 2, 0] = -u * c * c
        A[:, 2, 1] = c * c
        A[:, 2, 2] = u
    return A


def euler_eigensystem(formulation: str, q_hat: np.ndarray, eos: EosModel) -> Eigensystem:
    rho, u, p, e, kappa, chi, c = euler_characteristic_speeds(formulation, q_hat, eos)
    n = rho.shape[0]
    lam = np.stack([u - c, u, u + c], axis=1)
    R = np.empty((n, 3, 3))
    R[:, 0, :] = 1.0
    R[:, 1, 0] = u - c
    R[:, 1, 1] = u
    R[:, 1, 2] = u + c
    if formulation == "conservative":
        H = (e + p) / rho + 0.5 * u * u
        R[:, 2, 0] = H - u * c
        R[:, 2, 1] = 0.5 * u * u - chi / kappa
        R[:, 2, 2] = H + u * c
    elif formulation == "energy":
        h = (e + p) / rho
        R[:, 2, 0] = h
        R[:, 2, 1] = -chi / kappa
        R[:, 2, 2] = h
    else:
        R[:, 2, 0] = c * c
        R[:, 2, 1] = 0.0
        R[:, 2, 2] = c * c
    return Eigensystem(values=lam, right=R, left=_left_from_right(R), state=q_hat)


def quasilinear_eigensystem(formulation: str, q_hat: np.ndarray, ctx) -> Eigensystem:
    """Eigensystem of the active variable set (single or multiphase)."""
    if formulation == "multiphase":
        from .multiphase import multiphase_eigensystem
        return multiphase_eigensystem(q_hat, ctx)
    return euler_eigensystem(formulation, q_hat, ctx)


# ---------------------------------------------------------------------------
# two-stage Runge-Kutta driver
# ---------------------------------------------------------------------------

@dataclass
class StageAudit:
    """Per-stage maxima of the element conservation checks."""

    energy_defect: float = 0.0          # where the correction is enforced
    energy_defect_switched: float = 0.0  # elements with the contact switch on
    mass_defect: float = 0.0
    momentum_defect: float = 0.0
    n_switched: int = 0

    def merge(self, other: "StageAudit") -> "StageAudit":
        return StageAudit(
            energy_defect=max(self.energy_defect, other.energy_defect),
            energy_defect_switched=max(self.energy_defect_switched,
                                       other.energy_defect_switched),
            mass_defect=max(self.mass_defect, other.mass_defect),
            momentum_defect=max(self.momentum_defect, other.momentum_defect),
            n_switched=self.n_switched + other.n_switched,
        )


class StageDriver(Protocol):
    def stage(self, q0: np.ndarray, ql: np.ndarray, dt: float,
              stage_index: int, time_floor: bool) -> Tuple[np.ndarray, StageAudit]:
        ...


def rk2_step(state: SolutionState, driver: StageDriver, dt: float,
             order: int = 2) -> Tuple[SolutionState, StageAudit]:
    """Advance one time step.

    ``order=1`` performs a single forward-Euler stage on the level-n data;
    ``order=2`` runs the two-stage scheme in which each stage solves for the
    increment from the level-n state with the space-time residual evaluated
    from the current stage level.  Density and momentum are updated inside
    each stage before the energy/pressure correction is formed.
    """
    q0 = state.q
    if order == 1:
        q_new, audit = driver.stage(q0, q0, dt, stage_index=0,
                                    time_floor=False)
    elif order == 2:
        q1, a0 = driver.stage(q0, q0, dt, stage_index=0, time_floor=True)
        q_new, a1 = driver.stage(q0, q1, dt, stage_index=1, time_floor=True)
        audit = a0.merge(a1)
    else:
        raise ValueError(f"order must be 1 or 2, got {order}")
    return SolutionState(state.formulation, q_new, state.time + dt), audit
