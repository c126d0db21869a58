"""Stage assembly for the single-phase Euler formulations.

Three variable sets are supported.  The conservative set evolves
(rho, m, E) with the full flux; the internal-energy set evolves (rho, m, e)
and the pressure set (rho, m, p) with nonconservative transport residuals.
The nonconservative sets are made locally conservative by a per-element
constant correction on the energy (resp. pressure) residual, chosen so that
the per-DOF total-energy residuals reconstructed from the updated variables
sum to the conservative element total.

Within a stage, density and momentum are always updated first; the
correction uses the velocities at the new and current stage levels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import eos as _eos
from .eos import EosModel, ThermoPoint
from .mesh import Mesh1D, dual_volumes
from . import rd_core as rd
from .rd_core import StageAudit, StepFailureError

# Retry ladder for the divided-difference blending weight when the element
# sum of de/dp degenerates (unreachable for the supported EOS families, all
# of which have de/dp > 0, but kept as a deterministic fallback).
_LAMBDA_LADDER = (0.5, 0.0, 1.0)
_DIVISOR_TINY = 1.0e-14 * rd.N_DOF_PER_ELEMENT


def energy_transport_integral(u_el: np.ndarray, e_el: np.ndarray,
                              p_el: np.ndarray) -> np.ndarray:
    """Trapezoidal element integral of u*de/dx + (e + p)*du/dx.

    Exact for linear e with constant u; second-order accurate otherwise,
    with an O(h^3) per-element quadrature error on smooth data.
    """
    de = e_el[:, 1] - e_el[:, 0]
    du = u_el[:, 1] - u_el[:, 0]
    return u_el.mean(axis=1) * de + (e_el + p_el).mean(axis=1) * du


def pressure_transport_integral(u_el: np.ndarray, p_el: np.ndarray,
                                rho_c2_el: np.ndarray) -> np.ndarray:
    """Trapezoidal element integral of u*dp/dx + rho*c^2*du/dx."""
    dp = p_el[:, 1] - p_el[:, 0]
    du = u_el[:, 1] - u_el[:, 0]
    return u_el.mean(axis=1) * dp + rho_c2_el.mean(axis=1) * du


def total_energy_residual(formulation: str, eos: EosModel, q0_el: np.ndarray,
                          ql_el: np.ndarray, h: float, dt: float) -> np.ndarray:
    """Element total-energy residual in flux units.

    Total energy is reconstructed at the DOFs from the active variables,
    E = e + rho*u^2/2, the flux (E + p)*u is averaged over the two stage
    levels and the time increment is integrated with the trapezoidal rule.
    """
    fe = []
    ee = []
    for q_el in (q0_el, ql_el):
        rho, u, p, e = rd._decode_euler(formulation, q_el, eos)
        if formulation == "conservative":
            E = q_el[..., 2]     # avoid the lossy KE round trip
        else:
            E = e + 0.5 * rho * u * u
        ee.append(E)
        fe.append(((E + p) * u)[..., None])
    time_term = 0.5 * h * (ee[1] - ee[0]).sum(axis=1) / dt
    return time_term + rd.flux_difference(fe[0], fe[1])[:, 0]


def energy_correction(phi_E: np.ndarray, phi_rho: np.ndarray, phi_m: np.ndarray,
                      phi_e: np.ndarray, u_half: np.ndarray,
                      u_prod: np.ndarray) -> np.ndarray:
    """Per-element constant added to the energy residuals for conservation.

    After adding the result to each DOF's energy residual, the reconstructed
    total-energy residuals sum exactly to ``phi_E`` on every element.
    """
    target = (phi_E
              - (u_half * phi_m).sum(axis=1)
              + 0.5 * (u_prod * phi_rho).sum(axis=1)
              - phi_e.sum(axis=1))
    return target / rd.N_DOF_PER_ELEMENT


def reconstruct_conserved_residuals(phi_rho: np.ndarray, phi_m: np.ndarray,
                                    phi_e: np.ndarray, u_half: np.ndarray,
                                    u_prod: np.ndarray) -> np.ndarray:
    """Per-DOF (rho, m, E) residuals implied by the nonconservative update."""
    phi_E = phi_e + u_half * phi_m - 0.5 * u_prod * phi_rho
    return np.stack([phi_rho, phi_m, phi_E], axis=2)


def effective_pressure_energy_residual(t_drho: np.ndarray, t_dp: np.ndarray,
                                       phi_rho: np.ndarray, phi_p: np.ndarray,
                                       r_p: np.ndarray) -> np.ndarray:
    """Energy residual implied by the corrected pressure update."""
    return t_drho * phi_rho + t_dp * (phi_p + r_p[:, None])


def contact_switch(u_new_el: np.ndarray, p_l_el: np.ndarray, eps: float,
                   eps1: float) -> np.ndarray:
    """True on elements whose velocity and pressure are locally uniform.

    The normalized element oscillation of the updated velocity and of the
    current-level pressure are both below ``eps``; such elements sit inside a
    contact wave and their pressure correction is suppressed.
    """
    u_max = u_new_el.max(axis=1)
    u_min = u_new_el.min(axis=1)
    osc_u = np.abs(u_max - u_min) / (np.abs(u_max) + np.abs(u_min) + eps1)
    p_max = p_l_el.max(axis=1)
    p_min = p_l_el.min(axis=1)
    osc_p = np.abs(p_max - p_min) / (np.abs(p_max) + np.abs(p_min) + eps1)
    return np.maximum(osc_u, osc_p) <= eps


def _defect(total: np.ndarray, reference: np.ndarray,
            scale: np.ndarray) -> np.ndarray:
    """Element-sum defect, normalized against the per-DOF term magnitudes.

    The sums cancel catastrophically (dissipation terms are orders of
    magnitude above the totals), so the achievable accuracy is relative to
    the summand scale, not to the total alone.
    """
    return np.abs(total - reference) / (np.abs(reference) + scale + 1.0)


@dataclass
class EulerDriver:
    """Assembles and applies one stage update for a single-phase formulation."""

    formulation: str
    eos: EosModel
    mesh: Mesh1D
    eps_switch: float = 1.0e-6
    eps1_switch: float = 1.0e-6
    _vols: np.ndarray = field(init=False, repr=False)
    _left: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.formulation not in ("conservative", "energy", "pressure"):
            raise ValueError(f"unsupported Euler formulation {self.formulation!r}")
        self._vols = dual_volumes(self.mesh)
        self._left, _ = rd.element_dof_indices(self.mesh.n_dofs)

    # -- helpers -----------------------------------------------------------

    def _decode(self, q_el):
        rho, u, p, e = rd._decode_euler(self.formulation, q_el, self.eos)
        c = np.asarray(_eos.sound_speed(self.eos, rho, p))
        return rho, u, p, e, c

    def _centered(self, q0_el, ql_el, dec0, decl, dt):
        h = self.mesh.h
        centered = rd.element_time_integral(q0_el, ql_el, h, dt)
        rho0, u0, p0, e0, _ = dec0
        rhol, ul, pl, el, _ = decl
        f0 = np.stack([q0_el[:, :, 1], q0_el[:, :, 1] * u0 + p0], axis=2)
        fl = np.stack([ql_el[:, :, 1], ql_el[:, :, 1] * ul + pl], axis=2)
        centered[:, :2] += rd.flux_difference(f0, fl)

        if self.formulation == "conservative":
            E0 = e0 + 0.5 * rho0 * u0 * u0
            El = el + 0.5 * rhol * ul * ul
            fe0 = ((E0 + p0) * u0)[..., None]
            fel = ((El + pl) * ul)[..., None]
            centered[:, 2] += rd.flux_difference(fe0, fel)[:, 0]
        else:
            qa_el = 0.5 * (q0_el + ql_el)
            rho_a, u_a, p_a, e_a = rd._decode_euler(self.formulation, qa_el, self.eos)
            if self.formulation == "energy":
                centered[:, 2] += energy_transport_integral(u_a, e_a, p_a)
            else:
                kappa, chi = self.eos.kappa_chi(rho_a, p_a)
                rho_c2 = rho_a * chi + kappa * (e_a + p_a)
                centered[:, 2] += pressure_transport_integral(u_a, p_a, rho_c2)
        return centered

    # -- one stage ---------------------------------------------------------

    def stage(self, q0, ql, dt, stage_index, time_floor=True):
        mesh = self.mesh
        n_dofs = q0.shape[0]
        qp0 = rd.pad_ghosts(q0)
        qpl = rd.pad_ghosts(ql)
        q0_el = rd.gather(qp0, self._left)
        ql_el = rd.gather(qpl, self._left)

        dec0 = self._decode(q0_el)
        decl = self._decode(ql_el)
        speed0 = np.abs(dec0[1]) + dec0[4]
        speedl = np.abs(decl[1]) + decl[4]
        alpha = np.maximum(speed0.max(axis=1), speedl.max(axis=1))
        if time_floor:
            # space-time spectral radius: the grid speed h/dt lumps the stage
            # time-increment term onto its own DOF (with CFL <= 1 it bounds
            # the physical speeds) and keeps transonic jumps from freezing
            alpha = np.maximum(alpha, mesh.h / dt)

        centered = self._centered(q0_el, ql_el, dec0, decl, dt)
        q_bar = 0.5 * (q0_el + ql_el)
        per_dof_rus = rd.rusanov_residuals(q_bar, centered, alpha)
        eig = rd.euler_eigensystem(self.formulation, q_bar.mean(axis=1), self.eos)
        per_dof = rd.blend_residuals(per_dof_rus, eig)

        # Fail-safe: the per-field limiter can produce inadmissible states
        # at starting discontinuities; revert the offending elements to the
        # plain Rusanov split (element totals are unchanged), and as a last
        # resort run the whole stage on the Rusanov residuals.
        per_dof = self._failsafe(per_dof, per_dof_rus, ql, dt, stage_index)
        try:
            return self._apply(per_dof, centered, q0_el, ql_el, decl, ql, dt,
                               stage_index)
        except StepFailureError:
            if per_dof is per_dof_rus:
                raise
            return self._apply(per_dof_rus, centered, q0_el, ql_el, decl, ql,
                               dt, stage_index)

    def _failsafe(self, per_dof, per_dof_rus, ql, dt, stage_index):
        n_dofs = ql.shape[0]
        for _ in range(4):
            acc = rd.scatter_add(per_dof, self._left, n_dofs)
            q_new = ql - dt / self._vols[:, None] * acc
            good = self._admissible_mask(q_new)
            if good.all():
                return per_dof
            bad = np.flatnonzero(~good)
            elements = np.unique(np.concatenate([bad, bad + 1]))
            per_dof = per_dof.copy()
            per_dof[elements] = per_dof_rus[elements]
        acc = rd.scatter_add(per_dof_rus, self._left, n_dofs)
        q_new = ql - dt / self._vols[:, None] * acc
        good = self._admissible_mask(q_new)
        if not good.all():
            dof = int(np.flatnonzero(~good)[0])
            raise StepFailureError(
                f"inadmissible state (rho={q_new[dof, 0]}) at DOF {dof}",
                stage=stage_index, dof=dof)
        return per_dof_rus

    def _apply(self, per_dof, centered, q0_el, ql_el, decl, ql, dt,
               stage_index):
        """Update rho and m, form the correction, update the third variable."""
        mesh = self.mesh
        n_dofs = ql.shape[0]
        acc = rd.scatter_add(per_dof, self._left, n_dofs)
        q_new = ql - dt / self._vols[:, None] * acc

        phi_E = total_energy_residual(self.formulation, self.eos, q0_el, ql_el,
                                      mesh.h, dt)
        u_new = q_new[:, 1] / q_new[:, 0]
        u_new_el = rd.gather(rd.pad_ghosts(u_new[:, None]), self._left)[:, :, 0]
        u_old_el = decl[1]
        u_half = 0.5 * (u_new_el + u_old_el)
        u_prod = u_new_el * u_old_el

        phi_rho = per_dof[:, :, 0]
        phi_m = per_dof[:, :, 1]

        audit = StageAudit()
        audit.mass_defect = float(np.max(_defect(
            phi_rho.sum(axis=1), centered[:, 0], np.abs(phi_rho).sum(axis=1))))
        audit.momentum_defect = float(np.max(_defect(
            phi_m.sum(axis=1), centered[:, 1], np.abs(phi_m).sum(axis=1))))

        if self.formulation == "conservative":
            rec_total = per_dof[:, :, 2].sum(axis=1)
            audit.energy_defect = float(np.max(_defect(
                rec_total, phi_E, np.abs(per_dof[:, :, 2]).sum(axis=1))))
            self._check_admissible(q_new, stage_index)
            return q_new, audit

        if self.formulation == "energy":
            r = energy_correction(phi_E, phi_rho, phi_m, per_dof[:, :, 2],
                                  u_half, u_prod)
            phi_e = per_dof[:, :, 2] + r[:, None]
            acc_e = rd.scatter_add(phi_e[:, :, None], self._left, n_dofs)[:, 0]
            q_new[:, 2] = ql[:, 2] - dt / self._vols * acc_e
            rec = reconstruct_conserved_residuals(phi_rho, phi_m, phi_e,
                                                  u_half, u_prod)
            audit.energy_defect = float(np.max(_defect(
                rec[:, :, 2].sum(axis=1), phi_E,
                np.abs(rec[:, :, 2]).sum(axis=1))))
            self._check_admissible(q_new, stage_index)
            return q_new, audit

        # pressure formulation: provisional update, then the correction
        phi_p = per_dof[:, :, 2]
        p_prov = q_new[:, 2]
        p_prov_el = rd.gather(rd.pad_ghosts(p_prov[:, None]), self._left)[:, :, 0]
        rho_new_el = rd.gather(rd.pad_ghosts(q_new[:, :1]), self._left)[:, :, 0]

        old = ThermoPoint(rho=decl[0], p=decl[2], e=decl[3])
        new = ThermoPoint(rho=rho_new_el, p=p_prov_el, e=None)
        t_drho, t_dp, sum_dp = self._tilde_partials(old, new, stage_index)

        fired = contact_switch(u_new_el, decl[2], self.eps_switch, self.eps1_switch)
        delta_e = (phi_E
                   - (u_half * phi_m).sum(axis=1)
                   + 0.5 * (u_prod * phi_rho).sum(axis=1)
                   - (t_drho * phi_rho + t_dp * phi_p).sum(axis=1))
        r_p = np.where(fired, 0.0, delta_e / sum_dp)

        acc_rp = rd.scatter_add(np.broadcast_to(r_p[:, None, None],
                                                (r_p.size, 2, 1)),
                                self._left, n_dofs)[:, 0]
        q_new[:, 2] = p_prov - dt / self._vols * acc_rp

        phi_e_rec = effective_pressure_energy_residual(t_drho, t_dp, phi_rho,
                                                       phi_p, r_p)
        rec = reconstruct_conserved_residuals(phi_rho, phi_m, phi_e_rec,
                                              u_half, u_prod)
        defect = _defect(rec[:, :, 2].sum(axis=1), phi_E,
                         np.abs(rec[:, :, 2]).sum(axis=1))
        active = ~fired
        audit.energy_defect = float(defect[active].max()) if active.any() else 0.0
        audit.energy_defect_switched = float(defect[fired].max()) if fired.any() else 0.0
        audit.n_switched = int(fired.sum())
        self._check_admissible(q_new, stage_index)
        return q_new, audit

    def _tilde_partials(self, old, new, stage_index):
        for lam in _LAMBDA_LADDER:
            t_drho, t_dp = _eos.divided_difference_partials(self.eos, old, new, lam)
            sum_dp = t_dp.sum(axis=1)
            if np.all(np.abs(sum_dp) > _DIVISOR_TINY):
                return t_drho, t_dp, sum_dp
        t_drho, t_dp = _eos.energy_partials(self.eos, old.rho, old.p)
        t_drho = np.broadcast_to(t_drho, old.rho.shape)
        t_dp = np.broadcast_to(t_dp, old.rho.shape)
        sum_dp = t_dp.sum(axis=1)
        if np.any(np.abs(sum_dp) <= _DIVISOR_TINY):
            bad = int(np.argmin(np.abs(sum_dp)))
            raise StepFailureError(
                f"pressure-correction divisor vanished on element {bad}: "
                f"rho={old.rho[bad]}, p={old.p[bad]}", stage=stage_index)
        return t_drho, t_dp, sum_dp

    def _admissible_mask(self, q) -> np.ndarray:
        """Per-DOF admissibility (rho > 0 and c^2 > 0) without raising."""
        rho = q[:, 0]
        ok = rho > 0.0
        rho_s = np.where(ok, rho, 1.0)
        u = q[:, 1] / rho_s
        if self.formulation == "conservative":
            e = q[:, 2] - 0.5 * rho_s * u * u
            p = np.asarray(_eos.pressure_from_energy(self.eos, rho_s, e))
        elif self.formulation == "energy":
            e = q[:, 2]
            p = np.asarray(_eos.pressure_from_energy(self.eos, rho_s, e))
        else:
            p = q[:, 2]
            e = np.asarray(_eos.energy_from_pressure(self.eos, rho_s, p))
        kappa, chi = self.eos.kappa_chi(rho_s, p)
        c2 = chi + kappa * (e + p) / rho_s
        return ok & (c2 > 0.0)

    def _check_admissible(self, q_new, stage_index):
        try:
            rho, u, p, e = rd._decode_euler(self.formulation, q_new, self.eos)
            _eos.sound_speed(self.eos, rho, p)
        except _eos.EosError as exc:
            raise StepFailureError(f"inadmissible stage state: {exc}",
                                   stage=stage_index) from exc
