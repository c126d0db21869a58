"""Kapila five-equation two-phase model with a pressure-based update.

Evolved variables per DOF: volume fraction alpha1, the two phase masses
alpha_j*rho_j, mixture momentum m = rho*u and mixture pressure p.  Masses and
momentum are conservative; alpha1 follows the nonconservative transport
u*dalpha1/dx - K*du/dx with the interface compressibility coefficient K, and
the pressure equation u*dp/dx + rho*c^2*du/dx is closed by the Wood mixture
sound speed.  A per-element pressure correction enforces conservation of the
mixture total energy E = alpha1*e1 + alpha2*e2 + rho*u^2/2; phase energies
e_j are per unit phase volume.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import eos as _eos
from .eos import HyperbolicityError
from .mesh import Mesh1D, dual_volumes
from . import rd_core as rd
from .rd_core import Eigensystem, StageAudit, StepFailureError
from .state import ALPHA_CLIP, PhasePair

_ALPHA_FAIL_TOL = 1.0e-6


@dataclass
class PhaseThermo:
    """Per-phase thermodynamics evaluated at a common pressure."""

    alpha1: np.ndarray
    alpha2: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    p: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    chi1: np.ndarray
    chi2: np.ndarray
    c1_sq: np.ndarray
    c2_sq: np.ndarray


def decode_phases(pair: PhasePair, q: np.ndarray) -> PhaseThermo:
    """Phase states and partials from a multiphase state array (..., 5)."""
    alpha1 = np.clip(q[..., 0], ALPHA_CLIP, 1.0 - ALPHA_CLIP)
    alpha2 = 1.0 - alpha1
    rho1 = q[..., 1] / alpha1
    rho2 = q[..., 2] / alpha2
    rho = q[..., 1] + q[..., 2]
    u = q[..., 3] / rho
    p = q[..., 4]
    e1 = np.asarray(_eos.energy_from_pressure(pair.eos1, rho1, p))
    e2 = np.asarray(_eos.energy_from_pressure(pair.eos2, rho2, p))
    kappa1, chi1 = pair.eos1.kappa_chi(rho1, p)
    kappa2, chi2 = pair.eos2.kappa_chi(rho2, p)
    c1_sq = chi1 + kappa1 * (e1 + p) / rho1
    c2_sq = chi2 + kappa2 * (e2 + p) / rho2
    if np.any(c1_sq <= 0.0):
        i = int(np.argmin(c1_sq))
        raise HyperbolicityError(np.ravel(rho1)[i], np.ravel(p)[i])
    if np.any(c2_sq <= 0.0):
        i = int(np.argmin(c2_sq))
        raise HyperbolicityError(np.ravel(rho2)[i], np.ravel(p)[i])
    return PhaseThermo(alpha1, alpha2, rho1, rho2, rho, u, p, e1, e2,
                       kappa1, kappa2, chi1, chi2, c1_sq, c2_sq)


def wood_sound_speed_sq(ph: PhaseThermo) -> np.ndarray:
    """Wood mixture speed: 1/(rho c^2) = sum_j alpha_j/(rho_j c_j^2)."""
    inv = ph.alpha1 / (ph.rho1 * ph.c1_sq) + ph.alpha2 / (ph.rho2 * ph.c2_sq)
    return 1.0 / (ph.rho * inv)


def mixture_sound_speed(pair: PhasePair, q: np.ndarray) -> np.ndarray:
    return np.sqrt(wood_sound_speed_sq(decode_phases(pair, q)))


def kapila_coefficient(ph: PhaseThermo) -> np.ndarray:
    """Interface coefficient K multiplying div(u) in the alpha1 transport."""
    b1 = ph.rho1 * ph.c1_sq
    b2 = ph.rho2 * ph.c2_sq
    return (b2 - b1) / (b1 / ph.alpha1 + b2 / ph.alpha2)


@dataclass(frozen=True)
class MixtureDerivatives:
    """Partials of the mixture pressure at fixed complementary variables.

    ``kappa`` is dp/de with e the mixture internal energy per unit volume;
    ``dp_dm1``/``dp_dm2`` differentiate with respect to the phase masses
    alpha_j*rho_j and ``dp_dalpha1`` with respect to the volume fraction.
    """

    kappa: np.ndarray
    dp_dm1: np.ndarray
    dp_dm2: np.ndarray
    dp_dalpha1: np.ndarray


def mixture_pressure_partials(ph: PhaseThermo) -> MixtureDerivatives:
    kappa = 1.0 / (ph.alpha1 / ph.kappa1 + ph.alpha2 / ph.kappa2)
    dp_dm1 = ph.chi1 * kappa / ph.kappa1
    dp_dm2 = ph.chi2 * kappa / ph.kappa2
    # The phase-energy terms combine into rho_j c_j^2/kappa_j - p; the common
    # pressure cancels in the difference of the two phases.
    g1 = ph.e1 + ph.rho1 * ph.chi1 / ph.kappa1
    g2 = ph.e2 + ph.rho2 * ph.chi2 / ph.kappa2
    return MixtureDerivatives(kappa=kappa, dp_dm1=dp_dm1, dp_dm2=dp_dm2,
                              dp_dalpha1=-kappa * (g1 - g2))


def mixture_energy(pair: PhasePair, alpha1, rho1, rho2, p) -> np.ndarray:
    """Mixture internal energy per unit volume at a common pressure."""
    alpha1 = np.asarray(alpha1, dtype=float)
    e1 = np.asarray(_eos.energy_from_pressure(pair.eos1, rho1, p))
    e2 = np.asarray(_eos.energy_from_pressure(pair.eos2, rho2, p))
    return alpha1 * e1 + (1.0 - alpha1) * e2


def multiphase_eigensystem(q_hat: np.ndarray, pair: PhasePair) -> Eigensystem:
    """Eigen-decomposition of the 5x5 quasilinear Jacobian.

    The eigenvalue u has a three-dimensional eigenspace (contact waves carry
    alpha1 and both phase masses); the acoustic eigenvectors are
    (-K/rho, Y1, Y2, u -+ c, c^2) with Y_j the mass fractions.
    """
    ph = decode_phases(pair, q_hat)
    c = np.sqrt(wood_sound_speed_sq(ph))
    K = kapila_coefficient(ph)
    y1 = q_hat[:, 1] / ph.rho
    y2 = q_hat[:, 2] / ph.rho
    u = ph.u
    n = u.shape[0]

    lam = np.stack([u - c, u, u, u, u + c], axis=1)
    R = np.zeros((n, 5, 5))
    for col, sign in ((0, -1.0), (4, 1.0)):
        R[:, 0, col] = -K / ph.rho
        R[:, 1, col] = y1
        R[:, 2, col] = y2
        R[:, 3, col] = u + sign * c
        R[:, 4, col] = c * c
    R[:, 0, 1] = 1.0
    R[:, 1, 2] = 1.0
    R[:, 3, 2] = u
    R[:, 2, 3] = 1.0
    R[:, 3, 3] = u
    return Eigensystem(values=lam, right=R, left=rd._left_from_right(R),
                       state=q_hat)


def quasilinear_matrix(pair: PhasePair, q: np.ndarray) -> np.ndarray:
    """5x5 Jacobian of the quasilinear multiphase system (for verification)."""
    ph = decode_phases(pair, q)
    c2 = wood_sound_speed_sq(ph)
    K = kapila_coefficient(ph)
    u = ph.u
    y1 = q[:, 1] / ph.rho
    y2 = q[:, 2] / ph.rho
    n = u.shape[0]
    A = np.zeros((n, 5, 5))
    A[:, 0, 0] = u
    A[:, 0, 1] = K * u / ph.rho
    A[:, 0, 2] = K * u / ph.rho
    A[:, 0, 3] = -K / ph.rho
    A[:, 1, 1] = u - u * y1
    A[:, 1, 2] = -u * y1
    A[:, 1, 3] = y1
    A[:, 2, 1] = -u * y2
    A[:, 2, 2] = u - u * y2
    A[:, 2, 3] = y2
    A[:, 3, 1] = -u * u
    A[:, 3, 2] = -u * u
    A[:, 3, 3] = 2.0 * u
    A[:, 3, 4] = 1.0
    A[:, 4, 1] = -u * c2
    A[:, 4, 2] = -u * c2
    A[:, 4, 3] = c2
    A[:, 4, 4] = u
    return A


_LAMBDA_LADDER = (0.5, 0.0, 1.0)
_DIVISOR_TINY = 1.0e-14 * rd.N_DOF_PER_ELEMENT


@dataclass
class MultiphaseDriver:
    """Stage assembly for the five-equation model."""

    pair: PhasePair
    mesh: Mesh1D
    eps_switch: float = 1.0e-6
    eps1_switch: float = 1.0e-6
    _vols: np.ndarray = field(init=False, repr=False)
    _left: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._vols = dual_volumes(self.mesh)
        self._left, _ = rd.element_dof_indices(self.mesh.n_dofs)

    def _centered(self, q0_el, ql_el, ph0, phl, dt):
        h = self.mesh.h
        centered = rd.element_time_integral(q0_el, ql_el, h, dt)

        def conservative_fluxes(q_el, ph):
            return np.stack([q_el[:, :, 1] * ph.u, q_el[:, :, 2] * ph.u,
                             q_el[:, :, 3] * ph.u + ph.p], axis=2)

        centered[:, 1:4] += rd.flux_difference(conservative_fluxes(q0_el, ph0),
                                               conservative_fluxes(ql_el, phl))

        qa_el = 0.5 * (q0_el + ql_el)
        pha = decode_phases(self.pair, qa_el)
        Ka = kapila_coefficient(pha)
        rho_c2_a = pha.rho * wood_sound_speed_sq(pha)
        alpha_a = qa_el[:, :, 0]
        d_alpha = alpha_a[:, 1] - alpha_a[:, 0]
        du = pha.u[:, 1] - pha.u[:, 0]
        dp = pha.p[:, 1] - pha.p[:, 0]
        centered[:, 0] += pha.u.mean(axis=1) * d_alpha - Ka.mean(axis=1) * du
        centered[:, 4] += pha.u.mean(axis=1) * dp + rho_c2_a.mean(axis=1) * du
        return centered

    def _total_energy_residual(self, q0_el, ql_el, ph0, phl, dt):
        fe = []
        ee = []
        for ph in (ph0, phl):
            e_mix = ph.alpha1 * ph.e1 + ph.alpha2 * ph.e2
            E = e_mix + 0.5 * ph.rho * ph.u * ph.u
            ee.append(E)
            fe.append(((E + ph.p) * ph.u)[..., None])
        time_term = 0.5 * self.mesh.h * (ee[1] - ee[0]).sum(axis=1) / dt
        return time_term + rd.flux_difference(fe[0], fe[1])[:, 0]

    def _admissible_mask(self, q) -> np.ndarray:
        """Per-DOF admissibility of a candidate multiphase state."""
        ok = (q[:, 1] > 0.0) & (q[:, 2] > 0.0)
        alpha1 = np.clip(q[:, 0], ALPHA_CLIP, 1.0 - ALPHA_CLIP)
        m1 = np.where(ok, q[:, 1], 1.0)
        m2 = np.where(ok, q[:, 2], 1.0)
        rho1 = m1 / alpha1
        rho2 = m2 / (1.0 - alpha1)
        p = q[:, 4]
        for eos, rho_j in ((self.pair.eos1, rho1), (self.pair.eos2, rho2)):
            e_j = np.asarray(_eos.energy_from_pressure(eos, rho_j, p))
            kappa, chi = eos.kappa_chi(rho_j, p)
            ok &= chi + kappa * (e_j + p) / rho_j > 0.0
        return ok

    def _mixture_de_dp(self, phl, alpha_new, rho1_new, rho2_new, p_new, lam):
        """Divided difference in p of the mixture energy; analytic fallback."""
        dp = p_new - phl.p
        ok = np.abs(dp) > 1.0e-12 * (np.abs(phl.p) + np.abs(p_new) + 1.0)
        dp_safe = np.where(ok, dp, 1.0)
        e_new_gn = mixture_energy(self.pair, alpha_new, rho1_new, rho2_new, p_new)
        e_old_gn = mixture_energy(self.pair, alpha_new, rho1_new, rho2_new, phl.p)
        e_new_go = mixture_energy(self.pair, phl.alpha1, phl.rho1, phl.rho2, p_new)
        e_old_go = phl.alpha1 * phl.e1 + phl.alpha2 * phl.e2
        dd = (lam * (e_new_gn - e_old_gn) + (1.0 - lam) * (e_new_go - e_old_go)) / dp_safe
        analytic = phl.alpha1 / phl.kappa1 + phl.alpha2 / phl.kappa2
        return np.where(ok, dd, analytic)

    def stage(self, q0, ql, dt, stage_index, time_floor=True):
        from .euler import contact_switch, _defect

        n_dofs = q0.shape[0]
        q0_el = rd.gather(rd.pad_ghosts(q0), self._left)
        ql_el = rd.gather(rd.pad_ghosts(ql), self._left)
        ph0 = decode_phases(self.pair, q0_el)
        phl = decode_phases(self.pair, ql_el)
        c0 = np.sqrt(wood_sound_speed_sq(ph0))
        cl = np.sqrt(wood_sound_speed_sq(phl))
        alpha_k = np.maximum((np.abs(ph0.u) + c0).max(axis=1),
                             (np.abs(phl.u) + cl).max(axis=1))
        if time_floor:
            alpha_k = np.maximum(alpha_k, self.mesh.h / dt)

        centered = self._centered(q0_el, ql_el, ph0, phl, dt)
        q_bar = 0.5 * (q0_el + ql_el)
        per_dof_rus = rd.rusanov_residuals(q_bar, centered, alpha_k)
        eig = multiphase_eigensystem(q_bar.mean(axis=1), self.pair)
        per_dof = rd.blend_residuals(per_dof_rus, eig)

        per_dof = self._failsafe(per_dof, per_dof_rus, ql, dt, stage_index)
        phi_E = self._total_energy_residual(q0_el, ql_el, ph0, phl, dt)
        try:
            return self._apply(per_dof, centered, phi_E, phl, ql, dt,
                               stage_index)
        except StepFailureError:
            if per_dof is per_dof_rus:
                raise
            return self._apply(per_dof_rus, centered, phi_E, phl, ql, dt,
                               stage_index)

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
            raise StepFailureError(f"inadmissible multiphase state at DOF {dof}",
                                   stage=stage_index, dof=dof)
        return per_dof_rus

    def _apply(self, per_dof, centered, phi_E, phl, ql, dt, stage_index):
        from .euler import contact_switch, _defect

        n_dofs = ql.shape[0]
        acc = rd.scatter_add(per_dof, self._left, n_dofs)
        q_new = ql - dt / self._vols[:, None] * acc

        alpha_raw = q_new[:, 0]
        if np.any(alpha_raw < -_ALPHA_FAIL_TOL) or np.any(alpha_raw > 1.0 + _ALPHA_FAIL_TOL):
            dof = int(np.argmax(np.abs(alpha_raw - 0.5)))
            raise StepFailureError(
                f"volume fraction {alpha_raw[dof]} out of range at DOF {dof}",
                stage=stage_index, dof=dof)
        q_new[:, 0] = np.clip(alpha_raw, ALPHA_CLIP, 1.0 - ALPHA_CLIP)

        rho_new = q_new[:, 1] + q_new[:, 2]
        u_new = q_new[:, 3] / rho_new
        u_new_el = rd.gather(rd.pad_ghosts(u_new[:, None]), self._left)[:, :, 0]
        u_half = 0.5 * (u_new_el + phl.u)
        u_prod = u_new_el * phl.u

        phi_m1 = per_dof[:, :, 1]
        phi_m2 = per_dof[:, :, 2]
        phi_rho = phi_m1 + phi_m2
        phi_m = per_dof[:, :, 3]
        phi_alpha = per_dof[:, :, 0]
        phi_p = per_dof[:, :, 4]

        p_prov = q_new[:, 4].copy()
        geom_new = rd.gather(rd.pad_ghosts(
            np.column_stack([q_new[:, 0], q_new[:, 1], q_new[:, 2], p_prov])),
            self._left)
        alpha_new_el = np.clip(geom_new[:, :, 0], ALPHA_CLIP, 1.0 - ALPHA_CLIP)
        rho1_new_el = geom_new[:, :, 1] / alpha_new_el
        rho2_new_el = geom_new[:, :, 2] / (1.0 - alpha_new_el)
        p_new_el = geom_new[:, :, 3]

        de_dm1 = -phl.chi1 / phl.kappa1
        de_dm2 = -phl.chi2 / phl.kappa2
        de_dalpha = ((phl.e1 + phl.rho1 * phl.chi1 / phl.kappa1)
                     - (phl.e2 + phl.rho2 * phl.chi2 / phl.kappa2))

        de_dp = sum_dp = None
        for lam in _LAMBDA_LADDER:
            de_dp = self._mixture_de_dp(phl, alpha_new_el, rho1_new_el,
                                        rho2_new_el, p_new_el, lam)
            sum_dp = de_dp.sum(axis=1)
            if np.all(np.abs(sum_dp) > _DIVISOR_TINY):
                break
        else:
            de_dp = phl.alpha1 / phl.kappa1 + phl.alpha2 / phl.kappa2
            sum_dp = de_dp.sum(axis=1)
            if np.any(np.abs(sum_dp) <= _DIVISOR_TINY):
                raise StepFailureError("mixture pressure-correction divisor "
                                       "vanished", stage=stage_index)

        fired = contact_switch(u_new_el, phl.p, self.eps_switch, self.eps1_switch)
        delta_e = (phi_E
                   - (u_half * phi_m).sum(axis=1)
                   + 0.5 * (u_prod * phi_rho).sum(axis=1)
                   - (de_dm1 * phi_m1 + de_dm2 * phi_m2 + de_dalpha * phi_alpha
                      + de_dp * phi_p).sum(axis=1))
        r_p = np.where(fired, 0.0, delta_e / sum_dp)

        acc_rp = rd.scatter_add(np.broadcast_to(r_p[:, None, None],
                                                (r_p.size, 2, 1)),
                                self._left, n_dofs)[:, 0]
        q_new[:, 4] = p_prov - dt / self._vols * acc_rp

        try:
            decode_phases(self.pair, q_new)
        except _eos.EosError as exc:
            raise StepFailureError(f"inadmissible stage state: {exc}",
                                   stage=stage_index) from exc

        phi_sigma_E = (de_dm1 * phi_m1 + de_dm2 * phi_m2 + de_dalpha * phi_alpha
                       + de_dp * (phi_p + r_p[:, None])
                       + u_half * phi_m - 0.5 * u_prod * phi_rho)
        defect = _defect(phi_sigma_E.sum(axis=1), phi_E,
                         np.abs(phi_sigma_E).sum(axis=1))

        audit = StageAudit()
        active = ~fired
        audit.energy_defect = float(defect[active].max()) if active.any() else 0.0
        audit.energy_defect_switched = float(defect[fired].max()) if fired.any() else 0.0
        audit.n_switched = int(fired.sum())
        audit.mass_defect = float(max(
            np.max(_defect(phi_m1.sum(axis=1), centered[:, 1],
                           np.abs(phi_m1).sum(axis=1))),
            np.max(_defect(phi_m2.sum(axis=1), centered[:, 2],
                           np.abs(phi_m2).sum(axis=1)))))
        audit.momentum_defect = float(np.max(_defect(
            phi_m.sum(axis=1), centered[:, 3], np.abs(phi_m).sum(axis=1))))
        return q_new, audit
