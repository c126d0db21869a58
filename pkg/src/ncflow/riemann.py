"""Exact and semi-exact Riemann solvers used as verification baselines.

Four entry points share one machinery:

* :func:`solve_perfect_gas` and :func:`solve_stiffened_gas` use the closed
  form wave curves (a stiffened gas behaves like a perfect gas in the shifted
  pressure p + p_inf, possibly with different parameters per side);
* :func:`solve_mie_gruneisen` handles any supported EOS through numerically
  integrated isentropes and Hugoniot root-finding;
* :func:`solve_mixture` extends the latter to the two-phase mixture with a
  common pressure, frozen mass fractions along wave curves, per-phase
  Hugoniots through shocks and per-phase isentropes through rarefactions.

Every returned fan is validated: Rankine-Hugoniot residuals across shocks
and Riemann-invariant constancy along rarefactions are checked on the spot
and stored on the fan.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import eos as _eos
from .eos import CochranChan, EosModel, PerfectGas, StiffenedGas
from .state import PhasePair

_P_TOL = 1.0e-12          # relative tolerance on the star-pressure root
_ODE_RTOL = 1.0e-10       # isentrope integration tolerance
_RH_TOL_CLOSED = 1.0e-9   # residual bound, closed-form wave curves
_RH_TOL_ODE = 1.0e-8      # residual bound, integrated wave curves
_RH_TOL_MIX = 1.0e-7


class OracleError(RuntimeError):
    """The exact solver could not produce or validate a solution."""


def _c2_raw(eos: EosModel, rho: float, p: float) -> float:
    """Squared sound speed without the hyperbolicity guard (may be <= 0)."""
    e = float(eos.energy(rho, p))
    kappa, chi = eos.kappa_chi(rho, p)
    return float(chi + kappa * (e + p) / rho)


@dataclass(frozen=True)
class EulerSide:
    rho: float
    u: float
    p: float


@dataclass(frozen=True)
class MixtureSide:
    alpha1: float
    rho1: float
    rho2: float
    u: float
    p: float

    @property
    def rho(self) -> float:
        return self.alpha1 * self.rho1 + (1.0 - self.alpha1) * self.rho2

    @property
    def y1(self) -> float:
        return self.alpha1 * self.rho1 / self.rho


@dataclass(frozen=True)
class RiemannProblem:
    left: EulerSide
    right: EulerSide
    eos_left: EosModel
    eos_right: EosModel
    x_d: float = 0.5

    @classmethod
    def single_eos(cls, left: EulerSide, right: EulerSide, eos: EosModel,
                   x_d: float = 0.5) -> "RiemannProblem":
        return cls(left=left, right=right, eos_left=eos, eos_right=eos, x_d=x_d)


@dataclass(frozen=True)
class MixtureRiemannProblem:
    left: MixtureSide
    right: MixtureSide
    pair: PhasePair
    x_d: float = 0.5


@dataclass
class Wave:
    kind: str          # "shock" or "rarefaction"
    head: float        # outermost signal speed
    tail: float        # innermost signal speed (== head for a shock)


@dataclass
class WaveFan:
    p_star: float
    u_star: float
    left_wave: Wave
    right_wave: Wave
    x_d: float
    residuals: Dict[str, float] = field(default_factory=dict)
    _sampler: Callable[[float], Dict[str, float]] = None

    def sample_one(self, xi: float) -> Dict[str, float]:
        """State at similarity coordinate xi = (x - x_d)/t."""
        return self._sampler(xi)

    def sample(self, x: np.ndarray, t: float) -> Dict[str, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if t <= 0.0:
            raise OracleError("sampling requires t > 0")
        xi = (x - self.x_d) / t
        rows = [self._sampler(float(v)) for v in xi]
        return {k: np.array([r[k] for r in rows]) for k in rows[0]}


# ---------------------------------------------------------------------------
# side wave curves
# ---------------------------------------------------------------------------

def _gamma_pinf(eos: EosModel):
    if isinstance(eos, PerfectGas):
        return eos.gamma, 0.0
    if isinstance(eos, StiffenedGas):
        return eos.gamma, eos.p_inf
    raise OracleError(f"closed-form wave curves need a (stiffened) perfect "
                      f"gas, got {type(eos).__name__}")


class _ClosedFormSide:
    """Wave curve of one side for a gamma-law / stiffened EOS."""

    def __init__(self, side: EulerSide, eos: EosModel, sign: float):
        self.side = side
        self.eos = eos
        self.sign = sign            # -1 for the left wave, +1 for the right
        self.gamma, self.p_inf = _gamma_pinf(eos)
        self.pi0 = side.p + self.p_inf
        if self.pi0 <= 0.0 or side.rho <= 0.0:
            raise OracleError(f"inadmissible side state {side}")
        self.c0 = np.sqrt(self.gamma * self.pi0 / side.rho)

    def _pi(self, p: float) -> float:
        return p + self.p_inf

    def delta_u(self, p: float) -> float:
        g = self.gamma
        pi, pi0 = self._pi(p), self.pi0
        if pi <= 0.0:
            raise OracleError("wave curve left the admissible pressure range")
        if p > self.side.p:
            a = 2.0 / ((g + 1.0) * self.side.rho)
            b = (g - 1.0) / (g + 1.0) * pi0
            return (pi - pi0) * np.sqrt(a / (pi + b))
        return (2.0 * self.c0 / (g - 1.0)) * ((pi / pi0) ** ((g - 1.0) / (2.0 * g)) - 1.0)

    def star_density(self, p: float) -> float:
        g = self.gamma
        r = self._pi(p) / self.pi0
        if p > self.side.p:
            gg = (g - 1.0) / (g + 1.0)
            return self.side.rho * (r + gg) / (gg * r + 1.0)
        return self.side.rho * r ** (1.0 / g)

    def wave(self, p: float, u_star: float) -> Wave:
        if p > self.side.p:
            rho_s = self.star_density(p)
            v0, vs = 1.0 / self.side.rho, 1.0 / rho_s
            m = np.sqrt((p - self.side.p) / (v0 - vs))
            s = self.side.u + self.sign * m * v0
            return Wave("shock", head=s, tail=s)
        c_star = np.sqrt(self.gamma * self._pi(p) / self.star_density(p))
        return Wave("rarefaction", head=self.side.u + self.sign * self.c0,
                    tail=u_star + self.sign * c_star)

    def sample_fan(self, xi: float) -> Dict[str, float]:
        g = self.gamma
        s = self.sign
        # invariant u - s*2c/(g-1) is constant through the fan
        j = self.side.u - s * 2.0 * self.c0 / (g - 1.0)
        c = s * (xi - j) * (g - 1.0) / (g + 1.0)
        u = xi - s * c
        pi = self.pi0 * (c / self.c0) ** (2.0 * g / (g - 1.0))
        rho = g * pi / (c * c)
        return {"rho": rho, "u": u, "p": pi - self.p_inf}

    def invariant_residual(self, p_star: float, u_star: float) -> float:
        if p_star > self.side.p:
            return 0.0
        g = self.gamma
        c_star = np.sqrt(g * self._pi(p_star) / self.star_density(p_star))
        j0 = self.side.u - self.sign * 2.0 * self.c0 / (g - 1.0)
        j1 = u_star - self.sign * 2.0 * c_star / (g - 1.0)
        return abs(j1 - j0) / (abs(j0) + abs(j1) + 1.0e-300)


class _OdeSide:
    """Wave curve of one side for a general EOS.

    The rarefaction branch integrates the isentrope dp/drho = c^2 together
    with du/drho = sign*c/rho downward in density; the shock branch solves
    the Hugoniot e2 - e1 = (p1 + p2)(v1 - v2)/2 (specific energies) for the
    post-shock density at each trial pressure.
    """

    _N_DENSE = 4001

    def __init__(self, side: EulerSide, eos: EosModel, sign: float,
                 rho_floor_ratio: float = 1.0e-6):
        self.side = side
        self.eos = eos
        self.sign = sign
        self.c0 = float(_eos.sound_speed(eos, side.rho, side.p))
        self.eps0 = float(_eos.energy_from_pressure(eos, side.rho, side.p)) / side.rho
        self._integrate_isentrope(rho_floor_ratio)

    # -- rarefaction ------------------------------------------------------

    def _integrate_isentrope(self, rho_floor_ratio: float):
        side, eos = self.side, self.eos
        c2_floor = (1.0e-6 * self.c0) ** 2

        def rhs(rho, y):
            c2 = _c2_raw(eos, rho, y[0])
            if c2 <= 0.0:
                return [0.0, 0.0]
            return [c2, self.sign * np.sqrt(c2) / rho]

        def losing_hyperbolicity(rho, y):
            return _c2_raw(eos, rho, y[0]) - c2_floor

        losing_hyperbolicity.terminal = True
        losing_hyperbolicity.direction = -1

        sol = solve_ivp(rhs, (side.rho, side.rho * rho_floor_ratio),
                        [side.p, side.u], rtol=_ODE_RTOL,
                        atol=[1.0e-10 * (abs(side.p) + 1.0), 1.0e-12 * (self.c0 + 1.0)],
                        dense_output=True, events=losing_hyperbolicity,
                        method="RK45")
        if sol.status < 0:
            raise OracleError(f"isentrope integration failed: {sol.message}")
        self._rar_sol = sol.sol
        self._rho_end = float(sol.t[-1])
        self._p_floor = float(sol.sol(self._rho_end)[0])

    def _rar_state(self, rho: float):
        p, u = self._rar_sol(rho)
        return float(p), float(u)

    def _rar_density(self, p: float) -> float:
        if p < self._p_floor:
            raise OracleError(
                f"rarefaction curve only reaches p = {self._p_floor:.6e}, "
                f"needed {p:.6e}")
        return brentq(lambda rho: self._rar_sol(rho)[0] - p,
                      self._rho_end, self.side.rho,
                      xtol=1.0e-15 * self.side.rho, rtol=8.9e-16)

    # -- shock ------------------------------------------------------------

    def _hugoniot_mismatch(self, p: float, rho: float) -> float:
        eps = float(_eos.energy_from_pressure(self.eos, rho, p)) / rho
        v0, v = 1.0 / self.side.rho, 1.0 / rho
        return eps - self.eps0 - 0.5 * (p + self.side.p) * (v0 - v)

    def _shock_density(self, p: float) -> float:
        rho0 = self.side.rho
        lo = rho0 * (1.0 + 1.0e-12)
        f_lo = self._hugoniot_mismatch(p, lo)
        hi = lo
        for _ in range(200):
            hi *= 1.05
            f_hi = self._hugoniot_mismatch(p, hi)
            if f_lo * f_hi <= 0.0:
                return brentq(lambda r: self._hugoniot_mismatch(p, r), lo, hi,
                              xtol=1.0e-13 * rho0, rtol=8.9e-16)
            lo, f_lo = hi, f_hi
        raise OracleError(f"no Hugoniot bracket for p = {p:.6e}")

    # -- wave-curve interface ----------------------------------------------

    def delta_u(self, p: float) -> float:
        side = self.side
        if p > side.p:
            rho_s = self._shock_density(p)
            v0, vs = 1.0 / side.rho, 1.0 / rho_s
            if vs >= v0:
                raise OracleError("non-compressive shock branch")
            return float(np.sqrt((p - side.p) * (v0 - vs)))
        rho_s = self._rar_density(p)
        _, u_s = self._rar_state(rho_s)
        return float(self.sign * (u_s - side.u))

    def star_density(self, p: float) -> float:
        if p > self.side.p:
            return self._shock_density(p)
        return self._rar_density(p)

    def wave(self, p: float, u_star: float) -> Wave:
        side = self.side
        if p > side.p:
            rho_s = self._shock_density(p)
            v0, vs = 1.0 / side.rho, 1.0 / rho_s
            m = np.sqrt((p - side.p) / (v0 - vs))
            s = side.u + self.sign * m * v0
            return Wave("shock", head=s, tail=s)
        rho_s = self._rar_density(p)
        c_s = float(_eos.sound_speed(self.eos, rho_s, p))
        return Wave("rarefaction", head=side.u + self.sign * self.c0,
                    tail=u_star + self.sign * c_s)

    def sample_fan(self, xi: float) -> Dict[str, float]:
        def speed(rho):
            p, u = self._rar_state(rho)
            c = float(_eos.sound_speed(self.eos, rho, p))
            return u + self.sign * c - xi

        rho = brentq(speed, self._rho_end, self.side.rho,
                     xtol=1.0e-14 * self.side.rho, rtol=8.9e-16)
        p, u = self._rar_state(rho)
        return {"rho": rho, "u": u, "p": p}

    def invariant_residual(self, p_star: float, u_star: float) -> float:
        """Quadrature check of du = sign*c/rho drho along the used fan part."""
        if p_star > self.side.p:
            return 0.0
        from scipy.integrate import simpson
        rho_s = self._rar_density(p_star)
        grid = np.linspace(rho_s, self.side.rho, self._N_DENSE)
        p = self._rar_sol(grid)[0]
        c = np.asarray(_eos.sound_speed(self.eos, grid, p))
        integral = simpson(self.sign * c / grid, x=grid)
        lhs = self.side.u - u_star
        return abs(lhs - integral) / (abs(lhs) + abs(integral) + 1.0e-300)


class _MixtureCurveSide:
    """Wave curve of one two-phase side with frozen mass fractions."""

    _N_DENSE = 4001

    def __init__(self, side: MixtureSide, pair: PhasePair, sign: float):
        self.side = side
        self.pair = pair
        self.sign = sign
        self.y1 = side.y1
        self.y2 = 1.0 - self.y1
        self.c0 = self._wood(side.rho1, side.rho2, side.p)
        self.eps10 = float(_eos.energy_from_pressure(pair.eos1, side.rho1, side.p)) / side.rho1
        self.eps20 = float(_eos.energy_from_pressure(pair.eos2, side.rho2, side.p)) / side.rho2
        self._integrate_isentrope()

    def _mix_rho(self, rho1, rho2):
        return 1.0 / (self.y1 / rho1 + self.y2 / rho2)

    def _wood(self, rho1, rho2, p):
        c1_sq = float(_eos.sound_speed(self.pair.eos1, rho1, p)) ** 2
        c2_sq = float(_eos.sound_speed(self.pair.eos2, rho2, p)) ** 2
        rho = self._mix_rho(rho1, rho2)
        alpha1 = self.y1 * rho / rho1
        alpha2 = self.y2 * rho / rho2
        return float(np.sqrt(1.0 / (rho * (alpha1 / (rho1 * c1_sq)
                                           + alpha2 / (rho2 * c2_sq)))))

    def _integrate_isentrope(self):
        side = self.side
        c2_floor = (1.0e-6 * self.c0) ** 2

        def rhs(p, y):
            rho1, rho2, u = y
            c1_sq = _c2_raw(self.pair.eos1, rho1, p)
            c2_sq = _c2_raw(self.pair.eos2, rho2, p)
            if c1_sq <= 0.0 or c2_sq <= 0.0:
                return [0.0, 0.0, 0.0]
            rho = self._mix_rho(rho1, rho2)
            c = self._wood(rho1, rho2, p)
            return [1.0 / c1_sq, 1.0 / c2_sq, self.sign / (rho * c)]

        def losing_hyperbolicity(p, y):
            return min(_c2_raw(self.pair.eos1, y[0], p),
                       _c2_raw(self.pair.eos2, y[1], p)) - c2_floor

        losing_hyperbolicity.terminal = True
        losing_hyperbolicity.direction = -1

        p_floor = side.p * 1.0e-9
        sol = solve_ivp(rhs, (side.p, p_floor), [side.rho1, side.rho2, side.u],
                        rtol=_ODE_RTOL,
                        atol=[1.0e-12 * side.rho1, 1.0e-12 * side.rho2, 1.0e-14],
                        dense_output=True, events=losing_hyperbolicity,
                        method="RK45")
        if sol.status < 0:
            raise OracleError(f"mixture isentrope failed: {sol.message}")
        self._rar_sol = sol.sol
        self._p_floor = float(sol.t[-1])

    def _rar_state(self, p: float):
        if p < self._p_floor:
            raise OracleError("mixture rarefaction out of range")
        rho1, rho2, u = self._rar_sol(p)
        return float(rho1), float(rho2), float(u)

    def _phase_shock_density(self, eos, rho0, eps0, p):
        def mismatch(rho):
            eps = float(_eos.energy_from_pressure(eos, rho, p)) / rho
            return eps - eps0 - 0.5 * (p + self.side.p) * (1.0 / rho0 - 1.0 / rho)

        lo = rho0 * (1.0 + 1.0e-12)
        f_lo = mismatch(lo)
        hi = lo
        for _ in range(200):
            hi *= 1.05
            f_hi = mismatch(hi)
            if f_lo * f_hi <= 0.0:
                return brentq(mismatch, lo, hi, xtol=1.0e-13 * rho0, rtol=8.9e-16)
            lo, f_lo = hi, f_hi
        raise OracleError(f"no phase Hugoniot bracket for p = {p:.6e}")

    def _shock_state(self, p: float):
        rho1 = self._phase_shock_density(self.pair.eos1, self.side.rho1,
                                         self.eps10, p)
        rho2 = self._phase_shock_density(self.pair.eos2, self.side.rho2,
                                         self.eps20, p)
        return rho1, rho2

    def delta_u(self, p: float) -> float:
        side = self.side
        if p > side.p:
            rho1, rho2 = self._shock_state(p)
            v0 = 1.0 / side.rho
            v = self.y1 / rho1 + self.y2 / rho2
            if v >= v0:
                raise OracleError("non-compressive mixture shock")
            return float(np.sqrt((p - side.p) * (v0 - v)))
        _, _, u_s = self._rar_state(p)
        return float(self.sign * (u_s - side.u))

    def star_phase_densities(self, p: float):
        if p > self.side.p:
            return self._shock_state(p)
        rho1, rho2, _ = self._rar_state(p)
        return rho1, rho2

    def wave(self, p: float, u_star: float) -> Wave:
        side = self.side
        if p > side.p:
            rho1, rho2 = self._shock_state(p)
            v0 = 1.0 / side.rho
            v = self.y1 / rho1 + self.y2 / rho2
            m = np.sqrt((p - side.p) / (v0 - v))
            s = side.u + self.sign * m * v0
            return Wave("shock", head=s, tail=s)
        rho1, rho2, _ = self._rar_state(p)
        c_s = self._wood(rho1, rho2, p)
        return Wave("rarefaction", head=side.u + self.sign * self.c0,
                    tail=u_star + self.sign * c_s)

    def sample_fan(self, xi: float) -> Dict[str, float]:
        def speed(p):
            rho1, rho2, u = self._rar_state(p)
            return u + self.sign * self._wood(rho1, rho2, p) - xi

        p = brentq(speed, self._p_floor, self.side.p,
                   xtol=1.0e-14 * self.side.p, rtol=8.9e-16)
        rho1, rho2, u = self._rar_state(p)
        return self._row(rho1, rho2, u, p)

    def _row(self, rho1, rho2, u, p):
        rho = self._mix_rho(rho1, rho2)
        alpha1 = self.y1 * rho / rho1
        return {"rho": rho, "u": u, "p": p, "alpha1": alpha1,
                "rho1": rho1, "rho2": rho2, "Y1": self.y1}

    def invariant_residual(self, p_star: float, u_star: float) -> float:
        if p_star > self.side.p:
            return 0.0
        from scipy.integrate import simpson
        grid = np.linspace(p_star, self.side.p, self._N_DENSE)
        rho1, rho2, _ = self._rar_sol(grid)
        rho = 1.0 / (self.y1 / rho1 + self.y2 / rho2)
        c = np.array([self._wood(r1, r2, p)
                      for r1, r2, p in zip(rho1, rho2, grid)])
        integral = simpson(self.sign / (rho * c), x=grid)
        lhs = self.side.u - u_star
        return abs(lhs - integral) / (abs(lhs) + abs(integral) + 1.0e-300)


# ---------------------------------------------------------------------------
# star-state solve and fan assembly
# ---------------------------------------------------------------------------

def _solve_star_pressure(left_curve, right_curve, p_l, p_r,
                         u_l, u_r) -> float:
    def phi(p):
        return (u_l - left_curve.delta_u(p)) - (u_r + right_curve.delta_u(p))

    p_lo = min(p_l, p_r)
    p_hi = max(p_l, p_r)
    if abs(phi(p_lo)) == 0.0:
        return p_lo
    if phi(p_lo) < 0.0:
        for _ in range(200):
            p_hi, p_lo = p_lo, 0.5 * p_lo
            if phi(p_lo) >= 0.0:
                break
        else:
            raise OracleError("no star-pressure bracket (possible vacuum)")
    else:
        if phi(p_hi) > 0.0:
            for _ in range(200):
                p_lo, p_hi = p_hi, 2.0 * p_hi
                if phi(p_hi) <= 0.0:
                    break
            else:
                raise OracleError("no star-pressure bracket at high pressure")
    return brentq(phi, p_lo, p_hi, rtol=_P_TOL, xtol=1.0e-300, maxiter=200)


def _euler_fan(problem: RiemannProblem, left_curve, right_curve,
               rh_tol: float) -> WaveFan:
    s_l, s_r = problem.left, problem.right
    p_star = _solve_star_pressure(left_curve, right_curve, s_l.p, s_r.p,
                                  s_l.u, s_r.u)
    u_star = 0.5 * ((s_l.u - left_curve.delta_u(p_star))
                    + (s_r.u + right_curve.delta_u(p_star)))
    rho_star_l = left_curve.star_density(p_star)
    rho_star_r = right_curve.star_density(p_star)
    lw = left_curve.wave(p_star, u_star)
    rw = right_curve.wave(p_star, u_star)

    def sampler(xi: float) -> Dict[str, float]:
        if xi <= u_star:
            if lw.kind == "shock":
                if xi < lw.head:
                    return {"rho": s_l.rho, "u": s_l.u, "p": s_l.p}
                return {"rho": rho_star_l, "u": u_star, "p": p_star}
            if xi < lw.head:
                return {"rho": s_l.rho, "u": s_l.u, "p": s_l.p}
            if xi < lw.tail:
                return left_curve.sample_fan(xi)
            return {"rho": rho_star_l, "u": u_star, "p": p_star}
        if rw.kind == "shock":
            if xi > rw.head:
                return {"rho": s_r.rho, "u": s_r.u, "p": s_r.p}
            return {"rho": rho_star_r, "u": u_star, "p": p_star}
        if xi > rw.head:
            return {"rho": s_r.rho, "u": s_r.u, "p": s_r.p}
        if xi > rw.tail:
            return right_curve.sample_fan(xi)
        return {"rho": rho_star_r, "u": u_star, "p": p_star}

    fan = WaveFan(p_star=p_star, u_star=u_star, left_wave=lw, right_wave=rw,
                  x_d=problem.x_d, _sampler=sampler)
    fan.residuals = _validate_euler_fan(problem, fan, rho_star_l, rho_star_r,
                                        left_curve, right_curve, rh_tol)
    return fan


def _shock_rh_residual(eos: EosModel, pre: Dict[str, float],
                       post: Dict[str, float], speed: float) -> float:
    res, scale = [], []
    for st in (pre, post):
        rho, u, p = st["rho"], st["u"], st["p"]
        e = float(_eos.energy_from_pressure(eos, rho, p))
        E = e + 0.5 * rho * u * u
        w = u - speed
        res.append(np.array([rho * w, rho * u * w + p, E * w + p * u]))
        # normalize against the term magnitudes: the fluxes themselves may
        # nearly cancel (momentum at strong shocks)
        scale.append(np.array([abs(rho * w), abs(rho * u * w) + abs(p),
                               abs(E * w) + abs(p * u)]))
    num = np.abs(res[0] - res[1])
    den = scale[0] + scale[1] + 1.0
    return float(np.max(num / den))


def _validate_euler_fan(problem, fan, rho_star_l, rho_star_r,
                        left_curve, right_curve, rh_tol) -> Dict[str, float]:
    residuals = {}
    star_l = {"rho": rho_star_l, "u": fan.u_star, "p": fan.p_star}
    star_r = {"rho": rho_star_r, "u": fan.u_star, "p": fan.p_star}
    for tag, wave, side, star, eos, curve in (
            ("left", fan.left_wave, problem.left, star_l, problem.eos_left,
             left_curve),
            ("right", fan.right_wave, problem.right, star_r, problem.eos_right,
             right_curve)):
        pre = {"rho": side.rho, "u": side.u, "p": side.p}
        if wave.kind == "shock":
            residuals[f"rh_{tag}"] = _shock_rh_residual(eos, pre, star,
                                                        wave.head)
        else:
            residuals[f"invariant_{tag}"] = curve.invariant_residual(
                fan.p_star, fan.u_star)
    worst = max(residuals.values(), default=0.0)
    if worst > rh_tol:
        raise OracleError(f"fan failed validation: {residuals}")
    return residuals


def solve_perfect_gas(problem: RiemannProblem) -> WaveFan:
    """Exact solution for gamma-law gases (possibly different per side)."""
    for eos in (problem.eos_left, problem.eos_right):
        if not isinstance(eos, PerfectGas):
            raise OracleError("solve_perfect_gas needs PerfectGas on both sides")
    return solve_stiffened_gas(problem)


def solve_stiffened_gas(problem: RiemannProblem) -> WaveFan:
    """Closed-form solution in the shifted pressure p + p_inf."""
    gl, pil = _gamma_pinf(problem.eos_left)
    gr, pir = _gamma_pinf(problem.eos_right)
    cl = np.sqrt(gl * (problem.left.p + pil) / problem.left.rho)
    cr = np.sqrt(gr * (problem.right.p + pir) / problem.right.rho)
    if (2.0 * cl / (gl - 1.0) + 2.0 * cr / (gr - 1.0)
            <= problem.right.u - problem.left.u):
        raise OracleError("vacuum formation: wave curves do not intersect")
    left_curve = _ClosedFormSide(problem.left, problem.eos_left, -1.0)
    right_curve = _ClosedFormSide(problem.right, problem.eos_right, +1.0)
    return _euler_fan(problem, left_curve, right_curve, _RH_TOL_CLOSED)


def solve_mie_gruneisen(problem: RiemannProblem) -> WaveFan:
    """General-EOS solution via integrated isentropes and Hugoniot roots."""
    left_curve = _OdeSide(problem.left, problem.eos_left, -1.0)
    right_curve = _OdeSide(problem.right, problem.eos_right, +1.0)
    return _euler_fan(problem, left_curve, right_curve, _RH_TOL_ODE)


def solve_mixture(problem: MixtureRiemannProblem) -> WaveFan:
    """Two-phase solution with frozen mass fractions along the wave curves."""
    s_l, s_r = problem.left, problem.right
    left_curve = _MixtureCurveSide(s_l, problem.pair, -1.0)
    right_curve = _MixtureCurveSide(s_r, problem.pair, +1.0)
    p_star = _solve_star_pressure(left_curve, right_curve, s_l.p, s_r.p,
                                  s_l.u, s_r.u)
    u_star = 0.5 * ((s_l.u - left_curve.delta_u(p_star))
                    + (s_r.u + right_curve.delta_u(p_star)))
    lw = left_curve.wave(p_star, u_star)
    rw = right_curve.wave(p_star, u_star)

    def star_row(curve, p, u):
        rho1, rho2 = curve.star_phase_densities(p)
        row = curve._row(rho1, rho2, u, p)
        return row

    star_l = star_row(left_curve, p_star, u_star)
    star_r = star_row(right_curve, p_star, u_star)

    def side_row(curve):
        s = curve.side
        return curve._row(s.rho1, s.rho2, s.u, s.p)

    row_l = side_row(left_curve)
    row_r = side_row(right_curve)

    def sampler(xi: float) -> Dict[str, float]:
        if xi <= u_star:
            if lw.kind == "shock":
                return row_l if xi < lw.head else star_l
            if xi < lw.head:
                return row_l
            if xi < lw.tail:
                return left_curve.sample_fan(xi)
            return star_l
        if rw.kind == "shock":
            return row_r if xi > rw.head else star_r
        if xi > rw.head:
            return row_r
        if xi > rw.tail:
            return right_curve.sample_fan(xi)
        return star_r

    fan = WaveFan(p_star=p_star, u_star=u_star, left_wave=lw, right_wave=rw,
                  x_d=problem.x_d, _sampler=sampler)

    residuals = {}
    for tag, wave, row0, row1, curve in (("left", lw, row_l, star_l, left_curve),
                                         ("right", rw, row_r, star_r, right_curve)):
        if wave.kind == "shock":
            residuals[f"rh_{tag}"] = _mixture_rh_residual(problem.pair, row0,
                                                          row1, wave.head)
        else:
            residuals[f"invariant_{tag}"] = curve.invariant_residual(p_star,
                                                                     u_star)
    worst = max(residuals.values(), default=0.0)
    if worst > _RH_TOL_MIX:
        raise OracleError(f"mixture fan failed validation: {residuals}")
    fan.residuals = residuals
    return fan


def _mixture_rh_residual(pair: PhasePair, pre: Dict[str, float],
                         post: Dict[str, float], speed: float) -> float:
    res, scale = [], []
    for st in (pre, post):
        rho, u, p = st["rho"], st["u"], st["p"]
        alpha1 = st["alpha1"]
        e1 = float(_eos.energy_from_pressure(pair.eos1, st["rho1"], p))
        e2 = float(_eos.energy_from_pressure(pair.eos2, st["rho2"], p))
        E = alpha1 * e1 + (1.0 - alpha1) * e2 + 0.5 * rho * u * u
        w = u - speed
        res.append(np.array([rho * w, rho * u * w + p, E * w + p * u,
                             st["rho1"] * st["alpha1"] * w]))
        scale.append(np.array([abs(rho * w), abs(rho * u * w) + abs(p),
                               abs(E * w) + abs(p * u),
                               abs(st["rho1"] * st["alpha1"] * w)]))
    num = np.abs(res[0] - res[1])
    den = scale[0] + scale[1] + 1.0
    return float(np.max(num / den))
