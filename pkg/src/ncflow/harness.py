"""Case orchestration: time loop, error norms, reference sampling, outputs.

``run_case`` advances a configured problem from t=0 to t_final (the last
step is clipped to land exactly on t_final), tracks the per-step
conservation-audit maxima and compares the final snapshot against the
matching exact Riemann solution.  CSV emission is deterministic:
identical configs produce byte-identical files.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import eos as _eos
from . import riemann, state as st
from .config import RunConfig
from .eos import CochranChan, PerfectGas, StiffenedGas
from .euler import EulerDriver
from .mesh import ConfigurationError, Mesh1D, build_mesh, dual_volumes
from .multiphase import MultiphaseDriver, mixture_energy
from .rd_core import rk2_step
from .riemann import MixtureRiemannProblem, RiemannProblem

_FMT = "%.16e"   # 17 significant digits


@dataclass
class CaseResult:
    config: RunConfig
    mesh: Mesh1D
    state: st.SolutionState
    reference: Optional[Dict[str, np.ndarray]]
    errors: Optional[Dict[str, float]]
    audit_rows: List[Tuple[int, float, float]]
    audit_max: float
    audit_switched_max: float
    mass_defect_max: float
    momentum_defect_max: float
    steps: int
    wall_time: float


def make_driver(config: RunConfig, mesh: Mesh1D):
    if config.formulation == "multiphase":
        return MultiphaseDriver(pair=config.pair, mesh=mesh,
                                eps_switch=config.eps_switch,
                                eps1_switch=config.eps1_switch)
    return EulerDriver(formulation=config.formulation, eos=config.eos,
                       mesh=mesh, eps_switch=config.eps_switch,
                       eps1_switch=config.eps1_switch)


def eos_context(config: RunConfig):
    return config.pair if config.formulation == "multiphase" else config.eos


def initial_state(config: RunConfig, mesh: Mesh1D) -> st.SolutionState:
    x = mesh.vertices
    if config.ic_kind == "acoustic_pulse":
        base = config.left
        gamma = config.eos.gamma
        rho0, p0 = base.rho, base.p
        c0 = np.sqrt(gamma * p0 / rho0)
        bump = np.exp(-((x - config.pulse_center) / config.pulse_width) ** 2)
        rho = rho0 * (1.0 + config.pulse_amplitude * bump)
        p = p0 * (rho / rho0) ** gamma
        c = np.sqrt(gamma * p / rho)
        u = base.u + 2.0 / (gamma - 1.0) * (c - c0)   # right-moving simple wave
        return st.euler_state_from_primitives(config.formulation, rho, u, p,
                                              config.eos)
    if config.ic_kind != "riemann":
        raise ConfigurationError(f"unknown ic_kind {config.ic_kind!r}")
    on_left = x < config.x_d
    if config.formulation == "multiphase":
        l, r = config.left, config.right
        pick = lambda a, b: np.where(on_left, a, b)
        return st.multiphase_state_from_primitives(
            pick(l.alpha1, r.alpha1), pick(l.rho1, r.rho1),
            pick(l.rho2, r.rho2), pick(l.u, r.u), pick(l.p, r.p))
    l, r = config.left, config.right
    rho = np.where(on_left, l.rho, r.rho)
    u = np.where(on_left, l.u, r.u)
    p = np.where(on_left, l.p, r.p)
    return st.euler_state_from_primitives(config.formulation, rho, u, p,
                                          config.eos)


def solve_reference(config: RunConfig) -> Optional[riemann.WaveFan]:
    """Pick and run the exact solver matching the case's EOS setup."""
    if config.oracle == "none" or config.ic_kind != "riemann":
        return None
    if config.formulation == "multiphase":
        problem = MixtureRiemannProblem(left=config.left, right=config.right,
                                        pair=config.pair, x_d=config.x_d)
        return riemann.solve_mixture(problem)
    problem = RiemannProblem.single_eos(config.left, config.right, config.eos,
                                        config.x_d)
    if isinstance(config.eos, PerfectGas):
        return riemann.solve_perfect_gas(problem)
    if isinstance(config.eos, StiffenedGas):
        return riemann.solve_stiffened_gas(problem)
    return riemann.solve_mie_gruneisen(problem)


def solution_table(result_state: st.SolutionState, config: RunConfig) -> Dict[str, np.ndarray]:
    """Column arrays (rho, u, p, e[, alpha1, Y1]) of a solution snapshot."""
    ctx = eos_context(config)
    table = {
        "rho": st.density(result_state).copy(),
        "u": st.velocity(result_state),
        "p": st.pressure(result_state, ctx),
        "e": st.internal_energy(result_state, ctx),
    }
    if config.formulation == "multiphase":
        q = result_state.q
        table["alpha1"] = q[:, 0].copy()
        table["Y1"] = q[:, 1] / st.mixture_density(q)
    return table


def reference_table(fan: riemann.WaveFan, config: RunConfig,
                    x: np.ndarray, t: float) -> Dict[str, np.ndarray]:
    raw = fan.sample(x, t)
    table = {"rho": raw["rho"], "u": raw["u"], "p": raw["p"]}
    if config.formulation == "multiphase":
        table["e"] = np.asarray(mixture_energy(config.pair, raw["alpha1"],
                                               raw["rho1"], raw["rho2"],
                                               raw["p"]))
        table["alpha1"] = raw["alpha1"]
        table["Y1"] = raw["Y1"]
    else:
        # the two sides share one EOS in every built-in case
        table["e"] = np.asarray(_eos.energy_from_pressure(config.eos,
                                                          raw["rho"], raw["p"]))
    return table


def l1_error(num: np.ndarray, ref: np.ndarray, mesh: Mesh1D) -> float:
    """Dual-volume-weighted L1 distance of two DOF fields."""
    num = np.asarray(num, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if num.shape != ref.shape or num.shape != (mesh.n_dofs,):
        raise ValueError(f"field shapes {num.shape}/{ref.shape} do not match "
                         f"mesh with {mesh.n_dofs} DOFs")
    return float(np.sum(dual_volumes(mesh) * np.abs(num - ref)))


def run_case(config: RunConfig) -> CaseResult:
    t_start = _time.perf_counter()
    mesh = build_mesh(config.x_min, config.x_max, config.n_cells)
    solution = initial_state(config, mesh)
    driver = make_driver(config, mesh)
    ctx = eos_context(config)

    audit_rows: List[Tuple[int, float, float]] = []
    audit_max = audit_switched_max = mass_max = mom_max = 0.0
    steps = 0
    t = 0.0
    t_final = config.t_final
    while t < t_final * (1.0 - 1.0e-12):
        if config.max_steps is not None and steps >= config.max_steps:
            break
        dt = st.cfl_timestep(solution, mesh, ctx, config.cfl)
        dt = min(dt, t_final - t)
        solution, audit = rk2_step(solution, driver, dt, config.order)
        t = solution.time
        steps += 1
        audit_max = max(audit_max, audit.energy_defect)
        audit_switched_max = max(audit_switched_max, audit.energy_defect_switched)
        mass_max = max(mass_max, audit.mass_defect)
        mom_max = max(mom_max, audit.momentum_defect)
        if config.audit:
            audit_rows.append((steps, t, audit.energy_defect))

    reference = errors = None
    fan = solve_reference(config)
    if fan is not None and t > 0.0:
        reference = reference_table(fan, config, mesh.vertices, t)
        numeric = solution_table(solution, config)
        errors = {key: l1_error(numeric[key], reference[key], mesh)
                  for key in reference}

    return CaseResult(config=config, mesh=mesh, state=solution,
                      reference=reference, errors=errors,
                      audit_rows=audit_rows, audit_max=audit_max,
                      audit_switched_max=audit_switched_max,
                      mass_defect_max=mass_max, momentum_defect_max=mom_max,
                      steps=steps, wall_time=_time.perf_counter() - t_start)


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------

def _write_csv(path: Path, columns: Dict[str, np.ndarray]) -> None:
    keys = list(columns)
    rows = np.column_stack([np.asarray(columns[k], dtype=float) for k in keys])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(keys) + "\n")
        for row in rows:
            fh.write(",".join(_FMT % v for v in row) + "\n")


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Plot solution.csv (and reference.csv when present) from this directory.\"\"\"
import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(__file__).parent

def read(name):
    with open(here / name) as fh:
        rows = list(csv.DictReader(fh))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}

sol = read("solution.csv")
ref = read("reference.csv") if (here / "reference.csv").exists() else None
fields = [k for k in sol if k != "x"]
fig, axes = plt.subplots(len(fields), 1, figsize=(7, 2.6 * len(fields)),
                         sharex=True)
for ax, key in zip(axes, fields):
    ax.plot(sol["x"], sol[key], "b-", lw=1, label="numerical")
    if ref is not None and key in ref:
        ax.plot(ref["x"], ref[key], "k--", lw=1, label="exact")
    ax.set_ylabel(key)
    ax.legend(loc="best", fontsize=8)
axes[-1].set_xlabel("x [m]")
fig.tight_layout()
fig.savefig(here / "solution.png", dpi=150)
print(here / "solution.png")
"""


def write_outputs(result: CaseResult, out_dir) -> Dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    numeric = solution_table(result.state, result.config)
    columns = {"x": result.mesh.vertices, **numeric}
    paths["solution"] = out / "solution.csv"
    _write_csv(paths["solution"], columns)

    if result.reference is not None:
        ref_cols = {"x": result.mesh.vertices, **result.reference}
        paths["reference"] = out / "reference.csv"
        _write_csv(paths["reference"], ref_cols)

    paths["audit"] = out / "audit.csv"
    with open(paths["audit"], "w", newline="") as fh:
        fh.write("step,time,max_conservation_defect\n")
        for step, t, defect in result.audit_rows:
            fh.write(f"{step},{_FMT % t},{_FMT % defect}\n")

    paths["plot"] = out / "plot.py"
    paths["plot"].write_text(_PLOT_SCRIPT)
    return paths


# ---------------------------------------------------------------------------
# convergence study
# ---------------------------------------------------------------------------

def convergence_study(config: RunConfig, levels: Sequence[int]) -> Dict[str, object]:
    """Observed orders from Richardson self-reference over nested meshes.

    ``levels`` must double the cell count from one entry to the next so that
    coarse DOFs coincide with every second fine DOF.  Returns the per-variable
    least-squares slope of log(L1 difference) against log(h) together with
    the raw differences.
    """
    levels = list(levels)
    if len(levels) < 3:
        raise ConfigurationError("a convergence study needs >= 3 mesh levels")
    for a, b in zip(levels, levels[1:]):
        if b != 2 * a:
            raise ConfigurationError("mesh levels must double: got "
                                     f"{levels}")
    tables = []
    meshes = []
    for n in levels:
        res = run_case(replace(config, n_cells=n, audit=False))
        tables.append(solution_table(res.state, config))
        meshes.append(res.mesh)

    keys = [k for k in tables[0] if k in ("rho", "u", "p", "e")]
    errors = {k: [] for k in keys}
    hs = []
    for lvl in range(len(levels) - 1):
        coarse, fine = tables[lvl], tables[lvl + 1]
        mesh_c = meshes[lvl]
        hs.append(mesh_c.h)
        for k in keys:
            errors[k].append(l1_error(coarse[k], fine[k][::2], mesh_c))

    log_h = np.log(np.asarray(hs))
    orders = {}
    for k in keys:
        log_e = np.log(np.maximum(np.asarray(errors[k]), 1.0e-300))
        slope = np.polyfit(log_h, log_e, 1)[0]
        orders[k] = float(slope)
    return {"levels": levels, "h": hs, "errors": errors, "orders": orders}
