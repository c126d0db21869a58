"""Run configuration and its flat key-value file format.

A config file is INI-style with one section per block; every key is typed
and documented below.  All physical quantities are SI: m, s, kg/m^3, Pa,
J/m^3.  Floats are written with ``repr`` so a write/read round trip is
lossless.

    [run]      name, formulation, n_cells, cfl, t_final (s), order (1|2),
               audit, eps_switch, eps1_switch, oracle (auto|none),
               ic_kind (riemann|acoustic_pulse), optional max_steps,
               pulse_amplitude/center/width for the acoustic pulse
    [domain]   x_min, x_max, x_d (m)
    [left]     rho, u, p   (plus alpha1, rho1, rho2 for multiphase)
    [right]    same keys as [left]
    [eos]      single-phase EOS block: type plus its parameters
    [phase1]   multiphase EOS blocks, same layout as [eos]
    [phase2]

EOS parameter keys: gamma (perfect/stiffened), p_inf (Pa, stiffened),
rho0 (kg/m^3), A1, A2 (Pa), E1, E2, Gamma (Cochran-Chan).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

from .eos import CochranChan, EosModel, PerfectGas, StiffenedGas
from .mesh import ConfigurationError
from .riemann import EulerSide, MixtureSide
from .state import FORMULATIONS, PhasePair

Side = Union[EulerSide, MixtureSide]


@dataclass(frozen=True)
class RunConfig:
    name: str
    formulation: str
    x_min: float
    x_max: float
    x_d: float
    n_cells: int
    cfl: float
    t_final: float
    order: int
    left: Side
    right: Side
    eos: Optional[EosModel] = None
    pair: Optional[PhasePair] = None
    eps_switch: float = 1.0e-6
    eps1_switch: float = 1.0e-6
    audit: bool = True
    max_steps: Optional[int] = None
    oracle: str = "auto"
    ic_kind: str = "riemann"
    pulse_amplitude: float = 0.05
    pulse_center: float = 0.3
    pulse_width: float = 0.1

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ConfigurationError(f"unknown formulation {self.formulation!r}")
        if self.order not in (1, 2):
            raise ConfigurationError(f"order must be 1 or 2, got {self.order}")
        if self.t_final <= 0.0:
            raise ConfigurationError(f"t_final must be positive, got {self.t_final}")
        if self.formulation == "multiphase":
            if self.pair is None:
                raise ConfigurationError("multiphase runs need [phase1]/[phase2]")
            if not isinstance(self.left, MixtureSide):
                raise ConfigurationError("multiphase runs need mixture states")
        else:
            if self.eos is None:
                raise ConfigurationError("single-phase runs need an [eos] block")
            if not isinstance(self.left, EulerSide):
                raise ConfigurationError("single-phase runs need (rho, u, p) states")

    def with_overrides(self, **kwargs) -> "RunConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs)


_EOS_FIELDS = {
    "perfect_gas": ("gamma",),
    "stiffened_gas": ("gamma", "p_inf"),
    "cochran_chan": ("rho0", "A1", "E1", "A2", "E2", "Gamma"),
}
_EOS_TYPES = {
    "perfect_gas": PerfectGas,
    "stiffened_gas": StiffenedGas,
    "cochran_chan": CochranChan,
}


def _eos_to_items(eos: EosModel):
    for type_name, cls in _EOS_TYPES.items():
        if isinstance(eos, cls):
            items = {"type": type_name}
            for key in _EOS_FIELDS[type_name]:
                items[key] = repr(getattr(eos, key))
            return items
    raise ConfigurationError(f"unsupported EOS {eos!r}")


def _eos_from_section(section) -> EosModel:
    type_name = section.get("type")
    if type_name not in _EOS_TYPES:
        raise ConfigurationError(f"unknown EOS type {type_name!r}")
    kwargs = {key: float(section[key]) for key in _EOS_FIELDS[type_name]}
    return _EOS_TYPES[type_name](**kwargs)


def _side_to_items(side: Side):
    if isinstance(side, MixtureSide):
        keys = ("alpha1", "rho1", "rho2", "u", "p")
    else:
        keys = ("rho", "u", "p")
    return {k: repr(getattr(side, k)) for k in keys}


def _side_from_section(section, multiphase: bool) -> Side:
    if multiphase:
        return MixtureSide(alpha1=float(section["alpha1"]),
                           rho1=float(section["rho1"]),
                           rho2=float(section["rho2"]),
                           u=float(section["u"]), p=float(section["p"]))
    return EulerSide(rho=float(section["rho"]), u=float(section["u"]),
                     p=float(section["p"]))


def write_config(config: RunConfig, path) -> None:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    run = {
        "name": config.name,
        "formulation": config.formulation,
        "n_cells": str(config.n_cells),
        "cfl": repr(config.cfl),
        "t_final": repr(config.t_final),
        "order": str(config.order),
        "audit": str(config.audit).lower(),
        "eps_switch": repr(config.eps_switch),
        "eps1_switch": repr(config.eps1_switch),
        "oracle": config.oracle,
        "ic_kind": config.ic_kind,
    }
    if config.max_steps is not None:
        run["max_steps"] = str(config.max_steps)
    if config.ic_kind == "acoustic_pulse":
        run["pulse_amplitude"] = repr(config.pulse_amplitude)
        run["pulse_center"] = repr(config.pulse_center)
        run["pulse_width"] = repr(config.pulse_width)
    cp["run"] = run
    cp["domain"] = {"x_min": repr(config.x_min), "x_max": repr(config.x_max),
                    "x_d": repr(config.x_d)}
    cp["left"] = _side_to_items(config.left)
    cp["right"] = _side_to_items(config.right)
    if config.formulation == "multiphase":
        cp["phase1"] = _eos_to_items(config.pair.eos1)
        cp["phase2"] = _eos_to_items(config.pair.eos2)
    else:
        cp["eos"] = _eos_to_items(config.eos)
    with open(path, "w") as fh:
        cp.write(fh)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read(path)
    try:
        run = cp["run"]
        formulation = run["formulation"]
        multiphase = formulation == "multiphase"
        eos = pair = None
        if multiphase:
            pair = PhasePair(_eos_from_section(cp["phase1"]),
                             _eos_from_section(cp["phase2"]))
        else:
            eos = _eos_from_section(cp["eos"])
        kwargs = dict(
            name=run.get("name", path.stem),
            formulation=formulation,
            x_min=float(cp["domain"]["x_min"]),
            x_max=float(cp["domain"]["x_max"]),
            x_d=float(cp["domain"]["x_d"]),
            n_cells=int(run["n_cells"]),
            cfl=float(run["cfl"]),
            t_final=float(run["t_final"]),
            order=int(run["order"]),
            left=_side_from_section(cp["left"], multiphase),
            right=_side_from_section(cp["right"], multiphase),
            eos=eos,
            pair=pair,
            eps_switch=float(run.get("eps_switch", "1e-6")),
            eps1_switch=float(run.get("eps1_switch", "1e-6")),
            audit=run.get("audit", "true").lower() in ("true", "1", "yes"),
            oracle=run.get("oracle", "auto"),
            ic_kind=run.get("ic_kind", "riemann"),
        )
        if "max_steps" in run:
            kwargs["max_steps"] = int(run["max_steps"])
        if kwargs["ic_kind"] == "acoustic_pulse":
            kwargs["pulse_amplitude"] = float(run["pulse_amplitude"])
            kwargs["pulse_center"] = float(run["pulse_center"])
            kwargs["pulse_width"] = float(run["pulse_width"])
        return RunConfig(**kwargs)
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"malformed config {path}: {exc}") from exc
