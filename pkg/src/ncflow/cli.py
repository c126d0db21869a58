"""Command-line interface.

Subcommands:
    run         advance a case and write solution/reference/audit CSVs
    riemann     sample the exact solution of a case to CSV
    converge    Richardson self-convergence over nested meshes
    list-cases  print the built-in case registry

Exit codes: 0 success, 1 configuration error, 2 solver failure,
3 oracle failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness
from .cases import builtin_cases, get_case
from .config import RunConfig, load_config, write_config
from .eos import EosError
from .mesh import ConfigurationError, build_mesh
from .rd_core import StepFailureError
from .riemann import OracleError


def _add_common_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--case", help="built-in case name")
    parser.add_argument("--config", help="run-configuration file")
    parser.add_argument("--formulation",
                        choices=["conservative", "energy", "pressure",
                                 "multiphase"])
    parser.add_argument("--cells", type=int, help="number of mesh cells")
    parser.add_argument("--cfl", type=float)
    parser.add_argument("--tfinal", type=float, help="final time [s]")
    parser.add_argument("--order", type=int, choices=[1, 2])
    parser.add_argument("--out", default="out", help="output directory")


def _resolve_config(args) -> RunConfig:
    if args.config:
        config = load_config(args.config)
    elif args.case:
        config = get_case(args.case)
    else:
        raise ConfigurationError("provide --case or --config")
    return config.with_overrides(
        formulation=args.formulation, n_cells=args.cells, cfl=args.cfl,
        t_final=args.tfinal, order=args.order,
        audit=getattr(args, "audit", None))


def _cmd_run(args) -> int:
    config = _resolve_config(args)
    result = harness.run_case(config)
    paths = harness.write_outputs(result, args.out)
    write_config(config, Path(args.out) / "case.cfg")
    print(f"{config.name}: {result.steps} steps to t={result.state.time:.6e}s "
          f"in {result.wall_time:.2f}s")
    print(f"conservation defect (corrected elements): {result.audit_max:.3e}; "
          f"switch-protected elements: {result.audit_switched_max:.3e}")
    if result.errors:
        pretty = ", ".join(f"{k}={v:.4e}" for k, v in sorted(result.errors.items()))
        print(f"L1 errors vs exact: {pretty}")
    print(f"wrote {paths['solution']}")
    return 0


def _cmd_riemann(args) -> int:
    config = _resolve_config(args)
    fan = harness.solve_reference(config)
    if fan is None:
        raise OracleError(f"case {config.name!r} has no exact solution")
    t = args.tfinal if args.tfinal else config.t_final
    x = np.linspace(config.x_min, config.x_max, args.samples)
    table = harness.reference_table(fan, config, x, t)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    harness._write_csv(out / "reference.csv", {"x": x, **table})
    print(f"p* = {fan.p_star:.10e}  u* = {fan.u_star:.10e}")
    print(f"left wave: {fan.left_wave.kind} "
          f"[{fan.left_wave.head:.4e}, {fan.left_wave.tail:.4e}] m/s; "
          f"right wave: {fan.right_wave.kind} "
          f"[{fan.right_wave.tail:.4e}, {fan.right_wave.head:.4e}] m/s")
    print(f"wrote {out / 'reference.csv'}")
    return 0


def _cmd_converge(args) -> int:
    config = _resolve_config(args)
    levels = [int(v) for v in args.levels.split(",")]
    study = harness.convergence_study(config, levels)
    for key, order in sorted(study["orders"].items()):
        errs = ", ".join(f"{e:.4e}" for e in study["errors"][key])
        print(f"{key}: observed order {order:.3f}  (L1 diffs: {errs})")
    return 0


def _cmd_list_cases(_args) -> int:
    for name, config in sorted(builtin_cases().items()):
        print(f"{name:20s} {config.formulation:12s} N={config.n_cells:<6d} "
              f"t_final={config.t_final:.3e}s")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a case")
    _add_common_overrides(p_run)
    p_run.add_argument("--audit", action=argparse.BooleanOptionalAction,
                       default=None, help="record per-step audit rows")
    p_run.set_defaults(func=_cmd_run)

    p_rie = sub.add_parser("riemann", help="sample the exact solution")
    _add_common_overrides(p_rie)
    p_rie.add_argument("--samples", type=int, default=2001)
    p_rie.set_defaults(func=_cmd_riemann)

    p_con = sub.add_parser("converge", help="grid-convergence study")
    _add_common_overrides(p_con)
    p_con.add_argument("--levels", default="100,200,400",
                       help="comma-separated cell counts, each double the last")
    p_con.set_defaults(func=_cmd_converge)

    p_list = sub.add_parser("list-cases", help="print built-in cases")
    p_list.set_defaults(func=_cmd_list_cases)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (StepFailureError, EosError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except OracleError as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
