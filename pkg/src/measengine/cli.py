"""Command-line front end.

Exit codes: 0 success, 2 config error, 3 validation error, 4 numerical
failure, 5 invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import math
import re
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import config as cfgmod
from .config import ConfigError, ValidationError
from .cycle import run_cycle
from .errors import DimensionError, DomainError, InvariantViolation, NumericalError
from .measurement import (
    ProjectiveBasis,
    RegisterState,
    iter_bad_apple,
    nonselective_measure,
    register_readout,
)
from .oracle import IsothermalSchedule, simulate_full_cycle
from .report import ReportBundle, run_bundle, sweep_row
from .states import maximally_mixed, pure_state, random_density_matrix
from .linalg import partial_trace, tensor, trace_distance

log = logging.getLogger("measengine")

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_INVARIANT = 0, 2, 3, 4, 5

ORACLE_FINAL_TOL = 1e-6
ORACLE_SLACK_TOL = 1e-12
RESIDUAL_TOL = 1e-10


# -- helpers --------------------------------------------------------------------

def _load(args) -> cfgmod.ScenarioConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = cfgmod.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.steps is not None:
        cfg.oracle_steps = args.steps
    return cfg


def _emit(bundle: ReportBundle, args) -> None:
    text = bundle.render(args.format)
    if args.out:
        out = Path(args.out)
        out.write_text(text)
        if args.plot:
            from .plotting import figure_path, plot_bundle

            fig = plot_bundle(bundle, figure_path(out))
            log.info("figure written to %s", fig)
        if not args.quiet:
            sys.stdout.write(bundle.to_table() if args.format != "table" else text)
    elif not args.quiet:
        sys.stdout.write(text)


def _evaluate(scn: cfgmod.Scenario, steps: Optional[int] = None):
    cfg = scn.config
    ledger = run_cycle(scn.rho, scn.basis, scn.h, scn.bath, selective=cfg.mode == "selective",
                       gauge=cfg.gauge, permutation=cfg.permutation, check=False)
    oracle = None
    n = cfg.oracle_steps if steps is None else steps
    if n:
        oracle = simulate_full_cycle(scn.rho, scn.basis, scn.h, scn.bath, IsothermalSchedule(n),
                                     gauge=cfg.gauge, permutation=cfg.permutation)
    return ledger, oracle


def _oracle_violations(oracle) -> list[str]:
    out = []
    if abs(oracle.isothermal.first_law_residual) > 1e-12:
        out.append(f"oracle first law off by {oracle.isothermal.first_law_residual:.3e}")
    if oracle.second_law_slack < -ORACLE_SLACK_TOL:
        out.append(f"oracle beats the reversible bound (slack {oracle.second_law_slack:.3e})")
    if oracle.isothermal.steps >= 10_000 and oracle.final_distance > ORACLE_FINAL_TOL:
        out.append(f"oracle final state off by {oracle.final_distance:.3e}")
    return out


_PI_RE = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*?\s*)?pi\s*(?:/\s*([0-9.eE+-]+))?\s*$")


def parse_value(token: str) -> float:
    """Float, or a multiple/fraction of pi such as ``pi/8`` or ``3*pi/8``."""
    m = _PI_RE.match(token)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    return float(token)


def parse_grid(text: str) -> list[float]:
    try:
        return [parse_value(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad grid value in {text!r}") from exc


# -- subcommands ------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = _load(args)
    scn = cfgmod.build(cfg)
    ledger, oracle = _evaluate(scn)
    bundle = run_bundle(cfg.name, ledger, oracle)
    problems = ledger.violations() + (_oracle_violations(oracle) if oracle else []) + [
        f"non-finite field {f}" for f in bundle.nonfinite_fields()
    ]
    _emit(bundle, args)
    if problems:
        for p in problems:
            log.error("invariant violated: %s", p)
        return EXIT_INVARIANT
    return EXIT_OK


def _default_grid(param: str, cfg: cfgmod.ScenarioConfig, points: int) -> list[float]:
    if param == "basis_angle":
        return [float(x) for x in np.linspace(0.0, math.pi / 2, points)]
    if param == "temperature":
        return [float(x) for x in np.linspace(0.5 * cfg.temperature, 2.0 * cfg.temperature, points)]
    return [100.0, 1000.0, 10000.0]


def cmd_sweep(args) -> int:
    cfg = _load(args)
    param = args.param
    grid = parse_grid(args.grid) if args.grid else _default_grid(param, cfg, args.points)
    if param == "basis_angle" and cfg.dim != 2:
        raise ValidationError("basis_angle sweeps need a qubit scenario")
    if param == "oracle_steps":
        if any(v < 1 or v != int(v) for v in grid):
            raise ValidationError("oracle_steps grid must hold positive integers")
        if grid != sorted(grid):
            raise ValidationError("oracle_steps grid must be ascending")

    rows, problems = [], []
    for value in grid:
        if param == "basis_angle":
            scn = cfgmod.build(cfg, theta=value)
            ledger, oracle = _evaluate(scn, steps=0)
        elif param == "temperature":
            scn = cfgmod.build(cfg, temperature=value)
            ledger, oracle = _evaluate(scn, steps=0)
        else:
            scn = cfgmod.build(cfg)
            ledger, oracle = _evaluate(scn, steps=int(value))
            value = int(value)
            problems += _oracle_violations(oracle)
        problems += ledger.violations()
        rows.append(sweep_row(value, ledger, oracle))

    if param == "oracle_steps":
        errs = [r["oracle_error"] for r in rows]
        if any(b > a for a, b in zip(errs, errs[1:])):
            problems.append("oracle error does not decrease along the step grid")

    bundle = ReportBundle(cfg.name, sweep_parameter=param, sweep_rows=rows)
    problems += [f"non-finite field {f}" for f in bundle.nonfinite_fields()]
    _emit(bundle, args)
    for p in problems:
        log.error("invariant violated: %s", p)
    return EXIT_INVARIANT if problems else EXIT_OK


def cmd_verify(args) -> int:
    from .verify import format_results, run_suites

    results = run_suites(args.depth, base_seed=args.seed or 0)
    text = format_results(results)
    if args.out:
        Path(args.out).write_text(text)
    if not args.quiet:
        sys.stdout.write(text)
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


def parse_register(spec: str) -> RegisterState:
    """``zero``, ``one``, ``mixed``, ``plus`` or ``diag:P0``."""
    spec = spec.strip().lower()
    if spec == "zero":
        return RegisterState(pure_state([1, 0]))
    if spec == "one":
        return RegisterState(pure_state([0, 1]))
    if spec == "mixed":
        return RegisterState(maximally_mixed(2))
    if spec == "plus":
        return RegisterState(pure_state([1, 1]))
    if spec.startswith("diag:"):
        try:
            p0 = float(spec[5:])
        except ValueError as exc:
            raise ConfigError(f"bad register population in {spec!r}") from exc
        if not 0.0 <= p0 <= 1.0:
            raise ValidationError(f"register population must be in [0, 1], got {p0}")
        return RegisterState.diagonal(p0)
    raise ConfigError(f"unknown register spec {spec!r} (zero|one|mixed|plus|diag:P0)")


BAD_APPLE_COLUMNS = ["schema_version", "qubit", "channel_residual", "register_coherence",
                     "premeasure_correlation", "readout_correlation"]


def bad_apple_report(n: int, reg: RegisterState, rng: np.random.Generator) -> list[dict]:
    """Per-qubit residuals for a register reused across ``n`` random qubits.

    ``premeasure_correlation`` is the trace distance of the post-CNOT joint
    state from the product of its marginals; ``readout_correlation`` is the
    same after the register has been read out in z.
    """
    states = [random_density_matrix(2, rng) for _ in range(n)]
    z = ProjectiveBasis.z()
    rows = []
    for i, (rho, step) in enumerate(zip(states, iter_bad_apple(states, reg))):
        direct = nonselective_measure(rho, z)
        read = register_readout(step.joint)
        rows.append({
            "qubit": i,
            "channel_residual": float(np.max(np.abs(step.system.matrix - direct.matrix))),
            "register_coherence": step.register.coherence,
            "premeasure_correlation": _correlation(step.joint.matrix),
            "readout_correlation": _correlation(read.matrix),
        })
    return rows


def _correlation(joint: np.ndarray) -> float:
    a = partial_trace(joint, (2, 2), "A")
    b = partial_trace(joint, (2, 2), "B")
    return trace_distance(joint, tensor(a, b))


def cmd_bad_apple(args) -> int:
    if args.n < 1:
        raise ValidationError(f"n must be at least 1, got {args.n}")
    reg = parse_register(args.register)
    if not reg.is_z_diagonal():
        raise ValidationError("register must commute with sigma_z")
    rng = np.random.default_rng(args.seed or 0)
    rows = bad_apple_report(args.n, reg, rng)
    if args.format == "csv":
        lines = [",".join(BAD_APPLE_COLUMNS)]
        lines += [",".join([str(1)] + [repr(r[c]) if isinstance(r[c], float) else str(r[c])
                                       for c in BAD_APPLE_COLUMNS[1:]]) for r in rows]
        text = "\n".join(lines) + "\n"
    elif args.format == "json":
        import json

        text = json.dumps({"schema_version": 1, "register": args.register, "qubits": rows}, indent=2) + "\n"
    else:
        text = f"{'qubit':>6s}{'channel resid':>16s}{'reg coherence':>16s}{'CNOT corr':>14s}{'readout corr':>14s}\n"
        text += "".join(
            f"{r['qubit']:>6d}{r['channel_residual']:>16.3e}{r['register_coherence']:>16.3e}"
            f"{r['premeasure_correlation']:>14.3e}{r['readout_correlation']:>14.3e}\n" for r in rows
        )
    if args.out:
        Path(args.out).write_text(text)
    if not args.quiet:
        sys.stdout.write(text)
    bad = [r for r in rows if r["channel_residual"] > RESIDUAL_TOL or r["register_coherence"] > RESIDUAL_TOL]
    return EXIT_INVARIANT if bad else EXIT_OK


# -- entry point --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON file or bundled scenario name")
    common.add_argument("--out", help="write the report to this file")
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--steps", type=int, help="override oracle step count")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--quiet", action="store_true", help="no stdout output")
    common.add_argument("--plot", action="store_true",
                        help="also render a PNG figure next to --out")

    p = argparse.ArgumentParser(prog="measengine", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("run", parents=[common], help="run one scenario").set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", parents=[common], help="sweep one parameter of a scenario")
    sp.add_argument("--param", required=True, choices=("basis_angle", "temperature", "oracle_steps"))
    sp.add_argument("--grid", help="comma-separated values; pi fractions allowed, e.g. 0,pi/8,pi/4")
    sp.add_argument("--points", type=int, default=5, help="grid size when --grid is omitted")
    sp.set_defaults(func=cmd_sweep)

    vp = sub.add_parser("verify", parents=[common], help="run the invariant suites")
    vp.add_argument("--depth", choices=("quick", "full"), default="quick")
    vp.set_defaults(func=cmd_verify)

    bp = sub.add_parser("bad-apple", parents=[common], help="reuse one register across n qubits")
    bp.add_argument("--n", type=int, default=10)
    bp.add_argument("--register", default="mixed", help="zero|one|mixed|plus|diag:P0")
    bp.set_defaults(func=cmd_bad_apple)

    sub.add_parser("list", help="list bundled scenarios").set_defaults(func=cmd_list)
    return p


def cmd_list(args) -> int:
    for name in cfgmod.bundled_names():
        print(name)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if getattr(args, "plot", False) and not args.out:
        parser.error("--plot needs --out")
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (ValidationError, DomainError, DimensionError) as exc:
        log.error("validation error: %s", exc)
        return EXIT_VALIDATION
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except InvariantViolation as exc:
        log.error("invariant violated: %s", exc)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
