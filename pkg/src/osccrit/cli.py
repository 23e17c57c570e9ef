"""Command-line front end.

Every command prints one JSON document on stdout (floats with 17 significant
digits) and a short human-readable summary on stderr.  Exit codes:

    0  success
    1  example reproduction mismatch
    2  configuration error
    3  hypothesis or gate failure
    4  fixed-point iteration failed
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

from . import fixed_point as fpm
from .criteria import (
    HypothesisViolation,
    SystemSpec,
    Verdict,
    classify_oscillation,
)
from .quadrature import CoefFn, QuadConfig, QuadratureError, moment_integral
from .simulate import (
    Classification,
    InitialState,
    SimConfig,
    SimulationError,
    classify_trajectory,
    integrate,
    residual_check,
    write_csv,
    write_grid_csv,
)

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_GATE, EXIT_NONCONV = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

_DEFAULT_SYSTEM = SystemSpec(2, 2, 2.0, 3.0, CoefFn.of((1, 2, 0)), CoefFn.of((1, 4, 0)))
_DEFAULT_INIT = InitialState(0.0, (1.0, 0.0), (1.0, 0.0))


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs; sections mirror the library types."""

    system: SystemSpec = _DEFAULT_SYSTEM
    quad: QuadConfig = field(default_factory=QuadConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    init: InitialState = _DEFAULT_INIT
    fixed_point: fpm.FixedPointConfig = field(default_factory=fpm.FixedPointConfig)
    csv: Optional[str] = None
    format: str = "json"

    def to_dict(self) -> dict:
        sim = dataclasses.asdict(self.sim)
        sim.update(t0=self.init.t0, x1_derivs=list(self.init.x1_derivs), x2_derivs=list(self.init.x2_derivs))
        return {
            "system": self.system.to_dict(),
            "quad": dataclasses.asdict(self.quad),
            "sim": sim,
            "fixed_point": dataclasses.asdict(self.fixed_point),
            "output": {"csv": self.csv, "format": self.format},
        }


def _coerce(section: str, key: str, value: Any, default: Any) -> Any:
    where = f"{section}.{key}"
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string")
        return value
    return value


def _section(raw: dict, name: str, defaults: dict) -> dict:
    body = raw.get(name, {})
    if not isinstance(body, dict):
        raise ConfigError(f"section '{name}' must be an object")
    unknown = sorted(set(body) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown key(s) in '{name}': {', '.join(unknown)}")
    out = dict(defaults)
    for key, value in body.items():
        out[key] = _coerce(name, key, value, defaults[key])
    return out


def _terms(name: str, value: Any) -> CoefFn:
    if not isinstance(value, list):
        raise ConfigError(f"system.{name} must be a list of [c, p, q] triples")
    for term in value:
        if (not isinstance(term, list) or len(term) != 3
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in term)):
            raise ConfigError(f"system.{name}: bad term {term!r}")
    return CoefFn(tuple(tuple(float(v) for v in term) for term in value))


def _derivs(name: str, value: Any) -> tuple[float, ...]:
    if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
        raise ConfigError(f"sim.{name} must be a list of numbers")
    return tuple(float(v) for v in value)


def parse_config(raw: Any) -> RunConfig:
    """Build a ``RunConfig`` from a decoded JSON object; unknown keys are rejected."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    base = RunConfig().to_dict()
    unknown = sorted(set(raw) - set(base))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    try:
        sysd = _section(raw, "system", base["system"])
        system = SystemSpec(
            n1=sysd["n1"], n2=sysd["n2"], lambda1=sysd["lambda1"], lambda2=sysd["lambda2"],
            a1=_terms("a1", sysd["a1"]), a2=_terms("a2", sysd["a2"]),
            envelope=sysd["envelope"], M=sysd["M"],
        )
        quad = QuadConfig(**_section(raw, "quad", base["quad"]))
        simd = _section(raw, "sim", base["sim"])
        init = InitialState(simd.pop("t0"), _derivs("x1_derivs", simd.pop("x1_derivs")),
                            _derivs("x2_derivs", simd.pop("x2_derivs")))
        sim = SimConfig(**simd)
        fixed = fpm.FixedPointConfig(**_section(raw, "fixed_point", base["fixed_point"]))
        out = _section(raw, "output", base["output"])
    except ConfigError:
        raise
    except (TypeError, ValueError, SimulationError) as exc:
        raise ConfigError(str(exc)) from exc
    if out["csv"] is not None and not isinstance(out["csv"], str):
        raise ConfigError("output.csv must be a string or null")
    if out["format"] != "json":
        raise ConfigError("output.format must be 'json'")
    return RunConfig(system, quad, sim, init, fixed, out["csv"], out["format"])


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return parse_config(raw)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _enc(obj: Any, indent: int) -> str:
    pad, inner = " " * indent, " " * (indent + 2)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int,)) and not isinstance(obj, bool):
        return str(obj)
    if isinstance(obj, float):
        if math.isfinite(obj):
            return format(obj, ".17g")
        return json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if hasattr(obj, "item"):  # numpy scalar
        return _enc(obj.item(), indent)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_enc(v, indent + 2)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) or v is None for v in obj):
            return "[" + ", ".join(_enc(v, 0) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _enc(v, indent + 2) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """JSON text with every float printed to 17 significant digits."""
    return _enc(obj, 0) + "\n"


def _emit(report: dict, summary: str) -> None:
    sys.stdout.write(dumps(report))
    sys.stdout.flush()
    print(summary, file=sys.stderr)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_check_criteria(cfg: RunConfig) -> int:
    report: dict = {"command": "check-criteria", "system": cfg.system.to_dict()}
    try:
        res = classify_oscillation(cfg.system, cfg.quad)
    except HypothesisViolation as exc:
        report.update(hypothesis_ok=False, violations=[v.value for v in exc.violations])
        _emit(report, f"hypotheses violated: {', '.join(v.value for v in exc.violations)}")
        return EXIT_GATE
    report["criteria"] = res.to_dict()
    _emit(report, f"verdict: {res.verdict.value}  [{res.witness_branch}]")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    n1, n2 = cfg.system.n1, cfg.system.n2
    if len(cfg.init.x1_derivs) != n1 or len(cfg.init.x2_derivs) != n2:
        raise ConfigError(f"initial data must have {n1} + {n2} entries")
    traj = integrate(cfg.system, cfg.init, cfg.sim)
    report = {"command": "simulate", "system": cfg.system.to_dict(), "trajectory": traj.to_dict()}
    if traj.t.size > 2:
        r1, r2 = residual_check(traj, cfg.system)
        report["residuals"] = {"ode_residual_1": r1, "ode_residual_2": r2}
    if cfg.csv:
        write_csv(traj, cfg.csv)
        report["csv"] = cfg.csv
    _emit(report, f"status {traj.status.value}, classification {traj.classification.value}, "
                  f"zeros {len(traj.zeros1)}/{len(traj.zeros2)}")
    return EXIT_OK


def cmd_construct_nonosc(cfg: RunConfig) -> int:
    report: dict = {"command": "construct-nonosc", "system": cfg.system.to_dict()}
    try:
        crit = classify_oscillation(cfg.system, cfg.quad)
    except HypothesisViolation as exc:
        report.update(hypothesis_ok=False, violations=[v.value for v in exc.violations])
        _emit(report, "hypotheses violated")
        return EXIT_GATE
    report["criteria"] = crit.to_dict()
    if crit.verdict is not Verdict.NON_OSCILLATING_EXISTS:
        # still report P when it is exactly zero, the usual reason for the gate to close
        try:
            fpm.compute_P(cfg.system, cfg.quad)
        except fpm.DegenerateP as exc:
            report["degenerate_P"] = exc.P
        except (fpm.DivergentP, QuadratureError):
            pass
        report["error"] = f"criteria verdict is {crit.verdict.value}"
        _emit(report, f"gate closed: verdict {crit.verdict.value}")
        return EXIT_GATE
    spec = cfg.system if crit.k == 1 else cfg.system.swapped()
    report["swapped"] = crit.k == 2
    try:
        res = fpm.iterate_to_fixed_point(spec, cfg.fixed_point, cfg.quad, check_verdict=False)
    except fpm.DegenerateP as exc:
        report.update(degenerate_P=exc.P, error=str(exc))
        _emit(report, "degenerate P")
        return EXIT_GATE
    except (fpm.DivergentP, fpm.NoAdmissibleT) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        _emit(report, report["error"])
        return EXIT_GATE
    except fpm.NonConvergence as exc:
        report.update(error=str(exc), fixed_point=exc.result.to_dict())
        _emit(report, "no convergence")
        return EXIT_NONCONV
    except fpm.X1Escape as exc:
        report["error"] = f"X1Escape: {exc}"
        _emit(report, report["error"])
        return EXIT_NONCONV
    report["fixed_point"] = res.to_dict()
    ver = fpm.verify_solution(res, spec, cfg.fixed_point, raise_on_failure=False)
    report["verification"] = ver.to_dict()
    traj = fpm.simulate_witness(res, spec, cfg.sim)
    report["witness_simulation"] = {
        "status": traj.status.value, "t0": traj.t0, "t_stop": traj.t_stop,
        "classification": traj.classification.value,
        "zero_count1": len(traj.zeros1), "zero_count2": len(traj.zeros2),
    }
    if cfg.csv:
        write_grid_csv(res.t, res.x1_grid, res.x2_grid, cfg.csv)
        report["csv"] = cfg.csv
    _emit(report, f"P={res.P:.6g} K1={res.K1:.6g} T={res.T:g} iterations={res.iterations} "
                  f"final_delta={res.final_delta:.3g} verified={ver.passed}")
    return EXIT_OK if ver.passed else EXIT_NONCONV


EXAMPLES = {
    1: SystemSpec(2, 2, 2.0, 3.0, CoefFn.of((1, 2, 0)), CoefFn.of((1, 4, 0))),
    2: SystemSpec(2, 2, 2.0, 3.0, CoefFn.of((1, 2, 2)), CoefFn.of((1, 0, -1))),
}
_EXPECTED_BRANCH = {1: "(i)", 2: "(ii)"}


def cmd_reproduce_example(case: int, quad: QuadConfig = QuadConfig()) -> int:
    spec = EXAMPLES[case]
    crit = classify_oscillation(spec, quad)
    sim_cfg = SimConfig(t_end=10.0)
    traj = integrate(spec, InitialState(0.0, (1.0, 0.0), (1.0, 0.0)), sim_cfg)
    cls = classify_trajectory(traj, sim_cfg)
    report: dict = {
        "command": "reproduce-example", "case": case, "system": spec.to_dict(),
        "criteria": crit.to_dict(),
        "simulation": {"status": traj.status.value, "t_stop": traj.t_stop,
                       "classification": cls.value,
                       "zero_count1": len(traj.zeros1), "zero_count2": len(traj.zeros2)},
    }
    checks = {
        "verdict": crit.verdict is Verdict.ALL_OSCILLATE,
        "branch": f"k=1 {_EXPECTED_BRANCH[case]}" in crit.witness_branch,
        "simulation": cls not in (Classification.NON_OSCILLATING, Classification.WEAKLY_OSCILLATING),
    }
    if case == 1:
        checks["moments"] = crit.I1.divergent and crit.I2.divergent
    else:
        # plain integral of t^2 e^{-t}, i.e. twice the order-3 moment of a2
        inner = 2.0 * moment_integral(spec.a2, 3, quad).value
        report["inner_moment_value"] = inner
        checks["inner_value"] = abs(inner - 2.0) <= 1e-6
        checks["nested_divergent"] = crit.J1 is not None and crit.J1.divergent
    report["checks"] = checks
    report["reproduced"] = all(checks.values())
    _emit(report, f"case {case}: {crit.verdict.value} [{crit.witness_branch}], "
                  f"simulation {cls.value}, reproduced={report['reproduced']}")
    return EXIT_OK if report["reproduced"] else EXIT_MISMATCH


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--csv", metavar="PATH", help="write trajectory / grid CSV here")
    parser = argparse.ArgumentParser(prog="osccrit", parents=[common],
                                     description="Oscillation criteria for coupled power-law systems.")
    parser.add_argument("--dump-defaults", action="store_true", help="print the default configuration and exit")
    sub = parser.add_subparsers(dest="command")
    sub.add_parser("check-criteria", parents=[common], help="evaluate the integral criteria")
    sub.add_parser("simulate", parents=[common], help="integrate from the configured initial data")
    sub.add_parser("construct-nonosc", parents=[common], help="build a non-oscillating solution")
    rep = sub.add_parser("reproduce-example", parents=[common], help="rerun a built-in example")
    rep.add_argument("case", type=int, choices=sorted(EXAMPLES))
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.dump_defaults:
        sys.stdout.write(dumps(RunConfig().to_dict()))
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    start = time.perf_counter()
    try:
        cfg = load_config(args.config)
        if args.csv:
            cfg = dataclasses.replace(cfg, csv=args.csv)
        if args.command == "check-criteria":
            code = cmd_check_criteria(cfg)
        elif args.command == "simulate":
            code = cmd_simulate(cfg)
        elif args.command == "construct-nonosc":
            code = cmd_construct_nonosc(cfg)
        else:
            code = cmd_reproduce_example(args.case, cfg.quad)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"elapsed {time.perf_counter() - start:.3f} s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
