"""Acceptance criteria, one test per criterion.

Each test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line (also when run
as ``python tests/test_acceptance.py``) before asserting.
"""
import io
import json
import math
import sys
import time
from contextlib import redirect_stdout

import numpy as np
import pandas as pd
import pytest

from osccrit.cli import main
from osccrit.criteria import SystemSpec
from osccrit.fixed_point import FixedPointConfig, iterate_to_fixed_point, simulate_witness, verify_solution
from osccrit.quadrature import CoefFn, closed_form_moment, moment_integral, symbolic_moment
from osccrit.simulate import (
    Classification,
    InitialState,
    SimConfig,
    csv_text,
    integrate,
    is_proper,
    residual_check,
    residual_tolerance,
)

EX1 = SystemSpec(2, 2, 2.0, 3.0, CoefFn.of((1, 2, 0)), CoefFn.of((1, 4, 0)))
EX2 = SystemSpec(2, 2, 2.0, 3.0, CoefFn.of((1, 2, 2)), CoefFn.of((1, 0, -1)))
WITNESS = SystemSpec(2, 2, 2.0, 3.0, CoefFn.of((1, 1, 0)), CoefFn.of((1, 0, -3)))
HARMONIC = SystemSpec(1, 1, 1.0, 1.0, CoefFn.of((1, 0, 0)), CoefFn.of((1, 0, 0)))


def _line(n, ok, detail):
    return f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}"


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print("\n" + _line(n, ok, detail))
        assert ok, detail

    return emit


def _cli(*argv):
    buf = io.StringIO()
    start = time.perf_counter()
    with redirect_stdout(buf):
        code = main(list(argv))
    return code, json.loads(buf.getvalue()), time.perf_counter() - start


def check_1():
    code, doc, dt = _cli("reproduce-example", "1")
    crit = doc["criteria"]
    ok = (code == 0 and crit["verdict"] == "AllOscillate" and crit["I1"]["kind"] == "Divergent"
          and crit["I2"]["kind"] == "Divergent" and dt < 5)
    return ok, f"verdict {crit['verdict']}, I1 {crit['I1']['kind']}, I2 {crit['I2']['kind']}, {dt:.2f} s"


def check_2():
    code, doc, dt = _cli("reproduce-example", "2")
    crit = doc["criteria"]
    inner = 2 * moment_integral(CoefFn.of((1, 0, -1)), 3).value
    ok = (code == 0 and crit["verdict"] == "AllOscillate" and "(ii)" in crit["witness_branch"]
          and abs(inner - 2) <= 1e-6 and abs(doc["inner_moment_value"] - 2) <= 1e-6
          and crit["J1"]["kind"] == "Divergent" and dt < 5)
    return ok, (f"verdict {crit['verdict']} [{crit['witness_branch']}], inner {inner:.12g}, "
                f"J1 {crit['J1']['kind']}, {dt:.2f} s")


def check_3():
    start = time.perf_counter()
    rng = np.random.default_rng(20240611)
    worst = 0.0
    for _ in range(200):
        c, p = 10 ** rng.uniform(-2, 2), rng.uniform(0, 6)
        q, n = -(10 ** rng.uniform(-1, 0.7)), int(rng.integers(1, 6))
        got = moment_integral(CoefFn.of((c, p, q)), n).value
        worst = max(worst, abs(got - closed_form_moment(c, p, q, n)) / closed_form_moment(c, p, q, n))
    agree = 0
    grid = [(q, p, n) for q in (-2, -0.5, 0, 0.5, 2) for p in (0, 1, 2.5) for n in (1, 2, 3, 5)]
    for q, p, n in grid:
        a = CoefFn.of((1.0, p, q))
        # moment_integral raises if the numeric verdict disagrees with the exact one
        agree += moment_integral(a, n).divergent == symbolic_moment(a, n).divergent
    dt = time.perf_counter() - start
    ok = worst <= 1e-8 and agree == len(grid) and dt < 30
    return ok, f"worst relative error {worst:.2e} over 200, verdicts agree {agree}/{len(grid)}, {dt:.2f} s"


def check_4():
    start = time.perf_counter()
    res = iterate_to_fixed_point(WITNESS, FixedPointConfig(grid_points=4000))
    ver = verify_solution(res, WITNESS, raise_on_failure=False)
    dt = time.perf_counter() - start
    x1_changes = int(np.count_nonzero(np.diff(np.sign(res.x1_grid))))
    ok = (abs(res.P - 1 / 8748) <= 1e-8 / 8748
          and abs(res.K1 - 8748 ** 0.2) <= 1e-12
          and res.final_delta <= 1e-8
          and res.t.size == 4000
          and max(ver.ode_residual_1, ver.ode_residual_2) <= 1e-5
          and x1_changes == 0
          and ver.limit_error_x1 <= ver.bound_x1
          and dt < 60)
    return ok, (f"P rel err {abs(res.P * 8748 - 1):.1e}, K1 {res.K1:.15g}, T {res.T:g}, "
                f"final_delta {res.final_delta:.1e}, residuals {ver.ode_residual_1:.1e}/{ver.ode_residual_2:.1e}, "
                f"x1 sign changes {x1_changes}, |x1(t_max)-K1| {ver.limit_error_x1:.1e} <= {ver.bound_x1:.1e}, "
                f"{dt:.2f} s")


def check_5():
    res = iterate_to_fixed_point(WITNESS)
    witness = simulate_witness(res, WITNESS).classification
    rng = np.random.default_rng(7)
    cfg = SimConfig(t_end=10)
    counts: dict[str, int] = {}
    runs = 0
    while runs < 20:
        v = rng.uniform(-1, 1, 4)
        tr = integrate(EX1, InitialState(0.0, v[:2], v[2:]), cfg)
        if not is_proper(tr, cfg):
            continue
        runs += 1
        counts[tr.classification.value] = counts.get(tr.classification.value, 0) + 1
    bad = counts.get("NonOscillating", 0) + counts.get("WeaklyOscillating", 0)
    ok = witness is Classification.NON_OSCILLATING and bad == 0
    return ok, f"witness {witness.value}; example 1 over {runs} random inits: {counts}"


def check_6():
    tr = integrate(HARMONIC, InitialState(0.0, (1.0,), (0.0,)), SimConfig(t_end=4 * math.pi))
    zeros = np.array(tr.zeros1 + tr.zeros2)
    k = np.round(zeros / (math.pi / 2))
    zero_err = float(np.max(np.abs(zeros - k * math.pi / 2)))
    zero_ok = zero_err <= 1e-8 and len(tr.zeros1) == 4 and len(tr.zeros2) == 4
    cfg = SimConfig(t_end=10)
    regressions = [(s, InitialState(0.0, (1.0, 0.0), (1.0, 0.0))) for s in (EX1, EX2)]
    regressions.append((HARMONIC, InitialState(0.0, (1.0,), (0.0,))))
    worst = 0.0
    csv_ok = True
    for spec, init in regressions:
        traj = integrate(spec, init, cfg)
        worst = max(worst, *residual_check(traj, spec))
        df = pd.read_csv(io.StringIO(csv_text(traj)), float_precision="round_trip")
        csv_ok &= bool(np.array_equal(df.to_numpy(), np.column_stack([traj.t, traj.y])))
    ok = zero_ok and worst <= residual_tolerance(cfg) and csv_ok
    return ok, (f"harmonic zero error {zero_err:.1e}, worst residual {worst:.1e} "
                f"(tol {residual_tolerance(cfg):.0e}), CSV round-trip {'exact' if csv_ok else 'mismatch'}")


CHECKS = [check_1, check_2, check_3, check_4, check_5, check_6]


@pytest.mark.parametrize("n", range(1, 7))
def test_acceptance(n, report):
    ok, detail = CHECKS[n - 1]()
    report(n, ok, detail)


if __name__ == "__main__":
    failures = 0
    for n, check in enumerate(CHECKS, start=1):
        ok, detail = check()
        failures += not ok
        print(_line(n, ok, detail))
    sys.exit(1 if failures else 0)
