"""Direct simulation of the coupled system with zero detection.

The system is reduced to first order with state
``u = (x1, x1', ..., x1^(n1-1), x2, ..., x2^(n2-1))`` and integrated with an
explicit embedded Runge-Kutta pair (DOP853) that provides dense output.
Zeros of ``x1`` and ``x2`` are bracketed on the dense output and refined with
Brent's method.
"""
from __future__ import annotations

import csv
import enum
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, TextIO, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .criteria import SystemSpec

logger = logging.getLogger(__name__)

BLOWUP_LEVEL = 1e12


class SimulationError(Exception):
    pass


class InvalidInit(SimulationError, ValueError):
    pass


class IncompleteTrajectory(SimulationError):
    pass


class Status(str, enum.Enum):
    COMPLETED = "Completed"
    BLOW_UP = "BlowUp"
    STEP_FAILURE = "StepFailure"


class Classification(str, enum.Enum):
    OSCILLATING = "Oscillating"
    WEAKLY_OSCILLATING = "WeaklyOscillating"
    NON_OSCILLATING = "NonOscillating"
    INDETERMINATE = "Indeterminate"
    IMPROPER = "Improper"


@dataclass(frozen=True)
class InitialState:
    t0: float
    x1_derivs: tuple[float, ...]
    x2_derivs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "x1_derivs", tuple(float(v) for v in self.x1_derivs))
        object.__setattr__(self, "x2_derivs", tuple(float(v) for v in self.x2_derivs))
        if self.t0 < 0:
            raise InvalidInit("t0 must be nonnegative")

    @property
    def is_trivial(self) -> bool:
        return not any(self.x1_derivs) and not any(self.x2_derivs)

    def vector(self) -> np.ndarray:
        return np.array(self.x1_derivs + self.x2_derivs, dtype=float)


@dataclass(frozen=True)
class SimConfig:
    t_end: float = 20.0
    rtol: float = 1e-10
    atol: float = 1e-12
    zero_refine_tol: float = 1e-12
    tail_fraction: float = 0.5
    osc_min_zeros: int = 2
    proper_eps: float = 1e-12
    # classify blow-up runs on the window that ends at the escape time
    classify_blowup: bool = True

    def __post_init__(self) -> None:
        if not 0 < self.tail_fraction <= 1:
            raise ValueError("tail_fraction must lie in (0, 1]")
        if self.osc_min_zeros < 1:
            raise ValueError("osc_min_zeros must be >= 1")
        for name in ("rtol", "atol", "zero_refine_tol", "proper_eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def to_first_order(spec: SystemSpec) -> Callable[[float, np.ndarray], np.ndarray]:
    """Vector field of dimension ``n1 + n2`` for the first-order reduction."""
    n1, n2 = spec.n1, spec.n2

    def field_(t: float, u: np.ndarray) -> np.ndarray:
        du = np.empty_like(u, dtype=float)
        du[: n1 - 1] = u[1:n1]
        du[n1 - 1] = spec.f1(t, u[n1])
        du[n1 : n1 + n2 - 1] = u[n1 + 1 :]
        du[n1 + n2 - 1] = spec.f2(t, u[0])
        return du

    return field_


@dataclass(frozen=True)
class Trajectory:
    n1: int
    n2: int
    t: np.ndarray
    y: np.ndarray  # shape (len(t), n1 + n2)
    zeros1: tuple[float, ...]
    zeros2: tuple[float, ...]
    status: Status
    status_time: Optional[float]
    t_requested: float
    classification: Classification = Classification.INDETERMINATE
    dense: Optional[Callable] = field(default=None, repr=False, compare=False)

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_stop(self) -> float:
        return float(self.t[-1])

    def x1(self, t=None):
        return self.y[:, 0] if t is None else self.dense(t)[0]

    def x2(self, t=None):
        return self.y[:, self.n1] if t is None else self.dense(t)[self.n1]

    def header(self) -> list[str]:
        cols = ["t"]
        for name, n in (("x1", self.n1), ("x2", self.n2)):
            cols += [name] + [f"{name}_d{j}" for j in range(1, n)]
        return cols

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "status_time": self.status_time,
            "t0": self.t0,
            "t_stop": self.t_stop,
            "t_end": self.t_requested,
            "classification": self.classification.value,
            "zeros1": list(self.zeros1),
            "zeros2": list(self.zeros2),
            "zero_count1": len(self.zeros1),
            "zero_count2": len(self.zeros2),
            "accepted_steps": int(self.t.size - 1),
        }


def _find_zeros(sol, comp: int, ts: np.ndarray, ys: np.ndarray, slope: Optional[float],
                cfg: SimConfig, subdivide: int = 4) -> list[float]:
    """Strict sign changes of one component, refined on the dense output."""
    # sample each accepted step at a few interior points to catch close pairs
    if ts.size > 1:
        frac = np.arange(subdivide) / subdivide
        fine_t = (ts[:-1, None] + np.diff(ts)[:, None] * frac[None, :]).ravel()
        fine_t = np.append(fine_t, ts[-1])
        fine_v = sol(fine_t)[comp]
        fine_v[::subdivide] = ys[:, comp]
    else:
        fine_t, fine_v = ts, ys[:, comp]

    zeros: list[float] = []
    last_sign, last_t = 0.0, None

    def f(tt):
        return float(sol(tt)[comp])

    for tt, v in zip(fine_t, fine_v):
        s = np.sign(v)
        if s == 0:
            continue
        if last_sign != 0 and s != last_sign:
            zeros.append(brentq(f, last_t, tt, xtol=cfg.zero_refine_tol, rtol=4 * np.finfo(float).eps))
        last_sign, last_t = s, tt
    # a transversal crossing just past the final sample that the step error
    # control cannot tell apart from one at the final sample
    v_end = fine_v[-1]
    if slope is not None and last_sign != 0 and v_end != 0 and np.sign(slope) == -np.sign(v_end):
        noise = cfg.atol + cfg.rtol * float(np.max(np.abs(ys[-1])))
        if abs(v_end) <= noise + abs(slope) * cfg.zero_refine_tol:
            zeros.append(float(fine_t[-1]))
    return zeros


def integrate(spec: SystemSpec, init: InitialState, cfg: SimConfig = SimConfig()) -> Trajectory:
    """Integrate from ``init.t0`` to ``cfg.t_end`` and locate zeros.

    Blow-up (``max |u| > 1e12``) and step-size underflow end the run early and
    are reported through ``Trajectory.status``.
    """
    if len(init.x1_derivs) != spec.n1 or len(init.x2_derivs) != spec.n2:
        raise InvalidInit(
            f"initial state has {len(init.x1_derivs)}+{len(init.x2_derivs)} derivatives, "
            f"system orders are {spec.n1}+{spec.n2}"
        )
    if not cfg.t_end > init.t0:
        raise InvalidInit("t_end must exceed t0")
    rhs = to_first_order(spec)

    def blowup(t, u):
        return np.max(np.abs(u)) - BLOWUP_LEVEL

    blowup.terminal = True

    with np.errstate(over="ignore", invalid="ignore"):
        sol = solve_ivp(rhs, (init.t0, cfg.t_end), init.vector(), method="DOP853",
                        rtol=cfg.rtol, atol=cfg.atol, dense_output=True, events=blowup)
    ts = np.asarray(sol.t)
    ys = np.asarray(sol.y).T.copy()
    if sol.status == 1:
        status, status_time = Status.BLOW_UP, float(ts[-1])
    elif sol.status == 0:
        status, status_time = Status.COMPLETED, None
    else:
        status, status_time = Status.STEP_FAILURE, float(ts[-1])
        logger.warning("integration stopped at t=%.6g: %s", ts[-1], sol.message)

    du_end = rhs(ts[-1], ys[-1])
    zeros1 = _find_zeros(sol.sol, 0, ts, ys, du_end[0], cfg)
    zeros2 = _find_zeros(sol.sol, spec.n1, ts, ys, du_end[spec.n1], cfg)
    ts.setflags(write=False)
    ys.setflags(write=False)
    traj = Trajectory(spec.n1, spec.n2, ts, ys, tuple(zeros1), tuple(zeros2), status, status_time,
                      float(cfg.t_end), dense=sol.sol)
    try:
        label = classify_trajectory(traj, cfg)
    except IncompleteTrajectory:
        label = Classification.INDETERMINATE
    return Trajectory(spec.n1, spec.n2, ts, ys, traj.zeros1, traj.zeros2, status, status_time,
                      float(cfg.t_end), label, sol.sol)


def tail_window(traj: Trajectory, cfg: SimConfig) -> tuple[float, float]:
    end = traj.t_stop
    return end - cfg.tail_fraction * (end - traj.t0), end


def is_proper(traj: Trajectory, cfg: SimConfig = SimConfig()) -> bool:
    """Whether ``|x1| + |x2|`` stays above ``proper_eps`` somewhere in the tail window."""
    lo, _ = tail_window(traj, cfg)
    mask = traj.t >= lo
    mag = np.abs(traj.y[mask, 0]) + np.abs(traj.y[mask, traj.n1])
    return bool(mag.size and mag.max() > cfg.proper_eps)


def classify_trajectory(traj: Trajectory, cfg: SimConfig = SimConfig()) -> Classification:
    """Finite-window oscillation label from zero counts in the tail window.

    Raises
    ------
    IncompleteTrajectory
        For step failures, and for blow-ups unless ``cfg.classify_blowup``.
    """
    if traj.status is Status.STEP_FAILURE or (traj.status is Status.BLOW_UP and not cfg.classify_blowup):
        raise IncompleteTrajectory(f"trajectory status {traj.status.value} at t={traj.status_time}")
    if not is_proper(traj, cfg):
        return Classification.IMPROPER
    lo, hi = tail_window(traj, cfg)
    c1 = sum(lo <= z <= hi for z in traj.zeros1)
    c2 = sum(lo <= z <= hi for z in traj.zeros2)
    k = cfg.osc_min_zeros
    if c1 >= k and c2 >= k:
        return Classification.OSCILLATING
    if (c1 >= k and c2 == 0) or (c2 >= k and c1 == 0):
        return Classification.WEAKLY_OSCILLATING
    if c1 == 0 and c2 == 0:
        return Classification.NON_OSCILLATING
    return Classification.INDETERMINATE


def residual_check(traj: Trajectory, spec: SystemSpec, n_points: int = 100) -> tuple[float, float]:
    """Largest scaled ODE residuals at interior dense-output points.

    ``x_i^(n_i)`` is the central difference (step ``1e-4`` of the local
    accepted step) of the top state derivative, so the check does not reuse
    the vector field seen by the integrator.  Residuals are divided by
    ``max(1, |f_i|, |x_i^(n_i-1)| / step)`` so that they stay meaningful close
    to a blow-up.
    """
    n1, n2 = spec.n1, spec.n2
    steps = np.diff(traj.t)
    idx = np.unique(np.linspace(0, steps.size - 1, n_points).astype(int))
    ts = traj.t[idx] + 0.5 * steps[idx]
    h = 1e-4 * steps[idx]
    up, dn, mid = traj.dense(ts + h), traj.dense(ts - h), traj.dense(ts)
    out = []
    for top, rhs in ((n1 - 1, spec.f1(ts, mid[n1])), (n1 + n2 - 1, spec.f2(ts, mid[0]))):
        fd = (up[top] - dn[top]) / (2 * h)
        scale = np.maximum.reduce([np.ones_like(ts), np.abs(rhs), np.abs(mid[top]) / steps[idx]])
        out.append(float(np.max(np.abs(fd - rhs) / scale)))
    return out[0], out[1]


def residual_tolerance(cfg: SimConfig) -> float:
    """Acceptance level for ``residual_check`` at the given step control."""
    return max(1e4 * cfg.rtol, 1e-5)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_csv(traj: Trajectory, dest: Union[str, Path, TextIO]) -> None:
    """One row per accepted step; ``.17g`` numbers, ``\\n`` line endings."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="", encoding="ascii") as fh:
            write_csv(traj, fh)
        return
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(traj.header())
    for tt, row in zip(traj.t, traj.y):
        w.writerow([_fmt(tt)] + [_fmt(v) for v in row])


def write_grid_csv(t: Sequence[float], x1: Sequence[float], x2: Sequence[float],
                   dest: Union[str, Path, TextIO]) -> None:
    """Grid functions in the trajectory CSV dialect with columns ``t,x1,x2``."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="", encoding="ascii") as fh:
            write_grid_csv(t, x1, x2, fh)
        return
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(["t", "x1", "x2"])
    for row in zip(t, x1, x2):
        w.writerow([_fmt(v) for v in row])


def csv_text(traj: Trajectory) -> str:
    buf = io.StringIO()
    write_csv(traj, buf)
    return buf.getvalue()


def sign_changes(values: np.ndarray) -> int:
    s = np.sign(np.asarray(values, dtype=float))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def zero_gap_ok(traj: Trajectory, comp: int, z: float, tol: float) -> bool:
    """Opposite signs within ``tol`` on each side of a recorded zero."""
    lo, hi = max(traj.t0, z - tol), min(traj.t_stop, z + tol)
    vl, vh = traj.dense(lo)[comp], traj.dense(hi)[comp]
    return vl * vh <= 0 or math.isclose(hi, traj.t_stop)
