"""Explicit non-oscillating solutions by fixed-point iteration.

When the first moment integral diverges but the second moment and the nested
integral are finite (``P < inf``), a bounded solution with ``x1 -> K1`` and
``x2 -> 0`` exists.  It is the fixed point of

    (S1 x1)(t) = K1 + (-1)^n1 int_t^inf (s-t)^(n1-1)/(n1-1)! f1(s, x2(s)) ds
    x2(s)      =      (-1)^n2 int_s^inf (r-s)^(n2-1)/(n2-1)! f2(r, x1(r)) dr

on the ball ``||x1|| <= 2 K1`` of bounded functions on ``[T, inf)``, with
``K1 = (P M)^(1/(1 - lambda1 lambda2))``.  Here the fixed point is computed by
Picard iteration on a grid over ``[T, t_max]``.  Both kernels are applied as
``n``-fold repeated tail integrals with the trapezoid rule, so every
intermediate level is a derivative of the solution.  Contributions from
beyond ``t_max`` are added in closed form, with ``x1`` frozen at its last
grid value.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .criteria import SystemSpec, Verdict, classify_oscillation, power_law
from .quadrature import (
    QuadConfig,
    QuadratureError,
    nested_criterion_integral,
    shifted_nested_integral,
    tail_kernel_integral,
)
from .simulate import InitialState, SimConfig, Trajectory, integrate, sign_changes

logger = logging.getLogger(__name__)

_T_MARGIN = 0.9


class FixedPointError(Exception):
    pass


class NotInNecessityRegime(FixedPointError):
    """The criteria verdict does not call for a non-oscillating witness."""


class DivergentP(FixedPointError):
    pass


class DegenerateP(FixedPointError):
    def __init__(self, P: float):
        self.P = P
        super().__init__(f"P = {P!r}: K1 is undefined")


class NoAdmissibleT(FixedPointError):
    pass


class X1Escape(FixedPointError):
    pass


class NonConvergence(FixedPointError):
    def __init__(self, msg: str, result: "FixedPointResult"):
        self.result = result
        super().__init__(msg)


class VerificationFailure(FixedPointError):
    def __init__(self, failed: list[str], report: "VerificationReport"):
        self.failed = failed
        self.report = report
        super().__init__("verification failed: " + ", ".join(failed))


@dataclass(frozen=True)
class FixedPointConfig:
    grid_points: int = 4000
    t_max: float = 200.0
    grid: str = "geometric"
    grid_ratio: float = 8.0
    max_iter: int = 200
    fp_tol: float = 1e-8
    verify_tol: float = 1e-5

    def __post_init__(self) -> None:
        if self.grid_points < 100:
            raise ValueError("grid_points must be >= 100")
        if self.grid not in ("uniform", "geometric"):
            raise ValueError("grid must be 'uniform' or 'geometric'")
        if not self.grid_ratio >= 1:
            raise ValueError("grid_ratio must be >= 1")
        if not (self.fp_tol > 0 and self.verify_tol > 0 and self.t_max > 0):
            raise ValueError("fp_tol, verify_tol and t_max must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def make_grid(T: float, t_end: float, cfg: FixedPointConfig) -> np.ndarray:
    """Grid on ``[T, t_end]``; geometric spacing grows by ``grid_ratio`` end to end.

    Points are the image of a uniform parameter under a fixed smooth map, so
    ``2N - 1`` points contain the ``N``-point grid exactly.
    """
    s = np.linspace(0.0, 1.0, cfg.grid_points)
    rho = cfg.grid_ratio if cfg.grid == "geometric" else 1.0
    if rho == 1.0:
        frac = s
    else:
        frac = np.expm1(s * math.log(rho)) / (rho - 1.0)
    t = T + (t_end - T) * frac
    t[-1] = t_end
    return t


def _cumtail(g: np.ndarray, t: np.ndarray, tail: float) -> np.ndarray:
    """``tail + int_t^t_end g`` at every grid point (trapezoid rule)."""
    seg = 0.5 * np.diff(t) * (g[:-1] + g[1:])
    out = np.empty_like(g)
    out[-1] = 0.0
    out[:-1] = np.cumsum(seg[::-1])[::-1]
    return out + tail


def _repeated_tail(g: np.ndarray, t: np.ndarray, tails: list[float]) -> list[np.ndarray]:
    # levels[j] = int_t^inf (s-t)^j/j! g(s) ds, j = 0..n-1 (Cauchy repeated integration)
    levels = []
    cur = g
    for tail in tails:
        cur = _cumtail(cur, t, tail)
        levels.append(cur)
    return levels


class S1Operator:
    """The map ``x1 -> S1 x1`` on a fixed grid, with precomputed far tails."""

    def __init__(self, spec: SystemSpec, K1: float, t: np.ndarray, quad: QuadConfig = QuadConfig()):
        self.spec, self.K1, self.t = spec, float(K1), t
        self.a1 = spec.a1(t)
        self.a2 = spec.a2(t)
        end = float(t[-1])
        lam1, n2 = spec.lambda1, spec.n2
        self.A2_end = [tail_kernel_integral(spec.a2, j, end, quad) if not spec.a2.is_zero else 0.0
                       for j in range(1, n2 + 1)]
        self.H_end = []
        for j in range(1, spec.n1 + 1):
            if spec.a1.is_zero or spec.a2.is_zero:
                self.H_end.append(0.0)
                continue
            v = shifted_nested_integral(spec.a1, j, spec.a2, n2, lam1, end, quad)
            if not v.converged:
                raise DivergentP(f"outer tail of order {j} diverges beyond t={end}")
            self.H_end.append(v.value)

    def inner(self, x1: np.ndarray) -> list[np.ndarray]:
        """Derivatives ``x2, x2', ..., x2^(n2-1)`` induced by ``x1``."""
        spec, n2 = self.spec, self.spec.n2
        g = -self.a2 * power_law(x1, spec.lambda2)
        end_val = -power_law(x1[-1], spec.lambda2)
        levels = _repeated_tail(g, self.t, [end_val * A for A in self.A2_end])
        # x2^(j) = (-1)^(n2+j) * level n2-j
        return [(-1) ** (n2 + j) * levels[n2 - 1 - j] for j in range(n2)]

    def outer(self, x1_end: float, x2: np.ndarray) -> list[np.ndarray]:
        """Derivatives ``x1, ..., x1^(n1-1)`` of ``S1 x1`` given ``x2``."""
        spec, n1 = self.spec, self.spec.n1
        g = self.a1 * power_law(x2, spec.lambda1)
        sigma = -((-1) ** spec.n2) * np.sign(x1_end)
        far = sigma * abs(x1_end) ** (spec.lambda1 * spec.lambda2)
        levels = _repeated_tail(g, self.t, [far * H for H in self.H_end])
        derivs = [(-1) ** (n1 + j) * levels[n1 - 1 - j] for j in range(n1)]
        derivs[0] = derivs[0] + self.K1
        return derivs

    def __call__(self, x1: np.ndarray) -> np.ndarray:
        return self.outer(x1[-1], self.inner(x1)[0])[0]


@dataclass(frozen=True)
class FixedPointResult:
    P: float
    K1: float
    T: float
    G_T: float
    t: np.ndarray
    x1_grid: np.ndarray
    x2_grid: np.ndarray
    x1_derivs: tuple[np.ndarray, ...]
    x2_derivs: tuple[np.ndarray, ...]
    iterations: int
    final_delta: float
    deltas: tuple[float, ...]
    converged: bool
    bound_x1: float  # bound on |x1(t_max) - K1|
    bound_x2: float  # bound on |x2(t_max)|
    residuals: dict = field(default_factory=dict)

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    def initial_state(self) -> InitialState:
        """Derivative data at ``T`` for re-simulating the constructed solution."""
        return InitialState(self.T, tuple(float(d[0]) for d in self.x1_derivs),
                            tuple(float(d[0]) for d in self.x2_derivs))

    def to_dict(self) -> dict:
        return {
            "P": self.P, "K1": self.K1, "T": self.T, "G_T": self.G_T,
            "t_max": self.t_max, "grid_points": int(self.t.size),
            "iterations": self.iterations, "final_delta": self.final_delta,
            "converged": self.converged,
            "x1_at_T": float(self.x1_grid[0]), "x2_at_T": float(self.x2_grid[0]),
            "x1_at_t_max": float(self.x1_grid[-1]), "x2_at_t_max": float(self.x2_grid[-1]),
            "bound_x1": self.bound_x1, "bound_x2": self.bound_x2,
            "residuals": dict(self.residuals),
        }


def compute_P(spec: SystemSpec, cfg: QuadConfig = QuadConfig()) -> float:
    """Finite value of the nested integral with outer index ``k = 1``.

    Raises
    ------
    DivergentP
        If the nested integral (or the inner moment) is infinite.
    DegenerateP
        If it is exactly zero.
    """
    try:
        v = nested_criterion_integral(spec.a1, spec.n1, spec.a2, spec.n2, spec.lambda1, cfg)
    except QuadratureError as exc:
        raise DivergentP(str(exc)) from exc
    if not v.converged:
        raise DivergentP("nested integral diverges; no non-oscillating witness by this construction")
    if v.value <= 0:
        raise DegenerateP(v.value)
    return v.value


def G_of_T(spec: SystemSpec, K1: float, T: float, cfg: QuadConfig = QuadConfig()) -> float:
    """``2^(l1 l2) M int_T^inf (s-T)^(n1-1)/(n1-1)! a1(s) [A2(s) K1^l2]^l1 ds``."""
    ll = spec.lambda1 * spec.lambda2
    v = shifted_nested_integral(spec.a1, spec.n1, spec.a2, spec.n2, spec.lambda1, T, cfg)
    if not v.converged:
        raise DivergentP(f"tail integral from T={T} diverges")
    return 2.0 ** ll * spec.M * K1 ** ll * v.value


def choose_K1_T(spec: SystemSpec, P: float, fp: FixedPointConfig = FixedPointConfig(),
                cfg: QuadConfig = QuadConfig()) -> tuple[float, float]:
    """``K1`` from ``K1^(1 - l1 l2) = P M``; ``T`` is the first of ``0, 1, 2, 4, ...``
    with ``G(T) < 0.9 K1``.

    Raises
    ------
    NoAdmissibleT
        If the scan passes ``fp.t_max``.
    """
    ll = spec.lambda1 * spec.lambda2
    if not P > 0 or not ll > 1:
        raise ValueError("need P > 0 and lambda1*lambda2 > 1")
    K1 = (P * spec.M) ** (1.0 / (1.0 - ll))
    T = 0.0
    while T <= fp.t_max:
        G = G_of_T(spec, K1, T, cfg)
        logger.debug("T scan: G(%g) = %.6g vs %.6g", T, G, _T_MARGIN * K1)
        if G < _T_MARGIN * K1:
            return K1, T
        T = 1.0 if T == 0 else 2.0 * T
    raise NoAdmissibleT(f"no T <= {fp.t_max} with G(T) < {_T_MARGIN} K1")


def _tail_bounds(spec: SystemSpec, K1: float, t: float, cfg: QuadConfig) -> tuple[float, float]:
    b1 = G_of_T(spec, K1, t, cfg) if not (spec.a1.is_zero or spec.a2.is_zero) else 0.0
    b2 = 0.0
    if not spec.a2.is_zero:
        b2 = spec.M * (2 * K1) ** spec.lambda2 * tail_kernel_integral(spec.a2, spec.n2, t, cfg)
    return b1, b2


def truncation_horizon(spec: SystemSpec, K1: float, T: float, fp: FixedPointConfig,
                       cfg: QuadConfig = QuadConfig()) -> float:
    """Smallest ``T + L`` (``L = 1, 1.1, 1.21, ...``) whose tail bounds are ``<= fp_tol/10``."""
    target = fp.fp_tol / 10
    L = 1.0
    while True:
        t_end = T + L
        if t_end >= fp.t_max:
            logger.warning("truncation horizon capped at t_max=%g", fp.t_max)
            return fp.t_max
        b1, b2 = _tail_bounds(spec, K1, t_end, cfg)
        if b1 <= target and b2 <= target:
            return t_end
        L *= 1.1


def apply_S1(x1: np.ndarray, spec: SystemSpec, K1: float, t: np.ndarray,
             cfg: QuadConfig = QuadConfig()) -> np.ndarray:
    """One application of ``S1`` to the grid function ``x1`` on grid ``t`` (``t[0] = T``).

    Raises
    ------
    X1Escape
        If the image leaves the ball ``||x|| <= 2 K1``.
    """
    if np.max(np.abs(x1)) > 2 * K1:
        raise ValueError("x1 is not in the ball ||x|| <= 2 K1")
    out = S1Operator(spec, K1, t, cfg)(x1)
    if np.max(np.abs(out)) > 2 * K1:
        raise X1Escape(f"sup |S1 x1| = {np.max(np.abs(out)):.6g} > 2 K1 = {2 * K1:.6g}; T too small")
    return out


def _gate(spec: SystemSpec, cfg: QuadConfig) -> None:
    report = classify_oscillation(spec, cfg)
    if report.verdict is not Verdict.NON_OSCILLATING_EXISTS:
        raise NotInNecessityRegime(f"criteria verdict is {report.verdict.value} ({report.witness_branch})")
    if report.k != 1:
        raise NotInNecessityRegime("witness needs k = 1; construct on spec.swapped() instead")


def iterate_to_fixed_point(spec: SystemSpec, fp: FixedPointConfig = FixedPointConfig(),
                           cfg: QuadConfig = QuadConfig(), *, K1: Optional[float] = None,
                           T: Optional[float] = None, check_verdict: bool = True) -> FixedPointResult:
    """Picard iteration ``x1 <- S1 x1`` from ``x1 == K1``.

    ``K1`` and ``T`` may be fixed by the caller (then ``P`` is reported as
    ``nan`` and the criteria gate should be switched off); otherwise they come
    from ``compute_P`` and ``choose_K1_T``.

    Raises
    ------
    NotInNecessityRegime
        If ``check_verdict`` and the criteria verdict is not
        NonOscillatingExists with ``k = 1``.
    X1Escape
        If an iterate leaves ``||x|| <= 2 K1``.
    NonConvergence
        After ``max_iter`` iterations; carries the last iterate.
    """
    if check_verdict:
        _gate(spec, cfg)
    if K1 is None:
        P = compute_P(spec, cfg)
        K1, T_auto = choose_K1_T(spec, P, fp, cfg)
        T = T_auto if T is None else T
    else:
        P = math.nan
        T = 0.0 if T is None else T
    G_T = G_of_T(spec, K1, T, cfg) if not (spec.a1.is_zero or spec.a2.is_zero) else 0.0
    t_end = truncation_horizon(spec, K1, T, fp, cfg)
    if not t_end > T:
        raise NoAdmissibleT(f"t_max={t_end} does not exceed T={T}")
    t = make_grid(T, t_end, fp)
    op = S1Operator(spec, K1, t, cfg)

    x1 = np.full_like(t, K1)
    deltas: list[float] = []
    converged = False
    for _ in range(fp.max_iter):
        new = op(x1)
        sup = float(np.max(np.abs(new)))
        if sup > 2 * K1:
            raise X1Escape(f"iterate {len(deltas) + 1} has sup {sup:.6g} > 2 K1 = {2 * K1:.6g}")
        deltas.append(float(np.max(np.abs(new - x1))))
        x1 = new
        if deltas[-1] <= fp.fp_tol:
            converged = True
            break
    if converged and len(deltas) >= 3 and not (deltas[-1] <= deltas[-2] <= deltas[-3]):
        logger.warning("last Picard updates are not monotone: %s", deltas[-3:])

    x2_derivs = op.inner(x1)
    x1_derivs = op.outer(x1[-1], x2_derivs[0])
    b1, b2 = _tail_bounds(spec, K1, t_end, cfg)
    result = FixedPointResult(
        P=P, K1=float(K1), T=float(T), G_T=float(G_T), t=t, x1_grid=x1, x2_grid=x2_derivs[0],
        x1_derivs=tuple(x1_derivs), x2_derivs=tuple(x2_derivs), iterations=len(deltas),
        final_delta=deltas[-1], deltas=tuple(deltas), converged=converged, bound_x1=b1, bound_x2=b2,
    )
    result.residuals.update(measure_residuals(result, spec))
    if not converged:
        raise NonConvergence(f"no convergence in {fp.max_iter} iterations (last delta {deltas[-1]:.3g})", result)
    return result


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives ``0..m`` at ``z`` on nodes ``x``.

    Returns an array of shape ``(len(x), m + 1)`` (Fornberg's recursion).
    """
    n = len(x)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def grid_derivative(t: np.ndarray, y: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Centred finite-difference ``order``-th derivative at interior points.

    The stencil has half-width ``(order + 1) // 2``, second order accurate on
    uniform and smoothly graded grids.  Returns ``(indices, values)``.
    """
    w = (order + 1) // 2
    idx = np.arange(w, t.size - w)
    out = np.empty(idx.size)
    for k, i in enumerate(idx):
        nodes = t[i - w : i + w + 1]
        # weights sum to zero; centring removes round-off from the constant part
        out[k] = fornberg_weights(t[i], nodes, order)[:, order] @ (y[i - w : i + w + 1] - y[i])
    return idx, out


def measure_residuals(result: FixedPointResult, spec: SystemSpec) -> dict:
    t, x1, x2 = result.t, result.x1_grid, result.x2_grid
    i1, d1 = grid_derivative(t, x1, spec.n1)
    i2, d2 = grid_derivative(t, x2, spec.n2)
    return {
        "ode_residual_1": float(np.max(np.abs(d1 - spec.f1(t[i1], x2[i1])))),
        "ode_residual_2": float(np.max(np.abs(d2 - spec.f2(t[i2], x1[i2])))),
        "limit_error_x1": float(abs(x1[-1] - result.K1)),
        "limit_error_x2": float(abs(x2[-1])),
    }


@dataclass(frozen=True)
class VerificationReport:
    ode_residual_1: float
    ode_residual_2: float
    limit_error_x1: float
    limit_error_x2: float
    bound_x1: float
    bound_x2: float
    x1_sign_changes: int
    x1_min: float
    verify_tol: float
    failed: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.failed

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["failed"] = list(self.failed)
        d["passed"] = self.passed
        return d


def verify_solution(result: FixedPointResult, spec: SystemSpec, fp: FixedPointConfig = FixedPointConfig(),
                    *, raise_on_failure: bool = True) -> VerificationReport:
    """Check ODE residuals, limiting values and the absence of zeros of ``x1``.

    Raises
    ------
    VerificationFailure
        Naming every failed check (unless ``raise_on_failure`` is false).
    """
    if not result.converged:
        raise ValueError("result did not converge")
    r = measure_residuals(result, spec)
    # slack for round-off in the tail evaluation
    slack = 1e-12 * max(1.0, result.K1)
    report_fields = dict(
        ode_residual_1=r["ode_residual_1"], ode_residual_2=r["ode_residual_2"],
        limit_error_x1=r["limit_error_x1"], limit_error_x2=r["limit_error_x2"],
        bound_x1=result.bound_x1, bound_x2=result.bound_x2,
        x1_sign_changes=sign_changes(result.x1_grid), x1_min=float(np.min(result.x1_grid)),
        verify_tol=fp.verify_tol,
    )
    failed = []
    if r["ode_residual_1"] > fp.verify_tol:
        failed.append("ode_residual_1")
    if r["ode_residual_2"] > fp.verify_tol:
        failed.append("ode_residual_2")
    if r["limit_error_x1"] > result.bound_x1 + slack:
        failed.append("limit_error_x1")
    if r["limit_error_x2"] > result.bound_x2 + slack:
        failed.append("limit_error_x2")
    if report_fields["x1_sign_changes"] != 0 or (result.K1 > 0 and report_fields["x1_min"] <= 0):
        failed.append("x1_zero")
    report = VerificationReport(failed=tuple(failed), **report_fields)
    if failed and raise_on_failure:
        raise VerificationFailure(failed, report)
    return report


def simulate_witness(result: FixedPointResult, spec: SystemSpec, sim: Optional[SimConfig] = None,
                     rel_floor: float = 1e-3) -> Trajectory:
    """Integrate forward from the constructed data at ``T``.

    The non-oscillating solution is not an attractor: errors in the initial
    data grow polynomially while ``x2`` decays.  The run therefore stops at
    the last grid time where ``|x2|`` is still above ``rel_floor`` of its
    value at ``T``, beyond which the grid solution no longer determines the
    sign of ``x2``.
    """
    x2 = np.abs(result.x2_grid)
    if x2[0] > 0:
        above = np.nonzero(x2 >= rel_floor * x2[0])[0]
        t_end = float(result.t[above[-1]])
    else:
        t_end = result.t_max
    if not t_end > result.T:
        t_end = result.t_max
    sim = sim or SimConfig()
    cfg = SimConfig(t_end=t_end, rtol=sim.rtol, atol=sim.atol, zero_refine_tol=sim.zero_refine_tol,
                    tail_fraction=sim.tail_fraction, osc_min_zeros=sim.osc_min_zeros,
                    proper_eps=sim.proper_eps, classify_blowup=sim.classify_blowup)
    return integrate(spec, result.initial_state(), cfg)
