"""Weighted improper integrals over [0, inf) for monomial-exponential coefficients.

Every coefficient function is a finite sum of terms ``c * t**p * exp(q*t)``.
For that family the moment, tail-kernel and nested criterion integrals have
exact convergence verdicts, so each integral is evaluated twice: once
symbolically (verdict plus closed form where one exists) and once by adaptive
Gauss-Kronrod quadrature over a geometric schedule of horizons.  The numeric
route never calls a gamma function.  Disagreement between the two routes raises
``NumericSymbolicMismatch``.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln, xlogy

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps
# two exponents are treated as equal below this gap
_RATE_ATOL = 1e-12


class QuadratureError(Exception):
    """Base class for failures in this module."""


class NumericSymbolicMismatch(QuadratureError):
    """The quadrature verdict disagrees with the exact one (bad QuadConfig)."""


class TailDiverges(QuadratureError):
    """A tail-kernel integral was requested for a coefficient with infinite moment."""


# ---------------------------------------------------------------------------
# Coefficient functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefFn:
    """Nonnegative coefficient ``a(t) = sum c * t**p * exp(q*t)``.

    Terms are ``(c, p, q)`` triples with ``c >= 0`` and ``p >= 0``; an empty
    term list is the zero function.
    """

    terms: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self) -> None:
        clean = []
        for term in self.terms:
            if len(term) != 3:
                raise ValueError(f"coefficient term must be (c, p, q), got {term!r}")
            c, p, q = (float(v) for v in term)
            if not all(math.isfinite(v) for v in (c, p, q)):
                raise ValueError(f"non-finite coefficient term {term!r}")
            if c < 0:
                raise ValueError(f"coefficient c must be >= 0, got {c}")
            if p < 0:
                raise ValueError(f"power p must be >= 0, got {p}")
            clean.append((c, p, q))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def of(cls, *terms: Sequence[float]) -> "CoefFn":
        return cls(tuple(tuple(t) for t in terms))

    @property
    def active(self) -> tuple[tuple[float, float, float], ...]:
        """Terms with a strictly positive coefficient."""
        return tuple(t for t in self.terms if t[0] > 0)

    @property
    def is_zero(self) -> bool:
        return not self.active

    def scaled(self, factor: float) -> "CoefFn":
        if factor < 0:
            raise ValueError("scale factor must be nonnegative")
        return CoefFn(tuple((c * factor, p, q) for c, p, q in self.terms))

    def dominant(self) -> Optional[tuple[float, float]]:
        """``(q, p)`` of the term that dominates as ``t -> inf``."""
        act = self.active
        if not act:
            return None
        q_max = max(q for _, _, q in act)
        p_max = max(p for _, p, q in act if abs(q - q_max) <= _RATE_ATOL)
        return q_max, p_max

    def log_terms(self, t: np.ndarray) -> np.ndarray:
        """Per-term ``log(c t^p e^{qt})``, shape ``(n_terms, len(t))``."""
        t = np.asarray(t, dtype=float)
        act = self.active
        if not act:
            return np.full((0,) + t.shape, -np.inf)
        c, p, q = (np.array(col)[:, None] for col in zip(*act))
        return np.log(c) + xlogy(p, t[None, ...]) + q * t[None, ...]

    def __call__(self, t):
        return eval_coef(self, t)

    def to_list(self) -> list[list[float]]:
        return [list(term) for term in self.terms]


def eval_coef(a: CoefFn, t):
    """Evaluate ``a(t)`` for scalar or array ``t >= 0`` (``0**0 == 1``)."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("coefficient functions are defined for t >= 0 only")
    out = np.zeros_like(arr)
    with np.errstate(over="ignore"):
        for c, p, q in a.active:
            out = out + c * np.power(arr, p) * np.exp(q * arr)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Configuration and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadConfig:
    quad_tol: float = 1e-10
    horizon_max: float = 1e6
    div_threshold: float = 1e30
    horizon_growth: float = 2.0

    def __post_init__(self) -> None:
        if not 0 < self.quad_tol < 1:
            raise ValueError("quad_tol must lie in (0, 1)")
        if not self.horizon_max > 0:
            raise ValueError("horizon_max must be positive")
        if not self.div_threshold > 1:
            raise ValueError("div_threshold must exceed 1")
        if not self.horizon_growth > 1:
            raise ValueError("horizon_growth must exceed 1")


class Kind(str, enum.Enum):
    CONVERGED = "Converged"
    DIVERGENT = "Divergent"


@dataclass(frozen=True)
class DivergenceEvidence:
    """Why an integral was declared infinite.

    ``q_star``/``m_star`` are the exponential rate and the power of ``t`` of
    the dominant integrand term (``None`` when only numeric evidence exists);
    ``partial_sums`` is the ``(horizon, partial integral)`` log.
    """

    q_star: Optional[float]
    m_star: Optional[float]
    partial_sums: tuple[tuple[float, float], ...] = ()
    reason: str = ""


@dataclass(frozen=True)
class IntegralVerdict:
    kind: Kind
    value: Optional[float] = None
    error_estimate: Optional[float] = None
    evidence: Optional[DivergenceEvidence] = None

    @property
    def converged(self) -> bool:
        return self.kind is Kind.CONVERGED

    @property
    def divergent(self) -> bool:
        return self.kind is Kind.DIVERGENT

    @classmethod
    def finite(cls, value: float, error: float) -> "IntegralVerdict":
        return cls(Kind.CONVERGED, float(value), float(error))

    @classmethod
    def infinite(cls, evidence: DivergenceEvidence) -> "IntegralVerdict":
        return cls(Kind.DIVERGENT, evidence=evidence)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.converged:
            out["value"] = self.value
            out["error_estimate"] = self.error_estimate
        else:
            ev = self.evidence
            out["evidence"] = {
                "q_star": ev.q_star,
                "m_star": ev.m_star,
                "reason": ev.reason,
                "partial_sums": [list(hs) for hs in ev.partial_sums],
            }
        return out


@dataclass(frozen=True)
class SymbolicVerdict:
    divergent: bool
    q_star: Optional[float]
    m_star: Optional[float]
    value: Optional[float] = None  # closed form, when one exists


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod (7-point Gauss embedded in 15-point Kronrod)
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG7 = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (+-0.949, +-0.742, +-0.406, 0)
_WG7[[1, 3, 5]] = _WG[:3]
_WG7[[13, 11, 9]] = _WG[:3]
_WG7[7] = _WG[3]


def _gk15(f: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    with np.errstate(over="ignore", invalid="ignore"):
        fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
        res_k = half * (fx @ _WK15)
        res_g = half * (fx @ _WG7)
        res_abs = np.abs(half) * (np.abs(fx) @ _WK15)
        mean = res_k / (2 * half)
        res_asc = np.abs(half) * (np.abs(fx - mean[:, None]) @ _WK15)
        err = np.abs(res_k - res_g)
        # QUADPACK error scaling, plus a round-off floor
        ratio = np.divide(200 * err, res_asc, out=np.ones_like(err), where=res_asc > 0)
        err = np.where(res_asc > 0, res_asc * np.minimum(1.0, ratio ** 1.5), err)
        err = np.maximum(err, 50 * _EPS * res_abs)
    return res_k, err


def adaptive_gk(f, a: float, b: float, epsabs: float, epsrel: float, limit: int = 4000):
    """Globally adaptive G7-K15 quadrature of a vectorised ``f`` on ``[a, b]``.

    Returns ``(value, error_estimate, n_intervals)``.  Intervals whose error
    exceeds their share of the budget are bisected each round.
    """
    lo = np.array([a], dtype=float)
    hi = np.array([b], dtype=float)
    val, err = _gk15(f, lo, hi)
    while True:
        total, total_err = val.sum(), err.sum()
        if not (np.isfinite(total) and np.isfinite(total_err)):
            return float(total), float("inf"), lo.size
        target = max(epsabs, epsrel * abs(total))
        if total_err <= target or lo.size >= limit:
            if total_err > target:
                logger.debug("adaptive_gk hit interval limit on [%g, %g]: err %.3g > %.3g", a, b, total_err, target)
            return float(total), float(total_err), lo.size
        split = err > target / lo.size
        split[np.argmax(err)] = True
        mid = 0.5 * (lo[split] + hi[split])
        # stop refining intervals that can no longer be halved
        tiny = (hi[split] - lo[split]) <= 4 * _EPS * np.maximum(np.abs(mid), 1.0)
        if np.all(tiny):
            return float(total), float(total_err), lo.size
        new_lo = np.concatenate([lo[~split], lo[split], mid])
        new_hi = np.concatenate([hi[~split], mid, hi[split]])
        v_l, e_l = _gk15(f, lo[split], mid)
        v_r, e_r = _gk15(f, mid, hi[split])
        val = np.concatenate([val[~split], v_l, v_r])
        err = np.concatenate([err[~split], e_l, e_r])
        lo, hi = new_lo, new_hi


@dataclass(frozen=True)
class NumericResult:
    converged: bool
    value: float
    error: float
    partial_sums: tuple[tuple[float, float], ...] = field(default=())
    reason: str = ""


def integrate_to_infinity(
    f: Callable[[np.ndarray], np.ndarray],
    cfg: QuadConfig,
    *,
    first_horizon: float = 1.0,
    tail_bound: Optional[Callable[[float], float]] = None,
) -> NumericResult:
    """Integrate a nonnegative vectorised ``f`` over ``[0, inf)``.

    Pieces ``[0, H0], [H0, g H0], [g H0, g^2 H0], ...`` are integrated one by
    one.  The integral is declared finite once the remaining tail is below
    half the relative error budget, judged either by ``tail_bound(H)`` (a rigorous
    bound on the integral beyond ``H``) or, without one, by geometric
    extrapolation of increments that shrink by at least ``g**-0.5`` per
    horizon.  It is declared infinite when the partial sum passes
    ``div_threshold`` or ``horizon_max`` is reached first.
    """
    g = cfg.horizon_growth
    tol = cfg.quad_tol
    decay = g ** -0.5
    lo, hi = 0.0, max(float(first_horizon), _EPS)
    total, total_err = 0.0, 0.0
    prev_piece: Optional[float] = None
    log: list[tuple[float, float]] = []
    while True:
        piece, piece_err, _ = adaptive_gk(
            f, lo, hi, epsabs=1e-3 * tol * abs(total), epsrel=0.05 * tol
        )
        total += piece
        total_err += piece_err
        log.append((hi, total))
        if not np.isfinite(total) or total > cfg.div_threshold:
            return NumericResult(False, total, total_err, tuple(log), "partial sum exceeds div_threshold")
        # relative budget, so that small integrals keep full relative accuracy
        budget = 0.5 * tol * abs(total)
        if tail_bound is not None:
            tail = tail_bound(hi)
            if tail <= budget and total_err <= budget:
                return NumericResult(True, total, total_err + tail, tuple(log), "analytic tail bound")
        elif prev_piece is not None:
            if piece == 0.0:
                tail = 0.0
            elif prev_piece > 0 and piece <= decay * prev_piece:
                r = piece / prev_piece
                tail = piece * r / (1.0 - r)
            else:
                tail = math.inf
            if tail <= budget and total_err <= budget:
                return NumericResult(True, total, total_err + tail, tuple(log), "geometric tail estimate")
        if hi >= cfg.horizon_max:
            return NumericResult(False, total, total_err, tuple(log), "increments fail to decay within horizon_max")
        prev_piece = piece
        lo, hi = hi, min(hi * g, cfg.horizon_max)


# ---------------------------------------------------------------------------
# Symbolic verdicts
# ---------------------------------------------------------------------------


def _diverges(q: float, m: float) -> bool:
    # integral of t^m e^{qt} over [1, inf)
    if q > _RATE_ATOL:
        return True
    if q < -_RATE_ATOL:
        return False
    return m >= -1


def symbolic_moment(a: CoefFn, n: int) -> SymbolicVerdict:
    """Exact verdict for ``int_0^inf t^(n-1)/(n-1)! a(t) dt``."""
    _check_order(n)
    act = a.active
    if not act:
        return SymbolicVerdict(False, None, None, 0.0)
    divergent_terms = [(q, n - 1 + p) for _, p, q in act if _diverges(q, n - 1 + p)]
    if divergent_terms:
        q_star, m_star = max(divergent_terms)
        return SymbolicVerdict(True, q_star, m_star)
    value = 0.0
    for c, p, q in act:
        value += c * math.exp(gammaln(n + p) - gammaln(n) - (n + p) * math.log(-q))
    q_star, m_star = max((q, n - 1 + p) for _, p, q in act)
    return SymbolicVerdict(False, q_star, m_star, value)


def symbolic_nested(a_outer: CoefFn, n_outer: int, a_inner: CoefFn, n_inner: int, lam: float) -> SymbolicVerdict:
    """Exact verdict for the nested criterion integral.

    Uses ``A(t) ~ c t^p e^{qt} / (-q)^n_inner`` for the dominant inner term,
    so the outer integrand behaves like ``t^m e^{q t}`` with
    ``q = q_outer + lam*q_inner`` and ``m = n_outer-1+p_outer+lam*p_inner``.
    """
    _check_order(n_outer)
    _check_order(n_inner)
    _require_finite_moment(a_inner)
    dom = a_inner.dominant()
    if dom is None or a_outer.is_zero:
        return SymbolicVerdict(False, None, None, 0.0)
    q_in, p_in = dom
    rates = [(q + lam * q_in, n_outer - 1 + p + lam * p_in) for _, p, q in a_outer.active]
    q_star, m_star = max(rates)
    divergent = [r for r in rates if _diverges(*r)]
    if divergent:
        q_star, m_star = max(divergent)
        return SymbolicVerdict(True, q_star, m_star)
    return SymbolicVerdict(False, q_star, m_star)


def _check_order(n: int) -> None:
    if int(n) != n or n < 1:
        raise ValueError(f"order must be an integer >= 1, got {n!r}")


def _require_finite_moment(a: CoefFn) -> None:
    bad = [t for t in a.active if t[2] >= 0]
    if bad:
        raise TailDiverges(f"tail integral is infinite: terms {bad} do not decay exponentially")


# ---------------------------------------------------------------------------
# Tail kernels A(t) = int_t^inf (tau-t)^(n-1)/(n-1)! a(tau) dtau
# ---------------------------------------------------------------------------


def _log_scaled_tail_term(p: float, q: float, n: int, t: np.ndarray, cfg: QuadConfig) -> np.ndarray:
    """``log( int_0^inf u^(n-1)/(n-1)! (u+t)^p e^{qu} du )`` for one term."""
    s = -q
    if float(p).is_integer():
        k = int(p)
        j = np.arange(k + 1)
        # binomial expansion in (u+t): every summand is positive
        log_coef = (gammaln(k + 1) - gammaln(j + 1) - gammaln(k - j + 1)
                    + gammaln(n + j) - gammaln(n) - (n + j) * math.log(s))
        logs = log_coef[:, None] + xlogy((k - j)[:, None], t[None, :])
        return _logsumexp(logs, axis=0)
    out = np.empty_like(t)
    log_fact = gammaln(n)
    for i, ti in enumerate(t):
        def integrand(u, ti=ti):
            return np.exp(xlogy(n - 1, u) - log_fact + p * np.log(u + ti) - s * u)
        if ti == 0.0:
            first = (n - 1 + p) / s + 1.0
        else:
            first = max((n - 1 + p) / s, 1.0 / s)
        res = integrate_to_infinity(integrand, cfg, first_horizon=first)
        if not res.converged:
            raise QuadratureError(f"tail kernel quadrature failed at t={ti}: {res.reason}")
        out[i] = math.log(res.value) if res.value > 0 else -np.inf
    return out


def log_tail_kernel(a: CoefFn, n: int, t, cfg: QuadConfig = QuadConfig()) -> np.ndarray:
    """``log A(t)``; stays finite where ``A`` itself would underflow."""
    _check_order(n)
    _require_finite_moment(a)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(tt < 0):
        raise ValueError("t must be nonnegative")
    act = a.active
    if not act:
        return np.full(tt.shape, -np.inf)
    logs = np.stack([
        math.log(c) + q * tt + _log_scaled_tail_term(p, q, n, tt, cfg)
        for c, p, q in act
    ])
    return _logsumexp(logs, axis=0)


def tail_kernel_integral(a: CoefFn, n: int, t, cfg: QuadConfig = QuadConfig()):
    """``A(t) = int_t^inf (tau - t)^(n-1)/(n-1)! a(tau) dtau``.

    Integer powers use the exact binomial expansion in ``u = tau - t``;
    fractional powers fall back to adaptive quadrature in ``u``.

    Raises
    ------
    TailDiverges
        If some term of ``a`` does not decay exponentially.
    """
    val = np.exp(log_tail_kernel(a, n, t, cfg))
    return float(val[0]) if np.ndim(t) == 0 else val


def _logsumexp(x: np.ndarray, axis: int = 0) -> np.ndarray:
    m = np.max(x, axis=axis)
    finite = np.isfinite(m)
    safe = np.where(finite, m, 0.0)
    with np.errstate(divide="ignore"):
        s = np.log(np.sum(np.exp(x - np.expand_dims(safe, axis)), axis=axis))
    return np.where(finite, safe + s, m)


# ---------------------------------------------------------------------------
# Public integral operations
# ---------------------------------------------------------------------------


def _moment_tail_bound(a: CoefFn, n: int) -> Optional[Callable[[float], float]]:
    act = a.active
    if any(q >= 0 for _, _, q in act):
        return None
    log_fact = gammaln(n)

    def bound(h: float) -> float:
        total = 0.0
        for c, p, q in act:
            m, s = n - 1 + p, -q
            if s - m / h <= 0:
                return math.inf
            # t^m e^{-st} <= h^m e^{-sh} e^{-(s - m/h)(t-h)} for t >= h
            total += c * math.exp(xlogy(m, h) - s * h - log_fact) / (s - m / h)
        return total

    return bound


def _numeric_moment(a: CoefFn, n: int, cfg: QuadConfig) -> NumericResult:
    act = a.active
    log_fact = gammaln(n)

    def integrand(t):
        out = np.zeros_like(t)
        for c, p, q in act:
            out += np.exp(math.log(c) + xlogy(n - 1 + p, t) + q * t - log_fact)
        return out

    return integrate_to_infinity(integrand, cfg, tail_bound=_moment_tail_bound(a, n))


def _combine(sym: SymbolicVerdict, num: NumericResult, what: str) -> IntegralVerdict:
    if sym.divergent != (not num.converged):
        raise NumericSymbolicMismatch(
            f"{what}: exact verdict {'Divergent' if sym.divergent else 'Converged'} but quadrature "
            f"{'Converged' if num.converged else 'Divergent'} ({num.reason}); last partial sums {num.partial_sums[-3:]}"
        )
    if num.converged:
        return IntegralVerdict.finite(num.value, num.error)
    return IntegralVerdict.infinite(
        DivergenceEvidence(sym.q_star, sym.m_star, num.partial_sums, num.reason)
    )


def moment_integral(a: CoefFn, n: int, cfg: QuadConfig = QuadConfig()) -> IntegralVerdict:
    """``int_0^inf t^(n-1)/(n-1)! a(t) dt`` with exact and numeric verdicts.

    The returned value and error estimate come from quadrature; the exact
    verdict (``q > 0``, or ``q == 0``, diverges) must agree with it.

    Raises
    ------
    NumericSymbolicMismatch
        When the two routes disagree.
    """
    sym = symbolic_moment(a, n)
    if a.is_zero:
        return IntegralVerdict.finite(0.0, 0.0)
    return _combine(sym, _numeric_moment(a, n, cfg), f"moment integral (n={n})")


def _nested_integrand(a_outer: CoefFn, n_outer: int, a_inner: CoefFn, n_inner: int, lam: float,
                      t0: float, cfg: QuadConfig):
    log_fact = gammaln(n_outer)

    def integrand(u):
        s = t0 + u
        log_a = a_outer.log_terms(s)
        log_inner = log_tail_kernel(a_inner, n_inner, s, cfg)
        logs = log_a + (xlogy(n_outer - 1, u) - log_fact + lam * log_inner)[None, :]
        return np.exp(logs).sum(axis=0)

    return integrand


def _nested_first_horizon(a_outer: CoefFn, n_outer: int, a_inner: CoefFn, lam: float) -> float:
    q_in, p_in = a_inner.dominant()
    first = max(1.0, 1.0 / abs(q_in))
    for _, p, q in a_outer.active:
        rate = q + lam * q_in
        if rate < -_RATE_ATOL:
            first = max(first, (n_outer - 1 + p + lam * p_in + 4.0) / -rate)
    return first


def shifted_nested_integral(a_outer: CoefFn, n_outer: int, a_inner: CoefFn, n_inner: int, lam: float,
                            t0: float, cfg: QuadConfig = QuadConfig()) -> IntegralVerdict:
    """``int_t0^inf (s-t0)^(n_outer-1)/(n_outer-1)! a_outer(s) A(s)^lam ds``.

    ``A`` is the inner tail kernel of order ``n_inner``.  With ``t0 = 0`` this
    is the nested criterion integral; larger ``t0`` gives its tails.
    """
    _check_order(n_outer)
    _check_order(n_inner)
    _require_finite_moment(a_inner)
    if a_outer.is_zero or a_inner.is_zero:
        return IntegralVerdict.finite(0.0, 0.0)
    sym = symbolic_nested(a_outer, n_outer, a_inner, n_inner, lam)
    integrand = _nested_integrand(a_outer, n_outer, a_inner, n_inner, lam, float(t0), cfg)
    num = integrate_to_infinity(integrand, cfg, first_horizon=_nested_first_horizon(a_outer, n_outer, a_inner, lam))
    return _combine(sym, num, f"nested integral (t0={t0})")


def nested_criterion_integral(a_outer: CoefFn, n_outer: int, a_inner: CoefFn, n_inner: int,
                              lambda_outer: float, cfg: QuadConfig = QuadConfig()) -> IntegralVerdict:
    """``int_0^inf t^(n_o-1)/(n_o-1)! a_outer(t) [A(t)]^lambda_outer dt``.

    Raises
    ------
    TailDiverges
        If the inner moment integral is infinite.
    NumericSymbolicMismatch
        When quadrature and the asymptotic verdict disagree.
    """
    return shifted_nested_integral(a_outer, n_outer, a_inner, n_inner, lambda_outer, 0.0, cfg)


def closed_form_moment(c: float, p: float, q: float, n: int) -> float:
    """``c Gamma(n+p) / ((n-1)! (-q)^(n+p))`` for a single decaying term."""
    if q >= 0:
        raise ValueError("closed form requires q < 0")
    return c * math.exp(gammaln(n + p) - gammaln(n) - (n + p) * math.log(-q))
