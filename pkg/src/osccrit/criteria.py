"""Coupled system description and the integral-criteria decision tree.

The system is ``x1^(n1) = f1(t, x2)``, ``x2^(n2) = f2(t, x1)`` with the
power-law nonlinearities

    f1(t, x2) =  a1(t) |x2|^lambda1 sign(x2)
    f2(t, x1) = -a2(t) |x1|^lambda2 sign(x1)

which satisfy both the one-sided lower envelope and the two-sided envelope
with any ``M >= 1``.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .quadrature import (
    CoefFn,
    IntegralVerdict,
    QuadConfig,
    moment_integral,
    nested_criterion_integral,
)

logger = logging.getLogger(__name__)


class Envelope(str, enum.Enum):
    ONE_SIDED_LOWER = "OneSidedLower"
    TWO_SIDED_EXACT_POWER_LAW = "TwoSidedExactPowerLaw"


class Verdict(str, enum.Enum):
    ALL_OSCILLATE = "AllOscillate"
    NON_OSCILLATING_EXISTS = "NonOscillatingExists"
    INCONCLUSIVE = "Inconclusive"


class Violation(str, enum.Enum):
    INVALID_ORDER = "InvalidOrder"
    LAMBDA_NOT_POSITIVE = "LambdaNotPositive"
    LAMBDA_PRODUCT_NOT_GREATER_THAN_ONE = "LambdaProductNotGreaterThanOne"
    NEGATIVE_COEFFICIENT = "NegativeCoefficient"
    ENVELOPE_CONSTANT_BELOW_ONE = "EnvelopeConstantBelowOne"


class HypothesisViolation(Exception):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("hypotheses violated: " + ", ".join(v.value for v in self.violations))


def power_law(x, lam: float):
    """``|x|**lam * sign(x)``, continuous at zero for any ``lam > 0``."""
    return np.sign(x) * np.abs(x) ** lam


@dataclass(frozen=True)
class SystemSpec:
    n1: int
    n2: int
    lambda1: float
    lambda2: float
    a1: CoefFn = field(default_factory=CoefFn)
    a2: CoefFn = field(default_factory=CoefFn)
    envelope: Envelope = Envelope.TWO_SIDED_EXACT_POWER_LAW
    M: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "envelope", Envelope(self.envelope))
        for name in ("a1", "a2"):
            a = getattr(self, name)
            if not isinstance(a, CoefFn):
                object.__setattr__(self, name, CoefFn(tuple(tuple(t) for t in a)))

    def f1(self, t, x2):
        return self.a1(t) * power_law(x2, self.lambda1)

    def f2(self, t, x1):
        return -self.a2(t) * power_law(x1, self.lambda2)

    def swapped(self) -> "SystemSpec":
        """Relabel ``(y1, y2) = (x2, -x1)``; the sign pattern is preserved."""
        return replace(self, n1=self.n2, n2=self.n1, lambda1=self.lambda2, lambda2=self.lambda1,
                       a1=self.a2, a2=self.a1)

    def to_dict(self) -> dict:
        return {
            "n1": self.n1, "n2": self.n2,
            "lambda1": self.lambda1, "lambda2": self.lambda2,
            "a1": self.a1.to_list(), "a2": self.a2.to_list(),
            "envelope": self.envelope.value, "M": self.M,
        }


def validate_hypotheses(spec: SystemSpec) -> list[Violation]:
    """List every violated standing hypothesis; empty means the criteria apply."""
    out: list[Violation] = []
    if any(int(n) != n or n < 1 for n in (spec.n1, spec.n2)):
        out.append(Violation.INVALID_ORDER)
    if spec.lambda1 <= 0 or spec.lambda2 <= 0:
        out.append(Violation.LAMBDA_NOT_POSITIVE)
    if not spec.lambda1 * spec.lambda2 > 1:
        out.append(Violation.LAMBDA_PRODUCT_NOT_GREATER_THAN_ONE)
    if any(c < 0 for a in (spec.a1, spec.a2) for c, _, _ in a.terms):
        out.append(Violation.NEGATIVE_COEFFICIENT)
    if spec.envelope is Envelope.TWO_SIDED_EXACT_POWER_LAW and not spec.M >= 1:
        out.append(Violation.ENVELOPE_CONSTANT_BELOW_ONE)
    return out


@dataclass(frozen=True)
class CriteriaReport:
    hypothesis_ok: bool
    violations: tuple[Violation, ...]
    I1: Optional[IntegralVerdict]
    I2: Optional[IntegralVerdict]
    J1: Optional[IntegralVerdict]
    J2: Optional[IntegralVerdict]
    verdict: Verdict
    witness_branch: str
    k: Optional[int] = None

    def to_dict(self) -> dict:
        def opt(v):
            return None if v is None else v.to_dict()

        return {
            "hypothesis_ok": self.hypothesis_ok,
            "violations": [v.value for v in self.violations],
            "I1": opt(self.I1), "I2": opt(self.I2),
            "J1": opt(self.J1), "J2": opt(self.J2),
            "verdict": self.verdict.value,
            "k": self.k,
            "witness_branch": self.witness_branch,
        }


def classify_oscillation(spec: SystemSpec, cfg: QuadConfig = QuadConfig()) -> CriteriaReport:
    """Run the decision tree, trying ``k = 1`` before ``k = 2``.

    (i)   I_k and I_{3-k} infinite                  -> AllOscillate
    (ii)  I_k infinite, I_{3-k} finite, J_k infinite -> AllOscillate
    (iii) two-sided envelope, I_k infinite, I_{3-k} and J_k finite
                                                    -> NonOscillatingExists
    otherwise Inconclusive.

    Raises
    ------
    HypothesisViolation
        If ``validate_hypotheses`` reports anything.
    """
    violations = validate_hypotheses(spec)
    if violations:
        raise HypothesisViolation(violations)

    I = {1: moment_integral(spec.a1, spec.n1, cfg), 2: moment_integral(spec.a2, spec.n2, cfg)}
    a = {1: spec.a1, 2: spec.a2}
    n = {1: spec.n1, 2: spec.n2}
    lam = {1: spec.lambda1, 2: spec.lambda2}
    J: dict[int, Optional[IntegralVerdict]] = {}
    for k in (1, 2):
        other = 3 - k
        J[k] = nested_criterion_integral(a[k], n[k], a[other], n[other], lam[k], cfg) if I[other].converged else None

    def report(verdict: Verdict, branch: str, k: Optional[int]) -> CriteriaReport:
        logger.info("criteria verdict %s (%s)", verdict.value, branch)
        return CriteriaReport(True, (), I[1], I[2], J[1], J[2], verdict, branch, k)

    for k in (1, 2):
        o = 3 - k
        if I[k].divergent and I[o].divergent:
            return report(Verdict.ALL_OSCILLATE, f"k={k} (i): I{k} divergent and I{o} divergent", k)
        if I[k].divergent and I[o].converged and J[k].divergent:
            return report(Verdict.ALL_OSCILLATE,
                          f"k={k} (ii): I{k} divergent, I{o} converged, J{k} divergent", k)
    if spec.envelope is Envelope.TWO_SIDED_EXACT_POWER_LAW:
        for k in (1, 2):
            o = 3 - k
            if I[k].divergent and I[o].converged and J[k].converged:
                return report(Verdict.NON_OSCILLATING_EXISTS,
                              f"k={k} (iii): I{k} divergent, I{o} converged, J{k} converged", k)
    if not (I[1].divergent or I[2].divergent):
        why = "both moment integrals converge"
    else:
        why = "one-sided envelope with converged nested integral"
    return report(Verdict.INCONCLUSIVE, f"(iv): {why}", None)
