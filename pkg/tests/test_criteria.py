import itertools

import pytest

from osccrit.criteria import (
    Envelope,
    HypothesisViolation,
    SystemSpec,
    Verdict,
    Violation,
    classify_oscillation,
    power_law,
    validate_hypotheses,
)
from osccrit.quadrature import moment_integral, nested_criterion_integral

from conftest import make_spec


def test_example1_branch_i(example1):
    rep = classify_oscillation(example1)
    assert rep.verdict is Verdict.ALL_OSCILLATE
    assert rep.k == 1 and "(i)" in rep.witness_branch
    assert rep.I1.divergent and rep.I2.divergent
    assert rep.J1 is None and rep.J2 is None


def test_example2_branch_ii(example2):
    rep = classify_oscillation(example2)
    assert rep.verdict is Verdict.ALL_OSCILLATE
    assert rep.witness_branch.startswith("k=1 (ii)")
    assert rep.I1.divergent and rep.I2.converged and rep.J1.divergent
    assert rep.I2.value == pytest.approx(1.0, rel=1e-9)


def test_witness_spec_branch_iii(witness_spec):
    rep = classify_oscillation(witness_spec)
    assert rep.verdict is Verdict.NON_OSCILLATING_EXISTS
    assert rep.k == 1
    assert rep.J1.value == pytest.approx(1 / 8748, rel=1e-10)


def test_one_sided_envelope_is_inconclusive(witness_spec):
    spec = SystemSpec(**{**witness_spec.__dict__, "envelope": Envelope.ONE_SIDED_LOWER})
    rep = classify_oscillation(spec)
    assert rep.verdict is Verdict.INCONCLUSIVE
    assert "(iv)" in rep.witness_branch


def test_both_moments_finite_inconclusive():
    rep = classify_oscillation(make_spec([(1, 0, -1)], [(1, 0, -2)]))
    assert rep.verdict is Verdict.INCONCLUSIVE


@pytest.mark.parametrize(
    "kwargs, violation",
    [
        (dict(lam1=1.0, lam2=1.0), Violation.LAMBDA_PRODUCT_NOT_GREATER_THAN_ONE),
        (dict(lam1=-1.0, lam2=-3.0), Violation.LAMBDA_NOT_POSITIVE),
        (dict(n1=0), Violation.INVALID_ORDER),
        (dict(M=0.5), Violation.ENVELOPE_CONSTANT_BELOW_ONE),
    ],
)
def test_violations(kwargs, violation):
    spec = make_spec([(1, 2, 0)], [(1, 4, 0)], **kwargs)
    assert violation in validate_hypotheses(spec)
    with pytest.raises(HypothesisViolation) as info:
        classify_oscillation(spec)
    assert violation in info.value.violations


def test_envelope_constant_ignored_for_one_sided():
    spec = make_spec([(1, 2, 0)], [(1, 4, 0)], M=0.5, envelope=Envelope.ONE_SIDED_LOWER)
    assert validate_hypotheses(spec) == []


def test_negative_coefficient_rejected_at_construction():
    with pytest.raises(ValueError):
        make_spec([(-1, 0, 0)], [(1, 0, 0)])


def test_power_law_odd():
    assert power_law(-2.0, 3.0) == -8.0
    assert power_law(0.0, 0.5) == 0.0


def test_nonlinearity_signs(witness_spec):
    assert witness_spec.f1(1.0, -2.0) < 0 < witness_spec.f1(1.0, 2.0)
    assert witness_spec.f2(1.0, 2.0) < 0 < witness_spec.f2(1.0, -2.0)


_COEFS = [[(1, 2, 0)], [(1, 0, -1)], [(1, 1, 0)], [(1, 0, -3)], [(1, 2, 2)], [(2, 1, -0.5)]]


@pytest.mark.parametrize("a1, a2", list(itertools.product(_COEFS, repeat=2)))
def test_swap_symmetry(a1, a2):
    spec = make_spec(a1, a2, n1=2, n2=3, lam1=2.0, lam2=1.5)
    r, s = classify_oscillation(spec), classify_oscillation(spec.swapped())
    assert r.verdict is s.verdict
    if r.k is not None and r.k == s.k == 1:
        # both found at k=1 only when the tree is symmetric in the two indices
        assert r.witness_branch.split(":")[0][-4:] == s.witness_branch.split(":")[0][-4:]


def test_swap_is_involution(witness_spec):
    assert witness_spec.swapped().swapped() == witness_spec


@pytest.mark.parametrize("a1, a2", list(itertools.product(_COEFS, repeat=2)))
def test_branch_soundness(a1, a2):
    spec = make_spec(a1, a2)
    rep = classify_oscillation(spec)
    if rep.verdict is not Verdict.ALL_OSCILLATE:
        return
    k = rep.k
    a = {1: spec.a1, 2: spec.a2}
    o = 3 - k
    assert moment_integral(a[k], 2).divergent == rep.__dict__[f"I{k}"].divergent is True
    if "(ii)" in rep.witness_branch:
        assert moment_integral(a[o], 2).converged
        lam = spec.lambda1 if k == 1 else spec.lambda2
        assert nested_criterion_integral(a[k], 2, a[o], 2, lam).divergent


def test_report_dict_roundtrips_to_json(example2):
    import json

    d = classify_oscillation(example2).to_dict()
    assert json.loads(json.dumps(d))["verdict"] == "AllOscillate"
