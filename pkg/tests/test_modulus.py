"""
连续模数测试
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kolmogorov_fields.core.exceptions import DivisionByZeroError, NonFiniteResultError
from kolmogorov_fields.core.modulus import (
    ModulusFunction,
    ModulusKind,
    TailMethod,
    TailMode,
    TailSpec,
    Verdict,
    check_admissibility,
    check_modulus_axioms,
    dyadic_sum,
    eval_modulus,
    loglog_constants,
    modulus_at_dyadic,
    modulus_from_dict,
    modulus_to_dict,
    ratio_condition,
    theoretical_lambda,
    theta_window,
)


# ==================== 求值与公理 ====================

def test_power_modulus_values():
    phi = ModulusFunction.power(0.5)
    np.testing.assert_allclose(eval_modulus(phi, [0.25, 1.0, 4.0]), [0.5, 1.0, 2.0], rtol=1e-14)
    assert isinstance(eval_modulus(phi, 0.25), float)


def test_logpower_constant_tail_above_breakpoint():
    phi = ModulusFunction.logpower(2.0)
    at_break = eval_modulus(phi, 0.5)
    assert at_break == pytest.approx(math.log(2.0) ** -2)
    assert eval_modulus(phi, 0.9) == pytest.approx(at_break)
    assert eval_modulus(phi, 0.1) == pytest.approx(math.log(10.0) ** -2)


def test_eval_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        eval_modulus(ModulusFunction.power(1.0), [0.5, 0.0])


def test_custom_nonfinite_raises():
    phi = ModulusFunction.custom(lambda r: 1.0 / (r - 0.5))
    with pytest.raises(NonFiniteResultError):
        eval_modulus(phi, 0.5)


def test_deep_dyadic_levels_do_not_underflow():
    phi = ModulusFunction.logpower(2.0)
    values = modulus_at_dyadic(phi, [2000, 5000])
    np.testing.assert_allclose(values, (np.array([2000, 5000]) * math.log(2.0)) ** -2.0, rtol=1e-12)


@pytest.mark.parametrize("phi", [
    ModulusFunction.power(0.5),
    ModulusFunction.logpower(2.0),
    ModulusFunction.loglog(2.0, 1.0),
])
def test_builtin_moduli_pass_axioms(phi):
    report = check_modulus_axioms(phi)
    assert report.passed
    assert report.vanishing_limit


def test_axioms_report_nonmonotone_custom():
    phi = ModulusFunction.custom(lambda r: np.sqrt(r) * (2.0 + np.sin(1.0 / r)), name="wiggle")
    report = check_modulus_axioms(phi, r_min=1e-3, r_max=1.0, n_probe=2000)
    assert not report.passed
    assert report.violation == "not_monotone"
    assert report.first_violation_radius is not None


def test_axioms_report_nonvanishing_limit():
    phi = ModulusFunction.custom(lambda r: 1.0 + r, name="offset")
    report = check_modulus_axioms(phi)
    assert not report.passed
    assert report.violation == "nonvanishing_limit"


def test_discontinuous_user_tail_is_reported():
    tail = TailSpec(mode=TailMode.USER, func=lambda r: np.full(np.shape(r), 10.0))
    phi = ModulusFunction.logpower(2.0, tail=tail)
    report = check_modulus_axioms(phi)
    assert report.violation in ("tail_discontinuous", "not_monotone")
    assert not report.passed


# ==================== 二进级数 ====================

def test_power_dyadic_sum_closed_form():
    result = dyadic_sum(ModulusFunction.power(0.5), 1.0, i_max=60)
    assert result.verdict == Verdict.CONVERGES
    assert result.estimated_total == pytest.approx(2.0 + math.sqrt(2.0), abs=1e-9)


def test_logpower_divergent_exponent():
    # β·ϑ = 1 → 调和级数
    result = dyadic_sum(ModulusFunction.logpower(2.0), 0.5)
    assert result.verdict == Verdict.DIVERGES
    assert math.isinf(result.tail_bound)


def test_logpower_hurwitz_tail_matches_long_partial_sum():
    phi = ModulusFunction.logpower(2.0)
    short = dyadic_sum(phi, 1.0, i_max=100)
    long = dyadic_sum(phi, 1.0, i_max=200_000)
    # 长部分和加上自身尾项与短部分和的证书一致
    assert short.estimated_total == pytest.approx(long.estimated_total, rel=1e-9)


def test_ratio_test_tail_on_power():
    result = dyadic_sum(ModulusFunction.power(1.0), 1.0, i_max=40, tail_method="ratio_test")
    assert result.verdict == Verdict.CONVERGES
    assert result.estimated_total == pytest.approx(2.0, abs=1e-9)


def test_no_tail_method_is_inconclusive():
    result = dyadic_sum(ModulusFunction.power(1.0), 1.0, i_max=10, tail_method=TailMethod.NONE)
    assert result.verdict == Verdict.INCONCLUSIVE
    assert result.estimated_total is None


def test_custom_i_max_is_capped():
    phi = ModulusFunction.custom(np.sqrt, name="sqrt")
    result = dyadic_sum(phi, 1.0, i_max=5000)
    assert result.i_max == 1074
    assert result.verdict == Verdict.CONVERGES


def test_dyadic_sum_rejects_bad_exponent():
    with pytest.raises(ValueError):
        dyadic_sum(ModulusFunction.power(1.0), 0.0)


# ==================== 比值条件 ====================

def test_logpower_ratio_closed_form():
    report = ratio_condition(ModulusFunction.logpower(2.0), n_min=1, n_max=64)
    n = np.arange(1, 65)
    np.testing.assert_allclose(report.ratios, (1.0 + 1.0 / n) ** 2, rtol=1e-12)
    assert report.lambda_estimate <= 4.0 * (1 + 1e-12)
    assert report.holds


def test_power_ratio_is_constant():
    report = ratio_condition(ModulusFunction.power(0.7))
    np.testing.assert_allclose(report.ratios, 2.0 ** 0.7, rtol=1e-12)
    assert theoretical_lambda(ModulusFunction.power(0.7)) == pytest.approx(2.0 ** 0.7)


def test_ratio_condition_fails_below_lambda():
    report = ratio_condition(ModulusFunction.power(1.0), bound=1.5)
    assert not report.holds


def test_ratio_division_by_zero():
    phi = ModulusFunction.custom(lambda r: np.where(r < 2.0 ** -5, 0.0, r), name="cutoff")
    with pytest.raises(DivisionByZeroError):
        ratio_condition(phi, n_min=1, n_max=10)


def test_loglog_ratio_within_theoretical_lambda():
    phi = ModulusFunction.loglog(2.0, 1.0)
    report = ratio_condition(phi)
    assert report.holds
    assert report.lambda_estimate <= theoretical_lambda(phi)


# ==================== ϑ 窗口与常数 ====================

def test_loglog_constants_closed_form():
    r0, n0 = loglog_constants(2.0, 1.0)
    assert r0 == pytest.approx(math.exp(-math.exp(0.5)), abs=1e-12)
    assert n0 == 3
    assert 2.0 ** -n0 <= r0 < 2.0 ** (-n0 + 1)


@settings(max_examples=1000, deadline=None)
@given(beta=st.floats(0.05, 20.0), gamma=st.floats(0.05, 20.0))
def test_theta_window_emptiness_matches_direct_inequality(beta, gamma):
    window = theta_window(ModulusKind.LOGPOWER, gamma, beta=beta)
    lower = 1.0 / beta if gamma >= 1 else 1.0 / (beta * gamma)
    assert window.empty == (lower >= 1.0 / gamma)


@settings(max_examples=200, deadline=None)
@given(epsilon=st.floats(0.01, 5.0), gamma=st.floats(0.1, 10.0))
def test_power_window_is_never_empty(epsilon, gamma):
    window = theta_window(ModulusFunction.power(epsilon), gamma)
    assert not window.empty
    assert window.lower == 0.0
    assert window.upper == pytest.approx(1.0 / gamma)


@settings(max_examples=200, deadline=None)
@given(epsilon=st.floats(0.01, 3.0), a=st.floats(1e-6, 0.5), b=st.floats(1e-6, 0.5))
def test_power_modulus_is_monotone(epsilon, a, b):
    phi = ModulusFunction.power(epsilon)
    lo, hi = sorted((a, b))
    assert eval_modulus(phi, lo) <= eval_modulus(phi, hi)


def test_beta_condition_flag():
    assert theta_window(ModulusKind.LOGPOWER, 1.0, beta=2.0).beta_condition
    assert not theta_window(ModulusKind.LOGPOWER, 2.0, beta=2.0).beta_condition


# ==================== 可容许性报告 ====================

def test_logpower_admissibility_passes():
    report = check_admissibility(ModulusFunction.logpower(2.0), gamma=1.0, theta=0.75)
    assert report.verdict == "pass"
    assert report.theta_in_window


def test_power_admissibility_default_theta_in_window():
    report = check_admissibility(ModulusFunction.power(1.0), gamma=2.0)
    assert report.verdict == "pass"
    assert report.theta_window.lower == 0.0
    assert report.theta_window.upper == pytest.approx(0.5)


def test_theta_outside_window_fails():
    # ϑ = 0.3 < 1/β = 0.5
    report = check_admissibility(ModulusFunction.logpower(2.0), gamma=1.0, theta=0.3)
    assert report.verdict == "fail"


def test_theta_out_of_range_raises():
    with pytest.raises(ValueError):
        check_admissibility(ModulusFunction.power(1.0), gamma=2.0, theta=0.6)


def test_modulus_dict_round_trip():
    for phi in (ModulusFunction.power(0.3), ModulusFunction.logpower(2.0), ModulusFunction.loglog(1.5, 2.0)):
        again = modulus_from_dict(modulus_to_dict(phi))
        assert again.kind == phi.kind
        assert eval_modulus(again, 1e-3) == pytest.approx(eval_modulus(phi, 1e-3))
