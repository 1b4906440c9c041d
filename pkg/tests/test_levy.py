"""
Lévy 噪声测试
"""

import math

import numpy as np
import pytest

from kolmogorov_fields.core.exceptions import InsufficientReplicationsError
from kolmogorov_fields.core.levy import (
    CompensatorQuadrature,
    JumpIntegrand,
    LevyConfig,
    MarkDistribution,
    QuadratureSpec,
    compensated_integral,
    constant_integrand,
    intensity_integral,
    isometry_check,
    kunita_check,
    linfty_moment_check,
    make_integrand,
    mark_norm_integrand,
    martingale_check,
    path_supremum,
    poisson_count_check,
    sample_prm,
    simulate_suprema,
    sine_field_integrand,
    window_count_correlation,
    zero_field_integrand,
)


def _product_integrand() -> JumpIntegrand:
    """ψ(t,v) = t·v，没有闭式补偿子"""
    return JumpIntegrand(func=lambda t, v: np.asarray(t) * v[..., 0], name="t*v")


# ==================== 配置与标记 ====================

def test_config_defaults_and_round_trip(unit_levy):
    assert unit_levy.total_mass == 2.0
    assert unit_levy.to_dict()["marks"]["law"] == "uniform_positive"


def test_truncated_power_mass_is_derived():
    config = LevyConfig.from_dict({"mark_law": "truncated_power", "exponent": 1.0, "truncation": 0.1,
                                   "total_mass": 99.0})
    # 2∫_{0.1}^{1} r^{-2} dr = 18
    assert config.total_mass == pytest.approx(18.0)


@pytest.mark.parametrize("kwargs", [
    {"law": "uniform_positive", "c": 1.0, "d_jump": 2},
    {"law": "point", "c": 1.0, "d_jump": 1, "point": (1.5,)},
    {"law": "truncated_power", "c": 1.0, "exponent": 2.5, "truncation": 0.1},
    {"law": "uniform_ball", "c": -1.0},
])
def test_invalid_mark_distributions(kwargs):
    with pytest.raises(ValueError):
        MarkDistribution(**kwargs)


def test_nonpositive_mass_rejected():
    with pytest.raises(ValueError):
        LevyConfig.from_dict({"total_mass": 0.0})


@pytest.mark.parametrize("law,d_jump,extra", [
    ("uniform_positive", 1, {}),
    ("uniform_ball", 2, {}),
    ("uniform_ball", 3, {}),
    ("truncated_power", 1, {"exponent": 0.5, "truncation": 0.05}),
])
def test_mark_quadrature_matches_norm_moment(law, d_jump, extra):
    marks = MarkDistribution(law=law, c=1.0, d_jump=d_jump, **extra)
    nodes, weights = marks.quadrature(64, 32)
    assert weights.sum() == pytest.approx(1.0)
    for q in (1.0, 2.0, 3.0):
        estimate = float(np.sum(weights * np.linalg.norm(nodes, axis=1) ** q))
        assert estimate == pytest.approx(marks.norm_moment(q), rel=1e-8)


def test_marks_stay_inside_ball(seed):
    rng = np.random.default_rng(seed)
    for law, d_jump, extra in [("uniform_positive", 1, {}), ("uniform_ball", 3, {}),
                               ("truncated_power", 1, {"exponent": 1.5, "truncation": 0.01})]:
        marks = MarkDistribution(law=law, c=0.5, d_jump=d_jump, **extra).sample(rng, 1000)
        radius = np.linalg.norm(marks, axis=1)
        assert marks.shape == (1000, d_jump)
        assert np.all((radius > 0) & (radius < 0.5))


# ==================== 泊松随机测度 ====================

def test_sample_prm_is_sorted_and_reproducible(unit_levy, seed):
    first = sample_prm(unit_levy, seed)
    second = sample_prm(unit_levy, seed)
    np.testing.assert_array_equal(first.times, second.times)
    assert np.all(np.diff(first.times) >= 0)
    assert np.all((first.times > 0) & (first.times <= 1.0))
    assert first.count_in(0.0, 1.0) == first.count
    assert first.restrict(0.0, 0.5).count == first.count_in(0.0, 0.5)
    assert list(first.to_frame().columns) == ["t", "v_1"]


@pytest.mark.slow
def test_poisson_count_moments(unit_levy, seed):
    samples = simulate_suprema(constant_integrand(1.0), unit_levy, 100_000, seed)
    mean_report, variance_report = poisson_count_check(samples, unit_levy)
    assert mean_report.within
    assert variance_report.within
    assert mean_report.estimate == pytest.approx(2.0, abs=0.02)


def test_window_counts_uncorrelated(unit_levy, seed):
    report = window_count_correlation(unit_levy, 2000, seed)
    assert report.within
    with pytest.raises(ValueError):
        window_count_correlation(unit_levy, 10, seed, windows=((0.0, 0.6), (0.5, 1.0)))


# ==================== 补偿积分 ====================

def test_compensated_integral_constant_path(unit_levy, seed):
    sample = sample_prm(unit_levy, seed)
    path = compensated_integral(sample, constant_integrand(1.0), unit_levy)
    # I_t = N_t − 2t
    expected = np.searchsorted(sample.times, path.times, side="right") - 2.0 * path.times
    np.testing.assert_allclose(path.values, expected, atol=1e-12)
    assert path.value_at(0.0) == 0.0
    np.testing.assert_allclose(path.left_limits, path.values[np.searchsorted(path.times, sample.times)] - 1.0)
    assert path_supremum(path) >= abs(path.terminal)


def test_quadrature_compensator_matches_closed_form(unit_levy):
    quadrature = CompensatorQuadrature(_product_integrand(), unit_levy)
    # ν(E)·E[v]·t²/2 = t²/2
    times = np.array([0.25, 0.5, 1.0])
    np.testing.assert_allclose(quadrature(times), times ** 2 / 2.0, rtol=1e-10)
    assert quadrature.error < 1e-8


def test_intensity_integral_closed_form_and_quadrature(unit_levy):
    assert intensity_integral(constant_integrand(1.0), unit_levy, 2.0) == pytest.approx(2.0)
    assert intensity_integral(mark_norm_integrand(1.0), unit_levy, 2.0) == pytest.approx(2.0 / 3.0)
    # 2·∫t²dt·∫v²dv = 2/9
    assert intensity_integral(_product_integrand(), unit_levy, 2.0) == pytest.approx(2.0 / 9.0, rel=1e-10)


@pytest.mark.parametrize("psi", [constant_integrand(1.0), mark_norm_integrand(2.0), _product_integrand()])
def test_intensity_scales_with_mass(psi, unit_levy):
    doubled = unit_levy.with_mass(2.0 * unit_levy.total_mass)
    for power in (1.0, 2.0):
        assert intensity_integral(psi, doubled, power) == pytest.approx(2.0 * intensity_integral(psi, unit_levy, power))


def test_make_integrand():
    assert make_integrand("zero")(np.array([0.5]), np.array([[0.3]]))[0] == 0.0
    assert make_integrand("constant", {"value": 3.0})(np.array([0.5]), np.array([[0.3]]))[0] == 3.0
    with pytest.raises(ValueError):
        make_integrand("unknown")


# ==================== 矩检验 ====================

def test_isometry_and_martingale(unit_levy, seed):
    samples = simulate_suprema(constant_integrand(1.0), unit_levy, 20_000, seed)
    isometry = isometry_check(constant_integrand(1.0), unit_levy, samples)
    assert isometry.expected == pytest.approx(2.0)
    assert isometry.within
    assert martingale_check(samples).within


def test_non_homogeneous_integrand_isometry(unit_levy, seed):
    psi = _product_integrand()
    # 被积函数对 t 和 v 都是一次的，少量节点即精确
    quad = QuadratureSpec(time_nodes=8, mark_nodes=4)
    samples = simulate_suprema(psi, unit_levy, 5_000, seed, quad=quad)
    report = isometry_check(psi, unit_levy, samples, quad=quad)
    assert report.within
    assert martingale_check(samples).within


@pytest.mark.slow
@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_kunita_ratio_is_stable(p, unit_levy, seed):
    report = kunita_check(constant_integrand(1.0), unit_levy, p, 100_000, seed,
                          batch_sizes=[1_000, 10_000, 100_000])
    assert sorted(report.batch_ratios) == [1_000, 10_000, 100_000]
    assert report.drift < 0.25
    assert report.consistent
    assert math.isfinite(report.ratio)
    if p > 1:
        assert 0 < report.extra["doob_ratio"] <= 1.0


def test_kunita_rhs_components(unit_levy, seed):
    samples = simulate_suprema(constant_integrand(1.0), unit_levy, 200, seed)
    high = kunita_check(constant_integrand(1.0), unit_levy, 4.0, 200, seed, samples=samples)
    assert high.rhs_components == {"l2_term": pytest.approx(4.0), "lp_term": pytest.approx(2.0)}
    low = kunita_check(constant_integrand(1.0), unit_levy, 1.5, 200, seed, samples=samples)
    assert set(low.rhs_components) == {"lp_term"}


def test_zero_integrand_gives_zero_ratio(unit_levy, seed):
    report = kunita_check(make_integrand("zero"), unit_levy, 2.0, 50, seed)
    assert report.lhs_estimate == 0.0
    assert report.ratio == 0.0
    assert report.consistent


def test_kunita_needs_two_replications(unit_levy, seed):
    with pytest.raises(InsufficientReplicationsError):
        kunita_check(constant_integrand(1.0), unit_levy, 2.0, 1, seed)


def test_suprema_independent_of_threads(unit_levy, seed):
    single = simulate_suprema(constant_integrand(1.0), unit_levy, 600, seed, n_threads=1)
    multi = simulate_suprema(constant_integrand(1.0), unit_levy, 600, seed, n_threads=4)
    assert single.sup_abs.tobytes() == multi.sup_abs.tobytes()
    assert single.counts.tobytes() == multi.counts.tobytes()


# ==================== 空间一致范数 ====================

def test_linfty_sine_field(unit_levy, seed):
    x_grid = np.linspace(0.0, 2.0 * np.pi, 33)
    report = linfty_moment_check(sine_field_integrand(1), unit_levy, 2.0, 2000, seed, x_grid)
    # (2·E v)^2 + 2·E v² = 1 + 2/3
    assert report.rhs_total == pytest.approx(1.0 + 2.0 / 3.0)
    assert report.notes
    assert report.extra["n_x"] == 33


def test_linfty_zero_field(unit_levy, seed):
    report = linfty_moment_check(zero_field_integrand(), unit_levy, 2.0, 20, seed, np.linspace(0, 1, 5))
    assert report.lhs_estimate == 0.0
    assert report.ratio == 0.0
