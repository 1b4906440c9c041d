"""
热核与分数阶拉普拉斯测试
"""

import math
import threading

import numpy as np
import pytest
from scipy import integrate

from kolmogorov_fields.core.exceptions import DomainError, GridMismatchError, MassDeficitError
from kolmogorov_fields.core.kernel import (
    KernelCache,
    KernelSpec,
    boundary_mass,
    calibrate_extent,
    frac_laplacian_apply,
    frac_laplacian_constant,
    fractional_laplacian_spectral,
    kernel_convolve,
    kernel_eval,
    kernel_multiplier,
)


def _gaussian(points):
    return np.exp(-np.sum(np.asarray(points) ** 2, axis=-1))


# ==================== 分数阶拉普拉斯 ====================

def test_frac_laplacian_constant_cauchy():
    assert frac_laplacian_constant(1, 1.0) == pytest.approx(1.0 / math.pi, abs=1e-12)


def test_frac_laplacian_constant_domain():
    with pytest.raises(DomainError):
        frac_laplacian_constant(1, 2.0)
    with pytest.raises(ValueError):
        frac_laplacian_constant(0, 1.0)


def test_principal_value_matches_fourier_closed_form():
    # (−Δ)^{1/2} e^{−x²} 在 0 处等于 2/√π
    result = frac_laplacian_apply(_gaussian, [0.0], 1.0, d=1)
    assert float(result) == pytest.approx(2.0 / math.sqrt(math.pi), abs=1e-6)
    assert result.error_estimate < 1e-6


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_principal_value_matches_fourier_integral(alpha):
    x = 0.7
    # (−Δ)^{α/2} e^{−x²} = π^{−1/2}∫_0^∞ ξ^α e^{−ξ²/4} cos(ξx) dξ
    expected = integrate.quad(lambda xi: xi ** alpha * math.exp(-xi ** 2 / 4.0) * math.cos(xi * x), 0.0, 60.0,
                              limit=200, epsabs=1e-12)[0] / math.sqrt(math.pi)
    result = frac_laplacian_apply(_gaussian, [x], alpha, d=1)
    assert float(result) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
def test_spectral_laplacian_on_sine(alpha):
    L, n = 10.0 * math.pi, 256
    axis = -L / 2.0 + (L / n) * np.arange(n)
    np.testing.assert_allclose(fractional_laplacian_spectral(np.sin(3.0 * axis), alpha, L),
                               3.0 ** alpha * np.sin(3.0 * axis), atol=1e-10)


def test_principal_value_two_dimensional_radial_symmetry():
    first = frac_laplacian_apply(_gaussian, [0.3, 0.0], 1.0, d=2)
    second = frac_laplacian_apply(_gaussian, [0.0, 0.3], 1.0, d=2)
    assert float(first) == pytest.approx(float(second), rel=1e-6)


def test_principal_value_dimension_mismatch():
    with pytest.raises(ValueError):
        frac_laplacian_apply(_gaussian, [0.0, 0.0], 1.0, d=1)


# ==================== 热核规格 ====================

@pytest.mark.parametrize("kwargs", [{"n": 1000}, {"L": -1.0}, {"d": 4}, {"alpha": 1.5, "method": "closed_form"}])
def test_kernel_spec_validation(kwargs):
    with pytest.raises(ValueError):
        KernelSpec(**kwargs)


def test_kernel_spec_alpha_domain():
    with pytest.raises(DomainError):
        KernelSpec(alpha=2.5)


def test_kernel_spec_from_dict_defaults():
    spec = KernelSpec.from_dict({"alpha": 1.0})
    assert spec.L == pytest.approx(10.0 * math.pi)
    assert spec.to_dict()["method"] == "spectral"
    assert spec.axis[spec.origin_index] == 0.0


def test_multiplier_identity_at_zero():
    np.testing.assert_array_equal(kernel_multiplier(KernelSpec(n=64), 0.0), np.ones(64))
    with pytest.raises(ValueError):
        kernel_multiplier(KernelSpec(n=64), -1.0)


# ==================== 闭式对照 ====================

@pytest.mark.parametrize("t", [0.1, 1.0])
def test_gaussian_spectral_matches_closed_form(t):
    spectral = kernel_eval(KernelSpec(alpha=2.0, L=14.0 * math.pi, n=1024), t)
    closed = kernel_eval(KernelSpec(alpha=2.0, L=14.0 * math.pi, n=1024, method="closed_form"), t)
    np.testing.assert_allclose(spectral.values, closed.values, rtol=0, atol=1e-6)
    assert spectral.mass == pytest.approx(1.0, abs=1e-4)
    assert closed.mass == pytest.approx(1.0, abs=1e-4)
    assert spectral.value_at_origin() == pytest.approx((4.0 * math.pi * t) ** -0.5, rel=1e-9)


def test_gaussian_two_dimensional_origin():
    evaluation = kernel_eval(KernelSpec(alpha=2.0, d=2, L=14.0 * math.pi, n=256), 1.0)
    assert evaluation.value_at_origin() == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-9)
    assert list(evaluation.to_frame().columns) == ["x_1", "x_2", "value"]


@pytest.mark.slow
def test_cauchy_spectral_matches_closed_form():
    L = calibrate_extent(1.0, 1.0)
    assert L == pytest.approx(12732.0, rel=1e-3)
    spectral = kernel_eval(KernelSpec(alpha=1.0, L=L, n=2 ** 17), 1.0)
    closed = kernel_eval(KernelSpec(alpha=1.0, L=L, n=2 ** 17, method="closed_form"), 1.0, check_mass=False)
    np.testing.assert_allclose(spectral.values, closed.values, rtol=0, atol=1e-6)
    assert spectral.value_at_origin() == pytest.approx(1.0 / math.pi, abs=1e-6)
    assert spectral.boundary_mass <= 1e-4


def test_calibrated_extent_is_multiple_of_two_pi():
    L = calibrate_extent(2.0, 1.0)
    k = L / (2.0 * math.pi)
    assert k == round(k)
    spec = KernelSpec(alpha=2.0, L=L, n=256)
    assert boundary_mass(spec, 1.0) <= 1e-4
    smaller = KernelSpec(alpha=2.0, L=L - 2.0 * math.pi, n=256)
    assert boundary_mass(smaller, 1.0) > 1e-4


def test_stable_kernel_is_nonnegative():
    L = calibrate_extent(1.5, 1.0)
    evaluation = kernel_eval(KernelSpec(alpha=1.5, L=L, n=8192), 1.0)
    assert evaluation.min_value > -1e-8
    assert evaluation.mass == pytest.approx(1.0, abs=1e-4)


def test_mass_deficit_on_small_box():
    with pytest.raises(MassDeficitError) as info:
        kernel_eval(KernelSpec(alpha=2.0, L=2.0 * math.pi, n=64), 1.0)
    assert info.value.diagnostics["boundary_mass"] > 1e-4


# ==================== 卷积 ====================

@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
def test_semigroup_identity(alpha):
    spec = KernelSpec(alpha=alpha, L=10.0 * math.pi, n=512)
    first = kernel_eval(spec, 0.3, check_mass=False)
    second = kernel_eval(spec, 0.5, check_mass=False)
    combined = kernel_eval(spec, 0.8, check_mass=False)
    np.testing.assert_allclose(kernel_convolve(first, second.values), combined.values, rtol=0, atol=1e-6)


def test_convolution_preserves_constants():
    evaluation = kernel_eval(KernelSpec(n=256), 1.0)
    np.testing.assert_allclose(kernel_convolve(evaluation, np.ones((3, 256))), 1.0, atol=1e-12)


def test_convolution_with_spike_recovers_kernel():
    spec = KernelSpec(n=256)
    evaluation = kernel_eval(spec, 1.0)
    spike = np.zeros(256)
    spike[spec.origin_index] = 1.0 / spec.dx
    np.testing.assert_allclose(kernel_convolve(evaluation, spike), evaluation.values, atol=1e-12)


def test_convolution_sine_decay():
    spec = KernelSpec(alpha=1.5, n=512)
    evaluation = kernel_eval(spec, 0.4, check_mass=False)
    # 边长是 2π 的整数倍，sin 是乘子的特征函数
    result = kernel_convolve(evaluation, np.sin(spec.axis))
    np.testing.assert_allclose(result, math.exp(-0.4) * np.sin(spec.axis), atol=1e-12)


def test_convolution_shape_mismatch():
    evaluation = kernel_eval(KernelSpec(n=256), 1.0)
    with pytest.raises(GridMismatchError):
        kernel_convolve(evaluation, np.ones(128))


def test_kernel_cache_concurrent_reads():
    cache = KernelCache()
    spec = KernelSpec(n=256)
    results = []

    def worker():
        results.append(cache.get(spec, 1.0))

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    assert len(cache) == 1
    assert all(result is results[0] for result in results)
    cache.clear()
    assert len(cache) == 0
