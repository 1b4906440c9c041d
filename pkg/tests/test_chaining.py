"""
链式估计测试
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kolmogorov_fields.core.chaining import (
    FieldSample,
    build_grid,
    chain_path,
    chaining_bound,
    chaining_constant,
    chaining_report,
    compute_level_increments,
    dyadic_approximation,
    general_alpha_factor,
    holder_exponent_fit,
    level_increment_table,
    moment_hypothesis_check,
    neighbor_pairs,
    seminorm,
    verify_pathwise_chaining,
)
from kolmogorov_fields.core.exceptions import (
    BudgetExceededError,
    InsufficientReplicationsError,
    NotReachableError,
)
from kolmogorov_fields.core.modulus import ModulusFunction
from kolmogorov_fields.processors.field_generators import FieldGenerator


# ==================== 网格 ====================

@settings(max_examples=50, deadline=None)
@given(d=st.integers(1, 3), m=st.integers(0, 4))
def test_grid_and_neighbor_counts(d, m):
    grid = build_grid(d, m)
    assert grid.size == (2 ** m + 1) ** d
    pairs = neighbor_pairs(grid)
    assert pairs.count == d * 2 ** m * (2 ** m + 1) ** (d - 1)
    distance = np.linalg.norm(grid.points[pairs.second] - grid.points[pairs.first], axis=-1)
    np.testing.assert_allclose(distance, 2.0 ** -m, rtol=0, atol=0)


def test_grid_budget():
    with pytest.raises(BudgetExceededError):
        build_grid(3, 10, max_points=1000)


def test_level_pairs_map_to_fine_grid():
    coarse = neighbor_pairs(build_grid(2, 1))
    fine = build_grid(2, 3)
    first, second = coarse.on_level(3)
    distance = np.linalg.norm(fine.points[second] - fine.points[first], axis=-1)
    np.testing.assert_allclose(distance, 0.5)


@settings(max_examples=200, deadline=None)
@given(x=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=3), m=st.integers(0, 20))
def test_dyadic_approximation_bounds(x, m):
    x = np.asarray(x)
    approx = dyadic_approximation(x, m)
    assert np.all(approx <= x)
    assert np.all(x - approx < 2.0 ** -m)
    assert np.all(np.ldexp(approx, m) == np.floor(np.ldexp(approx, m)))


def test_chain_path_moves_one_axis_at_a_time():
    segments = chain_path([0.25, 0.5], [0.5, 0.25], 1)
    assert len(segments) == 2
    assert [s.axis for s in segments] == [0, 1]
    for segment in segments:
        assert segment.length == pytest.approx(0.25)
    assert segments[-1].end == (0.5, 0.25)


def test_chain_path_identical_points_is_empty():
    assert chain_path([0.5], [0.5], 0) == []


def test_chain_path_not_reachable():
    with pytest.raises(NotReachableError):
        chain_path([0.0], [0.5], 1)


# ==================== K_i 与路径不等式 ====================

def test_linear_field_level_increments():
    sample = FieldGenerator(d=2, m_max=4).linear(n_rep=1, scale=3.0)
    K = level_increment_table(sample)
    np.testing.assert_allclose(K[0, :, 0], 3.0 * 2.0 ** -np.arange(5), rtol=1e-14)


def test_constant_field_has_zero_increments(generator_1d):
    sample = generator_1d.constant(n_rep=2, value=5.0, h_dim=3)
    K = compute_level_increments(sample, neighbor_pairs(build_grid(1, 3)))
    assert np.all(K == 0)
    report = verify_pathwise_chaining(sample)
    assert report.holds


def test_field_sample_validation():
    with pytest.raises(ValueError):
        FieldSample(d=1, m_max=2, time_grid=[0.0], values=np.zeros((1, 1, 4, 1)))
    with pytest.raises(ValueError):
        FieldSample(d=1, m_max=1, time_grid=[0.5, 0.2], values=np.zeros((1, 2, 3, 1)))
    with pytest.raises(ValueError):
        FieldSample(d=1, m_max=1, time_grid=[0.0], values=np.full((1, 1, 3, 1), np.nan))


@pytest.mark.slow
def test_pathwise_chaining_brownian_exact(seed):
    sample = FieldGenerator(d=1, m_max=8, n_time=16).brownian(n_rep=100, seed=seed)
    report = verify_pathwise_chaining(sample)
    assert report.n_checked == 100 * 16 * (257 * 256 // 2)
    assert report.holds
    assert report.max_ratio <= 1.0


@pytest.mark.slow
def test_pathwise_chaining_power_variant(seed):
    sample = FieldGenerator(d=1, m_max=8, n_time=16).brownian(n_rep=100, seed=seed)
    report = verify_pathwise_chaining(sample, power=0.5)
    assert report.holds


def test_pathwise_chaining_two_dimensional(seed):
    sample = FieldGenerator(d=2, m_max=3).scaled_noise(n_rep=5, seed=seed)
    assert verify_pathwise_chaining(sample).holds


def test_pathwise_chaining_detects_broken_table(generator_1d):
    sample = generator_1d.linear(n_rep=1)
    K = level_increment_table(sample) * 0.1
    report = verify_pathwise_chaining(sample, K=K)
    assert not report.holds
    assert report.first_violation is not None


# ==================== 半范数与链式上界 ====================

@pytest.mark.parametrize("name", ["brownian", "linear"])
def test_seminorm_below_chaining_bound(name, seed, power_one):
    gamma, theta = 2.0, 0.25
    sample = FieldGenerator(d=1, m_max=7, n_time=4).generate(name, 20, seed)
    report = chaining_report(sample, power_one, 1.0 / gamma - theta, gamma=gamma)
    assert report.bound_holds
    assert np.all(report.seminorm_empirical <= report.chain_bound)
    assert report.bounds_frame()["holds"].all()


def test_power_mode_bound(seed, power_one):
    sample = FieldGenerator(d=1, m_max=6, n_time=2).brownian(n_rep=10, seed=seed)
    gamma = 0.5
    report = chaining_report(sample, power_one, 1.0 / gamma - 0.5, gamma=gamma)
    assert report.gamma == gamma
    assert report.pathwise.power == gamma
    assert report.bound_holds


def test_chaining_constant_for_power_modulus():
    C_d, ratio = chaining_constant(ModulusFunction.power(1.0), 0.5, d=1, i_max=10)
    assert ratio == pytest.approx(math.sqrt(2.0))
    assert C_d == pytest.approx(4.0 * math.sqrt(2.0))


def test_chaining_bound_zero_for_zero_table(power_one):
    bound = chaining_bound(np.zeros((2, 4, 3)), power_one, 0.5, d=1)
    assert np.all(bound.values == 0)


def test_chaining_bound_rejects_large_i_max(power_one):
    with pytest.raises(ValueError):
        chaining_bound(np.ones((1, 3, 1)), power_one, 0.5, d=1, i_max=3)


def test_general_alpha_factor(power_one):
    assert general_alpha_factor(power_one, 0.2, 0.5, d=1) == 1.0
    assert general_alpha_factor(power_one, 0.2, 0.5, d=4) == pytest.approx(2.0 ** 0.5 + 1.0)
    with pytest.raises(ValueError):
        general_alpha_factor(power_one, 0.6, 0.5, d=1)


def test_seminorm_of_linear_field(power_one):
    sample = FieldGenerator(d=1, m_max=5).linear(n_rep=1, scale=2.0)
    # |X(x)−X(y)|/|x−y| = 2
    np.testing.assert_allclose(seminorm(sample, power_one, 1.0), [2.0], rtol=1e-12)


# ==================== 矩假设与指数拟合 ====================

@pytest.mark.slow
def test_brownian_exponent_recovery(seed):
    sample = FieldGenerator(d=1, m_max=8).brownian(n_rep=10_000, seed=seed)
    fit = holder_exponent_fit(sample, gamma=4.0)
    assert fit.epsilon_hat == pytest.approx(1.0, abs=0.1)


def test_moment_hypothesis_linear(power_one):
    sample = FieldGenerator(d=1, m_max=6).linear(n_rep=3)
    report = moment_hypothesis_check(sample, 2.0, power_one)
    # E|ΔX|² = r² = r·φ(r)
    assert report.consistent
    assert report.slope == pytest.approx(1.0, abs=1e-9)


def test_moment_hypothesis_zero_field(power_one, generator_1d):
    report = moment_hypothesis_check(generator_1d.constant(n_rep=4), 2.0, power_one)
    assert report.consistent
    assert report.note


def test_moment_hypothesis_needs_two_replications(power_one, generator_1d):
    with pytest.raises(InsufficientReplicationsError):
        moment_hypothesis_check(generator_1d.linear(n_rep=1), 2.0, power_one)


def test_chaining_report_frames(power_one, generator_1d):
    report = chaining_report(generator_1d.linear(n_rep=2), power_one, 0.5)
    frame = report.increments_frame()
    assert list(frame.columns) == ["replication", "level", "time_index", "K_value"]
    assert len(frame) == 2 * 7 * 4
    assert report.to_dict()["bound_holds"]
