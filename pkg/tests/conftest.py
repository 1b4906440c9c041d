"""
测试公共夹具
"""

import pytest

from kolmogorov_fields.core.levy import LevyConfig
from kolmogorov_fields.core.modulus import ModulusFunction
from kolmogorov_fields.processors.field_generators import FieldGenerator

SEED = 20240611


@pytest.fixture
def seed():
    return SEED


@pytest.fixture
def power_one():
    return ModulusFunction.power(1.0)


@pytest.fixture
def unit_levy():
    """ν 为 (0,1) 上的均匀分布乘以质量 2，T=1"""
    return LevyConfig.from_dict({"total_mass": 2.0, "T": 1.0, "mark_law": "uniform_positive", "c": 1.0})


@pytest.fixture
def generator_1d():
    return FieldGenerator(d=1, m_max=6, n_time=4)
