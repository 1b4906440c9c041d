# Processors模块
from .experiment_runner import (
    ChainEstimateRunner,
    LevyVerifyRunner,
    ModulusCheckRunner,
    SpdeRunRunner,
)
from .field_generators import FieldGenerator

__all__ = ['ChainEstimateRunner', 'LevyVerifyRunner', 'ModulusCheckRunner', 'SpdeRunRunner', 'FieldGenerator']
