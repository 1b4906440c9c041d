# Core模块
from .chaining import FieldSample, build_grid, chaining_report, neighbor_pairs
from .exceptions import KolmogorovFieldsError
from .kernel import KernelSpec, kernel_eval
from .levy import LevyConfig, compensated_integral, sample_prm
from .modulus import ModulusFunction, check_admissibility
from .reports import InequalityReport
from .spde import MildSolutionField, mild_solution, simulate_ensemble

__all__ = [
    'FieldSample', 'build_grid', 'chaining_report', 'neighbor_pairs',
    'KolmogorovFieldsError',
    'KernelSpec', 'kernel_eval',
    'LevyConfig', 'compensated_integral', 'sample_prm',
    'ModulusFunction', 'check_admissibility',
    'InequalityReport',
    'MildSolutionField', 'mild_solution', 'simulate_ensemble',
]
