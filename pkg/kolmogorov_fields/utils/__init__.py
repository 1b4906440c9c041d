# Utils模块
from .config_validation import load_config, validate_config
from .logging_setup import setup_logging
from .parallel import map_replications
from .seeding import derive_seed, replication_rng

__all__ = ['load_config', 'validate_config', 'setup_logging', 'map_replications', 'derive_seed', 'replication_rng']
