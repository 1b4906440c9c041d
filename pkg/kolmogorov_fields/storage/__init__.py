# Storage模块
from .artifact_store import ArtifactStore, RunManifest, verify_outputs
from .sample_codec import load_field_sample, save_field_sample

__all__ = ['ArtifactStore', 'RunManifest', 'verify_outputs', 'load_field_sample', 'save_field_sample']
