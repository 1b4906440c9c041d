"""
存储层测试：样本二进制格式、规范化 JSON、运行清单与逐字节可复现性
"""

import io
import json

import numpy as np
import pandas as pd
import pytest

from kolmogorov_fields.config import OUTPUT_CONFIG
from kolmogorov_fields.core.chaining import NormKind
from kolmogorov_fields.processors.experiment_runner import ChainEstimateRunner, LevyVerifyRunner, SpdeRunRunner
from kolmogorov_fields.storage.artifact_store import (
    ArtifactStore,
    RunManifest,
    canonical_json,
    config_sha256,
    sha256_bytes,
    sha256_file,
    verify_outputs,
)
from kolmogorov_fields.storage.sample_codec import (
    MAGIC,
    decode_field_sample,
    encode_field_sample,
    frame_to_csv_bytes,
    load_field_sample,
    save_field_sample,
)


def test_field_sample_file_round_trip(tmp_path, generator_1d, seed):
    sample = generator_1d.generate("brownian", 3, seed)
    path = save_field_sample(sample, tmp_path / "nested" / "sample.bin")
    again = load_field_sample(path)
    assert (again.d, again.m_max, again.n_time, again.n_rep) == (1, 6, 4, 3)
    assert again.norm == sample.norm
    assert again.seed == sample.seed
    np.testing.assert_array_equal(again.values, sample.values)
    np.testing.assert_array_equal(again.time_grid, sample.time_grid)


def test_sample_without_seed_keeps_none(generator_1d):
    sample = generator_1d.linear(2)
    assert sample.seed is None
    assert decode_field_sample(encode_field_sample(sample)).seed is None


def test_encoded_header_starts_with_magic(generator_1d):
    payload = encode_field_sample(generator_1d.linear(1))
    assert payload.startswith(MAGIC)


def test_bad_magic_rejected(generator_1d):
    payload = bytearray(encode_field_sample(generator_1d.linear(1)))
    payload[:8] = b"NOTMAGIC"
    with pytest.raises(ValueError):
        decode_field_sample(bytes(payload))


def test_truncated_payload_rejected(generator_1d):
    payload = encode_field_sample(generator_1d.linear(1))
    with pytest.raises(ValueError):
        decode_field_sample(payload[:-8])
    with pytest.raises(ValueError):
        decode_field_sample(payload[:10])


def test_csv_uses_round_trip_float_format():
    frame = pd.DataFrame({"x": [0.1, 1.0 / 3.0], "k": [1, 2]})
    text = frame_to_csv_bytes(frame).decode("utf-8")
    assert "\r" not in text
    parsed = pd.read_csv(io.StringIO(text))
    assert parsed["x"].tolist() == [0.1, 1.0 / 3.0]
    assert OUTPUT_CONFIG["float_format"] == "%.17g"


def test_canonical_json_handles_numpy_and_sorts_keys():
    text = canonical_json({"b": np.float64(0.5), "a": np.arange(3), "c": np.int32(7)})
    data = json.loads(text)
    assert data == {"a": [0, 1, 2], "b": 0.5, "c": 7}
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert text.endswith("\n")


def test_canonical_json_rejects_unknown_objects():
    with pytest.raises(TypeError):
        canonical_json({"x": object()})


def test_config_hash_ignores_key_order():
    first = {"gamma": 1.0, "modulus": {"kind": "power", "epsilon": 0.5}}
    second = {"modulus": {"epsilon": 0.5, "kind": "power"}, "gamma": 1.0}
    assert config_sha256(first) == config_sha256(second)
    assert config_sha256(first) != config_sha256({**first, "gamma": 2.0})


def test_store_records_checksums_and_manifest(tmp_path):
    store = ArtifactStore(tmp_path / "out")
    store.write_json("report.json", {"value": 1})
    store.write_csv("table.csv", pd.DataFrame({"r": [0.5, 0.25]}))
    path = store.write_manifest(RunManifest(command="modulus_check", config_hash="abc", seed=3, exit_code=0))

    assert path.name == OUTPUT_CONFIG["manifest_name"]
    manifest = RunManifest.load(path)
    assert sorted(manifest.outputs) == ["report.json", "table.csv"]
    assert manifest.outputs["report.json"] == sha256_file(tmp_path / "out" / "report.json")
    assert manifest.seed == 3
    assert manifest.exit_code == 0
    assert verify_outputs(manifest, tmp_path / "out") == []


def test_verify_outputs_reports_tampered_and_missing(tmp_path):
    store = ArtifactStore(tmp_path)
    store.write_json("a.json", {"x": 1})
    store.write_json("b.json", {"y": 2})
    store.write_manifest(RunManifest(command="levy_verify", config_hash="h", seed=1))
    manifest = RunManifest.load(tmp_path / OUTPUT_CONFIG["manifest_name"])

    (tmp_path / "a.json").write_text('{"x": 2}\n', encoding="utf-8")
    (tmp_path / "b.json").unlink()
    assert sorted(verify_outputs(manifest, tmp_path)) == ["a.json", "b.json"]


def test_sha256_helpers_agree(tmp_path):
    payload = b"kolmogorov"
    (tmp_path / "blob").write_bytes(payload)
    assert sha256_file(tmp_path / "blob") == sha256_bytes(payload)


def _outputs(directory):
    manifest = RunManifest.load(directory / OUTPUT_CONFIG["manifest_name"])
    return {name: (directory / name).read_bytes() for name in manifest.outputs}


def test_chain_outputs_identical_across_thread_counts(tmp_path, seed):
    experiment = {"field": {"generator": "brownian", "m_max": 5, "n_time": 2}, "replications": 40,
                  "gamma": 4.0, "save_sample": True}
    for threads in (1, 8):
        ChainEstimateRunner(experiment, seed=seed, output_dir=str(tmp_path / f"t{threads}"),
                            n_threads=threads).run()
    first, second = _outputs(tmp_path / "t1"), _outputs(tmp_path / "t8")
    assert "field_sample.bin" in first
    assert first == second

    sample = load_field_sample(tmp_path / "t1" / "field_sample.bin")
    assert sample.n_rep == 40
    assert sample.norm == NormKind.L2


def test_levy_outputs_identical_across_thread_counts(tmp_path, seed):
    experiment = {"levy": {"total_mass": 2.0, "T": 1.0}, "replications": 200, "p_values": [2.0],
                  "batch_sizes": [20, 200]}
    stats = []
    for threads in (1, 8):
        stats.append(LevyVerifyRunner(experiment, seed=seed, output_dir=str(tmp_path / f"t{threads}"),
                                      n_threads=threads).run())
    assert _outputs(tmp_path / "t1") == _outputs(tmp_path / "t8")
    assert stats[0]["verdict"] == stats[1]["verdict"]

    manifests = [json.loads((tmp_path / f"t{t}" / "manifest.json").read_text(encoding="utf-8")) for t in (1, 8)]
    for manifest in manifests:
        manifest.pop("wall_clock_seconds")
    assert manifests[0] == manifests[1]


def test_spde_outputs_identical_across_thread_counts(tmp_path, seed):
    experiment = {"kernel": {"n": 256}, "forcing": {"name": "sine"}, "replications": 120, "levels": [2, 3, 4]}
    for threads in (1, 8):
        SpdeRunRunner(experiment, seed=seed, output_dir=str(tmp_path / f"t{threads}"), n_threads=threads).run()
    first, second = _outputs(tmp_path / "t1"), _outputs(tmp_path / "t8")
    assert "spde_report.json" in first
    assert "u_snapshots.csv" in first
    assert first == second
