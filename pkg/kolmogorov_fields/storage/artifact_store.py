"""
结果存储
负责输出目录、JSON/CSV/二进制产物的写入、sha256 校验和以及运行清单

产物文件本身不包含墙钟时间，相同配置与种子的重复运行得到逐字节相同的输出；
墙钟时间只记录在清单中。
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from ..config import OUTPUT_CONFIG, TOOL_VERSION
from ..core.chaining import FieldSample
from .sample_codec import encode_field_sample, frame_to_csv_bytes

logger = logging.getLogger(__name__)


def _to_builtin(value: Any) -> Any:
    """numpy 标量与数组转为内置类型"""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"无法序列化的类型: {type(value).__name__}")


def canonical_json(data: Any) -> str:
    """排序键、固定缩进的 JSON 文本"""
    return json.dumps(data, indent=OUTPUT_CONFIG["json_indent"], ensure_ascii=False, sort_keys=True,
                      default=_to_builtin) + "\n"


def config_sha256(config: Dict[str, Any]) -> str:
    """配置的规范化哈希"""
    text = json.dumps(config, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_bytes(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def sha256_file(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int
    tool_version: str = TOOL_VERSION
    outputs: Dict[str, str] = field(default_factory=dict)
    wall_clock_seconds: float = 0.0
    exit_code: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "outputs": dict(sorted(self.outputs.items())),
            "wall_clock_seconds": self.wall_clock_seconds,
            "exit_code": self.exit_code,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        return cls(command=data["command"], config_hash=data["config_hash"], seed=int(data["seed"]),
                   tool_version=data.get("tool_version", TOOL_VERSION), outputs=dict(data.get("outputs", {})),
                   wall_clock_seconds=float(data.get("wall_clock_seconds", 0.0)), exit_code=data.get("exit_code"))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunManifest":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


class ArtifactStore:
    """
    产物存储类
    把报告和表格写入输出目录，并记录每个产物的 sha256
    """

    def __init__(self, output_dir: Optional[Union[str, Path]] = None):
        """
        初始化存储

        Args:
            output_dir: 输出目录，缺省为 OUTPUT_CONFIG["output_directory"]
        """
        self.output_dir = Path(output_dir or OUTPUT_CONFIG["output_directory"])
        self.checksums: Dict[str, str] = {}
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def _write(self, name: str, payload: bytes) -> Path:
        try:
            path = self.output_dir / name
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(payload)
            self.checksums[name] = sha256_bytes(payload)
            logger.info(f"💾 已写入 {path}")
            return path
        except Exception as e:
            logger.error(f"❌ 写入产物 {name} 失败: {e}")
            raise

    def write_json(self, name: str, data: Any) -> Path:
        return self._write(name, canonical_json(data).encode("utf-8"))

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        return self._write(name, frame_to_csv_bytes(frame))

    def write_field_sample(self, name: str, sample: FieldSample) -> Path:
        return self._write(name, encode_field_sample(sample))

    def write_manifest(self, manifest: RunManifest) -> Path:
        """写入清单（清单本身不计入校验和）"""
        manifest.outputs = dict(self.checksums)
        path = self.output_dir / OUTPUT_CONFIG["manifest_name"]
        try:
            path.write_text(canonical_json(manifest.to_dict()), encoding="utf-8")
            logger.info(f"📋 运行清单: {path}")
            return path
        except Exception as e:
            logger.error(f"❌ 写入运行清单失败: {e}")
            raise


def verify_outputs(manifest: RunManifest, output_dir: Union[str, Path]) -> List[str]:
    """
    按清单校验输出目录中的产物

    Returns:
        校验失败或缺失的产物名列表
    """
    output_dir = Path(output_dir)
    mismatches = []
    for name, checksum in manifest.outputs.items():
        path = output_dir / name
        if not path.exists() or sha256_file(path) != checksum:
            mismatches.append(name)
    return mismatches
