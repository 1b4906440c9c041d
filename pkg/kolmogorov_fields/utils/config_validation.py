"""
实验配置校验
按 schemas/v<版本>/<命令>.json 逐键检查类型、枚举和取值范围，未知键一律拒绝
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from ..config import SCHEMA_VERSION
from ..core.exceptions import ConfigError

logger = logging.getLogger(__name__)

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "schemas"

COMMANDS = ("modulus_check", "chain_estimate", "levy_verify", "spde_run")


def load_schema(command: str, version: int = SCHEMA_VERSION) -> Dict[str, Any]:
    """读取命令的配置模式"""
    if command not in COMMANDS:
        raise ConfigError(f"未知命令: {command}", {"command": command})
    path = SCHEMA_DIR / f"v{version}" / f"{command}.json"
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _type_matches(value: Any, expected: str) -> bool:
    # bool 是 int 的子类，需单独排除
    if expected == "object":
        return isinstance(value, dict)
    if expected == "array":
        return isinstance(value, list)
    if expected == "string":
        return isinstance(value, str)
    if expected == "boolean":
        return isinstance(value, bool)
    if expected == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if expected == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
    return False


def validate_value(value: Any, schema: Dict[str, Any], path: str = "$") -> List[str]:
    """
    按模式校验一个值

    Args:
        value: 配置值
        schema: 模式节点
        path: 当前位置，用于错误信息

    Returns:
        问题列表，空列表表示通过
    """
    problems: List[str] = []
    expected = schema.get("type")
    if expected and not _type_matches(value, expected):
        return [f"{path}: 期望 {expected}，实际 {type(value).__name__}"]

    if "enum" in schema and value not in schema["enum"]:
        problems.append(f"{path}: {value!r} 不在 {schema['enum']} 中")
    if expected in ("number", "integer"):
        if "minimum" in schema and value < schema["minimum"]:
            problems.append(f"{path}: {value} < {schema['minimum']}")
        if "exclusive_minimum" in schema and value <= schema["exclusive_minimum"]:
            problems.append(f"{path}: {value} 必须 > {schema['exclusive_minimum']}")
        if "maximum" in schema and value > schema["maximum"]:
            problems.append(f"{path}: {value} > {schema['maximum']}")

    if expected == "array" and "items" in schema:
        for k, item in enumerate(value):
            problems.extend(validate_value(item, schema["items"], f"{path}[{k}]"))

    if expected == "object" and "properties" in schema:
        properties = schema["properties"]
        for key in sorted(set(value) - set(properties)):
            problems.append(f"{path}.{key}: 未知键")
        for key, sub_schema in properties.items():
            if key in value:
                problems.extend(validate_value(value[key], sub_schema, f"{path}.{key}"))
            elif sub_schema.get("required"):
                problems.append(f"{path}.{key}: 缺少必需键")
    return problems


def validate_config(command: str, config: Dict[str, Any], version: int = SCHEMA_VERSION) -> Dict[str, Any]:
    """
    在任何计算之前校验实验配置

    Raises:
        ConfigError: 配置不合法，diagnostics["problems"] 列出全部问题
    """
    problems = validate_value(config, load_schema(command, version))
    if problems:
        for problem in problems:
            logger.error(f"配置错误 {problem}")
        raise ConfigError(f"{command} 配置校验失败: {problems[0]}", {"problems": problems})
    return config


def load_config(path: Optional[Union[str, Path]], command: str) -> Dict[str, Any]:
    """
    读取并校验 JSON 配置文件；path 为 None 时使用空配置（全部默认值）

    Raises:
        ConfigError: 文件不存在、不是合法 JSON 或校验失败
    """
    if path is None:
        return validate_config(command, {})
    try:
        with open(path, "r", encoding="utf-8") as f:
            config = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"配置文件不存在: {path}", {"path": str(path)}) from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"配置文件不是合法 JSON: {e}", {"path": str(path)}) from e
    return validate_config(command, config)
