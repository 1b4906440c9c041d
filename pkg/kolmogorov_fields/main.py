"""
主程序入口
批处理命令行：连续模数检查、链式估计、Lévy 噪声验证和 SPDE 模拟

用法：
    python -m kolmogorov_fields.main modulus check --config modulus.json
    python -m kolmogorov_fields.main chain estimate --config chain.json --seed 7 --out ./results
    python -m kolmogorov_fields.main levy verify --threads 8
    python -m kolmogorov_fields.main spde run --verify modulus,sup

退出码：0 通过，1 用法或配置错误，2 检查失败，3 无法判定
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from .config import EXIT_CODES, LOGGING_CONFIG
from .core.exceptions import ConfigError
from .processors.experiment_runner import RUNNERS, SpdeRunRunner, VERIFY_SETS
from .utils.config_validation import load_config
from .utils.logging_setup import setup_logging

logger = logging.getLogger(__name__)


class UsageParser(argparse.ArgumentParser):
    """参数错误时抛出 ConfigError，由 main 统一映射为退出码 1"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(prog="kolmogorov_fields", description="广义 Kolmogorov 连续性定理的数值工具包")
    parser.add_argument("group", choices=sorted({group for group, _ in RUNNERS}), help="命令组")
    parser.add_argument("action", choices=sorted({action for _, action in RUNNERS}), help="动作")
    parser.add_argument("--config", help="实验配置 JSON 文件路径")
    parser.add_argument("--seed", type=int, help="主种子（u64），优先于配置文件")
    parser.add_argument("--out", help="输出目录，优先于配置文件")
    parser.add_argument("--threads", type=int, default=None, help="并行线程数，不影响输出")
    parser.add_argument("--verify", help=f"spde run 的检查集合，逗号分隔，可选 {','.join(VERIFY_SETS)}")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        default=LOGGING_CONFIG["level"], help="日志级别")
    parser.add_argument("--log-file", help="日志文件路径")
    return parser


def _check_arguments(args: argparse.Namespace):
    if (args.group, args.action) not in RUNNERS:
        valid = ", ".join(f"{g} {a}" for g, a in sorted(RUNNERS))
        raise ConfigError(f"未知命令: {args.group} {args.action}，可选: {valid}")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        raise ConfigError(f"--seed 必须是 u64: {args.seed}")
    if args.threads is not None and args.threads < 1:
        raise ConfigError(f"--threads 必须 ≥ 1: {args.threads}")
    if args.verify is not None and args.group != "spde":
        raise ConfigError("--verify 只适用于 spde run")


def main(argv: Optional[List[str]] = None) -> int:
    """
    命令行主程序

    Returns:
        退出码
    """
    try:
        args = build_parser().parse_args(argv)
        setup_logging(args.log_level, args.log_file)
        _check_arguments(args)

        runner_class = RUNNERS[(args.group, args.action)]
        experiment = load_config(args.config, runner_class.command)
        kwargs = {"seed": args.seed, "output_dir": args.out, "n_threads": args.threads}
        if runner_class is SpdeRunRunner and args.verify:
            kwargs["verify"] = [item.strip() for item in args.verify.split(",") if item.strip()]

        stats = runner_class(experiment, **kwargs).run()
        print(json.dumps(stats, indent=2, ensure_ascii=False))
        return stats["exit_code"]

    except ConfigError as e:
        logger.error(f"❌ 配置错误: {e}")
        for problem in e.diagnostics.get("problems", [])[1:]:
            logger.error(f"   {problem}")
        return EXIT_CODES["usage"]
    except KeyboardInterrupt:
        logger.info("⏹️ 用户中断")
        return EXIT_CODES["usage"]
    except Exception as e:
        logger.error(f"❌ 运行失败: {e}")
        return EXIT_CODES["fail"]


if __name__ == "__main__":
    sys.exit(main())
