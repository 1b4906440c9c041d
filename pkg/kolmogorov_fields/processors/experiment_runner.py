"""
实验运行器
每个命令行命令对应一个运行器：读取已校验的实验配置，初始化组件，执行检查，
把报告和表格写入输出目录并生成运行清单

判定到退出码的映射见 EXIT_CODES：pass → 0，fail → 2，inconclusive → 3
求积失败、超出预算等数值故障写出诊断报告并判为 inconclusive，定义域错误视为配置错误
"""

import logging
import math
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from ..config import (
    EXIT_CODES,
    MODULUS_CONFIG,
    MONTE_CARLO_CONFIG,
    OUTPUT_CONFIG,
    SPDE_CONFIG,
)
from ..core.chaining import chaining_report, holder_exponent_fit, moment_hypothesis_check
from ..core.exceptions import (
    BudgetExceededError,
    ConfigError,
    DegenerateFitError,
    DivisionByZeroError,
    DomainError,
    InsufficientReplicationsError,
    KolmogorovFieldsError,
    MassDeficitError,
    NonFiniteResultError,
    QuadratureFailureError,
)
from ..core.kernel import KernelSpec, calibrate_extent, kernel_eval
from ..core.levy import (
    LevyConfig,
    QuadratureSpec,
    isometry_check,
    kunita_check,
    linfty_moment_check,
    make_integrand,
    martingale_check,
    poisson_count_check,
    simulate_suprema,
    sine_field_integrand,
    window_count_correlation,
    zero_field_integrand,
)
from ..core.modulus import (
    ModulusFunction,
    check_admissibility,
    eval_modulus,
    modulus_from_dict,
    ratio_condition,
)
from ..core.spde import (
    ball_half_width,
    check_certificate,
    convolution_modulus_lemma,
    default_lemma_probe,
    default_times,
    holder_conclusion_check,
    make_forcing,
    modulus_estimate_check,
    simulate_ensemble,
    sup_bound_check,
)
from ..storage.artifact_store import ArtifactStore, RunManifest, config_sha256
from ..utils.seeding import derive_seed
from .field_generators import FieldGenerator

VERIFY_SETS = ("modulus", "sup", "kunita")

# 数值故障 → 诊断报告中的错误标签
NUMERICAL_FAILURES = {
    QuadratureFailureError: "quadrature_failure",
    BudgetExceededError: "budget_exceeded",
    NonFiniteResultError: "non_finite_result",
    DivisionByZeroError: "division_by_zero",
}


class ExperimentRunner:
    """
    运行器基类
    负责种子、线程数、输出目录、计时和运行清单，子类实现 initialize_components 与 execute
    """

    command = ""
    report_name = "report.json"

    def __init__(self, experiment: Optional[Dict[str, Any]] = None, seed: Optional[int] = None,
                 output_dir: Optional[str] = None, n_threads: Optional[int] = None,
                 config_override: Optional[Dict] = None):
        """
        初始化运行器

        Args:
            experiment: 已通过模式校验的实验配置
            seed: 主种子，优先于配置中的 seed
            output_dir: 输出目录，优先于配置中的 output_dir
            n_threads: 并行线程数（不影响输出）
            config_override: 配置覆盖参数，按 monte_carlo / output 分节
        """
        self.logger = logging.getLogger(self.__class__.__name__)
        self.experiment = dict(experiment or {})

        # 合并配置
        self.monte_carlo_config = {**MONTE_CARLO_CONFIG}
        self.output_config = {**OUTPUT_CONFIG}
        if config_override:
            self.monte_carlo_config.update(config_override.get('monte_carlo', {}))
            self.output_config.update(config_override.get('output', {}))

        self.seed = int(seed if seed is not None else self.experiment.get("seed", self.monte_carlo_config["master_seed"]))
        self.n_threads = n_threads if n_threads is not None else self.monte_carlo_config["n_threads"]
        self.output_dir = Path(output_dir or self.experiment.get("output_dir")
                               or self.output_config["output_directory"])
        self.store: Optional[ArtifactStore] = None

        self.logger.info(f"🚀 初始化运行器: {self.command}")
        self.logger.info(f"🎲 主种子: {self.seed}")
        self.logger.info(f"📁 输出目录: {self.output_dir}")

    def _usage_error(self, error: Exception) -> ConfigError:
        """参数构造阶段的 ValueError 视为配置错误"""
        self.logger.error(f"❌ 配置参数不合法: {error}")
        if isinstance(error, ConfigError):
            return error
        return ConfigError(str(error), {"command": self.command})

    def _numerical_failure(self, error: KolmogorovFieldsError) -> str:
        """写出诊断报告，判定 inconclusive"""
        tag = next(name for kind, name in NUMERICAL_FAILURES.items() if isinstance(error, kind))
        self.logger.warning(f"⚠️ 数值故障 {tag}: {error}")
        self.store.write_json(self.report_name, {
            "error": tag,
            "message": str(error),
            "diagnostics": error.diagnostics,
            "seed": self.seed,
        })
        return "inconclusive"

    def _modulus(self, key: str = "modulus") -> ModulusFunction:
        data = self.experiment.get(key)
        return ModulusFunction.power(1.0) if data is None else modulus_from_dict(data)

    def initialize_components(self):
        raise NotImplementedError

    def execute(self) -> str:
        """执行检查并写出产物，返回判定 pass / fail / inconclusive"""
        raise NotImplementedError

    def run(self) -> Dict[str, Any]:
        """
        运行完整流程

        Returns:
            统计信息，含 verdict 与 exit_code

        Raises:
            ConfigError: 配置参数不合法（含执行阶段的定义域错误）
        """
        start_time = time.time()
        failure: Optional[KolmogorovFieldsError] = None
        try:
            self.initialize_components()
        except tuple(NUMERICAL_FAILURES) as e:
            failure = e
        except (ConfigError, ValueError, KeyError) as e:
            raise self._usage_error(e) from e

        try:
            self.store = ArtifactStore(self.output_dir)
            if failure is not None:
                verdict = self._numerical_failure(failure)
            else:
                try:
                    verdict = self.execute()
                except tuple(NUMERICAL_FAILURES) as e:
                    verdict = self._numerical_failure(e)
                except DomainError as e:
                    raise self._usage_error(e) from e
            exit_code = EXIT_CODES[verdict]

            elapsed = time.time() - start_time
            manifest = RunManifest(command=self.command, config_hash=config_sha256(self.experiment),
                                   seed=self.seed, wall_clock_seconds=elapsed, exit_code=exit_code)
            self.store.write_manifest(manifest)

            stats = {
                "command": self.command,
                "verdict": verdict,
                "exit_code": exit_code,
                "seed": self.seed,
                "output_dir": str(self.output_dir),
                "outputs": sorted(self.store.checksums),
                "total_time": elapsed,
            }
            icon = "✅" if verdict == "pass" else ("⚠️" if verdict == "inconclusive" else "❌")
            self.logger.info(f"{icon} {self.command} 判定: {verdict}（退出码 {exit_code}），耗时 {elapsed:.2f} 秒")
            return stats
        except ConfigError:
            raise
        except Exception as e:
            self.logger.error(f"❌ {self.command} 运行失败: {e}")
            raise


class ModulusCheckRunner(ExperimentRunner):
    """连续模数可容许性检查"""

    command = "modulus_check"
    report_name = "admissibility_report.json"

    def __init__(self, experiment: Optional[Dict[str, Any]] = None, **kwargs):
        super().__init__(experiment, **kwargs)
        self.modulus_config = {**MODULUS_CONFIG}
        self.phi: Optional[ModulusFunction] = None

    def initialize_components(self):
        self.logger.info("🔧 构造连续模数...")
        self.phi = modulus_from_dict(self.experiment["modulus"])
        gamma = float(self.experiment["gamma"])
        theta = self.experiment.get("theta")
        if theta is not None and not 0 < theta < 1.0 / gamma:
            raise ConfigError(f"theta 必须位于 (0, 1/gamma): theta={theta}, gamma={gamma}",
                              {"theta": theta, "gamma": gamma})
        self.logger.info(f"✅ 模数: {self.phi.name}, gamma={gamma}")

    def execute(self) -> str:
        exp = self.experiment
        report = check_admissibility(
            self.phi, float(exp["gamma"]), theta=exp.get("theta"), i_max=exp.get("i_max"),
            tail_method=exp.get("tail_method"), n_min=exp.get("ratio_n_min"), n_max=exp.get("ratio_n_max"),
            lambda_bound=exp.get("lambda_bound"), n_probe=exp.get("n_probe"),
        )
        self.store.write_json(self.report_name, report.to_dict())

        n_probe = exp.get("n_probe", self.modulus_config["n_probe"])
        r = np.logspace(math.log10(self.modulus_config["r_min"]), math.log10(self.modulus_config["r_max"]), n_probe)
        self.store.write_csv("modulus_profile.csv", pd.DataFrame({"r": r, "phi": np.asarray(eval_modulus(self.phi, r))}))

        ratio = ratio_condition(self.phi, n_min=exp.get("ratio_n_min"), n_max=exp.get("ratio_n_max"),
                                bound=exp.get("lambda_bound"))
        self.store.write_csv("ratio_profile.csv", pd.DataFrame({
            "n": np.arange(ratio.n_min, ratio.n_min + len(ratio.ratios)),
            "ratio": ratio.ratios,
        }))

        self.logger.info(f"📊 Σφ^ϑ 判定 {report.sum_converges.value}，λ̂={report.lambda_estimate:.6g}，"
                         f"ϑ={report.theta:.6g}")
        return report.verdict


class ChainEstimateRunner(ExperimentRunner):
    """随机场上的链式估计实验"""

    command = "chain_estimate"
    report_name = "chain_report.json"

    def __init__(self, experiment: Optional[Dict[str, Any]] = None, **kwargs):
        super().__init__(experiment, **kwargs)
        self.generator: Optional[FieldGenerator] = None
        self.phi: Optional[ModulusFunction] = None
        self.gamma = 0.0
        self.alpha = 0.0

    def initialize_components(self):
        exp = self.experiment
        field_cfg = exp["field"]
        self.logger.info("🔧 初始化场生成器...")
        d = int(field_cfg.get("d", 1))
        if field_cfg["generator"] == "brownian" and d != 1:
            raise ConfigError(f"布朗场只支持 d=1: {d}", {"d": d})
        self.generator = FieldGenerator(d, int(field_cfg["m_max"]), n_time=int(field_cfg.get("n_time", 1)),
                                        norm=field_cfg.get("norm", "l2"), n_threads=self.n_threads)
        self.phi = self._modulus()
        self.gamma = float(exp["gamma"])
        theta = float(exp.get("theta", 0.5 / self.gamma))
        if not 0 < theta < 1.0 / self.gamma:
            raise ConfigError(f"theta 必须位于 (0, 1/gamma): theta={theta}", {"theta": theta, "gamma": self.gamma})
        self.alpha = float(exp.get("alpha", 1.0 / self.gamma - theta))
        self.logger.info(f"✅ 网格 D_{self.generator.m_max}（d={d}），alpha={self.alpha:.6g}，gamma={self.gamma:g}")

    def _fits(self, sample) -> Dict[str, Any]:
        """矩假设检验与 Hölder 指数拟合，复制数不足时跳过"""
        exp = self.experiment
        if sample.n_rep < 2 or not exp.get("fit_exponent", True):
            return {"moment_hypothesis": None, "holder_fit": None}
        hypothesis = moment_hypothesis_check(sample, self.gamma, self.phi, pair_budget=exp.get("pair_budget"),
                                             slope_tol=exp.get("slope_tol"))
        try:
            fit = holder_exponent_fit(sample, self.gamma, pair_budget=exp.get("pair_budget")).to_dict()
        except DegenerateFitError as e:
            self.logger.warning(f"⚠️ Hölder 指数拟合退化: {e}")
            fit = {"note": str(e)}
        return {"moment_hypothesis": hypothesis.to_dict(), "holder_fit": fit}

    def execute(self) -> str:
        exp = self.experiment
        field_cfg = exp["field"]
        sample = self.generator.generate(field_cfg["generator"], int(exp["replications"]), self.seed,
                                         field_cfg.get("params"))
        report = chaining_report(sample, self.phi, self.alpha, gamma=self.gamma)
        fits = self._fits(sample)

        self.store.write_json(self.report_name, {
            **report.to_dict(),
            **fits,
            "generator": field_cfg["generator"],
            "gamma": self.gamma,
            "seed": self.seed,
        })
        self.store.write_csv("level_increments.csv", report.increments_frame())
        self.store.write_csv("seminorm_bounds.csv", report.bounds_frame())
        if exp.get("save_sample", False):
            self.store.write_field_sample("field_sample.bin", sample)

        self.logger.info(f"📊 路径链式不等式: {report.pathwise.n_violations}/{report.pathwise.n_checked} 违反，"
                         f"半范数 ≤ 上界: {report.bound_holds}")
        if not (report.bound_holds and report.pathwise.holds):
            return "fail"
        hypothesis = fits["moment_hypothesis"]
        if hypothesis is not None and not hypothesis["consistent"]:
            return "inconclusive"
        if fits["holder_fit"] is not None:
            self.logger.info(f"📊 ε̂ = {fits['holder_fit'].get('epsilon_hat')}")
        return "pass"


class LevyVerifyRunner(ExperimentRunner):
    """泊松随机测度与补偿积分的矩检查"""

    command = "levy_verify"
    report_name = "levy_report.json"

    def __init__(self, experiment: Optional[Dict[str, Any]] = None, **kwargs):
        super().__init__(experiment, **kwargs)
        self.levy: Optional[LevyConfig] = None
        self.psi = None
        self.quad = QuadratureSpec()
        self.n_rep = 0

    def initialize_components(self):
        exp = self.experiment
        self.logger.info("🔧 构造 Lévy 配置与被积函数...")
        self.levy = LevyConfig.from_dict(exp.get("levy"))
        integrand = exp.get("integrand", {"name": "constant", "params": {"value": 1.0}})
        self.psi = make_integrand(integrand["name"], integrand.get("params"))
        self.n_rep = int(exp.get("replications", self.monte_carlo_config["n_replications"]))
        self.logger.info(f"✅ ν(E)={self.levy.total_mass:g}, T={self.levy.T:g}, ψ={self.psi.name}, "
                         f"{self.n_rep} 个复制")

    def _linfty(self) -> Optional[Dict[str, Any]]:
        settings = self.experiment.get("linfty")
        if not settings:
            return None
        f = (zero_field_integrand() if settings["field"] == "zero"
             else sine_field_integrand(int(settings.get("mark_power", 0))))
        extent = float(settings.get("x_extent", 2.0 * math.pi))
        x_grid = np.linspace(-extent / 2.0, extent / 2.0, int(settings.get("x_points", 64)))
        reports = [linfty_moment_check(f, self.levy, p, self.n_rep, derive_seed(self.seed, 2), x_grid, self.quad,
                                       self.experiment.get("batch_sizes"), self.n_threads).to_dict()
                   for p in self.experiment.get("p_values", [1.0, 2.0, 3.0])]
        return {"field": f.name, "reports": reports}

    def execute(self) -> str:
        exp = self.experiment
        batch_sizes = exp.get("batch_sizes")
        samples = simulate_suprema(self.psi, self.levy, self.n_rep, self.seed, self.quad, self.n_threads)

        kunita = [kunita_check(self.psi, self.levy, float(p), self.n_rep, self.seed, quad=self.quad,
                               batch_sizes=batch_sizes, samples=samples)
                  for p in exp.get("p_values", [1.0, 2.0, 3.0])]
        identities = poisson_count_check(samples, self.levy)
        identities.append(isometry_check(self.psi, self.levy, samples, self.quad))
        identities.append(martingale_check(samples))
        identities.append(window_count_correlation(self.levy, self.n_rep, derive_seed(self.seed, 1),
                                                   n_threads=self.n_threads))
        linfty = self._linfty()

        self.store.write_json(self.report_name, {
            "levy": self.levy.to_dict(),
            "integrand": self.psi.name,
            "kunita": [r.to_dict() for r in kunita],
            "identities": [r.to_dict() for r in identities],
            "linfty": linfty,
            "seed": self.seed,
        })
        self.store.write_csv("suprema.csv", pd.DataFrame({
            "replication": np.arange(samples.n_rep),
            "count": samples.counts,
            "sup_abs": samples.sup_abs,
            "terminal": samples.terminal,
        }))

        for report in kunita:
            self.logger.info(f"📊 {report.name}: 比值 {report.ratio:.6g}，漂移 {report.drift:.3g}")
        if not all(r.within for r in identities):
            failed = [r.name for r in identities if not r.within]
            self.logger.warning(f"⚠️ 矩恒等式未通过: {failed}")
            return "fail"
        consistent = [r.consistent for r in kunita]
        if linfty is not None:
            consistent.extend(r["consistent"] for r in linfty["reports"])
        return "pass" if all(consistent) else "inconclusive"


class SpdeRunRunner(ExperimentRunner):
    """Lévy 噪声驱动的分数阶热方程温和解模拟与检查"""

    command = "spde_run"
    report_name = "spde_report.json"

    def __init__(self, experiment: Optional[Dict[str, Any]] = None, verify: Optional[List[str]] = None,
                 **kwargs):
        """
        Args:
            experiment: 实验配置
            verify: 检查集合，优先于配置中的 verify，缺省为全部
        """
        super().__init__(experiment, **kwargs)
        self.spde_config = {**SPDE_CONFIG}
        self.verify = list(verify or self.experiment.get("verify") or VERIFY_SETS)
        self.quad = QuadratureSpec()
        self.kernel: Optional[KernelSpec] = None
        self.levy: Optional[LevyConfig] = None
        self.forcing = None
        self.phi: Optional[ModulusFunction] = None
        self.times: Optional[np.ndarray] = None

    def initialize_components(self):
        exp = self.experiment
        unknown = sorted(set(self.verify) - set(VERIFY_SETS))
        if unknown:
            raise ConfigError(f"未知的检查集合: {unknown}，可选 {list(VERIFY_SETS)}", {"verify": unknown})
        for key in ("p", "theta", "beta", "c1", "levels", "n_times"):
            if key in exp:
                self.spde_config[key] = exp[key]
        p, theta, beta = float(self.spde_config["p"]), float(self.spde_config["theta"]), float(self.spde_config["beta"])
        if "modulus" in self.verify and not 0 < beta <= 1.0 / p - theta:
            raise ConfigError(f"beta 必须位于 (0, 1/p−θ] = (0, {1.0 / p - theta}]: {beta}",
                              {"p": p, "theta": theta, "beta": beta})

        self.logger.info("🔧 构造 Lévy 配置与热核...")
        self.levy = LevyConfig.from_dict(exp.get("levy"))
        kernel_cfg = dict(exp.get("kernel", {}))
        if kernel_cfg.pop("calibrate", False):
            kernel_cfg["L"] = calibrate_extent(float(kernel_cfg.get("alpha", KernelSpec().alpha)), self.levy.T)
            self.logger.info(f"📐 校准后的网格边长 L={kernel_cfg['L']:.6g}")
        self.kernel = KernelSpec.from_dict(kernel_cfg)

        c1 = float(self.spde_config["c1"])
        try:
            half_width = ball_half_width(self.kernel, c1)
        except ValueError as e:
            raise ConfigError(str(e), {"c1": c1, "dx": self.kernel.dx}) from e
        levels = list(self.spde_config["levels"])
        if "modulus" in self.verify and 2 ** max(levels) > 2 * half_width:
            raise ConfigError(f"层级 {levels} 超出探测球分辨率 2K={2 * half_width}（c1={c1}, n={self.kernel.n}）",
                              {"levels": levels, "ball_half_width": half_width})

        self.phi = self._modulus()
        forcing_cfg = exp.get("forcing", {"name": "sine"})
        self.forcing = make_forcing(forcing_cfg["name"], forcing_cfg.get("params"), p, self.phi, self.kernel)

        times = exp.get("times")
        self.times = default_times(self.levy.T, self.spde_config["n_times"]) if times is None else np.asarray(times)
        if np.any(np.diff(self.times) < 0) or self.times.max() > self.levy.T:
            raise ConfigError("times 必须非降且不超过 T", {"T": self.levy.T})
        self.logger.info(f"✅ alpha={self.kernel.alpha:g}, L={self.kernel.L:.6g}, n={self.kernel.n}, "
                         f"外力 {self.forcing.name}, 检查 {self.verify}")

    def _mass_deficit(self, error: MassDeficitError) -> str:
        self.logger.error(f"❌ 热核质量不足: {error}")
        self.store.write_json(self.report_name, {
            "error": "mass_deficit",
            "message": str(error),
            "diagnostics": error.diagnostics,
            "kernel": self.kernel.to_dict(),
            "seed": self.seed,
        })
        return "fail"

    def _verify(self, field_) -> Dict[str, Any]:
        """按检查集合生成报告，复制数不足的报告标记为 None 并附说明"""
        p = float(self.spde_config["p"])
        reports: Dict[str, Any] = {}
        notes: List[str] = []
        if "modulus" in self.verify:
            try:
                reports["modulus_estimate"] = modulus_estimate_check(
                    field_, p, self.phi, min_replications=self.spde_config["min_replications"]).to_dict()
                reports["holder_conclusion"] = holder_conclusion_check(
                    field_, p, self.phi, float(self.spde_config["theta"]), float(self.spde_config["beta"]),
                    levels=self.spde_config["levels"], min_replications=self.spde_config["min_replications"],
                ).to_dict()
            except InsufficientReplicationsError as e:
                notes.append(f"modulus: {e}")
        if "sup" in self.verify:
            try:
                reports["sup_bound"] = sup_bound_check(
                    field_, self.forcing, self.quad, min_replications=self.spde_config["min_replications"]).to_dict()
            except InsufficientReplicationsError as e:
                notes.append(f"sup: {e}")
        if "kunita" in self.verify:
            if field_.n_rep < 2:
                notes.append("kunita: 至少需要 2 个复制")
            else:
                reports["kunita"] = kunita_check(self.forcing.certificate.h, self.levy, p, field_.n_rep,
                                                 derive_seed(self.seed, 3), quad=self.quad,
                                                 n_threads=self.n_threads).to_dict()
        reports["notes"] = notes
        return reports

    def execute(self) -> str:
        try:
            evaluation = kernel_eval(self.kernel, self.levy.T)
        except MassDeficitError as e:
            return self._mass_deficit(e)

        probe = default_lemma_probe(self.kernel, self.levy, self.spde_config["c1"])
        certificate = check_certificate(self.forcing, self.kernel, probe)
        lemma = convolution_modulus_lemma(self.forcing, self.kernel, probe)

        n_rep = int(self.experiment.get("replications", self.spde_config["n_replications"]))
        field_ = simulate_ensemble(
            self.forcing, self.kernel, self.levy, n_rep, self.seed, times=self.times, c1=self.spde_config["c1"],
            quad=self.quad, n_threads=self.n_threads,
            snapshot_replications=int(self.experiment.get("snapshot_replications",
                                                          self.spde_config["snapshot_replications"])),
        )
        reports = self._verify(field_)

        self.store.write_json(self.report_name, {
            "kernel": self.kernel.to_dict(),
            "levy": self.levy.to_dict(),
            "forcing": {"name": self.forcing.name, "params": self.forcing.params},
            "kernel_mass": evaluation.mass,
            "boundary_mass": evaluation.boundary_mass,
            "compensator_error": field_.compensator_error,
            "certificate": certificate.to_dict(),
            "convolution_lemma": lemma.to_dict(),
            "n_rep": field_.n_rep,
            "ball_half_width": field_.ball_half_width,
            "seed": self.seed,
            **reports,
        })
        self.store.write_csv("kernel_profile.csv", evaluation.to_frame())
        if field_.snapshots is not None:
            self.store.write_csv("u_snapshots.csv", field_.snapshot_frame())

        if not (certificate.passed and lemma.passed):
            return "fail"
        if reports["notes"]:
            return "inconclusive"
        flags = []
        if "modulus_estimate" in reports:
            flags.append(reports["modulus_estimate"]["consistent"])
            flags.append(reports["holder_conclusion"]["no_blowup"])
        for key in ("sup_bound", "kunita"):
            if key in reports:
                flags.append(reports[key]["consistent"])
        return "pass" if all(flags) else "inconclusive"


RUNNERS = {
    ("modulus", "check"): ModulusCheckRunner,
    ("chain", "estimate"): ChainEstimateRunner,
    ("levy", "verify"): LevyVerifyRunner,
    ("spde", "run"): SpdeRunRunner,
}
