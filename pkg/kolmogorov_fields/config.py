"""
配置文件
定义工具包各模块的默认参数
模块划分：连续模数 + 链式估计 + Lévy噪声 + 热核 + SPDE + 命令行输出
"""

import math

TOOL_VERSION = "1.0.0"
SCHEMA_VERSION = 1

# ==================== 连续模数（modulus）配置 ====================

MODULUS_CONFIG = {
    "n_probe": 512,  # 公理检查的对数等距探测点数
    "r_min": 1e-12,  # 探测区间下界
    "r_max": 1.0,  # 探测区间上界
    "tol_mono": 1e-12,  # 单调性容差
    "tol_limit": 1e-3,  # 零点极限容差
    "limit_probe_radius": 1e-300,  # 零点极限的最深探测半径
    "i_max": 10_000,  # 二进级数截断项数
    "tail_tol": 1e-10,  # 尾项可忽略阈值
    "tail_method": "integral_bound",  # ratio_test / integral_bound / none
    "power_margin": 1e-3,  # 积分包络判敛时对幂指数 p>1 的余量
    "ratio_q_max": 1.0 - 1e-9,  # 比值判别法允许的最大比值
    "ratio_n_min": 1,  # 比值条件探测起点
    "ratio_n_max": 64,  # 比值条件探测终点
}

# ==================== 链式估计（chaining）配置 ====================

CHAINING_CONFIG = {
    "max_grid_points": 2 ** 22,  # 网格点数预算
    "max_check_pairs": 250_000,  # 路径链式不等式检查的点对预算
    "replication_chunk": 8,  # 按复制分块计算，控制内存
    "default_norm": "l2",  # sup / l2 / l1
    "pair_budget": 256,  # 矩假设检查的点对预算
    "slope_tol": 0.1,  # 斜率容差
}

# ==================== 蒙特卡罗（Monte Carlo）配置 ====================

MONTE_CARLO_CONFIG = {
    "master_seed": 20240611,  # 主种子
    "n_replications": 10_000,  # 矩检查默认复制数
    "n_threads": 1,  # 并行线程数
    "chunk_size": 256,  # 每个并行任务的复制数
    "stability_tol": 0.25,  # 批次比值漂移容差
    "n_std_errors": 4.0,  # 统计检验的标准误倍数
    "min_batch_size": 10,  # 最小批次
    "show_progress": False,  # 是否显示 tqdm 进度条
}

# ==================== Lévy 噪声（levy）配置 ====================

LEVY_CONFIG = {
    "c": 1.0,  # 跳跃空间球半径
    "d_jump": 1,  # 跳跃空间维数
    "total_mass": 2.0,  # ν(E)
    "T": 1.0,  # 时间区间
    "mark_law": "uniform_positive",  # uniform_positive / uniform_ball / point / truncated_power
    "time_nodes": 64,  # 补偿子时间方向 Gauss-Legendre 节点数
    "mark_nodes": 64,  # 标记方向节点数
    "angular_nodes": 32,  # 球面方向节点数（d_jump ≥ 2）
    "quad_abs_tol": 1e-8,  # 补偿子求积绝对容差
    "quad_rel_tol": 1e-8,  # 补偿子求积相对容差
}

# ==================== 热核（kernel）配置 ====================

KERNEL_CONFIG = {
    "alpha": 2.0,
    "d": 1,
    "L": 10.0 * math.pi,  # 周期网格边长（2π 的整数倍，保证 sin 周期）
    "n": 1024,  # 每个方向的网格点数（2 的幂）
    "method": "spectral",  # closed_form / spectral
    "mass_tol": 1e-4,  # 质量容差
    "neg_tol": 1e-8,  # 谱反演负值容差
    "max_grid_points": 2 ** 24,  # 网格点数预算
    "pv_delta": 0.1,  # 主值积分内外分割半径
    "pv_cutoff": 50.0,  # 外层积分截断半径
    "pv_nodes": 64,  # 每段 Gauss-Legendre 节点数
    "pv_panels": 24,  # 外层对数分段数
    "pv_tol": 1e-7,  # 主值积分误差容差
}

# ==================== SPDE 配置 ====================

SPDE_CONFIG = {
    "c1": 1.0,  # 探测球半径
    "n_times": 64,  # 时间网格点数
    "p": 2.0,  # 矩阶数
    "theta": 0.25,
    "beta": 0.25,
    "levels": [4, 5, 6],  # Hölder 结论检查的网格层级
    "growth_tol": 0.10,  # 相邻层级允许的增长率
    "slope_tol": 0.15,  # 斜率容差
    "cert_tol": 1e-9,  # 证书检查容差
    "time_panels": 8,  # 补偿子时间复合求积段数
    "n_replications": 1000,
    "min_replications": 100,
    "snapshot_replications": 1,  # 输出快照的复制数
}

# ==================== 输出配置 ====================

OUTPUT_CONFIG = {
    "output_directory": "./results",  # 结果目录
    "float_format": "%.17g",  # CSV 浮点格式（可逆）
    "json_indent": 2,
    "manifest_name": "manifest.json",
}

# 日志配置
LOGGING_CONFIG = {
    "level": "INFO",  # 日志级别：DEBUG, INFO, WARNING, ERROR
    "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    "enable_file_logging": False,  # 是否启用文件日志
    "log_file": "./logs/kolmogorov_fields.log",  # 日志文件路径
    "max_file_size": 10 * 1024 * 1024,  # 最大文件大小（字节）
    "backup_count": 5,  # 备份文件数量
}

# 退出码约定
EXIT_CODES = {
    "pass": 0,
    "usage": 1,
    "fail": 2,
    "inconclusive": 3,
}
