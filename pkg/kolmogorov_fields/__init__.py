# Kolmogorov Fields
# 广义 Kolmogorov 连续性定理的数值工具包：连续模数、链式估计、Lévy 噪声、分数阶热核与 SPDE 温和解
