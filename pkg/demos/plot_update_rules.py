"""
Three update rules from the same start
======================================

The simple rule, the rule built from the simplified expected update and the
unbiased rule all run with step ``0.25 m/k``. The oracle versions replace
sample averages with exact expectations, so the only thing separating them
is the bias each rule carries.
"""

import numpy as np

from sparse_altmin import DescentConfig, ModelParams, fit_rate, generate_dictionary, perturb_dictionary, run_descent, stream
from sparse_altmin.descent import default_eta

params = ModelParams(n=64, m=64, k=3)
Astar = generate_dictionary(params.n, params.m, seed=1)
A0 = perturb_dictionary(Astar, 0.1, stream(1, "perturb"))
eta = default_eta(params)

for rule in ("simple", "of", "unbiased"):
    _, trace = run_descent(Astar, A0, params, DescentConfig(rule, eta, 60))
    err = trace.column("max_col_err")
    ratio, _, floor = fit_rate(err)
    print(f"{rule:9s} start {err[0]:.3f}  final {err[-1]:.2e}  ratio {ratio:.3f}  floor at {floor}")

# %%
# The empirical simple rule draws a fresh batch every step. It tracks the
# oracle until sampling noise takes over.
cfg = DescentConfig("simple", eta, 25, p_per_iter=20_000, mode="empirical", seed=3)
_, trace = run_descent(Astar, A0, params, cfg)
print("empirical simple:", np.round(trace.column("max_col_err")[::5], 4))
