"""
Auditing the contraction inequality
===================================

Each descent step should satisfy
``e_{s+1}^2 <= (1 - 2 alpha eta) e_s^2 + 2 eta eps_s`` where ``eps_s`` is
the measured slack of the direction used. On an isotropic quadratic the
bound is tight and the error ratio is exactly ``1 - 2 alpha eta``.
"""

import numpy as np

from sparse_altmin import CorrelationParams, audit_convergence_bound, quadratic_descent

alpha = 0.3
cp = CorrelationParams(alpha, 1 / (4 * alpha))
zstar = np.linspace(-1, 1, 10)

report = audit_convergence_bound(
    quadratic_descent(lambda z: 2 * alpha * (z - zstar), zstar, np.zeros(10), cp.beta, 12, cp), cp, cp.beta
)
print("violations:", report.violations)
print("ratios:", np.round(report.ratios, 12), "expected", 1 - 2 * alpha * cp.beta)

# %%
# An anisotropic quadratic contracts faster along stiff directions, so the
# bound holds with room to spare.
H = np.diag(np.linspace(2 * alpha, 1.0, 10))
report = audit_convergence_bound(quadratic_descent(lambda z: H @ (z - zstar), zstar, np.zeros(10), 0.5, 30, cp), cp, 0.5)
print("anisotropic violations:", len(report.violations), " largest excess", report.max_excess)
