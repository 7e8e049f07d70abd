"""
Threshold decoding of sparse codes
==================================

A sample ``y = A* x`` is decoded by correlating with the current estimate
``A`` and zeroing every entry below ``C/2``. When ``A`` is close to ``A*``
and the dictionary is incoherent, the signs of the decoded code match the
true signs.
"""

import numpy as np

from sparse_altmin import ModelParams, generate_dictionary, perturb_dictionary, sign_recovery_rate, stream

# a wide random dictionary keeps the coherence low
params = ModelParams(n=512, m=128, k=3)
Astar = generate_dictionary(params.n, params.m, seed=1)

# move every column a fixed distance away from the truth and see how sign
# recovery degrades
for delta in (0.0, 0.2, 0.5, 0.8, 1.1):
    A = perturb_dictionary(Astar, delta, stream(1, "perturb"))
    rate = sign_recovery_rate(A, Astar, params, trials=5000, seed=0)
    print(f"delta={delta:4.2f}  sign recovery {rate:.4f}")

# with a square dictionary and more active atoms the cross-talk between
# atoms outgrows the C/2 margin, even at A = A*
dense = ModelParams(n=256, m=256, k=10)
Astar = generate_dictionary(dense.n, dense.m, seed=1)
print("n=m=256, k=10 at A=A*:", sign_recovery_rate(Astar, Astar, dense, trials=2000, seed=0))
