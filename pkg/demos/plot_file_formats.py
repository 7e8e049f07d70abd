"""
Saving dictionaries and traces
==============================

Matrices go to a small binary format (a 24-byte header then column-major
float64 values) or to CSV. Traces are CSV with every float written to 17
significant digits, so a rerun with the same seeds is byte-identical.
"""

import tempfile
from pathlib import Path

import numpy as np

from sparse_altmin import DescentConfig, ModelParams, generate_dictionary, perturb_dictionary, run_descent, stream
from sparse_altmin.fileio import format_trace_csv, read_matrix, write_matrix

tmp = Path(tempfile.mkdtemp())
A = generate_dictionary(32, 48, seed=2)
write_matrix(tmp / "A.scmx", A)
write_matrix(tmp / "A.csv", A)
print((tmp / "A.scmx").stat().st_size, "bytes;", np.array_equal(read_matrix(tmp / "A.scmx"), read_matrix(tmp / "A.csv")))

params = ModelParams(n=32, m=48, k=2)
A0 = perturb_dictionary(A, 0.1, stream(0, "perturb"))
cfg = DescentConfig("simple", 4.0, 5, p_per_iter=2000, mode="empirical", seed=9)
first = format_trace_csv(run_descent(A, A0, params, cfg)[1])
second = format_trace_csv(run_descent(A, A0, params, cfg)[1])
print(first.splitlines()[0])
print("identical reruns:", first == second)
