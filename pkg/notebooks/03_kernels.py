"""
Orthogonal polynomials, D, M and the corner matrix T_n
======================================================

The banded matrix D, the eps-matrix M and the small corner block T_n for a
quartic weight, and the identity linking det T_n to partition functions.
"""

import numpy as np

from betalab.orthopoly import build_workspace, stojanovic_identity, structural_report, t_matrix_logdet
from betalab.potential import Polynomial

V = Polynomial([0, 0, 0, 0, 0.25])
for n in (8, 16, 32):
    ws = build_workspace(V, n)
    T, logdet = t_matrix_logdet(ws)
    print(f"n={n}: T_n =\n{np.array2string(T, precision=5)}\n  log|det T_n| = {logdet:.6f}")

rep = structural_report(build_workspace(V, 16))
for k, v in rep.items():
    print(f"  {k:>22}: {v}")

st = stojanovic_identity(V, 4)
print(f"det T_4 = {st.det_T:.10f}, from partition functions {st.predicted:.10f}")
