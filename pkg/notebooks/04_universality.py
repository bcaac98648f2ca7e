"""
Bulk universality of the matrix kernels
=======================================

Rescaled beta = 1, 2, 4 kernels near the centre of the spectrum approach
the sine-kernel limits; the sup deviation shrinks with n.
"""

from betalab.potential import Polynomial
from betalab.universality import bulk_deviation

V = Polynomial([0, 0, 0, 0, 0.25])
for beta in (2, 1, 4):
    tab = bulk_deviation(V, beta, ns=(10, 20, 40), size=7)
    devs = ", ".join(f"n={n}: {d:.4f}" for n, d in zip(tab.ns, tab.deviations))
    print(f"beta={beta}: {devs}; fitted exponent {tab.exponent:+.2f}")
