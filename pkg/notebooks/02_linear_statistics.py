"""
Linear statistics: contour prediction against Monte Carlo
=========================================================

The O(1) shift of E sum f(lam_i) away from n int f rho is computed by a
double contour integral and compared with Metropolis samples.
"""

from betalab.correction import first_order_correction, logq_expansion
from betalab.equilibrium import equilibrium_measure
from betalab.exact import exact_log_partition
from betalab.potential import Polynomial
from betalab.sampler import EnsembleConfig, linear_statistic, run_chains

V = Polynomial([0, 0, 0, 0, 0.25])
f = Polynomial([0, 0, 1.0])
eq = equilibrium_measure(V)
mean_f = eq.expect(lambda x: x * x)

for beta in (1.0, 4.0):
    pred = first_order_correction(eq, f, beta).predicted_shift
    n = 24
    batch = run_chains(EnsembleConfig(n, beta, V), chains=4, steps=20000, seed=1)
    est = linear_statistic(batch, f)
    print(f"beta={beta:g} n={n}: predicted {pred:+.4f}, "
          f"sampled {est.mean - n * mean_f:+.4f} +- {est.stderr:.4f}, acceptance {batch.acceptance_rate:.2f}")

# the log-partition expansion against exact quadrature for tiny n
for n in (2, 3):
    rep = logq_expansion(eq, n, 1.0)
    exact = exact_log_partition(V, n, 1.0)
    print(f"n={n}: expansion {rep.total:.6f}, exact {exact:.6f}, remainder {exact - rep.total:+.4f}")
