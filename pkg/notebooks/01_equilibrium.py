"""
Equilibrium measures of polynomial potentials
=============================================

Support, density and energy for a few potentials, and what happens when
a potential stops being one-cut.
"""

import numpy as np

from betalab.equilibrium import equilibrium_measure, validate
from betalab.potential import Polynomial

# the Gaussian potential gives the semicircle on [-2, 2]
gauss = equilibrium_measure(Polynomial([0, 0, 0.5]))
print("gaussian support", gauss.support, "energy", gauss.energy())

# a quartic potential: support (-b, b) with b^4 = 16/3, P quadratic
quartic = equilibrium_measure(Polynomial([0, 0, 0, 0, 0.25]))
print("quartic support", quartic.support, "b^4 =", quartic.support[1] ** 4)
print("P coefficients in the standard variable", quartic.P.tolist())

# density on a coarse grid in the original variable
lam = np.linspace(*quartic.support, 9)
for x, r in zip(lam, quartic.density_original(lam)):
    print(f"  rho({x:+.3f}) = {r:.5f}")

# the Stieltjes transform two ways: closed form and direct quadrature
z = np.array([3.0, 0.4 + 0.5j])
print("g closed form", quartic.stieltjes(z))
rep = validate(quartic)
print("identity residual on the contour", rep.identity_residual, "d_max", rep.d_max)

# a deep double well splits the support; P then vanishes inside [-2, 2]
dw = validate(equilibrium_measure(Polynomial([0, 0, -1, 0, 0.25])))
print("double well ok?", dw.ok, dw.violations)
