"""Interpolation error decay and the commuting diagram.

Interpolates a fixed random polynomial moment field on a refined sheared
parallelogram.  The L2 error drops at second order, and on every level
div div of the interpolant equals the elementwise linear projection of
div div of the field, to rounding.
"""
import numpy as np

from ddivfem.interpolation import TensorField, interpolation_error_study

rng = np.random.default_rng(5)
field = TensorField.random_poly(rng, deg=3)

rows = interpolation_error_study(field, levels=range(5))

print("level       h        err_M    eoc   commuting residual")
for level, h, err, eoc, commres, ddnorm in rows:
    print(
        "%5d  %8.4f  %9.3e  %s  %9.3e  (norm %.2e)"
        % (level, h, err, "  -  " if eoc is None else "%.3f" % eoc, commres, ddnorm)
    )

final = rows[-1][3]
print("final order %.3f (expected 2)" % final)
