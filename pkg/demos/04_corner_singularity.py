"""Clamped-free plate on the L-shaped domain with the corner singularity.

The exact deflection is the leading r^(1+alpha) mode of the reentrant
corner; the load vanishes, so the discrete moment field is exactly
equilibrated and the moment error converges with the fractional exponent
alpha = 0.5445 rather than a full power.
"""
from ddivfem import convergence_study
from ddivfem.problems import corner_exponent

alpha, C = corner_exponent()
print("corner exponent alpha = %.12f, angular coefficient C = %.12f" % (alpha, C))
print()

report = convergence_study("ex2", levels=3, start=1)
print(report.table())
print()
print("expected orders: u at 2 alpha = %.3f, M at alpha = %.3f" % (2 * alpha, alpha))
for row in report.rows:
    print(
        "level %d: |div div M_h| = %.2e  (zero load, so equilibration is exact)"
        % (row["level"], row["ddiv_Mh"])
    )
