"""Clamped plate on a sheared parallelogram with a polynomial deflection.

The moment tensor, the deflection, div div M and div M all converge at
their full orders (2, 2, 2, 1); the table reproduces the smooth benchmark
at desk scale.
"""
from ddivfem import convergence_study

report = convergence_study("ex1", levels=4, start=1)
print(report.table())
print()
for key, entry in report.band_check().items():
    print(
        "eoc_%-4s = %.3f, band [%g, %g]: %s"
        % (key, entry["eoc"], entry["band"][0], entry["band"][1],
           "ok" if entry["pass"] else "out of band")
    )
