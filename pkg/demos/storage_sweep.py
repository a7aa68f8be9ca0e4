"""Watch the model approach Biot consolidation as storage vanishes.

The constrained specific storage coefficient c0 multiplies the pressure time
derivative; sending it to zero degenerates the equation into the classical
Biot consolidation system, where the fluid content is slaved to the volume
change: div u = eta / alpha. We sweep c0 over four decades, measure the
distance from that constraint, and check the end states form a Cauchy
sequence — the numerical signature of convergence to a limit solution.
A c0 = 1 run serves as the negative control.

Run with:  python3 demos/storage_sweep.py
"""

import dataclasses

from porefem import diagnostics, scenarios

base = scenarios.standard_scenario(load_amplitude=0.02)
report = scenarios.sweep_c0(base, [1e-1, 1e-2, 1e-3, 1e-4])

print("distance from the vanishing-storage constraint div u = eta / alpha:")
for row in report.rows:
    print(f"  c0 = {row.c0:7.0e}   residual {row.biot_constraint:.4e}   "
          f"complete = {row.complete}")

print("\nCauchy differences between consecutive end states (should shrink):")
for (a, b), du, de in zip(
    zip(report.rows, report.rows[1:]), report.cauchy_u_h1, report.cauchy_eta_l2
):
    print(f"  c0 {a.c0:g} vs {b.c0:g}:  |du|_H1 = {du:.4e}   |deta|_L2 = {de:.4e}")

control_stepper, control_result = scenarios.run_scenario(
    dataclasses.replace(base, c0=1.0), with_diagnostics=False
)
control = diagnostics.biot_limit_residual(control_stepper, control_result.states[-1])
ratio = control.constraint / report.rows[-1].biot_constraint
print(f"\nnegative control at c0 = 1: residual {control.constraint:.4e} "
      f"({ratio:.0f}x the c0 = 1e-4 value)")
