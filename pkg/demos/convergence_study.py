"""Measure convergence orders against manufactured solutions.

Two steady exact solutions drive this study. The "linear" case lies inside
the finite-element spaces, so the solver must reproduce it to rounding —
a sharp correctness check with no discretization error to hide behind. The
"trig" case is genuinely curved; its errors should shrink at second order
for displacement in H1 (quadratic elements, one power lost to the
derivative, one recovered by the pressure coupling) and for pressure in L2
(linear elements). A separate self-convergence run measures the first-order
accuracy of backward Euler in time.

Run with:  python3 demos/convergence_study.py   (takes a minute or two)
"""

from porefem import scenarios

print("in-space case: exact reproduction")
linear = scenarios.mms_convergence("linear", refinements=3, n0=2)
for row in linear.rows:
    print(f"  n = {row.n:2d}  u_H1 error {row.err_u_h1:.2e}  "
          f"p_L2 error {row.err_p_l2:.2e}")
print(f"  finite-difference load guard: {linear.residual_guard:.2e}\n")

print("curved case: observed orders")
trig = scenarios.mms_convergence("trig", refinements=3, n0=4)
for row in trig.rows:
    print(f"  n = {row.n:2d}  h = {row.h:.4f}  u_H1 {row.err_u_h1:.3e}  "
          f"p_L2 {row.err_p_l2:.3e}")
print(f"  orders: u_H1 {trig.order_u_h1:.2f}, p_L2 {trig.order_p_l2:.2f} "
      "(expect about 2)\n")

print("temporal self-convergence at fixed mesh")
temporal = scenarios.temporal_convergence()
for dt, err in zip(temporal["dts"], temporal["errs_u_h1"]):
    print(f"  dt = {dt:.3f}  u_H1 difference to reference {err:.3e}")
print(f"  order: {temporal['order_u']:.2f} (expect about 1 for backward Euler)")
