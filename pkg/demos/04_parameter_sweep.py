"""Delay-gain sweep: how the fitted decay rate responds to mu2.

Sweeps the delayed-feedback gain across (and slightly beyond) the stability
condition alpha2 mu2 <= alpha1 mu1, re-fitting the decay rate at each point.
The gain condition holds up to mu2 = mu1; past it the admissible
feedback-weight window closes and the certification machinery flags the
configuration, even where the trajectory still happens to decay.
"""

import dataclasses

import numpy as np

import viscobeam as vb

base = vb.default_run_config(t_end=4.0)
print(f"{'mu2':>6s} {'window':>18s} {'theta1':>8s} {'k fit':>9s} {'R^2':>8s}")
for mu2 in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
    spec = dataclasses.replace(base.spec, mu2=mu2)
    cfg = dataclasses.replace(base, spec=spec)
    win = vb.xi_window(spec)
    if win.empty:
        print(f"{mu2:6.2f} {'empty':>18s}        -         -        -")
        continue
    cfg.xi = win.midpoint
    theta1, _ = vb.theta_constants(spec, win.midpoint)
    traj = vb.run(cfg)
    fit = vb.fit_decay(traj.t, traj.energy_total, t0=1.0)
    print(f"{mu2:6.2f} ({win.lo:7.3f},{win.hi:7.3f}) {theta1:8.3f} "
          f"{fit.k:9.4f} {fit.r_squared:8.4f}")

print("\nthe instantaneous damping dominates the delayed gain throughout,")
print("so the rate degrades smoothly instead of destabilizing; push mu2")
print("past mu1 (with --force on the command line) to watch the window")
print("close and the certificates disappear.")
