"""Harvested logistic growth: when does pulsed harvesting stay sustainable?

A population x' = x(1 - x) is harvested in pulses. Every tau time units a
kick removes tau * |lambda|, so lambda is the average harvest rate. With
continuous harvesting the population survives whenever lambda > -1/4. Pulsed
harvesting is less forgiving, and this script measures how much.

Run:  python3 demos/logistic_harvest.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

from flowkick import (DisturbanceParams, continue_branch, continue_sn_curve, iterate_orbit,
                      newton_fixed_point)
from flowkick.models import make_logistic
from flowkick.svg import Figure, limits

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)
model = make_logistic()
logistic = model.system

# Two flow-kick fixed points at tau = 0.4: a stable population and the
# threshold below which the harvest drives it to zero.
p = DisturbanceParams(0.4, -0.24)
high = newton_fixed_point(logistic, p, 0.7)
low = newton_fixed_point(logistic, p, 0.3)
print(f"tau = {p.tau}, lambda = {p.lam}")
print(f"  stable population   x = {high.x[0]:.6f}  multiplier {high.eigenvalues[0].real:.4f}")
print(f"  extinction threshold x = {low.x[0]:.6f}  multiplier {low.eigenvalues[0].real:.4f}")

# Orbits started on either side of the threshold.
for x0 in (0.2, 0.5, 0.8):
    orbit = iterate_orbit(logistic, x0, p, 200)
    fate = "collapses" if orbit.exited else f"settles at {orbit.post[-1][0]:.4f}"
    print(f"  start {x0}: {fate}")

# Hold the harvest rate and stretch the time between pulses. The stable state
# and the threshold merge in a fold.
seed = newton_fixed_point(logistic, DisturbanceParams(0.0, -0.24), 0.6)
branch = continue_branch(logistic, seed, "tau", (0.0, 3.0))
fold = [e for e in branch.events if e.btype == "SN"][0]
print(f"at lambda = -0.24 the pulses can be at most tau = {fold.tau:.5f} apart")

# The fold traced through the disturbance plane, checked against the closed form.
seed = newton_fixed_point(logistic, DisturbanceParams(0.05, -0.2), 0.6)
lam_branch = continue_branch(logistic, seed, "lambda", (-0.5, 0.5), direction=-1)
curve = continue_sn_curve(logistic, lam_branch.events[0], ((0.0, 3.0), (-1.0, 0.0)))
taus, lams = curve.taus(), curve.lams()
order = np.argsort(taus)
err = np.max(np.abs(lams - model.oracles["sn_curve"](taus)))
print(f"fold curve: {len(curve)} points, largest deviation from closed form {err:.1e}")

fig = Figure(limits(taus), limits(lams), "tau", "lambda", "logistic: sustainable harvest")
fig.line(taus[order], lams[order], label="fold")
fig.marker(0.4, -0.24, "survives")
fig.marker(2.5, -0.24, "collapses")
(out / "logistic_fold.svg").write_text(fig.render())
print(f"wrote {out / 'logistic_fold.svg'}")
