"""Harvesting predators in pulses.

Predators are removed at average per-capita rate lambda. Light harvest lets
the populations oscillate, moderate harvest gives a stable coexistence and
heavy harvest wipes the predators out. The oscillation boundary (Hopf for
steady harvest) becomes a Neimark-Sacker curve for pulses. The extinction
boundary is a transcritical curve at the prey-only state (4, 0).

Run:  python3 demos/predator_prey_harvest.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

from flowkick import (DisturbanceParams, continue_branch, continue_ns_curve, iterate_orbit,
                      newton_fixed_point, tc_curve_at_invariant)
from flowkick.models import ansatz_tc_lambda, make_predator_prey
from flowkick.svg import Figure, limits

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)
pp = make_predator_prey().system

seed = newton_fixed_point(pp, DisturbanceParams(0.0, 0.2), [1.5, 1.0])
down = continue_branch(pp, seed, "lambda", (0.0, 0.6), direction=-1)
up = continue_branch(pp, seed, "lambda", (0.0, 0.6))
hopf = [e for e in down.events if e.btype == "Hopf"][0]
tc = [e for e in up.events if e.btype == "TC"][0]
print(f"steady harvest: oscillations below {hopf.lam:.5f}, predators lost above {tc.lam:.5f}")

seed = newton_fixed_point(pp, DisturbanceParams(0.05, 0.2), [1.5, 1.0])
branch = continue_branch(pp, seed, "lambda", (0.0, 0.6), direction=-1)
ns = [e for e in branch.events if e.btype == "NS"][0]
ns_curve = continue_ns_curve(pp, ns, ((0.0, 1.0), (0.0, 0.6)))
taus = np.linspace(0.0, 2.0, 21)
tc_pts = tc_curve_at_invariant(pp, [4.0, 0.0], [[1.0], [0.0]], taus, (0.05, 0.6))
worst = max(abs(p.lam - ansatz_tc_lambda(p.tau)) for p in tc_pts)
print(f"extinction curve: {len(tc_pts)} points, max gap to (1 - e^(-a tau))/tau {worst:.1e}")

orbit = iterate_orbit(pp, [2.0, 1.0], DisturbanceParams(4.0, 0.2), 500)
print(f"tau = 4, lambda = 0.2: predators fall to {np.abs(orbit.post[-1][1]):.1e}")

ns_t, ns_l = ns_curve.taus(), ns_curve.lams()
order = np.argsort(ns_t)
tc_t = np.array([p.tau for p in tc_pts])
tc_l = np.array([p.lam for p in tc_pts])
fig = Figure(limits(ns_t, tc_t), limits(ns_l, tc_l), "tau", "lambda",
             "predator-prey: harvest regimes")
fig.line(ns_t[order], ns_l[order], label="NS")
fig.line(tc_t, tc_l, color="#d62728", dashed=True, label="TC")
(out / "predator_prey_curves.svg").write_text(fig.render())
print(f"wrote {out / 'predator_prey_curves.svg'}")
