"""Vegetation under pulsed rain (nonspatial Klausmeier model).

Plants x1 take up water x2, and water arrives in rain events. With steady
rain, vegetation persists for rates above 2m. When the same yearly total
comes in fewer, larger storms, more rain is needed.

Run:  python3 demos/klausmeier_rain.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

from flowkick import DisturbanceParams, continue_branch, continue_sn_curve, newton_fixed_point
from flowkick.models import make_klausmeier
from flowkick.svg import Figure, limits

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)
model = make_klausmeier(0.75)
kla = model.system

veg_hi, veg_lo = model.oracles["vegetated"](2.0)
print("steady rain lambda = 2:")
for guess in (veg_hi, veg_lo, np.array([0.0, 2.0])):
    rec = newton_fixed_point(kla, DisturbanceParams(0.0, 2.0), guess)
    print(f"  x = {np.round(rec.x, 6)}  {rec.stability}")

seed = newton_fixed_point(kla, DisturbanceParams(0.0, 2.0), veg_hi)
branch = continue_branch(kla, seed, "lambda", (0.0, 3.0), direction=-1)
sn = [e for e in branch.events if e.btype == "SN"][0]
print(f"vegetation is lost below lambda = {sn.lam:.8f} (2m = {2 * 0.75})")

curve = continue_sn_curve(kla, sn, ((0.0, 2.0), (0.0, 5.0)))
taus, lams = curve.taus(), curve.lams()
order = np.argsort(taus)
for tau in (0.5, 1.0, 2.0):
    print(f"  rain every tau = {tau}: needs lambda > {np.interp(tau, taus[order], lams[order]):.5f}")

fig = Figure(limits(taus), limits(lams), "tau", "lambda", "Klausmeier: rain needed")
fig.line(taus[order], lams[order], label="fold")
(out / "klausmeier_fold.svg").write_text(fig.render())
print(f"wrote {out / 'klausmeier_fold.svg'}")
