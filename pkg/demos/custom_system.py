"""Defining a system in a text file and analysing it like a built-in.

The file demos/systems/predator_prey.sys restates the built-in predator-prey
model. Loading it and repeating a calculation should give the same answer.
See docs/system_file.md for the format.

Run:  python3 demos/custom_system.py
"""

from pathlib import Path

import numpy as np

from flowkick import DisturbanceParams, newton_fixed_point
from flowkick.exprsys import load_system, parse_system
from flowkick.models import make_predator_prey

here = Path(__file__).resolve().parent
from_file = load_system(here / "systems" / "predator_prey.sys")
builtin = make_predator_prey().system

p = DisturbanceParams(1.0, 0.2)
a = newton_fixed_point(from_file, p, [1.5, 1.0])
b = newton_fixed_point(builtin, p, [1.5, 1.0])
print(f"file:     {np.round(a.x, 10)} {a.stability}")
print(f"built-in: {np.round(b.x, 10)} {b.stability}")

# Errors point at the offending column.
try:
    parse_system("[states]\nx\n[flow]\nx' = x*(1-\n[kickrate]\nr_x = lambda\n")
except ValueError as exc:
    print(f"error report: {exc}")
