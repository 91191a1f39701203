"""Directional derivatives of the discrete actions against the Euler-Lagrange fields."""
import numpy as np

from gaugeflow import make_grid
from gaugeflow.variational import random_history, random_perturbation, variational_check

g = make_grid(4.0, 32, "dirichlet_zero")
for system in ("sch", "css"):
    rng = np.random.default_rng(0)
    hist = random_history(g, rng, system=system)
    for name in hist.names:
        fd, el, rel = variational_check(hist, random_perturbation(hist, rng, [name]), system)
        print(f"{system:4s} d{name:5s} finite difference {fd: .8e}  pairing {el: .8e}  rel {rel:.1e}")
