"""Evolve the degree-1 soliton under the Schrödinger map flow and watch it not move."""
import numpy as np

from gaugeflow import FlowSpec, charge, constraint_residuals, energy_sm, evolve, l2_norm, make_grid, self_dual_data

g = make_grid(8.0, 128, "open")
s = self_dual_data(1, g)
r = constraint_residuals(s)
print(f"N={g.N} h={g.h:.4f}  |Theta|={r.theta_norm:.2e}  |Psi|={r.psi_norm:.2e}")
print(f"charge {charge(s):.5f}  energy {energy_sm(s):.5f}")

final, rows = evolve(s, FlowSpec("sm", 2e-4, T=0.02), diag_every=25)
for row in rows:
    print(f"t={row.t:.4f}  E={row.energy:.10f}  c={row.charge:.10f}")
drift = np.hypot(l2_norm(final.psi1 - s.psi1, g), l2_norm(final.psi2 - s.psi2, g))
print("relative drift", drift / np.hypot(l2_norm(s.psi1, g), l2_norm(s.psi2, g)))
