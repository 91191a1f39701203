"""A smooth bump under the three map flows: energy is conserved by sm and decays under hmhf."""
from gaugeflow import FlowSpec, bump_data, evolve, make_grid

g = make_grid(8.0, 64, "dirichlet_zero")
s = bump_data(g, 0.5, mu=1)
dt = 0.2 * g.h**2

for system in ("sm", "hmhf_main", "hmhf_appendix"):
    _, rows = evolve(s, FlowSpec(system, dt, T=200 * dt), diag_every=40)
    print(system)
    for row in rows:
        print(f"  t={row.t:.4f}  energy={row.energy:.8f}  h_har={row.h_har:.8f}  charge={row.charge:.3e}")
