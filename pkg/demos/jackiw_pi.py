"""The Jackiw-Pi vortex: self-duality, zero energy, and stationarity with and without A0."""
from gaugeflow import FlowSpec, energy_css, make_grid, rhs
from gaugeflow.grid import l2_norm
from gaugeflow.solitons import css_self_duality_residual, jackiw_pi_data

for n in (64, 128, 256):
    g = make_grid(8.0, n, "open")
    jp = jackiw_pi_data(g)
    spec = FlowSpec("css", 1.0, order=4, cfl_guard=False)
    with_a0 = l2_norm(rhs(jp, spec)[0], g)
    without = l2_norm(rhs(jp.replace(a0=None), spec)[0], g)
    print(f"N={n:4d}  self-dual residual {css_self_duality_residual(jp):.2e}  "
          f"energy {energy_css(jp, order=4)[0]: .2e}  |d_t phi| with A0 {with_a0:.2e}, without {without:.2e}")
