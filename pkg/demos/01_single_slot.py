"""
Precoding one symbol slot
=========================

Build the ten-antenna, three-user deployment, pick one QPSK symbol vector
and design a constant-modulus transmit vector with both solvers.
"""

import numpy as np

from slp_dfrc import harness
from slp_dfrc.alm import init_radar_only, solve_alm
from slp_dfrc.ci import build_ci, enumerate_symbol_vectors, qos_threshold
from slp_dfrc.pdd import solve_pdd
from slp_dfrc.scenario import build_coupling, instantaneous_beampattern

defaults = harness.parse_config("").scenario
sc = harness.build_scenario(defaults)
cp = build_coupling(sc.grid, sc.array)
print(f"{sc.num_antennas} antennas, {sc.num_users} users, per-antenna amplitude {sc.amplitude:.4f}")

# %%
# The communication side asks for a 6 dB margin target.
sigma = np.sqrt(sc.user_noise[0])
beta = qos_threshold(sigma, np.pi / 4, 10 ** 0.6)
symbols = enumerate_symbol_vectors(sc.num_users, 4)[17]
ci = build_ci(sc.channels, symbols, beta)
print(f"margin threshold beta = {beta:.5f}")

# %%
# Both solvers start from the same radar-only design.
x0 = init_radar_only(cp, sc.amplitude, seed=0).x
print(f"radar-only cost {cp.objective(x0):.4f}, CI violation {ci.max_violation(x0):.4f}")

pdd = solve_pdd(sc, cp, ci, x_init=x0)
alm = solve_alm(sc, cp, ci, x_init=x0)
for rep in (pdd, alm):
    print(f"{rep.solver}: cost {rep.objective:.4f}  max violation {rep.max_violation:.1e}  "
          f"{rep.outer_iterations} outer iterations  {rep.seconds * 1e3:.0f} ms")

# %%
# Where does the power go?  Print the strongest local maxima of each pattern.
deg = sc.grid.degrees
for name, x in (("radar-only", x0), ("pdd", pdd.x), ("alm", alm.x)):
    p = instantaneous_beampattern(x, sc.array, sc.grid.angles)
    peaks = np.flatnonzero((p[1:-1] > p[:-2]) & (p[1:-1] > p[2:])) + 1
    top = peaks[np.argsort(p[peaks])[::-1][:3]]
    print(f"{name:>10}: peaks at " + ", ".join(f"{deg[i]:+.0f} deg ({p[i]:.2f})" for i in sorted(top)))

# %%
# Received symbols sit inside their decision sectors with margin >= beta.
rx = sc.channels.conj() @ alm.x
for k, (r, s) in enumerate(zip(rx, symbols)):
    print(f"user {k + 1}: sent {np.rad2deg(np.angle(s)):+.0f} deg, received {np.rad2deg(np.angle(r)):+.1f} deg, "
          f"|r| = {abs(r):.3f}")
