"""
Load flow on the 33-bus feeder
==============================

Solve the bundled feeder at nominal load, then across a day of varying
demand, and look at where the losses and the low voltages are.
"""

import numpy as np

from dgopt import SeriesKind, bundled_path, load_network, load_profile
from dgopt.powerflow import solve_horizon, solve_hour

net = load_network(bundled_path("ieee33.csv"))
print(f"{net.n_bus} buses, {net.n_branch} branches, "
      f"{net.p_demand.sum():.0f} kW / {net.q_demand.sum():.0f} kvar demand")

###############################################################################
# One snapshot at nominal load. The sweep converges in a handful of passes.

sol = solve_hour(net)
v, bus = sol.min_voltage
print(f"loss {sol.total_loss_kw:.2f} kW, lowest voltage {v:.4f} pu at bus {bus}, "
      f"{sol.iterations} sweeps")

###############################################################################
# A day with the bundled demand curve: the evening peak dominates.

load = load_profile(bundled_path("load_profile.csv"), SeriesKind.LOAD)
day = solve_horizon(net, load)
hourly = day.loss_kw.sum(axis=1)
print(f"24-h energy loss {day.total_loss_kwh:.1f} kWh, "
      f"voltage deviation {day.vdev_puh:.2f} pu*h")
print(f"worst hour {int(np.argmax(hourly)) + 1} with {hourly.max():.1f} kW of losses")

hour, line = np.unravel_index(np.argmax(day.loss_kw), day.loss_kw.shape)
print(f"heaviest single line-hour: line {line + 1} at hour {hour + 1}")

###############################################################################
# Plot the voltage profile at the peak hour, if matplotlib is around.

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(np.arange(1, net.n_bus + 1), day.v_mag[hour], marker="o", ms=3)
    ax.axhline(net.v_min, ls="--", c="grey")
    ax.set_xlabel("bus")
    ax.set_ylabel("|V| (pu)")
    ax.set_title(f"voltage profile, hour {hour + 1}")
    fig.tight_layout()
    fig.savefig("base_case_voltage.png", dpi=120)
    print("saved base_case_voltage.png")
