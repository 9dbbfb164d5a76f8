"""
Lightning search against particle swarm
=======================================

Both optimisers minimise the same placement objective with the same
budget of candidates per iteration. The objective is normalised so the
feeder without any generation scores exactly 1.
"""

import numpy as np

from dgopt import (
    HourlySeries,
    LsaParams,
    PlacementObjective,
    PsoParams,
    Scenario,
    SeriesKind,
    bundled_path,
    calibrate_weights,
    evaluate,
    load_network,
    load_profile,
    run_lsa,
    run_pso,
)

net = load_network(bundled_path("ieee33.csv"))
load = load_profile(bundled_path("load_profile.csv"), SeriesKind.LOAD)
scenario = Scenario(
    net,
    load,
    load_profile(bundled_path("irradiance.csv"), SeriesKind.IRRADIANCE),
    load_profile(bundled_path("wind_speed.csv"), SeriesKind.WIND),
    weights=calibrate_weights(net, load),
)
lo, hi = scenario.search_bounds()
print("no generation:", evaluate([2, 0, 2, 0, 2, 0], scenario).objective)

###############################################################################
# A few seeds each. Traces record the best objective after every iteration.

results = {}
for name, run, params in (("LSA", run_lsa, LsaParams), ("PSO", run_pso, PsoParams)):
    traces = [run(params(seed=s), PlacementObjective(scenario), lo, hi) for s in range(3)]
    results[name] = traces
    finals = [t.final for t in traces]
    print(f"{name}: finals {np.round(finals, 4)}, median {np.median(finals):.4f}, "
          f"{traces[0].total_evaluations} evaluations per run")

best = min((t for ts in results.values() for t in ts), key=lambda t: t.final)
ev = evaluate(best.best_x, scenario)
print(f"best overall ({best.optimizer}, seed {best.seed}):")
for kind, unit in ev.placement.to_dict().items():
    print(f"  {kind}: bus {unit['location']}, {unit['size_kw']:.0f} kW")
print(f"  loss {ev.loss_kwh:.1f} kWh, vdev {ev.vdev_puh:.2f} pu*h, penalty {ev.penalty}")

###############################################################################
# The same objective under a flat nominal load.

flat = HourlySeries.flat(1.0, SeriesKind.LOAD)
print("flat-load reference loss:", round(calibrate_weights(net, flat).loss_ref, 1), "kWh")
