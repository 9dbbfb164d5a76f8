"""
What the three generators produce over a day
============================================

PV follows irradiance, the wind turbine follows a cubic power curve and
the fuel cell sits at its rating. Everything is per kW of rating.
"""

import numpy as np

from dgopt import SeriesKind, bundled_path, load_profile
from dgopt.dg import DgKind, DgSettings, WindCurve, capacity_factors, wt_output

irr = load_profile(bundled_path("irradiance.csv"), SeriesKind.IRRADIANCE)
wind = load_profile(bundled_path("wind_speed.csv"), SeriesKind.WIND)

factors = capacity_factors(irr, wind, DgSettings())
print("hour   PV     WT     FC")
for h in range(24):
    print(f"{h + 1:>4} {factors[DgKind.PV][h]:6.3f} {factors[DgKind.WT][h]:6.3f} "
          f"{factors[DgKind.FC][h]:6.3f}")

for kind, f in factors.items():
    print(f"{kind.value}: daily energy {f.sum():.2f} kWh per kW, "
          f"capacity factor {f.mean():.2f}")

###############################################################################
# The turbine curve is a setting. A lower rated speed lifts the output in
# the light-wind morning hours.

speeds = np.linspace(0, 26, 14)
for curve in (WindCurve(), WindCurve(rated_speed=10.0)):
    print(curve, np.round(wt_output(1.0, speeds, curve), 2))
