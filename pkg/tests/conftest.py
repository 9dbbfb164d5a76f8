import sys
from pathlib import Path

import pytest

from dgopt import (
    HourlySeries,
    Scenario,
    SeriesKind,
    bundled_path,
    calibrate_weights,
    load_network,
    load_profile,
)

sys.path.insert(0, str(Path(__file__).parent))

# One line per acceptance criterion, printed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def net33():
    return load_network(bundled_path("ieee33.csv"))


@pytest.fixture(scope="session")
def profiles():
    return {
        "load": load_profile(bundled_path("load_profile.csv"), SeriesKind.LOAD),
        "irradiance": load_profile(bundled_path("irradiance.csv"), SeriesKind.IRRADIANCE),
        "wind": load_profile(bundled_path("wind_speed.csv"), SeriesKind.WIND),
    }


def _scenario(net, profiles, load, name):
    return Scenario(
        net,
        load,
        profiles["irradiance"],
        profiles["wind"],
        weights=calibrate_weights(net, load),
        name=name,
    )


@pytest.fixture(scope="session")
def scenario2(net33, profiles):
    return _scenario(net33, profiles, profiles["load"], "load_profile")


@pytest.fixture(scope="session")
def scenario1(net33, profiles):
    return _scenario(net33, profiles, HourlySeries.flat(1.0, SeriesKind.LOAD), "constant_load")
