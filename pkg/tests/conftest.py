import numpy as np
import pytest

from slp_dfrc.harness import SCHEMA, build_scenario
from slp_dfrc.scenario import build_coupling

ACCEPTANCE_LINES = {}


def default_scenario_config(**overrides):
    cfg = {k: default for k, (_, default) in SCHEMA["scenario"].items()}
    cfg.update(overrides)
    return cfg


@pytest.fixture(scope="session")
def reference_setup():
    """Ten-antenna, three-user, three-target deployment used across the suite."""
    sc = build_scenario(default_scenario_config())
    return sc, build_coupling(sc.grid, sc.array)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


def small_scenario(num_antennas=2, channels=None, targets_deg=(0.0,), width_deg=20.0, total_power=1.0,
                   user_noise=0.01):
    """Compact deployment for oracle comparisons."""
    from slp_dfrc.scenario import ArrayModel, DfrcScenario, angle_grid, ideal_beampattern

    array = ArrayModel(num_antennas)
    grid = ideal_beampattern(np.deg2rad(targets_deg), np.deg2rad(width_deg), angle_grid(1.0))
    H = np.zeros((0, num_antennas), dtype=complex) if channels is None else np.asarray(channels)
    sc = DfrcScenario(array=array, channels=H, user_noise=user_noise, radar_noise=0.1, total_power=total_power,
                      grid=grid, target_angles=np.deg2rad(targets_deg), target_amplitudes=1.0)
    return sc, build_coupling(grid, array)


def phase_grid_minimum(coupling, radius, points=64):
    """Exhaustive search over per-antenna phases (two antennas)."""
    ph = np.exp(2j * np.pi * np.arange(points) / points)
    best = np.inf
    for p0 in ph:
        xs = radius * np.stack([np.full(points, p0), ph], axis=1)
        best = min(best, min(coupling.objective(x) for x in xs))
    return best
