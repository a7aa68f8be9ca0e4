"""Shared fixtures: the small-amplitude reference run used across suites.

The reference scenario is the standard settling configuration at load
amplitude 0.02, which keeps the quadratic stress inside the contractive
small-strain regime (the full-amplitude configuration is the documented
divergence case, exercised separately).
"""

import numpy as np
import pytest

from porefem import scenarios


SMALL_AMPLITUDE = 0.02


@pytest.fixture(scope="session")
def standard_cfg():
    return scenarios.standard_scenario(load_amplitude=SMALL_AMPLITUDE)


@pytest.fixture(scope="session")
def standard_run(standard_cfg):
    """(stepper, result) for 80 steps of the small-amplitude scenario."""
    import dataclasses

    cfg = dataclasses.replace(standard_cfg, n_steps=80)
    stepper, result = scenarios.run_scenario(cfg, with_diagnostics=False)
    assert result.complete
    return stepper, result


@pytest.fixture(scope="session")
def standard_run_half_dt(standard_cfg):
    """Same trajectory at dt/2 (100 steps to T = 0.5) for consistency ratios."""
    import dataclasses

    cfg = dataclasses.replace(standard_cfg, dt=5e-3, n_steps=100)
    stepper, result = scenarios.run_scenario(cfg, with_diagnostics=False)
    assert result.complete
    return stepper, result
