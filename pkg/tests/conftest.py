import numpy as np
import pytest

import viscobeam as vb


@pytest.fixture(scope="session")
def modes8():
    return vb.build_modeset(8, 1.0)


@pytest.fixture(scope="session")
def default_cfg():
    return vb.default_run_config()


def short_config(**overrides):
    """Small, fast variant of the shipped scenario for unit tests."""
    defaults = dict(t_end=1.0, sample_stride=1)
    defaults.update(overrides)
    return vb.default_run_config(**defaults)
