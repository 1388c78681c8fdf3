import pytest

from hypertrace import config


@pytest.fixture(autouse=True)
def _fresh_config():
    """--config installs a process-wide override; drop it after each test."""
    yield
    config._DEFAULTS = None
