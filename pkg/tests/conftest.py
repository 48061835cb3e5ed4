"""
Shared fixtures
"""

import pytest
import structlog


@pytest.fixture(autouse=True)
def reset_logging():
    """Each test starts and ends with the default structlog setup"""
    structlog.reset_defaults()
    yield
    structlog.reset_defaults()
